mod common;

use common::scenario;
use impactopt::config::RunConfig;
use impactopt::constitutive::MaterialParams;
use impactopt::forward::{run_forward, ForwardOptions, ForwardState, GaussPointState, StepDiagnostics};
use impactopt::sensitivity::{evaluate, DensityFilter};

fn uniform(cfg: &RunConfig) -> (impactopt::problem::Problem, Vec<f64>) {
    let p = cfg.build_problem(None).unwrap();
    let eta = vec![cfg.eta_init(); p.mesh.n_design_elems];
    (p, eta)
}

#[test]
fn damage_run_respects_irreversibility_and_bounds() {
    let cfg = scenario("blast_check_8x2.toml");
    let (p, eta) = uniform(&cfg);
    let mut prev: Option<Vec<GaussPointState>> = None;
    let mut checked = 0;
    let mut obs = |st: &ForwardState, d: Option<&StepDiagnostics>| {
        if let Some(prev) = &prev {
            for (a, b) in st.gp.iter().zip(prev) {
                assert!(a.alpha >= b.alpha && a.q >= b.q && a.g_accum >= b.g_accum, "step {}", st.step);
                assert!((0.0..=1.0).contains(&a.alpha) && a.eps_p.trace().abs() < 1e-10);
            }
        }
        if let Some(d) = d {
            assert!(d.r_p <= d.tol_p && d.r_d <= d.tol_d, "step {}: {d:?}", d.step);
            checked += 1;
        }
        prev = Some(st.gp.clone());
        Ok(())
    };
    let res = run_forward(&p, &eta, ForwardOptions { observer: Some(&mut obs), ..Default::default() }).unwrap();
    assert_eq!(checked, p.steps);
    assert!(res.state.gp.iter().any(|g| g.alpha > 0.0) && res.state.gp.iter().any(|g| g.q > 0.0));
    assert!(res.factorizations() <= p.admm.distinct_r_bound());
    let o = res.objective(&p).unwrap();
    assert!(o.dp > 0.0 && o.da > 0.0);
}

#[test]
fn clamped_nodes_stay_undamaged() {
    let cfg = scenario("blast_check_8x2.toml");
    let (p, eta) = uniform(&cfg);
    let res = run_forward(&p, &eta, ForwardOptions::default()).unwrap();
    let nodal = res.damage.to_nodal(&res.state.a);
    for (n, fixed) in p.damage_fixed.iter().enumerate() {
        if *fixed {
            assert_eq!(nodal[n], 0.0);
        }
    }
}

#[test]
fn zero_load_is_quiescent() {
    let mut cfg = scenario("blast_check_8x2.toml");
    cfg.load.impulse_scale = 0.0;
    let (p, eta) = uniform(&cfg);
    let res = run_forward(&p, &eta, ForwardOptions::default()).unwrap();
    assert!(res.state.u.iter().all(|&x| x == 0.0));
    assert!(res.state.gp.iter().all(|g| *g == GaussPointState::default()));
    let o = res.objective(&p).unwrap();
    assert_eq!((o.total, o.disp, o.dp, o.da), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn elastic_objective_is_positively_homogeneous() {
    let base = scenario("blast_check_8x2_elastic.toml");
    let run = |beta: f64| {
        let mut cfg = base.clone();
        cfg.load.impulse_scale *= beta;
        let (p, eta) = uniform(&cfg);
        run_forward(&p, &eta, ForwardOptions::default()).unwrap().objective(&p).unwrap()
    };
    let o1 = run(1.0);
    assert_eq!((o1.dp, o1.da), (0.0, 0.0));
    for beta in [0.5, 3.0] {
        let ob = run(beta);
        assert!((ob.disp - beta * o1.disp).abs() <= 1e-10 * ob.disp, "beta {beta}");
        assert_eq!((ob.dp, ob.da), (0.0, 0.0));
    }
}

#[test]
fn observer_does_not_change_the_solution() {
    let cfg = scenario("blast_check_8x2.toml");
    let (p, eta) = uniform(&cfg);
    let plain = run_forward(&p, &eta, ForwardOptions::default()).unwrap();
    let mut seen = 0;
    let mut obs = |_: &ForwardState, _: Option<&StepDiagnostics>| {
        seen += 1;
        Ok(())
    };
    let watched = run_forward(&p, &eta, ForwardOptions { observer: Some(&mut obs), record: true, ..Default::default() }).unwrap();
    assert!(seen > 0);
    assert_eq!(plain.state.u, watched.state.u);
    assert_eq!(plain.state.gp, watched.state.gp);
    let tr = watched.trajectory.unwrap();
    assert_eq!(tr.times.len(), p.steps + 1);
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn wave_speed_matches_p_wave_modulus() {
    for (e, nu, rho) in [(0.5, 0.3, 0.05), (1.0, 0.25, 1.0), (3.0, 0.45, 2.0)] {
        let m = MaterialParams { e, nu, rho, ..MaterialParams::blast_solid() };
        let oracle = (e * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu) * rho)).sqrt();
        assert!((m.wave_speed() - oracle).abs() < 1e-12 * oracle);
    }
}

#[test]
fn sensitivity_is_linear_in_dissipation_weights() {
    let base = scenario("blast_check_8x2.toml");
    let grad = |cp: f64, ca: f64| {
        let mut cfg = base.clone();
        cfg.objective.c_p = cp;
        cfg.objective.c_a = ca;
        let p = cfg.build_problem(None).unwrap();
        let f = DensityFilter::new(&p.mesh, cfg.optimizer.filter_radius_scale);
        let eta = cfg.check_design(p.mesh.n_design_elems, 1e-3);
        evaluate(&p, &f, &eta, None, None).unwrap().0.gradient
    };
    let g00 = grad(0.0, 0.0);
    let g10 = grad(1.0, 0.0);
    let g01 = grad(0.0, 1.0);
    let g23 = grad(2.0, 3.0);
    let scale = g23.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for i in 0..g00.len() {
        let pred = g00[i] + 2.0 * (g10[i] - g00[i]) + 3.0 * (g01[i] - g00[i]);
        assert!((g23[i] - pred).abs() <= 1e-10 * scale, "element {i}: {} vs {pred}", g23[i]);
    }
}
