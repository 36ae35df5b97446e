use impactopt::constitutive::{
    cw_default, damage_hardening, degradation, elastic_energy, stress, stress_tangent, MaterialParams,
};
use impactopt::forward::plasticity::return_map;
use impactopt::forward::GaussPointState;
use impactopt::tensor::Sym3;
use proptest::prelude::*;

fn sym() -> impl Strategy<Value = Sym3> {
    prop::array::uniform4(-0.05f64..0.05).prop_map(|a| Sym3::new(a[0], a[1], a[2], a[3]))
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

fn basis(i: usize) -> Sym3 {
    let mut a = [0.0; 4];
    a[i] = 1.0;
    Sym3::from_array(a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_split_is_exact(e in sym()) {
        let el = MaterialParams::blast_solid().elastic();
        let tr = e.trace();
        let tp = (2.0 * el.psi_plus(&Sym3::identity().scale(tr / 3.0)) / el.k).sqrt();
        let tm = -(2.0 * el.psi_minus(&e) / el.k).sqrt();
        prop_assert!((tp + tm - tr).abs() <= 1e-12 * tr.abs().max(1e-300));
    }

    #[test]
    fn stress_is_energy_gradient(eps in sym(), ep in sym(), a in 0.05f64..0.95) {
        let p = MaterialParams::blast_solid();
        let s = stress(&eps, &ep, a, &p).unwrap();
        prop_assume!((eps - ep).trace().abs() > 1e-4);
        for i in 0..4 {
            let d = basis(i);
            // xy appears twice in the Frobenius pairing.
            let mult = if i == 3 { 2.0 } else { 1.0 };
            let fd = central(|t| elastic_energy(&(eps + d.scale(t)), &ep, a, &p).unwrap(), 0.0, 1e-7);
            prop_assert!(close(s.stress.to_array()[i] * mult, fd, 1e-5));
            let fdp = central(|t| elastic_energy(&eps, &(ep + d.scale(t)), a, &p).unwrap(), 0.0, 1e-7);
            prop_assert!(close(-s.stress.to_array()[i] * mult, fdp, 1e-5));
            let fda = central(|t| stress(&eps, &ep, a + t, &p).unwrap().stress.to_array()[i], 0.0, 1e-6);
            prop_assert!(close(s.d2_a_eps.to_array()[i], fda, 1e-5));
            let t = stress_tangent(&eps, &ep, a, &p, &d).unwrap();
            for j in 0..4 {
                let fdt = central(|h| stress(&(eps + d.scale(h)), &ep, a, &p).unwrap().stress.to_array()[j], 0.0, 1e-7);
                prop_assert!(close(t.to_array()[j], fdt, 1e-5));
            }
        }
        let dd = degradation(a, p.d1).unwrap();
        prop_assert!(close(s.d2_aa, dd[2] * p.elastic().psi_plus(&(eps - ep)), 1e-12));
    }

    #[test]
    fn scalar_functions_match_differences(a in 0.01f64..0.99, q in 1e-3f64..1.0, qd in 1e-2f64..10.0) {
        let p = MaterialParams::blast_solid();
        let d = degradation(a, p.d1).unwrap();
        prop_assert!(close(d[1], central(|x| degradation(x, p.d1).unwrap()[0], a, 1e-6), 1e-6));
        prop_assert!(close(d[2], central(|x| degradation(x, p.d1).unwrap()[1], a, 1e-6), 1e-6));
        let w = damage_hardening(a, p.w1).unwrap();
        prop_assert!(close(w[1], central(|x| damage_hardening(x, p.w1).unwrap()[0], a, 1e-6), 1e-6));
        let (s0, ds0) = p.sigma0(q);
        prop_assert!(close(s0, central(|x| p.wp(x), q, 1e-7 * q), 1e-5));
        prop_assert!(close(ds0, central(|x| p.sigma0(x).0, q, 1e-6 * q), 1e-5));
        prop_assert!(close(p.gbar_prime(qd), central(|x| p.gbar(x), qd, 1e-6 * qd), 1e-5));
        prop_assert!(close(p.gbar_second(qd), central(|x| p.gbar_prime(x), qd, 1e-6 * qd), 1e-5));
    }

    #[test]
    fn moduli_round_trip(e in 0.01f64..100.0, nu in -0.9f64..0.49) {
        let p = MaterialParams { e, nu, ..MaterialParams::blast_solid() };
        let (e2, nu2) = MaterialParams::from_moduli(p.bulk(), p.shear());
        prop_assert!(close(e, e2, 1e-12) && (nu - nu2).abs() < 1e-12);
    }

    #[test]
    fn return_map_is_consistent(
        eps in sym(), q in 0.0f64..0.05, dt in 1e-4f64..1e-1, be in 0.05f64..1.0, bp_rel in 1.0f64..1.5,
    ) {
        let p = MaterialParams::blast_solid();
        let st = GaussPointState { q, ..Default::default() };
        let bp = (bp_rel * be).min(1.0);
        let (next, rm) = return_map(&eps, &st, dt, be, bp, &p).unwrap();
        prop_assert!(next.q >= st.q);
        prop_assert!(next.g_accum >= st.g_accum);
        prop_assert!(next.eps_p.trace().abs() <= 1e-10);
        if rm.plastic {
            let (s0, _) = p.sigma0(next.q);
            let rate = p.sigma_y * (rm.dq / (dt * p.eps_dot_p0)).powf(1.0 / p.m);
            let res = rm.sigma_m - 3.0 * be * p.shear() * rm.dq - bp * (s0 + rate);
            prop_assert!(res.abs() <= 1e-9 * rm.sigma_m);
            prop_assert!((rm.m.dot(&rm.m) - 1.5).abs() < 1e-12);
        } else {
            prop_assert_eq!(next, st);
        }
    }
}

#[test]
fn compression_keeps_full_stiffness() {
    let p = MaterialParams::blast_solid();
    let eps = Sym3::identity().scale(-1e-3);
    let s = stress(&eps, &Sym3::ZERO, 1.0, &p).unwrap();
    assert!((s.stress.xx + 3e-3 * p.bulk()).abs() <= 1e-12 * 3e-3 * p.bulk());
    let t = stress(&eps.scale(-1.0), &Sym3::ZERO, 1.0, &p).unwrap();
    assert!((t.stress.xx - p.d1 * 3e-3 * p.bulk()).abs() <= 1e-12);
}

#[test]
fn cw_of_quadratic_hardening() {
    // w1 = 1 gives sqrt(a), whose integral is 2/3; w1 = 0 gives a, integral 1/2.
    assert!((cw_default(1.0) - 2.0 / 3.0).abs() < 1e-10);
    assert!((cw_default(0.0) - 0.5).abs() < 1e-10);
}

#[test]
fn out_of_range_damage_is_rejected() {
    assert!(degradation(1.5, 0.01).is_err());
    assert!(damage_hardening(-0.1, 0.95).is_err());
}
