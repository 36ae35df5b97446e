use impactopt::forward::admm::{local_alpha, penalty_adapt, Activity, AdmmSettings, LocalDamage};
use impactopt::interpolation::{bezier_be, objective_interp, ElemFactors, SolidVoidScheme, TwoMaterialScheme};
use impactopt::mesh::build_structured_mesh;
use impactopt::optimizer::mma::{mma_step, MmaState};
use impactopt::optimizer::schedule::{ScheduleKind, ScheduleParams};
use impactopt::sensitivity::DensityFilter;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-10)
}

fn fd_factors(f: impl Fn(f64) -> ElemFactors, lo: f64, hi: f64) {
    for i in 0..=100 {
        let eta = lo + (hi - lo) * i as f64 / 100.0;
        let h = 1e-6 * (hi - lo);
        let (a, b) = ((eta - h).max(lo), (eta + h).min(hi));
        let (fa, fb, fx) = (f(a), f(b), f(eta));
        let pairs = [
            (fx.rho, fa.rho, fb.rho),
            (fx.be, fa.be, fb.be),
            (fx.bp, fa.bp, fb.bp),
            (fx.ba, fa.ba, fb.ba),
            (fx.pp, fa.pp, fb.pp),
            (fx.pa, fa.pa, fb.pa),
        ];
        for (k, (x, ya, yb)) in pairs.into_iter().enumerate() {
            let fd = (yb.v - ya.v) / (b - a);
            // One-sided differences at the ends are first order.
            let (tol, abs) = if a == eta || b == eta { (1e-4, 1e-5) } else { (1e-6, 1e-9) };
            assert!(close(x.d, fd, tol) || (x.d - fd).abs() < abs, "factor {k} at eta {eta}: {} vs {fd}", x.d);
        }
    }
}

#[test]
fn solid_void_derivatives_match_differences() {
    for (k1, k2) in [(0.5, 2.0), (0.125, 8.0), (0.2, 5.0)] {
        let s = SolidVoidScheme::new(k1, k2, 0.01);
        fd_factors(|x| s.factors(x).unwrap(), 0.01, 1.0);
    }
}

#[test]
fn two_material_derivatives_match_differences() {
    for p in [1.0, 2.0, 3.0, 8.0] {
        let s = TwoMaterialScheme { e1: 0.5, e2: 1.0, sy1: 0.002, sy2: 0.005, gc1: 5e-4, gc2: 1e-4, p };
        fd_factors(|x| s.factors(x).unwrap(), 0.0, 1.0);
        let [e0, s0, g0] = s.maps(0.0).unwrap();
        let [e1, s1, g1] = s.maps(1.0).unwrap();
        assert_eq!((e0.v, s0.v, g0.v), (0.5, 0.002, 5e-4));
        assert_eq!((e1.v, s1.v, g1.v), (1.0, 0.005, 1e-4));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bezier_is_strictly_increasing(k1 in 0.01f64..0.99, k2 in 1.01f64..20.0) {
        let mut prev = -1.0;
        for i in 0..=200 {
            let (b, db) = bezier_be(i as f64 / 200.0, k1, k2).unwrap();
            prop_assert!(b > prev && db > 0.0);
            prev = b;
        }
    }

    #[test]
    fn shifted_factors_are_ordered(eta in 0.01f64..1.0) {
        let s = SolidVoidScheme::new(0.2, 5.0, 0.01);
        let f = s.factors(eta).unwrap();
        prop_assert!(f.be.v <= f.bp.v + 1e-15 && f.bp.v <= f.ba.v + 1e-15 && f.ba.v <= 1.0 + 1e-15);
        let (p, dp) = objective_interp(eta, 3.0);
        prop_assert!(p >= eta - 1e-15 && dp >= 0.0);
    }

    #[test]
    fn filter_is_stochastic_and_transpose_is_adjoint(
        nx in 2usize..10, ny in 1usize..5, radius in 0.01f64..0.5,
        seed in any::<u64>(),
    ) {
        let m = build_structured_mesh(nx, ny, 1.0, 0.3).unwrap();
        let f = DensityFilter::new(&m, radius);
        let n = m.n_design_elems;
        for e in 0..n {
            let s: f64 = f.row(e).iter().map(|x| x.1).sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
        }
        let x: Vec<f64> = (0..n).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64) / 97.0).collect();
        let y: Vec<f64> = (0..n).map(|i| (((seed >> 7).wrapping_add(3 * i as u64) % 89) as f64) / 89.0 - 0.5).collect();
        let fx = f.apply(&x);
        prop_assert!(fx.iter().all(|&v| (-1e-15..=1.0 + 1e-15).contains(&v)));
        let lhs: f64 = fx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&f.transpose(&y)).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()));
    }

    #[test]
    fn local_alpha_solves_clamped_problem(
        phi in 0.0f64..1e-2, coef in 1e-4f64..1e-2, alpha_n in 0.0f64..1.0,
        lambda in -1e-2f64..1e-2, a in 0.0f64..1.0, r in 1e-4f64..10.0,
    ) {
        let (d1, w1) = (0.01, 0.95);
        let ld = LocalDamage { phi, coef, alpha_n };
        let (x, act) = local_alpha(&ld, d1, w1, lambda, a, r);
        prop_assert!(x >= alpha_n && x <= 1.0);
        // Residual of the stationarity condition, bisected independently on [alpha_n, 1].
        let res = |al: f64| {
            let dp = -2.0 * (1.0 - al) + 2.0 * d1 * al;
            let wp = w1 + 2.0 * (1.0 - w1) * al;
            dp * phi + coef * wp - lambda - r * (a - al)
        };
        let (mut lo, mut hi) = (alpha_n, 1.0);
        let oracle = if res(lo) >= 0.0 {
            lo
        } else if res(hi) <= 0.0 {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if res(mid) < 0.0 { lo = mid } else { hi = mid }
            }
            0.5 * (lo + hi)
        };
        prop_assert!((x - oracle).abs() < 1e-10, "{x} vs {oracle}");
        match act {
            Activity::Lower => prop_assert_eq!(x, alpha_n),
            Activity::Capped => prop_assert_eq!(x, 1.0),
            Activity::Active => prop_assert!(x > alpha_n && x < 1.0),
        }
    }

    #[test]
    fn mma_keeps_volume_and_bounds(
        n in 2usize..30, seed in any::<u64>(), vf in 0.2f64..0.8, lo in 0.0f64..0.05,
    ) {
        let mut st = MmaState::new(n, lo, 1.0, 0.1);
        let w: Vec<f64> = (0..n).map(|j| 1.0 + (j % 3) as f64).collect();
        let wsum: f64 = w.iter().sum();
        let dc: Vec<f64> = w.iter().map(|x| x / wsum).collect();
        let mut x = vec![vf.max(lo); n];
        let mut s = seed;
        for _ in 0..20 {
            let g: Vec<f64> = (0..n).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 33) as f64 / (1u64 << 31) as f64) - 1.2
            }).collect();
            let c = x.iter().zip(&dc).map(|(a, b)| a * b).sum::<f64>() - vf;
            let next = mma_step(&x, &g, c, &dc, &mut st).unwrap();
            for (a, b) in next.iter().zip(&x) {
                prop_assert!(*a >= lo && *a <= 1.0);
                prop_assert!((a - b).abs() <= 0.1 * (1.0 - lo) + 1e-12);
            }
            let v: f64 = next.iter().zip(&dc).map(|(a, b)| a * b).sum();
            prop_assert!(v <= vf + 1e-10, "volume {v} > {vf}");
            x = next;
        }
    }

    #[test]
    fn schedule_is_pure_and_monotone(k in 1usize..400) {
        let s = ScheduleParams::default();
        let (a, b) = (s.at(k), s.at(k));
        prop_assert_eq!(a, b);
        let next = s.at(k + 1);
        prop_assert!(next.k1 <= a.k1 && next.k2 >= a.k2 && next.load >= a.load && next.p >= a.p);
        if k >= s.stationary_from() {
            prop_assert_eq!(next, a);
        }
    }
}

#[test]
fn schedule_endpoints_and_fixed_kind() {
    let s = ScheduleParams::default();
    let first = s.at(1);
    assert_eq!((first.k1, first.k2, first.load, first.p), (0.5, 2.0, 0.7, 2.0 + 6.0 / 100.0));
    let last = s.at(10_000);
    assert_eq!((last.k1, last.k2, last.load, last.p), (0.125, 8.0, 1.0, 8.0));
    let fixed = ScheduleParams { kind: ScheduleKind::Fixed, ..Default::default() };
    assert_eq!(fixed.at(1), last);
    assert_eq!(fixed.stationary_from(), 0);
}

#[test]
fn penalty_adaptation_examples() {
    let s = AdmmSettings::default();
    assert_eq!(penalty_adapt(1.0, 11.0, 1.0, &s), 2.0);
    assert_eq!(penalty_adapt(1.0, 1.0, 11.0, &s), 0.5);
    assert_eq!(penalty_adapt(1.0, 5.0, 1.0, &s), 1.0);
    assert_eq!(penalty_adapt(s.r_max, 1e3, 1.0, &s), s.r_max);
    assert_eq!(penalty_adapt(s.r_min, 1.0, 1e3, &s), s.r_min);
    // r0 2^k for k in -12..=12.
    assert_eq!(s.distinct_r_bound(), 25);
}
