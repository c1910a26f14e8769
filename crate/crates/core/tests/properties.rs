use dephasr::{
    build_cache, cross_kernel, Complex64, DensityMatrix, Evolver, KernelCache, ModelParams, Mode, SpinOperator,
    TimeGrid,
};
use proptest::prelude::*;

const T_MAX: f64 = 2.0;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.01..0.2f64, 1.0..6.0f64, prop_oneof![Just(0.0), 0.02..0.5f64])
        .prop_map(|(gamma, cutoff, temperature)| ModelParams::new(1.0, gamma, cutoff, temperature).unwrap())
}

fn state() -> impl Strategy<Value = DensityMatrix> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(p0, purity, phase)| {
        let max_coherence = (p0 * (1.0 - p0)).sqrt();
        DensityMatrix::from_populations(p0, 1.0 - p0, Complex64::from_polar(purity * max_coherence, phase)).unwrap()
    })
}

fn operator() -> impl Strategy<Value = SpinOperator> {
    prop::array::uniform8(-1.0..1.0f64).prop_map(|v| {
        SpinOperator::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
    })
}

fn cache_for(p: ModelParams) -> KernelCache {
    build_cache(p, T_MAX, 1e-3).unwrap()
}

fn max_diff(a: &dephasr::CfTrajectory, b: &dephasr::CfTrajectory) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.value - y.value).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn master_equation_preserves_a_valid_state(p in params(), rho in state()) {
        let cache = cache_for(p);
        let ev = Evolver::new(&cache, rho).unwrap();
        let grid = TimeGrid::new(0.0, T_MAX, 2e-3).unwrap();
        for mode in [Mode::NmFull, Mode::Markovian] {
            for r in ev.evolve_master(&grid, mode).unwrap() {
                prop_assert!(r.invariant_violation(1e-12).is_none(), "{:?}", r);
                prop_assert_eq!(r.rho00, rho.rho00);
                prop_assert!(r.rho01.norm() <= rho.rho01.norm() + 1e-12);
            }
        }
    }

    #[test]
    fn qrt_is_exact_at_zero_t2(p in params(), rho in state(), a in operator(), b in operator()) {
        let cache = cache_for(p);
        let ev = Evolver::new(&cache, rho).unwrap();
        let grid = TimeGrid::new(0.0, T_MAX, 2e-3).unwrap();
        let full = ev.evolve_two_time(&a, &b, 0.0, &grid, Mode::NmFull).unwrap();
        let qrt = ev.evolve_two_time(&a, &b, 0.0, &grid, Mode::NmQrt).unwrap();
        prop_assert!(max_diff(&full, &qrt) <= 1e-12);
    }

    #[test]
    fn nm_full_tracks_exact(p in params(), rho in state(), a in operator(), b in operator(), t2 in 0.0..1.0f64) {
        let cache = cache_for(p);
        let ev = Evolver::new(&cache, rho).unwrap();
        let t2 = (t2 * 1000.0).round() / 1000.0;
        let grid = TimeGrid::new(t2, T_MAX, 1e-3).unwrap();
        let full = ev.evolve_two_time(&a, &b, t2, &grid, Mode::NmFull).unwrap();
        let exact = ev.evolve_two_time(&a, &b, t2, &grid, Mode::Exact).unwrap();
        prop_assert!(max_diff(&full, &exact) <= 1e-8, "deviation {}", max_diff(&full, &exact));
    }

    #[test]
    fn correlation_is_linear_in_each_operator(
        p in params(), rho in state(), a in operator(), b in operator(), c in operator(), k in -2.0..2.0f64
    ) {
        let cache = cache_for(p);
        let ctx = Evolver::new(&cache, rho).unwrap().exact();
        let kc = Complex64::new(k, 0.5 * k);
        for (t1, t2) in [(0.3, 0.1), (1.7, 1.2), (2.0, 0.0)] {
            let lhs = ctx.cf_exact(&(a + c.scale(kc)), &b, t1, t2).unwrap();
            let rhs = ctx.cf_exact(&a, &b, t1, t2).unwrap() + ctx.cf_exact(&c, &b, t1, t2).unwrap() * kc;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            let lhs = ctx.cf_exact(&a, &(b + c.scale(kc)), t1, t2).unwrap();
            let rhs = ctx.cf_exact(&a, &b, t1, t2).unwrap() + ctx.cf_exact(&a, &c, t1, t2).unwrap() * kc;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn hermitian_conjugate_correlation(p in params(), rho in state(), a in operator(), b in operator()) {
        // <A(t1) B(t2)>* = <B^dag(t2) A^dag(t1)>; at equal times this is a one-time value
        let cache = cache_for(p);
        let ev = Evolver::new(&cache, rho).unwrap();
        for t in [0.0, 0.8, 1.9] {
            let ab = ev.equal_time_value(&a, &b, t, Mode::Exact).unwrap();
            let ba = ev.equal_time_value(&b.adjoint(), &a.adjoint(), t, Mode::Exact).unwrap();
            prop_assert!((ab.conj() - ba).norm() <= 1e-12);
        }
    }

    #[test]
    fn equal_time_closure(p in params(), t2 in 0.1..2.0f64) {
        let cache = cache_for(p);
        let t2 = (t2 * 100.0).round() / 100.0;
        let n = 2 * (t2 / 2e-3).round() as usize;
        let h = t2 / n as f64;
        let f = |k: usize| cross_kernel((k as f64 * h).min(t2), t2, &cache).unwrap();
        let mut sum = f(0) + f(n);
        for k in 1..n {
            sum += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let closure = sum * (h / 3.0);
        let two_gamma = 2.0 * cache.decoherence_exponent(t2).unwrap();
        prop_assert!((closure - two_gamma).norm() <= 1e-8, "{} vs {}", closure, two_gamma);
        prop_assert!(closure.im.abs() <= 1e-8);
    }

    #[test]
    fn dephasing_exponent_is_nonnegative_and_increasing(p in params()) {
        let cache = cache_for(p);
        let gammas = cache.gamma_values();
        prop_assert_eq!(gammas[0], 0.0);
        prop_assert!(gammas.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let cache = build_cache(ModelParams::figure_preset(), 4.0, 2.5e-3).unwrap();
    let ev = Evolver::new(&cache, DensityMatrix::figure_state()).unwrap();
    let (sx, sy) = (SpinOperator::sigma_x(), SpinOperator::sigma_y());
    let t2 = 0.2;
    let error = |step: f64| {
        let grid = TimeGrid::new(t2, 4.0, step).unwrap();
        let full = ev.evolve_two_time(&sx, &sy, t2, &grid, Mode::NmFull).unwrap();
        let exact = ev.evolve_two_time(&sx, &sy, t2, &grid, Mode::Exact).unwrap();
        max_diff(&full, &exact)
    };
    let (e1, e2, e3) = (error(0.04), error(0.02), error(0.01));
    assert!(e1 / e2 >= 8.0, "{e1:e} / {e2:e}");
    assert!(e2 / e3 >= 8.0, "{e2:e} / {e3:e}");
}
