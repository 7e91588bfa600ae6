use scl::spectral::{
    laplacian_eigen_check, log_semigroup_gradient, nu_quadrature, semigroup_apply,
    SpectralSemigroup, ZonalFunction,
};

/// Composite Simpson rule on [a, b] with `panels` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for j in 1..panels {
        acc += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// ∫ g dν_n for even n, where (1 − t²)^{n/2−1} is a polynomial.
fn nu_simpson(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let w = |t: f64| (1.0 - t * t).powi(n as i32 / 2 - 1);
    simpson(|t| w(t) * g(t), -1.0, 1.0, 20_000) / simpson(w, -1.0, 1.0, 20_000)
}

#[test]
fn nu_moments() {
    for n in 2..=7 {
        assert!((nu_quadrature(n, &ZonalFunction::constant(1.0)).unwrap() - 1.0).abs() < 1e-14);
        let t2 = nu_quadrature(n, &ZonalFunction::new("t^2", |t| t * t)).unwrap();
        assert!((t2 - 1.0 / (n as f64 + 1.0)).abs() < 1e-14, "n = {n}: {t2}");
    }
    let t4 = nu_quadrature(2, &ZonalFunction::new("t^4", |t| t.powi(4))).unwrap();
    assert!((t4 - 0.2).abs() < 1e-14);
    for n in [4, 6] {
        let got = nu_quadrature(n, &ZonalFunction::exp_tilt(0.7)).unwrap();
        assert!(
            (got - nu_simpson(n, |t| (0.7 * t).exp())).abs() < 1e-12,
            "n = {n}"
        );
    }
}

#[test]
fn coordinate_decays_at_rate_n_over_two() {
    for n in [2, 3, 5] {
        let s = SpectralSemigroup::with_defaults(n).unwrap();
        for (time, x) in [(0.1, 0.3), (1.0, -0.8), (3.0, 0.95)] {
            let v = semigroup_apply(&s, time, &ZonalFunction::linear(1.0), x).unwrap();
            let expect = (-(n as f64) * time / 2.0).exp() * x;
            assert!((v.value - expect).abs() < 1e-10, "n = {n}, T = {time}");
            let one = semigroup_apply(&s, time, &ZonalFunction::constant(1.0), x).unwrap();
            assert!((one.value - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn semigroup_property() {
    let s = SpectralSemigroup::with_defaults(3).unwrap();
    let g = ZonalFunction::exp_tilt(1.3);
    let inner = {
        let s = s.clone();
        let g = g.clone();
        ZonalFunction::new("Q_0.6 g", move |x| {
            semigroup_apply(&s, 0.6, &g, x).unwrap().value
        })
    };
    for x in [-0.9, 0.0, 0.4, 1.0] {
        let nested = semigroup_apply(&s, 0.4, &inner, x).unwrap().value;
        let direct = semigroup_apply(&s, 1.0, &g, x).unwrap().value;
        assert!((nested - direct).abs() < 1e-9, "x = {x}");
    }
}

#[test]
fn long_time_limit_is_the_nu_mean() {
    for n in [2, 4] {
        let s = SpectralSemigroup::with_defaults(n).unwrap();
        let g = ZonalFunction::exp_tilt(1.0);
        let mean = nu_simpson(n, |t| t.exp());
        for x in [-1.0, 0.2, 1.0] {
            let v = semigroup_apply(&s, 50.0, &g, x).unwrap().value;
            assert!((v - mean).abs() < 1e-10, "n = {n}, x = {x}");
        }
    }
}

#[test]
fn log_gradient_against_finite_differences() {
    let s = SpectralSemigroup::with_defaults(2).unwrap();
    let zero = ZonalFunction::constant(0.0);
    assert!(log_semigroup_gradient(&s, 0.7, &zero, 0.3).unwrap().abs() < 1e-13);
    let f = ZonalFunction::linear(1.0);
    let ef = f.exp();
    let h = 1e-5;
    let log_q = |x: f64| semigroup_apply(&s, 1.0, &ef, x).unwrap().value.ln();
    let fd = (log_q(h) - log_q(-h)) / (2.0 * h);
    let got = log_semigroup_gradient(&s, 1.0, &f, 0.0).unwrap();
    assert!((got - fd).abs() < 1e-6, "{got} vs {fd}");
    assert!(log_semigroup_gradient(&s, 40.0, &f, 0.5).unwrap().abs() < 1e-12);
}

#[test]
fn laplacian_eigenrelations() {
    for n in [2, 3, 5] {
        assert!(laplacian_eigen_check(n, 1).unwrap() < 1e-12);
        assert!(laplacian_eigen_check(n, 2).unwrap() < 1e-10);
        let s = SpectralSemigroup::with_defaults(n).unwrap();
        assert!((s.eigenvalue(1) - n as f64 / 2.0).abs() < 1e-15);
        assert!((s.eigenvalue(2) - (n as f64 + 1.0)).abs() < 1e-15);
    }
}
