use proptest::prelude::*;
use scl::geometry::{
    coordinate_gradient, frame_theta, parallel_transport, project_tangent, sphere_exp, SphereFrame,
    SpherePoint,
};
use scl::inequalities::frame_lemma_check;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn point(raw: &[f64]) -> Option<SpherePoint> {
    (dot(raw, raw) > 1e-6).then(|| SpherePoint::new(raw.to_vec()).unwrap())
}

fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[i] = 1.0;
    v
}

#[test]
fn project_tangent_examples() {
    let x = SpherePoint::pole(2, 0);
    assert!(project_tangent(&x, &e(2, 0)).norm() < 1e-15);
    let v = project_tangent(&x, &e(2, 1));
    assert_eq!(v.vec.as_slice(), e(2, 1).as_slice());
    let s = 0.5f64.sqrt();
    let x = SpherePoint::new(vec![s, s, 0.0]).unwrap();
    let v = project_tangent(&x, &e(2, 0));
    // v − ⟨x, v⟩x by hand
    let expect = [1.0 - s * s, -s * s, 0.0];
    for (a, b) in v.vec.as_slice().iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((v.vec.as_slice()[0] - 0.5).abs() < 1e-15 && (v.vec.as_slice()[1] + 0.5).abs() < 1e-15);
}

#[test]
fn coordinate_gradient_examples() {
    let x = SpherePoint::pole(3, 0);
    assert!(coordinate_gradient(&x, 0).norm() < 1e-15);
    let g = coordinate_gradient(&x, 1);
    assert_eq!(g.vec.as_slice(), e(3, 1).as_slice());
}

#[test]
fn sphere_exp_examples() {
    let x = SpherePoint::pole(2, 0);
    let quarter = project_tangent(&x, &[0.0, std::f64::consts::FRAC_PI_2, 0.0]);
    let y = sphere_exp(&x, &quarter);
    assert!((y.coords()[1] - 1.0).abs() < 1e-15 && y.coords()[0].abs() < 1e-15);
    let zero = project_tangent(&x, &[0.0; 3]);
    assert_eq!(sphere_exp(&x, &zero).coords(), x.coords());
    let half = project_tangent(&x, &[0.0, std::f64::consts::PI, 0.0]);
    let y = sphere_exp(&x, &half);
    assert!((y.coords()[0] + 1.0).abs() < 1e-15 && y.coords()[1].abs() < 1e-15);
}

#[test]
fn parallel_transport_rotates_the_geodesic_plane() {
    let x = SpherePoint::pole(2, 0);
    let v = project_tangent(&x, &[0.0, std::f64::consts::FRAC_PI_2, 0.0]);
    let w = project_tangent(&x, &e(2, 1));
    let out = parallel_transport(&x, &v, &w);
    assert!((out.vec.as_slice()[0] + 1.0).abs() < 1e-15 && out.vec.as_slice()[1].abs() < 1e-15);
    let perp = project_tangent(&x, &e(2, 2));
    assert_eq!(
        parallel_transport(&x, &v, &perp).vec.as_slice(),
        e(2, 2).as_slice()
    );
}

#[test]
fn frame_theta_at_a_pole() {
    let x = SpherePoint::pole(3, 0);
    let fallback = e(3, 2);
    let theta = frame_theta(&x, &fallback);
    assert_eq!(theta.len(), 4);
    assert_eq!(theta[0].vec.as_slice(), fallback.as_slice());
    for (i, t) in theta.iter().enumerate().skip(1) {
        assert_eq!(t.vec.as_slice(), e(3, i).as_slice());
    }
}

#[test]
fn frame_lemma_on_random_pairs() {
    for n in [2, 3, 5, 10] {
        let r = frame_lemma_check(n, 100_000, 7, 0).unwrap();
        assert_eq!(r.count, 100_000);
        assert_eq!(r.violations, 0, "n = {n}");
        assert!(
            r.max_ratio <= 2.0 + 1e-10 && r.max_ratio > 1.0,
            "n = {n}: {}",
            r.max_ratio
        );
    }
}

fn vec_in(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_tangent_and_idempotent(raw in vec_in(4), v in vec_in(4)) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let t = project_tangent(&x, &v);
        prop_assert!(dot(t.vec.as_slice(), x.coords()).abs() < 1e-14);
        let again = project_tangent(&x, t.vec.as_slice());
        for (a, b) in again.vec.as_slice().iter().zip(t.vec.as_slice()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_norm_identity(raw in vec_in(6), i in 0usize..6) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let g = coordinate_gradient(&x, i);
        let xi = x.coords()[i];
        prop_assert!((g.norm().powi(2) - (1.0 - xi * xi)).abs() < 1e-14);
    }

    #[test]
    fn exp_stays_on_the_sphere(raw in vec_in(4), v in vec_in(4), len in 0.0f64..std::f64::consts::PI) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let t = project_tangent(&x, &v);
        if t.norm() < 1e-9 { return Ok(()) }
        let scaled: Vec<f64> = t.vec.as_slice().iter().map(|c| c * len / t.norm()).collect();
        let y = sphere_exp(&x, &project_tangent(&x, &scaled));
        prop_assert!((dot(y.coords(), y.coords()).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transport_preserves_gram(raw in vec_in(4), v in vec_in(4), a in vec_in(4), b in vec_in(4)) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let v = project_tangent(&x, &v);
        let (a, b) = (project_tangent(&x, &a), project_tangent(&x, &b));
        let y = sphere_exp(&x, &v);
        let (ta, tb) = (parallel_transport(&x, &v, &a), parallel_transport(&x, &v, &b));
        prop_assert!((dot(ta.vec.as_slice(), tb.vec.as_slice()) - dot(a.vec.as_slice(), b.vec.as_slice())).abs() < 1e-10);
        prop_assert!((dot(ta.vec.as_slice(), ta.vec.as_slice()) - dot(a.vec.as_slice(), a.vec.as_slice())).abs() < 1e-10);
        prop_assert!(dot(ta.vec.as_slice(), y.coords()).abs() < 1e-10);
    }

    #[test]
    fn theta_vectors_are_unit_tangent(raw in vec_in(5)) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let frame = SphereFrame::standard_at(x.clone());
        let theta = frame_theta(&x, frame.column(0));
        for t in &theta {
            prop_assert!((t.norm() - 1.0).abs() < 1e-12);
            prop_assert!(dot(t.vec.as_slice(), x.coords()).abs() < 1e-12);
        }
    }

    #[test]
    fn rolled_frames_stay_orthonormal(raw in vec_in(3), steps in prop::collection::vec(vec_in(2), 1..50)) {
        let Some(x) = point(&raw) else { return Ok(()) };
        let mut frame = SphereFrame::standard_at(x);
        let mut work = Vec::new();
        for z in &steps {
            let z: Vec<f64> = z.iter().map(|c| 0.1 * c).collect();
            frame.roll(&z, &mut work);
        }
        prop_assert!(frame.orthonormality_defect() < 1e-10);
        prop_assert!((dot(frame.base().coords(), frame.base().coords()).sqrt() - 1.0).abs() < 1e-12);
    }
}
