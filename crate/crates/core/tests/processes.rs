use scl::geometry::{SphereFrame, SpherePoint};
use scl::simulate::{
    coordinate_projection_consistency, develop, simulate_controlled_euclidean, simulate_horizontal,
    simulate_jacobi, EuclideanModel,
};
use scl::stats::MeanEstimate;
use scl::stochastics::{
    cameron_martin_energy, girsanov_weight, log_girsanov_weight, sample_brownian, ConstantPolicy,
    DriftRealization, PiecewisePolicy, TimeGrid, ZeroPolicy,
};

fn within(est: &MeanEstimate, oracle: f64, k: f64) -> bool {
    (est.mean - oracle).abs() <= k * est.std_error
}

#[test]
fn batches_are_reproducible_from_seed_and_path() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let a = sample_brownian(grid, 3, 10, 5).unwrap();
    let b = sample_brownian(grid, 3, 10, 5).unwrap();
    let c = sample_brownian(grid, 3, 10, 6).unwrap();
    for p in 0..10 {
        assert_eq!(a.path(p), b.path(p));
        assert_ne!(a.path(p), c.path(p));
    }
    // a path does not depend on how many paths the batch holds
    assert_eq!(
        a.path(3),
        sample_brownian(grid, 3, 1000, 5).unwrap().path(3)
    );
}

#[test]
fn increments_have_variance_dt_and_quadratic_variation_t() {
    let (n, steps) = (3, 100);
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let batch = sample_brownian(grid, n, 4000, 9).unwrap();
    let first: Vec<f64> = (0..batch.paths()).map(|p| batch.path(p)[0]).collect();
    let sq: Vec<f64> = first.iter().map(|x| x * x).collect();
    assert!(within(&MeanEstimate::from_samples(&first), 0.0, 3.0));
    assert!(within(&MeanEstimate::from_samples(&sq), grid.dt(), 3.0));
    let qv: Vec<f64> = (0..batch.paths())
        .map(|p| batch.path(p).iter().map(|x| x * x).sum())
        .collect();
    assert!(within(&MeanEstimate::from_samples(&qv), n as f64, 3.0));
}

#[test]
fn cameron_martin_energies() {
    let grid = TimeGrid::new(1.0, 2).unwrap();
    assert_eq!(cameron_martin_energy(&DriftRealization::zero(grid, 2)), 0.0);
    let constant = DriftRealization::new(grid, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    assert!((cameron_martin_energy(&constant) - 0.5).abs() < 1e-15);
    let piecewise = DriftRealization::new(grid, 1, vec![1.0, 2.0]).unwrap();
    assert!((cameron_martin_energy(&piecewise) - 1.25).abs() < 1e-15);
}

#[test]
fn girsanov_weight_closed_form() {
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let increments = [0.3, -0.1, 0.2, 0.5];
    assert_eq!(
        girsanov_weight(&DriftRealization::zero(grid, 1), &increments).unwrap(),
        1.0
    );
    let rates = vec![1.0, -0.5, 0.25, 2.0];
    let d = DriftRealization::new(grid, 1, rates.clone()).unwrap();
    // log D_T = −Σ u_k ΔB_k − ½ Σ u_k² dt
    let by_hand: f64 = rates
        .iter()
        .zip(increments)
        .map(|(u, b)| -u * b - 0.5 * u * u * 0.25)
        .sum();
    assert!((log_girsanov_weight(&d, &increments).unwrap() - by_hand).abs() < 1e-15);
    // constant rate a: −⟨a, B_T⟩ − ½|a|²T
    let a = [0.7, -1.1];
    let flat: Vec<f64> = (0..4).flat_map(|_| a).collect();
    let d = DriftRealization::new(grid, 2, flat).unwrap();
    let inc2 = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8];
    let bt = [0.1 - 0.3 + 0.5 + 0.7, 0.2 + 0.4 - 0.6 + 0.8];
    let closed = -(a[0] * bt[0] + a[1] * bt[1]) - 0.5 * (a[0] * a[0] + a[1] * a[1]);
    assert!((log_girsanov_weight(&d, &inc2).unwrap() - closed).abs() < 1e-14);
    assert!(girsanov_weight(&d, &inc2[..3]).is_err());
}

#[test]
fn girsanov_weights_average_to_one() {
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let policy = PiecewisePolicy::random(grid, 1, 4, 1.0, 3).unwrap();
    let batch = sample_brownian(grid, 1, 100_000, 21).unwrap();
    let paths =
        simulate_controlled_euclidean(&EuclideanModel::brownian(1), &policy, &grid, &[0.0], &batch)
            .unwrap();
    let w: Vec<f64> = paths
        .iter()
        .enumerate()
        .map(|(p, path)| girsanov_weight(&path.drift, &batch.path(p)).unwrap())
        .collect();
    assert!(within(&MeanEstimate::from_samples(&w), 1.0, 3.0));
}

#[test]
fn identity_diffusion_adds_the_increments() {
    let grid = TimeGrid::new(1.0, 30).unwrap();
    let batch = sample_brownian(grid, 2, 4, 2).unwrap();
    let x0 = [0.5, -1.0];
    let paths = simulate_controlled_euclidean(
        &EuclideanModel::brownian(2),
        &ZeroPolicy,
        &grid,
        &x0,
        &batch,
    )
    .unwrap();
    for (p, path) in paths.iter().enumerate() {
        let inc = batch.path(p);
        let mut x = x0.to_vec();
        for k in 0..grid.steps() {
            for j in 0..2 {
                x[j] += inc[k * 2 + j];
            }
            assert_eq!(path.states[k + 1], x);
        }
    }
}

#[test]
fn constant_policy_shifts_the_mean() {
    let grid = TimeGrid::new(2.0, 50).unwrap();
    let batch = sample_brownian(grid, 1, 20_000, 4).unwrap();
    let policy = ConstantPolicy::new(vec![0.75]);
    let paths =
        simulate_controlled_euclidean(&EuclideanModel::brownian(1), &policy, &grid, &[1.0], &batch)
            .unwrap();
    let xt: Vec<f64> = paths.iter().map(|p| p.states.last().unwrap()[0]).collect();
    assert!(within(
        &MeanEstimate::from_samples(&xt),
        1.0 + 0.75 * 2.0,
        3.0
    ));
}

#[test]
fn ornstein_uhlenbeck_variance() {
    let t = 1.0;
    let grid = TimeGrid::new(t, 1000).unwrap();
    let batch = sample_brownian(grid, 1, 20_000, 8).unwrap();
    let paths = simulate_controlled_euclidean(
        &EuclideanModel::ornstein_uhlenbeck(1, 1.0),
        &ZeroPolicy,
        &grid,
        &[0.0],
        &batch,
    )
    .unwrap();
    let sq: Vec<f64> = paths
        .iter()
        .map(|p| p.states.last().unwrap()[0].powi(2))
        .collect();
    let oracle = 0.5 * (1.0 - (-2.0 * t).exp());
    assert!(within(&MeanEstimate::from_samples(&sq), oracle, 3.0));
}

fn frame_at(coords: Vec<f64>) -> SphereFrame {
    SphereFrame::standard_at(SpherePoint::new(coords).unwrap())
}

#[test]
fn zero_driving_is_a_constant_path() {
    let frame = frame_at(vec![0.6, 0.8, 0.0]);
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let path = develop(&frame, &grid, &[0.0; 20]).unwrap();
    assert_eq!(path.len(), 11);
    for k in 0..path.len() {
        assert_eq!(path.base(k), frame.base().coords());
    }
}

#[test]
fn straight_driving_reaches_the_antipode() {
    let frame = frame_at(vec![1.0, 0.0, 0.0]);
    let steps = 10_000;
    let grid = TimeGrid::new(std::f64::consts::PI, steps).unwrap();
    let dt = grid.dt();
    let forward: Vec<f64> = (0..steps).flat_map(|_| [dt, 0.0]).collect();
    let path = develop(&frame, &grid, &forward).unwrap();
    let end = path.terminal().base().coords();
    assert!((end[0] + 1.0).abs() < 1e-3 && end[1].abs() < 1e-3 && end[2].abs() < 1e-12);
    let backward: Vec<f64> = forward.iter().map(|x| -x).collect();
    let back = develop(&frame, &grid, &backward).unwrap();
    for k in [steps / 4, steps / 2, steps] {
        let (a, b) = (path.base(k), back.base(k));
        assert!(
            (a[0] - b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12,
            "step {k}"
        );
    }
}

#[test]
fn coordinate_mean_decays_on_the_sphere() {
    let (t, x1) = (1.0, 0.6);
    let frame = frame_at(vec![x1, 0.8, 0.0]);
    let grid = TimeGrid::new(t, 200).unwrap();
    let batch = sample_brownian(grid, 2, 20_000, 12).unwrap();
    let runs = simulate_horizontal(&frame, &ZeroPolicy, &grid, &batch).unwrap();
    let xt: Vec<f64> = runs
        .iter()
        .map(|(p, _)| p.terminal().base().coords()[0])
        .collect();
    assert!(within(
        &MeanEstimate::from_samples(&xt),
        x1 * (-t).exp(),
        3.0
    ));
    let trace = coordinate_projection_consistency(&runs[0].0, 0);
    assert_eq!(trace.values.len(), grid.steps() + 1);
    assert_eq!(
        trace.values[grid.steps()],
        runs[0].0.terminal().base().coords()[0]
    );
}

#[test]
fn jacobi_symmetry_and_stationary_moment() {
    let grid = TimeGrid::new(1.0, 500).unwrap();
    let batch = sample_brownian(grid, 1, 20_000, 13).unwrap();
    let runs = simulate_jacobi(2, &ZeroPolicy, &grid, 0.0, &batch).unwrap();
    let xt: Vec<f64> = runs
        .iter()
        .map(|(p, _)| *p.values.last().unwrap())
        .collect();
    assert!(within(&MeanEstimate::from_samples(&xt), 0.0, 3.0));

    let long = TimeGrid::new(20.0, 2000).unwrap();
    let batch = sample_brownian(long, 1, 20_000, 14).unwrap();
    let runs = simulate_jacobi(3, &ZeroPolicy, &long, 0.5, &batch).unwrap();
    let sq: Vec<f64> = runs
        .iter()
        .map(|(p, _)| p.values.last().unwrap().powi(2))
        .collect();
    assert!(within(&MeanEstimate::from_samples(&sq), 0.25, 3.0));
}

#[test]
fn jacobi_stays_in_the_interval_from_the_boundary() {
    let grid = TimeGrid::new(1.0, 100).unwrap();
    let batch = sample_brownian(grid, 1, 500, 15).unwrap();
    let runs = simulate_jacobi(2, &ZeroPolicy, &grid, 1.0, &batch).unwrap();
    for (p, _) in &runs {
        assert!(p.values.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(p.values[1] < 1.0);
    }
}
