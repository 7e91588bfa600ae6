//! Integrators for controlled diffusions: Euler–Maruyama in R^n, the
//! geodesic frame-bundle stepper on S^n (stochastic development), and the
//! clamped Euler scheme for one coordinate (the Jacobi diffusion).
//!
//! Every simulator is an instance of [`ControlledSystem`] and is driven by
//! [`run_path`]: at step k the policy sees the state at t_k, the system
//! advances with ΔB_k + u_k dt, and the energy ½Σ|u_k|²dt and the stochastic
//! integral Σ⟨u_k, ΔB_k⟩ are accumulated along the way.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::SphereFrame;
use crate::stats::par_map;
use crate::stochastics::{BrownianBatch, DriftPolicy, DriftRealization, StepTime, TimeGrid};

/// Outcome of advancing a state by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    /// The raw Euler update left the state space and was projected back.
    Clamped,
    NonFinite,
}

/// A state space with a one-step update driven by Brownian increments plus
/// a control.
pub trait ControlledSystem: Sync {
    type State: Clone + Send;

    /// Dimension of the driving noise (and of the controls).
    fn noise_dim(&self) -> usize;

    fn initial(&self) -> Self::State;

    /// One step with raw increment `db` and control `u` over `at.dt`.
    fn advance(
        &self,
        state: &mut Self::State,
        at: StepTime,
        db: &[f64],
        u: &[f64],
        work: &mut Vec<f64>,
    ) -> StepStatus;
}

/// Gradient and Hessian, in noise coordinates, of a smooth function V(t, x)
/// along the simulated process.
///
/// With g_k = ∇V and A_k = ∇²V at (t_k, X_k), the sums Σ⟨g_k, ΔB_k⟩ and
/// ½Σ(ΔB_kᵀA_kΔB_k − tr A_k dt) have mean exactly zero on the grid and are
/// used as control variates.
pub trait MartingaleControl<S: ?Sized>: Send + Sync {
    /// Writes g into `grad` and, when available, A (row-major) into `hess`;
    /// returns whether `hess` was written.
    fn gradient_hessian(&self, at: StepTime, state: &S, grad: &mut [f64], hess: &mut [f64])
        -> bool;
}

/// Source of the martingale control variates of a run.
pub enum ControlVariate<'a, S> {
    None,
    /// Gradient and Hessian of a separate value function.
    Value(&'a dyn MartingaleControl<S>),
    /// The policy is itself u = ∇V; gradient and Hessian come from
    /// [`DriftPolicy::control_with_hessian`] in the same evaluation.
    Policy,
}

impl<S> Clone for ControlVariate<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for ControlVariate<'_, S> {}

impl<S> ControlVariate<'_, S> {
    pub fn is_none(&self) -> bool {
        matches!(self, ControlVariate::None)
    }
}

/// Observer called at every grid time of a path.
pub trait StepVisitor<S> {
    /// Called at t_k for k = 0..=N with the state at t_k. For k < N,
    /// `step` holds the control u_k and the increment ΔB_k.
    fn visit(&mut self, at: StepTime, state: &S, step: Option<(&[f64], &[f64])>);
}

impl<S> StepVisitor<S> for () {
    #[inline]
    fn visit(&mut self, _: StepTime, _: &S, _: Option<(&[f64], &[f64])>) {}
}

/// Records the per-step controls.
#[derive(Debug, Clone, Default)]
pub struct RecordControls {
    pub rates: Vec<f64>,
}

impl<S> StepVisitor<S> for RecordControls {
    fn visit(&mut self, _: StepTime, _: &S, step: Option<(&[f64], &[f64])>) {
        if let Some((u, _)) = step {
            self.rates.extend_from_slice(u);
        }
    }
}

/// Records the visited states.
#[derive(Debug, Clone)]
pub struct RecordStates<S> {
    pub states: Vec<S>,
}

impl<S> Default for RecordStates<S> {
    fn default() -> Self {
        Self { states: Vec::new() }
    }
}

impl<S: Clone> StepVisitor<S> for RecordStates<S> {
    fn visit(&mut self, _: StepTime, state: &S, _: Option<(&[f64], &[f64])>) {
        self.states.push(state.clone());
    }
}

impl<S, A: StepVisitor<S>, B: StepVisitor<S>> StepVisitor<S> for (A, B) {
    fn visit(&mut self, at: StepTime, state: &S, step: Option<(&[f64], &[f64])>) {
        self.0.visit(at, state, step);
        self.1.visit(at, state, step);
    }
}

/// Per-path summary of a controlled run.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome<S> {
    pub terminal: S,
    /// ½Σ|u_k|²dt.
    pub energy: f64,
    /// Σ⟨u_k, ΔB_k⟩.
    pub stochastic: f64,
    /// First-order martingale Σ⟨g_k, ΔB_k⟩ (zero without a control variate).
    pub cv_first: f64,
    /// Second-order martingale ½Σ(ΔBᵀAΔB − tr A dt).
    pub cv_second: f64,
    pub aborted: bool,
    pub clamped: usize,
}

impl<S> PathOutcome<S> {
    /// log D_T = −Σ⟨u_k, ΔB_k⟩ − ½Σ|u_k|²dt.
    pub fn log_weight(&self) -> f64 {
        -self.stochastic - self.energy
    }

    pub fn control_variate(&self) -> f64 {
        self.cv_first + self.cv_second
    }
}

/// Runs path `p` of `batch` through `sys`.
pub fn run_path<Sys: ControlledSystem, V: StepVisitor<Sys::State>>(
    sys: &Sys,
    policy: &dyn DriftPolicy<Sys::State>,
    cv: ControlVariate<'_, Sys::State>,
    batch: &BrownianBatch,
    p: usize,
    visitor: &mut V,
) -> PathOutcome<Sys::State> {
    let d = sys.noise_dim();
    let grid = batch.grid();
    let dt = grid.dt();
    let mut incs = Vec::new();
    batch.fill_path(p, &mut incs);
    let mut state = sys.initial();
    let mut u = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut a = vec![0.0; d * d];
    let mut work = Vec::new();
    let mut sumsq = 0.0;
    let mut stochastic = 0.0;
    let mut cv_first = 0.0;
    let mut cv_second = 0.0;
    let mut clamped = 0;
    let mut aborted = false;
    for k in 0..grid.steps() {
        let at = grid.step(k);
        let db = &incs[k * d..(k + 1) * d];
        let has_hess = match cv {
            ControlVariate::None => {
                policy.control(at, &state, &mut u);
                false
            }
            ControlVariate::Value(v) => {
                policy.control(at, &state, &mut u);
                v.gradient_hessian(at, &state, &mut g, &mut a)
            }
            ControlVariate::Policy => policy.control_with_hessian(at, &state, &mut u, &mut a),
        };
        let mut su = 0.0;
        for (ui, bi) in u.iter().zip(db) {
            sumsq += ui * ui;
            su += ui * bi;
        }
        stochastic += su;
        if !cv.is_none() {
            cv_first += match cv {
                ControlVariate::Policy => su,
                _ => g.iter().zip(db).map(|(x, y)| x * y).sum::<f64>(),
            };
            if has_hess {
                let mut quad = 0.0;
                let mut trace = 0.0;
                for i in 0..d {
                    trace += a[i * d + i];
                    for j in 0..d {
                        quad += db[i] * a[i * d + j] * db[j];
                    }
                }
                cv_second += 0.5 * (quad - trace * dt);
            }
        }
        visitor.visit(at, &state, Some((&u, db)));
        match sys.advance(&mut state, at, db, &u, &mut work) {
            StepStatus::Ok => {}
            StepStatus::Clamped => clamped += 1,
            StepStatus::NonFinite => {
                aborted = true;
                break;
            }
        }
    }
    if !aborted {
        visitor.visit(grid.step(grid.steps()), &state, None);
    }
    PathOutcome {
        terminal: state,
        energy: 0.5 * sumsq * dt,
        stochastic,
        cv_first,
        cv_second,
        aborted,
        clamped,
    }
}

/// Runs every path of `batch`, in path order, building a visitor per path
/// and reducing each path to a `T`.
pub fn run_batch_with<Sys, V, T>(
    sys: &Sys,
    policy: &dyn DriftPolicy<Sys::State>,
    cv: ControlVariate<'_, Sys::State>,
    batch: &BrownianBatch,
    workers: usize,
    make_visitor: impl Fn(usize) -> V + Sync + Send,
    finish: impl Fn(PathOutcome<Sys::State>, V) -> T + Sync + Send,
) -> Vec<T>
where
    Sys: ControlledSystem,
    V: StepVisitor<Sys::State>,
    T: Send,
{
    par_map(batch.paths(), workers, |p| {
        let mut v = make_visitor(p);
        let out = run_path(sys, policy, cv, batch, p, &mut v);
        finish(out, v)
    })
}

/// Per-path outcomes for every path of `batch`.
pub fn run_batch<Sys: ControlledSystem>(
    sys: &Sys,
    policy: &dyn DriftPolicy<Sys::State>,
    cv: ControlVariate<'_, Sys::State>,
    batch: &BrownianBatch,
    workers: usize,
) -> Vec<PathOutcome<Sys::State>> {
    run_batch_with(sys, policy, cv, batch, workers, |_| (), |o, _| o)
}

fn check_dims(grid: &TimeGrid, batch: &BrownianBatch, dim: usize) -> Result<()> {
    if batch.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: batch.dim(),
        });
    }
    if batch.grid() != *grid {
        return Err(Error::InvalidGrid(format!(
            "batch grid {:?} differs from requested grid {:?}",
            batch.grid(),
            grid
        )));
    }
    Ok(())
}

type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// dX = σ(X) dB + b(X) dt in R^n.
#[derive(Clone)]
pub struct EuclideanModel {
    dim: usize,
    /// Row-major n×n; `None` is the identity.
    sigma: Option<VectorField>,
    drift: Option<VectorField>,
}

impl std::fmt::Debug for EuclideanModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EuclideanModel")
            .field("dim", &self.dim)
            .field("identity_sigma", &self.sigma.is_none())
            .field("has_drift", &self.drift.is_some())
            .finish()
    }
}

impl EuclideanModel {
    /// `sigma(x, out)` writes the row-major n×n diffusion matrix and
    /// `drift(x, out)` the drift vector.
    pub fn new(
        dim: usize,
        sigma: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            sigma: Some(Arc::new(sigma)),
            drift: Some(Arc::new(drift)),
        }
    }

    /// Standard Brownian motion: σ = I, b = 0.
    pub fn brownian(dim: usize) -> Self {
        Self {
            dim,
            sigma: None,
            drift: None,
        }
    }

    /// σ = I, b(x) = −rate·x.
    pub fn ornstein_uhlenbeck(dim: usize, rate: f64) -> Self {
        Self {
            dim,
            sigma: None,
            drift: Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -rate * xi;
                }
            })),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// The controlled Euclidean diffusion started at `x0`.
#[derive(Debug, Clone)]
pub struct EuclideanSystem {
    pub model: EuclideanModel,
    pub x0: Vec<f64>,
}

impl ControlledSystem for EuclideanSystem {
    type State = Vec<f64>;

    fn noise_dim(&self) -> usize {
        self.model.dim
    }

    fn initial(&self) -> Vec<f64> {
        self.x0.clone()
    }

    fn advance(
        &self,
        x: &mut Vec<f64>,
        at: StepTime,
        db: &[f64],
        u: &[f64],
        work: &mut Vec<f64>,
    ) -> StepStatus {
        let n = self.model.dim;
        let dt = at.dt;
        work.resize(n * n + 2 * n, 0.0);
        let (sig, rest) = work.split_at_mut(n * n);
        let (xi, b) = rest.split_at_mut(n);
        for i in 0..n {
            xi[i] = db[i] + u[i] * dt;
        }
        if let Some(drift) = &self.model.drift {
            drift(x, b);
        } else {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        match &self.model.sigma {
            None => {
                for i in 0..n {
                    x[i] += xi[i] + b[i] * dt;
                }
            }
            Some(sigma) => {
                sigma(x, sig);
                for i in 0..n {
                    let s: f64 = (0..n).map(|j| sig[i * n + j] * xi[j]).sum();
                    b[i] = s + b[i] * dt;
                }
                for i in 0..n {
                    x[i] += b[i];
                }
            }
        }
        if x.iter().all(|v| v.is_finite()) {
            StepStatus::Ok
        } else {
            StepStatus::NonFinite
        }
    }
}

/// One simulated Euclidean path.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPath {
    pub states: Vec<Vec<f64>>,
    pub drift: DriftRealization,
    pub aborted: bool,
}

/// Euler–Maruyama paths X_{k+1} = X_k + σ(X_k)(ΔB_k + u_k dt) + b(X_k)dt,
/// one per path of `batch`, with their realized drifts.
pub fn simulate_controlled_euclidean(
    model: &EuclideanModel,
    policy: &dyn DriftPolicy<Vec<f64>>,
    grid: &TimeGrid,
    x0: &[f64],
    batch: &BrownianBatch,
) -> Result<Vec<EuclideanPath>> {
    check_dims(grid, batch, model.dim)?;
    if x0.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x0.len(),
        });
    }
    let sys = EuclideanSystem {
        model: model.clone(),
        x0: x0.to_vec(),
    };
    let g = *grid;
    let dim = model.dim;
    let runs = run_batch_with(
        &sys,
        policy,
        ControlVariate::None,
        batch,
        1,
        |_| (RecordStates::default(), RecordControls::default()),
        |o, (s, c)| (o.aborted, s.states, c.rates),
    );
    runs.into_iter()
        .map(|(aborted, states, mut rates)| {
            rates.resize(g.steps() * dim, 0.0);
            Ok(EuclideanPath {
                states,
                drift: DriftRealization::new(g, dim, rates)?,
                aborted,
            })
        })
        .collect()
}

/// Horizontal Brownian motion on O(S^n), driven through the frame.
#[derive(Debug, Clone)]
pub struct SphereSystem {
    pub frame0: SphereFrame,
}

impl ControlledSystem for SphereSystem {
    type State = SphereFrame;

    fn noise_dim(&self) -> usize {
        self.frame0.dim()
    }

    fn initial(&self) -> SphereFrame {
        self.frame0.clone()
    }

    fn advance(
        &self,
        frame: &mut SphereFrame,
        at: StepTime,
        db: &[f64],
        u: &[f64],
        work: &mut Vec<f64>,
    ) -> StepStatus {
        let n = db.len();
        let mut stack = [0.0; 16];
        let mut heap = Vec::new();
        let z: &mut [f64] = if n <= stack.len() {
            &mut stack[..n]
        } else {
            heap.resize(n, 0.0);
            &mut heap
        };
        for i in 0..n {
            z[i] = db[i] + u[i] * at.dt;
        }
        frame.roll(z, work);
        if frame.is_finite() {
            StepStatus::Ok
        } else {
            StepStatus::NonFinite
        }
    }
}

/// A trajectory in the frame bundle, with base path X_{t_k} = π(Φ_{t_k}).
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePath {
    pub grid: TimeGrid,
    pub frames: Vec<SphereFrame>,
}

impl SpherePath {
    pub fn base(&self, k: usize) -> &[f64] {
        self.frames[k].base().coords()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn terminal(&self) -> &SphereFrame {
        self.frames
            .last()
            .expect("a path has at least its initial frame")
    }
}

/// Controlled horizontal paths on S^n with their realized drifts.
pub fn simulate_horizontal(
    frame0: &SphereFrame,
    policy: &dyn DriftPolicy<SphereFrame>,
    grid: &TimeGrid,
    batch: &BrownianBatch,
) -> Result<Vec<(SpherePath, DriftRealization)>> {
    let n = frame0.dim();
    check_dims(grid, batch, n)?;
    let sys = SphereSystem {
        frame0: frame0.clone(),
    };
    let g = *grid;
    let runs = run_batch_with(
        &sys,
        policy,
        ControlVariate::None,
        batch,
        1,
        |_| (RecordStates::default(), RecordControls::default()),
        |_, (s, c)| (s.states, c.rates),
    );
    runs.into_iter()
        .map(|(frames, mut rates)| {
            rates.resize(g.steps() * n, 0.0);
            Ok((
                SpherePath { grid: g, frames },
                DriftRealization::new(g, n, rates)?,
            ))
        })
        .collect()
}

/// Stochastic development: rolls `frame0` along the given per-step driving
/// increments (step-major, N × n).
pub fn develop(frame0: &SphereFrame, grid: &TimeGrid, driving: &[f64]) -> Result<SpherePath> {
    let n = frame0.dim();
    if driving.len() != grid.steps() * n {
        return Err(Error::DimensionMismatch {
            expected: grid.steps() * n,
            got: driving.len(),
        });
    }
    let mut frames = Vec::with_capacity(grid.steps() + 1);
    let mut f = frame0.clone();
    let mut work = Vec::new();
    frames.push(f.clone());
    for z in driving.chunks(n) {
        f.roll(z, &mut work);
        frames.push(f.clone());
    }
    Ok(SpherePath {
        grid: *grid,
        frames,
    })
}

/// One coordinate of Brownian motion on S^n:
/// dX = √(1−X²)(dW + u dt) − (n/2)X dt, clamped to [−1, 1].
#[derive(Debug, Clone, Copy)]
pub struct JacobiSystem {
    pub n: usize,
    pub x0: f64,
}

impl ControlledSystem for JacobiSystem {
    type State = f64;

    fn noise_dim(&self) -> usize {
        1
    }

    fn initial(&self) -> f64 {
        self.x0
    }

    #[inline]
    fn advance(
        &self,
        x: &mut f64,
        at: StepTime,
        db: &[f64],
        u: &[f64],
        _work: &mut Vec<f64>,
    ) -> StepStatus {
        let s = (1.0 - *x * *x).max(0.0).sqrt();
        let next = *x + s * (db[0] + u[0] * at.dt) - 0.5 * self.n as f64 * *x * at.dt;
        if !next.is_finite() {
            return StepStatus::NonFinite;
        }
        if next.abs() > 1.0 {
            *x = next.clamp(-1.0, 1.0);
            StepStatus::Clamped
        } else {
            *x = next;
            StepStatus::Ok
        }
    }
}

/// A one-dimensional coordinate path.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// dW + u dt per step, when the path was simulated directly.
    pub driving: Option<Vec<f64>>,
    pub clamped: usize,
}

/// Controlled Jacobi paths with their realized drifts.
pub fn simulate_jacobi(
    n: usize,
    policy: &dyn DriftPolicy<f64>,
    grid: &TimeGrid,
    x0: f64,
    batch: &BrownianBatch,
) -> Result<Vec<(JacobiPath, DriftRealization)>> {
    if !(x0.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "start {x0} outside [-1, 1]"
        )));
    }
    check_dims(grid, batch, 1)?;
    let sys = JacobiSystem { n, x0 };
    let g = *grid;
    let dt = g.dt();
    let runs = run_batch_with(
        &sys,
        policy,
        ControlVariate::None,
        batch,
        1,
        |_| (RecordStates::default(), RecordControls::default()),
        |o, (s, c)| (o.clamped, s.states, c.rates),
    );
    let mut out = Vec::with_capacity(runs.len());
    for (p, (clamped, values, rates)) in runs.into_iter().enumerate() {
        let incs = batch.path(p);
        let driving = incs.iter().zip(&rates).map(|(b, u)| b + u * dt).collect();
        out.push((
            JacobiPath {
                grid: g,
                values,
                driving: Some(driving),
                clamped,
            },
            DriftRealization::new(g, 1, rates)?,
        ));
    }
    Ok(out)
}

/// The `i`-th (0-based) coordinate of the base path.
pub fn coordinate_projection_consistency(path: &SpherePath, i: usize) -> JacobiPath {
    JacobiPath {
        grid: path.grid,
        values: path.frames.iter().map(|f| f.base().coords()[i]).collect(),
        driving: None,
        clamped: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;
    use crate::stochastics::{sample_brownian, ConstantPolicy, ZeroPolicy};

    #[test]
    fn identity_diffusion_is_cumulative_sum() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let batch = sample_brownian(grid, 2, 3, 11).unwrap();
        let model = EuclideanModel::brownian(2);
        let paths = simulate_controlled_euclidean(&model, &ZeroPolicy, &grid, &[0.5, -1.0], &batch)
            .unwrap();
        for (p, path) in paths.iter().enumerate() {
            let inc = batch.path(p);
            let mut x = vec![0.5, -1.0];
            for k in 0..50 {
                x[0] += inc[2 * k];
                x[1] += inc[2 * k + 1];
                assert_eq!(path.states[k + 1], x);
            }
            assert_eq!(path.drift.energy(), 0.0);
        }
    }

    #[test]
    fn constant_policy_energy_is_exact() {
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let batch = sample_brownian(grid, 1, 2, 3).unwrap();
        let model = EuclideanModel::brownian(1);
        let pol = ConstantPolicy::new(vec![1.5]);
        let paths = simulate_controlled_euclidean(&model, &pol, &grid, &[0.0], &batch).unwrap();
        for path in &paths {
            assert!((path.drift.energy() - 0.5 * 2.25 * 2.0).abs() < 1e-12);
        }
        let sys = EuclideanSystem {
            model,
            x0: vec![0.0],
        };
        let outs = run_batch(&sys, &pol, ControlVariate::None, &batch, 1);
        assert_eq!(outs[0].energy, paths[0].drift.energy());
    }

    #[test]
    fn zero_driving_keeps_frame() {
        let f0 = SphereFrame::standard_at(SpherePoint::new(vec![0.3, 0.4, 0.5, 0.1]).unwrap());
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let path = develop(&f0, &grid, &vec![0.0; 30]).unwrap();
        assert!(path.frames.iter().all(|f| *f == f0));
    }

    #[test]
    fn straight_driving_reaches_antipode() {
        let f0 = SphereFrame::standard_at(SpherePoint::pole(2, 0));
        let steps = 31_416;
        let grid = TimeGrid::new(std::f64::consts::PI, steps).unwrap();
        let dt = grid.dt();
        let driving: Vec<f64> = (0..steps).flat_map(|_| [dt, 0.0]).collect();
        let path = develop(&f0, &grid, &driving).unwrap();
        let end = path.base(steps);
        assert!((end[0] + 1.0).abs() < 1e-3, "{end:?}");
        // reversed driving retraces to the start
        let back: Vec<f64> = driving.iter().map(|v| -v).collect();
        let rev = develop(path.terminal(), &grid, &back).unwrap();
        assert!((rev.base(steps)[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jacobi_stays_in_interval_from_pole() {
        let grid = TimeGrid::new(0.5, 500).unwrap();
        let batch = sample_brownian(grid, 1, 20, 5).unwrap();
        let paths = simulate_jacobi(2, &ZeroPolicy, &grid, 1.0, &batch).unwrap();
        for (p, _) in &paths {
            assert!(p.values.iter().all(|v| v.abs() <= 1.0));
            assert!(p.values[1] < 1.0);
        }
    }

    #[test]
    fn projection_starts_at_pole() {
        let f0 = SphereFrame::standard_at(SpherePoint::pole(3, 2));
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let batch = sample_brownian(grid, 3, 2, 9).unwrap();
        let runs = simulate_horizontal(&f0, &ZeroPolicy, &grid, &batch).unwrap();
        let c = coordinate_projection_consistency(&runs[0].0, 2);
        assert_eq!(c.values[0], 1.0);
        assert_eq!(c.values.len(), 11);
    }
}
