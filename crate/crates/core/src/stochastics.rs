//! Time grids, seeded Brownian increments, drift policies and their
//! Cameron–Martin energy, Girsanov weights.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::dot;

/// Uniform grid t_k = kT/N on [0, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid(
                "number of steps must be positive".into(),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// t_k, with t_N = T exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            self.horizon * k as f64 / self.steps as f64
        }
    }

    pub fn step(&self, k: usize) -> StepTime {
        StepTime {
            index: k,
            t: self.time(k),
            dt: self.dt(),
            horizon: self.horizon,
        }
    }

    /// The grid with `factor` times fewer steps over the same horizon.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::InvalidGrid(format!(
                "{} steps cannot be coarsened by {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

/// Position of the current step handed to a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTime {
    pub index: usize,
    pub t: f64,
    pub dt: f64,
    pub horizon: f64,
}

impl StepTime {
    /// T − t, never below dt.
    pub fn remaining(&self) -> f64 {
        (self.horizon - self.t).max(self.dt)
    }
}

/// A reproducible batch of Brownian increments.
///
/// Increments are not stored: path `p` is regenerated on demand from the
/// ChaCha stream `(seed, p)`. A batch built with [`BrownianBatch::coarsened`]
/// sums consecutive fine increments, so batches at different step sizes share
/// their Brownian paths.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianBatch {
    fine: TimeGrid,
    stride: usize,
    dim: usize,
    paths: usize,
    seed: u64,
}

/// Draws a batch of `paths` Brownian paths in R^`dim` on `grid`.
pub fn sample_brownian(
    grid: TimeGrid,
    dim: usize,
    paths: usize,
    seed: u64,
) -> Result<BrownianBatch> {
    if dim == 0 || paths == 0 {
        return Err(Error::InvalidArgument(
            "Brownian batch needs dim >= 1 and paths >= 1".into(),
        ));
    }
    Ok(BrownianBatch {
        fine: grid,
        stride: 1,
        dim,
        paths,
        seed,
    })
}

impl BrownianBatch {
    /// Grid on which increments are delivered.
    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            horizon: self.fine.horizon,
            steps: self.fine.steps / self.stride,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same Brownian paths seen on a grid `factor` times coarser.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        self.grid().coarsened(factor)?;
        Ok(Self {
            stride: self.stride * factor,
            ..self.clone()
        })
    }

    /// The same batch restricted to its first `paths` paths.
    pub fn truncated(&self, paths: usize) -> Self {
        Self {
            paths: paths.min(self.paths).max(1),
            ..self.clone()
        }
    }

    /// Fills `out` (steps × dim, step-major) with the increments of path `p`.
    pub fn fill_path(&self, p: usize, out: &mut Vec<f64>) {
        let steps = self.fine.steps / self.stride;
        out.clear();
        out.resize(steps * self.dim, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(p as u64);
        let sd = self.fine.dt().sqrt();
        for k in 0..steps {
            let row = &mut out[k * self.dim..(k + 1) * self.dim];
            for _ in 0..self.stride {
                for r in row.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *r += sd * z;
                }
            }
        }
    }

    pub fn path(&self, p: usize) -> Vec<f64> {
        let mut v = Vec::new();
        self.fill_path(p, &mut v);
        v
    }
}

/// Per-step controls u_k, constant on [t_k, t_{k+1}), with energy ½Σ|u_k|²dt.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftRealization {
    grid: TimeGrid,
    dim: usize,
    rates: Vec<f64>,
    energy: f64,
}

impl DriftRealization {
    pub fn new(grid: TimeGrid, dim: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != grid.steps() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.steps() * dim,
                got: rates.len(),
            });
        }
        let energy = energy_of(&rates, grid.dt());
        Ok(Self {
            grid,
            dim,
            rates,
            energy,
        })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            rates: vec![0.0; grid.steps() * dim],
            energy: 0.0,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate(&self, k: usize) -> &[f64] {
        &self.rates[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// ½‖U‖²_H.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// U_{t_k} = Σ_{j<k} u_j dt.
    pub fn path_value(&self, k: usize) -> Vec<f64> {
        let dt = self.grid.dt();
        let mut acc = vec![0.0; self.dim];
        for j in 0..k {
            for (a, r) in acc.iter_mut().zip(self.rate(j)) {
                *a += r * dt;
            }
        }
        acc
    }

    /// Concatenation with a drift on a following grid of the same step size.
    pub fn concat(&self, next: &DriftRealization) -> Result<Self> {
        if self.dim != next.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: next.dim,
            });
        }
        if (self.grid.dt() - next.grid.dt()).abs() > 1e-15 * self.grid.dt() {
            return Err(Error::InvalidGrid(
                "concatenated drifts need equal steps".into(),
            ));
        }
        let grid = TimeGrid::new(
            self.grid.horizon() + next.grid.horizon(),
            self.grid.steps() + next.grid.steps(),
        )?;
        let mut rates = self.rates.clone();
        rates.extend_from_slice(&next.rates);
        Self::new(grid, self.dim, rates)
    }
}

fn energy_of(rates: &[f64], dt: f64) -> f64 {
    0.5 * rates.iter().map(|r| r * r).sum::<f64>() * dt
}

/// ½ Σ_k |u_k|² dt, recomputed from the rates.
pub fn cameron_martin_energy(d: &DriftRealization) -> f64 {
    energy_of(&d.rates, d.grid.dt())
}

/// log D_T = −Σ⟨u_k, ΔB_k⟩ − ½Σ|u_k|²dt.
pub fn log_girsanov_weight(d: &DriftRealization, increments: &[f64]) -> Result<f64> {
    if increments.len() != d.rates.len() {
        return Err(Error::DimensionMismatch {
            expected: d.rates.len(),
            got: increments.len(),
        });
    }
    let stoch = dot(&d.rates, increments);
    Ok(-stoch - cameron_martin_energy(d))
}

/// D_T = exp(−Σ⟨u_k, ΔB_k⟩ − ½Σ|u_k|²dt).
pub fn girsanov_weight(d: &DriftRealization, increments: &[f64]) -> Result<f64> {
    log_girsanov_weight(d, increments).map(f64::exp)
}

/// Name and parameters of a policy, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyInfo {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl PolicyInfo {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Feedback control u(t_k, state) evaluated at the left end of each step.
pub trait DriftPolicy<S: ?Sized>: Send + Sync {
    fn info(&self) -> PolicyInfo;

    /// Writes the control for the step starting at `at` into `out`.
    fn control(&self, at: StepTime, state: &S, out: &mut [f64]);

    /// For a gradient policy u = ∇V: writes u and the Hessian of V in noise
    /// coordinates (row-major) and returns true. Other policies write only
    /// the control and return false.
    fn control_with_hessian(
        &self,
        at: StepTime,
        state: &S,
        out: &mut [f64],
        _hess: &mut [f64],
    ) -> bool {
        self.control(at, state, out);
        false
    }
}

/// u ≡ 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPolicy;

impl<S: ?Sized> DriftPolicy<S> for ZeroPolicy {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named("zero")
    }

    fn control(&self, _at: StepTime, _state: &S, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// u ≡ a.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    rate: Vec<f64>,
}

impl ConstantPolicy {
    pub fn new(rate: Vec<f64>) -> Self {
        Self { rate }
    }
}

impl<S: ?Sized> DriftPolicy<S> for ConstantPolicy {
    fn info(&self) -> PolicyInfo {
        let mut info = PolicyInfo::named("constant");
        for (i, r) in self.rate.iter().enumerate() {
            info.params.insert(format!("rate[{i}]"), *r);
        }
        info
    }

    fn control(&self, _at: StepTime, _state: &S, out: &mut [f64]) {
        out.copy_from_slice(&self.rate);
    }
}

/// Open-loop rates given per step (steps × dim); off-grid queries use the
/// piece containing t.
#[derive(Debug, Clone)]
pub struct PiecewisePolicy {
    label: String,
    grid: TimeGrid,
    dim: usize,
    rates: Vec<f64>,
}

impl PiecewisePolicy {
    pub fn new(
        label: impl Into<String>,
        grid: TimeGrid,
        dim: usize,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if rates.len() != grid.steps() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.steps() * dim,
                got: rates.len(),
            });
        }
        Ok(Self {
            label: label.into(),
            grid,
            dim,
            rates,
        })
    }

    /// Rates drawn uniformly in [−amplitude, amplitude] on `pieces` equal
    /// sub-intervals of the grid.
    pub fn random(
        grid: TimeGrid,
        dim: usize,
        pieces: usize,
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        use rand::Rng;
        let pieces = pieces.clamp(1, grid.steps());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels: Vec<f64> = (0..pieces * dim)
            .map(|_| rng.random_range(-amplitude..=amplitude))
            .collect();
        let mut rates = Vec::with_capacity(grid.steps() * dim);
        for k in 0..grid.steps() {
            let piece = k * pieces / grid.steps();
            rates.extend_from_slice(&levels[piece * dim..(piece + 1) * dim]);
        }
        let mut p = Self::new("random-piecewise", grid, dim, rates)?;
        p.label = format!("random-piecewise[{pieces}]");
        Ok(p)
    }
}

impl<S: ?Sized> DriftPolicy<S> for PiecewisePolicy {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named(self.label.clone())
    }

    fn control(&self, at: StepTime, _state: &S, out: &mut [f64]) {
        let k = ((at.t / self.grid.dt()).floor() as usize).min(self.grid.steps() - 1);
        out.copy_from_slice(&self.rates[k * self.dim..(k + 1) * self.dim]);
    }
}

type ControlFn<S> = dyn Fn(StepTime, &S, &mut [f64]) + Send + Sync;

/// A policy given by a closure.
pub struct FnPolicy<S: ?Sized> {
    info: PolicyInfo,
    f: Arc<ControlFn<S>>,
}

impl<S: ?Sized> FnPolicy<S> {
    pub fn new(
        info: PolicyInfo,
        f: impl Fn(StepTime, &S, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            info,
            f: Arc::new(f),
        }
    }
}

impl<S: ?Sized> DriftPolicy<S> for FnPolicy<S> {
    fn info(&self) -> PolicyInfo {
        self.info.clone()
    }

    fn control(&self, at: StepTime, state: &S, out: &mut [f64]) {
        (self.f)(at, state, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert_eq!(g.time(3), 1.0);
        assert!(g.coarsened(2).is_err());
    }

    #[test]
    fn same_seed_same_batch() {
        let g = TimeGrid::new(1.0, 50).unwrap();
        let a = sample_brownian(g, 2, 10, 7).unwrap();
        let b = sample_brownian(g, 2, 10, 7).unwrap();
        for p in 0..10 {
            assert_eq!(a.path(p), b.path(p));
        }
        let c = sample_brownian(g, 2, 10, 8).unwrap();
        assert_ne!(a.path(0), c.path(0));
        assert_ne!(a.path(0), a.path(1));
    }

    #[test]
    fn coarsened_batch_sums_fine_increments() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let fine = sample_brownian(g, 1, 3, 1).unwrap();
        let coarse = fine.coarsened(4).unwrap();
        assert_eq!(coarse.grid().steps(), 2);
        let f = fine.path(2);
        let c = coarse.path(2);
        assert!((c[0] - f[..4].iter().sum::<f64>()).abs() < 1e-15);
        assert!((c[1] - f[4..].iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn energy_examples() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(cameron_martin_energy(&DriftRealization::zero(g, 2)), 0.0);
        let c = DriftRealization::new(g, 2, [1.0, 0.0].repeat(4)).unwrap();
        assert!((c.energy() - 0.5).abs() < 1e-15);
        let p = DriftRealization::new(g, 1, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        assert!((p.energy() - 1.25).abs() < 1e-15);
        assert_eq!(p.energy(), cameron_martin_energy(&p));
    }

    #[test]
    fn energy_is_additive_under_concatenation() {
        let g = TimeGrid::new(0.5, 5).unwrap();
        let a = DriftRealization::new(g, 1, vec![0.3, -1.0, 2.0, 0.1, 0.0]).unwrap();
        let b = DriftRealization::new(g, 1, vec![1.5, 1.5, -0.2, 0.7, 3.0]).unwrap();
        let ab = a.concat(&b).unwrap();
        assert!((ab.energy() - a.energy() - b.energy()).abs() < 1e-12);
        assert_eq!(ab.grid().horizon(), 1.0);
    }

    #[test]
    fn zero_drift_weight_is_one() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let batch = sample_brownian(g, 3, 1, 0).unwrap();
        let d = DriftRealization::zero(g, 3);
        assert_eq!(girsanov_weight(&d, &batch.path(0)).unwrap(), 1.0);
    }

    #[test]
    fn constant_drift_log_weight_closed_form() {
        let g = TimeGrid::new(2.0, 100).unwrap();
        let batch = sample_brownian(g, 2, 1, 3).unwrap();
        let inc = batch.path(0);
        let a = [0.7, -0.4];
        let d = DriftRealization::new(g, 2, a.repeat(100)).unwrap();
        let bt: Vec<f64> = (0..2)
            .map(|j| inc.iter().skip(j).step_by(2).sum())
            .collect();
        let oracle = -(a[0] * bt[0] + a[1] * bt[1]) - 0.5 * (a[0] * a[0] + a[1] * a[1]) * 2.0;
        assert!((log_girsanov_weight(&d, &inc).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn random_piecewise_is_deterministic() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let a = PiecewisePolicy::random(g, 2, 4, 1.0, 9).unwrap();
        let b = PiecewisePolicy::random(g, 2, 4, 1.0, 9).unwrap();
        let mut oa = [0.0; 2];
        let mut ob = [0.0; 2];
        for k in 0..100 {
            DriftPolicy::<[f64]>::control(&a, g.step(k), &[0.0, 0.0][..], &mut oa);
            DriftPolicy::<[f64]>::control(&b, g.step(k), &[0.0, 0.0][..], &mut ob);
            assert_eq!(oa, ob);
            assert!(oa.iter().all(|v| v.abs() <= 1.0));
        }
    }
}
