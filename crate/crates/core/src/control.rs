//! Control values E[f(X_T^U) − ½‖U‖²_H], log-partition oracles, the optimal
//! (h-transform) drifts, and Girsanov reweighting.
//!
//! For the optimal drift u = ∇V with V(t, x) = log P_{T−t}(e^f)(x), Itô's
//! formula gives f(X_T) − V(0, x) = Σ⟨u, ΔB⟩ + ½Σ|u|²dt + (second-order
//! martingale) + O(dt) per path, so subtracting the martingale terms leaves
//! an almost deterministic estimator of the same discrete expectation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::SphereFrame;
use crate::simulate::{
    run_batch, run_batch_with, ControlVariate, ControlledSystem, EuclideanModel, EuclideanSystem,
    MartingaleControl, StepVisitor,
};
use crate::spectral::{semigroup_apply, HeatSeries, SpectralSemigroup, ZonalFunction, MAX_ORDER};
use crate::stats::{combined_std_error, MeanEstimate};
use crate::stochastics::{
    sample_brownian, BrownianBatch, DriftPolicy, PolicyInfo, StepTime, TimeGrid,
};

/// Largest tolerated fraction of aborted paths.
pub const MAX_ABORTED_FRACTION: f64 = 1e-3;
/// Largest tolerated relative standard error of a Monte Carlo E[e^f].
pub const MAX_PARTITION_RELATIVE_ERROR: f64 = 0.05;

/// Monte Carlo control value of one policy.
#[derive(Debug, Clone, Serialize)]
pub struct ControlValueEstimate {
    /// Plain average of f(X_T) − energy.
    pub plain: MeanEstimate,
    /// Same expectation with the martingale control variates subtracted.
    pub controlled: Option<MeanEstimate>,
    /// Average drift energy ½‖U‖²_H.
    pub energy: MeanEstimate,
    pub paths: usize,
    pub aborted: usize,
    pub seed: u64,
    pub policy: PolicyInfo,
    pub grid: TimeGrid,
}

impl ControlValueEstimate {
    /// The lower-variance estimate.
    pub fn best(&self) -> MeanEstimate {
        self.controlled.unwrap_or(self.plain)
    }
}

/// Runs `policy` over `batch` and averages f(X_T) − ½‖U‖²_H, dropping and
/// counting aborted paths.
pub fn estimate_control_value<Sys: ControlledSystem>(
    sys: &Sys,
    payoff: &(dyn Fn(&Sys::State) -> f64 + Sync),
    policy: &dyn DriftPolicy<Sys::State>,
    cv: ControlVariate<'_, Sys::State>,
    batch: &BrownianBatch,
    workers: usize,
) -> Result<ControlValueEstimate> {
    let outs = run_batch_with(
        sys,
        policy,
        cv,
        batch,
        workers,
        |_| (),
        |o, _| {
            if o.aborted {
                None
            } else {
                let v = payoff(&o.terminal) - o.energy;
                Some((v, v - o.control_variate(), o.energy))
            }
        },
    );
    let aborted = outs.iter().filter(|o| o.is_none()).count();
    if aborted as f64 > MAX_ABORTED_FRACTION * batch.paths() as f64 {
        return Err(Error::TooManyAborted {
            aborted,
            paths: batch.paths(),
            limit: (MAX_ABORTED_FRACTION * batch.paths() as f64) as usize,
        });
    }
    let kept: Vec<(f64, f64, f64)> = outs.into_iter().flatten().collect();
    let plain: Vec<f64> = kept.iter().map(|v| v.0).collect();
    let energy: Vec<f64> = kept.iter().map(|v| v.2).collect();
    let controlled = (!cv.is_none()).then(|| {
        let c: Vec<f64> = kept.iter().map(|v| v.1).collect();
        MeanEstimate::from_samples(&c)
    });
    Ok(ControlValueEstimate {
        plain: MeanEstimate::from_samples(&plain),
        controlled,
        energy: MeanEstimate::from_samples(&energy),
        paths: batch.paths(),
        aborted,
        seed: batch.seed(),
        policy: policy.info(),
        grid: batch.grid(),
    })
}

/// A value of log P_T(e^f)(x) and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogPartition {
    pub value: f64,
    pub std_error: f64,
    pub method: &'static str,
}

/// log Q_T(e^f)(x) for a zonal f, from the spectral semigroup.
pub fn log_partition_spectral(
    s: &SpectralSemigroup,
    f: &ZonalFunction,
    horizon: f64,
    x: f64,
) -> Result<LogPartition> {
    let v = semigroup_apply(s, horizon, &f.exp(), x)?;
    if !(v.value > 0.0) {
        return Err(Error::PositivityLoss { x, value: v.value });
    }
    Ok(LogPartition {
        value: v.value.ln(),
        std_error: 0.0,
        method: "spectral",
    })
}

/// log E[e^{f(X_T)}] under zero drift, with the delta-method standard error.
pub fn log_partition_mc<Sys: ControlledSystem>(
    sys: &Sys,
    f: &(dyn Fn(&Sys::State) -> f64 + Sync),
    batch: &BrownianBatch,
    workers: usize,
) -> Result<LogPartition> {
    let zero = crate::stochastics::ZeroPolicy;
    let vals: Vec<f64> = run_batch(sys, &zero, ControlVariate::None, batch, workers)
        .into_iter()
        .filter(|o| !o.aborted)
        .map(|o| f(&o.terminal).exp())
        .collect();
    let m = MeanEstimate::from_samples(&vals);
    let rel = m.relative_error();
    if !(rel <= MAX_PARTITION_RELATIVE_ERROR) {
        return Err(Error::RelativeErrorTooLarge {
            rel,
            limit: MAX_PARTITION_RELATIVE_ERROR,
        });
    }
    Ok(LogPartition {
        value: m.mean.ln(),
        std_error: rel,
        method: "monte-carlo",
    })
}

/// log P_T(e^{⟨a,·⟩})(x) = ⟨a, x⟩ + |a|²T/2 for standard Brownian motion.
pub fn log_partition_gaussian_linear(a: &[f64], x: &[f64], horizon: f64) -> LogPartition {
    let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
    let aa: f64 = a.iter().map(|p| p * p).sum();
    LogPartition {
        value: ax + 0.5 * aa * horizon,
        std_error: 0.0,
        method: "closed-form",
    }
}

/// g(x) = Σ_j w_j exp(⟨m_j, x⟩ − |m_j|²/2) on R^n.
///
/// Under the heat semigroup of standard Brownian motion
/// P_s g(x) = Σ_j w_j exp(⟨m_j, x⟩ + (s − 1)|m_j|²/2), so log P_s g and its
/// derivatives are available in closed form. With weights summing to one, g
/// is the density of Σ w_j N(m_j, I) with respect to γ_n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMixture {
    dim: usize,
    log_weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

impl ExpMixture {
    pub fn new(weights: &[f64], centers: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != centers.len() {
            return Err(Error::InvalidArgument(
                "mixture needs one positive weight per center".into(),
            ));
        }
        let dim = centers[0].len();
        if centers.iter().any(|c| c.len() != dim) || dim == 0 {
            return Err(Error::InvalidArgument(
                "mixture centers must share a dimension".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "mixture weights must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            centers,
        })
    }

    /// x ↦ exp⟨a, x⟩.
    pub fn exp_linear(a: &[f64]) -> Result<Self> {
        let aa: f64 = a.iter().map(|v| v * v).sum();
        Self::new(&[(0.5 * aa).exp()], vec![a.to_vec()])
    }

    /// Density of Σ w_j N(m_j, I) relative to γ_n; weights are normalized.
    pub fn gaussian_mixture_density(weights: &[f64], centers: Vec<Vec<f64>>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|v| v / total).collect();
        Self::new(&w, centers)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    fn exponents(&self, s: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (lw, m) in self.log_weights.iter().zip(&self.centers) {
            let mx: f64 = m.iter().zip(x).map(|(a, b)| a * b).sum();
            let mm: f64 = m.iter().map(|a| a * a).sum();
            out.push(lw + mx + 0.5 * (s - 1.0) * mm);
        }
    }

    /// log P_s g(x); s = 0 gives log g(x).
    pub fn log_heat(&self, s: f64, x: &[f64]) -> f64 {
        let mut e = Vec::with_capacity(self.centers.len());
        self.exponents(s, x, &mut e);
        log_sum_exp(&e)
    }

    pub fn log_eval(&self, x: &[f64]) -> f64 {
        self.log_heat(0.0, x)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.log_eval(x).exp()
    }

    /// ∇ log P_s g(x) into `grad`, and its Hessian (row-major) into `hess`
    /// when given: the mean and covariance of the centers under the
    /// posterior weights.
    pub fn log_heat_derivatives(
        &self,
        s: f64,
        x: &[f64],
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
    ) {
        let mut e = Vec::with_capacity(self.centers.len());
        self.exponents(s, x, &mut e);
        let top = log_sum_exp(&e);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.dim;
        let mut h = hess;
        if let Some(h) = h.as_deref_mut() {
            h.iter_mut().for_each(|v| *v = 0.0);
        }
        for (ej, m) in e.iter().zip(&self.centers) {
            let p = (ej - top).exp();
            for i in 0..d {
                grad[i] += p * m[i];
            }
            if let Some(h) = h.as_deref_mut() {
                for i in 0..d {
                    for j in 0..d {
                        h[i * d + j] += p * m[i] * m[j];
                    }
                }
            }
        }
        if let Some(h) = h {
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] -= grad[i] * grad[j];
                }
            }
        }
    }
}

fn log_sum_exp(e: &[f64]) -> f64 {
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + e.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// The drift ∇ log P_{T−t} g for an [`ExpMixture`] g, with its Hessian as a
/// control variate.
#[derive(Debug, Clone)]
pub struct EuclideanHTransform {
    pub g: ExpMixture,
    pub label: String,
}

impl EuclideanHTransform {
    pub fn new(g: ExpMixture, label: impl Into<String>) -> Self {
        Self {
            g,
            label: label.into(),
        }
    }
}

impl DriftPolicy<Vec<f64>> for EuclideanHTransform {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named(format!("h-transform({})", self.label))
    }

    fn control(&self, at: StepTime, x: &Vec<f64>, out: &mut [f64]) {
        self.g.log_heat_derivatives(at.remaining(), x, out, None);
    }

    fn control_with_hessian(
        &self,
        at: StepTime,
        x: &Vec<f64>,
        out: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        self.g
            .log_heat_derivatives(at.remaining(), x, out, Some(hess));
        true
    }
}

impl MartingaleControl<Vec<f64>> for EuclideanHTransform {
    fn gradient_hessian(
        &self,
        at: StepTime,
        x: &Vec<f64>,
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        self.g
            .log_heat_derivatives(at.remaining(), x, grad, Some(hess));
        true
    }
}

/// h-transform for f(x) = ⟨a, x⟩ on R^n: the constant drift a.
pub fn h_transform_euclidean_linear(a: &[f64]) -> Result<EuclideanHTransform> {
    Ok(EuclideanHTransform::new(
        ExpMixture::exp_linear(a)?,
        format!("linear {a:?}"),
    ))
}

/// Whether a [`ZonalValue`] tracks h = Q_{T−t}g or log h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValueKind {
    Linear,
    Log,
}

/// ψ_k(t) = Q_{T−t_k} g(t) (or its logarithm) for every step of a grid, as
/// truncated spectral series in one coordinate.
///
/// As a policy on S^n it is the pullback Φ*∇ψ(X^i) = ψ'(X^i)·Φ*e_i; on the
/// Jacobi line it is √(1−x²)ψ'(x). Both also serve as martingale control
/// variates, with Riemannian Hessian ψ''∇P_i⊗∇P_i − ψ'P_i·g on the sphere.
#[derive(Debug, Clone)]
pub struct ZonalValue {
    coordinate: usize,
    kind: ValueKind,
    grid: TimeGrid,
    series: Vec<HeatSeries>,
    label: String,
}

impl ZonalValue {
    /// Precomputes the series of Q_{T−t_k} g for k = 0..N, raising the
    /// truncation order when a log value meets a non-positive truncation.
    pub fn new(
        s: &SpectralSemigroup,
        g: &ZonalFunction,
        coordinate: usize,
        grid: TimeGrid,
        kind: ValueKind,
    ) -> Result<Self> {
        let mut owned;
        let mut sg = s;
        loop {
            let e = sg.project(g)?;
            let series: Vec<HeatSeries> = (0..=grid.steps())
                .map(|k| e.at_time(grid.horizon() - grid.time(k)))
                .collect();
            let bad = (kind == ValueKind::Log)
                .then(|| first_nonpositive(&series))
                .flatten();
            match bad {
                None => {
                    return Ok(Self {
                        coordinate,
                        kind,
                        grid,
                        series,
                        label: g.label().to_string(),
                    })
                }
                Some((x, value)) if sg.order() >= MAX_ORDER => {
                    return Err(Error::PositivityLoss { x, value })
                }
                Some(_) => {
                    let k = (sg.order() * 2).min(MAX_ORDER);
                    owned = SpectralSemigroup::new(s.n(), k, 2 * k)?;
                    sg = &owned;
                }
            }
        }
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    /// (ψ, ψ', ψ'') at step k and coordinate value x.
    #[inline]
    pub fn derivatives(&self, k: usize, x: f64) -> [f64; 3] {
        let [h, d, dd] = self.series[k.min(self.series.len() - 1)].eval(x);
        match self.kind {
            ValueKind::Linear => [h, d, dd],
            ValueKind::Log => {
                let r = d / h;
                [h.ln(), r, dd / h - r * r]
            }
        }
    }

    #[inline]
    fn step_index(&self, at: StepTime) -> usize {
        debug_assert!(
            (at.dt - self.grid.dt()).abs() <= 1e-12 * self.grid.dt(),
            "value built for a different grid"
        );
        at.index
    }
}

fn first_nonpositive(series: &[HeatSeries]) -> Option<(f64, f64)> {
    for s in series {
        for j in 0..=200 {
            let x = -1.0 + j as f64 / 100.0;
            let v = s.eval(x)[0];
            if !(v > 0.0) {
                return Some((x, v));
            }
        }
    }
    None
}

impl DriftPolicy<SphereFrame> for ZonalValue {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named(format!("h-transform({})", self.label))
            .with("coordinate", self.coordinate as f64)
    }

    #[inline]
    fn control(&self, at: StepTime, frame: &SphereFrame, out: &mut [f64]) {
        let xi = frame.base().coords()[self.coordinate];
        let [_, d, _] = self.derivatives(self.step_index(at), xi);
        frame.coordinate_row(self.coordinate, out);
        out.iter_mut().for_each(|o| *o *= d);
    }

    fn control_with_hessian(
        &self,
        at: StepTime,
        frame: &SphereFrame,
        out: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        self.gradient_hessian(at, frame, out, hess)
    }
}

impl MartingaleControl<SphereFrame> for ZonalValue {
    fn gradient_hessian(
        &self,
        at: StepTime,
        frame: &SphereFrame,
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        let xi = frame.base().coords()[self.coordinate];
        let [_, d, dd] = self.derivatives(self.step_index(at), xi);
        frame.coordinate_row(self.coordinate, grad);
        let n = grad.len();
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = dd * grad[i] * grad[j];
            }
            hess[i * n + i] -= d * xi;
        }
        grad.iter_mut().for_each(|g| *g *= d);
        true
    }
}

impl DriftPolicy<f64> for ZonalValue {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named(format!("h-transform({})", self.label))
    }

    #[inline]
    fn control(&self, at: StepTime, x: &f64, out: &mut [f64]) {
        let s = (1.0 - x * x).max(0.0).sqrt();
        out[0] = s * self.derivatives(self.step_index(at), *x)[1];
    }

    fn control_with_hessian(
        &self,
        at: StepTime,
        x: &f64,
        out: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        self.gradient_hessian(at, x, out, hess)
    }
}

impl MartingaleControl<f64> for ZonalValue {
    fn gradient_hessian(&self, at: StepTime, x: &f64, grad: &mut [f64], hess: &mut [f64]) -> bool {
        let s2 = (1.0 - x * x).max(0.0);
        let [_, d, dd] = self.derivatives(self.step_index(at), *x);
        grad[0] = s2.sqrt() * d;
        hess[0] = dd * s2;
        true
    }
}

/// The optimal drift for the zonal payoff f(x) = f̃(x_i) on S^n (or on the
/// Jacobi line): the pullback of ∇ log Q_{T−t}(e^f).
pub fn h_transform_zonal(
    s: &SpectralSemigroup,
    f: &ZonalFunction,
    coordinate: usize,
    grid: TimeGrid,
) -> Result<ZonalValue> {
    ZonalValue::new(s, &f.exp(), coordinate, grid, ValueKind::Log)
}

/// A policy with its optional control variate.
pub struct PolicyCase<'a, S> {
    pub policy: &'a dyn DriftPolicy<S>,
    pub cv: ControlVariate<'a, S>,
}

impl<'a, S> PolicyCase<'a, S> {
    pub fn plain(policy: &'a dyn DriftPolicy<S>) -> Self {
        Self {
            policy,
            cv: ControlVariate::None,
        }
    }

    /// A gradient policy that serves as its own control variate.
    pub fn optimal(policy: &'a dyn DriftPolicy<S>) -> Self {
        Self {
            policy,
            cv: ControlVariate::Policy,
        }
    }
}

/// lhs − rhs for one policy.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalGap {
    pub lhs: LogPartition,
    pub rhs: ControlValueEstimate,
    pub gap: f64,
    pub std_error: f64,
}

impl VariationalGap {
    pub fn new(lhs: LogPartition, rhs: ControlValueEstimate) -> Self {
        let best = rhs.best();
        Self {
            gap: lhs.value - best.mean,
            std_error: lhs.std_error.hypot(best.std_error),
            lhs,
            rhs,
        }
    }

    /// gap ≥ −k·s.e.
    pub fn one_sided_ok(&self, k: f64) -> bool {
        self.gap >= -k * self.std_error
    }
}

/// Control values of every case over the same Brownian batch, compared with
/// `lhs`.
pub fn verify_variational<Sys: ControlledSystem>(
    sys: &Sys,
    payoff: &(dyn Fn(&Sys::State) -> f64 + Sync),
    lhs: LogPartition,
    cases: &[PolicyCase<'_, Sys::State>],
    batch: &BrownianBatch,
    workers: usize,
) -> Result<Vec<VariationalGap>> {
    cases
        .iter()
        .map(|c| {
            estimate_control_value(sys, payoff, c.policy, c.cv, batch, workers)
                .map(|rhs| VariationalGap::new(lhs, rhs))
        })
        .collect()
}

/// A functional of a discretized path, given as the flattened (N+1) × n
/// array of its values.
pub type PathFunctional = dyn Fn(&[f64], usize) -> f64 + Sync + Send;

/// The two sides of E[D_T H(B+U)] = E[H(B)].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GirsanovCheck {
    pub weighted: MeanEstimate,
    pub plain: MeanEstimate,
    pub difference: f64,
    pub std_error: f64,
}

struct FlatPath(Vec<f64>);

impl StepVisitor<Vec<f64>> for FlatPath {
    fn visit(&mut self, _: StepTime, x: &Vec<f64>, _: Option<(&[f64], &[f64])>) {
        self.0.extend_from_slice(x);
    }
}

/// Reweights paths of B+U by the Girsanov density and compares with plain
/// Brownian paths from an independent seed, for each functional.
pub fn girsanov_identity_check(
    policy: &dyn DriftPolicy<Vec<f64>>,
    functionals: &[&PathFunctional],
    grid: TimeGrid,
    dim: usize,
    paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<GirsanovCheck>> {
    let sys = EuclideanSystem {
        model: EuclideanModel::brownian(dim),
        x0: vec![0.0; dim],
    };
    let tilted = sample_brownian(grid, dim, paths, seed)?;
    let reference = sample_brownian(grid, dim, paths, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let cap = (grid.steps() + 1) * dim;
    let eval =
        |b: &BrownianBatch, pol: &dyn DriftPolicy<Vec<f64>>, weighted: bool| -> Vec<Vec<f64>> {
            run_batch_with(
                &sys,
                pol,
                ControlVariate::None,
                b,
                workers,
                |_| FlatPath(Vec::with_capacity(cap)),
                |o, path| {
                    let w = if weighted { o.log_weight().exp() } else { 1.0 };
                    functionals.iter().map(|h| w * h(&path.0, dim)).collect()
                },
            )
        };
    let a = eval(&tilted, policy, true);
    let b = eval(&reference, &crate::stochastics::ZeroPolicy, false);
    Ok((0..functionals.len())
        .map(|j| {
            let wa: Vec<f64> = a.iter().map(|r| r[j]).collect();
            let pb: Vec<f64> = b.iter().map(|r| r[j]).collect();
            let weighted = MeanEstimate::from_samples(&wa);
            let plain = MeanEstimate::from_samples(&pb);
            GirsanovCheck {
                weighted,
                plain,
                difference: weighted.mean - plain.mean,
                std_error: combined_std_error(&weighted, &plain),
            }
        })
        .collect())
}
