//! Entropy duality: Föllmer samplers in R^n and on S^n, relative entropy and
//! Fisher information, the bridge-law identity and the log-Sobolev checks.
//!
//! For a target μ = f·ref, where ref is the law of the driftless endpoint,
//! the drift u_t = ∇ log P_{T−t} f steers the endpoint to μ with energy
//! ½E∫|u|² = H(μ | ref) = E[log f(Y_T)]. On S^n only zonal f = f̃(x_i) are
//! handled, so that P_{T−t} f comes from the coordinate semigroup.

use std::sync::Arc;

use serde::Serialize;

use crate::control::{ExpMixture, ValueKind, ZonalValue, MAX_ABORTED_FRACTION};
use crate::error::{Error, Result};
use crate::geometry::{SphereFrame, SpherePoint};
use crate::simulate::{
    run_batch_with, run_path, ControlVariate, ControlledSystem, EuclideanModel, EuclideanSystem,
    SphereSystem, StepVisitor,
};
use crate::spectral::{
    gauss_hermite_probabilists, gauss_legendre, semigroup_apply, GaussRule, HeatSeries, NuMeasure,
    SpectralSemigroup, ZonalCdf, ZonalFunction, DEFAULT_QUADRATURE, MAX_ORDER,
};
use crate::stats::{
    combined_std_error, ks_critical_1pct, ks_statistic, normal_cdf, par_chunked_fold, MeanEstimate,
};
use crate::stochastics::{
    sample_brownian, BrownianBatch, DriftPolicy, PolicyInfo, StepTime, TimeGrid, ZeroPolicy,
};

/// Largest tolerated |∫ f d(ref) − 1|.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
/// Entropies down to this negative value are rounding and read as zero.
pub const NEGATIVE_ENTROPY_TOLERANCE: f64 = 1e-10;
/// Slack allowed in the deterministic log-Sobolev comparisons.
pub const ARITHMETIC_TOLERANCE: f64 = 1e-10;
/// Largest tolerated e^{−λ_K T}|p_K(x0)| in a truncated heat kernel.
const KERNEL_TAIL: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Euclidean targets

/// A density f relative to γ_n whose heat extension P_s f can be
/// differentiated in x.
pub trait EuclideanTarget: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    fn log_density(&self, x: &[f64]) -> f64;

    /// ∇ log P_s f(x) into `grad` and, when given, its Hessian (row-major)
    /// into `hess`. Returns false when P_s f(x) is not positive.
    fn log_heat_derivatives(
        &self,
        s: f64,
        x: &[f64],
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
    ) -> bool;

    /// CDF of the first coordinate under μ, when available.
    fn marginal_cdf(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl EuclideanTarget for ExpMixture {
    fn dim(&self) -> usize {
        ExpMixture::dim(self)
    }

    fn label(&self) -> String {
        format!("mixture of {} shifted Gaussians", self.centers().len())
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_eval(x)
    }

    fn log_heat_derivatives(
        &self,
        s: f64,
        x: &[f64],
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
    ) -> bool {
        ExpMixture::log_heat_derivatives(self, s, x, grad, hess);
        grad.iter().all(|g| g.is_finite())
    }

    fn marginal_cdf(&self, x: f64) -> Option<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        Some(
            w.iter()
                .zip(self.centers())
                .map(|(wj, m)| wj * normal_cdf(x - m[0]))
                .sum::<f64>()
                / total,
        )
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density on R given pointwise; P_s f and its derivatives come from
/// Gauss–Hermite quadrature of E f(x + √s Z), differentiated through the
/// Gaussian weight: ∂_x P_s f = E[f(x+√sZ) Z]/√s,
/// ∂²_x P_s f = E[f(x+√sZ)(Z²−1)]/s.
#[derive(Clone)]
pub struct HermiteTarget1D {
    label: String,
    f: ScalarFn,
    rule: GaussRule,
}

impl std::fmt::Debug for HermiteTarget1D {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("HermiteTarget1D")
            .field("label", &self.label)
            .finish()
    }
}

impl HermiteTarget1D {
    /// `f` must be positive with ∫ f dγ_1 = 1.
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        order: usize,
    ) -> Result<Self> {
        let t = Self {
            label: label.into(),
            f: Arc::new(f),
            rule: gauss_hermite_probabilists(order),
        };
        let mass = t.rule.integrate(|z| (t.f)(z));
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "density {} has mass {mass} under the reference",
                t.label
            )));
        }
        Ok(t)
    }

    fn heat(&self, s: f64, x: f64) -> [f64; 3] {
        let r = s.sqrt();
        let mut acc = [0.0; 3];
        for (z, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let v = w * (self.f)(x + r * z);
            acc[0] += v;
            acc[1] += v * z;
            acc[2] += v * (z * z - 1.0);
        }
        [acc[0], acc[1] / r, acc[2] / s]
    }
}

impl EuclideanTarget for HermiteTarget1D {
    fn dim(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x[0]).ln()
    }

    fn log_heat_derivatives(
        &self,
        s: f64,
        x: &[f64],
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
    ) -> bool {
        if s <= 0.0 {
            let h = 1e-4;
            let l = |y: f64| (self.f)(y).ln();
            let (lm, l0, lp) = (l(x[0] - h), l(x[0]), l(x[0] + h));
            grad[0] = (lp - lm) / (2.0 * h);
            if let Some(hs) = hess {
                hs[0] = (lp - 2.0 * l0 + lm) / (h * h);
            }
            return l0.is_finite() && grad[0].is_finite();
        }
        let [v, d, dd] = self.heat(s, x[0]);
        if !(v > 0.0) {
            grad[0] = f64::NAN;
            return false;
        }
        grad[0] = d / v;
        if let Some(hs) = hess {
            hs[0] = dd / v - grad[0] * grad[0];
        }
        true
    }

    fn marginal_cdf(&self, x: f64) -> Option<f64> {
        let lo = -14.0;
        if x <= lo {
            return Some(0.0);
        }
        let gl = gauss_legendre(128, lo, x.min(14.0));
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        Some(gl.integrate(|z| (self.f)(z) * phi(z)).min(1.0))
    }
}

/// The Föllmer drift ∇ log P_{1−t} f for a Euclidean target.
pub struct FollmerDrift<'a> {
    pub target: &'a dyn EuclideanTarget,
}

impl DriftPolicy<Vec<f64>> for FollmerDrift<'_> {
    fn info(&self) -> PolicyInfo {
        PolicyInfo::named(format!("follmer({})", self.target.label()))
    }

    fn control(&self, at: StepTime, x: &Vec<f64>, out: &mut [f64]) {
        if !self
            .target
            .log_heat_derivatives(at.remaining(), x, out, None)
        {
            out.iter_mut().for_each(|o| *o = f64::NAN);
        }
    }

    fn control_with_hessian(
        &self,
        at: StepTime,
        x: &Vec<f64>,
        out: &mut [f64],
        hess: &mut [f64],
    ) -> bool {
        if !self
            .target
            .log_heat_derivatives(at.remaining(), x, out, Some(hess))
        {
            out.iter_mut().for_each(|o| *o = f64::NAN);
        }
        true
    }
}

/// E g(Z) for Z ~ γ_dim by a tensor Gauss–Hermite rule.
pub fn gaussian_expectation(dim: usize, order: usize, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let rule = gauss_hermite_probabilists(order);
    let q = rule.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            x[d] = rule.nodes[i];
            w *= rule.weights[i];
        }
        acc += w * g(&x);
        let mut d = 0;
        loop {
            if d == dim {
                return acc;
            }
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn hermite_order(dim: usize) -> Result<usize> {
    match dim {
        1 => Ok(96),
        2 => Ok(48),
        3 => Ok(24),
        _ => Err(Error::InvalidArgument(format!(
            "quadrature oracles cover dimensions 1 to 3, not {dim}"
        ))),
    }
}

/// Deterministic integrals of a Euclidean target against γ_n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EuclideanOracle {
    pub mass: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// E_μ[x_1^k] for k = 1..=4.
    pub moments: [f64; 4],
}

pub fn euclidean_oracle(target: &dyn EuclideanTarget) -> Result<EuclideanOracle> {
    let dim = target.dim();
    let q = hermite_order(dim)?;
    let mut grad = vec![0.0; dim];
    let mut integrals = [0.0; 7];
    for (j, slot) in integrals.iter_mut().enumerate() {
        *slot = gaussian_expectation(dim, q, |x| {
            let lf = target.log_density(x);
            let f = lf.exp();
            match j {
                0 => f,
                1 => {
                    if f > 0.0 {
                        f * lf
                    } else {
                        0.0
                    }
                }
                2 => {
                    target.log_heat_derivatives(0.0, x, &mut grad, None);
                    f * grad.iter().map(|g| g * g).sum::<f64>()
                }
                k => f * x[0].powi(k as i32 - 2),
            }
        });
    }
    if (integrals[0] - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "target {} has mass {} under γ_{dim}",
            target.label(),
            integrals[0]
        )));
    }
    Ok(EuclideanOracle {
        mass: integrals[0],
        entropy: checked_entropy(integrals[1])?,
        fisher: integrals[2].max(0.0),
        moments: [integrals[3], integrals[4], integrals[5], integrals[6]],
    })
}

fn checked_entropy(h: f64) -> Result<f64> {
    if h < -NEGATIVE_ENTROPY_TOLERANCE {
        Err(Error::NegativeEntropy(h))
    } else {
        Ok(h.max(0.0))
    }
}

// ---------------------------------------------------------------------------
// Zonal targets on S^n

/// What the density of a [`ZonalTarget`] is taken relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SphereReference {
    /// f = q / Q_T q(x0): μ is the q-tilt of δ_xP_T.
    FiniteHorizon,
    /// μ = ρ·m with ρ = q/∫q dν_n, m uniform; f = ρ / k_T(x0, ·). Needs
    /// x0 at the pole of the coordinate, where k_T(x0, ·) is zonal.
    Uniform,
}

/// A zonal target f(y) = f̃(y_i) relative to δ_xP_T on S^n.
#[derive(Clone)]
pub struct ZonalTarget {
    n: usize,
    coordinate: usize,
    start: f64,
    horizon: f64,
    reference: SphereReference,
    label: String,
    density: ZonalFunction,
    density_series: HeatSeries,
    kernel: HeatSeries,
    semigroup: SpectralSemigroup,
    lower_bound: f64,
    lipschitz: f64,
    reference_error: f64,
}

impl std::fmt::Debug for ZonalTarget {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ZonalTarget")
            .field("n", &self.n)
            .field("coordinate", &self.coordinate)
            .field("start", &self.start)
            .field("horizon", &self.horizon)
            .field("reference", &self.reference)
            .field("label", &self.label)
            .finish()
    }
}

/// The heat kernel k_T(x0, ·) as a series, raising the order until its tail
/// is negligible. Returns the semigroup that was used.
fn kernel_series(
    s: &SpectralSemigroup,
    x0: f64,
    horizon: f64,
) -> Result<(SpectralSemigroup, HeatSeries)> {
    let mut sg = s.clone();
    loop {
        let e = sg.heat_kernel(x0);
        if e.tail(horizon) < KERNEL_TAIL || sg.order() >= MAX_ORDER {
            return Ok((sg.clone(), e.at_time(horizon)));
        }
        let k = (sg.order() * 2).min(MAX_ORDER);
        sg = SpectralSemigroup::new(s.n(), k, 2 * k)?;
    }
}

impl ZonalTarget {
    /// μ = (q / Q_T q(x0))·δ_xP_T for a positive shape q of coordinate i.
    pub fn finite_horizon(
        s: &SpectralSemigroup,
        shape: &ZonalFunction,
        coordinate: usize,
        start: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_start(start, horizon)?;
        let (sg, kernel) = kernel_series(s, start, horizon)?;
        let z = semigroup_apply(&sg, horizon, shape, start)?.value;
        if !(z > 0.0) {
            return Err(Error::PositivityLoss { x: start, value: z });
        }
        let q = shape.clone();
        let density =
            ZonalFunction::new(format!("{}/{z:.6}", shape.label()), move |t| q.eval(t) / z);
        Self::build(
            sg,
            density,
            kernel,
            coordinate,
            start,
            horizon,
            SphereReference::FiniteHorizon,
            shape.label(),
        )
    }

    /// μ = ρ·m with ρ ∝ q, relative to δ_xP_T from the pole of coordinate i.
    pub fn uniform(
        s: &SpectralSemigroup,
        shape: &ZonalFunction,
        coordinate: usize,
        horizon: f64,
    ) -> Result<Self> {
        check_start(1.0, horizon)?;
        let (sg, kernel) = kernel_series(s, 1.0, horizon)?;
        let mass = sg.nu().integrate(|t| shape.eval(t))?;
        if !(mass > 0.0) {
            return Err(Error::PositivityLoss {
                x: 1.0,
                value: mass,
            });
        }
        let q = shape.clone();
        let k = kernel.clone();
        let density = ZonalFunction::new(format!("{}/k_T", shape.label()), move |t| {
            q.eval(t) / mass / k.eval(t)[0]
        });
        Self::build(
            sg,
            density,
            kernel,
            coordinate,
            1.0,
            horizon,
            SphereReference::Uniform,
            shape.label(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        semigroup: SpectralSemigroup,
        density: ZonalFunction,
        kernel: HeatSeries,
        coordinate: usize,
        start: f64,
        horizon: f64,
        reference: SphereReference,
        label: &str,
    ) -> Result<Self> {
        let density_series = semigroup.project(&density)?.at_time(0.0);
        let mut lower_bound = f64::INFINITY;
        let mut lipschitz: f64 = 0.0;
        let mut reference_error: f64 = 0.0;
        for j in 0..=400 {
            let t = -1.0 + j as f64 / 200.0;
            let v = density.eval(t);
            lower_bound = lower_bound.min(v);
            let d = density_series.eval(t)[1];
            lipschitz = lipschitz.max((1.0 - t * t).max(0.0).sqrt() * d.abs());
            reference_error = reference_error.max((kernel.eval(t)[0] - 1.0).abs());
        }
        if !(lower_bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "target density {label} is not bounded away from zero (min {lower_bound:e})"
            )));
        }
        let t = Self {
            n: semigroup.n(),
            coordinate,
            start,
            horizon,
            reference,
            label: label.to_string(),
            density,
            density_series,
            kernel,
            semigroup,
            lower_bound,
            lipschitz,
            reference_error,
        };
        let mass = t.law_integral(|_, _| 1.0)?;
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "target density {label} has mass {mass} under the reference"
            )));
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    /// x0 = x_i of the starting point.
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn reference(&self) -> SphereReference {
        self.reference
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// min of f̃ on a grid of [−1, 1].
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// max of |∇f| = √(1−t²)|f̃'| on a grid.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// sup_t |k_T(x0, t) − 1|: how far δ_xP_T is from the uniform measure.
    pub fn reference_error(&self) -> f64 {
        self.reference_error
    }

    pub fn density(&self, t: f64) -> f64 {
        self.density.eval(t)
    }

    pub fn density_function(&self) -> &ZonalFunction {
        &self.density
    }

    /// d/dt log f̃(t), by spectral differentiation.
    pub fn log_density_derivative(&self, t: f64) -> f64 {
        let [h, d, _] = self.density_series.eval(t);
        d / h
    }

    /// k_T(x0, t): density of Y_T^i under the reference, relative to ν_n.
    pub fn reference_kernel(&self, t: f64) -> f64 {
        self.kernel.eval(t)[0]
    }

    /// Density of Y_T^i under μ, relative to ν_n.
    pub fn law_density(&self, t: f64) -> f64 {
        self.density(t) * self.reference_kernel(t)
    }

    /// ∫ g(t, f̃(t)) f̃(t) k_T(x0, t) ν_n(dt).
    fn law_integral(&self, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let nu = NuMeasure::new(self.n, DEFAULT_QUADRATURE)?;
        nu.integrate(|t| {
            let f = self.density(t);
            g(t, f) * f * self.reference_kernel(t)
        })
    }

    /// H(μ | δ_xP_T) = ∫ f̃ log f̃ k_T dν_n.
    pub fn entropy(&self) -> Result<f64> {
        checked_entropy(self.law_integral(|_, f| f.ln())?)
    }

    /// I(μ | δ_xP_T) = ∫ (1−t²)(log f̃)'² dμ̃.
    pub fn fisher(&self) -> Result<f64> {
        self.law_integral(|t, _| {
            let d = self.log_density_derivative(t);
            (1.0 - t * t) * d * d
        })
    }

    /// E_μ[(Y_T^i)^k].
    pub fn moment(&self, k: i32) -> Result<f64> {
        self.law_integral(|t, _| t.powi(k))
    }

    /// CDF of Y_T^i under μ.
    pub fn law_cdf(&self) -> Result<ZonalCdf> {
        let nu = NuMeasure::new(self.n, DEFAULT_QUADRATURE)?;
        let d = self.density.clone();
        let k = self.kernel.clone();
        Ok(nu.cdf_table(move |t| d.eval(t) * k.eval(t)[0], 256))
    }

    /// C_T = ΔP_T f(x), with Δ the Laplace–Beltrami operator; for a zonal
    /// function Δh = (1−x²)h'' − n x h'.
    pub fn laplacian_at_start(&self) -> Result<f64> {
        let [_, d, dd] = self
            .semigroup
            .project(&self.density)?
            .at_time(self.horizon)
            .eval(self.start);
        let x = self.start;
        Ok((1.0 - x * x) * dd - self.n as f64 * x * d)
    }

    /// The Föllmer drift ∇ log Q_{T−t} f̃ on `grid`.
    pub fn drift(&self, grid: TimeGrid) -> Result<ZonalValue> {
        if (grid.horizon() - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::InvalidGrid(format!(
                "grid horizon {} differs from the target horizon {}",
                grid.horizon(),
                self.horizon
            )));
        }
        ZonalValue::new(
            &self.semigroup,
            &self.density,
            self.coordinate,
            grid,
            ValueKind::Log,
        )
    }

    /// A frame whose base point has x_i = start, the remaining mass on the
    /// next axis.
    pub fn start_frame(&self) -> Result<SphereFrame> {
        let mut c = vec![0.0; self.n + 1];
        c[self.coordinate] = self.start;
        c[(self.coordinate + 1) % (self.n + 1)] = (1.0 - self.start * self.start).max(0.0).sqrt();
        Ok(SphereFrame::standard_at(SpherePoint::new(c)?))
    }
}

fn check_start(start: f64, horizon: f64) -> Result<()> {
    if !(start.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "start coordinate {start} outside [-1, 1]"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be positive"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entropy and Fisher information

/// A target and the reference it is a density against.
#[derive(Clone, Copy)]
pub enum TargetDensity<'a> {
    /// Relative to γ_n.
    Euclidean(&'a dyn EuclideanTarget),
    /// Relative to δ_xP_T on S^n.
    Sphere(&'a ZonalTarget),
}

/// H(μ | ref) by quadrature; errors on a result below −1e-10.
pub fn relative_entropy(target: TargetDensity<'_>) -> Result<f64> {
    match target {
        TargetDensity::Euclidean(t) => Ok(euclidean_oracle(t)?.entropy),
        TargetDensity::Sphere(t) => t.entropy(),
    }
}

/// I(μ | ref) = ∫ |∇ log f|² dμ by quadrature.
pub fn fisher_information(target: TargetDensity<'_>) -> Result<f64> {
    match target {
        TargetDensity::Euclidean(t) => Ok(euclidean_oracle(t)?.fisher),
        TargetDensity::Sphere(t) => t.fisher(),
    }
}

// ---------------------------------------------------------------------------
// Samplers

/// A sample moment of the terminal coordinate against its oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub order: i32,
    pub sample: MeanEstimate,
    pub oracle: f64,
}

/// Energy, entropy and terminal-law diagnostics of a Föllmer run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    /// H(μ | ref) from quadrature.
    pub entropy: f64,
    /// ½E‖U‖²_H over the simulated paths.
    pub drift_energy: MeanEstimate,
    /// E[log f(Y_T)] over the simulated paths.
    pub sample_entropy: MeanEstimate,
    /// I(μ | ref) from quadrature.
    pub fisher: f64,
    pub moments: Vec<MomentRow>,
    /// Sup-distance between the empirical and target CDF of the terminal
    /// coordinate, with its 1% critical value.
    pub ks_statistic: Option<f64>,
    pub ks_critical: f64,
    pub paths: usize,
    pub aborted: usize,
}

impl EntropyReport {
    pub fn ks_passes(&self) -> Option<bool> {
        self.ks_statistic.map(|d| d < self.ks_critical)
    }
}

/// Terminal points of a Föllmer run with its report.
#[derive(Debug, Clone)]
pub struct FollmerRun {
    /// Terminal points (coordinates in R^n, or R^{n+1} on the sphere).
    pub terminals: Vec<Vec<f64>>,
    pub report: EntropyReport,
}

/// A functional of the observed scalar path (t_0..t_N).
pub struct PathFunctional {
    pub name: String,
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for PathFunctional {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("PathFunctional")
            .field("name", &self.name)
            .finish()
    }
}

impl PathFunctional {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, path: &[f64]) -> f64 {
        (self.eval)(path)
    }

    /// H ≡ 1.
    pub fn constant() -> Self {
        Self::new("one", |_| 1.0)
    }

    /// 1{w_T > 0}.
    pub fn endpoint_positive() -> Self {
        Self::new("endpoint>0", |w| f64::from(w[w.len() - 1] > 0.0))
    }

    /// 1{w_{T/2} > 0}; needs an even number of steps.
    pub fn midpoint_positive() -> Self {
        Self::new("midpoint>0", |w| f64::from(w[(w.len() - 1) / 2] > 0.0))
    }

    /// max_k w_{t_k}.
    pub fn running_max() -> Self {
        Self::new("running-max", |w| {
            w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
    }

    /// The endpoint, mid-time and running-max functionals.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self::endpoint_positive(),
            Self::midpoint_positive(),
            Self::running_max(),
        ]
    }
}

type Observe<'a, S> = &'a (dyn Fn(&S) -> f64 + Sync);

struct Trace<'a, S> {
    observe: Option<Observe<'a, S>>,
    values: Vec<f64>,
}

impl<S> StepVisitor<S> for Trace<'_, S> {
    #[inline]
    fn visit(&mut self, _: StepTime, state: &S, _: Option<(&[f64], &[f64])>) {
        if let Some(o) = self.observe {
            self.values.push(o(state));
        }
    }
}

struct PathSummary {
    terminal: Vec<f64>,
    energy: f64,
    log_f: f64,
    functionals: Vec<f64>,
}

struct Probes<'a, S> {
    coords: &'a (dyn Fn(&S) -> Vec<f64> + Sync),
    log_f: &'a (dyn Fn(&S) -> f64 + Sync),
    observe: Observe<'a, S>,
    functionals: &'a [PathFunctional],
}

fn sample_paths<Sys: ControlledSystem>(
    sys: &Sys,
    policy: &dyn DriftPolicy<Sys::State>,
    batch: &BrownianBatch,
    workers: usize,
    probes: &Probes<'_, Sys::State>,
) -> Result<(Vec<PathSummary>, usize)> {
    let need_trace = !probes.functionals.is_empty();
    let outs = run_batch_with(
        sys,
        policy,
        ControlVariate::None,
        batch,
        workers,
        |_| Trace {
            observe: need_trace.then_some(probes.observe),
            values: Vec::with_capacity(if need_trace {
                batch.grid().steps() + 1
            } else {
                0
            }),
        },
        |o, tr| {
            (!o.aborted).then(|| PathSummary {
                terminal: (probes.coords)(&o.terminal),
                energy: o.energy,
                log_f: (probes.log_f)(&o.terminal),
                functionals: probes
                    .functionals
                    .iter()
                    .map(|h| h.eval(&tr.values))
                    .collect(),
            })
        },
    );
    let aborted = outs.iter().filter(|o| o.is_none()).count();
    check_aborted(aborted, batch.paths())?;
    Ok((outs.into_iter().flatten().collect(), aborted))
}

fn check_aborted(aborted: usize, paths: usize) -> Result<()> {
    let limit = (MAX_ABORTED_FRACTION * paths as f64) as usize;
    if aborted > limit {
        return Err(Error::TooManyAborted {
            aborted,
            paths,
            limit,
        });
    }
    Ok(())
}

fn summarize(
    samples: &[PathSummary],
    entropy: f64,
    fisher: f64,
    moments: [f64; 4],
    coordinate: usize,
    cdf: Option<&dyn Fn(f64) -> f64>,
    paths: usize,
    aborted: usize,
) -> EntropyReport {
    let energy: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let logf: Vec<f64> = samples.iter().map(|s| s.log_f).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.terminal[coordinate]).collect();
    let moments = (1..=4)
        .map(|k| {
            let v: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
            MomentRow {
                order: k,
                sample: MeanEstimate::from_samples(&v),
                oracle: moments[k as usize - 1],
            }
        })
        .collect();
    EntropyReport {
        entropy,
        drift_energy: MeanEstimate::from_samples(&energy),
        sample_entropy: MeanEstimate::from_samples(&logf),
        fisher,
        moments,
        ks_statistic: cdf.map(|c| ks_statistic(&xs, c)),
        ks_critical: ks_critical_1pct(xs.len()),
        paths,
        aborted,
    }
}

fn check_unit_horizon(grid: &TimeGrid) -> Result<()> {
    if (grid.horizon() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "the Euclidean reference γ_n is the law of B_1; horizon {} given",
            grid.horizon()
        )));
    }
    Ok(())
}

/// Simulates dX = dB + ∇ log P_{1−t} f(X) dt from 0 and reports the energy
/// against H(μ | γ_n).
pub fn follmer_sample_euclidean(
    target: &dyn EuclideanTarget,
    grid: TimeGrid,
    paths: usize,
    seed: u64,
    workers: usize,
) -> Result<FollmerRun> {
    let batch = sample_brownian(grid, target.dim(), paths, seed)?;
    follmer_euclidean_batch(target, &batch, workers)
}

/// [`follmer_sample_euclidean`] on a given Brownian batch.
pub fn follmer_euclidean_batch(
    target: &dyn EuclideanTarget,
    batch: &BrownianBatch,
    workers: usize,
) -> Result<FollmerRun> {
    check_unit_horizon(&batch.grid())?;
    let dim = target.dim();
    if batch.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: batch.dim(),
        });
    }
    let oracle = euclidean_oracle(target)?;
    let sys = EuclideanSystem {
        model: EuclideanModel::brownian(dim),
        x0: vec![0.0; dim],
    };
    let policy = FollmerDrift { target };
    let coords = |x: &Vec<f64>| x.clone();
    let log_f = |x: &Vec<f64>| target.log_density(x);
    let observe = |x: &Vec<f64>| x[0];
    let probes = Probes {
        coords: &coords,
        log_f: &log_f,
        observe: &observe,
        functionals: &[],
    };
    let (samples, aborted) = sample_paths(&sys, &policy, batch, workers, &probes)?;
    let cdf = |x: f64| target.marginal_cdf(x).unwrap_or(f64::NAN);
    let has_cdf = target.marginal_cdf(0.0).is_some();
    let report = summarize(
        &samples,
        oracle.entropy,
        oracle.fisher,
        oracle.moments,
        0,
        has_cdf.then_some(&cdf as &dyn Fn(f64) -> f64),
        batch.paths(),
        aborted,
    );
    Ok(FollmerRun {
        terminals: samples.into_iter().map(|s| s.terminal).collect(),
        report,
    })
}

/// Simulates the lifted Föllmer SDE on O(S^n) from `frame0` and reports the
/// energy against H(μ | δ_xP_T).
pub fn follmer_sample_sphere(
    target: &ZonalTarget,
    frame0: &SphereFrame,
    grid: TimeGrid,
    paths: usize,
    seed: u64,
    workers: usize,
) -> Result<FollmerRun> {
    let batch = sample_brownian(grid, target.n(), paths, seed)?;
    follmer_sphere_batch(target, frame0, &batch, workers)
}

fn check_frame(target: &ZonalTarget, frame0: &SphereFrame) -> Result<()> {
    if frame0.dim() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: target.n(),
            got: frame0.dim(),
        });
    }
    let xi = frame0.base().coords()[target.coordinate()];
    if (xi - target.start()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "frame base has x_i = {xi}, target was built for {}",
            target.start()
        )));
    }
    Ok(())
}

/// [`follmer_sample_sphere`] on a given Brownian batch.
pub fn follmer_sphere_batch(
    target: &ZonalTarget,
    frame0: &SphereFrame,
    batch: &BrownianBatch,
    workers: usize,
) -> Result<FollmerRun> {
    check_frame(target, frame0)?;
    let policy = target.drift(batch.grid())?;
    let sys = SphereSystem {
        frame0: frame0.clone(),
    };
    let i = target.coordinate();
    let coords = |f: &SphereFrame| f.base().coords().to_vec();
    let log_f = |f: &SphereFrame| target.density(f.base().coords()[i]).ln();
    let observe = |f: &SphereFrame| f.base().coords()[i];
    let probes = Probes {
        coords: &coords,
        log_f: &log_f,
        observe: &observe,
        functionals: &[],
    };
    let (samples, aborted) = sample_paths(&sys, &policy, batch, workers, &probes)?;
    let law = target.law_cdf()?;
    let cdf = |x: f64| law.eval(x);
    let moments = [
        target.moment(1)?,
        target.moment(2)?,
        target.moment(3)?,
        target.moment(4)?,
    ];
    let report = summarize(
        &samples,
        target.entropy()?,
        target.fisher()?,
        moments,
        i,
        Some(&cdf),
        batch.paths(),
        aborted,
    );
    Ok(FollmerRun {
        terminals: samples.into_iter().map(|s| s.terminal).collect(),
        report,
    })
}

// ---------------------------------------------------------------------------
// Bridge law

/// E[H(Y)] along Föllmer paths against E[H(X) f(X_T)] along driftless ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeLawRow {
    pub name: String,
    pub follmer: MeanEstimate,
    pub reweighted: MeanEstimate,
    pub combined_std_error: f64,
}

impl BridgeLawRow {
    pub fn difference(&self) -> f64 {
        self.follmer.mean - self.reweighted.mean
    }

    /// |difference| ≤ k combined standard errors.
    pub fn agrees(&self, k: f64) -> bool {
        self.difference().abs() <= k * self.combined_std_error
    }
}

fn bridge_rows<Sys: ControlledSystem>(
    sys: &Sys,
    policy: &dyn DriftPolicy<Sys::State>,
    probes: &Probes<'_, Sys::State>,
    follmer_batch: &BrownianBatch,
    plain_batch: &BrownianBatch,
    workers: usize,
) -> Result<Vec<BridgeLawRow>> {
    let (driven, _) = sample_paths(sys, policy, follmer_batch, workers, probes)?;
    let (plain, _) = sample_paths(sys, &ZeroPolicy, plain_batch, workers, probes)?;
    Ok(probes
        .functionals
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let a: Vec<f64> = driven.iter().map(|s| s.functionals[j]).collect();
            let b: Vec<f64> = plain
                .iter()
                .map(|s| s.functionals[j] * s.log_f.exp())
                .collect();
            let (a, b) = (
                MeanEstimate::from_samples(&a),
                MeanEstimate::from_samples(&b),
            );
            BridgeLawRow {
                name: h.name.clone(),
                follmer: a,
                reweighted: b,
                combined_std_error: combined_std_error(&a, &b),
            }
        })
        .collect())
}

/// Bridge-law identity on S^n, observing the coordinate x_i of the path.
/// The two estimators use the independent seeds `seeds.0` and `seeds.1`.
pub fn bridge_law_check_sphere(
    target: &ZonalTarget,
    frame0: &SphereFrame,
    functionals: &[PathFunctional],
    grid: TimeGrid,
    paths: usize,
    seeds: (u64, u64),
    workers: usize,
) -> Result<Vec<BridgeLawRow>> {
    check_frame(target, frame0)?;
    let policy = target.drift(grid)?;
    let sys = SphereSystem {
        frame0: frame0.clone(),
    };
    let i = target.coordinate();
    let coords = |_: &SphereFrame| Vec::new();
    let log_f = |f: &SphereFrame| target.density(f.base().coords()[i]).ln();
    let observe = |f: &SphereFrame| f.base().coords()[i];
    let probes = Probes {
        coords: &coords,
        log_f: &log_f,
        observe: &observe,
        functionals,
    };
    let a = sample_brownian(grid, target.n(), paths, seeds.0)?;
    let b = sample_brownian(grid, target.n(), paths, seeds.1)?;
    bridge_rows(&sys, &policy, &probes, &a, &b, workers)
}

/// Bridge-law identity in R^n, observing the first coordinate.
pub fn bridge_law_check_euclidean(
    target: &dyn EuclideanTarget,
    functionals: &[PathFunctional],
    grid: TimeGrid,
    paths: usize,
    seeds: (u64, u64),
    workers: usize,
) -> Result<Vec<BridgeLawRow>> {
    check_unit_horizon(&grid)?;
    let dim = target.dim();
    let sys = EuclideanSystem {
        model: EuclideanModel::brownian(dim),
        x0: vec![0.0; dim],
    };
    let policy = FollmerDrift { target };
    let coords = |_: &Vec<f64>| Vec::new();
    let log_f = |x: &Vec<f64>| target.log_density(x);
    let observe = |x: &Vec<f64>| x[0];
    let probes = Probes {
        coords: &coords,
        log_f: &log_f,
        observe: &observe,
        functionals,
    };
    let a = sample_brownian(grid, dim, paths, seeds.0)?;
    let b = sample_brownian(grid, dim, paths, seeds.1)?;
    bridge_rows(&sys, &policy, &probes, &a, &b, workers)
}

// ---------------------------------------------------------------------------
// Constrained drifts

/// A deterministic drift u_t = m·c(t) with Σ c_k dt = 1, which also moves
/// B_1 to N(m, 1); its energy cannot go below H(N(m,1) | γ_1) = m²/2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedDrift {
    pub label: String,
    pub energy: f64,
    pub entropy: f64,
}

impl ConstrainedDrift {
    pub fn respects_bound(&self) -> bool {
        self.energy >= self.entropy - ARITHMETIC_TOLERANCE
    }
}

/// Energies of a few time profiles that all reach N(m, 1) at t = 1.
pub fn shift_drift_zoo(m: f64, grid: TimeGrid) -> Result<Vec<ConstrainedDrift>> {
    check_unit_horizon(&grid)?;
    let profiles: [(&str, fn(f64) -> f64); 5] = [
        ("constant", |_| 1.0),
        ("increasing", |t| 2.0 * t),
        ("quadratic", |t| 3.0 * t * t),
        ("decreasing", |t| 2.0 * (1.0 - t)),
        ("late", |t| if t >= 0.5 { 2.0 } else { 0.0 }),
    ];
    let dt = grid.dt();
    Ok(profiles
        .iter()
        .map(|(label, c)| {
            let raw: Vec<f64> = (0..grid.steps()).map(|k| c(grid.time(k))).collect();
            let total: f64 = raw.iter().sum::<f64>() * dt;
            let energy = 0.5 * m * m * raw.iter().map(|v| (v / total).powi(2)).sum::<f64>() * dt;
            ConstrainedDrift {
                label: label.to_string(),
                energy,
                entropy: 0.5 * m * m,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Log-Sobolev

/// A zonal probability density ρ ∝ e^{ℓ(t)} relative to the uniform
/// measure, with ℓ' given.
#[derive(Clone)]
pub struct ZonalLogDensity {
    pub label: String,
    log_shape: ScalarFn,
    log_shape_derivative: ScalarFn,
}

impl std::fmt::Debug for ZonalLogDensity {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ZonalLogDensity")
            .field("label", &self.label)
            .finish()
    }
}

impl ZonalLogDensity {
    pub fn new(
        label: impl Into<String>,
        log_shape: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_shape_derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            log_shape: Arc::new(log_shape),
            log_shape_derivative: Arc::new(log_shape_derivative),
        }
    }

    /// ρ ∝ e^{a t}.
    pub fn exp_tilt(a: f64) -> Self {
        Self::new(format!("exp({a} t)"), move |t| a * t, move |_| a)
    }
}

/// One row of the log-Sobolev table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogSobolevRow {
    pub n: usize,
    pub kappa: f64,
    pub label: String,
    pub entropy: f64,
    pub fisher: f64,
    /// (n/2) log(1 + I/(nκ)).
    pub rhs_dimensional: f64,
    /// I/κ.
    pub rhs_classical: f64,
    /// H / rhs_dimensional (zero when both vanish).
    pub tightness: f64,
    pub dimensional_holds: bool,
    pub classical_holds: bool,
    /// rhs_dimensional ≤ rhs_classical.
    pub ordered: bool,
}

/// H(μ|m) and I(μ|m) by quadrature against ν_n, and both log-Sobolev forms.
pub fn logsob_check(
    n: usize,
    kappa: f64,
    family: &[ZonalLogDensity],
) -> Result<Vec<LogSobolevRow>> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "curvature bound {kappa} must be positive"
        )));
    }
    let nu = NuMeasure::new(n, DEFAULT_QUADRATURE)?;
    family
        .iter()
        .map(|d| {
            let top = nu
                .rule()
                .nodes
                .iter()
                .map(|t| (d.log_shape)(*t))
                .fold(f64::NEG_INFINITY, f64::max);
            let mass = nu.integrate(|t| ((d.log_shape)(t) - top).exp())?;
            let log_z = top + mass.ln();
            let rho = |t: f64| ((d.log_shape)(t) - log_z).exp();
            let entropy = checked_entropy(nu.integrate(|t| rho(t) * ((d.log_shape)(t) - log_z))?)?;
            let fisher = nu.integrate(|t| {
                let g = (d.log_shape_derivative)(t);
                (1.0 - t * t) * g * g * rho(t)
            })?;
            let nf = n as f64;
            let rhs_dimensional = 0.5 * nf * (fisher / (nf * kappa)).ln_1p();
            let rhs_classical = fisher / kappa;
            Ok(LogSobolevRow {
                n,
                kappa,
                label: d.label.clone(),
                entropy,
                fisher,
                rhs_dimensional,
                rhs_classical,
                tightness: if rhs_dimensional > 0.0 {
                    entropy / rhs_dimensional
                } else {
                    0.0
                },
                dimensional_holds: entropy <= rhs_dimensional + ARITHMETIC_TOLERANCE,
                classical_holds: entropy <= rhs_classical + ARITHMETIC_TOLERANCE,
                ordered: rhs_dimensional <= rhs_classical + ARITHMETIC_TOLERANCE,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// α(t) = E|∇F_t(Y_t)|²

/// α(t_k) along Föllmer paths on S^n with the integrated checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaTrajectory {
    pub times: Vec<f64>,
    /// α(t_k) for k = 0..=N; the last entry is E|∇ log f(Y_T)|².
    pub alpha: Vec<MeanEstimate>,
    /// Σ_{k<N} α(t_k) dt, estimated per path (equals twice the drift energy).
    pub integral: MeanEstimate,
    /// H(μ | δ_xP_T) from quadrature.
    pub entropy: f64,
    /// I(μ | δ_xP_T) from quadrature, the oracle for α(T).
    pub fisher: f64,
    pub kappa: f64,
    /// C_T = ΔP_T f(x).
    pub laplacian_constant: f64,
    /// κ(T) = κ − 2C_T/n.
    pub kappa_t: f64,
    /// n log(1 + α(T)(1 − e^{−κ(T)T})/(nκ(T))) with the measured α(T).
    pub bound: f64,
    pub paths: usize,
    pub aborted: usize,
}

impl AlphaTrajectory {
    /// ∫α dt − 2H.
    pub fn entropy_gap(&self) -> f64 {
        self.integral.mean - 2.0 * self.entropy
    }

    /// ∫α dt ≤ bound, both sides measured.
    pub fn bound_holds(&self) -> bool {
        self.integral.mean <= self.bound
    }
}

struct AlphaVisitor<'a> {
    coordinate: usize,
    target: &'a ZonalTarget,
    values: Vec<f64>,
}

impl StepVisitor<SphereFrame> for AlphaVisitor<'_> {
    fn visit(&mut self, _: StepTime, state: &SphereFrame, step: Option<(&[f64], &[f64])>) {
        match step {
            Some((u, _)) => self.values.push(u.iter().map(|v| v * v).sum()),
            None => {
                let y = state.base().coords()[self.coordinate];
                let d = self.target.log_density_derivative(y);
                self.values.push((1.0 - y * y).max(0.0) * d * d);
            }
        }
    }
}

#[derive(Clone)]
struct AlphaAccumulator {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    integral: f64,
    integral_sq: f64,
    count: usize,
    aborted: usize,
}

impl AlphaAccumulator {
    fn new(len: usize) -> Self {
        Self {
            sum: vec![0.0; len],
            sumsq: vec![0.0; len],
            integral: 0.0,
            integral_sq: 0.0,
            count: 0,
            aborted: 0,
        }
    }

    fn merge(&mut self, o: Self) {
        for k in 0..self.sum.len() {
            self.sum[k] += o.sum[k];
            self.sumsq[k] += o.sumsq[k];
        }
        self.integral += o.integral;
        self.integral_sq += o.integral_sq;
        self.count += o.count;
        self.aborted += o.aborted;
    }
}

fn estimate(sum: f64, sumsq: f64, count: usize) -> MeanEstimate {
    let m = count as f64;
    let mean = sum / m;
    let var = if count > 1 {
        ((sumsq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        std_error: (var / m).sqrt(),
        count,
    }
}

/// Runs the Föllmer sampler for a zonal target on S^n with κ = n − 1 and
/// tracks α(t_k).
pub fn alpha_trajectory(
    target: &ZonalTarget,
    frame0: &SphereFrame,
    grid: TimeGrid,
    paths: usize,
    seed: u64,
    workers: usize,
) -> Result<AlphaTrajectory> {
    let batch = sample_brownian(grid, target.n(), paths, seed)?;
    alpha_trajectory_batch(target, frame0, &batch, workers)
}

/// [`alpha_trajectory`] on a given Brownian batch.
pub fn alpha_trajectory_batch(
    target: &ZonalTarget,
    frame0: &SphereFrame,
    batch: &BrownianBatch,
    workers: usize,
) -> Result<AlphaTrajectory> {
    check_frame(target, frame0)?;
    if batch.dim() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: target.n(),
            got: batch.dim(),
        });
    }
    let grid = batch.grid();
    let paths = batch.paths();
    let n = target.n() as f64;
    let kappa = n - 1.0;
    let c_t = target.laplacian_at_start()?;
    let margin = n * kappa - 2.0 * c_t;
    if !(margin > 0.0) {
        return Err(Error::CurvatureTooSmall(margin));
    }
    let kappa_t = kappa - 2.0 * c_t / n;
    let policy = target.drift(grid)?;
    let sys = SphereSystem {
        frame0: frame0.clone(),
    };
    let len = grid.steps() + 1;
    let acc = par_chunked_fold(
        paths,
        256,
        workers,
        || AlphaAccumulator::new(len),
        |acc, p| {
            let mut v = AlphaVisitor {
                coordinate: target.coordinate(),
                target,
                values: Vec::with_capacity(len),
            };
            let out = run_path(&sys, &policy, ControlVariate::None, batch, p, &mut v);
            if out.aborted {
                acc.aborted += 1;
                return;
            }
            for (k, a) in v.values.iter().enumerate() {
                acc.sum[k] += a;
                acc.sumsq[k] += a * a;
            }
            let integral = 2.0 * out.energy;
            acc.integral += integral;
            acc.integral_sq += integral * integral;
            acc.count += 1;
        },
        |a, b| a.merge(b),
    );
    check_aborted(acc.aborted, paths)?;
    let alpha: Vec<MeanEstimate> = (0..len)
        .map(|k| estimate(acc.sum[k], acc.sumsq[k], acc.count))
        .collect();
    let alpha_t = alpha[len - 1].mean;
    let horizon = grid.horizon();
    let bound = n * (alpha_t * (1.0 - (-kappa_t * horizon).exp()) / (n * kappa_t)).ln_1p();
    Ok(AlphaTrajectory {
        times: (0..len).map(|k| grid.time(k)).collect(),
        alpha,
        integral: estimate(acc.integral, acc.integral_sq, acc.count),
        entropy: target.entropy()?,
        fisher: target.fisher()?,
        kappa,
        laplacian_constant: c_t,
        kappa_t,
        bound,
        paths,
        aborted: acc.aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift(m: f64) -> ExpMixture {
        ExpMixture::gaussian_mixture_density(&[1.0], vec![vec![m]]).unwrap()
    }

    #[test]
    fn gaussian_shift_oracle() {
        for m in [0.0, 0.5, 1.0, 2.0] {
            let o = euclidean_oracle(&shift(m)).unwrap();
            assert!((o.entropy - 0.5 * m * m).abs() < 1e-12, "{m} {}", o.entropy);
            assert!((o.fisher - m * m).abs() < 1e-11);
            assert!((o.moments[0] - m).abs() < 1e-12);
            assert!((o.moments[1] - (1.0 + m * m)).abs() < 1e-11);
        }
    }

    #[test]
    fn hermite_target_matches_mixture() {
        let mix =
            ExpMixture::gaussian_mixture_density(&[0.5, 0.5], vec![vec![-1.0], vec![1.0]]).unwrap();
        let h = HermiteTarget1D::new("cosh", |z: f64| (-0.5f64).exp() * z.cosh(), 96).unwrap();
        let (mut g1, mut g2) = ([0.0], [0.0]);
        let (mut h1, mut h2) = ([0.0], [0.0]);
        for s in [0.001, 0.1, 0.5, 1.0] {
            for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
                EuclideanTarget::log_heat_derivatives(&mix, s, &[x], &mut g1, Some(&mut h1));
                h.log_heat_derivatives(s, &[x], &mut g2, Some(&mut h2));
                assert!((g1[0] - g2[0]).abs() < 1e-9, "s={s} x={x}");
                assert!((h1[0] - h2[0]).abs() < 1e-7, "s={s} x={x}");
            }
        }
        for x in [-1.5, 0.0, 0.4, 2.5] {
            let a = mix.marginal_cdf(x).unwrap();
            let b = h.marginal_cdf(x).unwrap();
            // statrs' erfc is accurate to about 1e-12
            assert!((a - b).abs() < 1e-11, "{a} {b}");
        }
        let (a, b) = (
            euclidean_oracle(&mix).unwrap(),
            euclidean_oracle(&h).unwrap(),
        );
        assert!((a.entropy - b.entropy).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_target_is_rejected() {
        assert!(HermiteTarget1D::new("twice", |_| 2.0, 32).is_err());
        let bad = ExpMixture::new(&[2.0], vec![vec![0.0]]).unwrap();
        assert!(euclidean_oracle(&bad).is_err());
    }

    #[test]
    fn flat_target_has_no_drift_or_energy() {
        let one = shift(0.0);
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let run = follmer_sample_euclidean(&one, grid, 200, 3, 1).unwrap();
        assert_eq!(run.report.drift_energy.mean, 0.0);
        assert_eq!(run.report.entropy, 0.0);
    }

    #[test]
    fn shift_target_energy_is_exact() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let run = follmer_sample_euclidean(&shift(1.0), grid, 100, 5, 1).unwrap();
        assert!((run.report.drift_energy.mean - 0.5).abs() < 1e-12);
        assert!(run.report.drift_energy.std_error < 1e-12);
    }

    #[test]
    fn euclidean_horizon_must_be_one() {
        let grid = TimeGrid::new(2.0, 10).unwrap();
        assert!(follmer_sample_euclidean(&shift(1.0), grid, 10, 1, 1).is_err());
    }

    #[test]
    fn zoo_energies_dominate_entropy() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let zoo = shift_drift_zoo(1.5, grid).unwrap();
        assert!(zoo.iter().all(|z| z.respects_bound()));
        assert!((zoo[0].energy - 1.125).abs() < 1e-12);
        assert!(zoo[1].energy > 1.125 * 1.3);
    }

    #[test]
    fn heat_kernel_is_a_transition_density() {
        let s = SpectralSemigroup::with_defaults(2).unwrap();
        let nu = NuMeasure::new(2, 128).unwrap();
        for (x0, t) in [(1.0, 1.0), (0.0, 0.5), (0.3, 2.0)] {
            let k = s.heat_kernel(x0).at_time(t);
            let mass = nu.integrate(|y| k.eval(y)[0]).unwrap();
            assert!((mass - 1.0).abs() < 1e-12);
            // the first moment decays as e^{−nt/2} x0
            let m1 = nu.integrate(|y| y * k.eval(y)[0]).unwrap();
            assert!((m1 - (-t).exp() * x0).abs() < 1e-12);
        }
    }

    #[test]
    fn zonal_target_invariants() {
        let s = SpectralSemigroup::with_defaults(2).unwrap();
        let t =
            ZonalTarget::finite_horizon(&s, &ZonalFunction::exp_tilt(1.0), 0, 0.0, 2.0).unwrap();
        assert!(t.entropy().unwrap() > 0.0);
        assert!(t.fisher().unwrap() > 0.0);
        assert!(t.lower_bound() > 0.0);
        let flat =
            ZonalTarget::finite_horizon(&s, &ZonalFunction::constant(3.0), 0, 0.4, 1.0).unwrap();
        assert!(flat.entropy().unwrap().abs() < 1e-13);
        assert!(flat.fisher().unwrap().abs() < 1e-20);
        let cdf = t.law_cdf().unwrap();
        assert!((cdf.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn uniform_reference_entropy_approaches_uniform_entropy() {
        // H(μ | δ_xP_T) → H(μ | m) as T grows
        let s = SpectralSemigroup::with_defaults(2).unwrap();
        let rows = logsob_check(2, 1.0, &[ZonalLogDensity::exp_tilt(1.0)]).unwrap();
        let t = ZonalTarget::uniform(&s, &ZonalFunction::exp_tilt(1.0), 0, 12.0).unwrap();
        assert!(t.reference_error() < 1e-4);
        assert!((t.entropy().unwrap() - rows[0].entropy).abs() < 1e-4);
        assert!((t.fisher().unwrap() - rows[0].fisher).abs() < 1e-4);
    }

    #[test]
    fn logsob_rows_for_tilt_on_s2() {
        // ν_2 is uniform on [−1, 1]: Z = sinh(a)/a, H = a coth a − 1 − log(sinh a / a)
        let a: f64 = 1.0;
        let rows = logsob_check(
            2,
            1.0,
            &[ZonalLogDensity::exp_tilt(a), ZonalLogDensity::exp_tilt(0.0)],
        )
        .unwrap();
        let h = a / a.tanh() - 1.0 - (a.sinh() / a).ln();
        assert!((rows[0].entropy - h).abs() < 1e-13);
        assert!(rows[0].dimensional_holds && rows[0].classical_holds && rows[0].ordered);
        assert!(rows[0].entropy < rows[0].rhs_dimensional);
        assert!(rows[1].entropy.abs() < 1e-15);
        assert!(rows[1].fisher.abs() < 1e-14);
    }

    #[test]
    fn flat_sphere_target_has_zero_alpha() {
        let s = SpectralSemigroup::with_defaults(2).unwrap();
        let t =
            ZonalTarget::finite_horizon(&s, &ZonalFunction::constant(1.0), 0, 1.0, 4.0).unwrap();
        let grid = TimeGrid::new(4.0, 40).unwrap();
        let a = alpha_trajectory(&t, &t.start_frame().unwrap(), grid, 20, 1, 1).unwrap();
        assert!(a.alpha.iter().all(|e| e.mean.abs() < 1e-20));
        assert!(a.bound_holds());
    }

    #[test]
    fn constant_functional_bridge() {
        let s = SpectralSemigroup::with_defaults(2).unwrap();
        let t =
            ZonalTarget::finite_horizon(&s, &ZonalFunction::exp_tilt(1.0), 0, 0.0, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let rows = bridge_law_check_sphere(
            &t,
            &t.start_frame().unwrap(),
            &[PathFunctional::constant()],
            grid,
            2000,
            (1, 2),
            1,
        )
        .unwrap();
        assert_eq!(rows[0].follmer.mean, 1.0);
        assert!(rows[0].agrees(3.0), "{rows:?}");
    }
}
