//! The coordinate heat semigroup Q_t on [−1, 1] and its stationary law ν_n.
//!
//! One coordinate of Brownian motion on S^n is the Jacobi diffusion with
//! generator L = ½(1−x²)∂² − (n/2)x∂. Its eigenfunctions are the symmetric
//! Jacobi (Gegenbauer) polynomials p_k with parameter α = n/2 − 1, here
//! orthonormal under ν_n(dt) ∝ (1−t²)^α dt, with Lp_k = −λ_k p_k and
//! λ_k = k(k+n−1)/2. Q_t g = Σ e^{−λ_k t} ĝ_k p_k with ĝ_k = ∫ g p_k dν_n.

pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
pub use quadrature::{
    gauss_hermite_probabilists, gauss_jacobi_symmetric, gauss_legendre, GaussRule,
};

pub const DEFAULT_ORDER: usize = 64;
pub const DEFAULT_QUADRATURE: usize = 128;
pub const MAX_ORDER: usize = 256;
/// Tail tolerance e^{−λ_K T}|ĝ_K| for semigroup evaluations.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Interval shrink used when a truncated Q_τ(e^f) loses positivity.
pub const POSITIVITY_MARGIN: f64 = 1e-9;

/// A function of one coordinate, t ∈ [−1, 1].
#[derive(Clone)]
pub struct ZonalFunction {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ZonalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZonalFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl ZonalFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    /// t ↦ a·t.
    pub fn linear(a: f64) -> Self {
        Self::new(format!("{a}*t"), move |t| a * t)
    }

    /// t ↦ e^{a t}.
    pub fn exp_tilt(a: f64) -> Self {
        Self::new(format!("exp({a}*t)"), move |t| (a * t).exp())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// t ↦ e^{f(t)}.
    pub fn exp(&self) -> Self {
        let f = self.f.clone();
        Self::new(format!("exp({})", self.label), move |t| f(t).exp())
    }

    /// t ↦ f(t)².
    pub fn squared(&self) -> Self {
        let f = self.f.clone();
        Self::new(format!("({})^2", self.label), move |t| {
            let v = f(t);
            v * v
        })
    }

    /// t ↦ max(f(t), floor).
    pub fn floored(&self, floor: f64) -> Self {
        let f = self.f.clone();
        Self::new(self.label.clone(), move |t| f(t).max(floor))
    }
}

/// The one-coordinate marginal ν_n of the uniform measure on S^n.
#[derive(Debug, Clone)]
pub struct NuMeasure {
    n: usize,
    rule: GaussRule,
    density_constant: f64,
}

impl NuMeasure {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sphere dimension must be >= 1".into(),
            ));
        }
        let alpha = n as f64 / 2.0 - 1.0;
        let rule = gauss_jacobi_symmetric(alpha, order.max(1));
        // ∫(1−t²)^α dt = ∫_{−π/2}^{π/2} cos^{n−1}θ dθ, an analytic integrand.
        let gl = gauss_legendre(
            64,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
        );
        let mass = gl.integrate(|th| th.cos().powi(n as i32 - 1));
        Ok(Self {
            n,
            rule,
            density_constant: 1.0 / mass,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    /// c_n in ν_n(dt) = c_n (1−t²)^{n/2−1} dt.
    pub fn density_constant(&self) -> f64 {
        self.density_constant
    }

    pub fn density(&self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            return 0.0;
        }
        self.density_constant * (1.0 - t * t).powf(self.n as f64 / 2.0 - 1.0)
    }

    /// ∫ g dν_n; reports the first node where g is not finite.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (t, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let v = g(*t);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "integrand against nu_n".into(),
                    at: *t,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// x ↦ ∫_{−1}^{x} h dν_n for a smooth h, via composite Gauss–Legendre in
    /// θ = asin t.
    pub fn cdf_table(
        &self,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        panels: usize,
    ) -> ZonalCdf {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let gl = gauss_legendre(8, 0.0, 1.0);
        let width = 2.0 * half_pi / panels as f64;
        let integrand =
            |th: f64| self.density_constant * th.cos().powi(self.n as i32 - 1) * h(th.sin());
        let mut cum = Vec::with_capacity(panels + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for p in 0..panels {
            let a = -half_pi + p as f64 * width;
            acc += width * gl.integrate(|s| integrand(a + s * width));
            cum.push(acc);
        }
        ZonalCdf {
            n: self.n,
            density_constant: self.density_constant,
            width,
            cum,
            gl,
            h: Box::new(h),
        }
    }
}

/// Tabulated CDF of h·ν_n on [−1, 1].
pub struct ZonalCdf {
    n: usize,
    density_constant: f64,
    width: f64,
    cum: Vec<f64>,
    gl: GaussRule,
    h: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ZonalCdf {
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.total();
        }
        let th = x.asin();
        let pos = (th + half_pi) / self.width;
        let p = (pos.floor() as usize).min(self.cum.len() - 2);
        let a = -half_pi + p as f64 * self.width;
        let len = th - a;
        let part = len
            * self.gl.integrate(|s| {
                let u = a + s * len;
                self.density_constant * u.cos().powi(self.n as i32 - 1) * (self.h)(u.sin())
            });
        self.cum[p] + part
    }
}

/// ∫ g dν_n with the default rule.
pub fn nu_quadrature(n: usize, g: &ZonalFunction) -> Result<f64> {
    NuMeasure::new(n, DEFAULT_QUADRATURE)?.integrate(|t| g.eval(t))
}

/// Orthonormal eigenbasis of the coordinate semigroup, with a quadrature rule
/// for projections.
#[derive(Debug, Clone)]
pub struct SpectralSemigroup {
    n: usize,
    order: usize,
    sqrt_beta: Arc<[f64]>,
    inv_sqrt_beta: Arc<[f64]>,
    nu: NuMeasure,
    /// p_k(t_j), row k, column j.
    basis_at_nodes: Vec<f64>,
}

impl SpectralSemigroup {
    /// Truncation order `order` (K) with a `quad_order`-point rule; needs
    /// quad_order ≥ K + 1.
    pub fn new(n: usize, order: usize, quad_order: usize) -> Result<Self> {
        if quad_order < order + 1 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {quad_order} must exceed truncation order {order}"
            )));
        }
        let nu = NuMeasure::new(n, quad_order)?;
        let alpha = n as f64 / 2.0 - 1.0;
        let sqrt_beta: Arc<[f64]> = (0..order + 2)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    quadrature::gegenbauer_sqrt_beta(alpha, k)
                }
            })
            .collect::<Vec<_>>()
            .into();
        let inv_sqrt_beta: Arc<[f64]> = sqrt_beta
            .iter()
            .map(|b| if *b == 0.0 { 0.0 } else { 1.0 / b })
            .collect::<Vec<_>>()
            .into();
        let q = nu.rule.len();
        let mut basis_at_nodes = vec![0.0; (order + 1) * q];
        let mut vals = Vec::new();
        for (j, &t) in nu.rule.nodes.iter().enumerate() {
            values_into(&sqrt_beta, order, t, &mut vals);
            for (k, v) in vals.iter().enumerate() {
                basis_at_nodes[k * q + j] = *v;
            }
        }
        Ok(Self {
            n,
            order,
            sqrt_beta,
            inv_sqrt_beta,
            nu,
            basis_at_nodes,
        })
    }

    pub fn with_defaults(n: usize) -> Result<Self> {
        Self::new(n, DEFAULT_ORDER, DEFAULT_QUADRATURE)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nu(&self) -> &NuMeasure {
        &self.nu
    }

    /// λ_k = k(k+n−1)/2.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        eigenvalue(self.n, k)
    }

    /// p_0(x)..p_K(x).
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut v = Vec::new();
        values_into(&self.sqrt_beta, self.order, x, &mut v);
        v
    }

    /// (p_k(x), p_k'(x), p_k''(x)) for k = 0..=K.
    pub fn basis_derivatives(&self, x: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.order + 1);
        let b = &self.sqrt_beta;
        out.push([1.0, 0.0, 0.0]);
        if self.order == 0 {
            return out;
        }
        out.push([x / b[1], 1.0 / b[1], 0.0]);
        for k in 1..self.order {
            let [p, d, s] = out[k];
            let [pm, dm, sm] = out[k - 1];
            out.push([
                (x * p - b[k] * pm) / b[k + 1],
                (p + x * d - b[k] * dm) / b[k + 1],
                (2.0 * d + x * s - b[k] * sm) / b[k + 1],
            ]);
        }
        out
    }

    /// Gram matrix ∫ p_j p_k dν_n under the quadrature.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let q = self.nu.rule.len();
        let w = &self.nu.rule.weights;
        (0..=self.order)
            .map(|j| {
                (0..=self.order)
                    .map(|k| {
                        (0..q)
                            .map(|i| {
                                w[i] * self.basis_at_nodes[j * q + i]
                                    * self.basis_at_nodes[k * q + i]
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// ĝ_k = ∫ g p_k dν_n for k ≤ K.
    pub fn project(&self, g: &ZonalFunction) -> Result<ZonalExpansion> {
        let rule = &self.nu.rule;
        let q = rule.len();
        let mut gw = Vec::with_capacity(q);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = g.eval(*t);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("zonal function {}", g.label()),
                    at: *t,
                });
            }
            gw.push(w * v);
        }
        let coeffs = (0..=self.order)
            .map(|k| {
                self.basis_at_nodes[k * q..(k + 1) * q]
                    .iter()
                    .zip(&gw)
                    .map(|(p, v)| p * v)
                    .sum()
            })
            .collect();
        Ok(ZonalExpansion {
            n: self.n,
            coeffs,
            sqrt_beta: self.sqrt_beta.clone(),
            inv_sqrt_beta: self.inv_sqrt_beta.clone(),
        })
    }

    /// The transition density of one coordinate started at `x0`, relative
    /// to ν_n: k_T(x0, t) = Σ e^{−λ_k T} p_k(x0) p_k(t), read off with
    /// [`ZonalExpansion::at_time`].
    pub fn heat_kernel(&self, x0: f64) -> ZonalExpansion {
        let mut coeffs = Vec::with_capacity(self.order + 1);
        values_into(&self.sqrt_beta, self.order, x0, &mut coeffs);
        ZonalExpansion {
            n: self.n,
            coeffs,
            sqrt_beta: self.sqrt_beta.clone(),
            inv_sqrt_beta: self.inv_sqrt_beta.clone(),
        }
    }
}

fn eigenvalue(n: usize, k: usize) -> f64 {
    let k = k as f64;
    0.5 * k * (k + n as f64 - 1.0)
}

fn values_into(b: &[f64], order: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if order == 0 {
        return;
    }
    out.push(x / b[1]);
    for k in 1..order {
        let v = (x * out[k] - b[k] * out[k - 1]) / b[k + 1];
        out.push(v);
    }
}

/// Spectral coefficients of a zonal function.
#[derive(Debug, Clone)]
pub struct ZonalExpansion {
    n: usize,
    coeffs: Vec<f64>,
    sqrt_beta: Arc<[f64]>,
    inv_sqrt_beta: Arc<[f64]>,
}

impl ZonalExpansion {
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// ∫ g dν_n.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// e^{−λ_K T}|ĝ_K|.
    pub fn tail(&self, time: f64) -> f64 {
        let k = self.order();
        (-eigenvalue(self.n, k) * time).exp() * self.coeffs[k].abs()
    }

    /// The series of Q_T g, with negligible trailing terms dropped.
    pub fn at_time(&self, time: f64) -> HeatSeries {
        let mut c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, g)| (-eigenvalue(self.n, k) * time).exp() * g)
            .collect();
        // p_k, p_k', p_k'' are bounded on [−1, 1] by their values at 1.
        let mut at_one = Vec::new();
        values_into(&self.sqrt_beta, c.len() - 1, 1.0, &mut at_one);
        let bounds: Vec<f64> = at_one
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let kk = (k * k) as f64;
                p.abs() * (1.0 + kk) * (1.0 + kk)
            })
            .collect();
        let scale: f64 = c
            .iter()
            .zip(&bounds)
            .map(|(v, b)| (v * b).abs())
            .fold(0.0, f64::max);
        let mut keep = c.len();
        while keep > 1 && (c[keep - 1] * bounds[keep - 1]).abs() <= 1e-17 * scale {
            keep -= 1;
        }
        c.truncate(keep.max(2).min(c.len()));
        HeatSeries {
            coeffs: c,
            sqrt_beta: self.sqrt_beta.clone(),
            inv_sqrt_beta: self.inv_sqrt_beta.clone(),
        }
    }

    /// Q_T g(x).
    pub fn apply(&self, time: f64, x: f64) -> f64 {
        self.at_time(time).eval(x)[0]
    }
}

/// A finite series Σ c_k p_k.
#[derive(Debug, Clone)]
pub struct HeatSeries {
    coeffs: Vec<f64>,
    sqrt_beta: Arc<[f64]>,
    inv_sqrt_beta: Arc<[f64]>,
}

impl HeatSeries {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// (h(x), h'(x), h''(x)).
    #[inline]
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let c = &self.coeffs;
        let b = &self.sqrt_beta;
        let ib = &self.inv_sqrt_beta;
        let mut acc = [c[0], 0.0, 0.0];
        if c.len() == 1 {
            return acc;
        }
        let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
        let (mut p1, mut d1, mut s1) = (x * ib[1], ib[1], 0.0);
        acc[0] += c[1] * p1;
        acc[1] += c[1] * d1;
        for k in 1..c.len() - 1 {
            let inv = ib[k + 1];
            let p2 = (x * p1 - b[k] * p0) * inv;
            let d2 = (p1 + x * d1 - b[k] * d0) * inv;
            let s2 = (2.0 * d1 + x * s1 - b[k] * s0) * inv;
            let ck = c[k + 1];
            acc[0] += ck * p2;
            acc[1] += ck * d2;
            acc[2] += ck * s2;
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
            s0 = s1;
            s1 = s2;
        }
        acc
    }
}

/// Result of a semigroup evaluation, with the truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupValue {
    pub value: f64,
    pub order: usize,
    pub tail: f64,
    /// Tail below [`TAIL_TOLERANCE`].
    pub converged: bool,
}

/// Q_T g(x), raising the truncation order (up to [`MAX_ORDER`]) until the
/// tail criterion passes.
pub fn semigroup_apply(
    s: &SpectralSemigroup,
    time: f64,
    g: &ZonalFunction,
    x: f64,
) -> Result<SemigroupValue> {
    if time < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {time}")));
    }
    let mut owned;
    let mut sg = s;
    loop {
        let e = sg.project(g)?;
        let tail = e.tail(time);
        let converged = tail < TAIL_TOLERANCE;
        if converged || sg.order() >= MAX_ORDER {
            return Ok(SemigroupValue {
                value: e.apply(time, x),
                order: sg.order(),
                tail,
                converged,
            });
        }
        let k = (sg.order() * 2).min(MAX_ORDER);
        owned = SpectralSemigroup::new(s.n(), k, 2 * k)?;
        sg = &owned;
    }
}

/// d/dx log Q_τ(e^f)(x), by spectral differentiation.
///
/// A non-positive truncated Q_τ(e^f) is retried at a higher order and then
/// at x clamped into [−1+δ, 1−δ] before giving up.
pub fn log_semigroup_gradient(
    s: &SpectralSemigroup,
    tau: f64,
    f: &ZonalFunction,
    x: f64,
) -> Result<f64> {
    let g = f.exp();
    let attempt = |sg: &SpectralSemigroup, x: f64| -> Result<Option<f64>> {
        let [v, d, _] = sg.project(&g)?.at_time(tau).eval(x);
        Ok((v > 0.0).then(|| d / v))
    };
    if let Some(r) = attempt(s, x)? {
        return Ok(r);
    }
    let k = (s.order() * 2).min(MAX_ORDER);
    let bigger = SpectralSemigroup::new(s.n(), k, 2 * k)?;
    if let Some(r) = attempt(&bigger, x)? {
        return Ok(r);
    }
    let xc = x.clamp(-1.0 + POSITIVITY_MARGIN, 1.0 - POSITIVITY_MARGIN);
    if let Some(r) = attempt(&bigger, xc)? {
        return Ok(r);
    }
    let value = bigger.project(&g)?.apply(tau, x);
    Err(Error::PositivityLoss { x, value })
}

/// Central finite difference of log Q_τ(e^f) with step `h`.
pub fn log_semigroup_gradient_fd(
    s: &SpectralSemigroup,
    tau: f64,
    f: &ZonalFunction,
    x: f64,
    h: f64,
) -> Result<f64> {
    let e = s.project(&f.exp())?;
    let up = e.apply(tau, x + h).ln();
    let down = e.apply(tau, x - h).ln();
    Ok((up - down) / (2.0 * h))
}

/// max over a grid of |L p_k + λ_k p_k| for the orthonormal basis element of
/// degree `degree`; degree 1 is the coordinate eigenrelation ΔP_i = −nP_i.
pub fn laplacian_eigen_check(n: usize, degree: usize) -> Result<f64> {
    let s = SpectralSemigroup::new(n, degree.max(1), degree.max(1) + 1)?;
    let lambda = s.eigenvalue(degree);
    let mut worst: f64 = 0.0;
    for j in 0..=200 {
        let x = -1.0 + j as f64 / 100.0;
        let [p, d, dd] = s.basis_derivatives(x)[degree];
        let lp = 0.5 * (1.0 - x * x) * dd - 0.5 * n as f64 * x * d;
        worst = worst.max((lp + lambda * p).abs());
    }
    Ok(worst)
}
