//! The Brascamp–Lieb inequality on S^n,
//! ∫ ∏ g_i(x_i) dσ_n ≤ ∏ (∫ g_i(x_i)² dσ_n)^{1/2},
//! with a Monte Carlo left side, a quadrature right side, the frame lemma
//! Σ⟨θ^i, y⟩² ≤ 2|y|² and the per-coordinate drift decomposition built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{frame_theta, SpherePoint};
use crate::simulate::SpherePath;
use crate::spectral::{gauss_legendre, NuMeasure, ZonalFunction, DEFAULT_QUADRATURE};
use crate::stats::{ks_critical_1pct, ks_statistic, par_map, MeanEstimate};
use crate::stochastics::DriftRealization;

/// Floor applied to the g_i so that they are bounded away from zero.
pub const BL_FLOOR: f64 = 1e-6;
/// Relative rounding slack of the comparison lhs ≤ rhs.
pub const BL_ROUNDING: f64 = 1e-12;
/// Slack of the deterministic energy decomposition bound.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_point(n: usize, rng: &mut ChaCha8Rng) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..=n).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(p) = SpherePoint::new(v) {
            return p;
        }
    }
}

/// `count` i.i.d. uniform points of S^n (normalized Gaussians); point j uses
/// the ChaCha stream (seed, j).
pub fn sample_uniform_sphere(n: usize, count: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    if n < 1 || count < 1 {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 1 and count ≥ 1, got n = {n}, count = {count}"
        )));
    }
    Ok(par_map(count, 0, |j| {
        uniform_point(n, &mut rng_for(seed, j as u64))
    }))
}

/// Coordinate statistics of uniform samples against ν_n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub n: usize,
    pub mean: MeanEstimate,
    pub second_moment: MeanEstimate,
    /// Oracle 1/(n+1).
    pub second_moment_oracle: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
}

/// The first coordinate of `count` uniform points compared with ν_n.
pub fn uniform_marginal_check(n: usize, count: usize, seed: u64) -> Result<MarginalCheck> {
    let pts = sample_uniform_sphere(n, count, seed)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.coords()[0]).collect();
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let cdf = NuMeasure::new(n, DEFAULT_QUADRATURE)?.cdf_table(|_| 1.0, 256);
    Ok(MarginalCheck {
        n,
        mean: MeanEstimate::from_samples(&xs),
        second_moment: MeanEstimate::from_samples(&sq),
        second_moment_oracle: 1.0 / (n + 1) as f64,
        ks_statistic: ks_statistic(&xs, |x| cdf.eval(x)),
        ks_critical: ks_critical_1pct(count),
    })
}

/// Outcome of the frame lemma over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameLemmaReport {
    pub n: usize,
    pub count: usize,
    /// Pairs with Σ⟨θ^i, y⟩² > 2|y|² + 1e-10.
    pub violations: usize,
    /// max Σ⟨θ^i, y⟩² / |y|².
    pub max_ratio: f64,
}

/// Σ_i ⟨θ^i(x), y⟩² for a tangent y at x.
pub fn theta_square_sum(x: &SpherePoint, y: &[f64], fallback: &[f64]) -> f64 {
    frame_theta(x, fallback)
        .iter()
        .map(|t| t.vec.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum()
}

/// The frame lemma on `count` pairs (x uniform, y a Gaussian tangent vector
/// at x). Every 1000th x is a coordinate pole, where one θ^i falls back.
pub fn frame_lemma_check(
    n: usize,
    count: usize,
    seed: u64,
    workers: usize,
) -> Result<FrameLemmaReport> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "sphere dimension must be positive".into(),
        ));
    }
    let rows = par_map(count, workers, |j| {
        let mut rng = rng_for(seed, j as u64);
        let x = if j % 1000 == 999 {
            SpherePoint::pole(n, rng.random_range(0..=n))
        } else {
            uniform_point(n, &mut rng)
        };
        let raw: Vec<f64> = (0..=n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c: f64 = raw.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        let y: Vec<f64> = raw.iter().zip(x.coords()).map(|(a, b)| a - c * b).collect();
        // a unit tangent fallback: first standard vector not parallel to x
        let k = if x.coords()[0].abs() < 0.9 { 0 } else { 1 };
        let mut fb: Vec<f64> = x.coords().iter().map(|v| -x.coords()[k] * v).collect();
        fb[k] += 1.0;
        let r = fb.iter().map(|v| v * v).sum::<f64>().sqrt();
        fb.iter_mut().for_each(|v| *v /= r);
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let s = theta_square_sum(&x, &y, &fb);
        (s > 2.0 * yy + 1e-10, s / yy)
    });
    Ok(FrameLemmaReport {
        n,
        count,
        violations: rows.iter().filter(|r| r.0).count(),
        max_ratio: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Functions g_1..g_{n+1} of the coordinates of S^n.
#[derive(Debug, Clone)]
pub struct BLInstance {
    pub n: usize,
    pub g: Vec<ZonalFunction>,
    /// Declared lower bound of every g_i.
    pub lower_bound: f64,
}

impl BLInstance {
    /// Checks the count and spot-checks g_i ≥ `lower_bound` > 0 on a grid.
    pub fn new(n: usize, g: Vec<ZonalFunction>, lower_bound: f64) -> Result<Self> {
        if g.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: g.len(),
            });
        }
        if !(lower_bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lower bound {lower_bound} must be positive"
            )));
        }
        for gi in &g {
            for j in 0..=200 {
                let t = -1.0 + j as f64 / 100.0;
                let v = gi.eval(t);
                if !(v >= lower_bound) {
                    return Err(Error::InvalidArgument(format!(
                        "{} takes value {v} < {lower_bound} at t = {t}",
                        gi.label()
                    )));
                }
            }
        }
        Ok(Self { n, g, lower_bound })
    }

    /// Non-negative g_i floored at [`BL_FLOOR`].
    pub fn floored(n: usize, g: Vec<ZonalFunction>) -> Result<Self> {
        Self::new(
            n,
            g.iter().map(|gi| gi.floored(BL_FLOOR)).collect(),
            BL_FLOOR,
        )
    }

    /// g_i(t) = e^{a_i t}.
    pub fn exp_tilts(a: &[f64]) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidArgument("need at least two tilts".into()));
        }
        let lower = a
            .iter()
            .map(|v| (-v.abs()).exp())
            .fold(f64::INFINITY, f64::min);
        Self::new(
            a.len() - 1,
            a.iter().map(|v| ZonalFunction::exp_tilt(*v)).collect(),
            lower,
        )
    }

    /// g_i ≡ c.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(n, vec![ZonalFunction::constant(c); n + 1], c)
    }

    /// Random tilts a_i uniform in [−2, 2], reproducible from (seed, index).
    pub fn random_tilts(n: usize, seed: u64, index: u64) -> Result<Self> {
        let mut rng = rng_for(seed, index);
        let a: Vec<f64> = (0..=n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        Self::exp_tilts(&a)
    }

    /// On S², g_1 = g_2 = exp(−200(t² − ½)²) and g_3 ≡ 1. Both bumps peak on
    /// circles that meet where x_3 = 0, so the product keeps mass that the
    /// product of the L¹ norms misses.
    pub fn ridge_bump() -> Result<Self> {
        let bump = ZonalFunction::new("ridge", |t: f64| (-200.0 * (t * t - 0.5).powi(2)).exp());
        Self::floored(2, vec![bump.clone(), bump, ZonalFunction::constant(1.0)])
    }

    /// ∏ g_i(x_i).
    pub fn product(&self, x: &[f64]) -> f64 {
        self.g.iter().zip(x).map(|(g, xi)| g.eval(*xi)).product()
    }
}

/// Monte Carlo ∫ ∏ g_i(x_i) dσ_n over `count` uniform points.
pub fn bl_lhs(inst: &BLInstance, count: usize, seed: u64, workers: usize) -> MeanEstimate {
    let vals = par_map(count, workers, |j| {
        let x = uniform_point(inst.n, &mut rng_for(seed, j as u64));
        inst.product(x.coords())
    });
    MeanEstimate::from_samples(&vals)
}

/// ∫ ∏ g_i(x_i) dσ_n over given points.
pub fn bl_lhs_samples(inst: &BLInstance, points: &[SpherePoint]) -> MeanEstimate {
    let vals: Vec<f64> = points.iter().map(|p| inst.product(p.coords())).collect();
    MeanEstimate::from_samples(&vals)
}

/// The left side on S² by a product rule in (x_3, φ), using that x_3 is
/// uniform on [−1, 1] and independent of the longitude φ.
pub fn bl_lhs_quadrature_s2(inst: &BLInstance, panels: usize) -> Result<f64> {
    if inst.n != 2 {
        return Err(Error::InvalidArgument("the product rule is for S^2".into()));
    }
    let mut tq = (Vec::new(), Vec::new());
    let mut pq = (Vec::new(), Vec::new());
    for p in 0..panels {
        let (a, b) = (
            -1.0 + 2.0 * p as f64 / panels as f64,
            -1.0 + 2.0 * (p + 1) as f64 / panels as f64,
        );
        let r = gauss_legendre(16, a, b);
        tq.0.extend(r.nodes);
        tq.1.extend(r.weights.iter().map(|w| w / 2.0));
        let tau = std::f64::consts::TAU;
        let r = gauss_legendre(
            16,
            tau * p as f64 / panels as f64,
            tau * (p + 1) as f64 / panels as f64,
        );
        pq.0.extend(r.nodes);
        pq.1.extend(r.weights.iter().map(|w| w / tau));
    }
    let mut acc = 0.0;
    for (t, wt) in tq.0.iter().zip(&tq.1) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (ph, wp) in pq.0.iter().zip(&pq.1) {
            acc += wt * wp * inst.product(&[s * ph.cos(), s * ph.sin(), *t]);
        }
    }
    Ok(acc)
}

/// ∏_i (∫ g_i² dν_n)^{1/2}.
pub fn bl_rhs(inst: &BLInstance) -> Result<f64> {
    let nu = NuMeasure::new(inst.n, DEFAULT_QUADRATURE)?;
    let mut out = 1.0;
    for g in &inst.g {
        out *= nu.integrate(|t| g.eval(t).powi(2))?.sqrt();
    }
    Ok(out)
}

/// ∏_i ∫ g_i dν_n, the bound with L¹ in place of L².
pub fn bl_rhs_l1(inst: &BLInstance) -> Result<f64> {
    let nu = NuMeasure::new(inst.n, DEFAULT_QUADRATURE)?;
    let mut out = 1.0;
    for g in &inst.g {
        out *= nu.integrate(|t| g.eval(t))?;
    }
    Ok(out)
}

/// Both sides of the inequality for one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BLReport {
    pub lhs: MeanEstimate,
    pub rhs: f64,
    pub ratio: f64,
    /// lhs ≤ rhs·(1 + 3·relative s.e. + 1e-12).
    pub pass: bool,
    pub rhs_l1: f64,
    /// lhs exceeds the L¹ bound by more than three standard errors.
    pub l1_violated: bool,
}

/// Monte Carlo left side against both right sides.
pub fn bl_verify(inst: &BLInstance, count: usize, seed: u64, workers: usize) -> Result<BLReport> {
    let lhs = bl_lhs(inst, count, seed, workers);
    let rhs = bl_rhs(inst)?;
    let rhs_l1 = bl_rhs_l1(inst)?;
    let rel = if lhs.mean != 0.0 {
        lhs.relative_error()
    } else {
        0.0
    };
    Ok(BLReport {
        lhs,
        rhs,
        ratio: lhs.mean / rhs,
        pass: lhs.mean <= rhs * (1.0 + 3.0 * rel + BL_ROUNDING),
        rhs_l1,
        l1_violated: lhs.mean - 3.0 * lhs.std_error > rhs_l1,
    })
}

/// Per-coordinate drifts u^i_k = ⟨θ^i(X_k), Φ_k u_k⟩ of a controlled path.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDecomposition {
    pub coordinates: Vec<DriftRealization>,
    /// ½‖U^i‖²_H for each coordinate.
    pub energies: Vec<f64>,
    /// ½‖U‖²_H.
    pub energy: f64,
}

impl DriftDecomposition {
    /// Σ_i ‖U^i‖² ≤ 2‖U‖² up to 1e-10.
    pub fn bound_holds(&self) -> bool {
        self.energies.iter().sum::<f64>() <= 2.0 * self.energy + DECOMPOSITION_TOLERANCE
    }

    /// Σ_i ‖U^i‖² / ‖U‖² (0 for a zero drift).
    pub fn ratio(&self) -> f64 {
        if self.energy == 0.0 {
            0.0
        } else {
            self.energies.iter().sum::<f64>() / self.energy
        }
    }
}

/// Splits the drift of a frame-bundle path into its n+1 coordinate drifts,
/// with the first frame column as the fallback direction for θ^i.
pub fn drift_coordinate_decomposition(
    path: &SpherePath,
    drift: &DriftRealization,
) -> Result<DriftDecomposition> {
    let grid = drift.grid();
    if path.grid != grid || path.len() != grid.steps() + 1 {
        return Err(Error::InvalidGrid(
            "path and drift must share a grid".into(),
        ));
    }
    let n = drift.dim();
    let n1 = n + 1;
    let mut rates = vec![Vec::with_capacity(grid.steps()); n1];
    let mut v = vec![0.0; n1];
    for k in 0..grid.steps() {
        let frame = &path.frames[k];
        frame.push_forward(drift.rate(k), &mut v);
        for (i, th) in frame_theta(frame.base(), frame.column(0))
            .iter()
            .enumerate()
        {
            rates[i].push(th.vec.iter().zip(&v).map(|(a, b)| a * b).sum());
        }
    }
    let coordinates = rates
        .into_iter()
        .map(|r| DriftRealization::new(grid, 1, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftDecomposition {
        energies: coordinates.iter().map(|c| c.energy()).collect(),
        coordinates,
        energy: drift.energy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_give_equality() {
        for n in [2, 3, 5] {
            let inst = BLInstance::constant(n, 1.7).unwrap();
            let r = bl_verify(&inst, 500, 1, 1).unwrap();
            let exact = 1.7f64.powi(n as i32 + 1);
            assert!((r.lhs.mean - exact).abs() < 1e-12 * exact);
            assert!((r.rhs - exact).abs() < 1e-12 * exact);
            assert!(r.pass);
        }
    }

    #[test]
    fn rhs_moment_example() {
        let g = vec![
            ZonalFunction::new("t^2+1e-6", |t: f64| t * t + 1e-6),
            ZonalFunction::constant(1.0),
            ZonalFunction::constant(1.0),
        ];
        let inst = BLInstance::new(2, g, 1e-6).unwrap();
        // ∫(t²+ε)² dν_2 = 1/5 + 2ε/3 + ε²
        let e: f64 = 1e-6;
        let want = (0.2 + 2.0 * e / 3.0 + e * e).sqrt();
        assert!((bl_rhs(&inst).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn tilt_lhs_matches_closed_form_on_s2() {
        // E e^{⟨a,x⟩} = sinh|a|/|a| on S²
        let a = [0.7, -1.2, 0.4];
        let inst = BLInstance::exp_tilts(&a).unwrap();
        let r: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let exact = r.sinh() / r;
        assert!((bl_lhs_quadrature_s2(&inst, 8).unwrap() - exact).abs() < 1e-12);
        let mc = bl_lhs(&inst, 40_000, 3, 1);
        assert!((mc.mean - exact).abs() < 3.0 * mc.std_error);
    }

    #[test]
    fn ridge_bump_breaks_the_l1_bound() {
        let inst = BLInstance::ridge_bump().unwrap();
        let lhs = bl_lhs_quadrature_s2(&inst, 64).unwrap();
        assert!(lhs <= bl_rhs(&inst).unwrap());
        assert!(lhs > 1.5 * bl_rhs_l1(&inst).unwrap());
    }

    #[test]
    fn negative_values_are_rejected_without_floor() {
        let g = vec![
            ZonalFunction::linear(1.0),
            ZonalFunction::constant(1.0),
            ZonalFunction::constant(1.0),
        ];
        assert!(BLInstance::new(2, g.clone(), 1e-6).is_err());
        assert!(BLInstance::floored(2, g).is_ok());
    }

    #[test]
    fn frame_lemma_small_batch() {
        for n in [2, 3, 5, 10] {
            let r = frame_lemma_check(n, 3000, 7, 1).unwrap();
            assert_eq!(r.violations, 0);
            assert!(r.max_ratio <= 2.0 + 1e-10 && r.max_ratio > 1.0);
        }
    }

    #[test]
    fn uniform_samples_are_reproducible() {
        let a = sample_uniform_sphere(3, 10, 5).unwrap();
        let b = sample_uniform_sphere(3, 10, 5).unwrap();
        assert_eq!(a, b);
        assert!(sample_uniform_sphere(3, 0, 5).is_err());
    }
}
