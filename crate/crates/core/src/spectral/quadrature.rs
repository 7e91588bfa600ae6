//! Gauss rules for symmetric weights from their three-term recurrences.
//!
//! Nodes are eigenvalues of the Jacobi matrix, polished by Newton steps on
//! the degree-Q orthonormal polynomial; weights are Christoffel numbers
//! 1/Σ_{k<Q} p_k(t_j)², normalized to total mass one.

use nalgebra::DMatrix;

/// A probability quadrature rule: Σ w_j = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Σ_j w_j g(t_j).
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * g(*t))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Values of the orthonormal polynomials p_0..p_{q} at `x`.
fn ortho_values(x: f64, q: usize, sb: &dyn Fn(usize) -> f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if q == 0 {
        return;
    }
    out.push(x / sb(1));
    for k in 1..q {
        let next = (x * out[k] - sb(k) * out[k - 1]) / sb(k + 1);
        out.push(next);
    }
}

/// Gauss rule of order `q` for the symmetric measure with recurrence `sb`.
pub(crate) fn gauss_rule(q: usize, sb: &dyn Fn(usize) -> f64) -> GaussRule {
    assert!(q >= 1, "quadrature order must be positive");
    let mut jm = DMatrix::<f64>::zeros(q, q);
    for k in 1..q {
        let b = sb(k);
        jm[(k - 1, k)] = b;
        jm[(k, k - 1)] = b;
    }
    let mut nodes: Vec<f64> = jm.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut vals = Vec::with_capacity(q + 1);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            // p_q and p_q' via the recurrence
            let (mut p0, mut p1) = (1.0, *t / sb(1));
            let (mut d0, mut d1) = (0.0, 1.0 / sb(1));
            if q == 1 {
                let step = p1 / d1;
                *t -= step;
                continue;
            }
            for k in 1..q {
                let p2 = (*t * p1 - sb(k) * p0) / sb(k + 1);
                let d2 = (p1 + *t * d1 - sb(k) * d0) / sb(k + 1);
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            if d1 != 0.0 && d1.is_finite() && p1.is_finite() {
                let step = p1 / d1;
                if step.abs() < 1e-6 {
                    *t -= step;
                }
            }
        }
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            ortho_values(t, q - 1, sb, &mut vals);
            1.0 / vals.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GaussRule { nodes, weights }
}

/// √β_k for the probability measure ∝ (1−t²)^α on [−1, 1].
pub fn gegenbauer_sqrt_beta(alpha: f64, k: usize) -> f64 {
    if k == 1 {
        return (1.0 / (2.0 * alpha + 3.0)).sqrt();
    }
    let k = k as f64;
    let s = 2.0 * k + 2.0 * alpha;
    (k * (k + 2.0 * alpha) / ((s + 1.0) * (s - 1.0))).sqrt()
}

/// Gauss–Jacobi rule for (1−t²)^α, normalized to a probability measure.
pub fn gauss_jacobi_symmetric(alpha: f64, q: usize) -> GaussRule {
    gauss_rule(q, &|k| gegenbauer_sqrt_beta(alpha, k))
}

/// Gauss–Hermite rule for the standard normal law.
pub fn gauss_hermite_probabilists(q: usize) -> GaussRule {
    gauss_rule(q, &|k| (k as f64).sqrt())
}

/// Gauss–Legendre rule on [a, b] with weights summing to b − a.
pub fn gauss_legendre(q: usize, a: f64, b: f64) -> GaussRule {
    let r = gauss_jacobi_symmetric(0.0, q);
    let h = 0.5 * (b - a);
    GaussRule {
        nodes: r.nodes.iter().map(|t| a + h * (t + 1.0)).collect(),
        weights: r.weights.iter().map(|w| 2.0 * h * w).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_moments() {
        let r = gauss_jacobi_symmetric(0.0, 10);
        assert!((r.integrate(|t| t * t) - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.integrate(|t| t.powi(4)) - 0.2).abs() < 1e-15);
        assert!((r.integrate(|t| t.powi(18)) - 1.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_nodes_are_cosines() {
        // α = −1/2: nodes cos((2j+1)π/2q), equal weights
        let q = 7;
        let r = gauss_jacobi_symmetric(-0.5, q);
        for (j, t) in r.nodes.iter().rev().enumerate() {
            let exact = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * q) as f64).cos();
            assert!((t - exact).abs() < 1e-14);
        }
        for w in &r.weights {
            assert!((w - 1.0 / q as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_probabilists(20);
        assert!((r.integrate(|x| x * x) - 1.0).abs() < 1e-13);
        assert!((r.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-12);
        assert!((r.integrate(|x| (0.7 * x).exp()) - (0.245f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn legendre_interval() {
        let r = gauss_legendre(8, 0.0, 2.0);
        assert!((r.integrate(|x| x.powi(3)) - 4.0).abs() < 1e-13);
    }
}
