//! Closed-form geometry of the unit sphere S^n ⊂ R^{n+1}.
//!
//! Points are unit vectors, tangent vectors are ambient vectors orthogonal to
//! their base point, and an orthonormal frame is stored as the `n` ambient
//! columns φ^1..φ^n. The frame doubles as the linear isometry R^n → T_x S^n.

use crate::error::{Error, Result};

/// Gradients with norm at or below this are treated as vanishing.
pub const DEGENERATE_GRADIENT: f64 = 1e-12;

/// Below this length a tangent step is treated as zero.
const TINY_STEP: f64 = 1e-14;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point of S^n, stored extrinsically.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords`; fails on a zero or non-finite vector.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidArgument(
                "a sphere point needs at least two coordinates".into(),
            ));
        }
        let r = norm(&coords);
        if !r.is_finite() || r == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize vector of norm {r}"
            )));
        }
        coords.iter_mut().for_each(|c| *c /= r);
        Ok(Self { coords })
    }

    /// The `i`-th standard basis vector of R^{n+1} (0-based), as a point of S^n.
    pub fn pole(n: usize, i: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sphere dimension n (ambient dimension minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

/// An ambient vector attached at a sphere point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub at: SpherePoint,
    pub vec: Vec<f64>,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }

    pub fn zero(at: &SpherePoint) -> Self {
        Self {
            at: at.clone(),
            vec: vec![0.0; at.coords.len()],
        }
    }
}

/// v − ⟨x, v⟩x, attached at x.
pub fn project_tangent(x: &SpherePoint, v: &[f64]) -> TangentVector {
    let c = dot(&x.coords, v);
    let vec = v
        .iter()
        .zip(&x.coords)
        .map(|(vi, xi)| vi - c * xi)
        .collect();
    TangentVector { at: x.clone(), vec }
}

/// Spherical gradient of the coordinate map P_i (0-based `i`): e_i − x_i x.
pub fn coordinate_gradient(x: &SpherePoint, i: usize) -> TangentVector {
    let xi = x.coords[i];
    let mut vec: Vec<f64> = x.coords.iter().map(|c| -xi * c).collect();
    vec[i] += 1.0;
    TangentVector { at: x.clone(), vec }
}

/// Geodesic exponential map: cos|v| x + sin|v| v/|v|, renormalized.
pub fn sphere_exp(x: &SpherePoint, v: &TangentVector) -> SpherePoint {
    let mut coords = x.coords.clone();
    exp_in_place(&mut coords, &v.vec);
    SpherePoint { coords }
}

/// Parallel transport of `w` along the geodesic leaving `x` with velocity `v`,
/// evaluated at time 1.
pub fn parallel_transport(x: &SpherePoint, v: &TangentVector, w: &TangentVector) -> TangentVector {
    let end = sphere_exp(x, v);
    let mut out = w.vec.clone();
    let r = norm(&v.vec);
    if r >= TINY_STEP {
        let (s, c) = r.sin_cos();
        transport_in_place(&x.coords, &v.vec, r, s, c, &mut out);
    }
    TangentVector { at: end, vec: out }
}

/// The unit vectors θ^i of the frame lemma: normalized coordinate gradients,
/// or `fallback` where the gradient vanishes.
pub fn frame_theta(x: &SpherePoint, fallback: &[f64]) -> Vec<TangentVector> {
    let n1 = x.coords.len();
    let mut out = Vec::with_capacity(n1);
    let mut buf = vec![0.0; n1];
    for i in 0..n1 {
        theta_into(&x.coords, i, fallback, &mut buf);
        out.push(TangentVector {
            at: x.clone(),
            vec: buf.clone(),
        });
    }
    out
}

/// Writes θ^i at `x` into `out`.
pub(crate) fn theta_into(x: &[f64], i: usize, fallback: &[f64], out: &mut [f64]) {
    let xi = x[i];
    for (o, c) in out.iter_mut().zip(x) {
        *o = -xi * c;
    }
    out[i] += 1.0;
    let r = norm(out);
    if r > DEGENERATE_GRADIENT {
        out.iter_mut().for_each(|o| *o /= r);
    } else {
        out.copy_from_slice(fallback);
    }
}

/// x ← exp_x(v), renormalized.
pub(crate) fn exp_in_place(x: &mut [f64], v: &[f64]) {
    let r = norm(v);
    if r < TINY_STEP {
        return;
    }
    let (s, c) = r.sin_cos();
    let sr = s / r;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = c * *xi + sr * vi;
    }
    let inv = 1.0 / norm(x);
    x.iter_mut().for_each(|xi| *xi *= inv);
}

/// w ← transport of w along the geodesic from x with velocity v, where
/// r = |v| and (s, c) = (sin r, cos r).
#[inline]
fn transport_in_place(x: &[f64], v: &[f64], r: f64, s: f64, c: f64, w: &mut [f64]) {
    let inv = 1.0 / r;
    let along = dot(w, v) * inv;
    let cv = along * (c - 1.0) * inv;
    let sx = along * s;
    for ((wi, vi), xi) in w.iter_mut().zip(v).zip(x) {
        *wi += cv * vi - sx * xi;
    }
}

/// A point of the orthonormal frame bundle O(S^n).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereFrame {
    base: SpherePoint,
    /// Column-major (n+1)×n: column j occupies `basis[j*(n+1)..(j+1)*(n+1)]`.
    basis: Vec<f64>,
}

impl SphereFrame {
    /// Builds a frame from a base point and `n` tangent columns, which are
    /// projected and orthonormalized (modified Gram–Schmidt) in order.
    pub fn new(base: SpherePoint, columns: &[Vec<f64>]) -> Result<Self> {
        let n1 = base.coords.len();
        if columns.len() != n1 - 1 {
            return Err(Error::DimensionMismatch {
                expected: n1 - 1,
                got: columns.len(),
            });
        }
        let mut basis = Vec::with_capacity(n1 * (n1 - 1));
        for c in columns {
            if c.len() != n1 {
                return Err(Error::DimensionMismatch {
                    expected: n1,
                    got: c.len(),
                });
            }
            basis.extend_from_slice(c);
        }
        let mut frame = Self { base, basis };
        if !frame.reorthonormalize() {
            return Err(Error::InvalidArgument(
                "frame columns are linearly dependent or not transverse to the base point".into(),
            ));
        }
        Ok(frame)
    }

    /// A deterministic frame at `x`: Gram–Schmidt of the standard basis,
    /// skipping vectors that collapse.
    pub fn standard_at(x: SpherePoint) -> Self {
        let n1 = x.coords.len();
        let mut basis: Vec<f64> = Vec::with_capacity(n1 * (n1 - 1));
        let mut cand = vec![0.0; n1];
        for k in 0..n1 {
            if basis.len() == n1 * (n1 - 1) {
                break;
            }
            cand.iter_mut().for_each(|c| *c = 0.0);
            cand[k] = 1.0;
            // Two passes of projection for stability.
            for _ in 0..2 {
                let a = dot(&cand, &x.coords);
                cand.iter_mut()
                    .zip(&x.coords)
                    .for_each(|(c, xi)| *c -= a * xi);
                for col in basis.chunks(n1) {
                    let a = dot(&cand, col);
                    cand.iter_mut().zip(col).for_each(|(c, b)| *c -= a * b);
                }
            }
            let r = norm(&cand);
            if r > 1e-6 {
                basis.extend(cand.iter().map(|c| c / r));
            }
        }
        Self { base: x, basis }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    /// Sphere dimension n.
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n1 = self.base.coords.len();
        &self.basis[j * n1..(j + 1) * n1]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.basis.chunks(self.base.coords.len())
    }

    /// Φz = Σ_j z_j φ^j ∈ T_x S^n.
    pub fn push_forward(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (zj, col) in z.iter().zip(self.columns()) {
            for (o, c) in out.iter_mut().zip(col) {
                *o += zj * c;
            }
        }
    }

    /// Φ*v = (⟨φ^j, v⟩)_j ∈ R^n.
    pub fn pull_back(&self, v: &[f64], out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(self.columns()) {
            *o = dot(col, v);
        }
    }

    /// Φ*e_i: the i-th row of the basis matrix.
    pub fn coordinate_row(&self, i: usize, out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(self.columns()) {
            *o = col[i];
        }
    }

    /// Rolls the frame along the geodesic with initial velocity Φz:
    /// exponential map for the base, parallel transport for the columns,
    /// then renormalization and modified Gram–Schmidt.
    pub fn roll(&mut self, z: &[f64], work: &mut Vec<f64>) {
        let (x, b) = (&mut self.base.coords, &mut self.basis);
        match x.len() {
            3 => roll_fixed::<3>(x, b, z),
            4 => roll_fixed::<4>(x, b, z),
            6 => roll_fixed::<6>(x, b, z),
            11 => roll_fixed::<11>(x, b, z),
            _ => roll_dynamic(x, b, z, work),
        }
    }

    /// Projects columns off the base point and orthonormalizes them.
    /// Returns false if a column collapsed.
    pub fn reorthonormalize(&mut self) -> bool {
        gram_schmidt(&self.base.coords, &mut self.basis)
    }

    /// Largest deviation from orthonormality of the columns, and from
    /// orthogonality to the base point.
    pub fn orthonormality_defect(&self) -> f64 {
        let x = &self.base.coords;
        let cols: Vec<&[f64]> = self.columns().collect();
        let mut worst: f64 = (norm(x) - 1.0).abs();
        for (j, a) in cols.iter().enumerate() {
            worst = worst.max(dot(a, x).abs());
            for (k, b) in cols.iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.base.coords.iter().all(|c| c.is_finite()) && self.basis.iter().all(|c| c.is_finite())
    }
}

/// Transport of the columns along the geodesic with velocity v = Φz, then
/// the exponential map for the base. Uses ⟨φ^j, Φz⟩ = z_j.
fn roll_dynamic(x: &mut [f64], basis: &mut [f64], z: &[f64], work: &mut Vec<f64>) {
    let n1 = x.len();
    work.clear();
    work.resize(n1, 0.0);
    for (zj, col) in z.iter().zip(basis.chunks_exact(n1)) {
        for i in 0..n1 {
            work[i] += zj * col[i];
        }
    }
    let v = &work[..n1];
    let r = norm(v);
    if r < TINY_STEP {
        return;
    }
    let inv = 1.0 / r;
    let (s, c) = r.sin_cos();
    for (zj, col) in z.iter().zip(basis.chunks_exact_mut(n1)) {
        let a = zj * inv;
        let cv = a * (c - 1.0) * inv;
        let sx = a * s;
        for i in 0..n1 {
            col[i] += cv * v[i] - sx * x[i];
        }
    }
    let sr = s * inv;
    for i in 0..n1 {
        x[i] = c * x[i] + sr * v[i];
    }
    let l = 1.0 / norm(x);
    x.iter_mut().for_each(|xi| *xi *= l);
    gram_schmidt(x, basis);
}

fn roll_fixed<const M: usize>(x: &mut [f64], basis: &mut [f64], z: &[f64]) {
    let x: &mut [f64; M] = x.try_into().expect("ambient dimension");
    let mut v = [0.0; M];
    for (zj, col) in z.iter().zip(basis.chunks_exact(M)) {
        for i in 0..M {
            v[i] += zj * col[i];
        }
    }
    let mut r2 = 0.0;
    for vi in v {
        r2 += vi * vi;
    }
    let r = r2.sqrt();
    if r < TINY_STEP {
        return;
    }
    let inv = 1.0 / r;
    let (s, c) = r.sin_cos();
    for (zj, col) in z.iter().zip(basis.chunks_exact_mut(M)) {
        let col: &mut [f64; M] = col.try_into().expect("column");
        let a = zj * inv;
        let cv = a * (c - 1.0) * inv;
        let sx = a * s;
        for i in 0..M {
            col[i] += cv * v[i] - sx * x[i];
        }
    }
    let sr = s * inv;
    let mut len2 = 0.0;
    for i in 0..M {
        x[i] = c * x[i] + sr * v[i];
        len2 += x[i] * x[i];
    }
    let l = inv_sqrt_near_one(len2);
    for xi in x.iter_mut() {
        *xi *= l;
    }
    for j in 0..M - 1 {
        let (done, rest) = basis.split_at_mut(j * M);
        let col: &mut [f64; M] = (&mut rest[..M]).try_into().expect("column");
        let mut a = 0.0;
        for i in 0..M {
            a += col[i] * x[i];
        }
        for i in 0..M {
            col[i] -= a * x[i];
        }
        for prev in done.chunks_exact(M) {
            let prev: &[f64; M] = prev.try_into().expect("column");
            let mut a = 0.0;
            for i in 0..M {
                a += col[i] * prev[i];
            }
            for i in 0..M {
                col[i] -= a * prev[i];
            }
        }
        let mut n2 = 0.0;
        for ci in col.iter() {
            n2 += ci * ci;
        }
        let inv = inv_sqrt_near_one(n2);
        for ci in col.iter_mut() {
            *ci *= inv;
        }
    }
}

/// 1/√q, by one Newton step from 1 when |q − 1| < 1e-8; the error there is
/// 3(q−1)²/8 < 4e-17.
#[inline]
fn inv_sqrt_near_one(q: f64) -> f64 {
    let e = q - 1.0;
    if e.abs() < 1e-8 {
        1.0 - 0.5 * e
    } else {
        1.0 / q.sqrt()
    }
}

/// Modified Gram–Schmidt of the columns against x and each other; false if
/// a column collapsed.
fn gram_schmidt(x: &[f64], basis: &mut [f64]) -> bool {
    let n1 = x.len();
    let mut ok = true;
    for j in 0..n1 - 1 {
        let (done, rest) = basis.split_at_mut(j * n1);
        let col = &mut rest[..n1];
        let a = dot(col, x);
        for i in 0..n1 {
            col[i] -= a * x[i];
        }
        for prev in done.chunks_exact(n1) {
            let a = dot(col, prev);
            for i in 0..n1 {
                col[i] -= a * prev[i];
            }
        }
        let r = norm(col);
        if !(r > 1e-8) || !r.is_finite() {
            ok = false;
            continue;
        }
        let inv = 1.0 / r;
        for ci in col.iter_mut() {
            *ci *= inv;
        }
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn e(n1: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n1];
        v[i] = 1.0;
        v
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn projection_examples() {
        let x = SpherePoint::pole(3, 0);
        assert!(close(&project_tangent(&x, &e(4, 0)).vec, &[0.0; 4], 0.0));
        assert!(close(&project_tangent(&x, &e(4, 1)).vec, &e(4, 1), 0.0));
        let y = SpherePoint::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let p = project_tangent(&y, &e(4, 0));
        assert!(close(&p.vec, &[0.5, -0.5, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn coordinate_gradient_at_pole() {
        let x = SpherePoint::pole(2, 0);
        assert!(close(&coordinate_gradient(&x, 0).vec, &[0.0; 3], 0.0));
        let g = coordinate_gradient(&x, 1);
        assert!(close(&g.vec, &e(3, 1), 0.0));
        assert_eq!(g.norm(), 1.0);
    }

    #[test]
    fn exp_quarter_zero_and_antipode() {
        let x = SpherePoint::pole(2, 0);
        let quarter = TangentVector {
            at: x.clone(),
            vec: vec![0.0, FRAC_PI_2, 0.0],
        };
        assert!(close(sphere_exp(&x, &quarter).coords(), &e(3, 1), 1e-15));
        assert_eq!(sphere_exp(&x, &TangentVector::zero(&x)), x);
        let half = TangentVector {
            at: x.clone(),
            vec: vec![0.0, PI, 0.0],
        };
        assert!(close(
            sphere_exp(&x, &half).coords(),
            &[-1.0, 0.0, 0.0],
            1e-15
        ));
    }

    #[test]
    fn transport_rotates_in_geodesic_plane() {
        let x = SpherePoint::pole(2, 0);
        let v = TangentVector {
            at: x.clone(),
            vec: vec![0.0, FRAC_PI_2, 0.0],
        };
        let w = TangentVector {
            at: x.clone(),
            vec: e(3, 1),
        };
        let t = parallel_transport(&x, &v, &w);
        assert!(close(&t.vec, &[-1.0, 0.0, 0.0], 1e-15));
        assert!(close(t.at.coords(), &e(3, 1), 1e-15));
        // orthogonal complement fixed
        let w2 = TangentVector {
            at: x.clone(),
            vec: e(3, 2),
        };
        assert_eq!(parallel_transport(&x, &v, &w2).vec, e(3, 2));
    }

    #[test]
    fn theta_at_pole_uses_fallback() {
        let x = SpherePoint::pole(3, 0);
        let fallback = e(4, 2);
        let th = frame_theta(&x, &fallback);
        assert_eq!(th[0].vec, fallback);
        for (i, t) in th.iter().enumerate().skip(1) {
            assert_eq!(t.vec, e(4, i));
        }
    }

    #[test]
    fn frame_roll_stays_orthonormal() {
        let x = SpherePoint::new(vec![0.3, -0.4, 0.5, FRAC_1_SQRT_2]).unwrap();
        let mut f = SphereFrame::standard_at(x);
        assert!(f.orthonormality_defect() < 1e-14);
        let mut work = Vec::new();
        for k in 0..10_000 {
            let t = k as f64;
            f.roll(&[0.01 * t.sin(), 0.02 * t.cos(), -0.015], &mut work);
        }
        assert!(f.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn frame_new_rejects_dependent_columns() {
        let x = SpherePoint::pole(2, 0);
        assert!(SphereFrame::new(x.clone(), &[e(3, 1), e(3, 1)]).is_err());
        assert!(SphereFrame::new(x, &[e(3, 1)]).is_err());
    }
}
