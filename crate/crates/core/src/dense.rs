//! Small dense complex linear algebra.
//!
//! Two code paths live here. [`Matrix3`] uses closed forms: the
//! characteristic cubic of `M*M` (trigonometric branch, Newton-polished) for
//! singular values, Cardano plus inverse iteration for eigenpairs, and the
//! adjugate for inverses. [`MatrixN`] covers `1 <= n <= 8` with Gaussian
//! elimination and a cyclic Jacobi eigensolver on the real `2n x 2n`
//! embedding of a Hermitian matrix.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Largest dimension handled by [`MatrixN`].
pub const MAX_DIM: usize = 8;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Horner evaluation of `sum coeffs[k] z^k`.
pub fn eval_scalar_poly(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

// ---------------------------------------------------------------------------
// Matrix3
// ---------------------------------------------------------------------------

/// Dense 3x3 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix3(pub [[C64; 3]; 3]);

impl fmt::Debug for Matrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix3[")?;
        for row in &self.0 {
            writeln!(f, "  {:?}", row)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j]
                    + self.0[i][1] * rhs.0[1][j]
                    + self.0[i][2] * rhs.0[2][j];
            }
        }
        out
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;
    fn add(self, rhs: Matrix3) -> Matrix3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;
    fn sub(self, rhs: Matrix3) -> Matrix3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Matrix3 {
    pub fn zeros() -> Self {
        Matrix3([[C64::new(0.0, 0.0); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag([cr(1.0), cr(1.0), cr(1.0)])
    }

    pub fn diag(d: [C64; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, &v) in d.iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = cr(rows[i][j]);
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficients `[c0, c1, c2]` of the monic characteristic polynomial
    /// `z^3 + c2 z^2 + c1 z + c0`.
    pub fn char_poly(&self) -> [C64; 3] {
        let m = &self.0;
        let tr = self.trace();
        let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2]
            - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        [-self.det(), minors, -tr]
    }

    /// Inverse via the adjugate. Fails when the smallest singular value is
    /// below `1e-14 * ||M||`.
    pub fn inverse(&self) -> Result<Matrix3> {
        let m = &self.0;
        let det = self.det();
        let norm = self.operator_norm();
        if det.norm() == 0.0 || !det.norm().is_finite() {
            return Err(LabError::Singular {
                sigma_min: 0.0,
                norm,
            });
        }
        let mut adj = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let (r0, r1) = other_two(j);
                let (c0, c1) = other_two(i);
                let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj.0[i][j] = minor * sign;
            }
        }
        let inv = adj.scale(det.inv());
        let sigma_min = 1.0 / inv.operator_norm();
        if sigma_min <= 1e-14 * norm {
            return Err(LabError::Singular { sigma_min, norm });
        }
        Ok(inv)
    }

    /// `p(M)` for `p(z) = sum coeffs[k] z^k`, by Horner's rule.
    pub fn eval_poly(&self, coeffs: &[C64]) -> Matrix3 {
        let mut acc = Matrix3::zeros();
        for &a in coeffs.iter().rev() {
            acc = acc * *self;
            for i in 0..3 {
                acc.0[i][i] += a;
            }
        }
        acc
    }

    /// Squared singular values, descending.
    pub fn singular_values_sq(&self) -> [f64; 3] {
        let gram = self.adjoint() * *self;
        let mut ev = hermitian_eigenvalues3(&gram);
        for v in ev.iter_mut() {
            *v = v.max(0.0);
        }
        ev
    }

    pub fn singular_values(&self) -> SingularTriple {
        SingularTriple {
            sigma: self.singular_values_sq().iter().map(|v| v.sqrt()).collect(),
        }
    }

    /// Largest singular value, from the characteristic cubic of `M*M`.
    pub fn operator_norm(&self) -> f64 {
        self.singular_values_sq()[0].sqrt()
    }

    /// `sigma_max / sigma_min`, with `sigma_min = 1 / ||M^-1||`.
    pub fn condition_number(&self) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(self.operator_norm() * inv.operator_norm())
    }

    /// Support function of the numerical range: the largest eigenvalue of
    /// the Hermitian part of `e^{-i theta} M`.
    pub fn support_function(&self, theta: f64) -> f64 {
        hermitian_eigenvalues3(&hermitian_part(self, theta))[0]
    }

    /// Eigenvalues from the characteristic cubic, Newton-polished.
    pub fn eigenvalues(&self) -> [C64; 3] {
        let [c0, c1, c2] = self.char_poly();
        let mut roots = cubic_roots(c2, c1, c0);
        for z in roots.iter_mut() {
            *z = newton_polish_cubic(*z, c2, c1, c0);
        }
        roots
    }

    /// Unit eigenvector for `lambda` from row cross products, followed by one
    /// step of inverse iteration with a slightly perturbed shift.
    pub fn eigenvector(&self, lambda: C64) -> C64Vec3 {
        let shifted = *self - Matrix3::identity().scale(lambda);
        let rows = shifted.0;
        let cands = [
            cross(rows[0], rows[1]),
            cross(rows[0], rows[2]),
            cross(rows[1], rows[2]),
        ];
        let mut best = cands[0];
        for cand in &cands[1..] {
            if norm3(cand) > norm3(&best) {
                best = *cand;
            }
        }
        let mut v = if norm3(&best) > 0.0 {
            normalize3(best)
        } else {
            // lambda has a two-dimensional eigenspace (or M = lambda I).
            let mut e = [C64::new(0.0, 0.0); 3];
            let k = (0..3)
                .max_by(|&a, &b| {
                    let na: f64 = rows.iter().map(|r| r[a].norm()).sum();
                    let nb: f64 = rows.iter().map(|r| r[b].norm()).sum();
                    nb.partial_cmp(&na).unwrap()
                })
                .unwrap();
            e[k] = cr(1.0);
            e
        };
        let scale = self.frobenius().max(1.0);
        let delta = cr(1e-10 * scale);
        let perturbed = *self - Matrix3::identity().scale(lambda + delta);
        if let Some(x) = solve3(&perturbed, &v) {
            let nx = norm3(&x);
            if nx.is_finite() && nx > 0.0 {
                v = normalize3(x);
            }
        }
        v
    }

    /// Eigen-decomposition `M Z = Z diag(values)`.
    pub fn eigen_decomposition(&self) -> EigenDecomposition {
        let values = self.eigenvalues();
        let mut z = Matrix3::zeros();
        for (k, &lam) in values.iter().enumerate() {
            let v = self.eigenvector(lam);
            for i in 0..3 {
                z.0[i][k] = v[i];
            }
        }
        let invertible = z.inverse().is_ok();
        EigenDecomposition {
            values: values.to_vec(),
            vectors: MatrixN::from(z),
            invertible,
        }
    }

    /// `Z f(Lambda) Z^{-1}` for a diagonalizable matrix whose eigenvalues are
    /// separated by more than `1e-8` (relative to `max(1, ||M||)`).
    pub fn holomorphic_calc<F>(&self, f: F) -> Result<Matrix3>
    where
        F: Fn(C64) -> C64,
    {
        let values = self.eigenvalues();
        let scale = self.operator_norm().max(1.0);
        let mut gap = f64::INFINITY;
        for i in 0..3 {
            for j in (i + 1)..3 {
                gap = gap.min((values[i] - values[j]).norm());
            }
        }
        if gap <= 1e-8 * scale {
            return Err(LabError::ClusteredSpectrum { gap });
        }
        let mut z = Matrix3::zeros();
        for (k, &lam) in values.iter().enumerate() {
            let v = self.eigenvector(lam);
            for i in 0..3 {
                z.0[i][k] = v[i];
            }
        }
        let z_inv = z.inverse()?;
        let fd = Matrix3::diag([f(values[0]), f(values[1]), f(values[2])]);
        Ok(z * fd * z_inv)
    }
}

fn other_two(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Column vector of length three.
pub type C64Vec3 = [C64; 3];

fn cross(a: C64Vec3, b: C64Vec3) -> C64Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(v: &C64Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn normalize3(v: C64Vec3) -> C64Vec3 {
    let n = norm3(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Gaussian elimination with partial pivoting; `None` when a pivot vanishes.
fn solve3(m: &Matrix3, b: &C64Vec3) -> Option<C64Vec3> {
    let mut a = m.0;
    let mut x = *b;
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())?;
        if a[piv][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
            let t = x[col];
            x[row] -= f * t;
        }
    }
    for col in (0..3).rev() {
        let mut s = x[col];
        for k in (col + 1)..3 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn hermitian_part(m: &Matrix3, theta: f64) -> Matrix3 {
    let rot = C64::from_polar(1.0, -theta);
    let a = m.scale(rot);
    (a + a.adjoint()).scale(cr(0.5))
}

/// Eigenvalues of a 3x3 Hermitian matrix in descending order, via the
/// trigonometric solution of the characteristic cubic and one Newton step
/// per root. Clustered spectra fall back to Jacobi.
pub fn hermitian_eigenvalues3(h: &Matrix3) -> [f64; 3] {
    let m = h.trace().re / 3.0;
    let k = *h - Matrix3::identity().scale(cr(m));
    let p = k.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / 6.0;
    if p <= f64::MIN_POSITIVE {
        return [m, m, m];
    }
    let q = k.det().re / 2.0;
    let sp = p.sqrt();
    let ratio = (q / (p * sp)).clamp(-1.0, 1.0);
    let phi = ratio.acos() / 3.0;
    let mut l1 = m + 2.0 * sp * phi.cos();
    let mut l3 = m + 2.0 * sp * (phi + 2.0 * PI / 3.0).cos();
    let mut l2 = 3.0 * m - l1 - l3;
    // Newton polish on the shifted cubic t^3 - 3 p t - 2 q (t = lambda - m).
    let polish = |lam: f64| {
        let t = lam - m;
        let f = t * t * t - 3.0 * p * t - 2.0 * q;
        let df = 3.0 * t * t - 3.0 * p;
        if df.abs() > 1e-8 * p {
            let step = f / df;
            if step.abs() < sp {
                return lam - step;
            }
        }
        lam
    };
    l1 = polish(l1);
    l2 = polish(l2);
    l3 = polish(l3);
    let mut ev = [l1, l2, l3];
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Near-coincident roots make the cubic ill-conditioned even though the
    // eigenvalues themselves are not; hand those to Jacobi.
    let gap = (ev[0] - ev[1]).min(ev[1] - ev[2]);
    if gap < 1e-3 * sp {
        let (vals, _) = hermitian_eigen(&MatrixN::from(*h));
        return [vals[0], vals[1], vals[2]];
    }
    ev
}

/// Roots of the monic cubic `z^3 + a z^2 + b z + c` (Cardano).
pub fn cubic_roots(a: C64, b: C64, c: C64) -> [C64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + c;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u3a = -q / 2.0 + disc;
    let u3b = -q / 2.0 - disc;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    if u3.norm() == 0.0 {
        return [-shift, -shift, -shift];
    }
    let u = u3.cbrt();
    let mut roots = [C64::new(0.0, 0.0); 3];
    let mut w = cr(1.0);
    for root in roots.iter_mut() {
        let uk = u * w;
        let vk = -p / (uk * 3.0);
        *root = uk + vk - shift;
        w *= omega;
    }
    roots
}

fn newton_polish_cubic(z0: C64, a: C64, b: C64, c: C64) -> C64 {
    let f = |z: C64| ((z + a) * z + b) * z + c;
    let df = |z: C64| (z * 3.0 + a * 2.0) * z + b;
    let mut z = z0;
    let mut fz = f(z).norm();
    for _ in 0..3 {
        let d = df(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - f(z) / d;
        let fc = f(cand).norm();
        if fc < fz {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

/// Descending list of singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularTriple {
    pub sigma: Vec<f64>,
}

/// Eigenvalues and eigenvector columns with `M Z = Z diag(values)`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: MatrixN,
    pub invertible: bool,
}

// ---------------------------------------------------------------------------
// MatrixN
// ---------------------------------------------------------------------------

/// Dense `n x n` complex matrix with `1 <= n <= 8`, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixN {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for MatrixN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatrixN({})[", self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", &self.data[i * self.n..(i + 1) * self.n])?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for MatrixN {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for MatrixN {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl From<Matrix3> for MatrixN {
    fn from(m: Matrix3) -> Self {
        MatrixN::from_fn(3, |i, j| m.0[i][j])
    }
}

impl TryFrom<&MatrixN> for Matrix3 {
    type Error = LabError;
    fn try_from(m: &MatrixN) -> Result<Matrix3> {
        if m.n != 3 {
            return Err(LabError::Dimension(format!("expected 3x3, got {0}x{0}", m.n)));
        }
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = m[(i, j)];
            }
        }
        Ok(out)
    }
}

impl<'a> Mul<&'a MatrixN> for &'a MatrixN {
    type Output = MatrixN;
    fn mul(self, rhs: &MatrixN) -> MatrixN {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = MatrixN::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a MatrixN> for &'a MatrixN {
    type Output = MatrixN;
    fn add(self, rhs: &MatrixN) -> MatrixN {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        MatrixN {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a MatrixN> for &'a MatrixN {
    type Output = MatrixN;
    fn sub(self, rhs: &MatrixN) -> MatrixN {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        MatrixN {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl MatrixN {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} outside 1..={MAX_DIM}");
        MatrixN {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { cr(1.0) } else { cr(0.0) })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(d: &[C64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { cr(0.0) })
    }

    /// Block-diagonal assembly; the total size must not exceed [`MAX_DIM`].
    pub fn block_diag(blocks: &[MatrixN]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut out = Self::zeros(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.n;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixN {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s I`.
    pub fn shift(&self, s: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out[(i, i)] += s;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &MatrixN) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eval_poly(&self, coeffs: &[C64]) -> MatrixN {
        let mut acc = MatrixN::zeros(self.n);
        for &a in coeffs.iter().rev() {
            acc = &acc * self;
            for i in 0..self.n {
                acc[(i, i)] += a;
            }
        }
        acc
    }

    /// Largest singular value: closed-form cubic for `n = 3`, Jacobi on the
    /// Gram matrix otherwise.
    pub fn operator_norm(&self) -> f64 {
        match self.n {
            1 => self.data[0].norm(),
            3 => Matrix3::try_from(self).expect("n = 3").operator_norm(),
            _ => {
                let gram = &self.adjoint() * self;
                hermitian_eigen(&gram).0[0].max(0.0).sqrt()
            }
        }
    }

    /// All singular values, descending.
    pub fn singular_values(&self) -> SingularTriple {
        if self.n == 3 {
            return Matrix3::try_from(self).expect("n = 3").singular_values();
        }
        let gram = &self.adjoint() * self;
        SingularTriple {
            sigma: hermitian_eigen(&gram).0.iter().map(|v| v.max(0.0).sqrt()).collect(),
        }
    }

    /// Largest singular value by power iteration on `M*M`, started from the
    /// normalized all-ones vector with one seeded random restart if the
    /// first run stagnates.
    pub fn operator_norm_power(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let n = self.n;
        let start = vec![cr(1.0 / (n as f64).sqrt()); n];
        let (lam, converged) = power_iterate(&gram, start, 1e-12, 20_000);
        if converged {
            return lam.max(0.0).sqrt();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let v: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let (lam2, _) = power_iterate(&gram, v, 1e-12, 200_000);
        lam.max(lam2).max(0.0).sqrt()
    }

    /// Solve `M x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[C64]) -> Option<Vec<C64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().partial_cmp(&a[j * n + col].norm()).unwrap())?;
            if a[piv * n + col].norm() == 0.0 {
                return None;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                x.swap(col, piv);
            }
            for row in (col + 1)..n {
                let f = a[row * n + col] / a[col * n + col];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in col..n {
                    let t = a[col * n + k];
                    a[row * n + k] -= f * t;
                }
                let t = x[col];
                x[row] -= f * t;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for k in (col + 1)..n {
                s -= a[col * n + k] * x[k];
            }
            x[col] = s / a[col * n + col];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Result<MatrixN> {
        let n = self.n;
        let norm = self.operator_norm();
        let mut inv = MatrixN::zeros(n);
        for j in 0..n {
            let mut e = vec![cr(0.0); n];
            e[j] = cr(1.0);
            let col = self.solve(&e).ok_or(LabError::Singular { sigma_min: 0.0, norm })?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        if !inv.is_finite() {
            return Err(LabError::Singular { sigma_min: 0.0, norm });
        }
        let sigma_min = 1.0 / inv.operator_norm();
        if sigma_min <= 1e-14 * norm {
            return Err(LabError::Singular { sigma_min, norm });
        }
        Ok(inv)
    }

    pub fn condition_number(&self) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(self.operator_norm() * inv.operator_norm())
    }

    /// Hermitian part of `e^{-i theta} M`.
    pub fn hermitian_part(&self, theta: f64) -> MatrixN {
        let a = self.scale(C64::from_polar(1.0, -theta));
        (&a + &a.adjoint()).scale(cr(0.5))
    }

    pub fn support_function(&self, theta: f64) -> f64 {
        match self.n {
            1 => (self.data[0] * C64::from_polar(1.0, -theta)).re,
            3 => Matrix3::try_from(self).expect("n = 3").support_function(theta),
            _ => hermitian_eigen(&self.hermitian_part(theta)).0[0],
        }
    }

    /// Boundary point `x* M x` of the numerical range where the support line
    /// with outer normal `e^{i theta}` touches it.
    pub fn support_point(&self, theta: f64) -> C64 {
        let h = self.hermitian_part(theta);
        let (_, vecs) = hermitian_eigen(&h);
        let x = &vecs[0];
        let mut acc = cr(0.0);
        for i in 0..self.n {
            let mut row = cr(0.0);
            for j in 0..self.n {
                row += self[(i, j)] * x[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}

fn power_iterate(gram: &MatrixN, mut v: Vec<C64>, tol: f64, max_iter: usize) -> (f64, bool) {
    let n = gram.n;
    let mut lam = 0.0;
    for _ in 0..max_iter {
        let mut w = vec![cr(0.0); n];
        for i in 0..n {
            for j in 0..n {
                w[i] += gram[(i, j)] * v[j];
            }
        }
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nw == 0.0 {
            return (0.0, true);
        }
        v = w.into_iter().map(|z| z / nw).collect();
        if (rq - lam).abs() <= tol * rq.abs() {
            return (rq, true);
        }
        lam = rq;
    }
    (lam, false)
}

/// Eigenvalues (descending) and unit eigenvectors of a Hermitian matrix.
///
/// Runs cyclic Jacobi on the real symmetric embedding `[[Re H, -Im H],
/// [Im H, Re H]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled.
pub fn hermitian_eigen(h: &MatrixN) -> (Vec<f64>, Vec<Vec<C64>>) {
    let n = h.n;
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let (vals, vecs) = jacobi_symmetric(a, m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs = Vec::with_capacity(n);
    for pair in order.chunks(2) {
        let k = pair[0];
        out_vals.push(0.5 * (vals[pair[0]] + vals[pair[1]]));
        let mut v: Vec<C64> = (0..n).map(|i| c(vecs[i * m + k], vecs[(i + n) * m + k])).collect();
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nv);
        out_vecs.push(v);
    }
    (out_vals, out_vecs)
}

/// Cyclic Jacobi for a real symmetric `m x m` matrix; returns eigenvalues and
/// the eigenvector matrix (columns).
fn jacobi_symmetric(mut a: Vec<f64>, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; m], v);
    }
    for sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum::<f64>()
            .sqrt();
        // Weyl: the remaining off-diagonal part moves eigenvalues by at most
        // `off`, so this is the resolution of the diagonal itself
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let g = 100.0 * apq.abs();
                if apq.abs() <= 1e-300 || (sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs()) {
                    a[p * m + q] = 0.0;
                    a[q * m + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = cs * akp - sn * akq;
                    a[k * m + q] = sn * akp + cs * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = cs * apk - sn * aqk;
                    a[q * m + k] = sn * apk + cs * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = cs * vkp - sn * vkq;
                    v[k * m + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..m).map(|i| a[i * m + i]).collect(), v)
}

/// Free-function form of [`MatrixN::operator_norm`].
pub fn operator_norm(m: &MatrixN) -> f64 {
    m.operator_norm()
}

/// Free-function form of [`MatrixN::condition_number`].
pub fn condition_number(m: &MatrixN) -> Result<f64> {
    m.condition_number()
}

/// Free-function form of [`MatrixN::eval_poly`].
pub fn eval_poly(m: &MatrixN, coeffs: &[C64]) -> MatrixN {
    m.eval_poly(coeffs)
}

/// Free-function form of [`MatrixN::support_function`].
pub fn support_function(m: &MatrixN, theta: f64) -> f64 {
    m.support_function(theta)
}

/// Uniform grid `theta_k = 2 pi k / m`.
pub fn theta_grid(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |k| 2.0 * PI * k as f64 / m as f64)
}

/// Random unitary `n x n` matrix via Gram-Schmidt on a complex Gaussian-ish
/// draw (test and harness utility).
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> MatrixN {
    loop {
        let cols: Vec<Vec<C64>> = (0..n)
            .map(|_| (0..n).map(|_| c(gauss(rng), gauss(rng))).collect())
            .collect();
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for col in cols {
            let mut v = col;
            for _ in 0..2 {
                for u in &q {
                    let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= proj * ui;
                    }
                }
            }
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nv < 1e-8 {
                ok = false;
                break;
            }
            q.push(v.into_iter().map(|z| z / nv).collect());
        }
        if ok {
            return MatrixN::from_fn(n, |i, j| q[j][i]);
        }
    }
}

/// Standard normal draw via Box-Muller.
pub(crate) fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
