//! The two-parameter matrix family and its normal form.
//!
//! Every tridiagonal 3x3 matrix with constant diagonal, and more generally
//! every 3x3 matrix whose numerical range is an ellipse centered at an
//! eigenvalue, is affinely and unitarily equivalent to
//!
//! ```text
//!     [ 1   q/r   r^2 - 1/r^2 ]
//! A = [ 0    0        q r     ],   q > 0, 0 < r <= 1,
//!     [ 0    0        -1      ]
//! ```
//!
//! whose numerical range is the ellipse with foci `-1, +1` and axes
//! `rho + 1/rho`, `rho - 1/rho`.

use serde::{Deserialize, Serialize};

use crate::dense::{cr, normalize3, Matrix3, C64};
use crate::error::{LabError, Result};

/// Raw entries `a, b1, b2, c1, c2` of `[[a, b1, 0], [c1, a, b2], [0, c2, a]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalParams {
    pub a: C64,
    pub b1: C64,
    pub b2: C64,
    pub c1: C64,
    pub c2: C64,
}

impl TridiagonalParams {
    pub fn matrix(&self) -> Matrix3 {
        let z = cr(0.0);
        Matrix3([
            [self.a, self.b1, z],
            [self.c1, self.a, self.b2],
            [z, self.c2, self.a],
        ])
    }

    /// Foci `a -/+ sqrt(b1 c1 + b2 c2)` of the elliptic numerical range.
    pub fn foci(&self) -> (C64, C64) {
        foci_of_general(self)
    }
}

/// Foci of `W(C)` for the tridiagonal matrix `C`; their midpoint is `a`.
pub fn foci_of_general(t: &TridiagonalParams) -> (C64, C64) {
    let s = (t.b1 * t.c1 + t.b2 * t.c2).sqrt();
    (t.a - s, t.a + s)
}

/// `(q, r)` with `q > 0` and `0 < r <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    pub q: f64,
    pub r: f64,
}

impl NormalizedParams {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(LabError::domain("NormalizedParams", format!("q = {q} must be > 0")));
        }
        if !(r.is_finite() && r > 0.0 && r <= 1.0) {
            return Err(LabError::domain("NormalizedParams", format!("r = {r} must lie in (0, 1]")));
        }
        Ok(NormalizedParams { q, r })
    }

    /// `x = r^2 + 1/r^2`.
    pub fn x(&self) -> f64 {
        x_of_r(self.r)
    }

    pub fn ellipse(&self) -> EllipseGeometry {
        mu_rho_unchecked(self.q, self.r)
    }

    pub fn rho(&self) -> f64 {
        self.ellipse().rho
    }
}

/// `(rho, r)` with `rho > 1` and `1/sqrt(rho) < r <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    pub rho: f64,
    pub r: f64,
}

impl RhoParams {
    pub fn new(rho: f64, r: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 1.0) {
            return Err(LabError::domain("RhoParams", format!("rho = {rho} must be > 1")));
        }
        if !(r.is_finite() && r > 1.0 / rho.sqrt() && r <= 1.0) {
            return Err(LabError::domain(
                "RhoParams",
                format!("r = {r} must lie in (1/sqrt(rho), 1] = ({}, 1]", 1.0 / rho.sqrt()),
            ));
        }
        Ok(RhoParams { rho, r })
    }

    pub fn xy(&self) -> XYCoords {
        XYCoords {
            x: x_of_r(self.r),
            y: y_of_rho(self.rho),
        }
    }

    pub fn q(&self) -> f64 {
        q_from_rho(self.rho, self.r).expect("validated RhoParams")
    }

    pub fn normalized(&self) -> NormalizedParams {
        NormalizedParams {
            q: self.q(),
            r: self.r,
        }
    }
}

/// `x = r^2 + 1/r^2`, `y = rho + 1/rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XYCoords {
    pub x: f64,
    pub y: f64,
}

pub fn x_of_r(r: f64) -> f64 {
    let r2 = r * r;
    r2 + 1.0 / r2
}

pub fn y_of_rho(rho: f64) -> f64 {
    rho + 1.0 / rho
}

/// Ellipse data for `W(A)`: foci at `-1, +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseGeometry {
    pub mu: f64,
    pub rho: f64,
    /// Full major axis length `rho + 1/rho`.
    pub major: f64,
    /// Full minor axis length `rho - 1/rho`.
    pub minor: f64,
    pub foci: (f64, f64),
}

impl EllipseGeometry {
    pub fn from_rho(rho: f64) -> Self {
        EllipseGeometry {
            mu: rho * rho + 1.0 / (rho * rho),
            rho,
            major: rho + 1.0 / rho,
            minor: rho - 1.0 / rho,
            foci: (-1.0, 1.0),
        }
    }

    /// Support function `max Re(e^{-i theta} z)` over the filled ellipse.
    pub fn support(&self, theta: f64) -> f64 {
        let a = 0.5 * self.major;
        let b = 0.5 * self.minor;
        (a * a * theta.cos().powi(2) + b * b * theta.sin().powi(2)).sqrt()
    }
}

/// The normal form matrix for valid `(q, r)`.
pub fn build_a(params: NormalizedParams) -> Result<Matrix3> {
    let p = NormalizedParams::new(params.q, params.r)?;
    Ok(build_a_raw(p.q, p.r))
}

/// Same formula without the `0 < r <= 1` restriction; used for mirrored
/// (`r > 1`) instances.
pub fn build_a_raw(q: f64, r: f64) -> Matrix3 {
    Matrix3::from_real([
        [1.0, q / r, r * r - 1.0 / (r * r)],
        [0.0, 0.0, q * r],
        [0.0, 0.0, -1.0],
    ])
}

pub fn build_a_rho(params: RhoParams) -> Result<Matrix3> {
    let p = RhoParams::new(params.rho, params.r)?;
    Ok(build_a_raw(p.q(), p.r))
}

/// `q = sqrt((y^2 - x^2) / x)`; the boundary `r = 1/sqrt(rho)` (q = 0) is
/// excluded.
pub fn q_from_rho(rho: f64, r: f64) -> Result<f64> {
    if !(rho > 1.0) {
        return Err(LabError::domain("q_from_rho", format!("rho = {rho} must be > 1")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(LabError::domain("q_from_rho", format!("r = {r} must lie in (0, 1]")));
    }
    let x = x_of_r(r);
    let y = y_of_rho(rho);
    let q2 = (y * y - x * x) / x;
    if !(q2 > 0.0) {
        return Err(LabError::domain(
            "q_from_rho",
            format!("q^2 = {q2} <= 0 (r = {r} <= 1/sqrt(rho) = {})", 1.0 / rho.sqrt()),
        ));
    }
    Ok(q2.sqrt())
}

/// Ellipse geometry from `(q, r)`: `mu = x^2 + q^2 x - 2`,
/// `rho = sqrt((mu + sqrt(mu^2 - 4)) / 2)`.
pub fn mu_rho(q: f64, r: f64) -> Result<EllipseGeometry> {
    NormalizedParams::new(q, r)?;
    Ok(mu_rho_unchecked(q, r))
}

fn mu_rho_unchecked(q: f64, r: f64) -> EllipseGeometry {
    let x = x_of_r(r);
    let mu = x * x + q * q * x - 2.0;
    let rho = (0.5 * (mu + (mu * mu - 4.0).max(0.0).sqrt())).sqrt();
    EllipseGeometry {
        mu,
        rho,
        major: rho + 1.0 / rho,
        minor: (mu - 2.0).max(0.0).sqrt(),
        foci: (-1.0, 1.0),
    }
}

/// Real orthogonal `Q` and the matrix `U` with `A = Q^T U Q`, both in closed
/// form.
pub fn explicit_unitary_form(params: NormalizedParams) -> (Matrix3, Matrix3) {
    let (q, r) = (params.q, params.r);
    let r2 = r * r;
    let k = (1.0 + q * q * r2).sqrt();
    let m = (r2 * r2 + q * q * r2 + 1.0).sqrt();
    let u = Matrix3::from_real([
        [0.0, k / r2, 0.0],
        [r2 / k, 0.0, q * r * m / k],
        [0.0, 0.0, 0.0],
    ]);
    let qm = Matrix3::from_real([
        [k / m, -q * r * r2 / (k * m), r2 / (k * m)],
        [r2 / m, q * r / m, -1.0 / m],
        [0.0, 1.0 / k, q * r / k],
    ]);
    (qm, u)
}

/// Antidiagonal unitary `[[0,0,1],[0,-1,0],[1,0,0]]` relating `A(q, r)` and
/// `A(q, 1/r)`: `Z A(q, 1/r) Z* = -A(q, r)*`.
pub fn mirror_unitary() -> Matrix3 {
    Matrix3::from_real([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])
}

/// Which branch of the normalization applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateCase {
    /// `q > 0`: the matrix is unitarily equivalent to the normal form.
    Generic,
    /// `alpha = beta = gamma = 0`: unitarily diagonal.
    Diagonal,
    /// `q = 0`, `gamma != 0`: reduces to a 2x2 block plus a 1x1 block.
    TwoByTwoReducible,
}

/// Tolerances for [`normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// Threshold on the relative elliptic residual
    /// `|2 alpha conj(gamma) beta - beta^2 + alpha^2| / (1 + alpha^2 + beta^2 + |gamma|^2)`.
    pub residual_threshold: f64,
    /// Values of `alpha, beta, |gamma|` at or below this are treated as zero.
    pub zero_tol: f64,
    /// Relative tolerance for the center eigenvalue being the midpoint of the
    /// other two.
    pub center_tol: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            residual_threshold: 1e-9,
            zero_tol: 1e-10,
            center_tol: 1e-7,
        }
    }
}

/// Everything needed to replay the reduction of an input matrix `B` to the
/// normal form.
///
/// With `B1 = scale * B + shift * I` and `W = unitary`, the matrix
/// `W B1 W*` equals `[[1, 2 alpha, 2 gamma], [0, 0, 2 beta], [0, 0, -1]]`.
/// In the generic case this is `build_a_raw(q, direct_r)`; when
/// `direct_r > 1` the record is `mirrored` and `params.r = 1 / direct_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub scale: C64,
    pub shift: C64,
    pub unitary: Matrix3,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: C64,
    /// Relative elliptic residual (see [`NormalizeOptions`]).
    pub residual: f64,
    pub degenerate_case: DegenerateCase,
    /// `(q, r)` with `r <= 1`; `None` unless the case is generic.
    pub params: Option<NormalizedParams>,
    /// `r` before mirroring.
    pub direct_r: Option<f64>,
    pub mirrored: bool,
}

impl NormalizationRecord {
    /// `W (scale B + shift I) W*`.
    pub fn transformed(&self, input: &Matrix3) -> Matrix3 {
        let b1 = input.scale(self.scale) + Matrix3::identity().scale(self.shift);
        self.unitary * b1 * self.unitary.adjoint()
    }

    /// `[[1, 2 alpha, 2 gamma], [0, 0, 2 beta], [0, 0, -1]]`.
    pub fn upper_form(&self) -> Matrix3 {
        let mut m = Matrix3::from_real([
            [1.0, 2.0 * self.alpha, 0.0],
            [0.0, 0.0, 2.0 * self.beta],
            [0.0, 0.0, -1.0],
        ]);
        m.0[0][2] = self.gamma * 2.0;
        m
    }
}

/// Reduce a 3x3 matrix with elliptic numerical range centered at an
/// eigenvalue to the normal form.
pub fn normalize(input: &Matrix3, opts: &NormalizeOptions) -> Result<NormalizationRecord> {
    if !input.is_finite() {
        return Err(LabError::domain("normalize", "non-finite input"));
    }
    let ev = input.eigenvalues();

    // The center is the eigenvalue closest to the midpoint of the other two.
    let (center_idx, center_err) = (0..3)
        .map(|k| {
            let (i, j) = others(k);
            (k, (ev[k] * 2.0 - ev[i] - ev[j]).norm())
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let (i, j) = others(center_idx);
    let spread = (ev[i] - ev[j]).norm();
    let size = input.frobenius().max(f64::MIN_POSITIVE);
    if spread <= 1e-12 * size {
        return Err(LabError::SpectrumShape {
            detail: format!("eigenvalues {:?} coincide; no affine map places them at -1, 0, 1", ev),
        });
    }
    if center_err > opts.center_tol * spread {
        return Err(LabError::SpectrumShape {
            detail: format!(
                "no eigenvalue is the midpoint of the other two (offset {center_err:e}, spread {spread:e})"
            ),
        });
    }
    // Deterministic orientation: the outer eigenvalue with larger real part
    // (then imaginary part) goes to +1.
    let diff = ev[i] - ev[j];
    let i_is_hi = if diff.re.abs() > 1e-12 * spread {
        diff.re > 0.0
    } else {
        diff.im > 0.0
    };
    let (hi, lo) = if i_is_hi { (ev[i], ev[j]) } else { (ev[j], ev[i]) };
    let center = (hi + lo) * 0.5;
    let scale = cr(2.0) / (hi - lo);
    let shift = -scale * center;
    let b1 = input.scale(scale) + Matrix3::identity().scale(shift);

    // Schur vectors for the ordering (1, 0, -1).
    let q1 = b1.eigenvector(cr(1.0));
    let v0 = b1.eigenvector(cr(0.0));
    let proj: C64 = (0..3).map(|k| q1[k].conj() * v0[k]).sum();
    let q2 = normalize3([v0[0] - proj * q1[0], v0[1] - proj * q1[1], v0[2] - proj * q1[2]]);
    let cx = [
        q1[1] * q2[2] - q1[2] * q2[1],
        q1[2] * q2[0] - q1[0] * q2[2],
        q1[0] * q2[1] - q1[1] * q2[0],
    ];
    let q3 = [cx[0].conj(), cx[1].conj(), cx[2].conj()];
    let mut qadj = Matrix3::zeros();
    for k in 0..3 {
        qadj.0[0][k] = q1[k].conj();
        qadj.0[1][k] = q2[k].conj();
        qadj.0[2][k] = q3[k].conj();
    }
    let u = qadj * b1 * qadj.adjoint();

    // Phase normalization V = diag(1, e^{i t1}, e^{i t2}).
    let u12 = u.0[0][1];
    let u23 = u.0[1][2];
    let t1 = if u12.norm() > 0.0 { u12.arg() } else { 0.0 };
    let t2 = t1 + if u23.norm() > 0.0 { u23.arg() } else { 0.0 };
    let v = Matrix3::diag([cr(1.0), C64::from_polar(1.0, t1), C64::from_polar(1.0, t2)]);
    let unitary = v * qadj;
    let alpha = 0.5 * u12.norm();
    let beta = 0.5 * u23.norm();
    let gamma = u.0[0][2] * C64::from_polar(0.5, -t2);

    let raw_residual = (gamma.conj() * (2.0 * alpha * beta) - beta * beta + alpha * alpha).norm();
    let residual = raw_residual / (1.0 + alpha * alpha + beta * beta + gamma.norm_sqr());
    if residual > opts.residual_threshold {
        return Err(LabError::NotEllipticCentered {
            residual,
            threshold: opts.residual_threshold,
        });
    }

    let mut record = NormalizationRecord {
        scale,
        shift,
        unitary,
        alpha,
        beta,
        gamma,
        residual,
        degenerate_case: DegenerateCase::Generic,
        params: None,
        direct_r: None,
        mirrored: false,
    };
    let zt = opts.zero_tol;
    if alpha <= zt && beta <= zt && gamma.norm() <= zt {
        record.degenerate_case = DegenerateCase::Diagonal;
        return Ok(record);
    }
    let q = 2.0 * (alpha * beta).sqrt();
    if alpha <= zt || beta <= zt {
        record.degenerate_case = DegenerateCase::TwoByTwoReducible;
        return Ok(record);
    }
    // q > 0 forces gamma to be real.
    let g = gamma.re;
    let r_direct = ((1.0 + g * g).sqrt() + g).sqrt();
    record.direct_r = Some(r_direct);
    if r_direct > 1.0 {
        record.mirrored = true;
        record.params = Some(NormalizedParams { q, r: 1.0 / r_direct });
    } else {
        record.params = Some(NormalizedParams { q, r: r_direct });
    }
    Ok(record)
}

/// [`normalize`] applied to the tridiagonal matrix built from `t`.
pub fn normalize_tridiagonal(t: &TridiagonalParams, opts: &NormalizeOptions) -> Result<NormalizationRecord> {
    normalize(&t.matrix(), opts)
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Helper for tests and harnesses: `scale * U A U* + shift` conjugated by a
/// random unitary.
pub fn disguise(a: &Matrix3, unitary: &Matrix3, scale: C64, shift: C64) -> Matrix3 {
    (*unitary * *a * unitary.adjoint()).scale(scale) + Matrix3::identity().scale(shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, random_unitary, MatrixN};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to3(m: &MatrixN) -> Matrix3 {
        Matrix3::try_from(m).unwrap()
    }

    #[test]
    fn build_a_examples() {
        let a = build_a(NormalizedParams::new(1.0, 1.0).unwrap()).unwrap();
        let expect = Matrix3::from_real([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]);
        assert_eq!(a, expect);
        let a = build_a(NormalizedParams { q: 1.0607, r: 1.0 }).unwrap();
        assert_eq!(a.0[0][2], cr(0.0));
        assert!((a.0[0][1].re - 1.0607).abs() < 1e-15 && (a.0[1][2].re - 1.0607).abs() < 1e-15);
        assert!(build_a(NormalizedParams { q: 0.0, r: 0.5 }).is_err());
        assert!(build_a(NormalizedParams { q: 1.0, r: 1.5 }).is_err());
        assert!(build_a(NormalizedParams { q: 1.0, r: 0.0 }).is_err());
    }

    #[test]
    fn spectrum_is_minus_one_zero_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let q = rng.gen_range(0.01..5.0);
            let r = rng.gen_range(0.2..=1.0);
            let a = build_a(NormalizedParams { q, r }).unwrap();
            let mut ev: Vec<f64> = a.eigenvalues().iter().map(|z| z.re).collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (got, want) in ev.iter().zip([-1.0, 0.0, 1.0]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_from_rho_examples() {
        let q = q_from_rho(2.0, 1.0).unwrap();
        assert!((q * q - 1.125).abs() < 1e-14);
        assert!(q_from_rho(2.0, 1.0 / 2f64.sqrt()).is_err());
        assert!(RhoParams::new(2.0, 1.0 / 2f64.sqrt()).is_err());
        let geo = mu_rho(q, 1.0).unwrap();
        assert!((geo.mu - 4.25).abs() < 1e-13);
        assert!((geo.rho - 2.0).abs() < 1e-13);
    }

    #[test]
    fn build_a_rho_matches_closed_form_entries() {
        // Independent closed form of the (rho, r) parametrization.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let rho: f64 = rng.gen_range(1.01..30.0);
            let r: f64 = rng.gen_range((1.0 / rho.sqrt() + 1e-3).min(1.0)..=1.0);
            let a = build_a_rho(RhoParams { rho, r }).unwrap();
            let r4 = r.powi(4);
            let num = (r4 * rho.powi(4) - (1.0 + r4 * r4) * rho * rho + r4).sqrt();
            let a12 = num / (r * r * (r4 + 1.0).sqrt() * rho);
            let a23 = num / ((r4 + 1.0).sqrt() * rho);
            assert!((a.0[0][1].re - a12).abs() < 1e-12 * a12.max(1.0));
            assert!((a.0[1][2].re - a23).abs() < 1e-12 * a23.max(1.0));
            let b = build_a(NormalizedParams { q: q_from_rho(rho, r).unwrap(), r }).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn ellipse_axes_for_rho_four() {
        let p = RhoParams::new(4.0, 0.6).unwrap();
        let geo = p.normalized().ellipse();
        assert!((geo.major - 4.25).abs() < 1e-12);
        assert!((geo.minor - 3.75).abs() < 1e-12);
    }

    #[test]
    fn mu_lower_bound_and_degenerate_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q = rng.gen_range(1e-3..10.0);
            let r = rng.gen_range(1e-2..=1.0);
            let g = mu_rho(q, r).unwrap();
            assert!(g.mu >= 2.0 + 2.0 * q * q - 1e-9 * g.mu);
            assert!(g.rho > 1.0);
            assert!((g.major.powi(2) - g.minor.powi(2) - 4.0).abs() < 1e-8 * g.major.powi(2));
        }
        let g = mu_rho(1e-9, 1.0).unwrap();
        assert!((g.mu - 2.0).abs() < 1e-12 && (g.rho - 1.0).abs() < 1e-4);
    }

    #[test]
    fn explicit_unitary_form_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let p = NormalizedParams {
                q: rng.gen_range(0.01..5.0),
                r: rng.gen_range(0.1..=1.0),
            };
            let (qm, u) = explicit_unitary_form(p);
            let a = build_a(p).unwrap();
            let scale = a.frobenius();
            assert!((qm.adjoint() * u * qm).max_abs_diff(&a) < 1e-12 * scale);
            assert!((qm * qm.adjoint()).max_abs_diff(&Matrix3::identity()) < 1e-12);
        }
    }

    #[test]
    fn support_function_matches_ellipse() {
        for &(rho, r) in &[(1.5, 0.9), (2.0, 1.0), (4.0, 0.6), (10.0, 0.77)] {
            let p = RhoParams::new(rho, r).unwrap();
            let a = MatrixN::from(build_a_rho(p).unwrap());
            let geo = EllipseGeometry::from_rho(rho);
            let worst = crate::dense::theta_grid(720)
                .map(|t| (a.support_function(t) - geo.support(t)).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-8, "rho={rho} r={r}: {worst}");
        }
    }

    #[test]
    fn mirror_identity() {
        let z = mirror_unitary();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = rng.gen_range(0.01..5.0);
            let r = rng.gen_range(1.0..5.0);
            let a = build_a_raw(q, r);
            let a_prime = build_a_raw(q, 1.0 / r);
            let lhs = z * a_prime * z.adjoint();
            assert!(lhs.max_abs_diff(&a.adjoint().scale(cr(-1.0))) < 1e-12 * a.frobenius());
        }
    }

    #[test]
    fn foci_examples() {
        let t = TridiagonalParams {
            a: cr(0.0),
            b1: cr(1.0),
            c1: cr(1.0),
            b2: cr(0.0),
            c2: cr(0.0),
        };
        let (f1, f2) = foci_of_general(&t);
        assert!((f1 + 1.0).norm() < 1e-15 && (f2 - 1.0).norm() < 1e-15);
        let t = TridiagonalParams {
            a: c(0.0, 1.0),
            b1: cr(-1.0),
            c1: cr(1.0),
            b2: cr(0.0),
            c2: cr(0.0),
        };
        let (f1, f2) = foci_of_general(&t);
        let mut fs = [f1, f2];
        fs.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(fs[0].norm() < 1e-15 && (fs[1] - c(0.0, 2.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let mut g = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let t = TridiagonalParams { a: g(), b1: g(), b2: g(), c1: g(), c2: g() };
            let (f1, f2) = t.foci();
            assert!(((f1 + f2) * 0.5 - t.a).norm() < 1e-14);
            // foci are eigenvalues of the matrix
            let m = t.matrix();
            for f in [f1, f2] {
                let det = (m - Matrix3::identity().scale(f)).det();
                assert!(det.norm() < 1e-10 * (1.0 + m.frobenius().powi(3)));
            }
        }
    }

    #[test]
    fn normalize_diagonal_and_reducible() {
        let opts = NormalizeOptions::default();
        let d = Matrix3::diag([cr(1.0), cr(0.0), cr(-1.0)]);
        assert_eq!(normalize(&d, &opts).unwrap().degenerate_case, DegenerateCase::Diagonal);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mut b3 = Matrix3::from_real([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]);
            b3.0[0][1] = g * 2.0;
            let u = to3(&random_unitary(3, &mut rng));
            let input = disguise(&b3, &u, c(0.5, -1.0), c(2.0, 1.0));
            let rec = normalize(&input, &opts).unwrap();
            assert_eq!(rec.degenerate_case, DegenerateCase::TwoByTwoReducible);
            assert!(rec.params.is_none());
        }
    }

    #[test]
    fn normalize_rejects_non_elliptic_and_bad_spectra() {
        let opts = NormalizeOptions::default();
        let m = Matrix3::from_real([[1.0, 1.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, -1.0]]);
        assert!(matches!(normalize(&m, &opts), Err(LabError::NotEllipticCentered { .. })));
        let m = Matrix3::diag([cr(1.0), cr(0.3), cr(-1.0)]);
        assert!(matches!(normalize(&m, &opts), Err(LabError::SpectrumShape { .. })));
        let j = Matrix3::from_real([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(normalize(&j, &opts), Err(LabError::SpectrumShape { .. })));
    }

    #[test]
    fn normalize_round_trip_recovers_params() {
        let opts = NormalizeOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let q = rng.gen_range(0.05..4.0);
            let r = rng.gen_range(0.3..=1.0);
            let a = build_a_raw(q, r);
            let u = to3(&random_unitary(3, &mut rng));
            let input = disguise(&a, &u, c(2.0, 0.0), c(0.0, 3.0));
            let rec = normalize(&input, &opts).unwrap();
            let p = rec.params.unwrap();
            assert!((p.q - q).abs() < 1e-8 && (p.r - r).abs() < 1e-8, "{q},{r} -> {p:?}");
            assert!(rec.transformed(&input).max_abs_diff(&rec.upper_form()) < 1e-9);
        }
    }

    #[test]
    fn normalize_tridiagonal_family() {
        let opts = NormalizeOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut g = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let t = TridiagonalParams { a: g(), b1: g(), b2: g(), c1: g(), c2: g() };
            let rec = normalize_tridiagonal(&t, &opts).unwrap();
            assert_eq!(rec.degenerate_case, DegenerateCase::Generic);
            let p = rec.params.unwrap();
            assert!(p.q > 0.0 && p.r > 0.0 && p.r <= 1.0);
        }
    }

    #[test]
    fn record_serializes() {
        let rec = normalize(&build_a_raw(1.0, 0.5), &NormalizeOptions::default()).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        let back: NormalizationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.degenerate_case, rec.degenerate_case);
        assert_eq!(back.params, rec.params);
    }
}
