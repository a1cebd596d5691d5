//! Upper triangular similarities with condition number 2.
//!
//! For `X = [[s, t, u], [0, 1, v], [0, 0, w]]` the number 1 is a singular
//! value exactly when
//!
//! ```text
//! 2 t u v = s^2 v^2 - t^2 + t^2 v^2 + t^2 w^2 - v^2,
//! ```
//!
//! and then `kappa(X) = 2` as soon as `(5/2) s w = s^2 + t^2 + u^2 + v^2 + w^2`
//! with `1/2 <= s w <= 2`. Conjugating the normal form by such an `X` gives
//! `G = [[1, alpha, gamma], [0, 0, beta], [0, 0, -1]]`, whose squared norm is
//! the larger root of
//!
//! ```text
//! P(lambda) = lambda^2 - (2 + alpha^2 + beta^2 + gamma^2) lambda + 1 + alpha^2 + beta^2 + alpha^2 beta^2.
//! ```

use serde::{Deserialize, Serialize};

use crate::dense::Matrix3;
use crate::error::{LabError, Result};
use crate::family::NormalizedParams;

/// Radicands above `-RADICAND_CLAMP` are treated as zero.
pub const RADICAND_CLAMP: f64 = 1e-14;

fn clamped_sqrt(op: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v.sqrt())
    } else if v >= -RADICAND_CLAMP {
        Ok(0.0)
    } else {
        Err(LabError::domain(op, format!("negative radicand {v:e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityX {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl SimilarityX {
    pub fn identity() -> Self {
        SimilarityX { s: 1.0, t: 0.0, u: 0.0, v: 0.0, w: 1.0 }
    }

    pub fn matrix(&self) -> Matrix3 {
        Matrix3::from_real([[self.s, self.t, self.u], [0.0, 1.0, self.v], [0.0, 0.0, self.w]])
    }

    /// `2tuv - (s^2 v^2 - t^2 + t^2 v^2 + t^2 w^2 - v^2)`; zero iff 1 is a
    /// singular value.
    pub fn unit_singular_residual(&self) -> f64 {
        let SimilarityX { s, t, u, v, w } = *self;
        2.0 * t * u * v - (s * s * v * v - t * t + t * t * v * v + t * t * w * w - v * v)
    }

    /// `(5/2) s w - (s^2 + t^2 + u^2 + v^2 + w^2)`.
    pub fn kappa_two_residual(&self) -> f64 {
        let SimilarityX { s, t, u, v, w } = *self;
        2.5 * s * w - (s * s + t * t + u * u + v * v + w * w)
    }

    /// Characteristic polynomial of `X* X` evaluated at `lambda`.
    pub fn gram_char_poly(&self, lambda: f64) -> f64 {
        let SimilarityX { s, t, u, v, w } = *self;
        let c2 = s * s + t * t + u * u + v * v + w * w + 1.0;
        let c1 = s * s - 2.0 * t * u * v + u * u + (s * s + t * t) * v * v + (s * s + t * t + 1.0) * w * w;
        let c0 = s * s * w * w;
        ((lambda - c2) * lambda + c1) * lambda - c0
    }

    pub fn spectrum(&self) -> SingularSpectrumX {
        let SimilarityX { s, t, u, v, w } = *self;
        let xi = s * s + t * t + u * u + v * v + w * w;
        let eta = s * s * w * w;
        let disc = (xi * xi - 4.0 * eta).max(0.0).sqrt();
        let plus_sq = 0.5 * (xi + disc);
        SingularSpectrumX {
            xi,
            eta,
            sigma1: 1.0,
            sigma_minus: (eta / plus_sq).sqrt(),
            sigma_plus: plus_sq.sqrt(),
        }
    }

    /// Condition number computed from the dense matrix.
    pub fn condition_number(&self) -> Result<f64> {
        self.matrix().condition_number()
    }

    /// Both constraint residuals are within `tol` and `1/2 <= s w <= 2`.
    pub fn satisfies_constraints(&self, tol: f64) -> bool {
        let sw = self.s * self.w;
        self.unit_singular_residual().abs() <= tol
            && self.kappa_two_residual().abs() <= tol
            && (0.5 - tol..=2.0 + tol).contains(&sw)
    }
}

/// Squared singular values `1, sigma_minus^2, sigma_plus^2` of `X`, given
/// that 1 is one of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrumX {
    pub xi: f64,
    pub eta: f64,
    pub sigma1: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalG {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CanonicalG {
    pub fn matrix(&self) -> Matrix3 {
        Matrix3::from_real([[1.0, self.alpha, self.gamma], [0.0, 0.0, self.beta], [0.0, 0.0, -1.0]])
    }

    pub fn norm_poly(&self) -> NormPolyP {
        let (a2, b2, g2) = (self.alpha.powi(2), self.beta.powi(2), self.gamma.powi(2));
        NormPolyP {
            b: 2.0 + a2 + b2 + g2,
            c: (1.0 + a2) * (1.0 + b2),
            // b^2 - 4c rewritten as a sum of nonnegative terms; the direct
            // difference loses half the digits near a double root.
            disc: (a2 - b2).powi(2) + g2 * (4.0 + 2.0 * a2 + 2.0 * b2 + g2),
        }
    }
}

/// `P(lambda) = lambda^2 - b lambda + c`, with its discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPolyP {
    pub b: f64,
    pub c: f64,
    pub disc: f64,
}

impl NormPolyP {
    pub fn eval(&self, lambda: f64) -> f64 {
        (lambda - self.b) * lambda + self.c
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        2.0 * lambda - self.b
    }

    pub fn discriminant(&self) -> f64 {
        self.disc
    }

    /// Roots `(smaller, larger)`.
    pub fn roots(&self) -> (f64, f64) {
        let d = self.discriminant().max(0.0).sqrt();
        let big = 0.5 * (self.b + d);
        let small = if big > 0.0 { self.c / big } else { 0.5 * (self.b - d) };
        (small, big)
    }
}

/// `X A X^{-1}` in closed form.
pub fn canonical_g(x: &SimilarityX, params: NormalizedParams) -> Result<CanonicalG> {
    let SimilarityX { s, t, u, v, w } = *x;
    if s * w == 0.0 || !(s * w).is_finite() {
        return Err(LabError::Singular { sigma_min: 0.0, norm: x.matrix().frobenius() });
    }
    let (q, r) = (params.q, params.r);
    let r2 = r * r;
    Ok(CanonicalG {
        alpha: (q * s - r * t) / r,
        beta: (q * r - v) / w,
        gamma: (q * r * r2 * t - q * r * s * v + r2 * r2 * s + r2 * t * v - 2.0 * r2 * u - s) / (r2 * w),
    })
}

/// `||G||` from the larger root of `P`.
pub fn norm_from_p(g: &CanonicalG) -> f64 {
    norm_sq_from_p(g).sqrt()
}

pub fn norm_sq_from_p(g: &CanonicalG) -> f64 {
    g.norm_poly().roots().1
}

/// `||G|| <= mu` via `P(mu^2) >= 0` and `2 + alpha^2 + beta^2 + gamma^2 <= 2 mu^2`.
pub fn check_mu_bound(g: &CanonicalG, mu: f64) -> bool {
    let p = g.norm_poly();
    let m2 = mu * mu;
    p.eval(m2) >= 0.0 && p.b <= 2.0 * m2
}

/// Same test phrased as `P(mu^2) >= 0` and `P'(mu^2) >= 0`.
pub fn check_mu_bound_derivative(g: &CanonicalG, mu: f64) -> bool {
    let p = g.norm_poly();
    let m2 = mu * mu;
    p.eval(m2) >= 0.0 && p.derivative(m2) >= 0.0
}

/// The small-`r` similarity with `v = 0`, `w = 1`.
pub fn build_x_smallr(params: NormalizedParams) -> Result<SimilarityX> {
    let (q, r) = (params.q, params.r);
    let (q2, r2) = (q * q, r * r);
    let s = (1.0 + q2 * r2 + 4.0 * r2 * r2) / (2.0 * q2 * r2 + 2.0 * r2 * r2 + 2.0);
    let t = (2.0 * s - 1.0) * q / (2.0 * r);
    let rad = (2.0 - s) * (2.0 * s - 1.0) - 2.0 * t * t;
    let u = -clamped_sqrt("build_x_smallr", rad)? / std::f64::consts::SQRT_2;
    Ok(SimilarityX { s, t, u, v: 0.0, w: 1.0 })
}

/// `diag(r / sqrt 2, 1, r sqrt 2)`; its condition number is 2 for
/// `r >= 1/sqrt 2`.
pub fn build_x_strip(r: f64) -> Result<SimilarityX> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(LabError::domain("build_x_strip", format!("r = {r} must lie in (0, 1]")));
    }
    let h = std::f64::consts::SQRT_2;
    Ok(SimilarityX { s: r / h, t: 0.0, u: 0.0, v: 0.0, w: r * h })
}

/// Upper triangular `X` parametrized by `(s, v)` with `w = r^2 / s`. Then
/// `X A X^{-1}` has `alpha = beta = z = s (q r - v) / r^2` and `gamma = 0`,
/// so its squared norm is `1 + z^2`.
fn z_form(s: f64, v: f64, r: f64) -> SimilarityX {
    let r2 = r * r;
    SimilarityX {
        s,
        t: s * v / r2,
        u: s * (r2 * r2 + v * v - 1.0) / (2.0 * r2),
        v,
        w: r2 / s,
    }
}

/// `X` with `X A X^{-1} = diag(1, 0, -1)`; needs `5 - 2x >= 4 q^2`.
pub fn build_x_diagonalizing(params: NormalizedParams) -> Result<SimilarityX> {
    let (q, r) = (params.q, params.r);
    let x = params.x();
    let inner = 5.0 - 2.0 * x - 4.0 * q * q;
    if inner < -RADICAND_CLAMP {
        return Err(LabError::domain(
            "build_x_diagonalizing",
            format!("5 - 2x - 4q^2 = {inner:e} < 0: outside the diagonalizable region"),
        ));
    }
    let s = r * ((5.0 + 2.0 * x).sqrt() - inner.max(0.0).sqrt())
        / (std::f64::consts::SQRT_2 * (q * q + x));
    Ok(z_form(s, q * r, r))
}

/// The similarity used for `1/sqrt 2 <= r <= 1` outside the diagonalizable
/// region; `||X A X^{-1}||^2 = psi(x, y)`.
pub fn build_x_critical(params: NormalizedParams) -> Result<SimilarityX> {
    let (q, r) = (params.q, params.r);
    let x = params.x();
    let five_m = 5.0 - 2.0 * x;
    if five_m < -RADICAND_CLAMP {
        return Err(LabError::domain(
            "build_x_critical",
            format!("r = {r} < 1/sqrt 2 (5 - 2x = {five_m:e})"),
        ));
    }
    let five_m = five_m.max(0.0);
    let s = r * (5.0 + 2.0 * x).sqrt() / (std::f64::consts::SQRT_2 * x)
        - r * q * five_m.sqrt() / (x * (2.0 * x + 2.0 * q * q).sqrt());
    let v = (five_m * r.powi(4) / (2.0 * q * q + 2.0 * x)).sqrt() / s;
    Ok(z_form(s, v, r))
}

/// `psi(x, y) = (10y^2 - 5x^2 - 2y sqrt(y^2 - x^2) sqrt(25 - 4x^2)) / (2x^3)`.
pub fn psi(x: f64, y: f64) -> Result<f64> {
    if !(x >= 2.0 - 1e-12 && x <= 2.5 + 1e-12) {
        return Err(LabError::domain("psi", format!("x = {x} outside [2, 5/2]")));
    }
    if !(y >= x - 1e-12) {
        return Err(LabError::domain("psi", format!("y = {y} < x = {x}")));
    }
    Ok(psi_unchecked(x, y))
}

pub(crate) fn psi_unchecked(x: f64, y: f64) -> f64 {
    let a = (y * y - x * x).max(0.0).sqrt();
    let b = (25.0 - 4.0 * x * x).max(0.0).sqrt();
    (10.0 * y * y - 5.0 * x * x - 2.0 * y * a * b) / (2.0 * x * x * x)
}

/// Minimizer of `psi(., y)`: `sqrt(75) y / sqrt(16 y^2 - 25)`.
pub fn psi_minimizer_x(y: f64) -> f64 {
    75f64.sqrt() * y / (16.0 * y * y - 25.0).sqrt()
}

/// `(75 - 16x^2) y^2 + 25 x^2`; `psi` decreases in `x` where this is positive
/// and increases where it is negative.
pub fn psi_slope_criterion(x: f64, y: f64) -> f64 {
    (75.0 - 16.0 * x * x) * y * y + 25.0 * x * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_a, RhoParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn np(q: f64, r: f64) -> NormalizedParams {
        NormalizedParams::new(q, r).unwrap()
    }

    fn direct_g(x: &SimilarityX, p: NormalizedParams) -> Matrix3 {
        let xm = x.matrix();
        xm * build_a(p).unwrap() * xm.inverse().unwrap()
    }

    #[test]
    fn identity_gives_a() {
        let p = np(0.7, 0.8);
        let g = canonical_g(&SimilarityX::identity(), p).unwrap();
        assert!((g.alpha - 0.7 / 0.8).abs() < 1e-15);
        assert!((g.beta - 0.56).abs() < 1e-15);
        assert!((g.gamma - (0.64 - 1.0 / 0.64)).abs() < 1e-14);
    }

    #[test]
    fn canonical_g_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let p = np(rng.gen_range(0.05..4.0), rng.gen_range(0.3..=1.0));
            let x = SimilarityX {
                s: rng.gen_range(0.3..2.0),
                t: rng.gen_range(-1.0..1.0),
                u: rng.gen_range(-1.0..1.0),
                v: rng.gen_range(-1.0..1.0),
                w: rng.gen_range(0.3..2.0),
            };
            let g = canonical_g(&x, p).unwrap();
            assert!(g.matrix().max_abs_diff(&direct_g(&x, p)) < 1e-10);
        }
        let x = SimilarityX { s: 0.0, ..SimilarityX::identity() };
        assert!(canonical_g(&x, np(1.0, 1.0)).is_err());
    }

    #[test]
    fn strip_example() {
        let x = build_x_strip(0.76).unwrap();
        let sv = x.matrix().singular_values().sigma;
        let h = std::f64::consts::SQRT_2;
        for (got, want) in sv.iter().zip([0.76 * h, 1.0, 0.76 / h]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((x.condition_number().unwrap() - 2.0).abs() < 1e-12);
        // the strip polynomial in (x, y)
        let (xx, y): (f64, f64) = (2.2795, 10.0);
        let r = ((xx - (xx * xx - 4.0).sqrt()) / 2.0).sqrt();
        let q2 = y * y / xx - xx;
        let p = np(q2.sqrt(), r);
        let g = canonical_g(&build_x_strip(r).unwrap(), p).unwrap();
        let poly = g.norm_poly();
        assert!((poly.b - (q2 + 1.0 + xx * xx / 4.0)).abs() < 1e-10);
        assert!((poly.c - (1.0 + q2 / 2.0).powi(2)).abs() < 1e-9);
        assert!(check_mu_bound(&g, y / 2.02));
        assert!(poly.eval((y / 2.02).powi(2)) > 0.0);
    }

    #[test]
    fn smallr_example_and_factorization() {
        let rho = 3.0;
        let r = 0.62;
        let p = RhoParams::new(rho, r).unwrap().normalized();
        let x = build_x_smallr(p).unwrap();
        assert!((x.condition_number().unwrap() - 2.0).abs() < 1e-10);
        let g = canonical_g(&x, p).unwrap();
        let (q, r2) = (p.q, r * r);
        assert!((g.alpha - q / (2.0 * r)).abs() < 1e-12);
        assert!(g.beta == q * r);
        assert!((g.gamma - (4.0 * r2 * r2 - 1.0) / (2.0 * r2)).abs() < 1e-12);
        let (lo, hi) = g.norm_poly().roots();
        let f1 = (1.0 + q * q * r2) / (4.0 * r2 * r2);
        let f2 = 4.0 * r2 * r2 + q * q * r2;
        let mut want = [f1, f2];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((lo - want[0]).abs() < 1e-10 && (hi - want[1]).abs() < 1e-10);
        assert!(check_mu_bound(&g, rho / 2.0));
    }

    #[test]
    fn diagonalizing_example() {
        let rho = std::f64::consts::SQRT_2;
        let p = np(0.5, 1.0);
        assert!((RhoParams::new(rho, 1.0).unwrap().q() - 0.5).abs() < 1e-14);
        let x = build_x_diagonalizing(p).unwrap();
        assert!((x.s - 3.0 / (2.25 * std::f64::consts::SQRT_2)).abs() < 1e-7);
        assert!((x.v - 0.5).abs() < 1e-15);
        let g = direct_g(&x, p);
        let d = Matrix3::from_real([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(g.max_abs_diff(&d) < 1e-10);
        assert!((x.condition_number().unwrap() - 2.0).abs() < 1e-9);
        assert!(build_x_diagonalizing(np(2.0, 0.9)).is_err());
    }

    #[test]
    fn critical_examples() {
        for &rho in &[1.5, 2.0, 5.0, 10.0] {
            let p = RhoParams::new(rho, 1.0).unwrap().normalized();
            let x = build_x_critical(p).unwrap();
            let g = canonical_g(&x, p).unwrap();
            let want = (4.0 + rho.powi(4)) / (4.0 * rho * rho);
            assert!((norm_sq_from_p(&g) - want).abs() < 1e-9 * want);
        }
        let r = 1.0 / std::f64::consts::SQRT_2;
        let p = RhoParams::new(4.0, r + 1e-15).map(|p| p.normalized()).unwrap_or(np(1.0, r));
        let x = build_x_critical(p).unwrap();
        assert!(x.v.abs() < 1e-6);
        assert!(build_x_critical(np(1.0, 0.6)).is_err());
    }

    #[test]
    fn psi_examples() {
        assert!((psi(2.0, 2.5).unwrap() - 1.25).abs() < 1e-15);
        for &x in &[2.0, 2.2, 2.5] {
            assert!((psi(x, x).unwrap() - 5.0 / (2.0 * x)).abs() < 1e-14);
        }
        assert!((psi_minimizer_x(2.5) - 2.5).abs() < 1e-14);
        assert!(psi(1.9, 3.0).is_err());
        assert!(psi(2.2, 2.1).is_err());
    }

    #[test]
    fn builders_have_condition_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut counts = [0usize; 4];
        while counts.iter().any(|&c| c < 300) {
            let rho: f64 = rng.gen_range(1.01..50.0);
            let r = rng.gen_range((1.0 / rho.sqrt() + 1e-6).min(1.0)..=1.0);
            let p = RhoParams::new(rho, r).unwrap().normalized();
            let candidates = [
                build_x_smallr(p).ok(),
                build_x_strip(r).ok(),
                build_x_diagonalizing(p).ok(),
                build_x_critical(p).ok(),
            ];
            for (k, x) in candidates.iter().enumerate() {
                let Some(x) = x else { continue };
                // the diagonal X only has kappa = 2 for r >= 1/sqrt 2
                if k == 1 && r < std::f64::consts::FRAC_1_SQRT_2 {
                    continue;
                }
                counts[k] += 1;
                assert!(x.satisfies_constraints(1e-10), "family {k}: {x:?}");
                let kappa = x.condition_number().unwrap();
                assert!((kappa - 2.0).abs() < 1e-9, "family {k}: kappa {kappa}");
                assert!(x.gram_char_poly(1.0).abs() < 1e-10);
                let sp = x.spectrum();
                let sw = x.s * x.w;
                assert!((sp.sigma_plus.powi(2) - 2.0 * sw).abs() < 1e-9);
                assert!((sp.sigma_plus.powi(2) - 4.0 * sp.sigma_minus.powi(2)).abs() < 1e-9);
            }
            if let Some(x) = &candidates[3] {
                let g = canonical_g(x, p).unwrap();
                let xy = RhoParams::new(rho, r).unwrap().xy();
                let want = psi(xy.x, xy.y).unwrap();
                assert!((norm_sq_from_p(&g) - want).abs() < 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn norm_from_p_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10_000 {
            let g = CanonicalG {
                alpha: rng.gen_range(-5.0..5.0),
                beta: rng.gen_range(-5.0..5.0),
                gamma: rng.gen_range(-5.0..5.0),
            };
            let n2 = g.matrix().operator_norm().powi(2);
            assert!((norm_sq_from_p(&g) - n2).abs() < 1e-10 * n2.max(1.0));
            assert!(g.norm_poly().discriminant() >= -1e-12);
        }
        let g = CanonicalG { alpha: 1.7, beta: 1.7, gamma: 0.0 };
        assert!((norm_sq_from_p(&g) - (1.0 + 1.7 * 1.7)).abs() < 1e-14);
        assert_eq!(norm_from_p(&CanonicalG { alpha: 0.0, beta: 0.0, gamma: 0.0 }), 1.0);
    }

    #[test]
    fn psi_is_quasiconvex_in_x() {
        let n = 200;
        for j in 0..n {
            let y = 2.5 + 47.5 * j as f64 / (n - 1) as f64;
            for i in 1..n - 1 {
                let x = 2.0 + 0.5 * i as f64 / (n - 1) as f64;
                let h = 1e-6;
                let d = (psi_unchecked(x + h, y) - psi_unchecked(x - h, y)) / (2.0 * h);
                let crit = psi_slope_criterion(x, y);
                if d.abs() > 1e-4 {
                    assert_eq!(d < 0.0, crit > 0.0, "x={x} y={y} d={d} crit={crit}");
                }
            }
            // max over any subinterval sits at an endpoint
            let (lo, hi) = (2.05, 2.45);
            let grid_max = (0..=400)
                .map(|k| psi_unchecked(lo + (hi - lo) * k as f64 / 400.0, y))
                .fold(f64::NEG_INFINITY, f64::max);
            let ends = psi_unchecked(lo, y).max(psi_unchecked(hi, y));
            assert!(grid_max <= ends + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn mu_bound_equivalences(alpha in -4f64..4.0, beta in -4f64..4.0, gamma in -4f64..4.0, mu in 0.1f64..6.0) {
            let g = CanonicalG { alpha, beta, gamma };
            let n = g.matrix().operator_norm();
            prop_assume!((n - mu).abs() > 1e-9 * mu);
            prop_assert_eq!(check_mu_bound(&g, mu), n <= mu);
            prop_assert_eq!(check_mu_bound(&g, mu), check_mu_bound_derivative(&g, mu));
        }

        #[test]
        fn mu_bound_at_exact_norm(alpha in -4f64..4.0, beta in -4f64..4.0, gamma in -4f64..4.0) {
            let g = CanonicalG { alpha, beta, gamma };
            let mu = norm_from_p(&g) * (1.0 + 1e-14);
            prop_assert!(check_mu_bound(&g, mu));
        }
    }
}
