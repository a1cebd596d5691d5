//! Region classification and per-point certificates over the `(rho, r)`
//! parameter domain `rho > 1`, `1/sqrt(rho) < r <= 1`.
//!
//! Each certificate names a similarity `X` with `kappa(X) = 2` and bounds
//! `c ||X A X^{-1}||` by 1 (or, in the diagonalizable region, needs no bound
//! on `c` at all). Together with von Neumann's inequality this gives the
//! constant 2 for every polynomial.

pub mod replay;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conformal::{c_bracket_to_width, c_upper_closed};
use crate::error::{LabError, Result};
use crate::family::{x_of_r, y_of_rho, NormalizedParams, RhoParams};
use crate::similarity::{
    build_x_critical, build_x_diagonalizing, build_x_smallr, build_x_strip, canonical_g, norm_sq_from_p, psi,
    CanonicalG, SimilarityX,
};

pub use replay::{replay_proofs, ChainResult, ClaimResult, HEntry, ProofReplayReport};

/// Slack on `product <= 1`.
pub const PRODUCT_MARGIN: f64 = 1e-12;
/// Slack on `kappa(X) <= 2`.
pub const KAPPA_MARGIN: f64 = 1e-9;
/// Strip region thresholds.
pub const STRIP_RHO: f64 = 10.0;
pub const STRIP_R: f64 = 0.77;
/// Strip norm bound is `y / STRIP_DIVISOR`.
pub const STRIP_DIVISOR: f64 = 2.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    SmallR,
    Strip,
    Diagonalizable,
    LargeRhoR,
    OutOfDomain,
}

impl RegionId {
    pub const ALL: [RegionId; 5] = [
        RegionId::SmallR,
        RegionId::Strip,
        RegionId::Diagonalizable,
        RegionId::LargeRhoR,
        RegionId::OutOfDomain,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionId::SmallR => "SmallR",
            RegionId::Strip => "Strip",
            RegionId::Diagonalizable => "Diagonalizable",
            RegionId::LargeRhoR => "LargeRhoR",
            RegionId::OutOfDomain => "OutOfDomain",
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `12 r^8 + r^4 (3 rho^2 + 16 + 4/rho^2) - 4 - rho^2`.
pub fn p_smallr(r: f64, rho: f64) -> f64 {
    let r4 = r.powi(4);
    12.0 * r4 * r4 + r4 * (3.0 * rho * rho + 16.0 + 4.0 / (rho * rho)) - 4.0 - rho * rho
}

/// Default bisection width for [`r1`].
pub const R1_TOL: f64 = 1e-13;

/// Positive root of `p_smallr(., rho)` by bisection on `(0, 3^{-1/4})`.
///
/// Returns the lower end of the final bracket, so `p_smallr(r1, rho) <= 0`.
pub fn r1(rho: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 3f64.powf(-0.25));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p_smallr(mid, rho) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Upper edge of the diagonalizable region for `1 < rho <= 2`.
pub fn r3(rho: f64) -> Result<f64> {
    if !(rho > 1.0 && rho <= 2.0) {
        return Err(LabError::domain("r3", format!("rho = {rho} must lie in (1, 2]")));
    }
    // r3 has a square-root singularity at sqrt 2, so the rounded input
    // sqrt(2) would otherwise land 1e-8 below 1
    if rho <= std::f64::consts::SQRT_2 * (1.0 + 2.0 * f64::EPSILON) {
        return Ok(1.0);
    }
    let y = y_of_rho(rho);
    let x0 = (25.0 / 16.0 + 2.0 * y * y).sqrt() - 1.25;
    Ok((x0 / 2.0 - (x0 * x0 / 4.0 - 1.0).max(0.0).sqrt()).sqrt().min(1.0))
}

/// `2 y^2 <= x^2 + (5/2) x`.
pub fn in_diagonalizable_region(rho: f64, r: f64) -> bool {
    let x = x_of_r(r);
    let y = y_of_rho(rho);
    2.0 * y * y <= x * x + 2.5 * x
}

pub fn in_domain(rho: f64, r: f64) -> bool {
    rho.is_finite() && rho > 1.0 && r.is_finite() && r > 1.0 / rho.sqrt() && r <= 1.0
}

/// Region by precedence Diagonalizable, SmallR, Strip, LargeRhoR.
pub fn classify(rho: f64, r: f64) -> RegionId {
    if !in_domain(rho, r) {
        RegionId::OutOfDomain
    } else if in_diagonalizable_region(rho, r) {
        RegionId::Diagonalizable
    } else if r <= r1(rho, R1_TOL) {
        RegionId::SmallR
    } else if rho >= STRIP_RHO && r <= STRIP_R {
        RegionId::Strip
    } else {
        RegionId::LargeRhoR
    }
}

/// Per-point evidence that the constant 2 works at `(rho, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub region: RegionId,
    pub rho: f64,
    pub r: f64,
    pub q: f64,
    #[serde(rename = "X")]
    pub x: SimilarityX,
    pub kappa: f64,
    /// Upper bound on `||X A X^{-1}||^2` used in the verdict.
    pub norm_sq_upper: f64,
    /// `||X A X^{-1}||^2` from the norm polynomial of the explicit `X`.
    pub norm_sq_actual: f64,
    /// Closed-form upper bound on `c`; `None` in the diagonalizable region.
    pub c_upper: Option<f64>,
    /// Upper end of a converged product bracket for `c`.
    pub c_bracket_upper: Option<f64>,
    /// `c_upper * sqrt(norm_sq_upper)`; 0 in the diagonalizable region.
    pub product: f64,
    /// `c_bracket_upper * sqrt(norm_sq_actual)`.
    pub strict_product: Option<f64>,
    pub crouzeix_constant: f64,
    pub verdict: bool,
    pub failure: Option<String>,
}

/// Certificate using the region [`classify`] picks.
pub fn certify(rho: f64, r: f64) -> Result<Certificate> {
    let region = classify(rho, r);
    if region == RegionId::OutOfDomain {
        return Err(LabError::domain(
            "certify",
            format!("(rho, r) = ({rho}, {r}) is outside 1 < rho, 1/sqrt(rho) < r <= 1"),
        ));
    }
    certify_as(rho, r, region)
}

/// Certificate using the construction of `region`, whether or not that
/// region's defining inequality holds at `(rho, r)`. Fails when the
/// construction itself is undefined there.
pub fn certify_as(rho: f64, r: f64, region: RegionId) -> Result<Certificate> {
    let params = RhoParams::new(rho, r)?;
    let np: NormalizedParams = params.normalized();
    let xy = params.xy();
    let x = match region {
        RegionId::Diagonalizable => build_x_diagonalizing(np)?,
        RegionId::SmallR => build_x_smallr(np)?,
        RegionId::Strip => build_x_strip(r)?,
        RegionId::LargeRhoR => build_x_critical(np)?,
        RegionId::OutOfDomain => {
            return Err(LabError::domain("certify_as", "no construction for OutOfDomain"));
        }
    };
    let kappa = x.condition_number()?;
    let g = canonical_g(&x, np)?;
    let norm_sq_actual = norm_sq_from_p(&g);
    let mut failures = Vec::new();
    if !(kappa <= 2.0 + KAPPA_MARGIN) {
        failures.push(format!("kappa(X) = {kappa} exceeds 2"));
    }

    let (norm_sq_upper, c_upper) = match region {
        RegionId::Diagonalizable => (norm_sq_actual, None),
        RegionId::SmallR => {
            let mu = rho / 2.0;
            if !mu_bound_holds(&g, mu) {
                failures.push(format!("||XAX^-1|| <= rho/2 fails (norm^2 = {norm_sq_actual})"));
            }
            (mu * mu, Some(2.0 / rho))
        }
        RegionId::Strip => {
            let mu = xy.y / STRIP_DIVISOR;
            if !mu_bound_holds(&g, mu) {
                failures.push(format!("||XAX^-1|| <= y/2.02 fails (norm^2 = {norm_sq_actual})"));
            }
            (mu * mu, Some(2.0 / rho))
        }
        RegionId::LargeRhoR => {
            let ps = psi(xy.x, xy.y)?;
            (ps.max(norm_sq_actual), Some(c_upper_closed(rho)))
        }
        RegionId::OutOfDomain => unreachable!(),
    };

    let (product, c_bracket_upper, strict_product) = match c_upper {
        None => (0.0, None, None),
        Some(cu) => {
            let cb = c_bracket_to_width(rho, 1e-15, 500).upper;
            (cu * norm_sq_upper.sqrt(), Some(cb), Some(cb * norm_sq_actual.sqrt()))
        }
    };
    if c_upper.is_some() && !(product <= 1.0 + PRODUCT_MARGIN) {
        failures.push(format!("c * ||XAX^-1|| bound {product} exceeds 1"));
    }
    let verdict = failures.is_empty();
    let crouzeix_constant = if verdict { 2.0 } else { kappa * product.max(1.0) };
    Ok(Certificate {
        region,
        rho,
        r,
        q: np.q,
        x,
        kappa,
        norm_sq_upper,
        norm_sq_actual,
        c_upper,
        c_bracket_upper,
        product,
        strict_product,
        crouzeix_constant,
        verdict,
        failure: if verdict { None } else { Some(failures.join("; ")) },
    })
}

/// `P(mu^2) >= 0` and `P'(mu^2) >= 0`, each with relative slack 1e-12 for
/// rounding at points where the bound is attained.
fn mu_bound_holds(g: &CanonicalG, mu: f64) -> bool {
    let p = g.norm_poly();
    let m2 = mu * mu;
    let scale = m2 * m2 + p.c;
    p.eval(m2) >= -1e-12 * scale && p.b <= 2.0 * m2 * (1.0 + 1e-12)
}

/// `(rho, 4 psi(x(r1(rho)), y(rho)) / rho^2)` for `rho` on a uniform grid
/// over `[5/2, 10]`.
pub fn figure2_data(grid: usize) -> Vec<(f64, f64)> {
    let n = grid.max(2);
    (0..n)
        .map(|k| {
            let rho = 2.5 + 7.5 * k as f64 / (n - 1) as f64;
            let r = r1(rho, R1_TOL);
            let v = 4.0 * crate::similarity::psi_unchecked(x_of_r(r), y_of_rho(rho)) / (rho * rho);
            (rho, v)
        })
        .collect()
}

/// A sampled boundary curve of the region diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub curve: String,
    pub rho: f64,
    pub r: f64,
}

/// Samples of the curves `r = 1/sqrt(rho)`, `r = r1(rho)`, `r = r3(rho)`, and
/// the strip edges, for `1 < rho <= rho_max`.
pub fn region_curves(rho_max: f64, n: usize) -> Vec<CurvePoint> {
    let n = n.max(2);
    let mut out = Vec::new();
    let grid = |lo: f64, hi: f64| (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64);
    for rho in grid(1.0, rho_max) {
        out.push(CurvePoint { curve: "lower".into(), rho, r: 1.0 / rho.sqrt() });
    }
    for rho in grid(2.0, rho_max) {
        out.push(CurvePoint { curve: "r1".into(), rho, r: r1(rho, R1_TOL) });
    }
    for rho in grid(1.0 + 1e-9, 2.0_f64.min(rho_max)) {
        out.push(CurvePoint { curve: "r3".into(), rho, r: r3(rho).unwrap_or(1.0) });
    }
    if rho_max >= STRIP_RHO {
        for rho in grid(STRIP_RHO, rho_max) {
            out.push(CurvePoint { curve: "strip_top".into(), rho, r: STRIP_R });
        }
        for r in grid(r1(STRIP_RHO, R1_TOL), STRIP_R) {
            out.push(CurvePoint { curve: "strip_left".into(), rho: STRIP_RHO, r });
        }
    }
    out
}
