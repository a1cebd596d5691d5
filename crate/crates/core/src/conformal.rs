//! The conformal map `f` from the interior of the ellipse with foci `-1, +1`
//! and axes `rho +/- 1/rho` onto the unit disk, normalized by `f(0) = 0`,
//! `f'(0) > 0`, and the constant `c = f(1)`.
//!
//! ```text
//! f(z) = (2z / rho) exp( sum_{n>=1} 2 (-1)^n T_{2n}(z) / (n (1 + rho^{4n})) )
//! c    = (2 / rho) prod_{n>=1} ((1 + rho^{-8n}) / (1 + rho^{4-8n}))^2
//! ```

use serde::{Deserialize, Serialize};

use crate::dense::{cr, C64};
use crate::error::{LabError, Result};
use crate::family::{build_a_rho, RhoParams};
use crate::poly::{from_terms, IntPoly};

/// Two-sided enclosure of `c = f(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CBracket {
    pub lower: f64,
    pub upper: f64,
    pub terms_used: usize,
}

impl CBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Number of series terms for [`eval_f`] when the caller has no preference.
///
/// Near the boundary of the ellipse `|T_{2n}(z)| ~ rho^{2n}`, so the terms
/// decay like `rho^{-2n}`; this picks `N` with `rho^{-2N} < 1e-16`, capped at
/// 500 (reached for `rho` below about 1.037).
pub fn default_terms(rho: f64) -> usize {
    let n = (16.0 / (2.0 * rho.log10())).ceil();
    if n.is_finite() {
        (n as usize).clamp(1, 500)
    } else {
        500
    }
}

/// True when the series converges too slowly for the default truncation to
/// reach double precision everywhere in the ellipse.
pub fn is_ill_conditioned(rho: f64) -> bool {
    rho < 1.01
}

/// Whether `z` lies in the closed ellipse with semi-axes `(rho +/- 1/rho)/2`.
pub fn in_closed_ellipse(z: C64, rho: f64) -> bool {
    ellipse_level(z, rho) <= 1.0 + 1e-14
}

/// `(Re z / a)^2 + (Im z / b)^2`.
fn ellipse_level(z: C64, rho: f64) -> f64 {
    let a = 0.5 * (rho + 1.0 / rho);
    let b = 0.5 * (rho - 1.0 / rho);
    (z.re / a).powi(2) + (z.im / b).powi(2)
}

/// `f(z)` truncated to `n_terms` terms of the exponent series.
pub fn eval_f(z: C64, rho: f64, n_terms: usize) -> Result<C64> {
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(LabError::domain("eval_f", format!("rho = {rho} must be > 1")));
    }
    if n_terms == 0 {
        return Err(LabError::domain("eval_f", "n_terms must be >= 1"));
    }
    if !in_closed_ellipse(z, rho) {
        return Err(LabError::domain(
            "eval_f",
            format!("z = {z} lies outside the ellipse for rho = {rho}"),
        ));
    }
    Ok(eval_f_unchecked(z, rho, n_terms))
}

fn eval_f_unchecked(z: C64, rho: f64, n_terms: usize) -> C64 {
    let z2 = z * z * 2.0 - 1.0; // T_2(z)
    // T_{2n}(z) = T_n(T_2(z)), generated by the recurrence in T_2.
    let (mut t_prev, mut t_cur) = (cr(1.0), z2);
    let inv4 = rho.powi(-4);
    let mut pw = 1.0; // rho^{-4n}
    let mut sum = cr(0.0);
    for n in 1..=n_terms {
        pw *= inv4;
        let weight = 2.0 * pw / (n as f64 * (1.0 + pw));
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += t_cur * (sign * weight);
        let next = z2 * t_cur * 2.0 - t_prev;
        t_prev = t_cur;
        t_cur = next;
    }
    z * (2.0 / rho) * sum.exp()
}

/// Product truncated to `n_factors` factors, together with a lower bound.
///
/// Every truncation of the product overestimates `c`. The log of the product
/// is an alternating series `sum 2 (-1)^n ln(1 + rho^{-4n})` with decreasing
/// terms; cutting it after `2N` terms leaves a tail bounded below by
/// `-2 ln(1 + rho^{-4(2N+1)})`, which gives the lower bound.
pub fn c_bracket(rho: f64, n_factors: usize) -> CBracket {
    assert!(rho > 1.0, "c_bracket needs rho > 1");
    let mut upper = 2.0 / rho;
    for n in 1..=n_factors {
        let nf = n as f64;
        let num = 1.0 + rho.powf(-8.0 * nf);
        let den = 1.0 + rho.powf(4.0 - 8.0 * nf);
        upper *= (num / den).powi(2);
    }
    let tail = 1.0 + rho.powf(-4.0 * (2 * n_factors + 1) as f64);
    CBracket {
        lower: upper / (tail * tail),
        upper,
        terms_used: n_factors,
    }
}

/// Smallest number of factors with bracket width below `tol`, up to `max`.
pub fn c_bracket_to_width(rho: f64, tol: f64, max: usize) -> CBracket {
    let mut b = c_bracket(rho, 0);
    for n in 1..=max {
        if b.width() < tol {
            break;
        }
        b = c_bracket(rho, n);
    }
    b
}

/// Closed-form upper bound on `c`: `2/rho` for `rho < sqrt 2`, otherwise
/// `2 / (rho sqrt(1 + 4 rho^-4))`.
pub fn c_upper_closed(rho: f64) -> f64 {
    if rho < std::f64::consts::SQRT_2 {
        2.0 / rho
    } else {
        2.0 / (rho * (1.0 + 4.0 / rho.powi(4)).sqrt())
    }
}

/// `||f(A) - c A||` with `c = f(1)` computed from the same truncation.
pub fn verify_fa_equals_ca(rho: f64, r: f64, n_terms: usize) -> Result<f64> {
    let params = RhoParams::new(rho, r)?;
    let a = build_a_rho(params)?;
    let c = eval_f(cr(1.0), rho, n_terms)?;
    let fa = a.holomorphic_calc(|z| eval_f_unchecked(z, rho, n_terms))?;
    Ok((fa - a.scale(c)).operator_norm())
}

/// Outcome of [`q_sign_chain_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QChainReport {
    pub pass: bool,
    /// The expanded coefficients agree with the product form.
    pub expansion_matches: bool,
    /// Each bounding step holds on `t >= 4` (certified by a Taylor shift).
    pub steps_hold: Vec<bool>,
    /// The last bound has only negative coefficients.
    pub final_negative: bool,
    pub grid_points: usize,
    /// First grid point where `q(t) > 0`, if any.
    pub first_failure: Option<f64>,
    /// Largest value of `q(t) / t^23` seen on the grid.
    pub worst_margin: f64,
}

/// The displayed expansion of `q(t)`, constant term first.
pub const Q_COEFFS: [i128; 24] = [
    4, 1, 16, 4, 40, 10, 80, 20, 124, 30, 156, 34, 168, 27, 136, 18, 96, -5, 52, -2, 16, -7, 8, -2,
];

/// `q(t) = (4 + t)(1 + t^2)^4 (1 + t^4)^4 - t^9 (1 + t)^4 (1 + t^3)^4`, expanded.
pub fn q_product_form() -> IntPoly {
    let lhs = &(&IntPoly::new(vec![4, 1]) * &IntPoly::new(vec![1, 0, 1]).pow(4))
        * &IntPoly::new(vec![1, 0, 0, 0, 1]).pow(4);
    let rhs = &(&IntPoly::monomial(1, 9) * &IntPoly::new(vec![1, 1]).pow(4))
        * &IntPoly::new(vec![1, 0, 0, 1]).pow(4);
    &lhs - &rhs
}

/// The bounding steps used to show `q(t) <= 0` for `t >= 4`.
pub fn q_chain_steps() -> Vec<IntPoly> {
    vec![
        IntPoly::new(Q_COEFFS.to_vec()),
        from_terms(&[(964, 16), (-5, 17), (52, 18), (-2, 19), (-12, 20)]),
        from_terms(&[(964, 16), (-5, 17), (-140, 18), (-2, 19)]),
        from_terms(&[(-1276, 16), (-5, 17), (-2, 19)]),
    ]
}

/// Check `q(t) <= 0` on `[4, 1000]` three ways: the displayed coefficients
/// against an independent expansion, a chain of upper bounds certified on
/// `t >= 4`, and a dense grid.
pub fn q_sign_chain_check() -> QChainReport {
    let q = IntPoly::new(Q_COEFFS.to_vec());
    let expansion_matches = q == q_product_form();
    let steps = q_chain_steps();
    let steps_hold: Vec<bool> = steps
        .windows(2)
        .map(|w| (&w[1] - &w[0]).nonneg_from(4))
        .collect();
    let final_negative = steps.last().unwrap().all_coeffs_nonpositive();

    let grid_points = 10_001;
    let mut first_failure = None;
    let mut worst_margin = f64::NEG_INFINITY;
    for k in 0..grid_points {
        let t = 4.0 + (1000.0 - 4.0) * k as f64 / (grid_points - 1) as f64;
        // Scale by t^-23 to stay far from overflow and keep the sign.
        let s = 1.0 / t;
        let scaled: f64 = Q_COEFFS
            .iter()
            .enumerate()
            .map(|(j, &c)| c as f64 * s.powi(23 - j as i32))
            .sum();
        worst_margin = worst_margin.max(scaled);
        if scaled > 0.0 && first_failure.is_none() {
            first_failure = Some(t);
        }
    }
    let pass = expansion_matches
        && steps_hold.iter().all(|&b| b)
        && final_negative
        && first_failure.is_none();
    QChainReport {
        pass,
        expansion_matches,
        steps_hold,
        final_negative,
        grid_points,
        first_failure,
        worst_margin,
    }
}
