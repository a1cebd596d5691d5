//! Numerical replay of the inequality chains behind the region certificates.
//!
//! Every claim is evaluated on a dense grid (10^4 points for one-dimensional
//! claims, 200 x 200 for two-dimensional ones) and, where the claim is an
//! algebraic identity between integer polynomials, compared exactly. Margins
//! are oriented so that a claim holds iff its margin is `>= 0` (or `> 0` for
//! strict claims). These are confidence checks, not formal proofs.

use serde::{Deserialize, Serialize};

use super::{p_smallr, r1, R1_TOL, STRIP_DIVISOR};
use crate::conformal::q_sign_chain_check;
use crate::family::{x_of_r, y_of_rho};
use crate::poly::{from_terms, IntPoly};
use crate::similarity::psi_unchecked;

/// Grid size for one-dimensional claims.
pub const GRID_1D: usize = 10_000;
/// Grid size per axis for two-dimensional claims.
pub const GRID_2D: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub label: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub claims: Vec<ClaimResult>,
}

impl ChainResult {
    fn from_claims(claims: Vec<ClaimResult>) -> Self {
        let worst = claims
            .iter()
            .min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin))
            .cloned();
        let pass = claims.iter().all(|c| c.pass);
        let (worst_margin, worst_point) = worst
            .map(|c| (c.worst_margin, c.worst_point))
            .unwrap_or((f64::INFINITY, Vec::new()));
        ChainResult {
            pass,
            worst_margin,
            worst_point,
            claims,
        }
    }

    pub fn failing(&self) -> Vec<&ClaimResult> {
        self.claims.iter().filter(|c| !c.pass).collect()
    }
}

/// One row of the H table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEntry {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub value: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofReplayReport {
    pub q_chain: ChainResult,
    pub strip_chain: ChainResult,
    pub p1_p2_p3_chain: ChainResult,
    pub p4_p5_chain: ChainResult,
    pub p6_p7: ChainResult,
    pub p8_p9_chain: ChainResult,
    pub b_sign: ChainResult,
    pub f_sign: ChainResult,
    pub q_sign: ChainResult,
    pub h_table: ChainResult,
    pub h_values: Vec<HEntry>,
}

impl ProofReplayReport {
    pub fn chains(&self) -> Vec<(&'static str, &ChainResult)> {
        vec![
            ("q_chain", &self.q_chain),
            ("strip_chain", &self.strip_chain),
            ("p1_p2_p3_chain", &self.p1_p2_p3_chain),
            ("p4_p5_chain", &self.p4_p5_chain),
            ("p6_p7", &self.p6_p7),
            ("p8_p9_chain", &self.p8_p9_chain),
            ("b_sign", &self.b_sign),
            ("f_sign", &self.f_sign),
            ("q_sign", &self.q_sign),
            ("h_table", &self.h_table),
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.chains().iter().all(|(_, c)| c.pass)
    }
}

/// Run every chain.
pub fn replay_proofs() -> ProofReplayReport {
    let (h_table, h_values) = h_table_chain();
    ProofReplayReport {
        q_chain: q_chain(),
        strip_chain: strip_chain(),
        p1_p2_p3_chain: p1_p2_p3_chain(),
        p4_p5_chain: p4_p5_chain(),
        p6_p7: p6_p7_chain(),
        p8_p9_chain: p8_p9_chain(),
        b_sign: b_sign_chain(),
        f_sign: f_sign_chain(),
        q_sign: q_sign_chain(),
        h_table,
        h_values,
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

/// Minimum of `margin` over a 1-D grid; pass iff the minimum is `> 0`
/// (`strict`) or `>= 0`.
fn claim_1d(label: &str, lo: f64, hi: f64, strict: bool, margin: impl Fn(f64) -> f64) -> ClaimResult {
    let mut worst = f64::INFINITY;
    let mut at = lo;
    for t in linspace(lo, hi, GRID_1D) {
        let m = margin(t);
        if !(m >= worst) {
            worst = m;
            at = t;
        }
    }
    ClaimResult {
        label: label.to_string(),
        pass: if strict { worst > 0.0 } else { worst >= 0.0 },
        worst_margin: worst,
        worst_point: vec![at],
    }
}

fn claim_2d(
    label: &str,
    (xlo, xhi): (f64, f64),
    (ylo, yhi): (f64, f64),
    strict: bool,
    margin: impl Fn(f64, f64) -> f64,
) -> ClaimResult {
    let mut worst = f64::INFINITY;
    let mut at = (xlo, ylo);
    for x in linspace(xlo, xhi, GRID_2D) {
        for y in linspace(ylo, yhi, GRID_2D) {
            let m = margin(x, y);
            if !(m >= worst) {
                worst = m;
                at = (x, y);
            }
        }
    }
    ClaimResult {
        label: label.to_string(),
        pass: if strict { worst > 0.0 } else { worst >= 0.0 },
        worst_margin: worst,
        worst_point: vec![at.0, at.1],
    }
}

fn claim_point(label: &str, margin: f64, point: Vec<f64>, strict: bool) -> ClaimResult {
    ClaimResult {
        label: label.to_string(),
        pass: if strict { margin > 0.0 } else { margin >= 0.0 },
        worst_margin: margin,
        worst_point: point,
    }
}

fn claim_bool(label: &str, ok: bool) -> ClaimResult {
    ClaimResult {
        label: label.to_string(),
        pass: ok,
        worst_margin: if ok { 0.0 } else { -1.0 },
        worst_point: Vec::new(),
    }
}

/// Sign claims `sign * p^(n) > 0` on `[lo, hi]` for each `(n, sign)`.
fn derivative_claims(name: &str, p: &IntPoly, lo: f64, hi: f64, signs: &[(usize, f64)]) -> Vec<ClaimResult> {
    signs
        .iter()
        .map(|&(n, sign)| {
            let d = p.derivative_n(n);
            let scale = d.coeffs().iter().map(|c| (*c as f64).abs()).fold(1.0, f64::max);
            let rel = if sign > 0.0 { ">" } else { "<" };
            claim_1d(&format!("{name}^({n}) {rel} 0 on [{lo}, {hi}]"), lo, hi, true, |t| {
                sign * d.eval_f64(t) / scale
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// polynomials in t = r^2
// ---------------------------------------------------------------------------

pub fn p1() -> IntPoly {
    from_terms(&[(2, 0), (-4, 2), (-60, 3), (-20, 4), (240, 5), (-20, 6), (-6, 8)])
}

pub fn p2() -> IntPoly {
    from_terms(&[(-2, 0), (10, 1), (-4, 2), (-2, 4)])
}

pub fn p3() -> IntPoly {
    &from_terms(&[(1, 0), (1, 2)]) * &from_terms(&[(1, 0), (-8, 2), (15, 4), (9, 6)])
}

pub fn p4() -> IntPoly {
    from_terms(&[
        (2, 0),
        (-10, 1),
        (2, 2),
        (10, 3),
        (19, 4),
        (410, 5),
        (-812, 6),
        (-1020, 7),
        (2435, 8),
        (-810, 9),
        (84, 10),
        (18, 12),
    ])
}

pub fn p5() -> IntPoly {
    from_terms(&[(-2, 0), (10, 1), (-44, 2), (20, 3), (212, 4), (-270, 5), (20, 6), (6, 8)])
}

pub fn p6() -> IntPoly {
    &p4() - &IntPoly::monomial(2, 12)
}

pub fn p7() -> IntPoly {
    &p4() - &IntPoly::monomial(1, 12)
}

pub fn p8() -> IntPoly {
    let (a, b, c) = (p4(), p5(), p3());
    &(&a * &a) - &(&(&b * &b) * &c)
}

pub fn p9() -> IntPoly {
    from_terms(&[
        (-140, 0),
        (120, 1),
        (496, 2),
        (-3116, 3),
        (4400, 4),
        (10364, 5),
        (-38295, 6),
        (12584, 7),
        (77722, 8),
        (-69288, 9),
        (9009, 10),
        (1728, 11),
        (1728, 12),
    ])
}

/// `rho^2` on the curve `r = r1(rho)`, as a function of `r`.
pub fn rhosq_on_r1(r: f64) -> f64 {
    let r4 = r.powi(4);
    let rad = (1.0 + r4) * (1.0 - 8.0 * r4 + 15.0 * r4 * r4 + 9.0 * r4 * r4 * r4);
    2.0 * (3.0 * r4 * r4 + 4.0 * r4 - 1.0 + rad.sqrt()) / (1.0 - 3.0 * r4)
}

/// `B(r, rho)`.
pub fn b_poly(r: f64, rho: f64) -> f64 {
    let (r2, rho2) = (r * r, rho * rho);
    let r4 = r2 * r2;
    rho2 * rho2 * (5.0 - 10.0 * r2 + 2.0 * r4 + r4 * r4) + 4.0 * (5.0 * r2 - 4.0) * (7.0 * r4 - 1.0) * rho2
        + 12.0 * r4 * (64.0 * r4 - 13.0)
}

/// `10 r^2 + 5 r^2 rho^2 - 70 r^6 - (1 + r^4)^2 rho^2`.
fn lead_term(r: f64, rho2: f64) -> f64 {
    let r2 = r * r;
    10.0 * r2 + 5.0 * r2 * rho2 - 70.0 * r2 * r2 * r2 - (1.0 + r2 * r2).powi(2) * rho2
}

/// `F(y) = (61 y^2 - 75 y sqrt(y^2 - 4) - 50) / 200`.
pub fn f_of_y(y: f64) -> f64 {
    (61.0 * y * y - 75.0 * y * (y * y - 4.0).sqrt() - 50.0) / 200.0
}

pub fn f_prime(y: f64) -> f64 {
    let s = (y * y - 4.0).sqrt();
    (122.0 * y - 75.0 * s - 75.0 * y * y / s) / 200.0
}

/// `Q(lambda)` whose smaller zero is `psi(x, y)`.
pub fn q_parabola(x: f64, y: f64, lambda: f64) -> f64 {
    4.0 * (4.0 * x.powi(4) * lambda * lambda - 20.0 * x * (2.0 * y * y - x * x) * lambda + 25.0 * x * x
        + 16.0 * y.powi(4)
        - 16.0 * x * x * y * y)
}

/// `H(rho_-, rho_+) = 100 x^2 - b_- y_-^2 + a_+ y_+^4` at `r = 0.77`.
pub fn h_value(rho_minus: f64, rho_plus: f64) -> f64 {
    let x = x_of_r(0.77);
    let ym = y_of_rho(rho_minus);
    let yp = y_of_rho(rho_plus);
    let am = rho_minus * rho_minus / (ym * ym);
    let ap = x.powi(4) * am * am - 40.0 * x * am + 64.0;
    let bm = (64.0 - 20.0 * x) * x * x;
    100.0 * x * x - bm * ym * ym + ap * yp.powi(4)
}

/// Displayed approximations of the H table.
pub const H_TABLE: [(f64, f64, f64); 5] = [
    (16.0, 21.0, -2524.0),
    (14.0, 16.0, -5167.0),
    (12.0, 14.0, -274.0),
    (11.0, 12.0, -1994.0),
    (10.0, 11.0, -721.0),
];

/// `P(mu^2)` for the diagonal strip similarity with `mu = y / 2.02`.
pub fn strip_p_of_mu(x: f64, y: f64) -> f64 {
    let m2 = (y / STRIP_DIVISOR).powi(2);
    m2 * m2 - ((x / 2.0 - 1.0).powi(2) + y * y / x) * m2 + 0.25 * (2.0 - x + y * y / x).powi(2)
}

// ---------------------------------------------------------------------------
// chains
// ---------------------------------------------------------------------------

fn q_chain() -> ChainResult {
    let rep = q_sign_chain_check();
    let mut claims = vec![
        claim_bool("expanded coefficients match the product form", rep.expansion_matches),
        claim_bool("final bound has negative coefficients", rep.final_negative),
        claim_point(
            "q(t) / t^23 < 0 on [4, 1000]",
            -rep.worst_margin,
            rep.first_failure.map(|t| vec![t]).unwrap_or_default(),
            true,
        ),
    ];
    for (k, ok) in rep.steps_hold.iter().enumerate() {
        claims.push(claim_bool(&format!("bounding step {} holds for t >= 4", k + 1), *ok));
    }
    ChainResult::from_claims(claims)
}

fn strip_chain() -> ChainResult {
    let (xlo, xhi) = (2.2795, 2.35);
    let (ylo, yhi) = (10.0, 30.0);
    let k = 101.0f64 * 101.0;
    let dx_display = |x: f64, y: f64| {
        -2.0 * k * x.powi(3) + k * x.powi(4) - 2.0 * k * x * y * y + 5000.0 * x.powi(3) * y * y
            - 2500.0 * x.powi(4) * y * y
            - k * y.powi(4)
            + 5000.0 * x * y.powi(4)
    };
    let dy_criterion = |x: f64, y: f64| {
        (5000.0 * x - k).powi(2) * y * y - k * (x * x - 2.0 * x) * (k - 2500.0 * x + 1250.0 * x * x)
    };
    let px = IntPoly::new(vec![10406040100, -9992879198, 2344934599, 51005000, -12751250]);
    let lower_quad = |y: f64| 2393.0 / 2.0 * y.powi(4) - 103947096121.0 / 1600000.0 * y * y + 170383737131921561.0 / 16e12;
    let lower_quad_dy = |y: f64| 4.0 * 2393.0 / 2.0 * y.powi(3) - 2.0 * 103947096121.0 / 1600000.0 * y;

    let claims = vec![
        claim_point("P(mu^2) > 0 at (2.2795, 10)", strip_p_of_mu(xlo, 10.0), vec![xlo, 10.0], true),
        claim_2d("displayed expression equals 2 101^2 x^3 dP/dx", (xlo, xhi), (ylo, yhi), false, |x, y| {
            let h = 1e-6;
            let fd = (strip_p_of_mu(x + h, y) - strip_p_of_mu(x - h, y)) / (2.0 * h);
            let lhs = 2.0 * k * x.powi(3) * fd;
            let rhs = dx_display(x, y);
            1e-5 - (lhs - rhs).abs() / rhs.abs().max(1.0)
        }),
        claim_2d("dP(mu^2)/dx > 0", (xlo, xhi), (ylo, yhi), true, |x, y| dx_display(x, y) / y.powi(4)),
        claim_2d("dP(mu^2)/dy > 0", (xlo, xhi), (ylo, yhi), true, |x, y| {
            let h = 1e-5;
            (strip_p_of_mu(x, y + h) - strip_p_of_mu(x, y - h)) / (2.0 * h) / y.powi(3)
        }),
        claim_2d("dy criterion > 0", (xlo, xhi), (ylo, yhi), true, |x, y| dy_criterion(x, y) / (y * y)),
        claim_2d("lower quadratic bounds the dx expression", (xlo, xhi), (ylo, yhi), false, |x, y| {
            (dx_display(x, y) - lower_quad(y)) / y.powi(4)
        }),
        claim_point("lower quadratic > 0 at y = 10", lower_quad(10.0), vec![10.0], true),
        claim_point("lower quadratic increasing at y = 10", lower_quad_dy(10.0), vec![10.0], true),
        claim_1d("lower quadratic > 0 on [10, 30]", ylo, yhi, true, lower_quad),
        claim_1d("p(x) equals dy criterion at y = 10", xlo, xhi, false, |x| {
            1e-9 - (px.eval_f64(x) - dy_criterion(x, 10.0)).abs() / px.eval_f64(x).abs()
        }),
        claim_1d("p'''(x) < 0 on (1, 2.35]", 1.0 + 1e-9, xhi, true, |x| -px.derivative_n(3).eval_f64(x)),
        claim_1d("p''(x) > 1e9 on [2.2795, 2.35]", xlo, xhi, true, |x| px.derivative_n(2).eval_f64(x) - 1e9),
        claim_1d("p'(x) > 1e8 on [2.2795, 2.35]", xlo, xhi, true, |x| px.derivative().eval_f64(x) - 1e8),
        claim_1d("p(x) > 1e7 on [2.2795, 2.35]", xlo, xhi, true, |x| px.eval_f64(x) - 1e7),
        claim_2d("second condition: b <= 2 mu^2", (xlo, xhi), (ylo, yhi), false, |x, y| {
            2.0 * (y / STRIP_DIVISOR).powi(2) - (y * y / x - x + 1.0 + x * x / 4.0)
        }),
        claim_point(
            "100 > 1.01^2 2.35 0.35^2 / (2 2.2795 - 2.02^2)",
            100.0 - 1.01f64.powi(2) * 2.35 * 0.35f64.powi(2) / (2.0 * 2.2795 - 2.02f64.powi(2)),
            vec![],
            true,
        ),
        claim_1d("y = rho + 1/rho <= 1.01 rho for rho >= 10", 10.0, 1e4, false, |rho| 1.01 * rho - y_of_rho(rho)),
    ];
    ChainResult::from_claims(claims)
}

fn p1_p2_p3_chain() -> ChainResult {
    let (lo, hi) = (0.5, 1.0 / 3f64.sqrt());
    let (a, b, c) = (p1(), p2(), p3());
    let at_half = a.eval_f64(0.5) + b.eval_f64(0.5) * c.eval_f64(0.5).sqrt();
    let mut claims = vec![
        claim_point("p1(1/2) + p2(1/2) sqrt(p3(1/2)) = 0", 1e-14 - at_half.abs(), vec![0.5], false),
        claim_1d("p3'(t) >= p3'(1/2) = 25/16", lo, hi, false, |t| c.derivative().eval_f64(t) - 25.0 / 16.0),
        claim_point("p3'(1/2) = 25/16", 1e-12 - (c.derivative().eval_f64(0.5) - 25.0 / 16.0).abs(), vec![0.5], false),
        claim_1d("p2'(t) >= p2'(1/sqrt 3) > 3", lo, hi, true, |t| b.derivative().eval_f64(t) - 3.0),
        claim_1d("p2 increasing", lo, hi, true, |t| b.derivative().eval_f64(t)),
        claim_1d("p3 increasing", lo, hi, true, |t| c.derivative().eval_f64(t)),
        claim_1d("lead term equals (p1 + p2 sqrt p3) / (1 - 3t^2) on r = r1", lo, 4.0 / 7.0, false, |t| {
            let r = t.sqrt();
            let lhs = lead_term(r, rhosq_on_r1(r));
            let rhs = (a.eval_f64(t) + b.eval_f64(t) * c.eval_f64(t).sqrt()) / (1.0 - 3.0 * t * t);
            1e-9 - (lhs - rhs).abs() / (1.0 + rhs.abs())
        }),
        claim_1d("p1 + p2 sqrt p3 >= 0", lo, 4.0 / 7.0, false, |t| {
            a.eval_f64(t) + b.eval_f64(t) * c.eval_f64(t).sqrt() + 1e-13
        }),
    ];
    claims.extend(derivative_claims("p1", &a, lo, hi, &[(5, 1.0), (4, 1.0), (3, 1.0), (2, 1.0), (1, 1.0)]));
    ChainResult::from_claims(claims)
}

fn p4_p5_chain() -> ChainResult {
    let (lo, hi) = (0.5, 4.0 / 7.0);
    let (a, b, c) = (p4(), p5(), p3());
    let mut claims = vec![
        claim_1d("(1 - 3r^4)^2 B / 4 equals p4 + p5 sqrt p3 on r = r1", lo, hi, false, |t| {
            let r = t.sqrt();
            let lhs = (1.0 - 3.0 * t * t).powi(2) / 4.0 * b_poly(r, rhosq_on_r1(r).sqrt());
            let rhs = a.eval_f64(t) + b.eval_f64(t) * c.eval_f64(t).sqrt();
            1e-9 - (lhs - rhs).abs() / (1.0 + a.eval_f64(t).abs())
        }),
        claim_1d("p4 > 0", lo, hi, true, |t| a.eval_f64(t)),
        claim_1d("p5 < 0", lo, hi, true, |t| -b.eval_f64(t)),
        claim_point("p5(4/7) < 0", -b.eval_f64(hi), vec![hi], true),
        claim_1d("p4 + p5 sqrt p3 <= 0", lo, hi, false, |t| {
            -(a.eval_f64(t) + b.eval_f64(t) * c.eval_f64(t).sqrt()) + 1e-13
        }),
    ];
    claims.extend(derivative_claims(
        "p5",
        &b,
        lo,
        hi,
        &[(1, 1.0), (2, -1.0), (3, -1.0), (4, -1.0), (5, -1.0), (6, 1.0)],
    ));
    ChainResult::from_claims(claims)
}

fn p6_p7_chain() -> ChainResult {
    let mid = 0.5327;
    let (a6, a7) = (p6(), p7());
    let mut claims = vec![
        claim_point("p6(0.5327) > 0", a6.eval_f64(mid), vec![mid], true),
        claim_1d("p6 > 0 on [1/2, 0.5327]", 0.5, mid, true, |t| a6.eval_f64(t)),
        claim_1d("p7 > 0 on [0.5327, 4/7]", mid, 4.0 / 7.0, true, |t| a7.eval_f64(t)),
        claim_1d("p4 > p7 on [0.5327, 4/7]", mid, 4.0 / 7.0, true, |t| p4().eval_f64(t) - a7.eval_f64(t)),
    ];
    let mut s6: Vec<(usize, f64)> = (3..=10).map(|n| (n, 1.0)).collect();
    s6.extend([(1, -1.0), (2, -1.0)]);
    claims.extend(derivative_claims("p6", &a6, 0.5, mid, &s6));
    let mut s7: Vec<(usize, f64)> = (2..=10).map(|n| (n, 1.0)).collect();
    s7.push((1, -1.0));
    claims.extend(derivative_claims("p7", &a7, mid, 4.0 / 7.0, &s7));
    ChainResult::from_claims(claims)
}

fn p8_p9_chain() -> ChainResult {
    let (lo, hi) = (0.5, 4.0 / 7.0);
    let factor = &(&IntPoly::monomial(1, 2) * &IntPoly::new(vec![-1, 2]).pow(2)) * &IntPoly::new(vec![1, 0, -3]).pow(2);
    let residual = &p8() - &(&factor * &p9());
    let max_residual = residual.coeffs().iter().map(|c| c.abs()).max().unwrap_or(0);
    let q9 = p9();
    let at_end = q9.eval_f64(hi);
    let mut claims = vec![
        claim_point(
            "p8 = t^2 (2t-1)^2 (1-3t^2)^2 p9 (max integer coefficient residual)",
            -(max_residual as f64),
            vec![],
            false,
        ),
        claim_bool("p9(4/7) < 0 exactly", q9.sign_at_rational(4, 7) == Some(-1)),
        claim_1d("p9(t) <= p9(4/7) on [1/2, 4/7]", lo, hi, false, |t| at_end - q9.eval_f64(t) + 1e-12),
        claim_1d("p8 <= 0 on [1/2, 4/7]", lo, hi, false, |t| -p8().eval_f64(t) + 1e-12),
    ];
    let mut s9: Vec<(usize, f64)> = vec![(10, 1.0), (9, 1.0), (8, -1.0), (7, -1.0), (6, -1.0)];
    s9.extend((1..=5).map(|n| (n, 1.0)));
    claims.extend(derivative_claims("p9", &q9, lo, hi, &s9));
    ChainResult::from_claims(claims)
}

fn b_sign_chain() -> ChainResult {
    let (lo, hi) = (2.5, 10.0);
    let claims = vec![
        claim_1d("B(r1(rho), rho) <= 0 on [5/2, 10]", lo, hi, false, |rho| {
            let r = r1(rho, R1_TOL);
            -b_poly(r, rho) / rho.powi(4) + 1e-12
        }),
        claim_1d("lead term >= 0 on r = r1", lo, hi, false, |rho| {
            lead_term(r1(rho, R1_TOL), rho * rho) / (rho * rho) + 1e-12
        }),
        claim_1d("4 psi / rho^2 <= 1 on r = r1", lo, hi, false, |rho| {
            let r = r1(rho, R1_TOL);
            1.0 - 4.0 * psi_unchecked(x_of_r(r), y_of_rho(rho)) / (rho * rho)
        }),
        claim_1d("psi in (r, rho) form matches psi(x, y) on r = r1", lo, hi, false, |rho| {
            let r = r1(rho, R1_TOL);
            let (r2, rho2) = (r * r, rho * rho);
            let r4 = r2 * r2;
            let rad = (rho2 + 4.0 - 12.0 * r4) * (rho2 - 16.0 * r4) * (-4.0 + 17.0 * r4 - 4.0 * r4 * r4);
            let alt = (10.0 * r2 + 5.0 * r2 * rho2 - 70.0 * r2 * r4 - rad.max(0.0).sqrt()) / (4.0 * (1.0 + r4).powi(2));
            let direct = psi_unchecked(x_of_r(r), y_of_rho(rho));
            1e-8 - (alt - direct).abs() / direct
        }),
        claim_1d("-4 + 17 s - 4 s^2 >= 0 for s = r^4 in [1/4, 1/3]", 0.25, 1.0 / 3.0, false, |s| {
            -4.0 + 17.0 * s - 4.0 * s * s
        }),
        claim_point("p(2/sqrt 7, 10) > 0", p_smallr(2.0 / 7f64.sqrt(), 10.0), vec![2.0 / 7f64.sqrt(), 10.0], true),
        claim_1d("rho^2 formula inverts p(r, rho) = 0", lo, hi, false, |rho| {
            let r = r1(rho, R1_TOL);
            1e-6 - (rhosq_on_r1(r) - rho * rho).abs() / (rho * rho)
        }),
    ];
    ChainResult::from_claims(claims)
}

fn f_sign_chain() -> ChainResult {
    let claims = vec![
        claim_point("F(2.96) > 0", f_of_y(2.96), vec![2.96], true),
        claim_1d("F'(y) < 0 on [2.5, 3]", 2.5, 3.0, true, |y| -f_prime(y)),
        claim_1d("F(y) = psi(2, y) - psi(5/2, y)", 2.5, 3.0, false, |y| {
            1e-12 - (f_of_y(y) - (psi_unchecked(2.0, y) - psi_unchecked(2.5, y))).abs()
        }),
        claim_1d("F'(y) matches a finite difference", 2.5, 3.0, false, |y| {
            let h = 1e-6;
            let fd = (f_of_y(y + h) - f_of_y(y - h)) / (2.0 * h);
            1e-6 - (fd - f_prime(y)).abs()
        }),
        claim_point(
            "rho + 1/rho <= 2.96 for rho <= 2.571",
            2.96 - y_of_rho(2.571),
            vec![2.571],
            true,
        ),
    ];
    ChainResult::from_claims(claims)
}

fn q_sign_chain() -> ChainResult {
    let x = x_of_r(0.77);
    let alpha = |rho: f64| 1.0 / (1.0 + 1.0 / (rho * rho)).powi(2);
    let a_of = |rho: f64| x.powi(4) * alpha(rho).powi(2) - 40.0 * x * alpha(rho) + 64.0;
    let b_of = |rho: f64| 64.0 * x * x - 20.0 * x.powi(3) * alpha(rho);
    let claims = vec![
        claim_1d("psi(x, y) is the smaller zero of Q (r = 0.77)", 10.0, 1000.0, false, |rho| {
            let y = y_of_rho(rho);
            let ps = psi_unchecked(x, y);
            let scale = 4.0 * (4.0 * x.powi(4) * ps * ps + 16.0 * y.powi(4));
            let vertex = 20.0 * x * (2.0 * y * y - x * x) / (8.0 * x.powi(4));
            let on_zero = 1e-9 - q_parabola(x, y, ps).abs() / scale;
            on_zero.min(vertex - ps)
        }),
        claim_1d("Q(rho^2/4) = 100x^2 - (b - a y^2) y^2", 10.0, 1000.0, false, |rho| {
            let y = y_of_rho(rho);
            let lhs = q_parabola(x, y, rho * rho / 4.0);
            let rhs = 100.0 * x * x - (b_of(rho) - a_of(rho) * y * y) * y * y;
            1e-9 - (lhs - rhs).abs() / (1.0 + 16.0 * y.powi(4))
        }),
        claim_1d("Q(rho^2/4) <= 0 on [10, 21]", 10.0, 21.0, false, |rho| {
            -q_parabola(x, y_of_rho(rho), rho * rho / 4.0) / rho.powi(4)
        }),
        claim_1d("Q(rho^2/4) <= 0 on [21, 1e4]", 21.0, 1e4, false, |rho| {
            -q_parabola(x, y_of_rho(rho), rho * rho / 4.0) / rho.powi(4)
        }),
        claim_point("a(21) < 0", -a_of(21.0), vec![21.0], true),
        claim_point("a(20) > 0", a_of(20.0), vec![20.0], true),
        claim_1d("a decreasing in rho on [10, 1e4]", 10.0, 1e4, true, |rho| {
            let h = 1e-6 * rho;
            (a_of(rho - h) - a_of(rho + h)) / (2.0 * h) * rho.powi(3)
        }),
        claim_1d("b >= (64 - 20x) x^2 > 18 x^2", 10.0, 1e4, true, |rho| {
            (b_of(rho) - (64.0 - 20.0 * x) * x * x + 1e-12).min((64.0 - 20.0 * x) * x * x - 18.0 * x * x)
        }),
        claim_1d("(100 - 18 y^2) x^2 < 0 for rho >= 10", 10.0, 1e4, true, |rho| {
            -(100.0 - 18.0 * y_of_rho(rho).powi(2)) * x * x
        }),
    ];
    ChainResult::from_claims(claims)
}

fn h_table_chain() -> (ChainResult, Vec<HEntry>) {
    let x = x_of_r(0.77);
    let mut claims = Vec::new();
    let mut entries = Vec::new();
    for &(lo, hi, reference) in &H_TABLE {
        let value = h_value(lo, hi);
        entries.push(HEntry {
            rho_minus: lo,
            rho_plus: hi,
            value,
            reference,
        });
        claims.push(claim_point(&format!("H({lo}, {hi}) < 0"), -value, vec![lo, hi], true));
        claims.push(claim_point(
            &format!("H({lo}, {hi}) within 1% of {reference}"),
            0.01 - ((value - reference) / reference).abs(),
            vec![lo, hi],
            false,
        ));
        claims.push(claim_1d(&format!("Q(rho^2/4) <= H({lo}, {hi}) on the interval"), lo, hi, false, |rho| {
            (value - q_parabola(x, y_of_rho(rho), rho * rho / 4.0)) / rho.powi(4) + 1e-12
        }));
    }
    // the intervals tile [10, 21]
    let tiles = H_TABLE.iter().map(|&(lo, hi, _)| (lo, hi)).collect::<Vec<_>>();
    let covered = {
        let mut t = tiles.clone();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        t.first().map(|f| f.0) == Some(10.0)
            && t.last().map(|l| l.1) == Some(21.0)
            && t.windows(2).all(|w| w[0].1 == w[1].0)
    };
    claims.push(claim_bool("intervals tile [10, 21]", covered));
    (ChainResult::from_claims(claims), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(c: &ChainResult) -> String {
        c.failing()
            .iter()
            .map(|f| format!("{} (margin {:e} at {:?})", f.label, f.worst_margin, f.worst_point))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn every_chain_passes() {
        let rep = replay_proofs();
        for (name, chain) in rep.chains() {
            assert!(chain.pass, "{name}:\n{}", show(chain));
            assert!(chain.worst_margin >= 0.0);
        }
        assert!(rep.all_pass());
    }

    #[test]
    fn h_values_match_reference() {
        let want = [-2524.46, -5167.19, -274.12, -1994.34, -721.21];
        for (&(lo, hi, reference), w) in H_TABLE.iter().zip(want) {
            let v = h_value(lo, hi);
            assert!((v - w).abs() < 0.01, "H({lo},{hi}) = {v}");
            assert!(((v - reference) / reference).abs() < 0.01);
        }
    }

    #[test]
    fn f_at_296_is_small_and_positive() {
        let v = f_of_y(2.96);
        assert!(v > 0.0 && v < 1e-3, "{v}");
        assert!((v - 1.469e-4).abs() < 1e-6);
    }

    #[test]
    fn p8_factorization_is_exact() {
        let factor = &(&IntPoly::monomial(1, 2) * &IntPoly::new(vec![-1, 2]).pow(2)) * &IntPoly::new(vec![1, 0, -3]).pow(2);
        assert_eq!(p8(), &factor * &p9());
    }
}
