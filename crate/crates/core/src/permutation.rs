//! Matrices `aI + DP` with `D` diagonal and `P` a permutation: relabeling by
//! cycles makes `DP` block diagonal, each block a diagonal times a cyclic
//! shift, and every Crouzeix-type check can be run block by block.
//!
//! Convention: `P[i][perm(i)] = 1`, so row `i` of `DP` holds `D[i]` in
//! column `perm(i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{gauss, theta_grid, MatrixN, C64, MAX_DIM};
use crate::error::{LabError, Result};
use crate::ratio::{search_worst_ratio, BoundaryCurve, PolyNorm, PolySpec, RatioResult, SampledBoundary, DEFAULT_SAMPLES};

/// Angles used for support functions and boundary points of `W`.
pub const THETA_GRID: usize = 720;
pub const REASSEMBLY_TOL: f64 = 1e-12;
pub const BLOCK_NORM_TOL: f64 = 1e-10;
pub const INCLUSION_TOL: f64 = 1e-9;
pub const RATIO_LIMIT: f64 = 2.0 + 1e-6;
pub const AGREEMENT_TOL: f64 = 1e-9;
/// Random polynomials drawn for the block-norm, similarity, and shift checks.
pub const SAMPLED_POLYS: usize = 8;

/// A bijection of `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermSpec {
    pub n: usize,
    pub perm: Vec<usize>,
}

impl PermSpec {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n == 0 || n > MAX_DIM {
            return Err(LabError::Dimension(format!("permutation size {n} must lie in 1..={MAX_DIM}")));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(LabError::Parse(format!("{perm:?} is not a bijection of 0..{n}")));
            }
            seen[p] = true;
        }
        Ok(PermSpec { n, perm })
    }

    pub fn identity(n: usize) -> Result<Self> {
        PermSpec::new((0..n).collect())
    }

    /// Parse cycle notation such as `(0 1)(2 3 4)`; entries may be separated
    /// by spaces or commas. Unlisted points are fixed. `n` defaults to one
    /// more than the largest listed index.
    pub fn parse_cycles(text: &str, n: Option<usize>) -> Result<Self> {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| LabError::Parse(format!("expected '(' in {text:?}")))?;
            let close = body
                .find(')')
                .ok_or_else(|| LabError::Parse(format!("unclosed cycle in {text:?}")))?;
            let cycle = body[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|e| LabError::Parse(format!("bad index {t:?}: {e}"))))
                .collect::<Result<Vec<usize>>>()?;
            cycles.push(cycle);
            rest = body[close + 1..].trim_start();
        }
        let largest = cycles.iter().flatten().copied().max();
        let n = match (n, largest) {
            (Some(n), Some(m)) if m >= n => {
                return Err(LabError::Parse(format!("index {m} out of range for n = {n}")));
            }
            (Some(n), _) => n,
            (None, Some(m)) => m + 1,
            (None, None) => return Err(LabError::Parse("empty cycle notation needs an explicit size".into())),
        };
        if n == 0 || n > MAX_DIM {
            return Err(LabError::Dimension(format!("permutation size {n} must lie in 1..={MAX_DIM}")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for cycle in &cycles {
            for (k, &i) in cycle.iter().enumerate() {
                if seen[i] {
                    return Err(LabError::Parse(format!("index {i} appears twice in {text:?}")));
                }
                seen[i] = true;
                perm[i] = cycle[(k + 1) % cycle.len()];
            }
        }
        PermSpec::new(perm)
    }

    /// Uniformly random permutation of size `n`.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        PermSpec::new(perm)
    }

    pub fn matrix(&self) -> MatrixN {
        MatrixN::from_fn(self.n, |i, j| C64::new(if self.perm[i] == j { 1.0 } else { 0.0 }, 0.0))
    }

    /// Cycles, each listed from its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = self.perm[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Cycle notation with fixed points shown as 1-cycles.
    pub fn to_cycle_string(&self) -> String {
        self.cycles()
            .iter()
            .map(|c| format!("({})", c.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")))
            .collect()
    }
}

/// `D P` for the diagonal entries `d`.
pub fn dp_matrix(d: &[C64], p: &PermSpec) -> MatrixN {
    MatrixN::from_fn(p.n, |i, j| if p.perm[i] == j { d[i] } else { C64::new(0.0, 0.0) })
}

/// `P D` for the diagonal entries `d`.
pub fn pd_matrix(d: &[C64], p: &PermSpec) -> MatrixN {
    MatrixN::from_fn(p.n, |i, j| if p.perm[i] == j { d[j] } else { C64::new(0.0, 0.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBlock {
    pub size: usize,
    /// Original indices in cycle order.
    pub indices: Vec<usize>,
    /// `diag(d[indices]) S` with `S` the cyclic shift `S[k][k+1 mod size] = 1`.
    pub matrix: MatrixN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleDecomposition {
    /// Permutation matrix `U` with `U (DP) U* = blockdiag(blocks)`.
    pub relabel: MatrixN,
    /// `order[new] = old`.
    pub order: Vec<usize>,
    pub blocks: Vec<CycleBlock>,
}

impl CycleDecomposition {
    pub fn block_diag(&self) -> MatrixN {
        let mats: Vec<MatrixN> = self.blocks.iter().map(|b| b.matrix.clone()).collect();
        MatrixN::block_diag(&mats)
    }

    /// Frobenius norm of `U m U* - blockdiag`.
    pub fn reassembly_residual(&self, m: &MatrixN) -> f64 {
        let conj = &(&self.relabel * m) * &self.relabel.adjoint();
        (&conj - &self.block_diag()).frobenius()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }
}

pub fn cycle_decompose(d: &[C64], p: &PermSpec) -> Result<CycleDecomposition> {
    if d.len() != p.n {
        return Err(LabError::Dimension(format!(
            "diagonal has {} entries but the permutation has size {}",
            d.len(),
            p.n
        )));
    }
    let mut order = Vec::with_capacity(p.n);
    let mut blocks = Vec::new();
    for cycle in p.cycles() {
        let k = cycle.len();
        let matrix = MatrixN::from_fn(k, |i, j| if (i + 1) % k == j { d[cycle[i]] } else { C64::new(0.0, 0.0) });
        order.extend_from_slice(&cycle);
        blocks.push(CycleBlock {
            size: k,
            indices: cycle,
            matrix,
        });
    }
    let relabel = MatrixN::from_fn(p.n, |i, j| C64::new(if order[i] == j { 1.0 } else { 0.0 }, 0.0));
    Ok(CycleDecomposition { relabel, order, blocks })
}

/// Boundary of `W(m)` traced by support points on a uniform angle grid;
/// the polygon is inscribed in `W(m)`.
pub fn numerical_range_polygon(m: &MatrixN, grid: usize) -> BoundaryCurve {
    let pts: Vec<C64> = theta_grid(grid).map(|t| m.support_point(t)).collect();
    BoundaryCurve::polygon(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    /// Measured quantity; the check passes iff `value <= tolerance`.
    pub value: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.to_string(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationReport {
    pub n: usize,
    pub a: C64,
    pub diag: Vec<C64>,
    pub perm: Vec<usize>,
    pub cycles: String,
    pub block_sizes: Vec<usize>,
    pub ratio: RatioResult,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
}

impl ObservationReport {
    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn random_poly<R: Rng>(max_degree: usize, rng: &mut R) -> PolySpec {
    let deg = rng.gen_range(0..=max_degree);
    loop {
        let coeffs: Vec<C64> = (0..=deg).map(|_| C64::new(gauss(rng), gauss(rng))).collect();
        if let Ok(p) = PolySpec::new(coeffs) {
            return p;
        }
    }
}

fn rel_diff(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1.0)
}

/// Run every check on `aI + DP`:
///
/// - `reassembly`: `||U(DP)U* - blockdiag||`.
/// - `inclusion`: largest excess of a block's support function (blocks of
///   `aI + DP`) over that of the whole matrix on the angle grid.
/// - `block_norm`: relative gap between `||p(DP)||` and `max_k ||p(A_k)||`.
/// - `ratio`: best ratio of a seeded search on `aI + DP`.
/// - `dp_pd`: relative gap between the ratios of `aI + DP` and `aI + PD`.
/// - `shift`: relative gap between the ratio of `p(. - a)` on `aI + DP` and
///   that of `p` on `DP` over the translated range.
pub fn verify_observation(
    a: C64,
    d: &[C64],
    p: &PermSpec,
    degree: usize,
    budget: usize,
    seed: u64,
) -> Result<ObservationReport> {
    let dec = cycle_decompose(d, p)?;
    let dp = dp_matrix(d, p);
    let pd = pd_matrix(d, p);
    let full = dp.shift(a);
    let full_pd = pd.shift(a);

    let reassembly = dec.reassembly_residual(&dp);

    let shifted_blocks: Vec<MatrixN> = dec.blocks.iter().map(|b| b.matrix.shift(a)).collect();
    let mut inclusion = f64::NEG_INFINITY;
    for t in theta_grid(THETA_GRID) {
        let h = full.support_function(t);
        for b in &shifted_blocks {
            inclusion = inclusion.max(b.support_function(t) - h);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let polys: Vec<PolySpec> = (0..SAMPLED_POLYS).map(|_| random_poly(degree.max(1), &mut rng)).collect();
    let mut block_norm: f64 = 0.0;
    for q in &polys {
        let whole = dp.poly_norm(&q.coeffs);
        let parts = dec.blocks.iter().map(|b| b.matrix.poly_norm(&q.coeffs)).fold(0.0, f64::max);
        block_norm = block_norm.max(rel_diff(whole, parts));
    }

    let curve = numerical_range_polygon(&full, THETA_GRID);
    let ratio = search_worst_ratio(&full, &curve, degree, budget, seed)?;

    let boundary = SampledBoundary::new(curve.clone(), DEFAULT_SAMPLES);
    let centered = SampledBoundary::new(curve.translated(-a), DEFAULT_SAMPLES);
    let mut dp_pd: f64 = 0.0;
    let mut shift: f64 = 0.0;
    for q in polys.iter().chain(std::iter::once(&ratio.best_poly)) {
        let den = boundary.max_modulus(&q.coeffs);
        if den < 1e-300 {
            continue;
        }
        let r_dp = full.poly_norm(&q.coeffs) / den;
        let r_pd = full_pd.poly_norm(&q.coeffs) / den;
        dp_pd = dp_pd.max(rel_diff(r_dp, r_pd));

        // q = p(. - a) with p = q(. + a)
        let base = q.shifted(-a);
        let den0 = centered.max_modulus(&base.coeffs);
        if den0 < 1e-300 {
            continue;
        }
        let r0 = dp.poly_norm(&base.coeffs) / den0;
        shift = shift.max(rel_diff(r_dp, r0));
    }

    let checks = vec![
        CheckOutcome::new("reassembly", reassembly, REASSEMBLY_TOL),
        CheckOutcome::new("inclusion", inclusion, INCLUSION_TOL),
        CheckOutcome::new("block_norm", block_norm, BLOCK_NORM_TOL),
        CheckOutcome::new("ratio", ratio.best_ratio, RATIO_LIMIT),
        CheckOutcome::new("dp_pd", dp_pd, AGREEMENT_TOL),
        CheckOutcome::new("shift", shift, AGREEMENT_TOL),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(ObservationReport {
        n: p.n,
        a,
        diag: d.to_vec(),
        perm: p.perm.clone(),
        cycles: p.to_cycle_string(),
        block_sizes: dec.block_sizes(),
        ratio,
        checks,
        pass,
    })
}

/// A random instance: size in `1..=max_n`, complex Gaussian diagonal, and a
/// shift that is zero half of the time.
pub fn random_instance<R: Rng>(max_n: usize, rng: &mut R) -> Result<(C64, Vec<C64>, PermSpec)> {
    let n = rng.gen_range(1..=max_n.clamp(1, MAX_DIM));
    let d: Vec<C64> = (0..n).map(|_| C64::new(gauss(rng), gauss(rng))).collect();
    let a = if rng.gen_bool(0.5) {
        C64::new(0.0, 0.0)
    } else {
        C64::new(gauss(rng), gauss(rng))
    };
    Ok((a, d, PermSpec::random(n, rng)?))
}
