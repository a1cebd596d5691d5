//! Empirical Crouzeix ratios `||p(A)|| / max_{W(A)} |p|` and a seeded
//! adversarial search over polynomial coefficients.
//!
//! The denominator is the maximum of `|p|` over the boundary of `W(A)`
//! (maximum principle), sampled uniformly and then refined by golden-section
//! search around the best sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{eval_scalar_poly, gauss, Matrix3, MatrixN, C64};
use crate::error::{LabError, Result};
use crate::family::{build_a_rho, RhoParams};

/// Boundary samples used by the search.
pub const DEFAULT_SAMPLES: usize = 2048;
/// Largest polynomial degree accepted.
pub const MAX_DEGREE: usize = 12;
/// Denominators below this are rejected.
pub const MIN_DENOMINATOR: f64 = 1e-300;

/// Coefficients of `p(z) = sum coeffs[k] z^k`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySpec {
    pub degree: usize,
    pub coeffs: Vec<C64>,
}

impl PolySpec {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_DEGREE + 1 {
            return Err(LabError::Dimension(format!(
                "polynomial needs 1..={} coefficients, got {}",
                MAX_DEGREE + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LabError::domain("PolySpec::new", "non-finite coefficient"));
        }
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(LabError::domain("PolySpec::new", "all coefficients are zero"));
        }
        Ok(PolySpec {
            degree: coeffs.len() - 1,
            coeffs,
        })
    }

    pub fn constant(c: C64) -> Result<Self> {
        PolySpec::new(vec![c])
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Result<Self> {
        let mut v = vec![C64::new(0.0, 0.0); k + 1];
        v[k] = C64::new(1.0, 0.0);
        PolySpec::new(v)
    }

    pub fn eval(&self, z: C64) -> C64 {
        eval_scalar_poly(&self.coeffs, z)
    }

    pub fn scaled(&self, s: C64) -> PolySpec {
        PolySpec {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Coefficients of `z -> p(z - a)`.
    pub fn shifted(&self, a: C64) -> PolySpec {
        let n = self.coeffs.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        // (z - a)^k = sum_j binom(k, j) z^j (-a)^(k-j)
        for (k, &ck) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for j in (0..=k).rev() {
                // binom = C(k, j) while walking j downward
                out[j] += ck * binom * (-a).powu((k - j) as u32);
                binom = binom * j as f64 / (k - j + 1) as f64;
            }
        }
        PolySpec {
            degree: self.degree,
            coeffs: out,
        }
    }
}

/// Matrices whose polynomial images have a computable operator norm.
pub trait PolyNorm {
    fn poly_norm(&self, coeffs: &[C64]) -> f64;
}

impl PolyNorm for Matrix3 {
    fn poly_norm(&self, coeffs: &[C64]) -> f64 {
        self.eval_poly(coeffs).operator_norm()
    }
}

impl PolyNorm for MatrixN {
    fn poly_norm(&self, coeffs: &[C64]) -> f64 {
        self.eval_poly(coeffs).operator_norm()
    }
}

/// Closed curve carrying the maximum of `|p|` over a convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCurve {
    /// Ellipse with foci `-1, 1` and axes `rho +- 1/rho`.
    Ellipse { rho: f64 },
    /// Degenerate range `[a, b]`, traversed there and back.
    Segment { a: C64, b: C64 },
    /// Closed polygon through the given vertices, parametrized by arclength.
    Polygon { vertices: Vec<C64> },
}

impl BoundaryCurve {
    /// Polygon through the given points with near-duplicates removed.
    pub fn polygon(points: &[C64]) -> Self {
        let mut vertices: Vec<C64> = Vec::with_capacity(points.len());
        for &p in points {
            if vertices.last().map_or(true, |q| (p - q).norm() > 1e-13) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && (vertices[0] - vertices[vertices.len() - 1]).norm() <= 1e-13 {
            vertices.pop();
        }
        BoundaryCurve::Polygon { vertices }
    }

    /// Point at parameter `s`, periodic with period 1.
    pub fn point(&self, s: f64) -> C64 {
        let s = s.rem_euclid(1.0);
        match self {
            BoundaryCurve::Ellipse { rho } => {
                let th = 2.0 * std::f64::consts::PI * s;
                C64::new(0.5 * (rho + 1.0 / rho) * th.cos(), 0.5 * (rho - 1.0 / rho) * th.sin())
            }
            BoundaryCurve::Segment { a, b } => {
                let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * s).cos());
                a + (b - a) * w
            }
            BoundaryCurve::Polygon { vertices } => polygon_point(vertices, &polygon_cumulative(vertices), s),
        }
    }

    /// `m` uniform samples in the curve parameter; polygons also include
    /// every vertex.
    pub fn samples(&self, m: usize) -> Vec<C64> {
        SampledBoundary::new(self.clone(), m).points
    }

    /// Largest modulus of a point on the curve.
    pub fn max_abs(&self) -> f64 {
        match self {
            BoundaryCurve::Ellipse { rho } => 0.5 * (rho + 1.0 / rho),
            BoundaryCurve::Segment { a, b } => a.norm().max(b.norm()),
            BoundaryCurve::Polygon { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// The same curve translated by `a`.
    pub fn translated(&self, a: C64) -> BoundaryCurve {
        match self {
            BoundaryCurve::Ellipse { .. } => {
                let vertices = self.samples(DEFAULT_SAMPLES).into_iter().map(|z| z + a).collect();
                BoundaryCurve::Polygon { vertices }
            }
            BoundaryCurve::Segment { a: p, b: q } => BoundaryCurve::Segment { a: p + a, b: q + a },
            BoundaryCurve::Polygon { vertices } => BoundaryCurve::Polygon {
                vertices: vertices.iter().map(|v| v + a).collect(),
            },
        }
    }
}

/// Cumulative edge lengths `cum[i]` from vertex 0 to vertex `i`, closed
/// (length `n + 1`).
fn polygon_cumulative(vertices: &[C64]) -> Vec<f64> {
    let n = vertices.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let step = (vertices[(i + 1) % n] - vertices[i]).norm();
        cum.push(cum[i] + step);
    }
    cum
}

fn polygon_point(vertices: &[C64], cum: &[f64], s: f64) -> C64 {
    let n = vertices.len();
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    let total = cum[n];
    if n == 1 || total == 0.0 {
        return vertices[0];
    }
    let target = s * total;
    let i = cum.partition_point(|&c| c <= target).saturating_sub(1).min(n - 1);
    let len = cum[i + 1] - cum[i];
    let f = if len > 0.0 { ((target - cum[i]) / len).clamp(0.0, 1.0) } else { 0.0 };
    vertices[i] + (vertices[(i + 1) % n] - vertices[i]) * f
}

/// A curve with its `m` samples and polygon arclength table precomputed.
#[derive(Debug, Clone)]
pub struct SampledBoundary {
    pub curve: BoundaryCurve,
    pub m: usize,
    pub points: Vec<C64>,
    cum: Vec<f64>,
}

impl SampledBoundary {
    pub fn new(curve: BoundaryCurve, m: usize) -> Self {
        let cum = match &curve {
            BoundaryCurve::Polygon { vertices } => polygon_cumulative(vertices),
            _ => Vec::new(),
        };
        let mut out = SampledBoundary {
            curve,
            m,
            points: Vec::new(),
            cum,
        };
        let mut points: Vec<C64> = (0..m).map(|k| out.point(k as f64 / m as f64)).collect();
        if let BoundaryCurve::Polygon { vertices } = &out.curve {
            points.extend_from_slice(vertices);
        }
        out.points = points;
        out
    }

    pub fn point(&self, s: f64) -> C64 {
        match &self.curve {
            BoundaryCurve::Polygon { vertices } => polygon_point(vertices, &self.cum, s.rem_euclid(1.0)),
            other => other.point(s),
        }
    }

    /// Maximum of `|p|`: best sample, then golden-section refinement within
    /// one sample spacing of it.
    pub fn max_modulus(&self, coeffs: &[C64]) -> f64 {
        let m = self.m;
        let (mut best, mut at) = (0.0f64, 0usize);
        for (k, &z) in self.points.iter().enumerate() {
            let v = eval_scalar_poly(coeffs, z).norm();
            if v > best {
                best = v;
                at = k;
            }
        }
        if at >= m {
            // a polygon vertex, where |p| is evaluated exactly
            return best;
        }
        let f = |s: f64| eval_scalar_poly(coeffs, self.point(s)).norm();
        let h = 1.0 / m as f64;
        let s0 = at as f64 * h;
        let (mut lo, mut hi) = (s0 - h, s0 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..60 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        best.max(f1).max(f2)
    }
}

/// `m` points `(a cos theta, b sin theta)` with `2a = rho + 1/rho`,
/// `2b = rho - 1/rho`, `theta = 2 pi k / m`.
pub fn boundary_samples(rho: f64, m: usize) -> Result<Vec<C64>> {
    if !(rho > 1.0) || m < 8 {
        return Err(LabError::domain(
            "boundary_samples",
            format!("need rho > 1 and m >= 8, got rho = {rho}, m = {m}"),
        ));
    }
    Ok(BoundaryCurve::Ellipse { rho }.samples(m))
}

/// `||p(A)|| / max |p|` over the given boundary points.
pub fn ratio_for_poly(a: &Matrix3, p: &PolySpec, boundary: &[C64]) -> Result<f64> {
    if boundary.is_empty() {
        return Err(LabError::domain("ratio_for_poly", "empty boundary"));
    }
    let den = boundary.iter().map(|&z| p.eval(z).norm()).fold(0.0, f64::max);
    if !(den >= MIN_DENOMINATOR) {
        return Err(LabError::domain("ratio_for_poly", format!("denominator {den} is degenerate")));
    }
    Ok(a.poly_norm(&p.coeffs) / den)
}

/// Maximum of `|p|` on the curve; see [`SampledBoundary::max_modulus`].
pub fn max_modulus(coeffs: &[C64], curve: &BoundaryCurve, m: usize) -> f64 {
    SampledBoundary::new(curve.clone(), m).max_modulus(coeffs)
}

/// Ratio with the refined denominator of [`max_modulus`].
pub fn ratio_on_curve<M: PolyNorm>(a: &M, p: &PolySpec, boundary: &SampledBoundary) -> Result<f64> {
    let den = boundary.max_modulus(&p.coeffs);
    if !(den >= MIN_DENOMINATOR) {
        return Err(LabError::domain("ratio_on_curve", format!("denominator {den} is degenerate")));
    }
    Ok(a.poly_norm(&p.coeffs) / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub best_ratio: f64,
    pub best_poly: PolySpec,
    pub evaluations: usize,
    pub seed: u64,
}

/// Evaluations per restart: one start plus four line-search sweeps over the
/// four directions `1, -1, i, -i` of every coefficient. Depends on the
/// degree only, so a larger budget extends rather than reshuffles the
/// sequence of evaluations.
pub fn restart_quota(degree: usize) -> usize {
    1 + 16 * (degree + 1)
}

/// Worst ratio found for `A(rho, r)` over polynomials of the given degree.
pub fn worst_ratio_search(rho: f64, r: f64, degree: usize, budget: usize, seed: u64) -> Result<RatioResult> {
    let a = build_a_rho(RhoParams::new(rho, r)?)?;
    search_worst_ratio(&a, &BoundaryCurve::Ellipse { rho }, degree, budget, seed)
}

/// Seeded multi-start coordinate search for the largest ratio on `a` with
/// `W(a)` bounded by `curve`. The constant polynomial is always the first
/// evaluation, so `best_ratio >= 1` up to rounding of `||I||`.
pub fn search_worst_ratio<M: PolyNorm + Sync>(
    a: &M,
    curve: &BoundaryCurve,
    degree: usize,
    budget: usize,
    seed: u64,
) -> Result<RatioResult> {
    if degree > MAX_DEGREE {
        return Err(LabError::Dimension(format!("degree {degree} exceeds {MAX_DEGREE}")));
    }
    if budget == 0 {
        return Err(LabError::domain("search_worst_ratio", "budget must be >= 1"));
    }
    let boundary = SampledBoundary::new(curve.clone(), DEFAULT_SAMPLES);
    let curve = &boundary;
    let one = PolySpec::constant(C64::new(1.0, 0.0))?;
    let baseline = Candidate {
        ratio: ratio_on_curve(a, &one, curve)?,
        coeffs: one.coeffs.clone(),
    };
    let remaining = budget - 1;
    let quota = restart_quota(degree);
    let restarts = remaining.div_ceil(quota);
    let scale = {
        let m = curve.curve.max_abs();
        if m > 1e-12 {
            m
        } else {
            1.0
        }
    };
    let found: Vec<Candidate> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let evals = quota.min(remaining - k * quota);
            run_restart(a, curve, degree, evals, seed, k as u64, scale)
        })
        .collect();
    let best = found.into_iter().fold(baseline, |acc, c| if c.beats(&acc) { c } else { acc });
    Ok(RatioResult {
        best_ratio: best.ratio,
        best_poly: PolySpec::new(best.coeffs)?,
        evaluations: budget,
        seed,
    })
}

#[derive(Debug, Clone)]
struct Candidate {
    ratio: f64,
    coeffs: Vec<C64>,
}

impl Candidate {
    /// Larger ratio wins; ties go to the lexicographically smaller
    /// coefficient list.
    fn beats(&self, other: &Candidate) -> bool {
        match self.ratio.total_cmp(&other.ratio) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                let key = |v: &[C64]| v.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<f64>>();
                let (a, b) = (key(&self.coeffs), key(&other.coeffs));
                for (x, y) in a.iter().zip(&b) {
                    match x.total_cmp(y) {
                        std::cmp::Ordering::Less => return true,
                        std::cmp::Ordering::Greater => return false,
                        std::cmp::Ordering::Equal => {}
                    }
                }
                a.len() < b.len()
            }
        }
    }
}

/// Ratio of `coeffs` and the same polynomial rescaled to unit boundary
/// maximum; `None` when the denominator is degenerate.
fn evaluate<M: PolyNorm>(a: &M, curve: &SampledBoundary, coeffs: &[C64]) -> Option<Candidate> {
    let den = curve.max_modulus(coeffs);
    if !(den >= MIN_DENOMINATOR) || !den.is_finite() {
        return None;
    }
    let normalized: Vec<C64> = coeffs.iter().map(|c| c / den).collect();
    let ratio = a.poly_norm(&normalized);
    ratio.is_finite().then_some(Candidate {
        ratio,
        coeffs: normalized,
    })
}

fn run_restart<M: PolyNorm>(
    a: &M,
    curve: &SampledBoundary,
    degree: usize,
    evals: usize,
    seed: u64,
    index: u64,
    scale: f64,
) -> Candidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let start: Vec<C64> = if index == 0 && degree >= 1 {
        let mut v = vec![C64::new(0.0, 0.0); degree + 1];
        v[1] = C64::new(1.0, 0.0);
        v
    } else {
        (0..=degree)
            .map(|k| C64::new(gauss(&mut rng), gauss(&mut rng)) / scale.powi(k as i32))
            .collect()
    };
    let mut used = 1;
    let mut best = evaluate(a, curve, &start).unwrap_or(Candidate {
        ratio: 0.0,
        coeffs: start,
    });
    let dirs = [
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -1.0),
    ];
    let mut h = 0.5;
    'outer: while used < evals {
        for j in 0..=degree {
            let unit = 1.0 / scale.powi(j as i32);
            for d in dirs {
                let mut step = h;
                loop {
                    if used >= evals {
                        break 'outer;
                    }
                    let mut trial = best.coeffs.clone();
                    trial[j] += d * step * unit;
                    used += 1;
                    match evaluate(a, curve, &trial) {
                        Some(c) if c.ratio > best.ratio => {
                            best = c;
                            step *= 2.0;
                        }
                        _ => break,
                    }
                }
            }
        }
        h *= 0.5;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::MatrixN;
    use crate::family::EllipseGeometry;
    use proptest::prelude::*;

    fn z(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn boundary_samples_examples() {
        let rho: f64 = 2.0;
        let pts = boundary_samples(rho, 64).unwrap();
        assert_eq!(pts.len(), 64);
        assert!((pts[0].re - 0.5 * (rho + 1.0 / rho)).abs() < 1e-15);
        assert!((pts[0].re - EllipseGeometry::from_rho(rho).support(0.0)).abs() < 1e-15);
        let max = pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!((max - 0.5 * (rho + 1.0 / rho)).abs() < 1e-12);
        // foci lie strictly inside: on every sampled edge the focus is to the left
        for f in [z(1.0, 0.0), z(-1.0, 0.0)] {
            for k in 0..64 {
                let (p, q) = (pts[k], pts[(k + 1) % 64]);
                let cross = (q - p).re * (f - p).im - (q - p).im * (f - p).re;
                assert!(cross > 0.0);
            }
        }
        assert!(boundary_samples(1.0, 64).is_err());
        assert!(boundary_samples(2.0, 4).is_err());
    }

    #[test]
    fn ratio_examples() {
        let rho: f64 = 2.0;
        let pts = boundary_samples(rho, DEFAULT_SAMPLES).unwrap();
        let a = build_a_rho(RhoParams::new(rho, 1.0).unwrap()).unwrap();
        let c = PolySpec::constant(z(3.0, -1.0)).unwrap();
        assert!((ratio_for_poly(&a, &c, &pts).unwrap() - 1.0).abs() < 1e-14);

        let d = Matrix3::diag([z(1.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)]);
        let p = PolySpec::monomial(1).unwrap();
        let v = ratio_for_poly(&d, &p, &pts).unwrap();
        assert!((v - 1.0 / (0.5 * (rho + 1.0 / rho))).abs() < 1e-12);

        // A(q = 1, r = 1) = [[1,1,0],[0,0,1],[0,0,-1]]; A A* = diag(2) plus
        // the block [[1,-1],[-1,1]], so ||A|| = sqrt 2
        let a11 = crate::family::build_a_raw(1.0, 1.0);
        let norm = 2f64.sqrt();
        let rho11 = crate::family::NormalizedParams::new(1.0, 1.0).unwrap().rho();
        let semi = 0.5 * (rho11 + 1.0 / rho11);
        let b = boundary_samples(rho11, DEFAULT_SAMPLES).unwrap();
        let v = ratio_for_poly(&a11, &p, &b).unwrap();
        assert!((v - norm / semi).abs() < 1e-12, "{v} vs {}", norm / semi);

        let zero_den = PolySpec::new(vec![z(1e-320, 0.0)]).unwrap();
        assert!(ratio_for_poly(&a, &zero_den, &pts).is_err());
        assert!(ratio_for_poly(&a, &c, &[]).is_err());
    }

    #[test]
    fn poly_spec_validation_and_shift() {
        assert!(PolySpec::new(vec![]).is_err());
        assert!(PolySpec::new(vec![z(0.0, 0.0); 3]).is_err());
        assert!(PolySpec::new(vec![z(1.0, 0.0); 14]).is_err());
        let p = PolySpec::new(vec![z(1.0, 2.0), z(-0.5, 0.0), z(0.0, 1.0), z(2.0, 0.0)]).unwrap();
        let a = z(0.3, -1.1);
        let q = p.shifted(a);
        for &w in &[z(0.0, 0.0), z(1.0, 1.0), z(-2.0, 0.5)] {
            assert!((q.eval(w) - p.eval(w - a)).norm() < 1e-12);
        }
    }

    #[test]
    fn degree_zero_search_gives_one() {
        let res = worst_ratio_search(2.0, 1.0, 0, 50, 3).unwrap();
        assert!((res.best_ratio - 1.0).abs() < 1e-14);
        assert_eq!(res.best_poly.degree, 0);
    }

    #[test]
    fn search_below_two_and_deterministic() {
        let a = worst_ratio_search(2.0, 1.0, 4, 200, 7).unwrap();
        let b = worst_ratio_search(2.0, 1.0, 4, 200, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.best_ratio <= 2.0 + 1e-6 && a.best_ratio >= 1.0 - 1e-9);
        assert_eq!(a.evaluations, 200);
        let text = serde_json::to_string(&a).unwrap();
        let back: RatioResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn budget_is_monotone() {
        let mut prev = 0.0;
        for budget in [1, 10, 40, 81, 82, 200, 400] {
            let v = worst_ratio_search(3.0, 0.9, 3, budget, 11).unwrap().best_ratio;
            assert!(v >= prev, "budget {budget}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn normal_matrix_ratio_at_most_one() {
        let d = Matrix3::diag([z(1.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)]);
        let seg = BoundaryCurve::Segment {
            a: z(-1.0, 0.0),
            b: z(1.0, 0.0),
        };
        for seed in 0..3 {
            let res = search_worst_ratio(&d, &seg, 6, 300, seed).unwrap();
            assert!(res.best_ratio <= 1.0 + 1e-9, "{}", res.best_ratio);
        }
    }

    #[test]
    fn polygon_curve_samples_vertices() {
        let curve = BoundaryCurve::polygon(&[z(1.0, 0.0), z(1.0, 0.0), z(0.0, 1.0), z(-1.0, 0.0), z(1.0, 0.0)]);
        match &curve {
            BoundaryCurve::Polygon { vertices } => assert_eq!(vertices.len(), 3),
            _ => unreachable!(),
        }
        let pts = curve.samples(30);
        assert_eq!(pts.len(), 33);
        assert!((curve.point(0.0) - z(1.0, 0.0)).norm() < 1e-15);
        let m = max_modulus(&[z(0.0, 0.0), z(1.0, 0.0)], &curve, 30);
        assert!((m - 1.0).abs() < 1e-12);
        let dn = MatrixN::diag(&[z(1.0, 0.0), z(0.0, 1.0), z(-1.0, 0.0)]);
        let res = search_worst_ratio(&dn, &curve, 4, 150, 1).unwrap();
        assert!(res.best_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn refinement_is_stable_in_m() {
        let p = [z(0.3, -0.2), z(-1.0, 0.5), z(0.7, 0.1), z(0.0, 0.4), z(0.25, 0.0), z(-0.1, 0.05)];
        let curve = BoundaryCurve::Ellipse { rho: 1.7 };
        let d1 = max_modulus(&p, &curve, 2048);
        let d2 = max_modulus(&p, &curve, 4096);
        assert!((d1 - d2).abs() <= 1e-8 * d1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ratio_is_scale_invariant(
            re in proptest::collection::vec(-2.0f64..2.0, 4),
            im in proptest::collection::vec(-2.0f64..2.0, 4),
            sr in -3.0f64..3.0, si in -3.0f64..3.0,
            rho in 1.1f64..8.0, u in 0.05f64..1.0,
        ) {
            prop_assume!(sr.abs() + si.abs() > 1e-3);
            let coeffs: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| z(a, b)).collect();
            let p = PolySpec::new(coeffs).unwrap();
            let lo = 1.0 / rho.sqrt();
            let r = lo + (1.0 - lo) * u;
            let a = build_a_rho(RhoParams::new(rho, r).unwrap()).unwrap();
            let pts = boundary_samples(rho, 512).unwrap();
            let v1 = ratio_for_poly(&a, &p, &pts).unwrap();
            let v2 = ratio_for_poly(&a, &p.scaled(z(sr, si)), &pts).unwrap();
            prop_assert!((v1 - v2).abs() <= 1e-12 * v1.max(1.0));
        }

        #[test]
        fn denominator_stable_under_doubling(
            re in proptest::collection::vec(-1.0f64..1.0, 13),
            im in proptest::collection::vec(-1.0f64..1.0, 13),
            rho in 1.05f64..6.0,
        ) {
            let coeffs: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| z(a, b)).collect();
            let curve = BoundaryCurve::Ellipse { rho };
            let d1 = max_modulus(&coeffs, &curve, 2048);
            let d2 = max_modulus(&coeffs, &curve, 4096);
            prop_assert!((d1 - d2).abs() <= 1e-8 * d1.max(1e-300), "{} {}", d1, d2);
        }
    }
}
