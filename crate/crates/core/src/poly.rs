//! Exact integer polynomials in one variable and a sufficient test for
//! nonnegativity on a half-line.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial with `i128` coefficients, lowest degree first. Arithmetic
/// panics on overflow, so a successful computation is exact.
#[derive(Clone, PartialEq, Eq)]
pub struct IntPoly(Vec<i128>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        IntPoly(coeffs)
    }

    pub fn constant(c: i128) -> Self {
        IntPoly::new(vec![c])
    }

    /// `c t^k`.
    pub fn monomial(c: i128, k: usize) -> Self {
        let mut v = vec![0; k + 1];
        v[k] = c;
        IntPoly::new(v)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coeff(&self, k: usize) -> i128 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(IntPoly::constant(1), |acc, _| &acc * self)
    }

    /// `p(t + a)`.
    pub fn shift(&self, a: i128) -> Self {
        let lin = IntPoly::new(vec![a, 1]);
        self.0
            .iter()
            .rev()
            .fold(IntPoly::constant(0), |acc, &c| &(&acc * &lin) + &IntPoly::constant(c))
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() == 1 {
            return IntPoly::constant(0);
        }
        IntPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c.checked_mul(k as i128).expect("overflow"))
                .collect(),
        )
    }

    /// `n`-th derivative.
    pub fn derivative_n(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Sign of `p(num / den)` computed exactly as `den^deg p(num/den)`.
    pub fn sign_at_rational(&self, num: i128, den: i128) -> Option<i128> {
        assert!(den > 0);
        let d = self.degree() as u32;
        let mut acc = 0i128;
        for (k, &c) in self.0.iter().enumerate() {
            let term = c
                .checked_mul(num.checked_pow(k as u32)?)?
                .checked_mul(den.checked_pow(d - k as u32)?)?;
            acc = acc.checked_add(term)?;
        }
        Some(acc.signum())
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c as f64)
    }

    /// Exact evaluation; `None` on overflow.
    pub fn eval_i128(&self, t: i128) -> Option<i128> {
        self.0
            .iter()
            .rev()
            .try_fold(0i128, |acc, &c| acc.checked_mul(t)?.checked_add(c))
    }

    /// True when `p(a + s)` has only nonnegative coefficients in `s`, which
    /// proves `p(t) >= 0` for every `t >= a`.
    pub fn nonneg_from(&self, a: i128) -> bool {
        self.shift(a).0.iter().all(|&c| c >= 0)
    }

    /// Every coefficient is `<= 0` and at least one is `< 0`: `p(t) < 0` for
    /// all `t > 0`.
    pub fn all_coeffs_nonpositive(&self) -> bool {
        self.0.iter().all(|&c| c <= 0) && self.0.iter().any(|&c| c < 0)
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, c)| format!("{c} t^{k}"))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl<'a> Add<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.0.len().max(rhs.0.len());
        IntPoly::new((0..n).map(|k| self.coeff(k).checked_add(rhs.coeff(k)).expect("overflow")).collect())
    }
}

impl<'a> Sub<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        self + &(-rhs)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly::new(self.0.iter().map(|c| -c).collect())
    }
}

impl<'a> Mul<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        let mut out = vec![0i128; self.0.len() + rhs.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate() {
                let p = a.checked_mul(b).expect("overflow");
                out[i + j] = out[i + j].checked_add(p).expect("overflow");
            }
        }
        IntPoly::new(out)
    }
}

/// Build a polynomial from `(coefficient, exponent)` pairs.
pub fn from_terms(terms: &[(i128, usize)]) -> IntPoly {
    terms
        .iter()
        .fold(IntPoly::constant(0), |acc, &(c, k)| &acc + &IntPoly::monomial(c, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_expansion() {
        let p = IntPoly::new(vec![1, 1]).pow(5);
        assert_eq!(p.coeffs(), &[1, 5, 10, 10, 5, 1]);
        assert_eq!(p.eval_i128(2), Some(243));
    }

    #[test]
    fn derivatives_and_rational_sign() {
        let p = IntPoly::new(vec![1, 2, 3]);
        assert_eq!(p.derivative().coeffs(), &[2, 6]);
        assert_eq!(p.derivative_n(3).coeffs(), &[0]);
        // 3t^2 - 4 at t = 1 is -1; at 4/3 it is 16/3 - 4 > 0
        let q = IntPoly::new(vec![-4, 0, 3]);
        assert_eq!(q.sign_at_rational(1, 1), Some(-1));
        assert_eq!(q.sign_at_rational(8, 7), Some(-1));
        assert_eq!(q.sign_at_rational(4, 3), Some(1));
    }

    #[test]
    fn shift_and_nonnegativity() {
        // t - 4 >= 0 on [4, inf) but not on [3, inf)
        let p = IntPoly::new(vec![-4, 1]);
        assert!(p.nonneg_from(4));
        assert!(!p.nonneg_from(3));
        assert_eq!(p.shift(4).coeffs(), &[0, 1]);
    }

    proptest! {
        #[test]
        fn shift_preserves_values(coeffs in proptest::collection::vec(-50i128..50, 1..8), a in -5i128..5, t in -5i128..5) {
            let p = IntPoly::new(coeffs);
            prop_assert_eq!(p.shift(a).eval_i128(t), p.eval_i128(t + a));
        }

        #[test]
        fn product_evaluates_pointwise(a in proptest::collection::vec(-20i128..20, 1..6), b in proptest::collection::vec(-20i128..20, 1..6), t in -6i128..6) {
            let (pa, pb) = (IntPoly::new(a), IntPoly::new(b));
            prop_assert_eq!((&pa * &pb).eval_i128(t).unwrap(), pa.eval_i128(t).unwrap() * pb.eval_i128(t).unwrap());
        }
    }
}
