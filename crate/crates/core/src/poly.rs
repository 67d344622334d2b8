//! Univariate polynomials over `Q`.

use num_traits::{One, Zero};

use crate::lingroup::LinearMap;
use crate::scalar::{qpow, Q};
use crate::series::{Var, WindowedSeries, EXACT_FLOOR};

/// Polynomial in one variable, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct UPoly(Vec<Q>);

impl UPoly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly(c)
    }

    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    /// `g(x)` for a linear map.
    pub fn from_map(g: &LinearMap) -> Self {
        Self::new(vec![g.beta().clone(), g.alpha().clone()])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }

    pub fn lead(&self) -> Q {
        self.0.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let z = Q::zero();
        Self::new((0..n).map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dd = d.0.len() - 1;
        let inv = d.lead().recip();
        let mut r = self.0.clone();
        let mut qv = vec![Q::zero(); r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = r.last().unwrap() * &inv;
            for (i, dc) in d.0.iter().enumerate() {
                r[k + i] -= &c * dc;
            }
            qv[k] = c;
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        (Self::new(qv), Self::new(r))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(&self.lead().recip())
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn to_series(&self, var: Var) -> WindowedSeries<Q> {
        WindowedSeries::from_terms(var, self.0.iter().cloned().enumerate().map(|(i, c)| (i as i64, c)), EXACT_FLOOR)
    }
}

/// `(-g(x))^n` as an exact polynomial in `var`.
pub fn neg_map_power(g: &LinearMap, n: u32, var: Var) -> WindowedSeries<Q> {
    UPoly::from_map(g).scale(&-Q::one()).pow(n).to_series(var)
}

/// Coefficient of `x^e` in `(a x + b)^n` for `n >= 0`.
pub fn linear_power_coeff(a: &Q, b: &Q, n: u32, e: i64) -> Q {
    if e < 0 || e > n as i64 {
        return Q::zero();
    }
    crate::scalar::binom(n as i64, e) * qpow(a, e) * qpow(b, n as i64 - e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn lm(a: i64, b: i64) -> LinearMap {
        LinearMap::new(q(a), q(b))
    }

    #[test]
    fn divrem_reconstructs() {
        let a = UPoly::new(vec![q(1), q(2), q(3), q(4)]);
        let d = UPoly::new(vec![q(-1), q(2)]);
        let (qt, r) = a.divrem(&d);
        assert_eq!(qt.mul(&d).add(&r), a);
        assert!(r.degree().unwrap_or(0) < 1);
    }

    #[test]
    fn gcd_of_shared_factor() {
        let f = UPoly::new(vec![q(-2), q(1)]);
        let a = f.mul(&UPoly::new(vec![q(3), q(1)]));
        let b = f.mul(&UPoly::new(vec![q(5), q(1)]));
        assert_eq!(a.gcd(&b), f);
    }


    #[test]
    fn negated_power_matches_binomial_expansion() {
        let s = neg_map_power(&lm(2, 1), 3, Var::X2);
        for e in 0..=3 {
            assert_eq!(s.coeff(e), -linear_power_coeff(&q(2), &q(1), 3, e));
        }
        assert_eq!(s.coeff(4), q(0));
    }
}
