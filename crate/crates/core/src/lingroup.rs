//! The group of affine substitutions `x -> alpha*x + beta` fixing infinity.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{binom, qpow, Q};
use crate::series::{Var, WindowedSeries, EXACT_FLOOR};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct LinearMap {
    alpha: Q,
    beta: Q,
}

impl LinearMap {
    /// Panics when `alpha` is zero.
    pub fn new(alpha: Q, beta: Q) -> Self {
        assert!(!alpha.is_zero(), "linear map with zero slope");
        Self { alpha, beta }
    }

    pub fn try_new(alpha: Q, beta: Q) -> Option<Self> {
        (!alpha.is_zero()).then_some(Self { alpha, beta })
    }

    pub fn identity() -> Self {
        Self::new(Q::one(), Q::zero())
    }

    pub fn scaling(alpha: Q) -> Self {
        Self::new(alpha, Q::zero())
    }

    pub fn alpha(&self) -> &Q {
        &self.alpha
    }

    pub fn beta(&self) -> &Q {
        &self.beta
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.is_one() && self.beta.is_zero()
    }

    pub fn is_scaling(&self) -> bool {
        self.beta.is_zero()
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        LinearMap::new(&self.alpha * &other.alpha, &self.alpha * &other.beta + &self.beta)
    }

    pub fn invert(&self) -> LinearMap {
        let inv = self.alpha.recip();
        LinearMap::new(inv.clone(), -(inv * &self.beta))
    }

    /// The slope homomorphism to the multiplicative group.
    pub fn phi(&self) -> Q {
        self.alpha.clone()
    }

    pub fn eval(&self, x: &Q) -> Q {
        &self.alpha * x + &self.beta
    }

    /// `g(x)^n` as an element of `C((x^{-1}))`, truncated below `floor` when `n < 0`.
    pub fn power_expand(&self, n: i64, floor: i64) -> WindowedSeries {
        self.power_expand_in(Var::X, n, floor)
    }

    pub fn power_expand_in(&self, var: Var, n: i64, floor: i64) -> WindowedSeries {
        if n >= 0 {
            let coeffs = (0..=n).map(|i| {
                (n - i, binom(n, i) * qpow(&self.alpha, n - i) * qpow(&self.beta, i))
            });
            return WindowedSeries::from_terms(var, coeffs, EXACT_FLOOR);
        }
        assert!(floor <= n, "power_expand floor {floor} above leading exponent {n}");
        if self.beta.is_zero() {
            return WindowedSeries::from_terms(var, [(n, qpow(&self.alpha, n))], EXACT_FLOOR);
        }
        let terms = (0..=(n - floor)).map(|i| {
            (n - i, binom(n, i) * qpow(&self.alpha, n - i) * qpow(&self.beta, i))
        });
        WindowedSeries::from_terms(var, terms, floor)
    }
}

impl fmt::Display for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = if self.alpha.is_one() {
            String::new()
        } else if self.alpha == -Q::one() {
            "-".to_string()
        } else {
            format!("{}*", self.alpha)
        };
        if self.beta.is_zero() {
            write!(f, "{a}x")
        } else if self.beta > Q::zero() {
            write!(f, "{a}x+{}", self.beta)
        } else {
            write!(f, "{a}x{}", self.beta)
        }
    }
}
