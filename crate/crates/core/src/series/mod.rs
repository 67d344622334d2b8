//! Exact truncated Laurent series in `x^{-1}` with precision-window tracking.
//!
//! A [`WindowedSeries`] is an element of `C((x^{-1}))` whose coefficients are
//! known exactly at every exponent `>= floor`; everything below `floor` is
//! unknown. `ceiling` bounds the support from above and is always tight.

mod bi;

pub use bi::{iota_expand, iota_expand_maps, BiSeries, LinearForm, Poly2, Rect, Region};

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lingroup::LinearMap;
use crate::scalar::{q, qpow, Q};
use crate::sparse::Coeff;

/// Floor value meaning "exact": no unknown low-order terms.
pub const EXACT_FLOOR: i64 = -(1 << 40);

pub const DEFAULT_EXPANSION_DEPTH: i64 = 24;

pub(crate) fn clamp_floor(f: i64) -> i64 {
    f.max(EXACT_FLOOR)
}

/// Symbol tag for a formal variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Var(pub u8);

impl Var {
    pub const X: Var = Var(0);
    pub const X0: Var = Var(10);
    pub const X1: Var = Var(1);
    pub const X2: Var = Var(2);
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "x"),
            10 => write!(f, "x0"),
            n => write!(f, "x{n}"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct WindowedSeries<C = Q> {
    var: Var,
    coeffs: BTreeMap<i64, C>,
    floor: i64,
    ceiling: i64,
}

impl<C: Coeff> WindowedSeries<C> {
    pub fn zero(var: Var, floor: i64) -> Self {
        let floor = clamp_floor(floor);
        Self { var, coeffs: BTreeMap::new(), floor, ceiling: floor - 1 }
    }

    pub fn from_terms(var: Var, terms: impl IntoIterator<Item = (i64, C)>, floor: i64) -> Self {
        let mut s = Self::zero(var, floor);
        for (e, c) in terms {
            s.add_at(e, &c);
        }
        s.normalize();
        s
    }

    pub fn constant(var: Var, c: C) -> Self {
        Self::from_terms(var, [(0, c)], EXACT_FLOOR)
    }

    pub fn monomial(var: Var, e: i64, c: C) -> Self {
        Self::from_terms(var, [(e, c)], EXACT_FLOOR)
    }

    fn add_at(&mut self, e: i64, c: &C) {
        if e < self.floor || c.is_nil() {
            return;
        }
        let slot = self.coeffs.entry(e).or_insert_with(C::nil);
        slot.add_assign(c);
    }

    fn normalize(&mut self) {
        self.floor = clamp_floor(self.floor);
        let floor = self.floor;
        self.coeffs.retain(|e, c| *e >= floor && !c.is_nil());
        self.ceiling = self.coeffs.keys().next_back().copied().unwrap_or(floor - 1);
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn floor(&self) -> i64 {
        self.floor
    }

    pub fn ceiling(&self) -> i64 {
        self.ceiling
    }

    pub fn is_exact(&self) -> bool {
        self.floor <= EXACT_FLOOR
    }

    /// Zero on its whole known window.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient at `e`; panics below the floor, where it is unknown.
    pub fn coeff(&self, e: i64) -> C {
        assert!(e >= self.floor, "coefficient at {e} below floor {}", self.floor);
        self.coeffs.get(&e).cloned().unwrap_or_else(C::nil)
    }

    pub fn try_coeff(&self, e: i64) -> Option<C> {
        (e >= self.floor).then(|| self.coeff(e))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    /// Forget everything below `floor` (no-op if already shallower).
    pub fn truncate(&self, floor: i64) -> Self {
        let mut s = self.clone();
        s.floor = s.floor.max(floor);
        s.normalize();
        s
    }

    fn check_var(&self, other_var: Var) -> Result<()> {
        if self.var != other_var {
            return Err(Error::VariableMismatch(self.var, other_var));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, &q(1))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, &q(-1))
    }

    pub fn add_scaled(&self, other: &Self, s: &Q) -> Result<Self> {
        self.check_var(other.var)?;
        let mut out = Self::zero(self.var, self.floor.max(other.floor));
        for (e, c) in &self.coeffs {
            out.add_at(*e, c);
        }
        for (e, c) in &other.coeffs {
            out.add_at(*e, &c.scale(s));
        }
        out.normalize();
        Ok(out)
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.scale(s);
        }
        out.normalize();
        out
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: i64) -> Self {
        let floor = if self.is_exact() { EXACT_FLOOR } else { self.floor + k };
        Self::from_terms(self.var, self.coeffs.iter().map(|(e, c)| (e + k, c.clone())), floor)
    }

    /// Term-wise `d/dx`; the window shifts down by one.
    pub fn derivative(&self) -> Self {
        let floor = if self.is_exact() { EXACT_FLOOR } else { self.floor - 1 };
        Self::from_terms(self.var, self.coeffs.iter().map(|(e, c)| (e - 1, c.scale(&q(*e)))), floor)
    }

    /// Coefficient of `x^{-1}`.
    pub fn residue(&self) -> Result<C> {
        if self.floor > -1 {
            return Err(Error::WindowTooShallow { needed: -1, have: self.floor });
        }
        Ok(self.coeff(-1))
    }

    /// `a(g(x)) = Σ a_n g(x)^n`, with the window carried through. An exact
    /// input with negative exponents and a translation part has an infinite
    /// expansion; it is cut `DEFAULT_EXPANSION_DEPTH` below its lowest term.
    pub fn substitute_linear(&self, g: &LinearMap) -> Self {
        let mut floor = self.floor;
        if self.is_exact() && !g.is_scaling() {
            if let Some(lo) = self.coeffs.keys().next() {
                if *lo < 0 {
                    floor = lo - DEFAULT_EXPANSION_DEPTH;
                }
            }
        }
        self.substitute_linear_to(g, floor)
    }

    pub fn substitute_linear_to(&self, g: &LinearMap, floor: i64) -> Self {
        let floor = floor.max(self.floor);
        let mut out = Self::zero(self.var, floor);
        for (n, c) in &self.coeffs {
            let p = g.power_expand_in(self.var, *n, floor.min(*n));
            for (e, pc) in p.terms() {
                out.add_at(e, &c.scale(pc));
            }
        }
        out.normalize();
        out
    }

    /// Equality on the common known window.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.first_disagreement(other).is_none()
    }

    pub fn first_disagreement(&self, other: &Self) -> Option<(i64, C, C)> {
        let lo = self.floor.max(other.floor);
        let keys: std::collections::BTreeSet<i64> =
            self.coeffs.keys().chain(other.coeffs.keys()).copied().filter(|e| *e >= lo).collect();
        for e in keys {
            let (a, b) = (self.coeff(e), other.coeff(e));
            if a != b {
                return Some((e, a, b));
            }
        }
        None
    }

    /// Product with a scalar series. Unknown low-order terms of either factor
    /// can reach up to `floor_a + ceiling_b - 1` (and symmetrically); the
    /// result floor is the first exponent above both.
    pub fn scalar_mul(&self, s: &WindowedSeries<Q>) -> Result<Self> {
        self.check_var(s.var)?;
        let floor = product_floor(s.floor, s.ceiling, self.floor, self.ceiling);
        let mut out = Self::zero(self.var, floor);
        for (ea, ca) in &s.coeffs {
            for (eb, cb) in &self.coeffs {
                if ea + eb >= floor {
                    out.add_at(ea + eb, &cb.scale(ca));
                }
            }
        }
        out.normalize();
        Ok(out)
    }

    /// Apply a linear map to every coefficient.
    pub fn map_coeffs<D: Coeff>(&self, mut f: impl FnMut(&C) -> D) -> WindowedSeries<D> {
        WindowedSeries::from_terms(self.var, self.coeffs.iter().map(|(e, c)| (*e, f(c))), self.floor)
    }

    pub fn with_var(mut self, var: Var) -> Self {
        self.var = var;
        self
    }
}

pub(crate) fn product_floor(fa: i64, ca: i64, fb: i64, cb: i64) -> i64 {
    let side = |f: i64, c: i64| if f <= EXACT_FLOOR { EXACT_FLOOR } else { f + c.max(EXACT_FLOOR) };
    clamp_floor(side(fa, cb).max(side(fb, ca)))
}

impl WindowedSeries<Q> {
    pub fn window_mul(&self, other: &Self) -> Result<Self> {
        other.scalar_mul(self)
    }

    pub fn polynomial(var: Var, coeffs: &[(i64, Q)]) -> Self {
        Self::from_terms(var, coeffs.iter().cloned(), EXACT_FLOOR)
    }

    /// Multiplicative inverse, known down to `floor` or as deep as the
    /// input's precision allows, whichever is shallower.
    pub fn inverse(&self, floor: i64) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::WindowTooShallow { needed: self.floor, have: self.floor });
        }
        let c = self.ceiling;
        let lead = self.coeff(c);
        let rel = if self.is_exact() { i64::MAX / 4 } else { c - self.floor };
        let floor = floor.max(-c - rel).min(-c);
        let inv_lead = lead.recip();
        let mut out: BTreeMap<i64, Q> = BTreeMap::new();
        // out_{-c-k} = -(1/lead) Σ_{i=1..k} a_{c-i} out_{-c-k+i}
        for k in 0..=(-c - floor) {
            let mut acc = if k == 0 { q(1) } else { Q::zero() };
            for i in 1..=k {
                if let Some(a) = self.coeffs.get(&(c - i)) {
                    if let Some(o) = out.get(&(-c - k + i)) {
                        acc -= a * o;
                    }
                }
            }
            let v = acc * &inv_lead;
            if !v.is_zero() {
                out.insert(-c - k, v);
            }
        }
        Ok(Self::from_terms(self.var, out, floor))
    }

    /// Evaluate `x^e -> coefficient` for an exact polynomial at a rational point.
    pub fn eval_polynomial(&self, x: &Q) -> Option<Q> {
        if !self.is_exact() || self.coeffs.keys().any(|e| *e < 0) {
            return None;
        }
        Some(self.coeffs.iter().map(|(e, c)| c * qpow(x, *e)).sum())
    }
}

impl<C: Coeff> fmt::Display for WindowedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.coeffs.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?}){}^{e}", self.var)?;
        }
        if first {
            write!(f, "0")?;
        }
        if !self.is_exact() {
            write!(f, " + O({}^{})", self.var, self.floor - 1)?;
        }
        Ok(())
    }
}
