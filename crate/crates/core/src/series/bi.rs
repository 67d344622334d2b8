//! Two-variable series and the expansions of rational functions in the three
//! expansion regions.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{product_floor, Var, WindowedSeries, EXACT_FLOOR};
use crate::error::{Error, Result};
use crate::lingroup::LinearMap;
use crate::scalar::{binom, qpow, Q};
use crate::sparse::Coeff;

/// Expansion domain of a two-variable series.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Region {
    /// `C((x1))((x2))`
    FirstSecond,
    /// `C((x1^{-1}))((x2))`
    InvFirstSecond,
    /// `C((x2^{-1}))((x1^{-1}))`
    InvSecondInvFirst,
}

pub type Rect = ((i64, i64), (i64, i64));

/// A two-variable series known exactly on a rectangle of exponents.
#[derive(Clone, PartialEq, Debug)]
pub struct BiSeries<C = Q> {
    vars: (Var, Var),
    coeffs: BTreeMap<(i64, i64), C>,
    window: Rect,
    region: Region,
}

impl<C: Coeff> BiSeries<C> {
    pub fn new(vars: (Var, Var), region: Region, window: Rect) -> Self {
        Self { vars, coeffs: BTreeMap::new(), window, region }
    }

    pub fn from_fn(vars: (Var, Var), region: Region, window: Rect, mut f: impl FnMut(i64, i64) -> C) -> Self {
        let mut s = Self::new(vars, region, window);
        for e1 in window.0 .0..=window.0 .1 {
            for e2 in window.1 .0..=window.1 .1 {
                let c = f(e1, e2);
                if !c.is_nil() {
                    s.coeffs.insert((e1, e2), c);
                }
            }
        }
        s
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn vars(&self) -> (Var, Var) {
        self.vars
    }

    pub fn in_window(&self, e1: i64, e2: i64) -> bool {
        let ((f1, c1), (f2, c2)) = self.window;
        (f1..=c1).contains(&e1) && (f2..=c2).contains(&e2)
    }

    pub fn coeff(&self, e1: i64, e2: i64) -> Option<C> {
        self.in_window(e1, e2).then(|| self.coeffs.get(&(e1, e2)).cloned().unwrap_or_else(C::nil))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), &C)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.region != other.region {
            return Err(Error::RegionMismatch);
        }
        if self.vars != other.vars {
            return Err(Error::VariableMismatch(self.vars.0, other.vars.0));
        }
        Ok(())
    }

    fn intersect(a: Rect, b: Rect) -> Rect {
        ((a.0 .0.max(b.0 .0), a.0 .1.min(b.0 .1)), (a.1 .0.max(b.1 .0), a.1 .1.min(b.1 .1)))
    }

    pub fn add_scaled(&self, other: &Self, s: &Q) -> Result<Self> {
        self.check(other)?;
        let w = Self::intersect(self.window, other.window);
        Ok(Self::from_fn(self.vars, self.region, w, |e1, e2| {
            let mut c = self.coeff(e1, e2).unwrap();
            c.add_scaled(&other.coeff(e1, e2).unwrap(), s);
            c
        }))
    }

    /// Multiply by a polynomial; the known rectangle shrinks by its degrees.
    pub fn mul_poly(&self, p: &Poly2) -> Self {
        let ((f1, c1), (f2, c2)) = self.window;
        let (lo1, hi1, lo2, hi2) = p.degree_box();
        let w = ((f1 + hi1, c1 + lo1), (f2 + hi2, c2 + lo2));
        Self::from_fn(self.vars, self.region, w, |e1, e2| {
            let mut acc = C::nil();
            for ((i, j), pc) in p.terms() {
                if let Some(c) = self.coeffs.get(&(e1 - i, e2 - j)) {
                    acc.add_scaled(c, pc);
                }
            }
            acc
        })
    }

    /// Equality on the common rectangle; returns the first differing exponent pair.
    pub fn first_disagreement(&self, other: &Self) -> Option<((i64, i64), C, C)> {
        let w = Self::intersect(self.window, other.window);
        for e1 in w.0 .0..=w.0 .1 {
            for e2 in w.1 .0..=w.1 .1 {
                let (a, b) = (self.coeff(e1, e2).unwrap(), other.coeff(e1, e2).unwrap());
                if a != b {
                    return Some(((e1, e2), a, b));
                }
            }
        }
        None
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.region == other.region && self.first_disagreement(other).is_none()
    }
}

/// Polynomial in two variables with nonnegative exponents.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly2 {
    terms: BTreeMap<(i64, i64), Q>,
}

impl Poly2 {
    pub fn one() -> Self {
        Self::monomial(0, 0, Q::one())
    }

    pub fn monomial(i: i64, j: i64, c: Q) -> Self {
        assert!(i >= 0 && j >= 0);
        let mut p = Self::default();
        p.add_term(i, j, c);
        p
    }

    pub fn add_term(&mut self, i: i64, j: i64, c: Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((i, j)).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), &Q)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::default();
        for ((i, j), c) in &self.terms {
            for ((k, l), d) in &other.terms {
                out.add_term(i + k, j + l, c * d);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly2 {
        (0..k).fold(Poly2::one(), |acc, _| acc.mul(self))
    }

    pub fn linear(form: &LinearForm) -> Poly2 {
        let mut p = Poly2::default();
        p.add_term(1, 0, form.c1.clone());
        p.add_term(0, 1, form.c2.clone());
        p.add_term(0, 0, form.c0.clone());
        p
    }

    /// `Π (x1 - g(x2))^k`.
    pub fn from_factors(factors: &[(LinearMap, u32)]) -> Poly2 {
        factors.iter().fold(Poly2::one(), |acc, (g, k)| acc.mul(&Poly2::linear(&LinearForm::from_map(g)).pow(*k)))
    }

    /// (min x1-degree, max x1-degree, min x2-degree, max x2-degree)
    pub fn degree_box(&self) -> (i64, i64, i64, i64) {
        let mut b = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for (i, j) in self.terms.keys() {
            b = (b.0.min(*i), b.1.max(*i), b.2.min(*j), b.3.max(*j));
        }
        if self.terms.is_empty() {
            (0, 0, 0, 0)
        } else {
            b
        }
    }

    /// Coefficient polynomial of `x1^i` as a series in `x2` (variable `var`).
    pub fn x1_coefficient(&self, i: i64, var: Var) -> WindowedSeries<Q> {
        WindowedSeries::from_terms(
            var,
            self.terms.iter().filter(|((a, _), _)| *a == i).map(|((_, j), c)| (*j, c.clone())),
            EXACT_FLOOR,
        )
    }

    /// `p(x0 + x2, x2)` as a polynomial in `(x0, x2)`.
    pub fn shift_first(&self) -> Poly2 {
        let mut out = Poly2::default();
        for ((i, j), c) in &self.terms {
            for t in 0..=*i {
                out.add_term(t, i - t + j, c * binom(*i, t));
            }
        }
        out
    }
}

/// `c1*x1 + c2*x2 + c0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearForm {
    pub c1: Q,
    pub c2: Q,
    pub c0: Q,
}

impl LinearForm {
    /// `x1 - g(x2)`.
    pub fn from_map(g: &LinearMap) -> Self {
        Self { c1: Q::one(), c2: -g.alpha().clone(), c0: -g.beta().clone() }
    }
}

/// Series in an outer variable whose coefficients are series in an inner one.
/// Exponents are stored in the orientation where both are lower-truncated in
/// the inverse variable; `floor` is the outer truncation.
#[derive(Clone, Debug)]
struct Nested {
    outer: BTreeMap<i64, WindowedSeries<Q>>,
    floor: i64,
}

impl Nested {
    fn exact(terms: impl IntoIterator<Item = (i64, WindowedSeries<Q>)>) -> Self {
        Self::with_floor(terms, EXACT_FLOOR)
    }

    fn with_floor(terms: impl IntoIterator<Item = (i64, WindowedSeries<Q>)>, floor: i64) -> Self {
        let outer = terms.into_iter().filter(|(o, s)| *o >= floor && !s.is_zero()).collect();
        Self { outer, floor }
    }

    fn ceiling(&self) -> i64 {
        self.outer.keys().next_back().copied().unwrap_or(self.floor - 1)
    }

    fn mul(&self, other: &Nested) -> Result<Nested> {
        let floor = product_floor(self.floor, self.ceiling(), other.floor, other.ceiling());
        let mut outer: BTreeMap<i64, WindowedSeries<Q>> = BTreeMap::new();
        for (oa, sa) in &self.outer {
            for (ob, sb) in &other.outer {
                if oa + ob < floor {
                    continue;
                }
                let p = sa.window_mul(sb)?;
                let slot = outer.entry(oa + ob).or_insert_with(|| WindowedSeries::zero(p.var(), EXACT_FLOOR));
                *slot = slot.add(&p)?;
            }
        }
        Ok(Nested::with_floor(outer, floor))
    }
}

/// Per-region orientation: which original variable is outer, and whether each
/// orientation is reflected (`e -> -e`).
struct Layout {
    outer_is_x2: bool,
    reflect_outer: bool,
    reflect_inner: bool,
}

impl Layout {
    fn of(region: Region) -> Self {
        match region {
            Region::FirstSecond => Layout { outer_is_x2: true, reflect_outer: true, reflect_inner: true },
            Region::InvFirstSecond => Layout { outer_is_x2: true, reflect_outer: true, reflect_inner: false },
            Region::InvSecondInvFirst => Layout { outer_is_x2: false, reflect_outer: false, reflect_inner: false },
        }
    }

    /// Map original exponents to (outer, inner) storage exponents.
    fn to_storage(&self, e1: i64, e2: i64) -> (i64, i64) {
        let (o, i) = if self.outer_is_x2 { (e2, e1) } else { (e1, e2) };
        (if self.reflect_outer { -o } else { o }, if self.reflect_inner { -i } else { i })
    }
}

/// `(a*y + b)^n` expanded in `y^{-1}` where `y` is the storage orientation of a
/// variable `z` with `y = z` or `y = z^{-1}`.
fn oriented_power(var: Var, a: &Q, b: &Q, n: i64, reflect: bool, floor: i64) -> WindowedSeries<Q> {
    if a.is_zero() {
        return WindowedSeries::constant(var, qpow(b, n));
    }
    if !reflect {
        let floor = floor.min(n);
        return LinearMap::new(a.clone(), b.clone()).power_expand_in(var, n, floor);
    }
    // y = z^{-1}: (a z + b)^n = y^{-n} (b y + a)^n
    if b.is_zero() {
        return WindowedSeries::monomial(var, -n, qpow(a, n));
    }
    let inner = LinearMap::new(b.clone(), a.clone()).power_expand_in(var, n, (floor + n).min(n));
    inner.shift(-n)
}

fn factor_expansion(form: &LinearForm, k: u32, layout: &Layout, outer_floor: i64, inner_floor: i64) -> Nested {
    let k = k as i64;
    let var = Var::X;
    // split form = (inner-variable part) + (outer-variable part)
    let (ci, co) = if layout.outer_is_x2 { (&form.c1, &form.c2) } else { (&form.c2, &form.c1) };
    let c0 = &form.c0;
    let (ro, ri) = (layout.reflect_outer, layout.reflect_inner);
    let outer_exp = |e: i64| if ro { -e } else { e };
    if ci.is_zero() && c0.is_zero() {
        return Nested::exact([(outer_exp(-k), WindowedSeries::constant(var, qpow(co, -k)))]);
    }
    if co.is_zero() {
        return Nested::exact([(0, oriented_power(var, ci, c0, -k, ri, inner_floor))]);
    }
    if layout.outer_is_x2 {
        // (c1 x1 + c0 + c2 x2)^{-k} = Σ_i C(-k,i) (c2 x2)^i (c1 x1 + c0)^{-k-i}; outer is reflected
        let mut terms = Vec::new();
        let mut i = 0;
        while outer_exp(i) >= outer_floor {
            let inner = oriented_power(var, ci, c0, -k - i, ri, inner_floor).scale(&(binom(-k, i) * qpow(co, i)));
            terms.push((outer_exp(i), inner));
            i += 1;
        }
        Nested::with_floor(terms, outer_floor)
    } else {
        // x1 dominant: Σ_i C(-k,i) (c1 x1)^{-k-i} (c2 x2 + c0)^i
        let mut terms = Vec::new();
        let mut i = 0;
        while -k - i >= outer_floor {
            let inner = oriented_power(var, ci, c0, i, ri, EXACT_FLOOR).scale(&(binom(-k, i) * qpow(co, -k - i)));
            terms.push((-k - i, inner));
            i += 1;
        }
        Nested::with_floor(terms, outer_floor)
    }
}

fn numerator_nested(p: &Poly2, layout: &Layout) -> Nested {
    let mut outer: BTreeMap<i64, WindowedSeries<Q>> = BTreeMap::new();
    for ((i, j), c) in p.terms() {
        let (o, inn) = layout.to_storage(i, j);
        let m = WindowedSeries::monomial(Var::X, inn, c.clone());
        let slot = outer.entry(o).or_insert_with(|| WindowedSeries::zero(Var::X, EXACT_FLOOR));
        *slot = slot.add(&m).expect("same variable");
    }
    Nested::exact(outer)
}

/// Expansion of `numerator / Π factor^k` in `region`, exact on `window`
/// (x1-exponent range, x2-exponent range).
pub fn iota_expand(numerator: &Poly2, factors: &[(LinearForm, u32)], region: Region, window: Rect) -> Result<BiSeries<Q>> {
    let layout = Layout::of(region);
    let corners = [
        layout.to_storage(window.0 .0, window.1 .0),
        layout.to_storage(window.0 .0, window.1 .1),
        layout.to_storage(window.0 .1, window.1 .0),
        layout.to_storage(window.0 .1, window.1 .1),
    ];
    let need_outer = corners.iter().map(|c| c.0).min().unwrap();
    let need_inner = corners.iter().map(|c| c.1).min().unwrap();
    let mut margin = 4;
    for _ in 0..8 {
        let num = numerator_nested(numerator, &layout);
        let mut acc = num;
        for (form, k) in factors {
            if form.c1.is_zero() && form.c2.is_zero() && form.c0.is_zero() {
                return Err(Error::ValidationFailed("zero denominator factor".into()));
            }
            let f = factor_expansion(form, *k, &layout, need_outer - margin, need_inner - margin);
            acc = acc.mul(&f)?;
        }
        let ok_outer = acc.floor <= need_outer;
        let ok_inner = acc.outer.iter().filter(|(o, _)| **o >= need_outer).all(|(_, s)| s.floor() <= need_inner);
        if ok_outer && ok_inner {
            return Ok(BiSeries::from_fn((Var::X1, Var::X2), region, window, |e1, e2| {
                let (o, i) = layout.to_storage(e1, e2);
                acc.outer.get(&o).map(|s| s.coeff(i)).unwrap_or_else(Q::zero)
            }));
        }
        margin *= 2;
    }
    Err(Error::WindowTooShallow { needed: need_inner, have: need_inner + margin })
}

/// Expansion of `numerator / Π (x1 - g_i(x2))^{k_i}`.
pub fn iota_expand_maps(numerator: &Poly2, denominator: &[(LinearMap, u32)], region: Region, window: Rect) -> Result<BiSeries<Q>> {
    let factors: Vec<_> = denominator.iter().map(|(g, k)| (LinearForm::from_map(g), *k)).collect();
    iota_expand(numerator, &factors, region, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, q};

    fn lm(a: i64, b: i64) -> LinearMap {
        LinearMap::new(q(a), q(b))
    }

    #[test]
    fn geometric_series_first_second() {
        let s = iota_expand_maps(&Poly2::one(), &[(LinearMap::identity(), 1)], Region::FirstSecond, ((-6, 2), (-2, 6))).unwrap();
        for e1 in -6..=2 {
            for e2 in -2..=6 {
                let expect = if e2 >= 0 && e1 == -e2 - 1 { q(1) } else { q(0) };
                assert_eq!(s.coeff(e1, e2).unwrap(), expect, "({e1},{e2})");
            }
        }
    }

    #[test]
    fn inverse_sum_in_inv_first_second() {
        // 1/(x + x0) with x as first variable and x0 as second
        let s = iota_expand_maps(&Poly2::one(), &[(lm(-1, 0), 1)], Region::InvFirstSecond, ((-8, 2), (-1, 7))).unwrap();
        for k in 0..=7 {
            assert_eq!(s.coeff(-k - 1, k).unwrap(), q(if k % 2 == 0 { 1 } else { -1 }));
        }
        let back = s.mul_poly(&Poly2::linear(&LinearForm::from_map(&lm(-1, 0))));
        let one = BiSeries::from_fn((Var::X1, Var::X2), Region::InvFirstSecond, back.window(), |e1, e2| {
            if e1 == 0 && e2 == 0 { q(1) } else { q(0) }
        });
        assert!(back.agrees_with(&one));
    }

    #[test]
    fn polynomial_is_itself() {
        let mut p = Poly2::one();
        p.add_term(2, 1, q(3));
        for region in [Region::FirstSecond, Region::InvFirstSecond, Region::InvSecondInvFirst] {
            let s = iota_expand(&p, &[], region, ((-3, 3), (-3, 3))).unwrap();
            assert_eq!(s.coeff(2, 1).unwrap(), q(3));
            assert_eq!(s.coeff(0, 0).unwrap(), q(1));
            assert_eq!(s.terms().count(), 2);
        }
    }

    #[test]
    fn regions_differ_for_translated_pole() {
        // 1/(x1 - 1): C((x1)) gives -Σ x1^k, C((x1^{-1})) gives Σ x1^{-k-1}
        let form = LinearForm { c1: q(1), c2: q(0), c0: q(-1) };
        let a = iota_expand(&Poly2::one(), &[(form.clone(), 1)], Region::FirstSecond, ((-3, 3), (0, 0))).unwrap();
        let b = iota_expand(&Poly2::one(), &[(form, 1)], Region::InvFirstSecond, ((-3, 3), (0, 0))).unwrap();
        assert_eq!(a.coeff(2, 0).unwrap(), q(-1));
        assert_eq!(a.coeff(-1, 0).unwrap(), q(0));
        assert_eq!(b.coeff(-1, 0).unwrap(), q(1));
        assert_eq!(b.coeff(2, 0).unwrap(), q(0));
    }

    #[test]
    fn roundtrip_all_regions() {
        let den = [(lm(1, 0), 2), (lm(-1, 0), 1), (LinearMap::new(frac(1, 2), q(1)), 1)];
        let mut num = Poly2::one();
        num.add_term(1, 1, q(2));
        let denp = Poly2::from_factors(&den);
        for region in [Region::FirstSecond, Region::InvFirstSecond, Region::InvSecondInvFirst] {
            let s = iota_expand_maps(&num, &den, region, ((-12, 12), (-12, 12))).unwrap();
            let back = s.mul_poly(&denp);
            let expect = BiSeries::from_fn((Var::X1, Var::X2), region, back.window(), |e1, e2| {
                num.terms().find(|(k, _)| *k == (e1, e2)).map(|(_, c)| c.clone()).unwrap_or_else(|| q(0))
            });
            assert!(back.first_disagreement(&expect).is_none(), "{region:?}");
        }
    }

    #[test]
    fn region_mismatch_rejected() {
        let a = iota_expand(&Poly2::one(), &[], Region::FirstSecond, ((0, 1), (0, 1))).unwrap();
        let b = iota_expand(&Poly2::one(), &[], Region::InvFirstSecond, ((0, 1), (0, 1))).unwrap();
        assert_eq!(a.add_scaled(&b, &q(1)), Err(Error::RegionMismatch));
    }

    #[test]
    fn shift_first_binomial() {
        // (x1 - x2)^2 at x1 = x0 + x2 is x0^2
        let p = Poly2::from_factors(&[(LinearMap::identity(), 2)]);
        assert_eq!(p.shift_first(), Poly2::monomial(2, 0, q(1)));
    }
}
