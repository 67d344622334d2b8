//! Formal delta distributions `δ(g(x2)/x1)`, their derivative terms, and the
//! decomposition of distributions annihilated by a product of linear factors.
//!
//! Everything is compared through coefficient streams: row `e1` of a
//! distribution is its `x1^{e1}` coefficient, a series in `x2` expanded in
//! `C((x2^{-1}))`. Operator-valued distributions are handled by evaluating on a
//! fixed vector, so coefficients are any [`Coeff`].

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lingroup::LinearMap;
use crate::poly::neg_map_power;
use crate::scalar::{binom, qpow, Q};
use crate::series::{clamp_floor, BiSeries, Poly2, Rect, Var, WindowedSeries, EXACT_FLOOR};
use crate::sparse::Coeff;

/// Anything that can produce full `x1`-rows of a two-variable distribution.
pub trait StreamSource<C: Coeff>: Sync {
    /// The `x1^{e1}` coefficient, exact at exponents `>= floor2` when the
    /// source has that much precision (callers check the returned floor).
    fn row(&self, e1: i64, floor2: i64) -> Result<WindowedSeries<C>>;
}

/// Stream source backed by a closure.
pub struct FnSource<F>(pub F);

impl<C: Coeff, F: Fn(i64, i64) -> Result<WindowedSeries<C>> + Sync> StreamSource<C> for FnSource<F> {
    fn row(&self, e1: i64, floor2: i64) -> Result<WindowedSeries<C>> {
        (self.0)(e1, floor2)
    }
}

/// Coefficients of a distribution on a finite rectangle.
#[derive(Clone, PartialEq, Debug)]
pub struct Grid<C = Q> {
    window: Rect,
    data: BTreeMap<(i64, i64), C>,
}

impl<C: Coeff> Grid<C> {
    pub fn zero(window: Rect) -> Self {
        Grid { window, data: BTreeMap::new() }
    }

    pub fn from_source<S: StreamSource<C> + ?Sized>(src: &S, window: Rect) -> Result<Self> {
        let ((lo1, hi1), (lo2, hi2)) = window;
        let mut g = Self::zero(window);
        for e1 in lo1..=hi1 {
            let row = src.row(e1, lo2)?;
            if row.floor() > lo2 {
                return Err(Error::WindowTooShallow { needed: lo2, have: row.floor() });
            }
            for (e2, c) in row.terms() {
                if (lo2..=hi2).contains(&e2) {
                    g.data.insert((e1, e2), c.clone());
                }
            }
        }
        Ok(g)
    }

    pub fn from_bi(s: &BiSeries<C>) -> Self {
        Grid { window: s.window(), data: s.terms().map(|(k, c)| (k, c.clone())).collect() }
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn get(&self, e1: i64, e2: i64) -> C {
        self.data.get(&(e1, e2)).cloned().unwrap_or_else(C::nil)
    }

    pub fn is_zero(&self) -> bool {
        self.data.is_empty()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = ((i64, i64), &C)> {
        self.data.iter().map(|(k, c)| (*k, c))
    }

    pub fn add_scaled(&mut self, other: &Self, s: &Q) {
        for (k, c) in &other.data {
            let slot = self.data.entry(*k).or_insert_with(C::nil);
            slot.add_scaled(c, s);
            if slot.is_nil() {
                self.data.remove(k);
            }
        }
    }

    /// First point of the common rectangle where the grids differ.
    pub fn first_disagreement(&self, other: &Self) -> Option<((i64, i64), C, C)> {
        let ((a1, b1), (a2, b2)) = self.window;
        let ((c1, d1), (c2, d2)) = other.window;
        for e1 in a1.max(c1)..=b1.min(d1) {
            for e2 in a2.max(c2)..=b2.min(d2) {
                let (x, y) = (self.get(e1, e2), other.get(e1, e2));
                if x != y {
                    return Some(((e1, e2), x, y));
                }
            }
        }
        None
    }
}

/// Which variable carries the pole in the stored normal form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Pole {
    /// `c(x2) (1/j!) ∂_{x2}^j x1^{-1} δ(g(x2)/x1)`
    X1,
    /// `c(x2) x2^{-1} δ(g(x1)/x2)`
    X2,
}

/// A single delta-function term.
#[derive(Clone, PartialEq, Debug)]
pub struct DeltaTerm<C = Q> {
    g: LinearMap,
    j: u32,
    coeff: WindowedSeries<C>,
    pole: Pole,
}

/// `coeff(x2) (1/j!) ∂_{x2}^j x1^{-1} δ(g(x2)/x1)`.
pub fn delta_term<C: Coeff>(g: LinearMap, j: u32, coeff: WindowedSeries<C>) -> DeltaTerm<C> {
    DeltaTerm { g, j, coeff: coeff.with_var(Var::X2), pole: Pole::X1 }
}

impl<C: Coeff> DeltaTerm<C> {
    pub fn support(&self) -> &LinearMap {
        &self.g
    }

    pub fn order(&self) -> u32 {
        self.j
    }

    pub fn coefficient(&self) -> &WindowedSeries<C> {
        &self.coeff
    }

    pub fn pole(&self) -> Pole {
        self.pole
    }

    /// `x1^{-1} δ(g(x2)/x1) = Φ(g)^{-1} x2^{-1} δ(g^{-1}(x1)/x2)` and back.
    pub fn flip(&self) -> Result<Self> {
        if self.j != 0 {
            return Err(Error::OrderNotZero(self.j));
        }
        let pole = match self.pole {
            Pole::X1 => Pole::X2,
            Pole::X2 => Pole::X1,
        };
        Ok(DeltaTerm { g: self.g.invert(), j: 0, coeff: self.coeff.scale(&self.g.phi().recip()), pole })
    }

    /// Coefficients on a rectangle.
    pub fn coeff_stream(&self, window: Rect) -> Result<Grid<C>> {
        Grid::from_source(self, window)
    }

    fn row_x1(&self, e1: i64, floor2: i64) -> WindowedSeries<C> {
        let n = -e1 - 1;
        let j = self.j as i64;
        let b = binom(n, j);
        if b.is_zero() {
            return WindowedSeries::zero(Var::X2, EXACT_FLOOR);
        }
        let scale = b * qpow(self.g.alpha(), j);
        let ff = clamp_floor(floor2 - self.coeff.ceiling()).min(n - j);
        let power = self.g.power_expand_in(Var::X2, n - j, ff);
        self.coeff.scalar_mul(&power).expect("same variable").scale(&scale)
    }

    fn row_x2(&self, e1: i64, floor2: i64) -> WindowedSeries<C> {
        // coefficient at x1^{e1} x2^{e2}: Σ_s c_s [x1^{e1}] g(x1)^{s-e2-1}
        let (a, b) = (self.g.alpha(), self.g.beta());
        let floor = clamp_floor(floor2.max(self.coeff.floor().saturating_sub(e1 + 1)));
        let mut out: BTreeMap<i64, C> = BTreeMap::new();
        for (s, c) in self.coeff.terms() {
            let top = s - 1 - e1;
            let bottom = if b.is_zero() { top } else { floor };
            for e2 in bottom..=top {
                let m = s - e2 - 1;
                let w = binom(m, m - e1) * qpow(a, e1) * qpow(b, m - e1);
                if !w.is_zero() {
                    out.entry(e2).or_insert_with(C::nil).add_scaled(c, &w);
                }
            }
        }
        WindowedSeries::from_terms(Var::X2, out, floor)
    }
}

impl<C: Coeff> StreamSource<C> for DeltaTerm<C> {
    fn row(&self, e1: i64, floor2: i64) -> Result<WindowedSeries<C>> {
        Ok(match self.pole {
            Pole::X1 => self.row_x1(e1, floor2),
            Pole::X2 => self.row_x2(e1, floor2),
        })
    }
}

/// Finite sum of delta terms in `x1`-pole normal form plus an optional regular part.
#[derive(Clone, PartialEq, Debug)]
pub struct DeltaDistribution<C = Q> {
    singular: BTreeMap<(LinearMap, u32), WindowedSeries<C>>,
    regular: Option<BiSeries<C>>,
}

impl<C: Coeff> Default for DeltaDistribution<C> {
    fn default() -> Self {
        Self { singular: BTreeMap::new(), regular: None }
    }
}

impl<C: Coeff> DeltaDistribution<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = DeltaTerm<C>>) -> Result<Self> {
        let mut d = Self::new();
        for t in terms {
            d.add_term(t)?;
        }
        Ok(d)
    }

    /// Add a term, flipping `x2`-pole terms back to normal form and merging
    /// equal `(g, j)` keys.
    pub fn add_term(&mut self, t: DeltaTerm<C>) -> Result<()> {
        let t = if t.pole == Pole::X2 { t.flip()? } else { t };
        let key = (t.g, t.j);
        let merged = match self.singular.remove(&key) {
            Some(c) => c.add(&t.coeff)?,
            None => t.coeff,
        };
        if !merged.is_zero() {
            self.singular.insert(key, merged);
        }
        Ok(())
    }

    pub fn with_regular(mut self, r: BiSeries<C>) -> Self {
        self.regular = Some(r);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = DeltaTerm<C>> + '_ {
        self.singular.iter().map(|((g, j), c)| delta_term(g.clone(), *j, c.clone()))
    }

    pub fn regular(&self) -> Option<&BiSeries<C>> {
        self.regular.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.singular.is_empty() && self.regular.as_ref().is_none_or(|r| r.is_zero())
    }

    /// Multiply by `Π (x1 - h(x2))^k`.
    pub fn poly_mul(&self, p: &[(LinearMap, u32)]) -> Result<Self> {
        let mut cur = self.singular.clone();
        for (h, k) in p {
            for _ in 0..*k {
                let mut next: BTreeMap<(LinearMap, u32), WindowedSeries<C>> = BTreeMap::new();
                let mut put = |key: (LinearMap, u32), c: WindowedSeries<C>| -> Result<()> {
                    let v = match next.remove(&key) {
                        Some(old) => old.add(&c)?,
                        None => c,
                    };
                    if !v.is_zero() {
                        next.insert(key, v);
                    }
                    Ok(())
                };
                for ((g, j), c) in &cur {
                    // (x1 - g) D_j = α D_{j-1}; (x1 - h) = (x1 - g) + (g - h)(x2)
                    if *j > 0 {
                        put((g.clone(), j - 1), c.scale(g.alpha()))?;
                    }
                    if g != h {
                        let diff = WindowedSeries::polynomial(
                            Var::X2,
                            &[(1, g.alpha() - h.alpha()), (0, g.beta() - h.beta())],
                        );
                        put((g.clone(), *j), c.scalar_mul(&diff)?)?;
                    }
                }
                cur = next;
            }
        }
        let regular = self.regular.as_ref().map(|r| r.mul_poly(&Poly2::from_factors(p)));
        Ok(Self { singular: cur, regular })
    }

    /// Coefficients on a rectangle, including the regular part.
    pub fn grid(&self, window: Rect) -> Result<Grid<C>> {
        let mut g = Grid::zero(window);
        for t in self.terms() {
            g.add_scaled(&t.coeff_stream(window)?, &Q::one());
        }
        if let Some(r) = &self.regular {
            let ((a1, b1), (a2, b2)) = window;
            let ((c1, d1), (c2, d2)) = r.window();
            if a1 < c1 || b1 > d1 || a2 < c2 || b2 > d2 {
                return Err(Error::WindowTooShallow { needed: a2, have: c2 });
            }
            let mut rg = Grid::from_bi(r);
            rg.window = window;
            rg.data.retain(|(e1, e2), _| (a1..=b1).contains(e1) && (a2..=b2).contains(e2));
            g.add_scaled(&rg, &Q::one());
        }
        Ok(g)
    }
}

impl<C: Coeff> StreamSource<C> for DeltaDistribution<C> {
    fn row(&self, e1: i64, floor2: i64) -> Result<WindowedSeries<C>> {
        if self.regular.is_some() {
            return Err(Error::HypothesisViolated("regular part has no full rows".into()));
        }
        let mut out = WindowedSeries::zero(Var::X2, EXACT_FLOOR);
        for t in self.terms() {
            out = out.add(&t.row(e1, floor2)?)?;
        }
        Ok(out)
    }
}

/// Memoizes the rows of a source, keeping the deepest one computed per `e1`.
struct RowCache<'a, C, S: ?Sized> {
    src: &'a S,
    rows: Mutex<BTreeMap<i64, WindowedSeries<C>>>,
}

impl<'a, C: Coeff, S: StreamSource<C> + ?Sized> RowCache<'a, C, S> {
    fn new(src: &'a S) -> Self {
        Self { src, rows: Mutex::new(BTreeMap::new()) }
    }
}

impl<C: Coeff, S: StreamSource<C> + ?Sized> StreamSource<C> for RowCache<'_, C, S> {
    fn row(&self, e1: i64, floor2: i64) -> Result<WindowedSeries<C>> {
        if let Some(r) = self.rows.lock().unwrap().get(&e1) {
            if r.floor() <= floor2 {
                return Ok(r.truncate(floor2));
            }
        }
        let r = self.src.row(e1, floor2)?;
        self.rows.lock().unwrap().insert(e1, r.clone());
        Ok(r)
    }
}

/// `x1^{e1}` row of `P(x1, x2) A` for a polynomial in `x1` with `x2`-series coefficients.
fn apply_x1_poly<C: Coeff, S: StreamSource<C> + ?Sized>(
    src: &S,
    poly: &[WindowedSeries<Q>],
    e1: i64,
    floor2: i64,
) -> Result<WindowedSeries<C>> {
    let mut out = WindowedSeries::zero(Var::X2, EXACT_FLOOR);
    for (a, pa) in poly.iter().enumerate() {
        if pa.is_zero() && pa.is_exact() {
            continue;
        }
        let row = src.row(e1 - a as i64, clamp_floor(floor2 - pa.ceiling()))?;
        out = out.add(&row.scalar_mul(pa)?)?;
    }
    Ok(out)
}

/// Check `Π (x1 - g_i(x2))^{k_i} · A = 0` on `window`, one linear factor at a
/// time: row `e1` of `(x1 - g(x2)) B` is `B_{e1-1} - g(x2) B_{e1}`.
pub fn check_annihilated<C: Coeff, S: StreamSource<C> + ?Sized>(src: &S, p: &[(LinearMap, u32)], window: Rect) -> Result<()> {
    let ((lo1, hi1), (lo2, hi2)) = window;
    let factors: Vec<WindowedSeries<Q>> =
        p.iter().flat_map(|(g, k)| (0..*k).map(move |_| neg_map_power(g, 1, Var::X2))).collect();
    let total = factors.len() as i64;
    let mut first = lo1 - total;
    let mut rows: Vec<WindowedSeries<C>> = (first..=hi1).map(|e1| src.row(e1, lo2 - total)).collect::<Result<_>>()?;
    for minus_g in &factors {
        let mut next = Vec::with_capacity(rows.len() - 1);
        for i in 1..rows.len() {
            next.push(rows[i - 1].add(&rows[i].scalar_mul(minus_g)?)?);
        }
        rows = next;
        first += 1;
    }
    for (i, r) in rows.iter().enumerate() {
        let e1 = first + i as i64;
        if r.floor() > lo2 {
            return Err(Error::WindowTooShallow { needed: lo2, have: r.floor() });
        }
        let bad = r.terms().map(|(e2, _)| e2).find(|e2| (lo2..=hi2).contains(e2));
        if let Some(e2) = bad {
            return Err(Error::AnnihilationFails { e1, e2 });
        }
    }
    Ok(())
}

/// Source row floor needed so that [`decompose`] returns coefficients known
/// down to `coeff_floor`.
pub fn needed_source_floor(p: &[(LinearMap, u32)], coeff_floor: i64) -> i64 {
    let deg: i64 = p.iter().map(|(_, k)| *k as i64).sum();
    coeff_floor - 2 * deg
}

/// Write an annihilated distribution as `Σ_{i,j} A_ij(x2) (1/j!) ∂^j x1^{-1} δ(g_i(x2)/x1)`.
///
/// Annihilation is verified on `check`; the returned coefficients are exact
/// down to `coeff_floor`. Each support point is isolated by multiplying with the other
/// factors, and its coefficients are read off residues
/// `α^{-l} Res_{x1} (x1 - g(x2))^l`.
pub fn decompose<C: Coeff, S: StreamSource<C> + ?Sized>(
    src: &S,
    p: &[(LinearMap, u32)],
    check: Rect,
    coeff_floor: i64,
) -> Result<Vec<DeltaTerm<C>>> {
    for (i, (g, _)) in p.iter().enumerate() {
        if p[..i].iter().any(|(h, _)| h == g) {
            return Err(Error::HypothesisViolated(format!("repeated support point {g}")));
        }
    }
    let src = RowCache::new(src);
    check_annihilated(&src, p, check)?;
    let total: i64 = p.iter().map(|(_, k)| *k as i64).sum();
    let mut margin = total + 2;
    loop {
        match decompose_with_margin(&src, p, coeff_floor, margin) {
            Err(Error::WindowTooShallow { .. }) if margin < 64 * (total + 2) => margin *= 2,
            other => return other,
        }
    }
}

/// `g(x)^n` as an exact series in `var`.
fn map_power(g: &LinearMap, n: u32) -> WindowedSeries<Q> {
    let s = neg_map_power(g, n, Var::X2);
    if n.is_multiple_of(2) {
        s
    } else {
        s.scale(&-Q::one())
    }
}

/// Taylor coefficients `p_t(x2)` of `P(x1, x2)` at `x1 = g(x2)`.
fn taylor_at(poly: &Poly2, g: &LinearMap) -> Vec<WindowedSeries<Q>> {
    let deg = poly.degree_box().1.max(0);
    (0..=deg)
        .map(|t| {
            let mut acc = WindowedSeries::zero(Var::X2, EXACT_FLOOR);
            for a in t..=deg {
                let c = poly.x1_coefficient(a, Var::X2);
                let term = c.scalar_mul(&map_power(g, (a - t) as u32)).expect("same variable");
                acc = acc.add(&term.scale(&binom(a, t))).expect("same variable");
            }
            acc
        })
        .collect()
}

/// Coefficients at one support point: with `P` the product of the other
/// factors, `P A` is supported at `g` only and its residues are
/// `B_l = Σ_t p_t α^t A_{l+t}` (`p_t` the Taylor coefficients of `P` at `g`),
/// which is solved from the top order down with one inversion of `p_0`.
fn decompose_with_margin<C: Coeff, S: StreamSource<C> + ?Sized>(
    src: &S,
    p: &[(LinearMap, u32)],
    coeff_floor: i64,
    margin: i64,
) -> Result<Vec<DeltaTerm<C>>> {
    let mut out = Vec::new();
    for (i, (g, k)) in p.iter().enumerate() {
        let others: Vec<(LinearMap, u32)> = p.iter().enumerate().filter(|(m, _)| *m != i).map(|(_, f)| f.clone()).collect();
        let poly = Poly2::from_factors(&others);
        let series: Vec<WindowedSeries<Q>> =
            (0..=poly.degree_box().1.max(0)).map(|a| poly.x1_coefficient(a, Var::X2)).collect();
        let fb = coeff_floor - margin;
        let mut b = Vec::with_capacity(*k as usize);
        for l in 0..*k {
            let mut acc = WindowedSeries::zero(Var::X2, EXACT_FLOOR);
            for t in 0..=l {
                let row = apply_x1_poly(src, &series, -1 - t as i64, fb - (l - t) as i64)?;
                acc = acc.add(&row.scalar_mul(&neg_map_power(g, l - t, Var::X2))?.scale(&binom(l as i64, t as i64)))?;
            }
            b.push(acc.scale(&qpow(g.alpha(), -(l as i64))));
        }
        let taylor = taylor_at(&poly, g);
        let top = b.iter().map(|x| x.ceiling()).max().unwrap_or(0).max(0);
        let p0_inv = taylor[0].inverse(fb - top - margin)?;
        let mut a: Vec<WindowedSeries<C>> = vec![WindowedSeries::zero(Var::X2, EXACT_FLOOR); *k as usize];
        for l in (0..*k as usize).rev() {
            let mut x = b[l].clone();
            for t in 1..taylor.len() {
                if l + t < *k as usize {
                    let pt = taylor[t].scale(&qpow(g.alpha(), t as i64));
                    x = x.sub(&a[l + t].scalar_mul(&pt)?)?;
                }
            }
            a[l] = x.scalar_mul(&p0_inv)?;
        }
        for (l, al) in a.into_iter().enumerate() {
            if al.floor() > coeff_floor {
                return Err(Error::WindowTooShallow { needed: coeff_floor, have: al.floor() });
            }
            let al = al.truncate(coeff_floor);
            if !al.is_zero() {
                out.push(delta_term(g.clone(), l as u32, al));
            }
        }
    }
    Ok(out)
}
