//! Anytime reals.
//!
//! Every probability, reward and discount in the crate is an exact
//! [`Rational`]. Quantities that are only reachable as limits (values over an
//! unbounded horizon, lower-semicomputable masses) are represented as
//! [`ApproxReal`]: a budget-indexed sequence of nested [`Enclosure`]s.
//!
//! Nesting is enforced at construction: whatever refinement function a caller
//! supplies, the enclosure returned at budget `k` is the intersection of the
//! enclosures at budgets `0..=k`. Intersecting sound enclosures stays sound,
//! so the invariant `lo(k) <= lo(k+1) <= x <= hi(k+1) <= hi(k)` holds for every
//! produced value.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Default refinement budget used wherever a budget is needed.
pub const DEFAULT_K_MAX: u32 = 64;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-k` as an exact rational.
pub fn dyadic(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

/// Parses `"3/4"`, `"-1/2"` or a bare integer `"2"`. No decimal points.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a fraction: `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// Renders a rational as `"num/den"`, always with an explicit denominator.
pub fn fraction(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Rational extended with the two infinities. Absent bounds are explicit
/// `NegInf` / `PosInf` states, never sentinel rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtRational {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtRational {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRational::Finite(_))
    }

    fn sign(&self) -> Ordering {
        match self {
            ExtRational::NegInf => Ordering::Less,
            ExtRational::PosInf => Ordering::Greater,
            ExtRational::Finite(q) => q.cmp(&Rational::zero()),
        }
    }

    fn recip_positive(&self) -> ExtRational {
        match self {
            ExtRational::Finite(q) => ExtRational::Finite(q.recip()),
            ExtRational::PosInf => ExtRational::Finite(Rational::zero()),
            ExtRational::NegInf => unreachable!("reciprocal of a non-positive bound"),
        }
    }
}

impl From<Rational> for ExtRational {
    fn from(q: Rational) -> Self {
        ExtRational::Finite(q)
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtRational::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::NegInf => f.write_str("-inf"),
            ExtRational::PosInf => f.write_str("+inf"),
            ExtRational::Finite(q) => f.write_str(&fraction(q)),
        }
    }
}

// Sums only ever combine bounds of the same side, so +inf + -inf cannot occur
// for well-formed enclosures.
fn ext_add(a: &ExtRational, b: &ExtRational) -> ExtRational {
    use ExtRational::*;
    match (a, b) {
        (Finite(x), Finite(y)) => Finite(x + y),
        (PosInf, NegInf) | (NegInf, PosInf) => {
            unreachable!("indeterminate sum of opposite infinities")
        }
        (PosInf, _) | (_, PosInf) => PosInf,
        (NegInf, _) | (_, NegInf) => NegInf,
    }
}

fn ext_neg(a: &ExtRational) -> ExtRational {
    match a {
        ExtRational::NegInf => ExtRational::PosInf,
        ExtRational::PosInf => ExtRational::NegInf,
        ExtRational::Finite(q) => ExtRational::Finite(-q),
    }
}

// Endpoint product for interval hulls: 0 * inf = 0 because infinite endpoints
// are never attained by the enclosed real.
fn ext_mul(a: &ExtRational, b: &ExtRational) -> ExtRational {
    use ExtRational::*;
    match (a, b) {
        (Finite(x), Finite(y)) => Finite(x * y),
        _ => {
            let (sa, sb) = (a.sign(), b.sign());
            if sa == Ordering::Equal || sb == Ordering::Equal {
                Finite(Rational::zero())
            } else if sa == sb {
                PosInf
            } else {
                NegInf
            }
        }
    }
}

/// A closed interval `[lo, hi]` of extended rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Enclosure {
    pub lo: ExtRational,
    pub hi: ExtRational,
}

impl Enclosure {
    pub fn new(lo: ExtRational, hi: ExtRational) -> Self {
        debug_assert!(lo <= hi, "empty enclosure [{lo}, {hi}]");
        Enclosure { lo, hi }
    }

    pub fn point(q: Rational) -> Self {
        Enclosure {
            lo: q.clone().into(),
            hi: q.into(),
        }
    }

    pub fn finite(lo: Rational, hi: Rational) -> Self {
        Enclosure::new(lo.into(), hi.into())
    }

    pub fn lower_only(lo: Rational) -> Self {
        Enclosure {
            lo: lo.into(),
            hi: ExtRational::PosInf,
        }
    }

    pub fn unbounded() -> Self {
        Enclosure {
            lo: ExtRational::NegInf,
            hi: ExtRational::PosInf,
        }
    }

    /// The point value when `lo == hi`.
    pub fn exact_value(&self) -> Option<&Rational> {
        match (&self.lo, &self.hi) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn is_point(&self) -> bool {
        self.exact_value().is_some()
    }

    /// `hi - lo`, or `None` when either side is infinite.
    pub fn width(&self) -> Option<Rational> {
        Some(self.hi.finite()? - self.lo.finite()?)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let x = ExtRational::Finite(x.clone());
        self.lo <= x && x <= self.hi
    }

    pub fn contains_enclosure(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Enclosure) -> Enclosure {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        assert!(
            lo <= hi,
            "disjoint enclosures cannot describe the same real"
        );
        Enclosure { lo, hi }
    }

    /// Hull of the maximum of two reals known to lie in `self` and `other`.
    pub fn max(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn scale(&self, p: &Rational) -> Enclosure {
        debug_assert!(!p.is_negative());
        let f = ExtRational::Finite(p.clone());
        Enclosure {
            lo: ext_mul(&self.lo, &f),
            hi: ext_mul(&self.hi, &f),
        }
    }

    pub fn shift(&self, c: &Rational) -> Enclosure {
        let c = ExtRational::Finite(c.clone());
        Enclosure {
            lo: ext_add(&self.lo, &c),
            hi: ext_add(&self.hi, &c),
        }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_value() {
            Some(q) => f.write_str(&fraction(q)),
            None => write!(f, "[{}, {}]", self.lo, self.hi),
        }
    }
}

impl Add for &Enclosure {
    type Output = Enclosure;
    fn add(self, rhs: &Enclosure) -> Enclosure {
        Enclosure {
            lo: ext_add(&self.lo, &rhs.lo),
            hi: ext_add(&self.hi, &rhs.hi),
        }
    }
}

impl Neg for &Enclosure {
    type Output = Enclosure;
    fn neg(self) -> Enclosure {
        Enclosure {
            lo: ext_neg(&self.hi),
            hi: ext_neg(&self.lo),
        }
    }
}

impl Sub for &Enclosure {
    type Output = Enclosure;
    fn sub(self, rhs: &Enclosure) -> Enclosure {
        self + &(-rhs)
    }
}

impl Mul for &Enclosure {
    type Output = Enclosure;
    fn mul(self, rhs: &Enclosure) -> Enclosure {
        let products = [
            ext_mul(&self.lo, &rhs.lo),
            ext_mul(&self.lo, &rhs.hi),
            ext_mul(&self.hi, &rhs.lo),
            ext_mul(&self.hi, &rhs.hi),
        ];
        let lo = products
            .iter()
            .min()
            .cloned()
            .unwrap_or(ExtRational::NegInf);
        let hi = products
            .iter()
            .max()
            .cloned()
            .unwrap_or(ExtRational::PosInf);
        Enclosure { lo, hi }
    }
}

/// How an [`ApproxReal`] approaches its value.
///
/// Ordered from most to least informative; binary operations produce the
/// weaker (greater) of their inputs' modes unless noted otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// `lo(k) == hi(k)` for every budget.
    Exact,
    /// Only the lower bounds carry information; `hi` may be `+inf`.
    LowerMonotone,
    /// General nested enclosures, possibly with infinite ends.
    Interval,
}

type RefineFn = dyn Fn(u32) -> Enclosure + Send + Sync;

struct Refiner {
    f: Box<RefineFn>,
    // cache[k] = intersection of f(0..=k)
    cache: Mutex<Vec<Enclosure>>,
}

impl Refiner {
    fn get(&self, k: u32) -> Enclosure {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        while cache.len() <= k as usize {
            let next = (self.f)(cache.len() as u32);
            let nested = match cache.last() {
                Some(prev) => prev.intersect(&next),
                None => next,
            };
            cache.push(nested);
        }
        cache[k as usize].clone()
    }
}

#[derive(Clone)]
enum Repr {
    Exact(Rational),
    Lazy(Arc<Refiner>),
}

/// An anytime real: `refine(k)` returns a nested enclosure of the value.
///
/// Immutable after construction and cheap to clone; refinement results are
/// cached, and evaluation is safe from multiple threads.
#[derive(Clone)]
pub struct ApproxReal {
    mode: Mode,
    repr: Repr,
}

impl fmt::Debug for ApproxReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Exact(q) => write!(f, "ApproxReal::exact({})", fraction(q)),
            Repr::Lazy(_) => write!(f, "ApproxReal({:?}, k=0: {})", self.mode, self.refine(0)),
        }
    }
}

impl ApproxReal {
    pub fn exact(q: Rational) -> Self {
        ApproxReal {
            mode: Mode::Exact,
            repr: Repr::Exact(q),
        }
    }

    /// A lower-semicomputable real from a nondecreasing sequence of lower
    /// bounds. The upper end is `+inf` at every budget.
    pub fn lower_monotone<F>(lower: F) -> Self
    where
        F: Fn(u32) -> Rational + Send + Sync + 'static,
    {
        Self::from_fn(Mode::LowerMonotone, move |k| {
            Enclosure::lower_only(lower(k))
        })
    }

    /// A limit-computable real from a sequence of sound enclosures.
    pub fn interval<F>(enclose: F) -> Self
    where
        F: Fn(u32) -> Enclosure + Send + Sync + 'static,
    {
        Self::from_fn(Mode::Interval, enclose)
    }

    /// Lower-monotone real that additionally knows upper bounds.
    pub fn lower_monotone_bounded<F>(enclose: F) -> Self
    where
        F: Fn(u32) -> Enclosure + Send + Sync + 'static,
    {
        Self::from_fn(Mode::LowerMonotone, enclose)
    }

    fn from_fn<F>(mode: Mode, f: F) -> Self
    where
        F: Fn(u32) -> Enclosure + Send + Sync + 'static,
    {
        ApproxReal {
            mode,
            repr: Repr::Lazy(Arc::new(Refiner {
                f: Box::new(f),
                cache: Mutex::new(Vec::new()),
            })),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn refine(&self, k: u32) -> Enclosure {
        match &self.repr {
            Repr::Exact(q) => Enclosure::point(q.clone()),
            Repr::Lazy(r) => r.get(k),
        }
    }

    pub fn lo(&self, k: u32) -> ExtRational {
        self.refine(k).lo
    }

    pub fn hi(&self, k: u32) -> ExtRational {
        self.refine(k).hi
    }

    /// The value, if this real is exact.
    pub fn exact_value(&self) -> Option<&Rational> {
        match &self.repr {
            Repr::Exact(q) => Some(q),
            Repr::Lazy(_) => None,
        }
    }

    fn combine<F>(&self, other: &ApproxReal, mode: Mode, op: F) -> ApproxReal
    where
        F: Fn(&Enclosure, &Enclosure) -> Enclosure + Send + Sync + 'static,
    {
        if let (Repr::Exact(_), Repr::Exact(_)) = (&self.repr, &other.repr) {
            let value = op(&self.refine(0), &other.refine(0));
            if let Some(q) = value.exact_value() {
                return ApproxReal::exact(q.clone());
            }
        }
        let (a, b) = (self.clone(), other.clone());
        Self::from_fn(mode, move |k| op(&a.refine(k), &b.refine(k)))
    }

    /// Certified-positive division. `other` must have `lo(k0) > 0` for some
    /// `k0 <= k_max`; the result refines the divisor at `max(k, k0)`.
    pub fn div(&self, other: &ApproxReal, k_max: u32) -> Result<ApproxReal> {
        let zero = ExtRational::Finite(Rational::zero());
        let k0 = (0..=k_max)
            .find(|&k| other.lo(k) > zero)
            .ok_or(Error::DivisorNotSeparated { k_max })?;
        if let (Some(a), Some(b)) = (self.exact_value(), other.exact_value()) {
            return Ok(ApproxReal::exact(a / b));
        }
        let mode = if self.mode == Mode::Exact && other.mode == Mode::Exact {
            Mode::Exact
        } else {
            Mode::Interval
        };
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::from_fn(mode, move |k| {
            let d = b.refine(k.max(k0));
            let recip = Enclosure {
                lo: d.hi.recip_positive(),
                hi: d.lo.recip_positive(),
            };
            &a.refine(k) * &recip
        }))
    }
}

impl Add for &ApproxReal {
    type Output = ApproxReal;
    fn add(self, rhs: &ApproxReal) -> ApproxReal {
        self.combine(rhs, self.mode.max(rhs.mode), |a, b| a + b)
    }
}

impl Sub for &ApproxReal {
    type Output = ApproxReal;
    fn sub(self, rhs: &ApproxReal) -> ApproxReal {
        let mode = match (self.mode, rhs.mode) {
            (Mode::Exact, Mode::Exact) => Mode::Exact,
            _ => Mode::Interval,
        };
        self.combine(rhs, mode, |a, b| a - b)
    }
}

impl Mul for &ApproxReal {
    type Output = ApproxReal;
    fn mul(self, rhs: &ApproxReal) -> ApproxReal {
        let zero = ExtRational::Finite(Rational::zero());
        let nonneg = self.lo(0) >= zero && rhs.lo(0) >= zero;
        let mode = match self.mode.max(rhs.mode) {
            Mode::LowerMonotone if !nonneg => Mode::Interval,
            m => m,
        };
        self.combine(rhs, mode, |a, b| a * b)
    }
}

/// Outcome of a tolerance-bounded comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Less,
    Greater,
    /// The enclosures prove `|a - b| < tol`.
    WithinTol,
    /// Budget exhausted without a decision.
    Unresolved,
}

/// Refines both reals for `k = 0..=k_max` and reports the first decision.
/// Strict separation is checked before closeness at every budget.
pub fn compare(a: &ApproxReal, b: &ApproxReal, tol: &Rational, k_max: u32) -> Comparison {
    assert!(tol.is_positive(), "tolerance must be positive");
    for k in 0..=k_max {
        let (ea, eb) = (a.refine(k), b.refine(k));
        if ea.lo > eb.hi {
            return Comparison::Greater;
        }
        if ea.hi < eb.lo {
            return Comparison::Less;
        }
        let spread = match (
            ea.hi.finite(),
            eb.lo.finite(),
            eb.hi.finite(),
            ea.lo.finite(),
        ) {
            (Some(ah), Some(bl), Some(bh), Some(al)) => Some((ah - bl).max(bh - al)),
            _ => None,
        };
        if spread.is_some_and(|s| &s < tol) {
            return Comparison::WithinTol;
        }
        if ea.is_point() && eb.is_point() {
            // nothing left to refine
            break;
        }
    }
    Comparison::Unresolved
}

/// Decides `a > b` within `k_max` refinements: `Some(true)` once
/// `lo_a > hi_b`, `Some(false)` once `hi_a <= lo_b` (this covers exact ties),
/// `None` if neither happens.
pub fn decide_greater(a: &ApproxReal, b: &ApproxReal, k_max: u32) -> Option<bool> {
    for k in 0..=k_max {
        let (ea, eb) = (a.refine(k), b.refine(k));
        if ea.lo > eb.hi {
            return Some(true);
        }
        if ea.hi <= eb.lo {
            return Some(false);
        }
        if ea.is_point() && eb.is_point() {
            break;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_minus_dyadic(k: u32) -> Rational {
        Rational::one() - dyadic(k)
    }

    /// `[1/2 - 2^-k, 1/2 + 2^-k]` clipped to `[0, 1]`, reaching `[1/2, 1/2]` at k >= 5.
    fn narrowing_half() -> ApproxReal {
        ApproxReal::interval(|k| {
            if k >= 5 {
                Enclosure::point(rat(1, 2))
            } else {
                let w = dyadic(k + 1);
                Enclosure::finite(
                    (rat(1, 2) - &w).max(Rational::zero()),
                    (rat(1, 2) + w).min(Rational::one()),
                )
            }
        })
    }

    #[test]
    fn exact_addition() {
        let s = &ApproxReal::exact(rat(1, 2)) + &ApproxReal::exact(rat(1, 3));
        assert_eq!(s.exact_value(), Some(&rat(5, 6)));
        assert_eq!(s.mode(), Mode::Exact);
    }

    #[test]
    fn adding_exact_zero_keeps_lower_sequence() {
        let a = ApproxReal::lower_monotone(one_minus_dyadic);
        let s = &a + &ApproxReal::exact(Rational::zero());
        assert_eq!(s.mode(), Mode::LowerMonotone);
        for k in 0..10 {
            assert_eq!(s.lo(k), ExtRational::Finite(one_minus_dyadic(k)));
            assert_eq!(s.hi(k), ExtRational::PosInf);
        }
    }

    #[test]
    fn interval_sum_narrows() {
        let s = &narrowing_half() + &narrowing_half();
        assert_eq!(s.refine(0), Enclosure::finite(int(0), int(2)));
        assert_eq!(s.refine(5), Enclosure::point(int(1)));
    }

    #[test]
    fn exact_product_and_quotient() {
        let p = &ApproxReal::exact(rat(3, 4)) * &ApproxReal::exact(rat(2, 3));
        assert_eq!(p.exact_value(), Some(&rat(1, 2)));
        let q = ApproxReal::exact(int(1))
            .div(&ApproxReal::exact(int(2)), DEFAULT_K_MAX)
            .unwrap();
        assert_eq!(q.exact_value(), Some(&rat(1, 2)));
    }

    #[test]
    fn lower_monotone_product() {
        let a = ApproxReal::lower_monotone(one_minus_dyadic);
        let p = &a * &a;
        assert_eq!(p.mode(), Mode::LowerMonotone);
        // hand expansion: k=0 -> 0, k=1 -> 1/4, k=2 -> 9/16
        let expected = [rat(0, 1), rat(1, 4), rat(9, 16)];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(p.lo(k as u32), ExtRational::Finite(e.clone()));
        }
    }

    #[test]
    fn division_requires_separation() {
        let zero = ApproxReal::exact(Rational::zero());
        assert_eq!(
            ApproxReal::exact(int(1)).div(&zero, 8).unwrap_err(),
            Error::DivisorNotSeparated { k_max: 8 }
        );
        // separated only from k = 3 on
        let late =
            ApproxReal::lower_monotone(|k| if k >= 3 { rat(1, 2) } else { Rational::zero() });
        assert!(ApproxReal::exact(int(1)).div(&late, 2).is_err());
        let q = ApproxReal::exact(int(1)).div(&late, 3).unwrap();
        assert_eq!(q.refine(0), Enclosure::finite(int(0), int(2)));
    }

    #[test]
    fn comparisons() {
        let tol = rat(1, 100);
        let half = ApproxReal::exact(rat(1, 2));
        assert_eq!(
            compare(&half, &ApproxReal::exact(rat(1, 3)), &tol, 64),
            Comparison::Greater
        );
        assert_eq!(
            compare(&ApproxReal::exact(rat(1, 3)), &half, &tol, 64),
            Comparison::Less
        );
        assert_eq!(compare(&half, &half, &tol, 64), Comparison::WithinTol);
        let lower = ApproxReal::lower_monotone(one_minus_dyadic);
        assert_eq!(
            compare(&lower, &ApproxReal::exact(rat(9, 10)), &tol, 4),
            Comparison::Greater
        );
        assert_eq!(
            compare(&lower, &ApproxReal::exact(rat(9, 10)), &tol, 3),
            Comparison::Unresolved
        );
    }

    #[test]
    fn decide_greater_detects_exact_ties() {
        let a = ApproxReal::exact(rat(1, 3));
        assert_eq!(decide_greater(&a, &a, 4), Some(false));
        let b = ApproxReal::interval(|_| Enclosure::finite(int(0), int(1)));
        assert_eq!(decide_greater(&a, &b, 4), None);
    }

    #[test]
    fn nesting_is_enforced() {
        // a refinement function that wanders; the produced real must still nest
        let r = ApproxReal::interval(|k| {
            if k % 2 == 0 {
                Enclosure::finite(int(0), int(2))
            } else {
                Enclosure::finite(rat(1, 2), int(3))
            }
        });
        assert_eq!(r.refine(1), Enclosure::finite(rat(1, 2), int(2)));
        assert_eq!(r.refine(2), Enclosure::finite(rat(1, 2), int(2)));
    }

    #[test]
    fn parse_and_render() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational(" 2 ").unwrap(), int(2));
        assert_eq!(parse_rational("6/8").unwrap(), rat(3, 4));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(fraction(&int(0)), "0/1");
        assert_eq!(fraction(&rat(-2, 4)), "-1/2");
    }

    #[derive(Debug, Clone)]
    enum Expr {
        Leaf(i64, i64),
        Add(Box<Expr>, Box<Expr>),
        Sub(Box<Expr>, Box<Expr>),
        Mul(Box<Expr>, Box<Expr>),
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = (-8i64..=8, 1i64..=8).prop_map(|(n, d)| Expr::Leaf(n, d));
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn eval_exact(e: &Expr) -> Rational {
        match e {
            Expr::Leaf(n, d) => rat(*n, *d),
            Expr::Add(a, b) => eval_exact(a) + eval_exact(b),
            Expr::Sub(a, b) => eval_exact(a) - eval_exact(b),
            Expr::Mul(a, b) => eval_exact(a) * eval_exact(b),
        }
    }

    // Leaves are widened to [x - 2^-k, x + 2^-k].
    fn eval_approx(e: &Expr) -> ApproxReal {
        match e {
            Expr::Leaf(n, d) => {
                let x = rat(*n, *d);
                ApproxReal::interval(move |k| Enclosure::finite(&x - dyadic(k), &x + dyadic(k)))
            }
            Expr::Add(a, b) => &eval_approx(a) + &eval_approx(b),
            Expr::Sub(a, b) => &eval_approx(a) - &eval_approx(b),
            Expr::Mul(a, b) => &eval_approx(a) * &eval_approx(b),
        }
    }

    proptest! {
        #[test]
        fn enclosures_are_sound_and_nested(e in arb_expr()) {
            let exact = eval_exact(&e);
            let approx = eval_approx(&e);
            let mut prev: Option<Enclosure> = None;
            for k in 0..12 {
                let enc = approx.refine(k);
                prop_assert!(enc.contains(&exact));
                if let Some(p) = &prev {
                    prop_assert!(p.contains_enclosure(&enc));
                }
                prev = Some(enc);
            }
        }

        #[test]
        fn width_shrinks_geometrically(e in arb_expr()) {
            // width(k) <= c * 2^-k for a constant c fixed by the expression,
            // so width(k+4) <= width(k) / 16 * (1 + slack) eventually
            let approx = eval_approx(&e);
            let w10 = approx.refine(10).width().unwrap();
            let w20 = approx.refine(20).width().unwrap();
            prop_assert!(w20 * int(1 << 10) <= w10 * int(2));
        }
    }
}
