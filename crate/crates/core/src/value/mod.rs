//! The iterative value `V` and the recursive value `W`, optimal and for a
//! fixed policy, as exact rationals or anytime enclosures.
//!
//! Both are computed by expectimax to a horizon `m` over conditional
//! probabilities `nu(e | x, a) = nu(x a e) / nu(x)`. The iterative value
//! credits the accumulated reward `R(e_{t:m})` only along continuations that
//! survive to `m`; the recursive value credits `gamma_k r_k` as soon as it is
//! received. At the horizon, a node at time `tau = m + 1` with accumulated
//! reward `R` contributes
//!
//! | situation                          | `V`                     | `W`             |
//! |------------------------------------|-------------------------|-----------------|
//! | `Gamma_tau = 0`                    | `R`                     | `0`             |
//! | constant-percept tail, reward `r`  | `R + r Gamma_tau`       | `r Gamma_tau`   |
//! | environment has ended              | `0`                     | `0`             |
//! | measure                            | `[R, R + Gamma_tau]`    | `[0, Gamma_tau]`|
//! | otherwise                          | `[0, R + Gamma_tau]`    | `[0, Gamma_tau]`|
//!
//! Every value of the truncated sums at later horizons lies in these ranges,
//! so the resulting enclosures contain every limit point.

mod discount;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::approx::{ApproxReal, Enclosure, Rational};
use crate::env::{one_step, Action, EnvRef, Environment, History, PerceptId};
use crate::error::{Error, Result};
use crate::policy::Policy;

pub use discount::Discount;

/// Which value function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Def. of `V`: limit of full-horizon sums.
    Iterative,
    /// Def. of `W`: expected discounted reward over all finite timelines.
    Recursive,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "iterative" | "V" => Ok(Variant::Iterative),
            "recursive" | "W" => Ok(Variant::Recursive),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Iterative => "iterative",
            Variant::Recursive => "recursive",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Default tolerance for choosing a horizon cap under infinite discounts.
pub fn default_cap_eps() -> Rational {
    Rational::new(1.into(), 16.into())
}

/// Horizon cap used when none is given: the lifetime for finite supports,
/// otherwise the effective horizon at [`default_cap_eps`].
pub fn default_horizon_cap(discount: &Discount, t: usize) -> usize {
    match discount.last_positive() {
        Some(l) => l.max(t),
        None => discount
            .effective_horizon(t, &default_cap_eps())
            .map_or(t, |k| k.max(t)),
    }
}

/// A value question: which function, in which environment, after which
/// history, for which policy (`None` = optimal).
#[derive(Clone)]
pub struct ValueQuery {
    pub env: EnvRef,
    pub discount: Discount,
    /// A trailing pending action fixes `a_t`, giving `V(h a)`.
    pub history: History,
    pub variant: Variant,
    pub policy: Option<Arc<dyn Policy>>,
    pub horizon_cap: usize,
    pub k_max: u32,
}

impl ValueQuery {
    pub fn new(env: EnvRef, discount: Discount, history: History, variant: Variant) -> Self {
        let horizon_cap = default_horizon_cap(&discount, history.time());
        ValueQuery {
            env,
            discount,
            history,
            variant,
            policy: None,
            horizon_cap,
            k_max: crate::approx::DEFAULT_K_MAX,
        }
    }

    pub fn with_policy(mut self, policy: Arc<dyn Policy>) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn with_horizon_cap(mut self, cap: usize) -> Self {
        self.horizon_cap = cap.max(self.time());
        self
    }

    /// Caps the horizon at the effective horizon for `eps`.
    pub fn with_eps(self, eps: &Rational) -> Result<Self> {
        let t = self.time();
        let cap = match self.discount.effective_horizon(t, eps) {
            Ok(k) => k,
            Err(_) => t,
        };
        Ok(self.with_horizon_cap(cap))
    }

    pub fn with_k_max(mut self, k_max: u32) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn time(&self) -> usize {
        self.history.time()
    }
}

/// Value at one horizon, with the pieces of its normalization:
/// `value = numerator / (denominator * gamma_t)`, where `numerator` is the
/// unconditioned sum (weighted by `nu(e_{1:m} || a_{1:m})`) and
/// `denominator = nu(e_{<t} || a_{<t})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueReport {
    pub horizon: usize,
    pub numerator: Enclosure,
    pub denominator: Rational,
    pub gamma_t: Rational,
    pub value: Enclosure,
}

impl ValueReport {
    /// Numerator divided by denominator: the conditional, un-normalized sum.
    pub fn conditional(&self) -> Enclosure {
        self.numerator.scale(&(Rational::one() / &self.denominator))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bounds {
    lo: Rational,
    hi: Rational,
}

impl Bounds {
    fn point(q: Rational) -> Self {
        Bounds {
            lo: q.clone(),
            hi: q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct MemoKey {
    actions: Vec<Action>,
    percepts: Vec<PerceptId>,
    forced: Option<Action>,
    horizon: usize,
    variant: Variant,
    raw: bool,
    // accumulated reward; only the iterative value depends on it
    acc: Option<Rational>,
}

/// Cache of optimal node values for one environment and discount, shared by
/// all queries made through it. Entries are idempotent, so concurrent
/// insertion is harmless.
#[derive(Default)]
pub struct Memo {
    table: Mutex<HashMap<MemoKey, Bounds>>,
}

impl Memo {
    pub fn new() -> Self {
        Memo::default()
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.table.lock().unwrap_or_else(|e| e.into_inner()).clear();
    }

    fn get(&self, key: &MemoKey) -> Option<Bounds> {
        self.table
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    fn put(&self, key: MemoKey, b: Bounds) {
        self.table
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, b);
    }
}

struct Search<'a> {
    env: &'a dyn Environment,
    discount: &'a Discount,
    variant: Variant,
    horizon: usize,
    raw: bool,
    policy: Option<&'a dyn Policy>,
    memo: Option<&'a Memo>,
}

impl Search<'_> {
    fn reward(&self, e: PerceptId) -> &Rational {
        self.env.alphabet().reward(e)
    }

    fn iterative(&self) -> bool {
        self.variant == Variant::Iterative
    }

    /// Closed form for a node at time `k` whose future percepts are fixed.
    fn certified(
        &self,
        k: usize,
        acc: &Rational,
        actions: &[Action],
        percepts: &[PerceptId],
    ) -> Option<Bounds> {
        if self.raw {
            return None;
        }
        let tail = self.env.tail(actions, percepts)?;
        let future = self.reward(tail.percept) * self.discount.Gamma(k);
        Some(Bounds::point(if self.iterative() {
            future + acc
        } else {
            future
        }))
    }

    fn leaf(
        &self,
        k: usize,
        acc: &Rational,
        actions: &[Action],
        percepts: &[PerceptId],
        mass: &Rational,
    ) -> Result<Bounds> {
        let zero_or_acc = if self.iterative() {
            acc.clone()
        } else {
            Rational::zero()
        };
        if self.raw {
            return Ok(Bounds::point(zero_or_acc));
        }
        let gamma = self.discount.Gamma(k);
        if gamma.is_zero() {
            return Ok(Bounds::point(zero_or_acc));
        }
        if let Some(b) = self.certified(k, acc, actions, percepts) {
            return Ok(b);
        }
        // a measure never ends
        let mut ended = !self.env.is_measure();
        if ended {
            for a in self.env.alphabet().actions() {
                if !one_step(self.env, actions, percepts, mass, a)?.is_empty() {
                    ended = false;
                    break;
                }
            }
        }
        if ended {
            return Ok(Bounds::point(Rational::zero()));
        }
        Ok(match self.variant {
            Variant::Iterative if self.env.is_measure() => Bounds {
                lo: acc.clone(),
                hi: acc + gamma,
            },
            Variant::Iterative => Bounds {
                lo: Rational::zero(),
                hi: acc + gamma,
            },
            Variant::Recursive => Bounds {
                lo: Rational::zero(),
                hi: gamma,
            },
        })
    }

    /// Conditional value of the node after `percepts` at time `k`.
    fn node(
        &self,
        k: usize,
        acc: &Rational,
        actions: &mut Vec<Action>,
        percepts: &mut Vec<PerceptId>,
        mass: &Rational,
        forced: Option<Action>,
    ) -> Result<Bounds> {
        if k > self.horizon {
            return self.leaf(k, acc, actions, percepts, mass);
        }
        if let Some(b) = self.certified(k, acc, actions, percepts) {
            return Ok(b);
        }
        let key = match (self.memo, self.policy) {
            (Some(memo), None) => {
                let key = MemoKey {
                    actions: actions.clone(),
                    percepts: percepts.clone(),
                    forced,
                    horizon: self.horizon,
                    variant: self.variant,
                    raw: self.raw,
                    acc: self.iterative().then(|| acc.clone()),
                };
                if let Some(b) = memo.get(&key) {
                    return Ok(b);
                }
                Some((memo, key))
            }
            _ => None,
        };
        let candidates: Vec<Action> = match (forced, self.policy) {
            (Some(a), _) => vec![a],
            (None, Some(p)) => {
                let h = History::from_steps(
                    actions
                        .iter()
                        .copied()
                        .zip(percepts.iter().copied())
                        .collect(),
                );
                vec![p.act(&h)?]
            }
            (None, None) => self.env.alphabet().actions().collect(),
        };
        let gamma_k = self.discount.gamma(k);
        let mut best: Option<Bounds> = None;
        for a in candidates {
            let mut sum = Bounds::point(Rational::zero());
            for (e, p) in one_step(self.env, actions, percepts, mass, a)? {
                let step = &gamma_k * self.reward(e);
                let child_acc = if self.iterative() {
                    acc + &step
                } else {
                    Rational::zero()
                };
                actions.push(a);
                percepts.push(e);
                let child = self.node(k + 1, &child_acc, actions, percepts, &(mass * &p), None);
                actions.pop();
                percepts.pop();
                let child = child?;
                let (lo, hi) = if self.iterative() {
                    (child.lo, child.hi)
                } else {
                    (child.lo + &step, child.hi + &step)
                };
                sum.lo += &p * lo;
                sum.hi += &p * hi;
            }
            best = Some(match best {
                None => sum,
                Some(b) => Bounds {
                    lo: b.lo.max(sum.lo),
                    hi: b.hi.max(sum.hi),
                },
            });
        }
        let result = best.expect("at least one candidate action");
        if let Some((memo, key)) = key {
            memo.put(key, result.clone());
        }
        Ok(result)
    }
}

fn prefix_mass(env: &dyn Environment, h: &History) -> Result<Rational> {
    let mass = env.mass(&h.actions(), &h.percepts())?;
    if mass.is_zero() {
        return Err(Error::ConditioningOnNull {
            prefix: h.without_pending().to_string(),
        });
    }
    Ok(mass)
}

fn evaluate(q: &ValueQuery, horizon: usize, raw: bool, memo: Option<&Memo>) -> Result<ValueReport> {
    let env = q.env.as_ref();
    if !env.has_exact() {
        return Err(Error::ExactUnavailable {
            env: env.name().to_string(),
        });
    }
    let t = q.time();
    let denominator = prefix_mass(env, &q.history)?;
    let gamma_t = q.discount.Gamma(t);
    if gamma_t.is_zero() {
        let zero = Enclosure::point(Rational::zero());
        return Ok(ValueReport {
            horizon,
            numerator: zero.clone(),
            denominator,
            gamma_t,
            value: zero,
        });
    }
    let search = Search {
        env,
        discount: &q.discount,
        variant: q.variant,
        horizon,
        raw,
        policy: q.policy.as_deref(),
        memo,
    };
    let mut actions = q.history.actions();
    let mut percepts = q.history.percepts();
    let b = search.node(
        t,
        &Rational::zero(),
        &mut actions,
        &mut percepts,
        &denominator,
        q.history.pending(),
    )?;
    let numerator = Enclosure::finite(&b.lo * &denominator, &b.hi * &denominator);
    let value = Enclosure::finite(b.lo / &gamma_t, b.hi / &gamma_t);
    Ok(ValueReport {
        horizon,
        numerator,
        denominator,
        gamma_t,
        value,
    })
}

/// The value enclosure from expectimax to `horizon` (at least the current
/// time), with its normalization pieces. Optimal unless the query has a
/// policy.
pub fn value_at(q: &ValueQuery, horizon: usize, memo: Option<&Memo>) -> Result<ValueReport> {
    evaluate(q, horizon.max(q.time()), false, memo)
}

/// The plain truncated sum at horizon `m`, normalized by `Gamma_t`: the
/// iterative value counts only continuations that survive to `m`, the
/// recursive one every received reward up to `m`. No tail bounds, so the
/// iterative sequence need not be monotone in `m`.
pub fn truncated_sum(q: &ValueQuery, m: usize) -> Result<Rational> {
    let r = evaluate(q, m.max(q.time().saturating_sub(1)), true, None)?;
    Ok(r.value.exact_value().expect("raw sums are exact").clone())
}

/// The query's value as an anytime real: refinement `k` evaluates the
/// horizon `min(t + k, horizon_cap)`. Exact whenever the enclosure at some
/// horizon is a point, in particular for finite lifetimes within the cap.
pub fn value(q: &ValueQuery, memo: Option<Arc<Memo>>) -> Result<ApproxReal> {
    let t = q.time();
    let first = value_at(q, t, memo.as_deref())?;
    if first.gamma_t.is_zero() {
        return Ok(ApproxReal::exact(Rational::zero()));
    }
    if let Some(v) = first.value.exact_value() {
        return Ok(ApproxReal::exact(v.clone()));
    }
    if let Some(l) = q.discount.last_positive() {
        if l <= q.horizon_cap {
            let r = value_at(q, l, memo.as_deref())?;
            if let Some(v) = r.value.exact_value() {
                return Ok(ApproxReal::exact(v.clone()));
            }
        }
    }
    let query = q.clone();
    let memo = memo.unwrap_or_default();
    let refine = move |k: u32| {
        let horizon = (t + k as usize).min(query.horizon_cap);
        match value_at(&query, horizon, Some(&memo)) {
            Ok(r) => r.value,
            Err(_) => Enclosure::finite(Rational::zero(), Rational::one()),
        }
    };
    Ok(match q.variant {
        Variant::Recursive => ApproxReal::lower_monotone_bounded(refine),
        Variant::Iterative => ApproxReal::interval(refine),
    })
}

/// `V*(h)` (or `V*(h a)` with a pending action).
pub fn iterative_v_opt(q: &ValueQuery) -> Result<ApproxReal> {
    let mut q = q.clone().with_variant(Variant::Iterative);
    q.policy = None;
    value(&q, None)
}

/// `W*(h)` (or `W*(h a)` with a pending action).
pub fn recursive_w_opt(q: &ValueQuery) -> Result<ApproxReal> {
    let mut q = q.clone().with_variant(Variant::Recursive);
    q.policy = None;
    value(&q, None)
}

/// `V^pi(h)` or `W^pi(h)` for the query's policy.
pub fn policy_value(q: &ValueQuery) -> Result<ApproxReal> {
    if q.policy.is_none() {
        return Err(Error::InvalidArgument("policy_value needs a policy".into()));
    }
    value(q, None)
}

#[cfg(test)]
mod tests;
