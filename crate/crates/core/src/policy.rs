//! Action selection: exact argmax with a total tie order, the eps-grid
//! rule, and time-varying tolerances.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::approx::{fraction, parse_rational, ApproxReal, Enclosure, ExtRational, Rational};
use crate::env::{Action, EnvRef, History};
use crate::error::{Error, Result};
use crate::value::{default_horizon_cap, value, Discount, Memo, ValueQuery, Variant};

/// A deterministic policy: a function from histories to actions.
pub trait Policy: Send + Sync {
    fn act(&self, h: &History) -> Result<Action>;
}

impl<F> Policy for F
where
    F: Fn(&History) -> Result<Action> + Send + Sync,
{
    fn act(&self, h: &History) -> Result<Action> {
        self(h)
    }
}

/// Total order on the actions, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieOrder(Vec<Action>);

impl TieOrder {
    pub fn new(order: Vec<Action>, num_actions: u8) -> Result<Self> {
        let mut seen = vec![false; num_actions as usize];
        for a in &order {
            match seen.get_mut(a.0 as usize) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "tie order {order:?} is not a permutation"
                    )))
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "tie order {order:?} misses actions"
            )));
        }
        Ok(TieOrder(order))
    }

    /// `0 > 1 > ... > n-1`.
    pub fn natural(num_actions: u8) -> Self {
        TieOrder((0..num_actions).map(Action).collect())
    }

    pub fn reversed(&self) -> Self {
        TieOrder(self.0.iter().rev().copied().collect())
    }

    /// Comma-separated action indices, e.g. `1,0`.
    pub fn parse(s: &str, num_actions: u8) -> Result<Self> {
        let order = s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<u8>()
                    .map(Action)
                    .map_err(|_| Error::InvalidArgument(format!("bad action `{x}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        TieOrder::new(order, num_actions)
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn first(&self) -> Action {
        self.0[0]
    }
}

impl fmt::Display for TieOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.0.iter().map(|a| a.0.to_string()).collect();
        f.write_str(&v.join(","))
    }
}

/// Tolerance as a function of time: positive and nonincreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpsSchedule {
    Constant(Rational),
    /// `1 / (t + 1)`.
    Harmonic,
    /// `2^-t`.
    Dyadic,
}

impl EpsSchedule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(EpsSchedule::Harmonic),
            "dyadic" => Ok(EpsSchedule::Dyadic),
            other => match other.strip_prefix("constant:") {
                Some(q) => Ok(EpsSchedule::Constant(parse_rational(q)?)),
                None => Err(Error::InvalidArgument(format!(
                    "unknown schedule `{other}`"
                ))),
            },
        }
    }

    pub fn eps_at(&self, t: usize) -> Rational {
        match self {
            EpsSchedule::Constant(e) => e.clone(),
            EpsSchedule::Harmonic => Rational::new(1.into(), (t as i64 + 1).into()),
            EpsSchedule::Dyadic => crate::approx::dyadic(t as u32),
        }
    }
}

impl fmt::Display for EpsSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsSchedule::Constant(e) => write!(f, "constant:{}", fraction(e)),
            EpsSchedule::Harmonic => f.write_str("harmonic"),
            EpsSchedule::Dyadic => f.write_str("dyadic"),
        }
    }
}

/// How an agent picks actions.
#[derive(Clone)]
pub enum PolicySpec {
    ExactOptimal {
        tie: TieOrder,
    },
    EpsOptimal {
        eps: Rational,
        tie: TieOrder,
    },
    Schedule {
        schedule: EpsSchedule,
        tie: TieOrder,
    },
    External(Arc<dyn Policy>),
}

impl fmt::Debug for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::ExactOptimal { tie } => write!(f, "exact[{tie}]"),
            PolicySpec::EpsOptimal { eps, tie } => write!(f, "eps:{}[{tie}]", fraction(eps)),
            PolicySpec::Schedule { schedule, tie } => write!(f, "schedule:{schedule}[{tie}]"),
            PolicySpec::External(_) => f.write_str("external"),
        }
    }
}

impl PolicySpec {
    /// `exact`, `eps:1/K` or `schedule:NAME`.
    pub fn parse(s: &str, tie: TieOrder) -> Result<Self> {
        if s == "exact" {
            return Ok(PolicySpec::ExactOptimal { tie });
        }
        if let Some(e) = s.strip_prefix("eps:") {
            let eps = parse_rational(e)?;
            check_eps(&eps)?;
            return Ok(PolicySpec::EpsOptimal { eps, tie });
        }
        if let Some(name) = s.strip_prefix("schedule:") {
            return Ok(PolicySpec::Schedule {
                schedule: EpsSchedule::parse(name)?,
                tie,
            });
        }
        Err(Error::InvalidArgument(format!("unknown agent `{s}`")))
    }
}

/// `eps` must be `1/k` for a natural `k >= 1`.
fn check_eps(eps: &Rational) -> Result<()> {
    if !eps.numer().is_one() || *eps <= Rational::zero() {
        return Err(Error::InvalidArgument(format!(
            "eps must be 1/k, got {}",
            fraction(eps)
        )));
    }
    Ok(())
}

/// Largest `1/k <= eps`.
fn unit_fraction_below(eps: &Rational) -> Rational {
    Rational::new(1.into(), eps.recip().ceil().to_integer())
}

/// Computes action values in one environment under one discount and value
/// variant, caching node values across calls.
#[derive(Clone)]
pub struct Planner {
    env: EnvRef,
    discount: Discount,
    variant: Variant,
    k_max: u32,
    horizon_cap: Option<usize>,
    memo: Arc<Memo>,
}

impl Planner {
    pub fn new(env: EnvRef, discount: Discount, variant: Variant) -> Self {
        Planner {
            env,
            discount,
            variant,
            k_max: crate::approx::DEFAULT_K_MAX,
            horizon_cap: None,
            memo: Arc::new(Memo::new()),
        }
    }

    pub fn with_k_max(mut self, k_max: u32) -> Self {
        self.k_max = k_max;
        self
    }

    /// Absolute horizon cap; by default derived from the discount at the
    /// current time.
    pub fn with_horizon_cap(mut self, cap: usize) -> Self {
        self.horizon_cap = Some(cap);
        self
    }

    pub fn env(&self) -> &EnvRef {
        &self.env
    }

    pub fn discount(&self) -> &Discount {
        &self.discount
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    fn cap(&self, t: usize, eps: Option<&Rational>) -> usize {
        let mut cap = self
            .horizon_cap
            .unwrap_or_else(|| default_horizon_cap(&self.discount, t));
        if let Some(eps) = eps {
            // width Gamma_{m+1} / Gamma_t < eps / 2 needs m + 1 >= m_eff
            if let Ok(m_eff) = self.discount.effective_horizon(t, eps) {
                cap = cap.max(m_eff.saturating_sub(1));
            }
        }
        cap.max(t)
    }

    fn query(&self, h: &History, cap: usize) -> ValueQuery {
        ValueQuery::new(
            self.env.clone(),
            self.discount.clone(),
            h.clone(),
            self.variant,
        )
        .with_horizon_cap(cap)
        .with_k_max(self.k_max)
    }

    /// `V*(h a)` or `W*(h a)` as an anytime real.
    pub fn action_value(&self, h: &History, a: Action) -> Result<ApproxReal> {
        let h = h.without_pending();
        self.action_value_capped(&h, a, self.cap(h.time(), None))
    }

    fn action_value_capped(&self, h: &History, a: Action, cap: usize) -> Result<ApproxReal> {
        value(
            &self.query(&h.with_pending(a), cap),
            Some(self.memo.clone()),
        )
    }

    /// Optimal value at `h` (maximum over actions).
    pub fn state_value(&self, h: &History) -> Result<ApproxReal> {
        let h = h.without_pending();
        value(
            &self.query(&h, self.cap(h.time(), None)),
            Some(self.memo.clone()),
        )
    }

    /// Budgets beyond which refinement cannot change: the horizon is capped.
    fn useful_budget(&self, t: usize, cap: usize) -> u32 {
        (cap.saturating_sub(t) as u32 + 1).min(self.k_max)
    }

    /// The first action in tie order whose value is maximal: it beats every
    /// more preferred action strictly and every less preferred one weakly.
    pub fn act_exact(&self, h: &History, tie: &TieOrder) -> Result<Action> {
        let h = h.without_pending();
        let t = h.time();
        if self.discount.Gamma(t).is_zero() {
            return Ok(tie.first());
        }
        let cap = self.cap(t, None);
        let budget = self.useful_budget(t, cap);
        let mut best = tie.first();
        let mut best_value = self.action_value_capped(&h, best, cap)?;
        for &a in &tie.actions()[1..] {
            let v = self.action_value_capped(&h, a, cap)?;
            if strictly_greater(&v, &best_value, budget).ok_or_else(|| Error::Unresolvable {
                k_max: self.k_max,
                detail: format!(
                    "cannot order the values of actions {} and {} after {h}",
                    best.0, a.0
                ),
            })? {
                best = a;
                best_value = v;
            }
        }
        Ok(best)
    }

    /// The eps-grid rule: for every action the least grid point `j / 2k`
    /// within `eps / 2` of every value its enclosure admits; then the
    /// preferred action among those with the largest grid point. Needs
    /// enclosures narrower than `eps / 2`.
    pub fn act_eps(&self, h: &History, eps: &Rational, tie: &TieOrder) -> Result<Action> {
        check_eps(eps)?;
        let h = h.without_pending();
        let t = h.time();
        if self.discount.Gamma(t).is_zero() {
            return Ok(tie.first());
        }
        let cap = self.cap(t, Some(eps));
        let budget = self.useful_budget(t, cap);
        let half = eps / Rational::from_integer(2.into());
        let mut best: Option<(Action, Rational)> = None;
        for &a in tie.actions() {
            let v = self.action_value_capped(&h, a, cap)?;
            let e = narrow(&v, &half, budget).ok_or_else(|| Error::BudgetExhausted {
                k_max: self.k_max,
                target: format!("{} for action {} after {h}", fraction(&half), a.0),
            })?;
            let q = least_grid_point(&e, &half);
            if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
                best = Some((a, q));
            }
        }
        Ok(best.expect("nonempty tie order").0)
    }

    pub fn act_schedule(
        &self,
        h: &History,
        schedule: &EpsSchedule,
        tie: &TieOrder,
    ) -> Result<Action> {
        let eps = schedule.eps_at(h.time());
        self.act_eps(h, &unit_fraction_below(&eps), tie)
    }

    /// The action `spec` picks at `h`.
    pub fn act(&self, h: &History, spec: &PolicySpec) -> Result<Action> {
        match spec {
            PolicySpec::ExactOptimal { tie } => self.act_exact(h, tie),
            PolicySpec::EpsOptimal { eps, tie } => self.act_eps(h, eps, tie),
            PolicySpec::Schedule { schedule, tie } => self.act_schedule(h, schedule, tie),
            PolicySpec::External(p) => p.act(&h.without_pending()),
        }
    }

    /// `spec` as a policy object.
    pub fn policy(&self, spec: PolicySpec) -> Arc<dyn Policy> {
        let planner = self.clone();
        Arc::new(move |h: &History| planner.act(h, &spec))
    }
}

/// `Some(a > b)` once the enclosures decide it, `Some(false)` for equal
/// exact values, `None` if undecided within `budget`.
fn strictly_greater(a: &ApproxReal, b: &ApproxReal, budget: u32) -> Option<bool> {
    if let (Some(x), Some(y)) = (a.exact_value(), b.exact_value()) {
        return Some(x > y);
    }
    for k in 0..=budget {
        let (ea, eb) = (a.refine(k), b.refine(k));
        if ea.lo > eb.hi {
            return Some(true);
        }
        if ea.hi <= eb.lo {
            return Some(false);
        }
    }
    None
}

fn narrow(v: &ApproxReal, target: &Rational, budget: u32) -> Option<Enclosure> {
    (0..=budget)
        .map(|k| v.refine(k))
        .find(|e| e.width().is_some_and(|w| w < *target))
}

/// Least `j * half` with `hi - half < j * half < lo + half`.
fn least_grid_point(e: &Enclosure, half: &Rational) -> Rational {
    let (ExtRational::Finite(lo), ExtRational::Finite(hi)) = (&e.lo, &e.hi) else {
        unreachable!("narrowed enclosures are finite")
    };
    let j = ((hi - half) / half).floor() + Rational::one();
    let q = j * half;
    debug_assert!(q < lo + half);
    q.max(Rational::zero())
}
