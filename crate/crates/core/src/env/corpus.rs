//! Counterexample environments: the ending-after-alpha environment, the
//! adversary of a fixed computable policy, and the `rho_i` family whose
//! beta-branch rewards depend on an existential search.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::approx::{dyadic, int, rat, Rational};
use crate::env::{
    Action, Alphabet, ConstantTail, EnvRef, Environment, History, Percept, PerceptId, TableEnv,
    TableTail,
};
use crate::error::{Error, Result};
use crate::policy::Policy;

const ALPHA: Action = Action(0);
const BETA: Action = Action(1);

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Two actions, rewards `{0, eps, 1}`, a single observation.
///
/// Playing alpha first yields reward 1 and then the environment ends (every
/// longer continuation has mass zero). Playing beta first yields reward `eps`
/// followed by reward 0 forever.
#[derive(Debug, Clone)]
pub struct Prop1Env {
    eps: Rational,
    alphabet: Alphabet,
    name: String,
}

impl Prop1Env {
    pub fn new(eps: Rational) -> Result<Self> {
        if eps <= Rational::zero() || eps >= Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "eps_r must lie in (0, 1), got {eps}"
            )));
        }
        let alphabet = Alphabet::new(
            2,
            vec![
                Percept::new(0, int(0)),
                Percept::new(0, eps.clone()),
                Percept::new(0, int(1)),
            ],
        )?;
        let name = format!("prop1(eps_r={})", crate::approx::fraction(&eps));
        Ok(Prop1Env {
            eps,
            alphabet,
            name,
        })
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn percept_zero(&self) -> PerceptId {
        PerceptId(0)
    }

    pub fn percept_eps(&self) -> PerceptId {
        PerceptId(1)
    }

    pub fn percept_one(&self) -> PerceptId {
        PerceptId(2)
    }
}

impl Environment for Prop1Env {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn is_measure(&self) -> bool {
        false
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        let Some((&first, rest)) = percepts.split_first() else {
            return Ok(Rational::one());
        };
        let value = match actions[0] {
            ALPHA => first == self.percept_one() && rest.is_empty(),
            _ => first == self.percept_eps() && rest.iter().all(|&e| e == self.percept_zero()),
        };
        Ok(indicator(value))
    }

    fn tail(&self, actions: &[Action], percepts: &[PerceptId]) -> Option<ConstantTail> {
        let on_beta_branch = !percepts.is_empty()
            && actions[0] == BETA
            && percepts[0] == self.percept_eps()
            && percepts[1..].iter().all(|&e| e == self.percept_zero());
        on_beta_branch.then_some(ConstantTail {
            percept: self.percept_zero(),
        })
    }
}

/// Deterministic adversary of a computable policy: reward 0 while the agent
/// plays what `target` would play, reward 1 from the first deviation on.
/// Observations are ignored (a single observation `0`).
pub struct AdversarialEnv {
    target: Arc<dyn Policy>,
    alphabet: Alphabet,
    name: String,
    decisions: Mutex<HashMap<History, Action>>,
}

impl fmt::Debug for AdversarialEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversarialEnv")
            .field("name", &self.name)
            .finish()
    }
}

impl AdversarialEnv {
    pub fn new(target: Arc<dyn Policy>, num_actions: u8, target_name: &str) -> Result<Self> {
        let alphabet = Alphabet::new(
            num_actions,
            vec![Percept::new(0, int(0)), Percept::new(0, int(1))],
        )?;
        Ok(AdversarialEnv {
            target,
            alphabet,
            name: format!("adversarial({target_name})"),
            decisions: Mutex::new(HashMap::new()),
        })
    }

    pub fn reward_zero(&self) -> PerceptId {
        PerceptId(0)
    }

    pub fn reward_one(&self) -> PerceptId {
        PerceptId(1)
    }

    fn target_action(&self, h: &History) -> Result<Action> {
        if let Some(a) = self
            .decisions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(h)
        {
            return Ok(*a);
        }
        // not holding the lock: the target may itself evaluate environments
        let a = self.target.act(h)?;
        self.decisions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(h.clone(), a);
        Ok(a)
    }

    /// `None` if some reward contradicts the adversary, otherwise the 0-based
    /// step of the first deviation (if any).
    fn scan(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Option<Option<usize>>> {
        let mut h = History::new();
        let mut deviation = None;
        for (k, (&a, &e)) in actions.iter().zip(percepts).enumerate() {
            if deviation.is_none() && a != self.target_action(&h)? {
                deviation = Some(k);
            }
            let expected = if deviation.is_some() {
                self.reward_one()
            } else {
                self.reward_zero()
            };
            if e != expected {
                return Ok(None);
            }
            h.push(a, e);
        }
        Ok(Some(deviation))
    }
}

impl Environment for AdversarialEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn is_measure(&self) -> bool {
        true
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        Ok(indicator(self.scan(actions, percepts)?.is_some()))
    }

    fn tail(&self, actions: &[Action], percepts: &[PerceptId]) -> Option<ConstantTail> {
        match self.scan(actions, percepts) {
            Ok(Some(Some(_))) => Some(ConstantTail {
                percept: self.reward_one(),
            }),
            _ => None,
        }
    }
}

type RelationFn = dyn Fn(u64, u64, u64, u64) -> bool + Send + Sync;

/// Decidable stand-in for the relation `S(n, i, t, k)` whose existential
/// closure `exists k. S(n, i, t, k)` gates the beta-branch rewards.
#[derive(Clone)]
pub enum SRelation {
    /// `S` holds for every argument; witness `k = 0`.
    Always,
    /// `exists k. S(n, i, t, k)` fails exactly at `t`, for every `n` and `i`.
    FailsAt { t: u64 },
    /// An arbitrary decidable predicate searched over `k <= search_bound`.
    Custom(Arc<RelationFn>),
}

impl fmt::Debug for SRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SRelation::Always => f.write_str("Always"),
            SRelation::FailsAt { t } => write!(f, "FailsAt({t})"),
            SRelation::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl SRelation {
    /// Decides `exists k <= bound. S(n, i, t, k)`. For `Custom`, an empty
    /// search cannot refute the existential and is reported as an error.
    pub fn exists(&self, n: u64, i: u64, t: u64, bound: u64) -> Result<bool> {
        match self {
            SRelation::Always => Ok(true),
            SRelation::FailsAt { t: t0 } => Ok(t != *t0),
            SRelation::Custom(s) => {
                if (0..=bound).any(|k| s(n, i, t, k)) {
                    Ok(true)
                } else {
                    Err(Error::SearchBudgetExceeded { n, i, t, bound })
                }
            }
        }
    }

    /// Witness search truncated at `budget`: `true` once a witness `k <= budget`
    /// is found. Nondecreasing in `budget`.
    pub fn witnessed_within(&self, n: u64, i: u64, t: u64, budget: u64) -> bool {
        match self {
            SRelation::Always => true,
            SRelation::FailsAt { t: t0 } => t != *t0,
            SRelation::Custom(s) => (0..=budget).any(|k| s(n, i, t, k)),
        }
    }
}

/// Observations `{0, 1}`, rewards `{0, 1}`, actions alpha/beta.
///
/// Observations are `1` with probability 1/2 each step until the first `0`
/// at step `n + 1`; from then on observations are `0`. The action at step
/// `n + 2` picks a branch of mass `2^-(n+1)`: alpha gives reward 0 forever,
/// beta gives reward 1 from step `n + 2` on for as long as
/// `forall t' <= t. exists k. S(n, i, t', k)` holds, and mass zero after.
#[derive(Debug, Clone)]
pub struct RhoEnv {
    index: u64,
    relation: SRelation,
    search_bound: u64,
    alphabet: Alphabet,
    name: String,
}

enum RhoBudget {
    Exact,
    Lower(u64),
}

impl RhoEnv {
    pub fn new(index: u64, relation: SRelation, search_bound: u64) -> Result<Self> {
        let alphabet = Alphabet::new(
            2,
            vec![
                Percept::new(0, int(0)),
                Percept::new(0, int(1)),
                Percept::new(1, int(0)),
                Percept::new(1, int(1)),
            ],
        )?;
        let name = match &relation {
            SRelation::Always => format!("rho{index}"),
            SRelation::FailsAt { t } => format!("rho{index}[fails-at:{t}]"),
            SRelation::Custom(_) => format!("rho{index}[custom]"),
        };
        Ok(RhoEnv {
            index,
            relation,
            search_bound,
            alphabet,
            name,
        })
    }

    /// Percept id for observation `o` and reward `r` (both 0 or 1).
    pub fn percept(o: u8, r: u8) -> PerceptId {
        PerceptId(2 * o + r)
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn relation(&self) -> &SRelation {
        &self.relation
    }

    fn obs(e: PerceptId) -> u8 {
        e.0 / 2
    }

    fn reward(e: PerceptId) -> u8 {
        e.0 % 2
    }

    fn evaluate(
        &self,
        actions: &[Action],
        percepts: &[PerceptId],
        budget: RhoBudget,
    ) -> Result<Rational> {
        let t = percepts.len();
        let Some(n) = percepts.iter().position(|&e| Self::obs(e) == 0) else {
            let silent = percepts.iter().all(|&e| Self::reward(e) == 0);
            return Ok(if silent {
                dyadic(t as u32)
            } else {
                Rational::zero()
            });
        };
        if percepts[n + 1..].iter().any(|&e| Self::obs(e) != 0) {
            return Ok(Rational::zero());
        }
        let branch_mass = dyadic(n as u32 + 1);
        let all_silent = || percepts.iter().all(|&e| Self::reward(e) == 0);
        if t == n + 1 || actions[n + 1] == ALPHA {
            return Ok(if all_silent() {
                branch_mass
            } else {
                Rational::zero()
            });
        }
        // beta branch, times are 1-based: reward 1 exactly at t' > n + 1
        let rewards_ok = percepts
            .iter()
            .enumerate()
            .all(|(k, &e)| Self::reward(e) == u8::from(k + 1 > n + 1));
        if !rewards_ok {
            return Ok(Rational::zero());
        }
        for t_prime in 1..=t as u64 {
            let holds = match budget {
                RhoBudget::Exact => {
                    self.relation
                        .exists(n as u64, self.index, t_prime, self.search_bound)?
                }
                RhoBudget::Lower(k) => self
                    .relation
                    .witnessed_within(n as u64, self.index, t_prime, k),
            };
            if !holds {
                return Ok(Rational::zero());
            }
        }
        Ok(branch_mass)
    }
}

impl Environment for RhoEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn is_measure(&self) -> bool {
        matches!(self.relation, SRelation::Always)
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        self.evaluate(actions, percepts, RhoBudget::Exact)
    }

    fn mass_lower(
        &self,
        actions: &[Action],
        percepts: &[PerceptId],
        budget: u32,
    ) -> Result<Rational> {
        let k = u64::from(budget).min(self.search_bound);
        self.evaluate(actions, percepts, RhoBudget::Lower(k))
    }

    fn tail(&self, actions: &[Action], percepts: &[PerceptId]) -> Option<ConstantTail> {
        let n = percepts.iter().position(|&e| Self::obs(e) == 0)?;
        if percepts.len() < n + 2 || self.mass(actions, percepts).ok()?.is_zero() {
            return None;
        }
        match (actions[n + 1], &self.relation) {
            (ALPHA, _) => Some(ConstantTail {
                percept: Self::percept(0, 0),
            }),
            (_, SRelation::Always) => Some(ConstantTail {
                percept: Self::percept(0, 1),
            }),
            _ => None,
        }
    }
}

/// Two percepts `(0, 0)` and `(1, 1)`: reward equals observation.
pub fn binary_alphabet() -> Alphabet {
    Alphabet::new(2, vec![Percept::new(0, int(0)), Percept::new(1, int(1))]).expect("valid")
}

/// Two-armed bandit on [`binary_alphabet`]: arm 0 pays with probability
/// 1/4, arm 1 with 3/4, independently every step.
pub fn bandit() -> TableEnv {
    TableEnv::from_kernel(
        "bandit",
        binary_alphabet(),
        1,
        TableTail::RepeatLast,
        |_, _, a| match a.0 {
            0 => vec![rat(3, 4), rat(1, 4)],
            _ => vec![rat(1, 4), rat(3, 4)],
        },
    )
    .expect("valid")
}

/// Like [`bandit`], but every step loses mass: arm 0 has one-step
/// probabilities `(1/4, 1/2)`, arm 1 `(1/3, 1/3)`. Never ends completely.
pub fn leaky_bandit() -> TableEnv {
    TableEnv::from_kernel(
        "leaky",
        binary_alphabet(),
        1,
        TableTail::RepeatLast,
        |_, _, a| match a.0 {
            0 => vec![rat(1, 4), rat(1, 2)],
            _ => vec![rat(1, 3), rat(1, 3)],
        },
    )
    .expect("valid")
}

/// Adversary of the policy that always plays action 0.
pub fn adversary_of_constant() -> AdversarialEnv {
    let target: Arc<dyn Policy> = Arc::new(|_: &History| -> Result<Action> { Ok(ALPHA) });
    AdversarialEnv::new(target, 2, "constant:0").expect("valid")
}

/// Adversary of the policy alternating between actions 0 and 1.
pub fn adversary_of_alternating() -> AdversarialEnv {
    let target: Arc<dyn Policy> =
        Arc::new(|h: &History| -> Result<Action> { Ok(Action((h.len() % 2) as u8)) });
    AdversarialEnv::new(target, 2, "alternate").expect("valid")
}

/// The reference environments: the ending-after-alpha environment with
/// `eps_r = 1/4`, two adversaries, `rho_0` with `S` always true and with
/// `S` failing at time 3, the fair coin, a bandit and a leaky bandit.
pub fn standard_corpus() -> Vec<EnvRef> {
    vec![
        Arc::new(Prop1Env::new(rat(1, 4)).expect("valid")),
        Arc::new(adversary_of_constant()),
        Arc::new(adversary_of_alternating()),
        Arc::new(RhoEnv::new(0, SRelation::Always, 16).expect("valid")),
        Arc::new(RhoEnv::new(0, SRelation::FailsAt { t: 3 }, 16).expect("valid")),
        Arc::new(TableEnv::uniform_coin()),
        Arc::new(bandit()),
        Arc::new(leaky_bandit()),
    ]
}
