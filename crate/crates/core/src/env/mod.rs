//! Chronological conditional semimeasure environments.
//!
//! An environment assigns to every percept sequence `e_{1:t}`, given the
//! actions `a_{1:t}`, a mass `nu(e_{1:t} || a_{1:t})`. Masses may shrink
//! strictly from a prefix to the sum over its one-step extensions; the
//! missing mass is the probability that the environment ends there. Endings
//! are never encoded as a special percept.

mod corpus;
mod history;
mod normalize;
pub mod spec;
mod table;
mod validity;

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::approx::{ApproxReal, Enclosure, Rational};
use crate::error::{Error, Result};

pub use corpus::{
    adversary_of_alternating, adversary_of_constant, bandit, binary_alphabet, leaky_bandit,
    standard_corpus, AdversarialEnv, Prop1Env, RhoEnv, SRelation,
};
pub(crate) use history::render_prefix;
pub use history::{Action, Alphabet, History, Percept, PerceptId};
pub use normalize::{normalize, normalize_with, NormalizedEnv, SingularRule};
pub use table::{TableEnv, TableTail};
pub use validity::{check_lower_bounds, check_validity, ValidityReport, Violation, ViolationKind};

/// Shared handle to an environment.
pub type EnvRef = Arc<dyn Environment>;

/// Budget from which the default lower approximation equals the exact mass.
pub const LOWER_EXACT_FROM: u32 = 32;

/// From some node on, every action yields the same percept with probability
/// one, forever. Lets value computations close an infinite tail exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantTail {
    pub percept: PerceptId,
}

/// A chronological conditional semimeasure.
pub trait Environment: Send + Sync {
    fn name(&self) -> &str;

    fn alphabet(&self) -> &Alphabet;

    /// Declared: masses of one-step extensions sum to the parent mass and the
    /// empty history has mass one.
    fn is_measure(&self) -> bool;

    fn has_exact(&self) -> bool {
        true
    }

    /// `nu(e_{1:t} || a_{1:t'})` for `t = percepts.len() <= actions.len() = t'`.
    /// Actions past index `t` must not influence the result.
    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational>;

    /// Lower approximation at budget `k`: nondecreasing in `k`, never above
    /// the exact mass, and equal to it from some finite budget on.
    fn mass_lower(
        &self,
        actions: &[Action],
        percepts: &[PerceptId],
        budget: u32,
    ) -> Result<Rational> {
        let exact = self.mass(actions, percepts)?;
        Ok(dyadic_floor(&exact, budget))
    }

    /// Constant-percept certificate for the node after `percepts`, if known.
    fn tail(&self, _actions: &[Action], _percepts: &[PerceptId]) -> Option<ConstantTail> {
        None
    }
}

/// `floor(x * 2^k) / 2^k` below [`LOWER_EXACT_FROM`], `x` from there on.
pub(crate) fn dyadic_floor(x: &Rational, k: u32) -> Rational {
    if k >= LOWER_EXACT_FROM {
        return x.clone();
    }
    let scale = Rational::from_integer(num_bigint::BigInt::one() << k as usize);
    (x * &scale).floor() / scale
}

/// `nu(e_{<t} || a_{<t})` for the complete steps of `h`.
pub fn history_mass(env: &dyn Environment, h: &History) -> Result<Rational> {
    env.mass(&h.actions(), &h.percepts())
}

/// `nu(e_next | e_{<t} || a_{<t} a_next)`: the mass of the continuation
/// divided by the mass of the history prefix.
pub fn conditional(
    env: &dyn Environment,
    h: &History,
    e_next: &[PerceptId],
    a_next: &[Action],
) -> Result<Rational> {
    if !env.has_exact() {
        return Err(Error::ExactUnavailable {
            env: env.name().to_string(),
        });
    }
    if a_next.len() < e_next.len() {
        return Err(Error::InvalidArgument(
            "continuation needs an action per percept".into(),
        ));
    }
    let (mut actions, mut percepts) = (h.actions(), h.percepts());
    let prefix = env.mass(&actions, &percepts)?;
    if prefix.is_zero() {
        return Err(Error::ConditioningOnNull {
            prefix: h.to_string(),
        });
    }
    if e_next.is_empty() {
        return Ok(Rational::one());
    }
    actions.extend_from_slice(a_next);
    percepts.extend_from_slice(e_next);
    Ok(env.mass(&actions, &percepts)? / prefix)
}

/// One-step conditional distribution after `percepts` when playing `action`:
/// `(e, nu(prefix e || actions action) / parent)` for every percept of
/// positive mass. The returned weights sum to at most one.
pub fn one_step(
    env: &dyn Environment,
    actions: &[Action],
    percepts: &[PerceptId],
    parent: &Rational,
    action: Action,
) -> Result<Vec<(PerceptId, Rational)>> {
    debug_assert!(!parent.is_zero());
    let mut acts = actions[..percepts.len()].to_vec();
    acts.push(action);
    let mut ps = percepts.to_vec();
    ps.push(PerceptId(0));
    let mut out = Vec::new();
    for e in env.alphabet().percept_ids() {
        *ps.last_mut().expect("nonempty") = e;
        let m = env.mass(&acts, &ps)?;
        if !m.is_zero() {
            out.push((e, m / parent));
        }
    }
    Ok(out)
}

/// The mass of a prefix as a lower-monotone anytime real, with the exact
/// mass as a known upper bound when available.
pub fn mass_approx(
    env: EnvRef,
    actions: Vec<Action>,
    percepts: Vec<PerceptId>,
) -> Result<ApproxReal> {
    let upper = if env.has_exact() {
        Some(env.mass(&actions, &percepts)?)
    } else {
        None
    };
    // surface evaluation errors eagerly; refinement itself cannot fail
    env.mass_lower(&actions, &percepts, 0)?;
    Ok(ApproxReal::lower_monotone_bounded(move |k| {
        let lo = env
            .mass_lower(&actions, &percepts, k)
            .unwrap_or_else(|_| Rational::zero());
        match &upper {
            Some(hi) => Enclosure::finite(lo, hi.clone()),
            None => Enclosure::lower_only(lo),
        }
    }))
}
