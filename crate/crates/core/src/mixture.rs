//! Finite Bayesian mixtures over environment classes.

use std::path::Path;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::approx::{fraction, parse_rational, Rational};
use crate::env::spec::EnvSpec;
use crate::env::{
    history_mass, Action, Alphabet, ConstantTail, EnvRef, Environment, History, PerceptId,
};
use crate::error::{Error, Result};
use crate::policy::Policy;

/// Environments with positive prior weights summing to at most one.
#[derive(Clone)]
pub struct WeightedClass {
    members: Vec<(EnvRef, Rational)>,
}

impl WeightedClass {
    pub fn new(members: Vec<(EnvRef, Rational)>) -> Result<Self> {
        let Some((first, _)) = members.first() else {
            return Err(Error::InvalidArgument("empty class".into()));
        };
        let alphabet = first.alphabet();
        let mut total = Rational::zero();
        for (env, w) in &members {
            if *w <= Rational::zero() {
                return Err(Error::InvalidArgument(format!(
                    "weight of {} must be positive",
                    env.name()
                )));
            }
            if env.alphabet() != alphabet {
                return Err(Error::AlphabetMismatch(format!(
                    "{} vs {}",
                    env.name(),
                    first.name()
                )));
            }
            total += w;
        }
        if total > Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {} > 1",
                fraction(&total)
            )));
        }
        Ok(WeightedClass { members })
    }

    pub fn members(&self) -> &[(EnvRef, Rational)] {
        &self.members
    }

    pub fn total_weight(&self) -> Rational {
        self.members.iter().map(|(_, w)| w).sum()
    }

    fn find(&self, name: &str) -> Result<usize> {
        let mut hits = self
            .members
            .iter()
            .enumerate()
            .filter(|(_, (e, _))| e.name() == name)
            .map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (Some(i), None) => Ok(i),
            (None, _) => Err(Error::InvalidArgument(format!("no member named `{name}`"))),
            (Some(_), Some(_)) => Err(Error::InvalidArgument(format!(
                "member name `{name}` is ambiguous"
            ))),
        }
    }
}

/// `nu_mix(e || a) = sum_i w_i nu_i(e || a)`.
pub struct MixtureEnv {
    class: WeightedClass,
    name: String,
    measure: bool,
}

impl MixtureEnv {
    pub fn new(class: WeightedClass) -> Self {
        let names: Vec<&str> = class.members.iter().map(|(e, _)| e.name()).collect();
        let name = format!("mix[{}]", names.join(","));
        let measure =
            class.total_weight().is_one() && class.members.iter().all(|(e, _)| e.is_measure());
        MixtureEnv {
            class,
            name,
            measure,
        }
    }

    pub fn class(&self) -> &WeightedClass {
        &self.class
    }
}

impl Environment for MixtureEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        self.class.members[0].0.alphabet()
    }

    fn is_measure(&self) -> bool {
        self.measure
    }

    fn has_exact(&self) -> bool {
        self.class.members.iter().all(|(e, _)| e.has_exact())
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (env, w) in &self.class.members {
            sum += w * env.mass(actions, percepts)?;
        }
        Ok(sum)
    }

    fn mass_lower(
        &self,
        actions: &[Action],
        percepts: &[PerceptId],
        budget: u32,
    ) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (env, w) in &self.class.members {
            sum += w * env.mass_lower(actions, percepts, budget)?;
        }
        Ok(sum)
    }

    /// Shared by every member that still has mass on the prefix.
    fn tail(&self, actions: &[Action], percepts: &[PerceptId]) -> Option<ConstantTail> {
        let mut shared = None;
        for (env, _) in &self.class.members {
            if env.mass(actions, percepts).ok()?.is_zero() {
                continue;
            }
            let t = env.tail(actions, percepts)?;
            if shared.is_some_and(|s| s != t) {
                return None;
            }
            shared = Some(t);
        }
        shared
    }
}

/// `w_i nu_i(h) / nu_mix(h)` for every member, in class order.
pub fn posterior(class: &WeightedClass, h: &History) -> Result<Vec<(String, Rational)>> {
    let joint: Vec<Rational> = class
        .members
        .iter()
        .map(|(e, w)| Ok(w * history_mass(e.as_ref(), h)?))
        .collect::<Result<_>>()?;
    let total: Rational = joint.iter().sum();
    if total.is_zero() {
        return Err(Error::ConditioningOnNull {
            prefix: h.without_pending().to_string(),
        });
    }
    Ok(class
        .members
        .iter()
        .zip(joint)
        .map(|((e, _), j)| (e.name().to_string(), j / &total))
        .collect())
}

/// Lower bound `w_i nu_i(h) / nu_mix(h) * v_member` on the mixture value of a
/// policy whose value in member `i` is `v_member`.
pub fn dominance_bound(
    class: &WeightedClass,
    member: &str,
    h: &History,
    v_member: &Rational,
) -> Result<Rational> {
    let i = class.find(member)?;
    Ok(posterior(class, h)?.swap_remove(i).1 * v_member)
}

/// A class spec file: one `member=PATH;WEIGHT` line per member, paths
/// relative to the class file.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub members: Vec<(EnvSpec, Rational)>,
}

impl ClassSpec {
    pub fn parse(text: &str, base: &Path) -> Result<ClassSpec> {
        let mut members = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| Error::spec(i + 1, m);
            let Some(("member", v)) = line.split_once('=').map(|(k, v)| (k.trim(), v.trim()))
            else {
                return Err(bad(format!("expected member=PATH;WEIGHT, got `{line}`")));
            };
            let (path, weight) = v
                .split_once(';')
                .ok_or_else(|| bad("member needs PATH;WEIGHT".into()))?;
            let weight = parse_rational(weight).map_err(|e| bad(e.to_string()))?;
            if weight <= Rational::zero() {
                return Err(bad("weights must be positive".into()));
            }
            let spec = EnvSpec::load(&base.join(path.trim()))
                .map_err(|e| bad(format!("{}: {e}", path.trim())))?;
            members.push((spec, weight));
        }
        let total: Rational = members.iter().map(|(_, w)| w).sum();
        if members.is_empty() || total > Rational::one() {
            return Err(Error::spec(
                0,
                format!(
                    "need a nonempty class with weights summing to <= 1, got {}",
                    fraction(&total)
                ),
            ));
        }
        Ok(ClassSpec { members })
    }

    pub fn load(path: &Path) -> Result<ClassSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ClassSpec::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn build(&self, agent: Option<Arc<dyn Policy>>) -> Result<WeightedClass> {
        let members = self
            .members
            .iter()
            .map(|(s, w)| Ok((s.build(agent.clone())?, w.clone())))
            .collect::<Result<Vec<_>>>()?;
        WeightedClass::new(members)
    }
}

/// Reference classes: `rho_0..rho_3` with weights `2^-(i+1)` (odd indices
/// with `S` failing at `t = i + 3`), the coin and bandits on the binary
/// alphabet, and the two adversaries.
pub fn standard_classes() -> Vec<WeightedClass> {
    use crate::env::{
        adversary_of_alternating, adversary_of_constant, bandit, leaky_bandit, RhoEnv, SRelation,
        TableEnv,
    };
    let rho = (0..4u64)
        .map(|i| {
            let relation = if i % 2 == 0 {
                SRelation::Always
            } else {
                SRelation::FailsAt { t: i + 3 }
            };
            let env: EnvRef = Arc::new(RhoEnv::new(i, relation, 16).expect("valid"));
            (env, crate::approx::dyadic(i as u32 + 1))
        })
        .collect();
    let quarter = Rational::new(1.into(), 4.into());
    let half = Rational::new(1.into(), 2.into());
    let tables: Vec<(EnvRef, Rational)> = vec![
        (Arc::new(TableEnv::uniform_coin()), half.clone()),
        (Arc::new(bandit()), quarter.clone()),
        (Arc::new(leaky_bandit()), quarter),
    ];
    let adversaries: Vec<(EnvRef, Rational)> = vec![
        (Arc::new(adversary_of_constant()), half.clone()),
        (Arc::new(adversary_of_alternating()), half),
    ];
    [rho, tables, adversaries]
        .into_iter()
        .map(|m| WeightedClass::new(m).expect("valid"))
        .collect()
}
