//! Interaction runs, traces, and the command back ends.

mod sampler;

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::approx::{fraction, ExtRational, Rational};
use crate::env::spec::EnvSpec;
use crate::env::{check_validity, one_step, Action, EnvRef, History, Prop1Env, ValidityReport};
use crate::error::{Error, Result};
use crate::mixture::{posterior, ClassSpec, MixtureEnv, WeightedClass};
use crate::policy::{Planner, PolicySpec, TieOrder};
use crate::value::{value_at, Discount, ValueQuery, ValueReport, Variant};

pub use sampler::{Draw, Sampler};

/// A fully resolved run: the true environment, the agent's model (the
/// environment itself, or a mixture over a class) and the agent.
#[derive(Clone)]
pub struct RunConfig {
    pub env: EnvRef,
    pub class: Option<WeightedClass>,
    pub agent: PolicySpec,
    pub variant: Variant,
    pub discount: Discount,
    pub steps: usize,
    pub seed: u64,
    pub k_max: u32,
    pub horizon_cap: Option<usize>,
}

/// Unresolved run parameters, as given on the command line.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub env: EnvSpec,
    pub class: Option<ClassSpec>,
    /// `exact`, `eps:1/K` or `schedule:NAME`.
    pub agent: String,
    /// Comma-separated action indices; natural order if absent.
    pub tie_order: Option<String>,
    pub variant: Variant,
    pub discount: Discount,
    pub steps: usize,
    pub seed: u64,
    pub k_max: u32,
    pub horizon_cap: Option<usize>,
}

impl RunSpec {
    /// Builds the model first, so an environment with `target=agent` can be
    /// aimed at the agent planning in that model. Such an environment needs
    /// a class: an agent planning in its own adversary is circular.
    pub fn resolve(&self) -> Result<RunConfig> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        let class = self.class.as_ref().map(|c| c.build(None)).transpose()?;
        let (env, agent) = match (&class, self.env.needs_agent()) {
            (None, true) => {
                return Err(Error::InvalidArgument(
                    "target=agent needs a class for the agent's model".into(),
                ))
            }
            (Some(c), true) => {
                let model: EnvRef = Arc::new(MixtureEnv::new(c.clone()));
                let agent = self.agent_spec(model.alphabet().num_actions())?;
                let planner = self.planner(model);
                let env = self.env.build(Some(planner.policy(agent.clone())))?;
                (env, agent)
            }
            (_, false) => {
                let env = self.env.build(None)?;
                let agent = self.agent_spec(env.alphabet().num_actions())?;
                (env, agent)
            }
        };
        if let Some(c) = &class {
            if c.members()[0].0.alphabet() != env.alphabet() {
                return Err(Error::AlphabetMismatch(
                    "class and environment alphabets differ".into(),
                ));
            }
        }
        Ok(RunConfig {
            env,
            class,
            agent,
            variant: self.variant,
            discount: self.discount.clone(),
            steps: self.steps,
            seed: self.seed,
            k_max: self.k_max,
            horizon_cap: self.horizon_cap,
        })
    }

    fn agent_spec(&self, num_actions: u8) -> Result<PolicySpec> {
        let tie = match &self.tie_order {
            Some(s) => TieOrder::parse(s, num_actions)?,
            None => TieOrder::natural(num_actions),
        };
        PolicySpec::parse(&self.agent, tie)
    }

    fn planner(&self, model: EnvRef) -> Planner {
        let p = Planner::new(model, self.discount.clone(), self.variant).with_k_max(self.k_max);
        match self.horizon_cap {
            Some(c) => p.with_horizon_cap(c),
            None => p,
        }
    }
}

impl RunConfig {
    /// The environment the agent plans in.
    pub fn model(&self) -> EnvRef {
        match &self.class {
            Some(c) => Arc::new(MixtureEnv::new(c.clone())),
            None => self.env.clone(),
        }
    }

    pub fn planner(&self) -> Planner {
        let p =
            Planner::new(self.model(), self.discount.clone(), self.variant).with_k_max(self.k_max);
        match self.horizon_cap {
            Some(c) => p.with_horizon_cap(c),
            None => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerceptRecord {
    pub id: u8,
    pub observation: u32,
    pub reward: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnclosureRecord {
    pub lo: String,
    pub hi: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightRecord {
    pub member: String,
    pub weight: String,
}

/// One line of a trace. Fractions are `n/d` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        env: String,
        model: String,
        agent: String,
        variant: String,
        discount: String,
        steps: usize,
        seed: u64,
        k_max: u32,
    },
    Step {
        t: usize,
        action: u8,
        percept: PerceptRecord,
        /// The model's value of the chosen action before the percept.
        value: EnclosureRecord,
        #[serde(skip_serializing_if = "Option::is_none")]
        posterior: Option<Vec<WeightRecord>>,
        cumulative_discounted_reward: String,
    },
    Summary {
        outcome: String,
        steps_completed: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        ended_at: Option<usize>,
        total_discounted_reward: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// The one-step draw at time `t` fell into the deficit.
    EnvironmentEnded {
        t: usize,
    },
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::EnvironmentEnded { .. } => "environment ended",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub history: History,
    pub outcome: Outcome,
    /// `sum_t gamma_t r_t` over completed steps.
    pub total: Rational,
    pub records: Vec<TraceRecord>,
}

impl RunResult {
    pub fn actions(&self) -> Vec<Action> {
        self.history.actions()
    }

    /// The trace as JSON lines.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.trace().as_bytes()).map_err(io)
    }
}

fn enclosure_record(lo: &ExtRational, hi: &ExtRational) -> EnclosureRecord {
    let s = |x: &ExtRational| match x {
        ExtRational::Finite(q) => fraction(q),
        other => other.to_string(),
    };
    EnclosureRecord {
        lo: s(lo),
        hi: s(hi),
    }
}

/// Runs the agent against the environment for `steps` steps, sampling each
/// percept exactly from the environment's one-step conditional. A draw in
/// the deficit ends the run with outcome "environment ended".
pub fn simulate(config: &RunConfig) -> Result<RunResult> {
    let planner = config.planner();
    let env = config.env.as_ref();
    let mut sampler = Sampler::new(config.seed);
    let mut records = vec![TraceRecord::Header {
        env: env.name().to_string(),
        model: planner.env().name().to_string(),
        agent: config.agent.to_string(),
        variant: config.variant.to_string(),
        discount: config.discount.to_string(),
        steps: config.steps,
        seed: config.seed,
        k_max: config.k_max,
    }];
    let mut h = History::new();
    let mut total = Rational::zero();
    let mut outcome = Outcome::Completed;
    for t in 1..=config.steps {
        let a = planner.act(&h, &config.agent)?;
        let value = planner.action_value(&h, a)?;
        let e = value.refine(
            config
                .k_max
                .min(crate::value::default_horizon_cap(&config.discount, t) as u32),
        );
        let mass = env.mass(&h.actions(), &h.percepts())?;
        let probs = one_step(env, &h.actions(), &h.percepts(), &mass, a)?;
        let percept = match sampler.draw(&probs) {
            Draw::Percept(p) => p,
            Draw::Ended => {
                outcome = Outcome::EnvironmentEnded { t };
                break;
            }
        };
        h.push(a, percept);
        total += config.discount.gamma(t) * env.alphabet().reward(percept);
        let post = match &config.class {
            Some(c) => Some(
                posterior(c, &h)?
                    .into_iter()
                    .map(|(member, w)| WeightRecord {
                        member,
                        weight: fraction(&w),
                    })
                    .collect(),
            ),
            None => None,
        };
        let p = env.alphabet().percept(percept);
        records.push(TraceRecord::Step {
            t,
            action: a.0,
            percept: PerceptRecord {
                id: percept.0,
                observation: p.observation,
                reward: fraction(&p.reward),
            },
            value: enclosure_record(&e.lo, &e.hi),
            posterior: post,
            cumulative_discounted_reward: fraction(&total),
        });
    }
    records.push(TraceRecord::Summary {
        outcome: outcome.as_str().to_string(),
        steps_completed: h.len(),
        ended_at: match outcome {
            Outcome::EnvironmentEnded { t } => Some(t),
            Outcome::Completed => None,
        },
        total_discounted_reward: fraction(&total),
    });
    Ok(RunResult {
        history: h,
        outcome,
        total,
        records,
    })
}

/// Both exact agents on the ending-after-alpha environment.
#[derive(Debug, Clone)]
pub struct Prop41Report {
    pub eps_r: Rational,
    pub discount: Discount,
    pub recursive: RunResult,
    pub iterative: RunResult,
    /// `gamma_1`.
    pub expected_recursive: Rational,
    /// `eps_r gamma_1`.
    pub expected_iterative: Rational,
}

impl Prop41Report {
    pub fn pass(&self) -> bool {
        self.recursive.total == self.expected_recursive
            && self.iterative.total == self.expected_iterative
    }
}

impl std::fmt::Display for Prop41Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let acts = |r: &RunResult| {
            r.actions()
                .iter()
                .map(|a| a.0.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            f,
            "env: eps_r={} discount={}",
            fraction(&self.eps_r),
            self.discount
        )?;
        writeln!(
            f,
            "recursive W agent: actions [{}], {}, total {} (closed form gamma_1 = {})",
            acts(&self.recursive),
            self.recursive.outcome.as_str(),
            fraction(&self.recursive.total),
            fraction(&self.expected_recursive)
        )?;
        writeln!(
            f,
            "iterative V agent: actions [{}], {}, total {} (closed form eps_r gamma_1 = {})",
            acts(&self.iterative),
            self.iterative.outcome.as_str(),
            fraction(&self.iterative.total),
            fraction(&self.expected_iterative)
        )?;
        write!(f, "{}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

pub fn compare_prop41(
    eps_r: &Rational,
    discount: &Discount,
    steps: usize,
    k_max: u32,
) -> Result<Prop41Report> {
    let env: EnvRef = Arc::new(Prop1Env::new(eps_r.clone())?);
    let run = |variant| {
        simulate(&RunConfig {
            env: env.clone(),
            class: None,
            agent: PolicySpec::ExactOptimal {
                tie: TieOrder::natural(2),
            },
            variant,
            discount: discount.clone(),
            steps,
            seed: 0,
            k_max,
            horizon_cap: None,
        })
    };
    let gamma_1 = discount.gamma(1);
    Ok(Prop41Report {
        eps_r: eps_r.clone(),
        discount: discount.clone(),
        recursive: run(Variant::Recursive)?,
        iterative: run(Variant::Iterative)?,
        expected_iterative: eps_r * &gamma_1,
        expected_recursive: gamma_1,
    })
}

/// Validity report of an environment to `depth`.
pub fn check_cmd(env: &EnvRef, depth: usize) -> ValidityReport {
    check_validity(env.as_ref(), depth)
}

/// Value of `history` (with an optional pending action) at the query's
/// horizon cap.
pub fn value_cmd(query: &ValueQuery) -> Result<ValueReport> {
    value_at(query, query.horizon_cap, None)
}

#[cfg(test)]
mod tests;
