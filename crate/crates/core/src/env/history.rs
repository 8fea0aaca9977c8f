use std::fmt;

use serde::{Deserialize, Serialize};

use crate::approx::{fraction, Rational};
use crate::error::{Error, Result};

/// Index into an environment's action alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(pub u8);

/// Index into an environment's percept alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerceptId(pub u8);

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for PerceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// An observation together with its reward.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Percept {
    pub observation: u32,
    pub reward: Rational,
}

impl Percept {
    pub fn new(observation: u32, reward: Rational) -> Self {
        Percept {
            observation,
            reward,
        }
    }
}

impl fmt::Display for Percept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.observation, fraction(&self.reward))
    }
}

/// Finite action and percept alphabets. Rewards are rationals in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    actions: u8,
    percepts: Vec<Percept>,
}

impl Alphabet {
    pub fn new(actions: u8, percepts: Vec<Percept>) -> Result<Self> {
        if actions < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 actions, got {actions}"
            )));
        }
        if percepts.is_empty() || percepts.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "percept alphabet size {} out of range",
                percepts.len()
            )));
        }
        let zero = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        for (i, p) in percepts.iter().enumerate() {
            if p.reward < zero || p.reward > one {
                return Err(Error::InvalidArgument(format!(
                    "reward {} outside [0, 1]",
                    fraction(&p.reward)
                )));
            }
            if percepts[..i].contains(p) {
                return Err(Error::InvalidArgument(format!("duplicate percept {p}")));
            }
        }
        Ok(Alphabet { actions, percepts })
    }

    pub fn num_actions(&self) -> u8 {
        self.actions
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.actions).map(Action)
    }

    pub fn percepts(&self) -> &[Percept] {
        &self.percepts
    }

    pub fn percept_ids(&self) -> impl Iterator<Item = PerceptId> + '_ {
        (0..self.percepts.len() as u8).map(PerceptId)
    }

    pub fn percept(&self, id: PerceptId) -> &Percept {
        &self.percepts[id.0 as usize]
    }

    pub fn reward(&self, id: PerceptId) -> &Rational {
        &self.percepts[id.0 as usize].reward
    }

    pub fn find(&self, percept: &Percept) -> Option<PerceptId> {
        self.percepts
            .iter()
            .position(|p| p == percept)
            .map(|i| PerceptId(i as u8))
    }
}

/// Alternating action/percept record, possibly ending in an action whose
/// percept has not arrived yet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct History {
    steps: Vec<(Action, PerceptId)>,
    pending: Option<Action>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn from_steps(steps: Vec<(Action, PerceptId)>) -> Self {
        History {
            steps,
            pending: None,
        }
    }

    /// The current time `t`: number of complete steps plus one.
    pub fn time(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.pending.is_none()
    }

    pub fn steps(&self) -> &[(Action, PerceptId)] {
        &self.steps
    }

    pub fn pending(&self) -> Option<Action> {
        self.pending
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.0).collect()
    }

    pub fn percepts(&self) -> Vec<PerceptId> {
        self.steps.iter().map(|s| s.1).collect()
    }

    /// Completes the step: the pending action (if any) must equal `action`.
    pub fn push(&mut self, action: Action, percept: PerceptId) {
        debug_assert!(self.pending.is_none_or(|p| p == action));
        self.pending = None;
        self.steps.push((action, percept));
    }

    pub fn pushed(&self, action: Action, percept: PerceptId) -> History {
        let mut h = self.clone();
        h.push(action, percept);
        h
    }

    pub fn with_pending(&self, action: Action) -> History {
        History {
            steps: self.steps.clone(),
            pending: Some(action),
        }
    }

    pub fn without_pending(&self) -> History {
        History {
            steps: self.steps.clone(),
            pending: None,
        }
    }

    /// Parses `"0:1,1:0,1"`: comma-separated `action:percept` index pairs,
    /// optionally followed by a lone pending action.
    pub fn parse(s: &str, alphabet: &Alphabet) -> Result<History> {
        let mut h = History::new();
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(h);
        }
        let bad = |m: String| Error::InvalidArgument(format!("history `{s}`: {m}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        for (i, part) in parts.iter().enumerate() {
            let index = |x: &str, bound: usize, what: &str| -> Result<u8> {
                let v: usize = x
                    .parse()
                    .map_err(|_| bad(format!("bad {what} index `{x}`")))?;
                if v >= bound {
                    return Err(bad(format!("{what} index {v} out of range")));
                }
                Ok(v as u8)
            };
            match part.split_once(':') {
                Some((a, e)) => {
                    if h.pending.is_some() {
                        return Err(bad("pending action must be last".into()));
                    }
                    let a = index(a, alphabet.num_actions() as usize, "action")?;
                    let e = index(e, alphabet.percepts().len(), "percept")?;
                    h.push(Action(a), PerceptId(e));
                }
                None if i + 1 == parts.len() => {
                    h.pending = Some(Action(index(
                        part,
                        alphabet.num_actions() as usize,
                        "action",
                    )?));
                }
                None => return Err(bad(format!("step `{part}` lacks a percept"))),
            }
        }
        Ok(h)
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .steps
            .iter()
            .map(|(a, e)| format!("{}:{}", a.0, e.0))
            .collect();
        if let Some(a) = self.pending {
            parts.push(a.0.to_string());
        }
        if parts.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

pub(crate) fn render_prefix(actions: &[Action], percepts: &[PerceptId]) -> String {
    let mut parts: Vec<String> = percepts
        .iter()
        .zip(actions)
        .map(|(e, a)| format!("{}:{}", a.0, e.0))
        .collect();
    for a in &actions[percepts.len().min(actions.len())..] {
        parts.push(a.0.to_string());
    }
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(",")
    }
}
