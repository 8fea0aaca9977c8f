use std::collections::HashMap;

use num_traits::{One, Zero};
use rand::Rng;

use crate::approx::{int, rat, Rational};
use crate::env::{Action, Alphabet, Environment, Percept, PerceptId};
use crate::error::{Error, Result};

/// How a table environment continues past its last tabulated step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableTail {
    /// No mass beyond the table: the environment ends.
    End,
    /// Every later step reuses the last tabulated step's kernel: the
    /// conditional of `e` given action `a` is
    /// `nu(x_{<D} a e) / nu(x_{<D})` for the prefix `x_{<D}` of the history.
    RepeatLast,
    /// Every later percept is uniform over the percept alphabet.
    Uniform,
}

impl TableTail {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "end" => Ok(TableTail::End),
            "repeat-last" => Ok(TableTail::RepeatLast),
            "uniform" => Ok(TableTail::Uniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown tail rule `{other}`"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TableTail::End => "end",
            TableTail::RepeatLast => "repeat-last",
            TableTail::Uniform => "uniform",
        }
    }
}

type Key = (Vec<Action>, Vec<PerceptId>);

/// Environment given by explicit joint masses `nu(e_{1:t} || a_{1:t})` for
/// `t <= depth`, plus a tail rule. Missing rows have mass zero.
#[derive(Debug, Clone)]
pub struct TableEnv {
    name: String,
    alphabet: Alphabet,
    depth: usize,
    root: Rational,
    rows: HashMap<Key, Rational>,
    tail: TableTail,
    measure: bool,
}

impl TableEnv {
    pub fn new(
        name: impl Into<String>,
        alphabet: Alphabet,
        depth: usize,
        root: Rational,
        rows: Vec<(Vec<Action>, Vec<PerceptId>, Rational)>,
        tail: TableTail,
    ) -> Result<Self> {
        if tail == TableTail::RepeatLast && depth == 0 {
            return Err(Error::InvalidArgument(
                "repeat-last needs depth >= 1".into(),
            ));
        }
        let mut map = HashMap::new();
        for (actions, percepts, p) in rows {
            if actions.len() != percepts.len() || actions.is_empty() || actions.len() > depth {
                return Err(Error::InvalidArgument(format!(
                    "row with {} actions and {} percepts does not fit depth {depth}",
                    actions.len(),
                    percepts.len()
                )));
            }
            if actions.iter().any(|a| a.0 >= alphabet.num_actions())
                || percepts
                    .iter()
                    .any(|e| e.0 as usize >= alphabet.percepts().len())
            {
                return Err(Error::InvalidArgument(
                    "row refers to a symbol outside the alphabet".into(),
                ));
            }
            if p < Rational::zero() || p > Rational::one() {
                return Err(Error::InvalidArgument(format!(
                    "row probability {p} outside [0, 1]"
                )));
            }
            if map.insert((actions, percepts), p).is_some() {
                return Err(Error::InvalidArgument("duplicate row".into()));
            }
        }
        let mut env = TableEnv {
            name: name.into(),
            alphabet,
            depth,
            root,
            rows: map,
            tail,
            measure: false,
        };
        env.measure = env.tail != TableTail::End && env.table_is_measure();
        Ok(env)
    }

    /// Builds the table from one-step conditionals: `kernel(actions, percepts,
    /// a)` returns the probability of each percept after the prefix when
    /// playing `a`. Only prefixes of positive mass are expanded.
    pub fn from_kernel<F>(
        name: impl Into<String>,
        alphabet: Alphabet,
        depth: usize,
        tail: TableTail,
        mut kernel: F,
    ) -> Result<Self>
    where
        F: FnMut(&[Action], &[PerceptId], Action) -> Vec<Rational>,
    {
        let mut rows = Vec::new();
        let mut frontier: Vec<(Vec<Action>, Vec<PerceptId>, Rational)> =
            vec![(vec![], vec![], Rational::one())];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (actions, percepts, mass) in &frontier {
                for a in alphabet.actions() {
                    let probs = kernel(actions, percepts, a);
                    if probs.len() != alphabet.percepts().len() {
                        return Err(Error::InvalidArgument(
                            "kernel returned wrong number of percepts".into(),
                        ));
                    }
                    for (e, p) in alphabet.percept_ids().zip(probs) {
                        if p.is_zero() {
                            continue;
                        }
                        let mut acts = actions.clone();
                        acts.push(a);
                        let mut ps = percepts.clone();
                        ps.push(e);
                        let m = mass * p;
                        rows.push((acts.clone(), ps.clone(), m.clone()));
                        next.push((acts, ps, m));
                    }
                }
            }
            frontier = next;
        }
        TableEnv::new(name, alphabet, depth, Rational::one(), rows, tail)
    }

    /// Random table with action-dependent conditionals whose denominators are
    /// at most `max_denominator`. With `measure == true` the table continues
    /// with its last step's kernel; otherwise each kernel may leave a deficit
    /// and the environment ends after `depth` steps.
    pub fn random<R: Rng>(
        rng: &mut R,
        name: impl Into<String>,
        alphabet: Alphabet,
        depth: usize,
        max_denominator: u32,
        measure: bool,
    ) -> Result<Self> {
        let n = alphabet.percepts().len();
        let tail = if measure {
            TableTail::RepeatLast
        } else {
            TableTail::End
        };
        TableEnv::from_kernel(name, alphabet, depth, tail, |_, _, _| {
            let d = rng.gen_range(1..=max_denominator);
            let total = if measure { d } else { rng.gen_range(0..=d) };
            let mut counts = vec![0u32; n];
            for _ in 0..total {
                counts[rng.gen_range(0..n)] += 1;
            }
            counts
                .into_iter()
                .map(|c| rat(c as i64, d as i64))
                .collect()
        })
    }

    /// Fair coin over two percepts `(0, 0)` and `(1, 1)`, independent of the
    /// action. A measure.
    pub fn uniform_coin() -> Self {
        let alphabet = Alphabet::new(2, vec![Percept::new(0, int(0)), Percept::new(1, int(1))])
            .expect("valid");
        TableEnv::from_kernel("coin", alphabet, 1, TableTail::Uniform, |_, _, _| {
            vec![rat(1, 2), rat(1, 2)]
        })
        .expect("valid")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tail_rule(&self) -> TableTail {
        self.tail
    }

    pub fn root(&self) -> &Rational {
        &self.root
    }

    /// Rows in a deterministic order (by length, then lexicographically).
    pub fn rows(&self) -> Vec<(&[Action], &[PerceptId], &Rational)> {
        let mut rows: Vec<_> = self
            .rows
            .iter()
            .map(|((a, e), p)| (a.as_slice(), e.as_slice(), p))
            .collect();
        rows.sort_by(|x, y| (x.0.len(), x.0, x.1).cmp(&(y.0.len(), y.0, y.1)));
        rows
    }

    fn lookup(&self, actions: &[Action], percepts: &[PerceptId]) -> Rational {
        if percepts.is_empty() {
            return self.root.clone();
        }
        self.rows
            .get(&(actions[..percepts.len()].to_vec(), percepts.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    fn table_is_measure(&self) -> bool {
        if self.root != Rational::one() {
            return false;
        }
        let mut frontier: Vec<Key> = vec![(vec![], vec![])];
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for (actions, percepts) in &frontier {
                let parent = self.lookup(actions, percepts);
                for a in self.alphabet.actions() {
                    let mut acts = actions.clone();
                    acts.push(a);
                    let mut sum = Rational::zero();
                    for e in self.alphabet.percept_ids() {
                        let mut ps = percepts.clone();
                        ps.push(e);
                        let m = self.lookup(&acts, &ps);
                        if !m.is_zero() {
                            sum += &m;
                            next.push((acts.clone(), ps));
                        }
                    }
                    if sum != parent {
                        return false;
                    }
                }
            }
            frontier = next;
        }
        true
    }
}

impl Environment for TableEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn is_measure(&self) -> bool {
        self.measure
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        let t = percepts.len();
        if t <= self.depth {
            return Ok(self.lookup(actions, percepts));
        }
        let d = self.depth;
        let base = self.lookup(actions, &percepts[..d]);
        if base.is_zero() {
            return Ok(base);
        }
        match self.tail {
            TableTail::End => Ok(Rational::zero()),
            TableTail::Uniform => {
                let n = Rational::from_integer((self.alphabet.percepts().len() as i64).into());
                Ok((0..t - d).fold(base, |m, _| m / &n))
            }
            TableTail::RepeatLast => {
                let parent = self.lookup(actions, &percepts[..d - 1]);
                let mut m = base;
                let mut acts = actions[..d].to_vec();
                let mut ps = percepts[..d].to_vec();
                for s in d..t {
                    acts[d - 1] = actions[s];
                    ps[d - 1] = percepts[s];
                    m = m * self.lookup(&acts, &ps) / &parent;
                    if m.is_zero() {
                        break;
                    }
                }
                Ok(m)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_percepts() -> Alphabet {
        Alphabet::new(2, vec![Percept::new(0, int(0)), Percept::new(0, int(1))]).unwrap()
    }

    #[test]
    fn coin_is_a_measure_and_uniform_tail_extends_it() {
        let c = TableEnv::uniform_coin();
        assert!(c.is_measure());
        let acts = [Action(0), Action(1), Action(1)];
        assert_eq!(
            c.mass(&acts, &[PerceptId(0), PerceptId(1), PerceptId(1)])
                .unwrap(),
            rat(1, 8)
        );
    }

    #[test]
    fn repeat_last_reuses_final_kernel() {
        // step 1: percept 1 w.p. 1/4 regardless; step 2 (last tabulated): action 0 -> 1/2, action 1 -> 3/4
        let env = TableEnv::from_kernel(
            "rl",
            two_percepts(),
            2,
            TableTail::RepeatLast,
            |acts, _, a| {
                let p1 = match (acts.len(), a.0) {
                    (0, _) => rat(1, 4),
                    (_, 0) => rat(1, 2),
                    _ => rat(3, 4),
                };
                vec![Rational::one() - &p1, p1]
            },
        )
        .unwrap();
        assert!(env.is_measure());
        let acts = [Action(0), Action(0), Action(1), Action(0)];
        let ps = [PerceptId(1), PerceptId(1), PerceptId(1), PerceptId(0)];
        // 1/4 * 1/2 * 3/4 * 1/2
        assert_eq!(env.mass(&acts, &ps).unwrap(), rat(3, 64));
    }

    #[test]
    fn end_tail_is_not_a_measure() {
        let env = TableEnv::from_kernel("e", two_percepts(), 1, TableTail::End, |_, _, _| {
            vec![rat(1, 2), rat(1, 2)]
        })
        .unwrap();
        assert!(!env.is_measure());
        assert_eq!(
            env.mass(&[Action(0); 2], &[PerceptId(0); 2]).unwrap(),
            int(0)
        );
    }

    #[test]
    fn rejects_malformed_rows() {
        let bad = TableEnv::new(
            "bad",
            two_percepts(),
            1,
            int(1),
            vec![(
                vec![Action(0), Action(0)],
                vec![PerceptId(0), PerceptId(0)],
                rat(1, 2),
            )],
            TableTail::End,
        );
        assert!(bad.is_err());
        let bad = TableEnv::new(
            "bad",
            two_percepts(),
            1,
            int(1),
            vec![(vec![Action(5)], vec![PerceptId(0)], rat(1, 2))],
            TableTail::End,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn random_tables_respect_denominators() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let env = TableEnv::random(&mut rng, "r", two_percepts(), 3, 8, true).unwrap();
        assert!(env.is_measure());
        assert!(env
            .rows()
            .iter()
            .all(|(_, _, p)| *p.denom() <= 8u32.pow(3).into()));
        let leaky = TableEnv::random(&mut rng, "r", two_percepts(), 2, 8, false).unwrap();
        assert!(!leaky.is_measure());
    }
}
