//! Line-oriented `key=value` environment spec files.
//!
//! ```text
//! # comment
//! kind=table
//! name=bandit
//! actions=2
//! percepts=0:0,0:1
//! depth=1
//! tail=repeat-last
//! row=0;0;3/4
//! row=0;1;1/4
//! row=1;0;1/4
//! row=1;1;3/4
//! ```
//!
//! Other kinds: `prop1` (`eps_r`), `rho` (`i`, `relation=always|fails-at:T`,
//! `search_bound`) and `adversarial` (`target=constant:A|alternate|agent`,
//! `actions`). Fractions are written `n/d`; decimals are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_traits::One;

use crate::approx::{fraction, parse_rational, Rational};
use crate::env::{
    Action, AdversarialEnv, Alphabet, EnvRef, History, Percept, PerceptId, Prop1Env, RhoEnv,
    SRelation, TableEnv, TableTail,
};
use crate::error::{Error, Result};
use crate::policy::Policy;

/// Target policy of an adversarial environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Constant(Action),
    /// Plays action `(t - 1) mod |A|` at time `t`.
    Alternate,
    /// The agent the environment is run against; supplied when building.
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationSpec {
    Always,
    FailsAt(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub name: String,
    pub alphabet: Alphabet,
    pub depth: usize,
    pub root: Rational,
    pub tail: TableTail,
    pub rows: Vec<(Vec<Action>, Vec<PerceptId>, Rational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Prop1 {
        eps_r: Rational,
    },
    Adversarial {
        target: TargetSpec,
        actions: u8,
    },
    Rho {
        index: u64,
        relation: RelationSpec,
        search_bound: u64,
    },
    Table(TableSpec),
}

struct Fields {
    values: BTreeMap<String, (usize, String)>,
    rows: Vec<(usize, String)>,
}

impl Fields {
    fn parse(text: &str) -> Result<Fields> {
        let mut values = BTreeMap::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::spec(line_no, format!("expected key=value, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "row" {
                rows.push((line_no, v.to_string()));
            } else if values
                .insert(k.to_string(), (line_no, v.to_string()))
                .is_some()
            {
                return Err(Error::spec(line_no, format!("duplicate key `{k}`")));
            }
        }
        Ok(Fields { values, rows })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.values.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key)
            .ok_or_else(|| Error::spec(0, format!("missing key `{key}`")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match (self.take(key), default) {
            (Some((line, v)), _) => v
                .parse()
                .map_err(|_| Error::spec(line, format!("`{key}`: bad number `{v}`"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::spec(0, format!("missing key `{key}`"))),
        }
    }

    fn rational(&mut self, key: &str, default: Option<Rational>) -> Result<Rational> {
        match (self.take(key), default) {
            (Some((line, v)), _) => {
                parse_rational(&v).map_err(|e| Error::spec(line, format!("`{key}`: {e}")))
            }
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::spec(0, format!("missing key `{key}`"))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((k, (line, _))) = self.values.into_iter().next() {
            return Err(Error::spec(line, format!("unknown key `{k}`")));
        }
        if let Some((line, _)) = self.rows.first() {
            return Err(Error::spec(*line, "rows are only allowed for kind=table"));
        }
        Ok(())
    }
}

fn index_list(s: &str, bound: usize, what: &str, line: usize) -> Result<Vec<u8>> {
    s.split(',')
        .map(|x| {
            let v: usize = x
                .trim()
                .parse()
                .map_err(|_| Error::spec(line, format!("bad {what} index `{x}`")))?;
            if v >= bound {
                return Err(Error::spec(line, format!("{what} index {v} out of range")));
            }
            Ok(v as u8)
        })
        .collect()
}

impl EnvSpec {
    pub fn parse(text: &str) -> Result<EnvSpec> {
        let mut f = Fields::parse(text)?;
        let (line, kind) = f.required("kind")?;
        let spec = match kind.as_str() {
            "prop1" => EnvSpec::Prop1 {
                eps_r: f.rational("eps_r", None)?,
            },
            "adversarial" => {
                let actions = f.number("actions", Some(2u8))?;
                let (tl, t) = f.take("target").unwrap_or((0, "agent".into()));
                let target = match t.split_once(':') {
                    None if t == "alternate" => TargetSpec::Alternate,
                    None if t == "agent" => TargetSpec::Agent,
                    Some(("constant", a)) => {
                        let a = index_list(a, actions as usize, "action", tl)?;
                        TargetSpec::Constant(Action(a[0]))
                    }
                    _ => return Err(Error::spec(tl, format!("unknown target `{t}`"))),
                };
                EnvSpec::Adversarial { target, actions }
            }
            "rho" => {
                let index = f.number("i", Some(0u64))?;
                let search_bound = f.number("search_bound", Some(64u64))?;
                let (rl, r) = f.take("relation").unwrap_or((0, "always".into()));
                let relation = match r.split_once(':') {
                    None if r == "always" => RelationSpec::Always,
                    Some(("fails-at", t)) => RelationSpec::FailsAt(
                        t.trim()
                            .parse()
                            .map_err(|_| Error::spec(rl, format!("bad time `{t}`")))?,
                    ),
                    _ => return Err(Error::spec(rl, format!("unknown relation `{r}`"))),
                };
                EnvSpec::Rho {
                    index,
                    relation,
                    search_bound,
                }
            }
            "table" => EnvSpec::Table(Self::parse_table(&mut f)?),
            other => return Err(Error::spec(line, format!("unknown kind `{other}`"))),
        };
        f.finish()?;
        Ok(spec)
    }

    fn parse_table(f: &mut Fields) -> Result<TableSpec> {
        let name = f
            .take("name")
            .map(|x| x.1)
            .unwrap_or_else(|| "table".into());
        let actions = f.number("actions", Some(2u8))?;
        let (pl, ps) = f.required("percepts")?;
        let percepts = ps
            .split(',')
            .map(|p| {
                let (o, r) = p
                    .split_once(':')
                    .ok_or_else(|| Error::spec(pl, format!("percept `{p}` is not o:r")))?;
                let o = o
                    .trim()
                    .parse()
                    .map_err(|_| Error::spec(pl, format!("bad observation `{o}`")))?;
                let r = parse_rational(r).map_err(|e| Error::spec(pl, e.to_string()))?;
                Ok(Percept::new(o, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let alphabet =
            Alphabet::new(actions, percepts).map_err(|e| Error::spec(pl, e.to_string()))?;
        let depth = f.number("depth", None)?;
        let root = f.rational("root", Some(Rational::one()))?;
        let (tl, tail) = f.take("tail").unwrap_or((0, "end".into()));
        let tail = TableTail::parse(&tail).map_err(|e| Error::spec(tl, e.to_string()))?;
        let mut rows = Vec::new();
        for (line, row) in std::mem::take(&mut f.rows) {
            let parts: Vec<&str> = row.split(';').collect();
            let [a, e, p] = parts[..] else {
                return Err(Error::spec(
                    line,
                    "row must be actions;percepts;probability",
                ));
            };
            let a = index_list(a, alphabet.num_actions() as usize, "action", line)?;
            let e = index_list(e, alphabet.percepts().len(), "percept", line)?;
            let p = parse_rational(p).map_err(|err| Error::spec(line, err.to_string()))?;
            rows.push((
                a.into_iter().map(Action).collect(),
                e.into_iter().map(PerceptId).collect(),
                p,
            ));
        }
        Ok(TableSpec {
            name,
            alphabet,
            depth,
            root,
            tail,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<EnvSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        EnvSpec::parse(&text)
    }

    /// True if building needs the running agent (`target=agent`).
    pub fn needs_agent(&self) -> bool {
        matches!(
            self,
            EnvSpec::Adversarial {
                target: TargetSpec::Agent,
                ..
            }
        )
    }

    pub fn build(&self, agent: Option<Arc<dyn Policy>>) -> Result<EnvRef> {
        Ok(match self {
            EnvSpec::Prop1 { eps_r } => Arc::new(Prop1Env::new(eps_r.clone())?),
            EnvSpec::Adversarial { target, actions } => {
                let n = *actions;
                let (policy, name): (Arc<dyn Policy>, String) = match target {
                    TargetSpec::Constant(a) => {
                        let a = *a;
                        (
                            Arc::new(move |_: &History| -> Result<Action> { Ok(a) }),
                            format!("constant:{}", a.0),
                        )
                    }
                    TargetSpec::Alternate => (
                        Arc::new(move |h: &History| -> Result<Action> {
                            Ok(Action((h.len() % n as usize) as u8))
                        }),
                        "alternate".into(),
                    ),
                    TargetSpec::Agent => (
                        agent.ok_or_else(|| {
                            Error::InvalidArgument("target=agent needs an agent".into())
                        })?,
                        "agent".into(),
                    ),
                };
                Arc::new(AdversarialEnv::new(policy, n, &name)?)
            }
            EnvSpec::Rho {
                index,
                relation,
                search_bound,
            } => {
                let relation = match relation {
                    RelationSpec::Always => SRelation::Always,
                    RelationSpec::FailsAt(t) => SRelation::FailsAt { t: *t },
                };
                Arc::new(RhoEnv::new(*index, relation, *search_bound)?)
            }
            EnvSpec::Table(t) => Arc::new(TableEnv::new(
                t.name.clone(),
                t.alphabet.clone(),
                t.depth,
                t.root.clone(),
                t.rows.clone(),
                t.tail,
            )?),
        })
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::Prop1 { eps_r } => write!(f, "kind=prop1\neps_r={}\n", fraction(eps_r)),
            EnvSpec::Adversarial { target, actions } => {
                let t = match target {
                    TargetSpec::Constant(a) => format!("constant:{}", a.0),
                    TargetSpec::Alternate => "alternate".into(),
                    TargetSpec::Agent => "agent".into(),
                };
                write!(f, "kind=adversarial\nactions={actions}\ntarget={t}\n")
            }
            EnvSpec::Rho {
                index,
                relation,
                search_bound,
            } => {
                let r = match relation {
                    RelationSpec::Always => "always".into(),
                    RelationSpec::FailsAt(t) => format!("fails-at:{t}"),
                };
                write!(
                    f,
                    "kind=rho\ni={index}\nrelation={r}\nsearch_bound={search_bound}\n"
                )
            }
            EnvSpec::Table(t) => {
                let percepts: Vec<String> = t
                    .alphabet
                    .percepts()
                    .iter()
                    .map(|p| p.to_string())
                    .collect();
                writeln!(
                    f,
                    "kind=table\nname={}\nactions={}",
                    t.name,
                    t.alphabet.num_actions()
                )?;
                writeln!(
                    f,
                    "percepts={}\ndepth={}\nroot={}\ntail={}",
                    percepts.join(","),
                    t.depth,
                    fraction(&t.root),
                    t.tail.as_str()
                )?;
                for (a, e, p) in &t.rows {
                    let a: Vec<String> = a.iter().map(|x| x.0.to_string()).collect();
                    let e: Vec<String> = e.iter().map(|x| x.0.to_string()).collect();
                    writeln!(f, "row={};{};{}", a.join(","), e.join(","), fraction(p))?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::rat;

    const BANDIT: &str = "# two-armed
kind=table
name=bandit
actions=2
percepts=0:0,0:1
depth=1
tail=repeat-last
row=0;0;3/4
row=0;1;1/4
row=1;0;1/4
row=1;1;3/4
";

    #[test]
    fn table_round_trip_and_build() {
        let spec = EnvSpec::parse(BANDIT).unwrap();
        assert_eq!(EnvSpec::parse(&spec.to_string()).unwrap(), spec);
        let env = spec.build(None).unwrap();
        assert!(env.is_measure());
        assert_eq!(
            env.mass(&[Action(1), Action(1)], &[PerceptId(1), PerceptId(1)])
                .unwrap(),
            rat(9, 16)
        );
    }

    #[test]
    fn corpus_kinds() {
        let p = EnvSpec::parse("kind=prop1\neps_r=1/4").unwrap();
        assert_eq!(p, EnvSpec::Prop1 { eps_r: rat(1, 4) });
        let r = EnvSpec::parse("kind=rho\ni=2\nrelation=fails-at:3\nsearch_bound=8").unwrap();
        assert_eq!(
            r,
            EnvSpec::Rho {
                index: 2,
                relation: RelationSpec::FailsAt(3),
                search_bound: 8
            }
        );
        let a = EnvSpec::parse("kind=adversarial\ntarget=agent").unwrap();
        assert!(a.needs_agent());
        assert!(a.build(None).is_err());
        assert!(EnvSpec::parse("kind=adversarial\ntarget=constant:1")
            .unwrap()
            .build(None)
            .is_ok());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            EnvSpec::parse("kind=prop1\neps_r=0.25"),
            Err(Error::InvalidSpec { line: 2, .. })
        ));
        assert!(matches!(
            EnvSpec::parse("kind=prop1\neps_r=1/4\nfoo=1"),
            Err(Error::InvalidSpec { line: 3, .. })
        ));
        assert!(matches!(
            EnvSpec::parse("kind=nope"),
            Err(Error::InvalidSpec { line: 1, .. })
        ));
        assert!(matches!(
            EnvSpec::parse(&format!("{BANDIT}row=0;2;1/2")),
            Err(Error::InvalidSpec { line: 12, .. })
        ));
    }
}
