use std::fmt;

use num_traits::{One, Zero};

use crate::approx::{fraction, Rational};
use crate::env::{render_prefix, Action, Environment, PerceptId};
use crate::error::Result;

/// How many actions past a prefix the chronology check perturbs.
const CHRONOLOGY_SUFFIX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `nu(empty) > 1`, or `!= 1` for a declared measure.
    Root,
    /// A mass outside `[0, 1]`.
    Range,
    /// One-step extensions sum to more than the parent.
    Superadditivity,
    /// Declared measure, but one-step extensions do not sum to the parent.
    MeasureEquality,
    /// The mass of a prefix changes when later actions change.
    Chronology,
    /// Evaluating a mass failed.
    Evaluation,
    /// A lower approximation decreased, exceeded the exact mass, or never
    /// reached it within the budget.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub prefix: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.kind, self.prefix, self.detail)
    }
}

/// Result of [`check_validity`]. `strict` lists the prefixes (ending in an
/// action) whose one-step extensions lose mass: where the environment may end.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub env: String,
    pub depth: usize,
    pub prefixes_checked: usize,
    pub violations: Vec<Violation>,
    pub strict: Vec<(String, Rational)>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(
        &mut self,
        kind: ViolationKind,
        actions: &[Action],
        percepts: &[PerceptId],
        detail: String,
    ) {
        self.violations.push(Violation {
            kind,
            prefix: render_prefix(actions, percepts),
            detail,
        });
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.is_valid() { "valid" } else { "INVALID" };
        writeln!(
            f,
            "{}: {verdict} to depth {} ({} prefixes)",
            self.env, self.depth, self.prefixes_checked
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        for (p, lost) in &self.strict {
            writeln!(f, "  strict: {p} loses {}", fraction(lost))?;
        }
        Ok(())
    }
}

/// Enumerates every action/percept sequence up to `depth` reachable with
/// positive mass and checks the semimeasure axioms on it: root, range,
/// superadditivity (equality for declared measures) and chronology. Children
/// of zero-mass prefixes are checked one level deep.
pub fn check_validity(env: &dyn Environment, depth: usize) -> ValidityReport {
    let mut report = ValidityReport {
        env: env.name().to_string(),
        depth,
        ..Default::default()
    };
    let root = match env.mass(&[], &[]) {
        Ok(m) => m,
        Err(e) => {
            report.push(ViolationKind::Evaluation, &[], &[], e.to_string());
            return report;
        }
    };
    if root > Rational::one() || root < Rational::zero() || (env.is_measure() && !root.is_one()) {
        report.push(
            ViolationKind::Root,
            &[],
            &[],
            format!("nu(empty) = {}", fraction(&root)),
        );
    }
    let mut frontier = vec![(Vec::new(), Vec::new(), root)];
    for level in 0..depth {
        let mut next = Vec::new();
        for (actions, percepts, parent) in frontier {
            report.prefixes_checked += 1;
            for a in env.alphabet().actions() {
                let mut acts: Vec<Action> = actions.clone();
                acts.push(a);
                let children = match expand(env, &acts, &percepts) {
                    Ok(c) => c,
                    Err(e) => {
                        report.push(ViolationKind::Evaluation, &acts, &percepts, e.to_string());
                        continue;
                    }
                };
                let mut sum = Rational::zero();
                for (ps, m) in &children {
                    if *m < Rational::zero() || *m > Rational::one() {
                        report.push(
                            ViolationKind::Range,
                            &acts,
                            ps,
                            format!("mass {}", fraction(m)),
                        );
                    }
                    sum += m;
                }
                if sum > parent {
                    report.push(
                        ViolationKind::Superadditivity,
                        &acts,
                        &percepts,
                        format!("children sum to {} > {}", fraction(&sum), fraction(&parent)),
                    );
                } else if sum < parent {
                    if env.is_measure() {
                        report.push(
                            ViolationKind::MeasureEquality,
                            &acts,
                            &percepts,
                            format!("children sum to {} < {}", fraction(&sum), fraction(&parent)),
                        );
                    }
                    report
                        .strict
                        .push((render_prefix(&acts, &percepts), &parent - &sum));
                }
                let remaining = depth - level - 1;
                for (ps, m) in children {
                    if let Err(v) =
                        chronology(env, &acts, &ps, &m, remaining.min(CHRONOLOGY_SUFFIX))
                    {
                        report.violations.push(v);
                    }
                    if m.is_zero() {
                        if remaining > 0 {
                            zero_children(env, &acts, &ps, &mut report);
                        }
                    } else {
                        next.push((acts.clone(), ps, m));
                    }
                }
            }
        }
        frontier = next;
    }
    report
}

fn expand(
    env: &dyn Environment,
    acts: &[Action],
    percepts: &[PerceptId],
) -> Result<Vec<(Vec<PerceptId>, Rational)>> {
    env.alphabet()
        .percept_ids()
        .map(|e| {
            let mut ps = percepts.to_vec();
            ps.push(e);
            let m = env.mass(acts, &ps)?;
            Ok((ps, m))
        })
        .collect()
}

fn zero_children(
    env: &dyn Environment,
    actions: &[Action],
    percepts: &[PerceptId],
    report: &mut ValidityReport,
) {
    for a in env.alphabet().actions() {
        let mut acts = actions.to_vec();
        acts.push(a);
        match expand(env, &acts, percepts) {
            Ok(children) => {
                for (ps, m) in children {
                    if !m.is_zero() {
                        report.push(
                            ViolationKind::Superadditivity,
                            &acts,
                            &ps,
                            format!("mass {} below a zero-mass prefix", fraction(&m)),
                        );
                    }
                }
            }
            Err(e) => report.push(ViolationKind::Evaluation, &acts, percepts, e.to_string()),
        }
    }
}

/// Evaluates the prefix with every action suffix of length `1..=extra`.
fn chronology(
    env: &dyn Environment,
    actions: &[Action],
    percepts: &[PerceptId],
    expected: &Rational,
    extra: usize,
) -> Result<(), Violation> {
    let n = env.alphabet().num_actions() as usize;
    for len in 1..=extra {
        for code in 0..n.pow(len as u32) {
            let mut acts = actions.to_vec();
            let mut c = code;
            for _ in 0..len {
                acts.push(Action((c % n) as u8));
                c /= n;
            }
            let violation = |detail: String| Violation {
                kind: ViolationKind::Chronology,
                prefix: render_prefix(&acts, percepts),
                detail,
            };
            match env.mass(&acts, percepts) {
                Ok(m) if &m == expected => {}
                Ok(m) => {
                    return Err(violation(format!(
                        "mass {} differs from {} under a later action",
                        fraction(&m),
                        fraction(expected)
                    )))
                }
                Err(e) => return Err(violation(e.to_string())),
            }
        }
    }
    Ok(())
}

/// Checks the budgeted lower approximations on every prefix to `depth`:
/// nondecreasing in the budget for `k <= k_max`, never above the exact mass,
/// and equal to it at `k_max`.
pub fn check_lower_bounds(env: &dyn Environment, depth: usize, k_max: u32) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut frontier: Vec<(Vec<Action>, Vec<PerceptId>)> = vec![(vec![], vec![])];
    for _ in 0..=depth {
        let mut next = Vec::new();
        for (actions, percepts) in frontier {
            let result = (|| -> Result<Option<String>> {
                let exact = env.mass(&actions, &percepts)?;
                let mut prev = env.mass_lower(&actions, &percepts, 0)?;
                for k in 0..=k_max {
                    let lo = env.mass_lower(&actions, &percepts, k)?;
                    if lo < prev {
                        return Ok(Some(format!("lower bound decreased at k={k}")));
                    }
                    if lo > exact {
                        return Ok(Some(format!(
                            "lower bound {} above exact mass at k={k}",
                            fraction(&lo)
                        )));
                    }
                    prev = lo;
                }
                Ok((prev != exact).then(|| {
                    format!(
                        "lower bound {} never reaches {}",
                        fraction(&prev),
                        fraction(&exact)
                    )
                }))
            })();
            match result {
                Ok(None) => {}
                Ok(Some(detail)) => out.push(Violation {
                    kind: ViolationKind::LowerBound,
                    prefix: render_prefix(&actions, &percepts),
                    detail,
                }),
                Err(e) => out.push(Violation {
                    kind: ViolationKind::Evaluation,
                    prefix: render_prefix(&actions, &percepts),
                    detail: e.to_string(),
                }),
            }
            if percepts.len() < depth {
                for a in env.alphabet().actions() {
                    for e in env.alphabet().percept_ids() {
                        let mut acts = actions.clone();
                        acts.push(a);
                        let mut ps = percepts.clone();
                        ps.push(e);
                        if env.mass(&acts, &ps).map(|m| !m.is_zero()).unwrap_or(false) {
                            next.push((acts, ps));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    out
}
