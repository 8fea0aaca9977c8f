use super::*;
use crate::approx::rat;
use crate::env::spec::TargetSpec;

fn half() -> Discount {
    Discount::geometric(rat(1, 2)).unwrap()
}

#[test]
fn prop41_totals() {
    let r = compare_prop41(&rat(1, 4), &half(), 3, 64).unwrap();
    assert!(r.pass(), "{r}");
    assert_eq!(r.recursive.actions(), vec![Action(0)]);
    assert_eq!(r.recursive.outcome, Outcome::EnvironmentEnded { t: 2 });
    assert_eq!(r.iterative.actions()[0], Action(1));
    assert_eq!(r.iterative.outcome, Outcome::Completed);
    assert_eq!(r.iterative.total, rat(1, 8));
}

#[test]
fn trace_is_reproducible_and_conserves_reward() {
    let spec = RunSpec {
        env: EnvSpec::parse("kind=table\nactions=2\npercepts=0:0,1:1,0:1/2\ndepth=1\ntail=repeat-last\nrow=0;0;1/3\nrow=0;1;1/3\nrow=0;2;1/3\nrow=1;0;1/2\nrow=1;1;1/4\nrow=1;2;1/4").unwrap(),
        class: None,
        agent: "exact".into(),
        tie_order: None,
        variant: Variant::Recursive,
        discount: Discount::lifetime(4),
        steps: 4,
        seed: 7,
        k_max: 64,
        horizon_cap: None,
    };
    let a = simulate(&spec.resolve().unwrap()).unwrap();
    let b = simulate(&spec.resolve().unwrap()).unwrap();
    assert_eq!(a.trace(), b.trace());
    assert_eq!(a.trace().lines().count(), 6);
    let recomputed: Rational = a
        .history
        .steps()
        .iter()
        .enumerate()
        .map(|(i, (_, e))| Discount::lifetime(4).gamma(i + 1) * a.trace_reward(*e))
        .sum();
    assert_eq!(recomputed, a.total);
}

impl RunResult {
    fn trace_reward(&self, e: crate::env::PerceptId) -> Rational {
        for r in &self.records {
            if let TraceRecord::Step { percept, .. } = r {
                if percept.id == e.0 {
                    return crate::approx::parse_rational(&percept.reward).unwrap();
                }
            }
        }
        unreachable!()
    }
}

#[test]
fn target_agent_needs_a_class() {
    let spec = RunSpec {
        env: EnvSpec::Adversarial {
            target: TargetSpec::Agent,
            actions: 2,
        },
        class: None,
        agent: "exact".into(),
        tie_order: None,
        variant: Variant::Recursive,
        discount: Discount::lifetime(3),
        steps: 3,
        seed: 0,
        k_max: 64,
        horizon_cap: None,
    };
    assert!(spec.resolve().is_err());
}
