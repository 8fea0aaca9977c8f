use std::sync::Arc;

use super::*;
use crate::approx::{int, rat};
use crate::env::{AdversarialEnv, Prop1Env, RhoEnv, SRelation, TableEnv};

const ALPHA: Action = Action(0);
const BETA: Action = Action(1);

fn prop1() -> EnvRef {
    Arc::new(Prop1Env::new(rat(1, 4)).unwrap())
}

fn half() -> Discount {
    Discount::geometric(rat(1, 2)).unwrap()
}

fn query(env: EnvRef, discount: Discount, h: History, variant: Variant) -> ValueQuery {
    ValueQuery::new(env, discount, h, variant)
}

fn exact(a: &ApproxReal) -> Rational {
    a.exact_value()
        .unwrap_or_else(|| panic!("not exact: {a:?}"))
        .clone()
}

#[test]
fn prop1_values() {
    let alpha = History::new().with_pending(ALPHA);
    let beta = History::new().with_pending(BETA);
    let v = |h: &History| {
        exact(&iterative_v_opt(&query(prop1(), half(), h.clone(), Variant::Iterative)).unwrap())
    };
    let w = |h: &History| {
        exact(&recursive_w_opt(&query(prop1(), half(), h.clone(), Variant::Recursive)).unwrap())
    };
    assert_eq!(v(&alpha), int(0));
    assert_eq!(v(&beta), rat(1, 8));
    assert_eq!(w(&alpha), rat(1, 2));
    assert_eq!(w(&beta), rat(1, 8));
    assert_eq!(v(&History::new()), rat(1, 8));
    assert_eq!(w(&History::new()), rat(1, 2));
}

#[test]
fn iterative_truncation_is_not_monotone() {
    let q = query(
        prop1(),
        half(),
        History::new().with_pending(ALPHA),
        Variant::Iterative,
    );
    assert_eq!(truncated_sum(&q, 1).unwrap(), rat(1, 2));
    assert_eq!(truncated_sum(&q, 2).unwrap(), int(0));
    let w = q.with_variant(Variant::Recursive);
    assert_eq!(truncated_sum(&w, 1).unwrap(), rat(1, 2));
    assert_eq!(truncated_sum(&w, 2).unwrap(), rat(1, 2));
}

fn rho_branch(n: usize) -> History {
    let p = RhoEnv::percept;
    let mut steps = vec![(ALPHA, p(1, 0)); n];
    steps.push((ALPHA, p(0, 0)));
    History::from_steps(steps).with_pending(BETA)
}

#[test]
fn rho_beta_branch_is_gamma_n_plus_2() {
    for n in 0..5 {
        let env: EnvRef = Arc::new(RhoEnv::new(0, SRelation::Always, 8).unwrap());
        let q = query(env, half(), rho_branch(n), Variant::Iterative);
        let r = value_at(&q, q.time(), None).unwrap();
        assert_eq!(r.value, Enclosure::point(int(1)));
        assert_eq!(r.denominator, crate::approx::dyadic(n as u32 + 1));
        assert_eq!(r.conditional(), Enclosure::point(half().Gamma(n + 2)));
        let dead: EnvRef =
            Arc::new(RhoEnv::new(0, SRelation::FailsAt { t: n as u64 + 2 }, 8).unwrap());
        let q = query(dead, half(), rho_branch(n), Variant::Iterative);
        assert_eq!(exact(&iterative_v_opt(&q).unwrap()), int(0));
    }
}

#[test]
fn adversary_values() {
    let target: Arc<dyn Policy> = Arc::new(|_: &History| -> Result<Action> { Ok(ALPHA) });
    let env: EnvRef = Arc::new(AdversarialEnv::new(target.clone(), 2, "alpha").unwrap());
    let q = query(
        env.clone(),
        Discount::lifetime(6),
        History::new(),
        Variant::Recursive,
    )
    .with_policy(target);
    assert_eq!(exact(&policy_value(&q).unwrap()), int(0));
    let deviant: Arc<dyn Policy> = Arc::new(|_: &History| -> Result<Action> { Ok(BETA) });
    for d in [half(), Discount::lifetime(6)] {
        let q =
            query(env.clone(), d, History::new(), Variant::Recursive).with_policy(deviant.clone());
        assert_eq!(exact(&policy_value(&q).unwrap()), int(1));
    }
}

#[test]
fn geometric_w_on_table_is_lower_monotone_and_converges() {
    let env: EnvRef = Arc::new(TableEnv::uniform_coin());
    let q = query(env, half(), History::new(), Variant::Recursive).with_horizon_cap(6);
    let w = recursive_w_opt(&q).unwrap();
    // reward 1 w.p. 1/2 every step: W = 1/2
    for k in 0..6 {
        let e = w.refine(k);
        assert!(e.contains(&rat(1, 2)), "{e}");
        assert!(e.lo <= w.refine(k + 1).lo);
    }
    let width = w.refine(6).width().unwrap();
    assert!(width <= rat(1, 64), "{width}");
}

#[test]
fn null_prefix_and_zero_gamma() {
    let null = History::from_steps(vec![(BETA, PerceptId(2))]);
    assert!(matches!(
        iterative_v_opt(&query(prop1(), half(), null, Variant::Iterative)),
        Err(Error::ConditioningOnNull { .. })
    ));
    let late = History::from_steps(vec![(BETA, PerceptId(1)); 1]).pushed(ALPHA, PerceptId(0));
    let q = query(prop1(), Discount::lifetime(2), late, Variant::Iterative);
    assert_eq!(exact(&iterative_v_opt(&q).unwrap()), int(0));
}

#[test]
fn finite_lifetime_is_exact_and_cap_independent() {
    let env: EnvRef = Arc::new(TableEnv::uniform_coin());
    let base = query(
        env,
        Discount::lifetime(3),
        History::new(),
        Variant::Iterative,
    );
    let v3 = exact(&iterative_v_opt(&base).unwrap());
    assert_eq!(v3, rat(1, 2));
    for cap in 3..7 {
        let q = base.clone().with_horizon_cap(cap);
        assert_eq!(
            value_at(&q, cap, None).unwrap().value,
            Enclosure::point(v3.clone())
        );
    }
}

#[test]
fn memo_is_reused() {
    let env: EnvRef = Arc::new(TableEnv::uniform_coin());
    let memo = Arc::new(Memo::new());
    let q = query(
        env,
        Discount::lifetime(4),
        History::new(),
        Variant::Iterative,
    );
    let a = value(&q, Some(memo.clone())).unwrap();
    let n = memo.len();
    assert!(n > 0);
    let b = value(&q, Some(memo.clone())).unwrap();
    assert_eq!(memo.len(), n);
    assert_eq!(a.exact_value(), b.exact_value());
}
