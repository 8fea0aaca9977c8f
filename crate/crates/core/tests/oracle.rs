mod common;

use std::sync::Arc;

use aixilab_core::approx::{int, rat};
use aixilab_core::env::{Percept, TableEnv};
use aixilab_core::value::{iterative_v_opt, policy_value, recursive_w_opt};
use aixilab_core::{Action, Alphabet, Discount, EnvRef, History, Policy, ValueQuery, Variant};
use common::{histories, Oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn alphabet(percepts: usize) -> Alphabet {
    let ps = (0..percepts)
        .map(|i| Percept::new(i as u32, rat(i as i64, percepts as i64 - 1)))
        .collect();
    Alphabet::new(2, ps).unwrap()
}

fn random_env(rng: &mut ChaCha8Rng, percepts: usize, depth: usize) -> EnvRef {
    let measure = rng.gen_bool(0.5);
    Arc::new(TableEnv::random(rng, "rand", alphabet(percepts), depth, 8, measure).unwrap())
}

#[test]
fn factorized_max_equals_policy_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..20 {
        let env = random_env(&mut rng, 2, 4);
        // lifetime 4 has up to 2^15 policy trees; check it on a few tables
        let max_m = if i < 4 { 4 } else { 3 };
        for m in 1..=max_m {
            let oracle = Oracle::lifetime(env.as_ref(), m);
            for variant in [Variant::Iterative, Variant::Recursive] {
                let all = oracle.all_policy_values(&History::new(), variant);
                let max = all.iter().max().unwrap().clone();
                assert_eq!(oracle.optimal(&History::new(), variant), max);
            }
        }
    }
}

#[test]
fn expectimax_matches_oracle_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..25 {
        let percepts = rng.gen_range(2..=3);
        let m = rng.gen_range(1..=3);
        let env = random_env(&mut rng, percepts, m);
        let oracle = Oracle::lifetime(env.as_ref(), m);
        for h in histories(env.as_ref(), 2) {
            for variant in [Variant::Iterative, Variant::Recursive] {
                let q = ValueQuery::new(env.clone(), Discount::lifetime(m), h.clone(), variant);
                let got = match variant {
                    Variant::Iterative => iterative_v_opt(&q),
                    Variant::Recursive => recursive_w_opt(&q),
                }
                .unwrap();
                assert_eq!(
                    got.exact_value(),
                    Some(&oracle.optimal(&h, variant)),
                    "{} {h} {variant:?}",
                    env.name()
                );
                for a in env.alphabet().actions() {
                    let hq = ValueQuery::new(
                        env.clone(),
                        Discount::lifetime(m),
                        h.with_pending(a),
                        variant,
                    );
                    let got = recursive_or_iterative(&hq);
                    assert_eq!(
                        got,
                        oracle.optimal(&h.with_pending(a), variant),
                        "{h} action {}",
                        a.0
                    );
                }
            }
        }
    }
}

fn recursive_or_iterative(q: &ValueQuery) -> aixilab_core::Rational {
    let v = match q.variant {
        Variant::Iterative => iterative_v_opt(q),
        Variant::Recursive => recursive_w_opt(q),
    };
    v.unwrap()
        .exact_value()
        .expect("finite lifetime values are exact")
        .clone()
}

#[test]
fn policy_values_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pi = |h: &History| {
        Action(((h.len() + h.percepts().iter().map(|p| p.0 as usize).sum::<usize>()) % 2) as u8)
    };
    let policy: Arc<dyn Policy> = Arc::new(move |h: &History| Ok(pi(h)));
    for _ in 0..15 {
        let env = random_env(&mut rng, 3, 3);
        let oracle = Oracle::lifetime(env.as_ref(), 3);
        for variant in [Variant::Iterative, Variant::Recursive] {
            let q = ValueQuery::new(env.clone(), Discount::lifetime(3), History::new(), variant)
                .with_policy(policy.clone());
            let got = policy_value(&q).unwrap();
            assert_eq!(
                got.exact_value(),
                Some(&oracle.policy(&History::new(), variant, &pi))
            );
        }
    }
}

#[test]
fn tabular_discount_matches_oracle() {
    let gammas = vec![rat(1, 2), rat(1, 4), rat(1, 8), int(0)];
    let d = Discount::tabular(gammas.clone(), None).unwrap();
    let env: EnvRef = Arc::new(aixilab_core::env::leaky_bandit());
    // a finite-support discount is a lifetime ending at its last positive time
    let oracle = Oracle {
        env: env.as_ref(),
        gammas: gammas[..3].to_vec(),
    };
    for variant in [Variant::Iterative, Variant::Recursive] {
        let q = ValueQuery::new(env.clone(), d.clone(), History::new(), variant);
        assert_eq!(
            recursive_or_iterative(&q),
            oracle.optimal(&History::new(), variant)
        );
    }
}
