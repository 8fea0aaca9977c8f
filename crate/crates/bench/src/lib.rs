//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use aixilab_core::approx::rat;
use aixilab_core::env::{bandit, leaky_bandit, Prop1Env, TableEnv};
use aixilab_core::mixture::standard_classes;
use aixilab_core::{Discount, EnvRef, History, MixtureEnv, ValueQuery, Variant};

/// Named environments of increasing branching.
pub fn envs() -> Vec<(&'static str, EnvRef)> {
    vec![
        ("prop1", Arc::new(Prop1Env::new(rat(1, 4)).expect("valid"))),
        ("bandit", Arc::new(bandit())),
        ("leaky", Arc::new(leaky_bandit())),
        ("coin", Arc::new(TableEnv::uniform_coin())),
        (
            "mixture",
            Arc::new(MixtureEnv::new(standard_classes().swap_remove(1))),
        ),
    ]
}

/// Optimal-value query from the empty history with a finite lifetime `m`.
pub fn lifetime_query(env: EnvRef, m: usize, variant: Variant) -> ValueQuery {
    ValueQuery::new(env, Discount::lifetime(m), History::new(), variant)
}
