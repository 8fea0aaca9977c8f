//! Value functions and policies for agents in semimeasure environments.
//!
//! * [`approx`]: exact rationals and anytime enclosures.
//! * [`env`]: environments, validity checking, normalization, the
//!   reference corpus and spec files.
//! * [`mixture`]: finite Bayesian mixtures and posteriors.
//! * [`value`]: the iterative value `V` and recursive value `W`.
//! * [`policy`]: exact and eps-optimal action selection.
//! * [`harness`]: simulation runs, traces, command back ends.

pub mod approx;
pub mod env;
pub mod error;
pub mod harness;
pub mod mixture;
pub mod policy;
pub mod value;

pub use approx::{ApproxReal, Comparison, Enclosure, ExtRational, Mode, Rational};
pub use env::{Action, Alphabet, EnvRef, Environment, History, Percept, PerceptId};
pub use error::{Error, Result};
pub use mixture::{MixtureEnv, WeightedClass};
pub use policy::{EpsSchedule, Planner, Policy, PolicySpec, TieOrder};
pub use value::{Discount, ValueQuery, Variant};
