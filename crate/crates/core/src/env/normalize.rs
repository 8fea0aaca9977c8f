use num_traits::{One, Zero};

use crate::approx::Rational;
use crate::env::{render_prefix, Action, Alphabet, ConstantTail, EnvRef, Environment, PerceptId};
use crate::error::{Error, Result};

/// What to do at a prefix of positive mass whose one-step extensions all
/// have mass zero, where the normalizing ratio is `0/0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularRule {
    /// Report `NormalizationSingular` with the offending prefix.
    Error,
    /// Continue with the uniform distribution over percepts.
    Uniform,
}

/// Solomonoff normalization of a semimeasure:
/// `nu_norm(empty) = 1` and
/// `nu_norm(x e) = nu_norm(x) * nu(x e) / sum_b nu(x b)`.
pub struct NormalizedEnv {
    inner: EnvRef,
    rule: SingularRule,
    name: String,
}

pub fn normalize(env: EnvRef) -> NormalizedEnv {
    normalize_with(env, SingularRule::Error)
}

pub fn normalize_with(env: EnvRef, rule: SingularRule) -> NormalizedEnv {
    let name = format!("norm({})", env.name());
    NormalizedEnv {
        inner: env,
        rule,
        name,
    }
}

impl NormalizedEnv {
    pub fn inner(&self) -> &EnvRef {
        &self.inner
    }
}

impl Environment for NormalizedEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }

    fn is_measure(&self) -> bool {
        true
    }

    fn has_exact(&self) -> bool {
        self.inner.has_exact()
    }

    fn mass(&self, actions: &[Action], percepts: &[PerceptId]) -> Result<Rational> {
        let n = Rational::from_integer((self.alphabet().percepts().len() as i64).into());
        let mut m = Rational::one();
        let mut prefix = Vec::with_capacity(percepts.len());
        for (k, &e) in percepts.iter().enumerate() {
            let acts = &actions[..=k];
            let mut denom = Rational::zero();
            let mut numer = Rational::zero();
            prefix.push(PerceptId(0));
            for b in self.alphabet().percept_ids() {
                prefix[k] = b;
                let v = self.inner.mass(acts, &prefix)?;
                if b == e {
                    numer = v.clone();
                }
                denom += v;
            }
            prefix[k] = e;
            if denom.is_zero() {
                match self.rule {
                    SingularRule::Error => {
                        return Err(Error::NormalizationSingular {
                            prefix: render_prefix(acts, &percepts[..k]),
                        })
                    }
                    SingularRule::Uniform => m /= &n,
                }
            } else {
                m = m * numer / denom;
            }
            if m.is_zero() {
                return Ok(m);
            }
        }
        Ok(m)
    }

    fn tail(&self, actions: &[Action], percepts: &[PerceptId]) -> Option<ConstantTail> {
        self.inner.tail(actions, percepts)
    }
}
