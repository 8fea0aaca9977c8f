//! Brute-force reference values for finite horizons.
//!
//! Everything here works on unconditioned masses `nu(e_{1:k} || a_{1:k})`
//! straight from `Environment::mass`, with the discount given as an explicit
//! list `gamma_1..gamma_m` (zero afterwards). No conditionals, no memo, no
//! enclosures, no tail certificates: the sums are the textbook ones.
#![allow(dead_code)]

use aixilab_core::env::{Action, Environment, History, PerceptId};
use aixilab_core::{Rational, Variant};
use num_traits::Zero;

/// Actions allowed at the node after the given complete steps.
type Chooser<'c> = dyn FnMut(&[Action], &[PerceptId]) -> Vec<Action> + 'c;

pub struct Oracle<'a> {
    pub env: &'a dyn Environment,
    pub gammas: Vec<Rational>,
}

impl<'a> Oracle<'a> {
    pub fn lifetime(env: &'a dyn Environment, m: usize) -> Self {
        Oracle {
            env,
            gammas: vec![Rational::from_integer(1.into()); m],
        }
    }

    pub fn horizon(&self) -> usize {
        self.gammas.len()
    }

    fn gamma(&self, k: usize) -> Rational {
        self.gammas
            .get(k - 1)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn big_gamma(&self, t: usize) -> Rational {
        (t..=self.horizon()).map(|k| self.gamma(k)).sum()
    }

    fn mass(&self, acts: &[Action], ps: &[PerceptId]) -> Rational {
        self.env.mass(acts, ps).expect("mass")
    }

    /// Unnormalized sum below a node with `acts.len() == ps.len() == k - 1`.
    /// `choose` returns the actions allowed at the node; their sums are
    /// maximized.
    fn sum(
        &self,
        variant: Variant,
        acts: &mut Vec<Action>,
        ps: &mut Vec<PerceptId>,
        acc: &Rational,
        choose: &mut Chooser,
    ) -> Rational {
        let k = ps.len() + 1;
        if k > self.horizon() {
            return match variant {
                Variant::Iterative => acc * self.mass(acts, ps),
                Variant::Recursive => Rational::zero(),
            };
        }
        let mut best: Option<Rational> = None;
        for a in choose(acts, ps) {
            let mut total = Rational::zero();
            acts.push(a);
            for e in self.env.alphabet().percept_ids() {
                ps.push(e);
                let m = self.mass(acts, ps);
                if !m.is_zero() {
                    let r = self.gamma(k) * self.env.alphabet().reward(e);
                    if variant == Variant::Recursive {
                        total += &r * &m;
                    }
                    total += self.sum(variant, acts, ps, &(acc + &r), choose);
                }
                ps.pop();
            }
            acts.pop();
            if best.as_ref().is_none_or(|b| total > *b) {
                best = Some(total);
            }
        }
        best.expect("at least one action")
    }

    fn normalized(&self, h: &History, variant: Variant, choose: &mut Chooser) -> Rational {
        let (mut acts, mut ps) = (h.actions(), h.percepts());
        acts.truncate(ps.len());
        let t = ps.len() + 1;
        let norm = self.mass(&acts, &ps) * self.big_gamma(t);
        if norm.is_zero() {
            return Rational::zero();
        }
        self.sum(variant, &mut acts, &mut ps, &Rational::zero(), choose) / norm
    }

    /// `V*(h)` / `W*(h)`, or the value of `h`'s pending action.
    pub fn optimal(&self, h: &History, variant: Variant) -> Rational {
        let all: Vec<Action> = self.env.alphabet().actions().collect();
        let (t, pending) = (h.len(), h.pending());
        self.normalized(h, variant, &mut |_, ps| match pending {
            Some(a) if ps.len() == t => vec![a],
            _ => all.clone(),
        })
    }

    /// Value of a deterministic policy from `h`.
    pub fn policy(
        &self,
        h: &History,
        variant: Variant,
        pi: &dyn Fn(&History) -> Action,
    ) -> Rational {
        self.normalized(h, variant, &mut |acts, ps| {
            let steps = acts.iter().copied().zip(ps.iter().copied()).collect();
            vec![pi(&History::from_steps(steps))]
        })
    }

    /// Values of every deterministic policy tree from `h`, listed one by one.
    /// Exponential; only for tiny instances.
    pub fn all_policy_values(&self, h: &History, variant: Variant) -> Vec<Rational> {
        let (mut acts, mut ps) = (h.actions(), h.percepts());
        acts.truncate(ps.len());
        let t = ps.len() + 1;
        let norm = self.mass(&acts, &ps) * self.big_gamma(t);
        if norm.is_zero() {
            return vec![Rational::zero()];
        }
        self.trees(variant, &mut acts, &mut ps, &Rational::zero())
            .into_iter()
            .map(|v| v / &norm)
            .collect()
    }

    fn trees(
        &self,
        variant: Variant,
        acts: &mut Vec<Action>,
        ps: &mut Vec<PerceptId>,
        acc: &Rational,
    ) -> Vec<Rational> {
        let k = ps.len() + 1;
        if k > self.horizon() {
            return vec![match variant {
                Variant::Iterative => acc * self.mass(acts, ps),
                Variant::Recursive => Rational::zero(),
            }];
        }
        let mut out = Vec::new();
        for a in self.env.alphabet().actions() {
            acts.push(a);
            // every combination of one subtree per positive-mass child
            let mut combos = vec![Rational::zero()];
            for e in self.env.alphabet().percept_ids() {
                ps.push(e);
                let m = self.mass(acts, ps);
                if !m.is_zero() {
                    let r = self.gamma(k) * self.env.alphabet().reward(e);
                    let here = if variant == Variant::Recursive {
                        &r * &m
                    } else {
                        Rational::zero()
                    };
                    let subs = self.trees(variant, acts, ps, &(acc + &r));
                    let here = &here;
                    combos = combos
                        .iter()
                        .flat_map(|c| subs.iter().map(move |s| c + s + here))
                        .collect();
                }
                ps.pop();
            }
            acts.pop();
            out.extend(combos);
        }
        out
    }
}

/// Every complete-step history of length at most `depth` with positive mass.
pub fn histories(env: &dyn Environment, depth: usize) -> Vec<History> {
    let mut out = vec![History::new()];
    let mut frontier = vec![History::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for h in &frontier {
            for a in env.alphabet().actions() {
                for e in env.alphabet().percept_ids() {
                    let g = h.pushed(a, e);
                    if !env.mass(&g.actions(), &g.percepts()).unwrap().is_zero() {
                        next.push(g);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
