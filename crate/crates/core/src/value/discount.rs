use std::fmt;

use num_traits::{One, Zero};

use crate::approx::{fraction, parse_rational, Rational};
use crate::error::{Error, Result};

/// A summable discount function `gamma_t >= 0`, `t >= 1`, with its
/// normalizer `Gamma_t = sum_{i >= t} gamma_i` in closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discount {
    /// `gamma_t = q^t` for `0 < q < 1`.
    Geometric(Rational),
    /// `gamma_t = 1` for `t <= m`, 0 after.
    Lifetime(usize),
    /// `gamma_1, ..., gamma_L` as listed; after that zero, or, with `tail =
    /// Some(q)`, `gamma_{L+j} = gamma_L q^j`.
    Tabular {
        values: Vec<Rational>,
        tail: Option<Rational>,
    },
}

fn check_ratio(q: &Rational) -> Result<()> {
    if *q <= Rational::zero() || *q >= Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "discount ratio {} outside (0, 1)",
            fraction(q)
        )));
    }
    Ok(())
}

impl Discount {
    pub fn geometric(q: Rational) -> Result<Self> {
        check_ratio(&q)?;
        Ok(Discount::Geometric(q))
    }

    pub fn lifetime(m: usize) -> Self {
        Discount::Lifetime(m)
    }

    pub fn tabular(values: Vec<Rational>, tail: Option<Rational>) -> Result<Self> {
        if values.iter().any(|g| *g < Rational::zero()) {
            return Err(Error::InvalidArgument("negative discount".into()));
        }
        if let Some(q) = &tail {
            check_ratio(q)?;
            if values.is_empty() {
                return Err(Error::InvalidArgument(
                    "geometric tail needs at least one listed value".into(),
                ));
            }
        }
        Ok(Discount::Tabular { values, tail })
    }

    /// `geometric:Q`, `lt:M`, or `table:G1,G2,...[;tail:Q]`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad discount `{s}`"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "geometric" => Discount::geometric(parse_rational(arg)?),
            "lt" => Ok(Discount::Lifetime(arg.trim().parse().map_err(|_| bad())?)),
            "table" => {
                let (list, tail) = match arg.split_once(";tail:") {
                    Some((l, q)) => (l, Some(parse_rational(q)?)),
                    None => (arg, None),
                };
                let values = list
                    .split(',')
                    .map(parse_rational)
                    .collect::<Result<Vec<_>>>()?;
                Discount::tabular(values, tail)
            }
            _ => Err(bad()),
        }
    }

    pub fn gamma(&self, t: usize) -> Rational {
        assert!(t >= 1, "time starts at 1");
        match self {
            Discount::Geometric(q) => pow(q, t),
            Discount::Lifetime(m) => {
                if t <= *m {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Discount::Tabular { values, tail } => match (values.get(t - 1), tail) {
                (Some(g), _) => g.clone(),
                (None, Some(q)) => values.last().expect("nonempty") * pow(q, t - values.len()),
                (None, None) => Rational::zero(),
            },
        }
    }

    /// `Gamma_t`, exactly.
    #[allow(non_snake_case)]
    pub fn Gamma(&self, t: usize) -> Rational {
        assert!(t >= 1, "time starts at 1");
        match self {
            Discount::Geometric(q) => pow(q, t) / (Rational::one() - q),
            Discount::Lifetime(m) => Rational::from_integer((m + 1).saturating_sub(t).into()),
            Discount::Tabular { values, tail } => {
                let listed: Rational = values.iter().skip(t - 1).sum();
                let rest = match tail {
                    Some(q) => {
                        // sum over s >= max(t, L + 1) of gamma_L q^(s - L)
                        let l = values.len();
                        let from = t.max(l + 1);
                        values[l - 1].clone() * pow(q, from - l) / (Rational::one() - q)
                    }
                    None => Rational::zero(),
                };
                listed + rest
            }
        }
    }

    /// Last time with a positive discount, if the support is finite.
    pub fn last_positive(&self) -> Option<usize> {
        match self {
            Discount::Geometric(_) => None,
            Discount::Lifetime(m) => Some(*m),
            Discount::Tabular { tail: Some(_), .. } => None,
            Discount::Tabular { values, tail: None } => Some(
                values
                    .iter()
                    .rposition(|g| !g.is_zero())
                    .map_or(0, |i| i + 1),
            ),
        }
    }

    /// `min { k >= t : Gamma_k / Gamma_t < eps / 2 }`. For a finite lifetime
    /// `m` the result is at most `m + 1`.
    pub fn effective_horizon(&self, t: usize, eps: &Rational) -> Result<usize> {
        if *eps <= Rational::zero() {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        let gamma_t = self.Gamma(t);
        if gamma_t.is_zero() {
            return Err(Error::InvalidArgument(format!("Gamma_{t} = 0")));
        }
        let bound = eps / Rational::from_integer(2.into()) * &gamma_t;
        if let Discount::Geometric(q) = self {
            // Gamma_k / Gamma_t = q^(k - t)
            let target = eps / Rational::from_integer(2.into());
            let mut k = t;
            let mut ratio = Rational::one();
            while ratio >= target {
                ratio *= q;
                k += 1;
            }
            return Ok(k);
        }
        let mut k = t;
        while self.Gamma(k) >= bound {
            k += 1;
        }
        Ok(k)
    }
}

fn pow(q: &Rational, n: usize) -> Rational {
    num_traits::pow(q.clone(), n)
}

impl fmt::Display for Discount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discount::Geometric(q) => write!(f, "geometric:{}", fraction(q)),
            Discount::Lifetime(m) => write!(f, "lt:{m}"),
            Discount::Tabular { values, tail } => {
                let v: Vec<String> = values.iter().map(fraction).collect();
                write!(f, "table:{}", v.join(","))?;
                if let Some(q) = tail {
                    write!(f, ";tail:{}", fraction(q))?;
                }
                Ok(())
            }
        }
    }
}
