//! Design criteria.
//!
//! Three objectives are supported: the D-criterion `det(M)^(1/m)` of the
//! standardized information matrix, the projection-aware average reciprocal
//! distance (ARD) criterion, and MaxPro. The search always maximizes, so
//! MaxPro (a cost) enters the search negated while reported values keep
//! their natural sign.
//!
//! MaxPro uses the absolute coordinate difference `|x_i - y_i|` for the
//! per-axis gap.

mod dopt;
mod nearest;
mod pairwise;
pub(crate) mod scorer;

use std::fmt;

pub use dopt::{d_from_info_matrix, eval_d, info_matrix};
pub use nearest::{
    nearest_distance_stats, uniform_probes, vertex_probes, DistanceSummary,
};
pub use pairwise::{ard_mean, eval_ard, eval_maxpro, ArdParams};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::privacy::Design;

/// Polynomial regression model given by exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    dim: usize,
    terms: Vec<Vec<u32>>,
}

impl ModelSpec {
    pub fn new(dim: usize, terms: Vec<Vec<u32>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("a model needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: t.len(),
            });
        }
        Ok(Self { dim, terms })
    }

    /// Intercept plus the `d` first-order terms.
    pub fn linear(dim: usize) -> Self {
        let mut terms = vec![vec![0; dim]];
        terms.extend((0..dim).map(|i| unit(dim, &[i])));
        Self { dim, terms }
    }

    /// Intercept, first-order terms, squares, then two-way interactions.
    pub fn full_quadratic(dim: usize) -> Self {
        let mut model = Self::linear(dim);
        model.terms.extend((0..dim).map(|i| {
            let mut e = vec![0; dim];
            e[i] = 2;
            e
        }));
        for i in 0..dim {
            for j in i + 1..dim {
                model.terms.push(unit(dim, &[i, j]));
            }
        }
        model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    /// Number of regressors `m`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn regressor(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.terms.len()];
        self.regressor_into(x, &mut out);
        out
    }

    pub(crate) fn regressor_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, term) in out.iter_mut().zip(&self.terms) {
            *o = term
                .iter()
                .zip(x)
                .filter(|(&e, _)| e > 0)
                .map(|(&e, &xi)| xi.powi(e as i32))
                .product();
        }
    }

    fn describe(&self) -> String {
        if *self == Self::linear(self.dim) {
            "linear".into()
        } else if *self == Self::full_quadratic(self.dim) {
            "quadratic".into()
        } else {
            let terms: Vec<String> = self
                .terms
                .iter()
                .map(|t| t.iter().map(u32::to_string).collect::<Vec<_>>().join("."))
                .collect();
            format!("terms={}", terms.join("+"))
        }
    }
}

fn unit(dim: usize, axes: &[usize]) -> Vec<u32> {
    let mut e = vec![0; dim];
    for &a in axes {
        e[a] = 1;
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriterionSpec {
    D(ModelSpec),
    Ard(ArdParams),
    MaxPro { z: f64 },
}

impl CriterionSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::D(model) if model.dim() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                actual: model.dim(),
            }),
            Self::D(_) => Ok(()),
            Self::Ard(p) => p.validate(dim),
            Self::MaxPro { z } if !z.is_finite() || *z <= 0.0 => {
                Err(Error::Config(format!("MaxPro exponent must be positive, got {z}")))
            }
            Self::MaxPro { .. } => Ok(()),
        }
    }

    /// The criterion value as reported to users: `Phi_D`, `Phi_ARD`, or the
    /// MaxPro sum.
    pub fn evaluate(&self, design: &Design, space: &GridSpace) -> Result<f64> {
        match self {
            Self::D(model) => {
                if design.is_empty() {
                    return Err(Error::Domain("the D-criterion needs a non-empty design".into()));
                }
                Ok(eval_d(model, design, space))
            }
            Self::Ard(p) => eval_ard(p, design, space),
            Self::MaxPro { z } => eval_maxpro(*z, design, space),
        }
    }

    /// The value the search maximizes. Degenerate pairwise designs map to
    /// the limiting value instead of an error.
    pub fn objective(&self, design: &Design, space: &GridSpace) -> f64 {
        let mut scorer = scorer::Scorer::new(self, space.dim(), design.capacity());
        scorer.rebuild(&design.coords(space));
        scorer.value()
    }

    /// Parses `d:linear`, `d:quadratic`, `ard:z=1,lambda=1,J=1+2` or
    /// `maxpro:z=2`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = text.split_once(':').unwrap_or((text, ""));
        if head.eq_ignore_ascii_case("d") {
            let model = match rest.trim() {
                "" | "linear" => ModelSpec::linear(dim),
                "quadratic" => ModelSpec::full_quadratic(dim),
                other => return Err(Error::Config(format!("unknown model `{other}`"))),
            };
            return Ok(Self::D(model));
        }
        let params: Vec<(&str, &str)> = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| Error::Config(format!("expected key=value in criterion, got `{kv}`")))
            })
            .collect::<Result<_>>()?;
        let lookup = |key: &str| params.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| *v);
        let number = |key: &str, default: f64| -> Result<f64> {
            lookup(key).map_or(Ok(default), |v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("criterion parameter {key} is not a number: `{v}`")))
            })
        };
        let spec = match head.to_ascii_lowercase().as_str() {
            "ard" => {
                let dims = match lookup("j") {
                    None => (1..=dim).collect(),
                    Some(v) => v
                        .split('+')
                        .map(|s| {
                            s.trim()
                                .parse::<usize>()
                                .map_err(|_| Error::Config(format!("bad ARD dimension `{s}`")))
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                Self::Ard(ArdParams::new(number("z", 1.0)?, number("lambda", 1.0)?, dims)?)
            }
            "maxpro" => Self::MaxPro {
                z: number("z", 2.0)?,
            },
            other => return Err(Error::Config(format!("unknown criterion `{other}`"))),
        };
        spec.validate(dim)?;
        Ok(spec)
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::D(model) => write!(f, "d:{}", model.describe()),
            Self::Ard(p) => {
                let dims: Vec<String> = p.dims().iter().map(usize::to_string).collect();
                write!(f, "ard:z={},lambda={},J={}", p.z(), p.lambda(), dims.join("+"))
            }
            Self::MaxPro { z } => write!(f, "maxpro:z={z}"),
        }
    }
}

/// Mutual efficiency `Phi(xi) / Phi(eta)`.
pub fn efficiency(phi_xi: f64, phi_eta: f64) -> Result<f64> {
    if phi_eta.is_nan() || phi_eta <= 0.0 {
        return Err(Error::Domain(format!(
            "efficiency needs a positive reference value, got {phi_eta}"
        )));
    }
    Ok(phi_xi / phi_eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regressors() {
        assert_eq!(ModelSpec::linear(2).regressor(&[0.5, -1.0]), vec![1.0, 0.5, -1.0]);
        assert_eq!(ModelSpec::full_quadratic(2).regressor(&[1.0, 1.0]), vec![1.0; 6]);
        assert_eq!(
            ModelSpec::full_quadratic(2).regressor(&[0.0, 0.0]),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            ModelSpec::full_quadratic(2).regressor(&[0.5, -2.0]),
            vec![1.0, 0.5, -2.0, 0.25, 4.0, -1.0]
        );
    }

    #[test]
    fn model_sizes() {
        for d in 1..=8 {
            assert_eq!(ModelSpec::linear(d).len(), d + 1);
            assert_eq!(ModelSpec::full_quadratic(d).len(), 1 + 2 * d + d * (d - 1) / 2);
        }
        assert!(ModelSpec::new(2, vec![vec![1]]).is_err());
        assert!(ModelSpec::new(2, vec![]).is_err());
    }

    #[test]
    fn efficiency_values() {
        assert_eq!(efficiency(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(efficiency(3.7, 3.7).unwrap(), 1.0);
        assert!(efficiency(1.0, 0.0).is_err());
        assert!(efficiency(1.0, -2.0).is_err());
    }

    #[test]
    fn criterion_strings() {
        for (text, dim) in [
            ("d:linear", 2),
            ("d:quadratic", 3),
            ("ard:z=1,lambda=1,J=1+2", 2),
            ("ard:z=2,lambda=3,J=2", 3),
            ("maxpro:z=2", 4),
        ] {
            let spec = CriterionSpec::parse(text, dim).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(CriterionSpec::parse(&spec.to_string(), dim).unwrap(), spec);
        }
        assert!(CriterionSpec::parse("ard:J=3", 2).is_err());
        assert!(CriterionSpec::parse("ard:z=0.5", 2).is_err());
        assert!(CriterionSpec::parse("maxpro:z=0", 2).is_err());
        assert!(CriterionSpec::parse("e:linear", 2).is_err());
        assert!(CriterionSpec::parse("ard:z", 2).is_err());
    }
}
