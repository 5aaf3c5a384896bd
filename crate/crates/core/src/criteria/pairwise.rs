//! Pairwise distance criteria: ARD over coordinate-subspace projections and MaxPro.

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::privacy::Design;

/// Parameters of the average reciprocal distance criterion.
///
/// `dims` holds the projection dimensions `J` (1-based, sorted, unique). For
/// each `j` in `J` every one of the `C(d, j)` coordinate subspaces is visited.
#[derive(Debug, Clone, PartialEq)]
pub struct ArdParams {
    z: f64,
    lambda: f64,
    dims: Vec<usize>,
}

impl ArdParams {
    pub fn new(z: f64, lambda: f64, mut dims: Vec<usize>) -> Result<Self> {
        if !z.is_finite() || z < 1.0 {
            return Err(Error::Config(format!("ARD z must be >= 1, got {z}")));
        }
        if !lambda.is_finite() || lambda < 1.0 {
            return Err(Error::Config(format!("ARD lambda must be >= 1, got {lambda}")));
        }
        dims.sort_unstable();
        dims.dedup();
        if dims.is_empty() || dims[0] == 0 {
            return Err(Error::Config(
                "ARD J must be a non-empty set of positive dimensions".into(),
            ));
        }
        Ok(Self { z, lambda, dims })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        match self.dims.last() {
            Some(&j) if j > dim => Err(Error::Config(format!(
                "ARD dimension {j} exceeds the space dimension {dim}"
            ))),
            _ => Ok(()),
        }
    }

    /// All coordinate subspaces, 0-based axes, with their prefactor `j^(1/z)`.
    pub(crate) fn subspaces(&self, dim: usize) -> Vec<Subspace> {
        let mut out = Vec::new();
        for &j in &self.dims {
            let prefactor = (j as f64).powf(1.0 / self.z);
            for axes in combinations(dim, j) {
                out.push(Subspace { axes, prefactor });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Subspace {
    pub axes: Vec<usize>,
    pub prefactor: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shared pair-term evaluator for the incremental scorer and the plain evaluators.
#[derive(Debug, Clone)]
pub(crate) enum PairKernel {
    Ard {
        subspaces: Vec<Subspace>,
        z: f64,
        lambda: f64,
        /// `C(N, 2) * sum_j C(d, j)`.
        norm: f64,
    },
    MaxPro {
        z: f64,
    },
}

impl PairKernel {
    pub(crate) fn ard(params: &ArdParams, dim: usize, capacity: usize) -> Self {
        let subspaces = params.subspaces(dim);
        let per_pair: f64 = params.dims.iter().map(|&j| binomial(dim, j)).sum();
        Self::Ard {
            subspaces,
            z: params.z,
            lambda: params.lambda,
            norm: binomial(capacity, 2) * per_pair,
        }
    }

    /// Contribution of one unordered pair; `+inf` on a coincident projection.
    pub(crate) fn term(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::Ard {
                subspaces,
                z,
                lambda,
                ..
            } => subspaces
                .iter()
                .map(|s| {
                    let rho = if *z == 1.0 {
                        s.axes.iter().map(|&i| (a[i] - b[i]).abs()).sum::<f64>()
                    } else {
                        s.axes
                            .iter()
                            .map(|&i| (a[i] - b[i]).abs().powf(*z))
                            .sum::<f64>()
                            .powf(1.0 / z)
                    };
                    let r = s.prefactor / rho;
                    if *lambda == 1.0 {
                        r
                    } else {
                        r.powf(*lambda)
                    }
                })
                .sum(),
            Self::MaxPro { z } => {
                let prod: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).product();
                if *z == 2.0 {
                    1.0 / (prod * prod)
                } else {
                    prod.powf(-z)
                }
            }
        }
    }

    /// Maximization objective from the finite pair sum and the number of
    /// pairs with an infinite term.
    pub(crate) fn objective(&self, total: f64, infinite: u64) -> f64 {
        match self {
            Self::Ard { norm, lambda, .. } => {
                if infinite > 0 {
                    0.0
                } else if total == 0.0 {
                    f64::INFINITY
                } else {
                    (total / norm).powf(-1.0 / lambda)
                }
            }
            Self::MaxPro { .. } => {
                if infinite > 0 {
                    f64::NEG_INFINITY
                } else {
                    -total
                }
            }
        }
    }

    /// Locates the first coincident projection of a pair, for error reports.
    fn degenerate_axes(&self, a: &[f64], b: &[f64]) -> Vec<usize> {
        match self {
            Self::Ard { subspaces, .. } => subspaces
                .iter()
                .find(|s| s.axes.iter().all(|&i| a[i] == b[i]))
                .map(|s| s.axes.iter().map(|i| i + 1).collect())
                .unwrap_or_default(),
            Self::MaxPro { .. } => a
                .iter()
                .zip(b)
                .position(|(x, y)| x == y)
                .map(|i| vec![i + 1])
                .unwrap_or_default(),
        }
    }
}

fn pair_sum(kernel: &PairKernel, design: &Design, space: &GridSpace) -> Result<f64> {
    if design.len() < 2 {
        return Err(Error::Domain(format!(
            "pairwise criteria need at least two design points, got {}",
            design.len()
        )));
    }
    let coords = design.coords(space);
    let mut total = 0.0;
    for (i, a) in coords.iter().enumerate() {
        for (j, b) in coords.iter().enumerate().skip(i + 1) {
            let t = kernel.term(a, b);
            if !t.is_finite() {
                return Err(Error::DegenerateProjection {
                    subspace: kernel.degenerate_axes(a, b),
                    pair: (i, j),
                });
            }
            total += t;
        }
    }
    Ok(total)
}

/// The normalized mean of reciprocal projected distances raised to `lambda`;
/// smaller is better. `Phi_ARD` is this value to the power `-1/lambda`.
pub fn ard_mean(params: &ArdParams, design: &Design, space: &GridSpace) -> Result<f64> {
    params.validate(space.dim())?;
    let kernel = PairKernel::ard(params, space.dim(), design.capacity());
    let total = pair_sum(&kernel, design, space)?;
    match kernel {
        PairKernel::Ard { norm, .. } => Ok(total / norm),
        PairKernel::MaxPro { .. } => unreachable!(),
    }
}

/// `Phi_ARD`, larger is better.
pub fn eval_ard(params: &ArdParams, design: &Design, space: &GridSpace) -> Result<f64> {
    Ok(ard_mean(params, design, space)?.powf(-1.0 / params.lambda))
}

/// MaxPro sum over unordered pairs of `1 / prod_i |x_i - y_i|^z`; a cost.
pub fn eval_maxpro(z: f64, design: &Design, space: &GridSpace) -> Result<f64> {
    pair_sum(&PairKernel::MaxPro { z }, design, space)
}
