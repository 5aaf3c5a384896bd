use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::privacy::Design;

/// Five-number summary of probe-to-nearest-design-point distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    pub min: f64,
    pub lower_quartile: f64,
    pub median: f64,
    pub upper_quartile: f64,
    pub max: f64,
    /// Raw distances in probe order.
    pub distances: Vec<f64>,
}

/// Euclidean distance from each probe to its nearest design point.
pub fn nearest_distance_stats(
    design: &Design,
    space: &GridSpace,
    probes: &[Vec<f64>],
) -> Result<DistanceSummary> {
    if design.is_empty() {
        return Err(Error::Domain("distance statistics need a non-empty design".into()));
    }
    if probes.is_empty() {
        return Err(Error::Domain("distance statistics need at least one probe".into()));
    }
    let pts = design.coords(space);
    let mut distances = Vec::with_capacity(probes.len());
    for probe in probes {
        if probe.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: probe.len(),
            });
        }
        let best = pts
            .iter()
            .map(|p| p.iter().zip(probe).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        distances.push(best.sqrt());
    }
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(DistanceSummary {
        min: sorted[0],
        lower_quartile: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        upper_quartile: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        distances,
    })
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// The `2^d` vertices of `[-1, 1]^d`.
pub fn vertex_probes(dim: usize) -> Vec<Vec<f64>> {
    (0..1u64 << dim)
        .map(|mask| {
            (0..dim)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// `count` points uniform on `[-1, 1]^d`.
pub fn uniform_probes<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}
