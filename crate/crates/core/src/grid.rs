//! Discretized design space on `[-1, 1]^d`.
//!
//! Points are addressed by integer level indices. Axis level `i` of an
//! `L`-level grid sits at `-1 + 2i/(L-1)`. The full grid is never
//! materialized; `L^d` quickly gets out of hand.

use std::fmt;

use crate::error::{Error, Result};

const DELTA_RTOL: f64 = 1e-9;

/// Linear region constraints `A x <= b` in real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearConstraints {
    pub fn new(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(Error::Config(format!(
                "constraint matrix has {} rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Config("constraint rows differ in length".into()));
            }
        }
        if rows.iter().flatten().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::Config("constraint coefficients must be finite".into()));
        }
        Ok(Self { rows, rhs })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Exact closed half-space test; boundary points are inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, &b)| {
            let lhs: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
            lhs <= b
        })
    }
}

/// Integer-indexed grid point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridPoint(Vec<u32>);

impl GridPoint {
    pub fn new(indices: Vec<u32>) -> Self {
        Self(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn set(&mut self, axis: usize, level: u32) {
        self.0[axis] = level;
    }
}

impl From<Vec<u32>> for GridPoint {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    dim: usize,
    levels: u32,
    constraints: Option<LinearConstraints>,
}

impl GridSpace {
    pub fn new(dim: usize, levels: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if levels < 2 {
            return Err(Error::Config("a grid needs at least 2 levels per axis".into()));
        }
        Ok(Self {
            dim,
            levels,
            constraints: None,
        })
    }

    /// Grid with `L = floor(2k/delta) + 1` levels.
    pub fn from_density_rule(dim: usize, k: u32, delta: f64) -> Result<Self> {
        Self::new(dim, levels_for_delta(k, delta)?)
    }

    pub fn with_constraints(mut self, constraints: LinearConstraints) -> Result<Self> {
        if let Some(row) = constraints.rows().first() {
            if row.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: row.len(),
                });
            }
        }
        self.constraints = (!constraints.is_empty()).then_some(constraints);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn constraints(&self) -> Option<&LinearConstraints> {
        self.constraints.as_ref()
    }

    /// `L^d`, or `None` on overflow.
    pub fn grid_size(&self) -> Option<u64> {
        u64::from(self.levels).checked_pow(u32::try_from(self.dim).ok()?)
    }

    pub fn spacing(&self) -> f64 {
        2.0 / f64::from(self.levels - 1)
    }

    /// Real coordinate of a level index. Exactly antisymmetric:
    /// `level_coord(i) == -level_coord(L-1-i)`.
    pub fn level_coord(&self, level: u32) -> f64 {
        let top = i64::from(self.levels - 1);
        (2 * i64::from(level) - top) as f64 / top as f64
    }

    pub fn check(&self, p: &GridPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: p.dim(),
            });
        }
        for (axis, &index) in p.indices().iter().enumerate() {
            if index >= self.levels {
                return Err(Error::IndexOutOfRange {
                    axis,
                    index,
                    levels: self.levels,
                });
            }
        }
        Ok(())
    }

    pub fn coord_of(&self, p: &GridPoint) -> Result<Vec<f64>> {
        self.check(p)?;
        Ok(self.coords_unchecked(p))
    }

    pub(crate) fn coords_unchecked(&self, p: &GridPoint) -> Vec<f64> {
        p.indices().iter().map(|&i| self.level_coord(i)).collect()
    }

    pub fn in_region(&self, p: &GridPoint) -> bool {
        match &self.constraints {
            None => true,
            Some(c) => c.contains(&self.coords_unchecked(p)),
        }
    }

    /// Number of grid steps `s` with `delta = 2s/(L-1)`.
    pub fn delta_to_steps(&self, delta: f64) -> Result<u32> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::Config(format!("delta must be positive, got {delta}")));
        }
        let spacing = self.spacing();
        let ratio = delta / spacing;
        let nearest = ratio.round();
        if nearest >= 1.0 && (ratio - nearest).abs() <= DELTA_RTOL * nearest {
            return Ok(nearest as u32);
        }
        let below = ratio.floor().max(1.0);
        let above = if ratio.ceil() <= below { below + 1.0 } else { ratio.ceil() };
        Err(Error::InvalidDelta {
            delta,
            spacing,
            below: below * spacing,
            above: above * spacing,
        })
    }

    /// Snaps a real coordinate to its level index, reporting the snap distance.
    pub fn nearest_level(&self, x: f64) -> (u32, f64) {
        let top = f64::from(self.levels - 1);
        let raw = ((x + 1.0) * top / 2.0).round().clamp(0.0, top) as u32;
        (raw, (self.level_coord(raw) - x).abs())
    }
}

/// Grid density rule `L = floor(2k/delta) + 1`.
pub fn levels_for_delta(k: u32, delta: f64) -> Result<u32> {
    if k == 0 {
        return Err(Error::Config("grid_k must be at least 1".into()));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    let raw = 2.0 * f64::from(k) / delta;
    // 2/(2/119) evaluates to 118.99999999999999 in floating point.
    let snapped = if (raw - raw.round()).abs() <= DELTA_RTOL * raw {
        raw.round()
    } else {
        raw.floor()
    };
    if snapped + 1.0 > f64::from(u32::MAX) {
        return Err(Error::Config(format!("delta {delta} gives too many levels")));
    }
    Ok(snapped as u32 + 1)
}
