//! Brute-force references for small instances.
//!
//! Permissible designs are enumerated by depth-first search over in-region
//! grid points in lexicographic order, pruning with the availability mask.

use crate::criteria::CriterionSpec;
use crate::error::{Error, Result};
use crate::grid::{GridPoint, GridSpace};
use crate::privacy::{for_each_product, AvailabilityMask, Design, PrivacySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit {
    pub max_designs: u64,
}

/// Largest grid whose in-region points are listed explicitly.
const POINT_CAP: u64 = 1 << 22;

impl Default for EnumerationLimit {
    fn default() -> Self {
        Self {
            max_designs: 10_000_000,
        }
    }
}

/// Iterator over every permissible design of exactly `runs` points.
pub struct PermissibleDesigns {
    runs: usize,
    limit: EnumerationLimit,
    points: Vec<GridPoint>,
    mask: Option<AvailabilityMask>,
    /// Indices into `points` of the current partial design.
    stack: Vec<usize>,
    /// Next index to try at the current depth.
    next: usize,
    yielded: u64,
    pending: Option<Error>,
    done: bool,
}

/// Enumerates the permissible size-`runs` designs, each once, in
/// lexicographic order. Fails with `EnumerationTooLarge` once more than
/// `limit.max_designs` designs have been produced.
pub fn enumerate_permissible(
    space: &GridSpace,
    spec: &PrivacySpec,
    runs: usize,
    limit: EnumerationLimit,
) -> PermissibleDesigns {
    let mut points = Vec::new();
    let mut pending = None;
    match space.grid_size() {
        Some(n) if n <= POINT_CAP => {
            let axes = vec![(0..space.levels()).collect::<Vec<u32>>(); space.dim()];
            for_each_product(&axes, |p| {
                if space.in_region(p) {
                    points.push(p.clone());
                }
            });
        }
        _ => pending = Some(Error::EnumerationTooLarge { limit: limit.max_designs }),
    }
    PermissibleDesigns {
        runs,
        limit,
        points,
        mask: AvailabilityMask::new(space, spec),
        stack: Vec::new(),
        next: 0,
        yielded: 0,
        pending,
        done: false,
    }
}

impl PermissibleDesigns {
    fn admissible(&self, k: usize) -> bool {
        match &self.mask {
            Some(mask) => mask.is_free(&self.points[k]),
            // Candidates only move forward, so a classical point never repeats.
            None => true,
        }
    }

    fn push(&mut self, k: usize) {
        if let Some(mask) = &mut self.mask {
            mask.add(&self.points[k]);
        }
        self.stack.push(k);
        self.next = k + 1;
    }

    fn pop(&mut self) -> Option<usize> {
        let k = self.stack.pop()?;
        if let Some(mask) = &mut self.mask {
            mask.remove(&self.points[k]);
        }
        self.next = k + 1;
        Some(k)
    }

    fn current(&self) -> Design {
        Design::from_points(self.stack.iter().map(|&k| self.points[k].clone()), self.runs)
            .expect("enumerated points are distinct")
    }
}

impl Iterator for PermissibleDesigns {
    type Item = Result<Design>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if let Some(e) = self.pending.take() {
            self.done = true;
            return Some(Err(e));
        }
        if self.runs == 0 {
            self.done = true;
            return Some(Ok(Design::new(0)));
        }
        loop {
            if self.stack.len() == self.runs {
                let design = self.current();
                self.pop();
                self.yielded += 1;
                if self.yielded > self.limit.max_designs {
                    self.done = true;
                    return Some(Err(Error::EnumerationTooLarge {
                        limit: self.limit.max_designs,
                    }));
                }
                return Some(Ok(design));
            }
            // Not enough points left to complete the design from here.
            let need = self.runs - self.stack.len();
            let mut advanced = false;
            while self.next + need <= self.points.len() {
                let k = self.next;
                self.next += 1;
                if self.admissible(k) {
                    self.push(k);
                    advanced = true;
                    break;
                }
            }
            if !advanced && self.pop().is_none() {
                self.done = true;
                return None;
            }
        }
    }
}

/// The permissible design maximizing the criterion's objective; the
/// lexicographically first one on ties.
pub fn brute_best(
    space: &GridSpace,
    spec: &PrivacySpec,
    runs: usize,
    criterion: &CriterionSpec,
    limit: EnumerationLimit,
) -> Result<(Design, f64)> {
    criterion.validate(space.dim())?;
    let mut best: Option<(Design, f64)> = None;
    for design in enumerate_permissible(space, spec, runs, limit) {
        let design = design?;
        let value = criterion.objective(&design, space);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((design, value));
        }
    }
    best.ok_or(Error::NoFeasibleDesign { runs })
}
