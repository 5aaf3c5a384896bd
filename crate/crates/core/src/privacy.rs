//! Privacy sets and permissible designs.
//!
//! Every point `x` owns a privacy set `P(x)` containing `x`. A design is
//! permissible when it has at most `N` points and no point lies inside the
//! privacy set of another. All membership tests run on level indices.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridPoint, GridSpace};

/// Per-point rejection cap for region and privacy rejection sampling.
pub const REJECTION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrivacyKind {
    /// `P(x) = {x}`.
    Classical,
    /// `P(x) = {y : x_i = y_i for some i}`.
    Latin,
    /// `P(x) = {y : |x_i - y_i| < steps for some i}`.
    Bridge { steps: u32 },
    /// One-dimensional separation `P(x) = {y : |x - y| < steps}`.
    Interval { steps: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivacySpec {
    kind: PrivacyKind,
}

impl PrivacySpec {
    pub fn new(kind: PrivacyKind, dim: usize) -> Result<Self> {
        match kind {
            PrivacyKind::Bridge { steps: 0 } | PrivacyKind::Interval { steps: 0 } => {
                Err(Error::Config("privacy separation must be at least one grid step".into()))
            }
            PrivacyKind::Interval { .. } if dim != 1 => Err(Error::Config(format!(
                "interval privacy needs a one-dimensional space, got d = {dim}"
            ))),
            _ => Ok(Self { kind }),
        }
    }

    pub fn classical() -> Self {
        Self {
            kind: PrivacyKind::Classical,
        }
    }

    pub fn latin() -> Self {
        Self {
            kind: PrivacyKind::Latin,
        }
    }

    pub fn bridge(steps: u32) -> Result<Self> {
        Self::new(PrivacyKind::Bridge { steps }, 1)
    }

    pub fn kind(&self) -> PrivacyKind {
        self.kind
    }

    /// Axis-wise exclusion radius for the kinds that block whole levels.
    pub(crate) fn axis_steps(&self) -> Option<u32> {
        match self.kind {
            PrivacyKind::Classical => None,
            PrivacyKind::Latin => Some(1),
            PrivacyKind::Bridge { steps } | PrivacyKind::Interval { steps } => Some(steps),
        }
    }

    /// Whether `y` lies in `P(x)`.
    pub fn in_privacy(&self, x: &GridPoint, y: &GridPoint) -> Result<bool> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                actual: y.dim(),
            });
        }
        if let PrivacyKind::Interval { .. } = self.kind {
            if x.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    actual: x.dim(),
                });
            }
        }
        Ok(self.collides(x, y))
    }

    pub(crate) fn collides(&self, x: &GridPoint, y: &GridPoint) -> bool {
        match self.axis_steps() {
            None => x == y,
            Some(s) => x
                .indices()
                .iter()
                .zip(y.indices())
                .any(|(&a, &b)| a.abs_diff(b) < s),
        }
    }
}

/// A set of distinct grid points with a run-count capacity `N`.
///
/// Points are kept in lexicographic order so equal sets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Design {
    points: Vec<GridPoint>,
    capacity: usize,
}

impl Design {
    pub fn new(capacity: usize) -> Self {
        Self {
            points: Vec::new(),
            capacity,
        }
    }

    /// Builds a design from points, dropping duplicates. Fails if more
    /// distinct points than `capacity` remain.
    pub fn from_points(points: impl IntoIterator<Item = GridPoint>, capacity: usize) -> Result<Self> {
        let mut points: Vec<GridPoint> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        if points.len() > capacity {
            return Err(Error::Config(format!(
                "{} distinct points exceed the capacity N = {capacity}",
                points.len()
            )));
        }
        Ok(Self { points, capacity })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.points.len() >= self.capacity
    }

    pub fn contains(&self, p: &GridPoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// Inserts `p`; returns false if it was already present. The capacity
    /// may be exceeded by one, which the mutation step relies on.
    pub fn insert(&mut self, p: GridPoint) -> bool {
        match self.points.binary_search(&p) {
            Ok(_) => false,
            Err(pos) => {
                self.points.insert(pos, p);
                true
            }
        }
    }

    pub fn remove(&mut self, p: &GridPoint) -> bool {
        match self.points.binary_search(p) {
            Ok(pos) => {
                self.points.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter()
    }

    /// Real coordinates of every point, in design order.
    pub fn coords(&self, space: &GridSpace) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| space.coords_unchecked(p)).collect()
    }

    pub fn is_permissible(&self, spec: &PrivacySpec) -> bool {
        self.points.len() <= self.capacity && self.violations(spec).is_empty()
    }

    /// Index pairs `(i, j)`, `i < j`, whose points collide.
    pub fn violations(&self, spec: &PrivacySpec) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, x) in self.points.iter().enumerate() {
            for (j, y) in self.points.iter().enumerate().skip(i + 1) {
                if spec.collides(x, y) || spec.collides(y, x) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Per-axis blocking counters for the level-blocking privacy kinds.
///
/// `count(axis, level)` is the number of design points within the exclusion
/// radius of `level` on `axis`; a level is unblocked when its count is zero.
#[derive(Debug, Clone)]
pub struct AvailabilityMask {
    dim: usize,
    levels: u32,
    steps: u32,
    counts: Vec<u32>,
}

impl AvailabilityMask {
    /// Returns `None` for the classical kind, which has no axis structure.
    pub fn new(space: &GridSpace, spec: &PrivacySpec) -> Option<Self> {
        let steps = spec.axis_steps()?;
        Some(Self {
            dim: space.dim(),
            levels: space.levels(),
            steps,
            counts: vec![0; space.dim() * space.levels() as usize],
        })
    }

    pub fn for_design(space: &GridSpace, spec: &PrivacySpec, design: &Design) -> Option<Self> {
        let mut mask = Self::new(space, spec)?;
        for p in design.iter() {
            mask.add(p);
        }
        Some(mask)
    }

    fn span(&self, center: u32) -> std::ops::Range<u32> {
        let lo = center.saturating_sub(self.steps - 1);
        let hi = (center + self.steps).min(self.levels);
        lo..hi
    }

    pub fn add(&mut self, p: &GridPoint) {
        for (axis, &c) in p.indices().iter().enumerate() {
            let base = axis * self.levels as usize;
            for l in self.span(c) {
                self.counts[base + l as usize] += 1;
            }
        }
    }

    pub fn remove(&mut self, p: &GridPoint) {
        for (axis, &c) in p.indices().iter().enumerate() {
            let base = axis * self.levels as usize;
            for l in self.span(c) {
                let slot = &mut self.counts[base + l as usize];
                debug_assert!(*slot > 0, "removing a point that was never added");
                *slot -= 1;
            }
        }
    }

    pub fn count(&self, axis: usize, level: u32) -> u32 {
        self.counts[axis * self.levels as usize + level as usize]
    }

    pub fn is_blocked(&self, axis: usize, level: u32) -> bool {
        self.count(axis, level) > 0
    }

    /// Whether `p` lies outside the privacy set of every recorded point.
    pub fn is_free(&self, p: &GridPoint) -> bool {
        p.indices()
            .iter()
            .enumerate()
            .all(|(axis, &l)| !self.is_blocked(axis, l))
    }

    pub fn free_levels(&self, axis: usize) -> Vec<u32> {
        (0..self.levels).filter(|&l| !self.is_blocked(axis, l)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free points of the product `X \ P(xi)`, ignoring region constraints.
    pub fn free_count(&self) -> u128 {
        (0..self.dim)
            .map(|a| self.free_levels(a).len() as u128)
            .product()
    }
}

/// Draws from `X \ P(design)` restricted to the region.
///
/// Mask kinds build each point coordinate by coordinate from the unblocked
/// levels, which is exactly uniform on the complement when no linear
/// constraints are present. With constraints the draw is rejected until it
/// lands inside the region. The classical kind draws uniform grid indices and
/// rejects points already in the design or outside the region.
pub fn sample_outside_privacy<R: Rng + ?Sized>(
    space: &GridSpace,
    design: &Design,
    spec: &PrivacySpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<GridPoint>> {
    let sampler = FreeSampler::new(space, spec, design);
    let mut rejections = 0;
    (0..count)
        .map(|_| sampler.sample(space, |p| design.contains(p), rng, &mut rejections))
        .collect()
}

/// Reusable sampler over the complement of a design's privacy set.
pub(crate) enum FreeSampler {
    Mask(Vec<Vec<u32>>),
    Classical,
}

impl FreeSampler {
    pub(crate) fn new(space: &GridSpace, spec: &PrivacySpec, design: &Design) -> Self {
        match AvailabilityMask::for_design(space, spec, design) {
            Some(mask) => Self::from_mask(&mask),
            None => Self::Classical,
        }
    }

    pub(crate) fn from_mask(mask: &AvailabilityMask) -> Self {
        Self::Mask((0..mask.dim()).map(|a| mask.free_levels(a)).collect())
    }

    pub(crate) fn exhausted_axis(&self) -> Option<usize> {
        match self {
            Self::Mask(free) => free.iter().position(|f| f.is_empty()),
            Self::Classical => None,
        }
    }

    /// One draw; `taken` reports points already in the design (classical kind).
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        space: &GridSpace,
        taken: impl Fn(&GridPoint) -> bool,
        rng: &mut R,
        rejections: &mut u64,
    ) -> Result<GridPoint> {
        if let Some(axis) = self.exhausted_axis() {
            return Err(Error::AvailabilityExhausted { axis });
        }
        for _ in 0..REJECTION_CAP {
            let p = match self {
                Self::Mask(free) => GridPoint::new(
                    free.iter()
                        .map(|levels| levels[rng.random_range(0..levels.len())])
                        .collect(),
                ),
                Self::Classical => {
                    let p = random_grid_point(space, rng);
                    if taken(&p) {
                        *rejections += 1;
                        continue;
                    }
                    p
                }
            };
            if space.in_region(&p) {
                return Ok(p);
            }
            *rejections += 1;
        }
        Err(Error::RejectionBudgetExceeded {
            attempts: REJECTION_CAP,
        })
    }

    /// Every free in-region point, in lexicographic order.
    pub(crate) fn enumerate(
        &self,
        space: &GridSpace,
        taken: impl Fn(&GridPoint) -> bool,
    ) -> Vec<GridPoint> {
        let axes: Vec<Vec<u32>> = match self {
            Self::Mask(free) => free.clone(),
            Self::Classical => vec![(0..space.levels()).collect(); space.dim()],
        };
        let mut out = Vec::new();
        for_each_product(&axes, |p| {
            if space.in_region(p) && !(matches!(self, Self::Classical) && taken(p)) {
                out.push(p.clone());
            }
        });
        out
    }

    /// Number of product points before region filtering.
    pub(crate) fn product_size(&self, space: &GridSpace) -> Option<u64> {
        match self {
            Self::Mask(free) => free
                .iter()
                .try_fold(1u64, |acc, f| acc.checked_mul(f.len() as u64)),
            Self::Classical => space.grid_size(),
        }
    }
}

pub(crate) fn random_grid_point<R: Rng + ?Sized>(space: &GridSpace, rng: &mut R) -> GridPoint {
    GridPoint::new(
        (0..space.dim())
            .map(|_| rng.random_range(0..space.levels()))
            .collect(),
    )
}

/// Visits the Cartesian product of per-axis level lists in lexicographic order.
pub(crate) fn for_each_product(axes: &[Vec<u32>], mut f: impl FnMut(&GridPoint)) {
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let mut cursor = vec![0usize; axes.len()];
    let mut p = GridPoint::new(axes.iter().map(|a| a[0]).collect());
    loop {
        f(&p);
        let mut axis = axes.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            cursor[axis] += 1;
            if cursor[axis] < axes[axis].len() {
                p.set(axis, axes[axis][cursor[axis]]);
                break;
            }
            cursor[axis] = 0;
            p.set(axis, axes[axis][0]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LinearConstraints;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gp(v: &[u32]) -> GridPoint {
        GridPoint::new(v.to_vec())
    }

    #[test]
    fn membership_examples() {
        let b2 = PrivacySpec::bridge(2).unwrap();
        assert!(b2.in_privacy(&gp(&[0, 0]), &gp(&[1, 5])).unwrap());
        assert!(!b2.in_privacy(&gp(&[0, 0]), &gp(&[2, 2])).unwrap());
        let c = PrivacySpec::classical();
        assert!(c.in_privacy(&gp(&[3]), &gp(&[3])).unwrap());
        assert!(!c.in_privacy(&gp(&[3]), &gp(&[4])).unwrap());
        assert!(matches!(
            c.in_privacy(&gp(&[3]), &gp(&[3, 1])),
            Err(Error::DimensionMismatch { .. })
        ));
        let lhd = PrivacySpec::latin();
        assert!(lhd.in_privacy(&gp(&[1, 2]), &gp(&[0, 2])).unwrap());
        assert!(!lhd.in_privacy(&gp(&[1, 2]), &gp(&[0, 3])).unwrap());
    }

    #[test]
    fn interval_requires_one_dimension() {
        assert!(PrivacySpec::new(PrivacyKind::Interval { steps: 2 }, 2).is_err());
        let spec = PrivacySpec::new(PrivacyKind::Interval { steps: 2 }, 1).unwrap();
        assert!(spec.in_privacy(&gp(&[3]), &gp(&[4])).unwrap());
        assert!(!spec.in_privacy(&gp(&[3]), &gp(&[5])).unwrap());
        assert!(PrivacySpec::bridge(0).is_err());
    }

    #[test]
    fn permissibility_examples() {
        let empty = Design::new(3);
        assert!(empty.is_permissible(&PrivacySpec::bridge(1).unwrap()));

        let d = Design::from_points([gp(&[0]), gp(&[1])], 2).unwrap();
        assert!(!d.is_permissible(&PrivacySpec::bridge(2).unwrap()));
        assert!(d.is_permissible(&PrivacySpec::bridge(1).unwrap()));

        let lhd = Design::from_points([gp(&[0, 1]), gp(&[1, 2]), gp(&[2, 0])], 3).unwrap();
        assert!(lhd.is_permissible(&PrivacySpec::bridge(1).unwrap()));

        let dup = Design::from_points([gp(&[0]), gp(&[0])], 2).unwrap();
        assert_eq!(dup.len(), 1);
        assert!(Design::from_points([gp(&[0]), gp(&[1]), gp(&[2])], 2).is_err());
    }

    #[test]
    fn mask_sampling() {
        let space = GridSpace::new(1, 3).unwrap();
        let design = Design::from_points([gp(&[1])], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b1 = PrivacySpec::bridge(1).unwrap();
        let got = sample_outside_privacy(&space, &design, &b1, 200, &mut rng).unwrap();
        assert!(got.iter().all(|p| p == &gp(&[0]) || p == &gp(&[2])));
        assert!(got.contains(&gp(&[0])) && got.contains(&gp(&[2])));

        let b2 = PrivacySpec::bridge(2).unwrap();
        assert_eq!(
            sample_outside_privacy(&space, &design, &b2, 1, &mut rng),
            Err(Error::AvailabilityExhausted { axis: 0 })
        );
    }

    #[test]
    fn constrained_sampling_matches_brute_force() {
        let c = LinearConstraints::new(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        let space = GridSpace::new(2, 5).unwrap().with_constraints(c).unwrap();
        let spec = PrivacySpec::bridge(1).unwrap();
        let design = Design::from_points([gp(&[0, 0])], 4).unwrap();
        let mut allowed = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let p = gp(&[i, j]);
                let x = space.coord_of(&p).unwrap();
                if x[0] + x[1] <= 0.0 && !spec.collides(&gp(&[0, 0]), &p) {
                    allowed.push(p);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let got = sample_outside_privacy(&space, &design, &spec, 500, &mut rng).unwrap();
        assert!(got.iter().all(|p| allowed.contains(p)));
        assert!(allowed.iter().all(|p| got.contains(p)));
    }

    #[test]
    fn rejection_budget() {
        // Only the corner (-1, -1) satisfies x1 + x2 <= -2 and it is blocked.
        let c = LinearConstraints::new(vec![vec![1.0, 1.0]], vec![-2.0]).unwrap();
        let space = GridSpace::new(2, 5).unwrap().with_constraints(c).unwrap();
        let design = Design::from_points([gp(&[0, 0])], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = PrivacySpec::bridge(1).unwrap();
        assert_eq!(
            sample_outside_privacy(&space, &design, &spec, 1, &mut rng),
            Err(Error::RejectionBudgetExceeded {
                attempts: REJECTION_CAP
            })
        );
        assert_eq!(
            sample_outside_privacy(&space, &design, &PrivacySpec::classical(), 1, &mut rng),
            Err(Error::RejectionBudgetExceeded {
                attempts: REJECTION_CAP
            })
        );
    }

    #[test]
    fn classical_sampling_avoids_design() {
        let space = GridSpace::new(1, 3).unwrap();
        let design = Design::from_points([gp(&[0]), gp(&[2])], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let got =
            sample_outside_privacy(&space, &design, &PrivacySpec::classical(), 50, &mut rng).unwrap();
        assert!(got.iter().all(|p| p == &gp(&[1])));
    }

    #[test]
    fn product_enumeration_order() {
        let mut seen = Vec::new();
        for_each_product(&[vec![0, 2], vec![1, 3, 4]], |p| seen.push(p.clone()));
        assert_eq!(
            seen,
            vec![
                gp(&[0, 1]),
                gp(&[0, 3]),
                gp(&[0, 4]),
                gp(&[2, 1]),
                gp(&[2, 3]),
                gp(&[2, 4])
            ]
        );
    }

    #[test]
    fn mask_counts_track_add_and_remove() {
        let space = GridSpace::new(2, 6).unwrap();
        let spec = PrivacySpec::bridge(2).unwrap();
        let mut mask = AvailabilityMask::new(&space, &spec).unwrap();
        mask.add(&gp(&[0, 5]));
        mask.add(&gp(&[1, 3]));
        assert_eq!(mask.free_levels(0), vec![3, 4, 5]);
        assert_eq!(mask.free_levels(1), vec![0, 1]);
        mask.remove(&gp(&[1, 3]));
        assert_eq!(mask.free_levels(0), vec![2, 3, 4, 5]);
        assert_eq!(mask.free_levels(1), vec![0, 1, 2, 3]);
        assert_eq!(mask.free_count(), 16);
    }
}
