//! The privacy sets search: greedy augmentation, mutation through a
//! temporary privacy violation, and the first-improvement outer loop.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::scorer::Scorer;
use crate::criteria::CriterionSpec;
use crate::error::{Error, Result};
use crate::grid::{GridPoint, GridSpace};
use crate::privacy::{random_grid_point, AvailabilityMask, Design, FreeSampler, PrivacySpec, REJECTION_CAP};

/// Largest product of free levels enumerated when rejection sampling stalls.
const ENUMERATION_FALLBACK_CAP: u64 = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PsaConfig {
    /// Run count `N`.
    pub runs: usize,
    pub privacy: PrivacySpec,
    pub criterion: CriterionSpec,
    pub space: GridSpace,
    /// Random free points drawn per greedy augmentation.
    pub blind_samples: usize,
    /// Size of the mutation candidate set.
    pub candidate_count: usize,
    pub tuning_passes: usize,
    /// Enumerate the free set exhaustively when `L^d` is at most this.
    pub exhaustive_threshold: u64,
    pub time_budget: Option<Duration>,
    pub restarts: usize,
    pub seed: u64,
}

impl PsaConfig {
    pub fn new(space: GridSpace, privacy: PrivacySpec, criterion: CriterionSpec, runs: usize) -> Self {
        Self {
            runs,
            privacy,
            criterion,
            space,
            blind_samples: 64,
            candidate_count: 50,
            tuning_passes: 2,
            exhaustive_threshold: 20_000,
            time_budget: None,
            restarts: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.blind_samples == 0 {
            return Err(Error::Config("blind_samples must be at least 1".into()));
        }
        if self.candidate_count == 0 {
            return Err(Error::Config("candidate_count must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if let crate::privacy::PrivacyKind::Interval { .. } = self.privacy.kind() {
            if self.space.dim() != 1 {
                return Err(Error::Config("interval privacy needs d = 1".into()));
            }
        }
        self.criterion.validate(self.space.dim())
    }

    /// Independent stream for restart `index`.
    pub fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub mutations_attempted: u64,
    pub mutations_accepted: u64,
    /// Mutations whose greedy refill could not reach `N` points.
    pub mutations_failed: u64,
    pub greedy_augmentations: u64,
    pub rejections: u64,
}

impl Counters {
    fn absorb(&mut self, other: &Counters) {
        self.mutations_attempted += other.mutations_attempted;
        self.mutations_accepted += other.mutations_accepted;
        self.mutations_failed += other.mutations_failed;
        self.greedy_augmentations += other.greedy_augmentations;
        self.rejections += other.rejections;
    }
}

/// One improvement of a restart's current objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub elapsed: f64,
    pub value: f64,
    pub restart: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartMarker {
    pub restart: usize,
    pub elapsed: f64,
    pub value: f64,
    /// False when the restart was cut by the time budget.
    pub converged: bool,
}

/// A resampled trace row: best objective found by `elapsed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub elapsed: f64,
    pub best_value: f64,
    pub restart: bool,
}

/// History of a run. Values are the maximized objective (MaxPro negated).
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub samples: Vec<TraceSample>,
    pub restarts: Vec<RestartMarker>,
    pub counters: Counters,
    pub final_design: Design,
    pub final_value: f64,
}

impl RunTrace {
    /// Best-so-far value on the grid `interval, 2*interval, ...` up to
    /// `horizon`, flagging rows in which a restart converged. Rows before the
    /// first design exists are skipped. A zero horizon yields one row at the
    /// first sample.
    pub fn resample(&self, interval: Duration, horizon: Duration) -> Vec<TraceRow> {
        let Some(first) = self.samples.first() else {
            return Vec::new();
        };
        if horizon.is_zero() || interval.is_zero() {
            return vec![TraceRow {
                elapsed: first.elapsed,
                best_value: first.value,
                restart: false,
            }];
        }
        let step = interval.as_secs_f64();
        let end = horizon.as_secs_f64();
        let ticks = (end / step + 1e-9).floor() as usize;
        let mut rows = Vec::with_capacity(ticks);
        let mut best = f64::NEG_INFINITY;
        let mut si = 0;
        let mut mi = 0;
        for k in 1..=ticks {
            // Rounded so tick times print cleanly.
            let t = (k as f64 * step * 1e9).round() / 1e9;
            while si < self.samples.len() && self.samples[si].elapsed <= t {
                best = best.max(self.samples[si].value);
                si += 1;
            }
            let mut restart = false;
            while mi < self.restarts.len() && self.restarts[mi].elapsed <= t {
                restart |= self.restarts[mi].converged;
                mi += 1;
            }
            if best > f64::NEG_INFINITY {
                rows.push(TraceRow {
                    elapsed: t,
                    best_value: best,
                    restart,
                });
            }
        }
        rows
    }
}

/// Mutable search state: the design as an unordered working set kept in
/// lockstep with the incremental scorer and the availability mask.
#[derive(Clone)]
struct Working<'a> {
    cfg: &'a PsaConfig,
    pts: Vec<GridPoint>,
    scorer: Scorer,
    mask: Option<AvailabilityMask>,
}

impl<'a> Working<'a> {
    fn new(cfg: &'a PsaConfig, design: &Design) -> Self {
        let mut scorer = Scorer::new(&cfg.criterion, cfg.space.dim(), cfg.runs);
        scorer.rebuild(&design.coords(&cfg.space));
        Self {
            cfg,
            pts: design.points().to_vec(),
            scorer,
            mask: AvailabilityMask::for_design(&cfg.space, &cfg.privacy, design),
        }
    }

    fn space(&self) -> &GridSpace {
        &self.cfg.space
    }

    fn design(&self) -> Design {
        Design::from_points(self.pts.iter().cloned(), self.cfg.runs)
            .expect("working set holds at most N distinct points")
    }

    fn coords(&self, p: &GridPoint) -> Vec<f64> {
        self.space().coords_unchecked(p)
    }

    fn push(&mut self, p: GridPoint) {
        if let Some(mask) = &mut self.mask {
            mask.add(&p);
        }
        let x = self.coords(&p);
        self.scorer.push(x);
        self.pts.push(p);
    }

    fn swap_remove(&mut self, i: usize) -> GridPoint {
        let p = self.pts.swap_remove(i);
        if let Some(mask) = &mut self.mask {
            mask.remove(&p);
        }
        self.scorer.swap_remove(i);
        p
    }

    fn replace(&mut self, i: usize, p: GridPoint) {
        if let Some(mask) = &mut self.mask {
            mask.remove(&self.pts[i]);
            mask.add(&p);
        }
        let x = self.coords(&p);
        self.scorer.replace(i, x);
        self.pts[i] = p;
    }

    fn sampler(&self) -> FreeSampler {
        match &self.mask {
            Some(mask) => FreeSampler::from_mask(mask),
            None => FreeSampler::Classical,
        }
    }

    /// Points to score for one greedy augmentation.
    fn augmentation_pool<R: Rng>(&self, rng: &mut R, counters: &mut Counters) -> Result<Vec<GridPoint>> {
        let achieved = self.pts.len();
        let stuck = || Error::MaximalityViolation {
            achieved,
            required: self.cfg.runs,
        };
        let sampler = self.sampler();
        if sampler.exhausted_axis().is_some() {
            return Err(stuck());
        }
        let taken = |p: &GridPoint| self.pts.contains(p);
        let exhaustive = self
            .space()
            .grid_size()
            .is_some_and(|n| n <= self.cfg.exhaustive_threshold);
        let pool = if exhaustive {
            sampler.enumerate(self.space(), taken)
        } else {
            let mut pool = Vec::with_capacity(self.cfg.blind_samples);
            for _ in 0..self.cfg.blind_samples {
                match sampler.sample(self.space(), taken, rng, &mut counters.rejections) {
                    Ok(p) => pool.push(p),
                    Err(Error::RejectionBudgetExceeded { .. }) if pool.is_empty() => {
                        // The free set may be nearly or entirely outside the region.
                        match sampler.product_size(self.space()) {
                            Some(n) if n <= ENUMERATION_FALLBACK_CAP => {
                                let all = sampler.enumerate(self.space(), taken);
                                if all.is_empty() {
                                    return Err(stuck());
                                }
                                let k = self.cfg.blind_samples.min(all.len());
                                pool.extend((0..k).map(|_| all[rng.random_range(0..all.len())].clone()));
                                break;
                            }
                            _ => {
                                return Err(Error::RejectionBudgetExceeded {
                                    attempts: REJECTION_CAP,
                                })
                            }
                        }
                    }
                    Err(Error::RejectionBudgetExceeded { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
            pool
        };
        if pool.is_empty() {
            return Err(stuck());
        }
        Ok(pool)
    }

    /// Adds one permissible point: best of the pool (uniform tie-break),
    /// then coordinate-wise tuning. Returns the new point's index when the
    /// insertion left the objective unchanged, in which case tuning it now
    /// cannot discriminate between positions.
    fn augment_one<R: Rng>(&mut self, rng: &mut R, counters: &mut Counters) -> Result<Option<usize>> {
        let pool = self.augmentation_pool(rng, counters)?;
        let before = self.scorer.value();
        let mut best_value = f64::NEG_INFINITY;
        let mut best = 0;
        let mut ties = 0u32;
        for (k, p) in pool.iter().enumerate() {
            let v = self.scorer.value_with(&self.coords(p));
            if v > best_value {
                best_value = v;
                best = k;
                ties = 1;
            } else if v == best_value {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = k;
                }
            }
        }
        self.push(pool[best].clone());
        counters.greedy_augmentations += 1;
        let last = self.pts.len() - 1;
        if best_value == before {
            return Ok(Some(last));
        }
        self.tune(last);
        Ok(None)
    }

    /// Greedy augmentation up to `N` points. Points added while the objective
    /// was still flat (singular information matrix, fewer than two points for
    /// the pairwise criteria) are tuned once the design is full.
    fn fill<R: Rng>(&mut self, rng: &mut R, counters: &mut Counters) -> Result<()> {
        let mut deferred = Vec::new();
        while self.pts.len() < self.cfg.runs {
            if let Some(i) = self.augment_one(rng, counters)? {
                deferred.push(i);
            }
        }
        for i in deferred {
            self.tune(i);
        }
        Ok(())
    }

    /// Whether moving point `i` to `q` keeps it clear of every other point.
    fn movable(&self, i: usize, axis: usize, q: &GridPoint) -> bool {
        match (&self.mask, self.cfg.privacy.axis_steps()) {
            (Some(mask), Some(steps)) => {
                let own = u32::from(self.pts[i].indices()[axis].abs_diff(q.indices()[axis]) < steps);
                mask.count(axis, q.indices()[axis]) == own
            }
            _ => !self.pts.iter().enumerate().any(|(j, p)| j != i && p == q),
        }
    }

    /// Coordinate-wise local search on point `i`. Returns whether it moved.
    fn tune(&mut self, i: usize) -> bool {
        let levels = self.space().levels();
        let mut moved = false;
        for _ in 0..self.cfg.tuning_passes {
            let mut improved = false;
            for axis in 0..self.space().dim() {
                let current = self.scorer.value();
                let here = self.pts[i].indices()[axis];
                let mut best_value = current;
                let mut best_level = None;
                let mut q = self.pts[i].clone();
                for level in (0..levels).filter(|&l| l != here) {
                    q.set(axis, level);
                    if !self.movable(i, axis, &q) || !self.space().in_region(&q) {
                        continue;
                    }
                    let v = self.scorer.value_replaced(i, &self.coords(&q));
                    if v > best_value {
                        best_value = v;
                        best_level = Some(level);
                    }
                }
                if let Some(level) = best_level {
                    q.set(axis, level);
                    self.replace(i, q);
                    improved = true;
                }
            }
            moved |= improved;
            if !improved {
                break;
            }
        }
        moved
    }

    /// Mutation: evict everything in `P(x)`, insert `x`, then drop the
    /// cheapest other point or refill greedily.
    fn mutate<R: Rng>(&mut self, x: GridPoint, rng: &mut R, counters: &mut Counters) -> Result<()> {
        let mut evict: Vec<usize> = (0..self.pts.len())
            .filter(|&j| self.cfg.privacy.collides(&x, &self.pts[j]))
            .collect();
        evict.sort_unstable_by(|a, b| b.cmp(a));
        for j in evict {
            self.swap_remove(j);
        }
        self.push(x);
        let inserted = self.pts.len() - 1;
        if self.pts.len() == self.cfg.runs + 1 {
            let mut best_value = f64::NEG_INFINITY;
            let mut drop = usize::MAX;
            let mut ties = 0u32;
            for j in (0..self.pts.len()).filter(|&j| j != inserted) {
                let v = self.scorer.value_without(j);
                if v > best_value {
                    best_value = v;
                    drop = j;
                    ties = 1;
                } else if v == best_value {
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        drop = j;
                    }
                }
            }
            self.swap_remove(drop);
        } else if self.pts.len() < self.cfg.runs {
            self.fill(rng, counters)?;
        }
        Ok(())
    }

    fn candidates<R: Rng>(&self, rng: &mut R, counters: &mut Counters) -> Result<Vec<GridPoint>> {
        let open = |p: &GridPoint| self.space().in_region(p) && !self.pts.contains(p);
        let mut out = Vec::with_capacity(self.cfg.candidate_count);
        let mut fallback: Option<Vec<GridPoint>> = None;
        while out.len() < self.cfg.candidate_count {
            if let Some(all) = &fallback {
                if all.is_empty() {
                    break;
                }
                out.push(all[rng.random_range(0..all.len())].clone());
                continue;
            }
            let found = (0..REJECTION_CAP).find_map(|_| {
                let p = random_grid_point(self.space(), rng);
                if open(&p) {
                    Some(p)
                } else {
                    counters.rejections += 1;
                    None
                }
            });
            match found {
                Some(p) => out.push(p),
                None => match self.space().grid_size() {
                    // Small or nearly full grids: draw from the explicit list.
                    Some(n) if n <= ENUMERATION_FALLBACK_CAP => {
                        let axes = vec![(0..self.space().levels()).collect(); self.space().dim()];
                        let mut all = Vec::new();
                        crate::privacy::for_each_product(&axes, |p| {
                            if open(p) {
                                all.push(p.clone());
                            }
                        });
                        fallback = Some(all);
                    }
                    _ => {
                        return Err(Error::RejectionBudgetExceeded {
                            attempts: REJECTION_CAP,
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

fn check_start(design: &Design, cfg: &PsaConfig) -> Result<()> {
    cfg.validate()?;
    if design.capacity() != cfg.runs {
        return Err(Error::Config(format!(
            "design capacity {} differs from runs {}",
            design.capacity(),
            cfg.runs
        )));
    }
    for p in design.iter() {
        cfg.space.check(p)?;
    }
    if !design.is_permissible(&cfg.privacy) {
        return Err(Error::Domain("starting design is not permissible".into()));
    }
    Ok(())
}

/// Greedy procedure: augments a permissible design to `N` points.
pub fn greedy_augment<R: Rng>(design: &Design, config: &PsaConfig, rng: &mut R) -> Result<Design> {
    check_start(design, config)?;
    let mut w = Working::new(config, design);
    w.fill(rng, &mut Counters::default())?;
    Ok(w.design())
}

/// Coordinate-wise tuning of one design point, identified by its index in
/// the design's canonical order.
pub fn local_tune(design: &Design, point_index: usize, config: &PsaConfig) -> Result<Design> {
    check_start(design, config)?;
    if point_index >= design.len() {
        return Err(Error::Domain(format!(
            "point index {point_index} out of range for a design of {} points",
            design.len()
        )));
    }
    let mut w = Working::new(config, design);
    w.tune(point_index);
    Ok(w.design())
}

/// Mutation procedure `eta(xi, x)`.
pub fn mutate<R: Rng>(design: &Design, x: &GridPoint, config: &PsaConfig, rng: &mut R) -> Result<Design> {
    check_start(design, config)?;
    config.space.check(x)?;
    if design.contains(x) {
        return Err(Error::Domain(format!("candidate {x} is already a design point")));
    }
    let mut w = Working::new(config, design);
    w.mutate(x.clone(), rng, &mut Counters::default())?;
    Ok(w.design())
}

/// Candidate set: uniform in-region grid points that are not design points.
/// Candidates may violate privacy.
pub fn candidate_set<R: Rng>(design: &Design, config: &PsaConfig, rng: &mut R) -> Result<Vec<GridPoint>> {
    check_start(design, config)?;
    Working::new(config, design).candidates(rng, &mut Counters::default())
}

struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    fn new(budget: Option<Duration>) -> Self {
        let start = Instant::now();
        Self {
            start,
            deadline: budget.map(|b| start + b),
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

struct RestartOutcome {
    design: Design,
    value: f64,
    converged: bool,
}

fn single_restart(cfg: &PsaConfig, index: usize, clock: &Clock, trace: &mut RunTrace) -> Result<RestartOutcome> {
    let mut rng = cfg.rng_for(index);
    let mut counters = Counters::default();
    let mut w = Working::new(cfg, &Design::new(cfg.runs));
    let result = (|| {
        w.fill(&mut rng, &mut counters)?;
        let mut design = w.design();
        let mut value = cfg.criterion.objective(&design, &cfg.space);
        trace.samples.push(TraceSample {
            elapsed: clock.elapsed(),
            value,
            restart: index,
        });
        let mut converged = false;
        'outer: while !clock.expired() {
            let base = Working::new(cfg, &design);
            let candidates = base.candidates(&mut rng, &mut counters)?;
            for x in candidates {
                if clock.expired() {
                    break 'outer;
                }
                counters.mutations_attempted += 1;
                let mut eta = base.clone();
                match eta.mutate(x, &mut rng, &mut counters) {
                    Ok(()) => {}
                    Err(Error::MaximalityViolation { .. }) => {
                        counters.mutations_failed += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
                let next = eta.design();
                let next_value = cfg.criterion.objective(&next, &cfg.space);
                if next_value > value {
                    design = next;
                    value = next_value;
                    counters.mutations_accepted += 1;
                    trace.samples.push(TraceSample {
                        elapsed: clock.elapsed(),
                        value,
                        restart: index,
                    });
                    continue 'outer;
                }
            }
            converged = true;
            break;
        }
        Ok(RestartOutcome {
            design,
            value,
            converged,
        })
    })();
    trace.counters.absorb(&counters);
    let outcome = result?;
    trace.restarts.push(RestartMarker {
        restart: index,
        elapsed: clock.elapsed(),
        value: outcome.value,
        converged: outcome.converged,
    });
    Ok(outcome)
}

fn run_restarts(cfg: &PsaConfig, budget: Option<Duration>, max_restarts: Option<usize>) -> Result<(Design, RunTrace)> {
    cfg.validate()?;
    let clock = Clock::new(budget);
    let mut trace = RunTrace {
        samples: Vec::new(),
        restarts: Vec::new(),
        counters: Counters::default(),
        final_design: Design::new(cfg.runs),
        final_value: f64::NEG_INFINITY,
    };
    let mut best: Option<(Design, f64)> = None;
    let mut index = 0;
    loop {
        if index > 0 && (clock.expired() || max_restarts.is_some_and(|m| index >= m)) {
            break;
        }
        let outcome = single_restart(cfg, index, &clock, &mut trace)?;
        if best.as_ref().is_none_or(|(_, v)| outcome.value > *v) {
            best = Some((outcome.design, outcome.value));
        }
        index += 1;
        if budget.is_none() && max_restarts.is_none() {
            break;
        }
    }
    let (design, value) = best.expect("at least one restart runs");
    trace.final_design = design.clone();
    trace.final_value = value;
    Ok((design, trace))
}

/// Full search with `config.restarts` independent restarts within the
/// optional time budget; keeps the best design (earliest restart on ties).
/// The first greedy construction always completes, whatever the budget.
pub fn psa_run(config: &PsaConfig) -> Result<(Design, RunTrace)> {
    run_restarts(config, config.time_budget, Some(config.restarts))
}

/// Restarts the search on convergence until `total` has elapsed.
pub fn psa_bench(config: &PsaConfig, total: Duration) -> Result<(Design, RunTrace)> {
    run_restarts(config, Some(total), None)
}
