//! Incremental objective evaluation for one-point changes.
//!
//! The scorer mirrors a working set of design points (real coordinates, in
//! caller-defined order) and answers "what would the objective be if a point
//! were added, removed or moved" without touching the working set. The
//! D-criterion uses the matrix determinant lemma against a cached inverse;
//! the pairwise criteria keep per-point contributions to the pair sum.

use nalgebra::{DMatrix, DVector};

use super::dopt::{d_from_log_det, log_det_pd};
use super::pairwise::PairKernel;
use super::{CriterionSpec, ModelSpec};

/// Update factors below this are treated as a rank drop.
const LEMMA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) enum Scorer {
    D(DScorer),
    Pairwise(PairScorer),
}

impl Scorer {
    pub(crate) fn new(spec: &CriterionSpec, dim: usize, capacity: usize) -> Self {
        match spec {
            CriterionSpec::D(model) => Self::D(DScorer::new(model.clone(), capacity)),
            CriterionSpec::Ard(p) => {
                Self::Pairwise(PairScorer::new(PairKernel::ard(p, dim, capacity)))
            }
            CriterionSpec::MaxPro { z } => Self::Pairwise(PairScorer::new(PairKernel::MaxPro { z: *z })),
        }
    }

    pub(crate) fn rebuild(&mut self, pts: &[Vec<f64>]) {
        match self {
            Self::D(s) => s.rebuild(pts),
            Self::Pairwise(s) => s.rebuild(pts),
        }
    }

    pub(crate) fn value(&self) -> f64 {
        match self {
            Self::D(s) => s.value(),
            Self::Pairwise(s) => s.value(),
        }
    }

    pub(crate) fn value_with(&self, x: &[f64]) -> f64 {
        match self {
            Self::D(s) => s.value_with(x),
            Self::Pairwise(s) => s.value_with(x),
        }
    }

    pub(crate) fn value_without(&self, i: usize) -> f64 {
        match self {
            Self::D(s) => s.value_without(i),
            Self::Pairwise(s) => s.value_without(i),
        }
    }

    pub(crate) fn value_replaced(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Self::D(s) => s.value_replaced(i, x),
            Self::Pairwise(s) => s.value_replaced(i, x),
        }
    }

    pub(crate) fn push(&mut self, x: Vec<f64>) {
        match self {
            Self::D(s) => s.push(x),
            Self::Pairwise(s) => s.push(x),
        }
    }

    pub(crate) fn swap_remove(&mut self, i: usize) {
        match self {
            Self::D(s) => s.swap_remove(i),
            Self::Pairwise(s) => s.swap_remove(i),
        }
    }

    pub(crate) fn replace(&mut self, i: usize, x: Vec<f64>) {
        match self {
            Self::D(s) => s.replace(i, x),
            Self::Pairwise(s) => s.replace(i, x),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DScorer {
    model: ModelSpec,
    capacity: f64,
    pts: Vec<Vec<f64>>,
    feats: Vec<DVector<f64>>,
    info: DMatrix<f64>,
    /// Inverse and log-determinant of `info` when it is non-singular.
    factor: Option<(DMatrix<f64>, f64)>,
}

impl DScorer {
    fn new(model: ModelSpec, capacity: usize) -> Self {
        let m = model.len();
        Self {
            model,
            capacity: capacity as f64,
            pts: Vec::new(),
            feats: Vec::new(),
            info: DMatrix::zeros(m, m),
            factor: None,
        }
    }

    fn m(&self) -> usize {
        self.model.len()
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        let mut f = DVector::zeros(self.m());
        self.model.regressor_into(x, f.as_mut_slice());
        f
    }

    fn refactor(&mut self) {
        self.factor = if self.pts.len() < self.m() {
            None
        } else {
            log_det_pd(&self.info).and_then(|ld| {
                let inv = self.info.clone().cholesky()?.inverse();
                Some((inv, ld))
            })
        };
    }

    fn rebuild(&mut self, pts: &[Vec<f64>]) {
        self.pts = pts.to_vec();
        self.feats = pts.iter().map(|x| self.features(x)).collect();
        let m = self.m();
        self.info = DMatrix::zeros(m, m);
        for f in &self.feats {
            self.info.ger(1.0 / self.capacity, f, f, 1.0);
        }
        self.refactor();
    }

    fn value(&self) -> f64 {
        self.factor
            .as_ref()
            .map_or(0.0, |(_, ld)| d_from_log_det(*ld, self.m()))
    }

    fn scaled(&self, log_det: f64, factor: f64) -> f64 {
        if factor < LEMMA_FLOOR {
            0.0
        } else {
            d_from_log_det(log_det + factor.ln(), self.m())
        }
    }

    /// Full recomputation of `M + sum_k sign_k f_k f_k^T / N`.
    fn direct(&self, updates: &[(f64, &DVector<f64>)]) -> f64 {
        let mut info = self.info.clone();
        for (sign, f) in updates {
            info.ger(sign / self.capacity, f, f, 1.0);
        }
        log_det_pd(&info).map_or(0.0, |ld| d_from_log_det(ld, self.m()))
    }

    fn value_with(&self, x: &[f64]) -> f64 {
        if self.pts.len() + 1 < self.m() {
            return 0.0;
        }
        let f = self.features(x);
        match &self.factor {
            Some((inv, ld)) => self.scaled(*ld, 1.0 + quad(inv, &f) / self.capacity),
            None => self.direct(&[(1.0, &f)]),
        }
    }

    fn value_without(&self, i: usize) -> f64 {
        if self.pts.len() <= self.m() {
            // Dropping a point from a design with at most m points leaves at
            // most m-1 regressors: always singular.
            return 0.0;
        }
        let f = &self.feats[i];
        match &self.factor {
            Some((inv, ld)) => self.scaled(*ld, 1.0 - quad(inv, f) / self.capacity),
            None => self.direct(&[(-1.0, f)]),
        }
    }

    fn value_replaced(&self, i: usize, x: &[f64]) -> f64 {
        if self.pts.len() < self.m() {
            return 0.0;
        }
        let q = self.features(x);
        let p = &self.feats[i];
        match &self.factor {
            Some((inv, ld)) => {
                let n = self.capacity;
                let iq = inv * &q;
                let a_qq = q.dot(&iq);
                let a_pq = p.dot(&iq);
                let a_pp = quad(inv, p);
                let factor = (1.0 + a_qq / n) * (1.0 - a_pp / n) + a_pq * a_pq / (n * n);
                self.scaled(*ld, factor)
            }
            None => self.direct(&[(1.0, &q), (-1.0, p)]),
        }
    }

    fn push(&mut self, x: Vec<f64>) {
        let f = self.features(&x);
        self.info.ger(1.0 / self.capacity, &f, &f, 1.0);
        self.pts.push(x);
        self.feats.push(f);
        self.refactor();
    }

    fn swap_remove(&mut self, i: usize) {
        let f = self.feats.swap_remove(i);
        self.pts.swap_remove(i);
        self.info.ger(-1.0 / self.capacity, &f, &f, 1.0);
        self.refactor();
    }

    fn replace(&mut self, i: usize, x: Vec<f64>) {
        let f = self.features(&x);
        self.info.ger(-1.0 / self.capacity, &self.feats[i], &self.feats[i], 1.0);
        self.info.ger(1.0 / self.capacity, &f, &f, 1.0);
        self.feats[i] = f;
        self.pts[i] = x;
        self.refactor();
    }
}

fn quad(a: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    f.dot(&(a * f))
}

#[derive(Debug, Clone)]
pub(crate) struct PairScorer {
    kernel: PairKernel,
    pts: Vec<Vec<f64>>,
    /// Finite part of each point's summed pair terms.
    contrib: Vec<f64>,
    /// Number of infinite pair terms touching each point.
    contrib_inf: Vec<u64>,
    total: f64,
    total_inf: u64,
}

impl PairScorer {
    fn new(kernel: PairKernel) -> Self {
        Self {
            kernel,
            pts: Vec::new(),
            contrib: Vec::new(),
            contrib_inf: Vec::new(),
            total: 0.0,
            total_inf: 0,
        }
    }

    /// Finite sum and infinite count of `x` against every point except `skip`.
    fn against(&self, x: &[f64], skip: Option<usize>) -> (f64, u64) {
        let mut sum = 0.0;
        let mut inf = 0;
        for (j, p) in self.pts.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            let t = self.kernel.term(x, p);
            if t.is_finite() {
                sum += t;
            } else {
                inf += 1;
            }
        }
        (sum, inf)
    }

    fn rebuild(&mut self, pts: &[Vec<f64>]) {
        self.pts.clear();
        self.contrib.clear();
        self.contrib_inf.clear();
        self.total = 0.0;
        self.total_inf = 0;
        for x in pts {
            self.push(x.clone());
        }
    }

    /// Objective of an `n`-point set; without pairs the running sum is only
    /// cancellation residue.
    fn objective(&self, n: usize, total: f64, inf: u64) -> f64 {
        if n < 2 {
            self.kernel.objective(0.0, 0)
        } else {
            self.kernel.objective(total, inf)
        }
    }

    fn value(&self) -> f64 {
        self.objective(self.pts.len(), self.total, self.total_inf)
    }

    fn value_with(&self, x: &[f64]) -> f64 {
        let (s, inf) = self.against(x, None);
        self.objective(self.pts.len() + 1, self.total + s, self.total_inf + inf)
    }

    fn value_without(&self, i: usize) -> f64 {
        self.objective(
            self.pts.len() - 1,
            self.total - self.contrib[i],
            self.total_inf - self.contrib_inf[i],
        )
    }

    fn value_replaced(&self, i: usize, x: &[f64]) -> f64 {
        let (s, inf) = self.against(x, Some(i));
        self.objective(
            self.pts.len(),
            self.total - self.contrib[i] + s,
            self.total_inf - self.contrib_inf[i] + inf,
        )
    }

    /// Adds the pair terms of `x` against all points except `skip` to the
    /// per-point tallies, returning `x`'s own tally.
    fn attach(&mut self, x: &[f64], skip: Option<usize>) -> (f64, u64) {
        let mut sum = 0.0;
        let mut inf = 0;
        for j in 0..self.pts.len() {
            if Some(j) == skip {
                continue;
            }
            let t = self.kernel.term(x, &self.pts[j]);
            if t.is_finite() {
                sum += t;
                self.contrib[j] += t;
            } else {
                inf += 1;
                self.contrib_inf[j] += 1;
            }
        }
        self.total += sum;
        self.total_inf += inf;
        (sum, inf)
    }

    fn detach(&mut self, i: usize) {
        for j in 0..self.pts.len() {
            if j == i {
                continue;
            }
            let t = self.kernel.term(&self.pts[i], &self.pts[j]);
            if t.is_finite() {
                self.contrib[j] -= t;
            } else {
                self.contrib_inf[j] -= 1;
            }
        }
        self.total -= self.contrib[i];
        self.total_inf -= self.contrib_inf[i];
    }

    fn push(&mut self, x: Vec<f64>) {
        let (sum, inf) = self.attach(&x, None);
        self.pts.push(x);
        self.contrib.push(sum);
        self.contrib_inf.push(inf);
    }

    fn swap_remove(&mut self, i: usize) {
        self.detach(i);
        self.pts.swap_remove(i);
        self.contrib.swap_remove(i);
        self.contrib_inf.swap_remove(i);
        if self.pts.len() < 2 {
            self.total = 0.0;
            self.contrib.iter_mut().for_each(|c| *c = 0.0);
        }
    }

    fn replace(&mut self, i: usize, x: Vec<f64>) {
        self.detach(i);
        let (sum, inf) = self.attach(&x, Some(i));
        self.pts[i] = x;
        self.contrib[i] = sum;
        self.contrib_inf[i] = inf;
    }
}
