use nalgebra::{DMatrix, DVector};

use super::ModelSpec;
use crate::grid::GridSpace;
use crate::privacy::Design;

/// Determinants at or below this are treated as singular.
pub(crate) const DET_FLOOR: f64 = 1e-300;
/// Cholesky pivots below this fraction of the mean diagonal count as failure.
const PIVOT_RTOL: f64 = 1e-13;

/// Standardized information matrix `(1/N) sum f(x) f(x)^T`, normalized by
/// the design capacity `N`.
pub fn info_matrix(model: &ModelSpec, design: &Design, space: &GridSpace) -> DMatrix<f64> {
    let m = model.len();
    let mut info = DMatrix::zeros(m, m);
    let mut f = DVector::zeros(m);
    for x in design.coords(space) {
        model.regressor_into(&x, f.as_mut_slice());
        info.ger(1.0, &f, &f, 1.0);
    }
    info / design.capacity() as f64
}

/// `Phi_D = det(M)^(1/m)`, zero for singular designs.
pub fn eval_d(model: &ModelSpec, design: &Design, space: &GridSpace) -> f64 {
    d_from_info_matrix(&info_matrix(model, design, space))
}

pub fn d_from_info_matrix(info: &DMatrix<f64>) -> f64 {
    match log_det_pd(info) {
        Some(ld) => d_from_log_det(ld, info.nrows()),
        None => 0.0,
    }
}

pub(crate) fn d_from_log_det(log_det: f64, m: usize) -> f64 {
    if log_det <= DET_FLOOR.ln() {
        0.0
    } else {
        (log_det / m as f64).exp()
    }
}

/// Log-determinant of a symmetric positive definite matrix, `None` when the
/// Cholesky factorization fails or a pivot collapses.
pub(crate) fn log_det_pd(a: &DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let scale = a.trace() / n as f64;
    if scale.is_nan() || scale <= 0.0 {
        return None;
    }
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..n {
        let pivot = l[(i, i)] * l[(i, i)];
        if pivot.is_nan() || pivot <= PIVOT_RTOL * scale {
            return None;
        }
        log_det += pivot.ln();
    }
    Some(log_det)
}
