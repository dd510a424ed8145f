//! Small dense helpers shared by the prior and sampler modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub type Chol = Cholesky<f64, Dyn>;

/// Relative pivot floor below which a matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// Cholesky factor of a symmetric matrix, `None` unless it is numerically
/// positive definite.
pub fn cholesky(m: DMatrix<f64>) -> Option<Chol> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    let chol = Cholesky::new(m)?;
    let l = chol.l_dirty();
    let floor = PIVOT_TOL * max_diag;
    if (0..l.nrows()).all(|i| l[(i, i)].is_finite() && l[(i, i)] * l[(i, i)] > floor) {
        Some(chol)
    } else {
        None
    }
}

/// `log |M|` from the Cholesky factor of `M`.
pub fn log_det(chol: &Chol) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// First-difference operator with `k - 1` rows `(.., -1, 1, ..)` and `k` columns.
pub fn difference_operator(k: usize) -> DMatrix<f64> {
    let rows = k.saturating_sub(1);
    DMatrix::from_fn(rows, k, |i, j| {
        if j == i {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// `xᵀ M⁻¹ x` given the factor of `M`.
pub fn inv_quad_form(chol: &Chol, x: &DVector<f64>) -> f64 {
    let mut z = x.clone();
    chol.l_dirty()
        .solve_lower_triangular_mut(&mut z);
    z.norm_squared()
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
