use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SetError};

/// Relative pivot tolerance: entries below `PIVOT_REL_TOL * max|a_ij|` count
/// as zero when deciding rank.
pub const PIVOT_REL_TOL: f64 = 1e-9;

/// Output of [`gauss_jordan_full_pivot`].
///
/// `a` and `b` are `transform * A` and `transform * b`. Columns keep their
/// original order (they index generators); each pivot column is a unit vector
/// after reduction. `col_order` lists pivot columns first, in pivot order,
/// followed by the free columns.
#[derive(Debug, Clone)]
pub struct RowEchelon {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// `(row, column)` for each pivot, rows in `0..rank`.
    pub pivots: Vec<(usize, usize)>,
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    /// Invertible row-operation matrix applied to the input.
    pub transform: DMatrix<f64>,
    /// Rows (of the reduced system) that vanished to tolerance.
    pub deficient_rows: Vec<usize>,
}

impl RowEchelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// True when some vanished row still carries a nonzero right-hand side.
    pub fn is_inconsistent(&self, tol: f64) -> bool {
        self.deficient_rows.iter().any(|&r| self.b[r].abs() > tol)
    }

    /// The reduced system with vanished rows removed.
    pub fn full_rank_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let keep: Vec<usize> = (0..self.rank()).collect();
        (self.a.select_rows(keep.iter()), self.b.select_rows(keep.iter()))
    }
}

/// Reduced row-echelon form of `[A | b]` with full (row and column) pivoting.
pub fn gauss_jordan_full_pivot(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<RowEchelon> {
    if a.nrows() != b.len() {
        return Err(SetError::DimensionMismatch(format!(
            "gauss_jordan: A has {} rows, b has {}",
            a.nrows(),
            b.len()
        )));
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut rhs = b.clone();
    let mut transform = DMatrix::<f64>::identity(m, m);
    let mut row_order: Vec<usize> = (0..m).collect();
    let scale = a.amax();
    let tol = PIVOT_REL_TOL * scale.max(f64::MIN_POSITIVE);
    let mut used_col = vec![false; n];
    let mut pivots = Vec::new();

    for k in 0..m.min(n) {
        let mut best = (0usize, 0usize, 0.0f64);
        for i in k..m {
            for j in 0..n {
                if !used_col[j] && w[(i, j)].abs() > best.2 {
                    best = (i, j, w[(i, j)].abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pr, pc, _) = best;
        if pr != k {
            w.swap_rows(pr, k);
            rhs.swap_rows(pr, k);
            transform.swap_rows(pr, k);
            row_order.swap(pr, k);
        }
        let pivot = w[(k, pc)];
        w.row_mut(k).scale_mut(1.0 / pivot);
        transform.row_mut(k).scale_mut(1.0 / pivot);
        rhs[k] /= pivot;
        w[(k, pc)] = 1.0;
        for i in 0..m {
            if i == k {
                continue;
            }
            let factor = w[(i, pc)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                w[(i, j)] -= factor * w[(k, j)];
            }
            for j in 0..m {
                transform[(i, j)] -= factor * transform[(k, j)];
            }
            rhs[i] -= factor * rhs[k];
            w[(i, pc)] = 0.0;
        }
        used_col[pc] = true;
        pivots.push((k, pc));
    }

    let rank = pivots.len();
    let deficient_rows: Vec<usize> = (rank..m).collect();
    for &r in &deficient_rows {
        w.row_mut(r).fill(0.0);
    }
    // flush round-off in the reduced rows
    for v in w.iter_mut() {
        if v.abs() <= tol * 1e-3 {
            *v = 0.0;
        }
    }
    let mut col_order: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    col_order.extend((0..n).filter(|j| !used_col[*j]));

    Ok(RowEchelon {
        a: w,
        b: rhs,
        pivots,
        row_order,
        col_order,
        transform,
        deficient_rows,
    })
}

fn svd_rank(sv: &DVector<f64>) -> usize {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter()
        .filter(|&&s| s > PIVOT_REL_TOL * top.max(f64::MIN_POSITIVE))
        .count()
}

/// Orthonormal basis of the null space of a full-row-rank `A`.
///
/// Columns of the result span `N(A)`; there are `ncols - nrows` of them.
pub fn nullspace_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    if m == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if m > n {
        return Err(SetError::InvalidArgument(format!(
            "nullspace_basis: {m} rows exceed {n} columns, cannot be full row rank"
        )));
    }
    // Pad to square so the SVD yields a complete right singular basis.
    let mut sq = DMatrix::<f64>::zeros(n, n);
    sq.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let rank = svd_rank(&svd.singular_values);
    if rank < m {
        return Err(SetError::InvalidArgument(format!(
            "nullspace_basis: matrix has rank {rank} < {m} rows; remove dependent rows first"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let null_rows = &order[m..];
    let mut t = DMatrix::<f64>::zeros(n, n - m);
    for (k, &r) in null_rows.iter().enumerate() {
        let mut col = v_t.row(r).transpose();
        // deterministic orientation: first significant entry positive
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        t.set_column(k, &col);
    }
    Ok(t)
}

/// Minimum-norm least-squares solution `A^+ b`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(SetError::DimensionMismatch(format!(
            "pinv_solve: A has {} rows, b has {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = PIVOT_REL_TOL * top.max(f64::MIN_POSITIVE);
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| SetError::Numerical(format!("pseudo-inverse: {e}")))?;
    Ok(pinv * b)
}

/// Numerical rank via singular values.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    svd_rank(&a.clone().svd(false, false).singular_values)
}
