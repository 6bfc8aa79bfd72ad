//! Redundancy removal: parallel-generator merging (plain and lifted) and
//! elimination of one generator/constraint pair when a coefficient's box
//! bound is implied by the other constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::halfspace::{empty_set, interval_refine, IntervalVector, COEF_ZERO_TOL, DEFAULT_PASSES};
use crate::numerics::gauss_jordan_full_pivot;
use crate::sets::{ConstrainedZonotope, Zonotope, TOL};

/// Default parallelism tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Merges columns of `g` that are parallel to within `eps`, dropping zero
/// columns. Returns the merged matrix.
fn merge_columns(g: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(g.ncols());
    for j in 0..g.ncols() {
        let col = g.column(j).into_owned();
        let norm = col.norm();
        if norm <= TOL * 1e-3 {
            continue;
        }
        let mut merged = false;
        for k in kept.iter_mut() {
            let dot = k.dot(&col);
            if dot.abs() >= (1.0 - eps) * k.norm() * norm {
                if dot >= 0.0 {
                    *k += &col;
                } else {
                    *k -= &col;
                }
                merged = true;
                break;
            }
        }
        if !merged {
            kept.push(col);
        }
    }
    if kept.is_empty() {
        DMatrix::zeros(g.nrows(), 0)
    } else {
        DMatrix::from_columns(&kept)
    }
}

/// Combines parallel (or anti-parallel) generators; zero generators vanish.
pub fn merge_parallel_generators(z: &Zonotope, eps: f64) -> Zonotope {
    Zonotope::from_parts(z.center().clone(), merge_columns(z.generators(), eps))
}

/// `{[G; A], [c; -b]}` in `R^(n + n_c)`.
pub fn lift(z: &ConstrainedZonotope) -> Zonotope {
    let (n, nc, ng) = (z.dim(), z.n_cons(), z.n_gens());
    let mut g = DMatrix::zeros(n + nc, ng);
    g.rows_mut(0, n).copy_from(z.generators());
    g.rows_mut(n, nc).copy_from(z.constraints());
    let mut c = DVector::zeros(n + nc);
    c.rows_mut(0, n).copy_from(z.center());
    c.rows_mut(n, nc).copy_from(&(-z.offsets()));
    Zonotope::from_parts(c, g)
}

/// Inverse of [`lift`] for a set of original dimension `n`.
pub fn unlift(z: &Zonotope, n: usize) -> ConstrainedZonotope {
    let nc = z.dim() - n;
    let g = z.generators();
    ConstrainedZonotope::from_parts(
        z.center().rows(0, n).into_owned(),
        g.rows(0, n).into_owned(),
        g.rows(n, nc).into_owned(),
        -z.center().rows(n, nc).into_owned(),
    )
}

/// Parallel merging applied to the lifted zonotope.
pub fn merge_parallel_lifted(z: &ConstrainedZonotope, eps: f64) -> ConstrainedZonotope {
    unlift(&merge_parallel_generators(&lift(z), eps), z.dim())
}

/// The same set with full-row-rank constraints in reduced row-echelon form,
/// or `None` when the constraints are inconsistent.
pub fn row_reduce(z: &ConstrainedZonotope) -> Result<Option<ConstrainedZonotope>> {
    if z.n_cons() == 0 {
        return Ok(Some(z.clone()));
    }
    let ech = gauss_jordan_full_pivot(z.constraints(), z.offsets())?;
    if ech.is_inconsistent(TOL) {
        return Ok(None);
    }
    let (a, b) = ech.full_rank_system();
    Ok(Some(ConstrainedZonotope::from_parts(
        z.center().clone(),
        z.generators().clone(),
        a,
        b,
    )))
}

/// One elimination step. Returns the reduced set and whether a
/// generator/constraint pair was removed.
///
/// The constraints are first brought to reduced row-echelon form with full
/// pivoting; linearly dependent rows are dropped there (and an inconsistent
/// system collapses to the canonical empty set) without counting as a
/// removal.
pub fn remove_redundant_pair(z: &ConstrainedZonotope) -> Result<(ConstrainedZonotope, bool)> {
    if z.n_cons() == 0 {
        return Ok((z.clone(), false));
    }
    let Some(reduced) = row_reduce(z)? else {
        return Ok((empty_set(z.dim()), false));
    };
    let dropped_rows = reduced.n_cons() < z.n_cons();
    if reduced.n_cons() == 0 {
        return Ok((reduced, false));
    }

    let e = interval_refine(&reduced, DEFAULT_PASSES);
    if e.certified_empty {
        return Ok((empty_set(z.dim()), false));
    }
    let (a, b) = (reduced.constraints(), reduced.offsets());
    let mut best: Option<(usize, usize, f64)> = None;
    for r in 0..reduced.n_cons() {
        for c in 0..reduced.n_gens() {
            let arc = a[(r, c)];
            if arc.abs() <= COEF_ZERO_TOL || best.is_some_and(|(_, _, m)| arc.abs() <= m) {
                continue;
            }
            if implied_range(a, b[r], &e.e, r, c) {
                best = Some((r, c, arc.abs()));
            }
        }
    }
    let Some((r, c, _)) = best else {
        return Ok((if dropped_rows { reduced } else { z.clone() }, false));
    };
    Ok((eliminate(&reduced, r, c), true))
}

/// True when `(b_r - sum_{k != c} a_rk E_k) / a_rc` lies inside `[-1, 1]`.
fn implied_range(a: &DMatrix<f64>, br: f64, e: &IntervalVector, r: usize, c: usize) -> bool {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for k in 0..a.ncols() {
        if k == c {
            continue;
        }
        let (p, q) = (a[(r, k)] * e.lo[k], a[(r, k)] * e.hi[k]);
        lo += p.min(q);
        hi += p.max(q);
    }
    let arc = a[(r, c)];
    let (rlo, rhi) = if arc > 0.0 {
        ((br - hi) / arc, (br - lo) / arc)
    } else {
        ((br - lo) / arc, (br - hi) / arc)
    };
    rlo >= -1.0 - TOL && rhi <= 1.0 + TOL
}

/// Solves row `r` for coefficient `c`, substitutes it everywhere and drops
/// the emptied row and column.
pub(crate) fn eliminate(z: &ConstrainedZonotope, r: usize, c: usize) -> ConstrainedZonotope {
    let a = z.constraints();
    let arc = a[(r, c)];
    let row = a.row(r).into_owned() / arc;
    let br = z.offsets()[r] / arc;
    let gc = z.generators().column(c).into_owned();
    let ac = a.column(c).into_owned();
    let g = z.generators() - &gc * &row;
    let center = z.center() + &gc * br;
    let a_new = a - &ac * &row;
    let b_new = z.offsets() - &ac * br;
    let g = g.remove_column(c);
    let a_new = a_new.remove_row(r).remove_column(c);
    let b_new = b_new.remove_row(r);
    ConstrainedZonotope::from_parts(center, g, a_new, b_new)
}

/// Repeats [`remove_redundant_pair`] until no pair can be eliminated.
/// Generators are never merged, so the generator count drops only with
/// the constraint count.
pub fn remove_redundant_pairs(z: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    let mut cur = z.clone();
    loop {
        let (next, removed) = remove_redundant_pair(&cur)?;
        cur = next;
        if !removed {
            return Ok(cur);
        }
    }
}

/// Alternates lifted parallel merging and pair elimination until neither
/// changes the representation.
pub fn reduce_fully(z: &ConstrainedZonotope, eps: f64) -> Result<ConstrainedZonotope> {
    let mut cur = z.clone();
    loop {
        let before = (cur.n_gens(), cur.n_cons());
        cur = remove_redundant_pairs(&merge_parallel_lifted(&cur, eps))?;
        if (cur.n_gens(), cur.n_cons()) == before {
            return Ok(cur);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn same_on_grid(x: &ConstrainedZonotope, y: &ConstrainedZonotope, half: f64, steps: usize) {
        for i in 0..=steps {
            for j in 0..=steps {
                let p = dv(&[
                    -half + 2.0 * half * i as f64 / steps as f64,
                    -half + 2.0 * half * j as f64 / steps as f64,
                ]);
                let (a, b) = (x.contains_point(&p).unwrap(), y.contains_point(&p).unwrap());
                if a != b {
                    // tolerate boundary disagreement
                    let near = [1e-7, -1e-7].iter().any(|d| {
                        let q = &p * (1.0 + d);
                        x.contains_point(&q).unwrap() != y.contains_point(&q).unwrap()
                    });
                    assert!(!near || a == b, "membership differs at {p:?}");
                }
            }
        }
    }

    #[test]
    fn colinear_columns_merge() {
        let z = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        let m = merge_parallel_generators(&z, DEFAULT_EPS);
        assert_eq!(m.generators(), &DMatrix::from_column_slice(2, 1, &[3.0, 0.0]));
        let z = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, -1.0, 0.0, 0.0]).unwrap();
        let m = merge_parallel_generators(&z, DEFAULT_EPS);
        assert_eq!(m.generators(), &DMatrix::from_column_slice(2, 1, &[2.0, 0.0]));
    }

    #[test]
    fn merging_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DMatrix::from_fn(2, 4, |_, _| rng.gen_range(-1.0..1.0));
        let mut cols: Vec<DVector<f64>> = g.column_iter().map(|c| c.into_owned()).collect();
        cols.push(&cols[0] * -0.5);
        cols.push(&cols[2] * 2.0);
        let z = Zonotope::new(dv(&[0.1, -0.2]), DMatrix::from_columns(&cols)).unwrap();
        let once = merge_parallel_generators(&z, DEFAULT_EPS);
        assert_eq!(once.n_gens(), 4);
        assert_eq!(merge_parallel_generators(&once, DEFAULT_EPS), once);
        same_on_grid(&z.to_conzono(), &once.to_conzono(), 5.0, 30);
    }

    #[test]
    fn lift_round_trip() {
        let z = ConstrainedZonotope::new(
            dv(&[1.0, 2.0]),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]),
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            dv(&[0.5]),
        )
        .unwrap();
        let l = lift(&z);
        assert_eq!(l.dim(), 3);
        assert_eq!(l.center(), &dv(&[1.0, 2.0, -0.5]));
        assert_eq!(unlift(&l, 2), z);
        let plain = Zonotope::from_rows(&[0.0], 2, &[1.0, 2.0]).unwrap();
        assert_eq!(lift(&plain.to_conzono()), plain);
    }

    #[test]
    fn duplicate_lifted_column_removed() {
        let z = ConstrainedZonotope::new(
            dv(&[0.0, 0.0]),
            DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            dv(&[0.5]),
        )
        .unwrap();
        let m = merge_parallel_lifted(&z, DEFAULT_EPS);
        assert_eq!(m.n_gens(), 2);
        same_on_grid(&z, &m, 2.5, 25);
        let u = ConstrainedZonotope::new(
            dv(&[0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            dv(&[0.5]),
        )
        .unwrap();
        assert_eq!(merge_parallel_lifted(&u, DEFAULT_EPS), u);
    }

    fn diamond_box() -> (ConstrainedZonotope, ConstrainedZonotope) {
        let z1 = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .to_conzono();
        let z2 = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 0.0, 0.0, 1.0])
            .unwrap()
            .to_conzono();
        (z1.intersection(&z2).unwrap(), z2)
    }

    #[test]
    fn diamond_box_reduces_in_two_steps() {
        let (zc, z2) = diamond_box();
        let (once, r1) = remove_redundant_pair(&zc).unwrap();
        assert!(r1);
        assert_eq!((once.n_gens(), once.n_cons()), (3, 1));
        let (twice, r2) = remove_redundant_pair(&once).unwrap();
        assert!(r2);
        assert_eq!((twice.n_gens(), twice.n_cons()), (2, 0));
        let (_, r3) = remove_redundant_pair(&twice).unwrap();
        assert!(!r3);
        same_on_grid(&twice, &z2, 1.5, 30);
        assert_eq!(reduce_fully(&zc, DEFAULT_EPS).unwrap().n_gens(), 2);
    }

    #[test]
    fn unconstrained_input_untouched() {
        let z = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 1.0, 0.0, 2.0])
            .unwrap()
            .to_conzono();
        let (out, removed) = remove_redundant_pair(&z).unwrap();
        assert!(!removed);
        assert_eq!(out, z);
        assert_eq!(reduce_fully(&z, DEFAULT_EPS).unwrap(), z);
    }

    #[test]
    fn random_nested_intersections_reduce_soundly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z1 = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .to_conzono();
        let mut fired = 0;
        for _ in 0..40 {
            let g = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-0.8..0.8));
            let z2 = Zonotope::new(DVector::zeros(2), g).unwrap().to_conzono();
            let zc = z1.intersection(&z2).unwrap();
            let (out, removed) = remove_redundant_pair(&zc).unwrap();
            if removed {
                fired += 1;
                assert_eq!((out.n_gens(), out.n_cons()), (zc.n_gens() - 1, zc.n_cons() - 1));
                same_on_grid(&zc, &out, 2.2, 16);
            }
        }
        assert!(fired > 0);
    }
}
