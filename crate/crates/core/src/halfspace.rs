//! Halfspace and hyperplane intersections with zonotopes and constrained
//! zonotopes, interval refinement of the coefficient box, and the
//! containment checks used to skip redundant cuts.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Result, SetError};
use crate::numerics::{solve_lp, LpStatus, Sense, Var};
use crate::sets::{ConstrainedZonotope, HPolytope, Halfspace, Zonotope, TOL};

/// Coefficients with `|a_ij|` at or below this are treated as zero during
/// interval refinement.
pub const COEF_ZERO_TOL: f64 = 1e-12;

/// Relative outward widening applied to every refined interval.
const OUTWARD: f64 = 1e-9;

/// Default number of refinement passes.
pub const DEFAULT_PASSES: usize = 2;

/// Box of intervals `[lo_j, hi_j]`; a coordinate with `lo > hi` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalVector {
    pub fn filled(n: usize, lo: f64, hi: f64) -> Self {
        IntervalVector {
            lo: vec![lo; n],
            hi: vec![hi; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn empty_at(&self, j: usize) -> bool {
        self.lo[j] > self.hi[j]
    }

    pub fn any_empty(&self) -> bool {
        (0..self.len()).any(|j| self.empty_at(j))
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.iter().enumerate().all(|(j, v)| *v >= self.lo[j] && *v <= self.hi[j])
    }
}

/// Output of [`interval_refine`].
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Bounds on each coefficient over `B_inf(A, b)`.
    pub e: IntervalVector,
    /// Bounds implied by the equality rows alone.
    pub r: IntervalVector,
    /// Some `E_j ∩ R_j` came out empty, so the set is certainly empty.
    pub certified_empty: bool,
    pub passes_run: usize,
}

/// `|f - h^T c| <= sum_i |h^T g_i|`: the zonotope meets the hyperplane
/// `h^T x = f`.
pub fn zonotope_hyperplane_intersects(z: &Zonotope, hs: &Halfspace) -> Result<bool> {
    dim_check("halfspace", z.dim(), hs.dim())?;
    let (d1, d2) = offsets(z.generators(), z.center(), hs);
    Ok(d1.abs() <= d2 + TOL * (1.0 + d2))
}

/// `(f - h^T c, sum_i |h^T g_i|)`.
fn offsets(g: &DMatrix<f64>, c: &DVector<f64>, hs: &Halfspace) -> (f64, f64) {
    let h = hs.normal();
    let d1 = hs.offset() - h.dot(c);
    let d2 = (h.transpose() * g).iter().map(|v| v.abs()).sum::<f64>();
    (d1, d2)
}

/// Exact `Z ∩ {h^T x <= f}` for a zonotope that meets the hyperplane.
///
/// Adds one generator and one constraint `[h^T G, d_m/2] xi = f - h^T c - d_m/2`
/// with `d_m = f - h^T c + sum_i |h^T g_i|`.
pub fn zonotope_halfspace_intersection(z: &Zonotope, hs: &Halfspace) -> Result<ConstrainedZonotope> {
    if !zonotope_hyperplane_intersects(z, hs)? {
        return Err(SetError::InvalidArgument(
            "zonotope does not meet the hyperplane".into(),
        ));
    }
    conzono_halfspace_intersection(&z.to_conzono(), hs)
}

/// `Z ∩ {h^T x <= f}` for a zonotope, including the non-crossing cases:
/// returns `Z` itself when the center side is inside and an empty set when
/// it is outside.
pub fn zonotope_halfspace_cut(z: &Zonotope, hs: &Halfspace) -> Result<ConstrainedZonotope> {
    if zonotope_hyperplane_intersects(z, hs)? {
        return conzono_halfspace_intersection(&z.to_conzono(), hs);
    }
    if hs.contains(z.center()) {
        Ok(z.to_conzono())
    } else {
        Ok(empty_set(z.dim()))
    }
}

/// A canonical empty constrained zonotope in `R^n` (`xi = 2`, `|xi| <= 1`).
pub fn empty_set(n: usize) -> ConstrainedZonotope {
    ConstrainedZonotope::new(
        DVector::zeros(n),
        DMatrix::zeros(n, 1),
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, 2.0),
    )
    .expect("well-formed empty set")
}

/// Cut of a constrained zonotope by `h^T x <= f`.
///
/// Appends the zero generator column and the row `[h^T G, d_m/2]`. When the
/// parent lies strictly outside the halfspace `d_m` is negative; it is then
/// clamped to zero, which leaves the infeasible hyperplane row and keeps the
/// result exactly empty.
pub fn conzono_halfspace_intersection(z: &ConstrainedZonotope, hs: &Halfspace) -> Result<ConstrainedZonotope> {
    dim_check("halfspace", z.dim(), hs.dim())?;
    let (d1, d2) = offsets(z.generators(), z.center(), hs);
    let dm = (d1 + d2).max(0.0);
    let (n, ng, nc) = (z.dim(), z.n_gens(), z.n_cons());
    let mut g = DMatrix::zeros(n, ng + 1);
    g.columns_mut(0, ng).copy_from(z.generators());
    let mut a = DMatrix::zeros(nc + 1, ng + 1);
    a.view_mut((0, 0), (nc, ng)).copy_from(z.constraints());
    let hg = hs.normal().transpose() * z.generators();
    a.view_mut((nc, 0), (1, ng)).copy_from(&hg);
    a[(nc, ng)] = dm / 2.0;
    let mut b = DVector::zeros(nc + 1);
    b.rows_mut(0, nc).copy_from(z.offsets());
    b[nc] = d1 - dm / 2.0;
    ConstrainedZonotope::new(z.center().clone(), g, a, b)
}

/// `(min, max)` of `h^T x` over the set, by two LPs.
pub fn conzono_hyperplane_range(z: &ConstrainedZonotope, hs: &Halfspace) -> Result<(f64, f64)> {
    dim_check("halfspace", z.dim(), hs.dim())?;
    let h = hs.normal();
    let hi = z.support_with_point(h)?.ok_or(SetError::EmptySet)?.0;
    let lo = -z.support_with_point(&(-h))?.ok_or(SetError::EmptySet)?.0;
    Ok((lo, hi))
}

/// Single-LP test for `Z ∩ {h^T x <= f} != ∅`.
pub fn conzono_halfspace_feasible(z: &ConstrainedZonotope, hs: &Halfspace) -> Result<bool> {
    dim_check("halfspace", z.dim(), hs.dim())?;
    let (mut lp, xi) = z.xi_program(Sense::Minimize);
    let hg = hs.normal().transpose() * z.generators();
    let terms: Vec<(Var, f64)> = xi.iter().zip(hg.iter()).map(|(&v, &c)| (v, c)).collect();
    lp.add_le(&terms, hs.offset() - hs.normal().dot(z.center()));
    let out = solve_lp(&lp);
    match out.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        _ => Err(SetError::Numerical(
            out.message.unwrap_or_else(|| "feasibility LP failed".into()),
        )),
    }
}

/// Interval bounds on the coefficients of `B_inf(A, b)` by constraint
/// propagation, repeated for `passes` sweeps over the rows.
///
/// Each update is widened outward so that rounding can never certify a
/// nonempty set as empty. Stops early once emptiness is certified.
pub fn interval_refine(z: &ConstrainedZonotope, passes: usize) -> Refinement {
    let ng = z.n_gens();
    let a = z.constraints();
    let b = z.offsets();
    let mut e = IntervalVector::filled(ng, -1.0, 1.0);
    let mut r = IntervalVector::filled(ng, f64::NEG_INFINITY, f64::INFINITY);
    let mut passes_run = 0;
    for _ in 0..passes {
        passes_run += 1;
        for i in 0..z.n_cons() {
            for j in 0..ng {
                let aij = a[(i, j)];
                if aij.abs() <= COEF_ZERO_TOL {
                    continue;
                }
                // interval of b_i - sum_{k != j} a_ik E_k, then divided by a_ij
                let mut lo = b[i];
                let mut hi = b[i];
                let mut mag = b[i].abs();
                for k in 0..ng {
                    if k == j {
                        continue;
                    }
                    let aik = a[(i, k)];
                    if aik == 0.0 {
                        continue;
                    }
                    let (p, q) = (aik * e.lo[k], aik * e.hi[k]);
                    lo -= p.max(q);
                    hi -= p.min(q);
                    mag += aik.abs() * e.lo[k].abs().max(e.hi[k].abs());
                }
                let (mut rlo, mut rhi) = if aij > 0.0 {
                    (lo / aij, hi / aij)
                } else {
                    (hi / aij, lo / aij)
                };
                let pad = OUTWARD * (1.0 + mag / aij.abs());
                rlo -= pad;
                rhi += pad;
                r.lo[j] = r.lo[j].max(rlo);
                r.hi[j] = r.hi[j].min(rhi);
                e.lo[j] = e.lo[j].max(r.lo[j]);
                e.hi[j] = e.hi[j].min(r.hi[j]);
                if e.empty_at(j) {
                    return Refinement {
                        e,
                        r,
                        certified_empty: true,
                        passes_run,
                    };
                }
            }
        }
    }
    Refinement {
        e,
        r,
        certified_empty: false,
        passes_run,
    }
}

/// How to decide whether a halfspace cut is redundant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainmentCheck {
    /// Support of the parent zonotope (ignores the equality constraints).
    ParentZonotope,
    /// Exact, by maximizing `h^T x` over the set.
    Lp,
    /// Interval refinement on the intersection with the complement.
    Interval { passes: usize },
    /// Never skip a cut.
    Never,
}

/// `true` proves `Z ⊆ {h^T x <= f}`; `false` means not proven.
pub fn conzono_in_halfspace(z: &ConstrainedZonotope, hs: &Halfspace, check: ContainmentCheck) -> Result<bool> {
    dim_check("halfspace", z.dim(), hs.dim())?;
    let slack = TOL * (1.0 + hs.offset().abs());
    match check {
        ContainmentCheck::ParentZonotope => Ok(z.parent().support(hs.normal())? <= hs.offset() + slack),
        ContainmentCheck::Lp => match z.support_with_point(hs.normal())? {
            Some((v, _)) => Ok(v <= hs.offset() + slack),
            None => Ok(true),
        },
        ContainmentCheck::Interval { passes } => {
            let outside = conzono_halfspace_intersection(z, &hs.complement())?;
            Ok(interval_refine(&outside, passes).certified_empty)
        }
        ContainmentCheck::Never => Ok(false),
    }
}

/// Result of [`intersect_hpolytope`].
#[derive(Debug, Clone)]
pub struct PolytopeCut {
    pub set: ConstrainedZonotope,
    /// Number of halfspaces that added a generator and a constraint.
    pub cuts: usize,
    /// Emptiness was detected along the way.
    pub empty: bool,
}

/// `Z ∩ P`, cutting one halfspace at a time and skipping the ones the
/// check proves redundant.
pub fn intersect_hpolytope(z: &ConstrainedZonotope, p: &HPolytope, check: ContainmentCheck) -> Result<PolytopeCut> {
    dim_check("H-polytope", z.dim(), p.dim())?;
    let mut set = z.clone();
    let mut cuts = 0;
    let mut empty = false;
    for hs in p.halfspaces() {
        if conzono_in_halfspace(&set, &hs, check)? {
            continue;
        }
        let (d1, d2) = offsets(set.generators(), set.center(), &hs);
        if d1 + d2 < -TOL * (1.0 + d2) {
            empty = true;
        }
        set = conzono_halfspace_intersection(&set, &hs)?;
        cuts += 1;
    }
    Ok(PolytopeCut { set, cuts, empty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn parallelogram_cut() -> (Zonotope, Halfspace) {
        (
            Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 1.0, 0.0, 2.0]).unwrap(),
            Halfspace::from_slice(&[3.0, 1.0], 3.0).unwrap(),
        )
    }

    fn unit_box() -> Zonotope {
        Zonotope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0])).unwrap()
    }

    fn random_zono(rng: &mut ChaCha8Rng, ng: usize) -> Zonotope {
        let g = DMatrix::from_fn(2, ng, |_, _| rng.gen_range(-1.0..1.0));
        let c = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
        Zonotope::new(c, g).unwrap()
    }

    fn random_halfspace(rng: &mut ChaCha8Rng) -> Halfspace {
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        Halfspace::from_slice(&[t.cos(), t.sin()], rng.gen_range(-1.5..1.5)).unwrap()
    }

    #[test]
    fn parallelogram_cut_golden() {
        let (z, hs) = parallelogram_cut();
        assert!(zonotope_hyperplane_intersects(&z, &hs).unwrap());
        let zh = zonotope_halfspace_intersection(&z, &hs).unwrap();
        assert_eq!(
            zh.generators(),
            &DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 2.0, 0.0])
        );
        assert_eq!(zh.constraints(), &DMatrix::from_row_slice(1, 3, &[3.0, 5.0, 5.5]));
        assert_eq!(zh.offsets(), &dv(&[-2.5]));
        assert!(zh.contains_point(&dv(&[0.0, 0.0])).unwrap());
    }

    #[test]
    fn far_hyperplane_misses_box() {
        let hs = Halfspace::from_slice(&[1.0, 0.0], 5.0).unwrap();
        assert!(!zonotope_hyperplane_intersects(&unit_box(), &hs).unwrap());
        assert!(zonotope_halfspace_intersection(&unit_box(), &hs).is_err());
        let kept = zonotope_halfspace_cut(&unit_box(), &hs).unwrap();
        assert!(kept.is_zonotope());
        let gone = zonotope_halfspace_cut(&unit_box(), &hs.complement()).unwrap();
        assert!(gone.is_empty().unwrap());
    }

    #[test]
    fn supporting_hyperplane_keeps_face() {
        // h^T x <= -1 touches the unit box along its left edge
        let hs = Halfspace::from_slice(&[1.0, 0.0], -1.0).unwrap();
        let cut = zonotope_halfspace_intersection(&unit_box(), &hs).unwrap();
        for y in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert!(cut.contains_point(&dv(&[-1.0, y])).unwrap());
        }
        assert!(!cut.contains_point(&dv(&[-0.9, 0.0])).unwrap());
    }

    #[test]
    fn conzono_cut_matches_zonotope_cut() {
        let (z, hs) = parallelogram_cut();
        assert_eq!(
            conzono_halfspace_intersection(&z.to_conzono(), &hs).unwrap(),
            zonotope_halfspace_intersection(&z, &hs).unwrap()
        );
    }

    #[test]
    fn cut_strictly_outside_is_empty() {
        let hs = Halfspace::from_slice(&[1.0, 0.0], -5.0).unwrap();
        let cut = conzono_halfspace_intersection(&unit_box().to_conzono(), &hs).unwrap();
        assert!(cut.is_empty().unwrap());
        assert!(interval_refine(&cut, 1).certified_empty);
    }

    #[test]
    fn grid_membership_of_random_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = random_zono(&mut rng, 3);
            let hs = random_halfspace(&mut rng);
            let cut = zonotope_halfspace_cut(&z, &hs).unwrap();
            let zc = z.to_conzono();
            for _ in 0..20 {
                let x = dv(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
                let margin = hs.normal().dot(&x) - hs.offset();
                if margin.abs() < 1e-6 {
                    continue;
                }
                let expect = zc.contains_point(&x).unwrap() && margin < 0.0;
                assert_eq!(cut.contains_point(&x).unwrap(), expect);
            }
        }
    }

    #[test]
    fn range_of_singleton_and_parallelogram() {
        let s = ConstrainedZonotope::singleton(dv(&[1.0, 2.0])).unwrap();
        let hs = Halfspace::from_slice(&[3.0, 1.0], 0.0).unwrap();
        let (lo, hi) = conzono_hyperplane_range(&s, &hs).unwrap();
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
        let (z, hs) = parallelogram_cut();
        let (lo, hi) = conzono_hyperplane_range(&z.to_conzono(), &hs).unwrap();
        assert!((lo + 8.0).abs() < 1e-9 && (hi - 8.0).abs() < 1e-9);
        assert_eq!(conzono_hyperplane_range(&empty_set(2), &hs), Err(SetError::EmptySet));
    }

    #[test]
    fn single_lp_feasibility() {
        let inside = Halfspace::from_slice(&[1.0, 0.0], 2.0).unwrap();
        assert!(conzono_halfspace_feasible(&unit_box().to_conzono(), &inside).unwrap());
        let beyond = Halfspace::from_slice(&[1.0, 0.0], -5.0).unwrap();
        assert!(!conzono_halfspace_feasible(&unit_box().to_conzono(), &beyond).unwrap());
    }

    #[test]
    fn refine_without_constraints_is_trivial() {
        let rf = interval_refine(&unit_box().to_conzono(), 2);
        assert_eq!(rf.e, IntervalVector::filled(2, -1.0, 1.0));
        assert_eq!(rf.r, IntervalVector::filled(2, f64::NEG_INFINITY, f64::INFINITY));
        assert!(!rf.certified_empty);
    }

    #[test]
    fn refine_detects_out_of_box_coefficient() {
        let z = ConstrainedZonotope::new(
            dv(&[0.0]),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            dv(&[2.0]),
        )
        .unwrap();
        let rf = interval_refine(&z, 1);
        assert!(rf.certified_empty);
        assert!((rf.r.lo[0] - 2.0).abs() < 1e-8 && (rf.r.hi[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn all_checks_accept_box_well_inside() {
        let hs = Halfspace::from_slice(&[1.0, 0.0], 2.0).unwrap();
        let z = unit_box().to_conzono();
        for check in [
            ContainmentCheck::ParentZonotope,
            ContainmentCheck::Lp,
            ContainmentCheck::Interval { passes: 2 },
        ] {
            assert!(conzono_in_halfspace(&z, &hs, check).unwrap());
        }
        assert!(!conzono_in_halfspace(&z, &hs, ContainmentCheck::Never).unwrap());
    }

    /// The parallelogram cut set checked against a hyperplane the parent crosses
    /// but the cut set stays below.
    #[test]
    fn cut_set_inside_while_parent_crosses() {
        let (z, hs) = parallelogram_cut();
        let zc = zonotope_halfspace_intersection(&z, &hs).unwrap();
        let loose = Halfspace::from_slice(&[3.0, 1.0], 3.5).unwrap();
        assert!(!conzono_in_halfspace(&zc, &loose, ContainmentCheck::ParentZonotope).unwrap());
        assert!(conzono_in_halfspace(&zc, &loose, ContainmentCheck::Lp).unwrap());
        let (lo, hi) = conzono_hyperplane_range(&zc, &Halfspace::from_slice(&[3.0, 1.0], 0.0).unwrap()).unwrap();
        assert!(lo < 3.5 && hi <= 3.0 + 1e-9);
    }

    #[test]
    fn second_pass_certifies_containment() {
        let (z, hs) = parallelogram_cut();
        let zc = zonotope_halfspace_intersection(&z, &hs).unwrap();
        let right = Halfspace::from_slice(&[1.0, 0.0], 1.5).unwrap();
        assert!(!conzono_in_halfspace(&zc, &right, ContainmentCheck::ParentZonotope).unwrap());
        assert!(!conzono_in_halfspace(&zc, &right, ContainmentCheck::Interval { passes: 1 }).unwrap());
        assert!(conzono_in_halfspace(&zc, &right, ContainmentCheck::Interval { passes: 2 }).unwrap());
        let (lo, hi) = conzono_hyperplane_range(&zc, &right).unwrap();
        assert!(lo <= hi && hi < 1.5);
    }

    #[test]
    fn strategies_sound_and_lp_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let z = random_zono(&mut rng, 4);
            let zc = zonotope_halfspace_cut(&z, &random_halfspace(&mut rng)).unwrap();
            if zc.is_empty().unwrap() {
                continue;
            }
            let hs = random_halfspace(&mut rng);
            let truth = zc.support(hs.normal()).unwrap() <= hs.offset() + 1e-9;
            assert_eq!(conzono_in_halfspace(&zc, &hs, ContainmentCheck::Lp).unwrap(), truth);
            for check in [
                ContainmentCheck::ParentZonotope,
                ContainmentCheck::Interval { passes: 1 },
                ContainmentCheck::Interval { passes: 3 },
            ] {
                if conzono_in_halfspace(&zc, &hs, check).unwrap() {
                    assert!(truth, "{check:?} claimed containment wrongly");
                }
            }
        }
    }

    #[test]
    fn polytope_cut_skips_redundant_rows() {
        let z = unit_box().to_conzono();
        let p = HPolytope::from_box(&dv(&[-2.0, -2.0]), &dv(&[2.0, 0.5])).unwrap();
        let out = intersect_hpolytope(&z, &p, ContainmentCheck::Lp).unwrap();
        assert_eq!(out.cuts, 1);
        assert!(!out.empty);
        assert!(out.set.contains_point(&dv(&[0.0, 0.5])).unwrap());
        assert!(!out.set.contains_point(&dv(&[0.0, 0.6])).unwrap());
        let one = HPolytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), dv(&[3.0])).unwrap();
        let kept = intersect_hpolytope(&z, &one, ContainmentCheck::ParentZonotope).unwrap();
        assert_eq!(kept.set, z);
        let never = intersect_hpolytope(&z, &p, ContainmentCheck::Never).unwrap();
        assert_eq!(never.cuts, 4);
    }
}
