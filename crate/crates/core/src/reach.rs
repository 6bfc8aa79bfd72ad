//! Backward reachable waysets of a constrained discrete-time linear system.
//!
//! The wayset for target `x*` and horizon `N` holds every initial state that
//! can be steered to `x*` in exactly `N` steps while keeping states in `X`
//! and inputs in `U`.

use nalgebra::{DMatrix, DVector};

use crate::containment::{inner_scale, make_template, ScaleNorm, TemplateKind};
use crate::error::{dim_check, Result, SetError};
use crate::halfspace::{intersect_hpolytope, ContainmentCheck, DEFAULT_PASSES};
use crate::reduction::remove_redundant_pairs;
use crate::sets::{ConstrainedZonotope, HPolytope, Zonotope, TOL};

/// `x(k+1) = A x(k) + B u(k)` with `x ∈ X` and `u ∈ U`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DMatrix<f64>,
    states: HPolytope,
    state_generators: Option<ConstrainedZonotope>,
    inputs: Zonotope,
}

impl LinearSystem {
    /// Rejects a singular or non-square `A` and mismatched dimensions. When
    /// `X` is an axis-aligned box its generator form is kept for the
    /// generalized-intersection method.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, states: HPolytope, inputs: Zonotope) -> Result<Self> {
        let n = a.nrows();
        dim_check("state matrix columns", n, a.ncols())?;
        dim_check("input matrix rows", n, b.nrows())?;
        dim_check("input set dimension", b.ncols(), inputs.dim())?;
        dim_check("state set dimension", n, states.dim())?;
        let a_inv = a
            .clone()
            .try_inverse()
            .filter(|m| m.iter().all(|v| v.is_finite()))
            .ok_or_else(|| SetError::InvalidArgument("state matrix is singular".into()))?;
        let state_generators = box_of(&states).map(|z| z.to_conzono());
        Ok(LinearSystem {
            a,
            a_inv,
            b,
            states,
            state_generators,
            inputs,
        })
    }

    /// Supplies the generator form of `X` used by the generalized
    /// intersection, for state sets that are not boxes.
    pub fn with_state_generators(mut self, x: ConstrainedZonotope) -> Result<Self> {
        dim_check("state set dimension", self.dim(), x.dim())?;
        self.state_generators = Some(x);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn states(&self) -> &HPolytope {
        &self.states
    }

    pub fn inputs(&self) -> &Zonotope {
        &self.inputs
    }

    /// 2-norm condition number of `A`.
    pub fn condition_number(&self) -> f64 {
        let sv = self.a.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    }

    /// `A^{-1} Z ⊕ (-A^{-1} B) U`: the states one step before `Z`, ignoring
    /// the state constraints.
    pub fn predecessor(&self, z: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
        let back = z.linear_map(&self.a_inv)?;
        let pushed = self.inputs.linear_map(&(-&self.a_inv * &self.b))?;
        back.minkowski_sum(&pushed.to_conzono())
    }
}

/// Axis-aligned box rows (each row a signed unit vector, both sides
/// bounded) as a zonotope.
fn box_of(p: &HPolytope) -> Option<Zonotope> {
    let n = p.dim();
    let mut lo = DVector::from_element(n, f64::NEG_INFINITY);
    let mut hi = DVector::from_element(n, f64::INFINITY);
    for hs in p.halfspaces() {
        let h = hs.normal();
        let nz: Vec<usize> = (0..n).filter(|&i| h[i] != 0.0).collect();
        let [i] = nz[..] else { return None };
        let bound = hs.offset() / h[i];
        if h[i] > 0.0 {
            hi[i] = hi[i].min(bound);
        } else {
            lo[i] = lo[i].max(bound);
        }
    }
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) || (0..n).any(|i| lo[i] > hi[i]) {
        return None;
    }
    Zonotope::from_box(&lo, &hi).ok()
}

/// How each step intersects the predecessor set with `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaysetMethod {
    /// Cut a face of `X` only when the parent zonotope crosses it.
    ParentZonotope,
    /// Generalized intersection with the generator form of `X` every step.
    Generalized,
    /// Cut only when an LP shows the set leaves the halfspace.
    Lp,
    /// Cut unless interval refinement proves the outside part empty.
    Interval { passes: usize },
}

impl WaysetMethod {
    /// Interval method with the default pass count.
    pub const INTERVAL: WaysetMethod = WaysetMethod::Interval { passes: DEFAULT_PASSES };
}

/// Output of [`wayset`].
#[derive(Debug, Clone)]
pub struct Wayset {
    /// Initial-state set `Z_c(k)`.
    pub set: ConstrainedZonotope,
    /// Sets `Z_c(k+N), ..., Z_c(k)` in computation order when requested.
    pub trace: Vec<ConstrainedZonotope>,
    /// Halfspace cuts added at each step (for the generalized method, the
    /// generator count of `X`).
    pub cuts: Vec<usize>,
    /// No state can reach the target.
    pub empty: bool,
}

/// Backward recursion from `x*` over `horizon` steps. Stops early once a
/// cut proves the set empty.
pub fn wayset(
    sys: &LinearSystem,
    x_star: &DVector<f64>,
    horizon: usize,
    method: WaysetMethod,
    keep_trace: bool,
) -> Result<Wayset> {
    dim_check("target dimension", sys.dim(), x_star.len())?;
    if horizon == 0 {
        return Err(SetError::InvalidArgument("horizon must be at least 1".into()));
    }
    let generators = match method {
        WaysetMethod::Generalized => Some(sys.state_generators.as_ref().ok_or_else(|| {
            SetError::InvalidArgument("generalized intersection needs the generator form of the state set".into())
        })?),
        _ => None,
    };
    let mut set = ConstrainedZonotope::singleton(x_star.clone())?;
    let mut trace = Vec::new();
    if keep_trace {
        trace.push(set.clone());
    }
    let mut cuts = Vec::with_capacity(horizon);
    let mut flagged = false;
    for _ in 0..horizon {
        let pred = sys.predecessor(&set)?;
        let check = match method {
            WaysetMethod::ParentZonotope => ContainmentCheck::ParentZonotope,
            WaysetMethod::Lp => ContainmentCheck::Lp,
            WaysetMethod::Interval { passes } => ContainmentCheck::Interval { passes },
            WaysetMethod::Generalized => ContainmentCheck::Never,
        };
        if let Some(x) = generators {
            cuts.push(x.n_gens());
            set = pred.intersection(x)?;
        } else {
            let out = intersect_hpolytope(&pred, &sys.states, check)?;
            cuts.push(out.cuts);
            flagged = out.empty;
            set = out.set;
        }
        if keep_trace {
            trace.push(set.clone());
        }
        if flagged {
            break;
        }
    }
    let empty = flagged || set.is_empty()?;
    Ok(Wayset {
        set,
        trace,
        cuts,
        empty,
    })
}

/// Removes redundant generator/constraint pairs from a wayset. Parallel
/// generators are kept: the input directions repeat at every step, and
/// merging them would hide how many steps contributed.
pub fn wayset_reduce(z_c: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    remove_redundant_pairs(z_c)
}

/// Largest axis-aligned box inside the wayset, optionally forced to
/// contain `anchor`. An anchor outside the wayset is reported as
/// infeasible.
pub fn wayset_inner_box(z_c: &ConstrainedZonotope, anchor: Option<&DVector<f64>>) -> Result<ConstrainedZonotope> {
    if let Some(p) = anchor {
        dim_check("anchor dimension", z_c.dim(), p.len())?;
        if !z_c.contains_point(p)? {
            return Err(SetError::Infeasible("anchor lies outside the wayset".into()));
        }
    }
    let template = make_template(z_c, TemplateKind::Box)?;
    let points: Vec<DVector<f64>> = anchor.into_iter().cloned().collect();
    Ok(inner_scale(z_c, &template, ScaleNorm::Inf, &points)?.0)
}

/// Applies inputs `u_0, ..., u_{N-1}` from `x0`, returning every state
/// including the first. Inputs and states are not checked against the
/// constraints.
pub fn simulate(sys: &LinearSystem, x0: &DVector<f64>, inputs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    dim_check("initial state dimension", sys.dim(), x0.len())?;
    let mut out = vec![x0.clone()];
    for u in inputs {
        dim_check("input dimension", sys.b.ncols(), u.len())?;
        let next = &sys.a * out.last().expect("nonempty") + &sys.b * u;
        out.push(next);
    }
    Ok(out)
}

/// `true` when `x` satisfies the state constraints within the shared
/// tolerance.
pub fn state_admissible(sys: &LinearSystem, x: &DVector<f64>) -> bool {
    let slack = TOL * (1.0 + x.amax());
    (0..sys.states.n_rows()).all(|i| sys.states.normals().row(i).transpose().dot(x) <= sys.states.offsets()[i] + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn planar(bound: f64) -> LinearSystem {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::identity(2, 2);
        let x = HPolytope::from_box(&dv(&[-bound, -bound]), &dv(&[bound, bound])).unwrap();
        let u = Zonotope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0])).unwrap();
        LinearSystem::new(a, b, x, u).unwrap()
    }

    #[test]
    fn one_step_without_active_constraints_is_a_parallelotope() {
        let sys = planar(1e6);
        let x_star = dv(&[1.0, 2.0]);
        for method in [WaysetMethod::ParentZonotope, WaysetMethod::Lp, WaysetMethod::INTERVAL] {
            let w = wayset(&sys, &x_star, 1, method, false).unwrap();
            assert!(w.set.is_zonotope());
            assert_eq!(w.set.n_gens(), 2);
            let a_inv = sys.state_matrix().clone().try_inverse().unwrap();
            assert!((w.set.center() - &a_inv * &x_star).amax() < 1e-12);
            assert!((w.set.generators() + &a_inv).amax() < 1e-12);
        }
        let gi = wayset(&sys, &x_star, 1, WaysetMethod::Generalized, false).unwrap();
        assert_eq!((gi.set.n_gens(), gi.set.n_cons()), (4, 2));
    }

    #[test]
    fn methods_agree_on_membership() {
        let sys = planar(3.0);
        let x_star = dv(&[2.0, 0.5]);
        let sets: Vec<_> = [
            WaysetMethod::ParentZonotope,
            WaysetMethod::Generalized,
            WaysetMethod::Lp,
            WaysetMethod::INTERVAL,
        ]
        .iter()
        .map(|&m| wayset(&sys, &x_star, 3, m, true).unwrap())
        .collect();
        for w in &sets {
            assert!(!w.empty);
            assert_eq!(w.trace.len(), 4);
            assert!(oracle::sets_equal(&w.set, &sets[0].set, 21).unwrap());
        }
    }

    #[test]
    fn unreachable_target_is_flagged() {
        let sys = planar(3.0);
        let w = wayset(&sys, &dv(&[10.0, 10.0]), 2, WaysetMethod::Lp, false).unwrap();
        assert!(w.empty);
    }

    #[test]
    fn singular_dynamics_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = HPolytope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0])).unwrap();
        let u = Zonotope::from_box(&dv(&[-1.0]), &dv(&[1.0])).unwrap();
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(
            LinearSystem::new(a, b, x, u),
            Err(SetError::InvalidArgument(_))
        ));
    }

    #[test]
    fn anchor_outside_rejected() {
        let sys = planar(3.0);
        let w = wayset(&sys, &dv(&[2.0, 0.5]), 2, WaysetMethod::Lp, false).unwrap();
        assert!(matches!(
            wayset_inner_box(&w.set, Some(&dv(&[50.0, 50.0]))),
            Err(SetError::Infeasible(_))
        ));
        let inside = w.set.feasible_point().unwrap().unwrap();
        let b = wayset_inner_box(&w.set, Some(&inside)).unwrap();
        assert!(b.contains_point(&inside).unwrap());
    }

    fn vehicle() -> (LinearSystem, DVector<f64>, DVector<f64>) {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, -1.0, 0.0, -1.0, -1.0, -1.0]);
        let x = HPolytope::from_box(&dv(&[-1.0, -20.0, 0.0]), &dv(&[105.0, 20.0, 100.0])).unwrap();
        let u = Zonotope::from_box(&DVector::zeros(3), &DVector::from_element(3, 1.0)).unwrap();
        let sys = LinearSystem::new(a, b, x, u).unwrap();
        let start = dv(&[0.0, 0.0, 80.0]);
        let traj = simulate(&sys, &start, &vec![dv(&[0.5, 0.1, 0.5]); 10]).unwrap();
        let target = traj.last().unwrap().clone();
        (sys, start, target)
    }

    #[test]
    fn vehicle_sizes_and_cut_schedule() {
        let (sys, _, target) = vehicle();
        assert!((target.clone() - dv(&[18.0, 4.0, 69.0])).amax() < 1e-9);
        let zh = wayset(&sys, &target, 10, WaysetMethod::ParentZonotope, true).unwrap();
        assert_eq!((zh.set.n_cons(), zh.set.n_gens()), (7, 37));
        assert_eq!(zh.cuts, vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1]);
        assert!(zh.trace[..4].iter().all(|s| s.is_zonotope()));
        assert!(!zh.trace[4].is_zonotope());
        let gi = wayset(&sys, &target, 10, WaysetMethod::Generalized, false).unwrap();
        assert_eq!((gi.set.n_cons(), gi.set.n_gens()), (30, 60));
        for m in [WaysetMethod::Lp, WaysetMethod::INTERVAL] {
            let w = wayset(&sys, &target, 10, m, false).unwrap();
            assert_eq!((w.set.n_cons(), w.set.n_gens()), (7, 37), "{m:?}");
        }
        let red = wayset_reduce(&gi.set).unwrap();
        assert_eq!((red.n_cons(), red.n_gens()), (7, 37));
        assert!(oracle::sets_equal(&red, &zh.set, 9).unwrap());
    }

    #[test]
    fn vehicle_membership_matches_horizon_program() {
        let (sys, start, target) = vehicle();
        let w = wayset(&sys, &target, 10, WaysetMethod::ParentZonotope, false).unwrap();
        let feasible = |x: &DVector<f64>| {
            oracle::horizon_feasible(
                sys.state_matrix(),
                sys.input_matrix(),
                sys.states(),
                sys.inputs(),
                x,
                &target,
                10,
            )
            .unwrap()
        };
        assert!(w.set.contains_point(&start).unwrap() && feasible(&start));
        for d in oracle::icosphere(1) {
            let (_, p) = w.set.support_with_point(&d).unwrap().unwrap();
            let inner = &start + (&p - &start) * 0.99;
            assert!(feasible(&inner), "{d:?}");
            assert!(!feasible(&(&p + &d * 0.5)), "{d:?}");
        }
    }
}
