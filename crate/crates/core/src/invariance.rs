//! Robust positively invariant outer approximations of the minimal RPI set
//! of `x+ = A x + w`, `w ∈ W`.

use nalgebra::{DMatrix, DVector};

use crate::containment::{zonotope_contains, ContainmentCertificate, ScalingResult};
use crate::error::{dim_check, Result, SetError};
use crate::numerics::{LinearProgram, Sense, Var};
use crate::oracle;
use crate::scaling::{self, ScaleNorm};
use crate::sets::{HPolytope, Zonotope, TOL};

/// Step limit of [`mrpi_iterative`].
pub const MAX_STEPS: usize = 10_000;
/// Convergence tolerance of the Riccati recursion in [`lqr_gain`].
pub const RICCATI_TOL: f64 = 1e-12;
const RICCATI_MAX_ITERS: usize = 1_000_000;

/// Stable autonomous system with a zonotopic disturbance set.
#[derive(Debug, Clone)]
pub struct AutonomousSystem {
    a: DMatrix<f64>,
    w: Zonotope,
    w_h: Option<HPolytope>,
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

impl AutonomousSystem {
    /// Rejects non-square or unstable `a` and disturbance sets that do not
    /// contain the origin. `w_h`, when given, must describe the same set as
    /// `w`; it is only used for the contraction test of [`mrpi_iterative`].
    pub fn new(a: DMatrix<f64>, w: Zonotope, w_h: Option<HPolytope>) -> Result<Self> {
        dim_check("state matrix columns", a.nrows(), a.ncols())?;
        dim_check("disturbance dimension", a.nrows(), w.dim())?;
        if let Some(h) = &w_h {
            dim_check("disturbance halfspaces", w.dim(), h.dim())?;
        }
        let rho = spectral_radius(&a);
        if rho >= 1.0 - TOL {
            return Err(SetError::InvalidArgument(format!(
                "state matrix is not strictly stable (spectral radius {rho})"
            )));
        }
        if !w.to_conzono().contains_point(&DVector::zeros(w.dim()))? {
            return Err(SetError::InvalidArgument(
                "disturbance set must contain the origin".into(),
            ));
        }
        Ok(AutonomousSystem { a, w, w_h })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn disturbance(&self) -> &Zonotope {
        &self.w
    }

    /// Halfspace description of `W`: the supplied one, the box faces for an
    /// axis-aligned `W`, or the enumerated facets for `n <= 3`.
    pub fn disturbance_halfspaces(&self) -> Result<HPolytope> {
        if let Some(h) = &self.w_h {
            return Ok(h.clone());
        }
        let g = self.w.generators();
        let axis_aligned = g.column_iter().all(|c| c.iter().filter(|v| v.abs() > 0.0).count() <= 1);
        if axis_aligned {
            let (lo, hi) = self.w.interval_hull();
            return HPolytope::from_box(&lo, &hi);
        }
        if self.dim() > 3 {
            return Err(SetError::InvalidArgument(
                "disturbance halfspaces must be supplied for a non-box set above three dimensions".into(),
            ));
        }
        let rep = oracle::hull_rep(&self.w.to_conzono())?
            .filter(|r| !r.flat)
            .ok_or_else(|| SetError::InvalidArgument("disturbance set has no interior".into()))?;
        let n = self.dim();
        let h = DMatrix::from_fn(rep.normals.len(), n, |i, j| rep.normals[i][j]);
        HPolytope::new(h, DVector::from_vec(rep.offsets.clone()))
    }
}

/// `W ⊕ A W ⊕ ... ⊕ A^s W`.
pub fn f_s(sys: &AutonomousSystem, s: usize) -> Zonotope {
    let (n, nw) = (sys.dim(), sys.w.n_gens());
    let mut g = DMatrix::zeros(n, (s + 1) * nw);
    let mut c = DVector::zeros(n);
    let mut block = sys.w.generators().clone();
    let mut shift = sys.w.center().clone();
    for i in 0..=s {
        g.columns_mut(i * nw, nw).copy_from(&block);
        c += &shift;
        block = &sys.a * block;
        shift = &sys.a * shift;
    }
    Zonotope::new(c, g).expect("shapes are consistent")
}

/// Outer approximation of the minimal RPI set within `eps` in the infinity
/// norm, by the contraction test `A^s W ⊆ α W` and the error bound
/// `α/(1-α) M(s) <= eps`. Returns `(1-α)^{-1} (W ⊕ ... ⊕ A^{s-1} W)`, `α`
/// and `s`. Supports are evaluated in closed form.
pub fn mrpi_iterative(sys: &AutonomousSystem, eps: f64) -> Result<(Zonotope, f64, usize)> {
    if !(eps > 0.0) {
        return Err(SetError::InvalidArgument("eps must be positive".into()));
    }
    let facets = sys.disturbance_halfspaces()?;
    if facets.offsets().iter().any(|&f| f <= 0.0) {
        return Err(SetError::InvalidArgument(
            "the origin must be interior to the disturbance set".into(),
        ));
    }
    let n = sys.dim();
    let w = &sys.w;
    let mut power = DMatrix::identity(n, n);
    let mut up = DVector::<f64>::zeros(n);
    let mut down = DVector::<f64>::zeros(n);
    for s in 1..=MAX_STEPS {
        // up/down accumulate the supports of A^i W along ±e_j for i < s.
        for j in 0..n {
            let row = power.row(j).transpose();
            up[j] += w.support(&row)?;
            down[j] += w.support(&-row)?;
        }
        power = &sys.a * power;
        let mut alpha = 0.0f64;
        for (i, hs) in facets.halfspaces().enumerate() {
            let dir = power.transpose() * hs.normal();
            alpha = alpha.max(w.support(&dir)? / facets.offsets()[i]);
        }
        if alpha >= 1.0 {
            continue;
        }
        let m = up.max().max(down.max());
        if alpha * m <= eps * (1.0 - alpha) {
            let f = f_s(sys, s - 1).scale(1.0 / (1.0 - alpha));
            return Ok((f, alpha, s));
        }
    }
    Err(SetError::BudgetExceeded(format!(
        "no convergence within {MAX_STEPS} steps"
    )))
}

/// Certificate that `A Z ⊕ W ⊆ Z`.
pub fn rpi_certificate(sys: &AutonomousSystem, z: &Zonotope) -> Result<Option<ContainmentCertificate>> {
    zonotope_contains(&successor(sys, z)?, z)
}

/// `A Z ⊕ W`.
pub fn successor(sys: &AutonomousSystem, z: &Zonotope) -> Result<Zonotope> {
    dim_check("set dimension", sys.dim(), z.dim())?;
    z.linear_map(&sys.a)?.minkowski_sum(&sys.w)
}

/// Number of decision variables of the one-step program before the split
/// into positive and negative parts: `n_g^2 + n_g (n_w + 2) + n`.
pub fn rpi_onestep_variable_count(sys: &AutonomousSystem, s: usize) -> usize {
    let (n, nw) = (sys.dim(), sys.w.n_gens());
    let ng = (s + 1) * nw;
    ng * ng + ng * (nw + 2) + n
}

/// Smallest scaling `{G Φ, c}` of `G = [G_w, A G_w, ..., A^s G_w]` that is
/// RPI, in the chosen norm of the scale factors. A zero factor drops its
/// generator. The certificate is the containment `A Z ⊕ W ⊆ Z`.
pub fn rpi_onestep(sys: &AutonomousSystem, s: usize, norm: ScaleNorm) -> Result<(Zonotope, ScalingResult)> {
    let n = sys.dim();
    let g = f_s(sys, s).generators().clone();
    let (gw, cw) = (sys.w.generators(), sys.w.center());
    let (ng, nw) = (g.ncols(), gw.ncols());
    let ag = &sys.a * &g;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let c = lp.add_vars(n, f64::NEG_INFINITY, f64::INFINITY);
    let phi = lp.add_vars(ng, 0.0, f64::INFINITY);
    // Γ1, Γ2 and β are split into nonnegative parts p - m.
    let split = |lp: &mut LinearProgram, rows: usize, cols: usize| -> Vec<Vec<(Var, Var)>> {
        (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| (lp.add_var(0.0, 0.0, f64::INFINITY), lp.add_var(0.0, 0.0, f64::INFINITY)))
                    .collect()
            })
            .collect()
    };
    let g1 = split(&mut lp, ng, ng);
    let g2 = split(&mut lp, ng, nw);
    let beta = split(&mut lp, ng, 1);
    for k in 0..n {
        for l in 0..ng {
            let mut terms = vec![(phi[l], ag[(k, l)])];
            for i in 0..ng {
                terms.push((g1[i][l].0, -g[(k, i)]));
                terms.push((g1[i][l].1, g[(k, i)]));
            }
            lp.add_eq(&terms, 0.0);
        }
        for l in 0..nw {
            let mut terms = Vec::with_capacity(2 * ng);
            for i in 0..ng {
                terms.push((g2[i][l].0, g[(k, i)]));
                terms.push((g2[i][l].1, -g[(k, i)]));
            }
            lp.add_eq(&terms, gw[(k, l)]);
        }
        let mut terms: Vec<_> = (0..n)
            .map(|j| (c[j], if j == k { 1.0 } else { 0.0 } - sys.a[(k, j)]))
            .collect();
        for i in 0..ng {
            terms.push((beta[i][0].0, -g[(k, i)]));
            terms.push((beta[i][0].1, g[(k, i)]));
        }
        lp.add_eq(&terms, cw[k]);
    }
    for i in 0..ng {
        let mut terms = vec![(phi[i], -1.0)];
        for &(p, m) in g1[i].iter().chain(&g2[i]).chain(&beta[i]) {
            terms.push((p, 1.0));
            terms.push((m, 1.0));
        }
        lp.add_le(&terms, 0.0);
    }
    let x = scaling::minimize(&lp, &phi, norm, "no RPI scaling exists for this generator template")?;
    let phi_v = DVector::from_iterator(ng, phi.iter().map(|v| x[v.0]));
    let c_v = DVector::from_iterator(n, c.iter().map(|v| x[v.0]));
    let val = |(p, m): (Var, Var)| x[p.0] - x[m.0];
    // certificate rows divided by the scale factors
    let inv = |i: usize| if phi_v[i] > 0.0 { 1.0 / phi_v[i] } else { 0.0 };
    let mut gamma = DMatrix::zeros(ng, ng + nw);
    for i in 0..ng {
        for l in 0..ng {
            gamma[(i, l)] = val(g1[i][l]) * inv(i);
        }
        for l in 0..nw {
            gamma[(i, ng + l)] = val(g2[i][l]) * inv(i);
        }
    }
    let beta_v = DVector::from_fn(ng, |i, _| -val(beta[i][0]) * inv(i));
    let z = Zonotope::new(c_v.clone(), &g * DMatrix::from_diagonal(&phi_v))?;
    Ok((
        z,
        ScalingResult {
            phi: phi_v,
            c_r: c_v,
            certificate: ContainmentCertificate {
                gamma,
                beta: beta_v,
                lambda: None,
            },
        },
    ))
}

/// Infinite-horizon LQR gain `K` (for `u = K x`) from the Riccati recursion
/// iterated to a fixed point.
pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    dim_check("state matrix columns", n, a.ncols())?;
    dim_check("input matrix rows", n, b.nrows())?;
    dim_check("state weight", n, q.nrows())?;
    dim_check("state weight columns", n, q.ncols())?;
    dim_check("input weight", b.ncols(), r.nrows())?;
    dim_check("input weight columns", b.ncols(), r.ncols())?;
    let gain = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let s = r + b.transpose() * p * b;
        let rhs = b.transpose() * p * a;
        s.lu()
            .solve(&rhs)
            .map(|k| -k)
            .ok_or_else(|| SetError::Numerical("singular input weighting in the Riccati step".into()))
    };
    let mut p = q.clone();
    for _ in 0..RICCATI_MAX_ITERS {
        let k = gain(&p)?;
        let acl = a + b * &k;
        let next = q + k.transpose() * r * &k + acl.transpose() * &p * &acl;
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let change = (&next - &p).amax();
        p = next;
        if change <= RICCATI_TOL * (1.0 + p.amax()) {
            return gain(&p);
        }
    }
    Err(SetError::Numerical(
        "Riccati recursion did not converge; the pair may not be stabilizable".into(),
    ))
}

/// Closed loop `A + B K` under the LQR gain, paired with the disturbance set.
pub fn lqr_closed_loop(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    w: Zonotope,
) -> Result<AutonomousSystem> {
    let k = lqr_gain(a, b, q, r)?;
    AutonomousSystem::new(a + b * k, w, None)
}
