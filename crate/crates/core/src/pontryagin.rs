//! Pontryagin difference `Z1 ⊖ Z2 = {z : z ⊕ Z2 ⊆ Z1}`.

use nalgebra::{DMatrix, DVector};

use crate::containment::{ContainmentCertificate, ScalingResult};
use crate::error::{dim_check, Result, SetError};
use crate::numerics::{LinearProgram, Sense, Var};
use crate::reduction::{reduce_fully, DEFAULT_EPS};
use crate::scaling::{self, ScaleNorm};
use crate::sets::{ConstrainedZonotope, Zonotope, TOL};

/// Limits for [`pontryagin_iterative_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PontryaginOptions {
    /// Largest generator count allowed at any step.
    pub max_generators: usize,
    /// Largest number of constraint-matrix entries allowed at any step.
    pub max_entries: usize,
    /// Run full redundancy removal after every intersection.
    pub reduce_between_steps: bool,
}

impl Default for PontryaginOptions {
    fn default() -> Self {
        PontryaginOptions {
            max_generators: 1 << 20,
            max_entries: 1 << 25,
            reduce_between_steps: false,
        }
    }
}

/// Exact difference with default options. The flag is `true` when the
/// difference is empty.
pub fn pontryagin_iterative(z1: &ConstrainedZonotope, z2: &Zonotope) -> Result<(ConstrainedZonotope, bool)> {
    pontryagin_iterative_with(z1, z2, &PontryaginOptions::default())
}

/// Sizes after `k` steps without reduction: `(2^k n_g1, 2^k n_c1 + n (2^k - 1))`.
pub fn predicted_size(z1: &ConstrainedZonotope, k: usize) -> Option<(usize, usize)> {
    let factor = 1usize.checked_shl(k as u32)?;
    let ng = factor.checked_mul(z1.n_gens())?;
    let nc = factor
        .checked_mul(z1.n_cons())?
        .checked_add(z1.dim().checked_mul(factor - 1)?)?;
    Some((ng, nc))
}

/// Exact difference by intersecting the two translates `Z ± g` for every
/// generator `g` of `z2`, starting from `z1 - c2`. Representation size
/// doubles with every generator; the step is refused when it would exceed
/// the limits in `opts`.
pub fn pontryagin_iterative_with(
    z1: &ConstrainedZonotope,
    z2: &Zonotope,
    opts: &PontryaginOptions,
) -> Result<(ConstrainedZonotope, bool)> {
    dim_check("subtrahend dimension", z1.dim(), z2.dim())?;
    let mut cur = z1.translate(&-z2.center())?;
    for g in z2.generators().column_iter() {
        let (ng, nc) = (2 * cur.n_gens(), 2 * cur.n_cons() + cur.dim());
        if ng > opts.max_generators || ng.saturating_mul(nc) > opts.max_entries {
            return Err(SetError::BudgetExceeded(format!(
                "next step needs {nc} x {ng} constraints, above the configured limit"
            )));
        }
        let g = g.into_owned();
        let plus = cur.translate(&g)?;
        let minus = cur.translate(&-g)?;
        cur = plus.intersection(&minus)?;
        if opts.reduce_between_steps {
            cur = reduce_fully(&cur, DEFAULT_EPS)?;
        }
    }
    let empty = cur.is_empty()?;
    Ok((cur, empty))
}

/// Decision variables of the one-step program:
/// `n_g1^2 + 2 n_g1 n_g2 + 2 n_g1 + n_g2 + n`.
pub fn pontryagin_onestep_variable_count(z1: &Zonotope, z2: &Zonotope) -> usize {
    let (n, g1, g2) = (z1.dim(), z1.n_gens(), z2.n_gens());
    g1 * g1 + 2 * g1 * g2 + 2 * g1 + g2 + n
}

struct OnestepProgram {
    lp: LinearProgram,
    tmpl: DMatrix<f64>,
    phi: Vec<Var>,
    active: Vec<usize>,
    c_d: Vec<Var>,
    gamma: Vec<Vec<(Var, Var)>>,
    beta: Vec<(Var, Var)>,
}

fn onestep_program(z1: &Zonotope, z2: &Zonotope) -> OnestepProgram {
    let n = z1.dim();
    let (g1, g2) = (z1.generators(), z2.generators());
    let (n1, n2) = (g1.ncols(), g2.ncols());
    let mut tmpl = DMatrix::zeros(n, n1 + n2);
    tmpl.columns_mut(0, n1).copy_from(g1);
    tmpl.columns_mut(n1, n2).copy_from(g2);
    let m = n1 + 2 * n2;

    let mut lp = LinearProgram::new(Sense::Maximize);
    let scale = tmpl.amax().max(f64::MIN_POSITIVE);
    let active: Vec<usize> = (0..n1 + n2).filter(|&i| tmpl.column(i).amax() > TOL * scale).collect();
    let phi: Vec<Var> = (0..n1 + n2)
        .map(|i| {
            if active.contains(&i) {
                lp.add_var(0.0, 0.0, f64::INFINITY)
            } else {
                lp.add_var(0.0, 1.0, 1.0)
            }
        })
        .collect();
    let c_d = lp.add_vars(n, f64::NEG_INFINITY, f64::INFINITY);
    let pair = |lp: &mut LinearProgram| (lp.add_var(0.0, 0.0, f64::INFINITY), lp.add_var(0.0, 0.0, f64::INFINITY));
    let gamma: Vec<Vec<(Var, Var)>> = (0..n1).map(|_| (0..m).map(|_| pair(&mut lp)).collect()).collect();
    let beta: Vec<(Var, Var)> = (0..n1).map(|_| pair(&mut lp)).collect();
    let g1_terms = |k: usize, col: &dyn Fn(usize) -> (Var, Var), sign: f64| -> Vec<(Var, f64)> {
        (0..n1)
            .flat_map(|i| {
                let (p, q) = col(i);
                [(p, sign * g1[(k, i)]), (q, -sign * g1[(k, i)])]
            })
            .collect()
    };
    for k in 0..n {
        for l in 0..n1 + n2 {
            let mut terms = g1_terms(k, &|i| gamma[i][l], -1.0);
            terms.push((phi[l], tmpl[(k, l)]));
            lp.add_eq(&terms, 0.0);
        }
        for l in 0..n2 {
            let terms = g1_terms(k, &|i| gamma[i][n1 + n2 + l], 1.0);
            lp.add_eq(&terms, g2[(k, l)]);
        }
        let mut terms = g1_terms(k, &|i| beta[i], 1.0);
        terms.push((c_d[k], 1.0));
        lp.add_eq(&terms, z1.center()[k] - z2.center()[k]);
    }
    for i in 0..n1 {
        let terms: Vec<_> = gamma[i]
            .iter()
            .chain(std::iter::once(&beta[i]))
            .flat_map(|&(p, q)| [(p, 1.0), (q, 1.0)])
            .collect();
        lp.add_le(&terms, 1.0);
    }
    OnestepProgram {
        lp,
        tmpl,
        phi,
        active,
        c_d,
        gamma,
        beta,
    }
}

impl OnestepProgram {
    fn extract(&self, x: &[f64]) -> Result<(Zonotope, ScalingResult)> {
        let (n, n1) = (self.tmpl.nrows(), self.gamma.len());
        let m = self.gamma.first().map_or(0, |r| r.len());
        let val = |(p, q): (Var, Var)| x[p.0] - x[q.0];
        let phi = DVector::from_iterator(self.phi.len(), self.phi.iter().map(|v| x[v.0]));
        let c = DVector::from_iterator(n, self.c_d.iter().map(|v| x[v.0]));
        let z = Zonotope::new(c.clone(), &self.tmpl * DMatrix::from_diagonal(&phi))?;
        Ok((
            z,
            ScalingResult {
                phi,
                c_r: c,
                certificate: ContainmentCertificate {
                    gamma: DMatrix::from_fn(n1, m, |i, l| val(self.gamma[i][l])),
                    beta: DVector::from_fn(n1, |i, _| val(self.beta[i])),
                    lambda: None,
                },
            },
        ))
    }
}

/// Zonotopic inner approximation `{[G1 G2] Φ, c_d} ⊆ Z1 ⊖ Z2`. The
/// certificate proves `Z̃_d ⊕ Z2 ⊆ Z1`, with the generators of the sum
/// ordered `[G1 Φ1, G2 Φ2, G2]`.
///
/// `One` and `Two` maximize that norm of the scale factors. `Inf` sizes the
/// scaled generator matrix itself: it maximizes the total Euclidean length
/// of its columns, which keeps long generators long instead of equalizing
/// the factors.
pub fn pontryagin_onestep(z1: &Zonotope, z2: &Zonotope, norm: ScaleNorm) -> Result<(Zonotope, ScalingResult)> {
    const WHAT: &str = "the difference admits no scaled inner approximation";
    dim_check("subtrahend dimension", z1.dim(), z2.dim())?;
    let prog = onestep_program(z1, z2);
    let free: Vec<Var> = prog.active.iter().map(|&i| prog.phi[i]).collect();
    let x = match norm {
        ScaleNorm::Inf => {
            let lengths: Vec<f64> = prog.active.iter().map(|&i| prog.tmpl.column(i).norm()).collect();
            let x = scaling::maximize_weighted(&prog.lp, &free, &lengths, WHAT)?;
            let total: f64 = free.iter().zip(&lengths).map(|(v, w)| x[v.0] * w).sum();
            if !free.is_empty() && total <= TOL * lengths.iter().sum::<f64>() {
                return Err(SetError::Infeasible(WHAT.to_string()));
            }
            x
        }
        _ => scaling::maximize(&prog.lp, &free, norm, WHAT)?,
    };
    prog.extract(&x)
}
