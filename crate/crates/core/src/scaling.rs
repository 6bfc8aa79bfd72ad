//! Norm objectives over a vector of nonnegative scale factors inside an
//! otherwise fixed linear program.

use crate::error::{Result, SetError};
use crate::numerics::{solve_lp, LinearProgram, LpStatus, Sense, Var};
use crate::sets::TOL;

/// Norm applied to the scale factors of the one-step programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleNorm {
    /// Sum of the factors.
    One,
    /// Euclidean length.
    Two,
    /// Largest factor (minimization) or smallest factor (maximization),
    /// with the sum as a tie-break.
    #[default]
    Inf,
}

const MAX_ROUNDS: usize = 200;
const REL_GAP: f64 = 1e-7;

fn solve(lp: &LinearProgram, what: &str) -> Result<Vec<f64>> {
    let out = solve_lp(lp);
    match out.status {
        LpStatus::Infeasible => Err(SetError::Infeasible(what.to_string())),
        LpStatus::Unbounded => Err(SetError::Numerical(format!("{what}: program is unbounded"))),
        _ => Ok(out.into_optimal()?.0),
    }
}

fn with_costs(base: &LinearProgram, sense: Sense, phi: &[Var], w: &[f64]) -> LinearProgram {
    let mut lp = base.clone();
    lp.sense = sense;
    for (v, c) in phi.iter().zip(w) {
        lp.set_cost(*v, *c);
    }
    lp
}

fn values(x: &[f64], phi: &[Var]) -> Vec<f64> {
    phi.iter().map(|v| x[v.0]).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximizes the chosen norm of `phi` (all with zero cost in `base`).
/// The Euclidean case is a local maximum from successive linearization
/// started at the max-min point.
pub(crate) fn maximize(base: &LinearProgram, phi: &[Var], norm: ScaleNorm, what: &str) -> Result<Vec<f64>> {
    if phi.is_empty() {
        return solve(base, what);
    }
    let ones = vec![1.0; phi.len()];
    match norm {
        ScaleNorm::One => solve(&with_costs(base, Sense::Maximize, phi, &ones), what),
        ScaleNorm::Inf => max_min(base, phi, what),
        ScaleNorm::Two => {
            let mut x = max_min(base, phi, what)?;
            let mut best = norm2(&values(&x, phi));
            for _ in 0..MAX_ROUNDS {
                let w = values(&x, phi);
                // the current point stays feasible, so a failed step ends the refinement
                let Ok(next) = solve(&with_costs(base, Sense::Maximize, phi, &w), what) else {
                    break;
                };
                let val = norm2(&values(&next, phi));
                if val <= best * (1.0 + REL_GAP) {
                    break;
                }
                best = val;
                x = next;
            }
            Ok(x)
        }
    }
}

/// Maximizes `w·phi` for nonnegative weights.
pub(crate) fn maximize_weighted(base: &LinearProgram, phi: &[Var], w: &[f64], what: &str) -> Result<Vec<f64>> {
    solve(&with_costs(base, Sense::Maximize, phi, w), what)
}

fn max_min(base: &LinearProgram, phi: &[Var], what: &str) -> Result<Vec<f64>> {
    let mut lp = base.clone();
    lp.sense = Sense::Maximize;
    let t = lp.add_var(1.0, 0.0, f64::INFINITY);
    for &v in phi {
        lp.add_le(&[(t, 1.0), (v, -1.0)], 0.0);
    }
    let x = solve(&lp, what)?;
    let floor = x[t.0];
    if floor <= TOL {
        return Err(SetError::Infeasible(what.to_string()));
    }
    let mut lp = with_costs(base, Sense::Maximize, phi, &vec![1.0; phi.len()]);
    for &v in phi {
        lp.bounds[v.0].0 = floor * (1.0 - 1e-9);
    }
    solve(&lp, what)
}

/// Minimizes the chosen norm of `phi`. The Euclidean case uses tangent-plane
/// cuts of the (convex) norm until the lower bound meets the incumbent.
pub(crate) fn minimize(base: &LinearProgram, phi: &[Var], norm: ScaleNorm, what: &str) -> Result<Vec<f64>> {
    if phi.is_empty() {
        return solve(base, what);
    }
    let ones = vec![1.0; phi.len()];
    match norm {
        ScaleNorm::One => solve(&with_costs(base, Sense::Minimize, phi, &ones), what),
        ScaleNorm::Inf => {
            let mut lp = base.clone();
            lp.sense = Sense::Minimize;
            let t = lp.add_var(1.0, 0.0, f64::INFINITY);
            for &v in phi {
                lp.add_le(&[(v, 1.0), (t, -1.0)], 0.0);
            }
            let x = solve(&lp, what)?;
            let cap = x[t.0] * (1.0 + 1e-9) + 1e-12;
            let mut lp = with_costs(base, Sense::Minimize, phi, &ones);
            for &v in phi {
                lp.bounds[v.0].1 = lp.bounds[v.0].1.min(cap);
            }
            solve(&lp, what)
        }
        ScaleNorm::Two => {
            let mut lp = base.clone();
            lp.sense = Sense::Minimize;
            let t = lp.add_var(1.0, 0.0, f64::INFINITY);
            let mut incumbent = solve(&with_costs(base, Sense::Minimize, phi, &ones), what)?;
            let mut best = norm2(&values(&incumbent, phi));
            let mut cut_at = values(&incumbent, phi);
            for _ in 0..MAX_ROUNDS {
                let len = norm2(&cut_at);
                if len <= TOL {
                    break;
                }
                let mut terms: Vec<_> = phi.iter().zip(&cut_at).map(|(v, c)| (*v, c / len)).collect();
                terms.push((t, -1.0));
                lp.add_le(&terms, 0.0);
                // cuts never remove the incumbent, so a solver failure here
                // ends the refinement instead of the whole program
                let Ok(x) = solve(&lp, what) else {
                    break;
                };
                let lower = x[t.0];
                cut_at = values(&x, phi);
                let val = norm2(&cut_at);
                if val < best {
                    best = val;
                    incumbent = x[..base.num_vars()].to_vec();
                }
                if best - lower <= REL_GAP * best.max(1.0) {
                    break;
                }
            }
            Ok(incumbent)
        }
    }
}
