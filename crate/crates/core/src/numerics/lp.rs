//! Thin linear-programming layer.
//!
//! Every optimization-backed operation in the crate builds a [`LinearProgram`]
//! and hands it to [`solve_lp`]. The backend is the pure-Rust simplex solver
//! from `microlp`; nothing outside this module touches it.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SetError};

/// Default feasibility tolerance applied to returned optima.
pub const LP_FEAS_TOL: f64 = 1e-6;

static FEAS_TOL_BITS: AtomicU64 = AtomicU64::new(0x3EB0_C6F7_A0B5_ED8D);

/// Feasibility tolerance currently in force (process-wide).
pub fn feasibility_tolerance() -> f64 {
    f64::from_bits(FEAS_TOL_BITS.load(Ordering::Relaxed))
}

/// Overrides the feasibility tolerance for every later solve. Rejects
/// values that are not finite and positive.
pub fn set_feasibility_tolerance(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SetError::InvalidArgument(format!(
            "LP tolerance must be positive, got {tol}"
        )));
    }
    FEAS_TOL_BITS.store(tol.to_bits(), Ordering::Relaxed);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

/// Handle to a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

#[derive(Debug, Clone)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub solution: Option<Vec<f64>>,
    pub objective: f64,
    pub message: Option<String>,
}

impl LpOutcome {
    fn failed(status: LpStatus, message: impl Into<String>) -> Self {
        LpOutcome {
            status,
            solution: None,
            objective: f64::NAN,
            message: Some(message.into()),
        }
    }

    /// Optimal solution and value, or an error describing why there is none.
    pub fn into_optimal(self) -> Result<(Vec<f64>, f64)> {
        match self.status {
            LpStatus::Optimal => Ok((self.solution.unwrap_or_default(), self.objective)),
            LpStatus::Infeasible => Err(SetError::Infeasible("linear program".into())),
            LpStatus::Unbounded => Err(SetError::Numerical("linear program is unbounded".into())),
            LpStatus::NumericalFailure => Err(SetError::Numerical(
                self.message.unwrap_or_else(|| "LP solver failure".into()),
            )),
        }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            bounds: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> Var {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        Var(self.objective.len() - 1)
    }

    pub fn add_free(&mut self, cost: f64) -> Var {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_vars(&mut self, count: usize, lo: f64, hi: f64) -> Vec<Var> {
        (0..count).map(|_| self.add_var(0.0, lo, hi)).collect()
    }

    pub fn set_cost(&mut self, v: Var, cost: f64) {
        self.objective[v.0] = cost;
    }

    pub fn add_row(&mut self, terms: &[(Var, f64)], kind: RowKind, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(v, c) in terms {
            if c == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(i, _)| *i == v.0) {
                Some(t) => t.1 += c,
                None => merged.push((v.0, c)),
            }
        }
        self.rows.push(Row {
            terms: merged,
            kind,
            rhs,
        });
    }

    pub fn add_le(&mut self, terms: &[(Var, f64)], rhs: f64) {
        self.add_row(terms, RowKind::Le, rhs)
    }

    pub fn add_ge(&mut self, terms: &[(Var, f64)], rhs: f64) {
        self.add_row(terms, RowKind::Ge, rhs)
    }

    pub fn add_eq(&mut self, terms: &[(Var, f64)], rhs: f64) {
        self.add_row(terms, RowKind::Eq, rhs)
    }

    /// Largest constraint violation of `x` (bounds included), each row
    /// measured relative to its own magnitude.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            let scale = 1.0 + x[i].abs();
            worst = worst.max((lo - x[i]) / scale).max((x[i] - hi) / scale);
        }
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut mag = row.rhs.abs();
            for &(j, c) in &row.terms {
                lhs += c * x[j];
                mag += (c * x[j]).abs();
            }
            let scale = 1.0 + mag;
            let v = match row.kind {
                RowKind::Le => (lhs - row.rhs) / scale,
                RowKind::Ge => (row.rhs - lhs) / scale,
                RowKind::Eq => (lhs - row.rhs).abs() / scale,
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// Solves `p`. Never reports a silently wrong optimum: a returned solution
/// that violates the program by more than [`feasibility_tolerance`] is downgraded to
/// `NumericalFailure`.
///
/// A numerical failure of the simplex backend is retried with the rows and
/// columns presented in a different order, which changes the pivot
/// sequence, and with scaling toggled.
pub fn solve_lp(p: &LinearProgram) -> LpOutcome {
    for (i, &(lo, hi)) in p.bounds.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || p.objective[i].is_nan() {
            return LpOutcome::failed(LpStatus::NumericalFailure, "NaN in program data");
        }
        if lo > hi {
            return LpOutcome::failed(LpStatus::Infeasible, "empty variable bound");
        }
    }
    for row in &p.rows {
        if row.rhs.is_nan() || row.terms.iter().any(|t| !t.1.is_finite()) {
            return LpOutcome::failed(LpStatus::NumericalFailure, "non-finite row data");
        }
    }
    let mut out = attempt(p, None, true);
    for round in 0..RETRIES {
        if out.status != LpStatus::NumericalFailure {
            break;
        }
        out = attempt(p, Some(round as u64), round % 2 == 1);
    }
    out
}

/// Retries after a numerical failure of the backend.
const RETRIES: usize = 4;

fn attempt(p: &LinearProgram, shuffle: Option<u64>, scale: bool) -> LpOutcome {
    let direction = match p.sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    };
    let (row_scale, col_scale) = if scale {
        equilibrate(p)
    } else {
        (vec![1.0; p.rows.len()], vec![1.0; p.num_vars()])
    };
    let mut col_order: Vec<usize> = (0..p.num_vars()).collect();
    let mut row_order: Vec<usize> = (0..p.rows.len()).collect();
    if let Some(seed) = shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        col_order.shuffle(&mut rng);
        row_order.shuffle(&mut rng);
    }
    let mut problem = Problem::new(direction);
    let mut vars = vec![None; p.num_vars()];
    for &j in &col_order {
        let d = col_scale[j];
        let (lo, hi) = p.bounds[j];
        vars[j] = Some(problem.add_var(p.objective[j] * d, (lo / d, hi / d)));
    }
    let vars: Vec<_> = vars.into_iter().map(|v| v.expect("every column added")).collect();
    for &i in &row_order {
        let (row, r) = (&p.rows[i], row_scale[i]);
        if row.terms.is_empty() {
            let ok = match row.kind {
                RowKind::Le => 0.0 <= row.rhs + feasibility_tolerance(),
                RowKind::Ge => 0.0 >= row.rhs - feasibility_tolerance(),
                RowKind::Eq => row.rhs.abs() <= feasibility_tolerance(),
            };
            if ok {
                continue;
            }
            return LpOutcome::failed(LpStatus::Infeasible, "constant row violated");
        }
        let terms: Vec<_> = row
            .terms
            .iter()
            .map(|&(j, c)| (vars[j], c * r * col_scale[j]))
            .collect();
        let op = match row.kind {
            RowKind::Le => ComparisonOp::Le,
            RowKind::Ge => ComparisonOp::Ge,
            RowKind::Eq => ComparisonOp::Eq,
        };
        problem.add_constraint(terms.as_slice(), op, row.rhs * r);
    }

    let outcome = match problem.solve() {
        Ok(o) => o,
        Err(microlp::Error::Infeasible) => return LpOutcome::failed(LpStatus::Infeasible, "infeasible"),
        Err(microlp::Error::Unbounded) => return LpOutcome::failed(LpStatus::Unbounded, "unbounded"),
        Err(e) => return LpOutcome::failed(LpStatus::NumericalFailure, e.to_string()),
    };
    let solution = match outcome.into_solution() {
        Ok(s) => s,
        Err(_) => return LpOutcome::failed(LpStatus::NumericalFailure, "solve interrupted"),
    };
    let x: Vec<f64> = vars
        .iter()
        .zip(&col_scale)
        .map(|(&v, &d)| solution.var_value_raw(v) * d)
        .collect();
    let viol = p.max_violation(&x);
    if !(viol <= feasibility_tolerance()) {
        return LpOutcome::failed(
            LpStatus::NumericalFailure,
            format!("returned point violates constraints by {viol:.3e}"),
        );
    }
    let objective = x.iter().zip(&p.objective).map(|(a, c)| a * c).sum();
    LpOutcome {
        status: LpStatus::Optimal,
        solution: Some(x),
        objective,
        message: None,
    }
}

/// Power-of-two row and column factors from a few rounds of geometric-mean
/// scaling, so that rescaling introduces no rounding error.
fn equilibrate(p: &LinearProgram) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![1.0; p.rows.len()];
    let mut cols = vec![1.0; p.num_vars()];
    let pow2 = |v: f64| {
        if v.is_finite() && v > 0.0 {
            v.log2().round().exp2()
        } else {
            1.0
        }
    };
    for _ in 0..4 {
        for (i, row) in p.rows.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(j, c) in &row.terms {
                let v = (c * cols[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi > 0.0 {
                rows[i] = pow2(1.0 / (lo * hi).sqrt());
            }
        }
        let mut lo = vec![f64::INFINITY; cols.len()];
        let mut hi = vec![0.0f64; cols.len()];
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, c) in &row.terms {
                let v = (c * rows[i]).abs();
                if v > 0.0 {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            }
        }
        for j in 0..cols.len() {
            if hi[j] > 0.0 {
                cols[j] = pow2(1.0 / (lo[j] * hi[j]).sqrt());
            }
        }
    }
    (rows, cols)
}
