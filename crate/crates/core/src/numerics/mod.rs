//! LP abstraction and dense linear algebra shared by the optimization-backed
//! set operations.

mod linalg;
mod lp;

pub use linalg::{gauss_jordan_full_pivot, nullspace_basis, pinv_solve, rank, RowEchelon, PIVOT_REL_TOL};
pub use lp::{
    feasibility_tolerance, set_feasibility_tolerance, solve_lp, LinearProgram, LpOutcome, LpStatus, Row, RowKind,
    Sense, Var, LP_FEAS_TOL,
};
