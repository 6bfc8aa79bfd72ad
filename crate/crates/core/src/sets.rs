//! Set representations (zonotopes, constrained zonotopes, halfspaces and
//! H-polytopes) and their closed-form operations.
//!
//! A zonotope is `{G xi + c : |xi|_inf <= 1}`. A constrained zonotope adds the
//! equality constraints `A xi = b` on the coefficient vector. All values are
//! immutable; every operation returns a new set.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Result, SetError};
use crate::numerics::{solve_lp, LinearProgram, LpStatus, Sense, Var};

/// Global absolute tolerance for numerical comparisons.
pub const TOL: f64 = 1e-9;

fn check_finite_mat(what: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SetError::InvalidArgument(format!("{what} has non-finite entries")))
    }
}

fn check_finite_vec(what: &str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SetError::InvalidArgument(format!("{what} has non-finite entries")))
    }
}

/// Zonotope in G-Rep: center `c` and generator columns `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    c: DVector<f64>,
    g: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(c: DVector<f64>, g: DMatrix<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(SetError::InvalidArgument("dimension must be at least 1".into()));
        }
        dim_check("generator rows", c.len(), g.nrows())?;
        check_finite_vec("center", &c)?;
        check_finite_mat("generators", &g)?;
        Ok(Zonotope { c, g })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(center: &[f64], n_gens: usize, gens_row_major: &[f64]) -> Result<Self> {
        if gens_row_major.len() != center.len() * n_gens {
            return Err(SetError::DimensionMismatch(
                "generator data does not match n x n_g".into(),
            ));
        }
        Zonotope::new(
            DVector::from_column_slice(center),
            DMatrix::from_row_slice(center.len(), n_gens, gens_row_major),
        )
    }

    /// The singleton `{c}` (no generators).
    pub fn singleton(c: DVector<f64>) -> Result<Self> {
        let n = c.len();
        Zonotope::new(c, DMatrix::zeros(n, 0))
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        dim_check("box bounds", lo.len(), hi.len())?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(SetError::InvalidArgument("box with lo > hi".into()));
        }
        let c = (lo + hi) * 0.5;
        let g = DMatrix::from_diagonal(&((hi - lo) * 0.5));
        Zonotope::new(c, g)
    }

    pub(crate) fn from_parts(c: DVector<f64>, g: DMatrix<f64>) -> Self {
        debug_assert_eq!(c.len(), g.nrows());
        Zonotope { c, g }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn n_gens(&self) -> usize {
        self.g.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `n_g / n`.
    pub fn order(&self) -> f64 {
        self.n_gens() as f64 / self.dim() as f64
    }

    /// `max_{x in Z} h^T x = h^T c + sum_i |h^T g_i|`.
    pub fn support(&self, h: &DVector<f64>) -> Result<f64> {
        dim_check("support direction", self.dim(), h.len())?;
        Ok(h.dot(&self.c) + (h.transpose() * &self.g).iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Half-widths of the interval hull, `sum_i |g_i|`.
    pub fn radius(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.g.row(i).iter().map(|v| v.abs()).sum())
    }

    pub fn interval_hull(&self) -> (DVector<f64>, DVector<f64>) {
        let r = self.radius();
        (&self.c - &r, &self.c + &r)
    }

    pub fn linear_map(&self, r: &DMatrix<f64>) -> Result<Zonotope> {
        dim_check("linear map columns", self.dim(), r.ncols())?;
        Zonotope::new(r * &self.c, r * &self.g)
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        dim_check("Minkowski sum operand", self.dim(), other.dim())?;
        let mut g = DMatrix::zeros(self.dim(), self.n_gens() + other.n_gens());
        g.columns_mut(0, self.n_gens()).copy_from(&self.g);
        g.columns_mut(self.n_gens(), other.n_gens()).copy_from(&other.g);
        Ok(Zonotope::from_parts(&self.c + &other.c, g))
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Zonotope> {
        dim_check("translation", self.dim(), v.len())?;
        Ok(Zonotope::from_parts(&self.c + v, self.g.clone()))
    }

    /// `{s * x : x in Z}`.
    pub fn scale(&self, s: f64) -> Zonotope {
        Zonotope::from_parts(&self.c * s, &self.g * s)
    }

    /// Point `G xi + c`.
    pub fn point(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.g * xi + &self.c
    }

    pub fn to_conzono(&self) -> ConstrainedZonotope {
        ConstrainedZonotope::from(self.clone())
    }
}

/// Constrained zonotope in CG-Rep: `{G xi + c : |xi|_inf <= 1, A xi = b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedZonotope {
    c: DVector<f64>,
    g: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl From<Zonotope> for ConstrainedZonotope {
    fn from(z: Zonotope) -> Self {
        let ng = z.g.ncols();
        ConstrainedZonotope {
            c: z.c,
            g: z.g,
            a: DMatrix::zeros(0, ng),
            b: DVector::zeros(0),
        }
    }
}

impl ConstrainedZonotope {
    pub fn new(c: DVector<f64>, g: DMatrix<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(SetError::InvalidArgument("dimension must be at least 1".into()));
        }
        dim_check("generator rows", c.len(), g.nrows())?;
        dim_check("constraint rows vs b", a.nrows(), b.len())?;
        if a.nrows() > 0 {
            dim_check("constraint columns vs generators", g.ncols(), a.ncols())?;
        }
        check_finite_vec("center", &c)?;
        check_finite_mat("generators", &g)?;
        check_finite_mat("constraint matrix", &a)?;
        check_finite_vec("constraint offsets", &b)?;
        let a = if a.nrows() == 0 {
            DMatrix::zeros(0, g.ncols())
        } else {
            a
        };
        Ok(ConstrainedZonotope { c, g, a, b })
    }

    pub(crate) fn from_parts(c: DVector<f64>, g: DMatrix<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        debug_assert_eq!(c.len(), g.nrows());
        debug_assert_eq!(a.ncols(), g.ncols());
        debug_assert_eq!(a.nrows(), b.len());
        ConstrainedZonotope { c, g, a, b }
    }

    pub fn singleton(c: DVector<f64>) -> Result<Self> {
        Ok(Zonotope::singleton(c)?.into())
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn n_gens(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_cons(&self) -> usize {
        self.a.nrows()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    /// `n_g / n`.
    pub fn order(&self) -> f64 {
        self.n_gens() as f64 / self.dim() as f64
    }

    /// Degrees-of-freedom order `(n_g - n_c) / n`.
    pub fn dof_order(&self) -> f64 {
        (self.n_gens() as f64 - self.n_cons() as f64) / self.dim() as f64
    }

    pub fn is_zonotope(&self) -> bool {
        self.n_cons() == 0
    }

    /// The unconstrained zonotope `{G, c}`, a superset of `self`.
    pub fn parent(&self) -> Zonotope {
        Zonotope::from_parts(self.c.clone(), self.g.clone())
    }

    pub fn point(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.g * xi + &self.c
    }

    /// Closed form `RZ = {RG, Rc, A, b}`.
    pub fn linear_map(&self, r: &DMatrix<f64>) -> Result<Self> {
        dim_check("linear map columns", self.dim(), r.ncols())?;
        if r.nrows() == 0 {
            return Err(SetError::InvalidArgument("linear map to dimension 0".into()));
        }
        Ok(Self::from_parts(
            r * &self.c,
            r * &self.g,
            self.a.clone(),
            self.b.clone(),
        ))
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Self> {
        dim_check("translation", self.dim(), v.len())?;
        Ok(Self::from_parts(
            &self.c + v,
            self.g.clone(),
            self.a.clone(),
            self.b.clone(),
        ))
    }

    /// `Z (+) W = {[G_z G_w], c_z + c_w, blkdiag(A_z, A_w), [b_z; b_w]}`.
    pub fn minkowski_sum(&self, w: &ConstrainedZonotope) -> Result<Self> {
        dim_check("Minkowski sum operand", self.dim(), w.dim())?;
        let (nz, nw) = (self.n_gens(), w.n_gens());
        let (cz, cw) = (self.n_cons(), w.n_cons());
        let mut g = DMatrix::zeros(self.dim(), nz + nw);
        g.columns_mut(0, nz).copy_from(&self.g);
        g.columns_mut(nz, nw).copy_from(&w.g);
        let mut a = DMatrix::zeros(cz + cw, nz + nw);
        a.view_mut((0, 0), (cz, nz)).copy_from(&self.a);
        a.view_mut((cz, nz), (cw, nw)).copy_from(&w.a);
        let mut b = DVector::zeros(cz + cw);
        b.rows_mut(0, cz).copy_from(&self.b);
        b.rows_mut(cz, cw).copy_from(&w.b);
        Ok(Self::from_parts(&self.c + &w.c, g, a, b))
    }

    /// `Z ∩_R Y = {z in Z : R z in Y}`.
    pub fn generalized_intersection(&self, y: &ConstrainedZonotope, r: &DMatrix<f64>) -> Result<Self> {
        dim_check("intersection map columns", self.dim(), r.ncols())?;
        dim_check("intersection map rows", y.dim(), r.nrows())?;
        let (nz, ny) = (self.n_gens(), y.n_gens());
        let (cz, cy) = (self.n_cons(), y.n_cons());
        let m = y.dim();
        let mut g = DMatrix::zeros(self.dim(), nz + ny);
        g.columns_mut(0, nz).copy_from(&self.g);
        let mut a = DMatrix::zeros(cz + cy + m, nz + ny);
        a.view_mut((0, 0), (cz, nz)).copy_from(&self.a);
        a.view_mut((cz, nz), (cy, ny)).copy_from(&y.a);
        a.view_mut((cz + cy, 0), (m, nz)).copy_from(&(r * &self.g));
        a.view_mut((cz + cy, nz), (m, ny)).copy_from(&(-&y.g));
        let mut b = DVector::zeros(cz + cy + m);
        b.rows_mut(0, cz).copy_from(&self.b);
        b.rows_mut(cz, cy).copy_from(&y.b);
        b.rows_mut(cz + cy, m).copy_from(&(&y.c - r * &self.c));
        Ok(Self::from_parts(self.c.clone(), g, a, b))
    }

    /// Standard intersection (`R = I`).
    pub fn intersection(&self, y: &ConstrainedZonotope) -> Result<Self> {
        let r = DMatrix::identity(self.dim(), self.dim());
        self.generalized_intersection(y, &r)
    }

    /// LP over the coefficient vector with `|xi| <= 1` and `A xi = b` already
    /// installed. Returns the program and the `xi` variable handles.
    pub(crate) fn xi_program(&self, sense: Sense) -> (LinearProgram, Vec<Var>) {
        let mut lp = LinearProgram::new(sense);
        let xi = lp.add_vars(self.n_gens(), -1.0, 1.0);
        for i in 0..self.n_cons() {
            let terms: Vec<(Var, f64)> = xi.iter().zip(self.a.row(i).iter()).map(|(&v, &c)| (v, c)).collect();
            lp.add_eq(&terms, self.b[i]);
        }
        (lp, xi)
    }

    /// Membership test by LP feasibility of `G xi = x - c`, `A xi = b`,
    /// `|xi|_inf <= 1`.
    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool> {
        dim_check("point", self.dim(), x.len())?;
        if self.n_gens() == 0 {
            return Ok((x - &self.c).amax() <= TOL);
        }
        let (mut lp, xi) = self.xi_program(Sense::Minimize);
        for i in 0..self.dim() {
            let terms: Vec<(Var, f64)> = xi.iter().zip(self.g.row(i).iter()).map(|(&v, &c)| (v, c)).collect();
            lp.add_eq(&terms, x[i] - self.c[i]);
        }
        interpret_feasibility(solve_lp(&lp))
    }

    /// Any point of the set, or `None` when empty.
    pub fn feasible_point(&self) -> Result<Option<DVector<f64>>> {
        if self.n_cons() == 0 {
            return Ok(Some(self.c.clone()));
        }
        match self.feasible_coefficients()? {
            Some(xi) => Ok(Some(self.point(&xi))),
            None => Ok(None),
        }
    }

    /// A coefficient vector in `B_inf(A, b)`, or `None` when empty.
    pub fn feasible_coefficients(&self) -> Result<Option<DVector<f64>>> {
        let (lp, _) = self.xi_program(Sense::Minimize);
        let out = solve_lp(&lp);
        match out.status {
            LpStatus::Optimal => Ok(Some(DVector::from_vec(out.solution.unwrap()))),
            LpStatus::Infeasible => Ok(None),
            _ => Err(SetError::Numerical(
                out.message.unwrap_or_else(|| "feasibility LP failed".into()),
            )),
        }
    }

    /// True iff `{A xi = b, |xi|_inf <= 1}` is infeasible.
    pub fn is_empty(&self) -> Result<bool> {
        if self.n_cons() == 0 {
            return Ok(false);
        }
        Ok(self.feasible_coefficients()?.is_none())
    }

    /// `max_{x in Z} h^T x` together with a maximizer; `None` when empty.
    pub fn support_with_point(&self, h: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>> {
        dim_check("support direction", self.dim(), h.len())?;
        if self.n_gens() == 0 {
            return Ok(Some((h.dot(&self.c), self.c.clone())));
        }
        let (mut lp, xi) = self.xi_program(Sense::Maximize);
        let hg = h.transpose() * &self.g;
        for (k, v) in xi.iter().enumerate() {
            lp.set_cost(*v, hg[k]);
        }
        let out = solve_lp(&lp);
        match out.status {
            LpStatus::Optimal => {
                let xi = DVector::from_vec(out.solution.unwrap());
                let x = self.point(&xi);
                Ok(Some((h.dot(&x), x)))
            }
            LpStatus::Infeasible => Ok(None),
            _ => Err(SetError::Numerical(
                out.message.unwrap_or_else(|| "support LP failed".into()),
            )),
        }
    }

    /// Support function; algebraic when there are no constraints.
    pub fn support(&self, h: &DVector<f64>) -> Result<f64> {
        if self.n_cons() == 0 {
            return self.parent().support(h);
        }
        match self.support_with_point(h)? {
            Some((v, _)) => Ok(v),
            None => Err(SetError::EmptySet),
        }
    }

    /// Tight interval hull by `2n` support evaluations.
    pub fn interval_hull(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        if self.n_cons() == 0 {
            return Ok(self.parent().interval_hull());
        }
        let n = self.dim();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            hi[i] = self.support(&e)?;
            lo[i] = -self.support(&(-e))?;
        }
        Ok((lo, hi))
    }
}

fn interpret_feasibility(out: crate::numerics::LpOutcome) -> Result<bool> {
    match out.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        _ => Err(SetError::Numerical(
            out.message.unwrap_or_else(|| "membership LP failed".into()),
        )),
    }
}

/// Halfspace `{x : h^T x <= f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    h: DVector<f64>,
    f: f64,
}

impl Halfspace {
    pub fn new(h: DVector<f64>, f: f64) -> Result<Self> {
        if h.iter().all(|v| *v == 0.0) {
            return Err(SetError::InvalidArgument("halfspace normal must be nonzero".into()));
        }
        check_finite_vec("halfspace normal", &h)?;
        if !f.is_finite() {
            return Err(SetError::InvalidArgument("halfspace offset must be finite".into()));
        }
        Ok(Halfspace { h, f })
    }

    pub fn from_slice(h: &[f64], f: f64) -> Result<Self> {
        Halfspace::new(DVector::from_column_slice(h), f)
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.h
    }

    pub fn offset(&self) -> f64 {
        self.f
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// The closed complement side `{x : h^T x >= f}` written as `<=`.
    pub fn complement(&self) -> Halfspace {
        Halfspace {
            h: -&self.h,
            f: -self.f,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.h.dot(x) <= self.f + TOL
    }
}

/// H-polytope `{x : H x <= f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    h: DMatrix<f64>,
    f: DVector<f64>,
}

impl HPolytope {
    pub fn new(h: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        dim_check("H-polytope rows", h.nrows(), f.len())?;
        if h.ncols() == 0 {
            return Err(SetError::InvalidArgument("dimension must be at least 1".into()));
        }
        for i in 0..h.nrows() {
            if h.row(i).iter().all(|v| *v == 0.0) {
                return Err(SetError::InvalidArgument(format!("H-polytope row {i} is zero")));
            }
        }
        check_finite_mat("H", &h)?;
        if f.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(SetError::InvalidArgument("H-polytope offsets must be finite".into()));
        }
        Ok(HPolytope { h, f })
    }

    /// `lo <= x <= hi` as `2n` rows ordered `x_i <= hi_i`, then `-x_i <= -lo_i`.
    pub fn from_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        dim_check("box bounds", lo.len(), hi.len())?;
        let n = lo.len();
        let mut h = DMatrix::zeros(2 * n, n);
        let mut f = DVector::zeros(2 * n);
        for i in 0..n {
            h[(i, i)] = 1.0;
            f[i] = hi[i];
            h[(n + i, i)] = -1.0;
            f[n + i] = -lo[i];
        }
        HPolytope::new(h, f)
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.f
    }

    pub fn halfspace(&self, i: usize) -> Halfspace {
        Halfspace {
            h: self.h.row(i).transpose(),
            f: self.f[i],
        }
    }

    pub fn halfspaces(&self) -> impl Iterator<Item = Halfspace> + '_ {
        (0..self.n_rows()).map(|i| self.halfspace(i))
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        (0..self.n_rows()).all(|i| self.h.row(i).transpose().dot(x) <= self.f[i] + TOL)
    }
}
