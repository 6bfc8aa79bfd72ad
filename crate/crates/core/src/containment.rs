//! Containment certificates, conversion to affine images of H-polytopes,
//! and reduced-order inner approximations.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Result, SetError};
use crate::halfspace::{interval_refine, DEFAULT_PASSES};
use crate::numerics::{nullspace_basis, pinv_solve, rank, solve_lp, LinearProgram, LpStatus, Sense, Var};
use crate::reduction::{eliminate, row_reduce};
use crate::scaling;
pub use crate::scaling::ScaleNorm;
use crate::sets::{ConstrainedZonotope, HPolytope, Zonotope, TOL};

/// Affine image `xbar + X P` of the polytope `P = {y : H y <= f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AhPolytope {
    xbar: DVector<f64>,
    x: DMatrix<f64>,
    h: DMatrix<f64>,
    f: DVector<f64>,
}

impl AhPolytope {
    /// `h` may have zero columns (a single point) but must match `x`.
    pub fn new(xbar: DVector<f64>, x: DMatrix<f64>, h: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        dim_check("map rows", xbar.len(), x.nrows())?;
        dim_check("polytope dimension", x.ncols(), h.ncols())?;
        dim_check("polytope offsets", h.nrows(), f.len())?;
        Ok(AhPolytope { xbar, x, h, f })
    }

    pub fn from_hpolytope(xbar: DVector<f64>, x: DMatrix<f64>, p: &HPolytope) -> Result<Self> {
        Self::new(xbar, x, p.normals().clone(), p.offsets().clone())
    }

    pub fn dim(&self) -> usize {
        self.xbar.len()
    }

    /// Dimension of the underlying polytope.
    pub fn lifted_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.xbar
    }

    pub fn map(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.f
    }

    /// The underlying polytope, or `None` for a point.
    pub fn polytope(&self) -> Option<HPolytope> {
        if self.h.ncols() == 0 {
            return None;
        }
        HPolytope::new(self.h.clone(), self.f.clone()).ok()
    }
}

/// Witness that one set lies inside another. `lambda` is present only for
/// affine-image containment.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentCertificate {
    pub gamma: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub lambda: Option<DMatrix<f64>>,
}

impl ContainmentCertificate {
    /// Worst violation of the zonotope conditions
    /// `G_x = G_y Γ`, `c_y - c_x = G_y β`, `|Γ| 1 + |β| <= 1`.
    pub fn zonotope_residual(&self, x: &Zonotope, y: &Zonotope) -> f64 {
        if self.gamma.shape() != (y.n_gens(), x.n_gens()) || self.beta.len() != y.n_gens() {
            return f64::INFINITY;
        }
        let map = (y.generators() * &self.gamma - x.generators()).amax();
        let shift = (y.generators() * &self.beta - (y.center() - x.center())).amax();
        let budget = (0..y.n_gens())
            .map(|i| self.gamma.row(i).abs().sum() + self.beta[i].abs() - 1.0)
            .fold(0.0, f64::max);
        map.max(shift).max(budget)
    }

    /// Worst violation of the affine-image conditions
    /// `X = Y Γ`, `ȳ - x̄ = Y β`, `Λ H_x = H_y Γ`, `Λ f_x <= f_y + H_y β`, `Λ >= 0`.
    pub fn ah_residual(&self, x: &AhPolytope, y: &AhPolytope) -> f64 {
        let Some(lambda) = &self.lambda else {
            return f64::INFINITY;
        };
        if self.gamma.shape() != (y.lifted_dim(), x.lifted_dim())
            || self.beta.len() != y.lifted_dim()
            || lambda.shape() != (y.h.nrows(), x.h.nrows())
        {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        if x.lifted_dim() > 0 {
            worst = worst.max((&y.x * &self.gamma - &x.x).amax());
            worst = worst.max((lambda * &x.h - &y.h * &self.gamma).amax());
        }
        worst = worst.max((&y.x * &self.beta - (&y.xbar - &x.xbar)).amax());
        let slack = lambda * &x.f - &y.f - &y.h * &self.beta;
        worst = worst.max(slack.max().max(0.0));
        worst.max(-lambda.min().min(0.0))
    }
}

/// Scaling found by [`inner_scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub phi: DVector<f64>,
    pub c_r: DVector<f64>,
    pub certificate: ContainmentCertificate,
}

/// Template shapes for [`make_template`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    DropPair,
    Zonotope,
    Box,
}

fn mat_vars(lp: &mut LinearProgram, rows: usize, cols: usize, lo: f64) -> Vec<Vec<Var>> {
    (0..rows).map(|_| lp.add_vars(cols, lo, f64::INFINITY)).collect()
}

fn read_mat(x: &[f64], v: &[Vec<Var>], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| x[v[i][j].0])
}

fn read_vec(x: &[f64], v: &[Var]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|k| x[k.0]))
}

/// Searches for a certificate that `x ⊆ y` for zonotopes. `None` means no
/// certificate exists, which does not prove non-containment.
pub fn zonotope_contains(x: &Zonotope, y: &Zonotope) -> Result<Option<ContainmentCertificate>> {
    dim_check("zonotope dimension", y.dim(), x.dim())?;
    let (n, ny, nx) = (x.dim(), y.n_gens(), x.n_gens());
    let gy = y.generators();
    // Negligible generators of y get zero certificate rows.
    let largest = (0..ny).map(|i| gy.column(i).amax()).fold(0.0, f64::max);
    let used: Vec<usize> = (0..ny).filter(|&i| gy.column(i).amax() > 1e-12 * largest).collect();
    let mut lp = LinearProgram::new(Sense::Minimize);
    // Γ = P - M and β = p - m with nonnegative parts.
    let pair = |lp: &mut LinearProgram| (lp.add_var(1.0, 0.0, f64::INFINITY), lp.add_var(1.0, 0.0, f64::INFINITY));
    let gamma: Vec<Vec<(Var, Var)>> = used.iter().map(|_| (0..nx).map(|_| pair(&mut lp)).collect()).collect();
    let beta: Vec<(Var, Var)> = used.iter().map(|_| pair(&mut lp)).collect();
    for k in 0..n {
        for l in 0..nx {
            let mut terms = Vec::with_capacity(2 * used.len());
            for (r, &i) in used.iter().enumerate() {
                terms.push((gamma[r][l].0, gy[(k, i)]));
                terms.push((gamma[r][l].1, -gy[(k, i)]));
            }
            lp.add_eq(&terms, x.generators()[(k, l)]);
        }
        let mut terms = Vec::with_capacity(2 * used.len());
        for (r, &i) in used.iter().enumerate() {
            terms.push((beta[r].0, gy[(k, i)]));
            terms.push((beta[r].1, -gy[(k, i)]));
        }
        lp.add_eq(&terms, y.center()[k] - x.center()[k]);
    }
    for r in 0..used.len() {
        let terms: Vec<_> = gamma[r]
            .iter()
            .chain(std::iter::once(&beta[r]))
            .flat_map(|&(p, m)| [(p, 1.0), (m, 1.0)])
            .collect();
        lp.add_le(&terms, 1.0);
    }
    let out = solve_lp(&lp);
    match out.status {
        LpStatus::Infeasible => Ok(None),
        _ => {
            let (sol, _) = out.into_optimal()?;
            let val = |(p, m): (Var, Var)| sol[p.0] - sol[m.0];
            let mut g = DMatrix::zeros(ny, nx);
            let mut b = DVector::zeros(ny);
            for (r, &i) in used.iter().enumerate() {
                for l in 0..nx {
                    g[(i, l)] = val(gamma[r][l]);
                }
                b[i] = val(beta[r]);
            }
            Ok(Some(ContainmentCertificate {
                gamma: g,
                beta: b,
                lambda: None,
            }))
        }
    }
}

/// Merge map of the reduced-order inner approximation: row `i` of the
/// returned `n_g x n_r` matrix says which kept generator absorbs generator
/// `i` (in input order) and with which sign.
pub fn inner_reduction_map(z: &Zonotope, n_r: usize) -> Result<DMatrix<f64>> {
    let n_g = z.n_gens();
    if n_r == 0 || n_r >= n_g {
        return Err(SetError::InvalidArgument(format!(
            "reduced order must be in 1..{n_g}, got {n_r}"
        )));
    }
    let g = z.generators();
    let mut order: Vec<usize> = (0..n_g).collect();
    let norms: Vec<f64> = (0..n_g).map(|i| g.column(i).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut t = DMatrix::zeros(n_g, n_r);
    for (slot, &i) in order[..n_r].iter().enumerate() {
        t[(i, slot)] = 1.0;
    }
    for &j in &order[n_r..] {
        let mut best = (0usize, f64::NEG_INFINITY, 1.0);
        for (slot, &i) in order[..n_r].iter().enumerate() {
            let dot = g.column(i).dot(&g.column(j));
            if dot.abs() > best.1 {
                best = (slot, dot.abs(), if dot < 0.0 { -1.0 } else { 1.0 });
            }
        }
        t[(j, best.0)] = best.2;
    }
    Ok(t)
}

/// Reduced-order inner approximation with `n_r` generators: the trailing
/// (shortest) generators are folded, sign-matched, into the kept generator
/// they are most aligned with. Kept generators appear longest first.
pub fn inner_reduce_zonotope(z: &Zonotope, n_r: usize) -> Result<Zonotope> {
    let t = inner_reduction_map(z, n_r)?;
    Zonotope::new(z.center().clone(), z.generators() * t)
}

/// Offset `s` and null-space basis `T` with `{ξ : Aξ = b} = {Tη + s}`.
/// Rows are row-reduced first only when `A` is rank deficient, so equal
/// constraint data always yields the same parametrization.
fn parametrize(z: &ConstrainedZonotope) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let n_g = z.n_gens();
    if z.n_cons() == 0 {
        return Ok((
            DVector::zeros(n_g),
            DMatrix::identity(n_g, n_g),
            z.constraints().clone(),
            z.offsets().clone(),
        ));
    }
    let (a, b) = if rank(z.constraints()) == z.n_cons() {
        (z.constraints().clone(), z.offsets().clone())
    } else {
        match row_reduce(z)? {
            Some(r) => (r.constraints().clone(), r.offsets().clone()),
            None => return Err(SetError::EmptySet),
        }
    };
    let s = pinv_solve(&a, &b)?;
    let t = nullspace_basis(&a)?;
    Ok((s, t, a, b))
}

fn box_rows(s: &DVector<f64>, t: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let (n_g, m) = t.shape();
    let mut h = DMatrix::zeros(2 * n_g, m);
    let mut f = DVector::zeros(2 * n_g);
    for i in 0..n_g {
        for j in 0..m {
            h[(i, j)] = t[(i, j)];
            h[(n_g + i, j)] = -t[(i, j)];
        }
        f[i] = 1.0 - s[i];
        f[n_g + i] = 1.0 + s[i];
    }
    (h, f)
}

/// Rewrites a nonempty constrained zonotope as `x̄ + X P` by eliminating the
/// equality constraints through their null space.
pub fn conzono_to_ah(z: &ConstrainedZonotope) -> Result<AhPolytope> {
    if z.is_empty()? {
        return Err(SetError::EmptySet);
    }
    let (s, t, _, _) = parametrize(z)?;
    let (h, f) = box_rows(&s, &t);
    AhPolytope::new(z.center() + z.generators() * &s, z.generators() * &t, h, f)
}

/// Searches for a certificate that `x ⊆ y` for affine images of polytopes.
pub fn ah_contains(x: &AhPolytope, y: &AhPolytope) -> Result<Option<ContainmentCertificate>> {
    dim_check("ambient dimension", y.dim(), x.dim())?;
    let (n, mx, my) = (x.dim(), x.lifted_dim(), y.lifted_dim());
    let (rx, ry) = (x.h.nrows(), y.h.nrows());
    let mut lp = LinearProgram::new(Sense::Minimize);
    let gamma = mat_vars(&mut lp, my, mx, f64::NEG_INFINITY);
    let beta = lp.add_vars(my, f64::NEG_INFINITY, f64::INFINITY);
    let lambda = mat_vars(&mut lp, ry, rx, 0.0);
    for k in 0..n {
        for l in 0..mx {
            let terms: Vec<_> = (0..my).map(|j| (gamma[j][l], y.x[(k, j)])).collect();
            lp.add_eq(&terms, x.x[(k, l)]);
        }
        let terms: Vec<_> = (0..my).map(|j| (beta[j], y.x[(k, j)])).collect();
        lp.add_eq(&terms, y.xbar[k] - x.xbar[k]);
    }
    for p in 0..ry {
        for l in 0..mx {
            let mut terms: Vec<_> = (0..rx).map(|q| (lambda[p][q], x.h[(q, l)])).collect();
            terms.extend((0..my).map(|j| (gamma[j][l], -y.h[(p, j)])));
            lp.add_eq(&terms, 0.0);
        }
        let mut terms: Vec<_> = (0..rx).map(|q| (lambda[p][q], x.f[q])).collect();
        terms.extend((0..my).map(|j| (beta[j], -y.h[(p, j)])));
        lp.add_le(&terms, y.f[p]);
    }
    let out = solve_lp(&lp);
    match out.status {
        LpStatus::Infeasible => Ok(None),
        _ => {
            let (sol, _) = out.into_optimal()?;
            Ok(Some(ContainmentCertificate {
                gamma: read_mat(&sol, &gamma, my, mx),
                beta: read_vec(&sol, &beta),
                lambda: Some(read_mat(&sol, &lambda, ry, rx)),
            }))
        }
    }
}

/// Scaling program for fitting `{G_r Φ, c_r, A_r, b_r}` inside a fixed set.
struct ScaleProgram {
    lp: LinearProgram,
    phi: Vec<Var>,
    active: Vec<usize>,
    c_r: Vec<Var>,
    gamma: Vec<Vec<Var>>,
    beta: Vec<Var>,
    lambda: Vec<Vec<Var>>,
    shape: (usize, usize, usize, usize),
}

fn scale_program(
    outer: &AhPolytope,
    g_r: &DMatrix<f64>,
    s_r: &DVector<f64>,
    t_r: &DMatrix<f64>,
    must_contain: &[DVector<f64>],
) -> ScaleProgram {
    let n = outer.dim();
    let (n_gr, m_r) = t_r.shape();
    let (h_r, f_r) = box_rows(s_r, t_r);
    let (my, ry, rx) = (outer.lifted_dim(), outer.h.nrows(), h_r.nrows());
    let mut lp = LinearProgram::new(Sense::Maximize);
    let scale = g_r.amax().max(1.0);
    // Generators that cannot change the set (zero column, or a coefficient
    // pinned by the constraints) keep scale 1.
    let active: Vec<usize> = (0..n_gr)
        .filter(|&i| g_r.column(i).amax() > TOL * scale && t_r.row(i).amax() > TOL)
        .collect();
    let phi: Vec<Var> = (0..n_gr)
        .map(|i| {
            if active.contains(&i) {
                lp.add_var(0.0, 0.0, f64::INFINITY)
            } else {
                lp.add_var(0.0, 1.0, 1.0)
            }
        })
        .collect();
    let c_r = lp.add_vars(n, f64::NEG_INFINITY, f64::INFINITY);
    let gamma = mat_vars(&mut lp, my, m_r, f64::NEG_INFINITY);
    let beta = lp.add_vars(my, f64::NEG_INFINITY, f64::INFINITY);
    let lambda = mat_vars(&mut lp, ry, rx, 0.0);
    let ox = &outer.x;
    for k in 0..n {
        // c_r + G_r Φ s_r + X β = x̄
        let mut terms: Vec<_> = vec![(c_r[k], 1.0)];
        terms.extend((0..n_gr).map(|i| (phi[i], g_r[(k, i)] * s_r[i])));
        terms.extend((0..my).map(|j| (beta[j], ox[(k, j)])));
        lp.add_eq(&terms, outer.xbar[k]);
        // G_r Φ T_r = X Γ
        for l in 0..m_r {
            let mut terms: Vec<_> = (0..n_gr).map(|i| (phi[i], g_r[(k, i)] * t_r[(i, l)])).collect();
            terms.extend((0..my).map(|j| (gamma[j][l], -ox[(k, j)])));
            lp.add_eq(&terms, 0.0);
        }
    }
    for p in 0..ry {
        for l in 0..m_r {
            let mut terms: Vec<_> = (0..rx).map(|q| (lambda[p][q], h_r[(q, l)])).collect();
            terms.extend((0..my).map(|j| (gamma[j][l], -outer.h[(p, j)])));
            lp.add_eq(&terms, 0.0);
        }
        let mut terms: Vec<_> = (0..rx).map(|q| (lambda[p][q], f_r[q])).collect();
        terms.extend((0..my).map(|j| (beta[j], -outer.h[(p, j)])));
        lp.add_le(&terms, outer.f[p]);
    }
    // Points are only supported for unconstrained templates, where
    // p = c_r + G_r η with |η_i| <= φ_i is linear.
    for pt in must_contain {
        let eta = lp.add_vars(n_gr, f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..n {
            let mut terms: Vec<_> = vec![(c_r[k], 1.0)];
            terms.extend((0..n_gr).map(|i| (eta[i], g_r[(k, i)])));
            lp.add_eq(&terms, pt[k]);
        }
        for i in 0..n_gr {
            lp.add_le(&[(eta[i], 1.0), (phi[i], -1.0)], 0.0);
            lp.add_ge(&[(eta[i], 1.0), (phi[i], 1.0)], 0.0);
        }
    }
    ScaleProgram {
        lp,
        phi,
        active,
        c_r,
        gamma,
        beta,
        lambda,
        shape: (my, m_r, ry, rx),
    }
}

impl ScaleProgram {
    fn certificate(&self, x: &[f64]) -> ContainmentCertificate {
        let (my, m_r, ry, rx) = self.shape;
        ContainmentCertificate {
            gamma: read_mat(x, &self.gamma, my, m_r),
            beta: read_vec(x, &self.beta),
            lambda: Some(read_mat(x, &self.lambda, ry, rx)),
        }
    }
}

/// Fits the largest scaled copy `{G_r Φ, c_r, A_r, b_r}` of `template`
/// inside `z_c`, optionally forced to contain the given points. The returned
/// certificate refers to `conzono_to_ah` of the returned set and of `z_c`.
pub fn inner_scale(
    z_c: &ConstrainedZonotope,
    template: &ConstrainedZonotope,
    norm: ScaleNorm,
    must_contain: &[DVector<f64>],
) -> Result<(ConstrainedZonotope, ScalingResult)> {
    dim_check("template dimension", z_c.dim(), template.dim())?;
    for p in must_contain {
        dim_check("point dimension", z_c.dim(), p.len())?;
    }
    if !must_contain.is_empty() && template.n_cons() > 0 {
        return Err(SetError::InvalidArgument(
            "point constraints need a template without equality constraints".into(),
        ));
    }
    let outer = conzono_to_ah(z_c)?;
    let (s_r, t_r, a_r, b_r) = parametrize(template)?;
    let g_r = template.generators();
    let prog = scale_program(&outer, g_r, &s_r, &t_r, must_contain);
    let free: Vec<Var> = prog.active.iter().map(|&i| prog.phi[i]).collect();
    let x = scaling::maximize(&prog.lp, &free, norm, "template cannot be fitted inside the set")?;
    let phi = read_vec(&x, &prog.phi);
    let c_r = read_vec(&x, &prog.c_r);
    let g = g_r * DMatrix::from_diagonal(&phi);
    let set = ConstrainedZonotope::new(c_r.clone(), g, a_r, b_r)?;
    Ok((
        set,
        ScalingResult {
            phi,
            c_r,
            certificate: prog.certificate(&x),
        },
    ))
}

/// Starting shapes for [`inner_scale`].
///
/// * `DropPair`: one generator and one constraint fewer. The generator with
///   the tightest implied range is eliminated through the row where its
///   coefficient is largest, whether or not the elimination is exact.
/// * `Zonotope`: the constraints are eliminated through their null space.
/// * `Box`: axis-aligned unit generators.
pub fn make_template(z_c: &ConstrainedZonotope, kind: TemplateKind) -> Result<ConstrainedZonotope> {
    match kind {
        TemplateKind::DropPair => {
            if z_c.n_cons() == 0 {
                return Err(SetError::InvalidArgument("dropping a pair needs a constraint".into()));
            }
            let z = row_reduce(z_c)?.ok_or(SetError::EmptySet)?;
            let refined = interval_refine(&z, DEFAULT_PASSES);
            if refined.certified_empty {
                return Err(SetError::EmptySet);
            }
            let a = z.constraints();
            let mut pick: Option<(usize, f64)> = None;
            for j in 0..z.n_gens() {
                if a.column(j).amax() <= TOL {
                    continue;
                }
                let width = refined.r.lo[j].abs().max(refined.r.hi[j].abs());
                if pick.is_none_or(|(_, w)| width < w) {
                    pick = Some((j, width));
                }
            }
            let (c, _) = pick.ok_or_else(|| SetError::Numerical("constraint matrix is zero".into()))?;
            let r = (0..z.n_cons())
                .max_by(|&p, &q| a[(p, c)].abs().total_cmp(&a[(q, c)].abs()).then(q.cmp(&p)))
                .unwrap_or(0);
            Ok(eliminate(&z, r, c))
        }
        TemplateKind::Zonotope => {
            let ah = conzono_to_ah(z_c)?;
            ConstrainedZonotope::new(
                ah.xbar.clone(),
                ah.x.clone(),
                DMatrix::zeros(0, ah.lifted_dim()),
                DVector::zeros(0),
            )
        }
        TemplateKind::Box => {
            let ah = conzono_to_ah(z_c)?;
            let n = z_c.dim();
            ConstrainedZonotope::new(
                ah.xbar.clone(),
                DMatrix::identity(n, n),
                DMatrix::zeros(0, n),
                DVector::zeros(0),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn five_generator() -> Zonotope {
        Zonotope::from_rows(&[0.0, 0.0], 5, &[4.0, 3.0, -2.0, 0.2, 0.5, 0.0, 2.0, 3.0, 0.6, -0.3]).unwrap()
    }

    fn two_constraint() -> ConstrainedZonotope {
        ConstrainedZonotope::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 5, &[-1.0, 3.0, 4.0, 0.0, 0.0, 4.0, -2.0, -5.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 5, &[-1.0, 3.0, 4.0, 6.5, 0.0, 4.0, -2.0, -5.0, 0.0, 8.0]),
            dv(&[-1.5, -3.0]),
        )
        .unwrap()
    }

    #[test]
    fn identical_zonotopes_certify() {
        let z = five_generator();
        let cert = zonotope_contains(&z, &z).unwrap().unwrap();
        assert!(cert.zonotope_residual(&z, &z) < 1e-9);
        let half = z.scale(0.5);
        let cert = zonotope_contains(&half, &z).unwrap().unwrap();
        assert!(cert.zonotope_residual(&half, &z) < 1e-9);
        assert!(zonotope_contains(&z, &half).unwrap().is_none());
    }

    #[test]
    fn five_generator_merge_map() {
        let z = five_generator();
        let t = inner_reduction_map(&z, 3).unwrap();
        let expected = DMatrix::from_row_slice(
            5,
            3,
            &[
                1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(t, expected);
        let zr = inner_reduce_zonotope(&z, 3).unwrap();
        let g = DMatrix::from_row_slice(2, 3, &[4.5, 3.2, -2.0, -0.3, 2.6, 3.0]);
        assert!((zr.generators() - g).amax() < 1e-12);
        assert!(zonotope_contains(&zr, &z).unwrap().is_some());
        let ratio = oracle::volume_ratio(&zr.to_conzono(), &z.to_conzono(), 0, 0).unwrap();
        assert!((ratio - 0.97).abs() < 0.005, "{ratio}");
    }

    #[test]
    fn reduction_order_bounds() {
        let z = five_generator();
        assert!(inner_reduce_zonotope(&z, 5).is_err());
        assert!(inner_reduce_zonotope(&z, 0).is_err());
    }

    #[test]
    fn orthogonal_tie_goes_to_lowest_index() {
        let z = Zonotope::from_rows(&[0.0, 0.0, 0.0], 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let t = inner_reduction_map(&z, 2).unwrap();
        assert_eq!(t.row(2).clone_owned(), DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    }

    #[test]
    fn zonotope_converts_to_unit_box() {
        let z = five_generator().to_conzono();
        let ah = conzono_to_ah(&z).unwrap();
        assert_eq!(ah.offset(), z.center());
        assert_eq!(ah.map(), z.generators());
        let p = ah.polytope().unwrap();
        assert!(p.contains(&DVector::from_element(5, 1.0)));
        assert!(!p.contains(&DVector::from_element(5, 1.01)));
    }

    #[test]
    fn singleton_has_no_lifted_coordinates() {
        let z = ConstrainedZonotope::singleton(dv(&[1.0, 2.0])).unwrap();
        let ah = conzono_to_ah(&z).unwrap();
        assert_eq!(ah.offset(), &dv(&[1.0, 2.0]));
        assert!(ah.polytope().is_none() || ah.lifted_dim() == 0);
    }

    #[test]
    fn ah_self_containment() {
        let ah = conzono_to_ah(&two_constraint()).unwrap();
        let cert = ah_contains(&ah, &ah).unwrap().unwrap();
        assert!(cert.ah_residual(&ah, &ah) < 1e-8);
    }

    #[test]
    fn drop_pair_shape() {
        let t = make_template(&two_constraint(), TemplateKind::DropPair).unwrap();
        assert_eq!((t.n_gens(), t.n_cons()), (4, 1));
        let z = ConstrainedZonotope::new(
            dv(&[0.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            dv(&[0.0]),
        )
        .unwrap();
        let t = make_template(&z, TemplateKind::DropPair).unwrap();
        assert_eq!((t.n_gens(), t.n_cons()), (1, 0));
    }

    #[test]
    fn identity_template_scales_by_one() {
        let z = two_constraint();
        let (_, res) = inner_scale(&z, &z, ScaleNorm::Inf, &[]).unwrap();
        assert!(res.phi.iter().all(|&p| p >= 1.0 - 1e-6), "{:?}", res.phi);
        let unit = Zonotope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0]))
            .unwrap()
            .to_conzono();
        let tmpl = make_template(&unit, TemplateKind::Box).unwrap();
        let (_, res) = inner_scale(&unit, &tmpl, ScaleNorm::Inf, &[]).unwrap();
        assert!((res.phi.clone() - dv(&[1.0, 1.0])).amax() < 1e-6);
    }

    #[test]
    fn two_constraint_volume_ratios() {
        let z = two_constraint();
        for (kind, target) in [
            (TemplateKind::DropPair, 0.86),
            (TemplateKind::Zonotope, 0.83),
            (TemplateKind::Box, 0.46),
        ] {
            let tmpl = make_template(&z, kind).unwrap();
            let (zr, res) = inner_scale(&z, &tmpl, ScaleNorm::Inf, &[]).unwrap();
            let ratio = oracle::volume_ratio(&zr, &z, 0, 0).unwrap();
            eprintln!(
                "{kind:?}: phi {:?} c {:?} ratio {ratio:.3}",
                res.phi.as_slice(),
                res.c_r.as_slice()
            );
            let cert = &res.certificate;
            let (x, y) = (conzono_to_ah(&zr).unwrap(), conzono_to_ah(&z).unwrap());
            assert!(
                cert.ah_residual(&x, &y) < 1e-6,
                "{kind:?} residual {}",
                cert.ah_residual(&x, &y)
            );
            assert!((ratio - target).abs() <= 0.05, "{kind:?}: {ratio} vs {target}");
        }
    }
}
