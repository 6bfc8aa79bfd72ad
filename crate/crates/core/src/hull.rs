//! Convex hull of the union of two constrained zonotopes.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Result, SetError};
use crate::sets::ConstrainedZonotope;

/// Exact representation of the convex hull of `z1 ∪ z2`.
///
/// With `n_g1`, `n_g2` generators the result has `3(n_g1 + n_g2) + 1`
/// generators and `n_c1 + n_c2 + 2(n_g1 + n_g2)` constraints. No reduction
/// is applied.
pub fn convex_hull(z1: &ConstrainedZonotope, z2: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    dim_check("hull operand dimension", z1.dim(), z2.dim())?;
    if z1.is_empty()? || z2.is_empty()? {
        return Err(SetError::EmptySet);
    }
    let n = z1.dim();
    let (g1, g2) = (z1.n_gens(), z2.n_gens());
    let (c1, c2) = (z1.n_cons(), z2.n_cons());
    let slack = 2 * (g1 + g2);
    let n_gh = g1 + g2 + 1 + slack;
    let n_ch = c1 + c2 + slack;
    let xi0 = g1 + g2;

    let mut g = DMatrix::zeros(n, n_gh);
    g.view_mut((0, 0), (n, g1)).copy_from(z1.generators());
    g.view_mut((0, g1), (n, g2)).copy_from(z2.generators());
    g.set_column(xi0, &((z1.center() - z2.center()) / 2.0));
    let center = (z1.center() + z2.center()) / 2.0;

    let mut a = DMatrix::zeros(n_ch, n_gh);
    let mut b = DVector::zeros(n_ch);
    a.view_mut((0, 0), (c1, g1)).copy_from(z1.constraints());
    a.view_mut((c1, g1), (c2, g2)).copy_from(z2.constraints());
    for i in 0..c1 {
        a[(i, xi0)] = -z1.offsets()[i] / 2.0;
        b[i] = z1.offsets()[i] / 2.0;
    }
    for i in 0..c2 {
        a[(c1 + i, xi0)] = z2.offsets()[i] / 2.0;
        b[c1 + i] = z2.offsets()[i] / 2.0;
    }
    // Slack rows keep each scaled coefficient inside the segment it may
    // sweep: ±ξ_1 ∓ ξ_0/2 and ±ξ_2 ± ξ_0/2, each plus one slack, equal -1/2.
    let top = c1 + c2;
    let blocks = [
        (0, g1, 1.0, -0.5),
        (0, g1, -1.0, -0.5),
        (g1, g2, 1.0, 0.5),
        (g1, g2, -1.0, 0.5),
    ];
    let mut row = top;
    for (offset, count, sign, w0) in blocks {
        for k in 0..count {
            a[(row, offset + k)] = sign;
            a[(row, xi0)] = w0;
            a[(row, xi0 + 1 + (row - top))] = 1.0;
            b[row] = -0.5;
            row += 1;
        }
    }
    ConstrainedZonotope::new(center, g, a, b)
}

/// Convex hull of `z` and the point `x`.
pub fn convex_hull_with_point(z: &ConstrainedZonotope, x: &DVector<f64>) -> Result<ConstrainedZonotope> {
    dim_check("point dimension", z.dim(), x.len())?;
    convex_hull(z, &ConstrainedZonotope::singleton(x.clone())?)
}
