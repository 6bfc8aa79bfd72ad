//! Checks shared by the property suites and the acceptance run. Each check
//! returns the number of elementary comparisons made or a description of
//! the first failure.
#![allow(dead_code)]

use conzono::containment::{
    ah_contains, conzono_to_ah, inner_scale, make_template, zonotope_contains, ScaleNorm, TemplateKind,
};
use conzono::halfspace::{interval_refine, DEFAULT_PASSES};
use conzono::nalgebra::{DMatrix, DVector};
use conzono::oracle;
use conzono::reduction::{reduce_fully, remove_redundant_pairs, DEFAULT_EPS};
use conzono::{ConstrainedZonotope, Zonotope};
use rand::Rng;

pub type Check = Result<usize, String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

/// Nonempty by construction: offsets are `A xi0` for `xi0` inside the box.
pub fn build_conzono(
    n: usize,
    ng: usize,
    nc: usize,
    c: &[f64],
    g: &[f64],
    a: &[f64],
    xi0: &[f64],
) -> ConstrainedZonotope {
    let a = DMatrix::from_row_slice(nc, ng, a);
    let b = &a * DVector::from_column_slice(xi0);
    ConstrainedZonotope::new(DVector::from_column_slice(c), DMatrix::from_row_slice(n, ng, g), a, b).unwrap()
}

fn uniform<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn random_conzono<R: Rng>(rng: &mut R, n: usize, max_g: usize, max_c: usize) -> ConstrainedZonotope {
    let ng = rng.gen_range(1..=max_g);
    let nc = rng.gen_range(0..=max_c);
    let c = uniform(rng, n, -2.0, 2.0);
    let g = uniform(rng, n * ng, -1.0, 1.0);
    let a = uniform(rng, nc * ng, -1.0, 1.0);
    let xi0 = uniform(rng, ng, -0.95, 0.95);
    build_conzono(n, ng, nc, &c, &g, &a, &xi0)
}

/// Offsets drawn freely, so the set may be empty.
pub fn random_any_conzono<R: Rng>(rng: &mut R, n: usize) -> ConstrainedZonotope {
    let ng = rng.gen_range(1..=6);
    let nc = rng.gen_range(1..=3);
    ConstrainedZonotope::new(
        DVector::zeros(n),
        DMatrix::from_row_slice(n, ng, &uniform(rng, n * ng, -1.0, 1.0)),
        DMatrix::from_row_slice(nc, ng, &uniform(rng, nc * ng, -1.0, 1.0)),
        DVector::from_vec(uniform(rng, nc, -3.0, 3.0)),
    )
    .unwrap()
}

/// Image, sum and intersection against supports and membership.
pub fn algebra(
    x: &ConstrainedZonotope,
    y: &ConstrainedZonotope,
    r: &DMatrix<f64>,
    dirs: &[DVector<f64>],
    probes: &[DVector<f64>],
) -> Check {
    let mapped = x.linear_map(r).map_err(|e| e.to_string())?;
    let sum = x.minkowski_sum(y).map_err(|e| e.to_string())?;
    let cap = x.intersection(y).map_err(|e| e.to_string())?;
    let mut count = 0;
    for (d, p) in dirs.iter().zip(probes) {
        let (hx, px) = x.support_with_point(&(r.transpose() * d)).unwrap().unwrap();
        ensure(close(mapped.support(d).unwrap(), hx), || {
            format!("image support along {d}")
        })?;
        ensure(mapped.contains_point(&(r * &px)).unwrap(), || format!("image of {px}"))?;
        let (hx, px) = x.support_with_point(d).unwrap().unwrap();
        let (hy, py) = y.support_with_point(d).unwrap().unwrap();
        ensure(close(sum.support(d).unwrap(), hx + hy), || {
            format!("sum support along {d}")
        })?;
        ensure(sum.contains_point(&(&px + &py)).unwrap(), || {
            format!("sum of {px} and {py}")
        })?;
        let both = x.contains_point(p).unwrap() && y.contains_point(p).unwrap();
        ensure(cap.contains_point(p).unwrap() == both, || {
            format!("intersection membership of {p}")
        })?;
        count += 5;
    }
    Ok(count)
}

/// The interval check must never call a nonempty set empty.
pub fn interval_sound(z: &ConstrainedZonotope, passes: usize) -> Check {
    ensure(!z.is_empty().unwrap(), || "generator produced an empty set".into())?;
    ensure(!interval_refine(z, passes).certified_empty, || {
        format!("nonempty set certified empty: {z:?}")
    })?;
    Ok(1)
}

/// Emptiness claims agree with the LP, and refined bounds keep every
/// feasible coefficient vector.
pub fn interval_confirmed(z: &ConstrainedZonotope) -> Check {
    let refined = interval_refine(z, DEFAULT_PASSES);
    let feasible = z.feasible_coefficients().unwrap();
    if refined.certified_empty {
        ensure(feasible.is_none(), || format!("certified empty but LP-feasible: {z:?}"))?;
    }
    if let Some(xi) = feasible {
        ensure(refined.e.contains(&xi), || {
            format!("refined bounds lost a feasible point of {z:?}")
        })?;
    }
    Ok(1)
}

/// Both reductions describe the same set as the padded input.
pub fn reduction_equal(x: &ConstrainedZonotope, y: &ConstrainedZonotope, dup: usize) -> Check {
    let mut z = x.intersection(y).unwrap();
    if z.is_empty().unwrap() {
        z = x.clone();
    }
    let (n, g) = (z.dim(), z.generators().clone());
    let extra = g.column(0) * 0.5;
    let mut gd = DMatrix::zeros(n, g.ncols() + dup);
    gd.columns_mut(0, g.ncols()).copy_from(&g);
    for k in 0..dup {
        gd.set_column(g.ncols() + k, &extra);
    }
    let mut a = DMatrix::zeros(z.n_cons(), g.ncols() + dup);
    a.columns_mut(0, g.ncols()).copy_from(z.constraints());
    let padded = ConstrainedZonotope::new(z.center().clone(), gd, a, z.offsets().clone()).unwrap();
    let full = reduce_fully(&padded, DEFAULT_EPS).map_err(|e| e.to_string())?;
    let pairs = remove_redundant_pairs(&padded).map_err(|e| e.to_string())?;
    ensure(
        full.n_gens() <= padded.n_gens() && full.n_cons() <= padded.n_cons(),
        || "reduction grew the set".into(),
    )?;
    ensure(oracle::sets_equal(&full, &padded, 25).unwrap(), || {
        format!("full reduction changed {padded:?}")
    })?;
    ensure(oracle::sets_equal(&pairs, &padded, 25).unwrap(), || {
        format!("pair removal changed {padded:?}")
    })?;
    Ok(2)
}

/// Residuals of zonotope and affine-image containment certificates.
pub fn certificates(y: &Zonotope, z: &ConstrainedZonotope, shrink: f64, shift: &DVector<f64>) -> Check {
    let mut count = 0;
    let inner = Zonotope::new(y.center() + shift * (1.0 - shrink), y.generators() * shrink).unwrap();
    if let Some(cert) = zonotope_contains(&inner, y).unwrap() {
        ensure(cert.zonotope_residual(&inner, y) < 1e-6, || {
            "shifted zonotope residual".into()
        })?;
        count += 1;
    }
    let concentric = Zonotope::new(y.center().clone(), y.generators() * shrink).unwrap();
    let cert = zonotope_contains(&concentric, y).unwrap();
    ensure(cert.is_some_and(|c| c.zonotope_residual(&concentric, y) < 1e-6), || {
        "concentric shrink not certified".into()
    })?;
    count += 1;
    for kind in [TemplateKind::Box, TemplateKind::Zonotope] {
        let t = make_template(z, kind).unwrap();
        if let Ok((fit, res)) = inner_scale(z, &t, ScaleNorm::Inf, &[]) {
            let (fa, za) = (conzono_to_ah(&fit).unwrap(), conzono_to_ah(z).unwrap());
            ensure(res.certificate.ah_residual(&fa, &za) < 1e-6, || {
                format!("{kind:?} fit residual")
            })?;
            // independent search on a slightly shrunk copy, clear of the
            // tolerance band of the fit
            let shrunk = ConstrainedZonotope::new(
                fit.center().clone(),
                fit.generators() * 0.999,
                fit.constraints().clone(),
                fit.offsets().clone(),
            )
            .unwrap();
            let sa = conzono_to_ah(&shrunk).unwrap();
            let again = ah_contains(&sa, &za).unwrap();
            ensure(again.is_some_and(|c| c.ah_residual(&sa, &za) < 1e-6), || {
                format!("{kind:?} fit not re-certified")
            })?;
            count += 2;
        }
    }
    Ok(count)
}
