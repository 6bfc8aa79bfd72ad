//! Brute-force ground truth for low-dimensional sets: vertex enumeration by
//! support-point sweeps, H-Rep reconstruction, exact areas, Monte Carlo
//! volumes, grid membership comparison, the definitional Pontryagin
//! difference test and the horizon feasibility LP for waysets.
//!
//! Everything here trades speed for independence from the closed-form
//! operations it is used to check.

use std::collections::HashMap;

use chull::ConvexHullWrapper;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_check, Result, SetError};
use crate::numerics::{solve_lp, LinearProgram, LpStatus, Sense, Var};
use crate::sets::{ConstrainedZonotope, HPolytope, Zonotope};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Directions swept in the plane.
pub const SWEEP_2D: usize = 720;
/// Icosphere subdivision level giving 2562 directions in space.
const ICOSPHERE_LEVEL: usize = 4;
/// Upper bound on support LPs per enumeration.
pub const LP_BUDGET: usize = 50_000;
/// Boundary band used when comparing memberships.
pub const BAND: f64 = 1e-6;

/// Polytope described both by vertices and by outward unit normals with
/// offsets. `flat` marks sets without interior in their ambient space.
#[derive(Debug, Clone)]
pub struct HullRep {
    pub dim: usize,
    pub vertices: Vec<DVector<f64>>,
    pub normals: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
    pub flat: bool,
}

impl HullRep {
    /// Largest facet violation `max_i (n_i^T x - d_i)`; negative inside.
    /// For flat sets this is the distance to the vertex hull (planar case)
    /// and is never negative.
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        if self.flat {
            return flat_distance(&self.vertices, x);
        }
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, d)| n.dot(x) - d)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.signed_distance(x) <= tol
    }

    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let mut lo = DVector::from_element(self.dim, f64::INFINITY);
        let mut hi = DVector::from_element(self.dim, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Exact Lebesgue measure (length, area or volume).
    pub fn measure(&self) -> f64 {
        if self.flat {
            return 0.0;
        }
        match self.dim {
            1 => self.vertices[1][0] - self.vertices[0][0],
            2 => polygon_area(&self.vertices),
            _ => self.volume_3d(),
        }
    }

    fn volume_3d(&self) -> f64 {
        let centroid = self.vertices.iter().fold(DVector::zeros(3), |a, v| a + v) / self.vertices.len() as f64;
        let mut vol = 0.0;
        for (n, d) in self.normals.iter().zip(&self.offsets) {
            // facet polygon area times height, via the facet's vertices
            let on: Vec<&DVector<f64>> = self
                .vertices
                .iter()
                .filter(|v| (n.dot(v) - d).abs() <= 1e-9 * (1.0 + d.abs()))
                .collect();
            if on.len() < 3 {
                continue;
            }
            let area = planar_polygon_area(&on, n);
            let h = d - n.dot(&centroid);
            vol += area * h / 3.0;
        }
        vol
    }
}

fn flat_distance(vertices: &[DVector<f64>], x: &DVector<f64>) -> f64 {
    match vertices.len() {
        0 => f64::INFINITY,
        1 => (x - &vertices[0]).norm(),
        _ => {
            let mut best = f64::INFINITY;
            for i in 0..vertices.len() {
                for j in (i + 1)..vertices.len() {
                    let (a, b) = (&vertices[i], &vertices[j]);
                    let ab = b - a;
                    let t = if ab.norm_squared() > 0.0 {
                        ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    best = best.min((x - (a + ab * t)).norm());
                }
            }
            best
        }
    }
}

/// Shoelace area of a counterclockwise polygon.
pub fn polygon_area(v: &[DVector<f64>]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (&v[i], &v[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Area of a convex planar polygon in space with unit normal `n`.
fn planar_polygon_area(pts: &[&DVector<f64>], n: &DVector<f64>) -> f64 {
    let nn = Vector3::new(n[0], n[1], n[2]);
    let c = pts
        .iter()
        .fold(Vector3::zeros(), |a, p| a + Vector3::new(p[0], p[1], p[2]))
        / pts.len() as f64;
    let u = {
        let p0 = Vector3::new(pts[0][0], pts[0][1], pts[0][2]) - c;
        if p0.norm() > 0.0 {
            p0.normalize()
        } else {
            nn.cross(&Vector3::x()).normalize()
        }
    };
    let w = nn.cross(&u);
    let mut planar: Vec<DVector<f64>> = pts
        .iter()
        .map(|p| {
            let d = Vector3::new(p[0], p[1], p[2]) - c;
            DVector::from_column_slice(&[d.dot(&u), d.dot(&w)])
        })
        .collect();
    planar.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    polygon_area(&planar)
}

fn sweep_2d(count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / count as f64;
            DVector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect()
}

/// Unit directions from a subdivided icosahedron.
pub fn icosphere(level: usize) -> Vec<DVector<f64>> {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, p, 0.0),
        (1.0, p, 0.0),
        (-1.0, -p, 0.0),
        (1.0, -p, 0.0),
        (0.0, -1.0, p),
        (0.0, 1.0, p),
        (0.0, -1.0, -p),
        (0.0, 1.0, -p),
        (p, 0.0, -1.0),
        (p, 0.0, 1.0),
        (-p, 0.0, -1.0),
        (-p, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts
        .into_iter()
        .map(|v| DVector::from_column_slice(v.as_slice()))
        .collect()
}

struct Prober<'a> {
    z: &'a ConstrainedZonotope,
    lps: usize,
}

impl Prober<'_> {
    fn support(&mut self, h: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>> {
        self.lps += 1;
        if self.lps > LP_BUDGET {
            return Err(SetError::BudgetExceeded(format!(
                "vertex enumeration needed more than {LP_BUDGET} LPs"
            )));
        }
        self.z.support_with_point(h)
    }
}

fn scale_of(points: &[DVector<f64>]) -> f64 {
    1.0 + points.iter().map(|p| p.amax()).fold(0.0, f64::max)
}

fn dedupe(points: &mut Vec<DVector<f64>>, tol: f64) {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if !out.iter().any(|q| (q - &p).amax() <= tol) {
            out.push(p);
        }
    }
    *points = out;
}

/// Counterclockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull_2d(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut pts: Vec<DVector<f64>> = points.to_vec();
    // sort on snapped coordinates so rounding noise cannot reorder points
    // that share an abscissa
    let scale = scale_of(&pts);
    let q = 1e-9 * scale;
    let key = |p: &DVector<f64>| ((p[0] / q).round(), (p[1] / q).round());
    pts.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    if pts.len() < 3 {
        return pts;
    }
    let eps = 1e-12 * scale * scale;
    let cross = |o: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<DVector<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<DVector<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn hull_rep_2d(v: Vec<DVector<f64>>) -> HullRep {
    if v.len() < 3 {
        return HullRep {
            dim: 2,
            vertices: v,
            normals: vec![],
            offsets: vec![],
            flat: true,
        };
    }
    let mut normals = Vec::with_capacity(v.len());
    let mut offsets = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let (p, q) = (&v[i], &v[(i + 1) % v.len()]);
        let n = DVector::from_column_slice(&[q[1] - p[1], p[0] - q[0]]).normalize();
        let d = v.iter().map(|w| n.dot(w)).fold(f64::NEG_INFINITY, f64::max);
        normals.push(n);
        offsets.push(d);
    }
    HullRep {
        dim: 2,
        vertices: v,
        normals,
        offsets,
        flat: false,
    }
}

fn hull_rep_3d(points: &[DVector<f64>]) -> HullRep {
    let flat = || HullRep {
        dim: 3,
        vertices: points.to_vec(),
        normals: vec![],
        offsets: vec![],
        flat: true,
    };
    if points.len() < 4 {
        return flat();
    }
    let raw: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().collect()).collect();
    let Ok(hull) = ConvexHullWrapper::try_new(&raw, None) else {
        return flat();
    };
    let (verts, idx) = hull.vertices_indices();
    let verts: Vec<DVector<f64>> = verts.iter().map(|v| DVector::from_column_slice(v)).collect();
    let mut used: Vec<usize> = idx.clone();
    used.sort_unstable();
    used.dedup();
    let vertices: Vec<DVector<f64>> = used.iter().map(|&i| verts[i].clone()).collect();
    let scale = scale_of(&vertices);
    let mut normals: Vec<DVector<f64>> = Vec::new();
    let mut offsets = Vec::new();
    for tri in idx.chunks(3) {
        let (a, b, c) = (&verts[tri[0]], &verts[tri[1]], &verts[tri[2]]);
        let u = Vector3::new(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        let w = Vector3::new(c[0] - a[0], c[1] - a[1], c[2] - a[2]);
        let cr = u.cross(&w);
        if cr.norm() <= 1e-14 * scale * scale {
            continue;
        }
        let mut n = DVector::from_column_slice(cr.normalize().as_slice());
        // orient outward: the other vertices lie below the plane
        let base = n.dot(a);
        let below = vertices
            .iter()
            .map(|v| n.dot(v) - base)
            .fold(0.0, |m: f64, s| if s.abs() > m.abs() { s } else { m });
        if below > 0.0 {
            n = -n;
        }
        if normals.iter().any(|m: &DVector<f64>| (m - &n).amax() < 1e-9) {
            continue;
        }
        let d = vertices.iter().map(|v| n.dot(v)).fold(f64::NEG_INFINITY, f64::max);
        normals.push(n);
        offsets.push(d);
    }
    HullRep {
        dim: 3,
        vertices,
        normals,
        offsets,
        flat: false,
    }
}

/// Support points over the sweep, completed by probing every facet normal
/// until no probe finds a point beyond the current hull.
pub fn hull_rep(z: &ConstrainedZonotope) -> Result<Option<HullRep>> {
    let n = z.dim();
    if n > 3 {
        return Err(SetError::InvalidArgument(
            "vertex enumeration supports dimension <= 3".into(),
        ));
    }
    let mut prober = Prober { z, lps: 0 };
    if n == 1 {
        let e = DVector::from_element(1, 1.0);
        let Some((hi, _)) = prober.support(&e)? else {
            return Ok(None);
        };
        let Some((lo, _)) = prober.support(&(-&e))? else {
            return Ok(None);
        };
        let lo = -lo;
        return Ok(Some(HullRep {
            dim: 1,
            vertices: vec![DVector::from_element(1, lo), DVector::from_element(1, hi)],
            normals: vec![e.clone(), -e],
            offsets: vec![hi, -lo],
            flat: hi - lo <= 1e-12,
        }));
    }
    let dirs = if n == 2 {
        sweep_2d(SWEEP_2D)
    } else {
        icosphere(ICOSPHERE_LEVEL)
    };
    let mut points = Vec::with_capacity(dirs.len());
    for d in &dirs {
        match prober.support(d)? {
            Some((_, x)) => points.push(x),
            None => return Ok(None),
        }
    }
    let tol = 1e-9 * scale_of(&points);
    dedupe(&mut points, tol);
    let build = |pts: &[DVector<f64>]| {
        if n == 2 {
            hull_rep_2d(convex_hull_2d(pts))
        } else {
            hull_rep_3d(pts)
        }
    };
    let mut rep = build(&points);
    for _ in 0..64 {
        if rep.flat {
            break;
        }
        let mut added = false;
        for (nrm, d) in rep.normals.iter().zip(&rep.offsets) {
            if let Some((v, x)) = prober.support(nrm)? {
                if v > d + 1e-9 * (1.0 + d.abs()) {
                    points.push(x);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        dedupe(&mut points, tol);
        rep = build(&points);
    }
    Ok(Some(rep))
}

/// Vertices of the set (counterclockwise in the plane); empty for an empty
/// set.
pub fn enumerate_vertices(z: &ConstrainedZonotope) -> Result<Vec<DVector<f64>>> {
    Ok(hull_rep(z)?.map(|r| r.vertices).unwrap_or_default())
}

/// Volume estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Exact length/area for `n <= 2`, Monte Carlo over the tight bounding box
/// for `n = 3` (hull membership) and `n = 4` (LP membership).
pub fn volume(z: &ConstrainedZonotope, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let n = z.dim();
    if n > 4 {
        return Err(SetError::InvalidArgument("volume supports dimension <= 4".into()));
    }
    if n <= 3 {
        let Some(rep) = hull_rep(z)? else {
            return Ok(VolumeEstimate {
                value: 0.0,
                stderr: 0.0,
            });
        };
        if n <= 2 || rep.flat {
            return Ok(VolumeEstimate {
                value: rep.measure(),
                stderr: 0.0,
            });
        }
        let (lo, hi) = rep.bounding_box();
        let tol = 1e-12 * scale_of(&rep.vertices);
        return monte_carlo(&lo, &hi, samples, seed, |x| Ok(rep.contains(x, tol)));
    }
    if z.is_empty()? {
        return Ok(VolumeEstimate {
            value: 0.0,
            stderr: 0.0,
        });
    }
    let (lo, hi) = z.interval_hull()?;
    monte_carlo(&lo, &hi, samples, seed, |x| z.contains_point(x))
}

fn monte_carlo(
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    samples: usize,
    seed: u64,
    mut inside: impl FnMut(&DVector<f64>) -> Result<bool>,
) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(SetError::InvalidArgument("sample count must be positive".into()));
    }
    let box_vol: f64 = (hi - lo).iter().product();
    if box_vol <= 0.0 {
        return Ok(VolumeEstimate {
            value: 0.0,
            stderr: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = lo.clone();
    let mut hits = 0usize;
    for _ in 0..samples {
        for i in 0..x.len() {
            x[i] = rng.gen_range(lo[i]..=hi[i]);
        }
        if inside(&x)? {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: p * box_vol,
        stderr: box_vol * (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// `(V(X) / V(Y))^(1/n)`.
pub fn volume_ratio(x: &ConstrainedZonotope, y: &ConstrainedZonotope, samples: usize, seed: u64) -> Result<f64> {
    dim_check("volume ratio operand", x.dim(), y.dim())?;
    let vy = volume(y, samples, seed)?.value;
    if vy <= 0.0 {
        return Err(SetError::InvalidArgument("reference set has zero volume".into()));
    }
    let vx = volume(x, samples, seed)?.value;
    Ok((vx / vy).powf(1.0 / x.dim() as f64))
}

/// Regular grid with `per_axis` points per coordinate spanning `[lo, hi]`.
pub fn grid(lo: &DVector<f64>, hi: &DVector<f64>, per_axis: usize) -> Vec<DVector<f64>> {
    let n = lo.len();
    let per_axis = per_axis.max(2);
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut p = DVector::zeros(n);
        for i in 0..n {
            let k = idx % per_axis;
            idx /= per_axis;
            p[i] = lo[i] + (hi[i] - lo[i]) * k as f64 / (per_axis - 1) as f64;
        }
        out.push(p);
    }
    out
}

/// Equality test: support agreement over the direction sweep and grid
/// membership agreement off a boundary band, both at tolerance `1e-6`.
pub fn sets_equal(x: &ConstrainedZonotope, y: &ConstrainedZonotope, per_axis: usize) -> Result<bool> {
    dim_check("equality operand", x.dim(), y.dim())?;
    let (rx, ry) = match (hull_rep(x)?, hull_rep(y)?) {
        (None, None) => return Ok(true),
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(false),
    };
    let n = x.dim();
    let dirs = match n {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => sweep_2d(SWEEP_2D),
        _ => icosphere(ICOSPHERE_LEVEL),
    };
    let support = |r: &HullRep, d: &DVector<f64>| r.vertices.iter().map(|v| d.dot(v)).fold(f64::NEG_INFINITY, f64::max);
    let scale = scale_of(&rx.vertices).max(scale_of(&ry.vertices));
    for d in &dirs {
        if (support(&rx, d) - support(&ry, d)).abs() > BAND * scale {
            return Ok(false);
        }
    }
    let (lx, hx) = rx.bounding_box();
    let (ly, hy) = ry.bounding_box();
    let lo = lx.inf(&ly);
    let hi = hx.sup(&hy);
    let pad = (&hi - &lo) * 0.1 + DVector::from_element(n, 1e-3);
    for p in grid(&(&lo - &pad), &(&hi + &pad), per_axis) {
        let (dx, dy) = (rx.signed_distance(&p), ry.signed_distance(&p));
        if (dx <= 0.0) != (dy <= 0.0) && dx.abs() > BAND * scale && dy.abs() > BAND * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For each point `z`, the margin `min_v -dist(z + v, Z1)` over vertices `v`
/// of `Z2 - c2` shifted by `c2`. Nonnegative margin means `z ⊕ Z2 ⊆ Z1`.
pub fn pontryagin_oracle(z1: &Zonotope, z2: &Zonotope, points: &[DVector<f64>]) -> Result<Vec<f64>> {
    dim_check("difference operand", z1.dim(), z2.dim())?;
    let r1 = hull_rep(&z1.to_conzono())?.ok_or(SetError::EmptySet)?;
    let v2 = enumerate_vertices(&z2.to_conzono())?;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        dim_check("grid point", z1.dim(), p.len())?;
        let worst = v2
            .iter()
            .map(|v| r1.signed_distance(&(p + v)))
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(-worst);
    }
    Ok(out)
}

/// Whether some input sequence in `U` drives `x(k+1) = A x(k) + B u(k)`
/// from `x0` to exactly `x_star` in `horizon` steps with every state before
/// the last inside `X`. Decided by one LP over all states and input
/// coefficients.
pub fn horizon_feasible(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    states: &HPolytope,
    inputs: &Zonotope,
    x0: &DVector<f64>,
    x_star: &DVector<f64>,
    horizon: usize,
) -> Result<bool> {
    let n = a.nrows();
    dim_check("initial state", n, x0.len())?;
    dim_check("target state", n, x_star.len())?;
    let slack = 1e-9 * (1.0 + x0.amax());
    if (0..states.n_rows()).any(|i| states.normals().row(i).transpose().dot(x0) > states.offsets()[i] + slack) {
        return Ok(false);
    }
    if horizon == 0 {
        return Ok((x0 - x_star).amax() <= slack);
    }
    let gu = b * inputs.generators();
    let cu = b * inputs.center();
    let mut lp = LinearProgram::new(Sense::Minimize);
    // states x_1 .. x_{N-1} are free, x_0 and x_N are fixed
    let xs: Vec<Vec<Var>> = (1..horizon)
        .map(|_| lp.add_vars(n, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let xi: Vec<Vec<Var>> = (0..horizon).map(|_| lp.add_vars(gu.ncols(), -1.0, 1.0)).collect();
    for k in 0..horizon {
        for r in 0..n {
            // x_{k+1}[r] - sum_j A[r, j] x_k[j] - (B G_u xi_k)[r] = (B c_u)[r]
            let mut terms: Vec<(Var, f64)> = Vec::new();
            let mut rhs = cu[r];
            if k + 1 < horizon {
                terms.push((xs[k][r], 1.0));
            } else {
                rhs -= x_star[r];
            }
            for j in 0..n {
                if k == 0 {
                    rhs += a[(r, j)] * x0[j];
                } else {
                    terms.push((xs[k - 1][j], -a[(r, j)]));
                }
            }
            for (c, &v) in xi[k].iter().enumerate() {
                terms.push((v, -gu[(r, c)]));
            }
            lp.add_eq(&terms, rhs);
        }
    }
    for x in &xs {
        for i in 0..states.n_rows() {
            let terms: Vec<(Var, f64)> = (0..n).map(|j| (x[j], states.normals()[(i, j)])).collect();
            lp.add_le(&terms, states.offsets()[i]);
        }
    }
    let out = solve_lp(&lp);
    match out.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        _ => Err(SetError::Numerical(
            out.message.unwrap_or_else(|| "horizon LP failed".into()),
        )),
    }
}

/// Origin-centered zonotope whose generators have uniformly distributed
/// directions and lengths uniform in `(0, max_len]`.
pub fn random_zonotope<R: Rng>(rng: &mut R, n: usize, n_g: usize, max_len: f64) -> Zonotope {
    let mut g = DMatrix::zeros(n, n_g);
    for j in 0..n_g {
        let dir = loop {
            let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            if v.norm() > 1e-9 {
                break v.normalize();
            }
        };
        let len = max_len * (1.0 - rng.gen::<f64>());
        g.set_column(j, &(dir * len));
    }
    Zonotope::new(DVector::zeros(n), g).expect("finite generators")
}

/// Selection matrix picking coordinates `dims`.
pub fn projector(n: usize, dims: &[usize]) -> Result<DMatrix<f64>> {
    let mut p = DMatrix::zeros(dims.len(), n);
    for (r, &d) in dims.iter().enumerate() {
        if d >= n {
            return Err(SetError::InvalidArgument(format!("coordinate {d} out of range")));
        }
        p[(r, d)] = 1.0;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn unit_square() -> ConstrainedZonotope {
        Zonotope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0]))
            .unwrap()
            .to_conzono()
    }

    #[test]
    fn icosphere_has_expected_count() {
        let d = icosphere(ICOSPHERE_LEVEL);
        assert_eq!(d.len(), 2562);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn square_vertices_and_area() {
        let v = enumerate_vertices(&unit_square()).unwrap();
        assert_eq!(v.len(), 4);
        for p in &v {
            assert!((p[0].abs() - 1.0).abs() < 1e-9 && (p[1].abs() - 1.0).abs() < 1e-9);
        }
        assert_eq!(volume(&unit_square(), 10, 1).unwrap().value, 4.0);
    }

    #[test]
    fn parallelogram_has_four_corners() {
        // a parallelogram: two generators in the plane
        let z = Zonotope::from_rows(&[0.0, 0.0], 2, &[1.0, 1.0, 0.0, 2.0]).unwrap();
        let v = enumerate_vertices(&z.to_conzono()).unwrap();
        assert_eq!(v.len(), 4);
        assert!((volume(&z.to_conzono(), 10, 1).unwrap().value - 8.0).abs() < 1e-9);
    }

    #[test]
    fn three_generator_zonotope_is_hexagon() {
        let z = Zonotope::from_rows(&[0.0, 0.0], 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let v = enumerate_vertices(&z.to_conzono()).unwrap();
        assert_eq!(v.len(), 6);
        // |det| sum over generator pairs times 4
        assert!((volume(&z.to_conzono(), 10, 1).unwrap().value - 12.0).abs() < 1e-9);
    }

    #[test]
    fn cube_volume_monte_carlo_and_exact() {
        let c = Zonotope::from_box(&dv(&[0.0, 0.0, 0.0]), &dv(&[1.0, 2.0, 3.0]))
            .unwrap()
            .to_conzono();
        let rep = hull_rep(&c).unwrap().unwrap();
        assert_eq!(rep.vertices.len(), 8);
        assert!((rep.measure() - 6.0).abs() < 1e-9);
        let est = volume(&c, 1000, 1).unwrap();
        assert!((est.value - 6.0).abs() < 1e-9);
    }

    #[test]
    fn octahedron_volume() {
        let oct = Zonotope::from_box(&dv(&[-1.0, -1.0, -1.0]), &dv(&[1.0, 1.0, 1.0]))
            .unwrap()
            .to_conzono();
        let hs = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0],
            [1.0, -1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
            [-1.0, -1.0, -1.0],
        ];
        let mut z = oct;
        for h in hs {
            z = crate::halfspace::conzono_halfspace_intersection(
                &z,
                &crate::sets::Halfspace::from_slice(&h, 1.0).unwrap(),
            )
            .unwrap();
        }
        let rep = hull_rep(&z).unwrap().unwrap();
        assert_eq!(rep.vertices.len(), 6);
        assert!((rep.measure() - 4.0 / 3.0).abs() < 1e-9);
        let est = volume(&z, 200_000, DEFAULT_SEED).unwrap();
        assert!((est.value - 4.0 / 3.0).abs() < 5.0 * est.stderr + 1e-9);
    }

    #[test]
    fn monte_carlo_error_shrinks_with_samples() {
        let z = Zonotope::from_rows(
            &[0.0, 0.0, 0.0],
            4,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0],
        )
        .unwrap()
        .to_conzono();
        let a = volume(&z, 20_000, 3).unwrap();
        let b = volume(&z, 80_000, 3).unwrap();
        let r = a.stderr / b.stderr;
        assert!((r - 2.0).abs() < 0.2, "stderr ratio {r}");
    }

    #[test]
    fn ratio_scaling_law() {
        let y = Zonotope::from_rows(&[0.3, -0.1], 3, &[1.0, 0.5, -0.2, 0.1, 1.0, 0.7]).unwrap();
        let x = y.scale(0.5).to_conzono();
        let y = y.to_conzono();
        assert!((volume_ratio(&y, &y, 10, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((volume_ratio(&x, &y, 10, 1).unwrap() - 0.5).abs() < 1e-9);
        let r = volume_ratio(&x, &y, 10, 1).unwrap() * volume_ratio(&y, &x, 10, 1).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_checks() {
        let z = Zonotope::from_rows(&[0.0, 0.0], 3, &[1.0, 0.5, -0.2, 0.1, 1.0, 0.7])
            .unwrap()
            .to_conzono();
        let plus_origin = z
            .minkowski_sum(&ConstrainedZonotope::singleton(dv(&[0.0, 0.0])).unwrap())
            .unwrap();
        assert!(sets_equal(&z, &plus_origin, 40).unwrap());
        let shifted = z.translate(&dv(&[1e-3, 0.0])).unwrap();
        assert!(!sets_equal(&z, &shifted, 40).unwrap());
        assert!(sets_equal(&z, &z.intersection(&z).unwrap(), 40).unwrap());
    }

    #[test]
    fn empty_set_has_zero_volume() {
        let e = crate::halfspace::empty_set(2);
        assert_eq!(volume(&e, 10, 1).unwrap().value, 0.0);
        assert!(enumerate_vertices(&e).unwrap().is_empty());
    }

    #[test]
    fn difference_of_boxes() {
        let z1 = Zonotope::from_box(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0])).unwrap();
        let z2 = Zonotope::from_box(&dv(&[-0.5, -0.5]), &dv(&[0.5, 0.5])).unwrap();
        let pts = grid(&dv(&[-1.0, -1.0]), &dv(&[1.0, 1.0]), 21);
        let m = pontryagin_oracle(&z1, &z2, &pts).unwrap();
        for (p, margin) in pts.iter().zip(m) {
            let analytic = 0.5 - p.amax();
            assert!((margin - analytic).abs() < 1e-9 || (margin > 0.0) == (analytic > 0.0));
            if analytic.abs() > 1e-9 {
                assert_eq!(margin > 0.0, analytic > 0.0);
            }
        }
        let point = Zonotope::singleton(dv(&[0.2, 0.0])).unwrap();
        let m = pontryagin_oracle(&z1, &point, &pts).unwrap();
        for (p, margin) in pts.iter().zip(m) {
            let inside = (p + dv(&[0.2, 0.0])).amax() <= 1.0 + 1e-12;
            if margin.abs() > 1e-9 {
                assert_eq!(margin > 0.0, inside);
            }
        }
    }

    #[test]
    fn horizon_program_on_scalar_integrator() {
        // x+ = x + u with |u| <= 1 and x <= 2 before the final step.
        let a = DMatrix::identity(1, 1);
        let b = DMatrix::identity(1, 1);
        let x = HPolytope::from_box(&dv(&[-10.0]), &dv(&[2.0])).unwrap();
        let u = Zonotope::from_box(&dv(&[-1.0]), &dv(&[1.0])).unwrap();
        let ok = |x0: f64, xs: f64, n: usize| horizon_feasible(&a, &b, &x, &u, &dv(&[x0]), &dv(&[xs]), n).unwrap();
        assert!(ok(0.0, 3.0, 3));
        assert!(!ok(0.0, 3.5, 3));
        assert!(!ok(0.0, 4.0, 4), "the state bound caps the last predecessor at 2");
        assert!(ok(0.0, 3.0, 4));
        assert!(ok(1.0, 1.0, 0) && !ok(1.0, 2.0, 0));
        assert!(!ok(5.0, 4.0, 1), "the start must satisfy the state bound");
    }
}
