//! Deterministic generators of test sets with known ground truth.
//!
//! Self-similar sets are emitted at an iterated-function-system depth with h
//! equal to the exact cylinder diameter, so the h-net contract holds by
//! construction; graphs and curves are emitted on regular grids with spacing
//! adjusted for the surface stretch.

use crate::geom::{AffineFlat, Point, SampledSet};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kind {
    /// Axis-aligned unit d-plane in R^n sampled on a grid: [0,1)^d x {0}.
    Plane { n: usize, d: usize },
    /// Graph of an L-Lipschitz function over [0,1)^d in R^{d+1}.
    LipschitzGraph { d: usize, lipschitz: f64 },
    /// Plane perturbed by a delta-Lipschitz graph; passes the Reifenberg
    /// flatness test at epsilon ~ 4 delta.
    ReifenbergPerturbedPlane { d: usize, delta: f64 },
    /// Four-corner Cantor set in the plane, contraction 1/4.
    Cantor4Corner { depth: u32 },
    /// Eight-corner Cantor set in R^3, contraction 1/4.
    Cantor8Corner3d { depth: u32 },
    /// Koch-type curve with opening angle theta (degrees); theta = 60 gives
    /// the classical snowflake edge with dimension log 4 / log 3.
    KochSnowflake { theta_deg: f64, depth: u32 },
    /// Random polygonal curve through `vertices` points of the unit square.
    PolygonalCurve { vertices: usize },
    /// Circle (n = 2) or sphere (n = 3) of radius 1/4 centered in the unit
    /// box.
    Sphere { n: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: Kind,
    /// Target resolution for grid-sampled kinds (self-similar kinds derive h
    /// from their depth instead).
    pub h: f64,
    pub seed: u64,
}

/// What is known analytically about the generated set.
#[derive(Clone, Debug, Serialize)]
pub struct GroundTruth {
    pub d: usize,
    pub analytic_dim: Option<f64>,
    pub lipschitz: Option<f64>,
    /// A flat containing the set, when it is flat.
    pub flat_witness: Option<AffineFlat>,
    /// Curve length for 1-dimensional rectifiable kinds.
    pub length: Option<f64>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<(SampledSet, GroundTruth)> {
    match &spec.kind {
        Kind::Plane { n, d } => plane(*n, *d, spec.h),
        Kind::LipschitzGraph { d, lipschitz } => graph(*d, *lipschitz, spec.h, spec.seed, false),
        Kind::ReifenbergPerturbedPlane { d, delta } => graph(*d, *delta, spec.h, spec.seed, true),
        Kind::Cantor4Corner { depth } => cantor(2, *depth),
        Kind::Cantor8Corner3d { depth } => cantor(3, *depth),
        Kind::KochSnowflake { theta_deg, depth } => koch(*theta_deg, *depth),
        Kind::PolygonalCurve { vertices } => polygonal(*vertices, spec.h, spec.seed),
        Kind::Sphere { n } => sphere(*n, spec.h),
    }
}

fn plane(n: usize, d: usize, h: f64) -> Result<(SampledSet, GroundTruth)> {
    if d == 0 || d >= n || n > crate::MAX_DIM {
        return Err(Error::InvalidParameter(format!("plane with d = {d}, n = {n}")));
    }
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::InvalidParameter(format!("plane resolution h = {h}")));
    }
    let m = (1.0 / h).ceil() as usize;
    let g = 1.0 / m as f64;
    let mut points = Vec::with_capacity(m.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let mut p = Point::zero();
        for (k, &i) in idx.iter().enumerate() {
            p.c[k] = i as f64 * g;
        }
        points.push(p);
        let mut a = 0;
        loop {
            if a == d {
                let flat = base_flat(n, d).unwrap();
                let set = SampledSet::new(points, h, n, d)?;
                let truth = GroundTruth {
                    d,
                    analytic_dim: Some(d as f64),
                    lipschitz: Some(0.0),
                    flat_witness: Some(flat),
                    length: if d == 1 { Some(1.0) } else { None },
                };
                return Ok((set, truth));
            }
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Smooth 1-Lipschitz mixture of plane waves, scaled by `l`.
fn graph_fn(l: f64, seed: u64, d: usize) -> impl Fn(&[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..3.0)).collect();
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let coef = rng.random_range(0.2..1.0);
            (w, phase, coef)
        })
        .collect();
    let total: f64 = waves.iter().map(|(_, _, c)| c).sum();
    move |x: &[f64]| -> f64 {
        let mut v = 0.0;
        for (w, phase, coef) in &waves {
            let norm = (w.iter().map(|a| a * a).sum::<f64>()).sqrt();
            let arg: f64 =
                std::f64::consts::TAU * w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
            v += coef / total * arg.sin() / (std::f64::consts::TAU * norm);
        }
        l * v
    }
}

fn graph(d: usize, l: f64, h: f64, seed: u64, reifenberg: bool) -> Result<(SampledSet, GroundTruth)> {
    let n = d + 1;
    if n > crate::MAX_DIM || d == 0 {
        return Err(Error::InvalidParameter(format!("graph dimension d = {d}")));
    }
    if !(h > 0.0 && h < 0.5) || !(l >= 0.0) {
        return Err(Error::InvalidParameter("graph needs h in (0, 1/2) and L >= 0".into()));
    }
    let f = graph_fn(l, seed, d);
    // grid spacing shrunk by the surface stretch
    let g_target = h / (1.0 + l * l).sqrt();
    let m = (1.0 / g_target).ceil() as usize;
    let g = 1.0 / m as f64;
    let mut points = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 * g).collect();
        let mut p = Point::zero();
        for (k, &xv) in x.iter().enumerate() {
            p.c[k] = xv;
        }
        p.c[d] = f(&x);
        points.push(p);
        let mut a = 0;
        loop {
            if a == d {
                let set = SampledSet::new(points, h, n, d)?;
                let truth = GroundTruth {
                    d,
                    analytic_dim: Some(d as f64),
                    lipschitz: Some(l),
                    flat_witness: if reifenberg { base_flat(n, d) } else { None },
                    length: None,
                };
                return Ok((set, truth));
            }
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

fn base_flat(n: usize, d: usize) -> Option<AffineFlat> {
    let mut frame = Vec::with_capacity(d);
    for k in 0..d {
        let mut u = Point::zero();
        u.c[k] = 1.0;
        frame.push(u);
    }
    AffineFlat::new(Point::zero(), frame, n).ok()
}

/// Corner Cantor set: 2^n maps of contraction 1/4 at the corners of the unit
/// cube; emits the depth-k cell centers with h the exact cell diameter.
fn cantor(n: usize, depth: u32) -> Result<(SampledSet, GroundTruth)> {
    if depth == 0 || depth > 9 {
        return Err(Error::InvalidParameter(format!("cantor depth {depth} out of 1..=9")));
    }
    let corners = 1usize << n;
    let mut cells: Vec<Point> = vec![Point::zero()]; // cell corner positions
    let mut side = 1.0f64;
    for _ in 0..depth {
        side *= 0.25;
        let offset = 3.0 * side;
        let mut next = Vec::with_capacity(cells.len() * corners);
        for cell in &cells {
            for bits in 0..corners {
                let mut c = *cell;
                for a in 0..n {
                    if bits >> a & 1 == 1 {
                        c.c[a] += offset;
                    }
                }
                next.push(c);
            }
        }
        cells = next;
    }
    // centers of the depth cells
    let mut points = cells;
    for p in &mut points {
        for a in 0..n {
            p.c[a] += 0.5 * side;
        }
    }
    let h = side * (n as f64).sqrt();
    let set = SampledSet::new(points, h, n, 1)?;
    let analytic = (corners as f64).ln() / 4.0f64.ln();
    let truth = GroundTruth {
        d: 1,
        analytic_dim: Some(analytic),
        lipschitz: None,
        flat_witness: None,
        length: None,
    };
    Ok((set, truth))
}

/// Koch-type rewriting of the unit segment: each segment becomes four of
/// length s = 1/(2 + 2 cos theta); dimension log 4 / log(1/s).
fn koch(theta_deg: f64, depth: u32) -> Result<(SampledSet, GroundTruth)> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::InvalidParameter(format!("koch angle {theta_deg} out of (0, 90]")));
    }
    if depth == 0 || depth > 9 {
        return Err(Error::InvalidParameter(format!("koch depth {depth} out of 1..=9")));
    }
    let theta = theta_deg.to_radians();
    let s = 1.0 / (2.0 + 2.0 * theta.cos());
    let rot = |v: Point, ang: f64| -> Point {
        let (sn, cs) = ang.sin_cos();
        Point::new(&[cs * v.c[0] - sn * v.c[1], sn * v.c[0] + cs * v.c[1]])
    };
    let mut vertices = vec![Point::new(&[0.0, 0.0]), Point::new(&[1.0, 0.0])];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(vertices.len() * 4);
        for w in vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            let u = b.sub(&a);
            let p1 = a.add(&u.scale(s));
            let apex = p1.add(&rot(u.scale(s), theta));
            let p2 = b.sub(&u.scale(s));
            next.push(a);
            next.push(p1);
            next.push(apex);
            next.push(p2);
        }
        next.push(*vertices.last().unwrap());
        vertices = next;
    }
    let h = s.powi(depth as i32);
    let set = SampledSet::new(vertices, h, 2, 1)?;
    let truth = GroundTruth {
        d: 1,
        analytic_dim: Some(4.0f64.ln() / (1.0 / s).ln()),
        lipschitz: None,
        flat_witness: None,
        length: None,
    };
    Ok((set, truth))
}

fn polygonal(vertices: usize, h: f64, seed: u64) -> Result<(SampledSet, GroundTruth)> {
    if vertices < 2 || vertices > 64 {
        return Err(Error::InvalidParameter(format!(
            "polygonal vertices {vertices} out of 2..=64"
        )));
    }
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::InvalidParameter(format!("polygonal resolution h = {h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts: Vec<Point> = (0..vertices)
        .map(|_| Point::new(&[rng.random::<f64>(), rng.random::<f64>()]))
        .collect();
    let mut points = Vec::new();
    let mut length = 0.0;
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.dist(&b);
        length += len;
        let steps = (len / h).ceil().max(1.0) as usize;
        for i in 0..steps {
            let t = i as f64 / steps as f64;
            points.push(a.add(&b.sub(&a).scale(t)));
        }
    }
    points.push(*verts.last().unwrap());
    let set = SampledSet::new(points, h, 2, 1)?;
    let truth = GroundTruth {
        d: 1,
        analytic_dim: Some(1.0),
        lipschitz: None,
        flat_witness: None,
        length: Some(length),
    };
    Ok((set, truth))
}

fn sphere(n: usize, h: f64) -> Result<(SampledSet, GroundTruth)> {
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::InvalidParameter(format!("sphere resolution h = {h}")));
    }
    let r = 0.25;
    let center = 0.5;
    let mut points = Vec::new();
    match n {
        2 => {
            let m = (std::f64::consts::TAU * r / h).ceil() as usize;
            for i in 0..m {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                points.push(Point::new(&[center + r * t.cos(), center + r * t.sin()]));
            }
        }
        3 => {
            // spherical Fibonacci lattice
            let m = (16.0 * (r / h) * (r / h)).ceil() as usize;
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for i in 0..m {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
                points.push(Point::new(&[
                    center + r * rho * phi.cos(),
                    center + r * rho * phi.sin(),
                    center + r * z,
                ]));
            }
        }
        _ => return Err(Error::InvalidParameter(format!("sphere ambient dim {n}"))),
    }
    let set = SampledSet::new(points, h, n, n - 1)?;
    let truth = GroundTruth {
        d: n - 1,
        analytic_dim: Some((n - 1) as f64),
        lipschitz: None,
        flat_witness: None,
        length: if n == 2 { Some(std::f64::consts::TAU * r) } else { None },
    };
    Ok((set, truth))
}
