//! Euclidean primitives: points, balls, affine d-flats, the normalized local
//! Hausdorff distance, and maximal separated nets.
//!
//! Points are stored as fixed 4-lane arrays with unused lanes zeroed, so the
//! arithmetic is dimension-blind; the ambient dimension `n` lives on the
//! containers (`SampledSet`, `AffineFlat`) that need it.

use crate::{Error, Result, MAX_DIM, RESOLUTION_FACTOR};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A point (or vector) in R^n, n <= 4. Lanes beyond n must stay zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub c: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point { c }
    }

    pub fn zero() -> Self {
        Point::default()
    }

    #[inline]
    pub fn add(&self, o: &Point) -> Point {
        let mut c = self.c;
        for i in 0..MAX_DIM {
            c[i] += o.c[i];
        }
        Point { c }
    }

    #[inline]
    pub fn sub(&self, o: &Point) -> Point {
        let mut c = self.c;
        for i in 0..MAX_DIM {
            c[i] -= o.c[i];
        }
        Point { c }
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Point {
        let mut c = self.c;
        for v in &mut c {
            *v *= s;
        }
        Point { c }
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            s += self.c[i] * o.c[i];
        }
        s
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        self.sub(o).norm()
    }

    #[inline]
    pub fn dist2(&self, o: &Point) -> f64 {
        self.sub(o).norm2()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

/// Open ball B(center, radius).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Ball> {
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.dist2(&self.center) < self.radius * self.radius
    }

    pub fn diam(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn scaled(&self, s: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * s }
    }
}

/// Affine d-dimensional plane: base point plus an orthonormal frame of d
/// direction vectors, 0 < d < n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineFlat {
    pub base: Point,
    pub frame: Vec<Point>,
    pub n: usize,
}

const ORTHONORMAL_TOL: f64 = 1e-12;

impl AffineFlat {
    pub fn new(base: Point, frame: Vec<Point>, n: usize) -> Result<AffineFlat> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("ambient dim {n} out of range")));
        }
        let d = frame.len();
        if d == 0 || d >= n {
            return Err(Error::DimensionMismatch(format!(
                "flat dim {d} must satisfy 0 < d < n = {n}"
            )));
        }
        for (i, u) in frame.iter().enumerate() {
            if (u.norm() - 1.0).abs() > ORTHONORMAL_TOL {
                return Err(Error::InvalidParameter(format!(
                    "frame vector {i} is not unit norm (|u| = {})",
                    u.norm()
                )));
            }
            for (j, v) in frame.iter().enumerate().skip(i + 1) {
                if u.dot(v).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "frame vectors {i} and {j} are not orthogonal (dot = {})",
                        u.dot(v)
                    )));
                }
            }
        }
        Ok(AffineFlat { base, frame, n })
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    /// Euclidean distance from `p` to the flat: norm of the component of
    /// p - base orthogonal to the frame.
    #[inline]
    pub fn distance(&self, p: &Point) -> f64 {
        let v = p.sub(&self.base);
        let mut w = v;
        for u in &self.frame {
            let t = v.dot(u);
            w = w.sub(&u.scale(t));
        }
        w.norm()
    }

    /// Orthogonal projection of `p` onto the flat.
    pub fn project(&self, p: &Point) -> Point {
        let v = p.sub(&self.base);
        let mut q = self.base;
        for u in &self.frame {
            q = q.add(&u.scale(v.dot(u)));
        }
        q
    }

    /// Coordinates of the projection of `p` in the frame.
    pub fn coords_of(&self, p: &Point) -> Vec<f64> {
        let v = p.sub(&self.base);
        self.frame.iter().map(|u| v.dot(u)).collect()
    }

    /// An orthonormal basis of the orthogonal complement of the frame,
    /// built deterministically by Gram-Schmidt over the coordinate axes.
    pub fn complement(&self) -> Vec<Point> {
        let mut basis = self.frame.clone();
        let mut comp = Vec::new();
        for axis in 0..self.n {
            let mut e = Point::zero();
            e.c[axis] = 1.0;
            for u in &basis {
                let t = e.dot(u);
                e = e.sub(&u.scale(t));
            }
            let nrm = e.norm();
            if nrm > 1e-9 {
                let e = e.scale(1.0 / nrm);
                comp.push(e);
                basis.push(e);
            }
            if comp.len() == self.n - self.dim() {
                break;
            }
        }
        comp
    }
}

/// Distance from a point to an affine flat (orthogonal complement projection
/// norm, exact to machine precision).
pub fn dist_point_flat(p: &Point, flat: &AffineFlat) -> f64 {
    flat.distance(p)
}

/// A finite h-net of points representing a set E in R^n.
///
/// Contract: every point of the underlying set is within `h` of a sample and
/// every sample is within `h` of the set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledSet {
    pub points: Vec<Point>,
    /// Net resolution.
    pub h: f64,
    /// Ambient dimension, 1..=4.
    pub n: usize,
    /// Nominal dimension d of the underlying set, 0 < d <= n.
    pub d: usize,
}

impl SampledSet {
    pub fn new(points: Vec<Point>, h: f64, n: usize, d: usize) -> Result<SampledSet> {
        if points.is_empty() {
            return Err(Error::Empty("sampled set has no points".into()));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("ambient dim {n} out of range")));
        }
        if d == 0 || d > n {
            return Err(Error::DimensionMismatch(format!("nominal dim {d} vs ambient {n}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("resolution h = {h}")));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidParameter(format!("point {i} has non-finite coords")));
            }
            for ax in n..MAX_DIM {
                if p.c[ax] != 0.0 {
                    return Err(Error::DimensionMismatch(format!(
                        "point {i} has nonzero coordinate beyond ambient dim {n}"
                    )));
                }
            }
        }
        let set = SampledSet { points, h, n, d };
        if set.points.len() > 1 && set.h >= set.bbox_diag() {
            return Err(Error::InvalidParameter(format!(
                "h = {} is not smaller than the sample diameter {}",
                set.h,
                set.bbox_diag()
            )));
        }
        Ok(set)
    }

    /// Diagonal of the bounding box; a cheap, deterministic stand-in for the
    /// diameter (within a factor sqrt(n) of it).
    pub fn bbox_diag(&self) -> f64 {
        let (lo, hi) = self.bbox();
        hi.sub(&lo).norm()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points {
            for i in 0..MAX_DIM {
                lo.c[i] = lo.c[i].min(p.c[i]);
                hi.c[i] = hi.c[i].max(p.c[i]);
            }
        }
        (lo, hi)
    }

    /// Smallest legal radius for scale-dependent operations.
    pub fn resolution_floor(&self) -> f64 {
        RESOLUTION_FACTOR * self.h
    }

    /// Indices of samples inside the ball, ascending.
    pub fn indices_in_ball(&self, ball: &Ball) -> Vec<usize> {
        let r2 = ball.radius * ball.radius;
        (0..self.points.len())
            .filter(|&i| self.points[i].dist2(&ball.center) < r2)
            .collect()
    }

    /// Restriction to a ball, keeping h/n/d. Errors when the ball is empty.
    pub fn restrict_to_ball(&self, ball: &Ball) -> Result<SampledSet> {
        let idx = self.indices_in_ball(ball);
        if idx.is_empty() {
            return Err(Error::Empty("no samples in ball".into()));
        }
        Ok(SampledSet {
            points: idx.into_iter().map(|i| self.points[i]).collect(),
            h: self.h,
            n: self.n,
            d: self.d,
        })
    }

    /// Translated copy (used by fixtures to put sets in generic position
    /// relative to the dyadic grid).
    pub fn translated(&self, shift: &Point) -> SampledSet {
        SampledSet {
            points: self.points.iter().map(|p| p.add(shift)).collect(),
            h: self.h,
            n: self.n,
            d: self.d,
        }
    }
}

/// Uniform-grid spatial index over a point list, for range and nearest
/// queries. Cells are half-open boxes of side `cell`.
#[derive(Clone, Debug)]
pub struct PointGrid {
    cell: f64,
    n: usize,
    buckets: HashMap<[i64; MAX_DIM], Vec<u32>>,
    points: Vec<Point>,
    lo: Point,
    hi: Point,
}

impl PointGrid {
    pub fn build(points: &[Point], n: usize, cell: f64) -> PointGrid {
        assert!(cell > 0.0 && cell.is_finite());
        let mut lo = points.first().copied().unwrap_or_default();
        let mut hi = lo;
        let mut buckets: HashMap<[i64; MAX_DIM], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            for a in 0..MAX_DIM {
                lo.c[a] = lo.c[a].min(p.c[a]);
                hi.c[a] = hi.c[a].max(p.c[a]);
            }
            buckets.entry(Self::key_of(p, cell)).or_default().push(i as u32);
        }
        PointGrid { cell, n, buckets, points: points.to_vec(), lo, hi }
    }

    /// Cell size chosen so typical queries touch O(1) buckets.
    pub fn build_auto(set: &SampledSet) -> PointGrid {
        let diag = set.bbox_diag().max(set.h);
        // Aim for ~2 points per cell along each axis of the nominal dimension.
        let target = (set.points.len() as f64).powf(1.0 / set.d as f64).max(2.0);
        let cell = (diag / target).max(set.h);
        PointGrid::build(&set.points, set.n, cell)
    }

    #[inline]
    fn key_of(p: &Point, cell: f64) -> [i64; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        for a in 0..MAX_DIM {
            k[a] = (p.c[a] / cell).floor() as i64;
        }
        k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of points within `r` of `q` (open ball), ascending. The key
    /// scan is clamped to the occupied bounding box so oversized query radii
    /// stay cheap.
    pub fn in_ball(&self, q: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let r2 = r * r;
        let mut lo_k = [0i64; MAX_DIM];
        let mut hi_k = [0i64; MAX_DIM];
        for a in 0..MAX_DIM {
            let (l, h) = if a < self.n { (q.c[a] - r, q.c[a] + r) } else { (0.0, 0.0) };
            let bb_lo = (self.lo.c[a] / self.cell).floor() as i64;
            let bb_hi = (self.hi.c[a] / self.cell).floor() as i64;
            lo_k[a] = ((l / self.cell).floor() as i64).max(bb_lo);
            hi_k[a] = ((h / self.cell).floor() as i64).min(bb_hi);
            if lo_k[a] > hi_k[a] {
                return out;
            }
        }
        let mut key = lo_k;
        loop {
            if let Some(b) = self.buckets.get(&key) {
                for &i in b {
                    if self.points[i as usize].dist2(q) < r2 {
                        out.push(i as usize);
                    }
                }
            }
            // odometer over the key ranges
            let mut a = 0;
            loop {
                if a == MAX_DIM {
                    out.sort_unstable();
                    return out;
                }
                key[a] += 1;
                if key[a] <= hi_k[a] {
                    break;
                }
                key[a] = lo_k[a];
                a += 1;
            }
        }
    }

    /// Distance from `q` to the nearest indexed point.
    pub fn nearest_dist(&self, q: &Point) -> f64 {
        self.nearest(q).1
    }

    /// Nearest indexed point: (index, distance). Ties broken by lowest index.
    pub fn nearest(&self, q: &Point) -> (usize, f64) {
        debug_assert!(!self.points.is_empty());
        let mut r = self.cell;
        let max_r = {
            let mut far: f64 = 0.0;
            for a in 0..self.n {
                far = far.max((q.c[a] - self.lo.c[a]).abs().max((q.c[a] - self.hi.c[a]).abs()));
            }
            (far * (self.n as f64).sqrt()).max(self.cell) * 2.0
        };
        loop {
            let cand = self.in_ball(q, r);
            if !cand.is_empty() {
                let mut best = (usize::MAX, f64::INFINITY);
                for i in cand {
                    let dd = self.points[i].dist(q);
                    if dd < best.1 || (dd == best.1 && i < best.0) {
                        best = (i, dd);
                    }
                }
                // a closer point could sit just outside the scanned ball
                if best.1 <= r || r > max_r {
                    return best;
                }
                r = best.1 * (1.0 + 1e-12);
                let cand = self.in_ball(q, r * (1.0 + 1e-12));
                let mut best = (usize::MAX, f64::INFINITY);
                for i in cand {
                    let dd = self.points[i].dist(q);
                    if dd < best.1 || (dd == best.1 && i < best.0) {
                        best = (i, dd);
                    }
                }
                return best;
            }
            if r > max_r {
                // fall back to linear scan (tiny sets)
                let mut best = (usize::MAX, f64::INFINITY);
                for (i, p) in self.points.iter().enumerate() {
                    let dd = p.dist(q);
                    if dd < best.1 {
                        best = (i, dd);
                    }
                }
                return best;
            }
            r *= 2.0;
        }
    }

    /// Is any indexed point strictly within `r` of `q`?
    pub fn has_within(&self, q: &Point, r: f64) -> bool {
        !self.in_ball(q, r).is_empty()
    }
}

/// Sample a flat clipped to a ball on a regular grid of the flat.
///
/// Grid spacing is `min(h, ball.diam() / 64)`, the discretization rule used
/// by the local Hausdorff distance below.
pub fn sample_flat_in_ball(flat: &AffineFlat, ball: &Ball, h: f64) -> Vec<Point> {
    let spacing = h.min(ball.diam() / 64.0);
    let center_on_flat = flat.project(&ball.center);
    let dist_to_flat = flat.distance(&ball.center);
    let mut out = Vec::new();
    if dist_to_flat >= ball.radius {
        // flat misses the ball (or touches tangentially): empty sample
        return out;
    }
    // radius of the slice of the flat inside the ball
    let slice_r = (ball.radius * ball.radius - dist_to_flat * dist_to_flat).sqrt();
    let d = flat.dim();
    let m = (slice_r / spacing).ceil() as i64;
    let mut idx = vec![-m; d];
    'outer: loop {
        let mut q = center_on_flat;
        let mut r2 = 0.0;
        for (k, u) in flat.frame.iter().enumerate() {
            let t = idx[k] as f64 * spacing;
            r2 += t * t;
            q = q.add(&u.scale(t));
        }
        if r2 <= slice_r * slice_r && ball.contains(&q) {
            out.push(q);
        }
        let mut a = 0;
        loop {
            if a == d {
                break 'outer;
            }
            idx[a] += 1;
            if idx[a] <= m {
                break;
            }
            idx[a] = -m;
            a += 1;
        }
    }
    out
}

/// Second argument of [`local_hausdorff`]: a finite sample or an affine flat.
pub enum SetOrFlat<'a> {
    Set(&'a SampledSet),
    Flat(&'a AffineFlat),
}

/// Normalized local Hausdorff distance inside a ball:
/// `(2 / diam B) * max(sup_{y in E∩B} dist(y, F), sup_{y in F∩B} dist(y, E))`.
///
/// A flat `F` enters through a regular grid sample of `F ∩ B` at resolution
/// `min(E.h, diam(B)/64)`. A side whose intersection with the ball is empty
/// contributes 0; when both sides are empty this is an error.
pub fn local_hausdorff(e: &SampledSet, f: SetOrFlat, ball: &Ball) -> Result<f64> {
    let e_in: Vec<&Point> =
        e.indices_in_ball(ball).into_iter().map(|i| &e.points[i]).collect();
    let f_pts: Vec<Point> = match f {
        SetOrFlat::Set(fs) => {
            fs.indices_in_ball(ball).into_iter().map(|i| fs.points[i]).collect()
        }
        SetOrFlat::Flat(flat) => sample_flat_in_ball(flat, ball, e.h),
    };
    if e_in.is_empty() && f_pts.is_empty() {
        return Err(Error::EmptyComparison);
    }
    let mut sup = 0.0f64;
    if !f_pts.is_empty() {
        match f {
            SetOrFlat::Flat(flat) => {
                for y in &e_in {
                    sup = sup.max(flat.distance(y));
                }
            }
            SetOrFlat::Set(_) => {
                for y in &e_in {
                    let mut best = f64::INFINITY;
                    for q in &f_pts {
                        best = best.min(y.dist2(q));
                    }
                    sup = sup.max(best.sqrt());
                }
            }
        }
    }
    if !e_in.is_empty() && !f_pts.is_empty() {
        // sup over F∩B of dist(., E): brute force against E∩B plus all of E
        // is wasteful; E∩B suffices only when the nearest sample is inside B,
        // so fall back to the full set for correctness.
        for q in &f_pts {
            let mut best = f64::INFINITY;
            for y in &e.points {
                best = best.min(q.dist2(y));
            }
            sup = sup.max(best.sqrt());
        }
    }
    Ok(sup * 2.0 / ball.diam())
}

/// Variant of [`local_hausdorff`] against a flat that reuses a prebuilt
/// index over E for the flat-to-set suprema. Used in inner search loops.
pub fn local_hausdorff_flat_indexed(
    e: &SampledSet,
    grid: &PointGrid,
    flat: &AffineFlat,
    ball: &Ball,
) -> Result<f64> {
    let e_in = e.indices_in_ball(ball);
    let f_pts = sample_flat_in_ball(flat, ball, e.h);
    if e_in.is_empty() && f_pts.is_empty() {
        return Err(Error::EmptyComparison);
    }
    let mut sup = 0.0f64;
    for i in &e_in {
        sup = sup.max(flat.distance(&e.points[*i]));
    }
    for q in &f_pts {
        sup = sup.max(grid.nearest_dist(q));
    }
    Ok(sup * 2.0 / ball.diam())
}

/// Maximal `sep`-separated subset of `E.points`.
///
/// Candidates are scanned in index order and kept when no already-chosen
/// point lies within `sep`, so ties always resolve to the lowest point index.
/// The result is a maximal net: chosen points are pairwise >= `sep` apart and
/// every point of E lies within `sep` of the output.
pub fn farthest_point_sampling_net(e: &SampledSet, sep: f64) -> Result<Vec<Point>> {
    if sep < e.h {
        return Err(Error::ResolutionFloor(format!(
            "net separation {sep} is below the sample resolution {}",
            e.h
        )));
    }
    let idx = fps_indices(&e.points, sep, &[]);
    Ok(idx.into_iter().map(|i| e.points[i]).collect())
}

/// Greedy maximal-net selection over `points` with separation `sep`,
/// optionally preseeded (preseeds are kept and counted as already chosen).
/// Returns chosen indices; preseeds come first, then new points in index
/// order (a point is chosen when no already-chosen point lies within `sep`).
///
/// The output is a maximal `sep`-separated subset: pairwise distances of the
/// chosen points are >= `sep` (beyond the preseeds, which are kept as given)
/// and every input point lies strictly within `sep` of a chosen one. The
/// index-order scan makes the selection deterministic.
pub fn fps_indices(points: &[Point], sep: f64, preseed: &[usize]) -> Vec<usize> {
    let n_pts = points.len();
    if n_pts == 0 {
        return Vec::new();
    }
    let cell = sep.max(1e-12);
    let mut chosen: Vec<usize> = Vec::with_capacity(preseed.len() + 16);
    // grid over chosen points only
    let mut buckets: HashMap<[i64; MAX_DIM], Vec<usize>> = HashMap::new();
    let key_of = |p: &Point| -> [i64; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        for a in 0..MAX_DIM {
            k[a] = (p.c[a] / cell).floor() as i64;
        }
        k
    };
    let push = |i: usize, buckets: &mut HashMap<[i64; MAX_DIM], Vec<usize>>| {
        buckets.entry(key_of(&points[i])).or_default().push(i);
    };
    let covered = |p: &Point, buckets: &HashMap<[i64; MAX_DIM], Vec<usize>>| -> bool {
        let base = key_of(p);
        let reach = (sep / cell).ceil() as i64;
        let mut delta = [-reach; MAX_DIM];
        loop {
            let mut k = base;
            for a in 0..MAX_DIM {
                k[a] += delta[a];
            }
            if let Some(b) = buckets.get(&k) {
                for &j in b {
                    if points[j].dist(p) < sep {
                        return true;
                    }
                }
            }
            let mut a = 0;
            loop {
                if a == MAX_DIM {
                    return false;
                }
                delta[a] += 1;
                if delta[a] <= reach {
                    break;
                }
                delta[a] = -reach;
                a += 1;
            }
        }
    };
    for &s in preseed {
        chosen.push(s);
        push(s, &mut buckets);
    }
    for i in 0..n_pts {
        if !covered(&points[i], &buckets) {
            chosen.push(i);
            push(i, &mut buckets);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords)
    }

    #[test]
    fn dist_point_flat_orthogonal_offset() {
        let flat = AffineFlat::new(
            pt(&[0.0, 0.0, 0.0]),
            vec![pt(&[1.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0])],
            3,
        )
        .unwrap();
        assert_abs_diff_eq!(dist_point_flat(&pt(&[0.0, 0.0, 1.0]), &flat), 1.0);
        assert_abs_diff_eq!(dist_point_flat(&pt(&[0.3, -2.0, 0.0]), &flat), 0.0);
    }

    #[test]
    fn dist_point_flat_diagonal_line_membership() {
        let s = 0.5f64.sqrt();
        let line = AffineFlat::new(pt(&[0.0, 0.0]), vec![pt(&[s, s])], 2).unwrap();
        assert_abs_diff_eq!(dist_point_flat(&pt(&[1.0, 1.0]), &line), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_rejects_bad_frames() {
        assert!(AffineFlat::new(pt(&[0.0, 0.0]), vec![pt(&[1.0, 1.0])], 2).is_err());
        assert!(AffineFlat::new(
            pt(&[0.0, 0.0, 0.0]),
            vec![pt(&[1.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0])],
            3
        )
        .is_err());
        // d must be < n
        assert!(AffineFlat::new(pt(&[0.0, 0.0]), vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])], 2).is_err());
    }

    #[test]
    fn rigid_motion_invariance_of_flat_distance() {
        // rotate both the point and the flat by a fixed rotation in the xy plane
        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let rot = |p: &Point| pt(&[c * p.c[0] - s * p.c[1], s * p.c[0] + c * p.c[1], p.c[2]]);
        let flat = AffineFlat::new(
            pt(&[0.2, -0.1, 0.4]),
            vec![pt(&[1.0, 0.0, 0.0]), pt(&[0.0, 0.0, 1.0])],
            3,
        )
        .unwrap();
        let p = pt(&[0.9, 1.1, -0.3]);
        let d0 = flat.distance(&p);
        let rflat = AffineFlat::new(
            rot(&flat.base),
            flat.frame.iter().map(|u| rot(u)).collect(),
            3,
        )
        .unwrap();
        let d1 = rflat.distance(&rot(&p));
        assert_abs_diff_eq!(d0, d1, epsilon = 1e-9);
    }

    fn segment_set(n_pts: usize) -> SampledSet {
        let h = 1.0 / n_pts as f64;
        let points: Vec<Point> = (0..n_pts).map(|i| pt(&[i as f64 * h, 0.0])).collect();
        SampledSet::new(points, h, 2, 1).unwrap()
    }

    #[test]
    fn local_hausdorff_identical_sets_is_zero() {
        let e = segment_set(64);
        let b = Ball::new(pt(&[0.5, 0.0]), 0.4).unwrap();
        let v = local_hausdorff(&e, SetOrFlat::Set(&e), &b).unwrap();
        assert_abs_diff_eq!(v, 0.0);
    }

    #[test]
    fn local_hausdorff_point_vs_axis() {
        // E = {(0,0)}, F = x-axis, B = B((0,0),1): the far ends of F∩B are at
        // distance ~1 from E, normalized by 2/diam = 1/1.
        let e = SampledSet::new(vec![pt(&[0.0, 0.0])], 0.05, 2, 1).unwrap();
        let flat = AffineFlat::new(pt(&[0.0, 0.0]), vec![pt(&[1.0, 0.0])], 2).unwrap();
        let b = Ball::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let v = local_hausdorff(&e, SetOrFlat::Flat(&flat), &b).unwrap();
        assert!((v - 1.0).abs() < 0.05, "expected ~1.0, got {v}");
    }

    #[test]
    fn local_hausdorff_offset_segment() {
        // E = [0,1] x {0.1}, F = unit segment on the x-axis, B = B((1/2,0),1):
        // the one-sided offset 0.1 dominates both suprema
        let delta = 0.1;
        let h = 1.0 / 256.0;
        let points: Vec<Point> = (0..=256).map(|i| pt(&[i as f64 * h, delta])).collect();
        let e = SampledSet::new(points, h, 2, 1).unwrap();
        let f_points: Vec<Point> = (0..=256).map(|i| pt(&[i as f64 * h, 0.0])).collect();
        let f = SampledSet::new(f_points, h, 2, 1).unwrap();
        let b = Ball::new(pt(&[0.5, 0.0]), 1.0).unwrap();
        let v = local_hausdorff(&e, SetOrFlat::Set(&f), &b).unwrap();
        assert!((v - delta).abs() < 3.0 * h, "expected ~0.1, got {v}");

        // against the full x-axis the flat side dominates: the axis reaches
        // x = -1/2 inside the ball, at distance ~0.51 from the segment
        let flat = AffineFlat::new(pt(&[0.0, 0.0]), vec![pt(&[1.0, 0.0])], 2).unwrap();
        let v_flat = local_hausdorff(&e, SetOrFlat::Flat(&flat), &b).unwrap();
        let expect = (0.5f64 * 0.5 + delta * delta).sqrt();
        assert!((v_flat - expect).abs() < 0.03, "expected ~{expect}, got {v_flat}");
    }

    #[test]
    fn local_hausdorff_symmetry_and_scale_invariance() {
        let e = segment_set(64);
        let shifted: Vec<Point> = e.points.iter().map(|p| pt(&[p.c[0], 0.07])).collect();
        let f = SampledSet::new(shifted, e.h, 2, 1).unwrap();
        let b = Ball::new(pt(&[0.5, 0.0]), 0.5).unwrap();
        let v_ef = local_hausdorff(&e, SetOrFlat::Set(&f), &b).unwrap();
        let v_fe = local_hausdorff(&f, SetOrFlat::Set(&e), &b).unwrap();
        assert_abs_diff_eq!(v_ef, v_fe, epsilon = 1e-9);
        // scale everything by 3
        let scale = |s: &SampledSet| {
            SampledSet::new(s.points.iter().map(|p| p.scale(3.0)).collect(), s.h * 3.0, 2, 1)
                .unwrap()
        };
        let e3 = scale(&e);
        let f3 = scale(&f);
        let b3 = Ball::new(b.center.scale(3.0), b.radius * 3.0).unwrap();
        let v3 = local_hausdorff(&e3, SetOrFlat::Set(&f3), &b3).unwrap();
        assert_abs_diff_eq!(v_ef, v3, epsilon = 1e-9);
    }

    #[test]
    fn local_hausdorff_both_empty_errors() {
        let e = segment_set(16);
        let b = Ball::new(pt(&[10.0, 10.0]), 0.5).unwrap();
        assert!(matches!(
            local_hausdorff(&e, SetOrFlat::Set(&e), &b),
            Err(Error::EmptyComparison)
        ));
    }

    #[test]
    fn fps_net_singleton() {
        let e = SampledSet::new(vec![pt(&[0.3, 0.4])], 0.01, 2, 1).unwrap();
        let net = farthest_point_sampling_net(&e, 0.5).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net[0], pt(&[0.3, 0.4]));
    }

    #[test]
    fn fps_net_collinear_points() {
        // 10 collinear points with spacing 1, sep 2.5 -> net of size 4
        let points: Vec<Point> = (0..10).map(|i| pt(&[i as f64, 0.0])).collect();
        let e = SampledSet::new(points, 0.5, 2, 1).unwrap();
        let net = farthest_point_sampling_net(&e, 2.5).unwrap();
        assert_eq!(net.len(), 4);
        check_net_properties(&e.points, &net, 2.5);
    }

    #[test]
    fn fps_net_sep_beyond_diameter() {
        let points: Vec<Point> = (0..5).map(|i| pt(&[i as f64 * 0.1, 0.0])).collect();
        let e = SampledSet::new(points, 0.05, 2, 1).unwrap();
        let net = farthest_point_sampling_net(&e, 10.0).unwrap();
        assert_eq!(net.len(), 1);
    }

    /// O(N^2) oracle: separation and covering.
    fn check_net_properties(all: &[Point], net: &[Point], sep: f64) {
        for (i, a) in net.iter().enumerate() {
            for b in net.iter().skip(i + 1) {
                assert!(a.dist(b) >= sep, "net points too close: {}", a.dist(b));
            }
        }
        for p in all {
            let cover = net.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
            assert!(cover < sep, "point not covered: min dist {cover}");
        }
    }

    #[test]
    fn fps_net_random_properties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Point> =
            (0..300).map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>()])).collect();
        let e = SampledSet::new(points, 0.01, 2, 1).unwrap();
        for sep in [0.05, 0.13, 0.4] {
            let net = farthest_point_sampling_net(&e, sep).unwrap();
            check_net_properties(&e.points, &net, sep);
        }
    }

    #[test]
    fn point_grid_queries_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let points: Vec<Point> =
            (0..200).map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])).collect();
        let grid = PointGrid::build(&points, 3, 0.13);
        for _ in 0..50 {
            let q = pt(&[rng.random::<f64>() * 1.4 - 0.2, rng.random::<f64>(), rng.random::<f64>()]);
            let r = 0.05 + rng.random::<f64>() * 0.4;
            let got = grid.in_ball(&q, r);
            let want: Vec<usize> =
                (0..points.len()).filter(|&i| points[i].dist(&q) < r).collect();
            assert_eq!(got, want);
            let nd = grid.nearest_dist(&q);
            let bf = points.iter().map(|p| p.dist(&q)).fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(nd, bf, epsilon = 1e-12);
        }
    }
}
