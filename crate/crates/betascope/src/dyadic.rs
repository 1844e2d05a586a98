//! Integer-indexed dyadic grid, d-dimensional skeleta, and exact dyadic
//! Hausdorff content by dynamic programming over the cube forest.
//!
//! Cubes are half-open: a cube at `level` j with integer corner c is the box
//! `prod_i [c_i 2^-j, (c_i+1) 2^-j)`. Levels may be negative (sides > 1).
//! The grid is anchored at the origin, so all quantities here are relative to
//! that fixed grid.

use crate::geom::{Ball, Point, SampledSet};
use crate::{Error, Result, MAX_DIM, RESOLUTION_FACTOR};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Side length of a level-j cube.
#[inline]
pub fn side_of_level(level: i32) -> f64 {
    (2.0f64).powi(-level)
}

/// Coarsest level whose side is still >= `s` (i.e. largest j with 2^-j >= s).
pub fn level_for_side(s: f64) -> i32 {
    assert!(s > 0.0 && s.is_finite());
    (-s.log2()).floor() as i32
}

/// Default content floor level for a sampled set: the level where the cube
/// side reaches the resolution floor `8h`.
pub fn default_floor_level(set: &SampledSet) -> i32 {
    level_for_side(RESOLUTION_FACTOR * set.h)
}

/// A dyadic cube: level plus integer corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub corner: [i64; MAX_DIM],
    pub n: u8,
}

impl DyadicCube {
    /// The level-j cube containing `p`.
    pub fn containing(p: &Point, level: i32, n: usize) -> DyadicCube {
        let s = side_of_level(level);
        let mut corner = [0i64; MAX_DIM];
        for (a, c) in corner.iter_mut().enumerate().take(n) {
            *c = (p.c[a] / s).floor() as i64;
        }
        DyadicCube { level, corner, n: n as u8 }
    }

    pub fn side(&self) -> f64 {
        side_of_level(self.level)
    }

    pub fn min_corner(&self) -> Point {
        let s = self.side();
        let mut p = Point::zero();
        for a in 0..self.n as usize {
            p.c[a] = self.corner[a] as f64 * s;
        }
        p
    }

    pub fn center(&self) -> Point {
        let s = self.side();
        let mut p = self.min_corner();
        for a in 0..self.n as usize {
            p.c[a] += 0.5 * s;
        }
        p
    }

    pub fn parent(&self) -> DyadicCube {
        let mut corner = [0i64; MAX_DIM];
        for a in 0..self.n as usize {
            corner[a] = self.corner[a].div_euclid(2);
        }
        DyadicCube { level: self.level - 1, corner, n: self.n }
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.n as usize;
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0..(1u32 << n) {
            let mut corner = [0i64; MAX_DIM];
            for a in 0..n {
                corner[a] = 2 * self.corner[a] + ((bits >> a) & 1) as i64;
            }
            out.push(DyadicCube { level: self.level + 1, corner, n: self.n });
        }
        out
    }

    pub fn contains(&self, p: &Point) -> bool {
        let s = self.side();
        for a in 0..self.n as usize {
            let lo = self.corner[a] as f64 * s;
            if p.c[a] < lo || p.c[a] >= lo + s {
                return false;
            }
        }
        true
    }

    /// Euclidean distance from `p` to the closed cube.
    pub fn dist_to_point(&self, p: &Point) -> f64 {
        let s = self.side();
        let mut d2 = 0.0;
        for a in 0..self.n as usize {
            let lo = self.corner[a] as f64 * s;
            let hi = lo + s;
            let t = if p.c[a] < lo {
                lo - p.c[a]
            } else if p.c[a] > hi {
                p.c[a] - hi
            } else {
                0.0
            };
            d2 += t * t;
        }
        d2.sqrt()
    }

    pub fn meets_ball(&self, ball: &Ball) -> bool {
        self.dist_to_point(&ball.center) < ball.radius
    }

    /// Does this cube (closed) intersect the closed cube `o`?
    pub fn touches(&self, o: &DyadicCube) -> bool {
        let sa = self.side();
        let sb = o.side();
        for a in 0..self.n as usize {
            let (alo, ahi) = (self.corner[a] as f64 * sa, (self.corner[a] + 1) as f64 * sa);
            let (blo, bhi) = (o.corner[a] as f64 * sb, (o.corner[a] + 1) as f64 * sb);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
        true
    }

    /// Do the open interiors of the two cubes intersect? For dyadic cubes
    /// this is equivalent to one containing the other.
    pub fn interior_overlaps(&self, o: &DyadicCube) -> bool {
        let (fine, coarse) = if self.level >= o.level { (self, o) } else { (o, self) };
        let shift = fine.level - coarse.level;
        (0..fine.n as usize).all(|a| fine.corner[a] >> shift == coarse.corner[a])
    }

    /// All d-dimensional faces of the cube: choose d free axes and a side
    /// (low/high) for each frozen axis.
    pub fn skeleton(&self, d: usize) -> Vec<Face> {
        let n = self.n as usize;
        assert!(d < n, "skeleton dimension must be < ambient dimension");
        let mut out = Vec::new();
        for free in 0u8..(1 << n) {
            if (free.count_ones() as usize) != d {
                continue;
            }
            let frozen: Vec<usize> = (0..n).filter(|a| free & (1 << a) == 0).collect();
            for bits in 0..(1u32 << frozen.len()) {
                let mut corner = self.corner;
                for (k, &a) in frozen.iter().enumerate() {
                    corner[a] += ((bits >> k) & 1) as i64;
                }
                out.push(Face { level: self.level, corner, free, n: self.n });
            }
        }
        out
    }
}

/// An axis-parallel d-dimensional face of a dyadic cube, in canonical form.
///
/// `free` is the bitmask of unfrozen axes (popcount = dim). Along free axes
/// the face spans `[corner_a 2^-level, (corner_a+1) 2^-level)`; along frozen
/// axes it sits at `corner_a 2^-level`. Faces of two adjacent cubes that
/// coincide geometrically have identical canonical forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub level: i32,
    pub corner: [i64; MAX_DIM],
    pub free: u8,
    pub n: u8,
}

impl Face {
    pub fn dim(&self) -> usize {
        self.free.count_ones() as usize
    }

    pub fn side(&self) -> f64 {
        side_of_level(self.level)
    }

    pub fn measure(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.n as usize).filter(|a| self.free & (1 << a) != 0).collect()
    }

    pub fn frozen_axes(&self) -> Vec<usize> {
        (0..self.n as usize).filter(|a| self.free & (1 << a) == 0).collect()
    }

    /// Smallest free-axis corner point (frozen axes at their fixed value).
    pub fn min_corner(&self) -> Point {
        let s = self.side();
        let mut p = Point::zero();
        for a in 0..self.n as usize {
            p.c[a] = self.corner[a] as f64 * s;
        }
        p
    }

    pub fn center(&self) -> Point {
        let s = self.side();
        let mut p = self.min_corner();
        for a in self.free_axes() {
            p.c[a] += 0.5 * s;
        }
        p
    }

    /// Is this face geometrically contained in `o` (same hyperplane, nested
    /// intervals)? Equal faces count as contained.
    pub fn contained_in(&self, o: &Face) -> bool {
        if self.free != o.free || self.level < o.level {
            return false;
        }
        let shift = self.level - o.level;
        for a in 0..self.n as usize {
            if self.free & (1 << a) != 0 {
                if self.corner[a] >> shift != o.corner[a] {
                    return false;
                }
            } else {
                // frozen value must match exactly: o's value scaled up
                if o.corner[a] << shift != self.corner[a] {
                    return false;
                }
            }
        }
        true
    }

    /// Subdivide into the grid of subfaces of side `2^-level_out` tiling it.
    pub fn subdivide(&self, level_out: i32) -> Vec<Face> {
        assert!(level_out >= self.level);
        let shift = level_out - self.level;
        let m = 1i64 << shift;
        let axes = self.free_axes();
        let mut idx = vec![0i64; axes.len()];
        let mut out = Vec::new();
        loop {
            let mut corner = [0i64; MAX_DIM];
            for a in 0..self.n as usize {
                corner[a] = self.corner[a] << shift;
            }
            for (k, &a) in axes.iter().enumerate() {
                corner[a] += idx[k];
            }
            out.push(Face { level: level_out, corner, free: self.free, n: self.n });
            let mut a = 0;
            loop {
                if a == axes.len() {
                    return out;
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

    /// The (dim-1)-dimensional boundary faces: freeze one free axis to its
    /// low or high side.
    pub fn boundary_faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for a in self.free_axes() {
            for hi in [0i64, 1] {
                let mut corner = self.corner;
                corner[a] += hi;
                out.push(Face { level: self.level, corner, free: self.free & !(1 << a), n: self.n });
            }
        }
        out
    }

    /// Closed-box distance from a point to the face.
    pub fn dist_to_point(&self, p: &Point) -> f64 {
        let s = self.side();
        let mut d2 = 0.0;
        for a in 0..self.n as usize {
            let lo = self.corner[a] as f64 * s;
            let hi = if self.free & (1 << a) != 0 { lo + s } else { lo };
            let t = if p.c[a] < lo {
                lo - p.c[a]
            } else if p.c[a] > hi {
                p.c[a] - hi
            } else {
                0.0
            };
            d2 += t * t;
        }
        d2.sqrt()
    }

    pub fn meets_ball(&self, ball: &Ball) -> bool {
        self.dist_to_point(&ball.center) < ball.radius
    }

    /// Does the closed face contain the point (within `tol` per axis)?
    pub fn contains_point(&self, p: &Point, tol: f64) -> bool {
        let s = self.side();
        for a in 0..self.n as usize {
            let lo = self.corner[a] as f64 * s;
            let hi = if self.free & (1 << a) != 0 { lo + s } else { lo };
            if p.c[a] < lo - tol || p.c[a] > hi + tol {
                return false;
            }
        }
        true
    }
}

/// Deduplicated set of d-dimensional faces (owners may have different levels).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SkeletonSet {
    faces: Vec<Face>,
    pub dim: usize,
    pub n: usize,
}

impl SkeletonSet {
    pub fn from_faces(mut faces: Vec<Face>) -> Result<SkeletonSet> {
        if faces.is_empty() {
            return Err(Error::Empty("empty skeleton".into()));
        }
        let dim = faces[0].dim();
        let n = faces[0].n as usize;
        if dim >= n {
            return Err(Error::DimensionMismatch(format!("face dim {dim} must be < n = {n}")));
        }
        if faces.iter().any(|f| f.dim() != dim || f.n as usize != n) {
            return Err(Error::DimensionMismatch("mixed face dimensions in skeleton".into()));
        }
        faces.sort_unstable();
        faces.dedup();
        Ok(SkeletonSet { faces, dim, n })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn union(&self, other: &SkeletonSet) -> Result<SkeletonSet> {
        let mut faces = self.faces.clone();
        faces.extend_from_slice(&other.faces);
        SkeletonSet::from_faces(faces)
    }

    pub fn smallest_side(&self) -> f64 {
        self.faces.iter().map(|f| f.side()).fold(f64::INFINITY, f64::min)
    }

    /// Faces kept after removing any face geometrically contained in a
    /// larger one. The survivors have pairwise disjoint relative interiors
    /// (dyadic faces of equal dimension either nest or are disjoint).
    pub fn deoverlapped(&self) -> Vec<Face> {
        let set: HashSet<Face> = self.faces.iter().copied().collect();
        let min_level = self.faces.iter().map(|f| f.level).min().unwrap_or(0);
        let mut out = Vec::new();
        'outer: for f in &self.faces {
            // look for a strictly coarser containing face among ancestors
            for lvl in (min_level..f.level).rev() {
                if let Some(anc) = ancestor_face(f, lvl) {
                    if set.contains(&anc) {
                        continue 'outer;
                    }
                }
            }
            out.push(*f);
        }
        out
    }

    /// Total d-measure with containment de-overlap: smaller faces inside a
    /// larger face contribute nothing extra.
    pub fn measure(&self) -> f64 {
        self.deoverlapped().iter().map(|f| f.measure()).sum()
    }

    /// Measure of the intersection with a ball, by per-face grid quadrature
    /// over the de-overlapped faces (subgrid of `quad` nodes per axis).
    pub fn measure_in_ball(&self, ball: &Ball, quad: usize) -> f64 {
        let quad = quad.max(2);
        let mut total = 0.0;
        for f in self.deoverlapped() {
            if !f.meets_ball(ball) {
                continue;
            }
            let s = f.side();
            // fully inside?
            let far = f.center().dist(&ball.center) + 0.5 * s * (f.dim() as f64).sqrt();
            if far < ball.radius {
                total += f.measure();
                continue;
            }
            let axes = f.free_axes();
            let step = s / quad as f64;
            let mut idx = vec![0usize; axes.len()];
            let mut inside = 0usize;
            let base = f.min_corner();
            loop {
                let mut p = base;
                for (k, &a) in axes.iter().enumerate() {
                    p.c[a] += (idx[k] as f64 + 0.5) * step;
                }
                if ball.contains(&p) {
                    inside += 1;
                }
                let mut a = 0;
                loop {
                    if a == axes.len() {
                        let frac = inside as f64 / (quad as f64).powi(axes.len() as i32);
                        total += frac * f.measure();
                        idx.clear();
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] < quad {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if idx.is_empty() {
                    break;
                }
            }
        }
        total
    }

    /// Regular grid sample of every face at spacing <= h, satisfying the
    /// h-net contract relative to the union of faces.
    pub fn sample(&self, h: f64) -> Result<SampledSet> {
        if self.faces.is_empty() {
            return Err(Error::Empty("empty skeleton".into()));
        }
        let smallest = self.smallest_side();
        if h > smallest / 4.0 + 1e-15 {
            return Err(Error::ResolutionFloor(format!(
                "sample spacing h = {h} exceeds smallest face side / 4 = {}",
                smallest / 4.0
            )));
        }
        let mut seen: HashSet<[u64; MAX_DIM]> = HashSet::new();
        let mut points = Vec::new();
        for f in &self.faces {
            let s = f.side();
            let m = (s / h).ceil() as usize;
            let step = s / m as f64;
            let axes = f.free_axes();
            let base = f.min_corner();
            let mut idx = vec![0usize; axes.len()];
            loop {
                let mut p = base;
                for (k, &a) in axes.iter().enumerate() {
                    p.c[a] += idx[k] as f64 * step;
                }
                let key: [u64; MAX_DIM] = std::array::from_fn(|a| p.c[a].to_bits());
                if seen.insert(key) {
                    points.push(p);
                }
                let mut a = 0;
                loop {
                    if a == axes.len() {
                        idx.clear();
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] <= m {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if idx.is_empty() {
                    break;
                }
            }
        }
        // grid spacing step <= h gives covering radius step*sqrt(d)/2 <= h
        SampledSet::new(points, h, self.n, self.dim.max(1))
    }
}

/// The level-`lvl` face that would geometrically contain `f`, if the frozen
/// coordinates of `f` are representable on that coarser grid.
fn ancestor_face(f: &Face, lvl: i32) -> Option<Face> {
    debug_assert!(lvl <= f.level);
    let shift = f.level - lvl;
    let mut anc = Face { level: lvl, corner: [0; MAX_DIM], free: f.free, n: f.n };
    for a in 0..f.n as usize {
        if f.free & (1 << a) != 0 {
            anc.corner[a] = f.corner[a] >> shift;
        } else {
            if f.corner[a] & ((1i64 << shift) - 1) != 0 {
                return None;
            }
            anc.corner[a] = f.corner[a] >> shift;
        }
    }
    Some(anc)
}

/// Exactly the level-j cubes containing at least one sample, sorted by corner.
pub fn cubes_meeting(set: &SampledSet, level: i32) -> Result<Vec<DyadicCube>> {
    if side_of_level(level) < set.h {
        return Err(Error::ResolutionFloor(format!(
            "level {level} side {} is below sample resolution {}",
            side_of_level(level),
            set.h
        )));
    }
    Ok(occupied_cubes(&set.points, level, set.n))
}

/// Occupied level-j cubes of an arbitrary point list (no resolution check).
pub fn occupied_cubes(points: &[Point], level: i32, n: usize) -> Vec<DyadicCube> {
    let mut cubes: Vec<DyadicCube> =
        points.iter().map(|p| DyadicCube::containing(p, level, n)).collect();
    cubes.sort_unstable();
    cubes.dedup();
    cubes
}

/// Incremental dyadic-content accumulator.
///
/// Maintains, for a growing point set, the exact minimum over dyadic covers
/// (cubes of side >= 2^-floor_level) of sum(side^d). Each inserted point
/// updates only its ancestor path, so evaluating the content of every prefix
/// of a point sequence costs O(len * depth).
pub struct ContentAccumulator {
    pub d: u32,
    pub floor_level: i32,
    pub top_level: i32,
    n: usize,
    /// cost and children-cost-sum per occupied cube
    nodes: HashMap<DyadicCube, (f64, f64)>,
    /// total = sum of root costs
    total: f64,
}

impl ContentAccumulator {
    /// `top_level` must be coarse enough that cubes at that level are not
    /// worth merging further (side^d at top >= any achievable total below).
    pub fn new(d: u32, floor_level: i32, top_level: i32, n: usize) -> ContentAccumulator {
        assert!(top_level <= floor_level);
        ContentAccumulator { d, floor_level, top_level, n, nodes: HashMap::new(), total: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.total = 0.0;
    }

    pub fn insert(&mut self, p: &Point) {
        let mut cube = DyadicCube::containing(p, self.floor_level, self.n);
        let floor_cost = side_of_level(self.floor_level).powi(self.d as i32);
        // floor node
        let entry = self.nodes.entry(cube).or_insert((0.0, 0.0));
        let mut old_cost = entry.0;
        let mut new_cost = floor_cost;
        entry.0 = new_cost;
        while cube.level > self.top_level {
            if new_cost == old_cost {
                return; // nothing changes further up
            }
            let parent = cube.parent();
            let e = self.nodes.entry(parent).or_insert((0.0, 0.0));
            e.1 += new_cost - old_cost;
            old_cost = e.0;
            let own = side_of_level(parent.level).powi(self.d as i32);
            new_cost = own.min(e.1);
            e.0 = new_cost;
            cube = parent;
        }
        self.total += new_cost - old_cost;
    }
}

/// Exact dyadic Hausdorff content of the samples: the minimum over covers by
/// dyadic cubes of side >= 2^-floor_level of sum(side^d).
///
/// An empty slice has content 0. The cover optimum is computed by the min/sum
/// DP over the occupied-cube forest, which is evaluation-order independent.
pub fn dyadic_content_of_points(points: &[Point], n: usize, d: u32, floor_level: i32) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    // Top level: once the cube side exceeds 2 * max|coordinate|, per-axis
    // indices stabilize to {-1, 0}, so no coarser merge can ever reduce the
    // cover cost. Stopping there keeps the DP exact.
    let mut maxabs = 0.0f64;
    for p in points {
        for a in 0..n {
            maxabs = maxabs.max(p.c[a].abs());
        }
    }
    let top_level = level_for_side(2.0 * maxabs + 1e-300).min(floor_level);
    let mut acc = ContentAccumulator::new(d, floor_level, top_level, n);
    for p in points {
        acc.insert(p);
    }
    acc.total()
}

/// Dyadic content of a sampled set at the given floor level.
pub fn dyadic_content(set: &SampledSet, d: u32, floor_level: i32) -> Result<f64> {
    if side_of_level(floor_level) < set.h {
        return Err(Error::ResolutionFloor(format!(
            "floor level {floor_level} side {} below sample resolution {}",
            side_of_level(floor_level),
            set.h
        )));
    }
    Ok(dyadic_content_of_points(&set.points, set.n, d, floor_level))
}

/// Dyadic content with the default floor (side = 8h).
pub fn dyadic_content_default(set: &SampledSet, d: u32) -> f64 {
    dyadic_content_of_points(&set.points, set.n, d, default_floor_level(set))
}

/// Measure of a deduplicated face set (see [`SkeletonSet::measure`]).
pub fn skeleton_measure(s: &SkeletonSet) -> f64 {
    s.measure()
}

/// Grid sample of a skeleton (see [`SkeletonSet::sample`]).
pub fn skeleton_sample(s: &SkeletonSet, h: f64) -> Result<SampledSet> {
    s.sample(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use approx::assert_abs_diff_eq;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords)
    }

    fn dense_square(m: usize) -> SampledSet {
        let h = 1.0 / m as f64;
        let mut points = Vec::new();
        for i in 0..m {
            for j in 0..m {
                points.push(pt(&[i as f64 * h, j as f64 * h]));
            }
        }
        SampledSet::new(points, h, 2, 2).unwrap()
    }

    fn dense_segment(m: usize) -> SampledSet {
        let h = 1.0 / m as f64;
        let points: Vec<Point> = (0..m).map(|i| pt(&[i as f64 * h, 0.0])).collect();
        SampledSet::new(points, h, 2, 1).unwrap()
    }

    #[test]
    fn cubes_meeting_counts() {
        let single = SampledSet::new(vec![pt(&[0.3, 0.7])], 0.01, 2, 1).unwrap();
        assert_eq!(cubes_meeting(&single, 3).unwrap().len(), 1);

        let seg = dense_segment(128);
        assert_eq!(cubes_meeting(&seg, 1).unwrap().len(), 2);

        let sq = dense_square(64);
        assert_eq!(cubes_meeting(&sq, 2).unwrap().len(), 16);
    }

    #[test]
    fn content_of_dense_square_is_one() {
        let sq = dense_square(64);
        for d in [1u32, 2] {
            let c = dyadic_content(&sq, d, 5).unwrap();
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn content_of_segment_is_one_at_any_floor() {
        let seg = dense_segment(256);
        for floor in [3, 5, 7] {
            let c = dyadic_content(&seg, 1, floor).unwrap();
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn content_empty_is_zero() {
        assert_eq!(dyadic_content_of_points(&[], 2, 1, 5), 0.0);
    }

    /// Plain recursive oracle over the occupied-cube tree.
    fn content_oracle(points: &[Point], n: usize, d: u32, floor: i32, cube: DyadicCube) -> f64 {
        let own = cube.side().powi(d as i32);
        let inside: Vec<Point> =
            points.iter().filter(|p| cube.contains(p)).copied().collect();
        if inside.is_empty() {
            return 0.0;
        }
        if cube.level == floor {
            return own;
        }
        let sum: f64 = cube
            .children()
            .into_iter()
            .map(|ch| content_oracle(&inside, n, d, floor, ch))
            .sum();
        own.min(sum)
    }

    #[test]
    fn content_matches_recursion_oracle_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let m = 40 + rng.random_range(0..60);
            let points: Vec<Point> = (0..m)
                .map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>()]))
                .collect();
            let floor = 6;
            for d in [1u32, 2] {
                let got = dyadic_content_of_points(&points, 2, d, floor);
                let root = DyadicCube { level: 0, corner: [0; MAX_DIM], n: 2 };
                let want = content_oracle(&points, 2, d, floor, root);
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn content_monotonicity_and_subadditivity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a: Vec<Point> =
            (0..80).map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>()])).collect();
        let b: Vec<Point> =
            (0..80).map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>()])).collect();
        let mut ab = a.clone();
        ab.extend_from_slice(&b);
        for d in [1u32, 2] {
            let ca = dyadic_content_of_points(&a, 2, d, 6);
            let cb = dyadic_content_of_points(&b, 2, d, 6);
            let cab = dyadic_content_of_points(&ab, 2, d, 6);
            assert!(cab >= ca - 1e-12, "superset monotonicity");
            assert!(cab <= ca + cb + 1e-12, "subadditivity");
        }
        // deepening the floor can only decrease content
        let c6 = dyadic_content_of_points(&a, 2, 1, 6);
        let c8 = dyadic_content_of_points(&a, 2, 1, 8);
        assert!(c8 <= c6 + 1e-12);
    }

    #[test]
    fn skeleton_measure_basics() {
        let f1 = Face { level: 0, corner: [0, 0, 0, 0], free: 0b01, n: 2 };
        let s = SkeletonSet::from_faces(vec![f1]).unwrap();
        assert_abs_diff_eq!(s.measure(), 1.0);

        let f2 = Face { level: 0, corner: [0, 2, 0, 0], free: 0b01, n: 2 };
        let s2 = SkeletonSet::from_faces(vec![f1, f2]).unwrap();
        assert_abs_diff_eq!(s2.measure(), 2.0);

        // a face of side 1 plus its own sub-tile of side 1/4: containment
        let sub = Face { level: 2, corner: [1, 0, 0, 0], free: 0b01, n: 2 };
        let s3 = SkeletonSet::from_faces(vec![f1, sub]).unwrap();
        assert_abs_diff_eq!(s3.measure(), 1.0);
    }

    /// Rasterization oracle: subdivide every face to the finest level present
    /// and count distinct canonical sub-faces.
    fn raster_measure(s: &SkeletonSet) -> f64 {
        let finest = s.faces().iter().map(|f| f.level).max().unwrap();
        let mut cells: HashSet<Face> = HashSet::new();
        for f in s.faces() {
            for t in f.subdivide(finest) {
                cells.insert(t);
            }
        }
        cells.len() as f64 * side_of_level(finest).powi(s.dim as i32)
    }

    #[test]
    fn skeleton_measure_matches_raster_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut faces = Vec::new();
            for _ in 0..30 {
                let level = rng.random_range(1..4);
                let corner = [
                    rng.random_range(0..(1 << level)),
                    rng.random_range(0..=(1 << level)),
                    0,
                    0,
                ];
                faces.push(Face { level, corner, free: 0b01, n: 2 });
            }
            let s = SkeletonSet::from_faces(faces).unwrap();
            assert_abs_diff_eq!(s.measure(), raster_measure(&s), epsilon = 1e-12);
        }
    }

    #[test]
    fn skeleton_sample_unit_edge() {
        let f = Face { level: 0, corner: [0, 0, 0, 0], free: 0b01, n: 2 };
        let s = SkeletonSet::from_faces(vec![f]).unwrap();
        let sampled = s.sample(0.25).unwrap();
        assert_eq!(sampled.points.len(), 5);
        let mut xs: Vec<f64> = sampled.points.iter().map(|p| p.c[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert_abs_diff_eq!(*x, i as f64 * 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn skeleton_sample_too_coarse_errors() {
        let f = Face { level: 2, corner: [0, 0, 0, 0], free: 0b01, n: 2 };
        let s = SkeletonSet::from_faces(vec![f]).unwrap();
        assert!(s.sample(0.2).is_err());
    }

    #[test]
    fn cube_skeleton_counts() {
        let c = DyadicCube { level: 1, corner: [0, 0, 0, 0], n: 3 };
        // C(3,1) * 2^2 = 12 edges, C(3,2) * 2 = 6 faces
        assert_eq!(c.skeleton(1).len(), 12);
        assert_eq!(c.skeleton(2).len(), 6);
        // shared faces of adjacent cubes coincide canonically
        let c2 = DyadicCube { level: 1, corner: [1, 0, 0, 0], n: 3 };
        let s1: HashSet<Face> = c.skeleton(2).into_iter().collect();
        let s2: HashSet<Face> = c2.skeleton(2).into_iter().collect();
        assert_eq!(s1.intersection(&s2).count(), 1);
    }
}
