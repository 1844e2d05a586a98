//! Federer-Fleming projection restricted to sample points.
//!
//! The map is a composition of radial stages. Stage one sends points in the
//! interior of each cube (Whitney family plus a sheath of comparable-size
//! neighbor cubes) to the cube boundary, radially from a center chosen off
//! the sample image. Each later stage does the same inside the refined faces
//! of one dimension, down to dimension d. Points on boundaries never move at
//! the stage that reaches them, which keeps the piecewise definition
//! coherent; points outside the sheathed domain never move at all.

use super::tiles::TileComplex;
use super::whitney::WhitneyFamily;
use crate::dyadic::{DyadicCube, Face};
use crate::geom::{Ball, Point};
use crate::{Error, Result, MAX_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Where a projected point ended up.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FfHost {
    /// Outside the sheathed domain; never moved.
    Exterior,
    /// Frozen on a face that is not part of the refined complex (outer
    /// boundary of the sheath).
    SheathFace(Face),
    /// On a face of the refined complex of the given dimension.
    Complex(Face),
}

#[derive(Clone, Debug, Serialize)]
pub struct FfOutcome {
    pub start: Point,
    pub end: Point,
    pub displacement: f64,
    pub host: FfHost,
    /// The stage-one cube containing the start, when any.
    pub start_cube: Option<DyadicCube>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FfReport {
    pub outcomes: Vec<FfOutcome>,
    pub sheath: Vec<DyadicCube>,
    /// Points outside the domain are fixed.
    pub identity_outside: bool,
    /// Every point stays inside its stage-one cube.
    pub stays_in_cube: bool,
    /// Points ending inside a Whitney cube lie on the approximant.
    pub image_in_skeleton: bool,
    /// max |end - start| / (sqrt(n) * start cube side) over moved points.
    pub max_displacement_ratio: f64,
}

impl FfReport {
    pub fn all_properties_hold(&self) -> bool {
        self.identity_outside && self.stays_in_cube && self.image_in_skeleton
    }
}

fn face_seed(seed: u64, f: &Face) -> u64 {
    let mut x = seed ^ (f.level as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for a in 0..MAX_DIM {
        x = x
            .rotate_left(13)
            .wrapping_add((f.corner[a] as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    x ^ (f.free as u64) << 56
}

/// Pick a projection center inside the box spanned by `f` (interior of its
/// free axes), at distance > `h` from every point of `avoid`. Candidates are
/// seeded; the farthest-scoring candidate wins deterministically.
fn pick_center(f: &Face, avoid: &[Point], h: f64, seed: u64) -> Result<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(face_seed(seed, f));
    let s = f.side();
    let base = f.min_corner();
    let mut best: Option<(f64, Point)> = None;
    for _ in 0..24 {
        let mut c = base;
        for a in f.free_axes() {
            c.c[a] += s * rng.random_range(0.15..0.85);
        }
        let score = avoid.iter().map(|p| p.dist(&c)).fold(f64::INFINITY, f64::min);
        if best.as_ref().map_or(true, |(b, _)| score > *b) {
            best = Some((score, c));
        }
    }
    let (score, c) = best.unwrap();
    if score <= h {
        return Err(Error::PorosityViolated(format!(
            "no projection center farther than h = {h} from the image inside {f:?} \
             (best candidate at {score})"
        )));
    }
    Ok(c)
}

/// Radial projection of `p` from `c` to the boundary of the free axes of
/// `f`, assuming `p` lies strictly inside. Returns the landed point and the
/// boundary subface it lies on (one more frozen axis).
fn radial_exit(f: &Face, c: &Point, p: &Point) -> (Point, Face) {
    let s = f.side();
    let mut t_min = f64::INFINITY;
    let mut exit_axis = usize::MAX;
    let mut exit_hi = false;
    for a in f.free_axes() {
        let lo = f.corner[a] as f64 * s;
        let hi = lo + s;
        let dir = p.c[a] - c.c[a];
        if dir > 0.0 {
            let t = (hi - c.c[a]) / dir;
            if t < t_min {
                t_min = t;
                exit_axis = a;
                exit_hi = true;
            }
        } else if dir < 0.0 {
            let t = (lo - c.c[a]) / dir;
            if t < t_min {
                t_min = t;
                exit_axis = a;
                exit_hi = false;
            }
        }
    }
    debug_assert!(exit_axis != usize::MAX && t_min >= 1.0 - 1e-9);
    let mut out = *c;
    for a in 0..MAX_DIM {
        out.c[a] = c.c[a] + t_min * (p.c[a] - c.c[a]);
    }
    // snap the frozen coordinate exactly
    let lo = f.corner[exit_axis] as f64 * s;
    out.c[exit_axis] = if exit_hi { lo + s } else { lo };
    let mut sub = *f;
    sub.free &= !(1 << exit_axis);
    if exit_hi {
        sub.corner[exit_axis] += 1;
    }
    (out, sub)
}

/// Which free axes of `f` the point sits on (lo/hi boundary within tol).
/// Freezing them yields the lowest-dimensional subface containing `p`.
fn boundary_subface(f: &Face, p: &Point, tol: f64) -> Option<Face> {
    let s = f.side();
    let mut sub = *f;
    let mut any = false;
    for a in f.free_axes() {
        let lo = f.corner[a] as f64 * s;
        let hi = lo + s;
        if (p.c[a] - lo).abs() <= tol {
            sub.free &= !(1 << a);
            any = true;
        } else if (p.c[a] - hi).abs() <= tol {
            sub.free &= !(1 << a);
            sub.corner[a] += 1;
            any = true;
        }
    }
    if any {
        Some(sub)
    } else {
        None
    }
}

/// Build the sheath: maximal dyadic cubes outside the family that touch it,
/// with side between the smallest and largest touching family cube. Greedy
/// largest-first selection, corner-lexicographic ties.
fn build_sheath(cubes: &[DyadicCube], n: usize) -> Vec<DyadicCube> {
    if cubes.is_empty() {
        return Vec::new();
    }
    let min_level = cubes.iter().map(|c| c.level).min().unwrap();
    let max_level = cubes.iter().map(|c| c.level).max().unwrap();
    let family: HashSet<DyadicCube> = cubes.iter().copied().collect();
    // every strict ancestor of a family cube (to detect "contains a family cube")
    let mut family_anc: HashSet<DyadicCube> = HashSet::new();
    for c in cubes {
        let mut a = *c;
        while a.level > min_level - 1 {
            a = a.parent();
            family_anc.insert(a);
        }
    }
    let overlaps_family = |j: &DyadicCube| -> bool {
        if family.contains(j) || family_anc.contains(j) {
            return true;
        }
        let mut a = *j;
        while a.level > min_level {
            a = a.parent();
            if family.contains(&a) {
                return true;
            }
        }
        false
    };
    // candidates: cubes at family levels touching a family cube
    let mut candidates: BTreeSet<DyadicCube> = BTreeSet::new();
    for i in cubes {
        for level in min_level..=max_level {
            let shift = level - i.level;
            for a in 0..n {
                let _ = a;
            }
            let (lo, hi): ([i64; MAX_DIM], [i64; MAX_DIM]) = {
                let mut lo = [0i64; MAX_DIM];
                let mut hi = [0i64; MAX_DIM];
                for a in 0..n {
                    if shift >= 0 {
                        lo[a] = (i.corner[a] << shift) - 1;
                        hi[a] = ((i.corner[a] + 1) << shift) + 1 - 1;
                    } else {
                        lo[a] = (i.corner[a] >> -shift) - 1;
                        hi[a] = ((i.corner[a] + 1) >> -shift) + 1;
                    }
                }
                (lo, hi)
            };
            let mut idx = lo;
            'gen: loop {
                let j = DyadicCube { level, corner: idx, n: n as u8 };
                if !overlaps_family(&j) && j.touches(i) {
                    candidates.insert(j);
                }
                let mut a = 0;
                loop {
                    if a == n {
                        break 'gen;
                    }
                    idx[a] += 1;
                    if idx[a] <= hi[a] {
                        break;
                    }
                    idx[a] = lo[a];
                    a += 1;
                }
            }
        }
    }
    // greedy largest-first with the size sandwich condition
    let mut ordered: Vec<DyadicCube> = candidates.into_iter().collect();
    ordered.sort_by_key(|c| (c.level, c.corner));
    let mut accepted: Vec<DyadicCube> = Vec::new();
    let mut accepted_set: HashSet<DyadicCube> = HashSet::new();
    let mut accepted_anc: HashSet<DyadicCube> = HashSet::new();
    for j in ordered {
        // disjoint from accepted sheath cubes
        if accepted_set.contains(&j) || accepted_anc.contains(&j) {
            continue;
        }
        let mut overlapped = false;
        let mut a = j;
        while a.level > min_level {
            a = a.parent();
            if accepted_set.contains(&a) {
                overlapped = true;
                break;
            }
        }
        if overlapped {
            continue;
        }
        // size sandwich against touching family cubes
        let mut min_touch = f64::INFINITY;
        let mut max_touch = 0.0f64;
        for i in cubes {
            if j.touches(i) {
                min_touch = min_touch.min(i.side());
                max_touch = max_touch.max(i.side());
            }
        }
        if min_touch.is_infinite() {
            continue;
        }
        let s = j.side();
        if s < min_touch - 1e-15 || s > max_touch + 1e-15 {
            continue;
        }
        accepted_set.insert(j);
        let mut a = j;
        while a.level > min_level - 1 {
            a = a.parent();
            accepted_anc.insert(a);
        }
        accepted.push(j);
    }
    accepted.sort_unstable();
    accepted
}

/// Project the given points onto the approximant of the Whitney region.
///
/// `ball` restricts the stage domain to the family cubes meeting it (the
/// whole family when `None`). `h` is the sample resolution used by the
/// porosity threshold for center picking.
pub fn federer_fleming_project(
    points: &[Point],
    fam: &WhitneyFamily,
    tiles: &TileComplex,
    ball: Option<&Ball>,
    h: f64,
    seed: u64,
) -> Result<FfReport> {
    let n = tiles.n;
    let d = tiles.d;
    let cubes: Vec<DyadicCube> = match ball {
        Some(b) => fam.restrict(b),
        None => fam.cubes.clone(),
    };
    let sheath = build_sheath(&cubes, n);
    let mut all_cubes: Vec<DyadicCube> = cubes.iter().chain(sheath.iter()).copied().collect();
    all_cubes.sort_unstable();
    let all_set: HashSet<DyadicCube> = all_cubes.iter().copied().collect();
    let family_set: HashSet<DyadicCube> = cubes.iter().copied().collect();
    let levels: BTreeSet<i32> = all_cubes.iter().map(|c| c.level).collect();

    // locate each point's stage-one cube
    let locate = |p: &Point| -> Option<DyadicCube> {
        for &level in &levels {
            let c = DyadicCube::containing(p, level, n);
            if all_set.contains(&c) {
                return Some(c);
            }
        }
        None
    };

    #[derive(Clone)]
    enum State {
        Exterior,
        Frozen(Face),
        OnFace(Face),
        InCube(DyadicCube),
    }

    let mut pos: Vec<Point> = points.to_vec();
    let mut state: Vec<State> = Vec::with_capacity(points.len());
    let mut start_cube: Vec<Option<DyadicCube>> = Vec::with_capacity(points.len());
    for p in points {
        match locate(p) {
            None => {
                state.push(State::Exterior);
                start_cube.push(None);
            }
            Some(c) => {
                start_cube.push(Some(c));
                let full: u8 = ((1u16 << n) - 1) as u8;
                let as_face = Face { level: c.level, corner: c.corner, free: full, n: c.n };
                let tol = 1e-9 * c.side();
                match boundary_subface(&as_face, p, tol) {
                    Some(sub) => state.push(State::OnFace(sub)),
                    None => state.push(State::InCube(c)),
                }
            }
        }
    }

    // stage one: cube interiors to cube boundaries
    {
        // group interior points per cube
        let mut per_cube: BTreeMap<DyadicCube, Vec<usize>> = BTreeMap::new();
        for (i, st) in state.iter().enumerate() {
            if let State::InCube(c) = st {
                per_cube.entry(*c).or_default().push(i);
            }
        }
        for (cube, idxs) in per_cube {
            // avoid every sample currently inside the closed cube
            let avoid: Vec<Point> = pos
                .iter()
                .enumerate()
                .filter(|(j, p)| {
                    let _ = j;
                    cube.dist_to_point(p) <= 1e-12 * cube.side()
                })
                .map(|(_, p)| *p)
                .collect();
            let full: u8 = ((1u16 << n) - 1) as u8;
            let as_face = Face { level: cube.level, corner: cube.corner, free: full, n: cube.n };
            let center = pick_center(&as_face, &avoid, h, seed)?;
            for i in idxs {
                let (landed, sub) = radial_exit(&as_face, &center, &pos[i]);
                pos[i] = landed;
                state[i] = State::OnFace(sub);
            }
        }
    }

    // face stages: dimension n-1 down to d+1
    for m in (d + 1..n).rev() {
        let family_m = &tiles.families[&m];
        let family_m_set: HashSet<Face> = family_m.iter().copied().collect();
        // re-host points whose current face has dimension m
        let mut per_face: BTreeMap<Face, Vec<usize>> = BTreeMap::new();
        let stage_points: Vec<(usize, Face)> = state
            .iter()
            .enumerate()
            .filter_map(|(i, st)| match st {
                State::OnFace(f) if f.dim() == m => Some((i, *f)),
                _ => None,
            })
            .collect();
        for (i, face) in stage_points {
            // find the refined face containing the point
            let tol = 1e-9 * face.side();
            let host = if family_m_set.contains(&face) {
                Some(face)
            } else {
                // the face may be tessellated: find a member containing p
                let mut found = None;
                for cand in family_m {
                    if cand.free == face.free
                        && cand.level >= face.level
                        && cand.contained_in(&face)
                        && cand.contains_point(&pos[i], tol)
                    {
                        found = Some(*cand);
                        break;
                    }
                }
                found
            };
            match host {
                None => {
                    // outer sheath face: frozen from here on
                    state[i] = State::Frozen(face);
                }
                Some(hf) => {
                    let tol = 1e-9 * hf.side();
                    match boundary_subface(&hf, &pos[i], tol) {
                        Some(sub) => state[i] = State::OnFace(sub),
                        None => {
                            per_face.entry(hf).or_default().push(i);
                        }
                    }
                }
            }
        }
        for (face, idxs) in per_face {
            let avoid: Vec<Point> = pos
                .iter()
                .filter(|p| face.contains_point(p, 1e-12 * face.side()))
                .copied()
                .collect();
            let center = pick_center(&face, &avoid, h, seed)?;
            for i in idxs {
                let (landed, sub) = radial_exit(&face, &center, &pos[i]);
                pos[i] = landed;
                state[i] = State::OnFace(sub);
            }
        }
    }

    // assemble outcomes and check the projection properties
    let sqrt_n = (n as f64).sqrt();
    let mut outcomes = Vec::with_capacity(points.len());
    let mut identity_outside = true;
    let mut stays_in_cube = true;
    let mut image_in_skeleton = true;
    let mut max_ratio = 0.0f64;
    let e_r_faces = tiles.e_r.faces();
    for (i, p) in points.iter().enumerate() {
        let end = pos[i];
        let displacement = end.dist(p);
        let host = match &state[i] {
            State::Exterior => {
                if displacement != 0.0 {
                    identity_outside = false;
                }
                FfHost::Exterior
            }
            State::Frozen(f) => FfHost::SheathFace(*f),
            State::OnFace(f) => FfHost::Complex(*f),
            State::InCube(_) => unreachable!("stage one clears cube interiors"),
        };
        if let Some(c) = &start_cube[i] {
            let tol = 1e-9 * c.side();
            if c.dist_to_point(&end) > tol {
                stays_in_cube = false;
            }
            max_ratio = max_ratio.max(displacement / (sqrt_n * c.side()));
        }
        // image-in-skeleton: a point ending inside a family cube must lie on E_R
        let in_family = family_set.iter().any(|c| c.dist_to_point(&end) <= 1e-9 * c.side());
        if in_family {
            let tol = 1e-9;
            let on_er = e_r_faces.iter().any(|f| f.dist_to_point(&end) <= tol * f.side().max(1.0));
            if !on_er {
                image_in_skeleton = false;
            }
        }
        outcomes.push(FfOutcome { start: *p, end, displacement, host, start_cube: start_cube[i] });
    }
    Ok(FfReport {
        outcomes,
        sheath,
        identity_outside,
        stays_in_cube,
        image_in_skeleton,
        max_displacement_ratio: max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corona::tiles::tile_refinement;
    use crate::netcubes::CubeId;

    fn fam_from_cubes(cubes: Vec<DyadicCube>) -> WhitneyFamily {
        WhitneyFamily {
            r: 0 as CubeId,
            cubes,
            clamped: 0,
            tau: 0.01,
            c0: 2.0,
            ratio_min: 0.5,
            ratio_max: 1.0,
        }
    }

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords)
    }

    #[test]
    fn interior_point_lands_on_own_cube_edge() {
        let cube = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 2 };
        let fam = fam_from_cubes(vec![cube]);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        let pts = vec![pt(&[0.3, 0.4])];
        let rep = federer_fleming_project(&pts, &fam, &tc, None, 1e-3, 7).unwrap();
        let o = &rep.outcomes[0];
        assert!(matches!(o.host, FfHost::Complex(_)));
        assert!(cube.dist_to_point(&o.end) <= 1e-12);
        // landed on the boundary: some coordinate is 0 or 1
        let on_edge = (0..2).any(|a| o.end.c[a].abs() < 1e-12 || (o.end.c[a] - 1.0).abs() < 1e-12);
        assert!(on_edge, "end = {:?}", o.end);
        assert!(rep.all_properties_hold());
        assert!(rep.max_displacement_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn boundary_point_is_fixed() {
        let cube = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 2 };
        let fam = fam_from_cubes(vec![cube]);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        let pts = vec![pt(&[0.5, 0.0]), pt(&[0.0, 0.25])];
        let rep = federer_fleming_project(&pts, &fam, &tc, None, 1e-3, 7).unwrap();
        for o in &rep.outcomes {
            assert_eq!(o.displacement, 0.0, "boundary point moved: {o:?}");
        }
    }

    #[test]
    fn exterior_point_is_fixed() {
        let cube = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 2 };
        let fam = fam_from_cubes(vec![cube]);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        let pts = vec![pt(&[5.0, 5.0])];
        let rep = federer_fleming_project(&pts, &fam, &tc, None, 1e-3, 7).unwrap();
        assert_eq!(rep.outcomes[0].host, FfHost::Exterior);
        assert_eq!(rep.outcomes[0].displacement, 0.0);
    }

    #[test]
    fn three_dim_two_stage_projection() {
        let cube = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 3 };
        let fam = fam_from_cubes(vec![cube]);
        let tc = tile_refinement(&fam, 1, 3).unwrap();
        let pts = vec![pt(&[0.4, 0.3, 0.6]), pt(&[0.21, 0.7, 0.45])];
        let rep = federer_fleming_project(&pts, &fam, &tc, None, 1e-3, 13).unwrap();
        assert!(rep.all_properties_hold());
        for o in &rep.outcomes {
            match &o.host {
                FfHost::Complex(f) => assert_eq!(f.dim(), 1, "must land on an edge"),
                other => panic!("unexpected host {other:?}"),
            }
            // on an edge of the unit cube: two coordinates in {0,1}
            let frozen = (0..3)
                .filter(|&a| o.end.c[a].abs() < 1e-9 || (o.end.c[a] - 1.0).abs() < 1e-9)
                .count();
            assert!(frozen >= 2, "end = {:?}", o.end);
        }
    }

    #[test]
    fn mixed_sizes_project_coherently() {
        let cubes = vec![
            DyadicCube { level: 1, corner: [0, 0, 0, 0], n: 2 },
            DyadicCube { level: 1, corner: [1, 0, 0, 0], n: 2 },
            DyadicCube { level: 2, corner: [0, 2, 0, 0], n: 2 },
            DyadicCube { level: 2, corner: [1, 2, 0, 0], n: 2 },
        ];
        let fam = fam_from_cubes(cubes);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..60)
            .map(|_| pt(&[rng.random::<f64>(), rng.random::<f64>() * 0.75]))
            .collect();
        let rep = federer_fleming_project(&pts, &fam, &tc, None, 1e-4, 99).unwrap();
        assert!(rep.all_properties_hold());
        assert!(rep.max_displacement_ratio <= 1.0 + 1e-9);
    }
}
