//! Frostman-style mass distribution on dyadic cubes and the Bad family.
//!
//! Mass is seeded at the deepest level m as side^d per occupied cube. Moving
//! up one level at a time, a cube whose accumulated mass exceeds twice its
//! side^d is declared bad and its restricted mass is rescaled to exactly
//! side^d. All level-m cubes are bad by fiat. The bad family then drives the
//! stopping time of the corona decomposition, and its side^d packing sum is
//! the quantity controlled by the measure of the region.

use crate::dyadic::{occupied_cubes, side_of_level, DyadicCube};
use crate::geom::{Point, SampledSet};
use crate::{Error, Result, RESOLUTION_FACTOR};
use std::collections::{BTreeMap, HashSet};

#[derive(Clone, Debug, Default)]
pub struct FrostmanState {
    /// Deepest dyadic level (mass seeded at side 2^-m).
    pub m: i32,
    /// Coarsest level processed.
    pub top_level: i32,
    /// Mass per cube after the pass at that cube's level, level-major
    /// (masses[k] holds the level `top_level + k` map).
    pub masses: Vec<BTreeMap<DyadicCube, f64>>,
    pub bad: HashSet<DyadicCube>,
    pub d: u32,
}

impl FrostmanState {
    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mass_at(&self, level: i32) -> Option<&BTreeMap<DyadicCube, f64>> {
        let k = (level - self.top_level) as usize;
        self.masses.get(k)
    }

    /// Packing sum over the bad family.
    pub fn bad_packing_sum(&self) -> f64 {
        self.bad.iter().map(|c| c.side().powi(self.d as i32)).sum()
    }

    /// Bad cubes grouped by level, for stopping-time queries.
    pub fn bad_by_level(&self) -> BTreeMap<i32, HashSet<[i64; crate::MAX_DIM]>> {
        let mut out: BTreeMap<i32, HashSet<[i64; crate::MAX_DIM]>> = BTreeMap::new();
        for c in &self.bad {
            out.entry(c.level).or_default().insert(c.corner);
        }
        out
    }
}

/// Upward Frostman pass over the dyadic cubes meeting the given samples.
///
/// `region` is the sample subset of the analyzed region (a cube of the tree,
/// or the whole set). An empty region yields an empty state.
pub fn frostman_bad_cubes(set: &SampledSet, region: &[Point], m: i32) -> Result<FrostmanState> {
    if side_of_level(m) < RESOLUTION_FACTOR * set.h {
        return Err(Error::ResolutionFloor(format!(
            "frostman level {m} side {} below 8h = {}",
            side_of_level(m),
            RESOLUTION_FACTOR * set.h
        )));
    }
    if region.is_empty() {
        return Ok(FrostmanState::default());
    }
    let n = set.n;
    let d = set.d as u32;
    // coarsest level: sides beyond twice the coordinate range never merge
    let mut maxabs = 0.0f64;
    for p in region {
        for a in 0..n {
            maxabs = maxabs.max(p.c[a].abs());
        }
    }
    let top_level = crate::dyadic::level_for_side(2.0 * maxabs + 1e-300).min(m);

    let mut masses: Vec<BTreeMap<DyadicCube, f64>> = vec![BTreeMap::new(); (m - top_level + 1) as usize];
    let mut bad: HashSet<DyadicCube> = HashSet::new();

    // seed at level m
    let seeded = occupied_cubes(region, m, n);
    let unit = side_of_level(m).powi(d as i32);
    for c in seeded {
        masses[(m - top_level) as usize].insert(c, unit);
        bad.insert(c);
    }
    // upward passes
    for level in (top_level..m).rev() {
        let k = (level - top_level) as usize;
        let mut parents: BTreeMap<DyadicCube, f64> = BTreeMap::new();
        for (c, &mass) in &masses[k + 1] {
            *parents.entry(c.parent()).or_insert(0.0) += mass;
        }
        let cap = 2.0 * side_of_level(level).powi(d as i32);
        for (c, mass) in parents.iter_mut() {
            if *mass > cap {
                bad.insert(*c);
                *mass = 0.5 * cap; // rescaled restriction has mass side^d
            }
        }
        masses[k] = parents;
    }
    Ok(FrostmanState { m, top_level, masses, bad, d })
}

/// Invariant check: after every pass no cube carries mass above 2 side^d,
/// and total mass is non-increasing from the seeds upward.
pub fn check_frostman_invariants(state: &FrostmanState) -> Result<()> {
    if state.is_empty() {
        return Ok(());
    }
    let mut prev_total = f64::INFINITY;
    for (k, level_map) in state.masses.iter().enumerate().rev() {
        let level = state.top_level + k as i32;
        let cap = 2.0 * side_of_level(level).powi(state.d as i32);
        let mut total = 0.0;
        for (c, &mass) in level_map {
            if mass > cap * (1.0 + 1e-12) {
                return Err(Error::Constraint(format!(
                    "cube {c:?} carries mass {mass} above cap {cap}"
                )));
            }
            total += mass;
        }
        if total > prev_total * (1.0 + 1e-12) {
            return Err(Error::Constraint(format!(
                "mass increased moving up to level {level}: {total} > {prev_total}"
            )));
        }
        prev_total = total;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use approx::assert_abs_diff_eq;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords)
    }

    fn dense_plane_r3(m: usize) -> SampledSet {
        let h = 1.0 / m as f64;
        let mut pts = Vec::new();
        for i in 0..m {
            for j in 0..m {
                pts.push(pt(&[i as f64 * h, j as f64 * h, 0.0]));
            }
        }
        SampledSet::new(pts, h, 3, 2).unwrap()
    }

    #[test]
    fn plane_bad_set_is_floor_only() {
        let set = dense_plane_r3(64);
        let state = frostman_bad_cubes(&set, &set.points, 3).unwrap();
        check_frostman_invariants(&state).unwrap();
        // every bad cube sits at the seeded level
        assert!(state.bad.iter().all(|c| c.level == 3));
        // packing sum = occupied count * side^d = 64 * (1/8)^2 = 1
        assert_abs_diff_eq!(state.bad_packing_sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_region_gives_empty_state() {
        let set = dense_plane_r3(64);
        let state = frostman_bad_cubes(&set, &[], 3).unwrap();
        assert!(state.is_empty());
        assert_eq!(state.bad_packing_sum(), 0.0);
    }

    #[test]
    fn overweight_parent_goes_bad() {
        // a 2d-dense blob seeded with d = 1 mass: parents accumulate 2^2 x
        // child mass and must overflow the 2 side cap
        let m = 128;
        let h = 1.0 / m as f64;
        let mut pts = Vec::new();
        for i in 0..m {
            for j in 0..m {
                pts.push(pt(&[i as f64 * h, j as f64 * h]));
            }
        }
        let set = SampledSet::new(pts, h, 2, 1).unwrap();
        let state = frostman_bad_cubes(&set, &set.points, 4).unwrap();
        check_frostman_invariants(&state).unwrap();
        let above_floor = state.bad.iter().filter(|c| c.level < 4).count();
        assert!(above_floor > 0, "a 2-dimensional blob must produce bad cubes above the floor");
        // masses right after a bad pass equal side^d exactly
        for level in state.top_level..4 {
            for (c, &mass) in state.mass_at(level).unwrap() {
                if state.bad.contains(c) {
                    assert_abs_diff_eq!(mass, c.side(), epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn packing_constant_stable_in_m_for_plane() {
        let set = dense_plane_r3(256);
        let mut sums = Vec::new();
        for m in 3..=5 {
            let state = frostman_bad_cubes(&set, &set.points, m).unwrap();
            sums.push(state.bad_packing_sum());
        }
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 1.2, "plane packing sums vary too much: {sums:?}");
    }
}
