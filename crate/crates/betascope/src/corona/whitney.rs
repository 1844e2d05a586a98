//! Whitney cube family of a tree region: the maximal dyadic cubes meeting the
//! inflated region whose side is below tau times the smoothed distance to the
//! stopped cubes, together with the skeleton approximant built from their
//! d-dimensional skeleta.

use super::forest::{smoothed_distance_to_cube, StoppingForest};
use crate::dyadic::{level_for_side, DyadicCube, SkeletonSet};
use crate::geom::{Ball, PointGrid, SampledSet};
use crate::netcubes::{CubeId, CubeTree};
use crate::{Error, Result, RESOLUTION_FACTOR};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyFamily {
    pub r: CubeId,
    /// Maximal qualifying cubes, sorted.
    pub cubes: Vec<DyadicCube>,
    /// Count of cubes emitted at the resolution floor without qualifying.
    pub clamped: usize,
    pub tau: f64,
    pub c0: f64,
    /// Observed range of side / (tau * inf_box d_R) over qualifying cubes.
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl WhitneyFamily {
    pub fn smallest_side(&self) -> f64 {
        self.cubes.iter().map(|c| c.side()).fold(f64::INFINITY, f64::min)
    }

    /// Subfamily meeting a ball.
    pub fn restrict(&self, ball: &Ball) -> Vec<DyadicCube> {
        self.cubes.iter().filter(|c| c.meets_ball(ball)).copied().collect()
    }
}

/// Build the Whitney family of region `r`: maximal dyadic cubes I meeting
/// the inflated region `E ∩ 2 C0 B_R` with `side(I) < tau * d_R(I)`. Cubes
/// that reach the resolution floor without qualifying are emitted clamped;
/// if every cube is clamped the resolution cannot support this tau and an
/// error reports the smallest workable value.
pub fn whitney_family(
    tree: &CubeTree,
    set: &SampledSet,
    grid: &PointGrid,
    forest: &StoppingForest,
    r: CubeId,
    tau: f64,
) -> Result<WhitneyFamily> {
    let cfg = &forest.cfg;
    let region = forest
        .regions
        .get(&r)
        .ok_or_else(|| Error::InvalidParameter(format!("cube {r} is not a forest top")))?;
    let r_cube = tree.cube(r);
    let ball = Ball { center: r_cube.center, radius: 2.0 * cfg.c0 * r_cube.side };
    let floor_level = level_for_side(RESOLUTION_FACTOR * set.h);
    let top_level = level_for_side(2.0 * ball.radius).min(floor_level);
    let fallback = r_cube.side;
    let n = set.n;

    // does the cube hold a sample of the inflated region?
    let meets_region = |cube: &DyadicCube| -> bool {
        let circum = Ball {
            center: cube.center(),
            radius: 0.5 * cube.side() * (n as f64).sqrt() + 1e-15,
        };
        for i in grid.in_ball(&circum.center, circum.radius) {
            let p = &set.points[i];
            if cube.contains(p) && ball.contains(p) {
                return true;
            }
        }
        false
    };

    // roots: top-level cubes overlapping the ball
    let s_top = crate::dyadic::side_of_level(top_level);
    let mut roots = Vec::new();
    {
        let mut lo = [0i64; crate::MAX_DIM];
        let mut hi = [0i64; crate::MAX_DIM];
        for a in 0..n {
            lo[a] = ((ball.center.c[a] - ball.radius) / s_top).floor() as i64;
            hi[a] = ((ball.center.c[a] + ball.radius) / s_top).floor() as i64;
        }
        let mut idx = lo;
        'gen: loop {
            let cube = DyadicCube { level: top_level, corner: idx, n: n as u8 };
            if cube.meets_ball(&ball) {
                roots.push(cube);
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

    let mut cubes = Vec::new();
    let mut clamped = 0usize;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0f64;
    let mut stack = roots;
    while let Some(cube) = stack.pop() {
        if !meets_region(&cube) {
            continue;
        }
        let d_r = smoothed_distance_to_cube(tree, set, &region.stop_smoothing, fallback, &cube);
        let side = cube.side();
        if side < tau * d_r {
            let ratio = side / (tau * d_r);
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
            cubes.push(cube);
        } else if cube.level >= floor_level {
            clamped += 1;
            cubes.push(cube);
        } else {
            stack.extend(cube.children());
        }
    }
    if !cubes.is_empty() && clamped == cubes.len() {
        // smallest tau that would let the floor cubes qualify
        let need = cubes
            .iter()
            .map(|c| {
                let d_r =
                    smoothed_distance_to_cube(tree, set, &region.stop_smoothing, fallback, c);
                c.side() / d_r
            })
            .fold(0.0f64, f64::max);
        return Err(Error::ResolutionFloor(format!(
            "tau = {tau} forces every Whitney cube to the resolution floor; \
             the floor supports tau > {need} at this resolution"
        )));
    }
    cubes.sort_unstable();
    cubes.dedup();
    Ok(WhitneyFamily {
        r,
        cubes,
        clamped,
        tau,
        c0: cfg.c0,
        ratio_min,
        ratio_max,
    })
}

/// Skeleton approximant: the union of d-dimensional skeleta of the Whitney
/// cubes.
pub fn skeleton_er(fam: &WhitneyFamily, d: usize) -> Result<SkeletonSet> {
    let mut faces = Vec::new();
    for cube in &fam.cubes {
        faces.extend(cube.skeleton(d));
    }
    SkeletonSet::from_faces(faces)
}

/// Whitney maximality: no family member contains another.
pub fn check_whitney_non_nested(fam: &WhitneyFamily) -> Result<()> {
    use std::collections::HashSet;
    let set: HashSet<DyadicCube> = fam.cubes.iter().copied().collect();
    let min_level = fam.cubes.iter().map(|c| c.level).min().unwrap_or(0);
    for c in &fam.cubes {
        let mut anc = *c;
        while anc.level > min_level {
            anc = anc.parent();
            if set.contains(&anc) {
                return Err(Error::Constraint(format!(
                    "whitney cube {c:?} nested under {anc:?}"
                )));
            }
        }
    }
    Ok(())
}
