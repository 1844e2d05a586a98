//! Stopping-time decomposition of the cube tree driven by the Frostman bad
//! family, and the smoothed distance to the stopped cubes.
//!
//! A tree region grows downward from its top cube; descent below a cube halts
//! as soon as one of its children has a comparable-size bad dyadic cube
//! meeting its M-inflated ball (then no child joins, which gives coherence:
//! the region contains its top, is sandwich-closed, and sibling-complete).
//! Children of stopped cubes seed the next generation of tops, so the primary
//! trees partition the cube families down to depth k0. For smoothing, the
//! stop family of a region also includes the stops of the trees grown from
//! same-generation neighbors meeting 2 C0 B_R.

use super::frostman::FrostmanState;
use super::CoronaConfig;
use crate::dyadic::{level_for_side, side_of_level, DyadicCube};
use crate::geom::{Point, SampledSet};
use crate::netcubes::{CubeId, CubeTree};
use crate::{Error, Result, MAX_DIM};
use std::collections::{BTreeMap, HashSet};

#[derive(Clone, Debug)]
pub struct TreeRegion {
    pub root: CubeId,
    /// Cubes of Tree(R), sorted by id.
    pub tree: Vec<CubeId>,
    /// Minimal cubes of Tree(R).
    pub stop: Vec<CubeId>,
    /// Children of stop cubes (next generation of tops seeded by R).
    pub next: Vec<CubeId>,
    /// Same-generation cubes meeting 2 C0 B_R (includes R).
    pub neighbors: Vec<CubeId>,
    /// Minimal cubes across the neighbor forest; the index set for d_R.
    pub stop_smoothing: Vec<CubeId>,
}

#[derive(Clone, Debug)]
pub struct StoppingForest {
    /// Generations of top cubes: generations[0] = [root].
    pub generations: Vec<Vec<CubeId>>,
    pub regions: BTreeMap<CubeId, TreeRegion>,
    /// Dyadic level of the bad family used by the stopping rule.
    pub m_level: i32,
    pub cfg: CoronaConfig,
}

impl StoppingForest {
    pub fn tops(&self) -> Vec<CubeId> {
        let mut out: Vec<CubeId> = self.regions.keys().copied().collect();
        out.sort_unstable();
        out
    }

    /// Packing sum over all tops.
    pub fn top_packing_sum(&self, tree: &CubeTree, d: u32) -> f64 {
        self.regions.keys().map(|&r| tree.cube(r).side.powi(d as i32)).sum()
    }
}

/// Does any bad cube of comparable size meet the M-inflated ball of `q`?
/// Comparable means `lambda * side(I) <= side(q) <= side(I)`.
fn hits_bad(
    tree: &CubeTree,
    bad_by_level: &BTreeMap<i32, HashSet<[i64; MAX_DIM]>>,
    q: CubeId,
    m_big: f64,
    n: usize,
) -> bool {
    let cube = tree.cube(q);
    let side = cube.side;
    let lambda = tree.lambda;
    // levels j with side <= 2^-j <= side / lambda
    let j_lo = level_for_side(side / lambda); // coarsest admissible
    let j_hi = level_for_side(side); // finest admissible
    let ball = cube.ball(m_big);
    for j in j_lo..=j_hi {
        let Some(levelset) = bad_by_level.get(&j) else { continue };
        let s = side_of_level(j);
        if s < side || s > side / lambda {
            continue;
        }
        // enumerate grid cells overlapping the ball
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for a in 0..n {
            lo[a] = ((ball.center.c[a] - ball.radius) / s).floor() as i64;
            hi[a] = ((ball.center.c[a] + ball.radius) / s).floor() as i64;
        }
        let mut idx = lo;
        loop {
            if levelset.contains(&idx) {
                let cand = DyadicCube { level: j, corner: idx, n: n as u8 };
                if cand.meets_ball(&ball) {
                    return true;
                }
            }
            let mut a = 0;
            loop {
                if a == n {
                    break;
                }
                idx[a] += 1;
                if idx[a] <= hi[a] {
                    break;
                }
                idx[a] = lo[a];
                a += 1;
            }
            if a == n {
                break;
            }
        }
    }
    false
}

/// Grow Tree(root): descend; a cube keeps its children only when no child
/// triggers the stopping condition. Returns (tree, stop) sorted by id.
fn grow_tree(
    tree: &CubeTree,
    bad_by_level: &BTreeMap<i32, HashSet<[i64; MAX_DIM]>>,
    root: CubeId,
    cfg: &CoronaConfig,
    n: usize,
) -> (Vec<CubeId>, Vec<CubeId>) {
    let max_level = cfg.k0;
    let mut members = vec![root];
    let mut stop = Vec::new();
    let mut frontier = vec![root];
    while let Some(q) = frontier.pop() {
        let cube = tree.cube(q);
        let kids: Vec<CubeId> = cube
            .children
            .iter()
            .copied()
            .filter(|&c| tree.cube(c).level <= max_level)
            .collect();
        if kids.is_empty() {
            stop.push(q);
            continue;
        }
        let any_bad = kids.iter().any(|&c| hits_bad(tree, bad_by_level, c, cfg.m_stop, n));
        if any_bad {
            stop.push(q);
        } else {
            members.extend_from_slice(&kids);
            frontier.extend_from_slice(&kids);
        }
    }
    members.sort_unstable();
    stop.sort_unstable();
    (members, stop)
}

/// Build the stopping-time forest over the subtree of `root` down to
/// generation `cfg.k0` (tree levels `root.level ..= cfg.k0`).
pub fn build_forest(
    tree: &CubeTree,
    set: &SampledSet,
    bad: &FrostmanState,
    root: CubeId,
    cfg: &CoronaConfig,
) -> Result<StoppingForest> {
    cfg.validate()?;
    if cfg.k0 > tree.depth() {
        return Err(Error::InvalidParameter(format!(
            "k0 = {} exceeds tree depth {}",
            cfg.k0,
            tree.depth()
        )));
    }
    let n = set.n;
    let bad_by_level = bad.bad_by_level();
    let mut grown: BTreeMap<CubeId, (Vec<CubeId>, Vec<CubeId>)> = BTreeMap::new();
    let grow = |r: CubeId, grown: &mut BTreeMap<CubeId, (Vec<CubeId>, Vec<CubeId>)>| {
        grown
            .entry(r)
            .or_insert_with(|| grow_tree(tree, &bad_by_level, r, cfg, n))
            .clone()
    };

    let mut generations: Vec<Vec<CubeId>> = vec![vec![root]];
    let mut regions: BTreeMap<CubeId, TreeRegion> = BTreeMap::new();
    loop {
        let current = generations.last().unwrap().clone();
        let mut next_gen: Vec<CubeId> = Vec::new();
        for &r in &current {
            let (members, stop) = grow(r, &mut grown);
            // next tops: children of stop cubes, within depth
            let mut next = Vec::new();
            for &s in &stop {
                for &c in &tree.cube(s).children {
                    if tree.cube(c).level <= cfg.k0 {
                        next.push(c);
                    }
                }
            }
            next.sort_unstable();
            // neighbors: same-generation cubes meeting 2 C0 B_R via samples
            let r_cube = tree.cube(r);
            let reach = 2.0 * cfg.c0 * r_cube.side;
            let mut neighbors = Vec::new();
            for &q in &tree.levels[r_cube.level as usize] {
                let qc = tree.cube(q);
                let near = qc
                    .members
                    .iter()
                    .any(|&s| set.points[s as usize].dist(&r_cube.center) < reach);
                if near {
                    neighbors.push(q);
                }
            }
            // smoothing stops across the neighbor forest
            let mut stop_smoothing: Vec<CubeId> = Vec::new();
            for &q in &neighbors {
                let (_, s) = grow(q, &mut grown);
                stop_smoothing.extend(s);
            }
            stop_smoothing.sort_unstable();
            stop_smoothing.dedup();
            next_gen.extend_from_slice(&next);
            regions.insert(
                r,
                TreeRegion { root: r, tree: members, stop, next, neighbors, stop_smoothing },
            );
        }
        next_gen.sort_unstable();
        next_gen.dedup();
        if next_gen.is_empty() {
            break;
        }
        generations.push(next_gen);
    }
    Ok(StoppingForest { generations, regions, m_level: bad.m, cfg: cfg.clone() })
}

/// Smoothed distance `d_R(x) = min over stop cubes of (side + dist(x, Q))`
/// where the distance to a cube is the distance to its member samples.
/// An empty stop family returns side(R) by convention.
pub fn smoothed_distance(
    tree: &CubeTree,
    set: &SampledSet,
    forest: &StoppingForest,
    r: CubeId,
    x: &Point,
) -> f64 {
    let region = &forest.regions[&r];
    if region.stop_smoothing.is_empty() {
        return tree.cube(r).side;
    }
    let mut best = f64::INFINITY;
    for &q in &region.stop_smoothing {
        let cube = tree.cube(q);
        if cube.side >= best {
            continue;
        }
        // cheap lower bound via the center ball before scanning members
        let center_gap = (x.dist(&cube.center) - cube.side).max(0.0);
        if cube.side + center_gap >= best {
            continue;
        }
        for &m in &cube.members {
            let d = cube.side + set.points[m as usize].dist(x);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// `d_R` of a dyadic cube: `min over stops of (side + dist(box, Q))`, the
/// exact infimum of d_R over the box when cube distances are taken to member
/// samples.
pub fn smoothed_distance_to_cube(
    tree: &CubeTree,
    set: &SampledSet,
    stop_cubes: &[CubeId],
    fallback: f64,
    the_box: &DyadicCube,
) -> f64 {
    if stop_cubes.is_empty() {
        return fallback;
    }
    let mut best = f64::INFINITY;
    for &q in stop_cubes {
        let cube = tree.cube(q);
        if cube.side >= best {
            continue;
        }
        let center_gap = (the_box.dist_to_point(&cube.center) - cube.side).max(0.0);
        if cube.side + center_gap >= best {
            continue;
        }
        for &m in &cube.members {
            let d = cube.side + the_box.dist_to_point(&set.points[m as usize]);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Coherence (stopping-time region properties) and partition checks.
pub fn check_forest_invariants(
    tree: &CubeTree,
    forest: &StoppingForest,
) -> Result<()> {
    let root = forest.generations[0][0];
    let root_level = tree.cube(root).level;
    // partition: every cube of the subtree down to k0 in exactly one tree
    let mut seen: BTreeMap<CubeId, CubeId> = BTreeMap::new();
    for region in forest.regions.values() {
        for &q in &region.tree {
            if let Some(prev) = seen.insert(q, region.root) {
                return Err(Error::Constraint(format!(
                    "cube {q} belongs to trees {prev} and {}",
                    region.root
                )));
            }
        }
    }
    for q in tree.descendants(root) {
        let lvl = tree.cube(q).level;
        if lvl >= root_level && lvl <= forest.cfg.k0 && !seen.contains_key(&q) {
            return Err(Error::Constraint(format!("cube {q} not covered by any tree")));
        }
    }
    // per-tree coherence
    for region in forest.regions.values() {
        let members: HashSet<CubeId> = region.tree.iter().copied().collect();
        let top = tree.cube(region.root);
        for &q in &region.tree {
            // top contains every member
            let mut anc = q;
            let mut reached = false;
            loop {
                if anc == region.root {
                    reached = true;
                    break;
                }
                match tree.cube(anc).parent {
                    Some(p) => anc = p,
                    None => break,
                }
            }
            if !reached {
                return Err(Error::Constraint(format!(
                    "cube {q} in tree {} is not below its top",
                    region.root
                )));
            }
            // sandwich closure: ancestors between q and top are members
            let mut anc = q;
            while anc != region.root {
                let p = tree.cube(anc).parent.unwrap();
                if !members.contains(&p) {
                    return Err(Error::Constraint(format!(
                        "sandwich violated: {p} between {q} and top {}",
                        region.root
                    )));
                }
                anc = p;
            }
            let _ = top;
        }
        // sibling completeness: children of a member are all-in or all-out
        for &q in &region.tree {
            let kids: Vec<CubeId> = tree
                .cube(q)
                .children
                .iter()
                .copied()
                .filter(|&c| tree.cube(c).level <= forest.cfg.k0)
                .collect();
            if kids.is_empty() {
                continue;
            }
            let inside = kids.iter().filter(|c| members.contains(c)).count();
            if inside != 0 && inside != kids.len() {
                return Err(Error::Constraint(format!(
                    "sibling completeness violated under cube {q}"
                )));
            }
        }
        // stops are exactly the members with no member children
        for &s in &region.stop {
            if !members.contains(&s) {
                return Err(Error::Constraint(format!("stop cube {s} not in its tree")));
            }
            if tree.cube(s).children.iter().any(|c| members.contains(c)) {
                return Err(Error::Constraint(format!("stop cube {s} has a member child")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corona::frostman::frostman_bad_cubes;
    use crate::netcubes::build_cube_tree;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords)
    }

    fn line_set(m: usize) -> SampledSet {
        let h = 1.0 / m as f64;
        let points: Vec<Point> = (0..m).map(|i| pt(&[i as f64 * h, 0.0])).collect();
        SampledSet::new(points, h, 2, 1).unwrap()
    }

    #[test]
    fn line_forest_partitions_and_is_coherent() {
        let set = line_set(512);
        let tree = build_cube_tree(&set, 0.5, 7).unwrap();
        let m = 5; // bad floor at side 2^-5
        let bad = frostman_bad_cubes(&set, &set.points, m).unwrap();
        let cfg = CoronaConfig::new(7);
        let forest = build_forest(&tree, &set, &bad, tree.root().id, &cfg).unwrap();
        check_forest_invariants(&tree, &forest).unwrap();
        // for a line, bad cubes live only at the floor, so the first tree
        // descends until cube sides are comparable to 2^-m
        let first = &forest.regions[&tree.root().id];
        let min_stop_side =
            first.stop.iter().map(|&q| tree.cube(q).side).fold(f64::INFINITY, f64::min);
        assert!(min_stop_side <= side_of_level(m - 2));
        // smoothed distance is 1-Lipschitz on random pairs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let x = pt(&[rng.random::<f64>() * 1.2 - 0.1, rng.random::<f64>() * 0.2 - 0.1]);
            let y = pt(&[rng.random::<f64>() * 1.2 - 0.1, rng.random::<f64>() * 0.2 - 0.1]);
            let dx = smoothed_distance(&tree, &set, &forest, tree.root().id, &x);
            let dy = smoothed_distance(&tree, &set, &forest, tree.root().id, &y);
            assert!((dx - dy).abs() <= x.dist(&y) + 1e-12);
        }
        // x inside a stop cube: d_R(x) <= side + 2h
        let q = first.stop[0];
        let qc = tree.cube(q);
        let inside = set.points[qc.members[0] as usize];
        let d = smoothed_distance(&tree, &set, &forest, tree.root().id, &inside);
        assert!(d <= qc.side + 2.0 * set.h, "d_R inside stop cube: {d} vs side {}", qc.side);
    }

    #[test]
    fn single_stop_cube_distance_formula() {
        let set = line_set(256);
        let tree = build_cube_tree(&set, 0.5, 6).unwrap();
        let bad = frostman_bad_cubes(&set, &set.points, 4).unwrap();
        let cfg = CoronaConfig::new(6);
        let forest = build_forest(&tree, &set, &bad, tree.root().id, &cfg).unwrap();
        let region = &forest.regions[&tree.root().id];
        // evaluate far away along the y axis: dist to every stop cube is
        // dominated by the vertical offset, so d_R ~ min(side) + offset
        let x = pt(&[0.5, 3.0]);
        let d = smoothed_distance(&tree, &set, &forest, tree.root().id, &x);
        let min_side =
            region.stop_smoothing.iter().map(|&q| tree.cube(q).side).fold(f64::INFINITY, f64::min);
        assert!(d >= 3.0 && d <= min_side + 3.1, "d = {d}");
    }
}
