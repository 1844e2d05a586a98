//! Christ-David cubes on a sampled set, built from nested maximal nets.
//!
//! Level-k net separation is `lambda^k * scale` where `scale` is the bounding
//! box diagonal of the samples; cube sides are `5 lambda^k * scale`. Nets are
//! nested (every level-k net point persists at level k+1), net points chain
//! to a nearest parent net point, and every sample is assigned to its nearest
//! finest net point. Cube membership at level k is the union of samples over
//! descendant chains, which makes partition and nesting hold by construction.

use crate::geom::{fps_indices, Ball, Point, PointGrid, SampledSet};
use crate::{Error, Result, RESOLUTION_FACTOR};
use serde::Serialize;
use std::collections::HashMap;

pub type CubeId = u32;

/// Inner containment constant from the cube theorem; with the practical
/// lambda used here the achieved constant is measured and logged instead of
/// enforced.
pub const C5: f64 = 1.0 / 500.0;

#[derive(Clone, Debug, Serialize)]
pub struct NetCube {
    pub id: CubeId,
    /// Level k >= 0; side = 5 lambda^k * scale.
    pub level: u32,
    /// Net point serving as the cube center.
    pub center: Point,
    /// Index of the center in the sample array.
    pub center_sample: usize,
    pub side: f64,
    pub parent: Option<CubeId>,
    pub children: Vec<CubeId>,
    /// Sample indices belonging to the cube, ascending.
    pub members: Vec<u32>,
}

impl NetCube {
    pub fn ball(&self, inflation: f64) -> Ball {
        Ball { center: self.center, radius: inflation * self.side }
    }
}

#[derive(Clone, Debug)]
pub struct CubeTree {
    pub cubes: Vec<NetCube>,
    /// Cube ids per level, in net-point order.
    pub levels: Vec<Vec<CubeId>>,
    pub lambda: f64,
    /// Bounding box diagonal of the samples; the root side is 5 * scale.
    pub scale: f64,
    /// Measured inner-containment constant: min over cubes of
    /// dist(center, nearest non-member sample) / side.
    pub achieved_c5: f64,
}

impl CubeTree {
    pub fn root(&self) -> &NetCube {
        &self.cubes[self.levels[0][0] as usize]
    }

    pub fn cube(&self, id: CubeId) -> &NetCube {
        &self.cubes[id as usize]
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn children(&self, id: CubeId) -> &[CubeId] {
        &self.cubes[id as usize].children
    }

    pub fn ball(&self, id: CubeId, inflation: f64) -> Ball {
        self.cube(id).ball(inflation)
    }

    /// Iterator over the subtree rooted at `id` (preorder, deterministic).
    pub fn descendants(&self, id: CubeId) -> Descendants<'_> {
        Descendants { tree: self, stack: vec![id] }
    }

    /// Side length at a level.
    pub fn side_at(&self, level: u32) -> f64 {
        5.0 * self.lambda.powi(level as i32) * self.scale
    }

    /// JSON dump: one record per cube.
    pub fn dump_json(&self) -> serde_json::Value {
        let cubes: Vec<serde_json::Value> = self
            .cubes
            .iter()
            .map(|q| {
                serde_json::json!({
                    "id": q.id,
                    "level": q.level,
                    "center": q.center.c[..].to_vec(),
                    "side": q.side,
                    "parent": q.parent,
                    "member_count": q.members.len(),
                })
            })
            .collect();
        serde_json::json!({
            "lambda": self.lambda,
            "scale": self.scale,
            "achieved_c5": self.achieved_c5,
            "cubes": cubes,
        })
    }
}

pub struct Descendants<'a> {
    tree: &'a CubeTree,
    stack: Vec<CubeId>,
}

impl Iterator for Descendants<'_> {
    type Item = CubeId;

    fn next(&mut self) -> Option<CubeId> {
        let id = self.stack.pop()?;
        let q = self.tree.cube(id);
        // push children reversed so iteration is in child order
        for &c in q.children.iter().rev() {
            self.stack.push(c);
        }
        Some(id)
    }
}

/// Build the Christ-David cube tree with `depth + 1` levels (0..=depth).
///
/// Preconditions: `lambda` in (0, 1/2], and the finest side `5 lambda^depth *
/// scale` must stay above the resolution floor `8h`.
pub fn build_cube_tree(set: &SampledSet, lambda: f64, depth: u32) -> Result<CubeTree> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} not in (0, 1/2]")));
    }
    let diag = set.bbox_diag();
    let scale = diag.max(set.h);
    let floor = RESOLUTION_FACTOR * set.h;
    // a degenerate (single-location) set supports any depth trivially
    if diag > 0.0 && 5.0 * lambda.powi(depth as i32) * scale < floor {
        let max_depth = ((floor / (5.0 * scale)).ln() / lambda.ln()).floor() as i64;
        return Err(Error::ResolutionFloor(format!(
            "depth {depth} puts cube side below 8h = {floor}; max legal depth is {}",
            max_depth.max(0)
        )));
    }

    // Nested maximal nets: level-k separation lambda^k * scale, each net
    // preseeded with the previous one.
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(depth as usize + 1);
    let mut prev: Vec<usize> = Vec::new();
    for k in 0..=depth {
        let sep = lambda.powi(k as i32) * scale;
        let net = fps_indices(&set.points, sep, &prev);
        prev = net.clone();
        nets.push(net);
    }

    // Parent chains between consecutive nets: each level-(k+1) net point maps
    // to the nearest level-k net point (ties to the lowest net index).
    // Nested nets guarantee a zero-distance self-parent for persisting points.
    let mut parent_net: Vec<Vec<usize>> = Vec::new(); // parent_net[k][i] = index into nets[k]
    for k in 0..depth as usize {
        let coarse_pts: Vec<Point> = nets[k].iter().map(|&i| set.points[i]).collect();
        let grid = PointGrid::build(&coarse_pts, set.n, (lambda.powi(k as i32) * scale).max(set.h));
        let mut pmap = Vec::with_capacity(nets[k + 1].len());
        for &pi in &nets[k + 1] {
            let (ni, _) = grid.nearest(&set.points[pi]);
            pmap.push(ni);
        }
        parent_net.push(pmap);
    }

    // Sample assignment at the finest level.
    let fine_pts: Vec<Point> = nets[depth as usize].iter().map(|&i| set.points[i]).collect();
    let fine_grid =
        PointGrid::build(&fine_pts, set.n, (lambda.powi(depth as i32) * scale).max(set.h));
    let mut fine_assign: Vec<usize> = Vec::with_capacity(set.points.len());
    for p in &set.points {
        fine_assign.push(fine_grid.nearest(p).0);
    }

    // Create cubes level by level; members accumulate bottom-up.
    let mut cubes: Vec<NetCube> = Vec::new();
    let mut levels: Vec<Vec<CubeId>> = Vec::with_capacity(depth as usize + 1);
    for (k, net) in nets.iter().enumerate() {
        let side = 5.0 * lambda.powi(k as i32) * scale;
        let mut ids = Vec::with_capacity(net.len());
        for &pi in net {
            let id = cubes.len() as CubeId;
            cubes.push(NetCube {
                id,
                level: k as u32,
                center: set.points[pi],
                center_sample: pi,
                side,
                parent: None,
                children: Vec::new(),
                members: Vec::new(),
            });
            ids.push(id);
        }
        levels.push(ids);
    }
    // link parents/children
    for k in 0..depth as usize {
        for (ci, &pnet) in parent_net[k].iter().enumerate() {
            let child_id = levels[k + 1][ci];
            let parent_id = levels[k][pnet];
            cubes[child_id as usize].parent = Some(parent_id);
            cubes[parent_id as usize].children.push(child_id);
        }
    }
    // members: finest level from assignment, coarser by union over children
    for (si, &ni) in fine_assign.iter().enumerate() {
        let id = levels[depth as usize][ni];
        cubes[id as usize].members.push(si as u32);
    }
    for k in (0..depth as usize).rev() {
        for &id in &levels[k] {
            let child_ids = cubes[id as usize].children.clone();
            let mut members = Vec::new();
            for c in child_ids {
                members.extend_from_slice(&cubes[c as usize].members);
            }
            members.sort_unstable();
            cubes[id as usize].members = members;
        }
    }

    // measured inner containment: for each cube, the nearest sample NOT in
    // the cube bounds how far B(center, c*side) can reach while staying inside
    let all_grid = PointGrid::build_auto(set);
    let mut achieved = f64::INFINITY;
    for q in &cubes {
        if q.members.len() == set.points.len() {
            continue; // root-like cube contains everything
        }
        let member_set: std::collections::HashSet<u32> = q.members.iter().copied().collect();
        // expanding search for the nearest non-member
        let mut r = q.side * 0.05;
        let nearest_out = loop {
            let cand = all_grid.in_ball(&q.center, r);
            let best = cand
                .iter()
                .filter(|&&i| !member_set.contains(&(i as u32)))
                .map(|&i| set.points[i].dist(&q.center))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                break best;
            }
            r *= 2.0;
            if r > 4.0 * scale {
                break f64::INFINITY;
            }
        };
        if nearest_out.is_finite() {
            achieved = achieved.min(nearest_out / q.side);
        }
    }

    Ok(CubeTree { cubes, levels, lambda, scale, achieved_c5: achieved })
}

/// Structural invariants: per-level partition of samples, child-member
/// nesting, outer ball containment, and net separation of same-level centers.
pub fn check_tree_invariants(tree: &CubeTree, set: &SampledSet) -> Result<()> {
    let n_samples = set.points.len();
    for (k, ids) in tree.levels.iter().enumerate() {
        let mut seen = vec![false; n_samples];
        for &id in ids {
            let q = tree.cube(id);
            for &m in &q.members {
                if seen[m as usize] {
                    return Err(Error::Constraint(format!(
                        "sample {m} in two cubes at level {k}"
                    )));
                }
                seen[m as usize] = true;
            }
            // outer containment: members within B(center, side)
            for &m in &q.members {
                let d = set.points[m as usize].dist(&q.center);
                if d > q.side {
                    return Err(Error::Constraint(format!(
                        "member {m} of cube {id} at distance {d} > side {}",
                        q.side
                    )));
                }
            }
            // member sets nest into the parent
            if let Some(pid) = q.parent {
                let p = tree.cube(pid);
                let pm: std::collections::HashSet<u32> = p.members.iter().copied().collect();
                if !q.members.iter().all(|m| pm.contains(m)) {
                    return Err(Error::Constraint(format!(
                        "cube {id} members not nested in parent {pid}"
                    )));
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Constraint(format!("level {k} does not cover all samples")));
        }
        // net separation, grid-accelerated
        let sep = tree.lambda.powi(k as i32) * tree.scale;
        let centers: Vec<Point> = ids.iter().map(|&id| tree.cube(id).center).collect();
        let grid = PointGrid::build(&centers, set.n, sep.max(set.h));
        for (i, c) in centers.iter().enumerate() {
            for j in grid.in_ball(c, sep * (1.0 - 1e-9)) {
                if j != i {
                    return Err(Error::Constraint(format!(
                        "centers of cubes {},{} at level {k} separated by {} < {sep}",
                        ids[i],
                        ids[j],
                        centers[i].dist(&centers[j])
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Convenience: map from cube id to its subtree cube ids (used by report
/// builders that restrict sums to a region).
pub fn subtree_ids(tree: &CubeTree, root: CubeId) -> Vec<CubeId> {
    tree.descendants(root).collect()
}

/// Map each sample index to its cube at every level (level-major).
pub fn sample_to_cube_maps(tree: &CubeTree) -> Vec<HashMap<u32, CubeId>> {
    let mut maps = Vec::with_capacity(tree.levels.len());
    for ids in &tree.levels {
        let mut m = HashMap::new();
        for &id in ids {
            for &s in &tree.cube(id).members {
                m.insert(s, id);
            }
        }
        maps.push(m);
    }
    maps
}
