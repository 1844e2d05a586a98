//! Descending-dimension tile refinement of the Whitney skeleton, and the fine
//! dyadic approximant built from the cubes meeting it.
//!
//! Where a smaller cube shares part of a face of a larger one, the larger
//! face is tessellated into tiles at the smallest adjacent size, stage by
//! stage from dimension n-1 down to d. The result is a face complex in which
//! no element properly contains another, which is what the staged radial
//! projections need to be well defined.

use super::whitney::WhitneyFamily;
use crate::dyadic::{side_of_level, DyadicCube, Face, SkeletonSet};
use crate::{Error, Result, MAX_DIM};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// Refined face families per dimension, plus the assembled approximant.
#[derive(Clone, Debug)]
pub struct TileComplex {
    /// families[&m] = refined faces of dimension m, for d <= m <= n-1.
    pub families: BTreeMap<usize, Vec<Face>>,
    /// The approximant: d-skeleta of the Whitney cubes united with the
    /// refined d-faces, containment-resolved.
    pub e_r: SkeletonSet,
    pub d: usize,
    pub n: usize,
}

/// The coarser-level face geometrically containing `f`, when representable.
fn ancestor_face(f: &Face, lvl: i32) -> Option<Face> {
    if lvl > f.level {
        return None;
    }
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

/// Replace faces that properly contain other faces by their subdivisions at
/// the finest contained level, iterating to a fixed point.
fn resolve_containments(faces: &mut Vec<Face>) {
    loop {
        faces.sort_unstable();
        faces.dedup();
        let set: HashSet<Face> = faces.iter().copied().collect();
        let min_level = faces.iter().map(|f| f.level).min().unwrap_or(0);
        let mut split_to: HashMap<Face, i32> = HashMap::new();
        for f in faces.iter() {
            for lvl in (min_level..f.level).rev() {
                if let Some(anc) = ancestor_face(f, lvl) {
                    if set.contains(&anc) {
                        let e = split_to.entry(anc).or_insert(f.level);
                        *e = (*e).max(f.level);
                    }
                }
            }
        }
        if split_to.is_empty() {
            return;
        }
        let mut out = Vec::with_capacity(faces.len());
        for f in faces.iter() {
            match split_to.get(f) {
                Some(&lvl) => out.extend(f.subdivide(lvl)),
                None => out.push(*f),
            }
        }
        *faces = out;
    }
}

/// Staged tile refinement of the Whitney family.
pub fn tile_refinement(fam: &WhitneyFamily, d: usize, n: usize) -> Result<TileComplex> {
    if fam.cubes.is_empty() {
        return Err(Error::Empty("whitney family has no cubes".into()));
    }
    if d >= n {
        return Err(Error::DimensionMismatch(format!("tile dim {d} must be < n = {n}")));
    }
    let full: u8 = ((1u16 << n) - 1) as u8;
    let mut current: Vec<Face> = fam
        .cubes
        .iter()
        .map(|c| Face { level: c.level, corner: c.corner, free: full, n: c.n })
        .collect();
    let mut families: BTreeMap<usize, Vec<Face>> = BTreeMap::new();
    for m in (d..n).rev() {
        // candidate m-faces of the (m+1)-dimensional elements
        let mut cand: BTreeSet<Face> = BTreeSet::new();
        for el in &current {
            for f in el.boundary_faces() {
                cand.insert(f);
            }
        }
        // a candidate strictly containing another candidate is tessellated
        // at the finest contained size
        let min_level = cand.iter().map(|f| f.level).min().unwrap_or(0);
        let mut split_to: HashMap<Face, i32> = HashMap::new();
        for g in &cand {
            for lvl in (min_level..g.level).rev() {
                if let Some(anc) = ancestor_face(g, lvl) {
                    if cand.contains(&anc) {
                        let e = split_to.entry(anc).or_insert(g.level);
                        *e = (*e).max(g.level);
                    }
                }
            }
        }
        let mut out: Vec<Face> = Vec::new();
        for f in &cand {
            match split_to.get(f) {
                Some(&lvl) => out.extend(f.subdivide(lvl)),
                None => out.push(*f),
            }
        }
        resolve_containments(&mut out);
        families.insert(m, out.clone());
        current = out;
    }
    // E_R = d-skeleta of the cubes united with the refined d-faces
    let mut e_r_faces: Vec<Face> = families[&d].clone();
    for c in &fam.cubes {
        e_r_faces.extend(c.skeleton(d));
    }
    resolve_containments(&mut e_r_faces);
    let e_r = SkeletonSet::from_faces(e_r_faces)?;
    Ok(TileComplex { families, e_r, d, n })
}

/// Fine dyadic approximant: d-skeleta of every level-`rho_level` cube whose
/// half-open box meets a face of `e_r`.
///
/// Constraints: `2^-rho_level` must be smaller than the smallest Whitney cube
/// side, and when the skeletal-condition parameters `(eta1, alpha1, side_r)`
/// are supplied, smaller than `min(eta1, alpha1) * side_r / (1000 sqrt(n))`.
pub fn fine_skeleton_e_rho(
    e_r: &SkeletonSet,
    rho_level: i32,
    smallest_whitney_side: f64,
    stc: Option<(f64, f64, f64)>,
) -> Result<SkeletonSet> {
    let rho = side_of_level(rho_level);
    if rho >= smallest_whitney_side {
        return Err(Error::Constraint(format!(
            "rho = {rho} must be below the smallest Whitney cube side {smallest_whitney_side}"
        )));
    }
    if let Some((eta1, alpha1, side_r)) = stc {
        let bound = eta1.min(alpha1) * side_r / (1000.0 * (e_r.n as f64).sqrt());
        if rho >= bound {
            return Err(Error::Constraint(format!(
                "rho = {rho} violates the skeletal-condition scale bound {bound}"
            )));
        }
    }
    let n = e_r.n;
    let mut cubes: BTreeSet<DyadicCube> = BTreeSet::new();
    for f in e_r.faces() {
        let shift = rho_level - f.level;
        debug_assert!(shift >= 1);
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for a in 0..n {
            let base = f.corner[a] << shift;
            if f.free & (1 << a) != 0 {
                lo[a] = base;
                hi[a] = (f.corner[a] + 1) << shift; // end cube contains the endpoint
            } else {
                lo[a] = base;
                hi[a] = base;
            }
        }
        let mut idx = lo;
        'gen: loop {
            cubes.insert(DyadicCube { level: rho_level, corner: idx, n: n as u8 });
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
    let mut faces = Vec::new();
    for c in &cubes {
        faces.extend(c.skeleton(e_r.dim));
    }
    SkeletonSet::from_faces(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcubes::CubeId;
    use approx::assert_abs_diff_eq;

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

    #[test]
    fn uniform_family_creates_no_tiles() {
        // four same-size cubes in a row: every shared face is a full face of
        // both owners, so no Adj set is nonempty and E_R = the d-skeleta
        let cubes: Vec<DyadicCube> = (0..4)
            .map(|i| DyadicCube { level: 1, corner: [i, 0, 0, 0], n: 2 })
            .collect();
        let fam = fam_from_cubes(cubes.clone());
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        let mut skel = Vec::new();
        for c in &cubes {
            skel.extend(c.skeleton(1));
        }
        let plain = SkeletonSet::from_faces(skel).unwrap();
        assert_eq!(tc.e_r.faces(), plain.faces());
        assert_abs_diff_eq!(tc.e_r.measure(), plain.measure(), epsilon = 1e-12);
    }

    #[test]
    fn half_size_neighbor_tiles_the_shared_face() {
        // unit cube [0,1)^2 and half cube [0,1/2) x [-1/2,0): the unit cube's
        // bottom edge gains half-size tiles
        let big = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 2 };
        let small = DyadicCube { level: 1, corner: [0, -1, 0, 0], n: 2 };
        let fam = fam_from_cubes(vec![big, small]);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        let f1 = &tc.families[&1];
        // the shared edge region y=0, x in [0,1) must be covered by level-1
        // horizontal faces (tiles), not the original level-0 face
        let full_bottom = Face { level: 0, corner: [0, 0, 0, 0], free: 0b01, n: 2 };
        assert!(!f1.contains(&full_bottom), "untessellated face survived");
        let tile_a = Face { level: 1, corner: [0, 0, 0, 0], free: 0b01, n: 2 };
        let tile_b = Face { level: 1, corner: [1, 0, 0, 0], free: 0b01, n: 2 };
        assert!(f1.contains(&tile_a) && f1.contains(&tile_b));
        // oracle: exhaustive face-adjacency scan confirms only faces with a
        // strictly smaller coplanar neighbor face got subdivided
        for f in f1 {
            for g in f1 {
                assert!(
                    f == g || !g.contained_in(f),
                    "family still has containment {f:?} > {g:?}"
                );
            }
        }
        // measure is preserved by tessellation
        let mut skel = Vec::new();
        for c in &fam.cubes {
            skel.extend(c.skeleton(1));
        }
        let plain = SkeletonSet::from_faces(skel).unwrap();
        assert_abs_diff_eq!(tc.e_r.measure(), plain.measure(), epsilon = 1e-12);
    }

    #[test]
    fn three_dim_refinement_descends_to_edges() {
        let big = DyadicCube { level: 0, corner: [0, 0, 0, 0], n: 3 };
        let small = DyadicCube { level: 1, corner: [0, 0, -1, 0], n: 3 };
        let fam = fam_from_cubes(vec![big, small]);
        let tc = tile_refinement(&fam, 1, 3).unwrap();
        assert!(tc.families.contains_key(&2) && tc.families.contains_key(&1));
        for fam_m in tc.families.values() {
            for f in fam_m {
                for g in fam_m {
                    assert!(f == g || !g.contained_in(f));
                }
            }
        }
        // E_R faces are 1-dimensional
        assert_eq!(tc.e_r.dim, 1);
    }

    #[test]
    fn e_rho_covers_e_r_and_respects_constraints() {
        let big = DyadicCube { level: 1, corner: [0, 0, 0, 0], n: 2 };
        let fam = fam_from_cubes(vec![big]);
        let tc = tile_refinement(&fam, 1, 2).unwrap();
        // rho must be below the smallest cube side (1/2): level >= 2
        assert!(fine_skeleton_e_rho(&tc.e_r, 1, 0.5, None).is_err());
        let e_rho = fine_skeleton_e_rho(&tc.e_r, 3, 0.5, None).unwrap();
        // containment: every E_R face is a union of e_rho faces
        for f in tc.e_r.faces() {
            for sub in f.subdivide(3) {
                assert!(
                    e_rho.faces().contains(&sub),
                    "E_R subface {sub:?} missing from E_rho"
                );
            }
        }
        // the stc bound binds when supplied
        assert!(fine_skeleton_e_rho(&tc.e_r, 3, 0.5, Some((0.1, 0.1, 1.0))).is_err());
    }
}
