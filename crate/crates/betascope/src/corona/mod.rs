//! Corona machinery: Frostman-style mass distribution and bad cubes,
//! stopping-time forests over the cube tree, smoothed distance, Whitney cube
//! families, skeleton approximants and their tile refinement, the fine dyadic
//! approximant, and a Federer-Fleming projection of sample points.

mod forest;
mod frostman;
mod projection;
mod tiles;
pub(crate) mod whitney;

pub use forest::{
    build_forest, check_forest_invariants, smoothed_distance, smoothed_distance_to_cube,
    StoppingForest, TreeRegion,
};
pub use frostman::{check_frostman_invariants, frostman_bad_cubes, FrostmanState};
pub use projection::{federer_fleming_project, FfHost, FfOutcome, FfReport};
pub use tiles::{fine_skeleton_e_rho, tile_refinement, TileComplex};
pub use whitney::{check_whitney_non_nested, skeleton_er, whitney_family, WhitneyFamily};

use crate::{Error, Result};
use serde::Serialize;

/// Parameters of the corona construction.
#[derive(Clone, Debug, Serialize)]
pub struct CoronaConfig {
    /// Whitney smoothing parameter; must satisfy tau <= min(alpha0, eta0)/100.
    pub tau: f64,
    /// Stopping-time ball inflation.
    pub m_stop: f64,
    /// Ball inflation tying the Whitney region to its top cube.
    pub c0: f64,
    /// Depth (cube-tree generations) covered by the decomposition.
    pub k0: u32,
    /// Topological-condition distance parameter bound (enters only through
    /// the tau constraint; 1.0 means unconstrained).
    pub alpha0: f64,
    /// Topological-condition boundary parameter bound.
    pub eta0: f64,
    pub seed: u64,
}

impl CoronaConfig {
    pub fn new(k0: u32) -> CoronaConfig {
        CoronaConfig {
            tau: 0.01,
            m_stop: 4.0,
            c0: 2.0,
            k0,
            alpha0: 1.0,
            eta0: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tau_max = self.alpha0.min(self.eta0) / 100.0;
        if !(self.tau > 0.0 && self.tau <= tau_max + 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "tau = {} out of (0, min(alpha0, eta0)/100 = {tau_max}]",
                self.tau
            )));
        }
        if self.m_stop <= 1.0 || self.c0 < 1.0 {
            return Err(Error::InvalidParameter("require M > 1 and C0 >= 1".into()));
        }
        Ok(())
    }
}
