//! Grid estimates of invariant sets, equilibrium indices and trapping checks.

mod components;
mod dissipativity;
mod index;
mod region;

use thiserror::Error;

use crate::dynamics::IntegrateError;
use crate::geometry::{GeometryError, RectDomain};
use crate::poincare::PoincareError;

pub use components::{circle_test, components, CircleClass, CircleReport, ComponentInfo, THICKNESS_BINS};
pub use dissipativity::{dissipativity_check, BoundaryCurve, DissipativityReport};
pub use index::{
    attractor_count_check, cone_index, equilibria, equilibria_with, euler_check, index_of, index_of_at,
    CandidateFailure, EquilibriumInfo, EquilibriumOptions, EquilibriumScan, EulerCheck, LocalType,
};
pub use region::{iterate_region, AttractorEstimate, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("grid must be at least 8×8, got {nx}×{ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("invalid bounds {0:?}")]
    InvalidBounds([f64; 4]),
    #[error("region bounds {region:?} differ from the domain rectangle {domain:?}")]
    BoundsMismatch { region: [f64; 4], domain: [f64; 4] },
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("initial region is empty")]
    EmptyRegion,
    #[error("component {0} does not exist")]
    NoComponent(usize),
    #[error("component {0} has no winding; circle test needs a non-contractible set")]
    NoWinding(usize),
    #[error("field vanishes on the sampling circle (min magnitude {min:.3e})")]
    EquilibriumOnCircle { min: f64 },
    #[error("winding {value:.4} is not within 0.05 of an integer")]
    NonIntegerWinding { value: f64 },
    #[error(transparent)]
    Poincare(#[from] PoincareError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Where a grid lives: on a glued rectangle or on a plain planar box.
#[derive(Debug, Clone, Copy)]
pub enum Area<'a> {
    Surface(&'a RectDomain),
    Plane([f64; 4]),
}

impl<'a> Area<'a> {
    pub fn bounds(&self) -> [f64; 4] {
        match self {
            Area::Surface(d) => d.bounds(),
            Area::Plane(b) => *b,
        }
    }

    pub fn domain(&self) -> Option<&'a RectDomain> {
        match self {
            Area::Surface(d) => Some(d),
            Area::Plane(_) => None,
        }
    }
}

fn check_bounds(b: [f64; 4]) -> Result<(), TopologyError> {
    if b.iter().all(|v| v.is_finite()) && b[1] > b[0] && b[3] > b[2] {
        Ok(())
    } else {
        Err(TopologyError::InvalidBounds(b))
    }
}
