//! Points, Möbius maps, the fundamental rectangle and its side pairings.

mod domain;
mod moebius;

pub use domain::{reduce_to_domain, standard_domain, Edge, RectDomain, Segment, Similarity};
pub use moebius::{chart_to_rectangle, MoebiusMap};

use thiserror::Error;

/// A point of the plane; in hyperbolic contexts `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: HPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for HPoint {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

/// A velocity attached to a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: HPoint,
    pub vx: f64,
    pub vy: f64,
}

impl TangentVector {
    pub const fn new(base: HPoint, vx: f64, vy: f64) -> Self {
        Self { base, vx, vy }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("pole: |cz+d| = {modulus:e} at ({x}, {y})")]
    Pole { x: f64, y: f64, modulus: f64 },
    #[error("degenerate Möbius coefficients (det = {det})")]
    Degenerate { det: f64 },
    #[error("alpha = {alpha} must lie in (0, π/2)")]
    InvalidAlpha { alpha: f64 },
    #[error("theta = {theta} outside [{alpha}, π − {alpha}]")]
    ChartDomain { theta: f64, alpha: f64 },
    #[error("r = {r} must be positive")]
    InvalidRadius { r: f64 },
    #[error("genus must be at least 1")]
    InvalidGenus,
    #[error("point ({x}, {y}) not reduced after {steps} transitions")]
    NonTermination { x: f64, y: f64, steps: usize },
    #[error("non-finite point ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}
