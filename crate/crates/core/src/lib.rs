//! Smooth flows on genus-p surfaces.
//!
//! A surface is modelled as a rectangle with glued boundary segments
//! ([`geometry`]). Fields that contain prescribed closed curves are built in
//! [`fieldspec`], integrated with boundary wrapping in [`dynamics`], and
//! analysed through period maps ([`poincare`]) and grid-based invariant sets
//! and equilibrium indices ([`topology`]).

// Validation uses `!(x > 0.0)` so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod fieldspec;
pub mod geometry;
pub mod poincare;
pub mod topology;

pub use dynamics::{integrate, step_dense, IntegratorConfig, Scheme, State, Trajectory};
pub use fieldspec::{CurveSpec, Expr, ExprField, SynthesizedField, VectorField};
pub use geometry::{HPoint, MoebiusMap, RectDomain, Similarity, TangentVector};
pub use poincare::{Monodromy, OrbitClass, PeriodicOrbit, PoincareMap};
pub use topology::{AttractorEstimate, EquilibriumInfo, Region};
