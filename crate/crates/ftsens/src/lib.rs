//! First-time sensitivity laboratory.
//!
//! Computes first-increasing times of balls under iteration, certifies
//! or refutes the uniform-jump conditions on a zoo of dynamical
//! systems, constructs local cw-unstable continua, evaluates the
//! hyperbolic ft-metric over catalogs of marked continua, and bounds
//! topological entropy from below through separated-set counting. The
//! shift on the Hilbert cube runs on exact dyadic arithmetic end to
//! end; torus flows run on sampled paths with declared bounds.

pub mod boxes;
pub mod certifier;
pub mod continua;
pub mod dyadic;
pub mod entropy;
pub mod error;
pub mod ftmetric;
pub mod firsttime;
pub mod hilbert;
pub mod report;
pub mod systems;
pub mod torus;

pub use boxes::{BoxContinuum, Interval, Tail, WeightedInterval};
pub use dyadic::Dyadic;
pub use hilbert::{hilbert_dist, HilbertPoint};
