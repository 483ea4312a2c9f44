//! The dynamical-system zoo: forward/backward maps, metrics, and
//! propagation of ball images as representable sets.

pub mod flow;
pub mod product;
pub mod shift;
pub mod torus_linear;

use std::fmt::{Debug, Display};

use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::SystemError;

pub use flow::{PointCloud, SlowedFlow};
pub use product::{CatCrossIdentity, ShiftCrossRotation};
pub use shift::ShiftSystem;
pub use torus_linear::TorusLinearSystem;

/// Scalar carried by a system: exact dyadics on the shift/torus-linear
/// paths, floats on sampled paths.
pub trait DiamValue: Clone + PartialOrd + Debug + Display + Send + Sync {
    fn from_f64_approx(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn midpoint(a: &Self, b: &Self) -> Self;
    fn is_exact_kind() -> bool;
}

impl DiamValue for Dyadic {
    fn from_f64_approx(x: f64) -> Self {
        Dyadic::from_f64(x).expect("finite")
    }
    fn to_f64(&self) -> f64 {
        Dyadic::to_f64(self)
    }
    fn midpoint(a: &Self, b: &Self) -> Self {
        Dyadic::midpoint(a, b)
    }
    fn is_exact_kind() -> bool {
        true
    }
}

impl DiamValue for f64 {
    fn from_f64_approx(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn midpoint(a: &Self, b: &Self) -> Self {
        0.5 * (a + b)
    }
    fn is_exact_kind() -> bool {
        false
    }
}

/// Two-sided enclosure of a diameter. Exact paths return `lo == hi`.
#[derive(Clone, Debug, Serialize)]
pub struct DiamBound<V> {
    pub lo: V,
    pub hi: V,
}

impl<V: DiamValue> DiamBound<V> {
    pub fn exact(v: V) -> Self {
        DiamBound { lo: v.clone(), hi: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi || self.lo.partial_cmp(&self.hi) == Some(std::cmp::Ordering::Equal)
    }

    pub fn mid(&self) -> V {
        V::midpoint(&self.lo, &self.hi)
    }
}

/// Outcome of comparing a diameter enclosure against a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    /// certainly `diam <= threshold` (does not trigger; ties do not count)
    AtOrBelow,
    /// certainly `diam > threshold`
    Above,
    /// the enclosure straddles the threshold
    Uncertain,
}

impl<V: DiamValue> DiamBound<V> {
    pub fn crossing(&self, threshold: &V) -> Crossing {
        if self.hi <= *threshold {
            Crossing::AtOrBelow
        } else if self.lo > *threshold {
            Crossing::Above
        } else {
            Crossing::Uncertain
        }
    }
}

/// A homeomorphism with representable ball images.
pub trait Dynamics: Sync {
    type Point: Clone + Debug + Send + Sync;
    type Image: Clone + Send + Sync;
    type Value: DiamValue;

    fn system_id(&self) -> String;

    /// Diameter of the whole space.
    fn space_diam(&self) -> Self::Value;

    /// Radii at or above this bound are rejected (connectedness of
    /// balls, hypothesis P1, and wrap safety on tori).
    fn radius_bound(&self) -> Self::Value;

    fn forward_point(&self, x: &Self::Point, steps: i64) -> Result<Self::Point, SystemError>;

    fn point_dist(&self, a: &Self::Point, b: &Self::Point) -> Self::Value;

    /// The (closure of the) ball `B(x, r)` as a representable set.
    /// `level` requests denser sampling on sampled paths; exact paths
    /// ignore it.
    fn ball_at_level(
        &self,
        x: &Self::Point,
        r: &Self::Value,
        level: u32,
    ) -> Result<Self::Image, SystemError>;

    fn ball(&self, x: &Self::Point, r: &Self::Value) -> Result<Self::Image, SystemError> {
        self.ball_at_level(x, r, 0)
    }

    fn step_image(&self, img: &Self::Image, steps: i64) -> Result<Self::Image, SystemError>;

    fn image_diam(&self, img: &Self::Image) -> DiamBound<Self::Value>;

    /// Image of `B(x, r)` after `j >= 0` forward steps.
    fn ball_image(
        &self,
        x: &Self::Point,
        r: &Self::Value,
        j: i64,
    ) -> Result<Self::Image, SystemError> {
        assert!(j >= 0);
        self.step_image(&self.ball(x, r)?, j)
    }

    /// Highest sampling-escalation level the system supports.
    fn max_level(&self) -> u32 {
        0
    }

    /// Hausdorff distance between two images (exact on the shift,
    /// sampled with a dispersion-widened enclosure elsewhere).
    fn image_hausdorff(
        &self,
        a: &Self::Image,
        b: &Self::Image,
    ) -> Result<DiamBound<Self::Value>, SystemError>;

    /// Point estimate of the Hausdorff distance between images: the raw
    /// sampled value on cloud paths (whose enclosure above is widened by
    /// the dispersions), the exact value on exact paths.
    fn image_hausdorff_estimate(
        &self,
        a: &Self::Image,
        b: &Self::Image,
    ) -> Result<f64, SystemError> {
        Ok(self.image_hausdorff(a, b)?.mid().to_f64())
    }

    /// Membership of a point in an image (exact where the
    /// representation allows, dispersion-tolerant on clouds).
    fn image_contains(&self, img: &Self::Image, p: &Self::Point) -> bool;

    /// Sup-norm Lipschitz bound of the inverse map (coarse global
    /// constant; feeds the continuum diameter floor).
    fn backward_lipschitz(&self) -> f64;

    /// Float distance for bulk estimators (packing runs); exact paths
    /// fall back to converting the exact value.
    fn point_dist_f64(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        self.point_dist(a, b).to_f64()
    }

    /// Time-0 position for spatial hashing in packing runs; None keeps
    /// the quadratic scan.
    fn grid_position(&self, _p: &Self::Point) -> Option<[f64; 2]> {
        None
    }

    fn check_radius(&self, r: &Self::Value) -> Result<(), SystemError> {
        let bound = self.radius_bound();
        if *r >= bound {
            return Err(SystemError::UnsupportedRadius(format!("{r}"), format!("{bound}")));
        }
        Ok(())
    }
}

/// Serializable description of a system instance (CLI configuration
/// surface; schema documented in the CLI crate).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemConfig {
    Shift {
        epsilon: Dyadic,
    },
    TorusLinear {
        matrix: [[i64; 2]; 2],
    },
    ShiftCrossRotation {
        epsilon: Dyadic,
        rotation: RotationAngle,
    },
    CatCrossIdentity {
        matrix: [[i64; 2]; 2],
    },
    SlowedFlow {
        zero: [f64; 2],
        step: f64,
        samples: usize,
    },
}

/// Irrational constants stored symbolically.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RotationAngle {
    /// sqrt(2) - 1
    Sqrt2Minus1,
    /// identity rotation (alpha = 0)
    Identity,
}

impl RotationAngle {
    pub fn value(&self) -> f64 {
        match self {
            RotationAngle::Sqrt2Minus1 => std::f64::consts::SQRT_2 - 1.0,
            RotationAngle::Identity => 0.0,
        }
    }
}
