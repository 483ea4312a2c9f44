//! Products of a first-time sensitive base with an equicontinuous
//! factor: shift x circle rotation, and cat map x identity. The product
//! metric is the sup of the component metrics, so the equicontinuous
//! factor contributes a constant to every image diameter.

use crate::boxes::BoxContinuum;
use crate::dyadic::Dyadic;
use crate::error::SystemError;
use crate::hilbert::{hilbert_dist, HilbertPoint};
use crate::systems::{DiamBound, Dynamics, RotationAngle, ShiftSystem, TorusLinearSystem};
use crate::torus::{circle_dist, torus_dist, wrap01, Parallelotope, TorusPoint};

/// Arc of the circle: rotations are isometries, so the radius is
/// invariant under the dynamics and arc diameters are exact.
#[derive(Clone, Debug)]
pub struct CircleArc {
    pub center: f64,
    pub radius: Dyadic,
}

impl CircleArc {
    pub fn diam(&self) -> Dyadic {
        self.radius.ldexp(1).min(Dyadic::half())
    }

    /// Hausdorff enclosure between two arcs: at least the larger of the
    /// center offset and the radius difference, at most their sum.
    pub fn hausdorff(&self, other: &CircleArc) -> DiamBound<Dyadic> {
        let centers = Dyadic::from_f64(circle_dist(self.center, other.center)).expect("finite");
        let radii = (&self.radius - &other.radius).abs();
        let lo = centers.clone().max(radii.clone());
        let hi = (&centers + &radii).min(Dyadic::half());
        DiamBound { lo, hi }
    }

    pub fn contains(&self, angle: f64) -> bool {
        circle_dist(self.center, angle) <= self.radius.to_f64() + 1e-12
    }
}

fn max_bound(a: DiamBound<Dyadic>, b: DiamBound<Dyadic>) -> DiamBound<Dyadic> {
    DiamBound { lo: a.lo.max(b.lo), hi: a.hi.max(b.hi) }
}

/// Shift on the Hilbert cube times a circle rotation.
#[derive(Clone, Debug)]
pub struct ShiftCrossRotation {
    pub base: ShiftSystem,
    pub rotation: RotationAngle,
}

impl ShiftCrossRotation {
    pub fn new(base: ShiftSystem, rotation: RotationAngle) -> Self {
        ShiftCrossRotation { base, rotation }
    }

    /// Radius below which the rotation factor can never drive a
    /// crossing at threshold `gamma`: the arc diameter 2r stays at or
    /// below gamma.
    pub fn equicontinuity_radius(&self, gamma: &Dyadic) -> Dyadic {
        gamma.ldexp(-1)
    }
}

impl Dynamics for ShiftCrossRotation {
    type Point = (HilbertPoint, f64);
    type Image = (BoxContinuum, CircleArc);
    type Value = Dyadic;

    fn system_id(&self) -> String {
        format!("{} x rotation({:?})", self.base.system_id(), self.rotation)
    }

    fn space_diam(&self) -> Dyadic {
        Dyadic::one()
    }

    fn radius_bound(&self) -> Dyadic {
        Dyadic::from_ratio(1, 2)
    }

    fn forward_point(&self, x: &Self::Point, steps: i64) -> Result<Self::Point, SystemError> {
        Ok((x.0.shift(steps), wrap01(x.1 + steps as f64 * self.rotation.value())))
    }

    fn point_dist(&self, a: &Self::Point, b: &Self::Point) -> Dyadic {
        let circ = Dyadic::from_f64(circle_dist(a.1, b.1)).expect("finite");
        hilbert_dist(&a.0, &b.0).max(circ)
    }

    fn ball_at_level(
        &self,
        x: &Self::Point,
        r: &Dyadic,
        _level: u32,
    ) -> Result<Self::Image, SystemError> {
        self.check_radius(r)?;
        Ok((BoxContinuum::ball(&x.0, r), CircleArc { center: x.1, radius: r.clone() }))
    }

    fn step_image(&self, img: &Self::Image, steps: i64) -> Result<Self::Image, SystemError> {
        let arc = CircleArc {
            center: wrap01(img.1.center + steps as f64 * self.rotation.value()),
            radius: img.1.radius.clone(),
        };
        Ok((img.0.shift(steps), arc))
    }

    fn image_diam(&self, img: &Self::Image) -> DiamBound<Dyadic> {
        DiamBound::exact(img.0.diam().max(img.1.diam()))
    }

    fn image_hausdorff(
        &self,
        a: &Self::Image,
        b: &Self::Image,
    ) -> Result<DiamBound<Dyadic>, SystemError> {
        // Hausdorff of a sup-metric product is the max of the factors
        let boxes = DiamBound::exact(a.0.hausdorff(&b.0)?);
        Ok(max_bound(boxes, a.1.hausdorff(&b.1)))
    }

    fn image_contains(&self, img: &Self::Image, p: &Self::Point) -> bool {
        img.0.contains_point(&p.0) && img.1.contains(p.1)
    }

    fn backward_lipschitz(&self) -> f64 {
        // shift factor dominates; the rotation is an isometry
        2.0
    }
}

/// Linear Anosov automorphism of the 2-torus times the identity on the
/// circle (a partially hyperbolic map of the 3-torus).
#[derive(Clone, Debug)]
pub struct CatCrossIdentity {
    pub base: TorusLinearSystem,
}

impl CatCrossIdentity {
    pub fn new(base: TorusLinearSystem) -> Self {
        CatCrossIdentity { base }
    }
}

impl Dynamics for CatCrossIdentity {
    type Point = (TorusPoint, f64);
    type Image = (Parallelotope, CircleArc);
    type Value = Dyadic;

    fn system_id(&self) -> String {
        format!("{} x id", self.base.system_id())
    }

    fn space_diam(&self) -> Dyadic {
        Dyadic::half()
    }

    fn radius_bound(&self) -> Dyadic {
        Dyadic::from_ratio(1, 2)
    }

    fn forward_point(&self, x: &Self::Point, steps: i64) -> Result<Self::Point, SystemError> {
        Ok((self.base.apply_point(&x.0, steps), x.1))
    }

    fn point_dist(&self, a: &Self::Point, b: &Self::Point) -> Dyadic {
        let t = Dyadic::from_f64(torus_dist(&a.0, &b.0)).expect("finite");
        let c = Dyadic::from_f64(circle_dist(a.1, b.1)).expect("finite");
        t.max(c)
    }

    fn ball_at_level(
        &self,
        x: &Self::Point,
        r: &Dyadic,
        _level: u32,
    ) -> Result<Self::Image, SystemError> {
        self.check_radius(r)?;
        Ok((
            Parallelotope::ball([x.0.coords[0], x.0.coords[1]], r),
            CircleArc { center: x.1, radius: r.clone() },
        ))
    }

    fn step_image(&self, img: &Self::Image, steps: i64) -> Result<Self::Image, SystemError> {
        Ok((self.base.step_image(&img.0, steps)?, img.1.clone()))
    }

    fn image_diam(&self, img: &Self::Image) -> DiamBound<Dyadic> {
        DiamBound::exact(img.0.torus_diam().max(img.1.diam()))
    }

    fn image_hausdorff(
        &self,
        a: &Self::Image,
        b: &Self::Image,
    ) -> Result<DiamBound<Dyadic>, SystemError> {
        let torus = self.base.image_hausdorff(&a.0, &b.0)?;
        Ok(max_bound(torus, a.1.hausdorff(&b.1)))
    }

    fn image_hausdorff_estimate(
        &self,
        a: &Self::Image,
        b: &Self::Image,
    ) -> Result<f64, SystemError> {
        let torus = self.base.image_hausdorff_estimate(&a.0, &b.0)?;
        Ok(torus.max(a.1.hausdorff(&b.1).mid().to_f64()))
    }

    fn image_contains(&self, img: &Self::Image, p: &Self::Point) -> bool {
        img.0.contains([p.0.coords[0], p.0.coords[1]], 1e-9) && img.1.contains(p.1)
    }

    fn backward_lipschitz(&self) -> f64 {
        self.base.backward_lipschitz()
    }

    fn point_dist_f64(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        torus_dist(&a.0, &b.0).max(circle_dist(a.1, b.1))
    }

    fn grid_position(&self, p: &Self::Point) -> Option<[f64; 2]> {
        Some([p.0.coords[0], p.0.coords[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_distance_is_sup_of_components() {
        let s = ShiftCrossRotation::new(
            ShiftSystem::new(Dyadic::from_ratio(1, 3)).unwrap(),
            RotationAngle::Sqrt2Minus1,
        );
        let mut hx = HilbertPoint::half();
        hx.set(0, Dyadic::from_ratio(3, 2));
        let a = (hx.clone(), 0.125);
        let b = (HilbertPoint::half(), 0.25);
        let d = s.point_dist(&a, &b);
        let dh = hilbert_dist(&a.0, &b.0);
        let dc = Dyadic::from_f64(circle_dist(0.125, 0.25)).unwrap();
        assert_eq!(d, dh.max(dc));
    }

    #[test]
    fn rotation_preserves_arc_diameter() {
        let s = ShiftCrossRotation::new(
            ShiftSystem::new(Dyadic::from_ratio(1, 3)).unwrap(),
            RotationAngle::Sqrt2Minus1,
        );
        let x = (HilbertPoint::half(), 0.3);
        let r = Dyadic::from_ratio(1, 6);
        let img = s.ball(&x, &r).unwrap();
        let d0 = img.1.diam();
        let moved = s.step_image(&img, 11).unwrap();
        assert_eq!(moved.1.diam(), d0);
    }

    #[test]
    fn identity_factor_keeps_slice() {
        let s = CatCrossIdentity::new(TorusLinearSystem::cat());
        let x = (TorusPoint::new2(0.1, 0.9), 0.625);
        let y = s.forward_point(&x, 13).unwrap();
        assert_eq!(y.1, 0.625);
    }
}
