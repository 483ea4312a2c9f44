//! Linear hyperbolic automorphisms of the 2-torus. Matrix powers are
//! exact integers, so ball-image diameters (parallelotopes in the
//! universal cover) are exact dyadics.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::dyadic::Dyadic;
use crate::error::SystemError;
use crate::systems::{DiamBound, Dynamics};
use crate::torus::{torus_dist, wrap01, IntMat2, Parallelotope, TorusPoint};

#[derive(Clone, Debug)]
pub struct TorusLinearSystem {
    pub matrix: IntMat2,
    inverse: IntMat2,
}

impl TorusLinearSystem {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self, SystemError> {
        let m = IntMat2::from_i64(matrix);
        if m.det().abs() != BigInt::from(1) {
            return Err(SystemError::BadConfig("matrix must be unimodular".into()));
        }
        if m.dominant_eigenvalue() <= 1.0 {
            return Err(SystemError::BadConfig(
                "matrix must have a real eigenvalue above 1".into(),
            ));
        }
        let inverse = m.inverse_unimodular();
        Ok(TorusLinearSystem { matrix: m, inverse })
    }

    pub fn cat() -> Self {
        Self::new([[2, 1], [1, 1]]).unwrap()
    }

    pub fn eigenvalue(&self) -> f64 {
        self.matrix.dominant_eigenvalue()
    }

    fn power(&self, steps: i64) -> IntMat2 {
        let base = if steps >= 0 { self.matrix.clone() } else { self.inverse.clone() };
        let mut acc = IntMat2::identity();
        for _ in 0..steps.unsigned_abs() {
            acc = base.mul(&acc);
        }
        acc
    }

    pub fn apply_point(&self, x: &TorusPoint, steps: i64) -> TorusPoint {
        let m = self.power(steps);
        let v = m.apply_f64([x.coords[0], x.coords[1]]);
        TorusPoint::new2(wrap01(v[0]), wrap01(v[1]))
    }
}

impl Dynamics for TorusLinearSystem {
    type Point = TorusPoint;
    type Image = Parallelotope;
    type Value = Dyadic;

    fn system_id(&self) -> String {
        let m = &self.matrix.m;
        format!("torus-linear[[{},{}],[{},{}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }

    fn space_diam(&self) -> Dyadic {
        Dyadic::half()
    }

    fn radius_bound(&self) -> Dyadic {
        // thresholds and radii stay below 1/4 so wrap saturation at 1/2
        // can never mask a first crossing
        Dyadic::from_ratio(1, 2)
    }

    fn forward_point(&self, x: &TorusPoint, steps: i64) -> Result<TorusPoint, SystemError> {
        Ok(self.apply_point(x, steps))
    }

    fn point_dist(&self, a: &TorusPoint, b: &TorusPoint) -> Dyadic {
        Dyadic::from_f64(torus_dist(a, b)).expect("finite")
    }

    fn ball_at_level(
        &self,
        x: &TorusPoint,
        r: &Dyadic,
        _level: u32,
    ) -> Result<Parallelotope, SystemError> {
        self.check_radius(r)?;
        Ok(Parallelotope::ball([x.coords[0], x.coords[1]], r))
    }

    fn step_image(&self, img: &Parallelotope, steps: i64) -> Result<Parallelotope, SystemError> {
        let m = self.power(steps);
        let mut out = img.apply(&m);
        out.center = [wrap01(out.center[0]), wrap01(out.center[1])];
        Ok(out)
    }

    fn image_diam(&self, img: &Parallelotope) -> DiamBound<Dyadic> {
        DiamBound::exact(img.torus_diam())
    }

    fn image_hausdorff(
        &self,
        a: &Parallelotope,
        b: &Parallelotope,
    ) -> Result<DiamBound<Dyadic>, SystemError> {
        let per_axis = 17;
        let d = crate::torus::cloud_hausdorff(&a.sample(per_axis), &b.sample(per_axis));
        let slack = a.sample_dispersion(per_axis) + b.sample_dispersion(per_axis);
        // the lower bound may dip below zero (trivially true); keeping
        // it unclamped makes the midpoint the raw cloud estimate
        let lo = Dyadic::from_f64(d - slack).expect("finite");
        let hi = Dyadic::from_f64((d + slack).min(0.5)).expect("finite");
        Ok(DiamBound { lo, hi })
    }

    fn image_hausdorff_estimate(
        &self,
        a: &Parallelotope,
        b: &Parallelotope,
    ) -> Result<f64, SystemError> {
        let per_axis = 17;
        Ok(crate::torus::cloud_hausdorff(&a.sample(per_axis), &b.sample(per_axis)))
    }

    fn image_contains(&self, img: &Parallelotope, p: &TorusPoint) -> bool {
        img.contains([p.coords[0], p.coords[1]], 1e-9)
    }

    fn backward_lipschitz(&self) -> f64 {
        let inv = &self.inverse.m;
        let row = |r: usize| {
            inv[r][0].abs().to_f64().unwrap_or(f64::INFINITY)
                + inv[r][1].abs().to_f64().unwrap_or(f64::INFINITY)
        };
        row(0).max(row(1))
    }

    fn point_dist_f64(&self, a: &TorusPoint, b: &TorusPoint) -> f64 {
        torus_dist(a, b)
    }

    fn grid_position(&self, p: &TorusPoint) -> Option<[f64; 2]> {
        Some([p.coords[0], p.coords[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_at_origin() {
        let s = TorusLinearSystem::cat();
        let o = TorusPoint::new2(0.0, 0.0);
        assert_eq!(s.forward_point(&o, 5).unwrap(), o);
    }

    #[test]
    fn hand_computed_step() {
        // A=[[2,1],[1,1]], x=(0.3,0.7) -> (1.3 mod 1, 1.0 mod 1) = (0.3, 0.0)
        let s = TorusLinearSystem::cat();
        let y = s.forward_point(&TorusPoint::new2(0.3, 0.7), 1).unwrap();
        assert!((y.coords[0] - 0.3).abs() < 1e-12);
        assert!(y.coords[1].abs() < 1e-12);
    }

    #[test]
    fn forward_backward_roundtrip() {
        let s = TorusLinearSystem::cat();
        let x = TorusPoint::new2(0.125, 0.8125); // dyadic coords stay exact in f64
        let y = s.forward_point(&x, 9).unwrap();
        let back = s.forward_point(&y, -9).unwrap();
        assert!(torus_dist(&x, &back) < 1e-12);
    }

    #[test]
    fn unstable_segment_growth_rates() {
        // along the unstable eigendirection the two-sided rate bound
        // collapses to d(f^n y, f^n z) = lambda_A^n d(y, z); d0 is small
        // enough that ten iterates stay below the wrap threshold 1/2
        let s = TorusLinearSystem::cat();
        let lambda = s.eigenvalue();
        let dir = s.matrix.unstable_direction();
        let d0 = 1e-5;
        let y = TorusPoint::new2(0.3, 0.55);
        let z = TorusPoint::new2(0.3 + d0 * dir[0], 0.55 + d0 * dir[1]);
        let base = torus_dist(&y, &z);
        for n in 1..=10i64 {
            let dn = torus_dist(
                &s.forward_point(&y, n).unwrap(),
                &s.forward_point(&z, n).unwrap(),
            );
            let expect = base * lambda.powi(n as i32);
            assert!(
                (dn - expect).abs() / expect < 1e-9,
                "n={n}: {dn} vs {expect}"
            );
        }
    }

    #[test]
    fn ball_image_diam_tracks_matrix_growth() {
        let s = TorusLinearSystem::cat();
        let r = Dyadic::from_ratio(1, 10);
        let x = TorusPoint::new2(0.4, 0.2);
        let lambda = s.eigenvalue();
        for j in 1..=6i64 {
            let img = s.ball_image(&x, &r, j).unwrap();
            let d = s.image_diam(&img).lo.to_f64();
            // cover diameter approximates 2 r lambda^j after alignment
            let approx = 2.0 * r.to_f64() * lambda.powi(j as i32);
            assert!(d > approx * 0.5 && d < approx * 2.0, "j={j}: {d} vs {approx}");
        }
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(TorusLinearSystem::new([[2, 0], [0, 2]]).is_err());
        assert!(TorusLinearSystem::new([[0, 1], [1, 0]]).is_err()); // no eigenvalue > 1
    }
}
