//! The bilateral shift on the Hilbert cube `[0,1]^Z`, the bit-exact
//! oracle path of the crate.

use crate::boxes::BoxContinuum;
use crate::dyadic::Dyadic;
use crate::error::SystemError;
use crate::hilbert::{hilbert_dist, HilbertPoint};
use crate::systems::{DiamBound, Dynamics};

/// `sigma(x)_i = x_{i+1}` with the weighted sup-metric.
#[derive(Clone, Debug)]
pub struct ShiftSystem {
    /// sensitivity constant; any value below 1/4 works
    pub epsilon: Dyadic,
}

impl ShiftSystem {
    pub fn new(epsilon: Dyadic) -> Result<Self, SystemError> {
        if epsilon.sign() <= 0 || epsilon >= Dyadic::from_ratio(1, 2) {
            return Err(SystemError::BadConfig(format!(
                "shift sensitivity constant must be in (0, 1/4), got {epsilon}"
            )));
        }
        Ok(ShiftSystem { epsilon })
    }

    /// `k_gamma` defined by `eps/2^{k+1} <= gamma < eps/2^k`.
    pub fn k_gamma(&self, gamma: &Dyadic) -> u64 {
        assert!(gamma.sign() > 0 && *gamma <= self.epsilon);
        let mut k = 0u64;
        while self.epsilon.ldexp(-(k as i64 + 1)) > *gamma {
            k += 1;
        }
        k
    }

    /// The jump-bound constant `m_gamma = k_gamma + 2` of the shift.
    pub fn m_gamma(&self, gamma: &Dyadic) -> u64 {
        self.k_gamma(gamma) + 2
    }
}

impl Dynamics for ShiftSystem {
    type Point = HilbertPoint;
    type Image = BoxContinuum;
    type Value = Dyadic;

    fn system_id(&self) -> String {
        format!("shift(eps={})", self.epsilon)
    }

    fn space_diam(&self) -> Dyadic {
        Dyadic::one()
    }

    fn radius_bound(&self) -> Dyadic {
        Dyadic::one()
    }

    fn forward_point(&self, x: &HilbertPoint, steps: i64) -> Result<HilbertPoint, SystemError> {
        Ok(x.shift(steps))
    }

    fn point_dist(&self, a: &HilbertPoint, b: &HilbertPoint) -> Dyadic {
        hilbert_dist(a, b)
    }

    fn ball_at_level(
        &self,
        x: &HilbertPoint,
        r: &Dyadic,
        _level: u32,
    ) -> Result<BoxContinuum, SystemError> {
        self.check_radius(r)?;
        Ok(BoxContinuum::ball(x, r))
    }

    fn step_image(&self, img: &BoxContinuum, steps: i64) -> Result<BoxContinuum, SystemError> {
        Ok(img.shift(steps))
    }

    fn image_diam(&self, img: &BoxContinuum) -> DiamBound<Dyadic> {
        DiamBound::exact(img.diam())
    }

    fn image_hausdorff(
        &self,
        a: &BoxContinuum,
        b: &BoxContinuum,
    ) -> Result<DiamBound<Dyadic>, SystemError> {
        Ok(DiamBound::exact(a.hausdorff(b)?))
    }

    fn image_contains(&self, img: &BoxContinuum, p: &HilbertPoint) -> bool {
        img.contains_point(p)
    }

    fn backward_lipschitz(&self) -> f64 {
        // d(sigma^{-1} x, sigma^{-1} y) <= 2 d(x, y)
        2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> ShiftSystem {
        ShiftSystem::new(Dyadic::from_ratio(1, 3)).unwrap()
    }

    #[test]
    fn forward_backward_roundtrip() {
        let s = sys();
        let mut x = HilbertPoint::half();
        x.set(0, Dyadic::from_ratio(1, 2));
        x.set(-3, Dyadic::one());
        let y = s.forward_point(&x, 7).unwrap();
        assert_eq!(s.forward_point(&y, -7).unwrap(), x);
        assert_eq!(s.forward_point(&x, 0).unwrap(), x);
    }

    #[test]
    fn ball_image_commutes_with_stepping() {
        let s = sys();
        let x = HilbertPoint::half();
        let r = Dyadic::from_ratio(1, 6);
        for j in 0..6i64 {
            let a = s.ball_image(&x, &r, j + 1).unwrap();
            let b = s.step_image(&s.ball_image(&x, &r, j).unwrap(), 1).unwrap();
            assert_eq!(s.image_diam(&a).lo, s.image_diam(&b).lo);
        }
    }

    #[test]
    fn k_gamma_brackets() {
        let s = sys();
        assert_eq!(s.k_gamma(&Dyadic::from_ratio(1, 4)), 0); // eps/2
        assert_eq!(s.k_gamma(&Dyadic::from_ratio(1, 5)), 1); // eps/4
        assert_eq!(s.k_gamma(&Dyadic::from_ratio(1, 6)), 2); // eps/8
        assert_eq!(s.k_gamma(&s.epsilon), 0);
        // a gamma strictly between grid points
        assert_eq!(s.k_gamma(&Dyadic::from_ratio(3, 6)), 1); // 3/64 in [eps/4, eps/2)
        assert_eq!(s.m_gamma(&Dyadic::from_ratio(1, 5)), 3);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(ShiftSystem::new(Dyadic::from_ratio(1, 2)).is_err());
        assert!(ShiftSystem::new(Dyadic::zero()).is_err());
    }
}
