//! Points of the Hilbert cube `[0,1]^Z` and the weighted sup-metric
//! `d(x, y) = sup_i |x_i - y_i| / 2^{|i|}`.
//!
//! Points are finitely supported over a default fill value, so the sup
//! is attained in a finite, computable index range and every distance
//! is an exact dyadic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;

/// A point of `[0,1]^Z`: finitely many explicit coordinates over a
/// constant fill value. Default fill is 1/2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertPoint {
    window: BTreeMap<i64, Dyadic>,
    fill: Dyadic,
}

impl HilbertPoint {
    /// The constant-fill point (no explicit coordinates).
    pub fn constant(fill: Dyadic) -> Self {
        assert!(fill >= Dyadic::zero() && fill <= Dyadic::one());
        HilbertPoint { window: BTreeMap::new(), fill }
    }

    /// The constant-1/2 point, the default center in this crate.
    pub fn half() -> Self {
        Self::constant(Dyadic::half())
    }

    pub fn from_coords(coords: impl IntoIterator<Item = (i64, Dyadic)>, fill: Dyadic) -> Self {
        let mut p = Self::constant(fill);
        for (i, v) in coords {
            p.set(i, v);
        }
        p
    }

    pub fn set(&mut self, index: i64, value: Dyadic) {
        assert!(
            value >= Dyadic::zero() && value <= Dyadic::one(),
            "coordinate {value} outside [0,1]"
        );
        if value == self.fill {
            self.window.remove(&index);
        } else {
            self.window.insert(index, value);
        }
    }

    pub fn coord(&self, index: i64) -> &Dyadic {
        self.window.get(&index).unwrap_or(&self.fill)
    }

    pub fn fill(&self) -> &Dyadic {
        &self.fill
    }

    pub fn support(&self) -> impl Iterator<Item = (&i64, &Dyadic)> {
        self.window.iter()
    }

    /// Largest |i| carrying an explicit coordinate (0 when none).
    pub fn support_radius(&self) -> i64 {
        self.window.keys().map(|i| i.abs()).max().unwrap_or(0)
    }

    /// `sigma^steps`: `(sigma^j x)_i = x_{i+j}`, so explicit keys move by `-j`.
    pub fn shift(&self, steps: i64) -> Self {
        HilbertPoint {
            window: self.window.iter().map(|(i, v)| (i - steps, v.clone())).collect(),
            fill: self.fill.clone(),
        }
    }
}

/// Exact distance `sup_i |x_i - y_i| / 2^{|i|}`.
///
/// Beyond the union of supports both points equal their fills, and the
/// tail terms `|fx - fy| / 2^{|i|}` decrease in |i|, so the sup over the
/// tail is attained at the first tail index.
pub fn hilbert_dist(x: &HilbertPoint, y: &HilbertPoint) -> Dyadic {
    let radius = x.support_radius().max(y.support_radius());
    let mut best = Dyadic::zero();
    for i in -radius..=radius {
        let d = (x.coord(i) - y.coord(i)).abs().ldexp(-i.abs());
        if d > best {
            best = d;
        }
    }
    let tail = (x.fill() - y.fill()).abs().ldexp(-(radius + 1));
    best.max(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_points_at_distance_zero() {
        let x = HilbertPoint::half();
        assert_eq!(hilbert_dist(&x, &x), Dyadic::zero());
        let y = HilbertPoint::from_coords([(3, Dyadic::from_ratio(1, 2))], Dyadic::half());
        assert_eq!(hilbert_dist(&y, &y), Dyadic::zero());
    }

    #[test]
    fn single_coordinate_bump() {
        // x all-zero, y differing only at i0 by c = 1/4: d = c / 2^{|i0|}.
        let c = Dyadic::from_ratio(1, 2);
        for i0 in [-5i64, 0, 3] {
            let x = HilbertPoint::constant(Dyadic::zero());
            let y = HilbertPoint::from_coords([(i0, c.clone())], Dyadic::zero());
            assert_eq!(hilbert_dist(&x, &y), c.ldexp(-i0.abs()));
        }
    }

    #[test]
    fn differing_fills_use_first_tail_index() {
        let x = HilbertPoint::constant(Dyadic::zero());
        let mut y = HilbertPoint::constant(Dyadic::half());
        // pin the supported coordinates equal so only the tail differs
        for i in -2..=2 {
            y.set(i, Dyadic::zero());
        }
        // first index where they differ is |i| = 3
        assert_eq!(hilbert_dist(&x, &y), Dyadic::half().ldexp(-3));
    }

    /// Brute-force oracle: scan |i| <= radius+1 (the proof above shows
    /// nothing beyond the first tail index can matter).
    fn brute_dist(x: &HilbertPoint, y: &HilbertPoint, scan: i64) -> Dyadic {
        let mut best = Dyadic::zero();
        for i in -scan..=scan {
            let d = (x.coord(i) - y.coord(i)).abs().ldexp(-i.abs());
            best = best.max(d);
        }
        best
    }

    #[test]
    fn random_points_match_bruteforce() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut x = HilbertPoint::half();
            let mut y = HilbertPoint::half();
            for i in -8i64..=8 {
                if rng.random_bool(0.7) {
                    x.set(i, Dyadic::from_ratio(rng.random_range(0..=256), 8));
                }
                if rng.random_bool(0.7) {
                    y.set(i, Dyadic::from_ratio(rng.random_range(0..=256), 8));
                }
            }
            let d = hilbert_dist(&x, &y);
            assert_eq!(d, brute_dist(&x, &y, 9));
            // tail bound: everything past |i| = 9 is below 2^{-10}
            assert!(d >= brute_dist(&x, &y, 20));
        }
    }

    #[test]
    fn shift_moves_coordinates() {
        let x = HilbertPoint::from_coords([(2, Dyadic::one())], Dyadic::zero());
        let y = x.shift(2); // (sigma^2 x)_0 = x_2
        assert_eq!(*y.coord(0), Dyadic::one());
        assert_eq!(*y.coord(2), Dyadic::zero());
        assert_eq!(x.shift(3).shift(-3), x);
    }

    proptest! {
        #[test]
        fn metric_axioms(ix in -6i64..6, vx in 0i64..=64, iy in -6i64..6, vy in 0i64..=64,
                         iz in -6i64..6, vz in 0i64..=64) {
            let p = |i, v| HilbertPoint::from_coords([(i, Dyadic::from_ratio(v, 6))], Dyadic::half());
            let (x, y, z) = (p(ix, vx), p(iy, vy), p(iz, vz));
            let (dxy, dyx) = (hilbert_dist(&x, &y), hilbert_dist(&y, &x));
            prop_assert_eq!(&dxy, &dyx);
            prop_assert_eq!(dxy.is_zero(), x == y);
            let dxz = hilbert_dist(&x, &z);
            let dzy = hilbert_dist(&z, &y);
            prop_assert!(dxy <= &dxz + &dzy);
        }
    }
}
