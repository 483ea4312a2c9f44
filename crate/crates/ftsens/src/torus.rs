//! Torus points, the sup-metric with wrap handling, integer unimodular
//! matrices, and exact parallelotope images of sup-metric balls.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;

/// Point of a torus, coordinates in [0,1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        TorusPoint { coords: coords.into_iter().map(wrap01).collect() }
    }

    pub fn new2(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

pub fn wrap01(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Circle distance `min(|a-b|, 1-|a-b|)`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (wrap01(a) - wrap01(b)).abs();
    d.min(1.0 - d)
}

/// Sup-metric torus distance.
pub fn torus_dist(a: &TorusPoint, b: &TorusPoint) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| circle_dist(*x, *y))
        .fold(0.0, f64::max)
}

/// 2x2 integer matrix with arbitrary-precision entries (powers of the
/// toral automorphism stay exact at any iterate).
#[derive(Clone, Debug, PartialEq)]
pub struct IntMat2 {
    pub m: [[BigInt; 2]; 2],
}

impl IntMat2 {
    pub fn from_i64(m: [[i64; 2]; 2]) -> Self {
        IntMat2 {
            m: [
                [BigInt::from(m[0][0]), BigInt::from(m[0][1])],
                [BigInt::from(m[1][0]), BigInt::from(m[1][1])],
            ],
        }
    }

    pub fn identity() -> Self {
        Self::from_i64([[1, 0], [0, 1]])
    }

    pub fn det(&self) -> BigInt {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let e = |r: usize, c: usize| {
            &self.m[r][0] * &other.m[0][c] + &self.m[r][1] * &other.m[1][c]
        };
        IntMat2 { m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]] }
    }

    /// Inverse of a unimodular matrix (|det| = 1), still integral.
    pub fn inverse_unimodular(&self) -> Self {
        let d = self.det();
        assert!(d.abs() == BigInt::from(1), "matrix is not unimodular");
        let s = d; // 1 or -1
        IntMat2 {
            m: [
                [&self.m[1][1] * &s, -(&self.m[0][1]) * &s],
                [-(&self.m[1][0]) * &s, &self.m[0][0] * &s],
            ],
        }
    }

    pub fn apply_f64(&self, v: [f64; 2]) -> [f64; 2] {
        let g = |r: usize| {
            self.m[r][0].to_f64().unwrap() * v[0] + self.m[r][1].to_f64().unwrap() * v[1]
        };
        [g(0), g(1)]
    }

    pub fn apply_dyadic(&self, v: [&Dyadic; 2]) -> [Dyadic; 2] {
        let g = |r: usize| {
            &(&Dyadic::from_bigint(self.m[r][0].clone(), 0) * v[0])
                + &(&Dyadic::from_bigint(self.m[r][1].clone(), 0) * v[1])
        };
        [g(0), g(1)]
    }

    /// Dominant eigenvalue (for |det| = 1 hyperbolic matrices).
    pub fn dominant_eigenvalue(&self) -> f64 {
        let tr = self.m[0][0].to_f64().unwrap() + self.m[1][1].to_f64().unwrap();
        let det = self.det().to_f64().unwrap();
        (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
    }

    /// Unit eigenvector of the dominant eigenvalue.
    pub fn unstable_direction(&self) -> [f64; 2] {
        let lambda = self.dominant_eigenvalue();
        let a = self.m[0][0].to_f64().unwrap();
        let b = self.m[0][1].to_f64().unwrap();
        let v = if b.abs() > 1e-12 { [b, lambda - a] } else { [1.0, 0.0] };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    }
}

/// Image of a sup-metric square ball under an integer linear map,
/// tracked in the universal cover. The generators are exact, so cover
/// extents and diameters are exact dyadics.
#[derive(Clone, Debug)]
pub struct Parallelotope {
    /// cover representative of the image of the center
    pub center: [f64; 2],
    /// image of (r, 0)
    pub gen_a: [Dyadic; 2],
    /// image of (0, r)
    pub gen_b: [Dyadic; 2],
}

impl Parallelotope {
    pub fn ball(center: [f64; 2], r: &Dyadic) -> Self {
        Parallelotope {
            center,
            gen_a: [r.clone(), Dyadic::zero()],
            gen_b: [Dyadic::zero(), r.clone()],
        }
    }

    pub fn apply(&self, m: &IntMat2) -> Self {
        Parallelotope {
            center: m.apply_f64(self.center),
            gen_a: m.apply_dyadic([&self.gen_a[0], &self.gen_a[1]]),
            gen_b: m.apply_dyadic([&self.gen_b[0], &self.gen_b[1]]),
        }
    }

    /// Extent of the cover projection onto coordinate `c`.
    pub fn cover_extent(&self, c: usize) -> Dyadic {
        (self.gen_a[c].abs() + self.gen_b[c].abs()).ldexp(1)
    }

    /// Cover diameter in the sup metric.
    pub fn cover_diam(&self) -> Dyadic {
        self.cover_extent(0).max(self.cover_extent(1))
    }

    /// Exact torus diameter: equal to the cover diameter below the wrap
    /// threshold 1/2, and exactly 1/2 (the diameter of the torus in the
    /// sup metric) once any cover chord reaches it: a connected set with
    /// a coordinate extent >= 1/2 contains two points at circle distance
    /// exactly 1/2 in that coordinate.
    pub fn torus_diam(&self) -> Dyadic {
        self.cover_diam().min(Dyadic::half())
    }

    /// Covering radius of the `sample(per_axis)` grid (sup metric).
    pub fn sample_dispersion(&self, per_axis: usize) -> f64 {
        let ext = self.cover_diam().to_f64();
        ext / (per_axis - 1) as f64
    }

    /// Membership in the cover, padded by `slack`, scanning the lattice
    /// translates the set can reach.
    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        let ga = [self.gen_a[0].to_f64(), self.gen_a[1].to_f64()];
        let gb = [self.gen_b[0].to_f64(), self.gen_b[1].to_f64()];
        let det = ga[0] * gb[1] - ga[1] * gb[0];
        if det.abs() < 1e-300 {
            return false;
        }
        let reach = self.cover_diam().to_f64().ceil() as i64 + 1;
        let base = [p[0] - self.center[0], p[1] - self.center[1]];
        for i in -reach..=reach {
            for j in -reach..=reach {
                let d = [base[0] + i as f64, base[1] + j as f64];
                let s = (d[0] * gb[1] - d[1] * gb[0]) / det;
                let t = (ga[0] * d[1] - ga[1] * d[0]) / det;
                if s.abs() <= 1.0 + slack && t.abs() <= 1.0 + slack {
                    return true;
                }
            }
        }
        false
    }

    /// Deterministic sample of the parallelotope (grid in parameter
    /// space), wrapped to the torus.
    pub fn sample(&self, per_axis: usize) -> Vec<[f64; 2]> {
        let ga = [self.gen_a[0].to_f64(), self.gen_a[1].to_f64()];
        let gb = [self.gen_b[0].to_f64(), self.gen_b[1].to_f64()];
        let mut out = Vec::with_capacity(per_axis * per_axis);
        for s in 0..per_axis {
            for t in 0..per_axis {
                let u = 2.0 * (s as f64 / (per_axis - 1) as f64) - 1.0;
                let v = 2.0 * (t as f64 / (per_axis - 1) as f64) - 1.0;
                out.push([
                    wrap01(self.center[0] + u * ga[0] + v * gb[0]),
                    wrap01(self.center[1] + u * ga[1] + v * gb[1]),
                ]);
            }
        }
        out
    }
}

/// Hausdorff distance between finite point sets in the torus sup
/// metric.
pub fn cloud_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let dist = |p: &[f64; 2], q: &[f64; 2]| {
        circle_dist(p[0], q[0]).max(circle_dist(p[1], q[1]))
    };
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Circular diameter of a set of scalars mod 1 (max pairwise circle
/// distance), O(n log n): the farthest partner of a point is a circular
/// neighbor of its antipode in the sorted order.
pub fn circular_diameter(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut v: Vec<f64> = values.iter().map(|x| wrap01(*x)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let mut best = 0.0f64;
    for i in 0..n {
        let target = wrap01(v[i] + 0.5);
        let pos = v.partition_point(|x| *x < target);
        for cand in [(pos + n - 1) % n, pos % n, (pos + 1) % n] {
            best = best.max(circle_dist(v[i], v[cand]));
        }
    }
    best
}
