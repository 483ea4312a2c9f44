//! Time-1 map of the slowed irrational flow on the 2-torus: the
//! constant direction field F = (1, sqrt(2)-1) multiplied by a smooth
//! speed g >= 0 vanishing at a single point p. Sensitive but not
//! first-time sensitive; everything on this path is sampled and the
//! outputs carry two-sided bounds, not exact values.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::SystemError;
use crate::systems::{DiamBound, Dynamics};
use crate::torus::{circular_diameter, torus_dist, wrap01, TorusPoint};

/// Forward image of a ball as a deterministic sample with a propagated
/// dispersion bound (covering radius estimate for the true image).
#[derive(Clone, Debug)]
pub struct PointCloud {
    pub points: Vec<[f64; 2]>,
    pub dispersion: f64,
    pub level: u32,
}

#[derive(Debug)]
pub struct SlowedFlow {
    /// zero of the speed function
    pub p: [f64; 2],
    /// direction field slope, stored as sqrt(2)-1
    pub alpha: f64,
    /// RK4 step for one time unit
    pub h: f64,
    /// per-axis sample count of a level-0 ball
    pub samples_per_axis: usize,
    cache: RwLock<HashMap<(u64, u64, i8), [f64; 2]>>,
}

impl Clone for SlowedFlow {
    fn clone(&self) -> Self {
        SlowedFlow {
            p: self.p,
            alpha: self.alpha,
            h: self.h,
            samples_per_axis: self.samples_per_axis,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl SlowedFlow {
    pub fn new(p: [f64; 2], h: f64, samples: usize) -> Result<Self, SystemError> {
        if !(h > 0.0 && h <= 0.1) {
            return Err(SystemError::BadConfig(format!("bad integrator step {h}")));
        }
        let flow = SlowedFlow {
            p: [wrap01(p[0]), wrap01(p[1])],
            alpha: std::f64::consts::SQRT_2 - 1.0,
            h,
            samples_per_axis: (samples as f64).sqrt().ceil().max(4.0) as usize,
            cache: RwLock::new(HashMap::new()),
        };
        flow.validate_speed_zero()?;
        flow.richardson_check()?;
        Ok(flow)
    }

    pub fn default_flow() -> Self {
        Self::new([0.5, 0.5], 1e-3, 512).unwrap()
    }

    /// g(q) = sin^2(pi (q0 - p0)) + sin^2(pi (q1 - p1)); non-negative
    /// with a unique zero at p on the torus.
    pub fn speed(&self, q: [f64; 2]) -> f64 {
        let s0 = (std::f64::consts::PI * (q[0] - self.p[0])).sin();
        let s1 = (std::f64::consts::PI * (q[1] - self.p[1])).sin();
        s0 * s0 + s1 * s1
    }

    fn field(&self, q: [f64; 2], direction: f64) -> [f64; 2] {
        let g = self.speed(q) * direction;
        [g, g * self.alpha]
    }

    fn validate_speed_zero(&self) -> Result<(), SystemError> {
        let n = 101;
        for i in 0..n {
            for j in 0..n {
                let q = [i as f64 / n as f64, j as f64 / n as f64];
                let g = self.speed(q);
                if g < 0.0 {
                    return Err(SystemError::BadConfig("speed went negative".into()));
                }
                let d = torus_dist(&TorusPoint::new2(q[0], q[1]), &TorusPoint::new2(self.p[0], self.p[1]));
                if d > 0.02 && g <= 0.0 {
                    return Err(SystemError::BadConfig(format!(
                        "speed vanishes away from p at ({}, {})",
                        q[0], q[1]
                    )));
                }
            }
        }
        if self.speed(self.p) != 0.0 {
            return Err(SystemError::BadConfig("speed does not vanish at p".into()));
        }
        Ok(())
    }

    fn richardson_check(&self) -> Result<(), SystemError> {
        // RK4 global error scales like h^4; anything far above that
        // signals a broken step or a non-smooth field
        let tol = (1e3 * self.h.powi(4)).max(1e-12);
        for q in [[0.1, 0.3], [0.7, 0.2], [0.45, 0.55]] {
            let full = self.integrate_unit(q, 1.0, self.h);
            let half = self.integrate_unit(q, 1.0, self.h / 2.0);
            let err = (full[0] - half[0]).abs().max((full[1] - half[1]).abs());
            if err > tol {
                return Err(SystemError::IntegratorDivergence(format!(
                    "step-halving residual {err:.3e} at ({}, {}) exceeds {tol:.3e}",
                    q[0], q[1]
                )));
            }
        }
        Ok(())
    }

    /// One time unit of the lifted flow by classical RK4 (direction
    /// +1/-1). The field is 1-periodic, so integrating unwrapped
    /// coordinates is exactly the flow in the universal cover.
    fn integrate_unit_lifted(&self, mut q: [f64; 2], direction: f64, h: f64) -> [f64; 2] {
        let steps = (1.0 / h).ceil() as usize;
        let h = 1.0 / steps as f64;
        for _ in 0..steps {
            let k1 = self.field(q, direction);
            let k2 = self.field([q[0] + 0.5 * h * k1[0], q[1] + 0.5 * h * k1[1]], direction);
            let k3 = self.field([q[0] + 0.5 * h * k2[0], q[1] + 0.5 * h * k2[1]], direction);
            let k4 = self.field([q[0] + h * k3[0], q[1] + h * k3[1]], direction);
            q[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            q[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        q
    }

    fn integrate_unit(&self, q: [f64; 2], direction: f64, h: f64) -> [f64; 2] {
        let out = self.integrate_unit_lifted(q, direction, h);
        [wrap01(out[0]), wrap01(out[1])]
    }

    /// Cached time-1 map (and its inverse).
    pub fn time1(&self, q: [f64; 2], direction: i8) -> [f64; 2] {
        let key = (q[0].to_bits(), q[1].to_bits(), direction);
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return *hit;
        }
        let out = self.integrate_unit(q, direction as f64, self.h);
        self.cache.write().unwrap().insert(key, out);
        out
    }

    /// A point whose forward orbit enters the slow zone: start a little
    /// behind p along the incoming direction and flow backward for
    /// `t_back` time units.
    pub fn stable_orbit_point(&self, offset: f64, t_back: f64) -> TorusPoint {
        let norm = (1.0 + self.alpha * self.alpha).sqrt();
        let q = [
            wrap01(self.p[0] - offset / norm),
            wrap01(self.p[1] - offset * self.alpha / norm),
        ];
        let steps = t_back.ceil() as i64;
        let mut x = q;
        for _ in 0..steps {
            x = self.time1(x, -1);
        }
        TorusPoint::new2(x[0], x[1])
    }

    /// Local stretch factor of the time-1 map around `q` by finite
    /// differences in the cover (sup-norm induced estimate).
    fn local_stretch(&self, q: [f64; 2], direction: i8) -> f64 {
        let eta = 1e-7;
        let f0 = self.integrate_unit_lifted(q, direction as f64, self.h);
        let fx = self.integrate_unit_lifted([q[0] + eta, q[1]], direction as f64, self.h);
        let fy = self.integrate_unit_lifted([q[0], q[1] + eta], direction as f64, self.h);
        let row0 = ((fx[0] - f0[0]).abs() + (fy[0] - f0[0]).abs()) / eta;
        let row1 = ((fx[1] - f0[1]).abs() + (fy[1] - f0[1]).abs()) / eta;
        row0.max(row1).max(1e-3)
    }
}

impl Dynamics for SlowedFlow {
    type Point = TorusPoint;
    type Image = PointCloud;
    type Value = f64;

    fn system_id(&self) -> String {
        format!("slowed-flow(p=({}, {}), h={})", self.p[0], self.p[1], self.h)
    }

    fn space_diam(&self) -> f64 {
        0.5
    }

    fn radius_bound(&self) -> f64 {
        0.25
    }

    fn forward_point(&self, x: &TorusPoint, steps: i64) -> Result<TorusPoint, SystemError> {
        let dir: i8 = if steps >= 0 { 1 } else { -1 };
        let mut q = [x.coords[0], x.coords[1]];
        for _ in 0..steps.unsigned_abs() {
            q = self.time1(q, dir);
        }
        Ok(TorusPoint::new2(q[0], q[1]))
    }

    fn point_dist(&self, a: &TorusPoint, b: &TorusPoint) -> f64 {
        torus_dist(a, b)
    }

    fn ball_at_level(
        &self,
        x: &TorusPoint,
        r: &f64,
        level: u32,
    ) -> Result<PointCloud, SystemError> {
        self.check_radius(r)?;
        let m = self.samples_per_axis << level;
        let mut points = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let u = 2.0 * (i as f64 / (m - 1) as f64) - 1.0;
                let v = 2.0 * (j as f64 / (m - 1) as f64) - 1.0;
                points.push([wrap01(x.coords[0] + u * r), wrap01(x.coords[1] + v * r)]);
            }
        }
        Ok(PointCloud { points, dispersion: r / (m - 1) as f64, level })
    }

    fn step_image(&self, img: &PointCloud, steps: i64) -> Result<PointCloud, SystemError> {
        let dir: i8 = if steps >= 0 { 1 } else { -1 };
        let mut out = img.clone();
        for _ in 0..steps.unsigned_abs() {
            // probe a few cloud points for the local stretch before
            // moving everything one unit
            let probes = [
                out.points[0],
                out.points[out.points.len() / 2],
                out.points[out.points.len() - 1],
            ];
            let stretch = probes
                .iter()
                .map(|q| self.local_stretch(*q, dir))
                .fold(1.0f64, f64::max);
            for q in &mut out.points {
                *q = self.integrate_unit(*q, dir as f64, self.h);
            }
            out.dispersion = (out.dispersion * stretch).min(0.5);
        }
        Ok(out)
    }

    fn image_diam(&self, img: &PointCloud) -> DiamBound<f64> {
        // sup metric splits per coordinate: the sample diameter is the
        // max circular diameter of the coordinate projections
        let xs: Vec<f64> = img.points.iter().map(|q| q[0]).collect();
        let ys: Vec<f64> = img.points.iter().map(|q| q[1]).collect();
        let lo = circular_diameter(&xs).max(circular_diameter(&ys));
        DiamBound { lo, hi: (lo + 2.0 * img.dispersion).min(0.5) }
    }

    fn max_level(&self) -> u32 {
        2
    }

    fn image_hausdorff(
        &self,
        a: &PointCloud,
        b: &PointCloud,
    ) -> Result<DiamBound<f64>, SystemError> {
        let d = crate::torus::cloud_hausdorff(&a.points, &b.points);
        let slack = a.dispersion + b.dispersion;
        // unclamped lower bound keeps the midpoint at the raw estimate
        Ok(DiamBound { lo: d - slack, hi: (d + slack).min(0.5) })
    }

    fn image_hausdorff_estimate(
        &self,
        a: &PointCloud,
        b: &PointCloud,
    ) -> Result<f64, SystemError> {
        Ok(crate::torus::cloud_hausdorff(&a.points, &b.points))
    }

    fn image_contains(&self, img: &PointCloud, p: &TorusPoint) -> bool {
        let q = [p.coords[0], p.coords[1]];
        img.points
            .iter()
            .any(|s| crate::torus::circle_dist(s[0], q[0]).max(crate::torus::circle_dist(s[1], q[1])) <= img.dispersion + 1e-9)
    }

    fn backward_lipschitz(&self) -> f64 {
        // coarse global bound: exp of the sup norm of the field Jacobian
        (2.0 * std::f64::consts::PI * (1.0 + self.alpha)).exp()
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

    fn flow() -> SlowedFlow {
        // coarser step keeps unit tests quick; accuracy is rechecked by
        // the Richardson validation inside the constructor
        SlowedFlow::new([0.5, 0.5], 0.01, 64).unwrap()
    }

    #[test]
    fn fixed_point_stays_fixed() {
        let f = flow();
        let p = TorusPoint::new2(0.5, 0.5);
        for k in [1i64, 10, 100] {
            let q = f.forward_point(&p, k).unwrap();
            assert!(torus_dist(&p, &q) < 1e-9, "k={k}");
        }
    }

    #[test]
    fn orbit_stays_on_direction_line() {
        // gF is parallel to F everywhere, so every RK4 increment lies on
        // the line of slope alpha through the start (up to roundoff)
        let f = flow();
        let x0 = [0.1, 0.2];
        let mut q = x0;
        for _ in 0..100 {
            q = f.integrate_unit_lifted(q, 1.0, f.h);
        }
        let travel = [q[0] - x0[0], q[1] - x0[1]];
        assert!((travel[1] - f.alpha * travel[0]).abs() < 1e-9);
    }

    #[test]
    fn forward_backward_roundtrip_within_tolerance() {
        let f = flow();
        let x = TorusPoint::new2(0.3, 0.8);
        let y = f.forward_point(&x, 5).unwrap();
        let back = f.forward_point(&y, -5).unwrap();
        assert!(torus_dist(&x, &back) < 1e-8);
    }

    #[test]
    fn cloud_diam_bounds_bracket_refined_estimate() {
        let f = flow();
        let x = TorusPoint::new2(0.2, 0.6);
        let r = 0.01;
        let coarse = f.step_image(&f.ball_at_level(&x, &r, 0).unwrap(), 3).unwrap();
        let fine = f.step_image(&f.ball_at_level(&x, &r, 1).unwrap(), 3).unwrap();
        let cb = f.image_diam(&coarse);
        let fb = f.image_diam(&fine);
        // the 4x-density estimate must fall inside the coarse bounds
        assert!(fb.lo >= cb.lo - 1e-12);
        assert!(fb.lo <= cb.hi + 1e-12);
    }

    #[test]
    fn stable_orbit_point_approaches_p() {
        let f = flow();
        let x = f.stable_orbit_point(0.05, 8.0);
        let p = TorusPoint::new2(0.5, 0.5);
        let d0 = torus_dist(&x, &p);
        let mut best = d0;
        let mut q = x.clone();
        for _ in 0..40 {
            q = f.forward_point(&q, 1).unwrap();
            best = best.min(torus_dist(&q, &p));
        }
        assert!(best < d0 * 0.9, "orbit should close in on p: {best} vs {d0}");
    }
}
