//! First-increasing times of balls and continua.
//!
//! `n1(x, r, t)` is the least forward iterate at which the ball
//! `B(x, r)` has diameter strictly above `t`; ties (diameter equal to
//! the threshold) do not trigger. Exact systems decide every comparison
//! outright; sampled systems carry two-sided bounds and escalate the
//! sampling level when a bound straddles the threshold.

use serde::Serialize;

use crate::error::FirstTimeError;
use crate::systems::{Crossing, DiamBound, DiamValue, Dynamics};

/// Hard cap on any first-increase search.
pub const BUDGET_CAP: u64 = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct FirstTimeRecord<V> {
    pub system_id: String,
    pub radius: Option<V>,
    pub threshold: V,
    pub n1: u64,
    /// diameters at steps 0..=n1
    pub diam_trace: Vec<(u64, DiamBound<V>)>,
    pub budget_used: u64,
    pub escalations: u32,
    /// true when an enclosure still straddled the threshold at the
    /// highest sampling level and the midpoint decided
    pub decided_statistically: bool,
}

/// Default budget: ten times the expected first-increase time for a
/// radius at scale `r` against threshold `t` under doubling growth.
pub fn default_budget(r: f64, t: f64) -> u64 {
    let expected = (t / r).max(2.0).log2().ceil() as u64 + 2;
    (10 * expected).clamp(16, BUDGET_CAP)
}

struct Search<'a, S: Dynamics> {
    sys: &'a S,
    threshold: &'a S::Value,
    budget: u64,
}

impl<'a, S: Dynamics> Search<'a, S> {
    /// Walk forward until the diameter strictly exceeds the threshold.
    /// `rebuild(level)` produces the step-0 image at a sampling level;
    /// an uncertain comparison restarts the walk one level denser.
    fn run(
        &self,
        rebuild: &dyn Fn(u32) -> Result<S::Image, FirstTimeError>,
    ) -> Result<(u64, Vec<(u64, DiamBound<S::Value>)>, u32, bool), FirstTimeError> {
        let mut level = 0u32;
        'levels: loop {
            let mut img = rebuild(level)?;
            let mut trace: Vec<(u64, DiamBound<S::Value>)> = Vec::new();
            let mut statistical = false;
            let mut j = 0u64;
            loop {
                let bound = self.sys.image_diam(&img);
                match bound.crossing(self.threshold) {
                    Crossing::Above => {
                        trace.push((j, bound));
                        return Ok((j, trace, level, statistical));
                    }
                    Crossing::AtOrBelow => {
                        trace.push((j, bound));
                    }
                    Crossing::Uncertain => {
                        if level < self.sys.max_level() {
                            level += 1;
                            continue 'levels;
                        }
                        // highest level: decide on the midpoint, flagged
                        statistical = true;
                        let above = bound.mid() > *self.threshold;
                        trace.push((j, bound));
                        if above {
                            return Ok((j, trace, level, true));
                        }
                    }
                }
                if j >= self.budget {
                    return Err(FirstTimeError::NotIncreasedWithinBudget {
                        budget: self.budget,
                    });
                }
                img = self.sys.step_image(&img, 1)?;
                j += 1;
            }
        }
    }
}

/// First increasing time of the ball `B(x, r)` with respect to
/// `threshold`.
pub fn first_increase<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    r: &S::Value,
    threshold: &S::Value,
    budget: u64,
) -> Result<FirstTimeRecord<S::Value>, FirstTimeError> {
    check_threshold(sys, threshold);
    let budget = budget.min(BUDGET_CAP);
    let search = Search { sys, threshold, budget };
    let (n1, trace, level, statistical) =
        search.run(&|level| sys.ball_at_level(x, r, level).map_err(Into::into))?;
    Ok(FirstTimeRecord {
        system_id: sys.system_id(),
        radius: Some(r.clone()),
        threshold: threshold.clone(),
        n1,
        diam_trace: trace,
        budget_used: n1,
        escalations: level,
        decided_statistically: statistical,
    })
}

/// First increasing time of an arbitrary representable set.
pub fn continuum_first_increase<S: Dynamics>(
    sys: &S,
    set: &S::Image,
    threshold: &S::Value,
    budget: u64,
) -> Result<FirstTimeRecord<S::Value>, FirstTimeError> {
    check_threshold(sys, threshold);
    let budget = budget.min(BUDGET_CAP);
    let search = Search { sys, threshold, budget };
    let (n1, trace, level, statistical) = search.run(&|_level| Ok(set.clone()))?;
    Ok(FirstTimeRecord {
        system_id: sys.system_id(),
        radius: None,
        threshold: threshold.clone(),
        n1,
        diam_trace: trace,
        budget_used: n1,
        escalations: level,
        decided_statistically: statistical,
    })
}

fn check_threshold<S: Dynamics>(sys: &S, threshold: &S::Value) {
    assert!(
        *threshold < sys.space_diam(),
        "threshold {threshold} must stay below the space diameter"
    );
    assert!(
        threshold.to_f64() > 0.0,
        "threshold must be positive"
    );
}

/// Empirical stand-in for the uniform first-increase bound N: the
/// max of `n1` over a finite sample of centers.
pub fn uniform_bound<S: Dynamics>(
    sys: &S,
    r: &S::Value,
    threshold: &S::Value,
    sample: &[S::Point],
    budget: u64,
) -> Result<u64, FirstTimeError> {
    assert!(!sample.is_empty(), "uniform_bound needs a nonempty sample");
    let mut worst = 0u64;
    for x in sample {
        let rec = first_increase(sys, x, r, threshold, budget)?;
        worst = worst.max(rec.n1);
    }
    Ok(worst)
}

/// Diameter of `sigma^step(B(x, r))` as a function of `r` (midpoint on
/// sampled paths).
fn diam_at_step<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    r: &S::Value,
    step: u64,
) -> Result<DiamBound<S::Value>, FirstTimeError> {
    Ok(sys.image_diam(&sys.ball_image(x, r, step as i64)?))
}

/// Shrink the radius so the diameter at the old first-increase step
/// comes back to the threshold (from below, within `tol`), which forces
/// the next first-increase time strictly upward.
pub fn refine_radius<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    r_k: &S::Value,
    epsilon: &S::Value,
    tol: &S::Value,
    budget: u64,
) -> Result<S::Value, FirstTimeError> {
    let rec = first_increase(sys, x, r_k, epsilon, budget)?;
    let n = rec.n1;
    // bracket: diam at step n exceeds epsilon at r_k, drops below as r -> 0
    let mut hi = r_k.clone();
    let mut lo = S::Value::midpoint(r_k, &S::Value::from_f64_approx(0.0));
    let mut guard = 0;
    while diam_at_step(sys, x, &lo, n)?.mid() > *epsilon {
        hi = lo.clone();
        lo = S::Value::midpoint(&lo, &S::Value::from_f64_approx(0.0));
        guard += 1;
        if guard > 200 {
            return Err(FirstTimeError::BisectionStalled { step: n });
        }
    }
    // invariant: diam(step n, lo) <= eps < diam(step n, hi)
    for _ in 0..200 {
        let d_lo = diam_at_step(sys, x, &lo, n)?.mid();
        let gap = epsilon.to_f64() - d_lo.to_f64();
        if gap <= tol.to_f64() && gap >= 0.0 {
            return Ok(lo);
        }
        let mid = S::Value::midpoint(&lo, &hi);
        if diam_at_step(sys, x, &mid, n)?.mid() > *epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(FirstTimeError::BisectionStalled { step: n })
}
