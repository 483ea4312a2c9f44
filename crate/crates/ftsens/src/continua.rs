//! Construction of local cw-unstable continua by the backward-forward
//! limiting procedure: pick radii r_m with
//! `n1(f^{-m}(x), r_m, gamma) in (m, m + m_gamma]`, push the closed
//! ball forward m steps, and drive the approximants to a Hausdorff
//! limit. On the shift the limits are the closed-form boxes
//! `prod_i [x_i - 2^{i-k} eps, x_i + 2^{i-k} eps] ∩ [0,1]`.

use crate::boxes::BoxContinuum;
use crate::dyadic::Dyadic;
use crate::error::{ContinuaError, FirstTimeError};
use crate::firsttime::first_increase;
use crate::hilbert::HilbertPoint;
use crate::systems::{DiamBound, DiamValue, Dynamics};

#[derive(Clone, Debug)]
pub struct StageRecord<P, I, V> {
    pub m: u64,
    pub base_point: P,
    pub radius: V,
    pub n1: u64,
    pub image: I,
}

#[derive(Clone, Debug)]
pub struct ContinuumRecord<P, I, V> {
    pub system_id: String,
    pub anchor: P,
    pub gamma: V,
    pub m_gamma: u64,
    pub epsilon: V,
    pub stages: Vec<StageRecord<P, I, V>>,
    /// Hausdorff enclosures between consecutive approximants
    pub residuals: Vec<DiamBound<V>>,
    /// point estimates of the same residuals (exact values on exact
    /// paths); these drive the convergence decision
    pub residual_estimates: Vec<f64>,
    pub converged: bool,
    pub hausdorff_residual: Option<DiamBound<V>>,
    pub final_image: I,
    /// diameter floor from uniform continuity over m_gamma backward steps
    pub delta: V,
    /// the anchor was verified to lie in every approximant
    pub anchor_in_all: bool,
}

pub struct BuildParams<V> {
    pub gamma: V,
    pub m_gamma: u64,
    pub epsilon: V,
    /// increasing pullback depths m
    pub stages: Vec<u64>,
    /// convergence threshold on consecutive Hausdorff residuals
    pub conv_tol: f64,
    /// top of the geometric radius search grid
    pub r_start: V,
    /// declare NoConvergence when enough stages ran without settling
    pub require_convergence: bool,
    /// push the chosen radius to the upper boundary of its window; the
    /// dyadic grid is already canonical on the shift, but systems with
    /// non-dyadic expansion rates need the boundary, or the stage
    /// diameters wander inside the window and the limit never settles
    pub boundary_refine: bool,
}

enum N1Outcome {
    At(u64),
    BeyondBudget,
}

fn n1_of_radius<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    r: &S::Value,
    gamma: &S::Value,
    budget: u64,
) -> Result<N1Outcome, ContinuaError> {
    match first_increase(sys, x, r, gamma, budget) {
        Ok(rec) => Ok(N1Outcome::At(rec.n1)),
        Err(FirstTimeError::NotIncreasedWithinBudget { .. }) => Ok(N1Outcome::BeyondBudget),
        Err(e) => Err(e.into()),
    }
}

/// Radius whose first-increase time lands in the window
/// `(m, m + m_gamma]`: walk a geometric grid (n1 is monotone in the
/// radius), then bisect across any jump that skips the window.
fn search_radius<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    params: &BuildParams<S::Value>,
    m: u64,
) -> Result<(S::Value, u64), ContinuaError> {
    let budget = m + 2 * params.m_gamma + 32;
    let in_window = |n1: u64| n1 > m && n1 <= m + params.m_gamma;
    let mut r_hi = params.r_start.clone();
    let n_start = match n1_of_radius(sys, x, &r_hi, &params.gamma, budget)? {
        N1Outcome::At(n) => n,
        N1Outcome::BeyondBudget => {
            return Err(ContinuaError::RadiusWindowEmpty { stage: m });
        }
    };
    let mut hit: Option<(S::Value, u64)> = None;
    if in_window(n_start) {
        hit = Some((r_hi.clone(), n_start));
    } else if n_start > m + params.m_gamma {
        // even the largest radius overshoots the window
        return Err(ContinuaError::RadiusWindowEmpty { stage: m });
    }
    // walk down until n1 passes m
    if hit.is_none() {
        let mut r_lo;
        loop {
            r_lo = S::Value::midpoint(&r_hi, &S::Value::from_f64_approx(0.0));
            match n1_of_radius(sys, x, &r_lo, &params.gamma, budget)? {
                N1Outcome::At(n) if n <= m => {
                    r_hi = r_lo;
                    if r_hi.to_f64() < 1e-300 {
                        return Err(ContinuaError::RadiusWindowEmpty { stage: m });
                    }
                }
                N1Outcome::At(n) if in_window(n) => {
                    hit = Some((r_lo.clone(), n));
                    break;
                }
                _ => break, // jumped past the window (or beyond budget)
            }
        }
        if hit.is_none() {
            // bisect the jump: n1(r_hi) <= m, n1(r_lo) past the window
            for _ in 0..200 {
                let mid = S::Value::midpoint(&r_lo, &r_hi);
                match n1_of_radius(sys, x, &mid, &params.gamma, budget)? {
                    N1Outcome::At(n) if in_window(n) => {
                        hit = Some((mid, n));
                        break;
                    }
                    N1Outcome::At(n) if n <= m => r_hi = mid,
                    _ => r_lo = mid,
                }
                if (r_hi.to_f64() - r_lo.to_f64()).abs() < 1e-300 {
                    break;
                }
            }
        }
    }
    let (mut r_w, mut n_w) = hit.ok_or(ContinuaError::RadiusWindowEmpty { stage: m })?;
    if params.boundary_refine {
        // approach sup{r : n1(r) > m} from inside the window; shrinking
        // the bracket keeps n1 in (m, n_w] which stays inside
        for _ in 0..60 {
            let mid = S::Value::midpoint(&r_w, &r_hi);
            match n1_of_radius(sys, x, &mid, &params.gamma, budget)? {
                N1Outcome::At(n) if n > m => {
                    r_w = mid;
                    n_w = n;
                }
                _ => r_hi = mid,
            }
        }
    }
    Ok((r_w, n_w))
}

pub fn build_cw_unstable<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    params: &BuildParams<S::Value>,
) -> Result<ContinuumRecord<S::Point, S::Image, S::Value>, ContinuaError> {
    assert!(params.stages.windows(2).all(|w| w[1] > w[0]), "stages must increase");
    assert!(!params.stages.is_empty());
    assert!(params.gamma < params.epsilon, "gamma must lie below epsilon");

    let mut stages = Vec::new();
    let mut residuals: Vec<DiamBound<S::Value>> = Vec::new();
    let mut residual_estimates: Vec<f64> = Vec::new();
    let mut anchor_in_all = true;
    for &m in &params.stages {
        let x_m = sys.forward_point(x, -(m as i64))?;
        let (r_m, n1) = search_radius(sys, &x_m, params, m)?;
        let image = sys.ball_image(&x_m, &r_m, m as i64)?;
        anchor_in_all &= sys.image_contains(&image, x);
        if let Some(prev) = stages.last() {
            let prev: &StageRecord<S::Point, S::Image, S::Value> = prev;
            residuals.push(sys.image_hausdorff(&prev.image, &image)?);
            residual_estimates.push(sys.image_hausdorff_estimate(&prev.image, &image)?);
        }
        stages.push(StageRecord { m, base_point: x_m, radius: r_m, n1, image });
    }

    // convergence runs on the point estimates: exact values on exact
    // paths, raw cloud estimates on sampled paths (the enclosures carry
    // a constant dispersion slack that would mask the decay)
    let converged = residual_estimates.len() >= 3
        && residual_estimates[residual_estimates.len() - 3..]
            .iter()
            .all(|r| *r < params.conv_tol);
    if params.require_convergence && !converged && params.stages.len() >= 4 {
        return Err(ContinuaError::NoConvergence { tol: format!("{}", params.conv_tol) });
    }

    let delta = derive_delta(sys, &params.epsilon, params.m_gamma);
    let final_image = stages.last().unwrap().image.clone();
    Ok(ContinuumRecord {
        system_id: sys.system_id(),
        anchor: x.clone(),
        gamma: params.gamma.clone(),
        m_gamma: params.m_gamma,
        epsilon: params.epsilon.clone(),
        residuals: residuals.clone(),
        residual_estimates,
        hausdorff_residual: residuals.last().cloned(),
        stages,
        converged,
        final_image,
        delta,
        anchor_in_all,
    })
}

/// `diam(A) >= eps` forces `diam(f^{-n}(A)) >= eps / L^n` for n up to
/// m_gamma, where L is a backward Lipschitz bound of the system.
fn derive_delta<S: Dynamics>(sys: &S, eps: &S::Value, m_gamma: u64) -> S::Value {
    let l = sys.backward_lipschitz();
    S::Value::from_f64_approx(eps.to_f64() / l.powi(m_gamma as i32))
}

/// The closed-form local cw-unstable continuum of the shift.
pub fn shift_fu_closed_form(x: &HilbertPoint, k: i64, epsilon: &Dyadic) -> BoxContinuum {
    BoxContinuum::fu_box(x, k, epsilon)
}

#[derive(Clone, Debug)]
pub struct FuLimitCheck {
    /// Hausdorff distance between the j-th approximant and the closed form
    pub residual: Dyadic,
    /// all coordinates |i| < j agree exactly
    pub exact_agreement: bool,
}

/// Compare `sigma^j(closure B(sigma^{-j}(x), eps/2^{j+k}))` with the
/// closed-form box: coordinates between -j and j must agree exactly and
/// the Hausdorff residual decays like 2^{-j}.
pub fn verify_fu_limit(
    x: &HilbertPoint,
    k: i64,
    epsilon: &Dyadic,
    j: i64,
) -> Result<FuLimitCheck, ContinuaError> {
    assert!(j >= 0);
    let back = x.shift(-j);
    let ball = BoxContinuum::ball(&back, &epsilon.ldexp(-(j + k)));
    let approx = ball.shift(j);
    let closed = BoxContinuum::fu_box(x, k, epsilon);
    let mut exact = true;
    for i in -(j - 1).max(0)..=(j - 1).max(0) {
        if j > 0 && approx.interval_at(i) != closed.interval_at(i) {
            exact = false;
        }
    }
    let residual = approx.hausdorff(&closed)?;
    Ok(FuLimitCheck { residual, exact_agreement: exact })
}

/// Identify which closed-form parameter a converged shift record hit.
pub fn nearest_fu_k(
    final_image: &BoxContinuum,
    x: &HilbertPoint,
    epsilon: &Dyadic,
    k_max: i64,
) -> Result<(i64, Dyadic), ContinuaError> {
    let mut best: Option<(i64, Dyadic)> = None;
    for k in 0..=k_max {
        let d = final_image.hausdorff(&BoxContinuum::fu_box(x, k, epsilon))?;
        if best.as_ref().map_or(true, |(_, b)| d < *b) {
            best = Some((k, d));
        }
    }
    Ok(best.expect("k_max >= 0"))
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    /// first iterate at or below 2 m_gamma whose diameter reaches eps
    pub ell: Option<u64>,
    /// for each tested n, the witness n' in [n, n + m_eps] with
    /// diam(f^{n'} C) >= eps
    pub regular: Vec<(u64, Option<u64>)>,
    /// diam(f^n C) >= delta for every tested n >= 2 m_gamma
    pub floor_ok: bool,
    pub failures: usize,
}

/// Uniform growth, regular growth, and the post-growth diameter floor.
pub fn check_growth<S: Dynamics>(
    sys: &S,
    rec: &ContinuumRecord<S::Point, S::Image, S::Value>,
    m_eps: u64,
    test_range: std::ops::RangeInclusive<u64>,
) -> Result<GrowthReport, ContinuaError> {
    let horizon = (*test_range.end() + m_eps).max(2 * rec.m_gamma) + 1;
    // one diameter sweep serves every check
    let mut diams: Vec<DiamBound<S::Value>> = Vec::with_capacity(horizon as usize + 1);
    let mut img = rec.final_image.clone();
    for n in 0..=horizon {
        diams.push(sys.image_diam(&img));
        if n < horizon {
            img = sys.step_image(&img, 1)?;
        }
    }
    let reaches = |n: u64| diams[n as usize].lo >= rec.epsilon;
    let ell = (0..=2 * rec.m_gamma).find(|&n| reaches(n));
    let mut regular = Vec::new();
    let mut failures = 0;
    for n in test_range {
        let witness = (n..=n + m_eps).find(|&np| reaches(np));
        if witness.is_none() {
            failures += 1;
        }
        regular.push((n, witness));
    }
    let floor_ok =
        (2 * rec.m_gamma..=horizon).all(|n| diams[n as usize].lo >= rec.delta);
    if ell.is_none() {
        failures += 1;
    }
    if !floor_ok {
        failures += 1;
    }
    Ok(GrowthReport { ell, regular, floor_ok, failures })
}

#[derive(Clone, Debug)]
pub struct ShrinkReport<V> {
    /// per alpha: (alpha, m_alpha, all backward diameters below alpha
    /// from m_alpha + 1 on)
    pub entries: Vec<(V, u64, bool)>,
    pub all_ok: bool,
}

/// Backward images must drop below each alpha after m_alpha + 1 steps.
pub fn check_backward_shrink<S: Dynamics>(
    sys: &S,
    rec: &ContinuumRecord<S::Point, S::Image, S::Value>,
    alphas: &[(S::Value, u64)],
    horizon: u64,
) -> Result<ShrinkReport<S::Value>, ContinuaError> {
    let max_m = alphas.iter().map(|(_, m)| *m).max().unwrap_or(0);
    let mut diams = Vec::with_capacity((horizon + max_m + 2) as usize);
    let mut img = rec.final_image.clone();
    for n in 0..=horizon + max_m + 1 {
        diams.push(sys.image_diam(&img));
        if n < horizon + max_m + 1 {
            img = sys.step_image(&img, -1)?;
        }
    }
    let mut entries = Vec::new();
    for (alpha, m_alpha) in alphas {
        let ok = (*m_alpha + 1..=horizon + m_alpha + 1)
            .all(|n| diams[n as usize].hi <= *alpha);
        entries.push((alpha.clone(), *m_alpha, ok));
    }
    let all_ok = entries.iter().all(|(_, _, ok)| *ok);
    Ok(ShrinkReport { entries, all_ok })
}

#[derive(Clone, Debug)]
pub struct SliceCheckReport {
    pub max_circle_offset: f64,
    pub max_line_offset: f64,
    pub ok: bool,
}

fn wrap_half(d: f64) -> f64 {
    d - d.round()
}

/// Every sampled point of a product continuum must keep the circle
/// coordinate of the anchor and stay on the unstable eigenline through
/// the anchor's torus part.
pub fn slice_check_points(
    sys: &crate::systems::CatCrossIdentity,
    anchor: &(crate::torus::TorusPoint, f64),
    points: &[([f64; 2], f64)],
    tol: f64,
) -> SliceCheckReport {
    let e_u = sys.base.matrix.unstable_direction();
    let a = [anchor.0.coords[0], anchor.0.coords[1]];
    let mut circle_off = 0.0f64;
    let mut line_off = 0.0f64;
    for (t, z) in points {
        circle_off = circle_off.max(crate::torus::circle_dist(*z, anchor.1));
        let d0 = wrap_half(t[0] - a[0]);
        let d1 = wrap_half(t[1] - a[1]);
        line_off = line_off.max((d0 * e_u[1] - d1 * e_u[0]).abs());
    }
    SliceCheckReport {
        max_circle_offset: circle_off,
        max_line_offset: line_off,
        ok: circle_off <= tol && line_off <= tol,
    }
}

/// Slice check on the converged final image of a product record.
pub fn product_fu_slice_check(
    sys: &crate::systems::CatCrossIdentity,
    rec: &ContinuumRecord<
        (crate::torus::TorusPoint, f64),
        (crate::torus::Parallelotope, crate::systems::product::CircleArc),
        Dyadic,
    >,
    tol: f64,
) -> SliceCheckReport {
    let (para, arc) = &rec.final_image;
    let r = arc.radius.to_f64();
    let points: Vec<([f64; 2], f64)> = para
        .sample(9)
        .into_iter()
        .flat_map(|t| {
            [
                (t, arc.center),
                (t, crate::torus::wrap01(arc.center + r)),
                (t, crate::torus::wrap01(arc.center - r)),
            ]
        })
        .collect();
    slice_check_points(sys, &rec.anchor, &points, tol)
}

/// Whether a subset controls the first increasing time of the ball:
/// `n1(x, r, c) == n1(C, c)`.
pub fn controls_first_increase<S: Dynamics>(
    sys: &S,
    x: &S::Point,
    r: &S::Value,
    c: &S::Value,
    subset: &S::Image,
    budget: u64,
) -> Result<bool, FirstTimeError> {
    let ball_n1 = first_increase(sys, x, r, c, budget)?.n1;
    let set_n1 = crate::firsttime::continuum_first_increase(sys, subset, c, budget)?.n1;
    Ok(ball_n1 == set_n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ShiftSystem;
    use rand::{Rng, SeedableRng};

    fn shift() -> ShiftSystem {
        ShiftSystem::new(Dyadic::from_ratio(1, 3)).unwrap()
    }

    fn eps() -> Dyadic {
        Dyadic::from_ratio(1, 3)
    }

    fn params(stages: Vec<u64>) -> BuildParams<Dyadic> {
        let s = shift();
        let gamma = eps().ldexp(-2);
        BuildParams {
            m_gamma: s.m_gamma(&gamma),
            gamma,
            epsilon: eps(),
            stages,
            conv_tol: (-20f64).exp2(),
            r_start: eps().ldexp(-1),
            require_convergence: false,
            boundary_refine: false,
        }
    }

    #[test]
    fn shift_build_converges_to_closed_form() {
        let s = shift();
        let x = HilbertPoint::half();
        let p = params((1..=26).collect());
        let rec = build_cw_unstable(&s, &x, &p).unwrap();
        assert!(rec.converged);
        assert!(rec.anchor_in_all);
        let (k, residual) = nearest_fu_k(&rec.final_image, &x, &eps(), 10).unwrap();
        // admissible window {k_gamma + 1, ..., k_gamma + m_gamma} = {2, 3, 4}
        assert!((2..=4).contains(&k), "k={k}");
        assert!(residual < Dyadic::pow2(-20), "residual {residual}");
        // every stage lands in the window (m, m + m_gamma]
        for st in &rec.stages {
            assert!(st.n1 > st.m && st.n1 <= st.m + rec.m_gamma);
        }
    }

    #[test]
    fn random_center_build_converges() {
        let s = shift();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut x = HilbertPoint::half();
        for i in -5i64..=5 {
            if rng.random_bool(0.7) {
                x.set(i, Dyadic::from_ratio(rng.random_range(1..=63), 6));
            }
        }
        let rec = build_cw_unstable(&s, &x, &params((1..=30).collect())).unwrap();
        assert!(rec.converged);
        let (k, residual) = nearest_fu_k(&rec.final_image, &x, &eps(), 10).unwrap();
        assert!((2..=4).contains(&k));
        assert!(residual < Dyadic::pow2(-20));
    }

    #[test]
    fn single_stage_is_trivially_unconverged() {
        let s = shift();
        let rec = build_cw_unstable(&s, &HilbertPoint::half(), &params(vec![3])).unwrap();
        assert_eq!(rec.stages.len(), 1);
        assert!(!rec.converged);
        assert!(rec.hausdorff_residual.is_none());
    }

    #[test]
    fn fu_limit_agreement_and_decay() {
        let mut x = HilbertPoint::half();
        x.set(0, Dyadic::from_ratio(5, 3));
        for k in [0i64, 2] {
            let mut last = Dyadic::one();
            for j in [1i64, 3, 6, 9] {
                let chk = verify_fu_limit(&x, k, &eps(), j).unwrap();
                assert!(chk.exact_agreement, "k={k} j={j}");
                assert!(chk.residual <= Dyadic::pow2(-j + 2), "k={k} j={j}: {}", chk.residual);
                assert!(chk.residual < last);
                last = chk.residual;
            }
        }
        // j = 0: no agreement guaranteed, residual is just d_H(ball, box)
        let chk = verify_fu_limit(&x, 1, &eps(), 0).unwrap();
        assert!(chk.residual.sign() >= 0);
    }

    #[test]
    fn growth_checks_on_closed_form() {
        let s = shift();
        let x = HilbertPoint::half();
        let rec = build_cw_unstable(&s, &x, &params((1..=26).collect())).unwrap();
        let report = check_growth(&s, &rec, 2, 0..=30).unwrap();
        // ell = k - 1 or so; certainly within 2 m_gamma = 6
        assert!(report.ell.is_some());
        assert!(report.ell.unwrap() <= 2 * rec.m_gamma);
        assert_eq!(report.failures, 0);
        assert!(report.floor_ok);
        for (n, witness) in &report.regular {
            let w = witness.expect("regular growth witness");
            assert!(w >= *n && w <= n + 2);
        }
    }

    #[test]
    fn backward_shrink_on_closed_form_and_negative_control() {
        let s = shift();
        let x = HilbertPoint::half();
        let rec = build_cw_unstable(&s, &x, &params((1..=26).collect())).unwrap();
        let alphas: Vec<(Dyadic, u64)> = [1i64, 2, 3]
            .iter()
            .map(|k| {
                let a = eps().ldexp(-k);
                let m = s.m_gamma(&a);
                (a, m)
            })
            .collect();
        let report = check_backward_shrink(&s, &rec, &alphas, 30).unwrap();
        assert!(report.all_ok);

        // the constant-radius box is a local unstable continuum that is
        // NOT unstable: backward diameters never shrink
        let mut bad = rec.clone();
        bad.final_image = BoxContinuum::const_box(&x, &eps());
        let report = check_backward_shrink(&s, &bad, &alphas, 10).unwrap();
        assert!(!report.all_ok);
        assert!(report.entries.iter().all(|(_, _, ok)| !ok));
    }

    #[test]
    fn unstable_continuum_controls_ball_increase() {
        // the widest-coordinate slice of a shift ball controls its n1
        let s = shift();
        let x = HilbertPoint::half();
        let r = eps().ldexp(-5);
        let ball = BoxContinuum::ball(&x, &r);
        let err = controls_first_increase(&s, &x, &r, &eps(), &ball, 200).unwrap();
        assert!(err, "the ball trivially controls itself");
        // a singleton never controls
        let single = BoxContinuum::singleton(&x);
        match controls_first_increase(&s, &x, &r, &eps(), &single, 50) {
            Err(FirstTimeError::NotIncreasedWithinBudget { .. }) => {}
            other => panic!("singleton must fail to increase: {other:?}"),
        }
    }
}
