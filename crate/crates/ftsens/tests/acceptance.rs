//! Acceptance suite: one orchestrated run, one pass/fail line per
//! criterion (stderr). Run with
//! `cargo test -p ftsens --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use ftsens::boxes::{BoxContinuum, Interval, Tail};
use ftsens::certifier::{
    certify, lambda_exponent_from_report, monotone_mgamma, syndetic_gaps, zero_band_center,
    CertifyParams, Verdict,
};
use ftsens::continua::{
    build_cw_unstable, check_backward_shrink, check_growth, nearest_fu_k, product_fu_slice_check,
    slice_check_points, verify_fu_limit, BuildParams,
};
use ftsens::dyadic::Dyadic;
use ftsens::entropy::{
    entropy_estimate, split_tree, torus_pool, SplitTreeParams,
};
use ftsens::firsttime::first_increase;
use ftsens::ftmetric::{
    chain_d, chain_inequality_check, compatibility_check, generate_catalog, random_chain, rho,
    verify_hyperbolic,
};
use ftsens::hilbert::HilbertPoint;
use ftsens::systems::{
    CatCrossIdentity, Dynamics, RotationAngle, ShiftCrossRotation, ShiftSystem, SlowedFlow,
    TorusLinearSystem,
};
use ftsens::torus::TorusPoint;
use rand::{Rng, SeedableRng};

fn eps() -> Dyadic {
    Dyadic::from_ratio(1, 3) // 1/8
}

fn shift() -> ShiftSystem {
    ShiftSystem::new(eps()).unwrap()
}

fn random_centers(count: usize, seed: u64) -> Vec<HilbertPoint> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = HilbertPoint::half();
            for i in -8i64..=8 {
                if rng.random_bool(0.6) {
                    x.set(i, Dyadic::from_ratio(rng.random_range(0..=256), 8));
                }
            }
            x
        })
        .collect()
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

/// 1. First-increase times of shift balls land in the two-value bracket
///    n - k_gamma - 1 or n - k_gamma, exactly, across the whole sweep.
fn shift_first_increase_bracket() -> Result<String, String> {
    let sys = shift();
    let gammas = [eps().ldexp(-1), eps().ldexp(-2), eps().ldexp(-3)];
    let centers = random_centers(100, 2024);
    let mut checked = 0u64;
    for x in &centers {
        for n in 4i64..=16 {
            let r = eps().ldexp(-n);
            for g in &gammas {
                let k = sys.k_gamma(g) as i64;
                let rec = first_increase(&sys, x, &r, g, 64).map_err(|e| e.to_string())?;
                let n1 = rec.n1 as i64;
                ensure!(
                    n1 == n - k - 1 || n1 == n - k,
                    "n1 = {n1} outside {{{}, {}}} at n={n}, k_gamma={k}",
                    n - k - 1,
                    n - k
                );
                ensure!(!rec.decided_statistically, "exact path must not be statistical");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (x, n, gamma) triples, all in the bracket"))
}

/// 2. Every shift ball-image diameter sits in the closed sandwich
///    [2^{j-n} eps, 2^{j-n+1} eps], bit-exactly, for j <= n + 2.
fn ball_image_diameter_sandwich() -> Result<String, String> {
    let sys = shift();
    let centers = random_centers(100, 2024);
    let mut checked = 0u64;
    for x in &centers {
        for n in 4i64..=16 {
            let mut img = sys.ball(x, &eps().ldexp(-n)).map_err(|e| e.to_string())?;
            for j in 0..=n + 2 {
                let d = sys.image_diam(&img).lo;
                ensure!(
                    d >= eps().ldexp(j - n) && d <= eps().ldexp(j - n + 1),
                    "diameter {d} escapes the sandwich at n={n}, j={j}"
                );
                checked += 1;
                img = sys.step_image(&img, 1).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(format!("{checked} diameters inside the sandwich"))
}

fn shift_cert_report() -> Result<ftsens::certifier::CertReport<Dyadic>, String> {
    let sys = shift();
    let mut samples = random_centers(40, 7);
    for cut in 3..=13 {
        samples.push(zero_band_center(cut, 40));
    }
    let gammas = vec![eps().ldexp(-1), eps().ldexp(-2), eps().ldexp(-3)];
    let meta = gammas.iter().map(|g| Some(sys.k_gamma(g))).collect();
    certify(
        &sys,
        &samples,
        &CertifyParams {
            schedule: (4..=14).map(|n| eps().ldexp(-n)).collect(),
            gammas,
            gamma_meta: meta,
            epsilon: eps(),
            budget: 200,
        },
    )
    .map_err(|e| e.to_string())
}

/// 3. Certified jump bounds on the shift sweep: F1 <= 2, F2 <= k_gamma
///    + 2, and the monotonized m-table is non-increasing in gamma.
fn certifier_jump_bounds() -> Result<String, String> {
    let sys = shift();
    let report = shift_cert_report()?;
    ensure!(report.verdict == Verdict::CertifiedAtScale, "shift sweep reported a violation");
    ensure!(!report.statistical, "shift sweep must stay exact");
    let mut diffs = 0usize;
    for g in &report.gammas {
        let k = g.k_gamma.expect("shift meta");
        for d in &g.f1 {
            ensure!(d.value <= 2, "F1 difference {} > 2 at gamma={}", d.value, g.gamma);
        }
        for d in &g.f2 {
            ensure!(
                d.value <= k + 2,
                "F2 difference {} > k_gamma + 2 = {} at gamma={}",
                d.value,
                k + 2,
                g.gamma
            );
        }
        diffs += g.f1.len() + g.f2.len();
    }
    // monotonized table from the closed-form raw values on {eps/n}
    let e = eps().to_f64();
    let raw: Vec<(u64, u64)> = (2..=12)
        .map(|n| {
            let g = Dyadic::from_f64(e / n as f64).unwrap();
            (n, sys.k_gamma(&g) + 2)
        })
        .collect();
    let m = monotone_mgamma(&raw);
    ensure!(
        m.bands.windows(2).all(|w| w[1].1 >= w[0].1),
        "monotonized table must be non-increasing in gamma"
    );
    for (i, (n, m_raw)) in raw.iter().enumerate() {
        ensure!(m.bands[i].1 >= *m_raw, "band n={n} dips below the raw value");
    }
    Ok(format!("{diffs} differences within the bounds; monotone table over {} bands", raw.len()))
}

fn shift_build(x: &HilbertPoint, stages_hi: u64) -> Result<
    ftsens::continua::ContinuumRecord<HilbertPoint, BoxContinuum, Dyadic>,
    String,
> {
    let sys = shift();
    let gamma = eps().ldexp(-2);
    let params = BuildParams {
        m_gamma: sys.m_gamma(&gamma),
        gamma,
        epsilon: eps(),
        stages: (1..=stages_hi).collect(),
        conv_tol: (-20f64).exp2(),
        r_start: eps().ldexp(-1),
        require_convergence: true,
        boundary_refine: false,
    };
    build_cw_unstable(&sys, x, &params).map_err(|e| e.to_string())
}

/// 4. The backward-forward construction converges (exact residual below
///    2^-20) to a closed-form box with k in the admissible window, and
///    stage-j approximants agree with the closed form exactly on
///    |i| < j.
fn unstable_continuum_convergence() -> Result<String, String> {
    let sys = shift();
    let gamma = eps().ldexp(-2);
    let (k_lo, k_hi) = (sys.k_gamma(&gamma) + 1, sys.k_gamma(&gamma) + sys.m_gamma(&gamma));
    for x in random_centers(8, 31) {
        let rec = shift_build(&x, 26)?;
        ensure!(rec.converged, "record must converge");
        ensure!(rec.anchor_in_all, "anchor must lie in every approximant");
        let residual = rec.hausdorff_residual.as_ref().unwrap().hi.clone();
        ensure!(residual < Dyadic::pow2(-20), "residual {residual} at or above 2^-20");
        let (k, dist) = nearest_fu_k(&rec.final_image, &x, &eps(), 12).map_err(|e| e.to_string())?;
        ensure!(
            (k_lo as i64..=k_hi as i64).contains(&k),
            "closed-form parameter {k} outside [{k_lo}, {k_hi}]"
        );
        ensure!(dist < Dyadic::pow2(-20), "closed-form residual {dist} too large");
        // exact coordinatewise agreement of the j-stage approximants
        for j in [1i64, 4, 8, 12] {
            let chk = verify_fu_limit(&x, k, &eps(), j).map_err(|e| e.to_string())?;
            ensure!(chk.exact_agreement, "coordinates |i| < {j} must agree exactly");
            ensure!(
                chk.residual <= Dyadic::pow2(-j + 2),
                "stage-{j} residual {} above 2^{}",
                chk.residual,
                -j + 2
            );
        }
    }
    Ok("8 records converged onto closed forms; stage agreement exact".into())
}

/// 5. Property suite over 50 converged records: uniform growth within
///    2 m_gamma steps, regular growth in [n, n + m_eps], syndetic gaps
///    at most m_eps over horizon 200, backward shrink below each alpha
///    from m_alpha + 1 on; the two non-shrinking controls behave.
fn continuum_property_suite() -> Result<String, String> {
    let sys = shift();
    let m_eps = sys.m_gamma(&eps());
    let alphas: Vec<(Dyadic, u64)> = (1..=3)
        .map(|k| {
            let a = eps().ldexp(-k);
            let m = sys.m_gamma(&a);
            (a, m)
        })
        .collect();
    for x in random_centers(50, 99) {
        let rec = shift_build(&x, 24)?;
        ensure!(rec.converged, "record must converge");
        let growth = check_growth(&sys, &rec, m_eps, 0..=30).map_err(|e| e.to_string())?;
        ensure!(growth.failures == 0, "growth check failed");
        ensure!(
            growth.ell.unwrap() <= 2 * rec.m_gamma,
            "uniform growth escaped 2 m_gamma"
        );
        let gaps =
            syndetic_gaps(&sys, &rec.final_image, &eps(), 200).map_err(|e| e.to_string())?;
        ensure!(
            gaps.max_gap <= m_eps,
            "syndetic gap {} above m_eps = {m_eps}",
            gaps.max_gap
        );
        let shrink =
            check_backward_shrink(&sys, &rec, &alphas, 40).map_err(|e| e.to_string())?;
        ensure!(shrink.all_ok, "backward shrink failed");
    }
    // negative control: the thin column never increases at any scale
    let r = Dyadic::from_ratio(1, 2);
    let mut window = vec![Interval::point(Dyadic::zero()); 3];
    window[1] = Interval::new(Dyadic::zero(), r.clone());
    let tail = Tail::Const(Interval::point(Dyadic::zero()));
    let column = BoxContinuum::new(-1, window, tail.clone(), tail);
    let mut img = column.clone();
    for _ in 0..=60 {
        ensure!(sys.image_diam(&img).lo <= r, "column diameter grew");
        img = sys.step_image(&img, 1).map_err(|e| e.to_string())?;
    }
    // negative control: the constant-radius product never shrinks
    let fat = BoxContinuum::const_box(&HilbertPoint::half(), &eps());
    let mut img = fat.clone();
    for _ in 0..=30 {
        ensure!(
            sys.image_diam(&img).lo >= eps(),
            "constant-radius product dropped below eps backward"
        );
        img = sys.step_image(&img, -1).map_err(|e| e.to_string())?;
    }
    Ok("50 records passed growth, regularity, syndetic and shrink checks; controls behave".into())
}

/// 6. ft-metric suite over 20 generated catalogs: sandwich
///    D <= rho <= 4D, backward hyperbolicity for n <= 10, the chain
///    inequality on 1000 random chains, and both compatibility
///    implications; all comparisons exact.
fn ft_metric_suite() -> Result<String, String> {
    let sys = shift();
    // lambda base from the certified schedule, not hand-set
    let report = shift_cert_report()?;
    let m = lambda_exponent_from_report(&report, &eps());
    ensure!(m == 2, "certified lambda exponent base {m}, expected 2 at eps = 1/8");

    let mut sandwiches = 0;
    for seed in 0..20u64 {
        let base_k = (seed % 3) as i64;
        let inst = generate_catalog(&sys, seed, base_k, m, 50, 400).map_err(|e| e.to_string())?;
        ensure!(inst.catalog.elements.len() >= 50, "catalog below 50 elements");
        let res = chain_d(&inst.catalog, &inst.whole, &inst.whole_rho, &inst.p, &inst.q)
            .map_err(|e| e.to_string())?;
        ensure!(res.sandwich_ok, "sandwich failed on catalog {seed}");
        sandwiches += 1;
        if seed < 4 {
            let checks = verify_hyperbolic(
                &sys,
                &inst.catalog,
                &inst.whole,
                &inst.p,
                &inst.q,
                10,
                400,
            )
            .map_err(|e| e.to_string())?;
            ensure!(checks.iter().all(|c| c.ok), "backward hyperbolicity failed on {seed}");
        }
    }

    let mut chains = 0;
    for seed in 0..1000u64 {
        let len = 1 + (seed % 5) as usize;
        let chain = random_chain(&sys, seed, len, 1..=6);
        let chk = chain_inequality_check(&sys, &chain, &eps(), m, 200).map_err(|e| e.to_string())?;
        ensure!(chk.ok, "chain inequality failed at seed {seed}: {} > {}", chk.lhs, chk.rhs);
        chains += 1;
    }

    // compatibility on a family of boxes across scales
    let mut boxes = Vec::new();
    for k in 0i64..=10 {
        for x in random_centers(3, 1000 + k as u64) {
            let bx = BoxContinuum::fu_box(&x, k, &eps());
            let (n1, _) = rho(&sys, &bx, &eps(), m, 200).map_err(|e| e.to_string())?;
            boxes.push((bx, n1));
        }
    }
    let deltas: Vec<Dyadic> = (1..=4).map(|k| eps().ldexp(-k)).collect();
    let compat = compatibility_check(&sys, &boxes, &eps(), m, &deltas);
    for c in &compat {
        ensure!(
            c.small_diam_implies_small_rho && c.small_rho_implies_small_diam,
            "compatibility failed at delta={}",
            c.delta
        );
    }
    Ok(format!(
        "{sandwiches} catalogs sandwiched, hyperbolicity to n=10, {chains} chains, compatibility on {} deltas",
        compat.len()
    ))
}

/// 7. Split tree of depth 10: 1024 pulled-back points, every pair
///    certified separated above delta/3 in exact arithmetic, chain
///    bounds certified, yielding h >= log 2 / M.
fn split_tree_certificate() -> Result<String, String> {
    let sys = shift();
    let delta = eps().ldexp(-1); // 1/16
    // k bracketing delta/6: eps / 2^{k+1} <= delta/6 < eps / 2^k
    let six = Dyadic::from_int(6);
    let mut k = 0i64;
    while &eps() * &six > delta.ldexp(k + 1) {
        k += 1;
    }
    let m_d6 = k as u64 + 2;
    let m_steps = 2 * m_d6;
    let box_k = k + 2;
    let c0 = BoxContinuum::fu_box(&HilbertPoint::half(), box_k, &eps());
    ensure!(&c0.diam() * &six <= delta, "root box too wide for its class");
    let params = SplitTreeParams { delta: delta.clone(), depth: 10, m_steps, box_k };
    let tree = split_tree(&sys, &c0, &params).map_err(|e| e.to_string())?;
    ensure!(tree.points.len() == 1024, "expected 1024 points");
    ensure!(tree.separation_verified, "pairwise separation failed");
    ensure!(tree.chain_bound_verified, "pullback chain bound failed");
    ensure!(tree.anchor_proximity_verified, "anchor proximity failed");
    Ok(format!(
        "1024 points, {} pairs separated above delta/3 at horizon {}, h >= {:.4}",
        tree.pairs_checked,
        10 * m_steps,
        tree.h_lower_nats
    ))
}

/// 8. Cat-map entropy: greedy growth rate within 15% of
///    log((3 + sqrt 5)/2), and a 4x-density re-run moves the estimate
///    by less than 5%.
fn cat_map_entropy_rate() -> Result<String, String> {
    let truth = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
    let sys = TorusLinearSystem::cat();
    let est = entropy_estimate(&sys, 0.05, 12, &torus_pool(100_000)).map_err(|e| e.to_string())?;
    let rel = (est.slope - truth).abs() / truth;
    ensure!(
        rel <= 0.15,
        "slope {:.4} misses {truth:.4} by {:.1}%",
        est.slope,
        rel * 100.0
    );
    let dense =
        entropy_estimate(&sys, 0.05, 7, &torus_pool(400_000)).map_err(|e| e.to_string())?;
    let shift_rel = (dense.slope - est.slope).abs() / est.slope;
    ensure!(
        shift_rel < 0.05,
        "4x-density slope {:.4} moved the estimate by {:.1}%",
        dense.slope,
        shift_rel * 100.0
    );
    Ok(format!(
        "slope {:.4} vs {truth:.4} ({:.1}% off, window {:?}); 4x check moved {:.1}%",
        est.slope,
        rel * 100.0,
        est.window,
        shift_rel * 100.0
    ))
}

/// 9. Slowed-flow evidence: entropy estimate at most 0.05, and the
///    certifier flags sustained growth of the threshold gap for anchors
///    entering the slow zone.
fn slowed_flow_evidence() -> Result<String, String> {
    let flow = SlowedFlow::new([0.5, 0.5], 5e-3, 256).map_err(|e| e.to_string())?;
    let est = entropy_estimate(&flow, 0.05, 24, &torus_pool(30_000)).map_err(|e| e.to_string())?;
    ensure!(
        est.slope <= 0.05,
        "flow entropy estimate {:.4} above 0.05 (window {:?})",
        est.slope,
        est.window
    );

    let flow = SlowedFlow::new([0.5, 0.5], 5e-3, 100).map_err(|e| e.to_string())?;
    let anchors = vec![
        flow.stable_orbit_point(0.05, 8.0),
        flow.stable_orbit_point(0.1, 10.0),
    ];
    let gamma = 0.05f64;
    let report = certify(
        &flow,
        &anchors,
        &CertifyParams {
            schedule: (1..=7).map(|k| gamma / (2f64).powi(k)).collect(),
            gammas: vec![gamma],
            gamma_meta: vec![None],
            epsilon: 0.2,
            budget: 700,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        report.verdict == Verdict::ViolationSuspected,
        "expected a suspected violation near the slow zone"
    );
    let g = &report.gammas[0];
    // the firing sample shows strictly increasing gaps over at least
    // five schedule doublings
    let anchor0: Vec<u64> = g.f2.iter().filter(|d| d.sample == 0).map(|d| d.value).collect();
    let tail = &anchor0[anchor0.len().saturating_sub(6)..];
    ensure!(
        tail.len() == 6 && tail.windows(2).all(|w| w[1] > w[0]),
        "threshold gaps not strictly increasing over five doublings: {anchor0:?}"
    );
    Ok(format!(
        "entropy {:.4} (window {:?}); gaps {:?} strictly increasing, verdict suspected",
        est.slope, est.window, anchor0
    ))
}

/// 10. Products: the rotation factor never moves the first-increase
///     time once the radius is below the equicontinuity scale, and the
///     identity-factor continua stay on their slice.
fn product_invariance() -> Result<String, String> {
    let base = shift();
    let prod = ShiftCrossRotation::new(base.clone(), RotationAngle::Sqrt2Minus1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150);
    let mut checked = 0;
    for x in random_centers(20, 303) {
        let y: f64 = rng.random();
        for g_k in 1i64..=2 {
            let gamma = eps().ldexp(-g_k);
            let delta_gamma = prod.equicontinuity_radius(&gamma);
            for n in 6i64..=12 {
                let r = eps().ldexp(-n);
                if r > delta_gamma {
                    continue;
                }
                let base_n1 =
                    first_increase(&base, &x, &r, &gamma, 100).map_err(|e| e.to_string())?.n1;
                let prod_n1 = first_increase(&prod, &(x.clone(), y), &r, &gamma, 100)
                    .map_err(|e| e.to_string())?
                    .n1;
                ensure!(
                    base_n1 == prod_n1,
                    "product n1 {prod_n1} differs from base {base_n1} at n={n}"
                );
                checked += 1;
            }
        }
    }

    // identity-factor slice: build a record over the product of the cat
    // map with the identity circle
    let sys = CatCrossIdentity::new(TorusLinearSystem::cat());
    let anchor = (TorusPoint::new2(0.125, 0.375), 0.625);
    let gamma = Dyadic::from_ratio(1, 6); // 1/64
    let params = BuildParams {
        gamma: gamma.clone(),
        m_gamma: 3,
        epsilon: Dyadic::from_ratio(1, 3),
        stages: (4..=22).collect(),
        conv_tol: 1e-6,
        r_start: Dyadic::from_ratio(1, 7),
        require_convergence: true,
        boundary_refine: true,
    };
    let rec = build_cw_unstable(&sys, &anchor, &params).map_err(|e| e.to_string())?;
    ensure!(rec.converged, "product record must converge");
    let slice = product_fu_slice_check(&sys, &rec, 1e-9);
    ensure!(
        slice.ok,
        "slice check failed: circle {:.2e}, line {:.2e}",
        slice.max_circle_offset,
        slice.max_line_offset
    );
    // negative control: a cloud pushed off the slice must fail
    let bad: Vec<([f64; 2], f64)> = rec
        .final_image
        .0
        .sample(5)
        .into_iter()
        .map(|t| ([t[0] + 0.01, t[1]], anchor.1))
        .collect();
    let control = slice_check_points(&sys, &anchor, &bad, 1e-9);
    ensure!(!control.ok, "perturbed cloud must fail the slice check");
    Ok(format!(
        "{checked} product/base first-increase equalities; slice offsets circle {:.1e}, line {:.1e}",
        slice.max_circle_offset, slice.max_line_offset
    ))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Result<String, String>,
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion {
            name: "shift first-increase bracket",
            limit: Some(Duration::from_secs(10)),
            run: shift_first_increase_bracket,
        },
        Criterion {
            name: "ball-image diameter sandwich",
            limit: None,
            run: ball_image_diameter_sandwich,
        },
        Criterion { name: "certifier jump bounds", limit: None, run: certifier_jump_bounds },
        Criterion {
            name: "unstable-continuum convergence",
            limit: None,
            run: unstable_continuum_convergence,
        },
        Criterion { name: "continuum property suite", limit: None, run: continuum_property_suite },
        Criterion { name: "ft-metric suite", limit: None, run: ft_metric_suite },
        Criterion {
            name: "split-tree entropy certificate",
            limit: Some(Duration::from_secs(60)),
            run: split_tree_certificate,
        },
        Criterion {
            name: "cat-map entropy rate",
            limit: Some(Duration::from_secs(120)),
            run: cat_map_entropy_rate,
        },
        Criterion { name: "slowed-flow evidence", limit: None, run: slowed_flow_evidence },
        Criterion { name: "product invariance", limit: None, run: product_invariance },
    ];
    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let timed_out = c.limit.map(|l| elapsed > l).unwrap_or(false);
        match (&outcome, timed_out) {
            (Ok(detail), false) => {
                eprintln!("[PASS] {} ({:.2?}): {detail}", c.name, elapsed);
            }
            (Ok(detail), true) => {
                eprintln!(
                    "[FAIL] {} ({:.2?}): over the {:?} budget; {detail}",
                    c.name,
                    elapsed,
                    c.limit.unwrap()
                );
                failures.push(c.name);
            }
            (Err(detail), _) => {
                eprintln!("[FAIL] {} ({:.2?}): {detail}", c.name, elapsed);
                failures.push(c.name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
