//! The hyperbolic ft-metric over catalogs of marked continua:
//! `rho(C) = lambda^{n1(C, eps)}` with `lambda = 2^{-1/m}`, and its
//! chain cost `D`, the cheapest decomposition of a path from p to q
//! through the catalog's intersection graph.
//!
//! Values are kept exact: a cost is an integer-combination of powers of
//! lambda, reduced modulo `lambda^m = 1/2` to a polynomial of degree
//! below m with dyadic coefficients. `2 z^m - 1` is irreducible over
//! the rationals (any proper factor would have a rational constant term
//! of irrational modulus `2^{-k/m}`), so distinct reduced forms have
//! distinct values and comparisons can always be certified.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::boxes::BoxContinuum;
use crate::dyadic::Dyadic;
use crate::error::FtMetricError;
use crate::firsttime::continuum_first_increase;
use crate::hilbert::HilbertPoint;
use crate::systems::ShiftSystem;

/// Exact sum of powers of `lambda = 2^{-1/m}` in reduced form:
/// `value = sum_s coeffs[s] * lambda^s`, `0 <= s < m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaCost {
    m: u32,
    coeffs: Vec<Dyadic>,
}

impl LambdaCost {
    pub fn zero(m: u32) -> Self {
        assert!(m >= 1);
        LambdaCost { m, coeffs: vec![Dyadic::zero(); m as usize] }
    }

    /// `lambda^n`.
    pub fn lambda_pow(m: u32, n: u64) -> Self {
        let mut c = Self::zero(m);
        let q = (n / m as u64) as i64;
        let s = (n % m as u64) as usize;
        c.coeffs[s] = Dyadic::pow2(-q);
        c
    }

    pub fn exponent_base(&self) -> u32 {
        self.m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m);
        LambdaCost {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Multiply by `2^k`.
    pub fn scale_pow2(&self, k: i64) -> Self {
        LambdaCost {
            m: self.m,
            coeffs: self.coeffs.iter().map(|c| c.ldexp(k)).collect(),
        }
    }

    /// Multiply by `lambda^n`.
    pub fn mul_lambda_pow(&self, n: u64) -> Self {
        let mut out = Self::zero(self.m);
        let m = self.m as u64;
        for (s, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = s as u64 + n;
            let q = (e / m) as i64;
            let s2 = (e % m) as usize;
            out.coeffs[s2] = &out.coeffs[s2] + &c.ldexp(-q);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn to_f64(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| c.to_f64() * (-(s as f64) / self.m as f64).exp2())
            .sum()
    }

    /// Certified sign of the value.
    fn sign(&self) -> i32 {
        let signs: Vec<i32> = self.coeffs.iter().map(|c| c.sign()).collect();
        if signs.iter().all(|s| *s == 0) {
            return 0;
        }
        if signs.iter().all(|s| *s >= 0) {
            return 1;
        }
        if signs.iter().all(|s| *s <= 0) {
            return -1;
        }
        if self.m == 2 {
            // d0 + d1 * sqrt(1/2): compare d0^2 against d1^2 / 2
            let (d0, d1) = (&self.coeffs[0], &self.coeffs[1]);
            let lhs = d0 * d0;
            let rhs = (d1 * d1).ldexp(-1);
            let cmp = lhs.cmp(&rhs);
            return match (d0.sign(), cmp) {
                (1, Ordering::Greater) => 1,
                (1, Ordering::Less) => -1,
                (-1, Ordering::Greater) => -1,
                (-1, Ordering::Less) => 1,
                (_, Ordering::Equal) => 0, // impossible: sqrt(1/2) is irrational
                _ => unreachable!(),
            };
        }
        // general m: interval arithmetic on an enclosure of lambda
        let mut prec = 64i64;
        loop {
            let (lo, hi) = lambda_enclosure(self.m, prec);
            let mut sum_lo = Dyadic::zero();
            let mut sum_hi = Dyadic::zero();
            let mut plo = Dyadic::one();
            let mut phi = Dyadic::one();
            for c in &self.coeffs {
                match c.sign() {
                    1 => {
                        sum_lo = &sum_lo + &(c * &plo);
                        sum_hi = &sum_hi + &(c * &phi);
                    }
                    -1 => {
                        sum_lo = &sum_lo + &(c * &phi);
                        sum_hi = &sum_hi + &(c * &plo);
                    }
                    _ => {}
                }
                plo = &plo * &lo;
                phi = &phi * &hi;
            }
            if sum_lo.sign() > 0 {
                return 1;
            }
            if sum_hi.sign() < 0 {
                return -1;
            }
            prec *= 2;
            assert!(prec <= 4096, "sign of a nonzero lambda polynomial must separate");
        }
    }
}

/// Dyadic enclosure of `2^{-1/m}` of width `2^-prec` by bisection on
/// `z^m` against 1/2.
fn lambda_enclosure(m: u32, prec: i64) -> (Dyadic, Dyadic) {
    let mut lo = Dyadic::half();
    let mut hi = Dyadic::one();
    for _ in 0..prec {
        let mid = Dyadic::midpoint(&lo, &hi);
        let mut pow = Dyadic::one();
        for _ in 0..m {
            pow = &pow * &mid;
        }
        if pow < Dyadic::half() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

impl PartialOrd for LambdaCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LambdaCost {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut diff = self.clone();
        for (s, c) in other.coeffs.iter().enumerate() {
            diff.coeffs[s] = &diff.coeffs[s] - c;
        }
        match diff.sign() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
}

/// A continuum with two marked points.
#[derive(Clone, Debug)]
pub struct MarkedContinuum {
    pub continuum: BoxContinuum,
    pub p: HilbertPoint,
    pub q: HilbertPoint,
    pub n1_eps: u64,
    pub rho: LambdaCost,
}

/// Catalog of candidate decomposition pieces, all first-increasing.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub lambda_m: u32,
    pub epsilon: Dyadic,
    pub elements: Vec<CatalogElement>,
    /// the two structural hypotheses the ft-metric needs; enforced by
    /// construction on generated catalogs and recorded here
    pub assumes_backward_invariance: bool,
    pub assumes_closed_under_connected_unions: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogElement {
    pub continuum: BoxContinuum,
    pub n1_eps: u64,
    pub rho: LambdaCost,
}

/// `rho(C) = lambda^{n1(C, eps)}`.
pub fn rho(
    sys: &ShiftSystem,
    set: &BoxContinuum,
    epsilon: &Dyadic,
    lambda_m: u32,
    budget: u64,
) -> Result<(u64, LambdaCost), FtMetricError> {
    let rec = continuum_first_increase(sys, set, epsilon, budget)?;
    Ok((rec.n1, LambdaCost::lambda_pow(lambda_m, rec.n1)))
}

#[derive(Clone, Debug)]
pub struct ChainMetricResult {
    pub d_value: LambdaCost,
    /// indices into the catalog, in path order
    pub witness: Vec<usize>,
    /// one point in each consecutive intersection
    pub links: Vec<HilbertPoint>,
    pub rho_of_whole: LambdaCost,
    pub sandwich_ok: bool,
}

/// Cheapest chain from a p-containing element to a q-containing
/// element through the catalog intersection graph; cost is the sum of
/// the elements' rho values. Catalog-restricted, hence an upper bound
/// on the unrestricted infimum.
pub fn chain_d(
    catalog: &Catalog,
    whole: &BoxContinuum,
    whole_rho: &LambdaCost,
    p: &HilbertPoint,
    q: &HilbertPoint,
) -> Result<ChainMetricResult, FtMetricError> {
    let n = catalog.elements.len();
    assert!(whole.contains_point(p) && whole.contains_point(q), "marked points must lie in C");
    for el in &catalog.elements {
        assert!(
            whole.contains_box(&el.continuum),
            "catalog elements must be subsets of C"
        );
    }
    let adj = adjacency(catalog);
    // Dijkstra over node-weighted paths
    #[derive(PartialEq, Eq)]
    struct Entry(LambdaCost, usize);
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            other.0.cmp(&self.0) // min-heap
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    let mut dist: Vec<Option<LambdaCost>> = vec![None; n];
    let mut prev: Vec<usize> = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for (i, el) in catalog.elements.iter().enumerate() {
        if el.continuum.contains_point(p) {
            dist[i] = Some(el.rho.clone());
            heap.push(Entry(el.rho.clone(), i));
        }
    }
    let mut done = vec![false; n];
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if catalog.elements[u].continuum.contains_point(q) {
            // reconstruct
            let mut witness = vec![u];
            let mut v = u;
            while prev[v] != usize::MAX {
                v = prev[v];
                witness.push(v);
            }
            witness.reverse();
            let mut links = Vec::new();
            for w in witness.windows(2) {
                let a = &catalog.elements[w[0]].continuum;
                let b = &catalog.elements[w[1]].continuum;
                links.push(intersection_point(a, b).ok_or(FtMetricError::NoChain)?);
            }
            let four_d = d.scale_pow2(2);
            let sandwich_ok = d <= *whole_rho && *whole_rho <= four_d;
            return Ok(ChainMetricResult {
                d_value: d,
                witness,
                links,
                rho_of_whole: whole_rho.clone(),
                sandwich_ok,
            });
        }
        for &v in &adj[u] {
            if done[v] {
                continue;
            }
            let cand = d.add(&catalog.elements[v].rho);
            let better = match &dist[v] {
                None => true,
                Some(old) => cand < *old,
            };
            if better {
                dist[v] = Some(cand.clone());
                prev[v] = u;
                heap.push(Entry(cand, v));
            }
        }
    }
    Err(FtMetricError::NoChain)
}

fn adjacency(catalog: &Catalog) -> Vec<Vec<usize>> {
    let n = catalog.elements.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if catalog.elements[i]
                .continuum
                .intersects(&catalog.elements[j].continuum)
            {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// A point in the (nonempty) intersection of two boxes sharing their
/// tail structure.
pub fn intersection_point(a: &BoxContinuum, b: &BoxContinuum) -> Option<HilbertPoint> {
    if !a.intersects(b) {
        return None;
    }
    let fill_a = a.center_point()?;
    let lo = a.lo_index().min(b.lo_index()) - 1;
    let hi = a.hi_index().max(b.hi_index()) + 1;
    let mut p = HilbertPoint::constant(fill_a.fill().clone());
    for i in lo..=hi {
        let ia = a.interval_at(i);
        let ib = b.interval_at(i);
        let lo_v = ia.lo.clone().max(ib.lo.clone());
        let hi_v = ia.hi.clone().min(ib.hi.clone());
        p.set(i, Dyadic::midpoint(&lo_v, &hi_v));
    }
    if a.contains_point(&p) && b.contains_point(&p) {
        Some(p)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityCheck {
    pub n: u64,
    /// D of the backward-iterated marked continuum over the
    /// backward-iterated catalog
    pub d_backward: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `D(f^{-n}(C_{(p,q)})) <= 4 lambda^n D(C_{(p,q)})` for n up to
/// `n_max`, evaluated by re-running the chain search on the
/// backward-iterated catalog with recomputed first-increase exponents.
pub fn verify_hyperbolic(
    sys: &ShiftSystem,
    catalog: &Catalog,
    whole: &BoxContinuum,
    p: &HilbertPoint,
    q: &HilbertPoint,
    n_max: u64,
    budget: u64,
) -> Result<Vec<HyperbolicityCheck>, FtMetricError> {
    assert!(catalog.assumes_backward_invariance);
    let (_, rho0) = rho(sys, whole, &catalog.epsilon, catalog.lambda_m, budget)?;
    let base = chain_d(catalog, whole, &rho0, p, q)?;
    let mut out = Vec::new();
    for n in 0..=n_max {
        let mut back = catalog.clone();
        for el in &mut back.elements {
            el.continuum = el.continuum.shift(-(n as i64));
            let (n1, r) = rho(sys, &el.continuum, &back.epsilon, back.lambda_m, budget + n)?;
            // backward iteration adds exactly n to the first-increase time
            assert_eq!(n1, el.n1_eps + n, "rho backward scaling must be exact");
            el.rho = r;
        }
        let whole_b = whole.shift(-(n as i64));
        let (_, rho_b) = rho(sys, &whole_b, &back.epsilon, back.lambda_m, budget + n)?;
        let pb = p.shift(-(n as i64));
        let qb = q.shift(-(n as i64));
        let d_b = chain_d(&back, &whole_b, &rho_b, &pb, &qb)?;
        let bound = base.d_value.mul_lambda_pow(n).scale_pow2(2);
        let ok = d_b.d_value <= bound;
        out.push(HyperbolicityCheck {
            n,
            d_backward: d_b.d_value.to_f64(),
            bound: bound.to_f64(),
            ok,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainInequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `rho(union C_i) <= 2 rho(C_1) + 4 rho(C_2) + ... + 4 rho(C_{n-1}) +
/// 2 rho(C_n)` for consecutive-intersecting chains. The union's
/// first-increase time comes from the exact union diameter under
/// iteration.
pub fn chain_inequality_check(
    sys: &ShiftSystem,
    chain: &[BoxContinuum],
    epsilon: &Dyadic,
    lambda_m: u32,
    budget: u64,
) -> Result<ChainInequalityCheck, FtMetricError> {
    assert!(!chain.is_empty());
    for w in chain.windows(2) {
        assert!(w[0].intersects(&w[1]), "chain elements must intersect consecutively");
    }
    // n1 of the union via exact union diameters
    let mut shifted: Vec<BoxContinuum> = chain.to_vec();
    let mut n1_union = None;
    for j in 0..=budget {
        let d = BoxContinuum::union_diam(&shifted);
        if d > *epsilon {
            n1_union = Some(j);
            break;
        }
        for b in &mut shifted {
            *b = b.shift(1);
        }
    }
    let n1_union = n1_union.ok_or(crate::error::FirstTimeError::NotIncreasedWithinBudget {
        budget,
    })?;
    let lhs = LambdaCost::lambda_pow(lambda_m, n1_union);
    let mut rhs = LambdaCost::zero(lambda_m);
    for (i, c) in chain.iter().enumerate() {
        let (_, r) = rho(sys, c, epsilon, lambda_m, budget)?;
        let weight = if i == 0 || i == chain.len() - 1 { 1 } else { 2 };
        rhs = rhs.add(&r.scale_pow2(weight));
    }
    Ok(ChainInequalityCheck { lhs: lhs.to_f64(), rhs: rhs.to_f64(), ok: lhs <= rhs })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityCheck {
    pub delta: Dyadic,
    /// diam < eps 2^{-n(delta)} implies rho < delta held on every box
    pub small_diam_implies_small_rho: bool,
    /// rho < lambda^{2 m_delta} implies diam < delta held on every box
    pub small_rho_implies_small_diam: bool,
}

/// The two compatibility implications between rho and the diameter,
/// instantiated on a family of boxes for a grid of deltas.
pub fn compatibility_check(
    sys: &ShiftSystem,
    boxes: &[(BoxContinuum, u64)],
    epsilon: &Dyadic,
    lambda_m: u32,
    deltas: &[Dyadic],
) -> Vec<CompatibilityCheck> {
    let mut out = Vec::new();
    for delta in deltas {
        // (a): choose n with lambda^n < delta, then gamma_a = eps 2^{-n}
        let mut n = 0u64;
        while LambdaCost::lambda_pow(lambda_m, n).to_f64() >= delta.to_f64() {
            n += 1;
        }
        let gamma_a = epsilon.ldexp(-(n as i64));
        // (b): gamma_b = lambda^{2 m_delta}
        let m_delta = sys.m_gamma(&delta.clone().min(epsilon.clone()));
        let gamma_b = LambdaCost::lambda_pow(lambda_m, 2 * m_delta);
        let delta_cost = dyadic_cost(lambda_m, delta);
        let mut ok_a = true;
        let mut ok_b = true;
        for (bx, n1_eps) in boxes {
            let r = LambdaCost::lambda_pow(lambda_m, *n1_eps);
            if bx.diam() < gamma_a && !(r < delta_cost) {
                ok_a = false;
            }
            if r < gamma_b && !(bx.diam() < *delta) {
                ok_b = false;
            }
        }
        out.push(CompatibilityCheck {
            delta: delta.clone(),
            small_diam_implies_small_rho: ok_a,
            small_rho_implies_small_diam: ok_b,
        });
    }
    out
}

/// A dyadic constant as a lambda-polynomial (degree-zero term).
pub fn dyadic_cost(m: u32, v: &Dyadic) -> LambdaCost {
    let mut c = LambdaCost::zero(m);
    c.coeffs[0] = v.clone();
    c
}

/// A generated ft-metric instance: a base continuum with marked points
/// at a diameter-extremal pair, plus a catalog of subsets covering it
/// at several scales.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub catalog: Catalog,
    pub whole: BoxContinuum,
    pub whole_n1: u64,
    pub whole_rho: LambdaCost,
    pub p: HilbertPoint,
    pub q: HilbertPoint,
}

/// Build a catalog instance around a random anchor. The catalog holds
/// the base box itself (so the singleton chain keeps the restricted D
/// at or below rho) and ladders of standard boxes at finer scales,
/// shifted along the widest coordinate inside containment bounds.
///
/// The family of closed-form boxes is invariant under the inverse shift
/// (the parameter k moves to k + 1) and intersecting unions stay
/// connected first-increasing sets, which is what the backward and
/// union flags assert.
pub fn generate_catalog(
    sys: &ShiftSystem,
    seed: u64,
    base_k: i64,
    lambda_m: u32,
    min_elements: usize,
    budget: u64,
) -> Result<GeneratedInstance, FtMetricError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let eps = sys.epsilon.clone();
    let mut x = HilbertPoint::half();
    for i in -3i64..=3 {
        if rng.random_bool(0.5) {
            // keep coordinates in [3/8, 5/8] so the widest window stays
            // clear of the clipping boundary
            x.set(i, &Dyadic::from_ratio(3, 3) + &Dyadic::from_ratio(rng.random_range(0..=16), 6));
        }
    }
    let whole = BoxContinuum::fu_box(&x, base_k, &eps);
    let i_star = whole.widest_index();
    let iv = whole.interval_at(i_star);
    let base_center = whole.center_point().expect("closed-form tails agree");
    let mut p = base_center.clone();
    p.set(i_star, iv.lo.clone());
    let mut q = base_center.clone();
    q.set(i_star, iv.hi.clone());

    let mut boxes: Vec<BoxContinuum> = vec![whole.clone()];
    let mut dk = 1i64;
    while boxes.len() < min_elements {
        let k = base_k + dk;
        let r_sub = eps.ldexp(i_star - k);
        let steps = (1i64 << dk) - 1; // offsets t * r_sub, |t| <= steps
        for t in -steps..=steps {
            let mut c = base_center.clone();
            let center = x.coord(i_star) + &(&Dyadic::from_int(t) * &r_sub);
            c.set(i_star, center);
            boxes.push(BoxContinuum::fu_box(&c, k, &eps));
        }
        // a couple of off-axis elements for graph variety
        for _ in 0..2 {
            let mut c = base_center.clone();
            let t = rng.random_range(-steps..=steps);
            c.set(i_star, x.coord(i_star) + &(&Dyadic::from_int(t) * &r_sub));
            let side = if rng.random_bool(0.5) { i_star + 1 } else { i_star - 1 };
            let wiggle = eps.ldexp(side - k - 1);
            let shifted = &(c.coord(side)).clone() + &wiggle;
            if shifted <= Dyadic::one() {
                c.set(side, shifted);
            }
            let bx = BoxContinuum::fu_box(&c, k, &eps);
            if whole.contains_box(&bx) {
                boxes.push(bx);
            }
        }
        dk += 1;
        assert!(dk <= 8, "catalog generation ran away");
    }

    let (whole_n1, whole_rho) = rho(sys, &whole, &eps, lambda_m, budget)?;
    let elements = boxes
        .into_iter()
        .map(|continuum| {
            let (n1_eps, rho) = rho(sys, &continuum, &eps, lambda_m, budget)?;
            Ok(CatalogElement { continuum, n1_eps, rho })
        })
        .collect::<Result<Vec<_>, FtMetricError>>()?;
    Ok(GeneratedInstance {
        catalog: Catalog {
            lambda_m,
            epsilon: eps,
            elements,
            assumes_backward_invariance: true,
            assumes_closed_under_connected_unions: true,
        },
        whole,
        whole_n1,
        whole_rho,
        p,
        q,
    })
}

/// A random consecutive-intersecting chain of closed-form boxes for the
/// chain-inequality suite: each center steps at most the sum of the two
/// radii along coordinate zero, so consecutive elements always touch
/// (the other coordinates share their centers).
pub fn random_chain(
    sys: &ShiftSystem,
    seed: u64,
    len: usize,
    k_range: std::ops::RangeInclusive<i64>,
) -> Vec<BoxContinuum> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let eps = sys.epsilon.clone();
    let mut center = Dyadic::half();
    let mut out = Vec::with_capacity(len);
    let mut prev_r: Option<Dyadic> = None;
    for _ in 0..len {
        let k = rng.random_range(*k_range.start()..=*k_range.end());
        let r = eps.ldexp(-k);
        if let Some(pr) = &prev_r {
            let max_step = (&r + pr).to_f64();
            let step = rng.random_range(-1.0..=1.0) * max_step;
            // clamping only moves the candidate toward the previous
            // center, so the touching bound survives
            let cand = (center.to_f64() + step).clamp(0.25, 0.75);
            center = Dyadic::from_f64(cand).unwrap();
        }
        let mut x = HilbertPoint::half();
        x.set(0, center.clone());
        out.push(BoxContinuum::fu_box(&x, k, &eps));
        prev_r = Some(r);
    }
    for w in out.windows(2) {
        debug_assert!(w[0].intersects(&w[1]));
    }
    out
}
