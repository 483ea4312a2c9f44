//! Topological-entropy estimation: greedy maximal (n, delta)-separated
//! sets over a finite candidate pool (a lower-bound estimator with a
//! least-squares growth slope), and for the shift an exact split-tree
//! certificate: 2^depth points pairwise separated, machine-checked in
//! dyadic arithmetic, giving h >= log(2)/M.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::BoxContinuum;
use crate::dyadic::Dyadic;
use crate::error::{FtMetricError, SystemError};
use crate::hilbert::HilbertPoint;
use crate::systems::{Dynamics, ShiftSystem};

/// Result of one greedy packing run.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatedSetResult {
    pub n: u64,
    pub delta: f64,
    /// indices of the kept candidates, in insertion order
    pub kept: Vec<usize>,
    pub count: usize,
}

/// Precomputed forward orbits of the candidate pool. When the system
/// exposes 2-d grid positions the orbits are also flattened to plain
/// float pairs, which is what the packing inner loop runs on.
pub struct OrbitTable<P> {
    pub orbits: Vec<Vec<P>>,
    /// `flat[i * (n_max + 1) + k]` = position of candidate i at step k
    pub flat: Option<Vec<[f64; 2]>>,
    pub n_max: u64,
}

pub fn orbit_table<S: Dynamics>(
    sys: &S,
    candidates: &[S::Point],
    n_max: u64,
) -> Result<OrbitTable<S::Point>, SystemError> {
    let orbits = candidates
        .par_iter()
        .map(|x| {
            let mut orbit = Vec::with_capacity(n_max as usize + 1);
            orbit.push(x.clone());
            for k in 0..n_max {
                let next = sys.forward_point(&orbit[k as usize], 1)?;
                orbit.push(next);
            }
            Ok(orbit)
        })
        .collect::<Result<Vec<_>, SystemError>>()?;
    let all_positioned = orbits
        .iter()
        .flatten()
        .all(|p| sys.grid_position(p).is_some());
    let flat = if all_positioned && !orbits.is_empty() {
        Some(
            orbits
                .iter()
                .flat_map(|orbit| orbit.iter().map(|p| sys.grid_position(p).unwrap()))
                .collect(),
        )
    } else {
        None
    };
    Ok(OrbitTable { orbits, flat, n_max })
}

#[inline]
fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Packing pass over flattened torus orbits.
fn greedy_flat(flat: &[[f64; 2]], stride: usize, n: usize, delta: f64) -> Vec<usize> {
    let count = flat.len() / stride;
    let cells = (1.0 / delta).floor().max(1.0) as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell_of = |p: [f64; 2]| -> (i64, i64) {
        (
            ((p[0] * cells as f64).floor() as i64).rem_euclid(cells),
            ((p[1] * cells as f64).floor() as i64).rem_euclid(cells),
        )
    };
    let blocked = |a: usize, b: usize| -> bool {
        (0..=n).all(|k| {
            let p = flat[a * stride + k];
            let q = flat[b * stride + k];
            circ(p[0], q[0]).max(circ(p[1], q[1])) <= delta
        })
    };
    let mut kept: Vec<usize> = Vec::new();
    for ci in 0..count {
        let (cx, cy) = cell_of(flat[ci * stride]);
        let mut separated = true;
        'scan: for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                let key = ((cx + dx).rem_euclid(cells), (cy + dy).rem_euclid(cells));
                if let Some(bucket) = grid.get(&key) {
                    for &ki in bucket {
                        if blocked(ci, ki) {
                            separated = false;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if separated {
            grid.entry((cx, cy)).or_default().push(ci);
            kept.push(ci);
        }
    }
    kept
}

/// Greedy maximal (n, delta)-separated subset of the pool: a candidate
/// is kept iff some iterate k <= n puts it more than delta away from
/// every previously kept point. The count is a lower bound on the true
/// maximal cardinality.
pub fn separated_set_from_orbits<S: Dynamics>(
    sys: &S,
    table: &OrbitTable<S::Point>,
    n: u64,
    delta: f64,
) -> SeparatedSetResult {
    assert!(n <= table.n_max);
    if let Some(flat) = &table.flat {
        let kept = greedy_flat(flat, table.n_max as usize + 1, n as usize, delta);
        return SeparatedSetResult { n, delta, count: kept.len(), kept };
    }
    let blocked = |a: &[S::Point], b: &[S::Point]| -> bool {
        (0..=n as usize).all(|k| sys.point_dist_f64(&a[k], &b[k]) <= delta)
    };
    let mut kept: Vec<usize> = Vec::new();
    // spatial hash over the time-0 positions: a blocker must be within
    // delta at every iterate, in particular at k = 0
    let cells = (1.0 / delta).floor().max(1.0) as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell_of = |p: &S::Point| -> Option<(i64, i64)> {
        sys.grid_position(p).map(|xy| {
            (
                ((xy[0] * cells as f64).floor() as i64).rem_euclid(cells),
                ((xy[1] * cells as f64).floor() as i64).rem_euclid(cells),
            )
        })
    };
    for (ci, orbit) in table.orbits.iter().enumerate() {
        let mut separated = true;
        match cell_of(&orbit[0]) {
            Some((cx, cy)) => {
                'scan: for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        let key = ((cx + dx).rem_euclid(cells), (cy + dy).rem_euclid(cells));
                        if let Some(bucket) = grid.get(&key) {
                            for &ki in bucket {
                                if blocked(orbit, &table.orbits[ki]) {
                                    separated = false;
                                    break 'scan;
                                }
                            }
                        }
                    }
                }
            }
            None => {
                for &ki in &kept {
                    if blocked(orbit, &table.orbits[ki]) {
                        separated = false;
                        break;
                    }
                }
            }
        }
        if separated {
            if let Some(c) = cell_of(&orbit[0]) {
                grid.entry(c).or_default().push(ci);
            }
            kept.push(ci);
        }
    }
    SeparatedSetResult { n, delta, count: kept.len(), kept }
}

pub fn separated_set<S: Dynamics>(
    sys: &S,
    n: u64,
    delta: f64,
    candidates: &[S::Point],
) -> Result<SeparatedSetResult, SystemError> {
    let table = orbit_table(sys, candidates, n)?;
    Ok(separated_set_from_orbits(sys, &table, n, delta))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub delta: f64,
    pub pool: usize,
    /// (n, separated count)
    pub counts: Vec<(u64, usize)>,
    /// least-squares slope of log counts over the fit window
    pub slope: f64,
    /// the window [lo, hi] of n values used for the fit: the upper half
    /// of the range the pool still resolves (counts below pool/8)
    pub window: (u64, u64),
    pub residual: f64,
}

/// Growth-rate estimate of `log s(n, delta)`.
///
/// The default fit window is the upper half of `n <= n_max`. When the
/// greedy count rams into the pool ceiling there (95% of the pool kept:
/// nothing left to resolve), the window retreats to the upper half of
/// the range where counts stay below pool/8, the regime the pool still
/// resolves cleanly.
pub fn entropy_estimate<S: Dynamics>(
    sys: &S,
    delta: f64,
    n_max: u64,
    candidates: &[S::Point],
) -> Result<EntropyEstimate, SystemError> {
    let table = orbit_table(sys, candidates, n_max)?;
    let counts: Vec<(u64, usize)> = (0..=n_max)
        .map(|n| (n, separated_set_from_orbits(sys, &table, n, delta).count))
        .collect();
    let pool = candidates.len();
    let upper_lo = (n_max / 2).max(1);
    let ceiling = (pool as f64 * 0.95) as usize;
    let tail_saturated = counts
        .iter()
        .any(|(n, c)| *n >= upper_lo && *c >= ceiling);
    let (n_lo, n_hi) = if tail_saturated {
        let cap = (pool / 8).max(2);
        let n_hi = counts
            .iter()
            .rev()
            .find(|(_, c)| *c <= cap)
            .map(|(n, _)| *n)
            .unwrap_or(n_max);
        ((n_hi / 2).max(1).min(n_hi), n_hi)
    } else {
        (upper_lo, n_max)
    };
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .filter(|(n, _)| *n >= n_lo && *n <= n_hi)
        .map(|(n, c)| (*n as f64, (*c as f64).max(1.0).ln()))
        .collect();
    let (slope, residual) = least_squares(&pts);
    Ok(EntropyEstimate {
        delta,
        pool,
        counts,
        slope,
        window: (n_lo, n_hi),
        residual,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if den == 0.0 { 0.0 } else { num / den };
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    (slope, residual)
}

/// Deterministic low-discrepancy pool on the 2-torus (additive
/// recurrence with the plastic-number rotation).
pub fn torus_pool(count: usize) -> Vec<crate::torus::TorusPoint> {
    const A1: f64 = 0.754_877_666_246_693;
    const A2: f64 = 0.569_840_290_998_053;
    (0..count)
        .map(|i| {
            let t = i as f64 + 0.5;
            crate::torus::TorusPoint::new2((t * A1).fract(), (t * A2).fract())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// split tree
// ---------------------------------------------------------------------------

pub struct SplitTreeParams {
    /// separation scale; pairs are certified at delta/3
    pub delta: Dyadic,
    pub depth: u32,
    /// iterates per level
    pub m_steps: u64,
    /// parameter of the closed-form boxes attached at the split points
    pub box_k: i64,
}

#[derive(Debug)]
pub struct SplitTreeResult {
    pub delta: Dyadic,
    pub depth: u32,
    pub m_steps: u64,
    /// the 2^depth pulled-back points
    pub points: Vec<HilbertPoint>,
    pub pairs_checked: u64,
    /// every checked pair separated strictly above delta/3 at some
    /// iterate k*M <= depth*M (exact dyadic comparisons)
    pub separation_verified: bool,
    /// per-branch pullback chains stay strictly below delta/3
    pub chain_bound_verified: bool,
    /// every sigma^{kM}(y_w) verified within delta/3 of its level-k
    /// anchor (the geometric fact behind the pairwise separation)
    pub anchor_proximity_verified: bool,
    /// certified lower bound log(2)/M (natural log)
    pub h_lower_nats: f64,
}

struct Node {
    anchor: HilbertPoint,
    bx: BoxContinuum,
    parent: usize,
    level: u32,
}

/// `3 * sup_i |x_i - y_i| / 2^{|i|} > delta`, decided exactly with an
/// early exit in order of decreasing weight.
fn dist_thirds_exceed(x: &HilbertPoint, y: &HilbertPoint, delta: &Dyadic) -> bool {
    let radius = x.support_radius().max(y.support_radius());
    let three = Dyadic::from_int(3);
    let check = |i: i64| {
        let diff = x.coord(i) - y.coord(i);
        if diff.is_zero() {
            return false;
        }
        &diff.abs() * &three > delta.ldexp(i.abs())
    };
    if check(0) {
        return true;
    }
    for d in 1..=radius {
        if check(d) || check(-d) {
            return true;
        }
    }
    let tail = &(x.fill() - y.fill()).abs() * &three;
    tail > delta.ldexp(radius + 1)
}

/// Build the full binary split tree on the shift and verify the
/// separation certificate.
pub fn split_tree(
    sys: &ShiftSystem,
    c0: &BoxContinuum,
    params: &SplitTreeParams,
) -> Result<SplitTreeResult, FtMetricError> {
    let m = params.m_steps as i64;
    assert!(m >= 1);
    let root_anchor = c0
        .center_point()
        .expect("split-tree root must have aligned tails");
    let mut nodes = vec![Node {
        anchor: root_anchor.clone(),
        bx: c0.clone(),
        parent: usize::MAX,
        level: 0,
    }];
    let mut frontier = vec![0usize];
    for level in 1..=params.depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for &id in &frontier {
            let img = nodes[id].bx.shift(m);
            if img.diam() < params.delta {
                return Err(FtMetricError::SplitFailed { level });
            }
            let i_star = img.widest_index();
            let iv = img.interval_at(i_star);
            let base = img
                .center_point()
                .expect("shift images of closed-form boxes have aligned tails");
            for endpoint in [iv.lo.clone(), iv.hi.clone()] {
                let mut anchor = base.clone();
                anchor.set(i_star, endpoint);
                debug_assert!(img.contains_point(&anchor));
                let bx = BoxContinuum::fu_box(&anchor, params.box_k, &sys.epsilon);
                next.push(nodes.len());
                nodes.push(Node { anchor, bx, parent: id, level });
            }
        }
        frontier = next;
    }

    // pulled-back points: y_w = sigma^{-depth*M}(x_w)
    let n = params.depth as i64;
    let points: Vec<HilbertPoint> =
        frontier.iter().map(|&id| nodes[id].anchor.shift(-n * m)).collect();

    // branch chains: sum of pulled-back box diameters along each path
    // stays strictly below delta/3, which pins every sigma^{kM}(y_w)
    // within delta/3 of its level-k anchor
    let mut diam_memo: HashMap<(usize, u32), Dyadic> = HashMap::new();
    let mut chain_ok = true;
    let three = Dyadic::from_int(3);
    for &leaf in &frontier {
        // path from root (below the root box itself) to the leaf
        let mut path = Vec::new();
        let mut v = leaf;
        while v != usize::MAX && nodes[v].level > 0 {
            path.push(v);
            v = nodes[v].parent;
        }
        path.reverse();
        for start in 0..path.len() {
            let mut sum = Dyadic::zero();
            for (d, &id) in path[start..].iter().enumerate() {
                let key = (id, d as u32);
                let diam = diam_memo
                    .entry(key)
                    .or_insert_with(|| nodes[id].bx.shift(-(d as i64) * m).diam())
                    .clone();
                sum = &sum + &diam;
            }
            if &sum * &three >= params.delta {
                chain_ok = false;
            }
        }
    }

    // pairwise separation: a pair first differing at level k separates
    // at iterate k*M; verify the distance there exceeds delta/3 exactly
    let leaf_ids = frontier.clone();
    let depth = params.depth;
    let checks: Vec<(usize, usize, u32)> = {
        let mut v = Vec::new();
        for a in 0..leaf_ids.len() {
            for b in a + 1..leaf_ids.len() {
                // first differing level from the leaf index bit paths
                let diff = (a ^ b) as u64;
                let bit = 63 - diff.leading_zeros() as u64; // highest differing bit
                let k = depth as u64 - bit; // level 1 = first split
                v.push((a, b, k as u32));
            }
        }
        v
    };
    let shifted: Vec<Vec<HilbertPoint>> = leaf_ids
        .par_iter()
        .map(|&id| {
            (1..=depth)
                .map(|k| nodes[id].anchor.shift(-((depth - k) as i64) * m))
                .collect()
        })
        .collect();
    let separation_verified = checks
        .par_iter()
        .all(|&(a, b, k)| {
            dist_thirds_exceed(
                &shifted[a][(k - 1) as usize],
                &shifted[b][(k - 1) as usize],
                &params.delta,
            )
        });

    // sigma^{kM}(y_w) must hug the level-k anchor within delta/3
    let three = Dyadic::from_int(3);
    let anchor_proximity_verified = leaf_ids
        .par_iter()
        .enumerate()
        .all(|(li, &leaf)| {
            let mut path = Vec::new();
            let mut v = leaf;
            while v != usize::MAX && nodes[v].level > 0 {
                path.push(v);
                v = nodes[v].parent;
            }
            path.reverse();
            path.iter().enumerate().all(|(ki, &id)| {
                let d = crate::hilbert::hilbert_dist(&shifted[li][ki], &nodes[id].anchor);
                &d * &three < params.delta
            })
        });

    Ok(SplitTreeResult {
        delta: params.delta.clone(),
        depth: params.depth,
        m_steps: params.m_steps,
        points,
        pairs_checked: checks.len() as u64,
        separation_verified,
        chain_bound_verified: chain_ok,
        anchor_proximity_verified,
        h_lower_nats: std::f64::consts::LN_2 / params.m_steps as f64,
    })
}
