//! Coordinatewise interval products in `[0,1]^Z` with a finite explicit
//! window and closed-form tail rules.
//!
//! A [`BoxContinuum`] represents balls of the shift, their forward and
//! backward images, and the closed-form local cw-unstable continua. All
//! coordinates outside the window are determined exactly by the tail
//! rules, and the weighted sup over either tail is attained at the first
//! tail index (the per-coordinate quantities are monotone in the index
//! while the weight 2^{-|i|} decays), so diameters, cross distances and
//! containment checks are exact.

use serde::Serialize;

use crate::dyadic::Dyadic;
use crate::error::GeometryError;
use crate::hilbert::HilbertPoint;

/// Closed subinterval of [0,1].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        assert!(lo >= Dyadic::zero() && hi <= Dyadic::one(), "interval [{lo}, {hi}] not in [0,1]");
        Interval { lo, hi }
    }

    /// `[c - r, c + r] ∩ [0,1]`.
    pub fn around(center: &Dyadic, radius: &Dyadic) -> Self {
        Interval::new((center - radius).clamp01(), (center + radius).clamp01())
    }

    pub fn full() -> Self {
        Interval { lo: Dyadic::zero(), hi: Dyadic::one() }
    }

    pub fn point(v: Dyadic) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn len(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Dyadic {
        Dyadic::midpoint(&self.lo, &self.hi)
    }

    pub fn contains(&self, v: &Dyadic) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Hausdorff distance between two intervals.
    pub fn dh(&self, other: &Interval) -> Dyadic {
        (&self.lo - &other.lo).abs().max((&self.hi - &other.hi).abs())
    }

    /// `max |s - t|` over `s` in self, `t` in other.
    pub fn max_gap(&self, other: &Interval) -> Dyadic {
        (&self.hi - &other.lo).max(&other.hi - &self.lo)
    }
}

/// Rule for all coordinates beyond the explicit window on one side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Tail {
    /// Every tail coordinate is this fixed interval. `[0,1]` plays the
    /// full-interval role, a degenerate interval the constant-point role.
    Const(Interval),
    /// Coordinate `i` is `[c - eps*2^{i-k}, c + eps*2^{i-k}] ∩ [0,1]`.
    /// Radii shrink toward -infinity; on the right side construction
    /// materializes the growth until the interval saturates to [0,1].
    Shrinking { center: Dyadic, k: i64, eps: Dyadic },
}

impl Tail {
    pub fn full() -> Self {
        Tail::Const(Interval::full())
    }

    fn interval_at(&self, i: i64) -> Interval {
        match self {
            Tail::Const(iv) => iv.clone(),
            Tail::Shrinking { center, k, eps } => {
                Interval::around(center, &eps.ldexp(i - k))
            }
        }
    }

    /// Limit of the intervals as the index goes to the far left.
    fn left_limit(&self) -> Interval {
        match self {
            Tail::Const(iv) => iv.clone(),
            Tail::Shrinking { center, .. } => Interval::point(center.clone()),
        }
    }

    fn shift(&self, steps: i64) -> Self {
        match self {
            Tail::Const(iv) => Tail::Const(iv.clone()),
            Tail::Shrinking { center, k, eps } => {
                Tail::Shrinking { center: center.clone(), k: k - steps, eps: eps.clone() }
            }
        }
    }
}

/// Spec view of one window entry: the coordinate interval at `index`,
/// carrying weight `2^{-|index|}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedInterval {
    pub index: i64,
    pub lo: Dyadic,
    pub hi: Dyadic,
}

/// Product of closed coordinate intervals: explicit window plus tails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxContinuum {
    lo_index: i64,
    window: Vec<Interval>,
    left: Tail,
    right: Tail,
}

impl BoxContinuum {
    pub fn new(lo_index: i64, window: Vec<Interval>, left: Tail, right: Tail) -> Self {
        assert!(!window.is_empty(), "window must be nonempty");
        BoxContinuum { lo_index, window, left, right }.normalized()
    }

    /// Window must cover index 0 (so each tail lives strictly on one
    /// side of it and the weight is monotone along the tail), and the
    /// right tail must not be a growing Shrinking rule: it is
    /// materialized until it saturates to [0,1].
    fn normalized(mut self) -> Self {
        while self.lo_index > 0 {
            self.lo_index -= 1;
            self.window.insert(0, self.left.interval_at(self.lo_index));
        }
        while self.hi_index() < 0 {
            self.window.push(self.right.interval_at(self.hi_index() + 1));
        }
        if let Tail::Shrinking { center: _, k, eps } = &self.right {
            let (k, eps) = (*k, eps.clone());
            while eps.ldexp(self.hi_index() + 1 - k) < Dyadic::one() {
                self.window.push(self.right.interval_at(self.hi_index() + 1));
            }
            self.right = Tail::full();
        }
        self
    }

    pub fn lo_index(&self) -> i64 {
        self.lo_index
    }

    pub fn hi_index(&self) -> i64 {
        self.lo_index + self.window.len() as i64 - 1
    }

    pub fn left_tail(&self) -> &Tail {
        &self.left
    }

    pub fn right_tail(&self) -> &Tail {
        &self.right
    }

    /// The coordinate interval at any index, window or tail.
    pub fn interval_at(&self, i: i64) -> Interval {
        if i < self.lo_index {
            self.left.interval_at(i)
        } else if i > self.hi_index() {
            self.right.interval_at(i)
        } else {
            self.window[(i - self.lo_index) as usize].clone()
        }
    }

    pub fn window_intervals(&self) -> Vec<WeightedInterval> {
        self.window
            .iter()
            .enumerate()
            .map(|(n, iv)| WeightedInterval {
                index: self.lo_index + n as i64,
                lo: iv.lo.clone(),
                hi: iv.hi.clone(),
            })
            .collect()
    }

    /// Closure of the ball `B(x, r)` in the weighted sup-metric:
    /// coordinate `i` is `[x_i - 2^{|i|} r, x_i + 2^{|i|} r] ∩ [0,1]`.
    pub fn ball(x: &HilbertPoint, r: &Dyadic) -> Self {
        assert!(r.sign() > 0, "ball radius must be positive");
        // beyond |i| = t the scaled radius is >= 1 and the interval is [0,1]
        let mut t = -r.log2_floor().unwrap();
        while r.ldexp(t) < Dyadic::one() {
            t += 1;
        }
        let m = t.max(x.support_radius()).max(1);
        let window = (-m..=m).map(|i| Interval::around(x.coord(i), &r.ldexp(i.abs()))).collect();
        BoxContinuum::new(-m, window, Tail::full(), Tail::full())
    }

    /// The closed-form local cw-unstable continuum of the shift:
    /// coordinate `i` is `[x_i - 2^{i-k} eps, x_i + 2^{i-k} eps] ∩ [0,1]`.
    pub fn fu_box(x: &HilbertPoint, k: i64, eps: &Dyadic) -> Self {
        assert!(k >= 0);
        assert!(*eps < Dyadic::from_ratio(1, 2), "eps must be below the sensitivity bound 1/4");
        let s = x.support_radius().max(1);
        let window =
            (-s..=s).map(|i| Interval::around(x.coord(i), &eps.ldexp(i - k))).collect();
        let tail = Tail::Shrinking { center: x.fill().clone(), k, eps: eps.clone() };
        BoxContinuum::new(-s, window, tail.clone(), tail)
    }

    /// Constant-radius product `prod_i [x_i - r, x_i + r] ∩ [0,1]`.
    pub fn const_box(x: &HilbertPoint, r: &Dyadic) -> Self {
        let s = x.support_radius().max(1);
        let window = (-s..=s).map(|i| Interval::around(x.coord(i), r)).collect();
        let tail = Tail::Const(Interval::around(x.fill(), r));
        BoxContinuum::new(-s, window, tail.clone(), tail)
    }

    /// Degenerate box holding a single point.
    pub fn singleton(x: &HilbertPoint) -> Self {
        let s = x.support_radius().max(1);
        let window = (-s..=s).map(|i| Interval::point(x.coord(i).clone())).collect();
        let tail = Tail::Const(Interval::point(x.fill().clone()));
        BoxContinuum::new(-s, window, tail.clone(), tail)
    }

    /// `sigma^steps` image: the interval at new index `m` is the old
    /// interval at `m + steps`.
    pub fn shift(&self, steps: i64) -> Self {
        BoxContinuum {
            lo_index: self.lo_index - steps,
            window: self.window.clone(),
            left: self.left.shift(steps),
            right: self.right.shift(steps),
        }
        .normalized()
    }

    fn weighted_len(&self, i: i64) -> Dyadic {
        self.interval_at(i).len().ldexp(-i.abs())
    }

    /// Exact diameter `sup_i len(I_i) / 2^{|i|}`.
    ///
    /// The window part is a finite max; on each tail both the interval
    /// length and the weight are non-increasing outward, so the tail sup
    /// is the first tail term.
    pub fn diam(&self) -> Dyadic {
        let mut best = self.weighted_len(self.lo_index - 1);
        for i in self.lo_index..=self.hi_index() {
            let w = self.weighted_len(i);
            if w > best {
                best = w;
            }
        }
        best.max(self.weighted_len(self.hi_index() + 1))
    }

    /// Index attaining the diameter; ties prefer the smallest |i|, and
    /// the non-negative side on +/- ties.
    pub fn widest_index(&self) -> i64 {
        let mut order: Vec<i64> = (self.lo_index - 1..=self.hi_index() + 1).collect();
        order.sort_by_key(|i| (i.abs(), i.signum() < 0));
        let mut best = order[0];
        let mut best_w = self.weighted_len(best);
        for &i in &order[1..] {
            let w = self.weighted_len(i);
            if w > best_w {
                best = i;
                best_w = w;
            }
        }
        best
    }

    /// Midpoint per coordinate. Defined when both tails agree on their
    /// limiting fill value.
    pub fn center_point(&self) -> Option<HilbertPoint> {
        let lf = self.left.left_limit().midpoint();
        let rf = match &self.right {
            Tail::Const(iv) => iv.midpoint(),
            Tail::Shrinking { center, .. } => center.clone(),
        };
        if lf != rf {
            return None;
        }
        let mut p = HilbertPoint::constant(lf);
        for wi in self.window_intervals() {
            p.set(wi.index, Dyadic::midpoint(&wi.lo, &wi.hi));
        }
        Some(p)
    }

    pub fn contains_point(&self, p: &HilbertPoint) -> bool {
        let lo = self.lo_index.min(-p.support_radius()) - 1;
        let hi = self.hi_index().max(p.support_radius()) + 1;
        for i in lo..=hi {
            if !self.interval_at(i).contains(p.coord(i)) {
                return false;
            }
        }
        // beyond the scan: the point sits at its fill, the box follows
        // its tails; Shrinking tails pinch to their center in the limit
        self.left.left_limit().contains(p.fill()) && {
            match &self.right {
                Tail::Const(iv) => iv.contains(p.fill()),
                Tail::Shrinking { .. } => unreachable!("right tail is normalized"),
            }
        }
    }

    /// Nonempty intersection (all coordinates are closed intervals).
    pub fn intersects(&self, other: &Self) -> bool {
        let lo = self.lo_index.min(other.lo_index);
        let hi = self.hi_index().max(other.hi_index());
        for i in lo..=hi {
            if !self.interval_at(i).overlaps(&other.interval_at(i)) {
                return false;
            }
        }
        // left tails: a Shrinking tail pinches to its center, so overlap
        // at every deeper index requires the limits themselves to meet
        left_limits_meet(&self.left, &other.left)
            && const_tails_overlap(&self.right, &other.right)
    }

    /// `other ⊆ self`, coordinatewise.
    pub fn contains_box(&self, other: &Self) -> bool {
        let lo = self.lo_index.min(other.lo_index) - 1;
        let hi = self.hi_index().max(other.hi_index()) + 1;
        for i in lo..=hi {
            if !self.interval_at(i).contains_interval(&other.interval_at(i)) {
                return false;
            }
        }
        left_tail_contains(&self.left, &other.left, lo)
            && right_tail_contains(&self.right, &other.right)
    }

    /// `max d(s, t)` over `s` in self, `t` in other: exact, coordinatewise.
    pub fn cross_sup(&self, other: &Self) -> Dyadic {
        let lo = self.lo_index.min(other.lo_index);
        let hi = self.hi_index().max(other.hi_index());
        let term = |i: i64| {
            self.interval_at(i).max_gap(&other.interval_at(i)).ldexp(-i.abs())
        };
        // window hull plus the first index of each tail; the max-gap is
        // non-increasing outward on both tails while the weight decays
        let mut best = term(lo - 1);
        for i in lo..=hi + 1 {
            let t = term(i);
            if t > best {
                best = t;
            }
        }
        best
    }

    /// Exact diameter of a finite union of boxes: the sup over pairs
    /// splits into per-box diameters and pairwise cross sups.
    pub fn union_diam(boxes: &[BoxContinuum]) -> Dyadic {
        assert!(!boxes.is_empty());
        let mut best = Dyadic::zero();
        for (n, a) in boxes.iter().enumerate() {
            best = best.max(a.diam());
            for b in &boxes[n + 1..] {
                best = best.max(a.cross_sup(b));
            }
        }
        best
    }

    /// Hausdorff distance between box products under the weighted
    /// sup-metric: `sup_i d_H(I_i, J_i) / 2^{|i|}`.
    ///
    /// The window hull is a finite exact max. Tail contributions are
    /// zero for structurally equal tails; otherwise they are resolved by
    /// scanning a prefix and certifying that the remainder (bounded by
    /// the weight decay and the shrinking radii) cannot affect the max.
    pub fn hausdorff(&self, other: &Self) -> Result<Dyadic, GeometryError> {
        let lo = self.lo_index.min(other.lo_index);
        let hi = self.hi_index().max(other.hi_index());
        let term = |i: i64| self.interval_at(i).dh(&other.interval_at(i)).ldexp(-i.abs());
        let mut best = Dyadic::zero();
        for i in lo..=hi {
            let t = term(i);
            if t > best {
                best = t;
            }
        }
        let left = tail_dh_sup(&self.left, &other.left, lo, Side::Left, &best)?;
        best = best.max(left);
        let right = tail_dh_sup(&self.right, &other.right, hi, Side::Right, &best)?;
        Ok(best.max(right))
    }
}

fn left_limits_meet(a: &Tail, b: &Tail) -> bool {
    match (a, b) {
        (Tail::Const(i), Tail::Const(j)) => i.overlaps(j),
        (Tail::Shrinking { center, .. }, Tail::Const(j))
        | (Tail::Const(j), Tail::Shrinking { center, .. }) => j.contains(center),
        (Tail::Shrinking { center: c1, .. }, Tail::Shrinking { center: c2, .. }) => c1 == c2,
    }
}

fn const_tails_overlap(a: &Tail, b: &Tail) -> bool {
    match (a, b) {
        (Tail::Const(i), Tail::Const(j)) => i.overlaps(j),
        _ => unreachable!("right tails are normalized to Const"),
    }
}

/// Containment of the inner left tail in the outer one for every index
/// below `edge` (the scan already checked index `edge` itself).
fn left_tail_contains(outer: &Tail, inner: &Tail, edge: i64) -> bool {
    match (outer, inner) {
        (Tail::Const(o), Tail::Const(i)) => o.contains_interval(i),
        // inner intervals nest inward as the radius shrinks, so the
        // scanned edge index dominates all deeper ones
        (Tail::Const(o), Tail::Shrinking { .. }) => {
            o.contains_interval(&inner.interval_at(edge))
        }
        // the outer pinches to a point; only a matching degenerate
        // inner interval stays inside forever
        (Tail::Shrinking { center, .. }, Tail::Const(i)) => {
            i.lo == i.hi && i.lo == *center
        }
        (
            Tail::Shrinking { center: co, k: ko, eps: eo },
            Tail::Shrinking { center: ci, k: ki, eps: ei },
        ) => co == ci && ei.ldexp(-ki) <= eo.ldexp(-ko),
    }
}

fn right_tail_contains(outer: &Tail, inner: &Tail) -> bool {
    match (outer, inner) {
        (Tail::Const(o), Tail::Const(i)) => o.contains_interval(i),
        _ => unreachable!("right tails are normalized to Const"),
    }
}

enum Side {
    Left,
    Right,
}

/// Exact sup of the weighted coordinate Hausdorff distances over one
/// tail, or an error when the pairing cannot be certified.
fn tail_dh_sup(
    a: &Tail,
    b: &Tail,
    edge: i64,
    side: Side,
    window_max: &Dyadic,
) -> Result<Dyadic, GeometryError> {
    if a == b {
        return Ok(Dyadic::zero());
    }
    let at = |depth: i64| -> i64 {
        match side {
            Side::Left => edge - depth,
            Side::Right => edge + depth,
        }
    };
    if let (Tail::Const(_), Tail::Const(_)) = (a, b) {
        // constant distance, decaying weight: first index attains the sup
        let i = at(1);
        return Ok(a.interval_at(i).dh(&b.interval_at(i)).ldexp(-i.abs()));
    }
    // Mixed or shrinking pair (left side only; right tails are Const).
    // Scan a prefix; past depth D every term is bounded by
    // (limit distance + both radii) * weight, which the scan max or the
    // window max must dominate for the result to be exact.
    let mut depth = 64i64;
    loop {
        let mut tail_max = Dyadic::zero();
        for d in 1..=depth {
            let i = at(d);
            let t = a.interval_at(i).dh(&b.interval_at(i)).ldexp(-i.abs());
            tail_max = tail_max.max(t);
        }
        let i = at(depth + 1);
        let slack = shrink_radius(a, i) + shrink_radius(b, i);
        let limit = a.left_limit().dh(&b.left_limit());
        let remainder = (&limit + &slack).ldexp(-i.abs());
        if tail_max >= remainder || *window_max >= remainder {
            return Ok(tail_max);
        }
        depth *= 4;
        if depth > 4096 {
            return Err(GeometryError::IncompatibleRepresentation(
                "tail rules cannot be aligned for an exact Hausdorff distance".into(),
            ));
        }
    }
}

fn shrink_radius(t: &Tail, i: i64) -> Dyadic {
    match t {
        Tail::Const(_) => Dyadic::zero(),
        Tail::Shrinking { eps, k, .. } => eps.ldexp(i - k),
    }
}
