//! Normal searches as finite waypoint sequences, with exact evaluation.
//!
//! A trajectory interpolates consecutive waypoints by unit-speed
//! geodesics. First-visit times per arc form a lower envelope of ±1-slope
//! affine sweeps, so expected search times are exact integrals of affine
//! functions against the cdf pieces. On top of that sit the depth-first
//! machinery: enumeration, the closed forms for balanced distributions,
//! the DF/non-DF decomposition of an arbitrary search, single-turn
//! comparisons on two-arc stars, and the density swap check.

use crate::classify::{is_balanced, is_forward_biased, Verdict};
use crate::hiding::HidingDistribution;
use crate::net::{ArcId, NetPoint, NodeId, TreeNetwork};
use crate::poly::Poly;
use crate::rat::{fmt_rat, Rat};
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// One directed constant-slope sweep along an arc.
#[derive(Clone, Debug)]
pub struct Segment {
    pub arc: ArcId,
    pub start: Rat,
    pub from: Rat,
    pub to: Rat,
}

impl Segment {
    pub fn len(&self) -> Rat {
        (&self.to - &self.from).abs()
    }

    pub fn end(&self) -> Rat {
        &self.start + self.len()
    }

    fn lo(&self) -> &Rat {
        if self.from <= self.to { &self.from } else { &self.to }
    }

    fn hi(&self) -> &Rat {
        if self.from >= self.to { &self.from } else { &self.to }
    }

    /// First-visit candidate as an affine polynomial of the offset.
    fn time_poly(&self) -> Poly {
        if self.to >= self.from {
            Poly::affine(&self.start - &self.from, Rat::one())
        } else {
            Poly::affine(&self.start + &self.from, -Rat::one())
        }
    }

    /// The sub-sweep between two times (clipped); None when empty.
    fn clip(&self, t0: &Rat, t1: &Rat) -> Option<Segment> {
        let a = t0.max(&self.start).clone();
        let b = t1.min(&self.end()).clone();
        if a >= b {
            return None;
        }
        let dir = if self.to >= self.from { Rat::one() } else { -Rat::one() };
        let from = &self.from + &dir * (&a - &self.start);
        let to = &self.from + &dir * (&b - &self.start);
        Some(Segment { arc: self.arc, start: a, from, to })
    }
}

/// A normal search: a finite waypoint sequence starting at the root,
/// moved between at unit speed along geodesics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    waypoints: Vec<NetPoint>,
    segments: Vec<Segment>,
    duration: Rat,
}

/// Expected search time, or the unreached mass of a non-terminating
/// search (whose expected time is infinite).
#[derive(Clone, Debug, PartialEq)]
pub enum SearchTime {
    Finite(Rat),
    Unreached(Rat),
}

impl SearchTime {
    pub fn value(&self) -> Result<&Rat> {
        match self {
            SearchTime::Finite(v) => Ok(v),
            SearchTime::Unreached(m) => Err(Error::NotTerminating(fmt_rat(m))),
        }
    }
}

/// First-visit times on one arc: the lower envelope of the sweeps, as
/// affine pieces over the covered sub-intervals, plus the uncovered gaps.
#[derive(Clone, Debug, Default)]
struct ArcEnvelope {
    pieces: Vec<(Rat, Rat, Poly)>,
    gaps: Vec<(Rat, Rat)>,
}

impl ArcEnvelope {
    fn eval(&self, o: &Rat) -> Option<Rat> {
        self.pieces
            .iter()
            .filter(|(lo, hi, _)| lo <= o && o <= hi)
            .map(|(_, _, t)| t.eval(o))
            .min()
    }

    /// Max of the first-visit function over `[lo, hi]` (one-sided limits
    /// at piece boundaries included); None when the range is not fully
    /// covered.
    fn max_on(&self, lo: &Rat, hi: &Rat) -> Option<Rat> {
        if self.gaps.iter().any(|(glo, ghi)| glo < hi && lo < ghi) {
            return None;
        }
        let mut best: Option<Rat> = None;
        for (plo, phi, t) in &self.pieces {
            let a = lo.max(plo);
            let b = hi.min(phi);
            if a > b {
                continue;
            }
            for x in [a, b] {
                let v = t.eval(x);
                if best.as_ref().is_none_or(|m| &v > m) {
                    best = Some(v);
                }
            }
        }
        best
    }
}

struct Envelopes {
    per_arc: Vec<ArcEnvelope>,
}

impl Envelopes {
    fn build(q: &TreeNetwork, segments: &[Segment]) -> Envelopes {
        let mut per_arc = vec![Vec::new(); q.n_arcs()];
        for s in segments {
            per_arc[s.arc.0].push(s.clone());
        }
        let per_arc = per_arc
            .into_iter()
            .enumerate()
            .map(|(i, segs)| Self::build_arc(&q.arc(ArcId(i)).len, &segs))
            .collect();
        Envelopes { per_arc }
    }

    fn build_arc(len: &Rat, segs: &[Segment]) -> ArcEnvelope {
        let mut events: BTreeSet<Rat> = BTreeSet::new();
        events.insert(Rat::zero());
        events.insert(len.clone());
        for s in segs {
            events.insert(s.lo().clone());
            events.insert(s.hi().clone());
        }
        for (i, a) in segs.iter().enumerate() {
            for b in segs.iter().skip(i + 1) {
                let pa = a.time_poly();
                let pb = b.time_poly();
                let d1 = pa.coeff(1) - pb.coeff(1);
                if d1.is_zero() {
                    continue;
                }
                let x = (pb.coeff(0) - pa.coeff(0)) / d1;
                if &x > a.lo() && &x < a.hi() && &x > b.lo() && &x < b.hi() {
                    events.insert(x);
                }
            }
        }
        let events: Vec<Rat> = events.into_iter().collect();
        let two = Rat::from_integer(2.into());
        let mut env = ArcEnvelope::default();
        for w in events.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let mid = (lo + hi) / &two;
            let best = segs
                .iter()
                .filter(|s| s.lo() <= lo && hi <= s.hi())
                .map(|s| s.time_poly())
                .min_by(|p, q| p.eval(&mid).cmp(&q.eval(&mid)));
            match best {
                Some(t) => {
                    // Merge with the previous piece when it continues it.
                    if let Some((_, phi, pt)) = env.pieces.last_mut() {
                        if phi == lo && pt == &t {
                            *phi = hi.clone();
                            continue;
                        }
                    }
                    env.pieces.push((lo.clone(), hi.clone(), t));
                }
                None => {
                    if let Some((_, ghi)) = env.gaps.last_mut() {
                        if &*ghi == lo {
                            *ghi = hi.clone();
                            continue;
                        }
                    }
                    env.gaps.push((lo.clone(), hi.clone()));
                }
            }
        }
        env
    }

    fn arc(&self, a: ArcId) -> &ArcEnvelope {
        &self.per_arc[a.0]
    }

    /// First-visit time of a point, minimized over the node's arc
    /// representations when the point is a node.
    fn first_visit(&self, q: &TreeNetwork, p: &NetPoint) -> Option<Rat> {
        match q.node_at(p) {
            None => self.per_arc[p.arc.0].eval(&p.offset),
            Some(v) => {
                let mut best: Option<Rat> = None;
                let mut consider = |t: Option<Rat>| {
                    if let Some(t) = t {
                        if best.as_ref().is_none_or(|b| &t < b) {
                            best = Some(t);
                        }
                    }
                };
                if let Some(pa) = q.parent_arc(v) {
                    consider(self.per_arc[pa.0].eval(&q.arc(pa).len));
                }
                for &c in q.children(v) {
                    consider(self.per_arc[c.0].eval(&Rat::zero()));
                }
                best
            }
        }
    }
}

impl Trajectory {
    /// Builds the normal search through the waypoints; must start at the
    /// root.
    pub fn new(q: &TreeNetwork, waypoints: Vec<NetPoint>) -> Result<Trajectory> {
        if waypoints.first() != Some(&q.root_point()) {
            return Err(Error::TrajectoryNotAtRoot);
        }
        let mut segments = Vec::new();
        let mut clock = Rat::zero();
        for pair in waypoints.windows(2) {
            for (arc, from, to) in q.path_between(&pair[0], &pair[1]) {
                let len = (&to - &from).abs();
                segments.push(Segment { arc, start: clock.clone(), from, to });
                clock += len;
            }
        }
        Ok(Trajectory { waypoints, segments, duration: clock })
    }

    pub fn waypoints(&self) -> &[NetPoint] {
        &self.waypoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total duration M of the waypoint path.
    pub fn duration(&self) -> &Rat {
        &self.duration
    }

    /// The time-reversed search S⁻¹(t) = S(M − t); valid when the search
    /// ends back at the root.
    pub fn reversed(&self, q: &TreeNetwork) -> Result<Trajectory> {
        let mut w = self.waypoints.clone();
        w.reverse();
        Trajectory::new(q, w)
    }

    /// Position at a given time (clamped to [0, M]).
    pub fn position_at(&self, q: &TreeNetwork, t: &Rat) -> NetPoint {
        if self.segments.is_empty() || t <= &Rat::zero() {
            return self.waypoints.first().cloned().unwrap_or_else(|| q.root_point());
        }
        for s in &self.segments {
            if t <= &s.end() {
                if t < &s.start {
                    break;
                }
                let dir = if s.to >= s.from { Rat::one() } else { -Rat::one() };
                let off = &s.from + dir * (t - &s.start);
                return q.point_on(s.arc, off).expect("segments stay on their arc");
            }
        }
        self.waypoints.last().cloned().unwrap()
    }

    /// First-visit time T(S, x); None when the search never reaches x.
    pub fn first_visit(&self, q: &TreeNetwork, x: &NetPoint) -> Option<Rat> {
        Envelopes::build(q, &self.segments).first_visit(q, x)
    }

    /// First-visit times for many points at once (one envelope build).
    pub fn first_visits(&self, q: &TreeNetwork, points: &[NetPoint]) -> Vec<Option<Rat>> {
        let env = Envelopes::build(q, &self.segments);
        points.iter().map(|x| env.first_visit(q, x)).collect()
    }

    /// Whether the search covers the whole network.
    pub fn is_terminating(&self, q: &TreeNetwork) -> bool {
        let env = Envelopes::build(q, &self.segments);
        env.per_arc.iter().all(|e| e.gaps.is_empty())
    }

    /// Exact expected search time ∫ T(S, x) dh(x); reports the unreached
    /// mass instead when positive mass is never visited.
    pub fn expected_time(&self, q: &TreeNetwork, h: &HidingDistribution) -> SearchTime {
        let env = Envelopes::build(q, &self.segments);
        // Unreached mass: continuous mass of the gaps plus atoms at
        // never-visited nodes.
        let mut unreached = Rat::zero();
        for (a, _) in q.arcs() {
            for (lo, hi) in &env.arc(a).gaps {
                unreached += h.arc_cdf(a).eval(hi) - h.arc_cdf(a).eval(lo);
            }
        }
        for v in q.nodes() {
            if !h.atom(v).is_zero() && env.first_visit(q, &q.node_point(v)).is_none() {
                unreached += h.atom(v);
            }
        }
        if unreached.is_positive() {
            return SearchTime::Unreached(unreached);
        }
        let mut total = Rat::zero();
        for (a, _) in q.arcs() {
            for (lo, hi, t) in &env.arc(a).pieces {
                total += h.integrate_against(a, lo, hi, t);
            }
        }
        for (v, m) in h.atoms() {
            let t = env
                .first_visit(q, &q.node_point(v))
                .expect("atoms at unvisited nodes were handled above");
            total += m * t;
        }
        SearchTime::Finite(total)
    }

    /// Covered intervals per arc for the time window `[t0, t1]`.
    fn covered_in_window(&self, q: &TreeNetwork, t0: &Rat, t1: &Rat) -> Vec<Vec<(Rat, Rat)>> {
        let mut per_arc: Vec<Vec<(Rat, Rat)>> = vec![Vec::new(); q.n_arcs()];
        for s in &self.segments {
            if let Some(c) = s.clip(t0, t1) {
                per_arc[c.arc.0].push((c.lo().clone(), c.hi().clone()));
            }
        }
        for intervals in &mut per_arc {
            intervals.sort();
            let mut merged: Vec<(Rat, Rat)> = Vec::new();
            for (lo, hi) in intervals.drain(..) {
                match merged.last_mut() {
                    Some((_, mhi)) if &lo <= mhi => {
                        if hi > *mhi {
                            *mhi = hi;
                        }
                    }
                    _ => merged.push((lo, hi)),
                }
            }
            *intervals = merged;
        }
        per_arc
    }

    /// Mass of the set of points visited during `[t0, t1]`.
    pub fn mass_visited_in(&self, q: &TreeNetwork, h: &HidingDistribution, t0: &Rat, t1: &Rat) -> Rat {
        let covered = self.covered_in_window(q, t0, t1);
        let mut total = Rat::zero();
        for (a, _) in q.arcs() {
            for (lo, hi) in &covered[a.0] {
                total += h.arc_cdf(a).eval(hi) - h.arc_cdf(a).eval(lo);
            }
        }
        let inside = |a: ArcId, o: &Rat| covered[a.0].iter().any(|(lo, hi)| lo <= o && o <= hi);
        for (v, m) in h.atoms() {
            let mut touched = false;
            if let Some(pa) = q.parent_arc(v) {
                touched |= inside(pa, &q.arc(pa).len);
            }
            for &c in q.children(v) {
                touched |= inside(c, &Rat::zero());
            }
            if touched {
                total += m;
            }
        }
        total
    }

    /// Cumulative capture probability F(t) = h(S([0, t])).
    pub fn capture_probability(&self, q: &TreeNetwork, h: &HidingDistribution, t: &Rat) -> Rat {
        self.mass_visited_in(q, h, &Rat::zero(), t)
    }
}

/// Number of DF searches: the product over nodes of (child count)!;
/// None on u128 overflow.
pub fn df_count(q: &TreeNetwork) -> Option<u128> {
    let mut count: u128 = 1;
    for v in q.nodes() {
        let k = q.children(v).len() as u128;
        for f in 2..=k {
            count = count.checked_mul(f)?;
        }
    }
    Some(count)
}

fn node_tours(q: &TreeNetwork, v: NodeId) -> Vec<Vec<NodeId>> {
    let children = q.children(v);
    if children.is_empty() {
        return vec![vec![v]];
    }
    // All child orders × all tours within each child.
    let child_tours: Vec<Vec<Vec<NodeId>>> =
        children.iter().map(|&c| node_tours(q, q.arc(c).head)).collect();
    let mut orders: Vec<Vec<usize>> = Vec::new();
    permutations(children.len(), &mut Vec::new(), &mut orders);
    let mut out = Vec::new();
    for order in &orders {
        let mut partial: Vec<Vec<NodeId>> = vec![vec![v]];
        for &ci in order {
            let mut next = Vec::new();
            for seq in &partial {
                for tour in &child_tours[ci] {
                    let mut s = seq.clone();
                    s.extend_from_slice(tour);
                    s.push(v);
                    next.push(s);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out
}

fn permutations(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for i in 0..n {
        if !prefix.contains(&i) {
            prefix.push(i);
            permutations(n, prefix, out);
            prefix.pop();
        }
    }
}

/// All DF searches as full closed tours (duration 2μ, ending at the
/// root). Refuses when the count exceeds the cap.
pub fn df_enumerate(q: &TreeNetwork, cap: u128) -> Result<Vec<Trajectory>> {
    let count = df_count(q).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::DfCountExceeded { count, cap });
    }
    let tours = node_tours(q, q.root());
    debug_assert_eq!(tours.len() as u128, count);
    tours
        .into_iter()
        .map(|t| Trajectory::new(q, t.into_iter().map(|v| q.node_point(v)).collect()))
        .collect()
}

/// One DF search following the declared child order everywhere.
pub fn canonical_df(q: &TreeNetwork) -> Trajectory {
    df_with_orders(q, |_v, arcs| arcs.to_vec())
}

/// The best DF search: children toured in decreasing branch density
/// (exchange argument per node; exact, no enumeration).
pub fn smith_df(q: &TreeNetwork, h: &HidingDistribution) -> Trajectory {
    df_with_orders(q, |_v, arcs| {
        let mut keyed: Vec<(Rat, usize, ArcId)> = arcs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let info = q.arc(c);
                let sub = q.subtree(&q.node_point(info.head));
                let mass = h.mass_of(q, &sub) + h.arc_mass(c);
                let len = &info.len + &sub.length;
                (mass / len, i, c)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, _, c)| c).collect()
    })
}

fn df_with_orders(q: &TreeNetwork, order: impl Fn(NodeId, &[ArcId]) -> Vec<ArcId>) -> Trajectory {
    let mut waypoints = Vec::new();
    let mut stack: Vec<(NodeId, Vec<ArcId>, usize)> = Vec::new();
    let root = q.root();
    waypoints.push(root);
    stack.push((root, order(root, q.children(root)), 0));
    while let Some((_, arcs, i)) = stack.last_mut() {
        if *i < arcs.len() {
            let head = q.arc(arcs[*i]).head;
            *i += 1;
            waypoints.push(head);
            stack.push((head, order(head, q.children(head)), 0));
        } else {
            stack.pop();
            if let Some(top) = stack.last() {
                waypoints.push(top.0);
            }
        }
    }
    Trajectory::new(q, waypoints.into_iter().map(|v| q.node_point(v)).collect())
        .expect("DF tours start at the root")
}

/// Expected DF search time for a balanced distribution:
/// μ − ∫ λ(Q_x) dh(x). Errors when h is not balanced (the formula is
/// only DF-order-independent then).
pub fn df_time_balanced(q: &TreeNetwork, h: &HidingDistribution) -> Result<Rat> {
    let report = is_balanced(q, h);
    if !report.verdict.holds() {
        let w = report.witness.unwrap();
        return Err(Error::NotBalanced(w.what));
    }
    Ok(q.mu() - h.expected_subtree_length(q))
}

/// The star closed form μ(1 − Σ p_i²) + d̄_h(O) for balanced stars.
pub fn star_df_time(q: &TreeNetwork, h: &HidingDistribution) -> Result<Rat> {
    if !q.is_star() {
        return Err(Error::NotAStar);
    }
    if !h.atom(q.root()).is_zero() {
        return Err(Error::InvalidDistribution(
            "star closed form requires no atom at the center".into(),
        ));
    }
    if !is_balanced(q, h).verdict.holds() {
        return Err(Error::NotBalanced("star closed form needs a balanced distribution".into()));
    }
    let mut sum_p2 = Rat::zero();
    for (a, _) in q.arcs() {
        let p = h.arc_mass_with_head_atom(q, a);
        sum_p2 += &p * &p;
    }
    let d_bar = q.mean_distance(&q.root_point(), h);
    Ok(q.mu() * (Rat::one() - sum_p2) + d_bar)
}

/// Uniform closed form μ − d̄_u(O).
pub fn uniform_df_time(q: &TreeNetwork) -> Rat {
    let u = HidingDistribution::uniform(q);
    q.mu() - q.mean_distance(&q.root_point(), &u)
}

/// The non-DF set N_S: the closed rooted subtree where condition
/// (first-visit window tours Q_x) fails. Stored as per-arc rootward
/// cut prefixes plus the member nodes.
#[derive(Clone, Debug)]
pub struct NonDfSet {
    pub nodes: Vec<NodeId>,
    /// `(arc, c)`: the portion `[0, c]` of the arc belongs to N (c > 0).
    pub cuts: Vec<(ArcId, Rat)>,
    pub length: Rat,
}

impl NonDfSet {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.cuts.is_empty()
    }

    pub fn contains(&self, q: &TreeNetwork, p: &NetPoint) -> bool {
        if let Some(v) = q.node_at(p) {
            return self.nodes.contains(&v);
        }
        self.cuts.iter().any(|(a, c)| *a == p.arc && &p.offset <= c)
    }
}

/// Does S perform an immediate DF tour of Q_x upon first reaching x?
/// For windows that extend past the end of the waypoint path, the
/// condition is "some unit-speed extension completes the tour": stay
/// inside Q_x, cover it, and leave enough slack to end at x.
fn df_condition_at(
    q: &TreeNetwork,
    s: &Trajectory,
    env: &Envelopes,
    x: &NetPoint,
) -> bool {
    let t1 = match env.first_visit(q, x) {
        Some(t) => t,
        None => return false,
    };
    let sub = q.subtree(x);
    if sub.length.is_zero() {
        return true;
    }
    let window_end = &t1 + Rat::from_integer(2.into()) * &sub.length;
    let m = s.duration().clone();
    let win_hi = window_end.clone().min(m.clone());

    // Containment: between t1 and win_hi the search stays inside Q_x.
    let in_subtree = |arc: ArcId, lo: &Rat, hi: &Rat| -> bool {
        sub.intervals
            .iter()
            .any(|(a, slo, shi)| *a == arc && slo <= lo && hi <= shi)
    };
    for seg in s.segments() {
        if let Some(c) = seg.clip(&t1, &win_hi) {
            if !in_subtree(c.arc, c.lo(), c.hi()) {
                return false;
            }
        }
    }
    // Coverage: every point of Q_x first-visited by win_hi.
    for (a, lo, hi) in &sub.intervals {
        match env.arc(*a).max_on(lo, hi) {
            Some(t) if t <= win_hi => {}
            _ => return false,
        }
    }
    if window_end <= m {
        s.position_at(q, &window_end) == *x
    } else {
        // Slack rule: end-of-path position must be close enough for an
        // extension to return to x by the window end.
        q.distance(&s.position_at(q, &m), x) <= window_end - m
    }
}

/// Piecewise-affine function over offset ranges, for exact boundary
/// candidate generation.
type PwAffine = Vec<(Rat, Rat, Poly)>;

fn crossings_into(fa: &PwAffine, fb: &PwAffine, out: &mut BTreeSet<Rat>) {
    for (alo, ahi, pa) in fa {
        for (blo, bhi, pb) in fb {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo > hi {
                continue;
            }
            let d = pa.sub(pb);
            if d.degree() == 0 {
                continue;
            }
            let x = -d.coeff(0) / d.coeff(1);
            if &x >= lo && &x <= hi {
                out.insert(x);
            }
        }
    }
}

/// Computes N_S exactly for a terminating search.
pub fn non_df_set(q: &TreeNetwork, s: &Trajectory) -> Result<NonDfSet> {
    let env = Envelopes::build(q, s.segments());
    if let Some(e) = env.per_arc.iter().position(|e| !e.gaps.is_empty()) {
        let mut miss = Rat::zero();
        for (lo, hi) in &env.per_arc[e].gaps {
            miss += hi - lo;
        }
        return Err(Error::NotTerminating(format!(
            "arc {} has {} uncovered length",
            q.arc(ArcId(e)).name,
            fmt_rat(&miss)
        )));
    }
    let mut nodes: Vec<NodeId> = Vec::new();
    for v in q.nodes() {
        if !df_condition_at(q, s, &env, &q.node_point(v)) {
            nodes.push(v);
        }
    }
    let two = Rat::from_integer(2.into());
    let mut cuts: Vec<(ArcId, Rat)> = Vec::new();
    let mut length = Rat::zero();
    for (a, info) in q.arcs() {
        // Boundary candidates: all offsets where any of the governing
        // piecewise-affine time functions cross.
        let mut cands: BTreeSet<Rat> = BTreeSet::new();
        cands.insert(Rat::zero());
        cands.insert(info.len.clone());
        let arc_segs: Vec<&Segment> =
            s.segments().iter().filter(|seg| seg.arc == a).collect();
        for seg in &arc_segs {
            cands.insert(seg.lo().clone());
            cands.insert(seg.hi().clone());
        }
        let t1: PwAffine = env.arc(a).pieces.clone();
        let lambda_const = &info.len + q.below_len(info.head);
        // end(o) = t1(o) + 2(λc - o)
        let end: PwAffine = t1
            .iter()
            .map(|(lo, hi, p)| {
                (
                    lo.clone(),
                    hi.clone(),
                    p.add(&Poly::affine(&two * &lambda_const, -&two)),
                )
            })
            .collect();
        // Sweep time functions of each segment on this arc.
        let taus: Vec<PwAffine> = arc_segs
            .iter()
            .map(|seg| vec![(seg.lo().clone(), seg.hi().clone(), seg.time_poly())])
            .collect();
        // Constants: segment boundary times and the total duration.
        let mut consts: BTreeSet<Rat> = BTreeSet::new();
        consts.insert(s.duration().clone());
        for seg in s.segments() {
            consts.insert(seg.start.clone());
            consts.insert(seg.end());
        }
        let const_pw: Vec<PwAffine> = consts
            .iter()
            .map(|c| vec![(Rat::zero(), info.len.clone(), Poly::constant(c.clone()))])
            .collect();
        // Suffix coverage max of the envelope on [o, len].
        let mut sufmax: PwAffine = Vec::new();
        {
            let mut running: Option<Rat> = None;
            for (lo, hi, t) in env.arc(a).pieces.iter().rev() {
                let at_lo = t.eval(lo);
                let at_hi = t.eval(hi);
                // Piece max going left: max(t(o..hi) on piece, running).
                // Affine on the piece: its max over [o, hi] is max at the
                // two ends; combined with the constant tail max.
                let tail = running.clone().unwrap_or_else(|| at_hi.clone());
                let tail_val = tail.max(at_hi.clone());
                if t.coeff(1).is_negative() {
                    // decreasing: max over [o,hi] at o → affine in o
                    // unless the tail dominates; split at crossing.
                    let cross = (&tail_val - t.coeff(0)) / t.coeff(1);
                    if &cross > lo && &cross < hi {
                        sufmax.push((lo.clone(), cross.clone(), t.clone()));
                        sufmax.push((cross, hi.clone(), Poly::constant(tail_val.clone())));
                    } else if t.eval(lo) >= tail_val {
                        sufmax.push((lo.clone(), hi.clone(), t.clone()));
                    } else {
                        sufmax.push((lo.clone(), hi.clone(), Poly::constant(tail_val.clone())));
                    }
                } else {
                    sufmax.push((lo.clone(), hi.clone(), Poly::constant(tail_val.clone())));
                }
                running = Some(tail_val.max(at_lo));
            }
            sufmax.reverse();
        }
        // Final-position distance d(S(M), x(o)) + M.
        let fin = s.position_at(q, s.duration());
        let dfin: PwAffine = q
            .distance_profile(&fin, a)
            .into_iter()
            .map(|(lo, hi, p)| (lo, hi, p.add(&Poly::constant(s.duration().clone()))))
            .collect();
        // Coverage max over the fixed below-head part of Q_x (constant in
        // o) — its crossing with the window end is a boundary candidate.
        let below_cov: Option<Rat> = q
            .arcs_below(q.arc(a).head)
            .into_iter()
            .filter_map(|b| env.arc(b).max_on(&Rat::zero(), &q.arc(b).len))
            .max();
        let below_pw: PwAffine = below_cov
            .into_iter()
            .map(|k| (Rat::zero(), info.len.clone(), Poly::constant(k)))
            .collect();
        for (lo, hi, _) in t1.iter().chain(sufmax.iter()) {
            cands.insert(lo.clone());
            cands.insert(hi.clone());
        }

        let mut fams: Vec<&PwAffine> = vec![&t1, &end, &sufmax, &dfin, &below_pw];
        for tau in &taus {
            fams.push(tau);
        }
        for c in &const_pw {
            fams.push(c);
        }
        for (i, fa) in fams.iter().enumerate() {
            for fb in fams.iter().skip(i + 1) {
                crossings_into(fa, fb, &mut cands);
            }
        }
        let cands: Vec<Rat> = cands
            .into_iter()
            .filter(|o| o >= &Rat::zero() && o <= &info.len)
            .collect();
        // Evaluate membership at candidates and midpoints; the set is an
        // N-prefix followed by a D-suffix, flipping at a candidate.
        let mut points: Vec<(Rat, bool)> = Vec::new();
        for w in cands.windows(2) {
            let o = &w[0];
            if o.is_positive() {
                let p = q.point_on(a, o.clone()).unwrap();
                points.push((o.clone(), df_condition_at(q, s, &env, &p)));
            }
            let mid = (&w[0] + &w[1]) / &two;
            let p = q.point_on(a, mid.clone()).unwrap();
            points.push((mid, df_condition_at(q, s, &env, &p)));
        }
        let tail_in_n = nodes.contains(&info.tail);
        let head_in_n = nodes.contains(&info.head);
        if head_in_n {
            // The whole arc lies in the closed rooted subtree N.
            for (o, in_d) in &points {
                assert!(!*in_d, "N not downward closed at {} on arc {}", fmt_rat(o), info.name);
            }
            assert!(tail_in_n, "N contains a head without its tail on arc {}", info.name);
            length += &info.len;
            cuts.push((a, info.len.clone()));
            continue;
        }
        // Last interior point in N (condition false), if any.
        let cut = points.iter().rev().find(|(_, in_d)| !*in_d).map(|(o, _)| o.clone());
        if let Some(c) = cut {
            assert!(
                cands.contains(&c),
                "non-DF boundary fell between candidates on arc {}",
                info.name
            );
            assert!(tail_in_n, "non-DF prefix without its tail node on arc {}", info.name);
            // Everything rootward of the cut must be N as well.
            for (o, in_d) in &points {
                assert_eq!(*in_d, o > &c, "non-DF set not a prefix on arc {}", info.name);
            }
            length += &c;
            cuts.push((a, c));
        }
    }
    Ok(NonDfSet { nodes, cuts, length })
}

/// Which side a single-turn search turns on first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TurnSide {
    /// S*(x): turn at x on the high-density (right) arc, tour the left
    /// arc, finish the right arc.
    Right,
    /// Ŝ(y): turn at y on the left arc, tour the right arc, finish left.
    Left,
}

#[derive(Clone, Debug)]
pub struct SingleTurnCandidate {
    pub side: TurnSide,
    pub turn: Rat,
    pub time: Rat,
}

#[derive(Clone, Debug)]
pub struct SingleTurnReport {
    pub right_arc: ArcId,
    pub left_arc: ArcId,
    /// T(S⁺), the better DF search (right arc first).
    pub df_time: Rat,
    /// Exact verdict: some single-turn search strictly beats S⁺
    /// (equivalently, forward-biased fails).
    pub df_beaten: bool,
    pub candidates: Vec<SingleTurnCandidate>,
    /// Candidates tying S⁺ exactly (forward-biased equality points).
    pub ties: Vec<SingleTurnCandidate>,
    pub best: Option<SingleTurnCandidate>,
}

/// Builds the single-turn search for a given side and turn offset.
pub fn single_turn_search(
    q: &TreeNetwork,
    right: ArcId,
    left: ArcId,
    side: TurnSide,
    turn: Rat,
) -> Result<Trajectory> {
    let leaf_r = q.node_point(q.arc(right).head);
    let leaf_l = q.node_point(q.arc(left).head);
    let (first_arc, mid, last) = match side {
        TurnSide::Right => (right, leaf_l, leaf_r),
        TurnSide::Left => (left, leaf_r, leaf_l),
    };
    let turn_pt = q.point_on(first_arc, turn)?;
    Trajectory::new(q, vec![q.root_point(), turn_pt, mid, last])
}

/// Sweeps the structurally distinct single-turn searches on a two-arc
/// star and compares them with the best DF search.
pub fn single_turn_compare(q: &TreeNetwork, h: &HidingDistribution) -> Result<SingleTurnReport> {
    if !q.is_star() || q.n_arcs() != 2 {
        return Err(Error::NotTwoArcStar);
    }
    let arcs: Vec<ArcId> = q.arcs().map(|(a, _)| a).collect();
    let density = |a: ArcId| h.arc_mass_with_head_atom(q, a) / &q.arc(a).len;
    // Relabel so the right arc has the (weakly) higher density.
    let (right, left) = if density(arcs[0]) >= density(arcs[1]) {
        (arcs[0], arcs[1])
    } else {
        (arcs[1], arcs[0])
    };
    let leaf_r = q.node_point(q.arc(right).head);
    let leaf_l = q.node_point(q.arc(left).head);
    let s_plus = Trajectory::new(q, vec![q.root_point(), leaf_r, leaf_l])?;
    let df_time = s_plus.expected_time(q, h).value()?.clone();

    let fb = is_forward_biased(q, h)?;
    let df_beaten = fb.verdict == Verdict::Fails;

    let mut turn_offsets: Vec<(TurnSide, Rat)> = Vec::new();
    for (side, arc, other) in [(TurnSide::Right, right, left), (TurnSide::Left, left, right)] {
        let len = &q.arc(arc).len;
        let other_len = &q.arc(other).len;
        let cdf = h.arc_cdf(arc);
        for o in cdf.breakpoints() {
            if o.is_positive() && &o < len {
                turn_offsets.push((side, o));
            }
        }
        // Stationary points of the expected time of the single-turn
        // search on each piece: (1 - a₀ - F(x)) - f(x)(x + λ_other) = 0,
        // a₀ being the mass at the center (found at time zero).
        let off_center = Rat::one() - h.atom(q.root());
        for piece in cdf.pieces() {
            let f = piece.cdf.derivative();
            let g = Poly::constant(off_center.clone())
                .sub(&piece.cdf)
                .sub(&f.mul(&Poly::affine(other_len.clone(), Rat::one())));
            for root in rational_roots(&g) {
                if root > piece.lo && root < piece.hi && root.is_positive() && &root < len {
                    turn_offsets.push((side, root));
                }
            }
        }
    }
    // Forward-bias witness / tie points are candidate turns too.
    if let Some(w) = &fb.witness {
        let side = if w.points[0].arc == right { TurnSide::Right } else { TurnSide::Left };
        let o = w.points[0].offset.clone();
        if o.is_positive() && o < q.arc(w.points[0].arc).len {
            turn_offsets.push((side, o));
        }
    }
    turn_offsets.sort();
    turn_offsets.dedup();

    let mut candidates = Vec::new();
    for (side, turn) in turn_offsets {
        let s = single_turn_search(q, right, left, side, turn.clone())?;
        let time = s.expected_time(q, h).value()?.clone();
        candidates.push(SingleTurnCandidate { side, turn, time });
    }
    let ties: Vec<SingleTurnCandidate> =
        candidates.iter().filter(|c| c.time == df_time).cloned().collect();
    let best = candidates.iter().min_by(|a, b| a.time.cmp(&b.time)).cloned();
    Ok(SingleTurnReport { right_arc: right, left_arc: left, df_time, df_beaten, candidates, ties, best })
}

/// Rational roots of a polynomial of degree ≤ 2 (exact; irrational roots
/// are dropped — callers only use these as extra sweep candidates).
fn rational_roots(p: &Poly) -> Vec<Rat> {
    match p.degree() {
        0 => Vec::new(),
        1 => vec![-p.coeff(0) / p.coeff(1)],
        2 => {
            let (a, b, c) = (p.coeff(2), p.coeff(1), p.coeff(0));
            let disc = &b * &b - Rat::from_integer(4.into()) * &a * &c;
            if disc.is_negative() {
                return Vec::new();
            }
            match rat_sqrt(&disc) {
                Some(s) => {
                    let two_a = Rat::from_integer(2.into()) * &a;
                    vec![(-&b + &s) / &two_a, (-&b - &s) / &two_a]
                }
                None => Vec::new(),
            }
        }
        _ => Vec::new(),
    }
}

/// Exact square root of a rational, when it is a perfect square.
fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct SwapReport {
    pub anchor: NetPoint,
    pub rho1: Rat,
    pub rho2: Rat,
    pub time_original: Rat,
    pub time_swapped: Rat,
    /// The Search Density Lemma's conclusion, checked exactly on this
    /// instance.
    pub lemma_respected: bool,
}

/// Transposes the legs `[t1, t2]` and `[t2, t3]` of a search (both loops
/// at a common anchor) and compares expected times with the search
/// density ordering.
pub fn density_swap_check(
    q: &TreeNetwork,
    h: &HidingDistribution,
    s: &Trajectory,
    t1: &Rat,
    t2: &Rat,
    t3: &Rat,
) -> Result<SwapReport> {
    if !(&Rat::zero() <= t1 && t1 < t2 && t2 < t3 && t3 <= s.duration()) {
        return Err(Error::LegsNotAnchored(format!(
            "need 0 ≤ t1 < t2 < t3 ≤ M, got {} {} {}",
            fmt_rat(t1),
            fmt_rat(t2),
            fmt_rat(t3)
        )));
    }
    let p1 = s.position_at(q, t1);
    let p2 = s.position_at(q, t2);
    let p3 = s.position_at(q, t3);
    if p1 != p2 || p2 != p3 {
        return Err(Error::LegsNotAnchored(format!(
            "legs must be loops at one point; positions are {}, {}, {}",
            q.describe_point(&p1),
            q.describe_point(&p2),
            q.describe_point(&p3)
        )));
    }
    let mass1 = s.mass_visited_in(q, h, t1, t2);
    let mass2 = s.mass_visited_in(q, h, t2, t3);
    let union = s.mass_visited_in(q, h, t1, t3);
    let sum = &mass1 + &mass2;
    if union != sum {
        return Err(Error::LegsNotDisjoint { union: fmt_rat(&union), sum: fmt_rat(&sum) });
    }
    // Leg densities use newly captured mass.
    let f1 = s.capture_probability(q, h, t1);
    let f2 = s.capture_probability(q, h, t2);
    let f3 = s.capture_probability(q, h, t3);
    let rho1 = (&f2 - &f1) / (t2 - t1);
    let rho2 = (&f3 - &f2) / (t3 - t2);

    let time_original = s.expected_time(q, h).value()?.clone();
    // Rebuild with the legs transposed.
    let mut waypoints: Vec<NetPoint> = vec![s.position_at(q, &Rat::zero())];
    let push_window = |w: &mut Vec<NetPoint>, a: &Rat, b: &Rat| {
        for seg in s.segments() {
            if let Some(c) = seg.clip(a, b) {
                w.push(q.point_on(c.arc, c.from.clone()).unwrap());
                w.push(q.point_on(c.arc, c.to.clone()).unwrap());
            }
        }
    };
    push_window(&mut waypoints, &Rat::zero(), t1);
    push_window(&mut waypoints, t2, t3);
    push_window(&mut waypoints, t1, t2);
    push_window(&mut waypoints, t3, s.duration());
    waypoints.dedup();
    let swapped = Trajectory::new(q, waypoints)?;
    debug_assert_eq!(swapped.duration(), s.duration());
    let time_swapped = swapped.expected_time(q, h).value()?.clone();

    let lemma_respected = if rho1 >= rho2 {
        time_original <= time_swapped && ((time_original == time_swapped) == (rho1 == rho2))
    } else {
        time_swapped <= time_original
    };
    Ok(SwapReport { anchor: p1, rho1, rho2, time_original, time_swapped, lemma_respected })
}
