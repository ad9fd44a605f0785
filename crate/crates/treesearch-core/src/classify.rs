//! Exact decision procedures for the distribution predicates: balanced,
//! monotone, leafy, forward biased (stars) and Kella's condition (stars).
//!
//! Every failing verdict carries a witness that can be re-checked by a
//! single pointwise evaluation. The piecewise checks reduce to polynomial
//! sign questions and are decided by Sturm analysis, so there are no
//! sampling artifacts: "holds" means holds at every point of the
//! continuum.

use crate::hiding::HidingDistribution;
use crate::net::{ArcId, NetPoint, TreeNetwork};
use crate::poly::Poly;
use crate::rat::{fmt_rat, Rat};
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    Balanced,
    Monotone,
    Leafy,
    ForwardBiased,
    Kella,
}

impl Predicate {
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::Balanced => "balanced",
            Predicate::Monotone => "monotone",
            Predicate::Leafy => "leafy",
            Predicate::ForwardBiased => "forward-biased",
            Predicate::Kella => "kella",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    HoldsStrictly,
    Fails,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::Fails)
    }
}

/// A location (or pair of locations) where the defining inequality fails
/// or is tight, with the two compared values.
#[derive(Clone, Debug)]
pub struct Witness {
    pub points: Vec<NetPoint>,
    pub lhs: Rat,
    pub rhs: Rat,
    pub what: String,
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub predicate: Predicate,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Scope notes, e.g. whether forward-biased certifies optimality for
    /// this network.
    pub note: Option<String>,
}

impl ClassificationReport {
    fn holds(predicate: Predicate) -> ClassificationReport {
        ClassificationReport { predicate, verdict: Verdict::Holds, witness: None, note: None }
    }

    fn fails(predicate: Predicate, witness: Witness) -> ClassificationReport {
        ClassificationReport { predicate, verdict: Verdict::Fails, witness: Some(witness), note: None }
    }
}

/// Balanced: at every node with at least two branches, all branch
/// densities agree exactly.
pub fn is_balanced(q: &TreeNetwork, h: &HidingDistribution) -> ClassificationReport {
    for &v in q.preorder() {
        if q.children(v).len() < 2 {
            continue;
        }
        let x = q.node_point(v);
        let stats = h.branch_stats(q, &x).expect("nodes with children are not leaves");
        let first = stats[0].density.clone().expect("branches have positive length");
        for s in &stats[1..] {
            let d = s.density.clone().unwrap();
            if d != first {
                return ClassificationReport::fails(
                    Predicate::Balanced,
                    Witness {
                        points: vec![x.clone()],
                        lhs: first,
                        rhs: d,
                        what: "branch densities differ".into(),
                    },
                );
            }
        }
    }
    ClassificationReport::holds(Predicate::Balanced)
}

/// Monotone: ρ(Q_x) ≤ ρ(Q_y) whenever x ⪯ y. Decided exactly by: no
/// atoms off leaf nodes, balanced, and pointwise density f ≤ ρ(Q_x)
/// along every cdf piece.
pub fn is_monotone(q: &TreeNetwork, h: &HidingDistribution) -> ClassificationReport {
    for (v, m) in h.atoms() {
        if !q.is_leaf(v) {
            return ClassificationReport::fails(
                Predicate::Monotone,
                Witness {
                    points: vec![q.node_point(v)],
                    lhs: m.clone(),
                    rhs: Rat::zero(),
                    what: format!("atom at non-leaf node {}", q.node_name(v)),
                },
            );
        }
    }
    let balanced = is_balanced(q, h);
    if !balanced.verdict.holds() {
        let mut w = balanced.witness.unwrap();
        w.what = format!("not balanced: {}", w.what);
        return ClassificationReport::fails(Predicate::Monotone, w);
    }
    for (a, info) in q.arcs() {
        let head_mass = h.subtree_mass(q, &q.node_point(info.head));
        let head_len = q.below_len(info.head);
        for piece in h.arc_cdf(a).pieces() {
            // m(t) = (arc mass - F(t)) + mass below head;
            // l(t) = (len - t) + length below head;
            // monotone on the piece iff ψ = m - f·l ≥ 0 throughout.
            let m_poly = Poly::constant(h.arc_mass(a) + &head_mass).sub(&piece.cdf);
            let l_poly = Poly::affine(&info.len + head_len, -Rat::one());
            let f_poly = piece.cdf.derivative();
            let psi = m_poly.sub(&f_poly.mul(&l_poly));
            if let Some(t) = psi.negative_witness_on(&piece.lo, &piece.hi) {
                let rho = m_poly.eval(&t) / l_poly.eval(&t);
                let f = f_poly.eval(&t);
                let point = q.point_on(a, t).expect("piece offsets are on the arc");
                return ClassificationReport::fails(
                    Predicate::Monotone,
                    Witness {
                        points: vec![point],
                        lhs: f,
                        rhs: rho,
                        what: "density exceeds subtree density (ρ decreasing)".into(),
                    },
                );
            }
        }
    }
    ClassificationReport::holds(Predicate::Monotone)
}

/// Leafy: positive liminf subtree density at all, or all but one, leaf
/// nodes. For this representation the liminf at a leaf is +∞ with an
/// atom, else the density value at the leaf end of the last cdf piece.
pub fn is_leafy(q: &TreeNetwork, h: &HidingDistribution) -> ClassificationReport {
    let mut failing: Vec<NetPoint> = Vec::new();
    for v in q.leaves() {
        if h.atom(v).is_positive() {
            continue;
        }
        let arc = q.parent_arc(v).expect("leaves have a parent arc");
        let len = &q.arc(arc).len;
        if h.arc_cdf(arc).density(len, false).is_positive() {
            continue;
        }
        failing.push(q.node_point(v));
    }
    if failing.len() >= 2 {
        let report_points = failing[..2].to_vec();
        return ClassificationReport::fails(
            Predicate::Leafy,
            Witness {
                points: report_points,
                lhs: Rat::zero(),
                rhs: Rat::zero(),
                what: format!("{} leaves with zero liminf density (at most one allowed)", failing.len()),
            },
        );
    }
    let mut report = ClassificationReport::holds(Predicate::Leafy);
    if failing.len() == 1 {
        report.note = Some("one leaf with zero liminf density (allowed)".into());
    }
    report
}

/// Requires a star rooted at its center.
fn require_star(q: &TreeNetwork) -> Result<()> {
    if q.is_star() {
        Ok(())
    } else {
        Err(Error::NotAStar)
    }
}

/// Mass scale of the star distribution off the center: an atom at the
/// center is found at time zero, so every star predicate applies to the
/// conditional distribution on the rest.
fn center_scale(q: &TreeNetwork, h: &HidingDistribution) -> Rat {
    Rat::one() - h.atom(q.root())
}

/// The conditional per-arc cdf value F_j(x) used by the star predicates.
pub fn star_cdf(q: &TreeNetwork, h: &HidingDistribution, a: ArcId, x: &Rat) -> Result<Rat> {
    require_star(q)?;
    let scale = center_scale(q, h);
    if scale.is_zero() {
        return Err(Error::InvalidDistribution("all mass at the center".into()));
    }
    let info = q.arc(a);
    let mut f = h.arc_cdf(a).eval(x);
    if x == &info.len {
        f += h.atom(info.head);
    }
    Ok(f / scale)
}

/// The forward-biased bound H_j(x) = (x + (h_j μ − λ_j)⁺) / (x + μ − λ_j),
/// with h_j conditioned on the target not sitting at the center.
pub fn fb_bound(q: &TreeNetwork, h: &HidingDistribution, a: ArcId, x: &Rat) -> Result<Rat> {
    require_star(q)?;
    let scale = center_scale(q, h);
    if scale.is_zero() {
        return Err(Error::InvalidDistribution("all mass at the center".into()));
    }
    let info = q.arc(a);
    let hj = h.arc_mass_with_head_atom(q, a) / &scale;
    let c = (hj * q.mu() - &info.len).max(Rat::zero());
    Ok((x + c) / (x + q.mu() - &info.len))
}

/// Forward biased on a star: F_j(x) ≤ H_j(x) for every arc j and all
/// x ≤ λ_j; strictly when the inequality is strict for 0 < x < λ_j.
pub fn is_forward_biased(q: &TreeNetwork, h: &HidingDistribution) -> Result<ClassificationReport> {
    require_star(q)?;
    let mu = q.mu();
    let scale = center_scale(q, h);
    if scale.is_zero() {
        // Degenerate: the target is at the center almost surely; every
        // search finds it at time zero.
        let mut report = ClassificationReport::holds(Predicate::ForwardBiased);
        report.note = Some("all mass at the center; vacuous".into());
        return Ok(report);
    }
    let mut tie: Option<Witness> = None;
    let mut interior_tie = false;
    for (a, info) in q.arcs() {
        let hj = h.arc_mass_with_head_atom(q, a) / &scale;
        let c = (&hj * mu - &info.len).max(Rat::zero());
        let m = mu - &info.len;
        for piece in h.arc_cdf(a).pieces() {
            let cdf = piece.cdf.scale(&(Rat::one() / &scale));
            // p(x) = (x + c) - F(x)(x + m) ≥ 0 ⟺ F ≤ H, with F and h_j
            // conditioned off the center.
            let p = Poly::affine(c.clone(), Rat::one())
                .sub(&cdf.mul(&Poly::affine(m.clone(), Rat::one())));
            if let Some(x) = p.negative_witness_on(&piece.lo, &piece.hi) {
                let f = cdf.eval(&x);
                let bound = (&x + &c) / (&x + &m);
                let point = q.point_on(a, x).expect("piece offsets are on the arc");
                let mut report = ClassificationReport::fails(
                    Predicate::ForwardBiased,
                    Witness {
                        points: vec![point],
                        lhs: f,
                        rhs: bound,
                        what: format!("F(x) > H(x) on arc {}", info.name),
                    },
                );
                report.note = Some(fb_note(q, h));
                return Ok(report);
            }
            // Tie detection for strictness, on 0 < x < λ_j only.
            for end in [&piece.lo, &piece.hi] {
                if end.is_positive() && end < &info.len && p.eval(end).is_zero() && tie.is_none() {
                    tie = Some(Witness {
                        points: vec![q.point_on(a, end.clone()).unwrap()],
                        lhs: cdf.eval(end),
                        rhs: (end + &c) / (end + &m),
                        what: format!("F(x) = H(x) on arc {} (tie)", info.name),
                    });
                }
            }
            if p.is_zero() && tie.is_none() {
                let mid = (&piece.lo + &piece.hi) / Rat::from_integer(2.into());
                tie = Some(Witness {
                    points: vec![q.point_on(a, mid.clone()).unwrap()],
                    lhs: cdf.eval(&mid),
                    rhs: (&mid + &c) / (&mid + &m),
                    what: format!("F = H on a whole piece of arc {}", info.name),
                });
            } else if p.has_root_in_open(&piece.lo, &piece.hi) {
                interior_tie = true;
            }
        }
    }
    let strict = tie.is_none() && !interior_tie;
    let mut report = ClassificationReport {
        predicate: Predicate::ForwardBiased,
        verdict: if strict { Verdict::HoldsStrictly } else { Verdict::Holds },
        witness: tie,
        note: Some(fb_note(q, h)),
    };
    if !strict && report.witness.is_none() {
        report.note = Some(format!("{}; tie inside a piece", fb_note(q, h)));
    }
    Ok(report)
}

fn fb_note(q: &TreeNetwork, h: &HidingDistribution) -> String {
    if is_balanced(q, h).verdict.holds() {
        "optimality certificate: balanced star, simply searchable iff forward biased".into()
    } else if q.n_arcs() == 2 {
        "optimality certificate: two-arc star, simply searchable iff forward biased".into()
    } else {
        "condition only, optimality unknown (unbalanced star with ≥ 3 arcs)".into()
    }
}

/// Kella's G_j(x) = h_j · x · (1/F_j(x) − 1); at x = λ_j the head atom
/// is part of F_j.
pub fn kella_g(q: &TreeNetwork, h: &HidingDistribution, a: ArcId, x: &Rat) -> Result<Rat> {
    let scale = center_scale(q, h);
    if scale.is_zero() {
        return Err(Error::InvalidDistribution("all mass at the center".into()));
    }
    let info = q.arc(a);
    let hj = h.arc_mass_with_head_atom(q, a) / &scale;
    let f = star_cdf(q, h, a, x)?;
    if !f.is_positive() {
        return Err(Error::InvalidDistribution(format!(
            "G undefined: F = 0 at offset {} on arc {}",
            fmt_rat(x),
            info.name
        )));
    }
    Ok(hj * x * (Rat::one() / f - Rat::one()))
}

/// Kella's condition: every G_j non-increasing on (0, λ_j]. Exact
/// per-piece monotonicity of the rational function via the sign of
/// η = F − F² − x·f (the numerator of G′ up to the positive factor
/// h_j/F²).
pub fn kella_condition(q: &TreeNetwork, h: &HidingDistribution) -> Result<ClassificationReport> {
    require_star(q)?;
    let scale = center_scale(q, h);
    if scale.is_zero() {
        let mut report = ClassificationReport::holds(Predicate::Kella);
        report.note = Some("all mass at the center; vacuous".into());
        return Ok(report);
    }
    for (a, info) in q.arcs() {
        for piece in h.arc_cdf(a).pieces() {
            let f = piece.cdf.derivative();
            // Sign of G′ for the conditional cdf F/s:
            // η = s·F − F² − s·x·F′ (the positive factor h_j/(s·F)² aside).
            let eta = piece
                .cdf
                .scale(&scale)
                .sub(&piece.cdf.mul(&piece.cdf))
                .sub(&f.scale(&scale).mul(&Poly::affine(Rat::zero(), Rat::one())));
            if let Some(x) = eta.positive_witness_on(&piece.lo, &piece.hi) {
                // η > 0 forces F(x) > 0, so G is defined and strictly
                // increasing in a neighborhood of x: probe for a second
                // point with a larger G — rightward when there is room,
                // else leftward for a smaller one.
                let gx = kella_g(q, h, a, &x)?;
                let two = Rat::from_integer(2.into());
                let (xa, ga, xb, gb) = if x < piece.hi {
                    let mut step = (&piece.hi - &x) / &two;
                    loop {
                        let cand = &x + &step;
                        match kella_g(q, h, a, &cand) {
                            Ok(g) if g > gx => break (x.clone(), gx, cand, g),
                            _ => step /= &two,
                        }
                    }
                } else {
                    let mut step = (&x - &piece.lo) / &two;
                    loop {
                        let cand = &x - &step;
                        match kella_g(q, h, a, &cand) {
                            Ok(g) if g < gx => break (cand, g, x.clone(), gx),
                            _ => step /= &two,
                        }
                    }
                };
                return Ok(ClassificationReport::fails(
                    Predicate::Kella,
                    Witness {
                        points: vec![
                            q.point_on(a, xa).unwrap(),
                            q.point_on(a, xb).unwrap(),
                        ],
                        lhs: ga,
                        rhs: gb,
                        what: format!("G increasing on arc {}", info.name),
                    },
                ));
            }
        }
    }
    Ok(ClassificationReport::holds(Predicate::Kella))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::hiding::ArcCdf;
    use crate::net::tests::{fig1, interval, unit_path3};
    use crate::rat::{rat, rat_int};

    /// Triangular distribution on [-1,1] rooted at 0: density 1−|x|.
    pub(crate) fn triangular() -> (TreeNetwork, HidingDistribution) {
        let q = interval(rat_int(1), rat_int(1));
        let tri = |len: &Rat| {
            ArcCdf::from_density_breakpoints(len, &[(rat_int(0), rat_int(1)), (rat_int(1), rat_int(0))])
                .unwrap()
        };
        let r = q.arc_id("R").unwrap();
        let l = q.arc_id("L").unwrap();
        let one = rat_int(1);
        let h = HidingDistribution::from_parts(&q, vec![], vec![(r, tri(&one)), (l, tri(&one))]).unwrap();
        (q, h)
    }

    /// The balanced two-unit-arc example with F(x) = 2x/3 then (1+2x)/6.
    pub(crate) fn kella_balanced_example() -> (TreeNetwork, HidingDistribution) {
        let q = interval(rat_int(1), rat_int(1));
        let mk = || {
            ArcCdf::from_breakpoints(&rat_int(1), &[(rat(1, 2), rat(1, 3)), (rat_int(1), rat(1, 2))])
                .unwrap()
        };
        let r = q.arc_id("R").unwrap();
        let l = q.arc_id("L").unwrap();
        let h = HidingDistribution::from_parts(&q, vec![], vec![(r, mk()), (l, mk())]).unwrap();
        (q, h)
    }

    /// The unbalanced example: atom 2/3 at the left leaf, F₁ = x/2 then
    /// (1+x)/6 on the right arc.
    pub(crate) fn kella_unbalanced_example() -> (TreeNetwork, HidingDistribution) {
        let q = interval(rat_int(1), rat_int(1));
        let r = q.arc_id("R").unwrap();
        let left_leaf = q.node_id("M").unwrap();
        let cdf =
            ArcCdf::from_breakpoints(&rat_int(1), &[(rat(1, 2), rat(1, 4)), (rat_int(1), rat(1, 3))])
                .unwrap();
        let h = HidingDistribution::from_parts(&q, vec![(left_leaf, rat(2, 3))], vec![(r, cdf)])
            .unwrap();
        (q, h)
    }

    #[test]
    fn balanced_examples() {
        let q = fig1();
        assert_eq!(is_balanced(&q, &HidingDistribution::ebd(&q)).verdict, Verdict::Holds);
        assert_eq!(is_balanced(&q, &HidingDistribution::uniform(&q)).verdict, Verdict::Holds);

        let b = q.node_id("B").unwrap();
        let h = HidingDistribution::from_parts(&q, vec![(b, rat_int(1))], vec![]).unwrap();
        let report = is_balanced(&q, &h);
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert_eq!(w.points[0], q.root_point());
        let mut densities = [w.lhs, w.rhs];
        densities.sort();
        assert_eq!(densities, [rat_int(0), rat(1, 8)]);
    }

    #[test]
    fn equiprobable_balanced_only_on_unit_arcs() {
        let p = unit_path3();
        let e = HidingDistribution::equiprobable_nodes(&p);
        assert_eq!(is_balanced(&p, &e).verdict, Verdict::Holds);

        let q = fig1();
        let e = HidingDistribution::equiprobable_nodes(&q);
        let report = is_balanced(&q, &e);
        assert_eq!(report.verdict, Verdict::Fails);
        assert!(report.witness.is_some());
    }

    #[test]
    fn monotone_examples() {
        let q = fig1();
        assert_eq!(is_monotone(&q, &HidingDistribution::uniform(&q)).verdict, Verdict::Holds);
        assert_eq!(is_monotone(&q, &HidingDistribution::ebd(&q)).verdict, Verdict::Holds);

        let (qi, tri) = triangular();
        let report = is_monotone(&qi, &tri);
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        // Witness is checkable: density f exceeds ρ(Q_x) there.
        let stats = tri.subtree_stats(&qi, &w.points[0]);
        assert_eq!(stats.density.unwrap(), w.rhs);
        assert!(w.lhs > w.rhs);

        // An atom off the leaves breaks monotonicity.
        let d = q.node_id("D").unwrap();
        let a = q.node_id("A").unwrap();
        let h = HidingDistribution::from_parts(
            &q,
            vec![(d, rat(1, 2)), (a, rat(1, 2))],
            vec![],
        )
        .unwrap();
        assert_eq!(is_monotone(&q, &h).verdict, Verdict::Fails);
    }

    #[test]
    fn leafy_examples() {
        let q = fig1();
        assert_eq!(is_leafy(&q, &HidingDistribution::ebd(&q)).verdict, Verdict::Holds);
        assert_eq!(is_leafy(&q, &HidingDistribution::uniform(&q)).verdict, Verdict::Holds);

        // 3-star: mass on arcs 1 and 2 only, and arc 2's cdf goes flat
        // before its leaf: two leaves with zero liminf density.
        let star = TreeNetwork::new(
            "O",
            &[
                ("a1".into(), "O".into(), "X".into(), rat_int(1)),
                ("a2".into(), "O".into(), "Y".into(), rat_int(1)),
                ("a3".into(), "O".into(), "Z".into(), rat_int(1)),
            ],
        )
        .unwrap();
        let a1 = star.arc_id("a1").unwrap();
        let a2 = star.arc_id("a2").unwrap();
        let c1 = ArcCdf::from_breakpoints(&rat_int(1), &[(rat_int(1), rat(1, 2))]).unwrap();
        let c2 = ArcCdf::from_breakpoints(&rat_int(1), &[(rat(1, 2), rat(1, 2))]).unwrap();
        let h = HidingDistribution::from_parts(&star, vec![], vec![(a1, c1), (a2, c2)]).unwrap();
        let report = is_leafy(&star, &h);
        assert_eq!(report.verdict, Verdict::Fails);
        assert_eq!(report.witness.unwrap().points.len(), 2);

        // The triangular density vanishes at both leaves: not leafy.
        let (qi, tri) = triangular();
        assert_eq!(is_leafy(&qi, &tri).verdict, Verdict::Fails);
    }

    #[test]
    fn forward_biased_balanced_example_holds_with_tie() {
        let (q, h) = kella_balanced_example();
        let report = is_forward_biased(&q, &h).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        let tie = report.witness.unwrap();
        assert_eq!(tie.points[0].offset, rat(1, 2));
        assert_eq!(tie.lhs, rat(1, 3));
        assert_eq!(tie.rhs, rat(1, 3));
    }

    #[test]
    fn forward_biased_uniform_star_strict() {
        for q in [
            interval(rat_int(1), rat_int(1)),
            interval(rat_int(2), rat_int(3)),
            TreeNetwork::new(
                "O",
                &[
                    ("a".into(), "O".into(), "A".into(), rat_int(2)),
                    ("b".into(), "O".into(), "B".into(), rat_int(1)),
                    ("c".into(), "O".into(), "C".into(), rat(3, 2)),
                ],
            )
            .unwrap(),
        ] {
            let u = HidingDistribution::uniform(&q);
            let report = is_forward_biased(&q, &u).unwrap();
            assert_eq!(report.verdict, Verdict::HoldsStrictly);
        }
    }

    #[test]
    fn forward_biased_triangular_fails_at_half() {
        let (q, h) = triangular();
        let report = is_forward_biased(&q, &h).unwrap();
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert_eq!(w.points[0].offset, rat(1, 2));
        assert_eq!(w.lhs, rat(3, 8));
        assert_eq!(w.rhs, rat(1, 3));
    }

    #[test]
    fn forward_biased_needs_a_star() {
        let q = fig1();
        let u = HidingDistribution::uniform(&q);
        assert!(matches!(is_forward_biased(&q, &u), Err(Error::NotAStar)));
    }

    #[test]
    fn kella_values_and_verdicts() {
        let (q, h) = kella_balanced_example();
        let r = q.arc_id("R").unwrap();
        assert_eq!(kella_g(&q, &h, r, &rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(kella_g(&q, &h, r, &rat(7, 10)).unwrap(), rat(21, 40));
        let report = kella_condition(&q, &h).unwrap();
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert!(w.lhs < w.rhs);

        let (q, h) = kella_unbalanced_example();
        let report = kella_condition(&q, &h).unwrap();
        assert_eq!(report.verdict, Verdict::Fails);
        assert_eq!(q.arc(report.witness.unwrap().points[0].arc).name, "R");
        // Both examples are nevertheless forward biased.
        assert!(is_forward_biased(&q, &h).unwrap().verdict.holds());

        // Uniform on a balanced star: G_j(x) = h_j(μ − x), decreasing.
        let q = interval(rat_int(1), rat_int(2));
        let u = HidingDistribution::uniform(&q);
        assert_eq!(kella_condition(&q, &u).unwrap().verdict, Verdict::Holds);
        let rr = q.arc_id("R").unwrap();
        assert_eq!(kella_g(&q, &u, rr, &rat(1, 2)).unwrap(), rat(1, 3) * rat(5, 2));
    }

    #[test]
    fn fb_interpretation_labels() {
        // Balanced star and two-arc star: certificate. Unbalanced 3-arc
        // star: condition only.
        let (q, h) = kella_balanced_example();
        let note = is_forward_biased(&q, &h).unwrap().note.unwrap();
        assert!(note.contains("balanced star"));
        let (q, h) = kella_unbalanced_example();
        let note = is_forward_biased(&q, &h).unwrap().note.unwrap();
        assert!(note.contains("two-arc star"));

        let star = TreeNetwork::new(
            "O",
            &[
                ("a".into(), "O".into(), "A".into(), rat_int(1)),
                ("b".into(), "O".into(), "B".into(), rat_int(1)),
                ("c".into(), "O".into(), "C".into(), rat_int(1)),
            ],
        )
        .unwrap();
        let a = star.node_id("A").unwrap();
        let b = star.node_id("B").unwrap();
        let h = HidingDistribution::from_parts(
            &star,
            vec![(a, rat(2, 3)), (b, rat(1, 3))],
            vec![],
        )
        .unwrap();
        let note = is_forward_biased(&star, &h).unwrap().note.unwrap();
        assert!(note.contains("condition only"), "{note}");
    }

    #[test]
    fn kella_on_triangular_terminates_with_witness() {
        // G is increasing all the way up to the leaf end of each arc;
        // the witness probe must not stall at the piece boundary.
        let (q, h) = triangular();
        let report = kella_condition(&q, &h).unwrap();
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert!(w.lhs < w.rhs);
        assert!(w.points[0].offset < w.points[1].offset || w.points[0].arc != w.points[1].arc);
    }

    #[test]
    fn balanced_star_fb_reduces_to_simple_bound() {
        // For balanced stars c_j = 0, so F_j(x) ≤ x/(x+μ−λ_j); check the
        // two code paths agree on the balanced Kella example.
        let (q, h) = kella_balanced_example();
        let r = q.arc_id("R").unwrap();
        for x in [rat(1, 4), rat(1, 2), rat(3, 4)] {
            let bound = fb_bound(&q, &h, r, &x).unwrap();
            assert_eq!(bound, &x / (&x + rat_int(1)));
        }
    }
}
