//! Hiding distributions: node atoms plus per-arc polynomial cdf pieces.
//!
//! A distribution is a Borel probability measure on the network given by
//! atoms at nodes and, on every arc, a continuous cdf that is piecewise
//! polynomial of degree at most two (piecewise-affine density). That
//! covers the uniform distribution, EBD, the equiprobable node
//! distribution, user cdf breakpoint lists and piecewise-linear densities
//! such as the triangular one — and every integral the crate needs stays
//! a closed-form rational.

use crate::net::{ArcId, NetPoint, NodeId, Subtree, TreeNetwork};
use crate::poly::Poly;
use crate::rat::{fmt_rat, Rat};
use crate::{Error, Result};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// One cdf piece: `cdf` gives cumulative mass on `[lo, hi]`, in the
/// arc-global offset coordinate.
#[derive(Clone, Debug)]
pub struct CdfPiece {
    pub lo: Rat,
    pub hi: Rat,
    pub cdf: Poly,
}

#[derive(Clone, Debug)]
pub struct ArcCdf {
    pieces: Vec<CdfPiece>,
}

impl ArcCdf {
    /// Zero mass on an arc of the given length.
    pub fn zero(len: &Rat) -> ArcCdf {
        ArcCdf { pieces: vec![CdfPiece { lo: Rat::zero(), hi: len.clone(), cdf: Poly::zero() }] }
    }

    /// Linear interpolation through `(offset, cumulative mass)`
    /// breakpoints, starting from (0, 0). A final breakpoint short of the
    /// arc length extends flat.
    pub fn from_breakpoints(len: &Rat, points: &[(Rat, Rat)]) -> Result<ArcCdf> {
        let mut pieces = Vec::new();
        let mut prev = (Rat::zero(), Rat::zero());
        for (o, m) in points {
            if o <= &prev.0 || o > len {
                return Err(Error::InvalidDistribution(format!(
                    "cdf breakpoint offset {} out of order or beyond arc length {}",
                    fmt_rat(o),
                    fmt_rat(len)
                )));
            }
            if m < &prev.1 {
                return Err(Error::InvalidDistribution(format!(
                    "cdf decreases at offset {}",
                    fmt_rat(o)
                )));
            }
            let slope = (m - &prev.1) / (o - &prev.0);
            let intercept = &prev.1 - &slope * &prev.0;
            pieces.push(CdfPiece { lo: prev.0.clone(), hi: o.clone(), cdf: Poly::affine(intercept, slope) });
            prev = (o.clone(), m.clone());
        }
        if &prev.0 < len {
            pieces.push(CdfPiece {
                lo: prev.0.clone(),
                hi: len.clone(),
                cdf: Poly::constant(prev.1.clone()),
            });
        }
        Ok(ArcCdf { pieces })
    }

    /// Piecewise-linear density through `(offset, density)` breakpoints
    /// covering the whole arc; the cdf is the running integral.
    pub fn from_density_breakpoints(len: &Rat, points: &[(Rat, Rat)]) -> Result<ArcCdf> {
        if points.len() < 2 || !points[0].0.is_zero() || &points[points.len() - 1].0 != len {
            return Err(Error::InvalidDistribution(
                "density breakpoints must start at offset 0 and end at the arc length".into(),
            ));
        }
        let mut pieces = Vec::new();
        let mut acc = Rat::zero();
        for w in points.windows(2) {
            let (ref o0, ref f0) = w[0];
            let (ref o1, ref f1) = w[1];
            if o1 <= o0 {
                return Err(Error::InvalidDistribution("density offsets must increase".into()));
            }
            if f0 < &Rat::zero() || f1 < &Rat::zero() {
                return Err(Error::InvalidDistribution("density must be nonnegative".into()));
            }
            let slope = (f1 - f0) / (o1 - o0);
            let f = Poly::affine(f0 - &slope * o0, slope);
            // cdf on [o0, o1] = acc + ∫_{o0}^{o} f
            let anti = f.antiderivative();
            let cdf = anti.add(&Poly::constant(&acc - anti.eval(o0)));
            acc = cdf.eval(o1);
            pieces.push(CdfPiece { lo: o0.clone(), hi: o1.clone(), cdf });
        }
        Ok(ArcCdf { pieces })
    }

    pub fn from_raw_pieces(len: &Rat, pieces: Vec<CdfPiece>) -> Result<ArcCdf> {
        let cdf = ArcCdf { pieces };
        cdf.validate(len)?;
        Ok(cdf)
    }

    fn validate(&self, len: &Rat) -> Result<()> {
        let complain = |msg: String| Err(Error::InvalidDistribution(msg));
        if self.pieces.is_empty() {
            return complain("arc cdf has no pieces".into());
        }
        if !self.pieces[0].lo.is_zero() || &self.pieces[self.pieces.len() - 1].hi != len {
            return complain("cdf pieces must cover the whole arc".into());
        }
        if !self.pieces[0].cdf.eval(&Rat::zero()).is_zero() {
            return complain("cdf must start at 0".into());
        }
        let mut prev_hi: Option<(&Rat, Rat)> = None;
        for p in &self.pieces {
            if p.lo >= p.hi {
                return complain("cdf piece has non-positive width".into());
            }
            if p.cdf.degree() > 2 {
                return complain("cdf pieces of degree > 2 are not supported".into());
            }
            if let Some((hi, val)) = prev_hi {
                if hi != &p.lo {
                    return complain("cdf pieces must be contiguous".into());
                }
                if p.cdf.eval(&p.lo) != val {
                    return complain(format!("cdf is discontinuous at offset {}", fmt_rat(&p.lo)));
                }
            }
            if let Some(w) = p.cdf.derivative().negative_witness_on(&p.lo, &p.hi) {
                return complain(format!("cdf decreases near offset {}", fmt_rat(&w)));
            }
            prev_hi = Some((&p.hi, p.cdf.eval(&p.hi)));
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[CdfPiece] {
        &self.pieces
    }

    /// Cumulative continuous mass on `[0, o]`.
    pub fn eval(&self, o: &Rat) -> Rat {
        for p in &self.pieces {
            if o <= &p.hi {
                return p.cdf.eval(o.max(&p.lo));
            }
        }
        self.total()
    }

    pub fn total(&self) -> Rat {
        let last = self.pieces.last().expect("validated cdfs have pieces");
        last.cdf.eval(&last.hi)
    }

    /// One-sided density at an offset.
    pub fn density(&self, o: &Rat, from_above: bool) -> Rat {
        let mut value = Rat::zero();
        for p in &self.pieces {
            let inside = if from_above { o >= &p.lo && o < &p.hi } else { o > &p.lo && o <= &p.hi };
            if inside {
                value = p.cdf.derivative().eval(o);
                break;
            }
        }
        value
    }

    /// Offsets where the polynomial piece changes.
    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut out: Vec<Rat> = self.pieces.iter().map(|p| p.lo.clone()).collect();
        out.push(self.pieces.last().unwrap().hi.clone());
        out
    }

    pub fn all_linear(&self) -> bool {
        self.pieces.iter().all(|p| p.cdf.degree() <= 1)
    }
}

/// Exact subtree statistics: length, mass, density where defined.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtreeStats {
    pub length: Rat,
    pub mass: Rat,
    pub density: Option<Rat>,
}

impl SubtreeStats {
    pub fn density(&self) -> Result<&Rat> {
        self.density.as_ref().ok_or_else(|| Error::LeafPoint("zero-length subtree".into()))
    }
}

#[derive(Clone, Debug)]
pub struct HidingDistribution {
    atoms: BTreeMap<NodeId, Rat>,
    arc_cdfs: Vec<ArcCdf>,
}

impl HidingDistribution {
    /// Uniform distribution: density 1/μ everywhere, no atoms.
    pub fn uniform(q: &TreeNetwork) -> HidingDistribution {
        let inv_mu = Rat::one() / q.mu();
        let arc_cdfs = q
            .arcs()
            .map(|(_, info)| ArcCdf {
                pieces: vec![CdfPiece {
                    lo: Rat::zero(),
                    hi: info.len.clone(),
                    cdf: Poly::affine(Rat::zero(), inv_mu.clone()),
                }],
            })
            .collect();
        HidingDistribution { atoms: BTreeMap::new(), arc_cdfs }
    }

    /// The Equal Branch Density distribution: atoms at leaf nodes only,
    /// built by splitting mass at every node proportionally to branch
    /// lengths.
    pub fn ebd(q: &TreeNetwork) -> HidingDistribution {
        let mut atoms = BTreeMap::new();
        let mut stack = vec![(q.root(), Rat::one())];
        while let Some((v, m)) = stack.pop() {
            if q.children(v).is_empty() {
                *atoms.entry(v).or_insert_with(Rat::zero) += m;
                continue;
            }
            let total = q.below_len(v);
            for &c in q.children(v) {
                let info = q.arc(c);
                let branch_len = &info.len + q.below_len(info.head);
                stack.push((info.head, &m * branch_len / total));
            }
        }
        let arc_cdfs = q.arcs().map(|(_, info)| ArcCdf::zero(&info.len)).collect();
        HidingDistribution { atoms, arc_cdfs }
    }

    /// Equal weight on every node, including the root.
    pub fn equiprobable_nodes(q: &TreeNetwork) -> HidingDistribution {
        let w = Rat::one() / Rat::from_integer(q.n_nodes().into());
        let atoms = q.nodes().map(|v| (v, w.clone())).collect();
        let arc_cdfs = q.arcs().map(|(_, info)| ArcCdf::zero(&info.len)).collect();
        HidingDistribution { atoms, arc_cdfs }
    }

    /// Assembles and validates a distribution from explicit parts. Arcs
    /// missing from `cdfs` carry zero continuous mass.
    pub fn from_parts(
        q: &TreeNetwork,
        atoms: Vec<(NodeId, Rat)>,
        cdfs: Vec<(ArcId, ArcCdf)>,
    ) -> Result<HidingDistribution> {
        let mut atom_map: BTreeMap<NodeId, Rat> = BTreeMap::new();
        for (v, m) in atoms {
            if m < Rat::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "negative atom at node `{}`",
                    q.node_name(v)
                )));
            }
            if !m.is_zero() {
                *atom_map.entry(v).or_insert_with(Rat::zero) += m;
            }
        }
        let mut arc_cdfs: Vec<Option<ArcCdf>> = vec![None; q.n_arcs()];
        for (a, cdf) in cdfs {
            cdf.validate(&q.arc(a).len)?;
            if arc_cdfs[a.0].is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "arc `{}` specified twice",
                    q.arc(a).name
                )));
            }
            arc_cdfs[a.0] = Some(cdf);
        }
        let arc_cdfs: Vec<ArcCdf> = arc_cdfs
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.unwrap_or_else(|| ArcCdf::zero(&q.arc(ArcId(i)).len)))
            .collect();
        let h = HidingDistribution { atoms: atom_map, arc_cdfs };
        let total = h.total_mass();
        if total != Rat::one() {
            return Err(Error::InvalidDistribution(format!(
                "total mass {} != 1",
                fmt_rat(&total)
            )));
        }
        Ok(h)
    }

    pub fn atom(&self, v: NodeId) -> Rat {
        self.atoms.get(&v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (NodeId, &Rat)> {
        self.atoms.iter().map(|(&v, m)| (v, m))
    }

    pub fn arc_cdf(&self, a: ArcId) -> &ArcCdf {
        &self.arc_cdfs[a.0]
    }

    /// Continuous mass of an arc.
    pub fn arc_mass(&self, a: ArcId) -> Rat {
        self.arc_cdfs[a.0].total()
    }

    /// Mass of arc `a` including the atom at its head (the per-arc
    /// weight `h_j` on stars).
    pub fn arc_mass_with_head_atom(&self, q: &TreeNetwork, a: ArcId) -> Rat {
        self.arc_mass(a) + self.atom(q.arc(a).head)
    }

    pub fn total_mass(&self) -> Rat {
        let atoms: Rat = self.atoms.values().cloned().sum();
        let cont: Rat = self.arc_cdfs.iter().map(|c| c.total()).sum();
        atoms + cont
    }

    /// ∫ g dF over `[lo, hi]` of one arc, exact.
    pub fn integrate_against(&self, a: ArcId, lo: &Rat, hi: &Rat, g: &Poly) -> Rat {
        let mut total = Rat::zero();
        for p in self.arc_cdfs[a.0].pieces() {
            let l = lo.max(&p.lo).clone();
            let r = hi.min(&p.hi).clone();
            if l < r {
                total += g.mul(&p.cdf.derivative()).definite_integral(&l, &r);
            }
        }
        total
    }

    /// Mass of a subtree/branch point set.
    pub fn mass_of(&self, q: &TreeNetwork, set: &Subtree) -> Rat {
        let mut nodes: BTreeSet<NodeId> = BTreeSet::new();
        let mut cont = Rat::zero();
        for (a, lo, hi) in &set.intervals {
            let cdf = &self.arc_cdfs[a.0];
            cont += cdf.eval(hi) - cdf.eval(lo);
            let info = q.arc(*a);
            if lo.is_zero() {
                nodes.insert(info.tail);
            }
            if hi == &info.len {
                nodes.insert(info.head);
            }
        }
        match q.node_at(&set.anchor) {
            Some(v) if set.includes_anchor => {
                nodes.insert(v);
            }
            Some(v) => {
                nodes.remove(&v);
            }
            None => {}
        }
        let atoms: Rat = nodes.iter().map(|&v| self.atom(v)).sum();
        cont + atoms
    }

    /// h(Q_x): the subtree contains its anchor, so an atom at x counts.
    pub fn subtree_mass(&self, q: &TreeNetwork, x: &NetPoint) -> Rat {
        self.mass_of(q, &q.subtree(x))
    }

    pub fn subtree_stats(&self, q: &TreeNetwork, x: &NetPoint) -> SubtreeStats {
        let sub = q.subtree(x);
        let mass = self.mass_of(q, &sub);
        let density = if sub.length.is_zero() { None } else { Some(&mass / &sub.length) };
        SubtreeStats { length: sub.length, mass, density }
    }

    /// Stats of each branch at x; errors at leaf nodes.
    pub fn branch_stats(&self, q: &TreeNetwork, x: &NetPoint) -> Result<Vec<SubtreeStats>> {
        Ok(q.branches_at(x)?
            .into_iter()
            .map(|b| {
                let mass = self.mass_of(q, &b);
                let density = Some(&mass / &b.length);
                SubtreeStats { length: b.length, mass, density }
            })
            .collect())
    }

    /// ∫ λ(Q_x) dh(x), the integral in the balanced DF formula.
    pub fn expected_subtree_length(&self, q: &TreeNetwork) -> Rat {
        let mut total = Rat::zero();
        for (&v, m) in &self.atoms {
            total += m * q.below_len(v);
        }
        for (a, info) in q.arcs() {
            // λ(Q_x) at offset o: (len - o) + below(head).
            let g = Poly::affine(&info.len + q.below_len(info.head), -Rat::one());
            total += self.integrate_against(a, &Rat::zero(), &info.len, &g);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::tests::{fig1, interval, unit_path3};
    use crate::rat::{rat, rat_int};

    #[test]
    fn uniform_masses_and_density() {
        let q = fig1();
        let u = HidingDistribution::uniform(&q);
        assert_eq!(u.total_mass(), rat_int(1));
        assert_eq!(u.arc_mass(q.arc_id("OA").unwrap()), rat(3, 7));
        // ρ(Q_x) = 1/μ for interior points and the root alike.
        let x = q.point_on(q.arc_id("OD").unwrap(), rat(1, 2)).unwrap();
        let stats = u.subtree_stats(&q, &x);
        assert_eq!(stats.density.unwrap(), rat(1, 14));
        let root_stats = u.subtree_stats(&q, &q.root_point());
        assert_eq!(root_stats.density.unwrap(), rat(1, 14));
        assert_eq!(root_stats.mass, rat_int(1));
    }

    #[test]
    fn unit_interval_cdf_is_identity() {
        let q = TreeNetwork::new(
            "O",
            &[("a".into(), "O".into(), "A".into(), rat_int(1))],
        )
        .unwrap();
        let u = HidingDistribution::uniform(&q);
        let a = q.arc_id("a").unwrap();
        assert_eq!(u.arc_cdf(a).eval(&rat(1, 3)), rat(1, 3));
        assert_eq!(u.arc_cdf(a).eval(&rat_int(1)), rat_int(1));
    }

    #[test]
    fn ebd_fig1_masses() {
        let q = fig1();
        let h = HidingDistribution::ebd(&q);
        assert_eq!(h.atom(q.node_id("A").unwrap()), rat(3, 7));
        assert_eq!(h.atom(q.node_id("B").unwrap()), rat(8, 35));
        assert_eq!(h.atom(q.node_id("C").unwrap()), rat(12, 35));
        assert_eq!(h.atom(q.node_id("O").unwrap()), rat_int(0));
        assert_eq!(h.total_mass(), rat_int(1));
    }

    #[test]
    fn ebd_simple_trees() {
        let single = TreeNetwork::new(
            "O",
            &[("a".into(), "O".into(), "A".into(), rat_int(1))],
        )
        .unwrap();
        let h = HidingDistribution::ebd(&single);
        assert_eq!(h.atom(single.node_id("A").unwrap()), rat_int(1));

        let star = TreeNetwork::new(
            "O",
            &[
                ("a".into(), "O".into(), "A".into(), rat_int(1)),
                ("b".into(), "O".into(), "B".into(), rat_int(1)),
                ("c".into(), "O".into(), "C".into(), rat_int(1)),
            ],
        )
        .unwrap();
        let h = HidingDistribution::ebd(&star);
        for leaf in ["A", "B", "C"] {
            assert_eq!(h.atom(star.node_id(leaf).unwrap()), rat(1, 3));
        }
    }

    #[test]
    fn equiprobable_nodes_masses() {
        let q = unit_path3();
        let e = HidingDistribution::equiprobable_nodes(&q);
        for name in ["O", "A", "B"] {
            assert_eq!(e.atom(q.node_id(name).unwrap()), rat(1, 3));
        }
        let q = fig1();
        let e = HidingDistribution::equiprobable_nodes(&q);
        assert_eq!(e.atom(q.node_id("D").unwrap()), rat(1, 5));
    }

    #[test]
    fn subtree_stats_fig1_ebd() {
        let q = fig1();
        let h = HidingDistribution::ebd(&q);
        let d = q.node_point(q.node_id("D").unwrap());
        let stats = h.subtree_stats(&q, &d);
        assert_eq!(stats.mass, rat(4, 7));
        assert_eq!(stats.length, rat_int(5));
        assert_eq!(stats.density.unwrap(), rat(4, 35));
        let root = h.subtree_stats(&q, &q.root_point());
        assert_eq!(root.density.unwrap(), rat(1, 14));
        // Density at a leaf is undefined.
        let b = q.node_point(q.node_id("B").unwrap());
        assert!(h.subtree_stats(&q, &b).density().is_err());
    }

    #[test]
    fn atom_of_mass_one_anywhere() {
        let q = fig1();
        let b = q.node_id("B").unwrap();
        let h = HidingDistribution::from_parts(&q, vec![(b, rat_int(1))], vec![]).unwrap();
        let bp = q.node_point(b);
        assert_eq!(q.mean_distance(&bp, &h), rat_int(0));
        assert_eq!(h.subtree_mass(&q, &bp), rat_int(1));
    }

    #[test]
    fn mean_distance_examples() {
        let q = fig1();
        let u = HidingDistribution::uniform(&q);
        assert_eq!(q.mean_distance(&q.root_point(), &u), rat(22, 7));

        let p = unit_path3();
        let e = HidingDistribution::equiprobable_nodes(&p);
        assert_eq!(p.mean_distance(&p.root_point(), &e), rat_int(1));
    }

    #[test]
    fn mass_additivity_at_branch_nodes() {
        let q = fig1();
        for h in [
            HidingDistribution::uniform(&q),
            HidingDistribution::ebd(&q),
            HidingDistribution::equiprobable_nodes(&q),
        ] {
            for v in q.nodes() {
                if q.is_leaf(v) {
                    continue;
                }
                let p = q.node_point(v);
                let branch_sum: Rat =
                    q.branches_at(&p).unwrap().iter().map(|b| h.mass_of(&q, b)).sum();
                assert_eq!(h.subtree_mass(&q, &p), branch_sum + h.atom(v));
            }
        }
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        let q = fig1();
        let b = q.node_id("B").unwrap();
        // Mass 9/10 != 1.
        let err = HidingDistribution::from_parts(&q, vec![(b, rat(9, 10))], vec![]);
        assert!(matches!(err, Err(Error::InvalidDistribution(ref m)) if m.contains("total mass")));
        // Decreasing cdf.
        let bad = ArcCdf::from_breakpoints(&rat_int(6), &[(rat_int(1), rat(1, 2)), (rat_int(2), rat(1, 4))]);
        assert!(bad.is_err());
    }

    #[test]
    fn expected_subtree_length_uniform_equals_mean_distance() {
        // Corollary-style identity: ∫ λ(Q_x) du(x) = mean distance from O.
        for q in [fig1(), unit_path3(), interval(rat_int(1), rat_int(1))] {
            let u = HidingDistribution::uniform(&q);
            assert_eq!(u.expected_subtree_length(&q), q.mean_distance(&q.root_point(), &u));
        }
    }

    #[test]
    fn density_breakpoints_triangular() {
        // f(o) = 1 - o on a unit arc: F = o - o^2/2.
        let cdf = ArcCdf::from_density_breakpoints(
            &rat_int(1),
            &[(rat_int(0), rat_int(1)), (rat_int(1), rat_int(0))],
        )
        .unwrap();
        assert_eq!(cdf.eval(&rat(1, 2)), rat(3, 8));
        assert_eq!(cdf.total(), rat(1, 2));
        assert_eq!(cdf.density(&rat(1, 2), true), rat(1, 2));
    }
}
