//! Rooted metric tree networks and exact geometry queries.
//!
//! A `TreeNetwork` is immutable after construction: arcs are oriented away
//! from the root, lengths are positive rationals, and points on the
//! network are `(arc, offset)` pairs in canonical form so equality is
//! decidable. All path, subtree and branch queries are exact.

use crate::hiding::HidingDistribution;
use crate::poly::Poly;
use crate::rat::{fmt_rat, Rat};
use crate::{Error, Result};
use num_traits::Zero;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

#[derive(Clone, Debug)]
pub struct ArcInfo {
    pub name: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub len: Rat,
}

/// A location on the network: an arc and an offset from the arc's
/// rootward endpoint. Constructed through [`TreeNetwork::point_on`] or
/// [`TreeNetwork::node_point`], which canonicalize node-coincident
/// points: a node with children is `(first child arc, 0)`, a leaf is
/// `(parent arc, len)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetPoint {
    pub arc: ArcId,
    pub offset: Rat,
}

/// The subtree `Q_x` of points at or beyond an anchor, stored as closed
/// arc intervals plus the anchor itself.
#[derive(Clone, Debug)]
pub struct Subtree {
    pub anchor: NetPoint,
    /// Closed intervals `(arc, lo, hi)` whose union (with the anchor) is
    /// the point set.
    pub intervals: Vec<(ArcId, Rat, Rat)>,
    pub length: Rat,
    /// Whether the anchor point itself belongs to the set (true for
    /// `Q_x`, false for a branch, which is a component of `Q_x - {x}`).
    pub includes_anchor: bool,
}

#[derive(Clone, Debug)]
pub struct TreeNetwork {
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    arc_index: HashMap<String, ArcId>,
    root: NodeId,
    arcs: Vec<ArcInfo>,
    children: Vec<Vec<ArcId>>,
    parent: Vec<Option<ArcId>>,
    depth: Vec<Rat>,
    below_len: Vec<Rat>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    preorder: Vec<NodeId>,
    total_len: Rat,
}

impl TreeNetwork {
    /// Builds and validates a rooted tree. Arcs are `(name, tail, head,
    /// length)` with the tail nearer the root.
    pub fn new(root: &str, arc_specs: &[(String, String, String, Rat)]) -> Result<TreeNetwork> {
        let mut node_names: Vec<String> = Vec::new();
        let mut node_index: HashMap<String, NodeId> = HashMap::new();
        let intern = |name: &str, names: &mut Vec<String>, index: &mut HashMap<String, NodeId>| {
            *index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                NodeId(names.len() - 1)
            })
        };
        let root_id = intern(root, &mut node_names, &mut node_index);
        let mut arcs = Vec::new();
        let mut arc_index = HashMap::new();
        for (name, tail, head, len) in arc_specs {
            if len <= &Rat::zero() {
                return Err(Error::NonPositiveLength(name.clone()));
            }
            let tail_id = intern(tail, &mut node_names, &mut node_index);
            let head_id = intern(head, &mut node_names, &mut node_index);
            if tail_id == head_id {
                return Err(Error::NotATree(format!("arc `{name}` is a self-loop")));
            }
            if arc_index.insert(name.clone(), ArcId(arcs.len())).is_some() {
                return Err(Error::NotATree(format!("duplicate arc name `{name}`")));
            }
            arcs.push(ArcInfo { name: name.clone(), tail: tail_id, head: head_id, len: len.clone() });
        }
        let n = node_names.len();
        if arcs.is_empty() {
            return Err(Error::NotATree("network has no arcs".into()));
        }
        if arcs.len() != n - 1 {
            return Err(Error::NotATree(format!(
                "{} arcs for {} nodes (expected {})",
                arcs.len(),
                n,
                n - 1
            )));
        }
        let mut children: Vec<Vec<ArcId>> = vec![Vec::new(); n];
        let mut parent: Vec<Option<ArcId>> = vec![None; n];
        for (i, arc) in arcs.iter().enumerate() {
            if arc.head == root_id {
                return Err(Error::NotATree(format!(
                    "arc `{}` points into the root; orient arcs away from it",
                    arc.name
                )));
            }
            if parent[arc.head.0].is_some() {
                return Err(Error::NotATree(format!(
                    "node `{}` has two rootward arcs",
                    node_names[arc.head.0]
                )));
            }
            parent[arc.head.0] = Some(ArcId(i));
            children[arc.tail.0].push(ArcId(i));
        }
        // Depth-first sweep from the root: reaches everything exactly once
        // iff the oriented arc set is a tree.
        let mut depth = vec![Rat::zero(); n];
        let mut below_len = vec![Rat::zero(); n];
        let mut tin = vec![usize::MAX; n];
        let mut tout = vec![0usize; n];
        let mut preorder = Vec::with_capacity(n);
        let mut clock = 0usize;
        // Iterative DFS with a post-visit phase for below_len.
        let mut stack: Vec<(NodeId, usize)> = vec![(root_id, 0)];
        tin[root_id.0] = clock;
        preorder.push(root_id);
        clock += 1;
        while let Some((v, ci)) = stack.pop() {
            if ci < children[v.0].len() {
                stack.push((v, ci + 1));
                let arc = &arcs[children[v.0][ci].0];
                let w = arc.head;
                depth[w.0] = &depth[v.0] + &arc.len;
                tin[w.0] = clock;
                preorder.push(w);
                clock += 1;
                stack.push((w, 0));
            } else {
                tout[v.0] = clock;
                clock += 1;
                let mut acc = Rat::zero();
                for &c in &children[v.0] {
                    acc += &arcs[c.0].len + &below_len[arcs[c.0].head.0];
                }
                below_len[v.0] = acc;
            }
        }
        if preorder.len() != n {
            return Err(Error::NotATree("network is not connected from the root".into()));
        }
        let total_len = below_len[root_id.0].clone();
        Ok(TreeNetwork {
            node_names,
            node_index,
            arc_index,
            root: root_id,
            arcs,
            children,
            parent,
            depth,
            below_len,
            tin,
            tout,
            preorder,
            total_len,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Total length μ = λ(Q).
    pub fn mu(&self) -> &Rat {
        &self.total_len
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v.0]
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId> {
        self.node_index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.into()))
    }

    pub fn arc_id(&self, name: &str) -> Result<ArcId> {
        self.arc_index.get(name).copied().ok_or_else(|| Error::UnknownArc(name.into()))
    }

    pub fn arc(&self, a: ArcId) -> &ArcInfo {
        &self.arcs[a.0]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, &ArcInfo)> {
        self.arcs.iter().enumerate().map(|(i, a)| (ArcId(i), a))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_names.len()).map(NodeId)
    }

    /// Nodes in root-first preorder.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    pub fn children(&self, v: NodeId) -> &[ArcId] {
        &self.children[v.0]
    }

    pub fn parent_arc(&self, v: NodeId) -> Option<ArcId> {
        self.parent[v.0]
    }

    pub fn parent_node(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0].map(|a| self.arcs[a.0].tail)
    }

    /// Leaf nodes; the root is never a leaf, whatever its degree.
    pub fn is_leaf(&self, v: NodeId) -> bool {
        v != self.root && self.children[v.0].is_empty()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn node_depth(&self, v: NodeId) -> &Rat {
        &self.depth[v.0]
    }

    /// λ of the subtree strictly below the node (excludes the parent arc).
    pub fn below_len(&self, v: NodeId) -> &Rat {
        &self.below_len[v.0]
    }

    pub fn is_ancestor_node(&self, u: NodeId, v: NodeId) -> bool {
        self.tin[u.0] <= self.tin[v.0] && self.tout[v.0] <= self.tout[u.0]
    }

    /// True when every arc starts at the root (a star rooted at its
    /// center).
    pub fn is_star(&self) -> bool {
        self.arcs.iter().all(|a| a.tail == self.root)
    }

    /// Canonical point at a node.
    pub fn node_point(&self, v: NodeId) -> NetPoint {
        if let Some(&first) = self.children[v.0].first() {
            NetPoint { arc: first, offset: Rat::zero() }
        } else {
            let p = self.parent[v.0].expect("a tree with arcs has no isolated nodes");
            NetPoint { arc: p, offset: self.arcs[p.0].len.clone() }
        }
    }

    /// Canonical point on an arc; endpoint offsets collapse to the node
    /// form.
    pub fn point_on(&self, arc: ArcId, offset: Rat) -> Result<NetPoint> {
        let info = &self.arcs[arc.0];
        if offset < Rat::zero() || offset > info.len {
            return Err(Error::OffsetOutOfRange {
                arc: info.name.clone(),
                offset: fmt_rat(&offset),
                len: fmt_rat(&info.len),
            });
        }
        if offset.is_zero() {
            Ok(self.node_point(info.tail))
        } else if offset == info.len {
            Ok(self.node_point(info.head))
        } else {
            Ok(NetPoint { arc, offset })
        }
    }

    pub fn root_point(&self) -> NetPoint {
        self.node_point(self.root)
    }

    /// The node a canonical point coincides with, if any.
    pub fn node_at(&self, p: &NetPoint) -> Option<NodeId> {
        let info = &self.arcs[p.arc.0];
        if p.offset.is_zero() {
            Some(info.tail)
        } else if p.offset == info.len {
            Some(info.head)
        } else {
            None
        }
    }

    /// Base node (the rootward end of the residual) and residual offset.
    fn base(&self, p: &NetPoint) -> (NodeId, Rat) {
        let info = &self.arcs[p.arc.0];
        if p.offset == info.len {
            (info.head, Rat::zero())
        } else {
            (info.tail, p.offset.clone())
        }
    }

    /// d(O, p).
    pub fn depth_of(&self, p: &NetPoint) -> Rat {
        let (b, r) = self.base(p);
        &self.depth[b.0] + r
    }

    /// The offset of `p` on arc `a`, when `p` lies on that arc (node
    /// endpoints included).
    pub fn offset_on_arc(&self, p: &NetPoint, a: ArcId) -> Option<Rat> {
        let info = &self.arcs[a.0];
        if p.arc == a {
            return Some(p.offset.clone());
        }
        match self.node_at(p) {
            Some(v) if v == info.tail => Some(Rat::zero()),
            Some(v) if v == info.head => Some(info.len.clone()),
            _ => None,
        }
    }

    /// The partial order x ⪯ y: x lies on the path from the root to y.
    pub fn precedes(&self, x: &NetPoint, y: &NetPoint) -> bool {
        if x == y {
            return true;
        }
        let (bx, rx) = self.base(x);
        let (by, _) = self.base(y);
        if rx.is_zero() {
            self.is_ancestor_node(bx, by)
        } else if x.arc == y.arc {
            rx <= y.offset
        } else {
            self.is_ancestor_node(self.arcs[x.arc.0].head, by)
        }
    }

    fn node_lca(&self, mut u: NodeId, v: NodeId) -> NodeId {
        while !self.is_ancestor_node(u, v) {
            u = self.parent_node(u).expect("root is an ancestor of everything");
        }
        u
    }

    /// The meet of x and y: the deepest point on both root paths.
    pub fn meet(&self, x: &NetPoint, y: &NetPoint) -> NetPoint {
        if self.precedes(x, y) {
            return x.clone();
        }
        if self.precedes(y, x) {
            return y.clone();
        }
        let (bx, _) = self.base(x);
        let (by, _) = self.base(y);
        self.node_point(self.node_lca(bx, by))
    }

    /// Exact path length d(x, y).
    pub fn distance(&self, x: &NetPoint, y: &NetPoint) -> Rat {
        let m = self.meet(x, y);
        let dm = self.depth_of(&m);
        self.depth_of(x) + self.depth_of(y) - Rat::from_integer(2.into()) * dm
    }

    /// Directed traversal of the unique path from x to y, as `(arc, from,
    /// to)` offset sweeps.
    pub fn path_between(&self, x: &NetPoint, y: &NetPoint) -> Vec<(ArcId, Rat, Rat)> {
        let m = self.meet(x, y);
        let mut up = self.ascend(x, &m);
        let down = self.ascend(y, &m);
        up.extend(down.into_iter().rev().map(|(a, from, to)| (a, to, from)));
        up
    }

    /// Upward segments from `p` to an ancestor point `m` (requires m ⪯ p).
    fn ascend(&self, p: &NetPoint, m: &NetPoint) -> Vec<(ArcId, Rat, Rat)> {
        debug_assert!(self.precedes(m, p));
        let mut segs = Vec::new();
        if p == m {
            return segs;
        }
        let (mut arc, mut off) = {
            // Start from a representation with positive residual so the
            // upward sweep is non-degenerate.
            match self.node_at(p) {
                Some(v) => {
                    let pa = self.parent[v.0].expect("m ≺ p, so p is not the root");
                    (pa, self.arcs[pa.0].len.clone())
                }
                None => (p.arc, p.offset.clone()),
            }
        };
        loop {
            if let Some(target_off) = self.offset_on_arc(m, arc) {
                if target_off <= off {
                    if target_off != off {
                        segs.push((arc, off, target_off));
                    }
                    return segs;
                }
            }
            if !off.is_zero() {
                segs.push((arc, off.clone(), Rat::zero()));
            }
            let tail = self.arcs[arc.0].tail;
            let pa = self.parent[tail.0].expect("walked past the root while ascending");
            arc = pa;
            off = self.arcs[pa.0].len.clone();
        }
    }

    /// All arcs strictly below a node, preorder.
    pub fn arcs_below(&self, v: NodeId) -> Vec<ArcId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = vec![v];
        while let Some(u) = stack.pop() {
            for &c in &self.children[u.0] {
                out.push(c);
                stack.push(self.arcs[c.0].head);
            }
        }
        out
    }

    /// The subtree Q_x rooted at a point, with exact total length.
    pub fn subtree(&self, x: &NetPoint) -> Subtree {
        match self.node_at(x) {
            Some(v) => {
                let intervals = self
                    .arcs_below(v)
                    .into_iter()
                    .map(|a| (a, Rat::zero(), self.arcs[a.0].len.clone()))
                    .collect();
                Subtree {
                    anchor: x.clone(),
                    intervals,
                    length: self.below_len[v.0].clone(),
                    includes_anchor: true,
                }
            }
            None => {
                let info = &self.arcs[x.arc.0];
                let mut intervals = vec![(x.arc, x.offset.clone(), info.len.clone())];
                intervals.extend(
                    self.arcs_below(info.head)
                        .into_iter()
                        .map(|a| (a, Rat::zero(), self.arcs[a.0].len.clone())),
                );
                let length = &info.len - &x.offset + &self.below_len[info.head.0];
                Subtree { anchor: x.clone(), intervals, length, includes_anchor: true }
            }
        }
    }

    /// The branches at x: connected components of Q_x − {x}. Errors on a
    /// leaf node (λ(Q_x) = 0).
    pub fn branches_at(&self, x: &NetPoint) -> Result<Vec<Subtree>> {
        match self.node_at(x) {
            Some(v) => {
                if self.is_leaf(v) {
                    return Err(Error::LeafPoint(self.node_names[v.0].clone()));
                }
                Ok(self
                    .children[v.0]
                    .iter()
                    .map(|&c| {
                        let info = &self.arcs[c.0];
                        let mut intervals = vec![(c, Rat::zero(), info.len.clone())];
                        intervals.extend(
                            self.arcs_below(info.head)
                                .into_iter()
                                .map(|a| (a, Rat::zero(), self.arcs[a.0].len.clone())),
                        );
                        let length = &info.len + &self.below_len[info.head.0];
                        Subtree { anchor: x.clone(), intervals, length, includes_anchor: false }
                    })
                    .collect())
            }
            None => {
                let mut sub = self.subtree(x);
                sub.includes_anchor = false;
                Ok(vec![sub])
            }
        }
    }

    /// d(x, ·) on an arc as affine pieces `(lo, hi, poly in offset)`.
    pub fn distance_profile(&self, x: &NetPoint, a: ArcId) -> Vec<(Rat, Rat, Poly)> {
        let info = &self.arcs[a.0];
        let head_pt = self.node_point(info.head);
        let tail_pt = self.node_point(info.tail);
        if x.arc == a && self.node_at(x).is_none() {
            // Interior point of this very arc: kink at its offset.
            let o = &x.offset;
            return vec![
                (Rat::zero(), o.clone(), Poly::affine(o.clone(), -Rat::from_integer(1.into()))),
                (o.clone(), info.len.clone(), Poly::affine(-o.clone(), Rat::from_integer(1.into()))),
            ];
        }
        if self.precedes(&head_pt, x) {
            // Path runs through the head: d = (len - o) + d(head, x).
            let c = self.distance(&head_pt, x) + &info.len;
            vec![(Rat::zero(), info.len.clone(), Poly::affine(c, -Rat::from_integer(1.into())))]
        } else {
            // Path runs through the tail: d = o + d(tail, x).
            let c = self.distance(&tail_pt, x);
            vec![(Rat::zero(), info.len.clone(), Poly::affine(c, Rat::from_integer(1.into())))]
        }
    }

    /// Mean distance ∫ d(x, y) dh(y), exact.
    pub fn mean_distance(&self, x: &NetPoint, h: &HidingDistribution) -> Rat {
        let mut total = Rat::zero();
        for v in self.nodes() {
            let mass = h.atom(v);
            if !mass.is_zero() {
                total += mass * self.distance(x, &self.node_point(v));
            }
        }
        for (a, _) in self.arcs() {
            for (lo, hi, g) in self.distance_profile(x, a) {
                total += h.integrate_against(a, &lo, &hi, &g);
            }
        }
        total
    }

    /// Human-readable point description: the node name, or `arc@offset`.
    pub fn describe_point(&self, p: &NetPoint) -> String {
        match self.node_at(p) {
            Some(v) => self.node_names[v.0].clone(),
            None => format!("{}@{}", self.arcs[p.arc.0].name, fmt_rat(&p.offset)),
        }
    }

    /// Rebuilds the same undirected metric tree rooted at another node.
    pub fn rerooted(&self, new_root: NodeId) -> TreeNetwork {
        let n = self.n_nodes();
        let mut adj: Vec<Vec<(usize, NodeId)>> = vec![Vec::new(); n];
        for (i, arc) in self.arcs.iter().enumerate() {
            adj[arc.tail.0].push((i, arc.head));
            adj[arc.head.0].push((i, arc.tail));
        }
        let mut specs = Vec::with_capacity(self.arcs.len());
        let mut seen = vec![false; n];
        seen[new_root.0] = true;
        let mut queue = std::collections::VecDeque::from([new_root]);
        while let Some(v) = queue.pop_front() {
            for &(ai, w) in &adj[v.0] {
                if !seen[w.0] {
                    seen[w.0] = true;
                    let arc = &self.arcs[ai];
                    specs.push((
                        arc.name.clone(),
                        self.node_names[v.0].clone(),
                        self.node_names[w.0].clone(),
                        arc.len.clone(),
                    ));
                    queue.push_back(w);
                }
            }
        }
        TreeNetwork::new(&self.node_names[new_root.0], &specs)
            .expect("rerooting a valid tree stays valid")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use num_traits::Signed;

    /// The worked example tree: arcs OA=6, OD=3, DB=2, DC=3.
    pub(crate) fn fig1() -> TreeNetwork {
        TreeNetwork::new(
            "O",
            &[
                ("OA".into(), "O".into(), "A".into(), rat_int(6)),
                ("OD".into(), "O".into(), "D".into(), rat_int(3)),
                ("DB".into(), "D".into(), "B".into(), rat_int(2)),
                ("DC".into(), "D".into(), "C".into(), rat_int(3)),
            ],
        )
        .unwrap()
    }

    pub(crate) fn unit_path3() -> TreeNetwork {
        TreeNetwork::new(
            "O",
            &[
                ("OA".into(), "O".into(), "A".into(), rat_int(1)),
                ("AB".into(), "A".into(), "B".into(), rat_int(1)),
            ],
        )
        .unwrap()
    }

    /// Two-arc star on [-λ2, λ1] rooted at 0: arcs R (right) and L (left).
    pub(crate) fn interval(lambda1: Rat, lambda2: Rat) -> TreeNetwork {
        TreeNetwork::new(
            "O",
            &[
                ("R".into(), "O".into(), "P".into(), lambda1),
                ("L".into(), "O".into(), "M".into(), lambda2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fig1_distances() {
        let q = fig1();
        assert_eq!(q.mu(), &rat_int(14));
        let a = q.node_point(q.node_id("A").unwrap());
        let b = q.node_point(q.node_id("B").unwrap());
        let c = q.node_point(q.node_id("C").unwrap());
        assert_eq!(q.distance(&a, &c), rat_int(12));
        assert_eq!(q.distance(&b, &c), rat_int(5));
        assert_eq!(q.distance(&a, &a), rat_int(0));
        let x = q.point_on(q.arc_id("DB").unwrap(), rat(1, 2)).unwrap();
        assert_eq!(q.distance(&a, &x), rat(19, 2));
        assert_eq!(q.distance(&x, &a), rat(19, 2));
    }

    #[test]
    fn triangle_equality_through_midpoint() {
        let q = fig1();
        let a = q.node_point(q.node_id("A").unwrap());
        let c = q.node_point(q.node_id("C").unwrap());
        let o = q.root_point();
        let d = q.node_point(q.node_id("D").unwrap());
        for y in [&o, &d] {
            assert_eq!(q.distance(&a, y) + q.distance(y, &c), q.distance(&a, &c));
        }
    }

    #[test]
    fn fig1_subtrees_and_branches() {
        let q = fig1();
        let d = q.node_point(q.node_id("D").unwrap());
        assert_eq!(q.subtree(&d).length, rat_int(5));
        assert_eq!(q.subtree(&q.root_point()).length, rat_int(14));
        let b = q.node_point(q.node_id("B").unwrap());
        assert_eq!(q.subtree(&b).length, rat_int(0));

        let mut at_root: Vec<Rat> =
            q.branches_at(&q.root_point()).unwrap().into_iter().map(|s| s.length).collect();
        at_root.sort();
        assert_eq!(at_root, vec![rat_int(6), rat_int(8)]);
        let mut at_d: Vec<Rat> =
            q.branches_at(&d).unwrap().into_iter().map(|s| s.length).collect();
        at_d.sort();
        assert_eq!(at_d, vec![rat_int(2), rat_int(3)]);

        // Interior point: a single branch.
        let x = q.point_on(q.arc_id("OA").unwrap(), rat_int(2)).unwrap();
        let branches = q.branches_at(&x).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].length, rat_int(4));

        assert!(q.branches_at(&b).is_err());
    }

    #[test]
    fn canonical_points_are_equal() {
        let q = fig1();
        let od = q.arc_id("OD").unwrap();
        let db = q.arc_id("DB").unwrap();
        let dc = q.arc_id("DC").unwrap();
        // D from three directions.
        let d1 = q.point_on(od, rat_int(3)).unwrap();
        let d2 = q.point_on(db, rat_int(0)).unwrap();
        let d3 = q.point_on(dc, rat_int(0)).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d2, d3);
        // Root canonical form is offset 0 on the first declared arc.
        let oa = q.arc_id("OA").unwrap();
        assert_eq!(q.root_point(), q.point_on(oa, rat_int(0)).unwrap());
        assert_eq!(q.root_point(), q.point_on(od, rat_int(0)).unwrap());
        // Out-of-range offsets are input errors.
        assert!(q.point_on(oa, rat_int(7)).is_err());
        assert!(q.point_on(oa, rat(-1, 2)).is_err());
    }

    #[test]
    fn path_between_runs_over_the_meet() {
        let q = fig1();
        let a = q.node_point(q.node_id("A").unwrap());
        let c = q.node_point(q.node_id("C").unwrap());
        let path = q.path_between(&a, &c);
        let oa = q.arc_id("OA").unwrap();
        let od = q.arc_id("OD").unwrap();
        let dc = q.arc_id("DC").unwrap();
        assert_eq!(
            path,
            vec![
                (oa, rat_int(6), rat_int(0)),
                (od, rat_int(0), rat_int(3)),
                (dc, rat_int(0), rat_int(3)),
            ]
        );
        let total: Rat = path.iter().map(|(_, f, t)| (t - f).abs()).sum();
        assert_eq!(total, rat_int(12));
    }

    #[test]
    fn malformed_networks_are_rejected() {
        let mk = |arcs: &[(&str, &str, &str, i64)]| {
            let specs: Vec<_> = arcs
                .iter()
                .map(|(n, t, h, l)| (n.to_string(), t.to_string(), h.to_string(), rat_int(*l)))
                .collect();
            TreeNetwork::new("O", &specs)
        };
        assert!(matches!(mk(&[("a", "O", "A", 0)]), Err(Error::NonPositiveLength(_))));
        // Cycle / double parent.
        assert!(mk(&[("a", "O", "A", 1), ("b", "O", "B", 1), ("c", "A", "B", 1)]).is_err());
        // Disconnected.
        assert!(mk(&[("a", "O", "A", 1), ("b", "B", "C", 1)]).is_err());
        // Arc into the root.
        assert!(mk(&[("a", "A", "O", 1)]).is_err());
    }

    #[test]
    fn rerooted_preserves_metric() {
        let q = fig1();
        let b = q.node_id("B").unwrap();
        let r = q.rerooted(b);
        assert_eq!(r.mu(), &rat_int(14));
        let a_old = q.node_point(q.node_id("A").unwrap());
        let b_old = q.node_point(b);
        let a_new = r.node_point(r.node_id("A").unwrap());
        assert_eq!(r.depth_of(&a_new), q.distance(&b_old, &a_old));
    }
}
