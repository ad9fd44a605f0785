//! Optimal starting points: uniform search depots, Delivery Man depots,
//! and the search for counterexamples to the longest-path depot rule.
//!
//! The Delivery Man value of a unit-arc tree from a depot x is the DF
//! value of the equiprobable node distribution rooted at x, which is
//! balanced on equal-length trees, so everything here is closed-form
//! exact. The refuter enumerates unlabeled trees by leaf growth with
//! canonical-form deduplication.

use crate::hiding::HidingDistribution;
use crate::net::{NodeId, TreeNetwork};
use crate::rat::Rat;
use crate::trajectory::df_time_balanced;
use crate::{Error, Result};
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::HashSet;

/// Best root for searching under the uniform distribution: the leaf
/// maximizing the mean distance d̄_u(x); ties reported as a set.
#[derive(Clone, Debug)]
pub struct BestRootReport {
    pub leaves: Vec<NodeId>,
    pub mean_distance: Rat,
    /// Optimal expected search time μ − d̄_u(x).
    pub value: Rat,
}

pub fn best_root_uniform(q: &TreeNetwork) -> BestRootReport {
    let u = HidingDistribution::uniform(q);
    let mut best: Option<(Rat, Vec<NodeId>)> = None;
    for v in q.leaves() {
        let d = q.mean_distance(&q.node_point(v), &u);
        match &mut best {
            Some((m, ties)) => {
                if &d > m {
                    best = Some((d, vec![v]));
                } else if &d == m {
                    ties.push(v);
                }
            }
            None => best = Some((d, vec![v])),
        }
    }
    let (mean_distance, leaves) = best.expect("trees have at least one leaf");
    let value = q.mu() - &mean_distance;
    BestRootReport { leaves, mean_distance, value }
}

fn common_arc_length(q: &TreeNetwork) -> Result<Rat> {
    let mut it = q.arcs().map(|(_, info)| info.len.clone());
    let first = it.next().expect("trees have arcs");
    if it.all(|l| l == first) {
        Ok(first)
    } else {
        Err(Error::NotUnitArcs)
    }
}

/// The Delivery Man value from the current root, with both closed-form
/// candidates: the derived μ − d̄_e(O) and the published
/// μ − c − d̄_e(O) (n − 1 − d̄ on unit arcs), flagging which matches the
/// directly computed DF value.
#[derive(Clone, Debug)]
pub struct DeliveryReport {
    pub arc_count: usize,
    pub arc_length: Rat,
    /// Mean distance from the root to all nodes, root included.
    pub mean_node_distance: Rat,
    /// DF value of the equiprobable distribution, computed directly.
    pub direct: Rat,
    /// μ − d̄_e(O).
    pub closed_form: Rat,
    /// μ − c − d̄_e(O): the published formula, off by one arc length.
    pub published_form: Rat,
    pub closed_form_matches: bool,
    pub printed_matches: bool,
}

pub fn delivery_value(q: &TreeNetwork) -> Result<DeliveryReport> {
    let c = common_arc_length(q)?;
    let e = HidingDistribution::equiprobable_nodes(q);
    let direct = df_time_balanced(q, &e)?;
    let mean_node_distance = q.mean_distance(&q.root_point(), &e);
    let closed_form = q.mu() - &mean_node_distance;
    let published_form = &closed_form - &c;
    Ok(DeliveryReport {
        arc_count: q.n_arcs(),
        arc_length: c,
        mean_node_distance,
        closed_form_matches: direct == closed_form,
        printed_matches: direct == published_form,
        direct,
        closed_form,
        published_form,
    })
}

/// Optimal depot for the Delivery Man Problem: the leaf of minimum
/// closeness centrality (maximum mean node distance); ties as a set.
#[derive(Clone, Debug)]
pub struct DepotReport {
    pub leaves: Vec<NodeId>,
    pub mean_node_distance: Rat,
    /// DF value of e rooted at the chosen depot.
    pub value: Rat,
}

pub fn best_depot_delivery(q: &TreeNetwork) -> Result<DepotReport> {
    common_arc_length(q)?;
    let e = HidingDistribution::equiprobable_nodes(q);
    let mut best: Option<(Rat, Vec<NodeId>)> = None;
    for v in q.leaves() {
        let d = q.mean_distance(&q.node_point(v), &e);
        match &mut best {
            Some((m, ties)) => {
                if &d > m {
                    best = Some((d, vec![v]));
                } else if &d == m {
                    ties.push(v);
                }
            }
            None => best = Some((d, vec![v])),
        }
    }
    let (mean_node_distance, leaves) = best.expect("trees have at least one leaf");
    let rerooted = q.rerooted(leaves[0]);
    let e2 = HidingDistribution::equiprobable_nodes(&rerooted);
    let value = df_time_balanced(&rerooted, &e2)?;
    Ok(DepotReport { leaves, mean_node_distance, value })
}

/// Rescales rational arc lengths to integers and splits each arc into
/// unit pieces with degree-2 nodes. Returns the scaled tree and the
/// scale factor (new length = scale × old length).
pub fn subdivide_to_unit(q: &TreeNetwork) -> (TreeNetwork, Rat) {
    let mut denom_lcm = num_bigint::BigInt::one();
    for (_, info) in q.arcs() {
        denom_lcm = denom_lcm.lcm(info.len.denom());
    }
    let scale = Rat::from_integer(denom_lcm);
    let mut specs = Vec::new();
    for (_, info) in q.arcs() {
        let units = (&info.len * &scale).to_integer();
        let mut count = num_bigint::BigInt::zero();
        let tail = q.node_name(info.tail).to_string();
        let head = q.node_name(info.head).to_string();
        let mut prev = tail;
        while count < units {
            count += 1;
            let next = if count == units {
                head.clone()
            } else {
                format!("{}+{}", info.name, count)
            };
            specs.push((format!("{}#{}", info.name, count), prev.clone(), next.clone(), Rat::one()));
            prev = next;
        }
    }
    let tree = TreeNetwork::new(q.node_name(q.root()), &specs)
        .expect("unit subdivision of a valid tree stays valid");
    (tree, scale)
}

/// All unlabeled free trees on n nodes, as edge lists over 0..n.
/// Generated by adding a leaf to every node of every (n−1)-node tree and
/// deduplicating by a centroid-rooted canonical form.
pub fn free_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(n >= 1);
    let mut current: Vec<Vec<(usize, usize)>> = vec![Vec::new()]; // single node
    for size in 2..=n {
        let mut next = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for t in &current {
            for attach in 0..(size - 1) {
                let mut edges = t.clone();
                edges.push((attach, size - 1));
                let canon = canonical_form(size, &edges);
                if seen.insert(canon) {
                    next.push(edges);
                }
            }
        }
        current = next;
    }
    current
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

fn centroids(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut size = vec![0usize; n];
    let mut max_comp = vec![0usize; n];
    // Iterative post-order from node 0.
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![0usize];
    let mut visited = vec![false; n];
    visited[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    for &v in order.iter().rev() {
        size[v] = 1;
        for &w in &adj[v] {
            if w != parent[v] {
                size[v] += size[w];
                max_comp[v] = max_comp[v].max(size[w]);
            }
        }
        max_comp[v] = max_comp[v].max(n - size[v]);
    }
    let best = (0..n).map(|v| max_comp[v]).min().unwrap();
    (0..n).filter(|&v| max_comp[v] == best).collect()
}

fn ahu(v: usize, parent: usize, adj: &[Vec<usize>]) -> String {
    let mut parts: Vec<String> =
        adj[v].iter().filter(|&&w| w != parent).map(|&w| ahu(w, v, adj)).collect();
    parts.sort();
    format!("({})", parts.concat())
}

fn canonical_form(n: usize, edges: &[(usize, usize)]) -> String {
    let adj = adjacency(n, edges);
    centroids(n, &adj)
        .into_iter()
        .map(|c| ahu(c, usize::MAX, &adj))
        .min()
        .expect("every tree has a centroid")
}

/// Builds a unit-arc TreeNetwork from an edge list, rooted at a node.
pub fn unit_tree(n: usize, edges: &[(usize, usize)], root: usize) -> TreeNetwork {
    let adj = adjacency(n, edges);
    let mut specs = Vec::new();
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                specs.push((format!("e{}_{}", v, w), format!("n{v}"), format!("n{w}"), Rat::one()));
                queue.push_back(w);
            }
        }
    }
    TreeNetwork::new(&format!("n{root}"), &specs).expect("edge lists from free_trees are trees")
}

/// A unit-arc tree where the min-closeness leaf is a strictly better
/// Delivery Man depot than every endpoint of a maximum-length path.
#[derive(Clone, Debug)]
pub struct RefuterInstance {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// The min-closeness leaf (as an index into 0..n).
    pub depot: usize,
    pub depot_distance_sum: u64,
    pub depot_value: Rat,
    /// All endpoints of maximum-length paths.
    pub endpoints: Vec<usize>,
    pub best_endpoint_distance_sum: u64,
    pub best_endpoint_value: Rat,
    /// The instance rooted at the depot (node names `n0`, `n1`, ...).
    pub tree: TreeNetwork,
}

/// Exhaustively searches unit-arc trees (up to isomorphism) for an
/// instance refuting "the best depot is an endpoint of a longest path".
/// Returns the first (smallest) instance found.
pub fn longest_path_rule_refuter(max_nodes: usize) -> Result<Option<RefuterInstance>> {
    if max_nodes > 16 {
        return Err(Error::NodeCapExceeded { needed: max_nodes, cap: 16 });
    }
    for n in 2..=max_nodes {
        for edges in free_trees(n) {
            if let Some(found) = check_refutes(n, &edges) {
                return Ok(Some(found));
            }
        }
    }
    Ok(None)
}

fn check_refutes(n: usize, edges: &[(usize, usize)]) -> Option<RefuterInstance> {
    let adj = adjacency(n, edges);
    // Unit BFS distances from every node.
    let mut dist = vec![vec![0u64; n]; n];
    for s in 0..n {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    dist[s][w] = dist[s][v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let sum = |v: usize| dist[v].iter().sum::<u64>();
    let leaves: Vec<usize> = (0..n).filter(|&v| adj[v].len() == 1).collect();
    let depot = *leaves.iter().max_by_key(|&&v| sum(v))?;
    let diameter = (0..n).flat_map(|u| dist[u].iter().copied()).max()?;
    let endpoints: Vec<usize> =
        (0..n).filter(|&u| dist[u].contains(&diameter)).collect();
    let depot_sum = sum(depot);
    let worst_endpoint_sum = endpoints.iter().map(|&y| sum(y)).max()?;
    // Strictly better than every longest-path endpoint: strictly larger
    // distance sum (the delivery value is μ − sum/n).
    if depot_sum <= worst_endpoint_sum {
        return None;
    }
    let value_from = |v: usize| {
        let tree = unit_tree(n, edges, v);
        let e = HidingDistribution::equiprobable_nodes(&tree);
        df_time_balanced(&tree, &e).expect("e is balanced on unit-arc trees")
    };
    let depot_value = value_from(depot);
    let best_endpoint_value = endpoints
        .iter()
        .map(|&y| value_from(y))
        .min()
        .expect("diameter endpoints exist");
    assert!(
        depot_value < best_endpoint_value,
        "distance sums and delivery values must order consistently"
    );
    Some(RefuterInstance {
        n_nodes: n,
        edges: edges.to_vec(),
        depot,
        depot_distance_sum: depot_sum,
        depot_value,
        endpoints,
        best_endpoint_distance_sum: worst_endpoint_sum,
        best_endpoint_value,
        tree: unit_tree(n, edges, depot),
    })
}
