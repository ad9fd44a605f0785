//! Shared generators for the randomized suites: random trees, random
//! balanced / monotone / arbitrary distributions, random balanced stars.
//! Everything is seeded, so failures reproduce.

use num_traits::{One, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use treesearch_core::hiding::{ArcCdf, HidingDistribution};
use treesearch_core::net::{ArcId, NodeId, TreeNetwork};
use treesearch_core::rat::{rat, Rat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const LENGTH_POOL: [(i64, i64); 6] = [(1, 1), (2, 1), (3, 1), (1, 2), (3, 2), (5, 2)];

/// Random rooted tree with 2..=max_nodes nodes and rational arc lengths.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> TreeNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let mut specs = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        let (num, den) = LENGTH_POOL[rng.gen_range(0..LENGTH_POOL.len())];
        specs.push((format!("e{v}"), format!("n{parent}"), format!("n{v}"), rat(num, den)));
    }
    TreeNetwork::new("n0", &specs).expect("random parent arrays are trees")
}

/// Random star with the given number of arcs.
pub fn random_star(rng: &mut ChaCha8Rng, arcs: usize) -> TreeNetwork {
    let mut specs = Vec::new();
    for i in 0..arcs {
        let (num, den) = LENGTH_POOL[rng.gen_range(0..LENGTH_POOL.len())];
        specs.push((format!("a{i}"), "O".to_string(), format!("L{i}"), rat(num, den)));
    }
    TreeNetwork::new("O", &specs).expect("stars are trees")
}

fn random_fraction(rng: &mut ChaCha8Rng) -> Rat {
    // A rational in [0, 1] with small denominator.
    let den = rng.gen_range(1..=6i64);
    let num = rng.gen_range(0..=den);
    rat(num, den)
}

/// Piecewise-linear cdf on [0, len] with total mass `total` and up to
/// `max_pieces` pieces.
fn random_linear_cdf(rng: &mut ChaCha8Rng, len: &Rat, total: &Rat, max_pieces: usize) -> ArcCdf {
    let pieces = rng.gen_range(1..=max_pieces.max(1));
    // Random strictly increasing offsets ending at len.
    let mut offsets: Vec<Rat> = Vec::new();
    for _ in 0..pieces - 1 {
        let f = random_fraction(rng);
        if f.is_zero() || f.is_one() {
            continue;
        }
        offsets.push(f * len);
    }
    offsets.push(len.clone());
    offsets.sort();
    offsets.dedup();
    // Random nondecreasing masses ending at total.
    let k = offsets.len();
    let mut weights: Vec<Rat> = (0..k).map(|_| random_fraction(rng)).collect();
    let sum: Rat = weights.iter().cloned().sum();
    if sum.is_zero() {
        weights = vec![Rat::one(); k];
    }
    let sum: Rat = weights.iter().cloned().sum();
    let mut acc = Rat::zero();
    let mut points = Vec::new();
    for (o, w) in offsets.iter().zip(&weights) {
        acc += w * total / &sum;
        points.push((o.clone(), acc.clone()));
    }
    // Snap the last value to the exact total.
    points.last_mut().unwrap().1 = total.clone();
    ArcCdf::from_breakpoints(len, &points).expect("generated breakpoints are valid")
}

/// Random balanced distribution: at every node the branch masses are
/// forced proportional to branch lengths; within an arc the split
/// between continuous mass and pass-through (and optional atoms at
/// non-leaf nodes) is random.
pub fn random_balanced(rng: &mut ChaCha8Rng, q: &TreeNetwork) -> HidingDistribution {
    let mut atoms: Vec<(NodeId, Rat)> = Vec::new();
    let mut cdfs: Vec<(ArcId, ArcCdf)> = Vec::new();
    // (node, incoming mass)
    let mut stack = vec![(q.root(), Rat::one())];
    while let Some((v, m)) = stack.pop() {
        if q.children(v).is_empty() {
            if !m.is_zero() {
                atoms.push((v, m));
            }
            continue;
        }
        // Sometimes leave an atom at a branch/internal node (balanced
        // does not forbid it).
        let mut rest = m;
        if rng.gen_bool(0.2) {
            let share = random_fraction(rng) * &rest / rat(4, 1);
            if !share.is_zero() {
                atoms.push((v, share.clone()));
                rest -= share;
            }
        }
        let total_len = q.below_len(v).clone();
        for &c in q.children(v) {
            let info = q.arc(c);
            let branch_len = &info.len + q.below_len(info.head);
            let branch_mass = &rest * &branch_len / &total_len;
            // Split the branch mass between the arc and the ground below.
            let arc_share = if q.children(info.head).is_empty() && rng.gen_bool(0.5) {
                // Leaf arc: sometimes everything continuous.
                branch_mass.clone()
            } else {
                random_fraction(rng) * &branch_mass
            };
            if !arc_share.is_zero() {
                cdfs.push((c, random_linear_cdf(rng, &info.len, &arc_share, 3)));
            }
            stack.push((info.head, &branch_mass - &arc_share));
        }
    }
    HidingDistribution::from_parts(q, atoms, cdfs).expect("balanced construction sums to one")
}

/// Random continuous monotone distribution: balanced splits, constant
/// densities per arc chosen below the local subtree density, and leaf
/// arcs consuming their whole branch mass uniformly.
pub fn random_monotone_continuous(rng: &mut ChaCha8Rng, q: &TreeNetwork) -> HidingDistribution {
    let mut cdfs: Vec<(ArcId, ArcCdf)> = Vec::new();
    let mut stack = vec![(q.root(), Rat::one())];
    while let Some((v, m)) = stack.pop() {
        let total_len = q.below_len(v).clone();
        for &c in q.children(v) {
            let info = q.arc(c);
            let branch_len = &info.len + q.below_len(info.head);
            let branch_mass = &m * &branch_len / &total_len;
            let rho = &branch_mass / &branch_len;
            if q.children(info.head).is_empty() {
                // Leaf arc: constant density ρ consumes the mass exactly.
                let cdf = ArcCdf::from_breakpoints(&info.len, &[(info.len.clone(), branch_mass.clone())])
                    .unwrap();
                cdfs.push((c, cdf));
                continue;
            }
            // Interior arc: constant density β·ρ with β in [0, 1].
            let beta = random_fraction(rng);
            let consumed = &beta * &rho * &info.len;
            if !consumed.is_zero() {
                let cdf =
                    ArcCdf::from_breakpoints(&info.len, &[(info.len.clone(), consumed.clone())])
                        .unwrap();
                cdfs.push((c, cdf));
            }
            stack.push((info.head, &branch_mass - &consumed));
        }
    }
    HidingDistribution::from_parts(q, vec![], cdfs).expect("monotone construction sums to one")
}

/// Arbitrary random distribution: random weights over nodes and arcs,
/// normalized exactly.
pub fn random_distribution(rng: &mut ChaCha8Rng, q: &TreeNetwork) -> HidingDistribution {
    loop {
        let mut node_w: Vec<(NodeId, Rat)> = Vec::new();
        let mut arc_w: Vec<(ArcId, Rat)> = Vec::new();
        for v in q.nodes() {
            if rng.gen_bool(0.3) {
                node_w.push((v, random_fraction(rng)));
            }
        }
        for (a, _) in q.arcs() {
            if rng.gen_bool(0.6) {
                arc_w.push((a, random_fraction(rng)));
            }
        }
        let total: Rat = node_w.iter().map(|(_, w)| w.clone()).sum::<Rat>()
            + arc_w.iter().map(|(_, w)| w.clone()).sum::<Rat>();
        if total.is_zero() {
            continue;
        }
        let atoms: Vec<(NodeId, Rat)> =
            node_w.into_iter().map(|(v, w)| (v, w / &total)).collect();
        let cdfs: Vec<(ArcId, ArcCdf)> = arc_w
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(a, w)| {
                let share = w / &total;
                (a, random_linear_cdf(rng, &q.arc(a).len, &share, 3))
            })
            .collect();
        return HidingDistribution::from_parts(q, atoms, cdfs)
            .expect("normalized weights sum to one");
    }
}

/// Random balanced star distribution: per-arc masses λ_i/μ, piecewise
/// linear with ≤ `max_pieces` pieces, optionally ending in a leaf atom.
pub fn random_balanced_star(
    rng: &mut ChaCha8Rng,
    q: &TreeNetwork,
    max_pieces: usize,
) -> HidingDistribution {
    let mut atoms = Vec::new();
    let mut cdfs = Vec::new();
    for (a, info) in q.arcs() {
        let p = &info.len / q.mu();
        let atom_share = if rng.gen_bool(0.4) { random_fraction(rng) * &p } else { Rat::zero() };
        let cont = &p - &atom_share;
        if !atom_share.is_zero() {
            atoms.push((info.head, atom_share));
        }
        if !cont.is_zero() {
            cdfs.push((a, random_linear_cdf(rng, &info.len, &cont, max_pieces)));
        }
    }
    HidingDistribution::from_parts(q, atoms, cdfs).expect("balanced star sums to one")
}

/// Random interior points of a tree, canonical.
pub fn random_points(rng: &mut ChaCha8Rng, q: &TreeNetwork, count: usize) -> Vec<treesearch_core::net::NetPoint> {
    let arcs: Vec<(ArcId, Rat)> = q.arcs().map(|(a, info)| (a, info.len.clone())).collect();
    (0..count)
        .map(|_| {
            let (a, len) = arcs[rng.gen_range(0..arcs.len())].clone();
            let f = loop {
                let f = random_fraction(rng);
                if !f.is_zero() && !f.is_one() {
                    break f;
                }
            };
            q.point_on(a, f * len).unwrap()
        })
        .collect()
}
