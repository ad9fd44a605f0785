//! `treesearch`: exact search-time analysis on rooted tree networks.
//!
//! Subcommands mirror the library: classification of hiding
//! distributions, closed-form and direct expected search times, DF
//! enumeration, the discretized minimum-latency oracle, depot selection,
//! the longest-path-rule refuter, single-turn comparisons on two-arc
//! stars, and pointwise evaluation. All numbers are exact rationals;
//! `--json` switches to a stable machine-readable document.
//!
//! Exit codes: 0 success, 1 predicate failure under `--strict`,
//! 2 input or domain errors.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::process::ExitCode;
use treesearch_core::classify::{
    fb_bound, is_balanced, is_forward_biased, is_leafy, is_monotone, kella_condition,
    kella_g, star_cdf, ClassificationReport, Verdict,
};
use treesearch_core::depot::{best_depot_delivery, best_root_uniform, delivery_value, longest_path_rule_refuter};
use treesearch_core::hiding::HidingDistribution;
use treesearch_core::instance::parse_instance;
use treesearch_core::net::{NetPoint, TreeNetwork};
use treesearch_core::oracle::{df_gap, DEFAULT_NODE_CAP};
use treesearch_core::rat::{approx, fmt_rat, parse_rat, Rat};
use treesearch_core::trajectory::{
    canonical_df, df_count, df_enumerate, df_time_balanced, single_turn_compare, smith_df,
    star_df_time, uniform_df_time,
};
use treesearch_core::Error;

#[derive(Parser)]
#[command(name = "treesearch", version, about = "Exact search analysis on tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file (see the README for the format).
    instance: String,
    /// Emit a machine-readable JSON document instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the distribution: balanced, monotone, leafy, and on
    /// stars forward-biased and Kella's condition.
    Classify {
        #[command(flatten)]
        common: InstanceArg,
        /// Exit with status 1 when any predicate fails.
        #[arg(long)]
        strict: bool,
    },
    /// Expected DF search time: closed forms plus direct evaluation.
    Value {
        #[command(flatten)]
        common: InstanceArg,
    },
    /// Enumerate all DF searches with their exact expected times.
    DfEnumerate {
        #[command(flatten)]
        common: InstanceArg,
        /// Refuse when the DF count exceeds this cap.
        #[arg(long, default_value_t = 1000)]
        cap: u128,
    },
    /// Discretize and solve the minimum-latency oracle; report the gap
    /// to the best DF search.
    Oracle {
        #[command(flatten)]
        common: InstanceArg,
        /// Mesh width as an exact rational, e.g. 1/8.
        #[arg(long)]
        mesh: String,
    },
    /// Optimal depot: --uniform (uniform distribution) or --delivery
    /// (Delivery Man Problem on a unit-arc tree).
    Depot {
        #[command(flatten)]
        common: InstanceArg,
        #[arg(long, conflicts_with = "delivery")]
        uniform: bool,
        #[arg(long)]
        delivery: bool,
    },
    /// Search unit-arc trees for a counterexample to "the best depot is
    /// an endpoint of a longest path".
    RefuteLongestPath {
        #[arg(long, default_value_t = 13)]
        max_nodes: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compare single-turn searches with the best DF search on a
    /// two-arc star.
    SingleTurn {
        #[command(flatten)]
        common: InstanceArg,
    },
    /// Evaluate local quantities at a point (arc + offset).
    EvalAt {
        #[command(flatten)]
        common: InstanceArg,
        #[arg(long)]
        arc: String,
        #[arg(long)]
        offset: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &str) -> Result<(TreeNetwork, HidingDistribution), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
    parse_instance(&text)
}

/// Exact value plus a decimal approximation column.
fn num(r: &Rat) -> Value {
    json!({ "exact": fmt_rat(r), "approx": approx(r) })
}

fn show_num(r: &Rat) -> String {
    format!("{} (~{:.6})", fmt_rat(r), approx(r))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::HoldsStrictly => "holds-strictly",
        Verdict::Fails => "fails",
    }
}

fn witness_json(q: &TreeNetwork, report: &ClassificationReport) -> Value {
    match &report.witness {
        None => Value::Null,
        Some(w) => json!({
            "points": w.points.iter().map(|p| json!({
                "arc": q.arc(p.arc).name,
                "offset": fmt_rat(&p.offset),
                "at": q.describe_point(p),
            })).collect::<Vec<_>>(),
            "lhs": num(&w.lhs),
            "rhs": num(&w.rhs),
            "what": w.what,
        }),
    }
}

fn report_line(q: &TreeNetwork, report: &ClassificationReport) -> String {
    let mut line = format!("{:<15} {:<15}", report.predicate.name(), verdict_str(report.verdict));
    if let Some(w) = &report.witness {
        let points: Vec<String> = w.points.iter().map(|p| q.describe_point(p)).collect();
        line.push_str(&format!(
            " {} at {} ({} vs {})",
            w.what,
            points.join(", "),
            fmt_rat(&w.lhs),
            fmt_rat(&w.rhs)
        ));
    }
    if let Some(n) = &report.note {
        line.push_str(&format!(" [{n}]"));
    }
    line
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Classify { common, strict } => {
            let (q, h) = load(&common.instance)?;
            let mut reports = vec![is_balanced(&q, &h), is_monotone(&q, &h), is_leafy(&q, &h)];
            if q.is_star() {
                reports.push(is_forward_biased(&q, &h)?);
                reports.push(kella_condition(&q, &h)?);
            }
            let any_fail = reports.iter().any(|r| r.verdict == Verdict::Fails);
            if common.json {
                let mut doc = serde_json::Map::new();
                for r in &reports {
                    doc.insert(
                        r.predicate.name().to_string(),
                        json!({
                            "verdict": verdict_str(r.verdict),
                            "witness": witness_json(&q, r),
                            "note": r.note,
                        }),
                    );
                }
                doc.insert("star".into(), json!(q.is_star()));
                println!("{}", serde_json::to_string_pretty(&Value::Object(doc)).unwrap());
            } else {
                for r in &reports {
                    println!("{}", report_line(&q, r));
                }
                if !q.is_star() {
                    println!("(not a star: forward-biased and Kella checks skipped)");
                }
            }
            Ok(if strict && any_fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Value { common } => {
            let (q, h) = load(&common.instance)?;
            let balanced = is_balanced(&q, &h).verdict.holds();
            let d_bar = q.mean_distance(&q.root_point(), &h);
            let direct_best = smith_df(&q, &h).expected_time(&q, &h);
            let direct_canonical = canonical_df(&q).expected_time(&q, &h);
            let formula = if balanced { Some(df_time_balanced(&q, &h)?) } else { None };
            let star_form = if q.is_star() && balanced { star_df_time(&q, &h).ok() } else { None };
            let uniform_form = uniform_df_time(&q);
            if common.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "mu": num(q.mu()),
                        "mean_distance_from_root": num(&d_bar),
                        "balanced": balanced,
                        "df_time_formula": formula.as_ref().map(num),
                        "df_time_star_form": star_form.as_ref().map(num),
                        "df_time_best": direct_best.value().ok().map(num),
                        "df_time_declared_order": direct_canonical.value().ok().map(num),
                        "uniform_df_time_of_this_tree": num(&uniform_form),
                    }))
                    .unwrap()
                );
            } else {
                println!("mu: {}", show_num(q.mu()));
                println!("mean distance from root (this h): {}", show_num(&d_bar));
                println!("balanced: {}", if balanced { "yes" } else { "no" });
                if let Some(f) = &formula {
                    println!("DF time, balanced formula mu - E[lambda(Q_x)]: {}", show_num(f));
                }
                if let Some(s) = &star_form {
                    println!("DF time, star form mu(1 - sum p_i^2) + d_bar: {}", show_num(s));
                }
                println!("DF time, best order (direct): {}", show_num(direct_best.value()?));
                println!(
                    "DF time, declared order (direct): {}",
                    show_num(direct_canonical.value()?)
                );
                println!(
                    "uniform DF time of this tree (mu - d_bar_u): {}",
                    show_num(&uniform_form)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DfEnumerate { common, cap } => {
            let (q, h) = load(&common.instance)?;
            let count = df_count(&q);
            let searches = df_enumerate(&q, cap)?;
            let mut rows = Vec::new();
            for s in &searches {
                let order: Vec<String> =
                    s.waypoints().iter().map(|p| q.describe_point(p)).collect();
                let time = s.expected_time(&q, &h).value()?.clone();
                rows.push((order, time));
            }
            if common.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "count": count.map(|c| c.to_string()),
                        "searches": rows.iter().map(|(order, time)| json!({
                            "order": order,
                            "expected_time": num(time),
                        })).collect::<Vec<_>>(),
                    }))
                    .unwrap()
                );
            } else {
                println!("depth-first searches: {}", searches.len());
                for (order, time) in &rows {
                    println!("  {}  T = {}", order.join(" "), show_num(time));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { common, mesh } => {
            let (q, h) = load(&common.instance)?;
            let delta = parse_rat(&mesh)?;
            let cap = node_cap_from_env()?;
            let report = df_gap(&q, &h, &delta, cap)?;
            if common.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "mesh": fmt_rat(&report.delta),
                        "instance_nodes": report.instance_nodes,
                        "oracle_value": num(&report.oracle.value),
                        "best_df": num(&report.best_df),
                        "gap": num(&report.gap),
                        "optimal_order_is_df": report.optimal_is_df,
                        "dp_states": report.oracle.states,
                    }))
                    .unwrap()
                );
            } else {
                println!("mesh: {}", fmt_rat(&report.delta));
                println!("instance nodes: {}", report.instance_nodes);
                println!("oracle value: {}", show_num(&report.oracle.value));
                println!("best DF value: {}", show_num(&report.best_df));
                println!("gap (best DF - oracle): {}", show_num(&report.gap));
                println!("optimal order is DF: {}", report.optimal_is_df);
                println!("dp states: {}", report.oracle.states);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Depot { common, uniform, delivery } => {
            let (q, _h) = load(&common.instance)?;
            if uniform == delivery {
                return Err(Error::Parse("choose exactly one of --uniform / --delivery".into()));
            }
            if uniform {
                let report = best_root_uniform(&q);
                let leaves: Vec<String> =
                    report.leaves.iter().map(|&v| q.node_name(v).to_string()).collect();
                if common.json {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "mode": "uniform",
                            "best_leaves": leaves,
                            "mean_distance": num(&report.mean_distance),
                            "value": num(&report.value),
                        }))
                        .unwrap()
                    );
                } else {
                    println!("best root(s) for uniform search: {}", leaves.join(", "));
                    println!("mean distance d_bar: {}", show_num(&report.mean_distance));
                    println!("optimal expected time mu - d_bar: {}", show_num(&report.value));
                }
            } else {
                let depot = best_depot_delivery(&q)?;
                let from_root = delivery_value(&q)?;
                let leaves: Vec<String> =
                    depot.leaves.iter().map(|&v| q.node_name(v).to_string()).collect();
                if common.json {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "mode": "delivery",
                            "best_depots": leaves,
                            "depot_mean_node_distance": num(&depot.mean_node_distance),
                            "depot_value": num(&depot.value),
                            "from_current_root": {
                                "direct": num(&from_root.direct),
                                "closed_form": num(&from_root.closed_form),
                                "published_form": num(&from_root.published_form),
                                "closed_form_matches": from_root.closed_form_matches,
                                "printed_form_matches": from_root.printed_matches,
                            },
                        }))
                        .unwrap()
                    );
                } else {
                    println!("best delivery depot(s): {}", leaves.join(", "));
                    println!(
                        "depot mean node distance: {}",
                        show_num(&depot.mean_node_distance)
                    );
                    println!("depot value: {}", show_num(&depot.value));
                    println!("value from the current root: {}", show_num(&from_root.direct));
                    println!(
                        "  closed form mu - d_bar_e: {} ({})",
                        show_num(&from_root.closed_form),
                        if from_root.closed_form_matches { "matches" } else { "MISMATCH" }
                    );
                    println!(
                        "  printed form mu - c - d_bar_e: {} ({})",
                        show_num(&from_root.published_form),
                        if from_root.printed_matches {
                            "matches"
                        } else {
                            "does not match the direct value; off by one arc length"
                        }
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RefuteLongestPath { max_nodes, json: as_json } => {
            let found = longest_path_rule_refuter(max_nodes)?;
            match found {
                None => {
                    if as_json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&json!({
                                "max_nodes": max_nodes,
                                "found": false,
                            }))
                            .unwrap()
                        );
                    } else {
                        println!("no counterexample on unit-arc trees with <= {max_nodes} nodes");
                    }
                }
                Some(inst) => {
                    let edges: Vec<String> =
                        inst.edges.iter().map(|(u, v)| format!("n{u}-n{v}")).collect();
                    let endpoints: Vec<String> =
                        inst.endpoints.iter().map(|v| format!("n{v}")).collect();
                    if as_json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&json!({
                                "max_nodes": max_nodes,
                                "found": true,
                                "n_nodes": inst.n_nodes,
                                "edges": edges,
                                "depot": format!("n{}", inst.depot),
                                "depot_distance_sum": inst.depot_distance_sum,
                                "depot_value": num(&inst.depot_value),
                                "longest_path_endpoints": endpoints,
                                "best_endpoint_distance_sum": inst.best_endpoint_distance_sum,
                                "best_endpoint_value": num(&inst.best_endpoint_value),
                            }))
                            .unwrap()
                        );
                    } else {
                        println!("counterexample with {} unit arcs:", inst.n_nodes - 1);
                        println!("  edges: {}", edges.join(" "));
                        println!(
                            "  min-closeness leaf n{} (distance sum {}) value {}",
                            inst.depot,
                            inst.depot_distance_sum,
                            show_num(&inst.depot_value)
                        );
                        println!(
                            "  longest-path endpoints {} best value {}",
                            endpoints.join(", "),
                            show_num(&inst.best_endpoint_value)
                        );
                        println!("  the min-closeness leaf is strictly better");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SingleTurn { common } => {
            let (q, h) = load(&common.instance)?;
            let report = single_turn_compare(&q, &h)?;
            let side = |s| match s {
                treesearch_core::trajectory::TurnSide::Right => "S*(x) right",
                treesearch_core::trajectory::TurnSide::Left => "S^(y) left",
            };
            if common.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "right_arc": q.arc(report.right_arc).name,
                        "left_arc": q.arc(report.left_arc).name,
                        "df_time": num(&report.df_time),
                        "df_beaten": report.df_beaten,
                        "best": report.best.as_ref().map(|c| json!({
                            "side": side(c.side),
                            "turn": fmt_rat(&c.turn),
                            "time": num(&c.time),
                        })),
                        "ties": report.ties.iter().map(|c| json!({
                            "side": side(c.side),
                            "turn": fmt_rat(&c.turn),
                        })).collect::<Vec<_>>(),
                        "candidates": report.candidates.iter().map(|c| json!({
                            "side": side(c.side),
                            "turn": fmt_rat(&c.turn),
                            "time": num(&c.time),
                        })).collect::<Vec<_>>(),
                    }))
                    .unwrap()
                );
            } else {
                println!(
                    "right arc (higher density): {}, left arc: {}",
                    q.arc(report.right_arc).name,
                    q.arc(report.left_arc).name
                );
                println!("T(S+), best DF: {}", show_num(&report.df_time));
                println!("DF beaten by a single-turn search: {}", report.df_beaten);
                if let Some(best) = &report.best {
                    println!(
                        "best single turn: {} at {} with T = {}",
                        side(best.side),
                        fmt_rat(&best.turn),
                        show_num(&best.time)
                    );
                }
                for t in &report.ties {
                    println!("tie candidate: {} at {} (equals T(S+))", side(t.side), fmt_rat(&t.turn));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalAt { common, arc, offset } => {
            let (q, h) = load(&common.instance)?;
            let arc_id = q.arc_id(&arc)?;
            let off = parse_rat(&offset)?;
            let point = q.point_on(arc_id, off.clone())?;
            let doc = eval_at(&q, &h, &point, arc_id, &off)?;
            if common.json {
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                print_eval(&doc, 0);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn node_cap_from_env() -> Result<usize, Error> {
    match std::env::var("TREESEARCH_NODE_CAP") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("TREESEARCH_NODE_CAP must be an integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_NODE_CAP),
    }
}

fn eval_at(
    q: &TreeNetwork,
    h: &HidingDistribution,
    point: &NetPoint,
    arc: treesearch_core::net::ArcId,
    off: &Rat,
) -> Result<Value, Error> {
    let stats = h.subtree_stats(q, point);
    let mut doc = serde_json::Map::new();
    doc.insert("point".into(), json!(q.describe_point(point)));
    doc.insert("distance_from_root".into(), num(&q.depth_of(point)));
    doc.insert("subtree_length".into(), num(&stats.length));
    doc.insert("subtree_mass".into(), num(&stats.mass));
    doc.insert(
        "subtree_density".into(),
        stats.density.as_ref().map(num).unwrap_or(Value::Null),
    );
    let info = q.arc(arc);
    if off < &info.len {
        doc.insert("density_above".into(), num(&h.arc_cdf(arc).density(off, true)));
    }
    if off > &Rat::from_integer(0.into()) {
        doc.insert("density_below".into(), num(&h.arc_cdf(arc).density(off, false)));
    }
    if let Some(v) = q.node_at(point) {
        doc.insert("node".into(), json!(q.node_name(v)));
        doc.insert("atom".into(), num(&h.atom(v)));
        if !q.is_leaf(v) && q.children(v).len() >= 2 {
            let branches = h.branch_stats(q, point)?;
            doc.insert(
                "branch_densities".into(),
                Value::Array(
                    branches
                        .iter()
                        .map(|b| num(b.density.as_ref().expect("branches have length")))
                        .collect(),
                ),
            );
        }
    }
    if q.is_star() {
        doc.insert("star_cdf_F".into(), num(&star_cdf(q, h, arc, off)?));
        doc.insert("forward_bias_bound_H".into(), num(&fb_bound(q, h, arc, off)?));
        if let Ok(g) = kella_g(q, h, arc, off) {
            doc.insert("kella_G".into(), num(&g));
        }
    }
    Ok(Value::Object(doc))
}

fn print_eval(v: &Value, indent: usize) {
    if let Value::Object(map) = v {
        for (k, val) in map {
            match val {
                Value::Object(inner) if inner.contains_key("exact") => {
                    println!(
                        "{:indent$}{k}: {} (~{})",
                        "",
                        inner["exact"].as_str().unwrap_or("?"),
                        inner["approx"],
                        indent = indent
                    );
                }
                Value::Array(items) => {
                    let parts: Vec<String> = items
                        .iter()
                        .map(|i| match i {
                            Value::Object(inner) if inner.contains_key("exact") => {
                                inner["exact"].as_str().unwrap_or("?").to_string()
                            }
                            other => other.to_string(),
                        })
                        .collect();
                    println!("{:indent$}{k}: [{}]", "", parts.join(", "), indent = indent);
                }
                other => println!("{:indent$}{k}: {other}", "", indent = indent),
            }
        }
    }
}
