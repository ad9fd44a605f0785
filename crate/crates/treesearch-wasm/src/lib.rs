//! Browser bindings: parse an instance, classify it, evaluate search
//! times, sweep single-turn searches and run the oracle — returning JSON
//! strings for the demo page to render. The heavy lifting stays in
//! `treesearch-core`; everything here is a thin, host-testable layer.

use serde_json::{json, Value};
use treesearch_core::classify::{
    fb_bound, is_balanced, is_forward_biased, is_leafy, is_monotone, kella_condition, star_cdf,
    ClassificationReport, Verdict,
};
use treesearch_core::hiding::HidingDistribution;
use treesearch_core::instance::parse_instance;
use treesearch_core::net::TreeNetwork;
use treesearch_core::oracle::df_gap;
use treesearch_core::rat::{approx, fmt_rat, parse_rat, rat, Rat};
use treesearch_core::trajectory::{
    canonical_df, df_time_balanced, single_turn_compare, single_turn_search, smith_df, TurnSide,
};
use wasm_bindgen::prelude::*;

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::HoldsStrictly => "holds-strictly",
        Verdict::Fails => "fails",
    }
}

fn report_json(q: &TreeNetwork, r: &ClassificationReport) -> Value {
    json!({
        "verdict": verdict_str(r.verdict),
        "witness": r.witness.as_ref().map(|w| json!({
            "points": w.points.iter().map(|p| q.describe_point(p)).collect::<Vec<_>>(),
            "lhs": fmt_rat(&w.lhs),
            "rhs": fmt_rat(&w.rhs),
            "what": w.what,
        })),
        "note": r.note,
    })
}

fn network_json(q: &TreeNetwork, h: &HidingDistribution) -> Value {
    json!({
        "root": q.node_name(q.root()),
        "mu": fmt_rat(q.mu()),
        "nodes": q.nodes().map(|v| json!({
            "name": q.node_name(v),
            "depth": approx(q.node_depth(v)),
            "parent": q.parent_node(v).map(|p| q.node_name(p)),
            "leaf": q.is_leaf(v),
            "atom": fmt_rat(&h.atom(v)),
            "atom_approx": approx(&h.atom(v)),
        })).collect::<Vec<_>>(),
        "arcs": q.arcs().map(|(a, info)| json!({
            "name": info.name,
            "tail": q.node_name(info.tail),
            "head": q.node_name(info.head),
            "len": approx(&info.len),
            "len_exact": fmt_rat(&info.len),
            "mass": fmt_rat(&h.arc_mass(a)),
            "mass_approx": approx(&h.arc_mass(a)),
        })).collect::<Vec<_>>(),
    })
}

fn analyze_value(text: &str) -> Result<Value, String> {
    let (q, h) = parse_instance(text).map_err(|e| e.to_string())?;
    let balanced = is_balanced(&q, &h);
    let monotone = is_monotone(&q, &h);
    let leafy = is_leafy(&q, &h);
    let mut classify = serde_json::Map::new();
    classify.insert("balanced".into(), report_json(&q, &balanced));
    classify.insert("monotone".into(), report_json(&q, &monotone));
    classify.insert("leafy".into(), report_json(&q, &leafy));
    if q.is_star() {
        classify.insert(
            "forward-biased".into(),
            report_json(&q, &is_forward_biased(&q, &h).map_err(|e| e.to_string())?),
        );
        classify.insert(
            "kella".into(),
            report_json(&q, &kella_condition(&q, &h).map_err(|e| e.to_string())?),
        );
    }
    let d_bar = q.mean_distance(&q.root_point(), &h);
    let best = smith_df(&q, &h).expected_time(&q, &h);
    let declared = canonical_df(&q).expected_time(&q, &h);
    let formula = if balanced.verdict.holds() { df_time_balanced(&q, &h).ok() } else { None };
    let num = |r: &Rat| json!({ "exact": fmt_rat(r), "approx": approx(r) });
    Ok(json!({
        "network": network_json(&q, &h),
        "classify": Value::Object(classify),
        "value": {
            "mu": num(q.mu()),
            "mean_distance": num(&d_bar),
            "balanced": balanced.verdict.holds(),
            "df_formula": formula.as_ref().map(&num),
            "df_best": best.value().ok().map(&num),
            "df_declared_order": declared.value().ok().map(&num),
        },
    }))
}

fn single_turn_value(text: &str, samples: u32) -> Result<Value, String> {
    let (q, h) = parse_instance(text).map_err(|e| e.to_string())?;
    let report = single_turn_compare(&q, &h).map_err(|e| e.to_string())?;
    let side_name = |s: TurnSide| match s {
        TurnSide::Right => "right",
        TurnSide::Left => "left",
    };
    // Sampled expected-time curves for both single-turn families, plus
    // the F vs H bound curves per arc.
    let mut curves = Vec::new();
    for (side, arc) in [(TurnSide::Right, report.right_arc), (TurnSide::Left, report.left_arc)] {
        let len = q.arc(arc).len.clone();
        let mut points = Vec::new();
        for k in 1..samples {
            let x = &len * rat(k as i64, samples as i64);
            let s = single_turn_search(&q, report.right_arc, report.left_arc, side, x.clone())
                .map_err(|e| e.to_string())?;
            if let Ok(t) = s.expected_time(&q, &h).value() {
                points.push(json!({ "x": approx(&x), "t": approx(t) }));
            }
        }
        curves.push(json!({ "side": side_name(side), "arc": q.arc(arc).name, "points": points }));
    }
    let mut bounds = Vec::new();
    for (a, info) in q.arcs() {
        let mut points = Vec::new();
        for k in 0..=samples {
            let x = &info.len * rat(k as i64, samples as i64);
            let f = star_cdf(&q, &h, a, &x).map_err(|e| e.to_string())?;
            let bound = fb_bound(&q, &h, a, &x).map_err(|e| e.to_string())?;
            points.push(json!({ "x": approx(&x), "F": approx(&f), "H": approx(&bound) }));
        }
        bounds.push(json!({ "arc": info.name, "points": points }));
    }
    Ok(json!({
        "right_arc": q.arc(report.right_arc).name,
        "left_arc": q.arc(report.left_arc).name,
        "df_time": { "exact": fmt_rat(&report.df_time), "approx": approx(&report.df_time) },
        "df_beaten": report.df_beaten,
        "best": report.best.as_ref().map(|c| json!({
            "side": side_name(c.side),
            "turn": fmt_rat(&c.turn),
            "turn_approx": approx(&c.turn),
            "time": fmt_rat(&c.time),
            "time_approx": approx(&c.time),
        })),
        "ties": report.ties.iter().map(|c| json!({
            "side": side_name(c.side),
            "turn": fmt_rat(&c.turn),
        })).collect::<Vec<_>>(),
        "curves": curves,
        "bounds": bounds,
    }))
}

fn oracle_value(text: &str, mesh: &str, cap: u32) -> Result<Value, String> {
    let (q, h) = parse_instance(text).map_err(|e| e.to_string())?;
    let delta = parse_rat(mesh).map_err(|e| e.to_string())?;
    let report = df_gap(&q, &h, &delta, cap as usize).map_err(|e| e.to_string())?;
    let inst = treesearch_core::oracle::discretize(&q, &h, &delta, cap as usize)
        .map_err(|e| e.to_string())?;
    let order: Vec<String> =
        report.oracle.order.iter().map(|&v| inst.tree.node_name(v).to_string()).collect();
    Ok(json!({
        "mesh": fmt_rat(&report.delta),
        "instance_nodes": report.instance_nodes,
        "oracle_value": { "exact": fmt_rat(&report.oracle.value), "approx": approx(&report.oracle.value) },
        "best_df": { "exact": fmt_rat(&report.best_df), "approx": approx(&report.best_df) },
        "gap": { "exact": fmt_rat(&report.gap), "approx": approx(&report.gap) },
        "optimal_is_df": report.optimal_is_df,
        "order": order,
        "dp_states": report.oracle.states,
    }))
}

fn to_string(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Parse, classify and evaluate an instance. Returns JSON.
#[wasm_bindgen]
pub fn analyze(text: &str) -> String {
    to_string(analyze_value(text))
}

/// Single-turn exploration on a two-arc star: exact verdict, sweep
/// results, and sampled curves for plotting. Returns JSON.
#[wasm_bindgen]
pub fn single_turn(text: &str, samples: u32) -> String {
    to_string(single_turn_value(text, samples.clamp(4, 512)))
}

/// Discretized minimum-latency oracle and the DF gap. Returns JSON.
#[wasm_bindgen]
pub fn oracle(text: &str, mesh: &str, cap: u32) -> String {
    to_string(oracle_value(text, mesh, cap))
}
