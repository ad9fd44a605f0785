//! The instance file format: a `[network]` section with the rooted tree
//! and a `[distribution]` section with the hiding distribution.
//!
//! ```text
//! [network]
//! root=O
//! arc=OA O A 6
//! arc=OD O D 3
//!
//! [distribution]
//! kind=custom
//! atom=A 1/2
//! cdf=OD 3/2:1/4 3:1/2
//! ```
//!
//! Distribution kinds: `uniform`, `ebd`, `equiprobable-nodes`, or
//! `custom` with `atom=<node> <mass>`, `cdf=<arc> <offset>:<cum> ...`
//! (piecewise-linear cdf breakpoints), `pdf=<arc> <offset>:<density> ...`
//! (piecewise-linear density, so quadratic cdf pieces), and
//! `rawpiece=<arc> <lo> <hi> <c0> [c1 [c2]]` (raw cdf coefficients).
//! All numbers are exact rationals `p/q`. Parsing and emission round-trip
//! losslessly on canonical form.

use crate::hiding::{ArcCdf, CdfPiece, HidingDistribution};
use crate::net::TreeNetwork;
use crate::poly::Poly;
use crate::rat::{fmt_rat, parse_rat, Rat};
use crate::{Error, Result};
use num_traits::Zero;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    None,
    Network,
    Distribution,
}

/// Parses an instance file into a validated network and distribution.
pub fn parse_instance(text: &str) -> Result<(TreeNetwork, HidingDistribution)> {
    let mut section = Section::None;
    let mut root: Option<(usize, String)> = None;
    let mut arcs: Vec<(String, String, String, Rat)> = Vec::new();
    let mut kind: Option<(usize, String)> = None;
    let mut atoms: Vec<(usize, String, Rat)> = Vec::new();
    // (line, arc, payload, entry-kind)
    let mut cdf_lines: Vec<(usize, String, String, CdfEntry)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "[network]" => {
                section = Section::Network;
                continue;
            }
            "[distribution]" => {
                section = Section::Distribution;
                continue;
            }
            _ if line.starts_with('[') => {
                return Err(Error::parse(lineno, format!("unknown section `{line}`")));
            }
            _ => {}
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno, format!("expected `key=value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match (section, key) {
            (Section::Network, "root") => {
                if root.is_some() {
                    return Err(Error::parse(lineno, "root given twice"));
                }
                root = Some((lineno, value.to_string()));
            }
            (Section::Network, "arc") => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(Error::parse(
                        lineno,
                        "arc needs `<id> <tail> <head> <length>`",
                    ));
                }
                let len = parse_rat(parts[3]).map_err(|e| Error::parse(lineno, e.to_string()))?;
                arcs.push((parts[0].into(), parts[1].into(), parts[2].into(), len));
            }
            (Section::Distribution, "kind") => {
                if kind.is_some() {
                    return Err(Error::parse(lineno, "kind given twice"));
                }
                kind = Some((lineno, value.to_string()));
            }
            (Section::Distribution, "atom") => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(Error::parse(lineno, "atom needs `<node> <mass>`"));
                }
                let mass = parse_rat(parts[1]).map_err(|e| Error::parse(lineno, e.to_string()))?;
                atoms.push((lineno, parts[0].into(), mass));
            }
            (Section::Distribution, "cdf") | (Section::Distribution, "pdf") => {
                let (arc, rest) = value
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| Error::parse(lineno, format!("{key} needs an arc id and breakpoints")))?;
                let mut points = Vec::new();
                for tok in rest.split_whitespace() {
                    let (o, m) = tok.split_once(':').ok_or_else(|| {
                        Error::parse(lineno, format!("breakpoint `{tok}` must be `offset:value`"))
                    })?;
                    let o = parse_rat(o).map_err(|e| Error::parse(lineno, e.to_string()))?;
                    let m = parse_rat(m).map_err(|e| Error::parse(lineno, e.to_string()))?;
                    points.push((o, m));
                }
                if points.is_empty() {
                    return Err(Error::parse(lineno, format!("{key} has no breakpoints")));
                }
                let entry = if key == "cdf" { CdfEntry::Cdf(points) } else { CdfEntry::Pdf(points) };
                cdf_lines.push((lineno, arc.to_string(), String::new(), entry));
            }
            (Section::Distribution, "rawpiece") => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() < 4 || parts.len() > 6 {
                    return Err(Error::parse(
                        lineno,
                        "rawpiece needs `<arc> <lo> <hi> <c0> [c1 [c2]]`",
                    ));
                }
                let mut nums = Vec::new();
                for p in &parts[1..] {
                    nums.push(parse_rat(p).map_err(|e| Error::parse(lineno, e.to_string()))?);
                }
                let lo = nums[0].clone();
                let hi = nums[1].clone();
                let coeffs = nums[2..].to_vec();
                cdf_lines.push((lineno, parts[0].into(), String::new(), CdfEntry::Raw(lo, hi, coeffs)));
            }
            (Section::None, _) => {
                return Err(Error::parse(lineno, "content before any section header"));
            }
            (_, other) => {
                return Err(Error::parse(lineno, format!("unknown key `{other}`")));
            }
        }
    }

    let (root_line, root_name) =
        root.ok_or_else(|| Error::Parse("missing `root=` in [network]".into()))?;
    let _ = root_line;
    let q = TreeNetwork::new(&root_name, &arcs)?;

    let (kind_line, kind_name) =
        kind.ok_or_else(|| Error::Parse("missing `kind=` in [distribution]".into()))?;
    let h = match kind_name.as_str() {
        "uniform" => no_custom_entries(&atoms, &cdf_lines, "uniform")
            .map(|_| HidingDistribution::uniform(&q))?,
        "ebd" => no_custom_entries(&atoms, &cdf_lines, "ebd")
            .map(|_| HidingDistribution::ebd(&q))?,
        "equiprobable-nodes" => no_custom_entries(&atoms, &cdf_lines, "equiprobable-nodes")
            .map(|_| HidingDistribution::equiprobable_nodes(&q))?,
        "custom" => build_custom(&q, &atoms, &cdf_lines)?,
        other => {
            return Err(Error::parse(
                kind_line,
                format!("unknown kind `{other}` (uniform | ebd | equiprobable-nodes | custom)"),
            ))
        }
    };
    Ok((q, h))
}

enum CdfEntry {
    Cdf(Vec<(Rat, Rat)>),
    Pdf(Vec<(Rat, Rat)>),
    Raw(Rat, Rat, Vec<Rat>),
}

fn no_custom_entries(
    atoms: &[(usize, String, Rat)],
    cdfs: &[(usize, String, String, CdfEntry)],
    kind: &str,
) -> Result<()> {
    if let Some((line, ..)) = atoms.first() {
        return Err(Error::parse(*line, format!("kind={kind} takes no atom entries")));
    }
    if let Some((line, ..)) = cdfs.first() {
        return Err(Error::parse(*line, format!("kind={kind} takes no cdf entries")));
    }
    Ok(())
}

fn build_custom(
    q: &TreeNetwork,
    atoms: &[(usize, String, Rat)],
    cdfs: &[(usize, String, String, CdfEntry)],
) -> Result<HidingDistribution> {
    let mut atom_list = Vec::new();
    for (line, node, mass) in atoms {
        let v = q.node_id(node).map_err(|e| Error::parse(*line, e.to_string()))?;
        atom_list.push((v, mass.clone()));
    }
    let mut per_arc: Vec<(usize, crate::net::ArcId, Vec<&CdfEntry>)> = Vec::new();
    for (line, arc, _, entry) in cdfs {
        let a = q.arc_id(arc).map_err(|e| Error::parse(*line, e.to_string()))?;
        match per_arc.iter_mut().find(|(_, id, _)| *id == a) {
            Some((_, _, entries)) => entries.push(entry),
            None => per_arc.push((*line, a, vec![entry])),
        }
    }
    let mut cdf_list = Vec::new();
    for (line, a, entries) in per_arc {
        let len = &q.arc(a).len;
        let cdf = match entries.as_slice() {
            [CdfEntry::Cdf(points)] => ArcCdf::from_breakpoints(len, points),
            [CdfEntry::Pdf(points)] => ArcCdf::from_density_breakpoints(len, points),
            entries if entries.iter().all(|e| matches!(e, CdfEntry::Raw(..))) => {
                let pieces = entries
                    .iter()
                    .map(|e| match e {
                        CdfEntry::Raw(lo, hi, coeffs) => CdfPiece {
                            lo: lo.clone(),
                            hi: hi.clone(),
                            cdf: Poly::from_coeffs(coeffs.clone()),
                        },
                        _ => unreachable!(),
                    })
                    .collect();
                ArcCdf::from_raw_pieces(len, pieces)
            }
            _ => Err(Error::InvalidDistribution(
                "an arc takes one cdf/pdf line or a list of rawpiece lines".into(),
            )),
        }
        .map_err(|e| Error::parse(line, e.to_string()))?;
        cdf_list.push((a, cdf));
    }
    HidingDistribution::from_parts(q, atom_list, cdf_list)
}

/// Canonical emission; `parse_instance(emit_instance(q, h)) == (q, h)`.
pub fn emit_instance(q: &TreeNetwork, h: &HidingDistribution) -> String {
    let mut out = String::from("[network]\n");
    out.push_str(&format!("root={}\n", q.node_name(q.root())));
    for (_, info) in q.arcs() {
        out.push_str(&format!(
            "arc={} {} {} {}\n",
            info.name,
            q.node_name(info.tail),
            q.node_name(info.head),
            fmt_rat(&info.len)
        ));
    }
    out.push_str("\n[distribution]\nkind=custom\n");
    for (v, m) in h.atoms() {
        out.push_str(&format!("atom={} {}\n", q.node_name(v), fmt_rat(m)));
    }
    for (a, info) in q.arcs() {
        let cdf = h.arc_cdf(a);
        if cdf.total().is_zero() && cdf.pieces().iter().all(|p| p.cdf.is_zero()) {
            continue;
        }
        if cdf.all_linear() {
            let points: Vec<String> = cdf
                .pieces()
                .iter()
                .map(|p| format!("{}:{}", fmt_rat(&p.hi), fmt_rat(&p.cdf.eval(&p.hi))))
                .collect();
            out.push_str(&format!("cdf={} {}\n", info.name, points.join(" ")));
        } else {
            for p in cdf.pieces() {
                let coeffs: Vec<String> = (0..=p.cdf.degree())
                    .map(|i| fmt_rat(&p.cdf.coeff(i)))
                    .collect();
                out.push_str(&format!(
                    "rawpiece={} {} {} {}\n",
                    info.name,
                    fmt_rat(&p.lo),
                    fmt_rat(&p.hi),
                    coeffs.join(" ")
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    const FIG1_NET: &str = "[network]\nroot=O\narc=OA O A 6\narc=OD O D 3\narc=DB D B 2\narc=DC D C 3\n";

    #[test]
    fn parse_fig1_ebd() {
        let text = format!("{FIG1_NET}\n[distribution]\nkind=ebd\n");
        let (q, h) = parse_instance(&text).unwrap();
        assert_eq!(q.mu(), &rat_int(14));
        assert_eq!(h.atom(q.node_id("A").unwrap()), rat(3, 7));
        assert_eq!(h.atom(q.node_id("B").unwrap()), rat(8, 35));
        assert_eq!(h.atom(q.node_id("C").unwrap()), rat(12, 35));
    }

    #[test]
    fn parse_kella_balanced_star_breakpoints() {
        let text = "\
[network]
root=O
arc=R O P 1
arc=L O M 1

[distribution]
kind=custom
cdf=R 1/2:1/3 1:1/2
cdf=L 1/2:1/3 1:1/2
";
        let (q, h) = parse_instance(text).unwrap();
        let r = q.arc_id("R").unwrap();
        assert_eq!(h.arc_cdf(r).eval(&rat(1, 2)), rat(1, 3));
        assert_eq!(h.arc_cdf(r).eval(&rat_int(1)), rat(1, 2));
        assert_eq!(h.arc_cdf(r).eval(&rat(1, 4)), rat(1, 6)); // 2x/3
        assert_eq!(h.arc_cdf(r).eval(&rat(3, 4)), rat(5, 12)); // (1+2x)/6
    }

    #[test]
    fn parse_triangular_pdf() {
        let text = "\
[network]
root=O
arc=R O P 1
arc=L O M 1

[distribution]
kind=custom
pdf=R 0:1 1:0
pdf=L 0:1 1:0
";
        let (q, h) = parse_instance(text).unwrap();
        let r = q.arc_id("R").unwrap();
        assert_eq!(h.arc_cdf(r).eval(&rat(1, 2)), rat(3, 8));
    }

    #[test]
    fn mass_errors_are_line_addressed() {
        let text = format!("{FIG1_NET}\n[distribution]\nkind=custom\natom=B 9/10\n");
        match parse_instance(&text) {
            Err(Error::InvalidDistribution(msg)) => assert!(msg.contains("total mass")),
            other => panic!("expected mass error, got {other:?}"),
        }
        let text = format!("{FIG1_NET}\n[distribution]\nkind=custom\natom=Z 1\n");
        match parse_instance(&text) {
            Err(Error::Parse(msg)) => {
                assert!(msg.contains("line 10"), "got {msg}");
                assert!(msg.contains('Z'));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_instance("arc=OA O A 1\n"),
            Err(Error::Parse(msg)) if msg.contains("before any section")
        ));
        assert!(matches!(
            parse_instance("[network]\nroot=O\narc=OA O A\n"),
            Err(Error::Parse(msg)) if msg.contains("line 3")
        ));
        let text = "[network]\nroot=O\narc=a O A 1\narc=b A O 1\n\n[distribution]\nkind=uniform\n";
        assert!(matches!(parse_instance(text), Err(Error::NotATree(_))));
        let text = format!("{FIG1_NET}\n[distribution]\nkind=nope\n");
        assert!(matches!(parse_instance(&text), Err(Error::Parse(msg)) if msg.contains("unknown kind")));
        let text = format!("{FIG1_NET}\n[distribution]\nkind=uniform\natom=A 1\n");
        assert!(matches!(parse_instance(&text), Err(Error::Parse(msg)) if msg.contains("takes no atom")));
    }

    #[test]
    fn round_trip_identity_on_canonical_form() {
        let cases = [
            format!("{FIG1_NET}\n[distribution]\nkind=ebd\n"),
            format!("{FIG1_NET}\n[distribution]\nkind=uniform\n"),
            format!("{FIG1_NET}\n[distribution]\nkind=equiprobable-nodes\n"),
            "[network]\nroot=O\narc=R O P 1\narc=L O M 1\n\n[distribution]\nkind=custom\npdf=R 0:1 1:0\npdf=L 0:1 1:0\n".to_string(),
            "[network]\nroot=O\narc=R O P 1\narc=L O M 1\n\n[distribution]\nkind=custom\natom=M 2/3\ncdf=R 1/2:1/4 1:1/3\n".to_string(),
        ];
        for text in cases {
            let (q, h) = parse_instance(&text).unwrap();
            let emitted = emit_instance(&q, &h);
            let (q2, h2) = parse_instance(&emitted).unwrap();
            let emitted2 = emit_instance(&q2, &h2);
            assert_eq!(emitted, emitted2, "canonical emission not a fixed point");
            // And the parsed objects agree.
            assert_eq!(q.mu(), q2.mu());
            for v in q.nodes() {
                let v2 = q2.node_id(q.node_name(v)).unwrap();
                assert_eq!(h.atom(v), h2.atom(v2));
            }
            for (a, info) in q.arcs() {
                let a2 = q2.arc_id(&info.name).unwrap();
                assert_eq!(h.arc_cdf(a).eval(&info.len), h2.arc_cdf(a2).eval(&info.len));
                assert_eq!(
                    h.arc_cdf(a).eval(&(&info.len / rat_int(3))),
                    h2.arc_cdf(a2).eval(&(&info.len / rat_int(3)))
                );
            }
        }
    }
}
