//! File formats and result documents.
//!
//! Graphs travel either as plain edge lists — one `u v w` line per
//! edge, `#` starting a comment, a leading `# nodes N` comment
//! preserving isolated trailing nodes — or as a versioned JSON record
//! carrying the node count, edge array, and weight array. Point sets
//! are `id x y` lines or CSV with an `id,x,y` header. Match runs
//! serialize to a [`MatchDocument`] that can be re-validated against
//! the input graphs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consensus::ExpansionDiagnostics;
use crate::error::IoError;
use crate::geo::PointSet;
use crate::graph::{Graph, NodeId};
use crate::matching::{CountMode, MatchingPolicy, ThresholdConfig, TopologyUnit};
use crate::pipeline::MatchOutcome;
use crate::sim::McReport;

pub const GRAPH_FORMAT: &str = "topomatch-graph";
pub const MATCH_FORMAT: &str = "topomatch-match";
pub const FORMAT_VERSION: u32 = 1;

/// Versioned envelope for JSON documents (bench reports, scaling
/// tables, guarantee summaries), keeping outputs comparable across
/// releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record<T> {
    pub format: String,
    pub version: u32,
    pub data: T,
}

pub fn record_string<T: Serialize>(tag: &str, data: &T) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(&Record {
        format: tag.to_string(),
        version: FORMAT_VERSION,
        data,
    })?)
}

/// On-disk graph encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFormat {
    Edgelist,
    Record,
}

fn parse_err(path: &str, line: usize, what: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_string(),
        line,
        what: what.into(),
    }
}

/// Parses the edge-list format. Line numbers in errors are 1-based.
pub fn parse_edgelist_str(text: &str, label: &str) -> Result<Graph, IoError> {
    let mut nodes = 0usize;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(n) = raw.trim().strip_prefix("# nodes ") {
            nodes = n
                .trim()
                .parse()
                .map_err(|e| parse_err(label, line_no, format!("bad node count: {e}")))?;
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut field = |name: &str| {
            it.next()
                .ok_or_else(|| parse_err(label, line_no, format!("missing {name}")))
        };
        let u: NodeId = field("source id")?
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad source id: {e}")))?;
        let v: NodeId = field("target id")?
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad target id: {e}")))?;
        let w: f64 = field("weight")?
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad weight: {e}")))?;
        if let Some(extra) = it.next() {
            return Err(parse_err(
                label,
                line_no,
                format!("unexpected trailing token {extra:?}"),
            ));
        }
        edges.push((u, v, w));
    }
    Ok(Graph::from_edges_with_nodes(nodes, edges)?)
}

/// Writes the edge-list format; weights keep full round-trip
/// precision.
pub fn write_edgelist_str(g: &Graph) -> String {
    let mut out = format!("# nodes {}\n", g.node_count());
    for (e, w) in g.edges() {
        let (u, v) = e.endpoints();
        writeln!(out, "{u} {v} {w}").expect("string write");
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    format: String,
    version: u32,
    nodes: usize,
    edges: Vec<(NodeId, NodeId)>,
    weights: Vec<f64>,
}

pub fn write_graph_record_str(g: &Graph) -> String {
    let (edges, weights) = g
        .edges()
        .map(|(e, w)| (e.endpoints(), w))
        .unzip::<_, _, Vec<_>, Vec<_>>();
    serde_json::to_string_pretty(&GraphRecord {
        format: GRAPH_FORMAT.to_string(),
        version: FORMAT_VERSION,
        nodes: g.node_count(),
        edges,
        weights,
    })
    .expect("graph record serializes")
}

pub fn parse_graph_record_str(text: &str, label: &str) -> Result<Graph, IoError> {
    let rec: GraphRecord = serde_json::from_str(text)?;
    if rec.format != GRAPH_FORMAT {
        return Err(parse_err(
            label,
            1,
            format!("expected a {GRAPH_FORMAT} document, found {:?}", rec.format),
        ));
    }
    if rec.version > FORMAT_VERSION {
        return Err(parse_err(
            label,
            1,
            format!("unsupported version {}", rec.version),
        ));
    }
    if rec.edges.len() != rec.weights.len() {
        return Err(parse_err(
            label,
            1,
            format!(
                "{} edges but {} weights",
                rec.edges.len(),
                rec.weights.len()
            ),
        ));
    }
    let triples = rec
        .edges
        .into_iter()
        .zip(rec.weights)
        .map(|((u, v), w)| (u, v, w));
    Ok(Graph::from_edges_with_nodes(rec.nodes, triples)?)
}

pub fn parse_graph_file(path: &Path, format: GraphFormat) -> Result<Graph, IoError> {
    let text = std::fs::read_to_string(path)?;
    let label = path.display().to_string();
    match format {
        GraphFormat::Edgelist => parse_edgelist_str(&text, &label),
        GraphFormat::Record => parse_graph_record_str(&text, &label),
    }
}

pub fn write_graph_file(path: &Path, g: &Graph, format: GraphFormat) -> Result<(), IoError> {
    let text = match format {
        GraphFormat::Edgelist => write_edgelist_str(g),
        GraphFormat::Record => write_graph_record_str(g),
    };
    Ok(std::fs::write(path, text)?)
}

/// Parses a point-set file: whitespace `id x y` lines with `#`
/// comments, or CSV when the first data line is the `id,x,y` header.
pub fn parse_points_str(text: &str, label: &str) -> Result<PointSet, IoError> {
    let mut ids = Vec::new();
    let mut points = Vec::new();
    let mut csv = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let csv = *csv.get_or_insert_with(|| line.replace(' ', "") == "id,x,y");
        if csv && points.is_empty() && ids.is_empty() && line.replace(' ', "") == "id,x,y" {
            continue;
        }
        let fields: Vec<&str> = if csv {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 3 {
            return Err(parse_err(
                label,
                line_no,
                format!("expected id, x, y; found {} fields", fields.len()),
            ));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad id: {e}")))?;
        let x: f64 = fields[1]
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad x: {e}")))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(label, line_no, format!("bad y: {e}")))?;
        ids.push(id);
        points.push((x, y));
    }
    Ok(PointSet::new(points)?.with_ids(ids))
}

pub fn parse_points_file(path: &Path) -> Result<PointSet, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_points_str(&text, &path.display().to_string())
}

pub fn write_points_str(ps: &PointSet) -> String {
    let mut out = String::new();
    for (i, &(x, y)) in ps.points().iter().enumerate() {
        let id = ps.ids().map_or(i as u64, |ids| ids[i]);
        writeln!(out, "{id} {x} {y}").expect("string write");
    }
    out
}

/// Parameters a match run was invoked with, echoed verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchParameters {
    pub alpha: f64,
    /// Noise level supplied on the command line; absent when estimated.
    pub sigma: Option<f64>,
    /// Noise level the winning pass actually used.
    pub sigma_used: f64,
    pub sigma_estimate: Option<f64>,
    pub p: usize,
    pub count_mode: CountMode,
    pub seed: u64,
    pub tries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchDiagnostics {
    pub unit: TopologyUnit,
    pub candidates: usize,
    pub expansion: ExpansionDiagnostics,
}

/// Complete, self-validating record of one match run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchDocument {
    pub format: String,
    pub version: u32,
    pub matches: Vec<(NodeId, NodeId)>,
    pub unmatched: Vec<NodeId>,
    pub parameters: MatchParameters,
    pub diagnostics: MatchDiagnostics,
}

pub fn match_document(
    sub: &Graph,
    outcome: &MatchOutcome,
    parameters: MatchParameters,
) -> MatchDocument {
    let unmatched = (0..sub.node_count() as NodeId)
        .filter(|&v| !outcome.policy.contains_sub(v))
        .collect();
    MatchDocument {
        format: MATCH_FORMAT.to_string(),
        version: FORMAT_VERSION,
        matches: outcome.policy.pairs().to_vec(),
        unmatched,
        parameters,
        diagnostics: MatchDiagnostics {
            unit: outcome.unit.clone(),
            candidates: outcome.candidates,
            expansion: outcome.diagnostics.clone(),
        },
    }
}

/// Re-checks a document against the graphs it was produced from: the
/// match pairs must form an injective, topology-consistent policy, and
/// every recorded expansion step must re-derive the same per-edge
/// differences and pass the same threshold test it passed originally.
pub fn validate_document(
    doc: &MatchDocument,
    sub: &Graph,
    field: &Graph,
) -> Result<(), String> {
    let policy = MatchingPolicy::from_pairs(doc.matches.clone())
        .map_err(|e| format!("match list invalid: {e}"))?;
    if !policy.is_consistent(sub, field) {
        return Err("matches break topology consistency".into());
    }
    for &v in &doc.unmatched {
        if policy.contains_sub(v) {
            return Err(format!("node {v} listed unmatched but present in matches"));
        }
    }
    let cfg = ThresholdConfig::new(doc.parameters.alpha, doc.parameters.sigma_used)
        .with_count_mode(doc.parameters.count_mode);
    for (i, step) in doc.diagnostics.expansion.steps.iter().enumerate() {
        let cand = &step.accepted;
        let q = cand.sub_path.hops();
        if cand.full_path.hops() != q {
            return Err(format!("step {i}: hop counts differ"));
        }
        let recomputed: Vec<f64> = cand
            .sub_path
            .edges()
            .zip(cand.full_path.edges())
            .map(|(es, ef)| {
                let (su, sv) = es.endpoints();
                let (fu, fv) = ef.endpoints();
                match (sub.weight(su, sv), field.weight(fu, fv)) {
                    (Some(ws), Some(wf)) => Ok(wf - ws),
                    _ => Err(format!("step {i}: path edge missing from graph")),
                }
            })
            .collect::<Result<_, _>>()?;
        if recomputed != cand.diffs {
            return Err(format!("step {i}: stored differences do not reproduce"));
        }
        let mean = recomputed.iter().map(|d| d.abs()).sum::<f64>() / recomputed.len() as f64;
        if mean > cfg.threshold(q) {
            return Err(format!("step {i}: accepted path fails its threshold"));
        }
        if step.feasible_sizes.last() != Some(&1) {
            return Err(format!("step {i}: acceptance without a unique feasible set"));
        }
    }
    Ok(())
}

pub const MC_CSV_HEADER: &str = "sigma,iter,accuracy,runtime_ms,seed,matched,retries";

/// Fixed-column CSV for sweep reports.
pub fn mc_csv_string(report: &McReport) -> String {
    let mut out = String::from(MC_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.sigma, r.iter, r.accuracy, r.runtime_ms, r.seed, r.matched, r.retries
        )
        .expect("string write");
    }
    out
}
