//! Text formats: signal-batch CSV, labeling files (JSON or CSV), edge-list
//! graph dumps, and the spectral-summary JSON export.
//!
//! Parsers accept untrusted input: they never panic, and allocation is
//! bounded by the input size (node counts inferred from edge lists are
//! capped).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Labeling;
use crate::spectral::{SignalBatch, SpectralSummary};

/// Upper limit on node counts inferred from untrusted edge lists.
pub const MAX_EDGE_LIST_NODES: usize = 1 << 24;

/// Upper limit on the group count accepted from labeling files.
pub const MAX_LABELING_GROUPS: usize = 1 << 24;

// ---------------------------------------------------------------------------
// Signal batches: CSV, one signal per row, n columns, header optional.
// ---------------------------------------------------------------------------

/// Parses a signal batch from CSV text. If every cell of the first row
/// fails to parse as a number the row is treated as a header.
pub fn parse_signal_csv(text: &str) -> Result<SignalBatch> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut signals: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
        let parsed: Vec<std::result::Result<f64, _>> =
            record.iter().map(|cell| cell.parse::<f64>()).collect();
        if row == 0 && !parsed.is_empty() && parsed.iter().all(|p| p.is_err()) {
            continue; // header row
        }
        let mut signal = Vec::with_capacity(parsed.len());
        for (col, value) in parsed.into_iter().enumerate() {
            match value {
                Ok(v) if v.is_finite() => signal.push(v),
                Ok(v) => {
                    return Err(Error::Parse(format!("row {}, column {}: non-finite value {v}", row + 1, col + 1)))
                }
                Err(_) => {
                    return Err(Error::Parse(format!(
                        "row {}, column {}: expected a number, got {:?}",
                        row + 1,
                        col + 1,
                        record.get(col).unwrap_or("")
                    )))
                }
            }
        }
        if let Some(first) = signals.first() {
            if signal.len() != first.len() {
                return Err(Error::Parse(format!(
                    "row {}: {} columns, expected {}",
                    row + 1,
                    signal.len(),
                    first.len()
                )));
            }
        }
        if signal.is_empty() {
            return Err(Error::Parse(format!("row {}: empty record", row + 1)));
        }
        signals.push(signal);
    }
    SignalBatch::new(signals)
}

/// Writes a signal batch as headerless CSV, one signal per row.
pub fn write_signal_csv(batch: &SignalBatch) -> String {
    let mut out = String::new();
    for signal in batch.signals() {
        let row: Vec<String> = signal.iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Labelings: JSON {"k": .., "assignments": [..]} or a bare JSON array, or
// CSV with one group id per line. Group ids are 1-based in files.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LabelingFile {
    #[serde(default)]
    k: Option<usize>,
    assignments: Vec<u64>,
}

fn labeling_from_ids(ids: Vec<u64>, k: Option<usize>) -> Result<Labeling> {
    if ids.is_empty() {
        return Err(Error::Parse("labeling has no assignments".into()));
    }
    let max_id = *ids.iter().max().expect("nonempty");
    if ids.iter().any(|&id| id == 0) {
        return Err(Error::Parse("group ids are 1-based; found 0".into()));
    }
    let k = match k {
        Some(k) => {
            if (max_id as usize) > k {
                return Err(Error::Parse(format!("group id {max_id} exceeds declared k = {k}")));
            }
            k
        }
        None => max_id as usize,
    };
    if k > MAX_LABELING_GROUPS {
        return Err(Error::Parse(format!("k = {k} exceeds the supported maximum")));
    }
    let assignments = ids.into_iter().map(|id| (id - 1) as usize).collect();
    Labeling::new(assignments, k).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a labeling from JSON or CSV text (auto-detected).
pub fn parse_labeling(text: &str) -> Result<Labeling> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        if let Ok(file) = serde_json::from_str::<LabelingFile>(text) {
            return labeling_from_ids(file.assignments, file.k);
        }
        let ids: Vec<u64> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        return labeling_from_ids(ids, None);
    }
    let mut ids = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<u64>() {
            Ok(id) => ids.push(id),
            Err(_) if idx == 0 && ids.is_empty() => continue, // header line
            Err(_) => return Err(Error::Parse(format!("line {}: expected a group id, got {line:?}", idx + 1))),
        }
    }
    labeling_from_ids(ids, None)
}

/// Serializes a labeling as the JSON object the CLI emits (1-based ids).
pub fn labeling_to_json(labeling: &Labeling) -> serde_json::Value {
    serde_json::json!({
        "k": labeling.k(),
        "assignments": labeling.assignments().iter().map(|&g| g + 1).collect::<Vec<usize>>(),
    })
}

// ---------------------------------------------------------------------------
// Edge lists: one "i j" pair per line, 0-indexed, undirected edges once.
// ---------------------------------------------------------------------------

/// Parses an edge-list dump. With `n = None` the node count is inferred as
/// `max index + 1` (trailing isolated nodes are not representable).
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("line {}: expected \"i j\", got {line:?}", idx + 1)));
        };
        let i: usize =
            a.parse().map_err(|_| Error::Parse(format!("line {}: bad node id {a:?}", idx + 1)))?;
        let j: usize =
            b.parse().map_err(|_| Error::Parse(format!("line {}: bad node id {b:?}", idx + 1)))?;
        if i >= MAX_EDGE_LIST_NODES || j >= MAX_EDGE_LIST_NODES {
            return Err(Error::Parse(format!("line {}: node id beyond supported maximum", idx + 1)));
        }
        max_node = max_node.max(i).max(j);
        edges.push((i, j));
    }
    let n = match n {
        Some(n) => {
            if !edges.is_empty() && max_node >= n {
                return Err(Error::Parse(format!("edge references node {max_node}, but n = {n}")));
            }
            n
        }
        None => {
            if edges.is_empty() {
                return Err(Error::Parse("empty edge list and no node count given".into()));
            }
            max_node + 1
        }
    };
    Graph::from_edges(n, &edges).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes the edge-list dump of a graph.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Spectral summary export.
// ---------------------------------------------------------------------------

/// JSON export of a spectral summary: the eigenvalue array plus, on
/// request, the eigenvector matrix in row-major order.
pub fn spectral_summary_json(s: &SpectralSummary, include_eigenvectors: bool) -> serde_json::Value {
    let mut value = serde_json::json!({ "eigenvalues": s.eigenvalues });
    if include_eigenvectors {
        let rows: Vec<Vec<f64>> = (0..s.eigenvectors.nrows())
            .map(|i| s.eigenvectors.row(i).iter().copied().collect())
            .collect();
        value["eigenvectors"] = serde_json::json!(rows);
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_csv_roundtrip_with_and_without_header() {
        let batch = SignalBatch::new(vec![vec![1.0, -2.5, 3.0], vec![0.25, 0.0, -1.0]]).unwrap();
        let text = write_signal_csv(&batch);
        let parsed = parse_signal_csv(&text).unwrap();
        assert_eq!(parsed.signals(), batch.signals());

        let with_header = format!("a,b,c\n{text}");
        let parsed = parse_signal_csv(&with_header).unwrap();
        assert_eq!(parsed.signals(), batch.signals());
    }

    #[test]
    fn signal_csv_rejects_bad_rows() {
        assert!(parse_signal_csv("").is_err());
        assert!(parse_signal_csv("1.0,2.0\n3.0\n").is_err(), "ragged rows");
        assert!(parse_signal_csv("1.0,oops\n").is_err(), "non-numeric cell after numeric");
        assert!(parse_signal_csv("a,b\nc,d\n").is_err(), "two header-like rows");
        assert!(parse_signal_csv("NaN,1.0\n").is_err(), "non-finite value");
    }

    #[test]
    fn labeling_roundtrip_json_and_csv() {
        let labeling = Labeling::new(vec![0, 1, 1, 2, 0], 3).unwrap();
        let json = labeling_to_json(&labeling).to_string();
        let parsed = parse_labeling(&json).unwrap();
        assert_eq!(parsed, labeling);

        let csv = "group\n1\n2\n2\n3\n1\n";
        assert_eq!(parse_labeling(csv).unwrap(), labeling);

        let bare = "[1,2,2,3,1]";
        assert_eq!(parse_labeling(bare).unwrap(), labeling);
    }

    #[test]
    fn labeling_rejects_bad_ids() {
        assert!(parse_labeling("0\n1\n").is_err(), "0 is not a valid 1-based id");
        assert!(parse_labeling("").is_err());
        assert!(parse_labeling("{\"k\": 2, \"assignments\": [1, 3]}").is_err(), "id beyond k");
        assert!(parse_labeling("one\ntwo\n").is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 3), (2, 2), (3, 4)]).unwrap();
        let text = write_edge_list(&g);
        assert_eq!(text, "0 1\n1 3\n2 2\n3 4\n");
        let parsed = parse_edge_list(&text, Some(5)).unwrap();
        assert_eq!(parsed, g);
        // Inferred node count.
        let parsed = parse_edge_list(&text, None).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn edge_list_rejects_bad_lines() {
        assert!(parse_edge_list("0 1 2\n", None).is_err());
        assert!(parse_edge_list("0\n", None).is_err());
        assert!(parse_edge_list("x y\n", None).is_err());
        assert!(parse_edge_list("0 5\n", Some(3)).is_err(), "node beyond n");
        assert!(parse_edge_list("", None).is_err(), "empty without n");
        assert!(parse_edge_list("", Some(4)).unwrap().edges().is_empty());
        assert!(parse_edge_list("99999999999999 0\n", None).is_err(), "node id cap");
    }

    #[test]
    fn spectral_summary_export_shape() {
        let s = crate::spectral::eigendecompose(&nalgebra::DMatrix::identity(3, 3)).unwrap();
        let without = spectral_summary_json(&s, false);
        assert!(without.get("eigenvectors").is_none());
        let with = spectral_summary_json(&s, true);
        assert_eq!(with["eigenvectors"].as_array().unwrap().len(), 3);
        assert_eq!(with["eigenvalues"].as_array().unwrap().len(), 3);
    }
}
