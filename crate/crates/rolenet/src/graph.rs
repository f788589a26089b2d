//! Directed-graph ingestion: edge-list parsing, adjacency and degree queries.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An immutable directed graph with 0-based contiguous node indices.
///
/// Edges are stored deduplicated and sorted; `a(i, j) == true` exactly when
/// the directed edge i -> j is present.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    labels: Vec<String>,
    out_adj: Vec<Vec<u32>>,
    in_adj: Vec<Vec<u32>>,
}

/// Integer in/out degree vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVectors {
    pub k_in: Vec<u32>,
    pub k_out: Vec<u32>,
}

/// Non-fatal observations recorded while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub weighted_lines: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// When set, fixes the node order and may declare isolated nodes.
    pub node_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub graph: DirectedGraph,
    pub warnings: ParseWarnings,
}

impl DirectedGraph {
    /// Builds a graph from explicit parts. Edges are deduplicated and sorted;
    /// indices out of range are rejected.
    pub fn from_parts(n: usize, mut edges: Vec<(u32, u32)>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != n {
            return Err(Error::Internal(format!(
                "label count {} does not match node count {}",
                labels.len(),
                n
            )));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(i, j) in &edges {
            if i as usize >= n || j as usize >= n {
                return Err(Error::Internal(format!("edge ({i}, {j}) out of range")));
            }
            out_adj[i as usize].push(j);
            in_adj[j as usize].push(i);
        }
        Ok(DirectedGraph {
            n,
            edges,
            labels,
            out_adj,
            in_adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn out_neighbors(&self, i: usize) -> &[u32] {
        &self.out_adj[i]
    }

    pub fn in_neighbors(&self, j: usize) -> &[u32] {
        &self.in_adj[j]
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn degrees(&self) -> DegreeVectors {
        DegreeVectors {
            k_in: self.in_adj.iter().map(|v| v.len() as u32).collect(),
            k_out: self.out_adj.iter().map(|v| v.len() as u32).collect(),
        }
    }

    /// Serializes back to the edge-list format accepted by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{} {}", self.labels[i as usize], self.labels[j as usize]);
        }
        out
    }
}

fn split_line(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses a directed edge list.
///
/// Lines starting with `#` are comments. Each data line holds a source token
/// and a target token separated by whitespace or a single comma; an optional
/// third numeric token (a weight) is accepted and ignored. Nodes are indexed
/// in first-appearance order unless a node-label list fixes the order.
pub fn parse_edge_list(text: &str, options: &ParseOptions) -> Result<ParseOutcome> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let fixed_order = options.node_labels.is_some();
    if let Some(given) = &options.node_labels {
        for label in given {
            if index
                .insert(label.clone(), labels.len() as u32)
                .is_some()
            {
                return Err(Error::Config(format!(
                    "duplicate label {label:?} in nodes file"
                )));
            }
            labels.push(label.clone());
        }
    }

    let mut warnings = ParseWarnings::default();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut seen: HashMap<(u32, u32), ()> = HashMap::new();
    let mut any_data = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        any_data = true;
        let tokens = split_line(line);
        if tokens.len() < 2 || tokens.len() > 3 || tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 2 or 3 tokens, found {}", tokens.len()),
            });
        }
        if tokens.len() == 3 {
            if tokens[2].parse::<f64>().is_err() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("third token {:?} is not a numeric weight", tokens[2]),
                });
            }
            warnings.weighted_lines += 1;
        }
        let mut resolve = |tok: &str| -> Result<u32> {
            if let Some(&idx) = index.get(tok) {
                return Ok(idx);
            }
            if fixed_order {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("token {tok:?} not declared in nodes file"),
                });
            }
            let idx = labels.len() as u32;
            index.insert(tok.to_string(), idx);
            labels.push(tok.to_string());
            Ok(idx)
        };
        let src = resolve(tokens[0])?;
        let dst = resolve(tokens[1])?;
        if src == dst {
            warnings.self_loops += 1;
        }
        if seen.insert((src, dst), ()).is_some() {
            warnings.duplicate_edges += 1;
        } else {
            edges.push((src, dst));
        }
    }

    if !any_data && labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty input: no edges and no declared nodes".to_string(),
        });
    }

    let n = labels.len();
    let graph = DirectedGraph::from_parts(n, edges, labels)?;
    Ok(ParseOutcome { graph, warnings })
}

/// Parses a nodes file: one label per line, `#` comments allowed.
pub fn parse_nodes_file(text: &str) -> Result<Vec<String>> {
    let labels: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "nodes file declares no labels".to_string(),
        });
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> ParseOutcome {
        parse_edge_list(text, &ParseOptions::default()).unwrap()
    }

    #[test]
    fn parses_simple_edge_list() {
        let out = parse("a b\nb c\n");
        assert_eq!(out.graph.n(), 3);
        assert_eq!(out.graph.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(out.graph.labels(), &["a", "b", "c"]);
        assert_eq!(out.warnings, ParseWarnings::default());
    }

    #[test]
    fn collapses_duplicate_edges_with_warning() {
        let out = parse("1 2\n1 2\n2 1\n");
        assert_eq!(out.graph.n(), 2);
        assert_eq!(out.graph.edges(), &[(0, 1), (1, 0)]);
        assert_eq!(out.warnings.duplicate_edges, 1);
    }

    #[test]
    fn accepts_comments_commas_and_weights() {
        let out = parse("# header\na,b,0.5\nb,c\n");
        assert_eq!(out.graph.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(out.warnings.weighted_lines, 1);
    }

    #[test]
    fn keeps_self_loops_with_warning() {
        let out = parse("a a\na b\n");
        assert_eq!(out.graph.edges(), &[(0, 0), (0, 1)]);
        assert_eq!(out.warnings.self_loops, 1);
    }

    #[test]
    fn rejects_malformed_line_with_line_number() {
        let err = parse_edge_list("a b\nc\n", &ParseOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_numeric_weight() {
        let err = parse_edge_list("a b x\n", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(parse_edge_list("# only comments\n", &ParseOptions::default()).is_err());
        assert!(parse_edge_list("", &ParseOptions::default()).is_err());
    }

    #[test]
    fn nodes_file_fixes_order_and_allows_isolated_nodes() {
        let options = ParseOptions {
            node_labels: Some(vec!["z".into(), "a".into(), "iso".into()]),
        };
        let out = parse_edge_list("a z\n", &options).unwrap();
        assert_eq!(out.graph.n(), 3);
        assert_eq!(out.graph.edges(), &[(1, 0)]);
        assert_eq!(out.graph.labels(), &["z", "a", "iso"]);
    }

    #[test]
    fn nodes_file_rejects_undeclared_token() {
        let options = ParseOptions {
            node_labels: Some(vec!["a".into()]),
        };
        assert!(parse_edge_list("a b\n", &options).is_err());
    }

    #[test]
    fn degrees_on_cycle_path_and_star() {
        let two_cycle = parse("0 1\n1 0\n").graph;
        assert_eq!(
            two_cycle.degrees(),
            DegreeVectors {
                k_in: vec![1, 1],
                k_out: vec![1, 1]
            }
        );

        let path = parse("0 1\n1 2\n").graph;
        assert_eq!(
            path.degrees(),
            DegreeVectors {
                k_in: vec![0, 1, 1],
                k_out: vec![1, 1, 0]
            }
        );

        let star = parse("c 1\nc 2\nc 3\nc 4\nc 5\n").graph;
        let d = star.degrees();
        assert_eq!(d.k_out, vec![5, 0, 0, 0, 0, 0]);
        assert_eq!(d.k_in, vec![0, 1, 1, 1, 1, 1]);
    }

    fn arb_edges() -> impl Strategy<Value = Vec<(u32, u32)>> {
        prop::collection::vec((0u32..8, 0u32..8), 1..30)
    }

    proptest! {
        #[test]
        fn round_trip_preserves_edge_set(edges in arb_edges()) {
            let text: String = edges
                .iter()
                .map(|(i, j)| format!("n{i} n{j}\n"))
                .collect();
            let first = parse(&text).graph;
            let second = parse(&first.to_edge_list()).graph;
            // labels may be assigned in different index order, so compare by label
            let as_labels = |g: &DirectedGraph| {
                let mut set: Vec<(String, String)> = g
                    .edges()
                    .iter()
                    .map(|&(i, j)| {
                        (g.labels()[i as usize].clone(), g.labels()[j as usize].clone())
                    })
                    .collect();
                set.sort();
                set
            };
            prop_assert_eq!(as_labels(&first), as_labels(&second));
        }

        #[test]
        fn degree_sums_match_edge_count(edges in arb_edges()) {
            let text: String = edges
                .iter()
                .map(|(i, j)| format!("n{i} n{j}\n"))
                .collect();
            let g = parse(&text).graph;
            let d = g.degrees();
            let sum_in: u32 = d.k_in.iter().sum();
            let sum_out: u32 = d.k_out.iter().sum();
            prop_assert_eq!(sum_in as usize, g.edges().len());
            prop_assert_eq!(sum_out as usize, g.edges().len());
        }

        #[test]
        fn parsing_is_order_stable(edges in arb_edges()) {
            let text: String = edges
                .iter()
                .map(|(i, j)| format!("n{i} n{j}\n"))
                .collect();
            let a = parse(&text).graph;
            let b = parse(&text).graph;
            prop_assert_eq!(a.labels(), b.labels());
            prop_assert_eq!(a.edges(), b.edges());
        }
    }
}
