use super::Graph;
use crate::error::{Error, Result};
use std::collections::HashMap;

/// A parsed edge list with its label table and load diagnostics.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original label of each dense node id.
    pub labels: Vec<String>,
    /// Edge lines that repeated an earlier edge.
    pub duplicates: usize,
}

/// Parses `u v` lines (whitespace or comma separated, `#` comments).
///
/// Purely numeric ids keep their values and `n = max id + 1`; if any id is
/// not a nonnegative integer every id is treated as a string label and
/// numbered in order of first appearance.
pub fn load_edgelist(text: &str, directed: bool, n_hint: Option<usize>) -> Result<LoadedGraph> {
    let mut raw: Vec<(usize, &str, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 2 {
            return Err(Error::MalformedLine {
                line: idx + 1,
                text: line.to_string(),
            });
        }
        if toks[0] == toks[1] {
            return Err(Error::SelfLoop {
                line: idx + 1,
                node: toks[0].to_string(),
            });
        }
        raw.push((idx + 1, toks[0], toks[1]));
    }

    let numeric = raw
        .iter()
        .all(|(_, a, b)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok());

    let mut pairs = Vec::with_capacity(raw.len());
    let labels: Vec<String>;
    if numeric {
        let mut max_id = None;
        for &(line, a, b) in &raw {
            let (u, v) = (a.parse::<usize>().unwrap(), b.parse::<usize>().unwrap());
            if u == v {
                return Err(Error::SelfLoop {
                    line,
                    node: a.to_string(),
                });
            }
            max_id = max_id.max(Some(u.max(v)));
            pairs.push((u, v));
        }
        let n = max_id.map_or(0, |m| m + 1).max(n_hint.unwrap_or(0));
        labels = (0..n).map(|i| i.to_string()).collect();
    } else {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        for &(_, a, b) in &raw {
            let mut ends = [0; 2];
            for (slot, s) in ends.iter_mut().zip([a, b]) {
                *slot = *ids.entry(s).or_insert_with(|| {
                    names.push(s.to_string());
                    names.len() - 1
                });
            }
            pairs.push((ends[0], ends[1]));
        }
        let n = names.len().max(n_hint.unwrap_or(0));
        names.extend((names.len()..n).map(|i| format!("#{i}")));
        labels = names;
    }

    let graph = Graph::from_edges(labels.len(), directed, &pairs)?;
    let duplicates = pairs.len() - graph.edge_count();
    Ok(LoadedGraph {
        graph,
        labels,
        duplicates,
    })
}

/// Writes sorted `u v` lines using dense ids, or `labels` when given.
pub fn write_edgelist(graph: &Graph, labels: Option<&[String]>) -> String {
    let mut out = String::new();
    for &(u, v) in graph.edges() {
        match labels {
            Some(l) => out.push_str(&format!("{} {}\n", l[u], l[v])),
            None => out.push_str(&format!("{u} {v}\n")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_lists() {
        let g = load_edgelist("0 1\n1 2", false, None).unwrap();
        assert_eq!(g.graph.n(), 3);
        assert_eq!(g.graph.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn symmetric_duplicate_is_one_edge() {
        let g = load_edgelist("0 1\n1 0", false, None).unwrap();
        assert_eq!(g.graph.edges(), &[(0, 1)]);
        assert_eq!(g.duplicates, 1);
        let d = load_edgelist("0 1\n1 0", true, None).unwrap();
        assert_eq!(d.graph.edge_count(), 2);
    }

    #[test]
    fn rejects_self_loop_with_line() {
        match load_edgelist("0 0", false, None) {
            Err(Error::SelfLoop { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match load_edgelist("# header\n0 1\n2", false, None) {
            Err(Error::MalformedLine { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn string_labels_and_hint() {
        let g = load_edgelist("alice,bob\nbob carol\n", false, Some(5)).unwrap();
        assert_eq!(g.graph.n(), 5);
        assert_eq!(&g.labels[..3], &["alice", "bob", "carol"]);
        assert!(g.graph.has_edge(1, 2));
        let h = load_edgelist("3 4", false, Some(10)).unwrap();
        assert_eq!(h.graph.n(), 10);
    }

    #[test]
    fn writer_round_trips() {
        let text = "0 3\n2 1\n1 0\n";
        let g = load_edgelist(text, false, None).unwrap();
        let again = load_edgelist(&write_edgelist(&g.graph, None), false, None).unwrap();
        assert_eq!(g.graph, again.graph);
    }
}
