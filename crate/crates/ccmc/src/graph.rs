//! Undirected graphs and the coverage objective.
//!
//! A [`Graph`] is immutable after construction and safe to share across
//! threads. Besides the adjacency lists it precomputes one closed-neighborhood
//! bitset per node, so evaluating the coverage objective is a handful of word
//! ORs per selected node. Coverage is the hot path of the whole artifact (it
//! runs once per solver fitness evaluation), which is why it gets the bitset
//! treatment.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::instance::BitSolution;

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    m: usize,
    adjacency: Vec<Vec<u32>>,
    /// Closed neighborhood of node i ({i} ∪ N(i)) as a bitset, `words` u64s each.
    masks: Vec<u64>,
    words: usize,
}

impl Graph {
    /// Build from an edge list over nodes `0..n`. Self-loops and duplicate
    /// edges are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("graph must have at least one node".into()));
        }
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Range(format!(
                    "edge ({u}, {v}) outside node range 0..{n}"
                )));
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v as u32);
            adjacency[v].push(u as u32);
        }
        let mut m = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        debug_assert_eq!(m % 2, 0);
        m /= 2;

        let words = n.div_ceil(64);
        let mut masks = vec![0u64; n * words];
        for i in 0..n {
            let row = &mut masks[i * words..(i + 1) * words];
            row[i / 64] |= 1u64 << (i % 64);
            for &j in &adjacency[i] {
                let j = j as usize;
                row[j / 64] |= 1u64 << (j % 64);
            }
        }
        Ok(Graph {
            n,
            m,
            adjacency,
            masks,
            words,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Edges as sorted (u, v) pairs with u < v.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            for &v in &self.adjacency[u] {
                let v = v as usize;
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Number of nodes that are selected or adjacent to a selected node.
    pub fn coverage(&self, x: &BitSolution) -> Result<usize> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.coverage_unchecked(x))
    }

    /// Coverage without the length check; callers guarantee `x.len() == n`.
    #[inline]
    pub fn coverage_unchecked(&self, x: &BitSolution) -> usize {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = vec![0u64; self.words];
        for i in x.ones() {
            let row = &self.masks[i * self.words..(i + 1) * self.words];
            for (a, &w) in acc.iter_mut().zip(row) {
                *a |= w;
            }
        }
        acc.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Indexing convention of an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    fn offset(self) -> usize {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }
}

/// Parse a whitespace-separated edge list. Lines starting with `#` or `%` are
/// comments. Node count is `1 + max index` after the base shift, so trailing
/// isolated nodes referenced by index are representable.
pub fn load_edge_list<R: BufRead>(reader: R, base: IndexBase) -> Result<Graph> {
    let offset = base.offset();
    let mut edges = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let lineno = lineno + 1;
        let mut tokens = trimmed.split_whitespace();
        let (u, v) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected two integer tokens, got {trimmed:?}"),
                })
            }
        };
        let u = parse_index(u, offset, lineno)?;
        let v = parse_index(v, offset, lineno)?;
        max_index = max_index.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "edge list contains no edges".into(),
        });
    }
    Graph::from_edges(max_index + 1, &edges)
}

fn parse_index(token: &str, offset: usize, lineno: usize) -> Result<usize> {
    let raw: i64 = token.parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: format!("invalid integer {token:?}"),
    })?;
    let shifted = raw - offset as i64;
    if shifted < 0 {
        return Err(Error::Range(format!(
            "line {lineno}: node index {raw} below indexing base {offset}"
        )));
    }
    Ok(shifted as usize)
}

/// Parse a MatrixMarket coordinate file as an undirected graph. Entry weights
/// are ignored; only the sparsity pattern matters here.
pub fn load_matrix_market<R: BufRead>(reader: R) -> Result<Graph> {
    let mut lines = reader.lines().enumerate();
    // Size header: first non-comment line, "rows cols nnz".
    let (rows, cols) = loop {
        let Some((lineno, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 0,
                msg: "missing MatrixMarket size header".into(),
            });
        };
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected size header \"rows cols nnz\", got {trimmed:?}"),
            });
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid size field {s:?}"),
            })
        };
        break (parse(fields[0])?, parse(fields[1])?);
    };
    if rows != cols {
        return Err(Error::Shape { rows, cols });
    }
    let mut edges = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let lineno = lineno + 1;
        let mut tokens = trimmed.split_whitespace();
        let (Some(i), Some(j)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected coordinate entry, got {trimmed:?}"),
            });
        };
        // 1-indexed entries; a trailing weight token is allowed and ignored.
        let i = parse_index(i, 1, lineno)?;
        let j = parse_index(j, 1, lineno)?;
        if i >= rows || j >= rows {
            return Err(Error::Range(format!(
                "line {lineno}: entry ({}, {}) outside {rows}x{rows} matrix",
                i + 1,
                j + 1
            )));
        }
        edges.push((i, j));
    }
    Graph::from_edges(rows, &edges)
}

/// G(n, p) random graph: each unordered pair is an edge independently with
/// probability `p`. Deterministic for a fixed seed.
pub fn gen_random_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Range("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn bits(v: &[u8]) -> BitSolution {
        BitSolution::from_bools(&v.iter().map(|&b| b != 0).collect::<Vec<_>>())
    }

    #[test]
    fn edge_list_base_zero() {
        let g = load_edge_list(Cursor::new("0 1\n1 2\n"), IndexBase::Zero).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn edge_list_base_one_matches_base_zero() {
        let a = load_edge_list(Cursor::new("0 1\n1 2\n"), IndexBase::Zero).unwrap();
        let b = load_edge_list(Cursor::new("1 2\n2 3\n"), IndexBase::One).unwrap();
        assert_eq!(a.node_count(), b.node_count());
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn edge_list_dedup_and_self_loop() {
        let g = load_edge_list(Cursor::new("0 1\n1 0\n1 1\n"), IndexBase::Zero).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_malformed_line_reports_number() {
        let err = load_edge_list(Cursor::new("0 1\nbogus\n"), IndexBase::Zero).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_list_negative_after_shift() {
        let err = load_edge_list(Cursor::new("0 1\n"), IndexBase::One).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn matrix_market_path_graph() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 2\n1 2\n2 3\n";
        let g = load_matrix_market(Cursor::new(text)).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn matrix_market_drops_diagonal() {
        let text = "3 3 3\n1 2\n2 3\n2 2\n";
        let g = load_matrix_market(Cursor::new(text)).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn matrix_market_rejects_non_square() {
        let err = load_matrix_market(Cursor::new("3 4 2\n1 2\n")).unwrap_err();
        assert!(matches!(err, Error::Shape { rows: 3, cols: 4 }));
    }

    #[test]
    fn matrix_market_missing_header() {
        let err = load_matrix_market(Cursor::new("% only comments\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn matrix_market_agrees_with_edge_list() {
        let mm = load_matrix_market(Cursor::new("4 4 3\n1 2\n2 3\n1 4\n")).unwrap();
        let el = load_edge_list(Cursor::new("0 1\n1 2\n0 3\n"), IndexBase::Zero).unwrap();
        assert_eq!(mm.edges(), el.edges());
        assert_eq!(mm.node_count(), el.node_count());
    }

    #[test]
    fn random_graph_degenerate_p() {
        let empty = gen_random_graph(5, 0.0, 7).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let complete = gen_random_graph(5, 1.0, 7).unwrap();
        assert_eq!(complete.edge_count(), 10);
    }

    #[test]
    fn random_graph_edge_count_near_expectation() {
        // n=500, p=0.02: E[m] = 2495, sd = sqrt(2495 * 0.98) ~ 49.4.
        let g = gen_random_graph(500, 0.02, 1234).unwrap();
        let expected = 2495.0;
        let sd = (2495.0f64 * 0.98).sqrt();
        let m = g.edge_count() as f64;
        assert!(
            (m - expected).abs() < 5.0 * sd,
            "edge count {m} outside 5 sd of {expected}"
        );
    }

    #[test]
    fn random_graph_seed_deterministic() {
        let a = gen_random_graph(60, 0.1, 99).unwrap();
        let b = gen_random_graph(60, 0.1, 99).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = gen_random_graph(60, 0.1, 100).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn random_graph_rejects_bad_p() {
        assert!(gen_random_graph(5, 1.5, 0).is_err());
        assert!(gen_random_graph(5, -0.1, 0).is_err());
        assert!(gen_random_graph(0, 0.5, 0).is_err());
    }

    #[test]
    fn coverage_hand_counts() {
        let k3 = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(k3.coverage(&bits(&[1, 0, 0])).unwrap(), 3);

        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.coverage(&bits(&[1, 0, 0])).unwrap(), 2);
        assert_eq!(path.coverage(&bits(&[0, 1, 0])).unwrap(), 3);
        assert_eq!(path.coverage(&bits(&[0, 0, 0])).unwrap(), 0);
        assert_eq!(path.coverage(&bits(&[1, 1, 1])).unwrap(), 3);
    }

    #[test]
    fn coverage_dimension_check() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(g.coverage(&bits(&[1, 0])).is_err());
    }

    #[test]
    fn isolated_nodes_are_counted() {
        // max index 5 with only one edge: nodes 2..=5 are isolated.
        let g = load_edge_list(Cursor::new("0 1\n0 5\n"), IndexBase::Zero).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 2);
    }
}
