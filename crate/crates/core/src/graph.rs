//! Directed communication topologies and their column-stochastic weights.
//!
//! Nodes are 0-based internally and 1-based in every text format. An edge
//! `src -> dst` means `src` transmits to `dst`; every node implicitly hears
//! itself, so self-loops never appear in the edge set.
//!
//! Edge-list format:
//!
//! ```text
//! # optional comments
//! n 5
//! 1 2
//! 1 3
//! ```

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::{Error, Result};

/// A directed link `src -> dst`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub src: usize,
    pub dst: usize,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src + 1, self.dst + 1)
    }
}

/// Directed graph with implicit self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    edges: Vec<Link>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a graph from 0-based `(src, dst)` pairs.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (src, dst) in edges {
            if src >= n || dst >= n {
                return Err(Error::config("edges", format!("edge {} {} out of range 1..={n}", src + 1, dst + 1)));
            }
            if src == dst {
                return Err(Error::config("edges", format!("explicit self-loop on node {}", src + 1)));
            }
            if !set.insert(Link { src, dst }) {
                return Err(Error::config("edges", format!("duplicate edge {} {}", src + 1, dst + 1)));
            }
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    fn from_sorted(n: usize, edges: Vec<Link>) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for e in &edges {
            out[e.src].push(e.dst);
            inc[e.dst].push(e.src);
        }
        for list in inc.iter_mut() {
            list.sort_unstable();
        }
        Digraph { n, edges, out, inc }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Non-self edges, sorted by `(src, dst)`. The position of an edge in
    /// this slice is its link index.
    pub fn edges(&self) -> &[Link] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out[j]
    }

    pub fn in_neighbors(&self, j: usize) -> &[usize] {
        &self.inc[j]
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out[j].len()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.inc[j].len()
    }

    pub fn link_index(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges.binary_search(&Link { src, dst }).ok()
    }

    /// True iff every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        let forward = reach_count(&self.out, 0);
        forward == self.n && reach_count(&self.inc, 0) == self.n
    }

    /// Five-node benchmark digraph (`paper5`).
    pub fn five_node() -> Self {
        let edges = [(1, 2), (1, 3), (2, 3), (2, 5), (3, 5), (4, 1), (5, 3), (5, 4)];
        Self::new(5, edges.iter().map(|&(s, d)| (s - 1, d - 1))).expect("valid preset")
    }

    /// Ten-node benchmark digraph (`paper10`).
    pub fn ten_node() -> Self {
        let edges = [
            (1, 2),
            (1, 4),
            (2, 1),
            (3, 2),
            (3, 7),
            (4, 5),
            (4, 8),
            (5, 4),
            (5, 6),
            (6, 7),
            (7, 3),
            (7, 6),
            (8, 4),
            (8, 9),
            (9, 10),
            (10, 7),
            (10, 9),
        ];
        Self::new(10, edges.iter().map(|&(s, d)| (s - 1, d - 1))).expect("valid preset")
    }
}

fn reach_count(adj: &[Vec<usize>], start: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count
}

/// Serializes to the edge-list format; `parse_graph` inverts it.
impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for e in &self.edges {
            writeln!(f, "{} {}", e.src + 1, e.dst + 1)?;
        }
        Ok(())
    }
}

/// Parses the edge-list format. Errors name the offending (1-based) line.
pub fn parse_graph(text: &str) -> Result<Digraph> {
    let mut n: Option<usize> = None;
    let mut set = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "n" {
            if n.is_some() {
                return Err(Error::parse(line_no, "duplicate `n` header"));
            }
            let count = match fields.as_slice() {
                [_, count] => count.parse::<usize>().ok().filter(|&c| c > 0),
                _ => None,
            };
            n = Some(count.ok_or_else(|| Error::parse(line_no, "expected `n <count>` with count >= 1"))?);
            continue;
        }
        let count = n.ok_or_else(|| Error::parse(line_no, "edge before `n <count>` header"))?;
        let (src, dst) = match fields.as_slice() {
            [a, b] => match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Err(Error::parse(line_no, format!("malformed edge `{line}`"))),
            },
            _ => return Err(Error::parse(line_no, format!("malformed edge `{line}`"))),
        };
        if src == 0 || dst == 0 || src > count || dst > count {
            return Err(Error::parse(line_no, format!("node index out of range 1..={count}")));
        }
        if src == dst {
            return Err(Error::parse(line_no, "explicit self-loop (self-loops are implicit)"));
        }
        if !set.insert(Link { src: src - 1, dst: dst - 1 }) {
            return Err(Error::parse(line_no, format!("duplicate edge {src} {dst}")));
        }
    }
    let n = n.ok_or_else(|| Error::parse(1, "missing `n <count>` header"))?;
    Ok(Digraph::from_sorted(n, set.into_iter().collect()))
}

/// Column-stochastic weights: entry `(l, j)` is the share node `j` sends
/// to node `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Weight node `j` keeps for itself.
    pub fn self_weight(&self, j: usize) -> f64 {
        self.get(j, j)
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.n).map(|row| self.get(row, col)).sum()
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Uniform out-weights: every node splits its mass equally among itself
/// and its out-neighbors, `p_lj = 1 / (1 + d_j^+)`.
pub fn assign_weights(g: &Digraph) -> WeightMatrix {
    let n = g.node_count();
    let mut entries = vec![0.0; n * n];
    for j in 0..n {
        let w = 1.0 / (1.0 + g.out_degree(j) as f64);
        entries[j * n + j] = w;
        for &l in g.out_neighbors(j) {
            entries[l * n + j] = w;
        }
    }
    WeightMatrix { n, entries }
}
