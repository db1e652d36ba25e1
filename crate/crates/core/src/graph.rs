//! Undirected graphs over `p` labelled vertices and the edge-sparsity prior.
//!
//! Edges are always stored in canonical `(min, max)` order. The graph keeps a
//! dense bitset for O(1) membership tests alongside sorted per-vertex neighbor
//! lists; both are updated together by every mutation.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Number of unordered vertex pairs on `p` vertices.
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// An unordered pair of distinct vertices, stored as `(min, max)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    i: usize,
    j: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        Ok(Edge {
            i: a.min(b),
            j: a.max(b),
        })
    }

    /// Smaller endpoint.
    pub fn i(&self) -> usize {
        self.i
    }

    /// Larger endpoint.
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn touches(&self, v: usize) -> bool {
        self.i == v || self.j == v
    }

    /// Position of this edge in the row-major upper triangle of a `p x p` matrix.
    pub fn index(&self, p: usize) -> usize {
        let (i, j) = (self.i, self.j);
        debug_assert!(j < p);
        i * (2 * p - i - 1) / 2 + (j - i - 1)
    }

    /// Inverse of [`Edge::index`].
    pub fn from_index(index: usize, p: usize) -> Edge {
        debug_assert!(index < pair_count(p));
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = p - i - 1;
            if index < start + row {
                return Edge {
                    i,
                    j: i + 1 + (index - start),
                };
            }
            start += row;
            i += 1;
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Iterator over all `p(p-1)/2` edges in index order.
pub fn all_edges(p: usize) -> impl Iterator<Item = Edge> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| Edge { i, j }))
}

/// Whether a toggle adds or removes its edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeMove {
    Birth,
    Death,
}

impl EdgeMove {
    /// `+1` for a birth, `-1` for a death.
    pub fn sign(self) -> i8 {
        match self {
            EdgeMove::Birth => 1,
            EdgeMove::Death => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(EdgeMove::Birth),
            -1 => Some(EdgeMove::Death),
            _ => None,
        }
    }
}

const WORD: usize = 64;

/// Simple undirected graph on vertices `0..p`.
#[derive(Clone)]
pub struct UndirectedGraph {
    p: usize,
    words: usize,
    bits: Vec<u64>,
    nbrs: Vec<Vec<usize>>,
    edge_count: usize,
}

impl UndirectedGraph {
    /// Empty graph on `p` vertices.
    pub fn empty(p: usize) -> Self {
        let words = p.div_ceil(WORD).max(1);
        UndirectedGraph {
            p,
            words,
            bits: vec![0; p * words],
            nbrs: vec![Vec::new(); p],
            edge_count: 0,
        }
    }

    pub fn complete(p: usize) -> Self {
        let mut g = Self::empty(p);
        for e in all_edges(p) {
            g.insert(e);
        }
        g
    }

    pub fn from_edges<I>(p: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(p);
        for (a, b) in edges {
            let e = g.edge(a, b)?;
            if !g.contains(e) {
                g.insert(e);
            }
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Validated edge between two vertices of this graph.
    pub fn edge(&self, a: usize, b: usize) -> Result<Edge> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        Edge::new(a, b)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.p {
            Err(Error::VertexOutOfRange {
                vertex: v,
                p: self.p,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    fn bit(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / WORD] >> (b % WORD) & 1 == 1
    }

    #[inline]
    fn flip_bit(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / WORD] ^= 1 << (b % WORD);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && a < self.p && b < self.p && self.bit(a, b)
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.bit(e.i, e.j)
    }

    /// Sorted neighbors of vertex `v`.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check_vertex(v)?;
        Ok(&self.nbrs[v])
    }

    /// Unchecked variant of [`neighbors`](Self::neighbors) for hot loops.
    #[inline]
    pub fn nbrs(&self, v: usize) -> &[usize] {
        &self.nbrs[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.nbrs[v].len()
    }

    fn insert(&mut self, e: Edge) {
        self.flip_bit(e.i, e.j);
        self.flip_bit(e.j, e.i);
        for (a, b) in [(e.i, e.j), (e.j, e.i)] {
            let list = &mut self.nbrs[a];
            let pos = list.binary_search(&b).unwrap_err();
            list.insert(pos, b);
        }
        self.edge_count += 1;
    }

    fn remove(&mut self, e: Edge) {
        self.flip_bit(e.i, e.j);
        self.flip_bit(e.j, e.i);
        for (a, b) in [(e.i, e.j), (e.j, e.i)] {
            let list = &mut self.nbrs[a];
            let pos = list.binary_search(&b).unwrap();
            list.remove(pos);
        }
        self.edge_count -= 1;
    }

    /// Flip membership of `e` in place and report what happened.
    pub fn toggle(&mut self, e: Edge) -> EdgeMove {
        assert!(e.j < self.p, "edge {e} out of range for p={}", self.p);
        if self.contains(e) {
            self.remove(e);
            EdgeMove::Death
        } else {
            self.insert(e);
            EdgeMove::Birth
        }
    }

    /// Copy of this graph with edge `(a, b)` toggled.
    pub fn toggle_edge(&self, a: usize, b: usize) -> Result<Self> {
        let e = self.edge(a, b)?;
        let mut g = self.clone();
        g.toggle(e);
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        let e = self.edge(a, b)?;
        if self.contains(e) {
            return Ok(false);
        }
        self.insert(e);
        Ok(true)
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        let e = self.edge(a, b)?;
        if !self.contains(e) {
            return Ok(false);
        }
        self.remove(e);
        Ok(true)
    }

    /// Edges in index order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nbrs.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&j| j > i)
                .map(move |&j| Edge { i, j })
        })
    }

    pub fn complement(&self) -> Self {
        let mut g = Self::empty(self.p);
        for e in all_edges(self.p) {
            if !self.contains(e) {
                g.insert(e);
            }
        }
        g
    }

    /// Apply a vertex permutation: vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: perm.len(),
            });
        }
        Self::from_edges(self.p, self.edges().map(|e| (perm[e.i], perm[e.j])))
    }

    /// Write the edge-list text format: `p=<count>` header then one `i j` per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p={}", self.p)?;
        for e in self.edges() {
            writeln!(out, "{} {}", e.i, e.j)?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parse the edge-list text format. Blank lines and `#` comments are skipped.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut graph: Option<UndirectedGraph> = None;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match graph.as_mut() {
                None => {
                    let p = line
                        .strip_prefix("p=")
                        .and_then(|v| v.trim().parse::<usize>().ok())
                        .ok_or_else(|| Error::parse(lineno, "expected header `p=<count>`"))?;
                    graph = Some(UndirectedGraph::empty(p));
                }
                Some(g) => {
                    let mut fields = line.split_whitespace();
                    let (a, b) = match (fields.next(), fields.next(), fields.next()) {
                        (Some(a), Some(b), None) => (a, b),
                        _ => return Err(Error::parse(lineno, "expected `i j`")),
                    };
                    let a: usize = a
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad vertex `{a}`")))?;
                    let b: usize = b
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad vertex `{b}`")))?;
                    let e = g
                        .edge(a, b)
                        .map_err(|err| Error::parse(lineno, err.to_string()))?;
                    if g.contains(e) {
                        return Err(Error::parse(lineno, format!("duplicate edge {e}")));
                    }
                    g.insert(e);
                }
            }
        }
        graph.ok_or_else(|| Error::parse(0, "missing `p=<count>` header"))
    }

    /// Membership bitmap over edge indices.
    pub fn edge_mask(&self) -> Vec<bool> {
        all_edges(self.p).map(|e| self.contains(e)).collect()
    }
}

impl PartialEq for UndirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.bits == other.bits
    }
}

impl Eq for UndirectedGraph {}

impl Hash for UndirectedGraph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.p.hash(state);
        self.bits.hash(state);
    }
}

impl fmt::Debug for UndirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UndirectedGraph")
            .field("p", &self.p)
            .field("edges", &self.edges().map(|e| e.endpoints()).collect::<Vec<_>>())
            .finish()
    }
}

/// Prior on graphs proportional to `(beta / (1 - beta))^|E|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphPrior {
    beta: f64,
    log_odds: f64,
}

impl GraphPrior {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "edge inclusion probability must lie in (0, 1), got {beta}"
            )));
        }
        Ok(GraphPrior {
            beta,
            log_odds: (beta / (1.0 - beta)).ln(),
        })
    }

    /// The uniform prior over graphs (`beta = 1/2`).
    pub fn uniform() -> Self {
        GraphPrior {
            beta: 0.5,
            log_odds: 0.0,
        }
    }

    /// `beta = 1 / C(p, 2)`, a common sparse default.
    pub fn sparse_default(p: usize) -> Result<Self> {
        let pairs = pair_count(p);
        if pairs < 2 {
            return Err(Error::InvalidParameter(format!(
                "sparse default needs at least 3 vertices, got {p}"
            )));
        }
        Self::new(1.0 / pairs as f64)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `log(beta / (1 - beta))`.
    pub fn log_odds(&self) -> f64 {
        self.log_odds
    }

    /// Log prior ratio `log Pr(G*) - log Pr(G)` for a single birth or death.
    pub fn log_prior_ratio(&self, mv: EdgeMove) -> f64 {
        match mv {
            EdgeMove::Birth => self.log_odds,
            EdgeMove::Death => -self.log_odds,
        }
    }

    /// Unnormalized log prior of a graph.
    pub fn log_prior(&self, g: &UndirectedGraph) -> f64 {
        g.edge_count() as f64 * self.log_odds
    }
}
