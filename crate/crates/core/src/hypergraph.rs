//! Hypergraphs over dense vertex ids, matchings, and the plain-text exchange format.
//!
//! Edges are stored flat with each vertex list sorted ascending. A per-vertex
//! incidence index lists incident edge ids in ascending order. Multi-edges are
//! kept as repeated entries. Subhypergraphs induced by a vertex set keep the
//! original vertex ids, so stage-wise deletions can be expressed as alive masks
//! over one shared instance.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Largest vertex count accepted by [`Hypergraph::parse_text`]; the incidence
/// index is allocated up front, so untrusted headers must be bounded.
pub const MAX_TEXT_VERTICES: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("vertex {vertex} out of range for a hypergraph on {num_vertices} vertices")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },
    #[error("edge {edge} is empty")]
    EmptyEdge { edge: usize },
    #[error("edge {edge} repeats vertex {vertex}")]
    RepeatedVertex { edge: usize, vertex: usize },
    #[error("edge {edge} has {found} vertices but the hypergraph is {expected}-uniform")]
    WrongEdgeSize { edge: usize, expected: usize, found: usize },
    #[error("edge id {0} does not exist")]
    DanglingEdge(usize),
    #[error("codegree of a vertex with itself ({0}) is undefined")]
    SamePair(usize),
    #[error("vertex count {0} does not fit 32-bit ids")]
    Capacity(usize),
    #[error("edges {0} and {1} intersect, so they cannot both be in a matching")]
    NotAMatching(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error(transparent)]
    Invalid(#[from] HypergraphError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

/// Incremental constructor that validates and sorts each edge as it is pushed.
#[derive(Debug, Clone)]
pub struct HypergraphBuilder {
    num_vertices: usize,
    declared: Option<usize>,
    verts: Vec<u32>,
    offsets: Vec<usize>,
}

impl HypergraphBuilder {
    pub fn new(num_vertices: usize) -> Self {
        HypergraphBuilder { num_vertices, declared: None, verts: Vec::new(), offsets: vec![0] }
    }

    /// Fixes the edge size; edges of any other size are rejected and an
    /// edgeless result keeps `k` as its uniformity.
    pub fn uniform(mut self, k: usize) -> Self {
        self.declared = Some(k);
        self
    }

    pub fn reserve(&mut self, edges: usize, vertices_per_edge: usize) {
        self.verts.reserve(edges * vertices_per_edge);
        self.offsets.reserve(edges);
    }

    pub fn num_edges(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn push_edge(&mut self, vertices: &[usize]) -> Result<EdgeId, HypergraphError> {
        let id = self.num_edges();
        if vertices.is_empty() {
            return Err(HypergraphError::EmptyEdge { edge: id });
        }
        if let Some(k) = self.declared {
            if vertices.len() != k {
                return Err(HypergraphError::WrongEdgeSize { edge: id, expected: k, found: vertices.len() });
            }
        }
        if self.num_vertices > u32::MAX as usize {
            return Err(HypergraphError::Capacity(self.num_vertices));
        }
        let start = self.verts.len();
        for &v in vertices {
            if v >= self.num_vertices {
                self.verts.truncate(start);
                return Err(HypergraphError::VertexOutOfRange { vertex: v, num_vertices: self.num_vertices });
            }
            self.verts.push(v as u32);
        }
        let slice = &mut self.verts[start..];
        slice.sort_unstable();
        if let Some(w) = slice.windows(2).find(|w| w[0] == w[1]) {
            let vertex = w[0] as usize;
            self.verts.truncate(start);
            return Err(HypergraphError::RepeatedVertex { edge: id, vertex });
        }
        self.offsets.push(self.verts.len());
        Ok(id)
    }

    pub fn build(self) -> Hypergraph {
        let m = self.offsets.len() - 1;
        let inferred = if m == 0 {
            None
        } else {
            let k = self.offsets[1];
            self.offsets.windows(2).all(|w| w[1] - w[0] == k).then_some(k)
        };
        let uniformity = inferred.or(self.declared);
        let offsets = if inferred.is_some() { Vec::new() } else { self.offsets };
        let mut h = Hypergraph {
            num_vertices: self.num_vertices,
            num_edges: m,
            uniformity,
            verts: self.verts,
            offsets,
            inc_offsets: Vec::new(),
            inc_edges: Vec::new(),
        };
        let (inc_offsets, inc_edges) = h.incidence_index();
        h.inc_offsets = inc_offsets;
        h.inc_edges = inc_edges;
        h
    }
}

/// An immutable hypergraph with an incidence index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    num_vertices: usize,
    num_edges: usize,
    uniformity: Option<usize>,
    verts: Vec<u32>,
    // Empty when every edge has the same size; edge e then spans e*k..(e+1)*k.
    offsets: Vec<usize>,
    inc_offsets: Vec<usize>,
    inc_edges: Vec<u32>,
}

impl Hypergraph {
    /// Builds a hypergraph from explicit vertex lists; uniformity is inferred
    /// when all edges share one size.
    pub fn from_edges<E: AsRef<[usize]>>(num_vertices: usize, edges: &[E]) -> Result<Self, HypergraphError> {
        let mut b = HypergraphBuilder::new(num_vertices);
        for e in edges {
            b.push_edge(e.as_ref())?;
        }
        Ok(b.build())
    }

    pub fn empty(num_vertices: usize, uniformity: Option<usize>) -> Self {
        let b = HypergraphBuilder::new(num_vertices);
        match uniformity {
            Some(k) => b.uniform(k).build(),
            None => b.build(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn uniformity(&self) -> Option<usize> {
        self.uniformity
    }

    #[inline]
    fn span(&self, e: EdgeId) -> (usize, usize) {
        if self.offsets.is_empty() {
            let k = self.uniformity.unwrap_or(0);
            (e * k, e * k + k)
        } else {
            (self.offsets[e], self.offsets[e + 1])
        }
    }

    /// Sorted vertex list of edge `e`.
    #[inline]
    pub fn edge(&self, e: EdgeId) -> &[u32] {
        let (a, b) = self.span(e);
        &self.verts[a..b]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.num_edges).map(move |e| self.edge(e))
    }

    /// Incident edge ids of `v`, ascending.
    #[inline]
    pub fn incident(&self, v: VertexId) -> &[u32] {
        &self.inc_edges[self.inc_offsets[v]..self.inc_offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.inc_offsets[v + 1] - self.inc_offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_vertices).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.num_vertices).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn edge_contains(&self, e: EdgeId, v: VertexId) -> bool {
        self.edge(e).binary_search(&(v as u32)).is_ok()
    }

    pub fn codegree(&self, u: VertexId, v: VertexId) -> Result<usize, HypergraphError> {
        for x in [u, v] {
            if x >= self.num_vertices {
                return Err(HypergraphError::VertexOutOfRange { vertex: x, num_vertices: self.num_vertices });
            }
        }
        if u == v {
            return Err(HypergraphError::SamePair(u));
        }
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        Ok(self.incident(a).iter().filter(|&&e| self.edge_contains(e as usize, b)).count())
    }

    /// Largest pair codegree, found by counting co-occurrences within edges.
    pub fn max_codegree(&self) -> usize {
        let mut count = vec![0u32; self.num_vertices];
        let mut touched: Vec<u32> = Vec::new();
        let mut best = 0u32;
        for u in 0..self.num_vertices {
            for &e in self.incident(u) {
                for &w in self.edge(e as usize) {
                    if w as usize > u {
                        if count[w as usize] == 0 {
                            touched.push(w);
                        }
                        count[w as usize] += 1;
                    }
                }
            }
            for &w in &touched {
                best = best.max(count[w as usize]);
                count[w as usize] = 0;
            }
            touched.clear();
        }
        best as usize
    }

    /// True when two edges have identical vertex sets.
    pub fn has_duplicate_edges(&self) -> bool {
        let mut group: Vec<&[u32]> = Vec::new();
        for u in 0..self.num_vertices {
            group.clear();
            group.extend(self.incident(u).iter().map(|&e| self.edge(e as usize)).filter(|edge| edge[0] as usize == u));
            group.sort_unstable();
            if group.windows(2).any(|w| w[0] == w[1]) {
                return true;
            }
        }
        false
    }

    pub fn is_simple(&self) -> bool {
        self.max_codegree() <= 1 && !self.has_duplicate_edges()
    }

    /// Ids of edges whose vertices all satisfy `keep`.
    pub fn edges_within(&self, keep: &[bool]) -> Vec<EdgeId> {
        (0..self.num_edges).filter(|&e| self.edge(e).iter().all(|&v| keep[v as usize])).collect()
    }

    /// H[U] for the vertex set marked by `keep`; vertex ids are unchanged.
    pub fn induced_subhypergraph(&self, keep: &[bool]) -> Hypergraph {
        self.edge_subhypergraph(&self.edges_within(keep))
    }

    /// The spanning subhypergraph with the listed edges, renumbered in list order.
    pub fn edge_subhypergraph(&self, edge_ids: &[EdgeId]) -> Hypergraph {
        let mut b = HypergraphBuilder::new(self.num_vertices);
        if let Some(k) = self.uniformity {
            b = b.uniform(k);
        }
        let mut buf = Vec::new();
        for &e in edge_ids {
            buf.clear();
            buf.extend(self.edge(e).iter().map(|&v| v as usize));
            b.push_edge(&buf).expect("edges of a valid hypergraph stay valid");
        }
        b.build()
    }

    /// Number of other edges meeting edge `f`, by direct enumeration.
    pub fn intersecting_edge_count(&self, f: EdgeId) -> usize {
        let mut seen: Vec<u32> = self
            .edge(f)
            .iter()
            .flat_map(|&v| self.incident(v as usize).iter().copied())
            .filter(|&e| e as usize != f)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn verify_matching(&self, edge_ids: &[EdgeId]) -> Result<MatchingReport, HypergraphError> {
        let mut owner: Vec<u32> = vec![u32::MAX; self.num_vertices];
        let mut valid = true;
        let mut covered = 0usize;
        let mut distinct = edge_ids.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if let Some(&bad) = distinct.iter().find(|&&e| e >= self.num_edges) {
            return Err(HypergraphError::DanglingEdge(bad));
        }
        valid &= distinct.len() == edge_ids.len();
        for &e in &distinct {
            for &v in self.edge(e) {
                if owner[v as usize] != u32::MAX {
                    valid = false;
                } else {
                    owner[v as usize] = e as u32;
                    covered += 1;
                }
            }
        }
        Ok(MatchingReport { valid, size: distinct.len(), covered_count: covered })
    }

    /// Rebuilds the incidence index from the edge lists and compares.
    pub fn check_incidence(&self) -> bool {
        let (offsets, edges) = self.incidence_index();
        offsets == self.inc_offsets && edges == self.inc_edges
    }

    fn incidence_index(&self) -> (Vec<usize>, Vec<u32>) {
        let mut offsets = vec![0usize; self.num_vertices + 1];
        for &v in &self.verts {
            offsets[v as usize + 1] += 1;
        }
        for i in 0..self.num_vertices {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![0u32; self.verts.len()];
        for e in 0..self.num_edges {
            for &v in self.edge(e) {
                edges[cursor[v as usize]] = e as u32;
                cursor[v as usize] += 1;
            }
        }
        (offsets, edges)
    }

    /// Serializes as `n m k` followed by one edge per line; `k` is 0 for
    /// mixed edge sizes.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.verts.len() * 6);
        let _ = writeln!(out, "{} {} {}", self.num_vertices, self.num_edges, self.uniformity.unwrap_or(0));
        for edge in self.edges() {
            for (i, v) in edge.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text_bytes(bytes: &[u8]) -> Result<Self, ParseError> {
        Self::parse_text(std::str::from_utf8(bytes).map_err(|_| ParseError::Encoding)?)
    }

    pub fn parse_text(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| syntax(1, "missing header"))?;
        let fields = parse_usizes(header, 1)?;
        let [n, m, k] = fields[..] else {
            return Err(syntax(1, "header must be `n m k`"));
        };
        if n > MAX_TEXT_VERTICES {
            return Err(syntax(1, format!("vertex count {n} exceeds the text-format limit {MAX_TEXT_VERTICES}")));
        }
        let mut b = HypergraphBuilder::new(n);
        if k > 0 {
            b = b.uniform(k);
        }
        let mut buf = Vec::new();
        for _ in 0..m {
            let (idx, line) =
                lines.next().ok_or_else(|| syntax(b.num_edges() + 2, "fewer edge lines than declared"))?;
            buf.clear();
            buf.extend(parse_usizes(line, idx + 1)?);
            b.push_edge(&buf)?;
        }
        if let Some((idx, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(syntax(idx + 1, "more edge lines than declared"));
        }
        Ok(b.build())
    }
}

fn parse_usizes(line: &str, line_no: usize) -> Result<Vec<usize>, ParseError> {
    line.split_ascii_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| syntax(line_no, format!("bad integer `{t}`"))))
        .collect()
}

/// Reads an edge id list as written by [`Matching::to_text`]; blank and `#`
/// lines are skipped and a line may hold several ids.
pub fn parse_edge_list(text: &str) -> Result<Vec<EdgeId>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.extend(parse_usizes(line, i + 1)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchingReport {
    pub valid: bool,
    pub size: usize,
    pub covered_count: usize,
}

/// A set of pairwise disjoint edges with a covered-vertex index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    edges: Vec<EdgeId>,
    covered: Vec<bool>,
}

impl Matching {
    pub fn empty(num_vertices: usize) -> Self {
        Matching { edges: Vec::new(), covered: vec![false; num_vertices] }
    }

    pub fn from_edges(h: &Hypergraph, edge_ids: &[EdgeId]) -> Result<Self, HypergraphError> {
        let mut ids = edge_ids.to_vec();
        ids.sort_unstable();
        // Ascending insertion keeps every insert an append.
        let mut m = Matching::empty(h.num_vertices());
        for e in ids {
            m.insert(h, e)?;
        }
        Ok(m)
    }

    /// Adds `e`, rejecting it when it meets an edge already present.
    pub fn insert(&mut self, h: &Hypergraph, e: EdgeId) -> Result<(), HypergraphError> {
        if e >= h.num_edges() {
            return Err(HypergraphError::DanglingEdge(e));
        }
        if let Some(&v) = h.edge(e).iter().find(|&&v| self.covered[v as usize]) {
            let other = self.edges.iter().copied().find(|&f| h.edge_contains(f, v as usize)).unwrap_or(e);
            return Err(HypergraphError::NotAMatching(other, e));
        }
        for &v in h.edge(e) {
            self.covered[v as usize] = true;
        }
        match self.edges.binary_search(&e) {
            Ok(_) => unreachable!("a covered edge was rejected above"),
            Err(pos) => self.edges.insert(pos, e),
        }
        Ok(())
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn covers(&self, v: VertexId) -> bool {
        self.covered[v]
    }

    pub fn covered_mask(&self) -> &[bool] {
        &self.covered
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    /// One edge id per line after a comment header.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# nibble-match matching v1\n");
        for e in &self.edges {
            let _ = writeln!(out, "{e}");
        }
        out
    }
}

/// Side of a vertex in an (a, b)-partite hypergraph; right-side vertices
/// carry the index of the copy they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Part {
    Left,
    Right(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartiteTag {
    parts: Vec<Part>,
    left_per_edge: usize,
    right_per_edge: usize,
}

impl PartiteTag {
    pub fn new(parts: Vec<Part>, left_per_edge: usize, right_per_edge: usize) -> Self {
        PartiteTag { parts, left_per_edge, right_per_edge }
    }

    pub fn part(&self, v: VertexId) -> Part {
        self.parts[v]
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.left_per_edge, self.right_per_edge)
    }

    /// Every edge meets the left side in exactly `a` and the right side in
    /// exactly `b` vertices.
    pub fn check(&self, h: &Hypergraph) -> bool {
        self.parts.len() == h.num_vertices()
            && h.edges().all(|e| {
                let left = e.iter().filter(|&&v| self.parts[v as usize] == Part::Left).count();
                left == self.left_per_edge && e.len() - left == self.right_per_edge
            })
    }
}
