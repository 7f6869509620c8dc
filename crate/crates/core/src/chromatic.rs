//! Edge coloring through matchings of an incidence hypergraph.
//!
//! H is first embedded into a near-regular host H'. Each edge e of H' and
//! color slot i in 0..D give an edge {e} + {v^i : v in e} of the (k+1)-uniform
//! hypergraph H_0. A matching of H_0 is a proper partial D-coloring of H'
//! because two edges of H' that share a vertex v compete for the same v^i.
//! The edges left uncolored are finished greedily with fresh colors.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{self, PipelineConfig, PipelineError, PipelineParams, PipelineReport, SimplifyStrategy};
use crate::generators::{self, EmbedConfig, GeneratorError, DEFAULT_N1};
use crate::hypergraph::{EdgeId, Hypergraph, HypergraphBuilder, HypergraphError, VertexId};
use crate::nibble::CSV_HEADER_COMMENT;
use crate::rng;

/// Largest edge id accepted by the coloring CSV reader.
pub const MAX_CSV_EDGES: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum ChromaticError {
    #[error("g(n) needs n = 1 or 3 mod 6, got {0}")]
    NotStsOrder(usize),
    #[error("H_0 edge {0} does not decode to an (edge, color) pair")]
    DecoderMiss(usize),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("embedding: {0}")]
    Embed(#[from] GeneratorError),
    #[error("matching pipeline: {0}")]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

/// Lower bound on the chromatic index of any STS(n): (n+1)/2 for n = 1 mod 6
/// and (n-1)/2 for n = 3 mod 6.
pub fn g_lower_bound(n: usize) -> Result<usize, ChromaticError> {
    match n % 6 {
        1 => Ok(n.div_ceil(2)),
        3 => Ok((n - 1) / 2),
        _ => Err(ChromaticError::NotStsOrder(n)),
    }
}

/// Possibly partial edge coloring; colors are dense indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeColoring {
    colors: Vec<Option<u32>>,
}

impl EdgeColoring {
    pub fn uncolored(num_edges: usize) -> Self {
        EdgeColoring { colors: vec![None; num_edges] }
    }

    pub fn num_edges(&self) -> usize {
        self.colors.len()
    }

    pub fn color(&self, e: EdgeId) -> Option<u32> {
        self.colors[e]
    }

    pub fn set(&mut self, e: EdgeId, color: u32) {
        self.colors[e] = Some(color);
    }

    pub fn colored_count(&self) -> usize {
        self.colors.iter().flatten().count()
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    pub fn max_color(&self) -> Option<u32> {
        self.colors.iter().flatten().copied().max()
    }

    /// Number of distinct colors in use.
    pub fn palette_size(&self) -> usize {
        let mut used: Vec<u32> = self.colors.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        used.len()
    }

    /// Keeps the first `num_edges` entries.
    pub fn truncated(&self, num_edges: usize) -> Self {
        EdgeColoring { colors: self.colors[..num_edges.min(self.colors.len())].to_vec() }
    }

    /// `edge_id,color` rows for colored edges after the versioned comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER_COMMENT}")?;
        writeln!(out, "edge_id,color")?;
        for (e, c) in self.colors.iter().enumerate() {
            if let Some(c) = c {
                writeln!(out, "{e},{c}")?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Reads a coloring written by [`EdgeColoring::write_csv`]. `num_edges`
/// fixes the length; without it the length is one past the largest id.
pub fn parse_coloring_csv(text: &str, num_edges: Option<usize>) -> Result<EdgeColoring, ChromaticError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| csv_err(&e))?.clone();
    if headers.len() != 2 || &headers[0] != "edge_id" || &headers[1] != "color" {
        return Err(ChromaticError::Csv { line: 1, msg: "expected header `edge_id,color`".into() });
    }
    let limit = num_edges.unwrap_or(MAX_CSV_EDGES);
    let mut rows: Vec<(usize, u32)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: &str| ChromaticError::Csv { line, msg: msg.to_string() };
        if rec.len() != 2 {
            return Err(bad("expected two fields"));
        }
        let e: usize = rec[0].parse().map_err(|_| bad("bad edge id"))?;
        let c: u32 = rec[1].parse().map_err(|_| bad("bad color"))?;
        if e >= limit {
            return Err(bad("edge id out of range"));
        }
        rows.push((e, c));
    }
    let len = num_edges.unwrap_or_else(|| rows.iter().map(|r| r.0 + 1).max().unwrap_or(0));
    let mut out = EdgeColoring::uncolored(len);
    for (e, c) in rows {
        if out.colors[e].is_some() {
            return Err(ChromaticError::Csv { line: 0, msg: format!("edge {e} colored twice") });
        }
        out.colors[e] = Some(c);
    }
    Ok(out)
}

fn csv_err(e: &csv::Error) -> ChromaticError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    ChromaticError::Csv { line, msg: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringAudit {
    pub proper: bool,
    pub total: bool,
    pub colored: usize,
    /// Pairs of intersecting edges sharing a color, counted per vertex.
    pub conflicts: usize,
    pub palette_size: usize,
}

/// Checks at every vertex that the colored incident edges carry distinct
/// colors.
pub fn audit_coloring(h: &Hypergraph, coloring: &EdgeColoring) -> ColoringAudit {
    let sized = coloring.num_edges() == h.num_edges();
    let mut conflicts = 0;
    let mut seen = Vec::new();
    for v in 0..h.num_vertices() {
        seen.clear();
        seen.extend(h.incident(v).iter().filter_map(|&e| coloring.colors.get(e as usize).copied().flatten()));
        seen.sort_unstable();
        conflicts += seen.windows(2).filter(|w| w[0] == w[1]).count();
    }
    ColoringAudit {
        proper: sized && conflicts == 0,
        total: sized && coloring.is_total(),
        colored: coloring.colored_count(),
        conflicts,
        palette_size: coloring.palette_size(),
    }
}

/// Id layout of H_0: edge vertices `0..m`, then color-slot vertices
/// `m + i * n + v`; H_0 edge `e * D + i` is the pair (e, i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceDecoder {
    pub num_edges: usize,
    pub num_vertices: usize,
    pub d: usize,
}

impl IncidenceDecoder {
    pub fn edge_vertex(&self, e: EdgeId) -> VertexId {
        e
    }

    pub fn slot_vertex(&self, v: VertexId, i: usize) -> VertexId {
        self.num_edges + i * self.num_vertices + v
    }

    pub fn decode_edge(&self, id: EdgeId) -> Option<(EdgeId, u32)> {
        (self.d > 0 && id < self.num_edges * self.d).then(|| (id / self.d, (id % self.d) as u32))
    }
}

/// H_0 for `hp` and `d` color slots. Every edge vertex has degree exactly `d`
/// and v^i has the degree of v.
pub fn build_incidence_hypergraph(hp: &Hypergraph, d: usize) -> Result<(Hypergraph, IncidenceDecoder), ChromaticError> {
    let k = hp.uniformity().ok_or_else(|| ChromaticError::Input("hypergraph is not uniform".into()))?;
    if hp.num_edges() > 0 && hp.max_degree() > d {
        return Err(ChromaticError::Input(format!("max degree {} exceeds D = {d}", hp.max_degree())));
    }
    let dec = IncidenceDecoder { num_edges: hp.num_edges(), num_vertices: hp.num_vertices(), d };
    let total = hp.num_vertices().checked_mul(d).and_then(|x| x.checked_add(hp.num_edges()));
    let total =
        total.filter(|&t| t <= u32::MAX as usize).ok_or_else(|| ChromaticError::Input("H_0 too large".into()))?;
    let mut b = HypergraphBuilder::new(total).uniform(k + 1);
    b.reserve(hp.num_edges() * d, k + 1);
    let mut buf = Vec::with_capacity(k + 1);
    for (e, verts) in hp.edges().enumerate() {
        for i in 0..d {
            buf.clear();
            buf.push(dec.edge_vertex(e));
            buf.extend(verts.iter().map(|&v| dec.slot_vertex(v as usize, i)));
            b.push_edge(&buf)?;
        }
    }
    Ok((b.build(), dec))
}

/// Colors edge e with i for every matched (e, i).
pub fn matching_to_partial_coloring(m0: &[EdgeId], dec: &IncidenceDecoder) -> Result<EdgeColoring, ChromaticError> {
    let mut out = EdgeColoring::uncolored(dec.num_edges);
    for &id in m0 {
        let (e, i) = dec.decode_edge(id).ok_or(ChromaticError::DecoderMiss(id))?;
        out.set(e, i);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyReport {
    pub uncolored: usize,
    /// Max degree of the subhypergraph of uncolored edges.
    pub max_uncolored_degree: usize,
    /// First fresh color; above every color of the partial coloring.
    pub fresh_base: u32,
    pub fresh_count: usize,
    /// k (Delta'' - 1) + 1, with k the largest edge size.
    pub fresh_bound: usize,
}

/// First-fit over fresh colors, in edge id order, for the edges `partial`
/// leaves uncolored.
pub fn greedy_complete(h: &Hypergraph, partial: &EdgeColoring) -> (EdgeColoring, GreedyReport) {
    let k = h.edges().map(<[u32]>::len).max().unwrap_or(0);
    let base = partial.max_color().map_or(0, |c| c + 1);
    let mut out = partial.clone();
    let todo: Vec<EdgeId> = (0..h.num_edges()).filter(|&e| partial.color(e).is_none()).collect();
    let delta2 = {
        let mut deg = vec![0usize; h.num_vertices()];
        for &e in &todo {
            for &v in h.edge(e) {
                deg[v as usize] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    };
    let mut fresh_count = 0;
    let mut taken: Vec<bool> = Vec::new();
    for &e in &todo {
        taken.clear();
        for &v in h.edge(e) {
            for &f in h.incident(v as usize) {
                if let Some(c) = out.color(f as usize).filter(|&c| c >= base) {
                    let j = (c - base) as usize;
                    if j >= taken.len() {
                        taken.resize(j + 1, false);
                    }
                    taken[j] = true;
                }
            }
        }
        let j = taken.iter().position(|&t| !t).unwrap_or(taken.len());
        fresh_count = fresh_count.max(j + 1);
        out.set(e, base + j as u32);
    }
    let report = GreedyReport {
        uncolored: todo.len(),
        max_uncolored_degree: delta2,
        fresh_base: base,
        fresh_count,
        fresh_bound: if todo.is_empty() { 0 } else { k * (delta2 - 1) + 1 },
    };
    (out, report)
}

/// eta_0 for the coloring pipeline: (k-2) / (k(k^3 + k^2 - 2k + 2)).
pub fn chromatic_eta0(k: usize) -> f64 {
    augment::eta_diamond(k + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// No vertex needed a filler, so the host is disjoint copies of H and
    /// only the copy holding H is processed.
    Lazy,
    Full,
    /// The host would exceed the size cap; H is used directly.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChromaticConfig {
    /// Target exponent; defaults to half of eta_0.
    pub eta: Option<f64>,
    pub n1: usize,
    pub max_host_vertices: usize,
    pub strategy: SimplifyStrategy,
    pub star_cap: usize,
    pub max_stages: usize,
    pub gamma_override: Option<f64>,
    pub gamma_prime_override: Option<f64>,
}

impl Default for ChromaticConfig {
    fn default() -> Self {
        ChromaticConfig {
            eta: None,
            n1: DEFAULT_N1,
            max_host_vertices: 1 << 22,
            strategy: SimplifyStrategy::default(),
            star_cap: augment::DEFAULT_STAR_CAP,
            max_stages: 10_000,
            gamma_override: None,
            gamma_prime_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromaticReport {
    pub n: usize,
    pub edges: usize,
    pub k: usize,
    pub d_declared: f64,
    pub d: usize,
    pub c: usize,
    pub eta: f64,
    pub eta0: f64,
    pub eta_prime: f64,
    pub embedding: EmbeddingMode,
    pub host_vertices: usize,
    pub host_deficiency: usize,
    pub h0_vertices: usize,
    pub h0_edges: usize,
    pub h0_codegree: usize,
    pub pipeline: PipelineReport,
    pub m0_size: usize,
    pub colored_by_matching: usize,
    pub d_used: usize,
    pub greedy: GreedyReport,
    pub palette_size: usize,
    /// D + D (D/C)^{-1/k}.
    pub baseline: f64,
    /// D + D (D/C)^{-1/k - eta}.
    pub target: f64,
    /// g(n), when the input has the parameters of an STS.
    pub g_n: Option<usize>,
    pub audit: ColoringAudit,
    pub within_fresh_bound: bool,
    pub warnings: Vec<String>,
}

impl ChromaticReport {
    pub fn passed(&self) -> bool {
        self.audit.proper
            && self.audit.total
            && self.within_fresh_bound
            && self.g_n.is_none_or(|g| self.palette_size >= g)
    }
}

fn looks_like_sts(h: &Hypergraph) -> bool {
    let n = h.num_vertices();
    h.uniformity() == Some(3) && g_lower_bound(n).is_ok() && h.num_edges() * 6 == n * (n - 1) && h.is_simple()
}

/// Proper total edge coloring of `h` with max degree at most `d_declared`
/// and codegree at most `c`.
pub fn chromatic_index_coloring(
    h: &Hypergraph,
    d_declared: f64,
    c: usize,
    cfg: &ChromaticConfig,
    seed: u64,
) -> Result<(EdgeColoring, ChromaticReport), ChromaticError> {
    let k = h.uniformity().ok_or_else(|| ChromaticError::Input("hypergraph is not uniform".into()))?;
    if k < 3 {
        return Err(ChromaticError::Input(format!("uniformity must be at least 3, got {k}")));
    }
    if !(d_declared.is_finite() && d_declared >= 1.0) {
        return Err(ChromaticError::Input(format!("D must be at least 1, got {d_declared}")));
    }
    let d = d_declared.ceil() as usize;
    let mut warnings = Vec::new();
    if d as f64 != d_declared {
        warnings.push(format!("declared D = {d_declared} rounded up to {d}"));
    }
    if h.max_degree() > d {
        return Err(ChromaticError::Input(format!("max degree {} exceeds D = {d}", h.max_degree())));
    }
    let c = c.max(1);
    if h.num_edges() > 0 && h.max_codegree() > c {
        return Err(ChromaticError::Input(format!("codegree {} exceeds C = {c}", h.max_codegree())));
    }
    let eta0 = chromatic_eta0(k);
    let eta = cfg.eta.unwrap_or(eta0 / 2.0);
    if !(eta > 0.0 && eta < eta0) {
        return Err(ChromaticError::Input(format!("eta must lie in (0, {eta0}), got {eta}")));
    }
    let eta_prime = (eta0 + eta) / 2.0;

    let needs_filler = (0..h.num_vertices()).any(|v| h.degree(v) + cfg.n1 <= d);
    let host_size = generators::embedding_copies(k, d).saturating_mul(h.num_vertices());
    let (mode, embedding) = if !needs_filler {
        (EmbeddingMode::Lazy, None)
    } else if host_size <= cfg.max_host_vertices {
        let ecfg = EmbedConfig { n1: cfg.n1, seed: rng::derive_seed(seed, 10) };
        (EmbeddingMode::Full, Some(generators::embed_into_near_regular(h, d, c, &ecfg)?))
    } else {
        warnings.push(format!("host of {host_size} vertices exceeds the cap; coloring H directly"));
        (EmbeddingMode::Skipped, None)
    };
    let hp = embedding.as_ref().map_or(h, |e| &e.host);
    let host_deficiency = d - hp.min_degree().min(d);

    let (h0, dec) = build_incidence_hypergraph(hp, d)?;
    // Copy 0 of the host is H itself, so its vertices carry the same ids.
    let tracked: Vec<Vec<VertexId>> =
        (0..h.num_vertices()).map(|v| (0..d).map(|i| dec.slot_vertex(v, i)).collect()).collect();
    let pcfg = PipelineConfig {
        params: PipelineParams { k: k + 1, epsilon: 0.25, eta: eta_prime, delta: 0.3, mu: 0.5 },
        strategy: cfg.strategy,
        star_cap: cfg.star_cap,
        track_sets: tracked,
        max_stages: cfg.max_stages,
        gamma_override: cfg.gamma_override,
        gamma_prime_override: cfg.gamma_prime_override,
        ..PipelineConfig::default()
    };
    let h0_codegree = h0.max_codegree();
    let out = augment::codegree_pipeline(&h0, h0_codegree as f64, &pcfg, rng::derive_seed(seed, 11))?;
    let partial = matching_to_partial_coloring(out.matching.edges(), &dec)?.truncated(h.num_edges());
    let colored_by_matching = partial.colored_count();
    let d_used = partial.palette_size();
    let (coloring, greedy) = greedy_complete(h, &partial);
    let audit = audit_coloring(h, &coloring);
    let palette_size = coloring.palette_size();
    let ratio = d as f64 / c as f64;
    let kf = k as f64;
    let report = ChromaticReport {
        n: h.num_vertices(),
        edges: h.num_edges(),
        k,
        d_declared,
        d,
        c,
        eta,
        eta0,
        eta_prime,
        embedding: mode,
        host_vertices: hp.num_vertices(),
        host_deficiency,
        h0_vertices: h0.num_vertices(),
        h0_edges: h0.num_edges(),
        h0_codegree,
        m0_size: out.matching.len(),
        pipeline: out.pipeline,
        colored_by_matching,
        d_used,
        within_fresh_bound: palette_size <= d + greedy.fresh_bound && greedy.fresh_count <= greedy.fresh_bound,
        greedy,
        palette_size,
        baseline: d as f64 + d as f64 * ratio.powf(-1.0 / kf),
        target: d as f64 + d as f64 * ratio.powf(-1.0 / kf - eta),
        g_n: looks_like_sts(h).then(|| g_lower_bound(h.num_vertices()).expect("checked by looks_like_sts")),
        audit,
        warnings,
    };
    Ok((coloring, report))
}
