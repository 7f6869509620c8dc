//! Codegree reduction: from a near-regular multi-hypergraph with codegree at
//! most C to a simple spanning subhypergraph with controlled degrees.
//!
//! The chain is color-split, thin, conflict-graph regularization, and
//! isolated selection. Each randomized stage is Las Vegas: sample, audit the
//! codegree and per-vertex degree band, retry within a budget. Every stage
//! only deletes edges, and all selections are reported as ids of the input.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{EdgeId, Hypergraph};
use crate::rng::{self, Purpose, StreamRng};

pub const DEFAULT_RETRIES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplifyError {
    #[error("regularization degree {0} must be even")]
    OddDegree(usize),
    #[error("regularization degree {s} must exceed the maximum conflict degree {max_degree}")]
    DegreeTooSmall { s: usize, max_degree: usize },
    #[error("no {s}-regular supergraph on {n} vertices: {reason}")]
    Infeasible { s: usize, n: usize, reason: String },
    #[error("input hypergraph is not uniform")]
    NotUniform,
    #[error("delta must lie in (0, 1/3), got {0}")]
    BadDelta(f64),
    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<SimplifyError> },
}

impl SimplifyError {
    /// True for regularization failures caused by the instance being too small.
    pub fn is_infeasible(&self) -> bool {
        match self {
            SimplifyError::Infeasible { .. } | SimplifyError::DegreeTooSmall { .. } => true,
            SimplifyError::Stage { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplifyConfig {
    pub delta: f64,
    pub retries: usize,
    /// Multiplier applied to every probabilistic band half-width.
    pub band_slack: f64,
    pub seed: u64,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        SimplifyConfig { delta: 0.3, retries: DEFAULT_RETRIES, band_slack: 2.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAudit {
    pub stage: String,
    pub attempts: usize,
    pub passed: bool,
    pub edges_before: usize,
    pub edges_after: usize,
    pub codegree_before: usize,
    pub codegree_after: usize,
    pub codegree_bound: usize,
    pub degree_min: usize,
    pub degree_max: usize,
    /// Nominal degree the stage aims at, before per-vertex scaling.
    pub band_target: f64,
    /// Vertices whose degree left the slack-widened band.
    pub band_violations: usize,
}

/// Outcome of one randomized selection stage: kept ids refer to the stage input.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kept: Vec<EdgeId>,
    pub audit: StageAudit,
}

fn log_d(d: f64) -> f64 {
    d.max(std::f64::consts::E).ln()
}

struct Candidate {
    kept: Vec<EdgeId>,
    codegree: usize,
    violations: usize,
    degrees: Vec<usize>,
}

impl Candidate {
    fn score(&self, bound: usize) -> (bool, usize, usize) {
        (self.codegree > bound, self.violations, self.codegree)
    }
}

fn evaluate(h: &Hypergraph, kept: Vec<EdgeId>, band: &dyn Fn(usize) -> (f64, f64), keep_codegree: bool) -> Candidate {
    let sub = h.edge_subhypergraph(&kept);
    let degrees = sub.degrees();
    let violations = (0..h.num_vertices())
        .filter(|&v| {
            let (centre, half) = band(h.degree(v));
            let d = degrees[v] as f64;
            d < centre - half || d > centre + half
        })
        .count();
    let codegree = if keep_codegree { sub.max_codegree() } else { 0 };
    Candidate { kept, codegree, violations, degrees }
}

fn finish(
    stage: &str,
    h: &Hypergraph,
    best: Candidate,
    attempts: usize,
    bound: usize,
    target: f64,
    codegree_before: usize,
) -> Selection {
    let live: Vec<usize> = (0..h.num_vertices()).filter(|&v| h.degree(v) > 0).map(|v| best.degrees[v]).collect();
    let audit = StageAudit {
        stage: stage.to_string(),
        attempts,
        passed: best.codegree <= bound && best.violations == 0,
        edges_before: h.num_edges(),
        edges_after: best.kept.len(),
        codegree_before,
        codegree_after: best.codegree,
        codegree_bound: bound,
        degree_min: live.iter().copied().min().unwrap_or(0),
        degree_max: live.iter().copied().max().unwrap_or(0),
        band_target: target,
        band_violations: best.violations,
    };
    Selection { kept: best.kept, audit }
}

/// Random `classes`-coloring of the edges; the first class meeting the codegree
/// bound and degree band wins. Exhausting the budget returns the best class
/// seen with `passed = false`.
#[allow(clippy::too_many_arguments)]
fn class_split(
    stage: &'static str,
    h: &Hypergraph,
    classes: usize,
    codegree_bound: usize,
    d: f64,
    slack: f64,
    retries: usize,
    seed: u64,
    stage_index: u64,
) -> Selection {
    let codegree_before = h.max_codegree();
    let all: Vec<EdgeId> = (0..h.num_edges()).collect();
    let scale = classes as f64;
    let ln_d = log_d(d);
    let band = move |deg: usize| {
        let centre = deg as f64 / scale;
        (centre, slack * 4.0 * (centre * ln_d).sqrt())
    };
    if classes <= 1 {
        let c = evaluate(h, all, &band, true);
        return finish(stage, h, c, 0, codegree_bound, d, codegree_before);
    }
    let mut best: Option<Candidate> = None;
    for attempt in 0..retries.max(1) {
        let mut rng = rng::stream(seed, Purpose::Simplify, stage_index * 100_000 + attempt as u64);
        let mut buckets: Vec<Vec<EdgeId>> = vec![Vec::new(); classes];
        for e in 0..h.num_edges() {
            buckets[rng.gen_range(0..classes)].push(e);
        }
        for bucket in buckets {
            let c = evaluate(h, bucket, &band, true);
            let improves = best.as_ref().is_none_or(|b| c.score(codegree_bound) < b.score(codegree_bound));
            if improves {
                best = Some(c);
            }
            let b = best.as_ref().expect("set above");
            if b.codegree <= codegree_bound && b.violations == 0 {
                return finish(
                    stage,
                    h,
                    best.expect("set above"),
                    attempt + 1,
                    codegree_bound,
                    d / scale,
                    codegree_before,
                );
            }
        }
    }
    finish(
        stage,
        h,
        best.expect("at least one attempt ran"),
        retries.max(1),
        codegree_bound,
        d / scale,
        codegree_before,
    )
}

/// Keeps one random class out of `ceil(c)` so the codegree drops to about
/// log(D/C). `d` is the nominal degree D.
pub fn color_split(h: &Hypergraph, c: f64, d: f64, cfg: &SimplifyConfig) -> Selection {
    let classes = c.ceil().max(1.0) as usize;
    let bound = (d / c.max(1.0)).max(1.0).ln().ceil().max(1.0) as usize;
    class_split("color_split", h, classes, bound, d, cfg.band_slack, cfg.retries, cfg.seed, 1)
}

/// Keeps one random class out of `ceil(d^delta)` so the codegree drops to
/// about 2/delta.
pub fn thin(h: &Hypergraph, delta: f64, d: f64, cfg: &SimplifyConfig) -> Selection {
    let classes = d.max(1.0).powf(delta).ceil().max(1.0) as usize;
    let bound = (2.0 / delta).ceil() as usize;
    class_split("thin", h, classes, bound, d, cfg.band_slack, cfg.retries, cfg.seed, 2)
}

/// Graph on the edges of a hypergraph; two edges are adjacent when they share
/// at least two vertices. Adjacency lists are sorted and symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adj: Vec<Vec<u32>>,
}

impl ConflictGraph {
    pub fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        ConflictGraph { adj }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn is_regular(&self, s: usize) -> bool {
        self.adj.iter().all(|l| l.len() == s)
    }

    /// Symmetric, loop-free, and duplicate-free.
    pub fn is_well_formed(&self) -> bool {
        self.adj.iter().enumerate().all(|(u, l)| {
            l.windows(2).all(|w| w[0] < w[1]) && l.iter().all(|&v| v as usize != u && self.has_edge(v as usize, u))
        })
    }

    /// Every edge of `other` is an edge of `self`; `self` may carry extra
    /// vertices after the shared ones.
    pub fn contains(&self, other: &ConflictGraph) -> bool {
        self.num_vertices() >= other.num_vertices()
            && other.adj.iter().enumerate().all(|(u, l)| l.iter().all(|&v| self.has_edge(u, v as usize)))
    }

    /// The same graph with `extra` isolated vertices appended.
    pub fn with_isolated(&self, extra: usize) -> Self {
        let mut adj = self.adj.clone();
        adj.resize(adj.len() + extra, Vec::new());
        ConflictGraph { adj }
    }
}

fn pair_key(u: u32, v: u32) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

pub fn build_conflict_graph(h: &Hypergraph) -> ConflictGraph {
    let mut by_pair: HashMap<u64, Vec<u32>> = HashMap::new();
    for (e, edge) in h.edges().enumerate() {
        for (i, &u) in edge.iter().enumerate() {
            for &w in &edge[i + 1..] {
                by_pair.entry(pair_key(u, w)).or_default().push(e as u32);
            }
        }
    }
    let mut adj = vec![Vec::new(); h.num_edges()];
    let mut keys: Vec<_> = by_pair.into_iter().filter(|(_, l)| l.len() > 1).collect();
    keys.sort_unstable_by_key(|(k, _)| *k);
    for (_, list) in keys {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                if a != b {
                    adj[a as usize].push(b);
                    adj[b as usize].push(a);
                }
            }
        }
    }
    ConflictGraph::from_adjacency(adj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizeAudit {
    pub s: usize,
    pub vertices: usize,
    pub max_degree_before: usize,
    /// |V(G)| > 2 Delta(G)^3, under which a regular supergraph always exists.
    pub hypothesis_ok: bool,
    /// Isolated vertices appended before regularizing; they stand for no edge.
    pub dummies: usize,
    pub added_edges: usize,
    pub switches: usize,
}

struct AddedEdges {
    list: Vec<(u32, u32)>,
    pos: HashMap<u64, usize>,
}

impl AddedEdges {
    fn insert(&mut self, u: u32, v: u32) {
        self.pos.insert(pair_key(u, v), self.list.len());
        self.list.push((u, v));
    }

    fn remove_at(&mut self, i: usize) -> (u32, u32) {
        let (u, v) = self.list.swap_remove(i);
        self.pos.remove(&pair_key(u, v));
        if i < self.list.len() {
            let (a, b) = self.list[i];
            self.pos.insert(pair_key(a, b), i);
        }
        (u, v)
    }
}

/// An s-regular supergraph of `g` on the same vertex set. Free degree is first
/// paired at random; unpaired stubs are then placed by switching an added
/// edge {x, y} into {u, x} and {v, y}. Original edges are never removed.
pub fn regularize(g: &ConflictGraph, s: usize, seed: u64) -> Result<(ConflictGraph, RegularizeAudit), SimplifyError> {
    let n = g.num_vertices();
    let max_degree = g.max_degree();
    if s % 2 == 1 {
        return Err(SimplifyError::OddDegree(s));
    }
    if s < max_degree {
        return Err(SimplifyError::DegreeTooSmall { s, max_degree });
    }
    if s > 0 && n <= s {
        return Err(SimplifyError::Infeasible { s, n, reason: "needs more than s vertices".into() });
    }
    let mut rng = rng::stream(seed, Purpose::Simplify, 3 * 100_000);
    let mut present: HashSet<u64> = HashSet::with_capacity(n * s / 2 + 1);
    for (u, l) in g.adj.iter().enumerate() {
        for &v in l {
            present.insert(pair_key(u as u32, v));
        }
    }
    let mut deficit: Vec<usize> = g.adj.iter().map(|l| s - l.len()).collect();
    let mut added = AddedEdges { list: Vec::new(), pos: HashMap::new() };
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, deficit[v as usize])).collect();

    for _ in 0..64 {
        if stubs.len() < 2 {
            break;
        }
        stubs.shuffle(&mut rng);
        let mut rest = Vec::new();
        let mut progress = false;
        for pair in stubs.chunks(2) {
            if pair.len() < 2 {
                rest.extend_from_slice(pair);
                continue;
            }
            let (u, v) = (pair[0], pair[1]);
            if u != v && !present.contains(&pair_key(u, v)) {
                present.insert(pair_key(u, v));
                added.insert(u, v);
                deficit[u as usize] -= 1;
                deficit[v as usize] -= 1;
                progress = true;
            } else {
                rest.extend_from_slice(pair);
            }
        }
        stubs = rest;
        if !progress {
            break;
        }
    }

    let mut switches = 0usize;
    let budget = 1000 * (stubs.len() + 1) + 100 * n;
    let mut tries = 0usize;
    while stubs.len() >= 2 {
        tries += 1;
        if tries > budget || added.list.is_empty() {
            return Err(SimplifyError::Infeasible { s, n, reason: format!("{} unplaced degree stubs", stubs.len()) });
        }
        let len = stubs.len();
        let a = rng.gen_range(0..len);
        stubs.swap(a, len - 1);
        let b = rng.gen_range(0..len - 1);
        stubs.swap(b, len - 2);
        let (u, v) = (stubs[len - 2], stubs[len - 1]);
        if u != v && !present.contains(&pair_key(u, v)) {
            present.insert(pair_key(u, v));
            added.insert(u, v);
            stubs.truncate(stubs.len() - 2);
            continue;
        }
        let i = rng.gen_range(0..added.list.len());
        let (mut x, mut y) = added.list[i];
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut x, &mut y);
        }
        if x == u || x == v || y == u || y == v {
            continue;
        }
        if present.contains(&pair_key(u, x)) || present.contains(&pair_key(v, y)) {
            continue;
        }
        added.remove_at(i);
        present.remove(&pair_key(x, y));
        present.insert(pair_key(u, x));
        present.insert(pair_key(v, y));
        added.insert(u, x);
        added.insert(v, y);
        stubs.truncate(stubs.len() - 2);
        switches += 1;
        // Odd leftovers are impossible: the stub total is even because s is.
    }
    debug_assert!(stubs.is_empty());

    let mut adj = g.adj.clone();
    for &(u, v) in &added.list {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    let out = ConflictGraph::from_adjacency(adj);
    let audit = RegularizeAudit {
        s,
        vertices: n,
        max_degree_before: max_degree,
        hypothesis_ok: (n as f64) > 2.0 * (max_degree as f64).powi(3),
        dummies: 0,
        added_edges: added.list.len(),
        switches,
    };
    Ok((out, audit))
}

/// [`regularize`] after padding `g` with isolated dummy vertices up to
/// 2s + 2 vertices when it has at most s of them. Dummy vertices only
/// contribute coin flips to the isolation step, so every real vertex still
/// has exactly s neighbors.
pub fn regularize_padded(
    g: &ConflictGraph,
    s: usize,
    seed: u64,
) -> Result<(ConflictGraph, RegularizeAudit), SimplifyError> {
    let n = g.num_vertices();
    if n == 0 || n > s {
        return regularize(g, s, seed);
    }
    let dummies = 2 * s + 2 - n;
    let (out, mut audit) = regularize(&g.with_isolated(dummies), s, seed)?;
    audit.vertices = n;
    audit.dummies = dummies;
    Ok((out, audit))
}

/// Keeps each edge with probability 1/T and returns the kept edges that have
/// no kept neighbor in `g_reg`. Degrees are audited against
/// (d/T)(1-1/T)^s +- 4 s sqrt((s+1) d/T log D).
pub fn isolate_select(h: &Hypergraph, g_reg: &ConflictGraph, t: usize, d: f64, cfg: &SimplifyConfig) -> Selection {
    assert!(g_reg.num_vertices() >= h.num_edges(), "conflict graph must contain the edges of h");
    let slots = g_reg.num_vertices();
    let t = t.max(1);
    let s = g_reg.max_degree();
    let keep_p = 1.0 / t as f64;
    let survive = (1.0 - keep_p).powi(s as i32);
    let ln_d = log_d(d);
    let slack = cfg.band_slack;
    let band = move |deg: usize| {
        let base = deg as f64 * keep_p;
        (base * survive, slack * 4.0 * s as f64 * ((s as f64 + 1.0) * base * ln_d).sqrt())
    };
    let codegree_before = h.max_codegree();
    let mut best: Option<Candidate> = None;
    let attempts = cfg.retries.max(1);
    for attempt in 0..attempts {
        let mut rng = rng::stream(cfg.seed, Purpose::Simplify, 4 * 100_000 + attempt as u64);
        let mut kept = vec![false; slots];
        rng::for_each_bernoulli(slots, keep_p, &mut rng, |e| kept[e] = true);
        let chosen: Vec<EdgeId> =
            (0..h.num_edges()).filter(|&e| kept[e] && g_reg.neighbors(e).iter().all(|&f| !kept[f as usize])).collect();
        let c = evaluate(h, chosen, &band, true);
        if best.as_ref().is_none_or(|b| c.score(1) < b.score(1)) {
            best = Some(c);
        }
        let b = best.as_ref().expect("set above");
        if b.violations == 0 && b.codegree <= 1 {
            return finish(
                "isolate_select",
                h,
                best.expect("set above"),
                attempt + 1,
                1,
                d * keep_p * survive,
                codegree_before,
            );
        }
    }
    finish("isolate_select", h, best.expect("at least one attempt"), attempts, 1, d * keep_p * survive, codegree_before)
}

/// The even integer in the open window (1 + 2 C(k,2)/delta, 3 + 2 C(k,2)/delta);
/// when the lower end is itself even the upper end is returned.
pub fn regular_degree(k: usize, delta: f64) -> usize {
    let lo = 1.0 + (k * (k - 1)) as f64 / delta;
    let s = (lo / 2.0).floor() as usize * 2 + 2;
    if (s as f64 - lo).abs() < 1e-9 {
        s + 2
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifyReport {
    pub k: usize,
    pub d: f64,
    pub c: f64,
    /// C after raising it to log D when it was smaller.
    pub c_effective: f64,
    pub delta: f64,
    pub s: usize,
    pub t: usize,
    pub stages: Vec<StageAudit>,
    pub regularize: Option<RegularizeAudit>,
    pub output_edges: usize,
    pub is_simple: bool,
    pub has_duplicates: bool,
    pub warnings: Vec<String>,
}

impl SimplifyReport {
    pub fn bands_passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }

    /// Degree bands only; codegree targets are ignored.
    pub fn degree_bands_passed(&self) -> bool {
        self.stages.iter().all(|s| s.band_violations == 0)
    }
}

#[derive(Debug, Clone)]
pub struct SimplifyOutcome {
    pub hypergraph: Hypergraph,
    /// Ids in the input hypergraph of the surviving edges, ascending.
    pub kept: Vec<EdgeId>,
    pub report: SimplifyReport,
}

fn tag(stage: &'static str) -> impl FnOnce(SimplifyError) -> SimplifyError {
    move |e| SimplifyError::Stage { stage, source: Box::new(e) }
}

/// Mean degree over vertices that lie in at least one edge.
pub fn nominal_degree(h: &Hypergraph) -> f64 {
    let live: Vec<usize> = h.degrees().into_iter().filter(|&d| d > 0).collect();
    if live.is_empty() {
        0.0
    } else {
        live.iter().sum::<usize>() as f64 / live.len() as f64
    }
}

/// Runs the full chain on `h` with codegree bound `c`. `d` overrides the
/// nominal degree (mean over non-isolated vertices).
pub fn simple_subhypergraph(
    h: &Hypergraph,
    c: f64,
    d: Option<f64>,
    cfg: &SimplifyConfig,
) -> Result<SimplifyOutcome, SimplifyError> {
    let k = h.uniformity().ok_or(SimplifyError::NotUniform)?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0 / 3.0) {
        return Err(SimplifyError::BadDelta(cfg.delta));
    }
    let d = d.unwrap_or_else(|| nominal_degree(h)).max(1.0);
    let mut warnings = Vec::new();
    let c_eff = c.max(d.ln()).max(1.0);
    if c_eff > c {
        warnings.push(format!("codegree bound raised from {c} to log D = {c_eff:.3}"));
    }
    if c_eff > d.powf(1.0 - cfg.delta) {
        warnings.push(format!("C = {c_eff:.3} exceeds D^(1-delta) = {:.3}", d.powf(1.0 - cfg.delta)));
    }

    let split = color_split(h, c_eff, d, cfg);
    let mut ids = split.kept.clone();
    let h1 = h.edge_subhypergraph(&ids);
    let d1 = d / c_eff;

    let thinned = thin(&h1, cfg.delta, d1, cfg);
    ids = thinned.kept.iter().map(|&e| ids[e]).collect();
    let h2 = h.edge_subhypergraph(&ids);

    let s = regular_degree(k, cfg.delta);
    let t = (d / c_eff).ln().ceil().max(1.0) as usize;
    let d2 = d1.powf(1.0 - cfg.delta);
    if (s as f64) * d2.max(1.0).ln().sqrt() > t as f64 {
        warnings.push(format!("T = {t} is below s sqrt(log D) for s = {s}"));
    }

    let g = build_conflict_graph(&h2);
    let (g_reg, reg_audit) = regularize_padded(&g, s, rng::derive_seed(cfg.seed, 3)).map_err(tag("regularize"))?;
    if !reg_audit.hypothesis_ok {
        warnings.push(format!(
            "conflict graph has {} vertices, not more than 2 Delta^3 = {}",
            reg_audit.vertices,
            2 * reg_audit.max_degree_before.pow(3)
        ));
    }
    let picked = isolate_select(&h2, &g_reg, t, d2, cfg);
    let mut kept: Vec<EdgeId> = picked.kept.iter().map(|&e| ids[e]).collect();
    kept.sort_unstable();
    let out = h.edge_subhypergraph(&kept);
    let report = SimplifyReport {
        k,
        d,
        c,
        c_effective: c_eff,
        delta: cfg.delta,
        s,
        t,
        stages: vec![split.audit, thinned.audit, picked.audit],
        regularize: Some(reg_audit),
        output_edges: kept.len(),
        is_simple: out.is_simple(),
        has_duplicates: out.has_duplicate_edges(),
        warnings,
    };
    Ok(SimplifyOutcome { hypergraph: out, kept, report })
}

/// A random maximal conflict-free edge set: edges are visited in random order
/// and kept when they share at most one vertex with every kept edge.
pub fn greedy_conflict_free(h: &Hypergraph, seed: u64) -> Vec<EdgeId> {
    let g = build_conflict_graph(h);
    let mut order: Vec<EdgeId> = (0..h.num_edges()).collect();
    let mut rng: StreamRng = rng::stream(seed, Purpose::Simplify, 5 * 100_000);
    order.shuffle(&mut rng);
    let mut kept = vec![false; h.num_edges()];
    for e in order {
        if g.neighbors(e).iter().all(|&f| !kept[f as usize]) {
            kept[e] = true;
        }
    }
    (0..h.num_edges()).filter(|&e| kept[e]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_regular_simple;

    fn duplicated(h: &Hypergraph, times: usize) -> Hypergraph {
        let mut edges = Vec::new();
        for e in h.edges() {
            for _ in 0..times {
                edges.push(e.iter().map(|&v| v as usize).collect::<Vec<_>>());
            }
        }
        Hypergraph::from_edges(h.num_vertices(), &edges).unwrap()
    }

    #[test]
    fn single_class_is_identity() {
        let h = random_regular_simple(3, 6, 200, 1, 1).unwrap();
        let sel = color_split(&h, 1.0, 6.0, &SimplifyConfig::default());
        assert_eq!(sel.kept, (0..h.num_edges()).collect::<Vec<_>>());
        assert_eq!(sel.audit.attempts, 0);
        let sel = thin(&h, 1e-6, 1.0, &SimplifyConfig::default());
        assert_eq!(sel.kept.len(), h.num_edges());
    }

    #[test]
    fn color_split_lowers_codegree() {
        let base = random_regular_simple(3, 200, 700, 2, 2).unwrap();
        let h = duplicated(&base, 10);
        assert_eq!(h.max_codegree(), 10);
        let sel = color_split(&h, 10.0, 2000.0, &SimplifyConfig::default());
        let out = h.edge_subhypergraph(&sel.kept);
        assert!(out.max_codegree() <= (200f64).ln().ceil() as usize);
        assert!(sel.audit.passed, "{:?}", sel.audit);
    }

    #[test]
    fn regular_degree_window() {
        // k=4, delta=0.3: window (41, 43).
        assert_eq!(regular_degree(4, 0.3), 42);
        // k=3, delta=0.25: window (25, 27).
        assert_eq!(regular_degree(3, 0.25), 26);
        // k=3, delta=0.2: window (31, 33).
        assert_eq!(regular_degree(3, 0.2), 32);
    }

    #[test]
    fn regularize_edgeless_and_sparse() {
        let g = ConflictGraph::from_adjacency(vec![Vec::new(); 50]);
        let (r, audit) = regularize(&g, 2, 1).unwrap();
        assert!(r.is_regular(2) && r.is_well_formed());
        assert_eq!(audit.added_edges, 50);

        let mut adj = vec![Vec::new(); 400];
        for v in 0..400u32 {
            for off in [1u32, 7, 31] {
                if v % 2 == 0 {
                    let w = (v + off) % 400;
                    adj[v as usize].push(w);
                    adj[w as usize].push(v);
                }
            }
        }
        let g = ConflictGraph::from_adjacency(adj);
        assert!(g.max_degree() <= 6);
        let (r, _) = regularize(&g, 6, 9).unwrap();
        assert!(r.is_regular(6) && r.is_well_formed() && r.contains(&g));
    }

    #[test]
    fn regularize_rejects_bad_inputs() {
        let g = ConflictGraph::from_adjacency(vec![Vec::new(); 10]);
        assert_eq!(regularize(&g, 3, 0).unwrap_err(), SimplifyError::OddDegree(3));
        assert!(regularize(&g, 10, 0).unwrap_err().is_infeasible());
    }

    #[test]
    fn padding_makes_small_graphs_regular() {
        let g = ConflictGraph::from_adjacency(vec![vec![1], vec![0, 2], vec![1], vec![]]);
        let (r, audit) = regularize_padded(&g, 6, 2).unwrap();
        assert_eq!(audit.dummies, 14 - 4);
        assert_eq!(r.num_vertices(), 14);
        assert!(r.is_regular(6) && r.is_well_formed() && r.contains(&g));
        // Large enough graphs are left alone.
        let big = ConflictGraph::from_adjacency(vec![Vec::new(); 20]);
        assert_eq!(regularize_padded(&big, 6, 2).unwrap().1.dummies, 0);
    }

    #[test]
    fn conflict_graph_marks_pairs_sharing_two_vertices() {
        let h = Hypergraph::from_edges(6, &[[0, 1, 2], [0, 1, 3], [2, 4, 5], [0, 1, 2]]).unwrap();
        let g = build_conflict_graph(&h);
        assert!(g.has_edge(0, 1) && g.has_edge(0, 3) && g.has_edge(1, 3));
        assert!(!g.has_edge(0, 2) && !g.has_edge(1, 2));
        assert!(g.is_well_formed());
    }

    #[test]
    fn isolation_with_t_one_keeps_nothing() {
        let h = random_regular_simple(3, 4, 100, 1, 4).unwrap();
        let g = build_conflict_graph(&duplicated(&h, 1));
        let (g_reg, _) = regularize(&g, 2, 3).unwrap();
        let sel = isolate_select(&h, &g_reg, 1, 4.0, &SimplifyConfig::default());
        assert!(sel.kept.is_empty());
        // With no conflicts at all, isolation keeps every sampled edge.
        let empty = ConflictGraph::from_adjacency(vec![Vec::new(); h.num_edges()]);
        let sel = isolate_select(&h, &empty, 1, 4.0, &SimplifyConfig::default());
        assert_eq!(sel.kept.len(), h.num_edges());
    }

    #[test]
    fn isolation_survival_rate() {
        // Per-edge survival is (1/T)(1-1/T)^s when the conflict graph is s-regular.
        let n_edges = 2000;
        let g = ConflictGraph::from_adjacency(vec![Vec::new(); n_edges]);
        let (g_reg, _) = regularize(&g, 4, 5).unwrap();
        let h = Hypergraph::from_edges(
            3 * n_edges,
            &(0..n_edges).map(|e| [3 * e, 3 * e + 1, 3 * e + 2]).collect::<Vec<_>>(),
        )
        .unwrap();
        let t = 3;
        let mut total = 0usize;
        let runs = 40;
        for seed in 0..runs {
            let cfg = SimplifyConfig { retries: 1, seed, ..SimplifyConfig::default() };
            total += isolate_select(&h, &g_reg, t, 1.0, &cfg).kept.len();
        }
        let p = (1.0 / 3.0) * (2.0f64 / 3.0).powi(4);
        let trials = (runs as usize * n_edges) as f64;
        let freq = total as f64 / trials;
        // Survivals of adjacent edges are dependent; the variance inflation is at most 1 + 2s.
        let se = (p * (1.0 - p) * 9.0 / trials).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "{freq} vs {p}");
    }

    #[test]
    fn full_chain_output_is_simple() {
        let base = random_regular_simple(4, 30, 1200, 2, 6).unwrap();
        let h = duplicated(&base, 3);
        let cfg = SimplifyConfig { delta: 0.3, seed: 2, ..SimplifyConfig::default() };
        match simple_subhypergraph(&h, 3.0, None, &cfg) {
            Ok(out) => {
                assert!(out.report.is_simple && !out.report.has_duplicates);
                assert!(out.kept.iter().all(|&e| e < h.num_edges()));
            }
            Err(e) => assert!(e.is_infeasible(), "{e}"),
        }
    }

    #[test]
    fn greedy_conflict_free_is_simple_and_maximal() {
        let base = random_regular_simple(3, 8, 300, 1, 3).unwrap();
        let h = duplicated(&base, 2);
        let kept = greedy_conflict_free(&h, 5);
        let out = h.edge_subhypergraph(&kept);
        assert!(out.is_simple());
        let g = build_conflict_graph(&h);
        let mut mark = vec![false; h.num_edges()];
        for &e in &kept {
            mark[e] = true;
        }
        assert!((0..h.num_edges()).all(|e| mark[e] || g.neighbors(e).iter().any(|&f| mark[f as usize])));
    }
}
