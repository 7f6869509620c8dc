//! Instance families: Steiner triple systems, random regular simple
//! hypergraphs, near-regular Steiner blocks and near-regular embedding hosts.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{Hypergraph, HypergraphBuilder, HypergraphError};
use crate::rng::{self, Purpose};

/// Smallest block order accepted by [`near_regular_steiner_block`], and the
/// default deficiency threshold below which [`embed_into_near_regular`]
/// leaves a vertex without an overlay.
pub const DEFAULT_N1: usize = 7;

const RANDOM_REGULAR_ATTEMPTS: u64 = 20;
const GROUPING_WINDOW: usize = 96;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("no Steiner triple system on {0} vertices (need n = 1 or 3 mod 6 and n >= 7)")]
    InfeasibleSts(usize),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("block order {m} is below the threshold {threshold}")]
    BlockTooSmall { m: usize, threshold: usize },
    #[error("generation failed after {attempts} attempts: {reason}")]
    RetryBudget { attempts: u64, reason: String },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// Serializable description of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Sts {
        n: usize,
    },
    RandomRegularSimple {
        k: usize,
        d: usize,
        n: usize,
        #[serde(default)]
        tolerance: usize,
    },
    NearRegularBlock {
        m: usize,
    },
    EmbedHost {
        source: Box<GeneratorSpec>,
        d: usize,
        c: usize,
        #[serde(default = "default_n1")]
        n1: usize,
    },
}

fn default_n1() -> usize {
    DEFAULT_N1
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Hypergraph, GeneratorError> {
        match self {
            GeneratorSpec::Sts { n } => steiner_triple_system(*n, seed),
            GeneratorSpec::RandomRegularSimple { k, d, n, tolerance } => {
                random_regular_simple(*k, *d, *n, *tolerance, seed)
            }
            GeneratorSpec::NearRegularBlock { m } => near_regular_steiner_block(*m),
            GeneratorSpec::EmbedHost { source, d, c, n1 } => {
                let h = source.generate(seed)?;
                let cfg = EmbedConfig { n1: *n1, seed: rng::derive_seed(seed, 1) };
                Ok(embed_into_near_regular(&h, *d, *c, &cfg)?.host)
            }
        }
    }
}

/// Triples of an S(2,3,n) on labels `0..n` via the Bose (n = 3 mod 6) or
/// Skolem (n = 1 mod 6) construction.
fn sts_triples(n: usize) -> Result<Vec<[usize; 3]>, GeneratorError> {
    if n < 7 || !matches!(n % 6, 1 | 3) {
        return Err(GeneratorError::InfeasibleSts(n));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 6);
    if n % 6 == 3 {
        // Z_m x Z_3 with the idempotent commutative quasigroup x.y = (x+y)/2.
        let m = n / 3;
        let half = m.div_ceil(2);
        let op = |x: usize, y: usize| ((x + y) * half) % m;
        let id = |x: usize, i: usize| i * m + x;
        for x in 0..m {
            out.push([id(x, 0), id(x, 1), id(x, 2)]);
        }
        for x in 0..m {
            for y in (x + 1)..m {
                for i in 0..3 {
                    out.push([id(x, i), id(y, i), id(op(x, y), (i + 1) % 3)]);
                }
            }
        }
    } else {
        // Z_2t x Z_3 plus a point at infinity, with a half-idempotent
        // commutative quasigroup of order 2t.
        let t = (n - 1) / 6;
        let m = 2 * t;
        let op = |x: usize, y: usize| {
            let s = (x + y) % m;
            if s.is_multiple_of(2) {
                s / 2
            } else {
                (s - 1) / 2 + t
            }
        };
        let id = |x: usize, i: usize| i * m + x;
        let inf = 3 * m;
        for x in 0..t {
            out.push([id(x, 0), id(x, 1), id(x, 2)]);
            for i in 0..3 {
                out.push([inf, id(x + t, i), id(x, (i + 1) % 3)]);
            }
        }
        for x in 0..m {
            for y in (x + 1)..m {
                for i in 0..3 {
                    out.push([id(x, i), id(y, i), id(op(x, y), (i + 1) % 3)]);
                }
            }
        }
    }
    Ok(out)
}

/// A Steiner triple system on `n` points with labels permuted by `seed`.
/// Edges are listed in lexicographic order.
pub fn steiner_triple_system(n: usize, seed: u64) -> Result<Hypergraph, GeneratorError> {
    let triples = sts_triples(n)?;
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng::stream(seed, Purpose::Generator, 0));
    let mut relabeled: Vec<[usize; 3]> = triples
        .into_iter()
        .map(|t| {
            let mut r = t.map(|v| label[v]);
            r.sort_unstable();
            r
        })
        .collect();
    relabeled.sort_unstable();
    let mut b = HypergraphBuilder::new(n).uniform(3);
    b.reserve(relabeled.len(), 3);
    for t in &relabeled {
        b.push_edge(t)?;
    }
    Ok(b.build())
}

fn pair_key(u: u32, v: u32) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// A simple k-uniform hypergraph on `n` vertices with every degree in
/// `[d - tolerance, d]`.
///
/// Edges are grown in rounds: each round shuffles the unsaturated vertices
/// and groups them greedily into k-sets that cover no already-covered pair.
/// Vertices still below the band afterwards are repaired by swapping them
/// into existing edges in place of vertices that can spare a degree.
pub fn random_regular_simple(
    k: usize,
    d: usize,
    n: usize,
    tolerance: usize,
    seed: u64,
) -> Result<Hypergraph, GeneratorError> {
    if k < 2 {
        return Err(GeneratorError::Infeasible(format!("uniformity {k} < 2")));
    }
    if d == 0 {
        return Ok(Hypergraph::empty(n, Some(k)));
    }
    if k * d > n.saturating_sub(1) {
        return Err(GeneratorError::Infeasible(format!("k*D = {} exceeds N-1 = {}", k * d, n.saturating_sub(1))));
    }
    if tolerance == 0 && !(n * d).is_multiple_of(k) {
        return Err(GeneratorError::Infeasible(format!("k = {k} does not divide N*D = {}", n * d)));
    }
    let mut last = String::new();
    for attempt in 0..RANDOM_REGULAR_ATTEMPTS {
        let mut rng = rng::stream(seed, Purpose::Generator, 1 + attempt);
        match try_random_regular(k, d, n, tolerance, &mut rng) {
            Ok(edges) => {
                let mut b = HypergraphBuilder::new(n).uniform(k);
                b.reserve(edges.len() / k, k);
                let mut buf = Vec::with_capacity(k);
                for chunk in edges.chunks(k) {
                    buf.clear();
                    buf.extend(chunk.iter().map(|&v| v as usize));
                    b.push_edge(&buf)?;
                }
                return Ok(b.build());
            }
            Err(reason) => last = reason,
        }
    }
    Err(GeneratorError::RetryBudget { attempts: RANDOM_REGULAR_ATTEMPTS, reason: last })
}

fn try_random_regular<R: Rng>(k: usize, d: usize, n: usize, tolerance: usize, rng: &mut R) -> Result<Vec<u32>, String> {
    let mut deg = vec![0usize; n];
    let mut pairs: HashSet<u64> = HashSet::with_capacity(n * d * (k - 1) / 2);
    let mut edges: Vec<u32> = Vec::with_capacity(n * d);
    let mut pool: Vec<u32> = Vec::with_capacity(n);
    let mut used: Vec<bool> = Vec::with_capacity(n);
    let mut group: Vec<u32> = Vec::with_capacity(k);
    let max_rounds = 4 * d + 64;
    for _ in 0..max_rounds {
        pool.clear();
        pool.extend((0..n as u32).filter(|&v| deg[v as usize] < d));
        if pool.len() < k {
            break;
        }
        pool.shuffle(rng);
        used.clear();
        used.resize(pool.len(), false);
        let mut added = 0usize;
        for start in 0..pool.len() {
            if used[start] {
                continue;
            }
            group.clear();
            group.push(pool[start]);
            let mut picks = vec![start];
            let end = (start + 1 + GROUPING_WINDOW).min(pool.len());
            for j in (start + 1)..end {
                if used[j] {
                    continue;
                }
                let w = pool[j];
                if group.iter().all(|&u| !pairs.contains(&pair_key(u, w))) {
                    group.push(w);
                    picks.push(j);
                    if group.len() == k {
                        break;
                    }
                }
            }
            if group.len() == k {
                for (a, &u) in group.iter().enumerate() {
                    for &w in &group[a + 1..] {
                        pairs.insert(pair_key(u, w));
                    }
                    deg[u as usize] += 1;
                }
                for &j in &picks {
                    used[j] = true;
                }
                edges.extend_from_slice(&group);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }

    let floor = d.saturating_sub(tolerance);
    if floor == d {
        regroup_exact(k, d, n, &mut deg, &mut pairs, &mut edges, rng)?;
        return Ok(edges);
    }
    let m = edges.len() / k;
    let mut deficient: Vec<u32> = (0..n as u32).filter(|&v| deg[v as usize] < floor).collect();
    deficient.shuffle(rng);
    for v in deficient {
        let mut tries = 0usize;
        while deg[v as usize] < floor {
            tries += 1;
            if tries > 20_000 || m == 0 {
                return Err(format!("could not repair vertex {v} (degree {} < {floor})", deg[v as usize]));
            }
            let f = rng.gen_range(0..m);
            let edge = &edges[f * k..(f + 1) * k];
            if edge.contains(&v) {
                continue;
            }
            let slot = rng.gen_range(0..k);
            let u = edge[slot];
            if deg[u as usize] <= floor {
                continue;
            }
            let ok = edge.iter().enumerate().all(|(i, &x)| i == slot || !pairs.contains(&pair_key(v, x)));
            if !ok {
                continue;
            }
            for (i, &x) in edge.iter().enumerate() {
                if i != slot {
                    pairs.remove(&pair_key(u, x));
                    pairs.insert(pair_key(v, x));
                }
            }
            edges[f * k + slot] = v;
            deg[u as usize] -= 1;
            deg[v as usize] += 1;
        }
    }
    Ok(edges)
}

/// Exact regularity leaves no vertex with spare degree, so deficient vertices
/// are completed by dissolving random edges back into the pool and regrouping.
fn regroup_exact<R: Rng>(
    k: usize,
    d: usize,
    n: usize,
    deg: &mut [usize],
    pairs: &mut HashSet<u64>,
    edges: &mut Vec<u32>,
    rng: &mut R,
) -> Result<(), String> {
    let budget = 200 * n + 10_000;
    for _ in 0..budget {
        let mut pool: Vec<u32> = (0..n as u32).filter(|&v| deg[v as usize] < d).collect();
        if pool.is_empty() {
            return Ok(());
        }
        pool.shuffle(rng);
        let mut group: Vec<u32> = Vec::with_capacity(k);
        for &w in &pool {
            if group.iter().all(|&u| !pairs.contains(&pair_key(u, w))) {
                group.push(w);
                if group.len() == k {
                    break;
                }
            }
        }
        if group.len() == k {
            for (a, &u) in group.iter().enumerate() {
                for &w in &group[a + 1..] {
                    pairs.insert(pair_key(u, w));
                }
                deg[u as usize] += 1;
            }
            edges.extend_from_slice(&group);
            continue;
        }
        let m = edges.len() / k;
        if m == 0 {
            break;
        }
        // Dissolve an edge through a vertex adjacent to the stuck pool.
        let anchor = pool[0];
        let mut f = rng.gen_range(0..m);
        for _ in 0..4 * k {
            let cand = rng.gen_range(0..m);
            let e = &edges[cand * k..(cand + 1) * k];
            if e.iter().any(|&x| pairs.contains(&pair_key(anchor, x))) {
                f = cand;
                break;
            }
        }
        let removed: Vec<u32> = edges[f * k..(f + 1) * k].to_vec();
        for (a, &u) in removed.iter().enumerate() {
            for &w in &removed[a + 1..] {
                pairs.remove(&pair_key(u, w));
            }
            deg[u as usize] -= 1;
        }
        let last = m - 1;
        if f != last {
            for i in 0..k {
                edges[f * k + i] = edges[last * k + i];
            }
        }
        edges.truncate(last * k);
    }
    let short = (0..n).filter(|&v| deg[v] < d).count();
    Err(format!("{short} vertices below degree {d} after regrouping"))
}

/// The block S(M): an S(2,3,M+t) with its last `t` points deleted, where
/// `t < 6` is the least shift making `M+t` admissible.
pub fn near_regular_steiner_block(m: usize) -> Result<Hypergraph, GeneratorError> {
    near_regular_steiner_block_with(m, DEFAULT_N1)
}

pub fn near_regular_steiner_block_with(m: usize, threshold: usize) -> Result<Hypergraph, GeneratorError> {
    if m < threshold.max(DEFAULT_N1) {
        return Err(GeneratorError::BlockTooSmall { m, threshold: threshold.max(DEFAULT_N1) });
    }
    let t = (0..6).find(|t| matches!((m + t) % 6, 1 | 3)).expect("residues 1 and 3 are 2 apart");
    let triples = sts_triples(m + t)?;
    let mut b = HypergraphBuilder::new(m).uniform(3);
    for tr in triples.iter().filter(|tr| tr.iter().all(|&v| v < m)) {
        b.push_edge(tr)?;
    }
    Ok(b.build())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub n1: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { n1: DEFAULT_N1, seed: 0 }
    }
}

/// A near-regular host containing the source hypergraph as copy 0.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub host: Hypergraph,
    /// Number of disjoint copies T; copy `j` of vertex `v` is `j * N + v`.
    pub copies: usize,
    pub source_vertices: usize,
    /// Achieved maximum degree deficiency D - min degree.
    pub deficiency: usize,
    /// Overlay degrees d for which a filler H_d was built.
    pub overlay_degrees: Vec<usize>,
}

impl Embedding {
    pub fn vertex_in_copy(&self, copy: usize, v: usize) -> usize {
        copy * self.source_vertices + v
    }
}

/// Copies needed by [`embed_into_near_regular`]: (k-1)^2 D^2.
pub fn embedding_copies(k: usize, d: usize) -> usize {
    (k - 1) * (k - 1) * d * d
}

/// Filler H_d on `t` vertices with degrees in [d - (k+1)(k-1), d].
fn overlay_filler(k: usize, d: usize, t: usize, cfg: &EmbedConfig) -> Result<Hypergraph, GeneratorError> {
    if k > 3 {
        return random_regular_simple(k, d, t, (k + 1) * (k - 1), rng::derive_seed(cfg.seed, d as u64));
    }
    // Blocks of size a_i in {A-1, A}, A = (k-1)(d-k), summing to t.
    let a = (k - 1) * (d - k);
    let blocks = t.div_ceil(a);
    let short = blocks * a - t;
    let mut b = HypergraphBuilder::new(t).uniform(3);
    let mut base = 0usize;
    let mut cache: BTreeMap<usize, Hypergraph> = BTreeMap::new();
    for i in 0..blocks {
        let size = if i < short { a - 1 } else { a };
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(size) {
            slot.insert(near_regular_steiner_block_with(size, cfg.n1)?);
        }
        for e in cache[&size].edges() {
            let shifted: Vec<usize> = e.iter().map(|&v| base + v as usize).collect();
            b.push_edge(&shifted)?;
        }
        base += size;
    }
    debug_assert_eq!(base, t);
    Ok(b.build())
}

/// Embeds `h` (max degree <= `d`, codegree <= `c`) into a hypergraph whose
/// degrees all lie in `[d - K, d]` by taking (k-1)^2 d^2 disjoint copies and
/// overlaying, on the clones of each vertex of degree at most `d - n1`, a
/// filler of degree `d - d_H(v)`.
pub fn embed_into_near_regular(
    h: &Hypergraph,
    d: usize,
    c: usize,
    cfg: &EmbedConfig,
) -> Result<Embedding, GeneratorError> {
    let k = h.uniformity().ok_or_else(|| GeneratorError::Infeasible("source hypergraph is not uniform".into()))?;
    if k < 3 {
        return Err(GeneratorError::Infeasible(format!("uniformity {k} < 3")));
    }
    if cfg.n1 < DEFAULT_N1 || cfg.n1 <= k {
        return Err(GeneratorError::Infeasible(format!("threshold N1 = {} is too small", cfg.n1)));
    }
    if h.max_degree() > d {
        return Err(GeneratorError::Infeasible(format!("max degree {} exceeds D = {d}", h.max_degree())));
    }
    if h.num_edges() > 0 && h.max_codegree() > c {
        return Err(GeneratorError::Infeasible(format!("codegree {} exceeds C = {c}", h.max_codegree())));
    }
    let n = h.num_vertices();
    let t = embedding_copies(k, d);
    let total = t
        .checked_mul(n)
        .filter(|&x| x <= u32::MAX as usize)
        .ok_or_else(|| GeneratorError::Infeasible("host too large".into()))?;

    let mut fillers: BTreeMap<usize, Hypergraph> = BTreeMap::new();
    for v in 0..n {
        let dv = h.degree(v);
        if dv + cfg.n1 <= d {
            let need = d - dv;
            if let std::collections::btree_map::Entry::Vacant(slot) = fillers.entry(need) {
                slot.insert(overlay_filler(k, need, t, cfg)?);
            }
        }
    }

    let mut b = HypergraphBuilder::new(total).uniform(k);
    let overlay_edges: usize = (0..n)
        .filter_map(|v| fillers.get(&(d - h.degree(v))).filter(|_| h.degree(v) + cfg.n1 <= d))
        .map(|f| f.num_edges())
        .sum();
    b.reserve(t * h.num_edges() + overlay_edges, k);
    let mut buf = Vec::with_capacity(k);
    for j in 0..t {
        for e in h.edges() {
            buf.clear();
            buf.extend(e.iter().map(|&v| j * n + v as usize));
            b.push_edge(&buf)?;
        }
    }
    for v in 0..n {
        let dv = h.degree(v);
        if dv + cfg.n1 > d {
            continue;
        }
        for e in fillers[&(d - dv)].edges() {
            buf.clear();
            buf.extend(e.iter().map(|&j| j as usize * n + v));
            b.push_edge(&buf)?;
        }
    }
    let host = b.build();
    let deficiency = d - host.min_degree().min(d);
    Ok(Embedding {
        host,
        copies: t,
        source_vertices: n,
        deficiency,
        overlay_degrees: fillers.keys().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_coverage_exact(h: &Hypergraph) -> bool {
        let n = h.num_vertices();
        let mut cover = vec![0u8; n * n];
        for e in h.edges() {
            for (i, &u) in e.iter().enumerate() {
                for &v in &e[i + 1..] {
                    cover[u as usize * n + v as usize] += 1;
                }
            }
        }
        (0..n).all(|u| ((u + 1)..n).all(|v| cover[u * n + v] == 1))
    }

    #[test]
    fn small_steiner_systems() {
        let fano = steiner_triple_system(7, 3).unwrap();
        assert_eq!(fano.num_edges(), 7);
        assert!(fano.degrees().iter().all(|&d| d == 3));
        assert!(pair_coverage_exact(&fano));

        let nine = steiner_triple_system(9, 0).unwrap();
        assert_eq!(nine.num_edges(), 12);
        assert!(nine.degrees().iter().all(|&d| d == 4));
        assert!(pair_coverage_exact(&nine));

        assert_eq!(steiner_triple_system(8, 0), Err(GeneratorError::InfeasibleSts(8)));
        assert_eq!(steiner_triple_system(3, 0), Err(GeneratorError::InfeasibleSts(3)));
    }

    #[test]
    fn every_admissible_order_up_to_100_is_a_steiner_system() {
        for n in (7..=100).filter(|n| matches!(n % 6, 1 | 3)) {
            let h = steiner_triple_system(n, n as u64).unwrap();
            assert_eq!(h.num_edges(), n * (n - 1) / 6, "n = {n}");
            assert!(h.degrees().iter().all(|&d| d == (n - 1) / 2), "n = {n}");
            assert!(pair_coverage_exact(&h), "n = {n}");
        }
    }

    #[test]
    fn seeds_only_relabel() {
        let a = steiner_triple_system(13, 1).unwrap();
        let b = steiner_triple_system(13, 1).unwrap();
        let c = steiner_triple_system(13, 2).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a.to_text(), c.to_text());
        assert!(pair_coverage_exact(&c));
    }

    #[test]
    fn random_regular_examples() {
        let h = random_regular_simple(3, 10, 1000, 2, 5).unwrap();
        assert!(h.is_simple());
        assert!(h.degrees().iter().all(|&d| (8..=10).contains(&d)));
        assert_eq!(random_regular_simple(3, 0, 10, 0, 1).unwrap().num_edges(), 0);
        assert!(matches!(random_regular_simple(3, 500, 100, 0, 1), Err(GeneratorError::Infeasible(_))));
        let again = random_regular_simple(3, 10, 1000, 2, 5).unwrap();
        assert_eq!(h.to_text(), again.to_text());
    }

    #[test]
    fn steiner_blocks() {
        let exact = near_regular_steiner_block(13).unwrap();
        assert!(exact.degrees().iter().all(|&d| d == 6));
        let block = near_regular_steiner_block(100).unwrap();
        assert!(block.is_simple());
        assert!(block.degrees().iter().all(|&d| (46..=52).contains(&d)));
        assert!(matches!(near_regular_steiner_block(5), Err(GeneratorError::BlockTooSmall { .. })));
    }

    #[test]
    fn single_edge_embedding() {
        let h = Hypergraph::from_edges(3, &[[0, 1, 2]]).unwrap();
        let emb = embed_into_near_regular(&h, 10, 1, &EmbedConfig::default()).unwrap();
        assert_eq!(emb.host.num_vertices(), 4 * 100 * 3);
        assert!(emb.host.degrees().iter().all(|&x| x + emb.deficiency >= 10 && x <= 10));
        assert!(emb.deficiency <= DEFAULT_N1.max(8));
        assert!(emb.host.is_simple());
        assert_eq!(emb.host.edge(0), &[0, 1, 2]);
    }

    #[test]
    fn regular_source_needs_no_overlay() {
        let h = steiner_triple_system(7, 0).unwrap();
        let emb = embed_into_near_regular(&h, 3, 1, &EmbedConfig::default()).unwrap();
        assert!(emb.overlay_degrees.is_empty());
        assert_eq!(emb.host.num_edges(), 36 * 7);
        assert_eq!(emb.deficiency, 0);
    }
}
