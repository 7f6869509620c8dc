//! The nibble process with waste vertices.
//!
//! Stage i selects every alive edge with probability 1/D_{i-1}, keeps the
//! selected edges that meet no other selected edge as M_i, and removes each
//! remaining alive vertex independently with the waste probability that
//! makes every alive vertex survive with probability exactly 1 - p*_{i-1}.
//! The trackers D_i and Delta_i follow the deterministic recurrences, not the
//! measured degrees.

pub mod stats;
mod trajectory;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{EdgeId, Hypergraph, HypergraphError, Matching, VertexId};
use crate::rng::{self, for_each_bernoulli, Purpose, StreamRng};

pub use stats::{stat_d, stat_x, stat_y, stat_z, UNMATCHED};
pub use trajectory::{predict_trajectory, Prediction, StageRecord, Termination, TrajectoryLog, CSV_HEADER_COMMENT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NibbleError {
    #[error("selection parameter D = {0} is below 1")]
    DegreeBelowOne(f64),
    #[error("probability pM = {p_m} exceeds p* = {p_star}")]
    ProbabilityOrder { p_m: f64, p_star: f64 },
    #[error("vertex {0} is not alive")]
    DeadVertex(usize),
    #[error("edge {0} is not alive")]
    DeadEdge(usize),
    #[error("the degree-sum shortcut for t(F) requires a simple hypergraph")]
    NotSimple,
    #[error("gamma must lie in (0, 1), got {0}")]
    BadGamma(f64),
    #[error("the hypergraph must be uniform")]
    NotUniform,
    #[error("uniformity {0} exceeds the supported maximum of 255")]
    UniformityTooLarge(usize),
    #[error("tracked set contains vertex {0} outside the hypergraph")]
    TrackedOutOfRange(usize),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// P(F in M_i) for an alive edge meeting `t_f` other alive edges:
/// (1/D)(1 - 1/D)^{t_f}.
pub fn edge_matching_prob(d: f64, t_f: usize) -> Result<f64, NibbleError> {
    if d.is_nan() || d < 1.0 {
        return Err(NibbleError::DegreeBelowOne(d));
    }
    Ok(isolation_prob(1.0 / d, t_f))
}

#[inline]
fn isolation_prob(rate: f64, t_f: usize) -> f64 {
    if rate >= 1.0 {
        return if t_f == 0 { 1.0 } else { 0.0 };
    }
    rate * (1.0 - rate).powi(t_f.min(i32::MAX as usize) as i32)
}

/// Waste probability solving pM + pW - pM pW = p*.
pub fn waste_prob(p_m: f64, p_star: f64) -> Result<f64, NibbleError> {
    if p_m > p_star || p_m < 0.0 || p_star > 1.0 {
        return Err(NibbleError::ProbabilityOrder { p_m, p_star });
    }
    if p_m == p_star {
        return Ok(0.0);
    }
    Ok((p_star - p_m) / (1.0 - p_m))
}

/// t(F) on the subhypergraph of alive edges via the degree-sum identity,
/// which counts each intersecting edge once only when `h` is simple.
pub fn count_intersecting_edges(h: &Hypergraph, alive: &[bool], f: EdgeId) -> Result<usize, NibbleError> {
    if f >= h.num_edges() {
        return Err(HypergraphError::DanglingEdge(f).into());
    }
    let edge_alive = |e: u32| h.edge(e as usize).iter().all(|&v| alive[v as usize]);
    if !edge_alive(f as u32) {
        return Err(NibbleError::DeadEdge(f));
    }
    if !h.is_simple() {
        return Err(NibbleError::NotSimple);
    }
    Ok(h.edge(f).iter().map(|&v| h.incident(v as usize).iter().filter(|&&e| edge_alive(e)).count() - 1).sum())
}

/// How t(F) was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionPath {
    DegreeSum,
    Enumeration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatSample {
    pub vertices: usize,
    pub pairs: usize,
}

impl Default for StatSample {
    fn default() -> Self {
        StatSample { vertices: 16, pairs: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NibbleConfig {
    pub gamma: f64,
    pub max_stages: usize,
    pub seed: u64,
    pub track_sets: Vec<Vec<VertexId>>,
    pub stat_sample: StatSample,
    /// Declared degree spread; a larger measured spread is reported as a warning.
    pub delta0: Option<f64>,
}

impl Default for NibbleConfig {
    fn default() -> Self {
        NibbleConfig {
            gamma: 0.5,
            max_stages: 10_000,
            seed: 0,
            track_sets: Vec::new(),
            stat_sample: StatSample::default(),
            delta0: None,
        }
    }
}

/// Exact stage probabilities for the current alive hypergraph.
#[derive(Debug, Clone)]
pub struct StageProbabilities {
    pub rate: f64,
    /// Alive edge ids, in ascending order; sampling indexes into this list.
    pub alive_edges: Vec<u32>,
    /// t(F) for each entry of `alive_edges`.
    pub t: Vec<u32>,
    /// p_M(v) per vertex; 0 for dead vertices.
    pub p_m: Vec<f64>,
    pub p_star: f64,
    /// Waste probability per vertex; 0 for dead vertices.
    pub p_w: Vec<f64>,
}

impl StageProbabilities {
    pub fn edge_prob(&self, idx: usize) -> f64 {
        isolation_prob(self.rate, self.t[idx] as usize)
    }
}

/// Outcome of one sampled stage, before it is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSample {
    pub selected: usize,
    pub matched: Vec<EdgeId>,
    pub wasted: Vec<VertexId>,
}

/// Reusable buffers for repeated stage sampling.
#[derive(Debug, Default, Clone)]
pub struct StageScratch {
    count: Vec<u32>,
    selected: Vec<u32>,
}

/// Live state of one nibble run.
#[derive(Debug, Clone)]
pub struct NibbleState {
    k: usize,
    alive: Vec<bool>,
    alive_count: usize,
    edge_alive: Vec<bool>,
    alive_deg: Vec<u32>,
    alive_in_edge: Vec<u8>,
    // For dead x: edges through x whose other vertices are all alive.
    dead_d: Vec<u32>,
    owner: Vec<u32>,
    matched: Vec<EdgeId>,
    waste: Vec<bool>,
    died_at: Vec<u32>,
    stage: usize,
    d: f64,
    delta: f64,
    d0: f64,
    delta0: f64,
    log_n: f64,
    p_star: Vec<f64>,
    d_history: Vec<f64>,
    path: IntersectionPath,
    seed: u64,
}

impl NibbleState {
    /// Starts a run; D_0 is the mean degree over non-isolated vertices and
    /// Delta_0 the largest deviation from it.
    pub fn new(h: &Hypergraph, seed: u64) -> Result<Self, NibbleError> {
        let k = h.uniformity().ok_or(NibbleError::NotUniform)?;
        if k > u8::MAX as usize {
            return Err(NibbleError::UniformityTooLarge(k));
        }
        let n = h.num_vertices();
        let degs: Vec<usize> = (0..n).map(|v| h.degree(v)).filter(|&d| d > 0).collect();
        let d0 = if degs.is_empty() { 0.0 } else { degs.iter().sum::<usize>() as f64 / degs.len() as f64 };
        let delta0 = degs.iter().map(|&d| (d as f64 - d0).abs()).fold(0.0, f64::max);
        let path = if h.is_simple() { IntersectionPath::DegreeSum } else { IntersectionPath::Enumeration };
        Ok(NibbleState {
            k,
            alive: vec![true; n],
            alive_count: n,
            edge_alive: vec![true; h.num_edges()],
            alive_deg: (0..n).map(|v| h.degree(v) as u32).collect(),
            alive_in_edge: vec![k as u8; h.num_edges()],
            dead_d: vec![0; n],
            owner: vec![UNMATCHED; n],
            matched: Vec::new(),
            waste: vec![false; n],
            died_at: vec![u32::MAX; n],
            stage: 0,
            d: d0,
            delta: delta0,
            d0,
            delta0,
            log_n: (n.max(2) as f64).ln(),
            p_star: Vec::new(),
            d_history: vec![d0],
            path,
            seed,
        })
    }

    /// Overrides the tracked starting values D_0 and Delta_0.
    pub fn with_initial(mut self, d0: f64, delta0: f64) -> Self {
        self.d = d0;
        self.delta = delta0;
        self.d0 = d0;
        self.delta0 = delta0;
        self.d_history = vec![d0];
        self
    }

    pub fn uniformity(&self) -> usize {
        self.k
    }
    pub fn stage(&self) -> usize {
        self.stage
    }
    /// Current tracked D_i.
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn d0(&self) -> f64 {
        self.d0
    }
    pub fn delta0(&self) -> f64 {
        self.delta0
    }
    pub fn alive(&self) -> &[bool] {
        &self.alive
    }
    pub fn is_alive(&self, v: VertexId) -> bool {
        self.alive[v]
    }
    pub fn alive_count(&self) -> usize {
        self.alive_count
    }
    pub fn alive_degree(&self, v: VertexId) -> usize {
        self.alive_deg[v] as usize
    }
    pub fn edge_is_alive(&self, e: EdgeId) -> bool {
        self.edge_alive[e]
    }
    pub fn waste(&self) -> &[bool] {
        &self.waste
    }
    /// Matching edge covering each vertex, or [`UNMATCHED`].
    pub fn owner(&self) -> &[u32] {
        &self.owner
    }
    pub fn matched_edges(&self) -> &[EdgeId] {
        &self.matched
    }
    pub fn p_star_history(&self) -> &[f64] {
        &self.p_star
    }
    pub fn d_history(&self) -> &[f64] {
        &self.d_history
    }
    pub fn intersection_path(&self) -> IntersectionPath {
        self.path
    }

    /// q_{j,i} = prod_{u=j}^{i-1} (1 - p*_u).
    pub fn q(&self, j: usize, i: usize) -> f64 {
        self.p_star[j..i].iter().map(|p| 1.0 - p).product()
    }

    /// D_i(x) for any vertex: edges through x with every other vertex alive.
    pub fn current_d(&self, x: VertexId) -> usize {
        if self.alive[x] {
            self.alive_deg[x] as usize
        } else {
            self.dead_d[x] as usize
        }
    }

    /// Was `x` alive at the start of stage `i` (x in U_{i-1})?
    pub fn alive_before(&self, x: VertexId, i: usize) -> bool {
        self.died_at[x] as usize >= i
    }

    fn t_of(&self, h: &Hypergraph, f: EdgeId, stamp: &mut [u32], tick: u32) -> u32 {
        match self.path {
            IntersectionPath::DegreeSum => h.edge(f).iter().map(|&v| self.alive_deg[v as usize] - 1).sum(),
            IntersectionPath::Enumeration => {
                let mut t = 0;
                for &v in h.edge(f) {
                    for &e in h.incident(v as usize) {
                        if e as usize != f && self.edge_alive[e as usize] && stamp[e as usize] != tick {
                            stamp[e as usize] = tick;
                            t += 1;
                        }
                    }
                }
                t
            }
        }
    }

    /// t(F) for an alive edge, by the path chosen at construction.
    pub fn intersecting_edges(&self, h: &Hypergraph, f: EdgeId) -> Result<usize, NibbleError> {
        if !self.edge_alive[f] {
            return Err(NibbleError::DeadEdge(f));
        }
        let mut stamp = vec![0u32; h.num_edges()];
        Ok(self.t_of(h, f, &mut stamp, 1) as usize)
    }

    /// Selection rate 1/D_{i-1}, clamped to 1.
    pub fn rate(&self) -> f64 {
        if self.d <= 1.0 {
            1.0
        } else {
            1.0 / self.d
        }
    }

    pub fn probabilities(&self, h: &Hypergraph) -> StageProbabilities {
        let rate = self.rate();
        let alive_edges: Vec<u32> = (0..h.num_edges() as u32).filter(|&e| self.edge_alive[e as usize]).collect();
        let mut stamp = match self.path {
            IntersectionPath::Enumeration => vec![0u32; h.num_edges()],
            IntersectionPath::DegreeSum => Vec::new(),
        };
        let t: Vec<u32> =
            alive_edges.iter().enumerate().map(|(i, &e)| self.t_of(h, e as usize, &mut stamp, i as u32 + 1)).collect();
        let mut p_m = vec![0.0f64; h.num_vertices()];
        for (i, &e) in alive_edges.iter().enumerate() {
            let p = isolation_prob(rate, t[i] as usize);
            for &v in h.edge(e as usize) {
                p_m[v as usize] += p;
            }
        }
        let p_star = (0..h.num_vertices()).filter(|&v| self.alive[v]).map(|v| p_m[v]).fold(0.0, f64::max);
        let p_w = (0..h.num_vertices())
            .map(|v| if self.alive[v] { waste_prob(p_m[v], p_star).expect("p* is the maximum") } else { 0.0 })
            .collect();
        StageProbabilities { rate, alive_edges, t, p_m, p_star, p_w }
    }

    /// p_M(v) for an alive vertex.
    pub fn vertex_matching_prob(&self, h: &Hypergraph, v: VertexId) -> Result<f64, NibbleError> {
        if !self.alive[v] {
            return Err(NibbleError::DeadVertex(v));
        }
        let rate = self.rate();
        let mut stamp = match self.path {
            IntersectionPath::Enumeration => vec![0u32; h.num_edges()],
            IntersectionPath::DegreeSum => Vec::new(),
        };
        Ok(h.incident(v)
            .iter()
            .filter(|&&e| self.edge_alive[e as usize])
            .enumerate()
            .map(|(i, &e)| isolation_prob(rate, self.t_of(h, e as usize, &mut stamp, i as u32 + 1) as usize))
            .sum())
    }

    /// Draws B_i, M_i and W_i without changing the state.
    pub fn sample(
        &self,
        h: &Hypergraph,
        probs: &StageProbabilities,
        edge_rng: &mut StreamRng,
        waste_rng: &mut StreamRng,
        scratch: &mut StageScratch,
    ) -> StageSample {
        scratch.count.resize(h.num_vertices(), 0);
        scratch.selected.clear();
        for_each_bernoulli(probs.alive_edges.len(), probs.rate, edge_rng, |i| {
            scratch.selected.push(probs.alive_edges[i])
        });
        for &e in &scratch.selected {
            for &v in h.edge(e as usize) {
                scratch.count[v as usize] += 1;
            }
        }
        let matched: Vec<EdgeId> = scratch
            .selected
            .iter()
            .filter(|&&e| h.edge(e as usize).iter().all(|&v| scratch.count[v as usize] == 1))
            .map(|&e| e as usize)
            .collect();
        for &e in &scratch.selected {
            for &v in h.edge(e as usize) {
                scratch.count[v as usize] = 0;
            }
        }
        let mut wasted = Vec::new();
        for (v, &pw) in probs.p_w.iter().enumerate() {
            if pw > 0.0 && waste_rng.gen::<f64>() < pw {
                wasted.push(v);
            }
        }
        StageSample { selected: scratch.selected.len(), matched, wasted }
    }

    fn kill(&mut self, h: &Hypergraph, v: VertexId) {
        if !self.alive[v] {
            return;
        }
        self.alive[v] = false;
        self.alive_count -= 1;
        self.died_at[v] = self.stage as u32;
        for &e in h.incident(v) {
            let e = e as usize;
            let before = self.alive_in_edge[e] as usize;
            self.alive_in_edge[e] -= 1;
            if before == self.k {
                self.edge_alive[e] = false;
                for &u in h.edge(e) {
                    self.alive_deg[u as usize] -= 1;
                }
                self.dead_d[v] += 1;
            } else if before + 1 == self.k {
                if let Some(&y) = h.edge(e).iter().find(|&&y| y as usize != v && !self.alive[y as usize]) {
                    self.dead_d[y as usize] -= 1;
                }
            }
        }
    }

    /// Applies a sampled stage and advances the recurrences with `p_star`.
    pub fn apply(&mut self, h: &Hypergraph, sample: &StageSample, p_star: f64) -> Result<(), NibbleError> {
        self.stage += 1;
        for &e in &sample.matched {
            if let Some(&v) = h.edge(e).iter().find(|&&v| self.owner[v as usize] != UNMATCHED) {
                return Err(HypergraphError::NotAMatching(self.owner[v as usize] as usize, e).into());
            }
            for &v in h.edge(e) {
                self.owner[v as usize] = e as u32;
            }
            self.matched.push(e);
        }
        for &e in &sample.matched {
            for &v in h.edge(e) {
                self.kill(h, v as usize);
            }
        }
        for &v in &sample.wasted {
            self.waste[v] = true;
            self.kill(h, v);
        }
        let shrink = (1.0 - p_star).powi(self.k as i32 - 1);
        let prev = self.d;
        self.d = shrink * prev;
        self.delta = shrink * self.delta + prev.sqrt() * self.log_n;
        self.p_star.push(p_star);
        self.d_history.push(self.d);
        Ok(())
    }

    /// One full stage: exact probabilities, sampling from the stage's own
    /// substreams, and the update.
    pub fn step(&mut self, h: &Hypergraph) -> Result<(StageSample, f64), NibbleError> {
        let probs = self.probabilities(h);
        let i = self.stage as u64 + 1;
        let mut er = rng::stream(self.seed, Purpose::StageEdges, i);
        let mut wr = rng::stream(self.seed, Purpose::StageWaste, i);
        let sample = self.sample(h, &probs, &mut er, &mut wr, &mut StageScratch::default());
        self.apply(h, &sample, probs.p_star)?;
        Ok((sample, probs.p_star))
    }

    pub fn matching(&self, h: &Hypergraph) -> Result<Matching, NibbleError> {
        Ok(Matching::from_edges(h, &self.matched)?)
    }
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct NibbleOutcome {
    pub matching: Matching,
    pub waste: Vec<bool>,
    pub leftover: Vec<bool>,
    pub log: TrajectoryLog,
    pub state: NibbleState,
    pub warnings: Vec<String>,
}

impl NibbleOutcome {
    pub fn leftover_count(&self) -> usize {
        self.leftover.iter().filter(|&&u| u).count()
    }
}

/// Iterates stages until the tracked D_i drops to D_0^gamma, the stage cap
/// is reached, or the alive hypergraph runs out of vertices or edges.
pub fn run_nibble(h: &Hypergraph, config: &NibbleConfig) -> Result<NibbleOutcome, NibbleError> {
    let state = NibbleState::new(h, config.seed)?;
    run_nibble_from(h, state, config)
}

pub fn run_nibble_from(
    h: &Hypergraph,
    mut state: NibbleState,
    config: &NibbleConfig,
) -> Result<NibbleOutcome, NibbleError> {
    if !(config.gamma > 0.0 && config.gamma < 1.0) {
        return Err(NibbleError::BadGamma(config.gamma));
    }
    let n = h.num_vertices();
    if let Some(&v) = config.track_sets.iter().flatten().find(|&&v| v >= n) {
        return Err(NibbleError::TrackedOutOfRange(v));
    }
    let mut warnings = Vec::new();
    if let Some(declared) = config.delta0 {
        if state.delta0() > declared {
            warnings.push(format!("measured degree spread {} exceeds declared Delta_0 = {declared}", state.delta0()));
        }
    }
    let target = state.d0().powf(config.gamma);

    let mut srng = rng::stream(config.seed, Purpose::StatSample, 0);
    let sample_vertices: Vec<usize> =
        if n == 0 { Vec::new() } else { sample(&mut srng, n, config.stat_sample.vertices.min(n)).into_vec() };
    let sample_pairs: Vec<(usize, usize)> = if n < 2 {
        Vec::new()
    } else {
        (0..config.stat_sample.pairs)
            .map(|_| {
                let p = sample(&mut srng, n, 2).into_vec();
                (p[0], p[1])
            })
            .collect()
    };

    let mut log = TrajectoryLog::new(h, &state, config, sample_vertices, sample_pairs);
    let termination = loop {
        if state.d() <= target {
            break Termination::StopRule;
        }
        if state.stage() >= config.max_stages {
            break Termination::MaxStages;
        }
        if state.alive_count() == 0 {
            break Termination::Starved;
        }
        if !state.edge_alive.iter().any(|&a| a) {
            break Termination::NoEdges;
        }
        let degenerate = state.d() < 1.0;
        let (sample, p_star) = state.step(h)?;
        log.record(h, &state, config, &sample, p_star);
        if degenerate {
            break Termination::Degenerate;
        }
    };
    log.termination = termination;
    let matching = state.matching(h)?;
    let leftover = state.alive.clone();
    Ok(NibbleOutcome { matching, waste: state.waste.clone(), leftover, log, state, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_regular_simple, steiner_triple_system};

    fn fano() -> Hypergraph {
        steiner_triple_system(7, 0).unwrap()
    }

    #[test]
    fn exact_probabilities_on_fano() {
        let h = fano();
        let st = NibbleState::new(&h, 0).unwrap();
        assert_eq!(st.d0(), 3.0);
        for f in 0..7 {
            assert_eq!(st.intersecting_edges(&h, f).unwrap(), 6);
            assert_eq!(h.intersecting_edge_count(f), 6);
        }
        let p = edge_matching_prob(3.0, 6).unwrap();
        assert!((p - 64.0 / 2187.0).abs() < 1e-15);
        let pv = st.vertex_matching_prob(&h, 0).unwrap();
        assert!((pv - 64.0 / 729.0).abs() < 1e-15);
        let probs = st.probabilities(&h);
        assert!((probs.p_star - 64.0 / 729.0).abs() < 1e-15);
        assert!(probs.p_w.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn probability_helpers() {
        assert_eq!(edge_matching_prob(5.0, 0).unwrap(), 0.2);
        assert!(edge_matching_prob(0.5, 0).is_err());
        assert_eq!(waste_prob(0.05, 0.05).unwrap(), 0.0);
        assert_eq!(waste_prob(0.0, 0.05).unwrap(), 0.05);
        let w = waste_prob(0.04, 0.05).unwrap();
        assert!((w - 0.01 / 0.96).abs() < 1e-15);
        assert!((0.04 + w - 0.04 * w - 0.05).abs() < 1e-15);
        assert!(waste_prob(0.06, 0.05).is_err());
        let d = 1e6;
        let k = 3.0;
        let p = edge_matching_prob(d, (k * d - k) as usize).unwrap();
        assert!((p * d / (-k).exp() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn degree_sum_matches_enumeration() {
        let h = random_regular_simple(3, 10, 201, 0, 3).unwrap();
        assert!((0..201).all(|v| h.degree(v) == 10));
        let alive = vec![true; 201];
        for f in (0..h.num_edges()).step_by(17) {
            assert_eq!(count_intersecting_edges(&h, &alive, f).unwrap(), 27);
            assert_eq!(h.intersecting_edge_count(f), 27);
        }
        let single = Hypergraph::from_edges(3, &[[0, 1, 2]]).unwrap();
        assert_eq!(count_intersecting_edges(&single, &[true; 3], 0).unwrap(), 0);
        let multi = Hypergraph::from_edges(4, &[[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(count_intersecting_edges(&multi, &[true; 4], 0), Err(NibbleError::NotSimple));
    }

    #[test]
    fn perfect_matching_at_rate_one() {
        let h = Hypergraph::from_edges(9, &[[0, 1, 2], [3, 4, 5], [6, 7, 8]]).unwrap();
        let mut st = NibbleState::new(&h, 1).unwrap();
        assert_eq!(st.rate(), 1.0);
        let (sample, p_star) = st.step(&h).unwrap();
        assert_eq!(sample.matched, vec![0, 1, 2]);
        assert_eq!(p_star, 1.0);
        assert_eq!(st.alive_count(), 0);
    }

    #[test]
    fn stages_are_reproducible() {
        let h = fano();
        let mut a = NibbleState::new(&h, 42).unwrap();
        let mut b = NibbleState::new(&h, 42).unwrap();
        assert_eq!(a.step(&h).unwrap(), b.step(&h).unwrap());
    }

    #[test]
    fn dead_vertex_degrees_track_definition() {
        let h = random_regular_simple(3, 6, 120, 1, 8).unwrap();
        let mut st = NibbleState::new(&h, 5).unwrap().with_initial(2.0, 0.0);
        for _ in 0..3 {
            st.step(&h).unwrap();
        }
        for x in 0..120 {
            assert_eq!(st.current_d(x) as u64, stat_d(&h, st.alive(), x), "x = {x}");
        }
    }

    #[test]
    fn run_produces_partition_and_valid_matching() {
        let h = steiner_triple_system(99, 2).unwrap();
        let cfg = NibbleConfig { gamma: 0.5, seed: 9, ..NibbleConfig::default() };
        let out = run_nibble(&h, &cfg).unwrap();
        assert!(h.verify_matching(out.matching.edges()).unwrap().valid);
        for v in 0..99 {
            let covered = out.matching.covers(v);
            let wasted_only = out.waste[v] && !covered;
            assert_eq!([out.leftover[v], covered, wasted_only].iter().filter(|&&b| b).count(), 1);
        }
        assert_eq!(out.log.termination, Termination::StopRule);
        let last = out.log.stages.last().unwrap();
        assert!(last.d <= 49f64.powf(0.5));
    }

    #[test]
    fn gamma_near_one_stops_after_one_stage() {
        let h = steiner_triple_system(99, 2).unwrap();
        let cfg = NibbleConfig { gamma: 0.999, ..NibbleConfig::default() };
        assert_eq!(run_nibble(&h, &cfg).unwrap().log.stages.len(), 1);
    }
}
