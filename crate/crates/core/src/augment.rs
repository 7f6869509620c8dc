//! Augmenting stars and the matching pipeline for near-regular simple
//! hypergraphs.
//!
//! After a nibble run with matching M and waste W, an augmenting star is a
//! matched edge e_M together with k pairwise disjoint edges, each meeting e_M
//! in one vertex and otherwise lying in the leftover set. Swapping e_M for
//! the k star edges grows the matching by k - 1. The stars form a
//! (1, k(k-1))-partite multi-hypergraph H_A whose left side is E(M) and
//! whose right side is the leftover set; a matching of H_A is a set of
//! stars that can be applied simultaneously.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{
    EdgeId, Hypergraph, HypergraphBuilder, HypergraphError, Matching, ParseError, Part, PartiteTag, VertexId,
};
use crate::nibble::{self, stat_z, NibbleConfig, NibbleError, NibbleOutcome, NibbleState, Termination};
use crate::rng;
use crate::simplify::{self, SimplifyConfig, SimplifyError, SimplifyReport};

/// Default number of stars stored per matched edge.
pub const DEFAULT_STAR_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("the {0} side of the star hypergraph is empty")]
    EmptySide(&'static str),
    #[error("mean left degree is zero, nothing to boost")]
    ZeroLeftDegree,
    #[error("star hypergraph edge {0} has no back-map entry")]
    BackMapMissing(usize),
    #[error("the star matching is not a matching of the star hypergraph")]
    InvalidStarMatching,
    #[error("boosted star hypergraphs cannot be audited directly; audit the unboosted one")]
    Boosted,
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("input must be simple")]
    NotSimple,
    #[error("input must be uniform")]
    NotUniform,
    #[error("parameters: {0}")]
    Params(#[from] AugmentError),
    #[error("{stage}: {source}")]
    Nibble { stage: &'static str, source: NibbleError },
    #[error("{stage}: {source}")]
    Augment { stage: &'static str, source: AugmentError },
    #[error("{stage}: {source}")]
    Simplify { stage: &'static str, source: SimplifyError },
}

/// (k - 3) / ((k - 1)(k^3 - 2k^2 - k + 4)), the exponent gain available from
/// augmentation alone.
pub fn eta_diamond(k: usize) -> f64 {
    let kf = k as f64;
    (kf - 3.0) / ((kf - 1.0) * (kf.powi(3) - 2.0 * kf * kf - kf + 4.0))
}

fn check_k_eps(k: usize, epsilon: f64) -> Result<(), AugmentError> {
    if k <= 3 {
        return Err(AugmentError::BadParams(format!("uniformity must exceed 3, got {k}")));
    }
    let top = 1.0 - 1.0 / (k as f64 - 1.0);
    if !(epsilon > 0.0 && epsilon < top) {
        return Err(AugmentError::BadParams(format!("epsilon must lie in (0, {top}), got {epsilon}")));
    }
    Ok(())
}

/// eta_0 = min(eta_diamond(k), 1 - 1/(k-1) - epsilon).
pub fn compute_eta0(k: usize, epsilon: f64) -> Result<f64, AugmentError> {
    check_k_eps(k, epsilon)?;
    Ok(eta_diamond(k).min(1.0 - 1.0 / (k as f64 - 1.0) - epsilon))
}

/// (gamma, gamma') with gamma = min(2/(k^3-2k^2-k+4), (2(k-1)(1-eps)-2)/(k-3))
/// and gamma' = min(1/(4(k-1)), eta_0 - eta).
pub fn compute_gamma(k: usize, epsilon: f64, eta: f64) -> Result<(f64, f64), AugmentError> {
    let eta0 = compute_eta0(k, epsilon)?;
    if !(eta > 0.0 && eta < eta0) {
        return Err(AugmentError::BadParams(format!("eta must lie in (0, {eta0}), got {eta}")));
    }
    let kf = k as f64;
    let gamma =
        (2.0 / (kf.powi(3) - 2.0 * kf * kf - kf + 4.0)).min((2.0 * (kf - 1.0) * (1.0 - epsilon) - 2.0) / (kf - 3.0));
    let gamma_prime = (1.0 / (4.0 * (kf - 1.0))).min(eta0 - eta);
    Ok((gamma, gamma_prime))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub k: usize,
    pub epsilon: f64,
    pub eta: f64,
    /// Slack constant handed to the codegree reduction; must lie in (0, 1/3).
    pub delta: f64,
    pub mu: f64,
}

impl PipelineParams {
    /// Parameters with eta set to half of eta_0.
    pub fn for_uniformity(k: usize, epsilon: f64) -> Result<Self, AugmentError> {
        let eta = compute_eta0(k, epsilon)? / 2.0;
        Ok(PipelineParams { k, epsilon, eta, delta: 0.3, mu: 0.5 })
    }

    pub fn eta0(&self) -> Result<f64, AugmentError> {
        compute_eta0(self.k, self.epsilon)
    }

    pub fn gammas(&self) -> Result<(f64, f64), AugmentError> {
        compute_gamma(self.k, self.epsilon, self.eta)
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        self.gammas()?;
        if !(self.delta > 0.0 && self.delta < 1.0 / 3.0) {
            return Err(AugmentError::BadParams(format!("delta must lie in (0, 1/3), got {}", self.delta)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(AugmentError::BadParams(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugStar {
    pub matched_edge: EdgeId,
    /// One edge per vertex of the matched edge, in ascending vertex order.
    pub star_edges: Vec<EdgeId>,
}

impl AugStar {
    /// Checks the star conditions against (H, M, leftover set U).
    pub fn check(&self, h: &Hypergraph, matching: &Matching, leftover: &[bool]) -> bool {
        let k = h.edge(self.matched_edge).len();
        if self.star_edges.len() != k || !matching.edges().contains(&self.matched_edge) {
            return false;
        }
        let em = h.edge(self.matched_edge);
        let mut seen: Vec<u32> = Vec::new();
        for &e in &self.star_edges {
            if e >= h.num_edges() {
                return false;
            }
            let edge = h.edge(e);
            if edge.iter().filter(|v| em.contains(v)).count() != 1 {
                return false;
            }
            for &v in edge {
                if seen.contains(&v) {
                    return false;
                }
                seen.push(v);
                if !em.contains(&v) && !leftover[v as usize] {
                    return false;
                }
            }
        }
        true
    }
}

/// Which part of a star hypergraph a vertex id denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarVertex {
    /// A matched edge of the base hypergraph.
    Left(EdgeId),
    /// A leftover vertex of the base hypergraph in the given copy.
    Right { copy: usize, vertex: VertexId },
}

/// H_A or a boosted copy H_A'. Vertex ids: left vertices first, then `copies`
/// blocks of right vertices. Edge `e` is star `e % stars` placed in copy
/// `e / stars`.
#[derive(Debug, Clone)]
pub struct AugStarHypergraph {
    pub hypergraph: Hypergraph,
    pub tag: PartiteTag,
    /// Matched edge of the base hypergraph behind each left vertex.
    pub left: Vec<EdgeId>,
    /// Base vertex behind each right index.
    pub right: Vec<VertexId>,
    pub copies: usize,
    k: usize,
    star_matched: Vec<u32>,
    star_edges: Vec<u32>,
    /// Exact number of stars per left vertex, including any beyond the cap.
    pub left_full_degree: Vec<u64>,
    /// Left indices whose stars were truncated at the cap.
    pub truncated: Vec<usize>,
}

impl AugStarHypergraph {
    pub fn base_uniformity(&self) -> usize {
        self.k
    }

    pub fn num_left(&self) -> usize {
        self.left.len()
    }

    pub fn num_right(&self) -> usize {
        self.right.len()
    }

    pub fn num_stars(&self) -> usize {
        self.star_matched.len()
    }

    pub fn star(&self, i: usize) -> AugStar {
        AugStar {
            matched_edge: self.star_matched[i] as EdgeId,
            star_edges: self.star_edges[i * self.k..(i + 1) * self.k].iter().map(|&e| e as EdgeId).collect(),
        }
    }

    /// Back-map: the star encoded by an edge of `hypergraph`.
    pub fn star_of_edge(&self, e: EdgeId) -> Result<AugStar, AugmentError> {
        if e >= self.hypergraph.num_edges() || self.num_stars() == 0 {
            return Err(AugmentError::BackMapMissing(e));
        }
        Ok(self.star(e % self.num_stars()))
    }

    pub fn copy_of_edge(&self, e: EdgeId) -> usize {
        e / self.num_stars().max(1)
    }

    pub fn right_vertex(&self, copy: usize, r: usize) -> VertexId {
        self.left.len() + copy * self.right.len() + r
    }

    pub fn decode_vertex(&self, v: VertexId) -> StarVertex {
        if v < self.left.len() {
            StarVertex::Left(self.left[v])
        } else {
            let r = v - self.left.len();
            StarVertex::Right { copy: r / self.right.len(), vertex: self.right[r % self.right.len()] }
        }
    }

    /// Every edge decodes to a valid star whose image is exactly that edge.
    pub fn check_back_map(&self, h: &Hypergraph, matching: &Matching, leftover: &[bool]) -> bool {
        let mut right_index = vec![u32::MAX; h.num_vertices()];
        for (i, &v) in self.right.iter().enumerate() {
            right_index[v] = i as u32;
        }
        let left_of: std::collections::HashMap<EdgeId, usize> =
            self.left.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        (0..self.hypergraph.num_edges()).all(|e| {
            let Ok(star) = self.star_of_edge(e) else { return false };
            if !star.check(h, matching, leftover) {
                return false;
            }
            let copy = self.copy_of_edge(e);
            let Some(&l) = left_of.get(&star.matched_edge) else { return false };
            let em = h.edge(star.matched_edge);
            let mut image: Vec<u32> = vec![l as u32];
            for &se in &star.star_edges {
                for &v in h.edge(se) {
                    if !em.contains(&v) {
                        image.push(self.right_vertex(copy, right_index[v as usize] as usize) as u32);
                    }
                }
            }
            image.sort_unstable();
            image == self.hypergraph.edge(e)
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        left: Vec<EdgeId>,
        right: Vec<VertexId>,
        copies: usize,
        k: usize,
        star_matched: Vec<u32>,
        star_edges: Vec<u32>,
        images: &[u32],
        left_full_degree: Vec<u64>,
        truncated: Vec<usize>,
    ) -> Self {
        let width = k * (k - 1) + 1;
        let stars = star_matched.len();
        let num_left = left.len();
        let num_right = right.len();
        let n = num_left + copies * num_right;
        let mut b = HypergraphBuilder::new(n).uniform(width);
        b.reserve(stars * copies, width);
        let mut buf = Vec::with_capacity(width);
        for copy in 0..copies {
            for img in images.chunks(width) {
                buf.clear();
                buf.push(img[0] as usize);
                buf.extend(img[1..].iter().map(|&r| num_left + copy * num_right + r as usize));
                b.push_edge(&buf).expect("star images are valid edges");
            }
        }
        let mut parts = vec![Part::Left; num_left];
        for copy in 0..copies {
            parts.extend(std::iter::repeat_n(Part::Right(copy as u32), num_right));
        }
        AugStarHypergraph {
            hypergraph: b.build(),
            tag: PartiteTag::new(parts, 1, k * (k - 1)),
            left,
            right,
            copies,
            k,
            star_matched,
            star_edges,
            left_full_degree,
            truncated,
        }
    }

    /// Image of every star as (left index, right indices), in star order.
    fn images(&self) -> Vec<u32> {
        let m = self.num_stars();
        let width = self.hypergraph.uniformity().unwrap_or(self.k * (self.k - 1) + 1);
        let nl = self.num_left() as u32;
        let mut out = Vec::with_capacity(m * width);
        for e in 0..m {
            let edge = self.hypergraph.edge(e);
            out.push(edge[0]);
            out.extend(edge[1..].iter().map(|&v| v - nl));
        }
        out
    }
}

struct LeftStars {
    stars: Vec<u32>,
    images: Vec<u32>,
    full: u64,
}

fn stars_at(
    h: &Hypergraph,
    em: EdgeId,
    left_index: u32,
    leftover: &[bool],
    right_index: &[u32],
    cap: usize,
) -> LeftStars {
    let verts = h.edge(em);
    let k = verts.len();
    let candidates: Vec<Vec<u32>> = verts
        .iter()
        .map(|&v| {
            h.incident(v as usize)
                .iter()
                .copied()
                .filter(|&e| e as usize != em && h.edge(e as usize).iter().all(|&w| w == v || leftover[w as usize]))
                .collect()
        })
        .collect();
    let mut out = LeftStars { stars: Vec::new(), images: Vec::new(), full: 0 };
    if candidates.iter().any(Vec::is_empty) {
        return out;
    }
    let mut walk = StarWalk {
        h,
        verts,
        candidates: &candidates,
        left_index,
        right_index,
        cap,
        chosen: Vec::with_capacity(k),
        used: Vec::with_capacity(k * (k - 1)),
        out: &mut out,
    };
    walk.descend(0);
    out
}

/// Backtracking over one petal per vertex of the matched edge; `used` holds
/// the petal vertices outside the matched edge chosen so far.
struct StarWalk<'a> {
    h: &'a Hypergraph,
    verts: &'a [u32],
    candidates: &'a [Vec<u32>],
    left_index: u32,
    right_index: &'a [u32],
    cap: usize,
    chosen: Vec<u32>,
    used: Vec<u32>,
    out: &'a mut LeftStars,
}

impl StarWalk<'_> {
    fn descend(&mut self, j: usize) {
        if j == self.verts.len() {
            self.out.full += 1;
            if (self.out.full as usize) <= self.cap {
                self.out.stars.extend_from_slice(&self.chosen);
                let start = self.out.images.len();
                self.out.images.push(self.left_index);
                self.out.images.extend(self.used.iter().map(|&v| self.right_index[v as usize]));
                self.out.images[start + 1..].sort_unstable();
            }
            return;
        }
        let anchor = self.verts[j];
        for &e in &self.candidates[j] {
            let edge = self.h.edge(e as usize);
            if edge.iter().any(|w| *w != anchor && self.used.contains(w)) {
                continue;
            }
            let mark = self.used.len();
            self.used.extend(edge.iter().copied().filter(|&w| w != anchor));
            self.chosen.push(e);
            self.descend(j + 1);
            self.chosen.pop();
            self.used.truncate(mark);
        }
    }
}

/// Enumerates every augmenting star of (H, M, W), storing at most `cap`
/// stars per matched edge. Truncated left vertices are listed, and their exact
/// star counts are kept in `left_full_degree`. Left vertices are the matched
/// edges in ascending id order; right vertices are the leftover vertices in
/// ascending order.
pub fn enumerate_aug_stars(h: &Hypergraph, matching: &Matching, waste: &[bool], cap: usize) -> AugStarHypergraph {
    let k = h.uniformity().unwrap_or(0).max(2);
    let leftover: Vec<bool> = (0..h.num_vertices()).map(|v| !matching.covers(v) && !waste[v]).collect();
    let right: Vec<VertexId> = (0..h.num_vertices()).filter(|&v| leftover[v]).collect();
    let mut right_index = vec![u32::MAX; h.num_vertices()];
    for (i, &v) in right.iter().enumerate() {
        right_index[v] = i as u32;
    }
    let left: Vec<EdgeId> = matching.edges().to_vec();
    let per_left: Vec<LeftStars> =
        left.par_iter().enumerate().map(|(i, &em)| stars_at(h, em, i as u32, &leftover, &right_index, cap)).collect();
    let mut star_matched = Vec::new();
    let mut star_edges = Vec::new();
    let mut images = Vec::new();
    let mut full = Vec::with_capacity(left.len());
    let mut truncated = Vec::new();
    for (i, ls) in per_left.into_iter().enumerate() {
        let stored = ls.stars.len() / k;
        star_matched.extend(std::iter::repeat_n(left[i] as u32, stored));
        star_edges.extend(ls.stars);
        images.extend(ls.images);
        if ls.full as usize > stored {
            truncated.push(i);
        }
        full.push(ls.full);
    }
    AugStarHypergraph::from_parts(left, right, 1, k, star_matched, star_edges, &images, full, truncated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct M3Bands {
    /// Mean degree ratios must lie in [1/factor, factor]; medians of these
    /// skewed products sit well below their means at small D_omega.
    pub factor: f64,
    /// Codegree bound constant c in c * D_omega^{k-1} * log^2 N.
    pub codegree_const: f64,
}

impl Default for M3Bands {
    fn default() -> Self {
        M3Bands { factor: 2.0, codegree_const: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
    /// Share of entries inside the configured factor band.
    pub within_band: f64,
}

fn spread(values: &mut [f64], factor: f64) -> Spread {
    if values.is_empty() {
        return Spread { min: 0.0, median: 0.0, max: 0.0, mean: 0.0, within_band: 0.0 };
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let median = if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) };
    let inside = values.iter().filter(|&&r| r >= 1.0 / factor && r <= factor).count();
    Spread {
        min: values[0],
        median,
        max: values[n - 1],
        mean: values.iter().sum::<f64>() / n as f64,
        within_band: inside as f64 / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M3Report {
    pub d_omega: f64,
    pub left_degree: Spread,
    pub right_degree: Spread,
    /// d(e) / D_omega^k over left vertices.
    pub left_ratio: Spread,
    /// d(x) / (Z_omega(x) D_omega^{k-1}) over right vertices with Z_omega(x) > 0.
    pub right_ratio: Spread,
    /// Right vertices with Z_omega(x) = 0 but positive degree; always 0 for a
    /// correct enumeration.
    pub right_unexplained: usize,
    pub left_left_codegree: usize,
    pub max_codegree: usize,
    pub codegree_bound: f64,
    /// True when stars were capped, so right degrees are lower bounds.
    pub sampled: bool,
    pub passed: bool,
}

/// Degree and codegree audit of an unboosted star hypergraph built from the
/// final state of `outcome`.
pub fn verify_m3(
    ha: &AugStarHypergraph,
    h: &Hypergraph,
    outcome: &NibbleOutcome,
    bands: &M3Bands,
) -> Result<M3Report, AugmentError> {
    if ha.copies != 1 {
        return Err(AugmentError::Boosted);
    }
    if ha.num_left() == 0 {
        return Err(AugmentError::EmptySide("left"));
    }
    if ha.num_right() == 0 {
        return Err(AugmentError::EmptySide("right"));
    }
    let k = ha.base_uniformity() as i32;
    let d_omega = outcome.log.final_d();
    let hg = &ha.hypergraph;
    let mut left_deg: Vec<f64> = ha.left_full_degree.iter().map(|&d| d as f64).collect();
    let mut left_ratio: Vec<f64> = left_deg.iter().map(|&d| d / d_omega.powi(k)).collect();
    let state = &outcome.state;
    let mut right_deg = Vec::with_capacity(ha.num_right());
    let mut right_ratio = Vec::new();
    let mut unexplained = 0;
    for (r, &x) in ha.right.iter().enumerate() {
        let d = hg.degree(ha.right_vertex(0, r)) as f64;
        right_deg.push(d);
        let z = stat_z(h, state.alive(), state.owner(), x) as f64;
        if z > 0.0 {
            right_ratio.push(d / (z * d_omega.powi(k - 1)));
        } else if d > 0.0 {
            unexplained += 1;
        }
    }
    let left_left = hg
        .edges()
        .map(|e| e.iter().filter(|&&v| (v as usize) < ha.num_left()).count())
        .map(|c| usize::from(c >= 2))
        .max()
        .unwrap_or(0);
    let max_codegree = hg.max_codegree();
    let ln_n = (h.num_vertices().max(2) as f64).ln();
    let codegree_bound = bands.codegree_const * d_omega.powi(k - 1) * ln_n * ln_n;
    let left_ratio = spread(&mut left_ratio, bands.factor);
    let right_ratio = spread(&mut right_ratio, bands.factor);
    let in_band = |s: &Spread| s.mean >= 1.0 / bands.factor && s.mean <= bands.factor;
    let passed = left_left == 0
        && unexplained == 0
        && (max_codegree as f64) <= codegree_bound
        && in_band(&left_ratio)
        && in_band(&right_ratio);
    Ok(M3Report {
        d_omega,
        left_degree: spread(&mut left_deg, bands.factor),
        right_degree: spread(&mut right_deg, bands.factor),
        left_ratio,
        right_ratio,
        right_unexplained: unexplained,
        left_left_codegree: left_left,
        max_codegree,
        codegree_bound,
        sampled: !ha.truncated.is_empty(),
        passed,
    })
}

fn side_means(ha: &AugStarHypergraph) -> (f64, f64) {
    let hg = &ha.hypergraph;
    let mean = |range: std::ops::Range<usize>| {
        let live: Vec<usize> = range.map(|v| hg.degree(v)).filter(|&d| d > 0).collect();
        if live.is_empty() {
            0.0
        } else {
            live.iter().sum::<usize>() as f64 / live.len() as f64
        }
    };
    (mean(0..ha.num_left()), mean(ha.num_left()..ha.num_left() + ha.num_right()))
}

/// Replicates the right side floor(D_R / D_L) times (at least once), using
/// mean degrees over non-isolated vertices of each side.
pub fn boost(ha: &AugStarHypergraph) -> Result<AugStarHypergraph, AugmentError> {
    if ha.copies != 1 {
        return Err(AugmentError::Boosted);
    }
    let (d_l, d_r) = side_means(ha);
    if d_l == 0.0 {
        return Err(AugmentError::ZeroLeftDegree);
    }
    let copies = ((d_r / d_l).floor() as usize).max(1);
    Ok(boost_with(ha, copies))
}

/// Boosting with an explicit copy count.
pub fn boost_with(ha: &AugStarHypergraph, copies: usize) -> AugStarHypergraph {
    let images = ha.images();
    AugStarHypergraph::from_parts(
        ha.left.clone(),
        ha.right.clone(),
        copies.max(1),
        ha.k,
        ha.star_matched.clone(),
        ha.star_edges.clone(),
        &images,
        ha.left_full_degree.clone(),
        ha.truncated.clone(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub matching: Matching,
    /// Stars applied, as edges of the star hypergraph in copy 0.
    pub applied: Vec<EdgeId>,
}

/// Applies the stars of `m_a` that lie in copy 0 (the R^1 restriction) to
/// `m`: each replaces its matched edge by its k star edges.
pub fn augment_matching(
    h: &Hypergraph,
    m: &Matching,
    ha: &AugStarHypergraph,
    m_a: &[EdgeId],
) -> Result<Augmentation, AugmentError> {
    let mut applied: Vec<EdgeId> = m_a.iter().copied().filter(|&e| ha.copy_of_edge(e) == 0).collect();
    applied.sort_unstable();
    if let Some(&bad) = applied.iter().find(|&&e| e >= ha.hypergraph.num_edges()) {
        return Err(AugmentError::BackMapMissing(bad));
    }
    if !ha.hypergraph.verify_matching(&applied)?.valid {
        return Err(AugmentError::InvalidStarMatching);
    }
    let mut removed = Vec::with_capacity(applied.len());
    let mut added = Vec::with_capacity(applied.len() * ha.k);
    for &e in &applied {
        let star = ha.star_of_edge(e)?;
        removed.push(star.matched_edge);
        added.extend(star.star_edges);
    }
    removed.sort_unstable();
    let mut edges: Vec<EdgeId> = m.edges().iter().copied().filter(|e| removed.binary_search(e).is_err()).collect();
    edges.extend(added);
    let matching = Matching::from_edges(h, &edges)?;
    Ok(Augmentation { matching, applied })
}

/// Sidecar text for a star hypergraph: one line per base star,
/// `matched_edge: e_1 ... e_k`, after a versioned comment header.
pub fn back_map_to_text(ha: &AugStarHypergraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nibble-match backmap v1 copies={} stars={}", ha.copies, ha.num_stars());
    for i in 0..ha.num_stars() {
        let star = ha.star(i);
        let _ = write!(out, "{}:", star.matched_edge);
        for e in star.star_edges {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
    }
    out
}

/// Parses back-map sidecar text; blank and `#` lines are skipped and every
/// star must have the same number of edges.
pub fn parse_back_map(text: &str) -> Result<Vec<AugStar>, ParseError> {
    let mut stars = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| ParseError::Syntax { line: i + 1, msg: msg.to_string() };
        let (head, tail) = line.split_once(':').ok_or_else(|| bad("expected `matched: edges`"))?;
        let matched_edge = head.trim().parse::<usize>().map_err(|_| bad("bad matched edge id"))?;
        let star_edges = tail
            .split_ascii_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad("bad star edge id")))
            .collect::<Result<Vec<_>, _>>()?;
        if star_edges.is_empty() {
            return Err(bad("star has no edges"));
        }
        if *width.get_or_insert(star_edges.len()) != star_edges.len() {
            return Err(bad("stars differ in size"));
        }
        stars.push(AugStar { matched_edge, star_edges });
    }
    Ok(stars)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplifyStrategy {
    /// The full codegree-reduction chain; instances too small for the
    /// regularization step yield an empty star matching.
    #[default]
    CodegreeReduction,
    /// A random maximal set of star edges pairwise sharing at most one vertex.
    ConflictFreeGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub params: PipelineParams,
    pub strategy: SimplifyStrategy,
    pub star_cap: usize,
    pub simplify: SimplifyConfig,
    pub bands: M3Bands,
    pub track_sets: Vec<Vec<VertexId>>,
    pub max_stages: usize,
    /// Replace the derived gamma / gamma' (for experiments only).
    pub gamma_override: Option<f64>,
    pub gamma_prime_override: Option<f64>,
    /// Declared (D, Delta_0); measured values are used when absent.
    pub declared: Option<(f64, f64)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            params: PipelineParams::for_uniformity(4, 0.5).expect("k = 4, epsilon = 1/2 is admissible"),
            strategy: SimplifyStrategy::default(),
            star_cap: DEFAULT_STAR_CAP,
            simplify: SimplifyConfig::default(),
            bands: M3Bands::default(),
            track_sets: Vec::new(),
            max_stages: 10_000,
            gamma_override: None,
            gamma_prime_override: None,
            declared: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NibbleSummary {
    pub gamma: f64,
    pub d0: f64,
    pub omega: usize,
    pub d_omega: f64,
    pub termination: Termination,
    pub matched_edges: usize,
    pub waste: usize,
    pub leftover: usize,
}

impl NibbleSummary {
    fn of(outcome: &NibbleOutcome, gamma: f64) -> Self {
        NibbleSummary {
            gamma,
            d0: outcome.log.d0,
            omega: outcome.log.omega(),
            d_omega: outcome.log.final_d(),
            termination: outcome.log.termination,
            matched_edges: outcome.matching.len(),
            waste: outcome.waste.iter().filter(|&&w| w).count(),
            leftover: outcome.leftover_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedSetReport {
    pub size: usize,
    pub leftover: usize,
    pub waste: usize,
    pub uncovered_m: usize,
    pub uncovered_m_star: usize,
    /// |S| D^{-1/(k-1)}.
    pub baseline: f64,
    /// |S| D^{-1/(k-1) - eta}.
    pub baseline_improved: f64,
    /// Set to "outside-hypothesis" when |S| < sqrt(D) log N.
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplifyStatus {
    Complete,
    /// The instance was too small for the reduction chain.
    Degenerate,
    /// No stars to simplify.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub k: usize,
    pub d: f64,
    pub eta0: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// D >= exp(log^mu N).
    pub degree_hypothesis: bool,
    pub outer: NibbleSummary,
    pub stars: usize,
    pub stars_truncated: usize,
    pub left: usize,
    pub right: usize,
    pub m3: Option<M3Report>,
    pub copies: usize,
    pub strategy: SimplifyStrategy,
    pub simplify_status: SimplifyStatus,
    pub simplify: Option<SimplifyReport>,
    pub simple_star_edges: usize,
    pub inner: Option<NibbleSummary>,
    pub stars_applied: usize,
    pub m_size: usize,
    pub m_star_size: usize,
    pub tracked: Vec<TrackedSetReport>,
    pub valid: bool,
    pub exact: bool,
    pub monotone: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub initial: Matching,
    /// Unboosted star hypergraph of the first nibble run.
    pub stars: AugStarHypergraph,
    pub matching: Matching,
    pub report: PipelineReport,
}

fn count_in(set: &[VertexId], pred: impl Fn(VertexId) -> bool) -> usize {
    set.iter().filter(|&&v| pred(v)).count()
}

/// nibble(H, gamma) -> stars -> boost -> simplification -> nibble(H_A'',
/// gamma') restricted to copy 0 -> augmentation. Every stage failure is
/// tagged with its stage name.
pub fn full_simple_pipeline(h: &Hypergraph, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutcome, PipelineError> {
    let k = h.uniformity().ok_or(PipelineError::NotUniform)?;
    let params = PipelineParams { k, ..cfg.params };
    params.validate()?;
    if !h.is_simple() {
        return Err(PipelineError::NotSimple);
    }
    let (gamma, gamma_prime) = params.gammas()?;
    let gamma = cfg.gamma_override.unwrap_or(gamma);
    let gamma_prime = cfg.gamma_prime_override.unwrap_or(gamma_prime);
    let eta0 = params.eta0()?;
    let n = h.num_vertices();
    let mut warnings = Vec::new();

    let outer_cfg = NibbleConfig {
        gamma,
        max_stages: cfg.max_stages,
        seed: rng::derive_seed(seed, 1),
        track_sets: cfg.track_sets.clone(),
        delta0: cfg.declared.map(|d| d.1),
        ..NibbleConfig::default()
    };
    let nib = |source| PipelineError::Nibble { stage: "nibble", source };
    let mut state = NibbleState::new(h, outer_cfg.seed).map_err(nib)?;
    if let Some((d, delta)) = cfg.declared {
        state = state.with_initial(d, delta);
    }
    let outer = nibble::run_nibble_from(h, state, &outer_cfg).map_err(nib)?;
    warnings.extend(outer.warnings.iter().cloned());
    let d = outer.log.d0;
    let m = outer.matching.clone();

    let ha = enumerate_aug_stars(h, &m, &outer.waste, cfg.star_cap);
    let m3 = match verify_m3(&ha, h, &outer, &cfg.bands) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("structure audit skipped: {e}"));
            None
        }
    };

    let mut copies = 0;
    let mut status = SimplifyStatus::Skipped;
    let mut simplify_report = None;
    let mut simple_edges = 0;
    let mut inner_summary = None;
    let mut applied = Vec::new();
    let mut m_star = m.clone();

    if ha.num_stars() > 0 {
        let boosted = boost(&ha).map_err(|source| PipelineError::Augment { stage: "boost", source })?;
        copies = boosted.copies;
        let kept: Vec<EdgeId> = match cfg.strategy {
            SimplifyStrategy::CodegreeReduction => {
                let c0 = boosted.hypergraph.max_codegree() as f64;
                let scfg = SimplifyConfig { seed: rng::derive_seed(seed, 2), delta: params.delta, ..cfg.simplify };
                match simplify::simple_subhypergraph(&boosted.hypergraph, c0, None, &scfg) {
                    Ok(out) => {
                        status = SimplifyStatus::Complete;
                        simplify_report = Some(out.report);
                        out.kept
                    }
                    Err(e) if e.is_infeasible() => {
                        status = SimplifyStatus::Degenerate;
                        warnings.push(format!("codegree reduction infeasible at this size: {e}"));
                        Vec::new()
                    }
                    Err(source) => return Err(PipelineError::Simplify { stage: "simplify", source }),
                }
            }
            SimplifyStrategy::ConflictFreeGreedy => {
                status = SimplifyStatus::Complete;
                simplify::greedy_conflict_free(&boosted.hypergraph, rng::derive_seed(seed, 3))
            }
        };
        simple_edges = kept.len();
        if !kept.is_empty() {
            let h_simple = boosted.hypergraph.edge_subhypergraph(&kept);
            let mut right_index = vec![usize::MAX; n];
            for (r, &v) in boosted.right.iter().enumerate() {
                right_index[v] = r;
            }
            let mut inner_sets: Vec<Vec<VertexId>> = Vec::new();
            for set in std::iter::once(&(0..n).collect::<Vec<_>>()).chain(cfg.track_sets.iter()) {
                inner_sets.push(
                    set.iter()
                        .filter(|&&v| right_index[v] != usize::MAX)
                        .map(|&v| boosted.right_vertex(0, right_index[v]))
                        .collect(),
                );
            }
            let inner_cfg = NibbleConfig {
                gamma: gamma_prime,
                max_stages: cfg.max_stages,
                seed: rng::derive_seed(seed, 4),
                track_sets: inner_sets,
                ..NibbleConfig::default()
            };
            let inner = nibble::run_nibble(&h_simple, &inner_cfg)
                .map_err(|source| PipelineError::Nibble { stage: "inner nibble", source })?;
            inner_summary = Some(NibbleSummary::of(&inner, gamma_prime));
            let m_a: Vec<EdgeId> = inner.matching.edges().iter().map(|&e| kept[e]).collect();
            let aug = augment_matching(h, &m, &boosted, &m_a)
                .map_err(|source| PipelineError::Augment { stage: "augment", source })?;
            applied = aug.applied;
            m_star = aug.matching;
        }
    }

    let valid = h.verify_matching(m_star.edges()).map(|r| r.valid).unwrap_or(false);
    let exact = m_star.len() == m.len() + (k - 1) * applied.len();
    let all: Vec<VertexId> = (0..n).collect();
    let ln_n = (n.max(2) as f64).ln();
    let tracked: Vec<TrackedSetReport> = std::iter::once(&all)
        .chain(cfg.track_sets.iter())
        .map(|s| {
            let size = s.len() as f64;
            let shape = size * d.powf(-1.0 / (k as f64 - 1.0));
            TrackedSetReport {
                size: s.len(),
                leftover: count_in(s, |v| outer.leftover[v]),
                waste: count_in(s, |v| outer.waste[v]),
                uncovered_m: count_in(s, |v| !m.covers(v)),
                uncovered_m_star: count_in(s, |v| !m_star.covers(v)),
                baseline: shape,
                baseline_improved: shape * d.powf(-params.eta),
                tag: (size < d.sqrt() * ln_n).then(|| "outside-hypothesis".to_string()),
            }
        })
        .collect();
    let monotone = tracked.iter().all(|t| t.uncovered_m_star <= t.uncovered_m);
    let report = PipelineReport {
        n,
        k,
        d,
        eta0,
        gamma,
        gamma_prime,
        degree_hypothesis: d >= ln_n.powf(params.mu).exp(),
        outer: NibbleSummary::of(&outer, gamma),
        stars: ha.num_stars(),
        stars_truncated: ha.truncated.len(),
        left: ha.num_left(),
        right: ha.num_right(),
        m3,
        copies,
        strategy: cfg.strategy,
        simplify_status: status,
        simplify: simplify_report,
        simple_star_edges: simple_edges,
        inner: inner_summary,
        stars_applied: applied.len(),
        m_size: m.len(),
        m_star_size: m_star.len(),
        tracked,
        valid,
        exact,
        monotone,
        warnings,
    };
    Ok(PipelineOutcome { initial: m, stars: ha, matching: m_star, report })
}

/// eta_0 for the small-codegree setting: eta_diamond(k), further capped by
/// 1 - 1/(k-1) - epsilon when epsilon > 1/2.
pub fn codegree_eta0(k: usize, epsilon: f64) -> Result<f64, AugmentError> {
    check_k_eps(k, epsilon)?;
    let base = eta_diamond(k);
    Ok(if epsilon > 0.5 { base.min(1.0 - 1.0 / (k as f64 - 1.0) - epsilon) } else { base })
}

/// (epsilon*, eta*) handed to the simple-hypergraph pipeline after the
/// codegree reduction with slack delta.
pub fn reparameterize(k: usize, epsilon: f64, eta: f64, delta: f64) -> (f64, f64) {
    let inv = 1.0 / (k as f64 - 1.0);
    let eps_star = if epsilon <= 0.5 { 0.5 + delta / 4.0 } else { (epsilon - delta / 2.0) / (1.0 - delta / 2.0) };
    let eta_star = (inv + eta) / (1.0 - delta) - inv;
    (eps_star, eta_star)
}

#[derive(Debug, Clone)]
pub struct CodegreeOutcome {
    pub matching: Matching,
    pub simplify: Option<SimplifyReport>,
    pub pipeline: PipelineReport,
}

/// Matching pipeline for a near-regular hypergraph with codegree at most `c`.
/// A simple input goes straight to [`full_simple_pipeline`]; otherwise the
/// codegree reduction runs with slack delta/2 and the pipeline runs on the
/// simple subhypergraph with reparameterized (epsilon*, eta*).
pub fn codegree_pipeline(
    h: &Hypergraph,
    c: f64,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<CodegreeOutcome, PipelineError> {
    let k = h.uniformity().ok_or(PipelineError::NotUniform)?;
    let p = cfg.params;
    let eta0 = codegree_eta0(k, p.epsilon)?;
    if !(p.eta > 0.0 && p.eta < eta0) {
        return Err(AugmentError::BadParams(format!("eta must lie in (0, {eta0}), got {}", p.eta)).into());
    }
    if h.is_simple() {
        let out = full_simple_pipeline(h, cfg, seed)?;
        return Ok(CodegreeOutcome { matching: out.matching, simplify: None, pipeline: out.report });
    }
    let scfg = SimplifyConfig { delta: p.delta / 2.0, seed: rng::derive_seed(seed, 5), ..cfg.simplify };
    let simp = simplify::simple_subhypergraph(h, c, None, &scfg)
        .map_err(|source| PipelineError::Simplify { stage: "codegree reduction", source })?;
    let (eps_star, eta_star) = reparameterize(k, p.epsilon, p.eta, p.delta);
    let inner_cfg = PipelineConfig {
        params: PipelineParams { k, epsilon: eps_star, eta: eta_star, ..p },
        declared: None,
        ..cfg.clone()
    };
    let out = full_simple_pipeline(&simp.hypergraph, &inner_cfg, rng::derive_seed(seed, 6))?;
    let ids: Vec<EdgeId> = out.matching.edges().iter().map(|&e| simp.kept[e]).collect();
    let matching =
        Matching::from_edges(h, &ids).map_err(|e| PipelineError::Augment { stage: "lift", source: e.into() })?;
    Ok(CodegreeOutcome { matching, simplify: Some(simp.report), pipeline: out.report })
}
