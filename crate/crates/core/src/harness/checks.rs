//! Empirical checks of the nibble's concentration and near-independence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::hypergraph::{Hypergraph, VertexId};
use crate::nibble::{NibbleState, TrajectoryLog};
use crate::rng::{self, for_each_bernoulli, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcentrationTolerances {
    /// Allowed relative deviation of |U_i| from its prediction.
    pub survivors: f64,
    /// Allowed relative deviation of the empirical degree extremes from D_i.
    pub degrees: f64,
}

impl Default for ConcentrationTolerances {
    fn default() -> Self {
        ConcentrationTolerances { survivors: 0.1, degrees: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConcentration {
    pub i: usize,
    pub alive: usize,
    pub predicted: f64,
    pub survivors_dev: f64,
    pub d: f64,
    pub delta: f64,
    pub d_min: usize,
    pub d_max: usize,
    /// max(|d_min - D_i|, |d_max - D_i|) / D_i.
    pub degree_dev: f64,
    /// d_min >= D_i - Delta_i and d_max <= D_i + Delta_i.
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub stages: Vec<StageConcentration>,
    pub length_mismatch: bool,
    pub max_survivors_dev: f64,
    pub survivors_passed: bool,
    pub degrees_passed: bool,
    /// Share of stages whose degree extremes lie inside D_i +- Delta_i.
    pub band_share: f64,
    pub d_omega: f64,
    /// [(1 - e^{-k})^{k-1} D_0^gamma / 4, D_0^gamma].
    pub window: (f64, f64),
    pub window_passed: bool,
    pub passed: bool,
}

/// Predicted |U_i| = |U_0| prod_{j <= i} (1 - p*_{j-1}) from the probabilities
/// the run itself used.
pub fn survival_predictions(log: &TrajectoryLog) -> Vec<f64> {
    let mut u = log.initial.alive as f64;
    std::iter::once(u)
        .chain(log.stages.iter().map(|s| {
            u *= 1.0 - s.p_star;
            u
        }))
        .collect()
}

/// Compares a trajectory with predicted survivor counts (one per row,
/// starting at stage 0) and audits the degree band and the D_omega window.
pub fn check_concentration(
    log: &TrajectoryLog,
    predictions: &[f64],
    tol: &ConcentrationTolerances,
) -> ConcentrationReport {
    let rows: Vec<_> = log.rows().collect();
    let stages: Vec<StageConcentration> = rows
        .iter()
        .zip(predictions)
        .map(|(r, &p)| {
            let degree_dev =
                if r.d > 0.0 { (r.d_min as f64 - r.d).abs().max((r.d_max as f64 - r.d).abs()) / r.d } else { 0.0 };
            StageConcentration {
                i: r.i,
                alive: r.alive,
                predicted: p,
                survivors_dev: if p > 0.0 { (r.alive as f64 - p).abs() / p } else { 0.0 },
                d: r.d,
                delta: r.delta,
                d_min: r.d_min,
                d_max: r.d_max,
                degree_dev,
                in_band: r.d_min as f64 >= r.d - r.delta && r.d_max as f64 <= r.d + r.delta,
            }
        })
        .collect();
    let length_mismatch = rows.len() != predictions.len();
    let max_survivors_dev = stages.iter().map(|s| s.survivors_dev).fold(0.0, f64::max);
    let survivors_passed = !length_mismatch && max_survivors_dev <= tol.survivors;
    let degrees_passed = stages.iter().all(|s| s.degree_dev <= tol.degrees);
    let band_share =
        if stages.is_empty() { 0.0 } else { stages.iter().filter(|s| s.in_band).count() as f64 / stages.len() as f64 };
    let k = log.k as i32;
    let top = log.d0.powf(log.gamma);
    let window = ((1.0 - (-(k as f64)).exp()).powi(k - 1) * top / 4.0, top);
    let d_omega = log.final_d();
    let window_passed = d_omega >= window.0 && d_omega <= window.1;
    ConcentrationReport {
        passed: survivors_passed && window_passed,
        stages,
        length_mismatch,
        max_survivors_dev,
        survivors_passed,
        degrees_passed,
        band_share,
        d_omega,
        window,
        window_passed,
    }
}

/// Events of an almost-independence check: each `survivors` vertex stays in
/// U_i and each `covered` vertex is covered by M_i.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TupleSpec {
    pub survivors: Vec<VertexId>,
    pub covered: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub samples: usize,
    pub d: f64,
    pub joint: f64,
    pub marginals: Vec<f64>,
    pub product: f64,
    /// |joint - product| / product.
    pub deviation: f64,
    /// Binomial standard error of the joint frequency, relative to the product.
    pub std_error: f64,
    /// c / D + 4 SE.
    pub bound: f64,
    pub passed: bool,
}

/// Monte Carlo estimate of how far the joint probability of the tuple's
/// events in the next stage is from the product of their marginals.
///
/// Only the alive edges within distance two of the tuple are simulated: a
/// vertex is covered by M_i exactly when one of its edges is selected and no
/// edge meeting that edge is.
pub fn check_almost_independence(
    h: &Hypergraph,
    state: &NibbleState,
    tuple: &TupleSpec,
    samples: usize,
    seed: u64,
    c: f64,
) -> Result<IndependenceReport, HarnessError> {
    let k = state.uniformity();
    let verts: Vec<VertexId> = tuple.survivors.iter().chain(&tuple.covered).copied().collect();
    if verts.is_empty() || tuple.survivors.len() > 3 * k || tuple.covered.len() > 3 * k {
        return Err(HarnessError::Invalid("tuple must be nonempty with at most 3k vertices per side".into()));
    }
    let mut sorted = verts.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != verts.len() {
        return Err(HarnessError::Invalid("tuple vertices must be distinct".into()));
    }
    if let Some(&v) = verts.iter().find(|&&v| v >= h.num_vertices() || !state.is_alive(v)) {
        return Err(HarnessError::Invalid(format!("vertex {v} is not alive")));
    }
    if samples == 0 {
        return Err(HarnessError::Invalid("need at least one sample".into()));
    }
    let probs = state.probabilities(h);
    let n = h.num_vertices();

    // Local edges: first those at tuple vertices, then those meeting them.
    let mut local: Vec<u32> = Vec::new();
    let mut seen = vec![false; h.num_edges()];
    for &v in &verts {
        for &e in h.incident(v) {
            if state.edge_is_alive(e as usize) && !seen[e as usize] {
                seen[e as usize] = true;
                local.push(e);
            }
        }
    }
    let first = local.len();
    for i in 0..first {
        for &u in h.edge(local[i] as usize) {
            for &e in h.incident(u as usize) {
                if state.edge_is_alive(e as usize) && !seen[e as usize] {
                    seen[e as usize] = true;
                    local.push(e);
                }
            }
        }
    }
    // For each tuple vertex, the positions in `local` of its alive edges.
    let at: Vec<Vec<usize>> = verts
        .iter()
        .map(|&v| (0..first).filter(|&i| h.edge(local[i] as usize).contains(&(v as u32))).collect())
        .collect();

    let mut rng = rng::stream(seed, Purpose::Independence, 0);
    let mut count = vec![0u32; n];
    let mut picked = vec![false; local.len()];
    let mut selected: Vec<usize> = Vec::new();
    let events = verts.len();
    let ns = tuple.survivors.len();
    let mut hits = vec![0u64; events];
    let mut joint = 0u64;
    let mut outcome = vec![false; events];
    for _ in 0..samples {
        selected.clear();
        for_each_bernoulli(local.len(), probs.rate, &mut rng, |i| selected.push(i));
        for &i in &selected {
            picked[i] = true;
            for &u in h.edge(local[i] as usize) {
                count[u as usize] += 1;
            }
        }
        for (j, &v) in verts.iter().enumerate() {
            let matched =
                at[j].iter().any(|&i| picked[i] && h.edge(local[i] as usize).iter().all(|&u| count[u as usize] == 1));
            outcome[j] = if j < ns {
                let wasted = probs.p_w[v] > 0.0 && rng.gen::<f64>() < probs.p_w[v];
                !matched && !wasted
            } else {
                matched
            };
        }
        for &i in &selected {
            picked[i] = false;
            for &u in h.edge(local[i] as usize) {
                count[u as usize] = 0;
            }
        }
        for (h, &o) in hits.iter_mut().zip(&outcome) {
            *h += u64::from(o);
        }
        joint += u64::from(outcome.iter().all(|&o| o));
    }
    let s = samples as f64;
    let marginals: Vec<f64> = hits.iter().map(|&h| h as f64 / s).collect();
    let product: f64 = marginals.iter().product();
    let joint = joint as f64 / s;
    let (deviation, std_error) = if product > 0.0 {
        ((joint - product).abs() / product, (product * (1.0 - product) / s).sqrt() / product)
    } else {
        (if joint > 0.0 { f64::INFINITY } else { 0.0 }, f64::INFINITY)
    };
    let d = state.d();
    let bound = c / d + 4.0 * std_error;
    Ok(IndependenceReport {
        samples,
        d,
        joint,
        marginals,
        product,
        deviation,
        std_error,
        bound,
        passed: deviation <= bound,
    })
}
