use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{stat_x, stat_y, stat_z, NibbleConfig, NibbleState, StageSample};
use crate::hypergraph::Hypergraph;

/// First line of every CSV file written by this crate.
pub const CSV_HEADER_COMMENT: &str = "# nibble-match v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// D_omega <= D_0^gamma < D_{omega-1}.
    StopRule,
    MaxStages,
    /// Every vertex was removed before the stop rule fired.
    Starved,
    /// Vertices remain but no alive edge does.
    NoEdges,
    /// The tracked D fell below 1; the stage ran at rate 1 and the run ended.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub i: usize,
    pub alive: usize,
    pub d: f64,
    pub delta: f64,
    /// p*_{i-1}, the value used by stage i; 0 for the initial record.
    pub p_star: f64,
    pub selected: usize,
    pub matched: usize,
    pub wasted: usize,
    /// Extremes of the empirical D_i(x) over all vertices.
    pub d_min: usize,
    pub d_max: usize,
    /// (vertex, Z_i(x)) for sampled vertices still in U_{i-1}.
    pub z: Vec<(usize, u64)>,
    /// (x, y, Y_i(x,y), X_i(x,y)) for sampled pairs still in U_{i-1}.
    pub pairs: Vec<(usize, usize, u64, u64)>,
    /// (|S cap U_i|, |S cap W_i|) per tracked set.
    pub tracked: Vec<(usize, usize)>,
}

impl StageRecord {
    pub fn z_mean(&self) -> Option<f64> {
        (!self.z.is_empty()).then(|| self.z.iter().map(|&(_, z)| z as f64).sum::<f64>() / self.z.len() as f64)
    }
    pub fn y_max(&self) -> Option<u64> {
        self.pairs.iter().map(|p| p.2).max()
    }
    pub fn x_max(&self) -> Option<u64> {
        self.pairs.iter().map(|p| p.3).max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub n: usize,
    pub k: usize,
    pub d0: f64,
    pub delta0: f64,
    pub gamma: f64,
    pub sample_vertices: Vec<usize>,
    pub sample_pairs: Vec<(usize, usize)>,
    pub tracked_sizes: Vec<usize>,
    pub initial: StageRecord,
    pub stages: Vec<StageRecord>,
    pub termination: Termination,
}

#[derive(Serialize)]
struct CsvRow {
    i: usize,
    #[serde(rename = "U_i")]
    alive: usize,
    #[serde(rename = "D_i")]
    d: f64,
    #[serde(rename = "Delta_i")]
    delta: f64,
    p_star: f64,
    #[serde(rename = "M_i")]
    matched: usize,
    #[serde(rename = "W_i")]
    wasted: usize,
    z_mean: Option<f64>,
    y_max: Option<u64>,
    x_max: Option<u64>,
}

impl TrajectoryLog {
    pub(super) fn new(
        h: &Hypergraph,
        state: &NibbleState,
        config: &NibbleConfig,
        sample_vertices: Vec<usize>,
        sample_pairs: Vec<(usize, usize)>,
    ) -> Self {
        let n = h.num_vertices();
        let initial = StageRecord {
            i: 0,
            alive: state.alive_count(),
            d: state.d(),
            delta: state.delta(),
            p_star: 0.0,
            selected: 0,
            matched: 0,
            wasted: 0,
            d_min: (0..n).map(|x| state.current_d(x)).min().unwrap_or(0),
            d_max: (0..n).map(|x| state.current_d(x)).max().unwrap_or(0),
            z: sample_vertices.iter().map(|&x| (x, 0)).collect(),
            pairs: sample_pairs.iter().map(|&(x, y)| (x, y, stat_y(h, state.alive(), x, y), 0)).collect(),
            tracked: config.track_sets.iter().map(|s| (s.len(), 0)).collect(),
        };
        TrajectoryLog {
            n,
            k: state.uniformity(),
            d0: state.d0(),
            delta0: state.delta0(),
            gamma: config.gamma,
            tracked_sizes: config.track_sets.iter().map(|s| s.len()).collect(),
            sample_vertices,
            sample_pairs,
            initial,
            stages: Vec::new(),
            termination: Termination::MaxStages,
        }
    }

    pub(super) fn record(
        &mut self,
        h: &Hypergraph,
        state: &NibbleState,
        config: &NibbleConfig,
        sample: &StageSample,
        p_star: f64,
    ) {
        let i = state.stage();
        let n = h.num_vertices();
        let alive = state.alive();
        let owner = state.owner();
        let z = self
            .sample_vertices
            .iter()
            .filter(|&&x| state.alive_before(x, i))
            .map(|&x| (x, stat_z(h, alive, owner, x)))
            .collect();
        let pairs = self
            .sample_pairs
            .iter()
            .filter(|&&(x, y)| state.alive_before(x, i) && state.alive_before(y, i))
            .map(|&(x, y)| (x, y, stat_y(h, alive, x, y), stat_x(h, alive, owner, x, y)))
            .collect();
        let waste = state.waste();
        let tracked = config
            .track_sets
            .iter()
            .map(|s| {
                let in_u = s.iter().filter(|&&v| alive[v]).count();
                let in_w = s
                    .iter()
                    .filter(|&&v| waste[v] && state.alive_before(v, i) && !state.alive_before(v, i + 1))
                    .count();
                (in_u, in_w)
            })
            .collect();
        self.stages.push(StageRecord {
            i,
            alive: state.alive_count(),
            d: state.d(),
            delta: state.delta(),
            p_star,
            selected: sample.selected,
            matched: sample.matched.len(),
            wasted: sample.wasted.len(),
            d_min: (0..n).map(|x| state.current_d(x)).min().unwrap_or(0),
            d_max: (0..n).map(|x| state.current_d(x)).max().unwrap_or(0),
            z,
            pairs,
            tracked,
        });
    }

    /// Initial record followed by one record per executed stage.
    pub fn rows(&self) -> impl Iterator<Item = &StageRecord> {
        std::iter::once(&self.initial).chain(self.stages.iter())
    }

    /// Number of executed stages, omega.
    pub fn omega(&self) -> usize {
        self.stages.len()
    }

    pub fn final_d(&self) -> f64 {
        self.stages.last().unwrap_or(&self.initial).d
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER_COMMENT}")?;
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows() {
            w.serialize(CsvRow {
                i: r.i,
                alive: r.alive,
                d: r.d,
                delta: r.delta,
                p_star: r.p_star,
                matched: r.matched,
                wasted: r.wasted,
                z_mean: r.z_mean(),
                y_max: r.y_max(),
                x_max: r.x_max(),
            })
            .map_err(std::io::Error::other)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub i: usize,
    pub d: f64,
    pub delta: f64,
    /// Predicted |U_i| / N.
    pub u_factor: f64,
    /// Closed form (1 - e^{-k})^{i(k-1)} D_0.
    pub d_closed: f64,
}

/// Idealized trajectory with p* = e^{-k} at every stage, stopped by the same
/// rule as [`super::run_nibble`].
pub fn predict_trajectory(d0: f64, delta0: f64, k: usize, gamma: f64, n: usize) -> Vec<Prediction> {
    let p = (-(k as f64)).exp();
    let shrink = (1.0 - p).powi(k as i32 - 1);
    let target = d0.powf(gamma);
    let log_n = (n.max(2) as f64).ln();
    let mut rows = vec![Prediction { i: 0, d: d0, delta: delta0, u_factor: 1.0, d_closed: d0 }];
    let (mut d, mut delta, mut u) = (d0, delta0, 1.0);
    let mut i = 0;
    while d > target && i < 1_000_000 {
        i += 1;
        delta = shrink * delta + d.sqrt() * log_n;
        d *= shrink;
        u *= 1.0 - p;
        rows.push(Prediction { i, d, delta, u_factor: u, d_closed: (1.0 - p).powi((i * (k - 1)) as i32) * d0 });
    }
    rows
}
