use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{check_concentration, survival_predictions, ConcentrationTolerances};
use super::HarnessError;
use crate::augment::{self, PipelineConfig};
use crate::chromatic::{self, ChromaticConfig};
use crate::generators::GeneratorSpec;
use crate::hypergraph::Hypergraph;
use crate::nibble::{self, NibbleConfig, CSV_HEADER_COMMENT};
use crate::rng;

/// What each trial runs on its instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Nibble {
        #[serde(default)]
        config: NibbleConfig,
    },
    Pipeline {
        #[serde(default)]
        config: PipelineConfig,
    },
    Chromatic {
        /// Defaults to the max degree of the instance.
        #[serde(default)]
        d: Option<f64>,
        /// Defaults to the codegree of the instance.
        #[serde(default)]
        c: Option<usize>,
        #[serde(default)]
        config: ChromaticConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub concentration: ConcentrationTolerances,
    /// Factor band for the star hypergraph audit.
    pub band_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { concentration: ConcentrationTolerances::default(), band_factor: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: GeneratorSpec,
    pub task: Task,
    /// Each seed generates one instance; its trials rerun the task on it.
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let t = &self.tolerances;
        if self.seeds.is_empty() {
            return Err(HarnessError::Invalid("seeds must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Invalid("trials must be positive".into()));
        }
        if !(t.concentration.survivors > 0.0 && t.concentration.degrees > 0.0 && t.band_factor > 0.0) {
            return Err(HarnessError::Invalid("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One (seed, trial) outcome. Every flag is recomputable from the counts
/// stored next to it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: usize,
    pub error: Option<String>,
    pub n: usize,
    pub edges: usize,
    pub d0: Option<f64>,
    pub omega: Option<usize>,
    pub d_omega: Option<f64>,
    pub m_size: Option<usize>,
    pub uncovered_m: Option<usize>,
    pub m_star_size: Option<usize>,
    pub uncovered_m_star: Option<usize>,
    pub stars_applied: Option<usize>,
    pub valid: Option<bool>,
    pub exact: Option<bool>,
    pub monotone: Option<bool>,
    pub m3_passed: Option<bool>,
    pub max_survivors_dev: Option<f64>,
    pub survivors_passed: Option<bool>,
    pub window_passed: Option<bool>,
    pub palette_size: Option<usize>,
    pub g_n: Option<usize>,
    pub proper: Option<bool>,
    pub total: Option<bool>,
    /// (|S|, uncovered by M, uncovered by M*) per tracked set, whole vertex
    /// set first.
    pub tracked: Vec<(usize, usize, usize)>,
    pub passed: bool,
}

impl TrialRecord {
    /// Uncovered share of the final matching.
    pub fn leftover_fraction(&self) -> Option<f64> {
        let u = self.uncovered_m_star.or(self.uncovered_m)?;
        Some(u as f64 / self.n.max(1) as f64)
    }

    fn recompute_passed(&mut self) {
        let ok = |f: Option<bool>| f.unwrap_or(true);
        self.passed = self.error.is_none()
            && ok(self.valid)
            && ok(self.exact)
            && ok(self.monotone)
            && ok(self.proper)
            && ok(self.total)
            && self.g_n.is_none_or(|g| self.palette_size.is_some_and(|p| p >= g));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub records: usize,
    pub failures: usize,
    pub passed: usize,
    pub mean_leftover_fraction: Option<f64>,
    pub median_leftover_fraction: Option<f64>,
    pub all_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

fn run_trial(h: &Hypergraph, task: &Task, tol: &Tolerances, seed: u64, trial: usize) -> TrialRecord {
    let mut rec = TrialRecord { seed, trial, n: h.num_vertices(), edges: h.num_edges(), ..TrialRecord::default() };
    let run_seed = rng::derive_seed(seed, trial as u64 + 1);
    if let Err(e) = fill_trial(&mut rec, h, task, tol, run_seed) {
        rec.error = Some(e);
    }
    rec.recompute_passed();
    rec
}

fn fill_trial(rec: &mut TrialRecord, h: &Hypergraph, task: &Task, tol: &Tolerances, seed: u64) -> Result<(), String> {
    let n = h.num_vertices();
    match task {
        Task::Nibble { config } => {
            let cfg = NibbleConfig { seed, ..config.clone() };
            let out = nibble::run_nibble(h, &cfg).map_err(|e| e.to_string())?;
            let conc = check_concentration(&out.log, &survival_predictions(&out.log), &tol.concentration);
            rec.d0 = Some(out.log.d0);
            rec.omega = Some(out.log.omega());
            rec.d_omega = Some(out.log.final_d());
            rec.m_size = Some(out.matching.len());
            rec.uncovered_m = Some(n - out.matching.covered_count());
            rec.valid = Some(h.verify_matching(out.matching.edges()).is_ok_and(|r| r.valid));
            rec.max_survivors_dev = Some(conc.max_survivors_dev);
            rec.survivors_passed = Some(conc.survivors_passed);
            rec.window_passed = Some(conc.window_passed);
            let uncovered = |s: &[usize]| s.iter().filter(|&&v| !out.matching.covers(v)).count();
            rec.tracked = std::iter::once(n - out.matching.covered_count())
                .map(|u| (n, u, u))
                .chain(cfg.track_sets.iter().map(|s| (s.len(), uncovered(s), uncovered(s))))
                .collect();
        }
        Task::Pipeline { config } => {
            let mut cfg = config.clone();
            cfg.bands.factor = tol.band_factor;
            let out = augment::full_simple_pipeline(h, &cfg, seed).map_err(|e| e.to_string())?;
            let r = &out.report;
            rec.d0 = Some(r.d);
            rec.omega = Some(r.outer.omega);
            rec.d_omega = Some(r.outer.d_omega);
            rec.m_size = Some(r.m_size);
            rec.m_star_size = Some(r.m_star_size);
            rec.uncovered_m = Some(r.tracked[0].uncovered_m);
            rec.uncovered_m_star = Some(r.tracked[0].uncovered_m_star);
            rec.stars_applied = Some(r.stars_applied);
            rec.valid = Some(r.valid);
            rec.exact = Some(r.exact);
            rec.monotone = Some(r.monotone);
            rec.m3_passed = r.m3.as_ref().map(|m| m.passed);
            rec.tracked = r.tracked.iter().map(|t| (t.size, t.uncovered_m, t.uncovered_m_star)).collect();
        }
        Task::Chromatic { d, c, config } => {
            let d = d.unwrap_or(h.max_degree() as f64);
            let c = c.unwrap_or_else(|| h.max_codegree());
            let (_, r) = chromatic::chromatic_index_coloring(h, d, c, config, seed).map_err(|e| e.to_string())?;
            rec.d0 = Some(r.pipeline.d);
            rec.m_size = Some(r.m0_size);
            rec.palette_size = Some(r.palette_size);
            rec.g_n = r.g_n;
            rec.proper = Some(r.audit.proper);
            rec.total = Some(r.audit.total);
        }
    }
    Ok(())
}

/// Runs every (seed, trial) pair in parallel and assembles the records in
/// (seed, trial) order. Trial failures are recorded, not propagated.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let instances: Vec<Result<Hypergraph, String>> =
        config.seeds.par_iter().map(|&s| config.instance.generate(s).map_err(|e| e.to_string())).collect();
    let jobs: Vec<(usize, usize)> =
        (0..config.seeds.len()).flat_map(|i| (0..config.trials).map(move |t| (i, t))).collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(i, t)| match &instances[i] {
            Ok(h) => run_trial(h, &config.task, &config.tolerances, config.seeds[i], t),
            Err(e) => TrialRecord {
                seed: config.seeds[i],
                trial: t,
                error: Some(format!("generator: {e}")),
                ..TrialRecord::default()
            },
        })
        .collect();
    let mut fractions: Vec<f64> = records.iter().filter_map(TrialRecord::leftover_fraction).collect();
    let aggregate = Aggregate {
        records: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        passed: records.iter().filter(|r| r.passed).count(),
        mean_leftover_fraction: (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64),
        median_leftover_fraction: median(&mut fractions),
        all_monotone: records.iter().all(|r| r.monotone.unwrap_or(true)),
    };
    let report = ExperimentReport { config: config.clone(), records, aggregate };
    if let Some(p) = &config.output.csv {
        std::fs::write(p, report.to_csv_string()).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &config.output.json {
        std::fs::write(p, report.to_json()).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(report)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    seed: u64,
    trial: usize,
    n: usize,
    edges: usize,
    d0: Option<f64>,
    omega: Option<usize>,
    d_omega: Option<f64>,
    m_size: Option<usize>,
    uncovered_m: Option<usize>,
    m_star_size: Option<usize>,
    uncovered_m_star: Option<usize>,
    stars_applied: Option<usize>,
    valid: Option<bool>,
    exact: Option<bool>,
    monotone: Option<bool>,
    m3_passed: Option<bool>,
    max_survivors_dev: Option<f64>,
    survivors_passed: Option<bool>,
    window_passed: Option<bool>,
    palette_size: Option<usize>,
    g_n: Option<usize>,
    proper: Option<bool>,
    total: Option<bool>,
    passed: bool,
    error: Option<&'a str>,
}

impl ExperimentReport {
    pub fn to_csv_string(&self) -> String {
        let mut buf = format!("{CSV_HEADER_COMMENT}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in &self.records {
                w.serialize(CsvRow {
                    seed: r.seed,
                    trial: r.trial,
                    n: r.n,
                    edges: r.edges,
                    d0: r.d0,
                    omega: r.omega,
                    d_omega: r.d_omega,
                    m_size: r.m_size,
                    uncovered_m: r.uncovered_m,
                    m_star_size: r.m_star_size,
                    uncovered_m_star: r.uncovered_m_star,
                    stars_applied: r.stars_applied,
                    valid: r.valid,
                    exact: r.exact,
                    monotone: r.monotone,
                    m3_passed: r.m3_passed,
                    max_survivors_dev: r.max_survivors_dev,
                    survivors_passed: r.survivors_passed,
                    window_passed: r.window_passed,
                    palette_size: r.palette_size,
                    g_n: r.g_n,
                    proper: r.proper,
                    total: r.total,
                    passed: r.passed,
                    error: r.error.as_deref(),
                })
                .expect("records serialize to csv");
            }
            w.flush().expect("writing to memory cannot fail");
        }
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }
}
