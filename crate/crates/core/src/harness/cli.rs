//! `nibble-match` command line. Exit codes: 0 when every audit passes, 1 when
//! an audit fails, 2 on execution errors.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::experiment::{run_experiment, ExperimentConfig};
use crate::augment::{self, PipelineConfig};
use crate::chromatic::{self, ChromaticConfig};
use crate::generators::GeneratorSpec;
use crate::hypergraph::{parse_edge_list, EdgeId, Hypergraph, MatchingReport};
use crate::nibble::{self, NibbleConfig, Termination, CSV_HEADER_COMMENT};
use crate::simplify::{self, SimplifyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "nibble-match",
    version,
    about = "Semi-random hypergraph matchings, augmenting stars and edge colorings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON configuration for the verb.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every artifact; without it the verb's primary
    /// artifact, or the one matching --format, is printed.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance (`--config` holds a generator spec).
    Generate {
        /// Steiner triple system on N points.
        #[arg(long, value_name = "N")]
        sts: Option<usize>,
        /// Random near-regular simple hypergraph K,D,N[,TOLERANCE].
        #[arg(long, value_delimiter = ',', num_args = 1, value_name = "K,D,N[,TOL]")]
        random: Option<Vec<usize>>,
    },
    /// Run the nibble on a hypergraph file.
    Nibble {
        input: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Nibble plus augmenting stars on a simple hypergraph file.
    Augment {
        input: PathBuf,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Extract a simple subhypergraph.
    Simplify {
        input: PathBuf,
        /// Codegree bound; defaults to the measured codegree.
        #[arg(long)]
        c: Option<f64>,
        /// Nominal degree; defaults to the mean degree.
        #[arg(long)]
        d: Option<f64>,
    },
    /// Proper edge coloring.
    Color {
        input: PathBuf,
        /// Degree bound; defaults to the max degree.
        #[arg(long)]
        d: Option<f64>,
        /// Codegree bound; defaults to the measured codegree.
        #[arg(long)]
        c: Option<usize>,
    },
    /// Run an experiment (`--config` is required).
    Experiment,
    /// Audit a matching and/or a coloring against a hypergraph.
    Verify {
        input: PathBuf,
        #[arg(long)]
        matching: Option<PathBuf>,
        #[arg(long)]
        coloring: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Codegree,
    Greedy,
}

#[derive(Debug)]
pub struct CliError(pub String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Text,
    Csv,
    Json,
}

struct Artifact {
    name: &'static str,
    kind: Kind,
    content: String,
}

fn json<T: Serialize>(name: &'static str, value: &T) -> Artifact {
    let mut content = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    content.push('\n');
    Artifact { name, kind: Kind::Json, content }
}

fn text(name: &'static str, kind: Kind, content: String) -> Artifact {
    Artifact { name, kind, content }
}

struct Outcome {
    artifacts: Vec<Artifact>,
    passed: bool,
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        Some(p) => load_required(p),
        None => Ok(T::default()),
    }
}

fn load_required<T: DeserializeOwned>(p: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError(format!("{}: {e}", p.display())))
}

fn load_hypergraph(p: &Path) -> Result<Hypergraph, CliError> {
    let bytes = std::fs::read(p).map_err(|e| CliError(format!("{}: {e}", p.display())))?;
    Hypergraph::parse_text_bytes(&bytes).map_err(|e| CliError(format!("{}: {e}", p.display())))
}

#[derive(Serialize)]
struct InstanceSummary {
    n: usize,
    m: usize,
    k: Option<usize>,
    min_degree: usize,
    max_degree: usize,
    codegree: usize,
    simple: bool,
}

fn summarize(h: &Hypergraph) -> InstanceSummary {
    InstanceSummary {
        n: h.num_vertices(),
        m: h.num_edges(),
        k: h.uniformity(),
        min_degree: h.min_degree(),
        max_degree: h.max_degree(),
        codegree: if h.num_edges() > 0 { h.max_codegree() } else { 0 },
        simple: h.is_simple(),
    }
}

#[derive(Serialize)]
struct NibbleRunReport {
    n: usize,
    k: usize,
    d0: f64,
    delta0: f64,
    gamma: f64,
    omega: usize,
    d_omega: f64,
    termination: Termination,
    matching_size: usize,
    waste: usize,
    leftover: usize,
    valid: bool,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    hypergraph: InstanceSummary,
    matching: Option<MatchingReport>,
    coloring: Option<chromatic::ColoringAudit>,
}

fn run_command(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Generate { sts, random } => {
            let spec = match (sts, random, cfg_path) {
                (Some(n), None, None) => GeneratorSpec::Sts { n: *n },
                (None, Some(v), None) if matches!(v.len(), 3 | 4) => GeneratorSpec::RandomRegularSimple {
                    k: v[0],
                    d: v[1],
                    n: v[2],
                    tolerance: v.get(3).copied().unwrap_or(0),
                },
                (None, None, Some(p)) => load_required(p)?,
                _ => return Err(CliError("give exactly one of --sts N, --random K,D,N[,TOL] or --config".into())),
            };
            let h = spec.generate(cli.seed)?;
            Ok(Outcome {
                artifacts: vec![text("hypergraph.txt", Kind::Text, h.to_text()), json("instance.json", &summarize(&h))],
                passed: true,
            })
        }
        Command::Nibble { input, gamma } => {
            let h = load_hypergraph(input)?;
            let mut cfg: NibbleConfig = load_config(cfg_path)?;
            cfg.seed = cli.seed;
            if let Some(g) = gamma {
                cfg.gamma = *g;
            }
            let out = nibble::run_nibble(&h, &cfg)?;
            let valid = h.verify_matching(out.matching.edges())?.valid;
            let report = NibbleRunReport {
                n: h.num_vertices(),
                k: out.log.k,
                d0: out.log.d0,
                delta0: out.log.delta0,
                gamma: cfg.gamma,
                omega: out.log.omega(),
                d_omega: out.log.final_d(),
                termination: out.log.termination,
                matching_size: out.matching.len(),
                waste: out.waste.iter().filter(|&&w| w).count(),
                leftover: out.leftover_count(),
                valid,
                warnings: out.warnings.clone(),
            };
            Ok(Outcome {
                artifacts: vec![
                    json("nibble.json", &report),
                    text("trajectory.csv", Kind::Csv, out.log.to_csv_string()),
                    text("matching.txt", Kind::Text, out.matching.to_text()),
                ],
                passed: valid,
            })
        }
        Command::Augment { input, strategy } => {
            let h = load_hypergraph(input)?;
            let mut cfg: PipelineConfig = load_config(cfg_path)?;
            if let Some(s) = strategy {
                cfg.strategy = match s {
                    StrategyArg::Codegree => augment::SimplifyStrategy::CodegreeReduction,
                    StrategyArg::Greedy => augment::SimplifyStrategy::ConflictFreeGreedy,
                };
            }
            if let Some(k) = h.uniformity() {
                cfg.params.k = k;
            }
            let out = augment::full_simple_pipeline(&h, &cfg, cli.seed)?;
            let r = &out.report;
            let mut tracked =
                format!("{CSV_HEADER_COMMENT}\nset,size,leftover,waste,uncovered_m,uncovered_m_star,baseline,tag\n");
            for (i, t) in r.tracked.iter().enumerate() {
                tracked.push_str(&format!(
                    "{i},{},{},{},{},{},{},{}\n",
                    t.size,
                    t.leftover,
                    t.waste,
                    t.uncovered_m,
                    t.uncovered_m_star,
                    t.baseline,
                    t.tag.as_deref().unwrap_or("")
                ));
            }
            Ok(Outcome {
                passed: r.valid && r.exact && r.monotone,
                artifacts: vec![
                    json("augment.json", r),
                    text("tracked.csv", Kind::Csv, tracked),
                    text("initial_matching.txt", Kind::Text, out.initial.to_text()),
                    text("matching.txt", Kind::Text, out.matching.to_text()),
                    text("star_hypergraph.txt", Kind::Text, out.stars.hypergraph.to_text()),
                    text("backmap.txt", Kind::Text, augment::back_map_to_text(&out.stars)),
                ],
            })
        }
        Command::Simplify { input, c, d } => {
            let h = load_hypergraph(input)?;
            let mut cfg: SimplifyConfig = load_config(cfg_path)?;
            cfg.seed = cli.seed;
            let c = c.unwrap_or_else(|| h.max_codegree().max(1) as f64);
            let out = simplify::simple_subhypergraph(&h, c, *d, &cfg)?;
            let mut stages = format!("{CSV_HEADER_COMMENT}\n").into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut stages);
                for s in &out.report.stages {
                    w.serialize(s)?;
                }
                w.flush()?;
            }
            let kept: String = out.kept.iter().map(|e| format!("{e}\n")).collect();
            Ok(Outcome {
                passed: out.report.is_simple && !out.report.has_duplicates,
                artifacts: vec![
                    json("simplify.json", &out.report),
                    text("stages.csv", Kind::Csv, String::from_utf8(stages)?),
                    text("simple.txt", Kind::Text, out.hypergraph.to_text()),
                    text("kept.txt", Kind::Text, format!("# nibble-match kept edges v1\n{kept}")),
                ],
            })
        }
        Command::Color { input, d, c } => {
            let h = load_hypergraph(input)?;
            let cfg: ChromaticConfig = load_config(cfg_path)?;
            let d = d.unwrap_or(h.max_degree() as f64);
            let c = c.unwrap_or_else(|| if h.num_edges() > 0 { h.max_codegree() } else { 1 });
            let (coloring, report) = chromatic::chromatic_index_coloring(&h, d, c, &cfg, cli.seed)?;
            Ok(Outcome {
                passed: report.passed(),
                artifacts: vec![json("color.json", &report), text("coloring.csv", Kind::Csv, coloring.to_csv_string())],
            })
        }
        Command::Experiment => {
            let p = cfg_path.ok_or_else(|| CliError("experiment needs --config".into()))?;
            let cfg: ExperimentConfig = load_required(p)?;
            let report = run_experiment(&cfg)?;
            Ok(Outcome {
                passed: report.aggregate.passed == report.aggregate.records,
                artifacts: vec![
                    json("experiment.json", &report),
                    text("trials.csv", Kind::Csv, report.to_csv_string()),
                ],
            })
        }
        Command::Verify { input, matching, coloring } => {
            let h = load_hypergraph(input)?;
            let matching = match matching {
                Some(p) => {
                    let ids: Vec<EdgeId> = parse_edge_list(&std::fs::read_to_string(p)?)?;
                    Some(h.verify_matching(&ids).unwrap_or(MatchingReport {
                        valid: false,
                        size: ids.len(),
                        covered_count: 0,
                    }))
                }
                None => None,
            };
            let coloring = match coloring {
                Some(p) => {
                    let c = chromatic::parse_coloring_csv(&std::fs::read_to_string(p)?, Some(h.num_edges()))?;
                    Some(chromatic::audit_coloring(&h, &c))
                }
                None => None,
            };
            let passed = matching.is_none_or(|m| m.valid) && coloring.is_none_or(|c| c.proper && c.total);
            let report = VerifyReport { hypergraph: summarize(&h), matching, coloring };
            Ok(Outcome { artifacts: vec![json("verify.json", &report)], passed })
        }
    }
}

fn emit(out: Option<&Path>, format: Option<Format>, artifacts: &[Artifact]) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError(format!("{}: {e}", dir.display())))?;
            for a in artifacts {
                let p = dir.join(a.name);
                std::fs::write(&p, &a.content).map_err(|e| CliError(format!("{}: {e}", p.display())))?;
            }
        }
        None => {
            let want = format.map(|f| match f {
                Format::Csv => Kind::Csv,
                Format::Json => Kind::Json,
            });
            let pick = artifacts.iter().find(|a| Some(a.kind) == want).or(artifacts.first());
            if let Some(a) = pick {
                print!("{}", a.content);
            }
        }
    }
    Ok(())
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_command(cli).and_then(|o| emit(cli.out.as_deref(), cli.format, &o.artifacts).map(|()| o.passed)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}", e.0);
            2
        }
    }
}
