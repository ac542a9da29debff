//! Command-line front end. `run` parses arguments, dispatches, and maps
//! errors to exit codes: 0 success, 1 usage, 2 runtime.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{predict_central, predict_coop, PredictorParams};
use crate::central::{format_transcript, RecoveryOptions};
use crate::error::{Error, Result};
use crate::harness::{
    central_csv, compare_theory, coop_csv, demo_intro, parse_f64_list, parse_usize_list, predict_csv,
    run_central_trial, run_sweep, summary_csv, CentralTrialSpec, ConfigOverrides, ExperimentConfig, Scenario,
};
use crate::idnc::BitGraph;
use crate::keyshare::{approx_decimal, brute_force_cost};
use crate::oracle::{max_clique_exact, min_clique_cover_exact, SmallGraph};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SECURECAST_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "securecast",
    version,
    about = "Secure multiple-unicast broadcast with IDNC packet recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo trials, one CSV row per trial.
    Simulate {
        #[arg(value_enum)]
        scenario: SimScenario,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Predicted recovery trace.
    Predict {
        #[arg(value_enum)]
        scenario: SimScenario,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Per-cell summary over a parameter grid.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        /// Also write per-trial rows to this file.
        #[arg(long)]
        trials_out: Option<PathBuf>,
    },
    /// Per-round simulated removals against the predictor.
    Compare {
        #[arg(value_enum)]
        scenario: SimScenario,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Round-by-round transcript of one centralized trial.
    Transcript {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Expected brute-force trials to guess a decoding row.
    SecurityCost {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        n: u64,
    },
    /// Transmission counts of the four-client introductory instance.
    DemoIntro,
    /// Exact reference solvers on an edge-list graph.
    #[command(hide = true)]
    Oracle {
        #[arg(value_enum)]
        problem: OracleProblem,
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimScenario {
    Central,
    Coop,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleProblem {
    Clique,
    Cover,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

/// Experiment parameters; each flag overrides the config file.
#[derive(Debug, Args)]
struct ParamArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Coding rate: `10`, `1,5,9` or `1-20`.
    #[arg(long)]
    r: Option<String>,
    /// Field: gf256, gf2^m or prime:<p>.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    m_len: Option<usize>,
    /// Downlink erasure probability: `0.3` or `0.1,0.2`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    p_prime: Option<f64>,
    #[arg(long = "cluster")]
    cluster_size: Option<usize>,
    /// basic, modified or both.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// corrected or paper-literal.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    with_predictor: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl ParamArgs {
    fn resolve(&self, scenario: Option<Scenario>) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => ConfigOverrides::from_toml(&read(path)?)?,
            None => ConfigOverrides::default(),
        };
        let cli = ConfigOverrides {
            scenario: None,
            n: self.n,
            r: self.r.as_deref().map(parse_usize_list).transpose()?,
            field: self.field.clone(),
            m_len: self.m_len,
            p: self.p.as_deref().map(parse_f64_list).transpose()?,
            p_prime: self.p_prime,
            cluster_size: self.cluster_size,
            variant: self.variant.clone(),
            trials: self.trials,
            seed: self.seed,
            output: self.out.clone(),
            mode: self.mode.clone(),
            with_predictor: self.with_predictor.then_some(true),
        };
        let mut merged = file.merge(cli);
        if let Some(s) = scenario {
            merged.scenario = Some(
                match s {
                    Scenario::Coop => "coop",
                    _ => "central",
                }
                .into(),
            );
        }
        merged.resolve()
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `--out`, else `$SECURECAST_OUT_DIR/<name>.csv`, else stdout.
fn emit(text: &str, out: Option<&Path>, name: &str) -> Result<()> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{name}.csv"))),
    };
    match path {
        Some(p) => std::fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn scenario_of(s: SimScenario) -> Scenario {
    match s {
        SimScenario::Central => Scenario::Central,
        SimScenario::Coop => Scenario::Coop,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario, params } => {
            let cfg = params.resolve(Some(scenario_of(scenario)))?;
            let res = run_sweep(&cfg)?;
            if let Some(cell) = res.cells.iter().find(|c| c.error.is_some()) {
                return Err(Error::Io(cell.error.clone().unwrap_or_default()));
            }
            let text = match scenario {
                SimScenario::Central => central_csv(&res.central)?,
                SimScenario::Coop => coop_csv(&res.coop)?,
            };
            emit(
                &text,
                cfg.output.as_deref(),
                &format!("simulate_{}", scenario_name(scenario)),
            )
        }
        Command::Predict { scenario, params } => {
            let cfg = params.resolve(Some(scenario_of(scenario)))?;
            let (r, p) = (cfg.r[0], cfg.p[0]);
            let trace = match scenario {
                SimScenario::Central => predict_central(&PredictorParams::central(cfg.n, r, p).with_mode(cfg.mode))?,
                SimScenario::Coop => {
                    let params = PredictorParams::coop(cfg.n, r, p, cfg.p_prime, cfg.cluster_size);
                    predict_coop(&params.with_mode(cfg.mode))?
                }
            };
            emit(
                &predict_csv(&trace)?,
                cfg.output.as_deref(),
                &format!("predict_{}", scenario_name(scenario)),
            )
        }
        Command::Sweep { params, trials_out } => {
            let cfg = params.resolve(None)?;
            let res = run_sweep(&cfg)?;
            if let Some(path) = trials_out {
                let rows = match cfg.scenario {
                    Scenario::Coop => coop_csv(&res.coop)?,
                    _ => central_csv(&res.central)?,
                };
                emit(&rows, Some(&path), "sweep_trials")?;
            }
            emit(&summary_csv(&res.cells)?, cfg.output.as_deref(), "sweep")
        }
        Command::Compare { scenario, params } => {
            let cfg = params.resolve(Some(scenario_of(scenario)))?;
            let cmp = compare_theory(&cfg)?;
            eprintln!(
                "simulated mean transmissions {:.3}, predicted {}",
                cmp.sim_mean_total(),
                cmp.predicted_total()
            );
            emit(
                &cmp.csv()?,
                cfg.output.as_deref(),
                &format!("compare_{}", scenario_name(scenario)),
            )
        }
        Command::Transcript { params } => {
            let cfg = params.resolve(Some(Scenario::Central))?;
            let spec = CentralTrialSpec {
                n: cfg.n,
                r: cfg.r[0],
                field: cfg.field,
                m_len: cfg.m_len,
                p: cfg.p[0],
                variant: cfg.variants[0],
            };
            let metrics = run_central_trial(&spec, cfg.seed, &RecoveryOptions::default())?;
            let out = cfg.output.as_deref();
            match out {
                Some(p) => std::fs::write(p, format_transcript(&metrics.transcript))?,
                None => print!("{}", format_transcript(&metrics.transcript)),
            }
            Ok(())
        }
        Command::SecurityCost { q, r, n } => {
            let cost = brute_force_cost(q, r, n)?;
            println!("{cost}");
            println!("{}", approx_decimal(&cost));
            Ok(())
        }
        Command::DemoIntro => {
            let (t, tc) = demo_intro()?;
            println!("centralized T={t}, cooperative T_c={tc}");
            Ok(())
        }
        Command::Oracle { problem, file } => {
            let graph = BitGraph::parse_edge_list(&read(&file)?)?;
            let small = SmallGraph::from_bitgraph(&graph)?;
            match problem {
                OracleProblem::Clique => {
                    let c = max_clique_exact(&small);
                    let ids: Vec<String> = c.iter().map(|v| (v + 1).to_string()).collect();
                    println!("{} {}", c.len(), ids.join(" "));
                }
                OracleProblem::Cover => println!("{}", min_clique_cover_exact(&small)?),
            }
            Ok(())
        }
    }
}

fn scenario_name(s: SimScenario) -> &'static str {
    match s {
        SimScenario::Central => "central",
        SimScenario::Coop => "coop",
    }
}

/// Exit code of an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Parse { .. } | Error::Domain(_) | Error::Unsupported(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("securecast: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("securecast").chain(args.iter().copied()))
    }

    #[test]
    fn exit_codes() {
        assert_eq!(code(&["demo-intro"]), 0);
        assert_eq!(code(&["security-cost", "--q", "5", "--r", "3", "--n", "3"]), 0);
        assert_eq!(code(&["security-cost", "--q", "2", "--r", "3", "--n", "3"]), 1);
        assert_eq!(code(&["nonsense"]), 1);
        assert_eq!(code(&["simulate", "central", "--n", "4", "--r", "9"]), 1);
        assert_eq!(code(&["simulate", "coop", "--p", "1.5"]), 1);
        assert_eq!(code(&["oracle", "clique", "/nonexistent/graph.txt"]), 2);
    }

    #[test]
    fn writes_to_out_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.csv");
        let out_s = out.to_str().unwrap();
        let args = [
            "simulate", "central", "--n", "6", "--r", "3", "--trials", "3", "--m-len", "2", "--out", out_s,
        ];
        assert_eq!(code(&args), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 4);
    }
}
