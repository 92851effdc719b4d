use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pushpull::cli;
use pushpull::config::ExperimentConfig;
use pushpull::io::matrix_from_csv;

#[derive(Parser)]
#[command(name = "pushpull", version, about = "Stochastic push-pull simulator over directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topology generation.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Build weight matrices for a config and write them as CSV.
    Mixing {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "r.csv")]
        out_r: PathBuf,
        #[arg(long, default_value = "c.csv")]
        out_c: PathBuf,
    },
    /// Certify a matrix pair and print its series constants.
    Constants {
        /// Pull matrix CSV.
        #[arg(long)]
        r: PathBuf,
        /// Push matrix CSV.
        #[arg(long)]
        c: PathBuf,
        /// Treat the pair as the 0/1 spanning-tree construction.
        #[arg(long)]
        spanning_tree: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 400)]
        t_check: usize,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check the structural requirements of a config; exit 1 on failure.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_check: Option<usize>,
    },
    /// Run the experiment: one trace CSV per seed plus aggregate and sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run the config once per axis value and summarize.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Subcommand)]
enum GraphAction {
    Gen {
        #[arg(long)]
        topology: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge probability (er).
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        /// Sub-ring count (msr).
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        bidirectional: bool,
        #[arg(long, default_value_t = 1000)]
        max_attempts: usize,
        /// Output file (stdout if omitted; required for tree pairs).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OverrideArgs {
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    metrics_every: Option<usize>,
    /// Override the iteration count.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    t_check: Option<usize>,
}

impl OverrideArgs {
    fn into_overrides(self) -> cli::Overrides {
        cli::Overrides {
            seed: self.seed,
            tol: self.tol,
            metrics_every: self.metrics_every,
            t: self.t,
            t_check: self.t_check,
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> pushpull::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Graph { action } => {
            let GraphAction::Gen {
                topology,
                n,
                seed,
                p,
                k,
                bidirectional,
                max_attempts,
                out,
            } = action;
            let msg = cli::cmd_graph_gen(
                &topology,
                n,
                seed,
                p,
                k,
                bidirectional,
                max_attempts,
                out.as_deref(),
            )?;
            print!("{msg}");
            if !msg.ends_with('\n') {
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mixing { config, out_r, out_c } => {
            let cfg = ExperimentConfig::load(&config)?;
            let msg = cli::cmd_mixing(&cfg, &out_r, &out_c)?;
            println!("{msg}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants {
            r,
            c,
            spanning_tree,
            tol,
            t_check,
            json,
        } => {
            let r_mat = matrix_from_csv(&std::fs::read_to_string(&r)?)?;
            let c_mat = matrix_from_csv(&std::fs::read_to_string(&c)?)?;
            let out = cli::cmd_constants(r_mat, c_mat, spanning_tree, tol, t_check)?;
            print!("{}", cli::render_constants_table(&out));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&out)
                    .map_err(|e| pushpull::Error::Config(e.to_string()))?;
                pushpull::io::write_atomic(&path, &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, t_check } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(tc) = t_check {
                cfg.run.t_check = tc;
            }
            let (report, ok) = cli::cmd_validate(&cfg)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| pushpull::Error::Config(e.to_string()))?;
            println!("{text}");
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Run {
            config,
            out,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            overrides.into_overrides().apply(&mut cfg);
            let out_dir = cli::resolve_out_dir(&cfg, &config, out.as_deref());
            let outcome = cli::cmd_run(&cfg, &out_dir)?;
            println!(
                "wrote {} traces to {}",
                outcome.traces.len(),
                out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            overrides.into_overrides().apply(&mut cfg);
            let out_dir = cli::resolve_out_dir(&cfg, &config, out.as_deref());
            let rows = cli::cmd_sweep(&cfg, &axis, &values, &out_dir)?;
            let failures = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "swept {} values ({failures} failed); summary in {}",
                rows.len(),
                out_dir.join("summary.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
