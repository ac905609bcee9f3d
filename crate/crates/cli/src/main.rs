use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spsnmf::graph::GraphConfig;
use spsnmf::selfpaced::SpMode;
use spsnmf_cli::{
    run_experiment, run_fraction_sweep, write_similarity_csv, ExperimentSpec, LabelSelector,
};

/// Self-paced symmetric NMF clustering benchmark.
#[derive(Parser)]
#[command(name = "spsnmf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment: repeated seeded trials per mode.
    Run(RunArgs),
    /// Build the k-NN similarity matrix and write it to CSV.
    Graph(GraphArgs),
    /// Sweep the starting inclusion fraction over {0.1, …, 1.0}.
    Fractions(RunArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV dataset (RFC-4180; header auto-detected).
    #[arg(long)]
    dataset: PathBuf,
    /// Label column: header name or index (-1 = last column).
    #[arg(long, default_value = "-1")]
    label_col: LabelSelector,
    /// Neighbor count for the similarity graph.
    #[arg(long, default_value_t = 7)]
    knn: usize,
    /// Output directory.
    #[arg(long, default_value = "spsnmf-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Comma-separated subset of {hard, soft, baseline}.
    #[arg(long, default_value = "hard,soft,baseline", value_delimiter = ',')]
    mode: Vec<SpMode>,
    /// Starting inclusion fraction (0.5 engages the median rule).
    #[arg(long, default_value_t = 0.5)]
    init_fraction: f64,
    /// Fraction added per schedule round.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Sweeps between weight refreshes.
    #[arg(long, default_value_t = 10)]
    sweeps_per_round: usize,
    /// Relative-decrease convergence tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
    /// Trials per mode; trial t runs with seed base+t.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write seconds as 0 so report files are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    data: DataArgs,
}

impl RunArgs {
    fn to_spec(&self) -> ExperimentSpec {
        let mut modes = Vec::new();
        for &m in &self.mode {
            if !modes.contains(&m) {
                modes.push(m);
            }
        }
        ExperimentSpec {
            dataset: self.data.dataset.clone(),
            label_selector: self.data.label_col.clone(),
            graph: GraphConfig {
                k_nn: self.data.knn,
                ..GraphConfig::default()
            },
            k: self.k,
            init_fraction: self.init_fraction,
            fraction_step: self.step,
            sweeps_per_round: self.sweeps_per_round,
            conv_tol: self.tol,
            max_sweeps: self.max_sweeps,
            trials: self.trials,
            base_seed: self.seed,
            modes,
            out_dir: self.data.out.clone(),
            record_timing: !self.no_timing,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run_experiment(&args.to_spec()).map(|report| {
            println!("wrote {}", args.data.out.join("trials.jsonl").display());
            println!("wrote {}", args.data.out.join("summary.csv").display());
            for a in &report.aggregates {
                println!(
                    "{}: mean ACC {:.4}, NMI {:.4}, ARI {:.4} over {} trials",
                    a.mode.as_str(),
                    a.acc_mean,
                    a.nmi_mean,
                    a.ari_mean,
                    a.trials
                );
            }
        }),
        Command::Graph(args) => {
            let spec = ExperimentSpec {
                dataset: args.data.dataset.clone(),
                label_selector: args.data.label_col.clone(),
                graph: GraphConfig {
                    k_nn: args.data.knn,
                    ..GraphConfig::default()
                },
                k: 2,
                init_fraction: 0.5,
                fraction_step: 0.1,
                sweeps_per_round: 10,
                conv_tol: 1e-6,
                max_sweeps: 1000,
                trials: 1,
                base_seed: 0,
                modes: vec![SpMode::Baseline],
                out_dir: args.data.out.clone(),
                record_timing: true,
            };
            write_similarity_csv(&spec).map(|path| println!("wrote {}", path.display()))
        }
        Command::Fractions(args) => {
            run_fraction_sweep(&args.to_spec()).map(|path| println!("wrote {}", path.display()))
        }
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
