//! `gsgp`: run a multi-generational selection campaign and write its report.
//!
//! Exit codes: 0 when every run finished, 2 when some runs failed, 1 on
//! configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use gsgp::experiment::{run_campaign, Campaign, CampaignReport, DatasetSource, SyntheticSpec};
use gsgp::{EvolutionConfig, MutationMode, SelectionDistribution};

#[derive(Debug, Parser)]
#[command(name = "gsgp", version, about = "Geometric semantic GP with multi-generational tournament selection")]
#[command(group(ArgGroup::new("input").required(true).args(["dataset", "synthetic"])))]
struct Cli {
    /// CSV file; last column is the target.
    #[arg(long)]
    dataset: Option<PathBuf>,

    /// Treat the first CSV line as a header.
    #[arg(long, requires = "dataset")]
    header: bool,

    /// Synthetic dataset `kind:rows:features[:noise[:seed]]`, kind = polynomial | friedman-like.
    #[arg(long)]
    synthetic: Option<SyntheticSpec>,

    /// Selection strategy `u:<k>` or `g:<p>`; repeatable. `u:1` is always included.
    #[arg(long = "strategy", value_name = "DIST")]
    strategies: Vec<SelectionDistribution>,

    #[arg(long, default_value_t = 100)]
    runs: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 100)]
    generations: usize,

    #[arg(long, default_value_t = 100)]
    pop: usize,

    #[arg(long, default_value_t = 4)]
    tournament: usize,

    #[arg(long, default_value_t = 0.9)]
    crossover_rate: f64,

    #[arg(long, default_value_t = 0.3)]
    mutation_rate: f64,

    #[arg(long, default_value_t = 0.1)]
    mutation_step: f64,

    /// Use the single raw random tree mutation instead of the bounded two-tree form.
    #[arg(long)]
    raw_mutation: bool,

    #[arg(long)]
    no_elitism: bool,

    #[arg(long, default_value = "gsgp-out")]
    out: PathBuf,

    /// Worker threads; each owns whole runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Cli {
    fn campaign(self) -> Campaign {
        let source = match (self.dataset, self.synthetic) {
            (Some(path), _) => DatasetSource::Csv { path, has_header: self.header },
            (None, Some(spec)) => DatasetSource::Synthetic(spec),
            (None, None) => unreachable!("clap enforces one input"),
        };
        let strategies =
            if self.strategies.is_empty() { vec![SelectionDistribution::STANDARD] } else { self.strategies };
        let evolution = EvolutionConfig {
            population_size: self.pop,
            generations: self.generations,
            tournament_size: self.tournament,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            mutation_step: self.mutation_step,
            mutation_mode: if self.raw_mutation { MutationMode::Raw } else { MutationMode::Bounded },
            elitism: !self.no_elitism,
            ..EvolutionConfig::default()
        };
        Campaign {
            source,
            strategies,
            runs: self.runs,
            base_seed: self.seed,
            evolution,
            jobs: self.jobs,
            out_dir: Some(self.out),
        }
    }
}

fn print_summary(report: &CampaignReport) {
    println!(
        "{} ({} rows x {} features), {} runs per strategy",
        report.dataset.name, report.dataset.rows, report.dataset.features, report.runs
    );
    println!("{:<10} {:>14} {:>14} {:>10}  note", "strategy", "median train", "median test", "p vs u:1");
    for s in &report.strategies {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let (p, note) = match &s.vs_baseline {
            Some(c) => (
                format!("{:.4}", c.test.p_value),
                if c.improved {
                    "improved"
                } else if c.significant {
                    "worse"
                } else {
                    ""
                },
            ),
            None => ("-".to_string(), "baseline"),
        };
        println!("{:<10} {:>14} {:>14} {:>10}  {note}", s.name, fmt(s.median_train_rmse), fmt(s.median_test_rmse), p);
        for f in &s.failures {
            println!("    run {} failed: {}", f.run, f.error);
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.out.clone();
    match run_campaign(&cli.campaign()) {
        Ok(report) => {
            print_summary(&report);
            println!("outputs written to {}", out.display());
            if report.complete {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
