//! Multi-run campaigns comparing selection strategies against the `u:1` baseline.
//!
//! Every run index `r` gets one 70/30 split that all strategies share, so the
//! comparison is paired by split. The evolution seed of run `r` under strategy
//! `s` is `base_seed ^ hash(s, r)`. Results are assembled in (strategy, run)
//! order after all runs finish, so outputs do not depend on the worker count.
//!
//! Files written to the output directory:
//!
//! | file | content |
//! |------|---------|
//! | `report.json` | [`CampaignReport`], deterministic for a given campaign |
//! | `runs.csv` | one line per (strategy, run) with final RMSEs |
//! | `trajectories.csv` | best-of-generation train/test RMSE for every run |
//! | `boxplot_test.csv`, `boxplot_train.csv` | one column per strategy, one row per run |
//! | `metadata.json` | timestamps and wall-clock durations (not deterministic) |

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, split_70_30, synthetic_dataset, Dataset, SplitDataset, SyntheticKind};
use crate::error::{Error, Result};
use crate::evolve::{run_evolution, EvolutionConfig, RunResult};
use crate::selection::SelectionDistribution;
use crate::stats::{compare_to_baseline, median, Comparison};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub rows: usize,
    pub n_features: usize,
    pub noise: f64,
    pub seed: u64,
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    /// `kind:rows:features[:noise[:seed]]`, e.g. `polynomial:200:2:0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| {
            Error::Config(format!("synthetic spec {s:?}: bad {what}; expected kind:rows:features[:noise[:seed]]"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=5).contains(&parts.len()) {
            return Err(bad("field count"));
        }
        Ok(SyntheticSpec {
            kind: parts[0].parse()?,
            rows: parts[1].parse().map_err(|_| bad("rows"))?,
            n_features: parts[2].parse().map_err(|_| bad("features"))?,
            noise: parts.get(3).map_or(Ok(0.0), |v| v.parse()).map_err(|_| bad("noise"))?,
            seed: parts.get(4).map_or(Ok(0), |v| v.parse()).map_err(|_| bad("seed"))?,
        })
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}", self.kind, self.rows, self.n_features, self.noise, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        has_header: bool,
    },
    Synthetic(SyntheticSpec),
    /// Already loaded, e.g. by a caller that reuses one dataset for several campaigns.
    InMemory(Dataset),
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, has_header } => load_csv(path, *has_header),
            DatasetSource::Synthetic(s) => synthetic_dataset(s.kind, s.rows, s.n_features, s.noise, s.seed),
            DatasetSource::InMemory(d) => Ok(d.clone()),
        }
    }

    fn describe(&self) -> String {
        match self {
            DatasetSource::Csv { path, .. } => path.display().to_string(),
            DatasetSource::Synthetic(s) => format!("synthetic:{s}"),
            DatasetSource::InMemory(d) => format!("memory:{}", d.name),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub source: DatasetSource,
    pub strategies: Vec<SelectionDistribution>,
    pub runs: usize,
    pub base_seed: u64,
    /// Shared settings; `distribution` and `seed` are replaced per run.
    pub evolution: EvolutionConfig,
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
}

impl Campaign {
    pub fn new(source: DatasetSource, strategies: Vec<SelectionDistribution>) -> Self {
        Campaign {
            source,
            strategies,
            runs: 100,
            base_seed: 0,
            evolution: EvolutionConfig::default(),
            jobs: 1,
            out_dir: None,
        }
    }

    /// Strategies in input order with duplicates removed; the baseline is
    /// prepended when missing.
    pub fn strategy_list(&self) -> Vec<SelectionDistribution> {
        let mut out = Vec::with_capacity(self.strategies.len() + 1);
        if !self.strategies.contains(&SelectionDistribution::STANDARD) {
            out.push(SelectionDistribution::STANDARD);
        }
        for s in &self.strategies {
            if !out.contains(s) {
                out.push(*s);
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        self.evolution.validate()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Split seed for run index `run`, shared by every strategy.
pub fn split_seed(base_seed: u64, run: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(run as u64))
}

/// Evolution seed for `strategy` at run index `run`.
pub fn run_seed(base_seed: u64, strategy: SelectionDistribution, run: usize) -> u64 {
    base_seed ^ splitmix64(fnv1a(strategy.to_string().as_bytes()) ^ splitmix64(run as u64).rotate_left(17))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub source: String,
    pub rows: usize,
    pub features: usize,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub name: String,
    pub completed_runs: usize,
    pub incomplete: bool,
    pub failures: Vec<RunFailure>,
    pub median_train_rmse: Option<f64>,
    pub median_test_rmse: Option<f64>,
    /// Indexed by run; `None` for failed runs.
    pub final_train_rmse: Vec<Option<f64>>,
    pub final_test_rmse: Vec<Option<f64>>,
    /// Winners per generation offset, summed over runs.
    pub offset_histogram: Vec<u64>,
    /// Rank-sum comparison of final test RMSE against the baseline; absent for the baseline itself.
    pub vs_baseline: Option<Comparison>,
}

impl StrategyReport {
    pub fn test_values(&self) -> Vec<f64> {
        self.final_test_rmse.iter().flatten().copied().collect()
    }

    pub fn train_values(&self) -> Vec<f64> {
        self.final_train_rmse.iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub dataset: DatasetSummary,
    pub runs: usize,
    pub base_seed: u64,
    pub paired_splits: bool,
    pub baseline: String,
    pub evolution: EvolutionConfig,
    pub strategies: Vec<StrategyReport>,
    pub complete: bool,
}

impl CampaignReport {
    pub fn strategy(&self, name: &str) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// One (strategy, run) cell of a campaign.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub strategy: SelectionDistribution,
    pub run: usize,
    pub seed: u64,
    pub split_seed: u64,
    pub outcome: std::result::Result<RunResult, String>,
}

/// Everything a campaign produced: the deterministic report plus the raw runs.
pub struct CampaignOutput {
    pub report: CampaignReport,
    pub records: Vec<RunRecord>,
    pub wall_seconds: f64,
}

/// Runs every (strategy, run) pair on up to `jobs` threads and assembles the report.
/// Individual run failures are recorded, not propagated.
pub fn execute_campaign(c: &Campaign) -> Result<CampaignOutput> {
    c.validate()?;
    let started = Instant::now();
    let dataset = c.source.load()?;
    let strategies = c.strategy_list();
    let splits: Vec<SplitDataset> = (0..c.runs).map(|r| split_70_30(&dataset, split_seed(c.base_seed, r))).collect();
    let tasks: Vec<(SelectionDistribution, usize)> =
        strategies.iter().flat_map(|&s| (0..c.runs).map(move |r| (s, r))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(strategy, run)| {
                let seed = run_seed(c.base_seed, strategy, run);
                let cfg = EvolutionConfig { distribution: strategy, seed, ..c.evolution.clone() };
                let outcome = run_evolution(&cfg, &splits[run]).map_err(|e| e.to_string());
                RunRecord { strategy, run, seed, split_seed: splits[run].split_seed, outcome }
            })
            .collect()
    });

    let report = assemble_report(c, &dataset, &splits[0], &strategies, &records)?;
    Ok(CampaignOutput { report, records, wall_seconds: started.elapsed().as_secs_f64() })
}

fn assemble_report(
    c: &Campaign,
    dataset: &Dataset,
    first_split: &SplitDataset,
    strategies: &[SelectionDistribution],
    records: &[RunRecord],
) -> Result<CampaignReport> {
    let mut reports = Vec::with_capacity(strategies.len());
    for &s in strategies {
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.strategy == s).collect();
        let mut failures = Vec::new();
        let mut train = vec![None; c.runs];
        let mut test = vec![None; c.runs];
        let mut histogram: Vec<u64> = Vec::new();
        for rec in mine {
            match &rec.outcome {
                Ok(res) => {
                    train[rec.run] = Some(res.final_train_rmse());
                    test[rec.run] = Some(res.final_test_rmse());
                    let h = &res.selections.offset_histogram;
                    if histogram.len() < h.len() {
                        histogram.resize(h.len(), 0);
                    }
                    histogram.iter_mut().zip(h).for_each(|(a, b)| *a += b);
                }
                Err(e) => failures.push(RunFailure { run: rec.run, seed: rec.seed, error: e.clone() }),
            }
        }
        let done: Vec<f64> = test.iter().flatten().copied().collect();
        let done_train: Vec<f64> = train.iter().flatten().copied().collect();
        reports.push(StrategyReport {
            name: s.to_string(),
            completed_runs: done.len(),
            incomplete: !failures.is_empty(),
            failures,
            median_train_rmse: median(&done_train).ok(),
            median_test_rmse: median(&done).ok(),
            final_train_rmse: train,
            final_test_rmse: test,
            offset_histogram: histogram,
            vs_baseline: None,
        });
    }
    let baseline_name = SelectionDistribution::STANDARD.to_string();
    let baseline =
        reports.iter().find(|r| r.name == baseline_name).map(StrategyReport::test_values).unwrap_or_default();
    for r in reports.iter_mut().filter(|r| r.name != baseline_name) {
        let values = r.test_values();
        if !baseline.is_empty() && !values.is_empty() {
            r.vs_baseline = Some(compare_to_baseline(&baseline, &values)?);
        }
    }
    let complete = reports.iter().all(|r| !r.incomplete);
    Ok(CampaignReport {
        schema_version: SCHEMA_VERSION,
        dataset: DatasetSummary {
            name: dataset.name.clone(),
            source: c.source.describe(),
            rows: dataset.rows(),
            features: dataset.n_features(),
            train_rows: first_split.train.rows(),
            test_rows: first_split.test.rows(),
        },
        runs: c.runs,
        base_seed: c.base_seed,
        paired_splits: true,
        baseline: baseline_name,
        evolution: EvolutionConfig {
            seed: c.base_seed,
            distribution: SelectionDistribution::STANDARD,
            ..c.evolution.clone()
        },
        strategies: reports,
        complete,
    })
}

/// Runs the campaign and, when `out_dir` is set, writes every output file.
pub fn run_campaign(c: &Campaign) -> Result<CampaignReport> {
    let started_unix = unix_now();
    let output = execute_campaign(c)?;
    if let Some(dir) = &c.out_dir {
        write_outputs(&output, c, dir, started_unix)?;
    }
    Ok(output.report)
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub fn write_outputs(output: &CampaignOutput, c: &Campaign, dir: &Path, started_unix: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), output.report.to_json()?)?;
    write_runs_csv(&output.records, &dir.join("runs.csv"))?;
    write_trajectories_csv(&output.records, &dir.join("trajectories.csv"))?;
    emit_boxplot_data(&output.report, Metric::Test, &dir.join("boxplot_test.csv"))?;
    emit_boxplot_data(&output.report, Metric::Train, &dir.join("boxplot_train.csv"))?;

    let run_seconds: Vec<serde_json::Value> = output
        .records
        .iter()
        .map(|r| {
            serde_json::json!({
                "strategy": r.strategy.to_string(),
                "run": r.run,
                "seconds": r.outcome.as_ref().map(|res| res.duration.as_secs_f64()).ok(),
            })
        })
        .collect();
    let meta = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "started_unix": started_unix,
        "finished_unix": unix_now(),
        "wall_seconds": output.wall_seconds,
        "jobs": c.jobs,
        "runs": run_seconds,
    });
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_runs_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut out = String::from(
        "strategy,run,seed,split_seed,status,final_train_rmse,final_test_rmse,best_generation,best_index\n",
    );
    for r in records {
        match &r.outcome {
            Ok(res) => out.push_str(&format!(
                "{},{},{},{},ok,{},{},{},{}\n",
                r.strategy,
                r.run,
                r.seed,
                r.split_seed,
                res.final_train_rmse(),
                res.final_test_rmse(),
                res.best.generation,
                res.best.index
            )),
            Err(_) => out.push_str(&format!("{},{},{},{},failed,,,,\n", r.strategy, r.run, r.seed, r.split_seed)),
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_trajectories_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "strategy,run,generation,best_train_rmse,best_test_rmse")?;
    for r in records {
        if let Ok(res) = &r.outcome {
            for (g, (tr, te)) in res.best_train_rmse.iter().zip(&res.best_test_rmse).enumerate() {
                writeln!(w, "{},{},{g},{tr},{te}", r.strategy, r.run)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Train,
    Test,
}

/// Writes one column per strategy (header = strategy names) and one row per
/// run. Failed runs leave an empty cell.
pub fn emit_boxplot_data(report: &CampaignReport, metric: Metric, path: &Path) -> Result<()> {
    if report.strategies.is_empty() {
        return Err(Error::Empty("report has no strategies"));
    }
    fn column(s: &StrategyReport, metric: Metric) -> &[Option<f64>] {
        match metric {
            Metric::Train => &s.final_train_rmse,
            Metric::Test => &s.final_test_rmse,
        }
    }
    let rows = report.strategies.iter().map(|s| column(s, metric).len()).max().unwrap_or(0);
    let mut out = report.strategies.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> =
            report.strategies.iter().map(|s| fmt_opt(column(s, metric).get(r).copied().flatten())).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(strategies: &[&str]) -> Campaign {
        let spec: SyntheticSpec = "polynomial:50:2:0.1:7".parse().unwrap();
        let mut c =
            Campaign::new(DatasetSource::Synthetic(spec), strategies.iter().map(|s| s.parse().unwrap()).collect());
        c.runs = 3;
        c.evolution.population_size = 12;
        c.evolution.generations = 6;
        c.base_seed = 99;
        c
    }

    #[test]
    fn synthetic_spec_parses() {
        let s: SyntheticSpec = "friedman-like:200:5:0.5:3".parse().unwrap();
        assert_eq!((s.kind, s.rows, s.n_features, s.noise, s.seed), (SyntheticKind::FriedmanLike, 200, 5, 0.5, 3));
        let s: SyntheticSpec = "polynomial:20:2".parse().unwrap();
        assert_eq!(s.noise, 0.0);
        assert!("polynomial:20".parse::<SyntheticSpec>().is_err());
        assert!("cubic:20:2".parse::<SyntheticSpec>().is_err());
    }

    #[test]
    fn baseline_is_always_present_and_order_kept() {
        let c = tiny(&["g:0.25", "u:5", "g:0.25"]);
        let names: Vec<String> = c.strategy_list().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["u:1", "g:0.25", "u:5"]);
        let c = tiny(&["u:5", "u:1"]);
        let names: Vec<String> = c.strategy_list().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["u:5", "u:1"]);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let u1 = SelectionDistribution::STANDARD;
        let u5 = SelectionDistribution::UniformLastK(5);
        assert_eq!(run_seed(1, u1, 0), run_seed(1, u1, 0));
        assert_ne!(run_seed(1, u1, 0), run_seed(1, u5, 0));
        assert_ne!(run_seed(1, u1, 0), run_seed(1, u1, 1));
        assert_ne!(split_seed(1, 0), split_seed(1, 1));
        assert_ne!(split_seed(1, 0), split_seed(2, 0));
    }

    #[test]
    fn single_run_median_is_that_run() {
        let mut c = tiny(&["u:1"]);
        c.runs = 1;
        let out = execute_campaign(&c).unwrap();
        assert_eq!(out.report.strategies.len(), 1);
        let s = &out.report.strategies[0];
        let run = out.records[0].outcome.as_ref().unwrap();
        assert_eq!(s.median_test_rmse, Some(run.final_test_rmse()));
        assert!(s.vs_baseline.is_none());
        assert!(out.report.complete);
    }

    #[test]
    fn report_is_deterministic() {
        let a = execute_campaign(&tiny(&["u:1", "u:5"])).unwrap().report.to_json().unwrap();
        let mut c = tiny(&["u:1", "u:5"]);
        c.jobs = 3;
        let b = execute_campaign(&c).unwrap().report.to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strategies_share_splits() {
        let out = execute_campaign(&tiny(&["u:1", "g:0.5"])).unwrap();
        for r in 0..3 {
            let seeds: Vec<u64> = out.records.iter().filter(|x| x.run == r).map(|x| x.split_seed).collect();
            assert_eq!(seeds.len(), 2);
            assert_eq!(seeds[0], seeds[1]);
        }
    }

    #[test]
    fn failed_runs_are_recorded_not_fatal() {
        let c = tiny(&["u:1", "u:5"]);
        let mut out = execute_campaign(&c).unwrap();
        let victim = out.records.iter_mut().find(|r| r.strategy.to_string() == "u:5" && r.run == 1).unwrap();
        victim.outcome = Err("seeding failed".into());
        let dataset = c.source.load().unwrap();
        let split = split_70_30(&dataset, split_seed(c.base_seed, 0));
        let report = assemble_report(&c, &dataset, &split, &c.strategy_list(), &out.records).unwrap();
        assert!(!report.complete);
        let u5 = report.strategy("u:5").unwrap();
        assert!(u5.incomplete);
        assert_eq!(u5.completed_runs, 2);
        assert_eq!(u5.failures[0].run, 1);
        assert_eq!(u5.final_test_rmse[1], None);
        assert!(u5.vs_baseline.is_some());
        assert!(!report.strategy("u:1").unwrap().incomplete);
    }

    #[test]
    fn output_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(&["u:1", "u:5"]);
        c.out_dir = Some(dir.path().to_path_buf());
        let report = run_campaign(&c).unwrap();
        for f in
            ["report.json", "runs.csv", "trajectories.csv", "boxplot_test.csv", "boxplot_train.csv", "metadata.json"]
        {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let box_csv = fs::read_to_string(dir.path().join("boxplot_test.csv")).unwrap();
        let lines: Vec<&str> = box_csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "u:1,u:5");
        let u5 = report.strategy("u:5").unwrap();
        for (r, line) in lines[1..].iter().enumerate() {
            let cells: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(Some(cells[1]), u5.final_test_rmse[r]);
        }
        let parsed: CampaignReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(parsed, report);
        let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
        assert_eq!(traj.lines().count(), 1 + 2 * 3 * 7);
    }

    #[test]
    fn boxplot_refuses_empty_report() {
        let mut report = execute_campaign(&tiny(&["u:1"])).unwrap().report;
        report.strategies.clear();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.csv");
        assert!(emit_boxplot_data(&report, Metric::Test, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn configuration_errors_surface() {
        assert!(matches!(execute_campaign(&tiny(&[])), Err(Error::Config(_))));
        let mut c = tiny(&["u:1"]);
        c.runs = 0;
        assert!(matches!(execute_campaign(&c), Err(Error::Config(_))));
        let mut c = tiny(&["u:1"]);
        c.source = DatasetSource::Csv { path: "/nonexistent/file.csv".into(), has_header: false };
        assert!(execute_campaign(&c).is_err());
    }
}
