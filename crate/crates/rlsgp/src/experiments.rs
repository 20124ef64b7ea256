//! Seeded, parallel batch harness: runs the five standard experiment
//! configurations over their parameter grids, aggregates per-cell statistics,
//! and writes deterministic TSV tables, per-figure data files and a JSON
//! manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, EngineError, FitnessMode, Outcome, RunConfig};
use crate::fitness::{LiteralSet, ProblemSpec, SampledFitnessConfig, SizeLimit, TargetFn};
use crate::mutation::DeletionMode;
use crate::tree::SyntaxTree;

/// The five standard experiments. They differ in deletion mode, literal set
/// and fitness evaluation; see [`ExperimentConfig::defaults`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rq {
    Rq1,
    Rq2,
    Rq3,
    Rq4,
    Rq5,
}

impl Rq {
    pub fn deletion_mode(&self) -> DeletionMode {
        match self {
            Rq::Rq1 => DeletionMode::LeafOnly,
            _ => DeletionMode::Subtree,
        }
    }

    pub fn literal_set(&self) -> LiteralSet {
        match self {
            Rq::Rq3 | Rq::Rq5 => LiteralSet::PositiveAndNegated,
            _ => LiteralSet::Positive,
        }
    }

    pub fn uses_sampling(&self) -> bool {
        matches!(self, Rq::Rq4 | Rq::Rq5)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Rq::Rq1 => "rq1",
            Rq::Rq2 => "rq2",
            Rq::Rq3 => "rq3",
            Rq::Rq4 => "rq4",
            Rq::Rq5 => "rq5",
        }
    }
}

impl std::str::FromStr for Rq {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rq1" => Ok(Rq::Rq1),
            "rq2" => Ok(Rq::Rq2),
            "rq3" => Ok(Rq::Rq3),
            "rq4" => Ok(Rq::Rq4),
            "rq5" => Ok(Rq::Rq5),
            other => Err(format!("unknown experiment '{other}' (expected rq1..rq5)")),
        }
    }
}

/// Tree size limits expressed relative to the problem size, mirroring the
/// table headers: n, n+1, 2n, unbounded, or an absolute count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EllPolicy {
    N,
    NPlusOne,
    TwoN,
    Unbounded,
    Absolute(u32),
}

impl EllPolicy {
    pub fn resolve(&self, n: u32) -> SizeLimit {
        match self {
            EllPolicy::N => SizeLimit::Finite(n),
            EllPolicy::NPlusOne => SizeLimit::Finite(n + 1),
            EllPolicy::TwoN => SizeLimit::Finite(2 * n),
            EllPolicy::Unbounded => SizeLimit::Unbounded,
            EllPolicy::Absolute(l) => SizeLimit::Finite(*l),
        }
    }

    /// Numeric label used in file names and table rows ("inf" if unbounded).
    pub fn label(&self, n: u32) -> String {
        match self.resolve(n) {
            SizeLimit::Finite(l) => l.to_string(),
            SizeLimit::Unbounded => "inf".to_string(),
        }
    }
}

impl std::str::FromStr for EllPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(EllPolicy::N),
            "n+1" => Ok(EllPolicy::NPlusOne),
            "2n" => Ok(EllPolicy::TwoN),
            "inf" | "unbounded" => Ok(EllPolicy::Unbounded),
            other => other
                .parse::<u32>()
                .map(EllPolicy::Absolute)
                .map_err(|_| format!("bad size limit '{other}' (expected n, n+1, 2n, inf or an integer)")),
        }
    }
}

/// Full description of one experiment batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rq: Rq,
    pub target: TargetChoice,
    pub n_values: Vec<u32>,
    pub ell_policies: Vec<EllPolicy>,
    pub runs_per_cell: u32,
    pub max_iterations: u64,
    /// Acceptance thresholds, sampled experiments only.
    pub a_values: Vec<u32>,
    /// Training-set sizes, sampled experiments only.
    pub s_values: Vec<u32>,
    pub master_seed: u64,
}

/// Serialisable mirror of [`TargetFn`] for the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetChoice {
    And,
    Or,
}

impl From<TargetChoice> for TargetFn {
    fn from(t: TargetChoice) -> TargetFn {
        match t {
            TargetChoice::And => TargetFn::And,
            TargetChoice::Or => TargetFn::Or,
        }
    }
}

impl ExperimentConfig {
    /// The standard grid for each experiment: the complete-table experiments
    /// sweep n in {4, 8, 12, 16} against limits {n, n+1, 2n, inf}; the
    /// sampled experiments run n = 50 unbounded with training sets of 8..16384
    /// rows (powers of two) and thresholds {0, 8, 16, 32}. 500 runs per cell,
    /// capped at 10^4 iterations.
    pub fn defaults(rq: Rq, master_seed: u64) -> Self {
        if rq.uses_sampling() {
            ExperimentConfig {
                rq,
                target: TargetChoice::And,
                n_values: vec![50],
                ell_policies: vec![EllPolicy::Unbounded],
                runs_per_cell: 500,
                max_iterations: 10_000,
                a_values: vec![0, 8, 16, 32],
                s_values: (3..=14).map(|e| 1 << e).collect(),
                master_seed,
            }
        } else {
            ExperimentConfig {
                rq,
                target: TargetChoice::And,
                n_values: vec![4, 8, 12, 16],
                ell_policies: vec![
                    EllPolicy::N,
                    EllPolicy::NPlusOne,
                    EllPolicy::TwoN,
                    EllPolicy::Unbounded,
                ],
                runs_per_cell: 500,
                max_iterations: 10_000,
                a_values: Vec::new(),
                s_values: Vec::new(),
                master_seed,
            }
        }
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub n: u32,
    pub ell: EllPolicy,
    /// Training-set size, sampled cells only.
    pub s: Option<u32>,
    /// Acceptance threshold, sampled cells only.
    pub a: Option<u32>,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} ell={}", self.n, self.ell.label(self.n))?;
        if let Some(s) = self.s {
            write!(f, " s={s}")?;
        }
        if let Some(a) = self.a {
            write!(f, " A={a}")?;
        }
        Ok(())
    }
}

/// Compact per-run record kept for aggregation and verification. The final
/// tree is retained only for runs that hit the iteration cap, so that stuck
/// runs can be checked against the trap oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u32,
    pub outcome: Outcome,
    pub iterations: u64,
    pub leaf_count: u32,
    pub or_count: u64,
    pub ors_accepted: u64,
    /// Exact disagreement count when the exact path applied.
    pub exact_error: Option<u128>,
    pub gen_error: f64,
    pub capped_tree: Option<SyntaxTree>,
}

/// Aggregated statistics of one cell. `B` is the proportion of runs that hit
/// the iteration cap; every other statistic averages the successful runs
/// only, so they are absent when every run failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub run_count: u32,
    pub success_count: u32,
    pub b: f64,
    pub mean_t: Option<f64>,
    pub std_t: Option<f64>,
    pub mean_s: Option<f64>,
    pub std_s: Option<f64>,
    pub mean_ors_inserted: Option<f64>,
    pub mean_ors_final: Option<f64>,
    pub mean_generalisation_error: Option<f64>,
}

/// Everything one cell produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CellData {
    pub stats: CellStats,
    pub runs: Vec<RunRecord>,
}

/// Result of a whole experiment batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: BTreeMap<CellKey, CellData>,
}

impl ExperimentResult {
    pub fn stats(&self, key: &CellKey) -> Option<&CellStats> {
        self.cells.get(key).map(|c| &c.stats)
    }
}

fn cell_keys(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for &n in &cfg.n_values {
        for &ell in &cfg.ell_policies {
            if cfg.rq.uses_sampling() {
                for &s in &cfg.s_values {
                    for &a in &cfg.a_values {
                        keys.push(CellKey { n, ell, s: Some(s), a: Some(a) });
                    }
                }
            } else {
                keys.push(CellKey { n, ell, s: None, a: None });
            }
        }
    }
    keys
}

/// Stable 64-bit key of a cell for seed derivation (FNV-1a over the label,
/// independent of hasher internals and platform).
fn cell_stream_id(rq: Rq, key: &CellKey) -> u64 {
    let label = format!(
        "{}/n{}/l{}/s{}/a{}",
        rq.name(),
        key.n,
        key.ell.label(key.n),
        key.s.map_or("-".to_string(), |v| v.to_string()),
        key.a.map_or("-".to_string(), |v| v.to_string()),
    );
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn run_config(cfg: &ExperimentConfig, key: &CellKey, seed: u64) -> RunConfig {
    let problem = ProblemSpec::new(
        cfg.target.into(),
        key.n,
        cfg.rq.literal_set(),
        key.ell.resolve(key.n),
    )
    .expect("grid n values are within range");
    let fitness_mode = match (key.s, key.a) {
        (Some(s), Some(a)) => FitnessMode::Sampled(
            SampledFitnessConfig::new(s, a).expect("grid sample sizes are positive"),
        ),
        _ => FitnessMode::CompleteTable,
    };
    RunConfig::new(problem, cfg.rq.deletion_mode(), fitness_mode, cfg.max_iterations, seed)
}

/// Executes the whole grid: `runs_per_cell` independent seeded runs per cell,
/// in parallel. Per-run seeds derive from (master seed, cell id, run index),
/// and aggregation is performed in run-index order, so the result is
/// identical regardless of thread count or scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, EngineError> {
    let keys = cell_keys(cfg);
    let tasks: Vec<(usize, u32)> = keys
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| (0..cfg.runs_per_cell).map(move |r| (ci, r)))
        .collect();

    let records: Vec<Result<(usize, RunRecord), EngineError>> = tasks
        .par_iter()
        .map(|&(ci, run_index)| {
            let key = &keys[ci];
            let seed =
                engine::derive_seed(cfg.master_seed, cell_stream_id(cfg.rq, key), u64::from(run_index));
            let rc = run_config(cfg, key, seed);
            let result = engine::run(&rc)?;
            let gen_error = result.final_generalisation_error.as_f64();
            Ok((
                ci,
                RunRecord {
                    run_index,
                    outcome: result.outcome,
                    iterations: result.iterations,
                    leaf_count: result.final_tree.leaf_count(),
                    or_count: result.ors_in_final_tree,
                    ors_accepted: result.ors_accepted_during_run,
                    exact_error: result.final_exact_error,
                    gen_error,
                    capped_tree: (result.outcome == Outcome::HitIterationCap)
                        .then(|| result.final_tree.clone()),
                },
            ))
        })
        .collect();

    let mut per_cell: Vec<Vec<RunRecord>> = vec![Vec::new(); keys.len()];
    for item in records {
        let (ci, record) = item?;
        per_cell[ci].push(record);
    }

    let mut cells = BTreeMap::new();
    for (ci, key) in keys.into_iter().enumerate() {
        let mut runs = std::mem::take(&mut per_cell[ci]);
        runs.sort_by_key(|r| r.run_index);
        let stats = aggregate(&runs);
        cells.insert(key, CellData { stats, runs });
    }
    Ok(ExperimentResult { config: cfg.clone(), cells })
}

fn mean_and_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn aggregate(runs: &[RunRecord]) -> CellStats {
    let run_count = runs.len() as u32;
    let successes: Vec<&RunRecord> =
        runs.iter().filter(|r| r.outcome != Outcome::HitIterationCap).collect();
    let success_count = successes.len() as u32;
    let b = if run_count == 0 { 0.0 } else { 1.0 - f64::from(success_count) / f64::from(run_count) };

    let ts: Vec<f64> = successes.iter().map(|r| r.iterations as f64).collect();
    let sizes: Vec<f64> = successes.iter().map(|r| f64::from(r.leaf_count)).collect();
    let ors_ins: Vec<f64> = successes.iter().map(|r| r.ors_accepted as f64).collect();
    let ors_fin: Vec<f64> = successes.iter().map(|r| r.or_count as f64).collect();
    let gens: Vec<f64> = successes.iter().map(|r| r.gen_error).collect();

    let (mean_t, std_t) = mean_and_std(&ts);
    let (mean_s, std_s) = mean_and_std(&sizes);
    let (mean_ors_inserted, _) = mean_and_std(&ors_ins);
    let (mean_ors_final, _) = mean_and_std(&ors_fin);
    let (mean_generalisation_error, _) = mean_and_std(&gens);

    CellStats {
        run_count,
        success_count,
        b,
        mean_t,
        std_t,
        mean_s,
        std_s,
        mean_ors_inserted,
        mean_ors_final,
        mean_generalisation_error,
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "-".to_string(),
    }
}

/// Writes the result as TSV files plus a `manifest.json` echoing the full
/// configuration. Complete-table experiments produce one table
/// (`table-<rq>.tsv`); sampled experiments produce one file per metric and
/// threshold named `<metric>-n<n>-l<ell>-s<A>.tsv` with the training-set size
/// in column 0. Re-running with the same master seed reproduces every file
/// byte for byte.
pub fn emit_tsv(result: &ExperimentResult, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let manifest_path = dir.join("manifest.json");
    let manifest = serde_json::to_string_pretty(&result.config)
        .map_err(io::Error::other)?;
    fs::write(&manifest_path, manifest + "\n")?;
    written.push(manifest_path);

    if result.config.rq.uses_sampling() {
        // One file per (metric, acceptance threshold); rows sweep s.
        type Metric = (&'static str, fn(&CellStats) -> Option<f64>, usize);
        let metrics: [Metric; 4] = [
            ("runtime", |s| s.mean_t, 1),
            ("treesize", |s| s.mean_s, 1),
            ("insOR", |s| s.mean_ors_inserted, 3),
            ("finOR", |s| s.mean_ors_final, 3),
        ];
        for &n in &result.config.n_values {
            for &ell in &result.config.ell_policies {
                for &a in &result.config.a_values {
                    for (metric, extract, decimals) in metrics {
                        let name = format!("{metric}-n{n}-l{}-s{a}.tsv", ell.label(n));
                        let path = dir.join(name);
                        let mut out = String::from("s\tmean\n");
                        for &s in &result.config.s_values {
                            let key = CellKey { n, ell, s: Some(s), a: Some(a) };
                            let stats = &result.cells[&key].stats;
                            out.push_str(&format!("{s}\t{}\n", fmt_opt(extract(stats), decimals)));
                        }
                        fs::write(&path, out)?;
                        written.push(path);
                    }
                }
            }
        }
    } else {
        let path = dir.join(format!("table-{}.tsv", result.config.rq.name()));
        let mut out = String::from("n\tell\tB\tmean_T\tstd_T\tmean_S\tstd_S\n");
        for (key, cell) in &result.cells {
            let s = &cell.stats;
            out.push_str(&format!(
                "{}\t{}\t{:.3}\t{}\t{}\t{}\t{}\n",
                key.n,
                key.ell.label(key.n),
                s.b,
                fmt_opt(s.mean_t, 1),
                fmt_opt(s.std_t, 1),
                fmt_opt(s.mean_s, 1),
                fmt_opt(s.std_s, 1),
            ));
        }
        fs::write(&path, out)?;
        written.push(path);
    }
    Ok(written)
}
