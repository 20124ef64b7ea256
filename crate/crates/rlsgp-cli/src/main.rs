//! `rlsgp` command line: single seeded runs, experiment batches with TSV
//! output, exact oracle checks, and drift-bound validation.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use rlsgp::drift::{validate_grid, DriftProcessKind};
use rlsgp::engine::{run, FitnessMode, Outcome, RunConfig};
use rlsgp::experiments::{emit_tsv, run_experiment, EllPolicy, ExperimentConfig, Rq};
use rlsgp::fitness::{
    Generalisation, LiteralSet, ProblemSpec, SampledFitnessConfig, TargetFn,
};
use rlsgp::mutation::DeletionMode;
use rlsgp::oracle::{concentration_check, is_trap, one_step_drift, ConcentrationSpec};
use rlsgp::tree::parse_with_vars;

#[derive(Parser)]
#[command(
    name = "rlsgp",
    version,
    about = "Randomised local search GP over AND/OR syntax trees",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one seeded run and print its result
    Run(RunArgs),
    /// Run an experiment batch and write TSV tables and figure data
    Experiment(ExperimentArgs),
    /// Exact small-instance checks
    Oracle {
        #[command(subcommand)]
        check: OracleCommand,
    },
    /// Hitting-time bound validation for the synthetic drift processes
    Drift {
        #[command(subcommand)]
        action: DriftCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    And,
    Or,
}

impl From<TargetArg> for TargetFn {
    fn from(t: TargetArg) -> TargetFn {
        match t {
            TargetArg::And => TargetFn::And,
            TargetArg::Or => TargetFn::Or,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DeletionArg {
    /// Classic HVL-Prime: only leaves can be deleted
    Leaf,
    /// Any node's whole subtree can be deleted
    Subtree,
}

impl From<DeletionArg> for DeletionMode {
    fn from(d: DeletionArg) -> DeletionMode {
        match d {
            DeletionArg::Leaf => DeletionMode::LeafOnly,
            DeletionArg::Subtree => DeletionMode::Subtree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LiteralsArg {
    /// x1..xn
    Positive,
    /// x1..xn and their negations
    Negated,
}

impl From<LiteralsArg> for LiteralSet {
    fn from(l: LiteralsArg) -> LiteralSet {
        match l {
            LiteralsArg::Positive => LiteralSet::Positive,
            LiteralsArg::Negated => LiteralSet::PositiveAndNegated,
        }
    }
}

/// `ctt` for the complete truth table, or `sample:<s>` for per-iteration
/// training sets of `s` rows.
#[derive(Clone, Copy)]
enum FitnessArg {
    CompleteTable,
    Sample(u32),
}

impl std::str::FromStr for FitnessArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        if lower == "ctt" {
            return Ok(FitnessArg::CompleteTable);
        }
        if let Some(rows) = lower.strip_prefix("sample:") {
            let rows: u32 =
                rows.parse().map_err(|_| format!("bad sample size in '{s}'"))?;
            if rows == 0 {
                return Err("sample size must be at least 1".into());
            }
            return Ok(FitnessArg::Sample(rows));
        }
        Err(format!("bad fitness '{s}' (expected ctt or sample:<s>)"))
    }
}

#[derive(Args)]
struct RunArgs {
    /// Target function
    #[arg(long, value_enum)]
    target: TargetArg,
    /// Number of variables (1..=64)
    #[arg(long)]
    n: u32,
    /// Tree size limit: n, n+1, 2n, inf, or an absolute leaf count
    #[arg(long)]
    ell: EllPolicy,
    /// Deletion sub-operation
    #[arg(long, value_enum)]
    deletion: DeletionArg,
    /// Fitness evaluation: ctt or sample:<s>
    #[arg(long)]
    fitness: FitnessArg,
    /// Sampled-error acceptance threshold (sampled fitness only)
    #[arg(long, default_value_t = 0)]
    accept_threshold: u32,
    /// Terminal set
    #[arg(long, value_enum, default_value_t = LiteralsArg::Positive)]
    literals: LiteralsArg,
    /// Seed for the run's random generator
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: u64,
    /// Start from this tree instead of the empty tree
    #[arg(long)]
    initial_tree: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Which experiment: rq1 | rq2 | rq3 | rq4 | rq5
    rq: Rq,
    /// Independent runs per grid cell
    #[arg(long, default_value_t = 500)]
    runs: u32,
    /// Output directory for TSV files and the manifest
    #[arg(long, default_value = "data")]
    out: PathBuf,
    /// Master seed; per-run seeds derive from it deterministically
    #[arg(long)]
    seed: u64,
    /// Worker threads (default: all cores); the output does not depend on it
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: u64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Decide whether a tree is a local optimum under one-step mutations
    Trap(TreeCheckArgs),
    /// Exact one-step fitness drift at a tree
    Drift(TreeCheckArgs),
    /// Exact binomial tails against their Chernoff bounds
    Concentration(ConcentrationArgs),
}

#[derive(Args)]
struct TreeCheckArgs {
    /// The subject tree, in the prefix grammar, e.g. "(or (and x1 x2) x3)"
    #[arg(long)]
    tree: String,
    #[arg(long, value_enum)]
    target: TargetArg,
    #[arg(long)]
    n: u32,
    /// Tree size limit: n, n+1, 2n, inf, or an absolute leaf count
    #[arg(long)]
    ell: EllPolicy,
    #[arg(long, value_enum, default_value_t = DeletionArg::Subtree)]
    deletion: DeletionArg,
    #[arg(long, value_enum, default_value_t = LiteralsArg::Positive)]
    literals: LiteralsArg,
}

#[derive(Args)]
struct ConcentrationArgs {
    /// Problem size; must be a power of two so lg(n) is exact
    #[arg(long)]
    n: u32,
    /// The constant c, as an integer or fraction p/q
    #[arg(long, default_value = "1")]
    c: String,
    /// Training-set size (default: n^c lg^2 n, requires integer c)
    #[arg(long)]
    s: Option<u64>,
    /// Generalisation error, as a fraction p/q (default: 1/n)
    #[arg(long)]
    g: Option<String>,
}

#[derive(Subcommand)]
enum DriftCommand {
    /// Simulate the validation grid and check hitting times against bounds
    Validate {
        /// Grid selection (only "default" is defined)
        #[arg(long, default_value = "default")]
        grid: String,
        /// Trajectories per grid point
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        /// Master seed for the simulations
        #[arg(long)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Oracle { check } => match check {
            OracleCommand::Trap(args) => cmd_trap(args),
            OracleCommand::Drift(args) => cmd_oracle_drift(args),
            OracleCommand::Concentration(args) => cmd_concentration(args),
        },
        Command::Drift { action } => match action {
            DriftCommand::Validate { grid, runs, seed } => cmd_drift_validate(grid, runs, seed),
        },
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn outcome_label(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::FoundOptimum => "found-optimum",
        Outcome::MetThreshold => "met-threshold",
        Outcome::HitIterationCap => "hit-iteration-cap",
    }
}

/// Decimal rendering of a possibly huge exact rational, for display only.
fn approx(r: &BigRational) -> f64 {
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(512);
    let num = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let den = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    num / den
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let problem = ProblemSpec::new(
        args.target.into(),
        args.n,
        args.literals.into(),
        args.ell.resolve(args.n),
    )?;
    let fitness_mode = match args.fitness {
        FitnessArg::CompleteTable => FitnessMode::CompleteTable,
        FitnessArg::Sample(rows) => {
            FitnessMode::Sampled(SampledFitnessConfig::new(rows, args.accept_threshold)?)
        }
    };
    let mut cfg = RunConfig::new(
        problem,
        args.deletion.into(),
        fitness_mode,
        args.max_iterations,
        args.seed,
    );
    if let Some(text) = &args.initial_tree {
        cfg.initial_tree = Some(parse_with_vars(text, args.n).context("bad --initial-tree")?);
    }
    let result = run(&cfg)?;

    println!("outcome: {}", outcome_label(result.outcome));
    println!("iterations: {}", result.iterations);
    println!("final tree: {}", result.final_tree);
    println!("leaf count: {}", result.final_tree.leaf_count());
    match result.final_exact_error {
        Some(err) => println!("exact error: {err}"),
        None => println!("exact error: (estimated only)"),
    }
    match &result.final_generalisation_error {
        Generalisation::Exact(r) => println!("generalisation error: {r} = {:.6e}", approx(r)),
        Generalisation::Estimated { value, std_error } => {
            println!("generalisation error: ~{value:.6e} (se {std_error:.2e}, estimated)")
        }
    }
    println!("ORs accepted during run: {}", result.ors_accepted_during_run);
    println!("ORs in final tree: {}", result.ors_in_final_tree);
    println!("accepted mutations: {}", result.accepted_mutations);
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::defaults(args.rq, args.seed);
    cfg.runs_per_cell = args.runs;
    cfg.max_iterations = args.max_iterations;

    let run_all = || -> Result<_> {
        let result = run_experiment(&cfg)?;
        Ok(result)
    };
    let result = match args.parallelism {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .context("building thread pool")?;
            pool.install(run_all)?
        }
        None => run_all()?,
    };

    let files = emit_tsv(&result, &args.out)?;
    for (key, cell) in &result.cells {
        let s = &cell.stats;
        println!(
            "{key}: B={:.3} T={} S={}",
            s.b,
            s.mean_t.map_or("-".to_string(), |v| format!("{v:.1}")),
            s.mean_s.map_or("-".to_string(), |v| format!("{v:.1}")),
        );
    }
    println!("wrote {} files to {}", files.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn tree_check_config(args: &TreeCheckArgs) -> Result<(rlsgp::tree::SyntaxTree, RunConfig)> {
    let tree = parse_with_vars(&args.tree, args.n).context("bad --tree")?;
    let problem = ProblemSpec::new(
        args.target.into(),
        args.n,
        args.literals.into(),
        args.ell.resolve(args.n),
    )?;
    let cfg = RunConfig::new(
        problem,
        args.deletion.into(),
        FitnessMode::CompleteTable,
        10_000,
        0,
    );
    Ok((tree, cfg))
}

fn cmd_trap(args: TreeCheckArgs) -> Result<ExitCode> {
    let (tree, cfg) = tree_check_config(&args)?;
    let report = is_trap(&tree, &cfg)?;
    println!("tree: {tree}");
    println!("is_trap: {}", report.is_trap);
    println!(
        "accepted outcomes: {} (probability mass {})",
        report.accepted_outcomes.len(),
        report.accepted_outcomes.total_probability()
    );
    println!(
        "all accepted semantically identical: {}",
        report.all_accepted_semantically_identical
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_drift(args: TreeCheckArgs) -> Result<ExitCode> {
    let (tree, cfg) = tree_check_config(&args)?;
    let report = one_step_drift(&tree, &cfg)?;
    println!("tree: {tree}");
    println!("state fitness: {}", report.state_fitness);
    println!("exact drift: {} = {:.6e}", report.exact_drift, approx(&report.exact_drift));
    println!(
        "lower bound x/(12*l*n): {} = {:.6e}",
        report.lower_bound,
        approx(&report.lower_bound)
    );
    println!("drift >= bound: {}", report.exact_drift >= report.lower_bound);
    Ok(ExitCode::SUCCESS)
}

fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| anyhow!("bad numerator '{num}'"))?;
        let den: BigInt = den.trim().parse().map_err(|_| anyhow!("bad denominator '{den}'"))?;
        if den.is_zero() {
            bail!("denominator is zero");
        }
        Ok(BigRational::new(num, den))
    } else {
        let v: BigInt = text.parse().map_err(|_| anyhow!("bad rational '{text}'"))?;
        Ok(BigRational::from_integer(v))
    }
}

use num_traits::Zero;

fn cmd_concentration(args: ConcentrationArgs) -> Result<ExitCode> {
    if args.n < 2 || !args.n.is_power_of_two() {
        bail!("--n must be a power of two at least 2 (lg n must be exact)");
    }
    let c = parse_rational(&args.c)?;
    if !c.is_positive() {
        bail!("--c must be positive");
    }
    let lg_n = u64::from(args.n.trailing_zeros());
    let s = match args.s {
        Some(s) => s,
        None => {
            // n^c lg^2 n with integer c.
            if !c.is_integer() {
                bail!("--s is required when c is not an integer");
            }
            let exp = c.to_integer().to_u32().ok_or_else(|| anyhow!("c too large"))?;
            u64::from(args.n)
                .checked_pow(exp)
                .and_then(|v| v.checked_mul(lg_n * lg_n))
                .ok_or_else(|| anyhow!("default s = n^c lg^2 n overflows; pass --s"))?
        }
    };
    let g = match args.g {
        Some(text) => parse_rational(&text)?,
        None => BigRational::new(BigInt::one(), BigInt::from(args.n)),
    };
    let spec = ConcentrationSpec { s, g: g.clone(), n: args.n, c };
    let report = concentration_check(&spec)?;
    println!("n={} s={} g={} (E[X] = {:.3})", args.n, s, g, approx(&(&g * BigRational::from_integer(s.into()))));
    println!(
        "upper tail Pr[X >= {}] = {:.6e} <= exp bound {:.6e}: {}",
        report.upper_threshold,
        approx(&report.upper_tail),
        report.upper_bound,
        report.upper_holds
    );
    println!(
        "lower tail Pr[X <= {}] = {:.6e} <= exp bound {:.6e}: {}",
        report.lower_threshold,
        approx(&report.lower_tail),
        report.lower_bound,
        report.lower_holds
    );
    if report.upper_holds && report.lower_holds {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(anyhow!("a Chernoff bound failed"))
    }
}

fn cmd_drift_validate(grid: String, runs: u64, seed: u64) -> Result<ExitCode> {
    if grid != "default" {
        bail!("unknown grid '{grid}' (only \"default\" is defined)");
    }
    let reports = validate_grid(seed, runs)?;
    let mut all_ok = true;
    for r in &reports {
        let kind = match r.spec.kind {
            DriftProcessKind::JumpToZero => "jump-to-zero",
            DriftProcessKind::Halving => "halving",
        };
        let ok = r.condition_holds && r.within_bound;
        all_ok &= ok;
        println!(
            "{kind:13} gamma={:<4} delta={:<5} x0={:<12e} mean={:<9.3} se={:<7.4} bound={:<9.3} {}",
            r.spec.params.gamma,
            r.spec.params.delta,
            r.spec.params.x0,
            r.stats.mean,
            r.stats.std_error,
            r.bound,
            if ok { "ok" } else { "FAIL" }
        );
    }
    println!("{} grid points validated", reports.len());
    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(anyhow!("drift validation failed"))
    }
}
