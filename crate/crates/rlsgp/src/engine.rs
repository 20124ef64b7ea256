//! The elitist single-solution search loop: mutate with HVL-Prime, accept an
//! offspring iff it fits the size limit and is not worse, terminate on an
//! exact optimum, on the sampled acceptance threshold, or at the iteration cap.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits;
use crate::fitness::{
    self, draw_sample, ErrorCount, FitnessError, Generalisation, LiteralSet, ProblemSpec,
    SampledFitnessConfig,
};
use crate::mutation::{
    hvl_prime_detailed, Branch, HvlAction, MutationConfig, MutationError,
};
use crate::tree::{Literal, Op, SyntaxTree};

/// How fitness is evaluated each iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitnessMode {
    /// Exact disagreement counts over all `2^n` assignments.
    CompleteTable,
    /// A fresh random training set per iteration plus a stop threshold.
    Sampled(SampledFitnessConfig),
}

/// Full configuration of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub mutation: MutationConfig,
    pub fitness_mode: FitnessMode,
    pub max_iterations: u64,
    pub seed: u64,
    /// Testing hook; a run normally starts from the empty tree.
    pub initial_tree: Option<SyntaxTree>,
}

impl RunConfig {
    /// Builds a config whose mutation operator draws from the problem's own
    /// literal set and both binary functions.
    pub fn new(
        problem: ProblemSpec,
        deletion_mode: crate::mutation::DeletionMode,
        fitness_mode: FitnessMode,
        max_iterations: u64,
        seed: u64,
    ) -> Self {
        let mutation =
            MutationConfig::new(problem.full_literal_set(), vec![Op::And, Op::Or], deletion_mode)
                .expect("problem literal sets are non-empty and duplicate-free");
        RunConfig { problem, mutation, fitness_mode, max_iterations, seed, initial_tree: None }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        for lit in &self.mutation.literals {
            let in_range = lit.index() >= 1 && lit.index() <= self.problem.n;
            let polarity_ok =
                !lit.negated() || self.problem.literal_set == LiteralSet::PositiveAndNegated;
            if !in_range || !polarity_ok {
                return Err(EngineError::InconsistentLiterals { literal: *lit });
            }
        }
        if let Some(tree) = &self.initial_tree {
            let idx = tree.max_index();
            if idx > self.problem.n {
                return Err(EngineError::InitialTreeOutOfRange { index: idx, n: self.problem.n });
            }
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Complete-table mode reached exact error 0.
    FoundOptimum,
    /// Sampled mode saw a sampled error at or below the acceptance threshold.
    MetThreshold,
    /// The iteration cap was reached first.
    HitIterationCap,
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub iterations: u64,
    pub final_tree: SyntaxTree,
    /// Exact disagreement count of the final tree, when computable.
    pub final_exact_error: Option<ErrorCount>,
    pub final_generalisation_error: Generalisation,
    pub ors_accepted_during_run: u64,
    pub ors_in_final_tree: u64,
    pub accepted_mutations: u64,
}

/// What one iteration did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub accepted: bool,
    pub action: HvlAction,
}

pub use crate::fitness::semantic_equals_target;

/// Runs a configuration to completion.
pub fn run(cfg: &RunConfig) -> Result<RunResult, EngineError> {
    Engine::new(cfg.clone())?.run_to_end()
}

const CTT_CACHE_MAX_N: u32 = 20;

/// One run's state machine. [`run`] is the usual entry point; the stepwise
/// interface exists for instrumentation and tests.
pub struct Engine {
    problem: ProblemSpec,
    mutation: MutationConfig,
    mode: FitnessMode,
    max_iterations: u64,
    rng: ChaCha8Rng,
    incumbent: SyntaxTree,
    /// Exact error of the incumbent in complete-table mode (sentinel `2^n`
    /// while the tree is empty); unused in sampled mode.
    exact_error: u128,
    ctt: Option<CttCache>,
    iterations: u64,
    accepted_mutations: u64,
    ors_accepted: u64,
    finished: Option<Outcome>,
}

impl Engine {
    pub fn new(cfg: RunConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let incumbent = cfg.initial_tree.unwrap_or(SyntaxTree::Empty);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut engine = Engine {
            rng,
            exact_error: 0,
            ctt: None,
            iterations: 0,
            accepted_mutations: 0,
            ors_accepted: 0,
            finished: None,
            incumbent,
            problem: cfg.problem,
            mutation: cfg.mutation,
            mode: cfg.fitness_mode,
            max_iterations: cfg.max_iterations,
        };
        if engine.mode == FitnessMode::CompleteTable {
            if engine.problem.n <= CTT_CACHE_MAX_N {
                engine.ctt = Some(CttCache::new(engine.problem.n));
            }
            engine.exact_error = engine.initial_exact_error()?;
            if engine.exact_error == 0 {
                engine.finished = Some(Outcome::FoundOptimum);
            }
        }
        Ok(engine)
    }

    fn sentinel(&self) -> u128 {
        self.problem.truth_table_size()
    }

    fn initial_exact_error(&mut self) -> Result<u128, EngineError> {
        if self.incumbent.is_empty() {
            return Ok(self.sentinel());
        }
        if let Some(cache) = &mut self.ctt {
            let root = cache.build(&self.incumbent);
            let err = fitness::error_from_cube(
                &root.bits,
                self.problem.n,
                self.problem.n,
                self.problem.target,
            );
            cache.root = Some(root);
            Ok(err)
        } else {
            Ok(fitness::exact_error(&self.incumbent, &self.problem)?)
        }
    }

    pub fn incumbent(&self) -> &SyntaxTree {
        &self.incumbent
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn finished(&self) -> Option<Outcome> {
        self.finished
    }

    /// Exact error of the incumbent, maintained in complete-table mode.
    pub fn incumbent_exact_error(&self) -> Option<u128> {
        match self.mode {
            FitnessMode::CompleteTable => Some(self.exact_error),
            FitnessMode::Sampled(_) => None,
        }
    }

    /// One iteration: mutate, evaluate, accept or reject, check termination.
    pub fn step(&mut self) -> Result<Step, EngineError> {
        assert!(self.finished.is_none(), "run already finished");
        let parent_leaves = self.incumbent.leaf_count();
        let (offspring, action) = hvl_prime_detailed(&self.incumbent, &self.mutation, &mut self.rng);
        let size_ok = self.problem.size_limit.allows(offspring.leaf_count());

        let accepted = match &self.mode {
            FitnessMode::CompleteTable => self.ctt_step(&offspring, &action, size_ok)?,
            FitnessMode::Sampled(cfg) => {
                let cfg = *cfg;
                self.sampled_step(&offspring, size_ok, cfg)?
            }
        };

        if accepted {
            assert!(
                offspring.leaf_count() <= parent_leaves + 1,
                "one mutation may add at most one leaf"
            );
            assert!(self.problem.size_limit.allows(offspring.leaf_count()));
            if matches!(action, HvlAction::Insert { function: Op::Or, .. }) {
                self.ors_accepted += 1;
            }
            self.accepted_mutations += 1;
            self.incumbent = offspring;
        }
        self.iterations += 1;
        Ok(Step { accepted, action })
    }

    fn ctt_step(
        &mut self,
        offspring: &SyntaxTree,
        action: &HvlAction,
        size_ok: bool,
    ) -> Result<bool, EngineError> {
        if !size_ok {
            return Ok(false);
        }
        let (f_off, new_root) = if offspring.is_empty() {
            (self.sentinel(), Some(None))
        } else if let Some(cache) = &mut self.ctt {
            let root = cache.offspring_root(action);
            let err = fitness::error_from_cube(
                &root.bits,
                self.problem.n,
                self.problem.n,
                self.problem.target,
            );
            (err, Some(Some(root)))
        } else {
            (fitness::exact_error(offspring, &self.problem)?, None)
        };
        // Elitism: accepting only f_off <= f keeps the fitness non-increasing.
        let accepted = f_off <= self.exact_error;
        if accepted {
            self.exact_error = f_off;
            if let (Some(root), Some(cache)) = (new_root, &mut self.ctt) {
                cache.root = root;
            }
            if self.exact_error == 0 {
                self.finished = Some(Outcome::FoundOptimum);
            }
        }
        Ok(accepted)
    }

    fn sampled_step(
        &mut self,
        offspring: &SyntaxTree,
        size_ok: bool,
        cfg: SampledFitnessConfig,
    ) -> Result<bool, EngineError> {
        // One fresh sample evaluates parent, offspring and the stop check.
        let sample = draw_sample(self.problem.n, cfg.rows, &mut self.rng)?;
        let target = sample.target_bits(self.problem.target);
        let f_parent = if self.incumbent.is_empty() {
            cfg.rows
        } else {
            let v = fitness::eval_on_sample(&self.incumbent, &sample)?;
            fitness::count_disagreements(&v, &target)
        };
        let mut accepted = false;
        let mut current_error = f_parent;
        if size_ok {
            let f_off = if offspring.is_empty() {
                cfg.rows
            } else {
                let v = fitness::eval_on_sample(offspring, &sample)?;
                fitness::count_disagreements(&v, &target)
            };
            if f_off <= f_parent {
                accepted = true;
                current_error = f_off;
            }
        }
        if current_error <= cfg.accept_threshold {
            self.finished = Some(Outcome::MetThreshold);
        }
        Ok(accepted)
    }

    /// Steps until an outcome is decided and assembles the result.
    pub fn run_to_end(mut self) -> Result<RunResult, EngineError> {
        while self.finished.is_none() && self.iterations < self.max_iterations {
            self.step()?;
        }
        let outcome = self.finished.unwrap_or(Outcome::HitIterationCap);
        let final_tree = self.incumbent;

        let (final_exact_error, final_generalisation_error) = if final_tree.is_empty() {
            let sentinel = self.problem.truth_table_size();
            let one = num_rational::BigRational::from_integer(1.into());
            (Some(sentinel), Generalisation::Exact(one))
        } else {
            match self.mode {
                FitnessMode::CompleteTable if self.problem.n <= CTT_CACHE_MAX_N => {
                    let err = self.exact_error;
                    let denom = num_bigint::BigInt::from(1u8) << self.problem.n;
                    let ratio = num_rational::BigRational::new(err.into(), denom);
                    (Some(err), Generalisation::Exact(ratio))
                }
                _ => match fitness::exact_error(&final_tree, &self.problem) {
                    Ok(err) => {
                        let denom = num_bigint::BigInt::from(1u8) << self.problem.n;
                        let ratio = num_rational::BigRational::new(err.into(), denom);
                        (Some(err), Generalisation::Exact(ratio))
                    }
                    Err(FitnessError::TooManyVariables { .. }) => {
                        (None, fitness::generalisation_error(&final_tree, &self.problem)?)
                    }
                    Err(e) => return Err(e.into()),
                },
            }
        };

        Ok(RunResult {
            outcome,
            iterations: self.iterations,
            ors_in_final_tree: u64::from(final_tree.stats().or_count),
            final_tree,
            final_exact_error,
            final_generalisation_error,
            ors_accepted_during_run: self.ors_accepted,
            accepted_mutations: self.accepted_mutations,
        })
    }
}

/// Incremental complete-truth-table evaluator. Every node of the incumbent
/// carries its value vector over the full `2^n` cube; a mutation only
/// recomputes the vectors along the edited path, sharing the rest.
struct CttCache {
    n: u32,
    words: usize,
    literal_vecs: HashMap<Literal, Arc<Vec<u64>>>,
    root: Option<Arc<EvalNode>>,
}

struct EvalNode {
    bits: Arc<Vec<u64>>,
    op: Option<Op>,
    left: Option<Arc<EvalNode>>,
    right: Option<Arc<EvalNode>>,
}

impl CttCache {
    fn new(n: u32) -> Self {
        CttCache {
            n,
            words: bits::words_for(1u64 << n),
            literal_vecs: HashMap::new(),
            root: None,
        }
    }

    fn literal_vec(&mut self, lit: Literal) -> Arc<Vec<u64>> {
        let n = self.n;
        let words = self.words;
        self.literal_vecs
            .entry(lit)
            .or_insert_with(|| {
                let mut v = vec![0u64; words];
                bits::fill_pattern(&mut v, lit.index() - 1, n);
                if lit.negated() {
                    let mask = if n < 6 { bits::tail_mask(1 << n) } else { u64::MAX };
                    for w in v.iter_mut() {
                        *w = !*w & mask;
                    }
                }
                Arc::new(v)
            })
            .clone()
    }

    fn leaf(&mut self, lit: Literal) -> Arc<EvalNode> {
        Arc::new(EvalNode { bits: self.literal_vec(lit), op: None, left: None, right: None })
    }

    fn internal(op: Op, left: Arc<EvalNode>, right: Arc<EvalNode>) -> Arc<EvalNode> {
        let mut bits_vec = left.bits.as_ref().clone();
        bits::combine_in_place(op, &mut bits_vec, &right.bits);
        Arc::new(EvalNode { bits: Arc::new(bits_vec), op: Some(op), left: Some(left), right: Some(right) })
    }

    fn build(&mut self, tree: &SyntaxTree) -> Arc<EvalNode> {
        match tree {
            SyntaxTree::Empty => unreachable!("empty trees carry the sentinel fitness"),
            SyntaxTree::Leaf(lit) => self.leaf(*lit),
            SyntaxTree::Node(node) => {
                let left = self.build(node.left());
                let right = self.build(node.right());
                Self::internal(node.op(), left, right)
            }
        }
    }

    /// Value tree for the offspring produced by `action` on the incumbent.
    fn offspring_root(&mut self, action: &HvlAction) -> Arc<EvalNode> {
        match action {
            HvlAction::SeedLeaf { literal } => self.leaf(*literal),
            HvlAction::Insert { at, function, literal, new_on_left } => {
                let root = self.root.clone().expect("insert requires a non-empty incumbent");
                let new_leaf = self.leaf(*literal);
                Self::rebuild(&root, at.steps(), &mut |displaced| {
                    if *new_on_left {
                        Self::internal(*function, new_leaf.clone(), displaced.clone())
                    } else {
                        Self::internal(*function, displaced.clone(), new_leaf.clone())
                    }
                })
            }
            HvlAction::Delete { at } => {
                let root = self.root.clone().expect("delete requires a non-empty incumbent");
                let (parent, branch) =
                    at.split_last().expect("root deletion yields the empty tree");
                Self::rebuild(&root, parent.steps(), &mut |parent_node| match branch.other() {
                    Branch::Left => parent_node.left.clone().unwrap(),
                    Branch::Right => parent_node.right.clone().unwrap(),
                })
            }
            HvlAction::Substitute { at, literal } => {
                let root = self.root.clone().expect("substitute requires a non-empty incumbent");
                let new_leaf = self.leaf(*literal);
                Self::rebuild(&root, at.steps(), &mut |_| new_leaf.clone())
            }
        }
    }

    fn rebuild(
        node: &Arc<EvalNode>,
        steps: &[Branch],
        make: &mut dyn FnMut(&Arc<EvalNode>) -> Arc<EvalNode>,
    ) -> Arc<EvalNode> {
        match steps.split_first() {
            None => make(node),
            Some((step, rest)) => {
                let op = node.op.expect("path continues through an internal node");
                let left = node.left.as_ref().unwrap();
                let right = node.right.as_ref().unwrap();
                match step {
                    Branch::Left => {
                        Self::internal(op, Self::rebuild(left, rest, make), right.clone())
                    }
                    Branch::Right => {
                        Self::internal(op, left.clone(), Self::rebuild(right, rest, make))
                    }
                }
            }
        }
    }
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives one run's seed from a master seed, a stream id (e.g. an experiment
/// cell) and a run index, by counter-based mixing. Collision-resistant enough
/// for batches and fully deterministic.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("mutation literal {literal} is inconsistent with the problem's literal set")]
    InconsistentLiterals { literal: Literal },
    #[error("initial tree uses x{index}, beyond the problem's {n} variables")]
    InitialTreeOutOfRange { index: u32, n: u32 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{SizeLimit, TargetFn};
    use crate::mutation::DeletionMode;
    use crate::tree::parse;

    fn ctt_config(n: u32, limit: SizeLimit, mode: DeletionMode, seed: u64) -> RunConfig {
        let problem = ProblemSpec::new(TargetFn::And, n, LiteralSet::Positive, limit).unwrap();
        RunConfig::new(problem, mode, FitnessMode::CompleteTable, 10_000, seed)
    }

    #[test]
    fn first_step_from_empty_always_accepts_a_leaf() {
        for seed in 0..50 {
            let cfg = ctt_config(3, SizeLimit::Finite(3), DeletionMode::Subtree, seed);
            let mut engine = Engine::new(cfg).unwrap();
            let step = engine.step().unwrap();
            assert!(step.accepted, "seed {seed}");
            assert!(matches!(step.action, HvlAction::SeedLeaf { .. }));
            assert_eq!(engine.incumbent().leaf_count(), 1);
        }
    }

    #[test]
    fn incremental_cache_agrees_with_projection_every_step() {
        for seed in [3u64, 17, 99] {
            let cfg = ctt_config(6, SizeLimit::Finite(12), DeletionMode::Subtree, seed);
            let problem = cfg.problem.clone();
            let mut engine = Engine::new(cfg).unwrap();
            for _ in 0..400 {
                if engine.finished().is_some() {
                    break;
                }
                engine.step().unwrap();
                let cached = engine.incumbent_exact_error().unwrap();
                let expected = if engine.incumbent().is_empty() {
                    problem.truth_table_size()
                } else {
                    fitness::exact_error(engine.incumbent(), &problem).unwrap()
                };
                assert_eq!(cached, expected, "seed {seed} iter {}", engine.iterations());
            }
        }
    }

    #[test]
    fn fitness_is_monotone_and_size_limit_holds() {
        let cfg = ctt_config(5, SizeLimit::Finite(6), DeletionMode::Subtree, 1234);
        let mut engine = Engine::new(cfg).unwrap();
        let mut last = engine.incumbent_exact_error().unwrap();
        while engine.finished().is_none() && engine.iterations() < 5_000 {
            engine.step().unwrap();
            let err = engine.incumbent_exact_error().unwrap();
            assert!(err <= last, "fitness worsened");
            assert!(engine.incumbent().leaf_count() <= 6);
            last = err;
        }
        assert_eq!(engine.finished(), Some(Outcome::FoundOptimum));
    }

    #[test]
    fn finds_small_conjunctions() {
        let cfg = ctt_config(4, SizeLimit::Finite(4), DeletionMode::Subtree, 7);
        let result = run(&cfg).unwrap();
        assert_eq!(result.outcome, Outcome::FoundOptimum);
        assert_eq!(result.final_exact_error, Some(0));
        assert_eq!(result.final_tree.leaf_count(), 4);
        assert_eq!(u64::from(result.final_tree.stats().or_count), result.ors_in_final_tree);
    }

    #[test]
    fn insertions_into_a_full_tree_are_rejected_regardless_of_fitness() {
        // Start from a full tree and watch every insertion bounce off the
        // size limit, even the ones that would improve fitness.
        let full = parse("(or (and x1 x2) (and x1 x2))").unwrap();
        let problem =
            ProblemSpec::new(TargetFn::And, 3, LiteralSet::Positive, SizeLimit::Finite(4)).unwrap();
        let mut cfg = RunConfig::new(
            problem,
            DeletionMode::LeafOnly,
            FitnessMode::CompleteTable,
            10_000,
            77,
        );
        cfg.initial_tree = Some(full);
        let mut engine = Engine::new(cfg).unwrap();
        let mut insertions_seen = 0;
        for _ in 0..2_000 {
            if engine.finished().is_some() {
                break;
            }
            let step = engine.step().unwrap();
            if matches!(step.action, HvlAction::Insert { .. })
                && engine.incumbent().leaf_count() == 4
            {
                assert!(!step.accepted, "insertion into a full tree was accepted");
                insertions_seen += 1;
            }
        }
        assert!(insertions_seen > 100, "too few insertions sampled");
    }

    #[test]
    fn leaf_only_deletion_stays_in_the_doubled_branch_trap() {
        let trap = parse("(or (and x1 x2) (and x1 x2))").unwrap();
        let problem =
            ProblemSpec::new(TargetFn::And, 3, LiteralSet::Positive, SizeLimit::Finite(4)).unwrap();
        let mut cfg = RunConfig::new(
            problem,
            DeletionMode::LeafOnly,
            FitnessMode::CompleteTable,
            10_000,
            2024,
        );
        cfg.initial_tree = Some(trap.clone());
        let result = run(&cfg).unwrap();
        assert_eq!(result.outcome, Outcome::HitIterationCap);
        assert_eq!(result.iterations, 10_000);
        // The incumbent may be restructured but never changes semantics.
        assert!(fitness::semantically_equal(&result.final_tree, &trap, 3).unwrap());
    }

    #[test]
    fn subtree_deletion_escapes_the_same_trap() {
        let trap = parse("(or (and x1 x2) (and x1 x2))").unwrap();
        let problem =
            ProblemSpec::new(TargetFn::And, 3, LiteralSet::Positive, SizeLimit::Finite(4)).unwrap();
        let mut cfg = RunConfig::new(
            problem,
            DeletionMode::Subtree,
            FitnessMode::CompleteTable,
            10_000,
            2024,
        );
        cfg.initial_tree = Some(trap);
        let result = run(&cfg).unwrap();
        assert_eq!(result.outcome, Outcome::FoundOptimum);
    }

    #[test]
    fn optimal_initial_tree_finishes_in_zero_iterations() {
        let problem =
            ProblemSpec::new(TargetFn::And, 3, LiteralSet::Positive, SizeLimit::Unbounded).unwrap();
        let mut cfg =
            RunConfig::new(problem, DeletionMode::Subtree, FitnessMode::CompleteTable, 100, 5);
        cfg.initial_tree = Some(parse("(and (and x1 x2) x3)").unwrap());
        let result = run(&cfg).unwrap();
        assert_eq!(result.outcome, Outcome::FoundOptimum);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn sampled_mode_stops_at_threshold() {
        let problem =
            ProblemSpec::new(TargetFn::And, 20, LiteralSet::Positive, SizeLimit::Unbounded)
                .unwrap();
        let cfg = RunConfig::new(
            problem,
            DeletionMode::Subtree,
            FitnessMode::Sampled(SampledFitnessConfig::new(128, 4).unwrap()),
            10_000,
            99,
        );
        let result = run(&cfg).unwrap();
        assert_eq!(result.outcome, Outcome::MetThreshold);
        assert!(result.iterations < 10_000);
        assert!(!result.final_tree.is_empty());
    }

    #[test]
    fn identical_configs_give_identical_results() {
        let mk = || {
            let problem =
                ProblemSpec::new(TargetFn::And, 8, LiteralSet::Positive, SizeLimit::Finite(16))
                    .unwrap();
            RunConfig::new(problem, DeletionMode::Subtree, FitnessMode::CompleteTable, 10_000, 424_242)
        };
        let a = run(&mk()).unwrap();
        let b = run(&mk()).unwrap();
        assert_eq!(a, b);

        // Parallel scheduling must not affect per-run results.
        use rayon::prelude::*;
        let seeds: Vec<u64> = (0..16).collect();
        let first: Vec<RunResult> = seeds
            .par_iter()
            .map(|&s| {
                let mut cfg = mk();
                cfg.seed = s;
                run(&cfg).unwrap()
            })
            .collect();
        let second: Vec<RunResult> = seeds
            .iter()
            .map(|&s| {
                let mut cfg = mk();
                cfg.seed = s;
                run(&cfg).unwrap()
            })
            .collect();
        assert_eq!(first, second);
    }

    #[test]
    fn derive_seed_separates_streams() {
        let a = derive_seed(42, 1, 0);
        let b = derive_seed(42, 1, 1);
        let c = derive_seed(42, 2, 0);
        let d = derive_seed(43, 1, 0);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, derive_seed(42, 1, 0));
    }

    #[test]
    fn inconsistent_literal_sets_are_rejected() {
        let problem =
            ProblemSpec::new(TargetFn::And, 3, LiteralSet::Positive, SizeLimit::Unbounded).unwrap();
        let mutation = MutationConfig::new(
            vec![Literal::positive(1), Literal::negative(2)],
            vec![Op::And, Op::Or],
            DeletionMode::Subtree,
        )
        .unwrap();
        let cfg = RunConfig {
            problem,
            mutation,
            fitness_mode: FitnessMode::CompleteTable,
            max_iterations: 10,
            seed: 0,
            initial_tree: None,
        };
        assert!(matches!(run(&cfg), Err(EngineError::InconsistentLiterals { .. })));
    }
}
