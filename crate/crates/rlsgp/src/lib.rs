//! Randomised local search genetic programming over AND/OR syntax trees.
//!
//! The crate provides:
//! - [`tree`]: the program representation, its text grammar and evaluation;
//! - [`mutation`]: HVL-Prime structural edits, a randomised wrapper and an
//!   exact offspring-distribution enumerator;
//! - [`fitness`]: exact error counts against the n-ary AND/OR targets and
//!   sampled-error evaluation on random training sets;
//! - [`engine`]: the elitist mutate-and-select loop with a tree size limit;
//! - [`oracle`]: exhaustive small-instance checks — local-optimum (trap)
//!   detection, exact one-step drift and binomial concentration bounds;
//! - [`drift`]: hitting-time bound calculators and synthetic drift processes
//!   with Monte Carlo validation;
//! - [`experiments`]: a seeded, parallel batch harness with TSV output.

pub mod tree;
mod bits;
pub mod mutation;
pub mod fitness;
pub mod engine;
pub mod oracle;
pub mod drift;
pub mod experiments;

pub use engine::{run, Engine, FitnessMode, Outcome, RunConfig, RunResult};
pub use fitness::{ErrorCount, LiteralSet, ProblemSpec, SampledFitnessConfig, SizeLimit, TargetFn};
pub use mutation::{DeletionMode, HvlAction, MutationConfig, NodeRef};
pub use tree::{parse, Assignment, Literal, Op, SyntaxTree};
