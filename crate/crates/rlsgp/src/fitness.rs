//! Error counts against the n-ary AND / OR targets: exact counts over the
//! complete truth table via projection onto the variables a tree actually
//! uses, and sampled counts on per-iteration random training sets.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::bits;
use crate::tree::{Assignment, Literal, SyntaxTree};

/// Target function: the conjunction or disjunction of all `n` variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetFn {
    And,
    Or,
}

impl TargetFn {
    pub fn name(&self) -> &'static str {
        match self {
            TargetFn::And => "and",
            TargetFn::Or => "or",
        }
    }

    /// Value of the target on one assignment.
    pub fn value(&self, a: &Assignment) -> bool {
        match self {
            TargetFn::And => a == &Assignment::all_true(a.n()),
            TargetFn::Or => a != &Assignment::all_false(a.n()),
        }
    }
}

/// Which literals the terminal set offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiteralSet {
    Positive,
    PositiveAndNegated,
}

/// The accepted-tree size limit (maximum leaf count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeLimit {
    Finite(u32),
    Unbounded,
}

impl SizeLimit {
    pub fn allows(&self, leaf_count: u32) -> bool {
        match self {
            SizeLimit::Finite(l) => leaf_count <= *l,
            SizeLimit::Unbounded => true,
        }
    }
}

/// A problem instance: target, variable count, terminal set and size limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub target: TargetFn,
    pub n: u32,
    pub literal_set: LiteralSet,
    pub size_limit: SizeLimit,
}

impl ProblemSpec {
    pub fn new(
        target: TargetFn,
        n: u32,
        literal_set: LiteralSet,
        size_limit: SizeLimit,
    ) -> Result<Self, FitnessError> {
        if !(1..=64).contains(&n) {
            return Err(FitnessError::UnsupportedN { n });
        }
        Ok(ProblemSpec { target, n, literal_set, size_limit })
    }

    /// All literals the terminal set offers, in index order (positives first).
    pub fn full_literal_set(&self) -> Vec<Literal> {
        let mut lits: Vec<Literal> = (1..=self.n).map(Literal::positive).collect();
        if self.literal_set == LiteralSet::PositiveAndNegated {
            lits.extend((1..=self.n).map(Literal::negative));
        }
        lits
    }

    /// `2^n`, the number of rows of the complete truth table.
    pub fn truth_table_size(&self) -> u128 {
        1u128 << self.n
    }
}

/// Exact disagreement counts; fits `[0, 2^64]`.
pub type ErrorCount = u128;

/// Largest distinct-variable count for which the exact projection is used.
pub const MAX_EXACT_DISTINCT_VARS: u32 = 30;

const ESTIMATE_ROWS: u32 = 1_000_000;

/// Distinct 1-based indices used by `tree`, as a sorted list; errors if any
/// index exceeds `n`.
fn collect_indices(tree: &SyntaxTree, n: u32) -> Result<Vec<u32>, FitnessError> {
    fn walk(tree: &SyntaxTree, n: u32, mask: &mut u64) -> Result<(), FitnessError> {
        match tree {
            SyntaxTree::Empty => Ok(()),
            SyntaxTree::Leaf(lit) => {
                if lit.index() > n {
                    Err(FitnessError::VariableOutOfRange { index: lit.index(), n })
                } else {
                    *mask |= 1u64 << (lit.index() - 1);
                    Ok(())
                }
            }
            SyntaxTree::Node(node) => {
                walk(node.left(), n, mask)?;
                walk(node.right(), n, mask)
            }
        }
    }
    let mut mask = 0u64;
    walk(tree, n, &mut mask)?;
    Ok((1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect())
}

/// Exact number of the `2^n` assignments on which `tree` disagrees with the
/// target. Enumerates only the `2^|V|` assignments of the tree's distinct
/// variable set `V` and weights each by its `2^(n-|V|)` extensions.
pub fn exact_error(tree: &SyntaxTree, spec: &ProblemSpec) -> Result<ErrorCount, FitnessError> {
    if tree.is_empty() {
        return Err(FitnessError::EmptyTree);
    }
    let dims = collect_indices(tree, spec.n)?;
    let v = dims.len() as u32;
    if v > MAX_EXACT_DISTINCT_VARS {
        return Err(FitnessError::TooManyVariables { count: v, cap: MAX_EXACT_DISTINCT_VARS });
    }
    let out = bits::eval_cube(tree, &dims);
    Ok(error_from_cube(&out, v, spec.n, spec.target))
}

/// Disagreement count from a tree's value vector over a `2^v` cube whose
/// dimensions are distinct variables of an `n`-variable problem.
pub(crate) fn error_from_cube(out: &[u64], v: u32, n: u32, target: TargetFn) -> ErrorCount {
    let cube = 1u128 << v;
    let ext = 1u128 << (n - v);
    let t = u128::from(bits::popcount(out));
    match target {
        TargetFn::And => {
            // Rows where the tree is true each miss the single all-true
            // extension; the all-true row itself flips the parity.
            let top = u128::from(bits::get_bit(out, (cube - 1) as u64));
            t * ext + 1 - 2 * top
        }
        TargetFn::Or => {
            let bottom = u128::from(bits::get_bit(out, 0));
            (cube - t) * ext + 2 * bottom - 1
        }
    }
}

/// Error of a conjunction (disjunction) of `a` distinct variables against the
/// `n`-ary target: `2^(n-a) - 1`.
pub fn closed_form_error(a: u32, n: u32) -> Result<ErrorCount, FitnessError> {
    if n > 64 {
        return Err(FitnessError::UnsupportedN { n });
    }
    if a > n {
        return Err(FitnessError::ArityExceedsN { a, n });
    }
    Ok((1u128 << (n - a)) - 1)
}

/// True iff the tree computes exactly the target function.
pub fn semantic_equals_target(
    tree: &SyntaxTree,
    spec: &ProblemSpec,
) -> Result<bool, FitnessError> {
    Ok(exact_error(tree, spec)? == 0)
}

/// True iff two trees compute the same function of `n` variables.
pub fn semantically_equal(
    a: &SyntaxTree,
    b: &SyntaxTree,
    n: u32,
) -> Result<bool, FitnessError> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(true),
        (true, false) | (false, true) => return Ok(false),
        _ => {}
    }
    let mut dims = collect_indices(a, n)?;
    dims.extend(collect_indices(b, n)?);
    dims.sort_unstable();
    dims.dedup();
    let v = dims.len() as u32;
    if v > MAX_EXACT_DISTINCT_VARS {
        return Err(FitnessError::TooManyVariables { count: v, cap: MAX_EXACT_DISTINCT_VARS });
    }
    Ok(bits::eval_cube(a, &dims) == bits::eval_cube(b, &dims))
}

/// Per-iteration training-set configuration: `rows` samples per iteration and
/// the sampled-error acceptance threshold that ends a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledFitnessConfig {
    pub rows: u32,
    pub accept_threshold: u32,
}

impl SampledFitnessConfig {
    pub fn new(rows: u32, accept_threshold: u32) -> Result<Self, FitnessError> {
        if rows == 0 {
            return Err(FitnessError::ZeroSampleRows);
        }
        Ok(SampledFitnessConfig { rows, accept_threshold })
    }
}

/// A training set of `rows` assignments over `n` variables, stored column-wise
/// (one bit vector per variable) for word-parallel evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    n: u32,
    rows: u32,
    columns: Vec<Vec<u64>>,
}

impl Sample {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of rows (assignments) in the sample.
    pub fn len(&self) -> u32 {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub(crate) fn words(&self) -> usize {
        bits::words_for(u64::from(self.rows))
    }

    pub(crate) fn column(&self, index: u32) -> &[u64] {
        &self.columns[(index - 1) as usize]
    }

    /// The `r`-th assignment of the sample.
    pub fn row(&self, r: u32) -> Assignment {
        assert!(r < self.rows);
        let word = (r / 64) as usize;
        let bit = r % 64;
        let mut packed = 0u64;
        for (i, col) in self.columns.iter().enumerate() {
            packed |= ((col[word] >> bit) & 1) << i;
        }
        Assignment::new(packed, self.n)
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = Assignment> + '_ {
        (0..self.rows).map(move |r| self.row(r))
    }

    /// Builds a sample from explicit rows (all over the same `n`).
    pub fn from_rows(n: u32, rows: &[Assignment]) -> Result<Self, FitnessError> {
        if rows.is_empty() {
            return Err(FitnessError::ZeroSampleRows);
        }
        let words = bits::words_for(rows.len() as u64);
        let mut columns = vec![vec![0u64; words]; n as usize];
        for (r, a) in rows.iter().enumerate() {
            if a.n() != n {
                return Err(FitnessError::SampleWidthMismatch { expected: n, got: a.n() });
            }
            for i in 0..n {
                if a.get(i + 1) {
                    columns[i as usize][r / 64] |= 1u64 << (r % 64);
                }
            }
        }
        Ok(Sample { n, rows: rows.len() as u32, columns })
    }

    /// The target function's value on every row, as a packed bit vector.
    pub fn target_bits(&self, target: TargetFn) -> Vec<u64> {
        let words = self.words();
        let tail = bits::tail_mask(u64::from(self.rows));
        match target {
            TargetFn::And => {
                let mut acc = vec![u64::MAX; words];
                if let Some(last) = acc.last_mut() {
                    *last = tail;
                }
                for col in &self.columns {
                    bits::combine_in_place(crate::tree::Op::And, &mut acc, col);
                }
                acc
            }
            TargetFn::Or => {
                let mut acc = vec![0u64; words];
                for col in &self.columns {
                    bits::combine_in_place(crate::tree::Op::Or, &mut acc, col);
                }
                acc
            }
        }
    }
}

/// Draws `rows` assignments independently and uniformly (with replacement).
/// Deterministic given the generator state; column order is fixed.
pub fn draw_sample<R: Rng>(n: u32, rows: u32, rng: &mut R) -> Result<Sample, FitnessError> {
    if !(1..=64).contains(&n) {
        return Err(FitnessError::UnsupportedN { n });
    }
    if rows == 0 {
        return Err(FitnessError::ZeroSampleRows);
    }
    let words = bits::words_for(u64::from(rows));
    let tail = bits::tail_mask(u64::from(rows));
    let mut columns = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut col: Vec<u64> = (0..words).map(|_| rng.gen()).collect();
        if let Some(last) = col.last_mut() {
            *last &= tail;
        }
        columns.push(col);
    }
    Ok(Sample { n, rows, columns })
}

/// Evaluates `tree` on every row of the sample, as a packed bit vector.
pub fn eval_on_sample(tree: &SyntaxTree, sample: &Sample) -> Result<Vec<u64>, FitnessError> {
    match tree {
        SyntaxTree::Empty => Err(FitnessError::EmptyTree),
        SyntaxTree::Leaf(lit) => {
            if lit.index() > sample.n {
                return Err(FitnessError::VariableOutOfRange { index: lit.index(), n: sample.n });
            }
            let mut v = sample.column(lit.index()).to_vec();
            if lit.negated() {
                let tail = bits::tail_mask(u64::from(sample.rows));
                let last = v.len() - 1;
                for w in v.iter_mut() {
                    *w = !*w;
                }
                v[last] &= tail;
            }
            Ok(v)
        }
        SyntaxTree::Node(node) => {
            let mut left = eval_on_sample(node.left(), sample)?;
            let right = eval_on_sample(node.right(), sample)?;
            bits::combine_in_place(node.op(), &mut left, &right);
            Ok(left)
        }
    }
}

/// Number of sample rows on which the tree disagrees with the target.
pub fn sampled_error(
    tree: &SyntaxTree,
    spec: &ProblemSpec,
    sample: &Sample,
) -> Result<u32, FitnessError> {
    if sample.n != spec.n {
        return Err(FitnessError::SampleWidthMismatch { expected: spec.n, got: sample.n });
    }
    let target = sample.target_bits(spec.target);
    let tree_bits = eval_on_sample(tree, sample)?;
    Ok(count_disagreements(&tree_bits, &target))
}

/// Popcount of the XOR of two equally sized packed vectors.
pub(crate) fn count_disagreements(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Probability that a tree disagrees with the target on a uniformly random
/// assignment: exact with denominator `2^n` where the projection applies,
/// otherwise a Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub enum Generalisation {
    Exact(BigRational),
    Estimated { value: f64, std_error: f64 },
}

impl Generalisation {
    pub fn as_f64(&self) -> f64 {
        match self {
            Generalisation::Exact(r) => {
                use num_traits::ToPrimitive;
                r.to_f64().unwrap_or(f64::NAN)
            }
            Generalisation::Estimated { value, .. } => *value,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Generalisation::Exact(_))
    }
}

/// Generalisation error of a tree. Falls back to a seeded Monte Carlo
/// estimate over 10^6 rows when the tree uses too many distinct variables
/// for the exact projection.
pub fn generalisation_error(
    tree: &SyntaxTree,
    spec: &ProblemSpec,
) -> Result<Generalisation, FitnessError> {
    match exact_error(tree, spec) {
        Ok(err) => {
            let denom = BigInt::from(1u8) << spec.n;
            Ok(Generalisation::Exact(BigRational::new(BigInt::from(err), denom)))
        }
        Err(FitnessError::TooManyVariables { .. }) => {
            // Fixed seed: the estimate is a deterministic function of the tree.
            let mut rng = ChaCha8Rng::seed_from_u64(0x9E37_79B9_7F4A_7C15);
            let mut wrong = 0u64;
            let mut remaining = ESTIMATE_ROWS;
            while remaining > 0 {
                let chunk = remaining.min(65_536);
                let sample = draw_sample(spec.n, chunk, &mut rng)?;
                wrong += u64::from(sampled_error(tree, spec, &sample)?);
                remaining -= chunk;
            }
            let p = wrong as f64 / f64::from(ESTIMATE_ROWS);
            let se = (p * (1.0 - p) / f64::from(ESTIMATE_ROWS)).sqrt();
            Ok(Generalisation::Estimated { value: p, std_error: se })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("the empty tree has no fitness; callers use the sentinel value")]
    EmptyTree,
    #[error("n = {n} is outside the supported range 1..=64")]
    UnsupportedN { n: u32 },
    #[error("tree uses {count} distinct variables, above the exact-path cap of {cap}")]
    TooManyVariables { count: u32, cap: u32 },
    #[error("leaf x{index} is out of range for an {n}-variable problem")]
    VariableOutOfRange { index: u32, n: u32 },
    #[error("a conjunction of {a} variables cannot exceed n = {n}")]
    ArityExceedsN { a: u32, n: u32 },
    #[error("a sample must contain at least one row")]
    ZeroSampleRows,
    #[error("sample is over {got} variables but the problem has {expected}")]
    SampleWidthMismatch { expected: u32, got: u32 },
}
