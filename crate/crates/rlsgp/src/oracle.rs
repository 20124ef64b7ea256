//! Exhaustive small-instance verification: local-optimum (trap) detection by
//! enumerating every one-step mutation outcome, exact one-step fitness drift,
//! and exact binomial tail checks against their Chernoff bounds.
//!
//! Everything here uses exact rational arithmetic; there are no tolerance
//! constants. These checks anchor the statistical modules.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::engine::RunConfig;
use crate::fitness::{self, ErrorCount, FitnessError, SizeLimit};
use crate::mutation::{enumerate_outcomes, MutationError, OutcomeDistribution};
use crate::tree::SyntaxTree;

/// Result of the one-step local-optimum check.
#[derive(Debug, Clone)]
pub struct TrapReport {
    /// The tree is non-optimal and no accepted mutation can change either its
    /// semantics or its leaf count, so the optimum is unreachable.
    pub is_trap: bool,
    /// The outcome distribution restricted to accepted offspring; the
    /// probabilities keep their original values and sum to less than one.
    pub accepted_outcomes: OutcomeDistribution,
    pub all_accepted_semantically_identical: bool,
}

/// Enumerates every mutation outcome, applies the engine's acceptance rule
/// with exact fitness, and reports whether the reachable set under accepted
/// moves is a single semantic point.
pub fn is_trap(tree: &SyntaxTree, cfg: &RunConfig) -> Result<TrapReport, OracleError> {
    if tree.is_empty() {
        return Err(OracleError::Fitness(FitnessError::EmptyTree));
    }
    let parent_error = fitness::exact_error(tree, &cfg.problem)?;
    let sentinel = cfg.problem.truth_table_size();
    let dist = enumerate_outcomes(tree, &cfg.mutation)?;

    let mut accepted = Vec::new();
    let mut all_identical = true;
    let mut all_same_leaf_count = true;
    for (out, p) in dist.iter() {
        let size_ok = cfg.problem.size_limit.allows(out.leaf_count());
        if !size_ok {
            continue;
        }
        let out_error =
            if out.is_empty() { sentinel } else { fitness::exact_error(out, &cfg.problem)? };
        if out_error > parent_error {
            continue;
        }
        let identical = if out.is_empty() {
            false
        } else {
            fitness::semantically_equal(out, tree, cfg.problem.n)?
        };
        all_identical &= identical;
        all_same_leaf_count &= out.leaf_count() == tree.leaf_count();
        accepted.push((out.clone(), p.clone()));
    }

    Ok(TrapReport {
        is_trap: parent_error > 0 && all_identical && all_same_leaf_count,
        accepted_outcomes: OutcomeDistribution::from_entries(accepted),
        all_accepted_semantically_identical: all_identical,
    })
}

/// Whether the optimum can be reached from a tree through accepted mutations.
#[derive(Debug, Clone, PartialEq)]
pub enum Reachability {
    /// The closure of accepted moves was exhausted without meeting the
    /// optimum: the state is permanently stuck.
    Unreachable { explored: usize },
    /// An accepted-move path to an exactly optimal tree exists.
    Reachable { witness: SyntaxTree },
    /// The closure exceeded the state cap before the question was settled.
    Inconclusive { explored: usize },
}

/// Breadth-first search over the set of trees reachable through accepted
/// mutations (the elitist rule applied state by state), deciding whether any
/// reachable tree is semantically optimal.
///
/// [`is_trap`] is the strict one-step check: it demands that every accepted
/// offspring be semantically identical. A tree can fail that check and still
/// be permanently stuck when its accepted moves only wander across an
/// equal-fitness plateau; this closure check settles such cases.
///
/// When the mutation literal set is closed under permuting variable indices
/// (the usual full terminal sets are), the whole dynamics is
/// permutation-symmetric, so states are explored up to a canonical variable
/// relabelling; plateaus that merely shuffle interchangeable variables then
/// collapse to single states and genuinely stuck trees have tiny closures.
pub fn optimum_unreachable(
    tree: &SyntaxTree,
    cfg: &RunConfig,
    max_states: usize,
) -> Result<Reachability, OracleError> {
    use std::collections::{HashMap, HashSet, VecDeque};

    if tree.is_empty() {
        return Err(OracleError::Fitness(FitnessError::EmptyTree));
    }
    let canonicalise = literal_set_is_index_symmetric(&cfg.mutation.literals, cfg.problem.n);
    let canon = |t: &SyntaxTree| -> SyntaxTree {
        if canonicalise {
            canonical_relabel(t)
        } else {
            t.clone()
        }
    };

    let sentinel = cfg.problem.truth_table_size();
    let mut fitness_memo: HashMap<SyntaxTree, u128> = HashMap::new();
    let mut fitness_of = |t: &SyntaxTree| -> Result<u128, OracleError> {
        if t.is_empty() {
            return Ok(sentinel);
        }
        if let Some(&f) = fitness_memo.get(t) {
            return Ok(f);
        }
        let f = fitness::exact_error(t, &cfg.problem)?;
        fitness_memo.insert(t.clone(), f);
        Ok(f)
    };

    let start = canon(tree);
    let mut visited: HashSet<SyntaxTree> = HashSet::new();
    let mut queue: VecDeque<SyntaxTree> = VecDeque::new();
    visited.insert(start.clone());
    queue.push_back(start);

    while let Some(state) = queue.pop_front() {
        let f_state = fitness_of(&state)?;
        if f_state == 0 {
            return Ok(Reachability::Reachable { witness: state });
        }
        for (out, _) in enumerate_outcomes(&state, &cfg.mutation)?.iter() {
            if !cfg.problem.size_limit.allows(out.leaf_count()) {
                continue;
            }
            if out.is_empty() {
                continue;
            }
            let rep = canon(out);
            if visited.contains(&rep) {
                continue;
            }
            if fitness_of(&rep)? > f_state {
                continue;
            }
            if visited.len() >= max_states {
                return Ok(Reachability::Inconclusive { explored: visited.len() });
            }
            visited.insert(rep.clone());
            queue.push_back(rep);
        }
    }
    Ok(Reachability::Unreachable { explored: visited.len() })
}

/// True iff, per polarity, the set contains either every index `1..=n` or
/// none — the condition under which index permutations leave the mutation
/// operator (and the n-ary targets) invariant.
fn literal_set_is_index_symmetric(literals: &[crate::tree::Literal], n: u32) -> bool {
    let mut pos = 0u64;
    let mut neg = 0u64;
    for lit in literals {
        if lit.index() > n || lit.index() > 64 {
            return false;
        }
        let bit = 1u64 << (lit.index() - 1);
        if lit.negated() {
            neg |= bit;
        } else {
            pos |= bit;
        }
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    (pos == 0 || pos == full) && (neg == 0 || neg == full)
}

/// Relabels variables by first occurrence in a depth-first walk, the
/// canonical representative of a tree's index-permutation orbit.
fn canonical_relabel(tree: &SyntaxTree) -> SyntaxTree {
    use std::collections::HashMap;

    fn walk(tree: &SyntaxTree, next: &mut u32, map: &mut HashMap<u32, u32>) -> SyntaxTree {
        match tree {
            SyntaxTree::Empty => SyntaxTree::Empty,
            SyntaxTree::Leaf(lit) => {
                let id = *map.entry(lit.index()).or_insert_with(|| {
                    let id = *next;
                    *next += 1;
                    id
                });
                SyntaxTree::Leaf(crate::tree::Literal::new(id, lit.negated()))
            }
            SyntaxTree::Node(node) => {
                let left = walk(node.left(), next, map);
                let right = walk(node.right(), next, map);
                SyntaxTree::node(node.op(), left, right)
            }
        }
    }
    walk(tree, &mut 1, &mut HashMap::new())
}

/// Exact expected one-step fitness decrease at a state, with the
/// `x / (12 l n)` reference lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub state_fitness: ErrorCount,
    /// Sum over accepted outcomes of probability times fitness decrease.
    pub exact_drift: BigRational,
    /// `state_fitness / (12 * size_limit * n)`.
    pub lower_bound: BigRational,
}

/// Exact one-step drift of the fitness under the engine's acceptance rule,
/// from the full outcome enumeration. Rejected outcomes contribute zero;
/// elitism makes every accepted term non-negative.
pub fn one_step_drift(tree: &SyntaxTree, cfg: &RunConfig) -> Result<DriftReport, OracleError> {
    if tree.is_empty() {
        return Err(OracleError::Fitness(FitnessError::EmptyTree));
    }
    let ell = match cfg.problem.size_limit {
        SizeLimit::Finite(l) => l,
        SizeLimit::Unbounded => return Err(OracleError::UnboundedSizeLimit),
    };
    let parent_error = fitness::exact_error(tree, &cfg.problem)?;
    let sentinel = cfg.problem.truth_table_size();
    let dist = enumerate_outcomes(tree, &cfg.mutation)?;

    let mut drift = BigRational::zero();
    for (out, p) in dist.iter() {
        if !cfg.problem.size_limit.allows(out.leaf_count()) {
            continue;
        }
        let out_error =
            if out.is_empty() { sentinel } else { fitness::exact_error(out, &cfg.problem)? };
        if out_error > parent_error {
            continue;
        }
        let decrease = BigInt::from(parent_error - out_error);
        drift += p * BigRational::from_integer(decrease);
    }
    debug_assert!(!drift.is_negative());

    let denom = BigInt::from(12u64) * BigInt::from(ell) * BigInt::from(cfg.problem.n);
    let lower_bound = BigRational::new(BigInt::from(parent_error), denom);
    Ok(DriftReport { state_fitness: parent_error, exact_drift: drift, lower_bound })
}

/// Parameters for the binomial concentration check: the sampled error of a
/// solution with generalisation error `g` is Binomial(`s`, `g`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSpec {
    pub s: u64,
    pub g: BigRational,
    pub n: u32,
    pub c: BigRational,
}

/// Exact binomial tails next to the Chernoff bounds they must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    /// Smallest integer counted by the upper tail: `ceil(2 * max(sg, (c/2) lg n))`.
    pub upper_threshold: u64,
    /// `Pr[X >= upper_threshold]`, exactly.
    pub upper_tail: BigRational,
    /// `exp(-max(sg, (c/2) lg n) / 3)`.
    pub upper_bound: f64,
    pub upper_holds: bool,
    /// Largest integer counted by the lower tail: `floor(sg / 2)`.
    pub lower_threshold: u64,
    /// `Pr[X <= lower_threshold]`, exactly (zero when `sg` is zero).
    pub lower_tail: BigRational,
    /// `exp(-sg / 8)`.
    pub lower_bound: f64,
    pub lower_holds: bool,
}

/// Computes both exact binomial tail probabilities and asserts each against
/// its Chernoff bound. Requires `n` to be a power of two so that `lg n` is
/// exact, and `0 <= g <= 1`.
pub fn concentration_check(spec: &ConcentrationSpec) -> Result<ConcentrationReport, OracleError> {
    if spec.g.is_negative() || spec.g > BigRational::one() {
        return Err(OracleError::InvalidProbability);
    }
    if spec.n < 2 || !spec.n.is_power_of_two() {
        return Err(OracleError::NotPowerOfTwo { n: spec.n });
    }
    if !spec.c.is_positive() {
        return Err(OracleError::NonPositiveConstant);
    }
    let lg_n = BigRational::from_integer(BigInt::from(spec.n.trailing_zeros()));
    let sg = BigRational::from_integer(BigInt::from(spec.s)) * &spec.g;
    let half_clg: BigRational = &spec.c / BigRational::from_integer(2.into()) * &lg_n;
    let mu_plus = if sg >= half_clg { sg.clone() } else { half_clg };

    // Upper tail: Pr[X >= 2 mu_plus] <= exp(-mu_plus / 3).
    let upper_threshold = ceil_to_u64(&(&mu_plus * BigRational::from_integer(2.into())));
    let upper_tail = if spec.g.is_zero() {
        BigRational::zero()
    } else {
        binomial_tail_ge(spec.s, upper_threshold, &spec.g)
    };
    let upper_bound = (-(mu_plus.to_f64().unwrap()) / 3.0).exp();
    let upper_holds = rational_le_f64(&upper_tail, upper_bound);

    // Lower tail: Pr[X <= sg / 2] <= exp(-sg / 8); no deviation below an
    // expectation of zero.
    let lower_threshold = floor_to_u64(&(&sg / BigRational::from_integer(2.into())));
    let lower_tail = if sg.is_zero() {
        BigRational::zero()
    } else {
        binomial_tail_le(spec.s, lower_threshold, &spec.g)
    };
    let lower_bound = (-(sg.to_f64().unwrap()) / 8.0).exp();
    let lower_holds = rational_le_f64(&lower_tail, lower_bound);

    Ok(ConcentrationReport {
        upper_threshold,
        upper_tail,
        upper_bound,
        upper_holds,
        lower_threshold,
        lower_tail,
        lower_bound,
        lower_holds,
    })
}

fn ceil_to_u64(r: &BigRational) -> u64 {
    r.ceil().to_integer().to_u64().expect("threshold fits u64")
}

fn floor_to_u64(r: &BigRational) -> u64 {
    r.floor().to_integer().to_u64().expect("threshold fits u64")
}

/// `p <= bound` compared without losing exactness: the f64 bound converts to
/// a rational exactly.
fn rational_le_f64(p: &BigRational, bound: f64) -> bool {
    match BigRational::from_float(bound) {
        Some(b) => p <= &b,
        None => false,
    }
}

/// Exact `Pr[X >= k]` for `X ~ Binomial(s, g)`.
pub fn binomial_tail_ge(s: u64, k: u64, g: &BigRational) -> BigRational {
    if k == 0 {
        return BigRational::one();
    }
    if k > s {
        return BigRational::zero();
    }
    sum_pmf(s, k, s, g)
}

/// Exact `Pr[X <= k]` for `X ~ Binomial(s, g)`.
pub fn binomial_tail_le(s: u64, k: u64, g: &BigRational) -> BigRational {
    if k >= s {
        return BigRational::one();
    }
    sum_pmf(s, 0, k, g)
}

/// Exact sum of the Binomial(s, g) pmf over `lo..=hi`, by incremental
/// integer arithmetic on `C(s, i) * p^i * q^(s-i)` numerators.
fn sum_pmf(s: u64, lo: u64, hi: u64, g: &BigRational) -> BigRational {
    let p_num = g.numer().clone();
    let p_den = g.denom().clone();
    let q_num: BigInt = &p_den - &p_num;

    if p_num.is_zero() {
        // Point mass at zero.
        return if lo == 0 { BigRational::one() } else { BigRational::zero() };
    }
    if q_num.is_zero() {
        return if hi >= s { BigRational::one() } else { BigRational::zero() };
    }

    // term(i) = C(s, i) * p_num^i * q_num^(s-i); start at i = 0 and advance by
    // term(i+1) = term(i) * (s-i) * p_num / ((i+1) * q_num), each step exact.
    let mut term: BigInt = q_num.pow(u32::try_from(s).expect("sample size fits u32"));
    let mut acc = BigInt::zero();
    if lo == 0 {
        acc += &term;
    }
    for i in 0..hi {
        term = term * BigInt::from(s - i) * &p_num / (BigInt::from(i + 1) * &q_num);
        if i + 1 >= lo {
            acc += &term;
        }
    }
    BigRational::new(acc, p_den.pow(u32::try_from(s).unwrap()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("the drift lower bound x/(12 l n) needs a finite size limit")]
    UnboundedSizeLimit,
    #[error("exact lg(n) needs n to be a power of two, got {n}")]
    NotPowerOfTwo { n: u32 },
    #[error("g must lie in [0, 1]")]
    InvalidProbability,
    #[error("c must be positive")]
    NonPositiveConstant,
}
