//! HVL-Prime mutation: insert / delete / substitute edits, a randomised
//! wrapper, and an exact enumerator of the induced offspring distribution.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::tree::{Literal, Op, SyntaxTree};

/// Which nodes the deletion sub-operation may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeletionMode {
    /// Classic HVL-Prime: only leaves can be deleted (with their parent).
    LeafOnly,
    /// Any node can be deleted, removing its whole subtree.
    Subtree,
}

/// Configuration of the mutation operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationConfig {
    pub literals: Vec<Literal>,
    pub functions: Vec<Op>,
    pub deletion_mode: DeletionMode,
}

impl MutationConfig {
    pub fn new(
        literals: Vec<Literal>,
        functions: Vec<Op>,
        deletion_mode: DeletionMode,
    ) -> Result<Self, MutationError> {
        if literals.is_empty() || functions.is_empty() {
            return Err(MutationError::EmptyChoiceSet);
        }
        let mut seen = literals.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != literals.len() {
            return Err(MutationError::DuplicateLiterals);
        }
        let mut fns = functions.clone();
        fns.sort();
        fns.dedup();
        if fns.len() != functions.len() {
            return Err(MutationError::DuplicateFunctions);
        }
        Ok(MutationConfig { literals, functions, deletion_mode })
    }
}

/// A step on the path from the root to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Left,
    Right,
}

impl Branch {
    pub fn other(&self) -> Branch {
        match self {
            Branch::Left => Branch::Right,
            Branch::Right => Branch::Left,
        }
    }
}

/// Addresses one node of a tree by the branch sequence from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NodeRef {
    steps: Vec<Branch>,
}

impl NodeRef {
    pub fn root() -> Self {
        NodeRef { steps: Vec::new() }
    }

    pub fn from_steps(steps: Vec<Branch>) -> Self {
        NodeRef { steps }
    }

    pub fn steps(&self) -> &[Branch] {
        &self.steps
    }

    pub fn is_root(&self) -> bool {
        self.steps.is_empty()
    }

    /// Parent reference and the branch taken to reach this node, unless root.
    pub fn split_last(&self) -> Option<(NodeRef, Branch)> {
        let (&last, rest) = self.steps.split_last()?;
        Some((NodeRef { steps: rest.to_vec() }, last))
    }
}

/// Resolves a reference against a tree; `None` if the path walks off it.
pub fn subtree_at<'t>(tree: &'t SyntaxTree, at: &NodeRef) -> Option<&'t SyntaxTree> {
    let mut cur = tree;
    for step in at.steps() {
        match cur {
            SyntaxTree::Node(node) => {
                cur = match step {
                    Branch::Left => node.left(),
                    Branch::Right => node.right(),
                }
            }
            _ => return None,
        }
    }
    if cur.is_empty() {
        None
    } else {
        Some(cur)
    }
}

/// Reference to the `idx`-th node in pre-order (root is 0). Uses cached
/// subtree sizes, so it costs O(depth).
pub fn nth_node(tree: &SyntaxTree, idx: u32) -> Option<NodeRef> {
    if idx >= tree.node_count() {
        return None;
    }
    let mut steps = Vec::new();
    let mut cur = tree;
    let mut idx = idx;
    loop {
        if idx == 0 {
            return Some(NodeRef { steps });
        }
        match cur {
            SyntaxTree::Node(node) => {
                idx -= 1;
                let left_size = node.left().node_count();
                if idx < left_size {
                    steps.push(Branch::Left);
                    cur = node.left();
                } else {
                    idx -= left_size;
                    steps.push(Branch::Right);
                    cur = node.right();
                }
            }
            _ => return None,
        }
    }
}

/// Reference to the `idx`-th leaf in left-to-right order.
pub fn nth_leaf(tree: &SyntaxTree, idx: u32) -> Option<NodeRef> {
    if idx >= tree.leaf_count() {
        return None;
    }
    let mut steps = Vec::new();
    let mut cur = tree;
    let mut idx = idx;
    loop {
        match cur {
            SyntaxTree::Leaf(_) => return Some(NodeRef { steps }),
            SyntaxTree::Node(node) => {
                let left_leaves = node.left().leaf_count();
                if idx < left_leaves {
                    steps.push(Branch::Left);
                    cur = node.left();
                } else {
                    idx -= left_leaves;
                    steps.push(Branch::Right);
                    cur = node.right();
                }
            }
            SyntaxTree::Empty => return None,
        }
    }
}

fn rebuild(tree: &SyntaxTree, steps: &[Branch], replacement: SyntaxTree) -> Option<SyntaxTree> {
    match steps.split_first() {
        None => Some(replacement),
        Some((step, rest)) => match tree {
            SyntaxTree::Node(node) => {
                let (left, right) = match step {
                    Branch::Left => (rebuild(node.left(), rest, replacement)?, node.right().clone()),
                    Branch::Right => (node.left().clone(), rebuild(node.right(), rest, replacement)?),
                };
                Some(SyntaxTree::node(node.op(), left, right))
            }
            _ => None,
        },
    }
}

/// Replaces the node at `at` with `f`, whose children are the displaced
/// subtree and a fresh leaf `l` (order per `new_on_left`).
pub fn apply_insert(
    tree: &SyntaxTree,
    at: &NodeRef,
    f: Op,
    l: Literal,
    new_on_left: bool,
) -> Result<SyntaxTree, MutationError> {
    if tree.is_empty() {
        return Err(MutationError::EmptyTree);
    }
    let displaced = subtree_at(tree, at).ok_or(MutationError::InvalidNodeRef)?.clone();
    let leaf = SyntaxTree::leaf(l);
    let replacement = if new_on_left {
        SyntaxTree::node(f, leaf, displaced)
    } else {
        SyntaxTree::node(f, displaced, leaf)
    };
    rebuild(tree, at.steps(), replacement).ok_or(MutationError::InvalidNodeRef)
}

/// Removes the subtree at `at` together with its parent; the sibling takes
/// the parent's place. Deleting the root yields the empty tree.
pub fn apply_delete(tree: &SyntaxTree, at: &NodeRef) -> Result<SyntaxTree, MutationError> {
    if tree.is_empty() {
        return Err(MutationError::EmptyTree);
    }
    if subtree_at(tree, at).is_none() {
        return Err(MutationError::InvalidNodeRef);
    }
    match at.split_last() {
        None => Ok(SyntaxTree::Empty),
        Some((parent, branch)) => {
            let parent_node = match subtree_at(tree, &parent) {
                Some(SyntaxTree::Node(node)) => node,
                _ => return Err(MutationError::InvalidNodeRef),
            };
            let sibling = match branch.other() {
                Branch::Left => parent_node.left().clone(),
                Branch::Right => parent_node.right().clone(),
            };
            rebuild(tree, parent.steps(), sibling).ok_or(MutationError::InvalidNodeRef)
        }
    }
}

/// Replaces the leaf at `at` with `l`. Errors if `at` is an internal node.
pub fn apply_substitute(
    tree: &SyntaxTree,
    at: &NodeRef,
    l: Literal,
) -> Result<SyntaxTree, MutationError> {
    if tree.is_empty() {
        return Err(MutationError::EmptyTree);
    }
    match subtree_at(tree, at) {
        Some(SyntaxTree::Leaf(_)) => {
            rebuild(tree, at.steps(), SyntaxTree::leaf(l)).ok_or(MutationError::InvalidNodeRef)
        }
        Some(_) => Err(MutationError::NotALeaf),
        None => Err(MutationError::InvalidNodeRef),
    }
}

/// What one HVL-Prime application did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HvlAction {
    /// The subject was empty; a single leaf becomes the new tree.
    SeedLeaf { literal: Literal },
    Insert { at: NodeRef, function: Op, literal: Literal, new_on_left: bool },
    Delete { at: NodeRef },
    Substitute { at: NodeRef, literal: Literal },
}

/// One HVL-Prime mutation. See [`hvl_prime_detailed`] for the edit trace.
pub fn hvl_prime<R: Rng>(tree: &SyntaxTree, cfg: &MutationConfig, rng: &mut R) -> SyntaxTree {
    hvl_prime_detailed(tree, cfg, rng).0
}

/// One HVL-Prime mutation, also reporting the edit that produced the result.
///
/// Random choices are consumed in the fixed order (op, l, f, node, order), so
/// a seeded generator fully determines the trajectory. `op`, `l` and `f` are
/// drawn even when the selected branch ignores them.
pub fn hvl_prime_detailed<R: Rng>(
    tree: &SyntaxTree,
    cfg: &MutationConfig,
    rng: &mut R,
) -> (SyntaxTree, HvlAction) {
    let op_choice = rng.gen_range(0..3u8);
    let literal = cfg.literals[rng.gen_range(0..cfg.literals.len())];
    let function = cfg.functions[rng.gen_range(0..cfg.functions.len())];

    if tree.is_empty() {
        return (SyntaxTree::leaf(literal), HvlAction::SeedLeaf { literal });
    }

    match op_choice {
        0 => {
            let at = nth_node(tree, rng.gen_range(0..tree.node_count())).unwrap();
            let new_on_left = rng.gen_range(0..2u8) == 0;
            let out = apply_insert(tree, &at, function, literal, new_on_left).unwrap();
            (out, HvlAction::Insert { at, function, literal, new_on_left })
        }
        1 => {
            let at = match cfg.deletion_mode {
                DeletionMode::Subtree => nth_node(tree, rng.gen_range(0..tree.node_count())),
                DeletionMode::LeafOnly => nth_leaf(tree, rng.gen_range(0..tree.leaf_count())),
            }
            .unwrap();
            let out = apply_delete(tree, &at).unwrap();
            (out, HvlAction::Delete { at })
        }
        _ => {
            let at = nth_leaf(tree, rng.gen_range(0..tree.leaf_count())).unwrap();
            let out = apply_substitute(tree, &at, literal).unwrap();
            (out, HvlAction::Substitute { at, literal })
        }
    }
}

/// The exact offspring distribution of [`hvl_prime`] on a tree, with rational
/// probabilities. Structurally identical offspring are merged.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    entries: Vec<(SyntaxTree, BigRational)>,
}

impl OutcomeDistribution {
    pub fn from_entries(entries: Vec<(SyntaxTree, BigRational)>) -> Self {
        OutcomeDistribution { entries }
    }

    pub fn entries(&self) -> &[(SyntaxTree, BigRational)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SyntaxTree, BigRational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_probability(&self) -> BigRational {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn probability_of(&self, tree: &SyntaxTree) -> BigRational {
        self.entries
            .iter()
            .find(|(t, _)| t == tree)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Enumerates every offspring of one HVL-Prime application and its exact
/// probability. Choices the selected branch ignores are merged out rather
/// than double-counted.
pub fn enumerate_outcomes(
    tree: &SyntaxTree,
    cfg: &MutationConfig,
) -> Result<OutcomeDistribution, MutationError> {
    if tree.is_empty() {
        return Err(MutationError::EmptyTree);
    }
    let n_lits = cfg.literals.len() as u64;
    let n_fns = cfg.functions.len() as u64;
    let nodes = u64::from(tree.node_count());
    let leaves = u64::from(tree.leaf_count());

    let mut acc: HashMap<SyntaxTree, BigRational> = HashMap::new();
    let mut add = |t: SyntaxTree, p: BigRational| {
        *acc.entry(t).or_insert_with(BigRational::zero) += p;
    };

    // INS: op 1/3, node uniform, literal uniform, function uniform, order 1/2.
    let p_ins = ratio(1, 3 * nodes * n_lits * n_fns * 2);
    for idx in 0..tree.node_count() {
        let at = nth_node(tree, idx).unwrap();
        for &l in &cfg.literals {
            for &f in &cfg.functions {
                for new_on_left in [false, true] {
                    let out = apply_insert(tree, &at, f, l, new_on_left)?;
                    add(out, p_ins.clone());
                }
            }
        }
    }

    // DEL: op 1/3, node uniform over the mode's choice set; l and f unused.
    match cfg.deletion_mode {
        DeletionMode::Subtree => {
            let p_del = ratio(1, 3 * nodes);
            for idx in 0..tree.node_count() {
                let at = nth_node(tree, idx).unwrap();
                add(apply_delete(tree, &at)?, p_del.clone());
            }
        }
        DeletionMode::LeafOnly => {
            let p_del = ratio(1, 3 * leaves);
            for idx in 0..tree.leaf_count() {
                let at = nth_leaf(tree, idx).unwrap();
                add(apply_delete(tree, &at)?, p_del.clone());
            }
        }
    }

    // SUB: op 1/3, leaf uniform, literal uniform; f unused.
    let p_sub = ratio(1, 3 * leaves * n_lits);
    for idx in 0..tree.leaf_count() {
        let at = nth_leaf(tree, idx).unwrap();
        for &l in &cfg.literals {
            add(apply_substitute(tree, &at, l)?, p_sub.clone());
        }
    }

    let mut entries: Vec<_> = acc.into_iter().collect();
    entries.sort_by_cached_key(|(t, _)| t.to_text());
    debug_assert!(entries.iter().map(|(_, p)| p).sum::<BigRational>() == BigRational::one());
    Ok(OutcomeDistribution { entries })
}

/// Grows a random tree with the given number of leaves by starting from a
/// random leaf and repeatedly inserting at a uniformly chosen node, mirroring
/// how the mutation operator itself builds structure.
pub fn random_tree<R: Rng>(
    rng: &mut R,
    literals: &[Literal],
    functions: &[Op],
    leaves: u32,
) -> SyntaxTree {
    assert!(leaves >= 1 && !literals.is_empty() && !functions.is_empty());
    let mut tree = SyntaxTree::leaf(literals[rng.gen_range(0..literals.len())]);
    for _ in 1..leaves {
        let at = nth_node(&tree, rng.gen_range(0..tree.node_count())).unwrap();
        let l = literals[rng.gen_range(0..literals.len())];
        let f = functions[rng.gen_range(0..functions.len())];
        let new_on_left = rng.gen_range(0..2u8) == 0;
        tree = apply_insert(&tree, &at, f, l, new_on_left).unwrap();
    }
    tree
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("the literal and function sets must be non-empty")]
    EmptyChoiceSet,
    #[error("the literal set contains duplicates")]
    DuplicateLiterals,
    #[error("the function set contains duplicates")]
    DuplicateFunctions,
    #[error("node reference does not address a node of this tree")]
    InvalidNodeRef,
    #[error("operation requires a leaf node")]
    NotALeaf,
    #[error("operation requires a non-empty tree")]
    EmptyTree,
}
