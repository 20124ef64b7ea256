//! Program trees: binary AND/OR nodes over (possibly negated) variable leaves.
//!
//! Trees are immutable values. Structural edits produce new trees that share
//! unchanged subtrees through `Arc`, so copies are cheap and never observable.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// A variable reference appearing at a leaf: `x3` or `!x3`. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    index: u32,
    negated: bool,
}

impl Literal {
    pub fn new(index: u32, negated: bool) -> Self {
        assert!(index >= 1, "variable indices are 1-based");
        Literal { index, negated }
    }

    pub fn positive(index: u32) -> Self {
        Self::new(index, false)
    }

    pub fn negative(index: u32) -> Self {
        Self::new(index, true)
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn negated(&self) -> bool {
        self.negated
    }

    /// Same variable, opposite polarity.
    pub fn complement(&self) -> Self {
        Literal { index: self.index, negated: !self.negated }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!x{}", self.index)
        } else {
            write!(f, "x{}", self.index)
        }
    }
}

/// Binary Boolean function at an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    And,
    Or,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::And => "and",
            Op::Or => "or",
        }
    }

    pub fn apply(&self, a: bool, b: bool) -> bool {
        match self {
            Op::And => a && b,
            Op::Or => a || b,
        }
    }

    pub fn dual(&self) -> Op {
        match self {
            Op::And => Op::Or,
            Op::Or => Op::And,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An internal node. Always has exactly two non-empty children.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct Node {
    op: Op,
    left: SyntaxTree,
    right: SyntaxTree,
    leaf_count: u32,
}

impl Node {
    pub fn op(&self) -> Op {
        self.op
    }

    pub fn left(&self) -> &SyntaxTree {
        &self.left
    }

    pub fn right(&self) -> &SyntaxTree {
        &self.right
    }
}

/// A program tree. `Empty` occurs only as a whole tree, never as a child.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SyntaxTree {
    Empty,
    Leaf(Literal),
    Node(Arc<Node>),
}

impl SyntaxTree {
    pub fn leaf(literal: Literal) -> Self {
        SyntaxTree::Leaf(literal)
    }

    /// Builds an internal node. Panics if either child is `Empty`.
    pub fn node(op: Op, left: SyntaxTree, right: SyntaxTree) -> Self {
        assert!(
            !left.is_empty() && !right.is_empty(),
            "internal nodes must have two non-empty children"
        );
        let leaf_count = left.leaf_count() + right.leaf_count();
        SyntaxTree::Node(Arc::new(Node { op, left, right, leaf_count }))
    }

    pub fn and(left: SyntaxTree, right: SyntaxTree) -> Self {
        Self::node(Op::And, left, right)
    }

    pub fn or(left: SyntaxTree, right: SyntaxTree) -> Self {
        Self::node(Op::Or, left, right)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SyntaxTree::Empty)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, SyntaxTree::Leaf(_))
    }

    /// Number of leaves; 0 for the empty tree. O(1), cached at construction.
    pub fn leaf_count(&self) -> u32 {
        match self {
            SyntaxTree::Empty => 0,
            SyntaxTree::Leaf(_) => 1,
            SyntaxTree::Node(n) => n.leaf_count,
        }
    }

    /// Total node count: `2 * leaf_count - 1` for non-empty trees.
    pub fn node_count(&self) -> u32 {
        match self.leaf_count() {
            0 => 0,
            l => 2 * l - 1,
        }
    }

    /// Evaluates the tree on one assignment with standard Boolean semantics.
    pub fn evaluate(&self, a: &Assignment) -> Result<bool, EvalError> {
        match self {
            SyntaxTree::Empty => Err(EvalError::EmptyTree),
            SyntaxTree::Leaf(lit) => {
                if lit.index() > a.n() {
                    Err(EvalError::IndexOutOfRange { index: lit.index(), n: a.n() })
                } else {
                    Ok(a.get(lit.index()) != lit.negated())
                }
            }
            SyntaxTree::Node(node) => {
                let l = node.left.evaluate(a)?;
                let r = node.right.evaluate(a)?;
                Ok(node.op.apply(l, r))
            }
        }
    }

    /// Structural statistics in one walk.
    pub fn stats(&self) -> TreeStats {
        let mut acc = StatsAcc::default();
        self.collect_stats(&mut acc);
        TreeStats {
            leaf_count: self.leaf_count(),
            node_count: self.node_count(),
            distinct_indices: acc.indices,
            or_count: acc.or_count,
            contains_contradiction_or_tautology: acc
                .positive
                .intersection(&acc.negative)
                .next()
                .is_some(),
        }
    }

    fn collect_stats(&self, acc: &mut StatsAcc) {
        match self {
            SyntaxTree::Empty => {}
            SyntaxTree::Leaf(lit) => {
                acc.indices.insert(lit.index());
                if lit.negated() {
                    acc.negative.insert(lit.index());
                } else {
                    acc.positive.insert(lit.index());
                }
            }
            SyntaxTree::Node(node) => {
                if node.op == Op::Or {
                    acc.or_count += 1;
                }
                node.left.collect_stats(acc);
                node.right.collect_stats(acc);
            }
        }
    }

    /// Largest variable index appearing in the tree; 0 for the empty tree.
    pub fn max_index(&self) -> u32 {
        match self {
            SyntaxTree::Empty => 0,
            SyntaxTree::Leaf(lit) => lit.index(),
            SyntaxTree::Node(node) => node.left.max_index().max(node.right.max_index()),
        }
    }

    /// De Morgan dual: swaps AND with OR and flips every literal's polarity.
    pub fn dual(&self) -> SyntaxTree {
        match self {
            SyntaxTree::Empty => SyntaxTree::Empty,
            SyntaxTree::Leaf(lit) => SyntaxTree::Leaf(lit.complement()),
            SyntaxTree::Node(node) => {
                SyntaxTree::node(node.op.dual(), node.left.dual(), node.right.dual())
            }
        }
    }

    /// Canonical text form; round-trips through [`parse`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxTree::Empty => f.write_str("()"),
            SyntaxTree::Leaf(lit) => write!(f, "{lit}"),
            SyntaxTree::Node(node) => {
                write!(f, "({} {} {})", node.op, node.left, node.right)
            }
        }
    }
}

impl FromStr for SyntaxTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Default)]
struct StatsAcc {
    indices: BTreeSet<u32>,
    positive: BTreeSet<u32>,
    negative: BTreeSet<u32>,
    or_count: u32,
}

/// Structural summary of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub leaf_count: u32,
    pub node_count: u32,
    pub distinct_indices: BTreeSet<u32>,
    pub or_count: u32,
    /// True iff some variable appears both negated and un-negated anywhere.
    pub contains_contradiction_or_tautology: bool,
}

/// One truth-value assignment to `x1..xn`, packed as a bit mask (bit `i-1` is `x_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: u64,
    n: u32,
}

impl Assignment {
    pub fn new(bits: u64, n: u32) -> Self {
        assert!((1..=64).contains(&n), "assignments cover 1..=64 variables");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Assignment { bits: bits & mask, n }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let n = values.len() as u32;
        let mut bits = 0u64;
        for (i, &v) in values.iter().enumerate() {
            if v {
                bits |= 1 << i;
            }
        }
        Assignment::new(bits, n)
    }

    pub fn all_true(n: u32) -> Self {
        Assignment::new(u64::MAX, n)
    }

    pub fn all_false(n: u32) -> Self {
        Assignment::new(0, n)
    }

    /// Value of `x_index` (1-based).
    pub fn get(&self, index: u32) -> bool {
        assert!((1..=self.n).contains(&index), "variable x{index} out of range");
        (self.bits >> (index - 1)) & 1 == 1
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Complements every variable.
    pub fn flipped(&self) -> Self {
        Assignment::new(!self.bits, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot evaluate the empty tree")]
    EmptyTree,
    #[error("leaf x{index} is out of range for an assignment over {n} variables")]
    IndexOutOfRange { index: u32, n: u32 },
}

/// Errors from [`parse`], with byte positions into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: expected {expected}")]
    Syntax { pos: usize, expected: &'static str },
    #[error("arity error at byte {pos}: 'and' and 'or' take exactly two operands")]
    Arity { pos: usize },
    #[error("index error at byte {pos}: variable indices start at x1")]
    IndexZero { pos: usize },
    #[error("index error at byte {pos}: variable index too large")]
    IndexTooLarge { pos: usize },
    #[error("index error at byte {pos}: x{index} exceeds the problem's {n} variables")]
    IndexOutOfRange { pos: usize, index: u32, n: u32 },
}

/// Parses the fully parenthesised prefix grammar:
/// `tree := "()" | literal | "(" ("and"|"or") tree tree ")"`,
/// `literal := ["!"] "x" digits`, whitespace-insensitive between tokens.
pub fn parse(text: &str) -> Result<SyntaxTree, ParseError> {
    Parser { src: text.as_bytes(), pos: 0, max_index: None }.run()
}

/// Like [`parse`], additionally rejecting indices above `n`.
pub fn parse_with_vars(text: &str, n: u32) -> Result<SyntaxTree, ParseError> {
    Parser { src: text.as_bytes(), pos: 0, max_index: Some(n) }.run()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    max_index: Option<u32>,
}

impl<'a> Parser<'a> {
    fn run(mut self) -> Result<SyntaxTree, ParseError> {
        let tree = self.tree()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(ParseError::Syntax { pos: self.pos, expected: "end of input" });
        }
        Ok(tree)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn starts_tree(byte: u8) -> bool {
        byte == b'(' || byte == b'!' || byte == b'x'
    }

    fn tree(&mut self) -> Result<SyntaxTree, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => self.group(),
            Some(b'!') | Some(b'x') => self.literal().map(SyntaxTree::Leaf),
            _ => Err(ParseError::Syntax { pos: self.pos, expected: "a tree" }),
        }
    }

    fn group(&mut self) -> Result<SyntaxTree, ParseError> {
        self.pos += 1; // consume '('
        self.skip_ws();
        if self.peek() == Some(b')') {
            self.pos += 1;
            return Ok(SyntaxTree::Empty);
        }
        let op = self.keyword()?;
        let left = self.operand()?;
        self.skip_ws();
        if self.peek() == Some(b')') {
            return Err(ParseError::Arity { pos: self.pos });
        }
        let right = self.operand()?;
        self.skip_ws();
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(SyntaxTree::node(op, left, right))
            }
            Some(b) if Self::starts_tree(b) => Err(ParseError::Arity { pos: self.pos }),
            _ => Err(ParseError::Syntax { pos: self.pos, expected: "')'" }),
        }
    }

    fn operand(&mut self) -> Result<SyntaxTree, ParseError> {
        let pos = self.pos;
        let sub = self.tree()?;
        if sub.is_empty() {
            // Empty is only valid as a whole tree.
            return Err(ParseError::Syntax { pos, expected: "a non-empty operand" });
        }
        Ok(sub)
    }

    fn keyword(&mut self) -> Result<Op, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        match &self.src[start..self.pos] {
            b"and" => Ok(Op::And),
            b"or" => Ok(Op::Or),
            _ => Err(ParseError::Syntax { pos: start, expected: "'and' or 'or'" }),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = if self.peek() == Some(b'!') {
            self.pos += 1;
            true
        } else {
            false
        };
        if self.peek() != Some(b'x') {
            return Err(ParseError::Syntax { pos: self.pos, expected: "'x'" });
        }
        self.pos += 1;
        let digits_start = self.pos;
        let mut value: u64 = 0;
        while let Some(b) = self.peek() {
            if !b.is_ascii_digit() {
                break;
            }
            value = value * 10 + u64::from(b - b'0');
            if value > u64::from(u32::MAX) {
                return Err(ParseError::IndexTooLarge { pos: digits_start });
            }
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ParseError::Syntax { pos: self.pos, expected: "a variable index" });
        }
        if value == 0 {
            return Err(ParseError::IndexZero { pos: digits_start });
        }
        let index = value as u32;
        if let Some(n) = self.max_index {
            if index > n {
                return Err(ParseError::IndexOutOfRange { pos: digits_start, index, n });
            }
        }
        Ok(Literal::new(index, negated))
    }
}
