//! Word-parallel evaluation of trees over truth-table cubes and sample columns.
//!
//! A "cube" over `v` variables is the sequence of all `2^v` assignments in
//! index order: assignment `i` gives dimension `d` the bit `(i >> d) & 1`.
//! Bit vectors are stored little-endian in `u64` words with unused tail bits
//! kept at zero, so popcounts never need masking.

use crate::tree::{Op, SyntaxTree};

pub(crate) const WORD_BITS: u64 = 64;

/// Words needed for a vector of `bits` bits (at least one).
pub(crate) fn words_for(bits: u64) -> usize {
    (bits.div_ceil(WORD_BITS) as usize).max(1)
}

/// Mask selecting the valid bits of the final word of a `bits`-bit vector.
pub(crate) fn tail_mask(bits: u64) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Truth-table pattern word for cube dimension `dim` at word index `word`.
pub(crate) fn pattern_word(dim: u32, word: usize) -> u64 {
    if dim < 6 {
        LOW_PATTERNS[dim as usize]
    } else if (word >> (dim - 6)) & 1 == 1 {
        u64::MAX
    } else {
        0
    }
}

/// Fills `out` with the pattern vector for `dim` over a `2^v`-bit cube.
pub(crate) fn fill_pattern(out: &mut [u64], dim: u32, v: u32) {
    let mask = if v < 6 { tail_mask(1 << v) } else { u64::MAX };
    for (w, slot) in out.iter_mut().enumerate() {
        *slot = pattern_word(dim, w) & mask;
    }
}

/// Evaluates `tree` on every assignment of a cube whose dimensions are the
/// sorted variable indices in `dims` (`dims[d]` is the 1-based index mapped to
/// dimension `d`). Every index used by the tree must appear in `dims`.
pub(crate) fn eval_cube(tree: &SyntaxTree, dims: &[u32]) -> Vec<u64> {
    let v = dims.len() as u32;
    let words = words_for(1u64 << v);
    let mut out = vec![0u64; words];
    eval_cube_into(tree, dims, v, &mut out);
    out
}

fn eval_cube_into(tree: &SyntaxTree, dims: &[u32], v: u32, out: &mut [u64]) {
    match tree {
        SyntaxTree::Empty => panic!("cannot evaluate the empty tree"),
        SyntaxTree::Leaf(lit) => {
            let dim = dims
                .binary_search(&lit.index())
                .expect("leaf index missing from cube dimensions") as u32;
            fill_pattern(out, dim, v);
            if lit.negated() {
                let mask = if v < 6 { tail_mask(1 << v) } else { u64::MAX };
                for w in out.iter_mut() {
                    *w = !*w & mask;
                }
            }
        }
        SyntaxTree::Node(node) => {
            eval_cube_into(node.left(), dims, v, out);
            let mut right = vec![0u64; out.len()];
            eval_cube_into(node.right(), dims, v, &mut right);
            combine_in_place(node.op(), out, &right);
        }
    }
}

pub(crate) fn combine_in_place(op: Op, acc: &mut [u64], other: &[u64]) {
    debug_assert_eq!(acc.len(), other.len());
    match op {
        Op::And => {
            for (a, b) in acc.iter_mut().zip(other) {
                *a &= b;
            }
        }
        Op::Or => {
            for (a, b) in acc.iter_mut().zip(other) {
                *a |= b;
            }
        }
    }
}

pub(crate) fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| u64::from(w.count_ones())).sum()
}

/// Reads bit `idx` of a packed vector.
pub(crate) fn get_bit(words: &[u64], idx: u64) -> bool {
    (words[(idx / WORD_BITS) as usize] >> (idx % WORD_BITS)) & 1 == 1
}
