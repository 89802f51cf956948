//! Enumeration of block input assignments in a fixed lexicographic order.

use crate::error::{Error, Result};

/// Largest input space an exhaustive sweep will enumerate.
pub const EXHAUSTIVE_GUARD: u64 = 1 << 26;

/// All assignments of one length-`B` block per node, node `i` drawing
/// letters from `0..alphabet[i]`. Index 0 is all zeros; the last instance
/// of the last node varies fastest.
#[derive(Clone, Debug)]
pub struct AssignmentSpace {
    alphabet: Vec<u32>,
    block_length: usize,
    size: u64,
}

impl AssignmentSpace {
    pub fn new(alphabet: Vec<u32>, block_length: usize, guard: u64) -> Result<Self> {
        let mut size = 1u64;
        for &l in &alphabet {
            for _ in 0..block_length {
                size = size.checked_mul(u64::from(l)).filter(|&s| s <= guard).ok_or_else(|| {
                    Error::resource(format!(
                        "input space over alphabets {alphabet:?} with B={block_length} exceeds {guard} assignments"
                    ))
                })?;
            }
        }
        Ok(AssignmentSpace {
            alphabet,
            block_length,
            size,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn node_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// Writes assignment `index` into `out` (one block per node).
    pub fn fill(&self, mut index: u64, out: &mut [Vec<u32>]) {
        for (node, block) in out.iter_mut().enumerate().rev() {
            let l = u64::from(self.alphabet[node]);
            block.resize(self.block_length, 0);
            for slot in block.iter_mut().rev() {
                *slot = (index % l) as u32;
                index /= l;
            }
        }
    }

    pub fn assignment(&self, index: u64) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.alphabet.len()];
        self.fill(index, &mut out);
        out
    }

    pub fn empty_assignment(&self) -> Vec<Vec<u32>> {
        vec![vec![0; self.block_length]; self.alphabet.len()]
    }
}
