//! Prefix-free block codebooks whose codeword length shrinks by one bit
//! for every reply bit the block will later cost.
//!
//! For a block `x` over an effective alphabet where letter `a` needs
//! `w(a)` reply bits, the codeword has length `L - sum_i w(x_i)`, with
//! `L = ceil(log2 (sum_a 2^w(a))^B)`. That choice meets the Kraft
//! inequality with the smallest constant `L`, so every block costs exactly
//! `L` bits once the replies are counted. Codewords are assigned
//! canonically: blocks sorted by (length, block rank), codes counted up and
//! left-shifted whenever the length grows.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of blocks a codebook may enumerate.
pub const MAX_BLOCKS: u64 = 1 << 24;

/// A string of bits in transmission order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.0.push((value >> i) & 1 == 1);
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Codeword {
    pub code: u64,
    pub len: u32,
}

impl Codeword {
    pub fn write_to(&self, out: &mut BitString) {
        out.push_uint(self.code, self.len);
    }

    pub fn to_bits(self) -> BitString {
        let mut b = BitString::new();
        self.write_to(&mut b);
        b
    }
}

#[derive(Clone, Debug)]
pub struct Codebook {
    block_length: usize,
    alphabet: Vec<u32>,
    widths: Vec<u32>,
    total_budget: u32,
    /// Codeword per block rank.
    words: Vec<Codeword>,
    /// Block ranks in canonical order.
    canonical: Vec<u32>,
    first_code: Vec<u64>,
    count: Vec<u64>,
    offset: Vec<usize>,
}

impl Codebook {
    /// Codebook over letters `0..k` where the first `r` letters are
    /// ambiguous (one reply bit each) and the rest are resolved outright.
    pub fn build(alphabet_size: usize, ambiguous_count: usize, block_length: usize) -> Result<Self> {
        if ambiguous_count > alphabet_size {
            return Err(Error::domain(format!(
                "{ambiguous_count} ambiguous letters in an alphabet of {alphabet_size}"
            )));
        }
        let alphabet = (0..alphabet_size as u32).collect();
        let widths = (0..alphabet_size).map(|i| u32::from(i < ambiguous_count)).collect();
        Self::with_reply_widths(alphabet, widths, block_length)
    }

    /// Codebook over arbitrary letter labels, each with its own reply width.
    pub fn with_reply_widths(alphabet: Vec<u32>, widths: Vec<u32>, block_length: usize) -> Result<Self> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::domain("codebook alphabet is empty"));
        }
        if widths.len() != k {
            return Err(Error::domain("one reply width per letter required"));
        }
        if block_length == 0 {
            return Err(Error::domain("block length must be at least 1"));
        }
        let block_count = checked_pow(k as u64, block_length)
            .filter(|&n| n <= MAX_BLOCKS)
            .ok_or_else(|| Error::resource(format!("{k}^{block_length} blocks exceed the 2^24 codebook guard")))?;

        let per_letter: BigUint = widths.iter().map(|&w| BigUint::one() << w).sum();
        let weight_total = per_letter.pow(block_length as u32);
        let budget = if weight_total <= BigUint::one() {
            0
        } else {
            (weight_total - 1u32).bits()
        };
        if budget > 63 {
            return Err(Error::resource(format!("codeword budget of {budget} bits exceeds 63")));
        }
        let budget = budget as u32;

        let mut lengths = Vec::with_capacity(block_count as usize);
        let mut digits = vec![0usize; block_length];
        for _ in 0..block_count {
            let reply: u32 = digits.iter().map(|&d| widths[d]).sum();
            lengths.push(budget - reply);
            increment(&mut digits, k);
        }

        let mut canonical: Vec<u32> = (0..block_count as u32).collect();
        canonical.sort_by_key(|&r| (lengths[r as usize], r));

        let levels = budget as usize + 1;
        let mut first_code = vec![0u64; levels];
        let mut count = vec![0u64; levels];
        let mut offset = vec![0usize; levels];
        let mut words = vec![Codeword { code: 0, len: 0 }; block_count as usize];

        let mut code = 0u64;
        let mut prev_len = lengths[canonical[0] as usize];
        for (i, &r) in canonical.iter().enumerate() {
            let len = lengths[r as usize];
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            }
            if count[len as usize] == 0 {
                first_code[len as usize] = code;
                offset[len as usize] = i;
            }
            count[len as usize] += 1;
            words[r as usize] = Codeword { code, len };
            prev_len = len;
        }
        if prev_len > 0 && code >> prev_len != 0 {
            return Err(Error::Protocol("canonical code overflowed its length".into()));
        }

        Ok(Codebook {
            block_length,
            alphabet,
            widths,
            total_budget: budget,
            words,
            canonical,
            first_code,
            count,
            offset,
        })
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn alphabet(&self) -> &[u32] {
        &self.alphabet
    }

    pub fn reply_widths(&self) -> &[u32] {
        &self.widths
    }

    /// Letters that require at least one reply bit.
    pub fn ambiguous(&self) -> Vec<u32> {
        self.alphabet
            .iter()
            .zip(&self.widths)
            .filter(|(_, &w)| w > 0)
            .map(|(&a, _)| a)
            .collect()
    }

    /// The constant `L` = codeword length + reply bits of every block.
    pub fn total_budget(&self) -> u32 {
        self.total_budget
    }

    pub fn block_count(&self) -> usize {
        self.words.len()
    }

    /// Codeword of the block with the given rank (lexicographic index).
    pub fn word(&self, rank: usize) -> Codeword {
        self.words[rank]
    }

    /// Reply bits owed for the block with this rank.
    pub fn reply_bits(&self, rank: usize) -> u32 {
        self.total_budget - self.words[rank].len
    }

    /// Lexicographic rank of a block of letter indices.
    pub fn rank_of_indices(&self, indices: &[usize]) -> usize {
        let k = self.alphabet.len();
        indices.iter().fold(0, |acc, &d| acc * k + d)
    }

    /// Letter indices of the block with this rank.
    pub fn indices_of_rank(&self, mut rank: usize) -> Vec<usize> {
        let k = self.alphabet.len();
        let mut out = vec![0; self.block_length];
        for slot in out.iter_mut().rev() {
            *slot = rank % k;
            rank /= k;
        }
        out
    }

    fn letter_index(&self, letter: u32) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&a| a == letter)
            .ok_or_else(|| Error::domain(format!("letter {letter} is not in the codebook alphabet")))
    }

    pub fn encode(&self, block: &[u32]) -> Result<BitString> {
        if block.len() != self.block_length {
            return Err(Error::domain(format!(
                "block of length {} for a codebook of block length {}",
                block.len(),
                self.block_length
            )));
        }
        let indices = block
            .iter()
            .map(|&a| self.letter_index(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.word(self.rank_of_indices(&indices)).to_bits())
    }

    /// Reads one codeword off the front of `bits`, returning the block rank
    /// and the number of bits consumed.
    pub fn decode_rank(&self, bits: &[bool]) -> Result<(usize, usize)> {
        let mut code = 0u64;
        for len in 0..=self.total_budget as usize {
            if len > 0 {
                let Some(&bit) = bits.get(len - 1) else {
                    return Err(Error::Framing(format!(
                        "stream ended after {} bits without a codeword",
                        bits.len()
                    )));
                };
                code = (code << 1) | u64::from(bit);
            }
            let n = self.count[len];
            if n > 0 && code >= self.first_code[len] && code - self.first_code[len] < n {
                let idx = self.offset[len] + (code - self.first_code[len]) as usize;
                return Ok((self.canonical[idx] as usize, len));
            }
        }
        Err(Error::Framing(format!(
            "no codeword matches the first {} bits",
            self.total_budget
        )))
    }

    /// Decodes the block at the front of a stream; returns it together with
    /// the number of bits consumed.
    pub fn decode_stream(&self, bits: &[bool]) -> Result<(Vec<u32>, usize)> {
        let (rank, used) = self.decode_rank(bits)?;
        let block = self
            .indices_of_rank(rank)
            .into_iter()
            .map(|i| self.alphabet[i])
            .collect();
        Ok((block, used))
    }

    /// Exact Kraft sum `sum 2^-len` over all codewords.
    pub fn kraft_sum(&self) -> BigRational {
        let denom = BigUint::one() << self.total_budget;
        let numer: BigUint = self
            .words
            .iter()
            .map(|w| BigUint::one() << (self.total_budget - w.len))
            .sum();
        BigRational::new(numer.into(), denom.into())
    }

    /// Writes `block;codeword` rows in block rank order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
        wtr.write_record(["block", "codeword"])?;
        for rank in 0..self.block_count() {
            let block = self
                .indices_of_rank(rank)
                .iter()
                .map(|&i| self.alphabet[i].to_string())
                .collect::<Vec<_>>()
                .join(",");
            wtr.write_record([block, self.words[rank].to_bits().to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn checked_pow(base: u64, exp: usize) -> Option<u64> {
    let mut acc = 1u64;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > MAX_BLOCKS && base > 1 {
            return None;
        }
    }
    Some(acc)
}

/// Advances a little-endian-from-the-right mixed counter in place.
pub(crate) fn increment(digits: &mut [usize], radix: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return;
        }
        *d = 0;
    }
}
