use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use symfun::prefixcode::Codeword;
use symfun::{BitString, Codebook};

fn bits(w: Codeword) -> Vec<bool> {
    w.to_bits().as_slice().to_vec()
}

/// No codeword is a proper prefix of another (or equal to another).
fn prefix_free(words: &[Vec<bool>]) -> bool {
    let set: HashSet<&[bool]> = words.iter().map(Vec::as_slice).collect();
    if set.len() != words.len() {
        return false;
    }
    words.iter().all(|w| (0..w.len()).all(|p| !set.contains(&w[..p])))
}

fn check_codebook(cb: &Codebook) {
    let words: Vec<Vec<bool>> = (0..cb.block_count()).map(|r| bits(cb.word(r))).collect();
    assert!(prefix_free(&words));
    assert!(cb.kraft_sum() <= BigRational::one());
    let widths = cb.reply_widths();
    for (rank, word) in words.iter().enumerate() {
        let idx = cb.indices_of_rank(rank);
        let reply: u32 = idx.iter().map(|&i| widths[i]).sum();
        assert_eq!(cb.word(rank).len + reply, cb.total_budget());
        let block: Vec<u32> = idx.iter().map(|&i| cb.alphabet()[i]).collect();
        let enc = cb.encode(&block).unwrap();
        assert_eq!(enc.as_slice(), &word[..]);
        let (dec, used) = cb.decode_stream(enc.as_slice()).unwrap();
        assert_eq!((dec, used), (block, enc.len()));
    }
}

#[test]
fn whole_family() {
    for k in 1..=5usize {
        for r in 0..=k {
            for b in 1..=6usize {
                check_codebook(&Codebook::build(k, r, b).unwrap());
            }
        }
    }
}

proptest! {
    #[test]
    fn mixed_widths(widths in prop::collection::vec(0u32..3, 1..5), b in 1usize..4) {
        let alphabet: Vec<u32> = (0..widths.len() as u32).map(|x| 3 * x + 1).collect();
        check_codebook(&Codebook::with_reply_widths(alphabet, widths, b).unwrap());
    }

    #[test]
    fn concatenated_stream_decodes(k in 1usize..6, r in 0usize..6, b in 1usize..4,
                                   seq in prop::collection::vec(any::<u32>(), 1..6)) {
        let r = r.min(k);
        let cb = Codebook::build(k, r, b).unwrap();
        let blocks: Vec<Vec<u32>> = seq
            .iter()
            .map(|&s| cb.indices_of_rank(s as usize % cb.block_count()).into_iter().map(|i| i as u32).collect())
            .collect();
        let mut stream = BitString::new();
        for blk in &blocks {
            for &bit in cb.encode(blk).unwrap().as_slice() {
                stream.push(bit);
            }
        }
        let mut pos = 0;
        for blk in &blocks {
            let (dec, used) = cb.decode_stream(&stream.as_slice()[pos..]).unwrap();
            prop_assert_eq!(&dec, blk);
            pos += used;
        }
        prop_assert_eq!(pos, stream.len());
    }

    #[test]
    fn kraft_is_tight_exactly_for_powers_of_two(k in 1usize..6, r in 0usize..6, b in 1usize..5) {
        let r = r.min(k);
        let cb = Codebook::build(k, r, b).unwrap();
        prop_assert_eq!(cb.kraft_sum() == BigRational::one(), (k + r).is_power_of_two());
    }
}
