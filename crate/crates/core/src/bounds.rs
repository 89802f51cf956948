//! Closed-form complexity bounds and the enumeration oracles that check them.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// Which regime of the threshold formula applies, with `m1 <= m2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    /// `theta <= m1 <= m2`: `|Z| = 2 theta + 1`.
    A,
    /// `m1 <= m2 < theta`: `|Z| = 2(n - theta + 1) + 1`.
    B,
    /// `m1 < theta <= m2`: `|Z| = 2 m1 + 2`.
    C,
    /// Sum-interval bounds (no single case formula).
    Interval,
    /// The function does not depend on the inputs.
    Constant,
}

/// Per-instance lower/upper bounds, kept both as the exact integer inside
/// the logarithm and as bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport<F: Real> {
    pub lower_count: u64,
    pub upper_count: u64,
    pub lower: F,
    pub upper: F,
    pub fooling_size: Option<u64>,
    pub case: CaseTag,
    /// False when the parameters fall outside the regime the bound is
    /// stated for (sum-interval with `2b > m1 + m2`).
    pub valid: bool,
}

impl<F: Real> BoundReport<F> {
    fn from_counts(lower_count: u64, upper_count: u64, fooling_size: Option<u64>, case: CaseTag, valid: bool) -> Self {
        BoundReport {
            lower_count,
            upper_count,
            lower: F::log2_count(lower_count),
            upper: F::log2_count(upper_count),
            fooling_size,
            case,
            valid,
        }
    }

    fn constant(fooling_size: Option<u64>) -> Self {
        Self::from_counts(1, 1, fooling_size, CaseTag::Constant, true)
    }

    /// `floor(B log2 lower_count)`, computed exactly.
    pub fn lower_block_bits(&self, block_length: usize) -> u64 {
        floor_block_bits(self.lower_count, block_length)
    }

    /// `ceil(B log2 upper_count)`, computed exactly.
    pub fn upper_block_bits(&self, block_length: usize) -> u64 {
        ceil_block_bits(self.upper_count, block_length)
    }
}

/// `ceil(B * log2(count))` without floating point.
pub fn ceil_block_bits(count: u64, block_length: usize) -> u64 {
    if count <= 1 {
        return 0;
    }
    let p = BigUint::from(count).pow(block_length as u32);
    (p - 1u32).bits()
}

/// `floor(B * log2(count))` without floating point.
pub fn floor_block_bits(count: u64, block_length: usize) -> u64 {
    if count <= 1 {
        return 0;
    }
    BigUint::from(count).pow(block_length as u32).bits() - 1
}

/// Case regime and `|Z|` from the closed-form case formulas.
pub fn threshold_case(theta: u32, m1: u32, m2: u32) -> (CaseTag, u64) {
    let (lo, hi) = (m1.min(m2) as u64, m1.max(m2) as u64);
    let (t, n) = (theta as u64, lo + hi);
    if theta == 0 || t > n {
        (CaseTag::Constant, 1)
    } else if t <= lo {
        (CaseTag::A, 2 * t + 1)
    } else if t <= hi {
        (CaseTag::C, 2 * lo + 2)
    } else {
        (CaseTag::B, 2 * (n - t + 1) + 1)
    }
}

/// `log2 min(2 theta + 1, 2 min(m1,m2) + 2, 2(n - theta + 1) + 1)` with
/// `n = m1 + m2`, reported as 0 when the threshold makes the function
/// constant.
pub fn threshold_complexity<F: Real>(theta: u32, m1: u32, m2: u32) -> BoundReport<F> {
    let (case, z) = threshold_case(theta, m1, m2);
    if case == CaseTag::Constant {
        return BoundReport::constant(Some(fooling_oracle(theta, m1, m2).max(1)));
    }
    let (t, lo, n) = (theta as u64, m1.min(m2) as u64, m1 as u64 + m2 as u64);
    let min_term = (2 * t + 1).min(2 * lo + 2).min(2 * (n - t + 1) + 1);
    debug_assert_eq!(min_term, z);
    BoundReport::from_counts(min_term, min_term, Some(z), case, true)
}

/// Counts pairs `(z1, z2)` in the grid with `theta - 1 <= z1 + z2 <= theta`.
pub fn fooling_oracle(theta: u32, m1: u32, m2: u32) -> u64 {
    let mut count = 0;
    for z1 in 0..=m1 {
        for z2 in 0..=m2 {
            let s = z1 + z2;
            if s <= theta && s + 1 >= theta {
                count += 1;
            }
        }
    }
    count
}

/// Sum over `powers` of the coefficient of `Y^e` in
/// `prod_i (1 + Y + ... + Y^{max_i})`.
pub fn coefficient_oracle(max_values: &[u32], powers: &BTreeSet<u32>) -> u128 {
    let mut poly: Vec<u128> = vec![1];
    for &m in max_values {
        let mut next = vec![0u128; poly.len() + m as usize];
        for (i, &c) in poly.iter().enumerate() {
            for slot in &mut next[i..=i + m as usize] {
                *slot += c;
            }
        }
        poly = next;
    }
    powers.iter().filter_map(|&e| poly.get(e as usize)).sum()
}

/// Exponent set `{theta - 1, theta}` (just `{0}` when `theta = 0`).
pub fn threshold_powers(theta: u32) -> BTreeSet<u32> {
    theta.checked_sub(1).into_iter().chain([theta]).collect()
}

/// Lower bound `log2 min(2b - a + 3, min(m1,m2) + 1)` and upper bound
/// `log2 min(2(b+1) + 1, 2 min(m1,m2) + 2)` for the sum-interval function.
pub fn interval_bounds<F: Real>(a: u32, b: u32, m1: u32, m2: u32) -> Result<BoundReport<F>> {
    if a > b {
        return Err(Error::domain(format!("interval requires a <= b, got [{a}, {b}]")));
    }
    let n = m1 as u64 + m2 as u64;
    let (a, b) = (a as u64, b as u64);
    if a > n || (a == 0 && b >= n) {
        return Ok(BoundReport::constant(None));
    }
    let lo = m1.min(m2) as u64;
    let lower = (2 * b + 3 - a).min(lo + 1);
    let upper = (2 * (b + 1) + 1).min(2 * lo + 2);
    Ok(BoundReport::from_counts(
        lower,
        upper,
        None,
        CaseTag::Interval,
        2 * b <= n,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn threshold_examples() {
        let r = threshold_complexity::<f64>(2, 1, 1);
        assert_eq!(r.fooling_size, Some(3));
        assert_relative_eq!(r.lower, 3f64.log2());
        assert_relative_eq!(r.upper, 3f64.log2());

        let r = threshold_complexity::<f64>(0, 5, 7);
        assert_eq!((r.lower, r.upper, r.case), (0.0, 0.0, CaseTag::Constant));

        let r = threshold_complexity::<f64>(4, 2, 9);
        assert_eq!(r.case, CaseTag::C);
        assert_eq!(r.fooling_size, Some(6));
        assert_eq!(fooling_oracle(4, 2, 9), 6);
    }

    #[test]
    fn fooling_examples() {
        assert_eq!(fooling_oracle(2, 2, 2), 5);
        assert_eq!(fooling_oracle(3, 2, 3), 6);
        assert_eq!(fooling_oracle(5, 3, 3), 5);
        assert_eq!(fooling_oracle(0, 3, 3), 1);
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(coefficient_oracle(&[1, 1], &[1, 2].into()), 3);
        assert_eq!(coefficient_oracle(&[7], &[0].into()), 1);
        assert_eq!(coefficient_oracle(&[2, 3], &[2, 3].into()), 6);
        assert_eq!(coefficient_oracle(&[2, 3], &[40].into()), 0);
    }

    #[test]
    fn interval_examples() {
        let r = interval_bounds::<f64>(2, 3, 4, 5).unwrap();
        assert_eq!((r.lower_count, r.upper_count, r.valid), (5, 9, true));
        let r = interval_bounds::<f64>(0, 9, 4, 5).unwrap();
        assert_eq!((r.lower, r.upper, r.case), (0.0, 0.0, CaseTag::Constant));
        let r = interval_bounds::<f64>(2, 2, 3, 3).unwrap();
        assert_eq!(r.lower, 2.0);
        assert_relative_eq!(r.upper, 7f64.log2());
        assert!(r.valid);
        assert!(!interval_bounds::<f64>(1, 5, 2, 3).unwrap().valid);
        assert!(interval_bounds::<f64>(3, 2, 3, 3).is_err());
    }

    #[test]
    fn exact_block_bits() {
        assert_eq!(ceil_block_bits(3, 8), 13);
        assert_eq!(ceil_block_bits(4, 4), 8);
        assert_eq!(floor_block_bits(4, 4), 8);
        assert_eq!(ceil_block_bits(6, 2), 6);
        assert_eq!(floor_block_bits(5, 2), 4);
        assert_eq!(ceil_block_bits(1, 9), 0);
    }

    #[test]
    fn case_formula_matches_enumeration() {
        for theta in 0..=12 {
            for m1 in 0..=12 {
                for m2 in 0..=12 {
                    let (case, z) = threshold_case(theta, m1, m2);
                    if case != CaseTag::Constant {
                        assert_eq!(fooling_oracle(theta, m1, m2), z, "theta={theta} m1={m1} m2={m2}");
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_and_unimodal() {
        for m1 in 0..=8u32 {
            for m2 in 0..=8u32 {
                let n = m1 + m2;
                let c: Vec<u64> = (0..=n + 1)
                    .map(|t| threshold_complexity::<f64>(t, m1, m2).lower_count)
                    .collect();
                for t in 0..=n + 1 {
                    assert_eq!(
                        threshold_complexity::<f64>(t, m1, m2),
                        threshold_complexity::<f64>(t, m2, m1)
                    );
                }
                for t in 1..=m1.min(m2) as usize {
                    assert!(c[t] >= c[t - 1]);
                }
                for t in (m1.max(m2) as usize + 1)..=(n as usize + 1) {
                    assert!(c[t] <= c[t - 1]);
                }
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        for theta in 1..=6 {
            let d = threshold_complexity::<f64>(theta, 3, 4);
            let s = threshold_complexity::<f32>(theta, 3, 4);
            assert!((d.lower - f64::from(s.lower)).abs() < 1e-6);
        }
    }
}
