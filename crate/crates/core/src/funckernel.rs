//! Sum-dependent target functions and the separation of a node's alphabet
//! into classes of letters that never need to be told apart.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A function of the total sum of all node measurements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawSpec")]
pub enum FunctionSpec {
    /// 1 iff the sum is at least `theta`.
    Threshold { theta: u32 },
    /// 1 iff `a <= sum <= b`.
    Interval { a: u32, b: u32 },
    /// Arbitrary output symbol per achievable sum, indexed by the sum.
    General { table: Vec<u32> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawSpec {
    Threshold { theta: u32 },
    Interval { a: u32, b: u32 },
    General { table: Vec<u32> },
}

impl TryFrom<RawSpec> for FunctionSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> Result<Self, String> {
        match raw {
            RawSpec::Threshold { theta } => Ok(FunctionSpec::Threshold { theta }),
            RawSpec::Interval { a, b } => FunctionSpec::interval(a, b).map_err(|e| e.to_string()),
            RawSpec::General { table } => FunctionSpec::general(table).map_err(|e| e.to_string()),
        }
    }
}

impl FunctionSpec {
    pub fn threshold(theta: u32) -> Self {
        FunctionSpec::Threshold { theta }
    }

    pub fn interval(a: u32, b: u32) -> Result<Self> {
        if a > b {
            return Err(Error::domain(format!("interval requires a <= b, got [{a}, {b}]")));
        }
        Ok(FunctionSpec::Interval { a, b })
    }

    pub fn general(table: Vec<u32>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::domain("general function table is empty"));
        }
        Ok(FunctionSpec::General { table })
    }

    pub fn eval(&self, total_sum: u32) -> Result<u32> {
        match *self {
            FunctionSpec::Threshold { theta } => Ok(u32::from(total_sum >= theta)),
            FunctionSpec::Interval { a, b } => Ok(u32::from(a <= total_sum && total_sum <= b)),
            FunctionSpec::General { ref table } => table.get(total_sum as usize).copied().ok_or_else(|| {
                Error::domain(format!(
                    "sum {total_sum} outside general table of {} entries",
                    table.len()
                ))
            }),
        }
    }

    /// Checks that the function is defined for every sum in `0..=max_sum`.
    pub fn check_domain(&self, max_sum: u32) -> Result<()> {
        match self {
            FunctionSpec::General { table } if (table.len() as u64) <= u64::from(max_sum) => Err(Error::domain(
                format!("general table has {} entries but sums reach {max_sum}", table.len()),
            )),
            _ => Ok(()),
        }
    }

    /// True when the function takes a single value on `0..=max_sum`.
    pub fn is_constant_on(&self, max_sum: u32) -> Result<bool> {
        let first = self.eval(0)?;
        for s in 1..=max_sum {
            if self.eval(s)? != first {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FunctionSpec::Threshold { .. } => "threshold",
            FunctionSpec::Interval { .. } => "interval",
            FunctionSpec::General { .. } => "general",
        }
    }
}

/// Equivalence classes of a node's letters `0..=m` under a sum function,
/// relative to a partner whose letters range over `0..=other_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparationPartition {
    /// Classes ordered by their smallest letter; each class is sorted.
    pub classes: Vec<Vec<u32>>,
    /// Class whose row is identically 0, if any.
    pub a0_class: Option<usize>,
    /// Class whose row is identically 1, if any.
    pub a1_class: Option<usize>,
    #[serde(skip)]
    class_of: Vec<usize>,
    /// Sorted distinct outputs taken by each class row.
    #[serde(skip)]
    outputs: Vec<Vec<u32>>,
}

/// Merges the letters of `0..=own_max` that induce identical function rows
/// over the partner's letters `0..=other_max`.
pub fn separate(spec: &FunctionSpec, own_max: u32, other_max: u32) -> Result<SeparationPartition> {
    spec.check_domain(own_max + other_max)?;

    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut classes: Vec<Vec<u32>> = Vec::new();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut class_of = Vec::with_capacity(own_max as usize + 1);

    for x in 0..=own_max {
        let row = (0..=other_max).map(|y| spec.eval(x + y)).collect::<Result<Vec<_>>>()?;
        let c = *index.entry(row.clone()).or_insert_with(|| {
            classes.push(Vec::new());
            rows.push(row);
            classes.len() - 1
        });
        classes[c].push(x);
        class_of.push(c);
    }

    let outputs: Vec<Vec<u32>> = rows
        .iter()
        .map(|row| {
            let mut vals = row.clone();
            vals.sort_unstable();
            vals.dedup();
            vals
        })
        .collect();
    let constant_class = |v: u32| outputs.iter().position(|o| o.as_slice() == [v]);

    Ok(SeparationPartition {
        a0_class: constant_class(0),
        a1_class: constant_class(1),
        classes,
        class_of,
        outputs,
    })
}

impl SeparationPartition {
    /// Number of effective letters.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, letter: u32) -> Option<usize> {
        self.class_of.get(letter as usize).copied()
    }

    pub fn representative(&self, class: usize) -> u32 {
        self.classes[class][0]
    }

    /// Distinct function values seen along the class row.
    pub fn outputs(&self, class: usize) -> &[u32] {
        &self.outputs[class]
    }

    /// Bits the partner must send back for one instance of this class.
    pub fn reply_width(&self, class: usize) -> u32 {
        ceil_log2(self.outputs[class].len() as u64)
    }

    pub fn is_ambiguous(&self, class: usize) -> bool {
        self.outputs[class].len() > 1
    }

    pub fn reply_widths(&self) -> Vec<u32> {
        (0..self.len()).map(|c| self.reply_width(c)).collect()
    }

    pub fn ambiguous_count(&self) -> usize {
        (0..self.len()).filter(|&c| self.is_ambiguous(c)).count()
    }

    /// Per-instance cost of the separation-and-coding scheme: the number of
    /// (letter, reply) combinations, `2l - |A0| - |A1|` for Boolean outputs.
    pub fn scheme_count(&self) -> u64 {
        (0..self.len()).map(|c| 1u64 << self.reply_width(c)).sum()
    }
}

pub(crate) fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
