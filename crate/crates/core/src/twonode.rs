//! Single-round two-node block protocols: the starting node sends a prefix
//! codeword of its separated block, the partner answers with the function
//! value of every instance the codeword left ambiguous.
//!
//! With a sum-threshold function the separated alphabet is exactly the
//! effective alphabet of the optimal schemes (for either starter), so the
//! worst case meets the fooling-set bound to within the ceiling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funckernel::{separate, FunctionSpec, SeparationPartition};
use crate::prefixcode::{BitString, Codebook};
use crate::space::{AssignmentSpace, EXHAUSTIVE_GUARD};

/// Node identifier as it appears in transcripts.
pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Codeword towards the responder (child to parent on trees).
    Forward,
    /// Function bits back to the starter (parent to child on trees).
    Reply,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub from: NodeId,
    pub to: NodeId,
    pub phase: Phase,
    pub bits: BitString,
}

/// Messages in the order they were sent. Empty messages are not recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub events: Vec<Event>,
}

impl Transcript {
    pub(crate) fn send(&mut self, from: NodeId, to: NodeId, phase: Phase, bits: BitString) {
        if !bits.is_empty() {
            self.events.push(Event { from, to, phase, bits });
        }
    }

    pub fn total_bits(&self) -> u64 {
        self.events.iter().map(|e| e.bits.len() as u64).sum()
    }

    /// Bits sent from `from` to `to`.
    pub fn bits_between(&self, from: NodeId, to: NodeId) -> u64 {
        self.events
            .iter()
            .filter(|e| e.from == from && e.to == to)
            .map(|e| e.bits.len() as u64)
            .sum()
    }

    /// Bits exchanged in both directions on the link `{u, v}`.
    pub fn bits_on_link(&self, u: NodeId, v: NodeId) -> u64 {
        self.bits_between(u, v) + self.bits_between(v, u)
    }

    /// The message sent on `from -> to` in the given phase, if any.
    pub fn message(&self, from: NodeId, to: NodeId, phase: Phase) -> Option<&BitString> {
        self.events
            .iter()
            .find(|e| e.from == from && e.to == to && e.phase == phase)
            .map(|e| &e.bits)
    }
}

/// Separation plus codebook for one link: the starting side holds a letter
/// in `0..=starter_max`, the responding side one in `0..=other_max`.
#[derive(Clone, Debug)]
pub struct LinkScheme {
    spec: FunctionSpec,
    partition: SeparationPartition,
    codebook: Codebook,
}

impl LinkScheme {
    pub fn new(spec: &FunctionSpec, starter_max: u32, other_max: u32, block_length: usize) -> Result<Self> {
        let partition = separate(spec, starter_max, other_max)?;
        let letters = (0..partition.len() as u32).collect();
        let codebook = Codebook::with_reply_widths(letters, partition.reply_widths(), block_length)?;
        Ok(LinkScheme {
            spec: spec.clone(),
            partition,
            codebook,
        })
    }

    pub fn partition(&self) -> &SeparationPartition {
        &self.partition
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// Bits every block costs on this link, codeword plus replies.
    pub fn block_cost(&self) -> u32 {
        self.codebook.total_budget()
    }

    /// Class index of a starter letter.
    pub fn class_of(&self, letter: u32) -> Result<usize> {
        self.partition
            .class_of(letter)
            .ok_or_else(|| Error::domain(format!("letter {letter} outside the starter alphabet")))
    }

    pub fn representative(&self, class: usize) -> u32 {
        self.partition.representative(class)
    }

    pub fn encode_classes(&self, classes: &[usize]) -> BitString {
        self.codebook.word(self.codebook.rank_of_indices(classes)).to_bits()
    }

    /// Decodes a whole forward message; trailing bits are a framing error.
    pub fn decode_classes(&self, bits: &BitString) -> Result<Vec<usize>> {
        let (rank, used) = self.codebook.decode_rank(bits.as_slice())?;
        if used != bits.len() {
            return Err(Error::Framing(format!(
                "{} trailing bits after codeword",
                bits.len() - used
            )));
        }
        Ok(self.codebook.indices_of_rank(rank))
    }

    /// Function values of the instances whose class is ambiguous, each as
    /// its index among the values the class row can take.
    pub fn encode_reply(&self, classes: &[usize], values: &[u32]) -> Result<BitString> {
        let mut out = BitString::new();
        for (&c, &v) in classes.iter().zip(values) {
            let width = self.partition.reply_width(c);
            if width == 0 {
                continue;
            }
            let idx = self
                .partition
                .outputs(c)
                .iter()
                .position(|&o| o == v)
                .ok_or_else(|| Error::Protocol(format!("value {v} impossible for class {c}")))?;
            out.push_uint(idx as u64, width);
        }
        Ok(out)
    }

    /// Recovers the function block on the starting side from its classes
    /// and the reply bits.
    pub fn decode_reply(&self, classes: &[usize], bits: &BitString) -> Result<Vec<u32>> {
        let mut pos = 0;
        let raw = bits.as_slice();
        let mut out = Vec::with_capacity(classes.len());
        for &c in classes {
            let outputs = self.partition.outputs(c);
            let width = self.partition.reply_width(c) as usize;
            let idx = if width == 0 {
                0
            } else {
                let chunk = raw
                    .get(pos..pos + width)
                    .ok_or_else(|| Error::Framing("reply ended early".into()))?;
                pos += width;
                chunk.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
            };
            out.push(
                *outputs
                    .get(idx)
                    .ok_or_else(|| Error::Framing(format!("reply index {idx} out of range")))?,
            );
        }
        if pos != raw.len() {
            return Err(Error::Framing(format!("{} trailing reply bits", raw.len() - pos)));
        }
        Ok(out)
    }

    /// Function value for a starter class and the responder's letter.
    pub fn evaluate(&self, class: usize, responder_letter: u32) -> Result<u32> {
        self.spec.eval(self.representative(class) + responder_letter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Starter {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Starter {
    pub fn node(self) -> NodeId {
        match self {
            Starter::One => 1,
            Starter::Two => 2,
        }
    }

    pub fn other(self) -> Starter {
        match self {
            Starter::One => Starter::Two,
            Starter::Two => Starter::One,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoNodeInstance {
    pub m1: u32,
    pub m2: u32,
    pub spec: FunctionSpec,
    pub block_length: usize,
    pub starter: Starter,
}

impl TwoNodeInstance {
    pub fn new(m1: u32, m2: u32, spec: FunctionSpec, block_length: usize, starter: Starter) -> Self {
        TwoNodeInstance {
            m1,
            m2,
            spec,
            block_length,
            starter,
        }
    }

    fn max_of(&self, who: Starter) -> u32 {
        match who {
            Starter::One => self.m1,
            Starter::Two => self.m2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoNodeRun {
    pub transcript: Transcript,
    pub decoded_1: Vec<u32>,
    pub decoded_2: Vec<u32>,
}

/// A prepared two-node protocol; building it once amortizes the codebook
/// over many runs.
#[derive(Clone, Debug)]
pub struct TwoNodeProtocol {
    inst: TwoNodeInstance,
    link: LinkScheme,
}

impl TwoNodeProtocol {
    pub fn new(inst: TwoNodeInstance) -> Result<Self> {
        if inst.block_length == 0 {
            return Err(Error::domain("block length must be at least 1"));
        }
        let link = LinkScheme::new(
            &inst.spec,
            inst.max_of(inst.starter),
            inst.max_of(inst.starter.other()),
            inst.block_length,
        )?;
        Ok(TwoNodeProtocol { inst, link })
    }

    pub fn instance(&self) -> &TwoNodeInstance {
        &self.inst
    }

    pub fn link(&self) -> &LinkScheme {
        &self.link
    }

    fn check_block(&self, block: &[u32], max: u32, node: NodeId) -> Result<()> {
        if block.len() != self.inst.block_length {
            return Err(Error::domain(format!(
                "node {node} block has length {}, expected {}",
                block.len(),
                self.inst.block_length
            )));
        }
        if let Some(&x) = block.iter().find(|&&x| x > max) {
            return Err(Error::domain(format!("node {node} letter {x} exceeds {max}")));
        }
        Ok(())
    }

    fn split<'a>(&self, x1: &'a [u32], x2: &'a [u32]) -> (&'a [u32], &'a [u32]) {
        match self.inst.starter {
            Starter::One => (x1, x2),
            Starter::Two => (x2, x1),
        }
    }

    pub fn run(&self, x1: &[u32], x2: &[u32]) -> Result<TwoNodeRun> {
        self.check_block(x1, self.inst.m1, 1)?;
        self.check_block(x2, self.inst.m2, 2)?;
        let starter = self.inst.starter.node();
        let responder = self.inst.starter.other().node();
        let (xs, xr) = self.split(x1, x2);
        let mut transcript = Transcript::default();

        // starter: codeword of its separated block
        let classes = xs.iter().map(|&x| self.link.class_of(x)).collect::<Result<Vec<_>>>()?;
        let forward = self.link.encode_classes(&classes);
        transcript.send(starter, responder, Phase::Forward, forward.clone());

        // responder: decode, evaluate, answer the ambiguous instances
        let heard = self.link.decode_classes(&forward)?;
        let at_responder = heard
            .iter()
            .zip(xr)
            .map(|(&c, &y)| self.link.evaluate(c, y))
            .collect::<Result<Vec<_>>>()?;
        let reply = self.link.encode_reply(&heard, &at_responder)?;
        transcript.send(responder, starter, Phase::Reply, reply.clone());

        let at_starter = self.link.decode_reply(&classes, &reply)?;
        let (decoded_1, decoded_2) = match self.inst.starter {
            Starter::One => (at_starter, at_responder),
            Starter::Two => (at_responder, at_starter),
        };
        Ok(TwoNodeRun {
            transcript,
            decoded_1,
            decoded_2,
        })
    }

    /// Re-derives every message of `transcript` from the sender's own block
    /// and the messages it had received when sending. Returns false if any
    /// recorded message differs from what the sender could have produced.
    pub fn replay(&self, x1: &[u32], x2: &[u32], transcript: &Transcript) -> Result<bool> {
        let starter = self.inst.starter.node();
        let responder = self.inst.starter.other().node();
        let (xs, xr) = self.split(x1, x2);
        let empty = BitString::new();

        let order_ok = transcript.events.iter().enumerate().all(|(i, e)| match e.phase {
            Phase::Forward => i == 0 && e.from == starter && e.to == responder,
            Phase::Reply => e.from == responder && e.to == starter,
        }) && transcript.events.len() <= 2;
        if !order_ok {
            return Ok(false);
        }

        let forward = transcript.message(starter, responder, Phase::Forward).unwrap_or(&empty);
        let classes = xs.iter().map(|&x| self.link.class_of(x)).collect::<Result<Vec<_>>>()?;
        if *forward != self.link.encode_classes(&classes) {
            return Ok(false);
        }
        let Ok(heard) = self.link.decode_classes(forward) else {
            return Ok(false);
        };
        let values = heard
            .iter()
            .zip(xr)
            .map(|(&c, &y)| self.link.evaluate(c, y))
            .collect::<Result<Vec<_>>>()?;
        let reply = transcript.message(responder, starter, Phase::Reply).unwrap_or(&empty);
        Ok(*reply == self.link.encode_reply(&heard, &values)?)
    }

    /// True function block by direct evaluation.
    pub fn truth(&self, x1: &[u32], x2: &[u32]) -> Result<Vec<u32>> {
        x1.iter().zip(x2).map(|(&a, &b)| self.inst.spec.eval(a + b)).collect()
    }

    pub fn input_space(&self, guard: u64) -> Result<AssignmentSpace> {
        AssignmentSpace::new(vec![self.inst.m1 + 1, self.inst.m2 + 1], self.inst.block_length, guard)
    }
}

/// Runs the single-round scheme on one pair of blocks.
pub fn run_two_node(inst: &TwoNodeInstance, x1: &[u32], x2: &[u32]) -> Result<TwoNodeRun> {
    TwoNodeProtocol::new(inst.clone())?.run(x1, x2)
}

/// Same as [`run_two_node`], restricted to sum-interval functions.
pub fn run_interval(inst: &TwoNodeInstance, x1: &[u32], x2: &[u32]) -> Result<TwoNodeRun> {
    if !matches!(inst.spec, FunctionSpec::Interval { .. }) {
        return Err(Error::domain("run_interval needs a sum-interval function"));
    }
    run_two_node(inst, x1, x2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorstCase {
    pub bits: u64,
    pub argmax: (Vec<u32>, Vec<u32>),
}

/// Maximum transcript length over every input pair, with the
/// lexicographically first pair attaining it. Fails if any run decodes a
/// wrong function value.
pub fn worst_case_bits(inst: &TwoNodeInstance) -> Result<WorstCase> {
    let proto = TwoNodeProtocol::new(inst.clone())?;
    let space = proto.input_space(EXHAUSTIVE_GUARD)?;
    let best = (0..space.size())
        .into_par_iter()
        .map(|idx| -> Result<(u64, u64)> {
            let a = space.assignment(idx);
            let run = proto.run(&a[0], &a[1])?;
            let truth = proto.truth(&a[0], &a[1])?;
            if run.decoded_1 != truth || run.decoded_2 != truth {
                return Err(Error::Protocol(format!("decode error on input {a:?}")));
            }
            Ok((run.transcript.total_bits(), idx))
        })
        .try_reduce(|| (0, u64::MAX), |x, y| Ok(pick_worst(x, y)))?;
    let a = space.assignment(if best.1 == u64::MAX { 0 } else { best.1 });
    Ok(WorstCase {
        bits: best.0,
        argmax: (a[0].clone(), a[1].clone()),
    })
}

/// Larger bit count wins; ties go to the smaller input index.
pub(crate) fn pick_worst(x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
    if x.0 > y.0 || (x.0 == y.0 && x.1 <= y.1) {
        x
    } else {
        y
    }
}
