//! Zero-error block computation of sum-dependent functions.
//!
//! Two nodes, trees and general graphs each hold integer measurements and
//! every node must learn `f(X_1 + ... + X_n)` for a whole block of
//! instances. The crate builds the separation-plus-prefix-coding protocols,
//! simulates them bit by bit, and compares measured worst-case traffic with
//! the fooling-set and cut-set bounds.
//!
//! Real-valued quantities are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix them to `f64` for everyday use.

pub mod bounds;
pub mod error;
pub mod funckernel;
pub mod graphnet;
pub mod harness;
pub mod network;
pub mod prefixcode;
pub mod real;
pub mod space;
pub mod treenet;
pub mod twonode;

pub use error::{Error, Result};
pub use funckernel::{separate, FunctionSpec, SeparationPartition};
pub use graphnet::SizeConvention;
pub use harness::Scenario;
pub use network::{Graph, NetworkFile};
pub use prefixcode::{BitString, Codebook};
pub use real::Real;
pub use treenet::TreeNetwork;
pub use twonode::{Phase, Starter, Transcript, TwoNodeInstance};

pub type BoundReport = bounds::BoundReport<f64>;
pub type BoundReportF32 = bounds::BoundReport<f32>;
pub type EdgeAccount = treenet::EdgeAccount<f64>;
pub type RateVector = graphnet::RateVector<f64>;
pub type TwoOptReport = graphnet::TwoOptReport<f64>;
pub type TwoOptReportF32 = graphnet::TwoOptReport<f32>;
pub type VerificationReport = harness::VerificationReport<f64>;
