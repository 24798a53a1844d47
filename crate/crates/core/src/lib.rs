//! Testbed for comparing evidential-reasoning calculi on simulated
//! network-usage data.
//!
//! The pipeline: snapshots of ground atoms ([`prop`]) are summarized into
//! sample statements over reference classes ([`refclass`]), turned into
//! beliefs by the calculi ([`calculi`], built on [`intervals`]), and scored
//! by betting on lotteries ([`betting`]).

pub mod betting;
pub mod calculi;
pub mod data;
pub mod harness;
pub mod intervals;
pub mod prop;
pub mod refclass;
pub mod session;
