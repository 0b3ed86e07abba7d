//! Shared test support for the workspace: reference receipts for the four
//! incident fixtures, brute-force oracle implementations of the detectors
//! for differential testing, and a seeded random trace generator.

pub mod incidents;
pub mod naive;
pub mod synth;
