//! Simulator for a block-building game with underspecified instructions.
//!
//! A builder receives instructions from two speakers. One of them omits a
//! color or a count only when the omission can be recovered from the most
//! recently built stack; the other is reliable only at the literal level.
//! The builder can infer the missing slot, or ask one paid question per
//! trial.

pub mod agents;
pub mod dsl;
pub mod metrics;
pub mod session;
pub mod speakers;
pub mod world;
