//! Interleaved reasoner/reader orchestration for chart question answering.

pub mod cli;
pub mod controller;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod protocol;
pub mod symbolic;
