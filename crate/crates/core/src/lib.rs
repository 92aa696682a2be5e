//! XML compression benchmarking workbench.

pub mod cli;
pub mod codec;
pub mod entropy;
pub mod harness;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod transforms;
pub mod xml;
