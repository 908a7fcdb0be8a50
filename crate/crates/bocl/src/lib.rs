//! Simulator, dataset formats, batch pipeline and plotting built on
//! `bocl-core`.

pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod pipeline;
pub mod simulator;
pub mod svg;
