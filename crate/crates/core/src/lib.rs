//! Dataset and retrieval pipeline for LLM Verilog generation: corpus ingestion,
//! code scoring, synthetic data, retrieval and evaluation.

pub mod config;
pub mod corpus;
pub mod embedding;
pub mod evalkit;
pub mod gateway;
pub mod judge;
pub mod linalg;
pub mod manifest;
pub mod pipeline;
pub mod rag;
pub mod reference;
pub mod scorer;
pub mod synth;
pub mod util;
pub mod verilog;
