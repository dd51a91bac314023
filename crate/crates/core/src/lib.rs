//! Inference of product-level supply-chain "recipes" from firm-to-firm
//! transaction data, and analysis of the resulting directed product network.
//!
//! The pipeline: ingest raw firm/transaction files (ownership resolution,
//! owner-country aggregation, wholesaler filtering), compute the
//! excess-purchase ratio for every product pair, materialize the directed
//! weighted network, then analyze it (centrality and hub scores, multi-scale
//! community detection, subgraph significance testing, cross-network
//! comparison) and use it to predict country-product export diversification.
//! A synthetic world generator with planted recipes provides ground truth for
//! end-to-end validation.

#![forbid(unsafe_code)]

pub mod centrality;
pub mod communities;
pub mod compare;
pub mod diversification;
pub mod error;
pub mod hs;
pub mod ingest;
pub mod network;
pub mod pipeline;
pub mod probit;
pub mod recipe;
pub mod significance;
pub mod stats;
pub mod synth;
pub mod trade;

pub use error::{Error, Result};
