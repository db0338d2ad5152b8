//! Persistent data types and their file formats.
//!
//! Item banks are JSON; every matrix-like artifact is a long-format CSV so
//! files can be streamed, diffed, and produced by external tools. Floats are
//! written with Rust's shortest round-trip formatting.

mod config;
pub(crate) mod csvio;
mod item;
mod matrix;
mod params;

pub use config::EngineConfig;
pub use item::{read_item_bank, write_item_bank, Item, ItemBank};
pub use matrix::{
    read_option_prob_matrix, read_response_matrix, read_retention, write_option_prob_matrix, write_response_matrix,
    write_retention, OptionProbMatrix, ResponseMatrix, PROB_SUM_TOL,
};
pub use params::{
    read_abilities, read_group, read_params, write_abilities, write_group, write_params, AbilityEstimate, GroupDist,
    ItemParams2PL,
};
