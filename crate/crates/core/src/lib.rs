//! Stochastic simulation of microbial energy harvesting, electron transport
//! and quorum sensing as continuous-time Markov jump processes.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments
)]

pub mod cable;
pub mod capacity;
pub mod cli;
pub mod config;
pub mod electron;
pub mod engine;
pub mod manifest;
pub mod optim;
pub mod profile;
pub mod quorum;
pub mod rng;
