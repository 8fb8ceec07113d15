//! Krylov-chain dynamics of Pauli-string operators on spin rings, with
//! open-boundary truncation of the chain.

pub mod cli;
pub mod config;
pub mod error;
pub mod ideal;
pub mod lanczos;
pub mod models;
pub mod open_chain;
pub mod pauli;
pub mod quench;

pub use error::{Error, Result};
