//! Pauli strings and sparse operator sums.

pub mod dense;
mod io;
mod operator;
mod string;

pub use dense::{to_dense, DENSE_MAX_SITES};
pub use io::{read_operator, write_operator};
pub use operator::{commutator, inner_product, trace_inner_product, Layout, OperatorMap, TruncationPolicy};
pub(crate) use operator::reduced_span_limit;
pub use string::{Pauli, PauliString, Phase, MAX_SITES};
