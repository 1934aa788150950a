//! Configuration-driven runner for the stochlab experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod expr;
pub mod model;
pub mod output;
pub mod plot;
