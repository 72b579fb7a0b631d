//! Closed-loop, language-model-driven control of simulated desk robots.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control_loop;
pub mod controller;
pub mod exec;
pub mod frame;
pub mod geometry;
pub mod harness;
pub mod hash;
pub mod preprocess;
pub mod robot;
pub mod scene;
