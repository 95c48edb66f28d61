//! Randomized explicit and implicit Euler schemes for ODE initial-value
//! problems under inexact (noise-corrupted) right-hand-side information,
//! together with the measurement harness around them: Monte-Carlo L^p
//! sup-norm error estimation, empirical convergence-order fits, a-priori
//! bound validation, the adversarial lower-bound demonstration, and
//! stability-region mapping for the non-autonomous test problem
//! z' = 2 lambda t z.
//!
//! Both schemes evaluate the right-hand side at a uniformly random point
//! inside each step interval; every evaluation may be corrupted by an
//! unknown function bounded by the precision parameter delta. Ensembles are
//! deterministic given a master seed and reproduce bit for bit at any
//! degree of parallelism.
//!
//! ## Examples
//!
//! The `examples/` directory is the front door, one runnable program per
//! capability:
//!
//! ```bash
//! cargo run --release --example closed_form_check   # exact scheme iterates on the linear problem
//! cargo run --release --example convergence_order   # empirical order vs the theoretical rate
//! cargo run --release --example noise_floor         # the delta error floor under corrupted data
//! cargo run --release --example lower_bound_demo    # the adversarial information pair
//! cargo run --release --example validate_bounds     # a-priori bound suite over the fixtures
//! cargo run --release --example stability_map       # stability verdicts and region raster
//! cargo run --release --example seeded_streams      # reproducible parallel draw streams
//! ```
//!
//! The same capabilities are scriptable through the thin `randeuler` binary
//! (`convergence`, `noise-sweep`, `stability`, `validate`,
//! `demo-lower-bound`, `plot` subcommands); see the README.
//!
//! ## Library quick start
//!
//! ```rust
//! use randeuler::analysis::estimate_error;
//! use randeuler::noise::NoiseModel;
//! use randeuler::problem::SchemeTag;
//! use randeuler::problems::holder_time_probe;
//!
//! let p = holder_time_probe(0.5, 1.0, 0.0, 1.0).unwrap();
//! let noise = NoiseModel::zero(0.0, 1).unwrap();
//! let e = estimate_error(&p, &noise, SchemeTag::ExplicitRandEuler, 128, 50, 2.0, 7, 8).unwrap();
//! assert!(e.value > 0.0 && e.value < 0.05);
//! ```

// `!(x > 0.0)`-style guards are deliberate: they reject NaN inputs, which
// `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod noise;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod schemes;
pub mod stability;

pub use error::{Error, Result};
