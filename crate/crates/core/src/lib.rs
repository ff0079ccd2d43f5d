//! Restart-free gradient sliding methods for composite strongly convex
//! problems and smoothed bilinear saddle-point problems.
//!
//! * [`sgs`]: sliding for `min_X f + h + χ` with a stochastic subgradient
//!   oracle for `h` and strongly convex `χ`.
//! * [`asgs`]: accelerated sliding for `min_X f + h_η`, where `h_η` is the
//!   Nesterov smoothing of a max-form term (see [`smoothing`]).
//!
//! Oracle calls are counted exactly; see [`oracles`].

// NaN must fail parameter checks, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asgs;
pub mod bregman;
pub mod error;
pub mod harness;
pub mod oracles;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod reference;
pub mod sgs;
pub mod smoothing;
pub mod trace;

pub use asgs::{derive_asgs_params, run_rf_asgs, solve_spp, AsgsOptions, OuterWeight, RfAsgsParams, SppOptions};
pub use bregman::{bregman_distance, euclidean_generator, DistanceGenerator, Euclidean, Vector};
pub use error::{Error, Result};
pub use oracles::{make_noisy, SimpleTerm, SmoothOracle, SubgradientOracle};
pub use problem::ProblemSpec;
pub use prox::{box_clip, simplex_project, sliding_prox, FeasibleSet};
pub use reference::{brute_force_simplex_qp, solve_reference, RefOptions, RefSolution};
pub use sgs::{compute_bound_n, derive_sgs_params, run_rf_sgs, RfSgsParams, RunOptions, ScheduleWeights};
pub use smoothing::{choose_eta, smooth, SaddleSpec, SmoothedOracle};
pub use trace::{RunTrace, TraceRecord};
