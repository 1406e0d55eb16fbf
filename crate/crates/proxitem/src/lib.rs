//! Accelerated proximal gradient methods for composite strongly convex
//! minimization, together with a certificate engine that re-evaluates the
//! convergence analysis (interpolation residuals, Lyapunov functions, slack
//! identities, distance bounds) on recorded solver traces.
//!
//! The problem class is `minimize f(x) + g(x)` over real vectors, where `f`
//! is mu-strongly convex and L-smooth (accessed through value/gradient
//! oracles) and `g` is convex, proper, and lower semicontinuous (accessed
//! through its proximal operator).
//!
//! Crate layout:
//!
//! - [`problem`]: oracles, built-in instance families, reference solutions
//! - [`schedule`]: the scalar coefficient recursion driving the accelerated
//!   method, its sign facts and stationary limits
//! - [`solvers`]: the two accelerated methods plus proximal-gradient and
//!   FISTA baselines, recording full iterate traces
//! - [`certificates`]: per-iteration certificate evaluation over traces
//! - [`bench`]: config-driven runs, trace/report files, audit of traces
//!
//! The `examples/` directory contains one runnable example per capability;
//! the `proxitem` binary exposes the same machinery as `run`, `schedule`,
//! and `audit` subcommands.

pub mod bench;
pub mod certificates;
mod error;
pub mod problem;
pub mod schedule;
pub mod solvers;
mod vector;

pub use error::Error;
pub use vector::Vector;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
