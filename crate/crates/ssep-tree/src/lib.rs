//! Event-driven simulator and verification suite for the symmetric simple
//! exclusion process (SSEP) on regular trees.
//!
//! The exclusion dynamics on the (d+1)-regular tree is realized through its
//! graphical construction: independent rate-1 Poisson clocks on the edges,
//! each ring exchanging the endpoint values. One realized clock record drives
//! the forward configuration dynamics, the backward dual walks, and the
//! stirring process, so forward/backward identities hold pathwise and are
//! testable bit for bit.
//!
//! On top of the engine sit the additive functional of a local observable,
//! its resolvent (computed both by exact linear solve and by unbiased Monte
//! Carlo), the martingale decomposition of the additive functional with its
//! quadratic variation and Feynman–Kac exponential-martingale check, and
//! estimators for the long-run variance, central-limit behavior, and
//! moderate-deviation tail rates. Each estimator is paired with an
//! independent exact oracle on small instances.
//!
//! Entry points:
//! * the library modules below (the `examples/` directory shows one runnable
//!   program per capability);
//! * the thin `ssep` binary for config-driven batch runs
//!   (`ssep <subcommand> <config>`).

// Guards are written `!(x > 0.0)` on purpose: the negation also rejects NaN,
// which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod decomp;
pub mod engine;
pub mod error;
pub mod observable;
pub mod oracle;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod stirring;
pub mod tree;

pub use engine::{evolve, sample_events, sample_nu_p, Configuration, DualTracer, EventLog};
pub use error::{Error, Result};
pub use observable::{LocalFunction, XiRecord};
pub use rng::RngStream;
pub use tree::{build_ball, distance, neighbors, truncation_radius, Ball, VertexAddr};
