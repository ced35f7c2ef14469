//! Class cover catch digraphs (CCCDs) on the real line.
//!
//! Given a target sample `xs` and an anchor sample `ys`, every `x` gets the open
//! ball centred at `x` whose radius is the distance to the nearest anchor. The
//! digraph has an arc `x -> x'` whenever `x'` falls inside the ball of `x`. This
//! crate computes the domination number of that digraph and the distribution of
//! the domination number under random data:
//!
//! * [`density`]: the density families used throughout, with cdf, quantile and
//!   one-sided derivatives.
//! * [`digraph`]: instance construction and domination numbers (fast and brute force).
//! * [`exact`]: `p_n(F) = P(gamma = 2)` by closed form, exact series, quadrature
//!   or simulation.
//! * [`asymptotics`]: the large-`n` limit of `p_n(F)`.
//! * [`multi`]: the law of the domination number with several anchors.
//! * [`montecarlo`]: the seeded simulation harness.

pub mod asymptotics;
pub mod cli;
pub mod compositions;
pub mod density;
pub mod digraph;
mod error;
pub mod exact;
pub mod montecarlo;
pub mod multi;
pub mod parallel;
pub mod quadrature;

pub use error::{CccdError, Result};
