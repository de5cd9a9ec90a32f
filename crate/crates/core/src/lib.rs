//! Log-optimal (Kelly) staking for independent multi-outcome events.
//!
//! The crate solves three related problems over a set of independent
//! events, each with bettor probabilities `p_i` and state prices `π_i`:
//!
//! * the exact single-event Kelly optimum in implicit-cash form
//!   ([`single::solve_single_event`]),
//! * the exact optimal book over the full parlay ticket menu, obtained as
//!   the outer product of the one-event strategies
//!   ([`book::build_optimal_book`]), and
//! * the singles-only restriction, solved numerically
//!   ([`singles::optimize_singles`]), together with the low-edge
//!   perturbation machinery that quantifies what forbidding parlays costs
//!   ([`asymptotics`]).
//!
//! Everything is deterministic: expectations are computed by exhaustive
//! enumeration of the joint outcome space (never sampling), solvers are
//! single-threaded fixed-order iterations, and rendering is byte-stable.

pub mod asymptotics;
pub mod book;
pub mod cli;
pub mod error;
pub mod io;
pub mod joint;
pub mod market;
pub mod single;
pub mod singles;

pub use error::{Error, Result};
pub use market::{price_from_odds, Event, MarketSet};

/// Hard limits on exhaustive enumeration.
///
/// Exact expectations enumerate the full joint outcome space and the full
/// ticket menu; these caps keep that tractable and turn runaway inputs
/// into errors instead of hangs.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Maximum number of tickets `∏(n_ℓ + 1)` that may be enumerated.
    pub max_tickets: usize,
    /// Maximum number of joint outcome states `∏ n_ℓ`.
    pub max_states: usize,
    /// Maximum ticket count accepted by the generic ticket-space oracle.
    pub max_oracle_tickets: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_tickets: 1_000_000,
            max_states: 100_000,
            max_oracle_tickets: 5_000,
        }
    }
}
