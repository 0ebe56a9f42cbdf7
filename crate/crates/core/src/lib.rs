//! Bidding-strategy solvers for sequential first-price sealed-bid auctions.
//!
//! An agent faces `n` single-item auctions run in a known order, holds a
//! private valuation over item subsets, and models the highest opposing bid
//! of each auction as an independent discrete distribution (ties go to the
//! agent). This crate computes:
//!
//! - the optimal unconstrained strategy over subset states, with payments
//!   treated as transition costs ([`solve_quasilinear`]);
//! - the optimal strategy over (subset, remaining money) states for additive
//!   utility `v(set) + f(money)`, which also makes a hard budget exact
//!   ([`solve_additive`]);
//! - a fast budget-feasible strategy that prorates the budget over the
//!   unconstrained bids and re-optimizes under the resulting caps
//!   ([`solve_prorated`]), plus the trivial truncate-to-budget baseline
//!   ([`trivial_policy`]);
//! - ground-truth evaluation: exact expected utility by path enumeration,
//!   seeded Monte Carlo simulation, and brute-force policy search on tiny
//!   instances ([`eval`]).
//!
//! All utility arithmetic is generic over the scalar type via [`Scalar`];
//! the `*64` aliases below fix it to `f64`, which is what the command-line
//! tool and the test suite use. Money stays integral throughout.

pub mod additive;
pub mod budget;
mod error;
pub mod eval;
pub mod model;
pub mod money;
pub mod quasilinear;
pub mod schema;
pub mod scalar;

pub use additive::{
    additive_state_count, solve_additive, solve_additive_with_cap, AStrategy, AdditiveBidCap,
    AdditivePolicy,
};
pub use budget::{prepayment, solve_prorated, trivial_policy, ProratedStrategy, TrivialPolicy};
pub use error::Error;
pub use eval::{
    brute_force_optimal, exact_eval, monte_carlo, EvalReport, ExecutionPolicy, FixedBidPolicy,
    McReport, UtilityMode,
};
pub use model::{
    ItemSet, MoneyUtility, OpponentBidModel, ProblemInstance, Valuation, ValuationKind, Violation,
    MAX_ITEMS,
};
pub use money::Money;
pub use quasilinear::{bid_upper_bound, q_value, solve_quasilinear, QState, QStrategy};
pub use scalar::Scalar;

pub type Instance64 = ProblemInstance<f64>;
pub type Instance32 = ProblemInstance<f32>;
pub type QStrategy64 = QStrategy<f64>;
pub type QStrategy32 = QStrategy<f32>;
pub type AStrategy64 = AStrategy<f64>;
pub type AStrategy32 = AStrategy<f32>;
pub type ProratedStrategy64 = ProratedStrategy<f64>;
pub type ProratedStrategy32 = ProratedStrategy<f32>;
pub type EvalReport64 = EvalReport<f64>;
pub type McReport64 = McReport<f64>;
