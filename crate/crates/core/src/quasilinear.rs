//! Backward-induction solver over subset states for quasi-linear utility
//! (valuation of the final set minus total payment). Payments are folded
//! into the stage transition, so remaining money never appears in the state
//! and stage `t` holds exactly `2^t` states.

use crate::error::Error;
use crate::eval::ExecutionPolicy;
use crate::model::{ItemSet, ProblemInstance};
use crate::money::Money;
use crate::scalar::Scalar;

/// Auction stage plus the set of items obtained so far. Valid states only
/// hold items whose auctions have already run (`subset` restricted to bits
/// below `stage`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QState {
    pub stage: usize,
    pub subset: ItemSet,
}

impl QState {
    pub fn new(stage: usize, subset: ItemSet) -> Self {
        Self { stage, subset }
    }
}

/// Optimal unconstrained strategy: one value row per stage `0..=n` and one
/// bid row per stage `0..n`, each indexed directly by subset mask.
#[derive(Clone, Debug, PartialEq)]
pub struct QStrategy<S> {
    values: Vec<Vec<S>>,
    bids: Vec<Vec<Money>>,
}

impl<S: Scalar> QStrategy<S> {
    pub fn item_count(&self) -> usize {
        self.bids.len()
    }

    /// Expected utility of playing optimally from `(stage, subset)` onward.
    pub fn value(&self, stage: usize, subset: ItemSet) -> S {
        self.values[stage][subset as usize]
    }

    /// Optimal bid at `(stage, subset)`; defined for `stage < n`.
    pub fn bid(&self, stage: usize, subset: ItemSet) -> Money {
        self.bids[stage][subset as usize]
    }

    pub fn root_value(&self) -> S {
        self.values[0][0]
    }

    pub fn root_bid(&self) -> Money {
        self.bids[0][0]
    }

    pub fn stage_values(&self, stage: usize) -> &[S] {
        &self.values[stage]
    }

    pub fn stage_bids(&self, stage: usize) -> &[Money] {
        &self.bids[stage]
    }

    /// Number of states across all value tables: `2^(n+1) - 1`.
    pub fn state_count(&self) -> u64 {
        self.values.iter().map(|row| row.len() as u64).sum()
    }
}

impl<S: Scalar> ExecutionPolicy for QStrategy<S> {
    fn bid(&self, stage: usize, subset: ItemSet, _paid: Money) -> Money {
        QStrategy::bid(self, stage, subset)
    }
}

/// One-step lookahead: the expected utility of bidding `z` in `state`, given
/// the value row for stage `state.stage + 1`.
pub fn q_value<S: Scalar>(
    instance: &ProblemInstance<S>,
    next_values: &[S],
    state: QState,
    z: Money,
) -> S {
    let bit = 1u32 << state.stage;
    let win = next_values[(state.subset | bit) as usize];
    let lose = next_values[state.subset as usize];
    let f = instance.models[state.stage].win_probability(z);
    f * (win - z.to_scalar()) + (S::one() - f) * lose
}

/// Largest bid worth considering at `state`: the win/lose value difference of
/// the next stage, floored to the money grid and clamped at zero. Bidding
/// above it is dominated by not bidding.
pub fn bid_upper_bound<S: Scalar>(strategy: &QStrategy<S>, state: QState) -> Money {
    let next = strategy.stage_values(state.stage + 1);
    let bit = 1u32 << state.stage;
    value_gap_floor(
        next[(state.subset | bit) as usize],
        next[state.subset as usize],
    )
}

pub(crate) fn value_gap_floor<S: Scalar>(win: S, lose: S) -> Money {
    let gap = win - lose;
    if gap <= S::zero() {
        Money::ZERO
    } else {
        Money(gap.floor().to_u64().unwrap_or(u64::MAX))
    }
}

/// Terminal value row: the valuation of every subset of all `n` items.
pub(crate) fn terminal_values<S: Scalar>(instance: &ProblemInstance<S>) -> Result<Vec<S>, Error> {
    let n = instance.item_count();
    (0..1u32 << n).map(|mask| instance.valuation.value(mask)).collect()
}

/// Compute the optimal bid and value tables by value iteration from the
/// terminal stage backwards. At every state the searched bids are the integer
/// grid `0..=min(value gap, max support)`; among equal-utility bids the
/// smallest wins, so the output is deterministic.
pub fn solve_quasilinear<S: Scalar>(instance: &ProblemInstance<S>) -> Result<QStrategy<S>, Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let n = instance.item_count();
    let mut values: Vec<Vec<S>> = vec![Vec::new(); n + 1];
    let mut bids: Vec<Vec<Money>> = vec![Vec::new(); n];
    values[n] = terminal_values(instance)?;

    for t in (0..n).rev() {
        let model = &instance.models[t];
        let max_support = model.max_meaningful_bid();
        let next = &values[t + 1];
        let bit = 1u32 << t;

        // Every per-state cap is bounded by the largest value gap at the
        // next stage, so one dense cdf covers the whole stage.
        let widest_gap = widest_value_gap(next);
        let stage_cap = max_support.min(widest_gap);
        let cdf = model.dense_win_probabilities(stage_cap);

        let mut value_row = Vec::with_capacity(1 << t);
        let mut bid_row = Vec::with_capacity(1 << t);
        for mask in 0..1u32 << t {
            let lose = next[mask as usize];
            let win = next[(mask | bit) as usize];
            let cap = value_gap_floor(win, lose).min(max_support);
            let (best_bid, best_value) = best_bid_on_grid(&cdf, win, lose, cap);
            value_row.push(best_value);
            bid_row.push(best_bid);
        }
        values[t] = value_row;
        bids[t] = bid_row;
    }

    Ok(QStrategy { values, bids })
}

/// Smallest maximizer of `F(z) * (win - z) + (1 - F(z)) * lose` over the
/// integer bids `0..=cap`, together with the maximum.
fn best_bid_on_grid<S: Scalar>(cdf: &[S], win: S, lose: S, cap: Money) -> (Money, S) {
    let f0 = cdf[0];
    let mut best_value = f0 * win + (S::one() - f0) * lose;
    let mut best_bid = Money::ZERO;
    let mut z_s = S::zero();
    for z in 1..=cap.0 {
        z_s += S::one();
        let f = cdf[z as usize];
        let q = f * (win - z_s) + (S::one() - f) * lose;
        if q > best_value {
            best_value = q;
            best_bid = Money(z);
        }
    }
    (best_bid, best_value)
}

fn widest_value_gap<S: Scalar>(row: &[S]) -> Money {
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for &v in row {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    value_gap_floor(hi, lo)
}

/// Expected value of executing fixed per-state bids (no optimization), the
/// quasi-linear analogue of rolling the policy out. Used to re-derive value
/// tables after bids have been adjusted.
pub(crate) fn evaluate_fixed_bids<S: Scalar>(
    instance: &ProblemInstance<S>,
    bids: &[Vec<Money>],
    terminal: Vec<S>,
) -> Vec<Vec<S>> {
    let n = instance.item_count();
    let mut values: Vec<Vec<S>> = vec![Vec::new(); n + 1];
    values[n] = terminal;
    for t in (0..n).rev() {
        let model = &instance.models[t];
        let bit = 1u32 << t;
        let next = &values[t + 1];
        let row = (0..1u32 << t)
            .map(|mask| {
                let z = bids[t][mask as usize];
                let f = model.win_probability(z);
                let win = next[(mask | bit) as usize];
                let lose = next[mask as usize];
                f * (win - z.to_scalar()) + (S::one() - f) * lose
            })
            .collect();
        values[t] = row;
    }
    values
}
