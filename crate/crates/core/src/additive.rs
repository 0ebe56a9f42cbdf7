//! Backward-induction solver over (subset, remaining money) states for
//! additive utility `v(final set) + f(leftover money)`. Remaining money is
//! explicit in the state, which makes the budget constraint exact (`bid <=
//! money on hand`) at the cost of an `(m + 1)`-fold larger state space.

use crate::error::Error;
use crate::eval::ExecutionPolicy;
use crate::model::{ItemSet, MoneyUtility, ProblemInstance};
use crate::money::Money;
use crate::quasilinear::terminal_values;
use crate::scalar::Scalar;

/// Per-stage bid search cap for the additive solver. The cap never changes
/// the solved strategy (bids above either bound are dominated); it only
/// changes how many candidate bids each state scans.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdditiveBidCap {
    /// Cap at the item's largest support value.
    #[default]
    MaxSupport,
    /// Cap at the largest subset valuation, the loosest bound that is
    /// obviously safe when money utility is the identity. Useful for
    /// benchmarking the cost of a weak cap.
    FullValuation,
}

/// Strategy over `(stage, subset, remaining money)`: dense value rows for
/// stages `0..=n` and bid rows for stages `0..n`, each row laid out as
/// `subset * (m + 1) + money`.
#[derive(Clone, Debug, PartialEq)]
pub struct AStrategy<S> {
    endowment: Money,
    values: Vec<Vec<S>>,
    bids: Vec<Vec<Money>>,
}

impl<S: Scalar> AStrategy<S> {
    pub fn item_count(&self) -> usize {
        self.bids.len()
    }

    pub fn endowment(&self) -> Money {
        self.endowment
    }

    fn index(&self, subset: ItemSet, money: Money) -> usize {
        subset as usize * (self.endowment.0 as usize + 1) + money.0 as usize
    }

    /// Expected utility of playing optimally from `(stage, subset)` with
    /// `money` still on hand.
    pub fn value(&self, stage: usize, subset: ItemSet, money: Money) -> S {
        self.values[stage][self.index(subset, money)]
    }

    /// Optimal bid at `(stage, subset, money)`; defined for `stage < n` and
    /// never larger than `money`.
    pub fn bid(&self, stage: usize, subset: ItemSet, money: Money) -> Money {
        self.bids[stage][self.index(subset, money)]
    }

    pub fn root_value(&self) -> S {
        self.value(0, 0, self.endowment)
    }

    pub fn root_bid(&self) -> Money {
        self.bid(0, 0, self.endowment)
    }
}

/// Runs an [`AStrategy`] as an execution policy: money on hand is the
/// endowment minus what has been paid so far.
pub struct AdditivePolicy<'a, S> {
    strategy: &'a AStrategy<S>,
}

impl<'a, S: Scalar> AdditivePolicy<'a, S> {
    pub fn new(strategy: &'a AStrategy<S>) -> Self {
        Self { strategy }
    }
}

impl<S: Scalar> ExecutionPolicy for AdditivePolicy<'_, S> {
    fn bid(&self, stage: usize, subset: ItemSet, paid: Money) -> Money {
        let remaining = self
            .strategy
            .endowment()
            .checked_sub(paid)
            .expect("payments under an additive strategy never exceed the endowment");
        self.strategy.bid(stage, subset, remaining)
    }
}

/// Number of distinct states at stage `t` with endowment `m`:
/// `(2^t - 1) * (m + 1) + 1`. Any leftover money `0..=m` is possible once at
/// least one item is held, while the empty-handed state still has all of `m`.
pub fn additive_state_count(n: usize, m: Money, t: usize) -> u64 {
    assert!(t <= n, "stage {t} out of range for {n} items");
    ((1u64 << t) - 1) * (m.0 + 1) + 1
}

/// Solve with the default max-support bid cap.
pub fn solve_additive<S: Scalar>(
    instance: &ProblemInstance<S>,
    m: Money,
    f: &MoneyUtility<S>,
) -> Result<AStrategy<S>, Error> {
    solve_additive_with_cap(instance, m, f, AdditiveBidCap::MaxSupport)
}

/// Value iteration from the terminal stage backwards over the full money
/// grid `0..=m`. At each state the searched bids are `0..=min(d, cap)`, so
/// no strategy it returns can ever overspend; the smallest maximizing bid is
/// kept, matching the quasi-linear solver's tie-breaking.
pub fn solve_additive_with_cap<S: Scalar>(
    instance: &ProblemInstance<S>,
    m: Money,
    f: &MoneyUtility<S>,
    cap: AdditiveBidCap,
) -> Result<AStrategy<S>, Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    if !f.covers(m) {
        return Err(Error::InvalidArgument(format!(
            "money utility table does not cover endowment {m}"
        )));
    }

    let n = instance.item_count();
    let width = m.0 as usize + 1;
    let subset_values = terminal_values(instance)?;

    let money_values: Vec<S> = (0..=m.0).map(|d| f.apply(Money(d))).collect();
    let mut terminal = Vec::with_capacity((1usize << n) * width);
    for &v in &subset_values {
        for &fd in &money_values {
            terminal.push(v + fd);
        }
    }

    let mut values: Vec<Vec<S>> = vec![Vec::new(); n + 1];
    let mut bids: Vec<Vec<Money>> = vec![Vec::new(); n];
    values[n] = terminal;

    for t in (0..n).rev() {
        let model = &instance.models[t];
        let stage_cap = match cap {
            AdditiveBidCap::MaxSupport => model.max_meaningful_bid(),
            AdditiveBidCap::FullValuation => {
                let top = instance.valuation.max_value().ceil();
                Money(top.to_u64().unwrap_or(u64::MAX))
            }
        }
        .min(m);
        let cdf = model.dense_win_probabilities(stage_cap);
        let bit = 1u32 << t;
        let next = &values[t + 1];

        let mut value_row = Vec::with_capacity((1usize << t) * width);
        let mut bid_row = Vec::with_capacity((1usize << t) * width);
        for mask in 0..1u32 << t {
            let lose_row = &next[mask as usize * width..][..width];
            let win_row = &next[(mask | bit) as usize * width..][..width];
            for d in 0..width {
                let lose = lose_row[d];
                let z_cap = (d as u64).min(stage_cap.0);
                let mut best_value = cdf[0] * win_row[d] + (S::one() - cdf[0]) * lose;
                let mut best_bid = Money::ZERO;
                let mut z_s = S::zero();
                for z in 1..=z_cap {
                    z_s += S::one();
                    let fz = cdf[z as usize];
                    let q = fz * win_row[d - z as usize] + (S::one() - fz) * lose;
                    if q > best_value {
                        best_value = q;
                        best_bid = Money(z);
                    }
                }
                value_row.push(best_value);
                bid_row.push(best_bid);
            }
        }
        values[t] = value_row;
        bids[t] = bid_row;
    }

    Ok(AStrategy {
        endowment: m,
        values,
        bids,
    })
}
