//! Budget-constrained bidding built on top of the unconstrained strategy:
//! a second backward pass that prorates the budget across each state's
//! prefix path and re-optimizes bids under the resulting caps, plus the
//! trivial fallback that just truncates bids to the money left.

use crate::error::Error;
use crate::eval::ExecutionPolicy;
use crate::model::{ItemSet, ProblemInstance};
use crate::money::Money;
use crate::quasilinear::{evaluate_fixed_bids, terminal_values, QState, QStrategy};
use crate::scalar::Scalar;

/// Budget-feasible strategy derived from an unconstrained one. Bids are
/// per-(stage, subset) like [`QStrategy`], with the per-state cap that
/// produced them and a certified bound on the total payment.
#[derive(Clone, Debug, PartialEq)]
pub struct ProratedStrategy<S> {
    budget: Money,
    values: Vec<Vec<S>>,
    bids: Vec<Vec<Money>>,
    caps: Vec<Vec<Money>>,
    max_payments: Vec<Vec<Money>>,
    certified_max_payment: Money,
    feasible: bool,
    clamp_events: usize,
}

impl<S: Scalar> ProratedStrategy<S> {
    pub fn item_count(&self) -> usize {
        self.bids.len()
    }

    pub fn budget(&self) -> Money {
        self.budget
    }

    pub fn value(&self, stage: usize, subset: ItemSet) -> S {
        self.values[stage][subset as usize]
    }

    pub fn bid(&self, stage: usize, subset: ItemSet) -> Money {
        self.bids[stage][subset as usize]
    }

    /// The proration cap `z_max` that constrained the bid search at a state.
    pub fn cap(&self, stage: usize, subset: ItemSet) -> Money {
        self.caps[stage][subset as usize]
    }

    pub fn root_value(&self) -> S {
        self.values[0][0]
    }

    /// Worst-case total of the bids placed from `state` to the end,
    /// counting every placed bid as payable. Zero at the terminal stage.
    pub fn max_future_payment(&self, state: QState) -> Money {
        self.max_payments[state.stage][state.subset as usize]
    }

    /// Certified worst-case total payment from the initial state.
    pub fn certified_max_payment(&self) -> Money {
        self.certified_max_payment
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// How many bids the final feasibility pass had to lower. The prorated
    /// caps usually suffice on their own; this counts when they did not.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn stage_values(&self, stage: usize) -> &[S] {
        &self.values[stage]
    }

    pub fn stage_bids(&self, stage: usize) -> &[Money] {
        &self.bids[stage]
    }
}

impl<S: Scalar> ExecutionPolicy for ProratedStrategy<S> {
    fn bid(&self, stage: usize, subset: ItemSet, _paid: Money) -> Money {
        ProratedStrategy::bid(self, stage, subset)
    }
}

/// Sum of the payments `pi` makes on the unique path from the initial state
/// to `state` — winning exactly the items in `state.subset`, in auction
/// order — excluding any payment at the state itself.
pub fn prepayment<S: Scalar>(pi: &QStrategy<S>, state: QState) -> Money {
    let mut total = Money::ZERO;
    for i in 0..state.stage {
        let bit = 1u32 << i;
        if state.subset & bit != 0 {
            let prefix = state.subset & (bit - 1);
            total += pi.bid(i, prefix);
        }
    }
    total
}

/// The stage-by-stage second pass. Tables fill from stage `n - 1` downwards;
/// querying a stage that has not been adjusted yet is a sequencing error.
struct SecondPass<S> {
    item_count: usize,
    values: Vec<Option<Vec<S>>>,
    bids: Vec<Option<Vec<Money>>>,
    caps: Vec<Option<Vec<Money>>>,
    max_payments: Vec<Option<Vec<Money>>>,
}

impl<S: Scalar> SecondPass<S> {
    fn new(item_count: usize, terminal: Vec<S>) -> Self {
        let mut values: Vec<Option<Vec<S>>> = vec![None; item_count + 1];
        let mut max_payments: Vec<Option<Vec<Money>>> = vec![None; item_count + 1];
        values[item_count] = Some(terminal);
        max_payments[item_count] = Some(vec![Money::ZERO; 1 << item_count]);
        Self {
            item_count,
            values,
            bids: vec![None; item_count],
            caps: vec![None; item_count],
            max_payments,
        }
    }

    /// Worst-case total of adjusted bids over paths branching from `state`.
    fn max_future_payment(&self, state: QState) -> Result<Money, Error> {
        let row = self.max_payments[state.stage].as_ref().ok_or_else(|| {
            Error::Sequencing(format!(
                "stage {} has not been adjusted yet; adjust stages {}..={} first",
                state.stage,
                state.stage,
                self.item_count - 1
            ))
        })?;
        Ok(row[state.subset as usize])
    }
}

/// Derive a budget-feasible strategy from the unconstrained `pi`.
///
/// Stages are processed from `n - 1` down to `0`. At each state the cap is
/// `z_max = z_opt * (budget - Z_past) / (Z_pre + z_opt)` floored to the money
/// grid (and `0` where `pi` does not bid), where `Z_pre` is the payment on
/// the prefix path under `pi` and `Z_past` the worst-case adjusted payment
/// after a win here. Bids are then re-optimized over `0..=z_max` against the
/// already-adjusted downstream values. A final forward pass lowers any bid
/// that could still push a path over the budget and re-derives the value
/// tables for the final bids, so the certificate holds unconditionally.
pub fn solve_prorated<S: Scalar>(
    instance: &ProblemInstance<S>,
    pi: &QStrategy<S>,
    budget: Money,
) -> Result<ProratedStrategy<S>, Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let n = instance.item_count();
    if pi.item_count() != n {
        return Err(Error::StrategyMismatch(format!(
            "strategy covers {} items but the instance has {n}",
            pi.item_count()
        )));
    }

    let mut pass = SecondPass::new(n, terminal_values(instance)?);

    for t in (0..n).rev() {
        let model = &instance.models[t];
        let max_support = model.max_meaningful_bid();
        let bit = 1u32 << t;

        // Bids above the support are dominated within 0..=z_max, and every
        // z_max is at most the budget, so one dense cdf covers the stage.
        let cdf = model.dense_win_probabilities(max_support.min(budget));

        let mut value_row = Vec::with_capacity(1 << t);
        let mut bid_row = Vec::with_capacity(1 << t);
        let mut cap_row = Vec::with_capacity(1 << t);
        for mask in 0..1u32 << t {
            let state = QState::new(t, mask);
            let z_opt = pi.bid(t, mask);
            let z_max = if z_opt == Money::ZERO {
                // A state where pi does not bid receives no budget share.
                Money::ZERO
            } else {
                let z_pre = prepayment(pi, state);
                let z_past =
                    pass.max_future_payment(QState::new(t + 1, mask | bit))?;
                match budget.checked_sub(z_past) {
                    None => Money::ZERO,
                    Some(headroom) => {
                        // Integer arithmetic keeps the floor exact.
                        let num = z_opt.0 as u128 * headroom.0 as u128;
                        let den = (z_pre.0 + z_opt.0) as u128;
                        Money((num / den) as u64)
                    }
                }
            };

            let next = pass.values[t + 1].as_ref().expect("stage t+1 adjusted");
            let win = next[(mask | bit) as usize];
            let lose = next[mask as usize];
            let search_cap = z_max.min(max_support);
            let (mut best_bid, mut best_value) = (Money::ZERO, {
                let f0 = cdf[0];
                f0 * win + (S::one() - f0) * lose
            });
            let mut z_s = S::zero();
            for z in 1..=search_cap.0 {
                z_s += S::one();
                let f = cdf[z as usize];
                let q = f * (win - z_s) + (S::one() - f) * lose;
                if q > best_value {
                    best_value = q;
                    best_bid = Money(z);
                }
            }
            value_row.push(best_value);
            bid_row.push(best_bid);
            cap_row.push(z_max);
        }

        let future = pass.max_payments[t + 1].as_ref().expect("stage t+1 adjusted");
        let maxpay_row: Vec<Money> = (0..1u32 << t)
            .map(|mask| {
                let win = bid_row[mask as usize] + future[(mask | bit) as usize];
                win.max(future[mask as usize])
            })
            .collect();

        pass.values[t] = Some(value_row);
        pass.bids[t] = Some(bid_row);
        pass.caps[t] = Some(cap_row);
        pass.max_payments[t] = Some(maxpay_row);
    }

    let mut bids: Vec<Vec<Money>> = pass
        .bids
        .into_iter()
        .map(|row| row.expect("all stages adjusted"))
        .collect();
    let caps: Vec<Vec<Money>> = pass
        .caps
        .into_iter()
        .map(|row| row.expect("all stages adjusted"))
        .collect();

    // Forward feasibility pass: walking stage by stage, `cumulative[mask]`
    // is the worst-case total paid on any path into the state (each state
    // has exactly one predecessor per outcome of the previous auction).
    let mut clamp_events = 0usize;
    let mut cumulative = vec![Money::ZERO];
    for (t, bid_row) in bids.iter_mut().enumerate() {
        let bit = 1u32 << t;
        let mut next = vec![Money::ZERO; 1 << (t + 1)];
        for mask in 0..1u32 << t {
            let paid = cumulative[mask as usize];
            let bid = &mut bid_row[mask as usize];
            if paid + *bid > budget {
                *bid = budget - paid;
                clamp_events += 1;
            }
            next[(mask | bit) as usize] = paid + *bid;
            next[mask as usize] = paid;
        }
        cumulative = next;
    }

    // Re-derive values for the final bids and recompute the certificate.
    let values = evaluate_fixed_bids(instance, &bids, terminal_values(instance)?);
    let mut max_payments: Vec<Vec<Money>> = vec![Vec::new(); n + 1];
    max_payments[n] = vec![Money::ZERO; 1 << n];
    for t in (0..n).rev() {
        let bit = 1u32 << t;
        let future = &max_payments[t + 1];
        max_payments[t] = (0..1u32 << t)
            .map(|mask| {
                let win = bids[t][mask as usize] + future[(mask | bit) as usize];
                win.max(future[mask as usize])
            })
            .collect();
    }
    let certified_max_payment = max_payments[0][0];
    let feasible = certified_max_payment <= budget;
    debug_assert!(feasible, "forward clamp must certify feasibility");

    Ok(ProratedStrategy {
        budget,
        values,
        bids,
        caps,
        max_payments,
        certified_max_payment,
        feasible,
        clamp_events,
    })
}

/// Execute a base strategy while never bidding more than the money left:
/// each bid is `min(base bid, budget - paid so far)`.
pub struct TrivialPolicy<'a> {
    base: &'a dyn ExecutionPolicy,
    budget: Money,
}

impl<'a> TrivialPolicy<'a> {
    pub fn new(base: &'a dyn ExecutionPolicy, budget: Money) -> Self {
        Self { base, budget }
    }

    pub fn budget(&self) -> Money {
        self.budget
    }
}

impl ExecutionPolicy for TrivialPolicy<'_> {
    fn bid(&self, stage: usize, subset: ItemSet, paid: Money) -> Money {
        let remaining = self.budget.saturating_sub(paid);
        self.base.bid(stage, subset, paid).min(remaining)
    }
}

/// The runtime baseline: follow `pi`, truncated to the remaining budget.
pub fn trivial_policy<S: Scalar>(pi: &QStrategy<S>, budget: Money) -> TrivialPolicy<'_> {
    TrivialPolicy::new(pi, budget)
}
