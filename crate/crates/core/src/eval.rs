//! Ground-truth evaluation of bidding policies: exact expected utility by
//! enumerating all win/lose outcome paths, seeded Monte Carlo simulation,
//! and brute-force optimal-policy search on tiny instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{ItemSet, MoneyUtility, ProblemInstance, ValuationKind};
use crate::money::Money;
use crate::scalar::Scalar;

/// Exact path enumeration visits `2^n` outcome vectors.
pub const EXACT_EVAL_MAX_ITEMS: usize = 20;

/// Brute force enumerates `(cap + 1)^(2^n - 1)` bid assignments.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 3;
pub const BRUTE_FORCE_MAX_ASSIGNMENTS: u128 = 10_000_000;

/// A deterministic rule mapping the observable execution state — stage,
/// items obtained, and money paid so far — to the next bid. Strategies that
/// ignore money (the subset-state tables) simply drop `paid`.
pub trait ExecutionPolicy {
    fn bid(&self, stage: usize, subset: ItemSet, paid: Money) -> Money;
}

impl<P: ExecutionPolicy + ?Sized> ExecutionPolicy for &P {
    fn bid(&self, stage: usize, subset: ItemSet, paid: Money) -> Money {
        (**self).bid(stage, subset, paid)
    }
}

/// Plain per-(stage, subset) bid tables with no attached values; the policy
/// form used for loaded strategy files and brute-force candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedBidPolicy {
    pub bids: Vec<Vec<Money>>,
}

impl FixedBidPolicy {
    pub fn zeros(n: usize) -> Self {
        Self {
            bids: (0..n).map(|t| vec![Money::ZERO; 1 << t]).collect(),
        }
    }

    pub fn item_count(&self) -> usize {
        self.bids.len()
    }
}

impl ExecutionPolicy for FixedBidPolicy {
    fn bid(&self, stage: usize, subset: ItemSet, _paid: Money) -> Money {
        self.bids[stage][subset as usize]
    }
}

/// Which terminal utility a rollout realizes.
#[derive(Clone, Debug, PartialEq)]
pub enum UtilityMode<S> {
    /// `v(final set) - total payment`.
    QuasiLinear,
    /// `v(final set) + f(endowment - total payment)`.
    Additive {
        endowment: Money,
        utility: MoneyUtility<S>,
    },
}

/// Exact evaluation of a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport<S> {
    pub expected_utility: S,
    /// Largest total payment over outcome paths with positive probability.
    pub max_payment: Money,
    /// Nominal number of win/lose outcome vectors, `2^n`.
    pub path_count: u64,
    /// Total probability of the enumerated paths; should be 1.
    pub probability_mass: S,
    /// For bundle valuations: probability that the final set contains each
    /// bundle, in the valuation's bundle order.
    pub bundle_win_probabilities: Option<Vec<(ItemSet, S)>>,
}

/// Monte Carlo estimate of a policy's expected utility.
#[derive(Clone, Debug, PartialEq)]
pub struct McReport<S> {
    pub mean: S,
    pub std_error: S,
    pub samples: u64,
    pub seed: u64,
}

/// Neumaier-compensated accumulator; path probabilities span many orders of
/// magnitude, so a plain running sum loses digits.
struct CompensatedSum<S> {
    sum: S,
    compensation: S,
}

impl<S: Scalar> CompensatedSum<S> {
    fn new() -> Self {
        Self {
            sum: S::zero(),
            compensation: S::zero(),
        }
    }

    fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> S {
        self.sum + self.compensation
    }
}

/// Enumerate every win/lose outcome vector of `policy` on `instance` and
/// report the probability-weighted utility, the worst-case total payment
/// over positive-probability paths, and per-bundle win probabilities.
pub fn exact_eval<S: Scalar, P: ExecutionPolicy + ?Sized>(
    instance: &ProblemInstance<S>,
    policy: &P,
    mode: &UtilityMode<S>,
) -> Result<EvalReport<S>, Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    exact_eval_prevalidated(instance, policy, mode)
}

fn exact_eval_prevalidated<S: Scalar, P: ExecutionPolicy + ?Sized>(
    instance: &ProblemInstance<S>,
    policy: &P,
    mode: &UtilityMode<S>,
) -> Result<EvalReport<S>, Error> {
    let n = instance.item_count();
    if n > EXACT_EVAL_MAX_ITEMS {
        return Err(Error::Capacity(format!(
            "exact evaluation enumerates 2^{n} paths; use monte_carlo beyond \
             {EXACT_EVAL_MAX_ITEMS} items"
        )));
    }
    if let UtilityMode::Additive { endowment, utility } = mode {
        if !utility.covers(*endowment) {
            return Err(Error::InvalidArgument(format!(
                "money utility table does not cover endowment {endowment}"
            )));
        }
    }

    let bundles: Option<Vec<ItemSet>> = match instance.valuation.kind() {
        ValuationKind::Bundles(list) => Some(list.iter().map(|&(b, _)| b).collect()),
        ValuationKind::Table(_) => None,
    };

    let mut walker = PathWalker {
        instance,
        policy,
        mode,
        utility_sum: CompensatedSum::new(),
        probability_sum: CompensatedSum::new(),
        max_payment: Money::ZERO,
        bundle_probability: bundles
            .as_ref()
            .map(|b| b.iter().map(|_| CompensatedSum::new()).collect()),
        bundles,
    };
    walker.walk(0, 0, Money::ZERO, S::one())?;

    Ok(EvalReport {
        expected_utility: walker.utility_sum.value(),
        max_payment: walker.max_payment,
        path_count: 1u64 << n,
        probability_mass: walker.probability_sum.value(),
        bundle_win_probabilities: walker.bundle_probability.map(|sums| {
            walker
                .bundles
                .unwrap()
                .into_iter()
                .zip(sums)
                .map(|(b, s)| (b, s.value()))
                .collect()
        }),
    })
}

struct PathWalker<'a, S, P: ?Sized> {
    instance: &'a ProblemInstance<S>,
    policy: &'a P,
    mode: &'a UtilityMode<S>,
    utility_sum: CompensatedSum<S>,
    probability_sum: CompensatedSum<S>,
    max_payment: Money,
    bundles: Option<Vec<ItemSet>>,
    bundle_probability: Option<Vec<CompensatedSum<S>>>,
}

impl<S: Scalar, P: ExecutionPolicy + ?Sized> PathWalker<'_, S, P> {
    fn walk(&mut self, stage: usize, subset: ItemSet, paid: Money, prob: S) -> Result<(), Error> {
        let n = self.instance.item_count();
        if stage == n {
            let value = self.instance.valuation.value(subset)?;
            let utility = match self.mode {
                UtilityMode::QuasiLinear => value - paid.to_scalar(),
                UtilityMode::Additive { endowment, utility } => {
                    let leftover = endowment.checked_sub(paid).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "policy pays {paid} on a positive-probability path, more than \
                             the endowment {endowment}"
                        ))
                    })?;
                    value + utility.apply(leftover)
                }
            };
            self.utility_sum.add(prob * utility);
            self.probability_sum.add(prob);
            if paid > self.max_payment {
                self.max_payment = paid;
            }
            if let (Some(bundles), Some(sums)) = (&self.bundles, &mut self.bundle_probability) {
                for (&bundle, sum) in bundles.iter().zip(sums.iter_mut()) {
                    if bundle & subset == bundle {
                        sum.add(prob);
                    }
                }
            }
            return Ok(());
        }

        let z = self.policy.bid(stage, subset, paid);
        let f = self.instance.models[stage].win_probability(z);
        let bit = 1u32 << stage;
        // Zero-probability branches are pruned so they cannot contribute to
        // the payment certificate.
        if f > S::zero() {
            self.walk(stage + 1, subset | bit, paid + z, prob * f)?;
        }
        let lose = S::one() - f;
        if lose > S::zero() {
            self.walk(stage + 1, subset, paid, prob * lose)?;
        }
        Ok(())
    }
}

/// Estimate a policy's expected utility by simulating auctions with a seeded
/// ChaCha8 generator. The draws depend only on (seed, instance, sample
/// index), so identical inputs reproduce the report bit for bit.
pub fn monte_carlo<S: Scalar, P: ExecutionPolicy + ?Sized>(
    instance: &ProblemInstance<S>,
    policy: &P,
    mode: &UtilityMode<S>,
    samples: u64,
    seed: u64,
) -> Result<McReport<S>, Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if let UtilityMode::Additive { endowment, utility } = mode {
        if !utility.covers(*endowment) {
            return Err(Error::InvalidArgument(format!(
                "money utility table does not cover endowment {endowment}"
            )));
        }
    }

    let n = instance.item_count();
    // Per-item inverse-cdf tables in f64, independent of the scalar type.
    let tables: Vec<Vec<(f64, Money)>> = instance
        .models
        .iter()
        .map(|model| {
            let mut acc = 0.0f64;
            model
                .pmf()
                .iter()
                .map(|&(value, prob)| {
                    acc += prob.to_f64().expect("probability converts to f64");
                    (acc, value)
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for k in 1..=samples {
        let mut subset: ItemSet = 0;
        let mut paid = Money::ZERO;
        for (stage, table) in tables.iter().enumerate().take(n) {
            let z = policy.bid(stage, subset, paid);
            let u: f64 = rng.random();
            let highest = draw(table, u);
            if z >= highest {
                subset |= 1u32 << stage;
                paid += z;
            }
        }
        let value = instance.valuation.value(subset)?;
        let utility = match mode {
            UtilityMode::QuasiLinear => {
                value.to_f64().expect("utility converts to f64") - paid.0 as f64
            }
            UtilityMode::Additive { endowment, utility } => {
                let leftover = endowment.checked_sub(paid).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "policy pays {paid} in a simulated run, more than the endowment \
                         {endowment}"
                    ))
                })?;
                (value + utility.apply(leftover))
                    .to_f64()
                    .expect("utility converts to f64")
            }
        };
        // Welford update.
        let delta = utility - mean;
        mean += delta / k as f64;
        m2 += delta * (utility - mean);
    }

    let std_error = if samples > 1 {
        (m2 / (samples - 1) as f64 / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McReport {
        mean: S::from_f64(mean).expect("mean fits scalar"),
        std_error: S::from_f64(std_error).expect("std error fits scalar"),
        samples,
        seed,
    })
}

fn draw(table: &[(f64, Money)], u: f64) -> Money {
    for &(cum, value) in table {
        if u < cum {
            return value;
        }
    }
    table.last().expect("pmf is non-empty").1
}

/// Enumerate every assignment of integer bids `0..=cap` to the `2^n - 1`
/// subset states and return the assignment with the best exact expected
/// quasi-linear utility. Pure enumeration — the optimality oracle for the
/// backward-induction solver on tiny instances.
pub fn brute_force_optimal<S: Scalar>(
    instance: &ProblemInstance<S>,
    bid_grid_cap: Money,
) -> Result<(S, FixedBidPolicy), Error> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let n = instance.item_count();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::Capacity(format!(
            "brute force supports at most {BRUTE_FORCE_MAX_ITEMS} items (got {n})"
        )));
    }
    let states = (1u32 << n) - 1;
    let mut assignments: u128 = 1;
    for _ in 0..states {
        assignments = assignments.saturating_mul(bid_grid_cap.0 as u128 + 1);
        if assignments > BRUTE_FORCE_MAX_ASSIGNMENTS {
            return Err(Error::Capacity(format!(
                "(cap + 1)^{states} assignments exceed {BRUTE_FORCE_MAX_ASSIGNMENTS}"
            )));
        }
    }

    let mut candidate = FixedBidPolicy::zeros(n);
    let mode = UtilityMode::QuasiLinear;
    let mut best_value = exact_eval_prevalidated(instance, &candidate, &mode)?.expected_utility;
    let mut best = candidate.clone();

    // Odometer over the flattened (stage, subset) state list.
    loop {
        let mut carried = true;
        'bump: for t in 0..n {
            for slot in candidate.bids[t].iter_mut() {
                if *slot < bid_grid_cap {
                    *slot += Money(1);
                    carried = false;
                    break 'bump;
                }
                *slot = Money::ZERO;
            }
        }
        if carried {
            break;
        }
        let value = exact_eval_prevalidated(instance, &candidate, &mode)?.expected_utility;
        if value > best_value {
            best_value = value;
            best = candidate.clone();
        }
    }
    Ok((best_value, best))
}
