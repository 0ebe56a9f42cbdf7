//! Domain types for sequential-auction problems: per-item models of the
//! highest opposing bid, valuations over item subsets, utility attached to
//! leftover money, and instance validation.

use std::fmt;

use crate::error::Error;
use crate::money::Money;
use crate::scalar::Scalar;

/// Subset of item indices packed as a bitmask; bit `i` is item `i`.
pub type ItemSet = u32;

/// Hard cap on the item count so subsets fit an [`ItemSet`] and a complete
/// valuation table over all `2^n` subsets stays addressable.
pub const MAX_ITEMS: usize = 24;

/// Tolerance for the pmf sum-to-one check (widened automatically for
/// low-precision scalars).
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Probability mass function of the highest opposing bid for one item.
/// Support values must be strictly increasing and probabilities in `(0, 1]`
/// summing to one; see [`ProblemInstance::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct OpponentBidModel<S> {
    pmf: Vec<(Money, S)>,
}

impl<S: Scalar> OpponentBidModel<S> {
    pub fn new(pmf: Vec<(Money, S)>) -> Self {
        Self { pmf }
    }

    /// Uniform distribution over the integer amounts `0..=high`.
    pub fn uniform(high: Money) -> Self {
        let p = S::one() / S::from_u64(high.0 + 1).expect("support size fits scalar");
        Self {
            pmf: (0..=high.0).map(|v| (Money(v), p)).collect(),
        }
    }

    pub fn pmf(&self) -> &[(Money, S)] {
        &self.pmf
    }

    /// Probability that bidding `bid` wins the item: the total mass at or
    /// below `bid`, since ties go to the agent. Non-decreasing in `bid`,
    /// zero below the support, one at or above its maximum.
    pub fn win_probability(&self, bid: Money) -> S {
        let mut p = S::zero();
        for &(value, prob) in &self.pmf {
            if value <= bid {
                p += prob;
            }
        }
        // Guard against rounding pushing the total mass past one, which
        // would turn the losing branch into a negative probability.
        if p > S::one() {
            S::one()
        } else {
            p
        }
    }

    /// Largest support value. Bidding above it never raises the win
    /// probability, so solvers cap their searches here.
    pub fn max_meaningful_bid(&self) -> Money {
        self.pmf.iter().map(|&(v, _)| v).max().unwrap_or(Money::ZERO)
    }

    pub fn min_support(&self) -> Option<Money> {
        self.pmf.iter().map(|&(v, _)| v).min()
    }

    /// Dense table of win probabilities for every integer bid in `0..=cap`.
    /// Assumes a validated (sorted) pmf.
    pub(crate) fn dense_win_probabilities(&self, cap: Money) -> Vec<S> {
        let mut cdf = Vec::with_capacity(cap.0 as usize + 1);
        let mut acc = S::zero();
        let mut idx = 0;
        for z in 0..=cap.0 {
            while idx < self.pmf.len() && self.pmf[idx].0 .0 <= z {
                acc += self.pmf[idx].1;
                idx += 1;
            }
            cdf.push(if acc > S::one() { S::one() } else { acc });
        }
        cdf
    }
}

/// How a valuation over item subsets is represented.
#[derive(Clone, Debug, PartialEq)]
pub enum ValuationKind<S> {
    /// Complete table indexed by subset mask; length must be `2^n`.
    Table(Vec<S>),
    /// Bundle list: a subset is worth its best fully-contained bundle, or
    /// zero if it contains none. Bundles are substitutes of one another;
    /// the items inside a bundle are complements.
    Bundles(Vec<(ItemSet, S)>),
}

/// Valuation `v` over subsets of the instance's items, with `v(empty) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation<S> {
    items: usize,
    kind: ValuationKind<S>,
}

impl<S: Scalar> Valuation<S> {
    pub fn table(items: usize, values: Vec<S>) -> Self {
        Self {
            items,
            kind: ValuationKind::Table(values),
        }
    }

    pub fn bundles(items: usize, bundles: Vec<(ItemSet, S)>) -> Self {
        Self {
            items,
            kind: ValuationKind::Bundles(bundles),
        }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn kind(&self) -> &ValuationKind<S> {
        &self.kind
    }

    /// Value of a subset of items.
    pub fn value(&self, subset: ItemSet) -> Result<S, Error> {
        if self.items > 32 || u64::from(subset) >= (1u64 << self.items) {
            return Err(Error::InvalidArgument(format!(
                "subset {subset:#x} outside the domain of {} items",
                self.items
            )));
        }
        match &self.kind {
            ValuationKind::Table(values) => values.get(subset as usize).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "valuation table has {} entries, subset {subset:#x} is unmapped",
                    values.len()
                ))
            }),
            ValuationKind::Bundles(bundles) => {
                let mut best = S::zero();
                for &(bundle, value) in bundles {
                    if bundle & subset == bundle && value > best {
                        best = value;
                    }
                }
                Ok(best)
            }
        }
    }

    /// Equivalent explicit-table form, enumerating all `2^n` subsets.
    pub fn to_table(&self) -> Result<Valuation<S>, Error> {
        if self.items > MAX_ITEMS {
            return Err(Error::Capacity(format!(
                "cannot tabulate a valuation over {} items",
                self.items
            )));
        }
        let values = (0..1u32 << self.items)
            .map(|mask| self.value(mask))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Valuation::table(self.items, values))
    }

    /// Largest value over all subsets (used as an alternative bid cap).
    pub fn max_value(&self) -> S {
        match &self.kind {
            ValuationKind::Table(values) => values
                .iter()
                .copied()
                .fold(S::zero(), |a, b| if b > a { b } else { a }),
            ValuationKind::Bundles(bundles) => bundles
                .iter()
                .map(|&(_, v)| v)
                .fold(S::zero(), |a, b| if b > a { b } else { a }),
        }
    }
}

/// Utility attached to the money left over after the last auction.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum MoneyUtility<S> {
    /// `f(d) = d`.
    #[default]
    Identity,
    /// Tabulated `f(d)` for `d = 0, 1, ..., len - 1`; must be non-decreasing.
    Tabulated(Vec<S>),
}

impl<S: Scalar> MoneyUtility<S> {
    /// Utility of holding `d`. Panics if a tabulated function does not cover
    /// `d`; solvers check coverage up front via [`MoneyUtility::covers`].
    pub fn apply(&self, d: Money) -> S {
        match self {
            MoneyUtility::Identity => d.to_scalar(),
            MoneyUtility::Tabulated(table) => table[d.0 as usize],
        }
    }

    pub fn covers(&self, m: Money) -> bool {
        match self {
            MoneyUtility::Identity => true,
            MoneyUtility::Tabulated(table) => (table.len() as u64) > m.0,
        }
    }
}

/// A broken validation rule. Violations are data, not failures: collecting
/// them lets a caller report everything wrong with an instance at once.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// A sequential-auction problem: one highest-opposing-bid model per item in
/// auction order (index `i` is the item sold at stage `i`), a valuation over
/// item subsets, and optional money endowment / budget.
#[derive(Clone, Debug)]
pub struct ProblemInstance<S> {
    pub models: Vec<OpponentBidModel<S>>,
    pub valuation: Valuation<S>,
    pub endowment: Option<Money>,
    pub budget: Option<Money>,
    pub money_utility: MoneyUtility<S>,
}

impl<S: Scalar> ProblemInstance<S> {
    pub fn new(models: Vec<OpponentBidModel<S>>, valuation: Valuation<S>) -> Self {
        Self {
            models,
            valuation,
            endowment: None,
            budget: None,
            money_utility: MoneyUtility::Identity,
        }
    }

    pub fn with_endowment(mut self, m: Money) -> Self {
        self.endowment = Some(m);
        self
    }

    pub fn with_budget(mut self, b: Money) -> Self {
        self.budget = Some(b);
        self
    }

    pub fn item_count(&self) -> usize {
        self.models.len()
    }

    /// Check every structural invariant; an empty list means the instance is
    /// well-formed. Each violation names the offending field and the rule.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.models.len();
        if n == 0 || n > MAX_ITEMS {
            out.push(Violation::new(
                "models",
                format!("item count must be in 1..={MAX_ITEMS} (got {n})"),
            ));
        }

        for (i, model) in self.models.iter().enumerate() {
            let field = format!("models[{i}].pmf");
            let pmf = model.pmf();
            if pmf.is_empty() {
                out.push(Violation::new(&field, "pmf must be non-empty"));
                continue;
            }
            let mut sum = S::zero();
            for (k, &(value, prob)) in pmf.iter().enumerate() {
                if !(prob > S::zero() && prob <= S::one()) || !prob.is_finite() {
                    out.push(Violation::new(
                        &field,
                        format!("probability at entry {k} must be in (0, 1] (got {prob})"),
                    ));
                }
                if k > 0 && pmf[k - 1].0 >= value {
                    out.push(Violation::new(
                        &field,
                        format!("support values must be strictly increasing (entry {k})"),
                    ));
                }
                sum += prob;
            }
            let tol = scalar_tolerance::<S>(pmf.len());
            if (sum - S::one()).abs() > tol {
                out.push(Violation::new(
                    &field,
                    format!("probabilities must sum to 1 (got {sum})"),
                ));
            }
        }

        if self.valuation.items() != n {
            out.push(Violation::new(
                "valuation",
                format!(
                    "valuation covers {} items but the instance has {n}",
                    self.valuation.items()
                ),
            ));
        }
        match self.valuation.kind() {
            ValuationKind::Table(values) => {
                let expected = 1usize << self.valuation.items().min(MAX_ITEMS);
                if self.valuation.items() <= MAX_ITEMS && values.len() != expected {
                    out.push(Violation::new(
                        "valuation.table",
                        format!("must map all {expected} subsets (got {} entries)", values.len()),
                    ));
                }
                for (mask, &v) in values.iter().enumerate() {
                    if v < S::zero() || !v.is_finite() {
                        out.push(Violation::new(
                            "valuation.table",
                            format!("value of subset {mask:#x} must be finite and >= 0 (got {v})"),
                        ));
                    }
                }
                if let Some(&empty) = values.first() {
                    if empty != S::zero() {
                        out.push(Violation::new(
                            "valuation.table",
                            format!("the empty set must be worth 0 (got {empty})"),
                        ));
                    }
                }
            }
            ValuationKind::Bundles(bundles) => {
                for (k, &(bundle, v)) in bundles.iter().enumerate() {
                    if v < S::zero() || !v.is_finite() {
                        out.push(Violation::new(
                            "valuation.bundles",
                            format!("bundle {k} value must be finite and >= 0 (got {v})"),
                        ));
                    }
                    if n <= 32 && u64::from(bundle) >= (1u64 << n) {
                        out.push(Violation::new(
                            "valuation.bundles",
                            format!("bundle {k} ({bundle:#x}) uses items outside 0..{n}"),
                        ));
                    }
                    if bundle == 0 && v > S::zero() {
                        out.push(Violation::new(
                            "valuation.bundles",
                            format!("the empty set must be worth 0 (bundle {k} gives it {v})"),
                        ));
                    }
                }
            }
        }

        if let MoneyUtility::Tabulated(table) = &self.money_utility {
            for (d, pair) in table.windows(2).enumerate() {
                if pair[1] < pair[0] {
                    out.push(Violation::new(
                        "money_utility",
                        format!("must be non-decreasing (drops between {d} and {})", d + 1),
                    ));
                    break;
                }
            }
            if let Some(m) = self.endowment {
                if !self.money_utility.covers(m) {
                    out.push(Violation::new(
                        "money_utility",
                        format!("table must cover 0..={} (has {} entries)", m.0, table.len()),
                    ));
                }
            }
        }

        out
    }
}

fn scalar_tolerance<S: Scalar>(terms: usize) -> S {
    let base = S::from_f64(PROBABILITY_SUM_TOLERANCE).expect("tolerance fits scalar");
    let rounding = S::epsilon() * S::from_usize(4 * terms.max(1)).expect("term count fits scalar");
    if rounding > base {
        rounding
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_item_all_or_nothing;

    #[test]
    fn win_probability_on_the_two_point_model() {
        let instance = two_item_all_or_nothing();
        let model = &instance.models[0];
        assert_eq!(model.win_probability(Money(1)), 0.5);
        assert_eq!(model.win_probability(Money(2)), 1.0);
        assert_eq!(model.win_probability(Money(0)), 0.0);
        assert_eq!(model.win_probability(Money(7)), 1.0);
    }

    #[test]
    fn max_meaningful_bid_is_the_top_of_the_support() {
        let instance = two_item_all_or_nothing();
        assert_eq!(instance.models[0].max_meaningful_bid(), Money(2));
        let uniform: OpponentBidModel<f64> = OpponentBidModel::uniform(Money(100));
        assert_eq!(uniform.max_meaningful_bid(), Money(100));
        let point: OpponentBidModel<f64> = OpponentBidModel::new(vec![(Money(0), 1.0)]);
        assert_eq!(point.max_meaningful_bid(), Money(0));
    }

    #[test]
    fn bundle_valuation_is_all_or_nothing() {
        let instance = two_item_all_or_nothing();
        assert_eq!(instance.valuation.value(0b11).unwrap(), 4.0);
        assert_eq!(instance.valuation.value(0b01).unwrap(), 0.0);
        assert_eq!(instance.valuation.value(0b00).unwrap(), 0.0);
    }

    #[test]
    fn valuation_rejects_out_of_domain_subsets() {
        let instance = two_item_all_or_nothing();
        assert!(instance.valuation.value(0b100).is_err());
    }

    #[test]
    fn valid_instance_has_no_violations() {
        assert_eq!(two_item_all_or_nothing().validate(), Vec::new());
    }

    #[test]
    fn short_probability_mass_is_flagged() {
        let mut instance = two_item_all_or_nothing();
        instance.models[0] = OpponentBidModel::new(vec![(Money(1), 0.5), (Money(2), 0.4)]);
        let violations = instance.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "models[0].pmf");
        assert!(violations[0].rule.contains("sum to 1"));
    }

    #[test]
    fn nonzero_empty_set_value_is_flagged() {
        let mut instance = two_item_all_or_nothing();
        instance.valuation = Valuation::table(2, vec![3.0, 0.0, 0.0, 4.0]);
        let violations = instance.validate();
        assert!(violations.iter().any(|v| v.rule.contains("empty set")));

        instance.valuation = Valuation::bundles(2, vec![(0b00, 3.0)]);
        let violations = instance.validate();
        assert!(violations.iter().any(|v| v.rule.contains("empty set")));
    }

    #[test]
    fn uniform_model_mass_sums_to_one() {
        let instance = ProblemInstance::new(
            vec![OpponentBidModel::<f64>::uniform(Money(100))],
            Valuation::bundles(1, vec![(0b1, 50.0)]),
        );
        assert_eq!(instance.validate(), Vec::new());
    }

    #[test]
    fn dense_win_probabilities_match_the_pointwise_query() {
        let model: OpponentBidModel<f64> =
            OpponentBidModel::new(vec![(Money(2), 0.25), (Money(5), 0.5), (Money(9), 0.25)]);
        let dense = model.dense_win_probabilities(Money(12));
        for z in 0..=12u64 {
            assert_eq!(dense[z as usize], model.win_probability(Money(z)));
        }
    }

    #[test]
    fn bundle_to_table_agrees_everywhere() {
        let bundles = Valuation::bundles(3, vec![(0b011, 4.0), (0b100, 1.5), (0b111, 5.0)]);
        let table = bundles.to_table().unwrap();
        for mask in 0..8u32 {
            assert_eq!(table.value(mask).unwrap(), bundles.value(mask).unwrap());
        }
    }
}
