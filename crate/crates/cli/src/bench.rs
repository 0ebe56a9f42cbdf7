//! Benchmark harness: runs solver methods over a parameter grid described by
//! a JSON config and emits one CSV row per (method, parameter point,
//! repetition). Timing covers solver work only; expected utilities come from
//! exact evaluation (Monte Carlo beyond the exact-eval capacity), so every
//! non-timing column is reproducible bit for bit.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use seqbid::{
    exact_eval, monte_carlo, solve_additive_with_cap, solve_prorated, solve_quasilinear,
    trivial_policy, AdditiveBidCap, AdditivePolicy, Error, ExecutionPolicy, Money, MoneyUtility,
    ProblemInstance, UtilityMode,
};

use crate::gen::{gen_substitutes, gen_three_bundles};

pub const CSV_HEADER: &str = "method,n,m,budget,runtime_ms,expected_utility,max_payment,seed";

const MC_FALLBACK_SAMPLES: u64 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Additive,
    Quasilinear,
    Prorated,
    Trivial,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Additive => "additive",
            Method::Quasilinear => "quasilinear",
            Method::Prorated => "prorated",
            Method::Trivial => "trivial",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Substitutes,
    ThreeBundles,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub family: Family,
    pub methods: Vec<Method>,
    /// Item counts for the substitutes family (ignored by three_bundles,
    /// which is fixed at nine items).
    #[serde(default)]
    pub n_values: Vec<usize>,
    /// Endowment sweep: additive solves use each as its money grid.
    #[serde(default)]
    pub endowments: Vec<u64>,
    /// Budget sweep: when non-empty it replaces the endowment sweep and the
    /// additive method solves with m = budget.
    #[serde(default)]
    pub budgets: Vec<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Bid cap used by the additive solver (the solution is identical either
    /// way; only the search work differs).
    #[serde(default)]
    pub additive_cap: AdditiveCapConfig,
}

fn default_repetitions() -> usize {
    1
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdditiveCapConfig {
    #[default]
    MaxSupport,
    FullValuation,
}

impl From<AdditiveCapConfig> for AdditiveBidCap {
    fn from(cap: AdditiveCapConfig) -> Self {
        match cap {
            AdditiveCapConfig::MaxSupport => AdditiveBidCap::MaxSupport,
            AdditiveCapConfig::FullValuation => AdditiveBidCap::FullValuation,
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("bench config: {e}")))
    }
}

/// One measured data point.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub m: Money,
    pub budget: Option<Money>,
    pub runtime_ms: f64,
    pub expected_utility: f64,
    pub max_payment: Money,
    pub seed: u64,
}

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.3},{},{},{}",
            self.method,
            self.n,
            self.m,
            self.budget.map_or_else(String::new, |b| b.to_string()),
            self.runtime_ms,
            self.expected_utility,
            self.max_payment,
            self.seed
        )
    }
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Run every (method, parameter point) combination `repetitions` times.
/// Rows come back sorted by (method, n, m, budget); repetitions of the same
/// point stay in execution order.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
    let n_values: Vec<usize> = match config.family {
        Family::Substitutes => config.n_values.clone(),
        Family::ThreeBundles => vec![9],
    };
    let budget_sweep = !config.budgets.is_empty();
    let money_points: Vec<(Money, Option<Money>)> = if budget_sweep {
        config.budgets.iter().map(|&b| (Money(b), Some(Money(b)))).collect()
    } else {
        config.endowments.iter().map(|&m| (Money(m), None)).collect()
    };
    if money_points.is_empty() && config.methods.iter().any(|&m| m != Method::Quasilinear) {
        return Err(Error::InvalidArgument(
            "config needs a non-empty \"endowments\" or \"budgets\" sweep for the requested \
             methods"
                .into(),
        ));
    }
    for &method in &config.methods {
        if budget_sweep {
            continue;
        }
        if method == Method::Prorated || method == Method::Trivial {
            return Err(Error::InvalidArgument(format!(
                "method \"{method}\" needs a \"budgets\" sweep"
            )));
        }
    }

    let mut rows = Vec::new();
    for &n in &n_values {
        let instance: ProblemInstance<f64> = match config.family {
            Family::Substitutes => gen_substitutes(n)?,
            Family::ThreeBundles => gen_three_bundles(),
        };
        // Quasilinear work is independent of the money axis; still emit one
        // row per point so sweeps stay rectangular.
        let points: &[(Money, Option<Money>)] = if money_points.is_empty() {
            &[(Money::ZERO, None)]
        } else {
            &money_points
        };
        for &(m, budget) in points {
            for &method in &config.methods {
                for _ in 0..config.repetitions {
                    rows.push(run_point(config, &instance, method, n, m, budget)?);
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        (a.method, a.n, a.m, a.budget)
            .partial_cmp(&(b.method, b.n, b.m, b.budget))
            .expect("row keys are totally ordered")
    });
    Ok(rows)
}

fn run_point(
    config: &BenchConfig,
    instance: &ProblemInstance<f64>,
    method: Method,
    n: usize,
    m: Money,
    budget: Option<Money>,
) -> Result<BenchRow, Error> {
    let identity = MoneyUtility::Identity;
    let (runtime_ms, report) = match method {
        Method::Quasilinear => {
            let start = Instant::now();
            let strategy = solve_quasilinear(instance)?;
            let runtime = elapsed_ms(start);
            (runtime, evaluate(config, instance, &strategy)?)
        }
        Method::Additive => {
            let start = Instant::now();
            let strategy =
                solve_additive_with_cap(instance, m, &identity, config.additive_cap.into())?;
            let runtime = elapsed_ms(start);
            let policy = AdditivePolicy::new(&strategy);
            (runtime, evaluate(config, instance, &policy)?)
        }
        Method::Prorated => {
            let b = budget.expect("prorated points carry a budget");
            let start = Instant::now();
            let pi = solve_quasilinear(instance)?;
            let strategy = solve_prorated(instance, &pi, b)?;
            let runtime = elapsed_ms(start);
            (runtime, evaluate(config, instance, &strategy)?)
        }
        Method::Trivial => {
            let b = budget.expect("trivial points carry a budget");
            let start = Instant::now();
            let pi = solve_quasilinear(instance)?;
            let runtime = elapsed_ms(start);
            let policy = trivial_policy(&pi, b);
            (runtime, evaluate(config, instance, &policy)?)
        }
    };
    Ok(BenchRow {
        method,
        n,
        m,
        budget,
        runtime_ms,
        expected_utility: report.0,
        max_payment: report.1,
        seed: config.seed,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Quasi-linear expected utility and worst-case payment of a policy. Exact
/// whenever path enumeration is affordable; the Monte Carlo fallback reports
/// the strategy's own worst case as max payment.
fn evaluate<P: ExecutionPolicy + ?Sized>(
    config: &BenchConfig,
    instance: &ProblemInstance<f64>,
    policy: &P,
) -> Result<(f64, Money), Error> {
    if instance.item_count() <= 12 {
        let report = exact_eval(instance, policy, &UtilityMode::QuasiLinear)?;
        Ok((report.expected_utility, report.max_payment))
    } else {
        let report = monte_carlo(
            instance,
            policy,
            &UtilityMode::QuasiLinear,
            MC_FALLBACK_SAMPLES,
            config.seed,
        )?;
        Ok((report.mean, max_payment_of(instance, policy)))
    }
}

/// Worst-case total payment over all outcome combinations, treating every
/// placed bid as payable.
fn max_payment_of<P: ExecutionPolicy + ?Sized>(
    instance: &ProblemInstance<f64>,
    policy: &P,
) -> Money {
    fn walk<P: ExecutionPolicy + ?Sized>(
        policy: &P,
        n: usize,
        stage: usize,
        subset: u32,
        paid: Money,
    ) -> Money {
        if stage == n {
            return paid;
        }
        let z = policy.bid(stage, subset, paid);
        let win = walk(policy, n, stage + 1, subset | (1 << stage), paid + z);
        let lose = walk(policy, n, stage + 1, subset, paid);
        win.max(lose)
    }
    walk(policy, instance.item_count(), 0, 0, Money::ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_method_list_yields_a_bare_header() {
        let config = BenchConfig {
            family: Family::ThreeBundles,
            methods: vec![],
            n_values: vec![],
            endowments: vec![],
            budgets: vec![50],
            repetitions: 1,
            seed: 1,
            additive_cap: AdditiveCapConfig::MaxSupport,
        };
        let rows = run_bench(&config).unwrap();
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn budget_methods_require_a_budget_sweep() {
        let config = BenchConfig {
            family: Family::ThreeBundles,
            methods: vec![Method::Trivial],
            n_values: vec![],
            endowments: vec![100],
            budgets: vec![],
            repetitions: 1,
            seed: 1,
            additive_cap: AdditiveCapConfig::MaxSupport,
        };
        assert!(matches!(
            run_bench(&config),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_timing_columns_are_reproducible() {
        let config = BenchConfig {
            family: Family::Substitutes,
            methods: vec![Method::Quasilinear, Method::Additive],
            n_values: vec![2, 4],
            endowments: vec![40],
            budgets: vec![],
            repetitions: 1,
            seed: 7,
            additive_cap: AdditiveCapConfig::MaxSupport,
        };
        let a = run_bench(&config).unwrap();
        let b = run_bench(&config).unwrap();
        let strip = |rows: &[BenchRow]| {
            rows.iter()
                .map(|r| (r.method, r.n, r.m, r.budget, r.expected_utility, r.max_payment, r.seed))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        // Canonical order: additive rows sort before quasilinear ones.
        assert!(a.windows(2).all(|w| (w[0].method, w[0].n) <= (w[1].method, w[1].n)));
    }

    #[test]
    fn config_defaults_apply() {
        let config = BenchConfig::from_json(
            r#"{"family": "three_bundles", "methods": ["prorated"], "budgets": [60]}"#,
        )
        .unwrap();
        assert_eq!(config.repetitions, 1);
        assert_eq!(config.seed, 42);
        assert_eq!(config.additive_cap, AdditiveCapConfig::MaxSupport);
        let rows = run_bench(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 9);
        assert!(rows[0].max_payment <= Money(60));
    }
}
