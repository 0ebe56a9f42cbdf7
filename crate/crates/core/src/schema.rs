//! JSON wire formats: problem instances, solved strategies, and evaluation
//! reports. The wire structs are concrete (`u64` money, `f64` reals);
//! conversion to and from the generic domain types happens here so the rest
//! of the crate never touches serde.

use serde::{Deserialize, Serialize};

use crate::additive::AStrategy;
use crate::budget::ProratedStrategy;
use crate::error::Error;
use crate::eval::{EvalReport, ExecutionPolicy, FixedBidPolicy, McReport};
use crate::model::{
    ItemSet, OpponentBidModel, ProblemInstance, Valuation, ValuationKind,
};
use crate::money::Money;
use crate::quasilinear::QStrategy;
use crate::scalar::Scalar;

// ---------------------------------------------------------------------------
// Instance files

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub items: usize,
    pub distributions: Vec<DistributionFile>,
    pub valuation: ValuationFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endowment: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    /// `[value, probability]` pairs for the highest opposing bid.
    pub pmf: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ValuationFile {
    #[serde(rename = "bundles")]
    Bundles { bundles: Vec<BundleFile> },
    #[serde(rename = "table")]
    Table { entries: Vec<(u32, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleFile {
    pub items: Vec<u8>,
    pub value: f64,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("instance file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance file serializes")
    }

    pub fn to_instance<S: Scalar>(&self) -> Result<ProblemInstance<S>, Error> {
        if self.items != self.distributions.len() {
            return Err(Error::Schema(format!(
                "\"items\" is {} but {} distributions are listed",
                self.items,
                self.distributions.len()
            )));
        }
        let models = self
            .distributions
            .iter()
            .map(|d| {
                let pmf = d
                    .pmf
                    .iter()
                    .map(|&(value, prob)| (Money(value), from_f64::<S>(prob)))
                    .collect();
                OpponentBidModel::new(pmf)
            })
            .collect();
        let valuation = match &self.valuation {
            ValuationFile::Bundles { bundles } => {
                let list = bundles
                    .iter()
                    .map(|b| {
                        let mut mask: ItemSet = 0;
                        for &i in &b.items {
                            if usize::from(i) >= self.items {
                                return Err(Error::Schema(format!(
                                    "bundle refers to item {i} but the instance has {} items",
                                    self.items
                                )));
                            }
                            mask |= 1u32 << i;
                        }
                        Ok((mask, from_f64::<S>(b.value)))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Valuation::bundles(self.items, list)
            }
            ValuationFile::Table { entries } => {
                if self.items > 24 {
                    return Err(Error::Schema(format!(
                        "a table valuation over {} items is not representable",
                        self.items
                    )));
                }
                let size = 1usize << self.items;
                let mut values = vec![None; size];
                for &(mask, value) in entries {
                    let slot = values.get_mut(mask as usize).ok_or_else(|| {
                        Error::Schema(format!("table mask {mask:#x} out of range"))
                    })?;
                    if slot.is_some() {
                        return Err(Error::Schema(format!("table mask {mask:#x} listed twice")));
                    }
                    *slot = Some(from_f64::<S>(value));
                }
                let values = values
                    .into_iter()
                    .enumerate()
                    .map(|(mask, v)| {
                        v.ok_or_else(|| Error::Schema(format!("table is missing mask {mask:#x}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Valuation::table(self.items, values)
            }
        };
        let mut instance = ProblemInstance::new(models, valuation);
        instance.endowment = self.endowment.map(Money);
        instance.budget = self.budget.map(Money);
        Ok(instance)
    }

    pub fn from_instance<S: Scalar>(instance: &ProblemInstance<S>) -> Self {
        let distributions = instance
            .models
            .iter()
            .map(|m| DistributionFile {
                pmf: m.pmf().iter().map(|&(v, p)| (v.0, to_f64(p))).collect(),
            })
            .collect();
        let valuation = match instance.valuation.kind() {
            ValuationKind::Bundles(list) => ValuationFile::Bundles {
                bundles: list
                    .iter()
                    .map(|&(mask, value)| BundleFile {
                        items: (0..32).filter(|i| mask & (1 << i) != 0).collect(),
                        value: to_f64(value),
                    })
                    .collect(),
            },
            ValuationKind::Table(values) => ValuationFile::Table {
                entries: values
                    .iter()
                    .enumerate()
                    .map(|(mask, &v)| (mask as u32, to_f64(v)))
                    .collect(),
            },
        };
        InstanceFile {
            items: instance.item_count(),
            distributions,
            valuation,
            endowment: instance.endowment.map(|m| m.0),
            budget: instance.budget.map(|m| m.0),
        }
    }
}

// ---------------------------------------------------------------------------
// Strategy files

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum StrategyFile {
    #[serde(rename = "quasilinear")]
    Quasilinear { stages: Vec<SubsetStageFile> },
    #[serde(rename = "additive")]
    Additive {
        endowment: u64,
        stages: Vec<MoneyStageFile>,
    },
    #[serde(rename = "prorated")]
    Prorated {
        budget: u64,
        certified_max_payment: u64,
        stages: Vec<CappedStageFile>,
    },
    #[serde(rename = "trivial")]
    Trivial {
        budget: u64,
        stages: Vec<SubsetStageFile>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsetStageFile {
    pub t: usize,
    pub entries: Vec<SubsetEntryFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsetEntryFile {
    pub mask: u32,
    pub bid: u64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MoneyStageFile {
    pub t: usize,
    pub entries: Vec<MoneyEntryFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MoneyEntryFile {
    pub mask: u32,
    pub money: u64,
    pub bid: u64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CappedStageFile {
    pub t: usize,
    pub entries: Vec<CappedEntryFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CappedEntryFile {
    pub mask: u32,
    pub bid: u64,
    pub value: f64,
    pub z_max: u64,
}

/// Compact form emitted by `solve --root-only` for large additive tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdditiveRootFile {
    pub mode: String,
    pub endowment: u64,
    pub root_value: f64,
    pub root_bid: u64,
}

impl StrategyFile {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("strategy file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy file serializes")
    }

    pub fn from_quasilinear<S: Scalar>(strategy: &QStrategy<S>) -> Self {
        StrategyFile::Quasilinear {
            stages: subset_stages(strategy.item_count(), |t, mask| {
                (strategy.bid(t, mask), strategy.value(t, mask))
            }),
        }
    }

    pub fn from_trivial<S: Scalar>(pi: &QStrategy<S>, budget: Money) -> Self {
        StrategyFile::Trivial {
            budget: budget.0,
            stages: subset_stages(pi.item_count(), |t, mask| {
                (pi.bid(t, mask), pi.value(t, mask))
            }),
        }
    }

    pub fn from_prorated<S: Scalar>(strategy: &ProratedStrategy<S>) -> Self {
        let stages = (0..strategy.item_count())
            .map(|t| CappedStageFile {
                t,
                entries: (0..1u32 << t)
                    .map(|mask| CappedEntryFile {
                        mask,
                        bid: strategy.bid(t, mask).0,
                        value: to_f64(strategy.value(t, mask)),
                        z_max: strategy.cap(t, mask).0,
                    })
                    .collect(),
            })
            .collect();
        StrategyFile::Prorated {
            budget: strategy.budget().0,
            certified_max_payment: strategy.certified_max_payment().0,
            stages,
        }
    }

    pub fn from_additive<S: Scalar>(strategy: &AStrategy<S>) -> Self {
        let m = strategy.endowment();
        let stages = (0..strategy.item_count())
            .map(|t| MoneyStageFile {
                t,
                entries: (0..1u32 << t)
                    .flat_map(|mask| {
                        (0..=m.0).map(move |d| (mask, d))
                    })
                    .map(|(mask, d)| MoneyEntryFile {
                        mask,
                        money: d,
                        bid: strategy.bid(t, mask, Money(d)).0,
                        value: to_f64(strategy.value(t, mask, Money(d))),
                    })
                    .collect(),
            })
            .collect();
        StrategyFile::Additive {
            endowment: m.0,
            stages,
        }
    }

    /// Rebuild an executable policy; the strategy's own metadata (budget,
    /// endowment) rides along so callers can pick the matching utility mode.
    pub fn load(&self) -> Result<LoadedStrategy, Error> {
        match self {
            StrategyFile::Quasilinear { stages } => Ok(LoadedStrategy::Quasilinear {
                bids: load_subset_bids(stages)?,
            }),
            StrategyFile::Trivial { budget, stages } => Ok(LoadedStrategy::Trivial {
                budget: Money(*budget),
                base_bids: load_subset_bids(stages)?,
            }),
            StrategyFile::Prorated {
                budget,
                certified_max_payment,
                stages,
            } => {
                let bids = stages_to_tables(stages.len(), stages.iter().map(|s| {
                    (s.t, s.entries.iter().map(|e| (e.mask, Money(e.bid))).collect())
                }))?;
                Ok(LoadedStrategy::Prorated {
                    budget: Money(*budget),
                    certified_max_payment: Money(*certified_max_payment),
                    bids: FixedBidPolicy { bids },
                })
            }
            StrategyFile::Additive { endowment, stages } => {
                let n = stages.len();
                let m = Money(*endowment);
                let width = *endowment as usize + 1;
                let mut tables = Vec::with_capacity(n);
                for (t, stage) in stages.iter().enumerate() {
                    if stage.t != t {
                        return Err(Error::Schema(format!(
                            "stage {t} is labeled t = {}",
                            stage.t
                        )));
                    }
                    let mut row = vec![None; (1usize << t) * width];
                    for e in &stage.entries {
                        let idx = e.mask as usize * width + e.money as usize;
                        let slot = row.get_mut(idx).ok_or_else(|| {
                            Error::Schema(format!(
                                "stage {t} entry (mask {:#x}, money {}) out of range",
                                e.mask, e.money
                            ))
                        })?;
                        *slot = Some(Money(e.bid));
                    }
                    let row = row
                        .into_iter()
                        .enumerate()
                        .map(|(idx, b)| {
                            b.ok_or_else(|| {
                                Error::Schema(format!("stage {t} is missing entry {idx}"))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    tables.push(row);
                }
                Ok(LoadedStrategy::Additive {
                    endowment: m,
                    table: LoadedAdditiveBids {
                        endowment: m,
                        bids: tables,
                    },
                })
            }
        }
    }
}

fn subset_stages<S: Scalar, F: Fn(usize, u32) -> (Money, S)>(
    n: usize,
    read: F,
) -> Vec<SubsetStageFile> {
    (0..n)
        .map(|t| SubsetStageFile {
            t,
            entries: (0..1u32 << t)
                .map(|mask| {
                    let (bid, value) = read(t, mask);
                    SubsetEntryFile {
                        mask,
                        bid: bid.0,
                        value: to_f64(value),
                    }
                })
                .collect(),
        })
        .collect()
}

fn load_subset_bids(stages: &[SubsetStageFile]) -> Result<FixedBidPolicy, Error> {
    let bids = stages_to_tables(stages.len(), stages.iter().map(|s| {
        (s.t, s.entries.iter().map(|e| (e.mask, Money(e.bid))).collect())
    }))?;
    Ok(FixedBidPolicy { bids })
}

fn stages_to_tables(
    n: usize,
    stages: impl Iterator<Item = (usize, Vec<(u32, Money)>)>,
) -> Result<Vec<Vec<Money>>, Error> {
    let mut tables: Vec<Option<Vec<Money>>> = vec![None; n];
    for (t, entries) in stages {
        if t >= n {
            return Err(Error::Schema(format!("stage label t = {t} out of range")));
        }
        let mut row = vec![None; 1 << t];
        for (mask, bid) in entries {
            let slot = row
                .get_mut(mask as usize)
                .ok_or_else(|| Error::Schema(format!("stage {t} mask {mask:#x} out of range")))?;
            if slot.is_some() {
                return Err(Error::Schema(format!("stage {t} mask {mask:#x} listed twice")));
            }
            *slot = Some(bid);
        }
        let row = row
            .into_iter()
            .enumerate()
            .map(|(mask, b)| {
                b.ok_or_else(|| Error::Schema(format!("stage {t} is missing mask {mask:#x}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if tables[t].is_some() {
            return Err(Error::Schema(format!("stage {t} listed twice")));
        }
        tables[t] = Some(row);
    }
    tables
        .into_iter()
        .enumerate()
        .map(|(t, row)| row.ok_or_else(|| Error::Schema(format!("stage {t} is missing"))))
        .collect()
}

/// An executable strategy reconstructed from a file.
#[derive(Debug)]
pub enum LoadedStrategy {
    Quasilinear {
        bids: FixedBidPolicy,
    },
    Additive {
        endowment: Money,
        table: LoadedAdditiveBids,
    },
    Prorated {
        budget: Money,
        certified_max_payment: Money,
        bids: FixedBidPolicy,
    },
    Trivial {
        budget: Money,
        base_bids: FixedBidPolicy,
    },
}

impl LoadedStrategy {
    pub fn item_count(&self) -> usize {
        match self {
            LoadedStrategy::Quasilinear { bids } => bids.item_count(),
            LoadedStrategy::Additive { table, .. } => table.bids.len(),
            LoadedStrategy::Prorated { bids, .. } => bids.item_count(),
            LoadedStrategy::Trivial { base_bids, .. } => base_bids.item_count(),
        }
    }
}

/// Bid tables over (subset, remaining money), reloaded from an additive
/// strategy file.
#[derive(Debug)]
pub struct LoadedAdditiveBids {
    endowment: Money,
    bids: Vec<Vec<Money>>,
}

impl ExecutionPolicy for LoadedAdditiveBids {
    fn bid(&self, stage: usize, subset: ItemSet, paid: Money) -> Money {
        let remaining = self
            .endowment
            .checked_sub(paid)
            .expect("payments under an additive strategy never exceed the endowment");
        let width = self.endowment.0 as usize + 1;
        self.bids[stage][subset as usize * width + remaining.0 as usize]
    }
}

// ---------------------------------------------------------------------------
// Evaluation reports

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReportFile {
    pub expected_utility: f64,
    pub max_payment: u64,
    pub path_count: u64,
    pub probability_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle_win_probabilities: Option<Vec<(u32, f64)>>,
}

impl EvalReportFile {
    pub fn from_report<S: Scalar>(report: &EvalReport<S>) -> Self {
        Self {
            expected_utility: to_f64(report.expected_utility),
            max_payment: report.max_payment.0,
            path_count: report.path_count,
            probability_mass: to_f64(report.probability_mass),
            bundle_win_probabilities: report
                .bundle_win_probabilities
                .as_ref()
                .map(|v| v.iter().map(|&(b, p)| (b, to_f64(p))).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McReportFile {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McReportFile {
    pub fn from_report<S: Scalar>(report: &McReport<S>) -> Self {
        Self {
            mean: to_f64(report.mean),
            std_error: to_f64(report.std_error),
            samples: report.samples,
            seed: report.seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn from_f64<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("value fits scalar")
}

fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("value converts to f64")
}
