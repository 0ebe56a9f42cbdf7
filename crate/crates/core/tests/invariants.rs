//! Cross-module property tests. Instances are generated with dyadic
//! probabilities (multiples of 1/16) and small integer supports and values,
//! so every intermediate product in the solvers is exact in `f64`; value
//! identities can then be checked tightly and bid tables bit for bit.

use proptest::prelude::*;

use seqbid::{
    additive_state_count, bid_upper_bound, exact_eval, monte_carlo, prepayment, q_value,
    solve_additive, solve_prorated, solve_quasilinear, trivial_policy, AStrategy, FixedBidPolicy,
    Instance64, Money, MoneyUtility, OpponentBidModel, ProblemInstance, QState, QStrategy,
    UtilityMode, Valuation,
};

const TOL: f64 = 1e-9;
const DENOM: u64 = 16;

fn dyadic_model(max_value: u64) -> impl Strategy<Value = OpponentBidModel<f64>> {
    (1usize..=5).prop_flat_map(move |k| {
        let values = proptest::sample::subsequence((0..=max_value).collect::<Vec<_>>(), k);
        let cuts = proptest::sample::subsequence((1..DENOM).collect::<Vec<_>>(), k - 1);
        (values, cuts).prop_map(|(values, cuts)| {
            let mut bounds = vec![0u64];
            bounds.extend(cuts);
            bounds.push(DENOM);
            let pmf = values
                .into_iter()
                .zip(bounds.windows(2))
                .map(|(v, w)| (Money(v), (w[1] - w[0]) as f64 / DENOM as f64))
                .collect();
            OpponentBidModel::new(pmf)
        })
    })
}

fn bundle_valuation(n: usize) -> impl Strategy<Value = Valuation<f64>> {
    proptest::collection::vec((1u32..(1 << n), 0u64..=16), 1..=3)
        .prop_map(move |bundles| {
            Valuation::bundles(
                n,
                bundles.into_iter().map(|(b, v)| (b, v as f64)).collect(),
            )
        })
}

fn table_valuation(n: usize) -> impl Strategy<Value = Valuation<f64>> {
    proptest::collection::vec(0u64..=16, (1 << n) - 1).prop_map(move |mut tail| {
        let mut values = vec![0.0];
        values.extend(tail.drain(..).map(|v| v as f64));
        Valuation::table(n, values)
    })
}

fn instance(n: usize, max_support: u64) -> impl Strategy<Value = Instance64> {
    let valuation = prop_oneof![bundle_valuation(n), table_valuation(n)];
    (
        proptest::collection::vec(dyadic_model(max_support), n),
        valuation,
    )
        .prop_map(|(models, valuation)| ProblemInstance::new(models, valuation))
}

fn small_instance() -> impl Strategy<Value = Instance64> {
    (1usize..=5).prop_flat_map(|n| instance(n, 12))
}

/// Walk the outcomes that have positive probability under `pi` and hand each
/// visited state (with the money spent so far) to `check`.
fn walk_reachable(
    instance: &Instance64,
    pi: &QStrategy<f64>,
    state: (usize, u32, Money),
    check: &mut impl FnMut(usize, u32, Money),
) {
    let (t, mask, paid) = state;
    if t == instance.item_count() {
        return;
    }
    check(t, mask, paid);
    let z = pi.bid(t, mask);
    let f = instance.models[t].win_probability(z);
    if f > 0.0 {
        walk_reachable(instance, pi, (t + 1, mask | (1 << t), paid + z), check);
    }
    if f < 1.0 {
        walk_reachable(instance, pi, (t + 1, mask, paid), check);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn win_probability_is_a_cdf(model in dyadic_model(30)) {
        let mut prev = 0.0f64;
        for z in 0..=31u64 {
            let p = model.win_probability(Money(z));
            prop_assert!(p >= prev);
            prop_assert!((0.0..=1.0).contains(&p));
            prev = p;
        }
        // Dyadic masses sum exactly.
        prop_assert_eq!(model.win_probability(model.max_meaningful_bid()), 1.0);
        if let Some(lo) = model.min_support() {
            if lo > Money::ZERO {
                prop_assert_eq!(model.win_probability(lo - Money(1)), 0.0);
            }
        }
    }

    #[test]
    fn bundle_valuations_are_monotone(
        valuation in bundle_valuation(8),
        subset in 0u32..256,
        extra in 0u32..256,
    ) {
        let small = valuation.value(subset).unwrap();
        let large = valuation.value(subset | extra).unwrap();
        prop_assert!(small <= large);
    }

    #[test]
    fn bundle_and_table_forms_agree_on_every_subset(valuation in bundle_valuation(10)) {
        let table = valuation.to_table().unwrap();
        for mask in 0..1u32 << 10 {
            prop_assert_eq!(table.value(mask).unwrap(), valuation.value(mask).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quasilinear_solution_is_bellman_optimal(inst in small_instance()) {
        let strategy = solve_quasilinear(&inst).unwrap();
        let n = inst.item_count();

        // Stage t holds exactly 2^t states.
        for t in 0..=n {
            prop_assert_eq!(strategy.stage_values(t).len(), 1 << t);
        }
        prop_assert_eq!(strategy.state_count(), (1u64 << (n + 1)) - 1);

        for t in 0..n {
            let next = strategy.stage_values(t + 1);
            for mask in 0..1u32 << t {
                let state = QState::new(t, mask);
                let v = strategy.value(t, mask);
                // No bid in the searched range beats the chosen one, and the
                // chosen bid realizes the stored value.
                let cap = bid_upper_bound(&strategy, state)
                    .min(inst.models[t].max_meaningful_bid());
                prop_assert!(strategy.bid(t, mask) <= cap);
                for z in 0..=cap.0 {
                    prop_assert!(q_value(&inst, next, state, Money(z)) <= v + TOL);
                }
                let chosen = q_value(&inst, next, state, strategy.bid(t, mask));
                prop_assert!((chosen - v).abs() <= TOL);
            }
        }

        // For monotone (bundle) valuations the value never drops below
        // holding the current set: bidding zero from here on wins only
        // zero-priced extras, which cannot hurt. An arbitrary table can
        // break this: if an opponent's whole mass sits at 0, winning is
        // unavoidable even at a zero bid, and extra items may have negative
        // marginal value.
        if matches!(inst.valuation.kind(), seqbid::ValuationKind::Bundles(_)) {
            for t in 0..=n {
                for mask in 0..1u32 << t {
                    let held = inst.valuation.value(mask).unwrap();
                    prop_assert!(strategy.value(t, mask) >= held - TOL);
                }
            }
        }

        // Bellman consistency against the independent path enumerator.
        let report = exact_eval(&inst, &strategy, &UtilityMode::QuasiLinear).unwrap();
        prop_assert!((report.expected_utility - strategy.root_value()).abs() <= TOL);
        prop_assert!((report.probability_mass - 1.0).abs() <= TOL);
    }

    #[test]
    fn additive_matches_quasilinear_when_money_is_plentiful(inst in small_instance()) {
        let pi = solve_quasilinear(&inst).unwrap();
        let m: Money = inst
            .models
            .iter()
            .map(|model| model.max_meaningful_bid())
            .sum();
        let add = solve_additive(&inst, m, &MoneyUtility::Identity).unwrap();

        prop_assert!((add.root_value() - m.0 as f64 - pi.root_value()).abs() <= TOL);

        // Bid tables agree exactly on every state the optimal play reaches.
        let mut checked = 0usize;
        walk_reachable(&inst, &pi, (0, 0, Money::ZERO), &mut |t, mask, paid| {
            assert_eq!(add.bid(t, mask, m - paid), pi.bid(t, mask));
            checked += 1;
        });
        prop_assert!(checked >= 1);
    }

    #[test]
    fn additive_respects_the_money_on_hand(
        inst in small_instance(),
        m in 0u64..=12,
    ) {
        let m = Money(m);
        let add = solve_additive(&inst, m, &MoneyUtility::Identity).unwrap();
        let policy = seqbid::AdditivePolicy::new(&add);
        let report = exact_eval(
            &inst,
            &policy,
            &UtilityMode::Additive { endowment: m, utility: MoneyUtility::Identity },
        )
        .unwrap();
        prop_assert!(report.max_payment <= m);
        prop_assert!((report.expected_utility - add.root_value()).abs() <= TOL);

        // More money never hurts.
        let n = inst.item_count();
        for t in 0..=n {
            for mask in 0..1u32 << t {
                for d in 0..m.0 {
                    prop_assert!(
                        add.value(t, mask, Money(d)) <= add.value(t, mask, Money(d + 1)) + TOL
                    );
                }
            }
        }
    }

    #[test]
    fn prorated_is_feasible_and_bounded_by_the_optima(
        inst in small_instance(),
        budget in 0u64..=12,
    ) {
        let budget = Money(budget);
        let pi = solve_quasilinear(&inst).unwrap();
        let pro = solve_prorated(&inst, &pi, budget).unwrap();

        prop_assert!(pro.is_feasible());
        prop_assert!(pro.certified_max_payment() <= budget);
        let report = exact_eval(&inst, &pro, &UtilityMode::QuasiLinear).unwrap();
        prop_assert!(report.max_payment <= budget);
        prop_assert!((report.expected_utility - pro.root_value()).abs() <= TOL);

        // Never better than the unconstrained optimum, nor than the optimal
        // budget-feasible strategy.
        prop_assert!(pro.root_value() <= pi.root_value() + TOL);
        let add = solve_additive(&inst, budget, &MoneyUtility::Identity).unwrap();
        prop_assert!(pro.root_value() <= add.root_value() - budget.0 as f64 + TOL);

        // Cap bound: z_max <= z_opt * budget / (z_pre + z_opt) <= budget.
        for t in 0..inst.item_count() {
            for mask in 0..1u32 << t {
                let cap = pro.cap(t, mask);
                let z_opt = pi.bid(t, mask);
                if z_opt == Money::ZERO {
                    prop_assert_eq!(cap, Money::ZERO);
                } else {
                    let z_pre = prepayment(&pi, QState::new(t, mask));
                    prop_assert!(cap.0 <= z_opt.0 * budget.0 / (z_pre.0 + z_opt.0));
                }
                prop_assert!(cap <= budget);
                prop_assert!(pro.bid(t, mask) <= cap);
            }
        }
    }

    #[test]
    fn loose_budgets_leave_the_strategy_unconstrained(inst in small_instance()) {
        let pi = solve_quasilinear(&inst).unwrap();
        let unconstrained = exact_eval(&inst, &pi, &UtilityMode::QuasiLinear).unwrap();
        let pro = solve_prorated(&inst, &pi, unconstrained.max_payment).unwrap();

        prop_assert!((pro.root_value() - pi.root_value()).abs() <= TOL);
        walk_reachable(&inst, &pi, (0, 0, Money::ZERO), &mut |t, mask, _paid| {
            assert_eq!(pro.bid(t, mask), pi.bid(t, mask));
            assert_eq!(pro.value(t, mask), pi.value(t, mask));
        });
    }

    #[test]
    fn trivial_policy_never_overspends(
        inst in small_instance(),
        budget in 0u64..=12,
    ) {
        let pi = solve_quasilinear(&inst).unwrap();
        let policy = trivial_policy(&pi, Money(budget));
        let report = exact_eval(&inst, &policy, &UtilityMode::QuasiLinear).unwrap();
        prop_assert!(report.max_payment <= Money(budget));
    }

    #[test]
    fn path_probabilities_sum_to_one_for_arbitrary_policies(
        inst in small_instance(),
        bids in proptest::collection::vec(0u64..=20, 32),
    ) {
        let n = inst.item_count();
        let mut policy = FixedBidPolicy::zeros(n);
        let mut k = 0;
        for t in 0..n {
            for mask in 0..1usize << t {
                policy.bids[t][mask] = Money(bids[k % bids.len()]);
                k += 1;
            }
        }
        let report = exact_eval(&inst, &policy, &UtilityMode::QuasiLinear).unwrap();
        prop_assert!((report.probability_mass - 1.0).abs() <= TOL);
        prop_assert_eq!(report.path_count, 1u64 << n);
    }
}

/// Forward-reachability oracle for the additive state space: from
/// `(empty, m)`, any bid `z <= d` may win or lose. Counts distinct states
/// per stage and compares with the closed-form count.
#[test]
fn additive_state_count_matches_forward_reachability() {
    for n in 1..=4usize {
        for m in [0u64, 1, 5, 20] {
            let mut current: std::collections::BTreeSet<(u32, u64)> =
                std::iter::once((0u32, m)).collect();
            for t in 0..=n {
                assert_eq!(
                    current.len() as u64,
                    additive_state_count(n, Money(m), t),
                    "n={n} m={m} t={t}"
                );
                if t == n {
                    break;
                }
                let mut next = std::collections::BTreeSet::new();
                for &(mask, d) in &current {
                    for z in 0..=d {
                        next.insert((mask | (1 << t), d - z));
                    }
                    next.insert((mask, d));
                }
                current = next;
            }
        }
    }
}

/// Fixed-seed Monte Carlo convergence check. The 4-sigma band makes a seed
/// fail with probability < 1e-4; the five seeds below were verified once and
/// stay frozen, so the test is deterministic.
#[test]
fn monte_carlo_tracks_the_exact_value() {
    let model: OpponentBidModel<f64> = OpponentBidModel::new(vec![(Money(1), 0.5), (Money(2), 0.5)]);
    let instance = ProblemInstance::new(
        vec![model.clone(), model],
        Valuation::bundles(2, vec![(0b11, 4.0)]),
    );
    let pi = solve_quasilinear(&instance).unwrap();
    let exact = exact_eval(&instance, &pi, &UtilityMode::QuasiLinear).unwrap();
    for seed in [1u64, 2, 3, 4, 5] {
        let mc = monte_carlo(&instance, &pi, &UtilityMode::QuasiLinear, 40_000, seed).unwrap();
        assert!(
            (mc.mean - exact.expected_utility).abs() <= 4.0 * mc.std_error,
            "seed {seed}: mean {} vs exact {} (se {})",
            mc.mean,
            exact.expected_utility,
            mc.std_error
        );
    }
}

/// The additive table must agree with the quasi-linear one after the
/// money-axis shift on a hand-sized instance, state by state.
#[test]
fn additive_shift_identity_holds_statewise() {
    let model = OpponentBidModel::new(vec![(Money(1), 0.25), (Money(3), 0.75)]);
    let instance = ProblemInstance::new(
        vec![model.clone(), model.clone(), model],
        Valuation::bundles(3, vec![(0b101, 6.0), (0b010, 2.0)]),
    );
    let pi = solve_quasilinear(&instance).unwrap();
    let m = Money(9);
    let add: AStrategy<f64> = solve_additive(&instance, m, &MoneyUtility::Identity).unwrap();
    // With d large enough to cover every remaining support, the additive
    // value is the quasi-linear one plus d.
    for t in 0..=3usize {
        let needed: u64 = (t..3).map(|i| instance.models[i].max_meaningful_bid().0).sum();
        for mask in 0..1u32 << t {
            for d in needed..=m.0 {
                let shifted = add.value(t, mask, Money(d)) - d as f64;
                assert!(
                    (shifted - pi.value(t, mask)).abs() <= TOL,
                    "t={t} mask={mask:#b} d={d}"
                );
            }
        }
    }
}
