use std::sync::Arc;

use contextuality::behavior::Behavior;
use contextuality::device::{default_device, overlapped_device, Device, DeviceConfig, Press, SelectionPolicy};
use contextuality::empirical::{single_frequency, DataSource};
use contextuality::polytope::{
    certificate_is_sound, decide_noncontextual, verify_global_section, DecisionOptions, NCDecision,
};
use contextuality::rational::{from_int, ratio, Prob};
use contextuality::realization::{
    classical_to_diagonal, classical_to_quantum, nc_to_classical, verify_classical, verify_quantum, DEFAULT_TOLERANCE,
};
use contextuality::scenario::{
    ContextId, MeasurementId, OutcomeId, Scenario, ScenarioDoc, DEFAULT_ENUMERATION_LIMIT,
};
use num_traits::Signed;
use proptest::prelude::*;

const TOP_ID: OutcomeId = OutcomeId(1);

fn cycle(n: usize) -> Arc<Scenario> {
    Arc::new(Scenario::n_cycle(n).unwrap())
}

/// Two three-measurement contexts sharing C.
fn bowtie() -> Arc<Scenario> {
    let doc = ScenarioDoc {
        version: 1,
        measurements: ["A", "B", "C", "D", "E"].map(String::from).to_vec(),
        outcomes: vec!["⊥".into(), "⊤".into()],
        contexts: vec![["A", "B", "C"].map(String::from).to_vec(), ["C", "D", "E"].map(String::from).to_vec()],
    };
    Arc::new(Scenario::validate(&doc).unwrap())
}

/// Each table is an independent normalized vector of positive integer weights.
fn behavior_from_weights(s: Arc<Scenario>, weights: &[Vec<u32>]) -> Behavior {
    let tables = weights
        .iter()
        .map(|w| {
            let total: i64 = w.iter().map(|&x| x as i64).sum();
            w.iter().map(|&x| ratio(x as i64, total)).collect()
        })
        .collect();
    Behavior::new(s, tables).unwrap()
}

fn random_tables(n: usize) -> impl Strategy<Value = Behavior> {
    prop::collection::vec(prop::collection::vec(1u32..20, 4), n).prop_map(move |w| behavior_from_weights(cycle(n), &w))
}

fn random_nc_mixture(n: usize) -> impl Strategy<Value = Behavior> {
    prop::collection::vec((0usize..1 << n, 1i64..10), 1..5).prop_map(move |parts| {
        let s = cycle(n);
        let total: i64 = parts.iter().map(|(_, w)| w).sum();
        let vertices: Vec<Behavior> =
            parts.iter().map(|(t, _)| Behavior::deterministic(s.clone(), &s.global_assignment(*t))).collect();
        let mix: Vec<(Prob, &Behavior)> = parts.iter().zip(&vertices).map(|((_, w), v)| (ratio(*w, total), v)).collect();
        Behavior::mixture(&mix).unwrap()
    })
}

/// Nondisturbing n-cycle behavior from ±1 expectations: marginals `e_i` on a
/// quarter grid and correlations `c_i` on an eighth of their feasible range,
/// `|e_i + e_(i+1)| - 1 <= c_i <= 1 - |e_i - e_(i+1)|`.
fn nondisturbing_cycle(n: usize) -> impl Strategy<Value = (Behavior, Vec<Prob>)> {
    (prop::collection::vec(-4i64..=4, n), prop::collection::vec(0i64..=8, n)).prop_map(move |(e, u)| {
        let e: Vec<Prob> = e.into_iter().map(|k| ratio(k, 4)).collect();
        let one = from_int(1);
        let c: Vec<Prob> = (0..n)
            .map(|i| {
                let (x, y) = (&e[i], &e[(i + 1) % n]);
                let lo = (x + y).abs() - &one;
                let hi = &one - (x - y).abs();
                &lo + (hi - &lo) * ratio(u[i], 8)
            })
            .collect();
        let tables = (0..n)
            .map(|i| {
                let (x, y) = (&e[i], &e[(i + 1) % n]);
                // Lexicographic order (⊥,⊥), (⊥,⊤), (⊤,⊥), (⊤,⊤) with ⊥ = -1, ⊤ = +1.
                [(-1, -1), (-1, 1), (1, -1), (1, 1)]
                    .iter()
                    .map(|&(a, b)| (&one + x * from_int(a) + y * from_int(b) + &c[i] * from_int(a * b)) / from_int(4))
                    .collect()
            })
            .collect();
        (Behavior::new(cycle(n), tables).unwrap(), c)
    })
}

/// Independent criterion for nondisturbing n-cycle behaviors: noncontextual
/// iff every sign pattern with an odd number of minus signs keeps
/// `Σ γ_i c_i <= n - 2`.
fn cycle_criterion(c: &[Prob]) -> bool {
    let n = c.len();
    let limit = from_int(n as i64 - 2);
    (0u32..1 << n).filter(|mask| mask.count_ones() % 2 == 1).all(|mask| {
        let sum: Prob = (0..n).map(|i| if mask >> i & 1 == 1 { -c[i].clone() } else { c[i].clone() }).sum();
        sum <= limit
    })
}

fn assert_decision_is_justified(b: &Behavior) -> Result<bool, TestCaseError> {
    match decide_noncontextual(b, DecisionOptions::default()).unwrap() {
        NCDecision::Noncontextual { witness } => {
            prop_assert!(verify_global_section(b, &witness).unwrap().is_global_section());
            Ok(true)
        }
        NCDecision::Contextual { certificate, .. } => {
            prop_assert!(certificate_is_sound(&certificate, b, DEFAULT_ENUMERATION_LIMIT).unwrap());
            Ok(false)
        }
    }
}

fn within_sigmas(freq: f64, p: f64, n: u64, k: f64) -> bool {
    (freq - p).abs() <= k * (p * (1.0 - p) / n as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginals_chain(
        weights in prop::collection::vec(prop::collection::vec(1u32..20, 8), 2),
        ctx in 0usize..2,
        outer in 1u8..8,
        inner in 1u8..8,
    ) {
        let s = bowtie();
        let b = behavior_from_weights(s.clone(), &weights);
        let members = s.contexts()[ctx].clone();
        let pick = |mask: u8| -> Vec<MeasurementId> {
            members.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, m)| *m).collect()
        };
        let (outer, inner) = (pick(outer), pick(outer & inner));
        prop_assume!(!inner.is_empty());
        let ctx = ContextId(ctx);
        let chained = b.marginalize(ctx, &outer).unwrap().marginalize(&s, &inner).unwrap();
        let direct = b.marginalize(ctx, &inner).unwrap();
        prop_assert_eq!(chained, direct);
    }

    #[test]
    fn decisions_on_arbitrary_tables_are_justified(b in (3usize..=5).prop_flat_map(random_tables)) {
        let noncontextual = assert_decision_is_justified(&b)?;
        if noncontextual {
            prop_assert!(b.check_nondisturbance().is_nondisturbing());
        }
    }

    #[test]
    fn decisions_match_the_cycle_criterion((b, c) in (3usize..=6).prop_flat_map(nondisturbing_cycle)) {
        prop_assert!(b.check_nondisturbance().is_nondisturbing());
        let noncontextual = assert_decision_is_justified(&b)?;
        prop_assert_eq!(noncontextual, cycle_criterion(&c));
    }

    #[test]
    fn noncontextual_implies_nondisturbing(b in (3usize..=6).prop_flat_map(random_nc_mixture)) {
        prop_assert!(b.check_nondisturbance().is_nondisturbing());
        prop_assert!(assert_decision_is_justified(&b)?);
    }

    #[test]
    fn realization_chain_reproduces_the_behavior(b in (3usize..=5).prop_flat_map(random_nc_mixture)) {
        let decision = decide_noncontextual(&b, DecisionOptions::default()).unwrap();
        let classical = nc_to_classical(decision.witness().unwrap());
        prop_assert!(verify_classical(&classical, &b).unwrap().passed());
        prop_assert_eq!(&classical_to_diagonal(&classical).born_behavior(), &b);
        let report = verify_quantum(&classical_to_quantum(&classical), &b, DEFAULT_TOLERANCE).unwrap();
        prop_assert!(report.passed(), "{:?}", report.failure);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn single_presses_are_fair_in_both_modes(seed: u64, window in 0usize..10) {
        const N: u64 = 10_000;
        for config in [default_device(), overlapped_device(window)] {
            let device = Device::new(config).unwrap();
            let empirical = device.run_experiment(&device.single_schedule(), seed, N).unwrap();
            for m in 0..5 {
                let f = single_frequency(&empirical, MeasurementId(m), TOP_ID).unwrap();
                prop_assert!(within_sigmas(f, 0.5, N, 4.0), "A{} reads ⊤ with frequency {}", m, f);
            }
        }
    }

    #[test]
    fn forcing_the_other_context_keeps_the_marginal(seed: u64) {
        const N: u64 = 10_000;
        let device = Device::new(DeviceConfig { selection: SelectionPolicy::AgentChosen, ..default_device() }).unwrap();
        for context in [ContextId(0), ContextId(4)] {
            let press = Press::Single { measurement: MeasurementId(0), context: Some(context) };
            let empirical = device.run_experiment(&[press], seed, N).unwrap();
            let f = single_frequency(&empirical, MeasurementId(0), TOP_ID).unwrap();
            prop_assert!(within_sigmas(f, 0.5, N, 3.0), "A0 via {} reads ⊤ with frequency {}", context, f);
        }
    }

    #[test]
    fn sequential_outcomes_are_independent_fair_bits(seed: u64) {
        const N: u64 = 10_000;
        let device = Device::new(default_device()).unwrap();
        let empirical = device.run_experiment(&device.sequential_schedule(), seed, N).unwrap();
        for ctx in device.scenario().context_ids() {
            let counts = empirical.counts(DataSource::Sequential, ctx);
            prop_assert!(counts.iter().all(|&k| k > 0));
            for &k in counts {
                prop_assert!(within_sigmas(k as f64 / N as f64, 0.25, N, 4.0), "{} counts {:?}", ctx, counts);
            }
        }
    }
}

#[test]
fn nondisturbing_generator_reaches_both_verdicts() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strategy = (3usize..=6).prop_flat_map(nondisturbing_cycle);
    let verdicts: Vec<bool> =
        (0..300).map(|_| cycle_criterion(&strategy.new_tree(&mut runner).unwrap().current().1)).collect();
    let contextual = verdicts.iter().filter(|v| !**v).count();
    assert!(contextual > 0 && contextual < verdicts.len(), "{contextual} of {} contextual", verdicts.len());
    assert!(!cycle_criterion(&[from_int(-1), from_int(-1), from_int(-1), from_int(-1), from_int(-1)]));
}
