use std::collections::BTreeMap;

use proptest::prelude::*;
use xtalk_core::attack::{parse_attack_config, window_features, AttackParams};
use xtalk_core::defense::{
    apply_pad, evaluate_randomization, evaluate_scrambling, histogram, place, randomize_mapping,
    randomized_attack, sandbox_allocate, scramble_histogram, support_size, unscramble,
    AllocationPolicy, DefenseParams, FeedlineGrouping, MappingEnsemble, OneTimePad, Readout,
};
use xtalk_core::discriminator::{Discriminator, DiscriminatorKind, MatchedFilter};
use xtalk_core::experiment::{fit_discriminator, SimulatedSource};
use xtalk_core::sim::simulate_range;
use xtalk_core::{default_device, BitString, Outcome};

fn bits(n: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(0u8..2, n).prop_map(|b| BitString::from_bits(b).unwrap())
}

fn pad_case() -> impl Strategy<Value = (BitString, OneTimePad, BitString)> {
    (1usize..=12).prop_flat_map(|n| {
        (
            bits(n),
            prop::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n),
            bits(n),
        )
            .prop_flat_map(|(prep, qubits, other)| {
                let k = qubits.len();
                (Just(prep), bits(k), Just(qubits), Just(other))
            })
            .prop_map(|(prep, pad, qubits, other)| {
                (prep, OneTimePad::new(pad, qubits).unwrap(), other)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn pad_algebra((prep, pad, other) in pad_case()) {
        let physical = apply_pad(&prep, &pad).unwrap();
        prop_assert_eq!(&unscramble(&physical, &pad).unwrap(), &prep);
        for i in 0..prep.len() {
            let padded = pad.qubits.iter().position(|&q| q == i);
            let want = prep.get(i) ^ padded.map_or(0, |k| pad.pad.get(k));
            prop_assert_eq!(physical.get(i), want);
        }
        // XOR commutes with the pad: relative differences survive.
        let po = apply_pad(&other, &pad).unwrap();
        prop_assert_eq!(physical.xor(&po).unwrap(), prep.xor(&other).unwrap());

        let hist = histogram(&[prep.clone(), other.clone(), prep.clone()]);
        let scrambled = scramble_histogram(&hist, &pad).unwrap();
        prop_assert_eq!(support_size(&scrambled), support_size(&hist));
        prop_assert_eq!(scrambled.values().sum::<u64>(), 3);
        prop_assert_eq!(scramble_histogram(&scrambled, &pad).unwrap(), hist);
    }
}

#[test]
fn ghz_histogram_under_pad() {
    let b = |s: &str| s.parse::<BitString>().unwrap();
    let hist: BTreeMap<BitString, u64> = [(b("0000"), 500), (b("1111"), 500)].into();
    let pad = OneTimePad::new(b("1010"), vec![0, 1, 2, 3]).unwrap();
    let s = scramble_histogram(&hist, &pad).unwrap();
    assert_eq!(s, [(b("1010"), 500), (b("0101"), 500)].into());
    assert_eq!(scramble_histogram(&s, &pad).unwrap(), hist);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // The domination property holds for requests no larger than a group; a
    // request list of sevens and sixes is a counterexample otherwise.
    #[test]
    fn sandboxing_never_beats_unrestricted(requests in prop::collection::vec(1usize..=6, 1..=15)) {
        let g = FeedlineGrouping::uniform(9, 6);
        let s = sandbox_allocate(&requests, &g, AllocationPolicy::Sandboxed).unwrap();
        let u = sandbox_allocate(&requests, &g, AllocationPolicy::Unrestricted).unwrap();
        prop_assert!(s.used_qubits <= u.used_qubits);
        prop_assert!(s.utilization <= u.utilization);
        prop_assert_eq!(s.utilization, s.used_qubits as f64 / 54.0);

        let mut owner = vec![None; 54];
        let mut group_owner = [None; 9];
        for a in &s.assignments {
            prop_assert_eq!(a.groups.len(), 1);
            prop_assert_eq!(a.qubits.len(), a.request);
            let gi = a.groups[0];
            prop_assert!(group_owner[gi].replace(a.user).is_none());
            for &q in &a.qubits {
                prop_assert!(g.groups[gi].contains(&q));
                prop_assert!(owner[q].replace(a.user).is_none());
            }
        }
        let placed: usize = u.assignments.iter().map(|a| a.qubits.len()).sum();
        prop_assert_eq!(placed, u.used_qubits);
        prop_assert_eq!(s.assignments.len() + s.rejected.len(), requests.len());
    }
}

#[test]
fn sandbox_examples() {
    let g = FeedlineGrouping::uniform(9, 6);
    let s = sandbox_allocate(&[4, 4, 4], &g, AllocationPolicy::Sandboxed).unwrap();
    assert_eq!((s.used_qubits, s.groups_touched()), (12, 3));
    assert_eq!(s.utilization, 12.0 / 54.0);
    let s = sandbox_allocate(&[6], &g, AllocationPolicy::Sandboxed).unwrap();
    assert_eq!(s.assignments[0].groups, [0]);
    let s = sandbox_allocate(&[7], &g, AllocationPolicy::Sandboxed).unwrap();
    assert_eq!(s.rejected, [(0, 7)]);

    let mut buf = Vec::new();
    sandbox_allocate(&[4, 4, 4], &g, AllocationPolicy::Unrestricted)
        .unwrap()
        .write_csv(&mut buf)
        .unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("policy,user,request,group_ids,qubit_ids,utilization\n"));
    assert!(text.contains("unrestricted,1,4,0;1,4;5;6;7,"), "{text}");
}

fn small_setup(seed: u64) -> (SimulatedSource, Discriminator) {
    let source = SimulatedSource {
        device: default_device(),
        seed,
    };
    let preps: Vec<BitString> = BitString::all(5).collect();
    let disc = fit_discriminator(
        &source,
        &preps,
        0..200,
        DiscriminatorKind::MatchedFilter,
        &Default::default(),
    )
    .unwrap();
    (source, disc)
}

fn small_params() -> DefenseParams {
    DefenseParams {
        attack: AttackParams {
            window: 32,
            ..AttackParams::default()
        },
        windows_per_victim: 8,
    }
}

#[test]
fn ensemble_of_one_is_the_fixed_mapping() {
    let (source, disc) = small_setup(1);
    let readout = Readout {
        source: &source,
        discriminator: &disc,
    };
    let cfg = parse_attack_config("A12A4", 5).unwrap();
    let params = small_params();
    let ensemble = randomize_mapping(5, 1, 32, 8, 77).unwrap();
    let r = evaluate_randomization(&readout, &cfg, &params, &ensemble).unwrap();
    assert_eq!(r.n_assignments, 1);
    assert_eq!(r.fixed_accuracy, r.randomized_accuracy);

    let fixed = MappingEnsemble::round_robin(&[vec![0, 1, 2, 3, 4]], 32, 8).unwrap();
    let a = randomized_attack(&readout, &cfg, &params, &fixed).unwrap();
    let b = randomized_attack(&readout, &cfg, &params, &ensemble).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ensemble_must_cover_windows() {
    let (source, disc) = small_setup(1);
    let readout = Readout {
        source: &source,
        discriminator: &disc,
    };
    let cfg = parse_attack_config("A12A4", 5).unwrap();
    let short = randomize_mapping(5, 2, 32, 4, 0).unwrap();
    assert!(randomized_attack(&readout, &cfg, &small_params(), &short).is_err());
    let misaligned = randomize_mapping(5, 2, 20, 40, 0).unwrap();
    assert!(randomized_attack(&readout, &cfg, &small_params(), &misaligned).is_err());
}

#[test]
fn placement_is_a_relabelling_of_the_device() {
    let device = default_device();
    let (_, disc) = small_setup(2);
    let Discriminator::MatchedFilter(mf) = disc else {
        panic!("expected a matched filter")
    };
    let a = [2usize, 4, 0, 1, 3];
    let relabelled = device.with_assignment(&a).unwrap();
    let mf_a = MatchedFilter {
        n_samples: mf.n_samples,
        qubits: a.iter().map(|&p| mf.qubits[p].clone()).collect(),
    };
    let cfg = parse_attack_config("A12A4", 5).unwrap();
    let logical: BitString = "01100".parse().unwrap();
    let physical = place(&logical, &a);

    let on_device = simulate_range(&device, &physical, 0..64, 5).unwrap();
    let on_relabelled = simulate_range(&relabelled, &logical, 0..64, 5).unwrap();
    let outcomes = |measured: Vec<BitString>| -> Vec<Outcome> {
        measured
            .into_iter()
            .map(|m| Outcome {
                prep: logical.clone(),
                measured: m,
            })
            .collect()
    };
    let x = outcomes(
        on_device
            .iter()
            .map(|s| mf.classify(s).select(&a))
            .collect(),
    );
    let y = outcomes(on_relabelled.iter().map(|s| mf_a.classify(s)).collect());
    assert_eq!(x, y);
    let v = logical.select(&cfg.victims);
    assert_eq!(
        window_features(&x, &cfg, v.clone()),
        window_features(&y, &cfg, v)
    );
}

#[test]
fn scrambling_report_is_consistent() {
    let (source, disc) = small_setup(3);
    let readout = Readout {
        source: &source,
        discriminator: &disc,
    };
    let cfg = parse_attack_config("A12A4", 5).unwrap();
    let r = evaluate_scrambling(&readout, &cfg, &small_params(), 200, 4).unwrap();
    assert_eq!(r.chance, 0.125);
    assert_eq!(r.support_before, r.support_after);
    assert!((0.0..=1.0).contains(&r.recovery_distance));
    assert!(r.mean_recovery_distance <= r.recovery_distance);
    assert!(evaluate_scrambling(&readout, &cfg, &small_params(), 0, 4).is_err());
}
