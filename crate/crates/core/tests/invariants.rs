use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modus::eval::features;
use modus::generator::wta;
use modus::io::{parse_musicxml, to_musicxml};
use modus::plasticity::stdp_update;
use modus::score::{Key, Mode, PitchClass, Score};
use modus::snn::sim::SpikeRecord;
use modus::topology::{build_network, NetworkConfig};

fn voice() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((40u8..90, 1u8..=64), 0..10)
}

fn score() -> impl Strategy<Value = Score> {
    (voice(), voice(), voice(), voice(), 0usize..24)
        .prop_filter("at least one note", |(a, b, c, d, _)| {
            !(a.is_empty() && b.is_empty() && c.is_empty() && d.is_empty())
        })
        .prop_map(|(a, b, c, d, k)| {
            Score::from_voices([&a, &b, &c, &d], Key::from_index(k), "p").unwrap()
        })
}

proptest! {
    #[test]
    fn histogram_and_transition_rows_are_distributions(s in score()) {
        let f = features(&s, s.key).unwrap();
        prop_assert!((f.pch.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for row in &f.pctm {
            let total: f64 = row.iter().sum();
            prop_assert!(total == 0.0 || (total - 1.0).abs() < 1e-9);
        }
        prop_assert!((0.0..=1.0).contains(&f.dpr));
        prop_assert!(f.pc >= f.pch.iter().filter(|&&x| x > 0.0).count());
    }

    #[test]
    fn transposition_keeps_range_and_rotates_histogram(s in score(), shift in -12i32..12) {
        let t = s.transpose(shift).unwrap();
        let (f, g) = (features(&s, s.key).unwrap(), features(&t, t.key).unwrap());
        prop_assert_eq!(f.pr, g.pr);
        prop_assert_eq!(f.pc, g.pc);
        prop_assert!((f.dpr - g.dpr).abs() < 1e-12);
        for k in 0..12 {
            let r = (k as i32 + shift).rem_euclid(12) as usize;
            prop_assert!((f.pch[k] - g.pch[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn winner_is_unchanged_by_scaling_counts(counts in prop::collection::vec(0u32..50, 1..40), k in 1u32..20, seed: u64) {
        let scaled: Vec<u32> = counts.iter().map(|c| c * k).collect();
        let a = wta(&counts, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = wta(&scaled, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
        if let Some(i) = a {
            prop_assert_eq!(counts[i], *counts.iter().max().unwrap());
        }
    }

    #[test]
    fn musicxml_round_trip_is_identity(s in score()) {
        let xml = to_musicxml(&s);
        let back = parse_musicxml(xml.as_bytes()).unwrap();
        prop_assert_eq!(&back.parts, &s.parts);
        prop_assert_eq!(back.key, s.key);
        prop_assert_eq!(to_musicxml(&back), xml);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_stay_within_bounds(w in 0.0f64..=5.0, spikes in prop::collection::vec((0u64..50, 0u64..50), 1..30)) {
        let mut net = build_network(NetworkConfig { layers: 2, ..NetworkConfig::default() }).unwrap();
        let key = Key::new(PitchClass::C, Mode::Major);
        let pre = net.key_neuron(key, PitchClass::C);
        let post = net.layout().pitch(1, 60, 0);
        let (a, b) = (net.layout().id(pre), net.layout().id(post));
        net.insert_memory_synapse(a, b, w);
        net.insert_memory_synapse(b, a, w);
        let mut train: Vec<(u32, u64)> = spikes
            .iter()
            .flat_map(|&(x, y)| [(pre as u32, x), (post as u32, y)])
            .collect();
        train.sort_by_key(|&(n, t)| (t, n));
        train.dedup();
        let record = SpikeRecord { position: 0, slot: 0, start: 0, end: 50, spikes: train, arrivals: Vec::new() };
        stdp_update(&record, &mut net);
        let w_max = net.config().plasticity.w_max;
        for s in net.memory_synapses() {
            prop_assert!((0.0..=w_max).contains(&s.weight));
        }
    }
}
