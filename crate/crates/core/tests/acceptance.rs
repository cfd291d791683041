//! Exit criteria. Every test writes one `PASS`/`FAIL` line to stdout
//! (uncaptured) before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modus::eval::{features, interset_stats, Feature, FeatureVector};
use modus::generator::{generate, generate_batch, GenerationRequest};
use modus::io::{parse_musicxml, to_midi, to_musicxml};
use modus::ks::{profile_report, ProfileReport};
use modus::persist;
use modus::plasticity::maybe_create_synapses;
use modus::plasticity::stdp_update;
use modus::score::{diatonic_set, Key, Mode, PitchClass, Score};
use modus::snn::network::Network;
use modus::snn::neuron::{step_neuron, IzhikevichParams, NeuronState};
use modus::snn::sim::SpikeRecord;
use modus::snn::NeuronId;
use modus::synth::{register_pitch, synth_corpus, SynthConfig};
use modus::topology::{build_network, NetworkConfig};
use modus::trainer::train_corpus;

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance criterion {criterion}: {verdict} {detail}");
}

struct Trained {
    net: Network,
    report: ProfileReport,
    elapsed: Duration,
}

/// 24 keys × 20 pieces × 32 positions, one epoch, default configuration.
fn desk_model() -> &'static Trained {
    static MODEL: OnceLock<Trained> = OnceLock::new();
    MODEL.get_or_init(|| {
        let start = Instant::now();
        let keys: Vec<Key> = Key::all().collect();
        let corpus = synth_corpus(&keys, &SynthConfig::default()).expect("synthetic corpus");
        let mut net = build_network(NetworkConfig::default()).expect("network");
        let stats = train_corpus(&mut net, &corpus, 1);
        assert_eq!(stats.pieces, 480);
        let report = profile_report(&net);
        Trained {
            net,
            report,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_1_mode_profiles_match_key_profiles() {
    let m = desk_model();
    let mut pass = m.elapsed <= Duration::from_secs(600);
    let mut detail = format!("train {:.1}s;", m.elapsed.as_secs_f64());
    for p in &m.report.modes {
        let (a, b) = (p.cos_psc.unwrap_or(0.0), p.cos_pasw.unwrap_or(0.0));
        pass &= a >= 0.90 && b >= 0.90;
        detail += &format!(" {} cos PSC {a:.3} PASW {b:.3};", p.label);
    }
    report(1, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_2_tonic_first_dominant_top_two() {
    let m = desk_model();
    let mut pass = true;
    let mut detail = String::new();
    for p in &m.report.modes {
        let v = p.psc_norm;
        let argmax = (0..12).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        pass &= argmax == 0 && v[0] == 1.0;
        detail += &format!(" {} argmax {argmax};", p.label);
        if p.label == "major" {
            let mut order: Vec<usize> = (0..12).collect();
            order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
            pass &= order[..2].contains(&7);
            detail += &format!(" major top two {:?} (dominant {:.3});", &order[..2], v[7]);
        }
    }
    report(2, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_3_key_level_coverage() {
    let m = desk_model();
    let present = m.report.keys.iter().filter(|k| k.present()).count();
    let coverage = m.report.key_coverage(0.7).unwrap_or(0.0);
    let mut pass = present == 24 && coverage >= 0.90;
    let mut detail = format!("present {present}/24, coverage {coverage:.3};");

    // keys missing from a corpus report no similarity at all
    let c_major = Key::new(PitchClass::C, Mode::Major);
    let corpus = synth_corpus(
        &[c_major],
        &SynthConfig {
            pieces_per_key: 2,
            positions: 8,
            ..SynthConfig::default()
        },
    )
    .unwrap();
    let mut net = build_network(NetworkConfig {
        layers: 8,
        ..NetworkConfig::default()
    })
    .unwrap();
    train_corpus(&mut net, &corpus, 1);
    let partial = profile_report(&net);
    let absent_ok = partial
        .keys
        .iter()
        .filter(|k| k.label != c_major.to_string())
        .all(|k| !k.present() && k.cos_psc.is_none() && k.cos_pasw.is_none());
    let present_ok = partial.keys[c_major.index()].cos_psc.is_some();
    pass &= absent_ok && present_ok;
    detail += &format!(" single-key corpus: absent keys reported absent {absent_ok}");
    report(3, pass, &detail);
    assert!(pass, "{detail}");
}

/// Tonic triad in the synthetic registers, bass doubling the tonic.
fn triad_seed(key: Key) -> [u8; 4] {
    let d = diatonic_set(key);
    let (t, third, fifth) = (
        d[0].index() as usize,
        d[2].index() as usize,
        d[4].index() as usize,
    );
    [
        register_pitch(0, t),
        register_pitch(1, third),
        register_pitch(2, fifth),
        register_pitch(3, t),
    ]
}

#[test]
fn criterion_4_generated_pieces_stay_in_key() {
    let m = desk_model();
    let reqs: Vec<GenerationRequest> = (0..20)
        .map(|i| {
            let key = Key::from_index((i * 7) % 24);
            // 8 bars of quarters: seed + 31 positions
            GenerationRequest::new(key, triad_seed(key), 16, 31, 1000 + i as u64).unwrap()
        })
        .collect();
    let out: Vec<_> = generate_batch(&m.net, &reqs)
        .into_iter()
        .map(|g| g.expect("generation"))
        .collect();
    let fv: Vec<FeatureVector> = out
        .iter()
        .map(|g| features(&g.score, g.meta.key).unwrap())
        .collect();
    let dpr: Vec<f64> = fv.iter().map(|f| f.dpr).collect();
    let pc: Vec<f64> = fv.iter().map(|f| f.pc as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let min_dpr = dpr.iter().copied().fold(f64::INFINITY, f64::min);
    let silent: usize = out.iter().map(|g| g.meta.silent_readouts).sum();
    let readouts = out.len() * 31 * 8;
    let pass = mean(&dpr) >= 0.80 && min_dpr >= 0.70 && (6.0..=10.0).contains(&mean(&pc));
    let detail = format!(
        "mean DPR {:.3}, min DPR {:.3}, mean PC {:.2}, silent readouts {silent}/{readouts}",
        mean(&dpr),
        min_dpr,
        mean(&pc)
    );
    report(4, pass, &detail);
    assert!(pass, "{detail}");
}

/// Scalar STDP window written out from its closed form.
fn window_oracle(dt: f64, a_plus: f64, a_minus: f64, tau_plus: f64, tau_minus: f64) -> f64 {
    if dt > 0.0 {
        a_plus * f64::exp(-dt / tau_plus)
    } else if dt < 0.0 {
        -a_minus * f64::exp(dt / tau_minus)
    } else {
        0.0
    }
}

fn record(spikes: Vec<(u32, u64)>) -> SpikeRecord {
    SpikeRecord {
        position: 0,
        slot: 0,
        start: 0,
        end: 50,
        spikes,
        arrivals: Vec::new(),
    }
}

#[test]
fn criterion_5_plasticity_oracles() {
    let cfg = NetworkConfig {
        layers: 2,
        ..NetworkConfig::default()
    };
    let p = cfg.plasticity.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let key = Key::new(PitchClass::wrapping(7), Mode::Minor);
    let mut worst: f64 = 0.0;
    let mut shift_exact = true;
    for _ in 0..200 {
        let mut net = build_network(cfg.clone()).unwrap();
        let pre = net.key_neuron(key, PitchClass::wrapping(7));
        let post = net.layout().pitch(1, 67, 0);
        let (pre_id, post_id) = (net.layout().id(pre), net.layout().id(post));
        assert!(net.insert_memory_synapse(pre_id, post_id, 2.5));
        assert!(net.insert_memory_synapse(post_id, pre_id, 2.5));
        let t_pre: u64 = rng.gen_range(0..50);
        let t_post: u64 = rng.gen_range(0..50);
        let deltas = stdp_update(
            &record(vec![(pre as u32, t_pre), (post as u32, t_post)]),
            &mut net,
        );
        let dt = t_post as f64 - t_pre as f64;
        let forward = net.memory_synapse(pre, post).unwrap().weight - 2.5;
        let backward = net.memory_synapse(post, pre).unwrap().weight - 2.5;
        let w = |dt| window_oracle(dt, p.a_plus, p.a_minus, p.tau_plus, p.tau_minus);
        worst = worst
            .max((forward - w(dt)).abs())
            .max((backward - w(-dt)).abs());
        assert_eq!(deltas.len(), if dt == 0.0 { 0 } else { 2 });
        let k: u64 = rng.gen_range(0..200);
        shift_exact &= p.delta(&[t_pre], &[t_post + k], k) == p.delta(&[t_pre], &[t_post], 0);
    }

    // o = 5 coincident pairs forms a synapse pair, o = 4 does not
    let grow = |pairs: usize| {
        let mut net = build_network(cfg.clone()).unwrap();
        let theory = net.key_neuron(key, PitchClass::wrapping(2)) as u32;
        let pitch = net.layout().pitch(3, 50, 0) as u32;
        let mut spikes = Vec::new();
        for f in 0..pairs as u64 {
            // pairs far enough apart that only same-index spikes coincide
            spikes.push((theory, f * 20));
            spikes.push((pitch, f * 20 + 1));
        }
        spikes.sort_by_key(|&(n, t)| (t, n));
        maybe_create_synapses(&record(spikes), &mut net)
    };
    let (at5, at4) = (grow(5), grow(4));

    let pass = worst <= 1e-12 && shift_exact && at5 == 2 && at4 == 0;
    let detail = format!("max |dw - oracle| {worst:.2e}, delay shift exact {shift_exact}, created at o=5: {at5}, at o=4: {at4}");
    report(5, pass, &detail);
    assert!(pass, "{detail}");
}

/// Scalar Izhikevich step in increment form, potential capped at threshold
/// and spike reported on the step after reaching it.
fn izhikevich_oracle(v: f64, u: f64, i: f64) -> (f64, f64, bool) {
    let (a, b, c, d, th) = (0.1, 0.2, -65.0, 30.0, 30.0);
    if v >= th {
        return (c, u + d, true);
    }
    let dv = 0.04 * v * v + 5.0 * v + 140.0 - u + i;
    let du = a * (b * v - u);
    let nv = if v + dv > th { th } else { v + dv };
    (nv, u + du, false)
}

#[test]
fn criterion_6_neuron_oracle() {
    let params = IzhikevichParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut spikes_agree = true;
    for _ in 0..10_000 {
        let v = rng.gen_range(-90.0..35.0);
        let u = rng.gen_range(-30.0..30.0);
        let i = rng.gen_range(-10.0..80.0);
        let (s, spiked) = step_neuron(NeuronState::new(v, u), &params, i).unwrap();
        let (ov, ou, ospike) = izhikevich_oracle(v, u, i);
        worst = worst.max((s.v - ov).abs()).max((s.u - ou).abs());
        spikes_agree &= spiked == ospike;
    }

    let count_spikes = |input: f64| {
        let mut s = params.resting_state();
        let mut n = 0;
        for _ in 0..50 {
            let (next, spiked) = step_neuron(s, &params, input).unwrap();
            s = next;
            n += spiked as usize;
        }
        n
    };
    let (driven, quiet) = (count_spikes(50.0), count_spikes(0.0));
    let pass = worst <= 1e-9 && spikes_agree && driven >= 1 && quiet == 0;
    let detail = format!(
        "max |state - oracle| {worst:.2e}, spikes in 50 steps at I=50: {driven}, at I=0: {quiet}"
    );
    report(6, pass, &detail);
    assert!(pass, "{detail}");
}

fn small_pipeline() -> (String, Vec<u8>, String) {
    let keys: Vec<Key> = Key::all().collect();
    let corpus = synth_corpus(
        &keys,
        &SynthConfig {
            pieces_per_key: 1,
            positions: 8,
            seed: 7,
            ..SynthConfig::default()
        },
    )
    .unwrap();
    let mut net = build_network(NetworkConfig {
        layers: 8,
        rng_seed: 7,
        ..NetworkConfig::default()
    })
    .unwrap();
    train_corpus(&mut net, &corpus, 1);
    let model = persist::to_json(&net).unwrap();
    let reloaded = persist::from_json(&model).unwrap();
    let key = Key::new(PitchClass::wrapping(7), Mode::Minor);
    let req = GenerationRequest::new(key, [67, 62, 58, 43], 16, 7, 11).unwrap();
    let g = generate(&reloaded, &req).unwrap();
    let midi = to_midi(&g.score);
    let gen: Vec<Score> = (0..4)
        .map(|r| {
            generate(
                &net,
                &GenerationRequest {
                    rng_seed: r,
                    ..req.clone()
                },
            )
            .unwrap()
            .score
        })
        .collect();
    let eval = modus::eval::evaluate_scores(("gen", &gen), &[("ref", &corpus)], 10, 3).unwrap();
    (model, midi, serde_json::to_string(&eval).unwrap())
}

#[test]
fn criterion_7_determinism() {
    let runs: Vec<_> = (0..3).map(|_| small_pipeline()).collect();
    let model = runs.iter().all(|r| r.0 == runs[0].0);
    let midi = runs.iter().all(|r| r.1 == runs[0].1);
    let eval = runs.iter().all(|r| r.2 == runs[0].2);
    let pass = model && midi && eval;
    let detail =
        format!("3 runs: model identical {model}, MIDI identical {midi}, report identical {eval}");
    report(7, pass, &detail);
    assert!(pass, "{detail}");
}

/// Random four-part scores over every key and duration the writer supports.
fn fixtures() -> Vec<Score> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    (0..24)
        .map(|i| {
            let key = Key::from_index(i);
            let voices: Vec<Vec<(u8, u8)>> = (0..4)
                .map(|j| {
                    let n = rng.gen_range(1..12);
                    (0..n)
                        .map(|_| {
                            (
                                rng.gen_range(36 + 6 * (3 - j)..60 + 6 * (3 - j)) as u8,
                                rng.gen_range(1..=64),
                            )
                        })
                        .collect()
                })
                .collect();
            Score::from_voices(
                [&voices[0], &voices[1], &voices[2], &voices[3]],
                key,
                &format!("fixture {i} in {key}"),
            )
            .unwrap()
        })
        .collect()
}

struct Expected {
    pc: usize,
    pr: u8,
    dpr: f64,
    pi: f64,
    pch: Vec<(usize, f64)>,
    pctm: Vec<(usize, usize, f64)>,
}

/// Handcrafted pieces with features counted by hand.
fn handcrafted() -> Vec<(Score, Key, Expected)> {
    let c = Key::new(PitchClass::C, Mode::Major);
    let a = Key::new(PitchClass::wrapping(9), Mode::Minor);
    let eb = Key::new(PitchClass::wrapping(3), Mode::Major);
    let q = 16;
    vec![
        (
            Score::from_voices(
                [&[(60, q), (62, q), (64, q), (62, q)], &[], &[], &[]],
                c,
                "",
            )
            .unwrap(),
            c,
            Expected {
                pc: 3,
                pr: 4,
                dpr: 1.0,
                pi: 2.0,
                pch: vec![(0, 0.25), (2, 0.5), (4, 0.25)],
                pctm: vec![(0, 2, 1.0), (2, 4, 1.0), (4, 2, 1.0)],
            },
        ),
        (
            Score::from_voices(
                [&[(60, q), (61, q), (62, q)], &[], &[], &[(48, q), (55, q)]],
                c,
                "",
            )
            .unwrap(),
            c,
            Expected {
                pc: 5,
                pr: 14,
                dpr: 0.8,
                pi: 4.0,
                pch: vec![(0, 0.4), (1, 0.2), (2, 0.2), (7, 0.2)],
                pctm: vec![(0, 1, 0.5), (0, 7, 0.5), (1, 2, 1.0)],
            },
        ),
        (
            Score::from_voices(
                [
                    &[],
                    &[(69, q), (68, 8), (69, 8), (71, 32)],
                    &[(57, q), (57, q)],
                    &[],
                ],
                a,
                "",
            )
            .unwrap(),
            a,
            Expected {
                pc: 4,
                pr: 14,
                dpr: 5.0 / 6.0,
                pi: 2.0 / 3.0,
                pch: vec![(9, 4.0 / 6.0), (8, 1.0 / 6.0), (11, 1.0 / 6.0)],
                pctm: vec![
                    (9, 8, 1.0 / 3.0),
                    (9, 9, 1.0 / 3.0),
                    (9, 11, 1.0 / 3.0),
                    (8, 9, 1.0),
                ],
            },
        ),
        (
            Score::from_voices([&[(72, 64)], &[(64, 64)], &[(55, 64)], &[(48, 64)]], c, "")
                .unwrap(),
            c,
            Expected {
                pc: 4,
                pr: 24,
                dpr: 1.0,
                pi: 0.0,
                pch: vec![(0, 0.5), (4, 0.25), (7, 0.25)],
                pctm: vec![],
            },
        ),
        (
            Score::from_voices(
                [
                    &[(63, q), (65, q), (67, q), (66, q)],
                    &[],
                    &[],
                    &[(39, 32), (46, 32)],
                ],
                eb,
                "",
            )
            .unwrap(),
            eb,
            Expected {
                pc: 6,
                pr: 28,
                dpr: 5.0 / 6.0,
                pi: 13.0 / 3.0,
                pch: vec![
                    (3, 2.0 / 6.0),
                    (5, 1.0 / 6.0),
                    (6, 1.0 / 6.0),
                    (7, 1.0 / 6.0),
                    (10, 1.0 / 6.0),
                ],
                pctm: vec![(3, 5, 0.5), (3, 10, 0.5), (5, 7, 1.0), (7, 6, 1.0)],
            },
        ),
    ]
}

fn matches_expected(f: &FeatureVector, e: &Expected) -> bool {
    let mut pch = [0.0; 12];
    for &(k, x) in &e.pch {
        pch[k] = x;
    }
    let mut pctm = [[0.0; 12]; 12];
    for &(r, c, x) in &e.pctm {
        pctm[r][c] = x;
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    f.pc == e.pc
        && f.pr == e.pr
        && f.dpr == e.dpr
        && close(f.pi, e.pi)
        && (0..12).all(|k| close(f.pch[k], pch[k]))
        && (0..12).all(|r| (0..12).all(|c| close(f.pctm[r][c], pctm[r][c])))
}

#[test]
fn criterion_8_round_trip_and_metric_oracles() {
    let fx = fixtures();
    let round_trips = fx
        .iter()
        .filter(|s| {
            let xml = to_musicxml(s);
            let back = parse_musicxml(xml.as_bytes()).unwrap();
            back.parts == s.parts && back.key == s.key && to_musicxml(&back) == xml
        })
        .count();

    let hand = handcrafted();
    let features_ok = hand
        .iter()
        .filter(|(s, k, e)| matches_expected(&features(s, *k).unwrap(), e))
        .count();

    let fv: Vec<FeatureVector> = fx.iter().map(|s| features(s, s.key).unwrap()).collect();
    let mut interset_ok = true;
    for f in Feature::ALL {
        let (kld, oa) = interset_stats(&fv, &fv, f).unwrap();
        interset_ok &= kld.abs() <= 1e-6 && (oa - 1.0).abs() <= 1e-6;
    }

    let pass =
        round_trips == fx.len() && fx.len() >= 20 && features_ok == hand.len() && interset_ok;
    let detail = format!(
        "MusicXML round trips {round_trips}/{}, handcrafted features {features_ok}/{}, identical-set KLD/OA {interset_ok}",
        fx.len(),
        hand.len()
    );
    report(8, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn fixture_neuron_ids_parse() {
    // the id grammar used by model files
    let id: NeuronId = "pitch:2:67:0".parse().unwrap();
    assert_eq!(id, NeuronId::pitch(2, 67, 0));
}
