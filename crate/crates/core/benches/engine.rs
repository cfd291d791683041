//! Sequential against data-parallel execution of the two hot paths: the
//! per-step neuron update and independent generation requests.
//!
//! With the `parallel` feature off both variants run sequentially.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use modus::exec::{update_neurons, update_neurons_sequential};
use modus::generator::{generate, generate_batch, GenerationRequest};
use modus::score::{Key, Mode, PitchClass};
use modus::snn::neuron::IzhikevichParams;
use modus::synth::{synth_corpus, SynthConfig};
use modus::topology::{build_network, NetworkConfig};
use modus::trainer::train_corpus;

fn neuron_update(c: &mut Criterion) {
    let p = IzhikevichParams::default();
    let mut g = c.benchmark_group("neuron_update");
    for n in [4_096usize, 24_889, 100_000] {
        let input: Vec<f64> = (0..n).map(|i| (i % 61) as f64).collect();
        let mut v = vec![-70.0; n];
        let mut u = vec![-14.0; n];
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| update_neurons_sequential(&mut v, &mut u, black_box(&input), &p))
        });
        let mut v = vec![-70.0; n];
        let mut u = vec![-14.0; n];
        g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| update_neurons(&mut v, &mut u, black_box(&input), &p))
        });
    }
    g.finish();
}

fn generation(c: &mut Criterion) {
    let cfg = NetworkConfig {
        layers: 8,
        ..NetworkConfig::default()
    };
    let mut net = build_network(cfg).unwrap();
    let keys: Vec<Key> = Key::all().collect();
    let corpus = synth_corpus(
        &keys,
        &SynthConfig {
            pieces_per_key: 1,
            positions: 8,
            ..SynthConfig::default()
        },
    )
    .unwrap();
    train_corpus(&mut net, &corpus, 1);
    let reqs: Vec<GenerationRequest> = (0..8)
        .map(|i| {
            let key = Key::new(PitchClass::wrapping(i * 7), Mode::Major);
            GenerationRequest::new(key, [72, 67, 64, 48], 16, 7, i as u64).unwrap()
        })
        .collect();
    let mut g = c.benchmark_group("generate_8_requests");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| {
            for r in &reqs {
                black_box(generate(&net, r).unwrap());
            }
        })
    });
    g.bench_function("parallel", |b| b.iter(|| generate_batch(&net, &reqs).len()));
    g.finish();
}

criterion_group!(benches, neuron_update, generation);
criterion_main!(benches);
