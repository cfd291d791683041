use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use modus::eval::evaluate;
use modus::generator::{generate, GenerationRequest};
use modus::io::{load_corpus, write_midi, write_musicxml};
use modus::ks::profile_report;
use modus::score::{parse_note_name, Key, Mode, PitchClass, PART_COUNT};
use modus::synth::{synth_corpus, SynthConfig};
use modus::topology::{build_network, NetworkConfig, TheoryDrive};
use modus::trainer::train_corpus;
use modus::{persist, Error};

#[derive(Parser)]
#[command(
    name = "modus",
    version,
    about = "Spiking-network music engine: learn keys, generate, inspect, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a fresh network on a directory of four-part MusicXML files.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Network configuration, TOML or JSON by extension.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        /// Overrides the configured rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a four-part piece under a key from a seed chord.
    Generate {
        #[arg(long)]
        model: PathBuf,
        /// Tonic, e.g. `g`, `Bb`, `f#`.
        #[arg(long)]
        key: String,
        #[arg(long)]
        mode: String,
        /// Four comma-separated note names; the highest goes to the soprano.
        #[arg(long)]
        seed_notes: String,
        /// Duration of the seed notes in sixty-fourth units.
        #[arg(long, default_value_t = 16)]
        seed_duration: u8,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// `group` or `chord`; defaults to the model's setting.
        #[arg(long)]
        drive: Option<String>,
        /// Output prefix for .mid, .musicxml and .meta.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report learned connection profiles against the key profiles.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a generated corpus with reference corpora.
    Eval {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long = "ref", required = true, num_args = 1..)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus sampled from the key profiles.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        pieces_per_key: usize,
        #[arg(long, default_value_t = 32)]
        positions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Error carrying the process exit code: 2 for usage and configuration
/// problems, 1 for everything else.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: 1,
            err: e.into(),
        }
    }
}

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        err: err.into(),
    }
}

/// Library errors caused by bad input rather than a runtime fault.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::Range { .. }
        | Error::Version { .. }
        | Error::Schema { .. } => usage(anyhow!("{e}")),
        Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            usage(anyhow!("{e}"))
        }
        other => anyhow!("{other}").into(),
    }
}

type Outcome = Result<(), Failure>;

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(usage)?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let parsed = if is_json {
        let mut de = serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(&mut de)
            .map_err(|e| (e.path().to_string(), e.inner().to_string()))
    } else {
        let de = toml::Deserializer::new(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| (e.path().to_string(), e.inner().message().to_string()))
    };
    parsed.map_err(|(at, msg)| usage(anyhow!("config {}: at `{at}`: {msg}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Outcome {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Model path without a trailing `.msnn.json` or `.json`.
fn model_stem(out: &Path) -> PathBuf {
    let s = out.to_string_lossy();
    let stem = s
        .strip_suffix(".msnn.json")
        .or_else(|| s.strip_suffix(".json"))
        .unwrap_or(&s);
    PathBuf::from(stem)
}

fn train(
    corpus: &Path,
    config: Option<&Path>,
    epochs: usize,
    seed: Option<u64>,
    out: &Path,
) -> Outcome {
    let mut cfg: NetworkConfig = match config {
        Some(p) => read_config(p)?,
        None => NetworkConfig::default(),
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    let mut net = build_network(cfg).map_err(classify)?;
    let (scores, manifest) = load_corpus(corpus).map_err(classify)?;
    if scores.is_empty() {
        return Err(usage(anyhow!("no usable scores in {}", corpus.display())));
    }
    let stats = train_corpus(&mut net, &scores, epochs);
    persist::save(&net, out).map_err(classify)?;
    let stem = model_stem(out);
    write_json(&manifest, &with_suffix(&stem, ".manifest.json"))?;
    write_json(&stats, &with_suffix(&stem, ".train.json"))?;
    println!(
        "trained on {} pieces ({} skipped), {} theory-memory synapses -> {}",
        stats.pieces,
        manifest.skipped.len() + stats.skipped,
        net.memory_synapses().len(),
        out.display()
    );
    Ok(())
}

struct GenerateArgs<'a> {
    model: &'a Path,
    key: &'a str,
    mode: &'a str,
    seed_notes: &'a str,
    seed_duration: u8,
    steps: usize,
    rng: u64,
    drive: Option<&'a str>,
    out: &'a Path,
}

fn run_generate(a: GenerateArgs) -> Outcome {
    let tonic: PitchClass = a.key.parse().map_err(usage)?;
    let mode: Mode = a.mode.parse().map_err(usage)?;
    let mut pitches = a
        .seed_notes
        .split(',')
        .map(|n| parse_note_name(n.trim()))
        .collect::<modus::Result<Vec<u8>>>()
        .map_err(usage)?;
    if pitches.len() != PART_COUNT {
        return Err(usage(anyhow!(
            "expected {PART_COUNT} seed notes, got {}",
            pitches.len()
        )));
    }
    pitches.sort_unstable_by(|a, b| b.cmp(a));
    if a.steps == 0 {
        return Err(usage(anyhow!("steps must be at least 1")));
    }
    let drive = match a.drive {
        None => None,
        Some("group") => Some(TheoryDrive::Group),
        Some("chord") => Some(TheoryDrive::Chord),
        Some(other) => {
            return Err(usage(anyhow!(
                "unknown drive `{other}` (expected group or chord)"
            )))
        }
    };
    let mut net = persist::load(a.model).map_err(classify)?;
    if let Some(d) = drive {
        net.generation_config_mut().theory_drive = d;
    }
    let req = GenerationRequest::new(
        Key::new(tonic, mode),
        pitches.try_into().expect("four notes"),
        a.seed_duration,
        a.steps,
        a.rng,
    )
    .map_err(classify)?;
    let g = generate(&net, &req).map_err(classify)?;
    write_midi(&g.score, &with_suffix(a.out, ".mid"))?;
    write_musicxml(&g.score, &with_suffix(a.out, ".musicxml"))?;
    write_json(&g.meta, &with_suffix(a.out, ".meta.json"))?;
    println!(
        "generated {} positions in {} ({} silent readouts, {} tie-breaks)",
        g.score.positions(),
        g.meta.key,
        g.meta.silent_readouts,
        g.meta.tie_breaks
    );
    Ok(())
}

fn inspect(model: &Path, out: Option<&Path>) -> Outcome {
    let net = persist::load(model).map_err(classify)?;
    let report = profile_report(&net);
    print!("{}", report.to_table());
    if let Some(p) = out {
        write_json(&report, p)?;
    }
    Ok(())
}

fn run_eval(gen: &Path, refs: &[PathBuf], n: usize, seed: u64, out: Option<&Path>) -> Outcome {
    for d in std::iter::once(gen).chain(refs.iter().map(PathBuf::as_path)) {
        if !d.is_dir() {
            return Err(usage(anyhow!("not a directory: {}", d.display())));
        }
    }
    let refs: Vec<&Path> = refs.iter().map(PathBuf::as_path).collect();
    let report = evaluate(gen, &refs, n, seed).map_err(classify)?;
    print!("{}", report.to_table());
    if let Some(p) = out {
        write_json(&report, p)?;
    }
    Ok(())
}

fn synth(out: &Path, pieces_per_key: usize, positions: usize, seed: u64) -> Outcome {
    let cfg = SynthConfig {
        pieces_per_key,
        positions,
        seed,
        ..SynthConfig::default()
    };
    let keys: Vec<Key> = Key::all().collect();
    let scores = synth_corpus(&keys, &cfg).map_err(classify)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (i, s) in scores.iter().enumerate() {
        let name = format!(
            "{:04}-{}-{}.musicxml",
            i,
            s.key.tonic_name().to_lowercase().replace('#', "s"),
            s.key.mode
        );
        write_musicxml(s, &out.join(name))?;
    }
    println!("wrote {} pieces to {}", scores.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Train {
            corpus,
            config,
            epochs,
            seed,
            out,
        } => train(&corpus, config.as_deref(), epochs, seed, &out),
        Command::Generate {
            model,
            key,
            mode,
            seed_notes,
            seed_duration,
            steps,
            rng,
            drive,
            out,
        } => run_generate(GenerateArgs {
            model: &model,
            key: &key,
            mode: &mode,
            seed_notes: &seed_notes,
            seed_duration,
            steps,
            rng,
            drive: drive.as_deref(),
            out: &out,
        }),
        Command::Inspect { model, out } => inspect(&model, out.as_deref()),
        Command::Eval {
            gen,
            refs,
            n,
            seed,
            out,
        } => run_eval(&gen, &refs, n, seed, out.as_deref()),
        Command::Synth {
            out,
            pieces_per_key,
            positions,
            seed,
        } => synth(&out, pieces_per_key, positions, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MODUS_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
