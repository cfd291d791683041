//! Versioned JSON model files.
//!
//! Sequence-memory weights are stored sparsely: only entries that differ from
//! their seeded initial value are written, keyed by flat index per block.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::PART_COUNT;
use crate::snn::layout::{NeuronId, Sub, GROUP_SIZE, KEY_GROUPS, MODE_GROUPS};
use crate::snn::network::{block_salt, init_weight, MemorySynapse, Network};
use crate::topology::{build_network, NetworkConfig};

pub const FORMAT: &str = "modus-model";
pub const VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub neurons: usize,
    pub mode_neurons: usize,
    pub key_neurons: usize,
    pub pitch_neurons_per_part: usize,
    pub duration_neurons_per_part: usize,
}

impl Inventory {
    fn of(net: &Network) -> Self {
        let l = net.config().layers;
        Inventory {
            neurons: net.neuron_count(),
            mode_neurons: MODE_GROUPS * GROUP_SIZE,
            key_neurons: KEY_GROUPS * GROUP_SIZE,
            pitch_neurons_per_part: Sub::Pitch.columns() * l,
            duration_neurons_per_part: Sub::Duration.columns() * l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRecord {
    pre: NeuronId,
    post: NeuronId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoryRecord {
    pre: NeuronId,
    post: NeuronId,
    weight: f64,
    formed_o: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntraRecord {
    part: u8,
    sub: Sub,
    /// (flat index, weight) for every weight that left its initial value.
    changed: Vec<(usize, f32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u64,
    config: NetworkConfig,
    inventory: Inventory,
    preset: Vec<LinkRecord>,
    memory: Vec<MemoryRecord>,
    intra: Vec<IntraRecord>,
    rng: ChaCha8Rng,
}

fn blocks() -> impl Iterator<Item = (u8, Sub)> {
    (1..=PART_COUNT as u8).flat_map(|p| Sub::ALL.map(|s| (p, s)))
}

fn to_file(net: &Network) -> ModelFile {
    let layout = net.layout();
    let cfg = net.config();
    let intra = blocks()
        .map(|(part, sub)| {
            let salt = block_salt(part, sub);
            let changed = net
                .intra(part, sub)
                .raw()
                .iter()
                .enumerate()
                .filter(|&(i, w)| {
                    w.to_bits()
                        != init_weight(cfg.rng_seed, salt, i as u64, cfg.weight_init).to_bits()
                })
                .map(|(i, &w)| (i, w))
                .collect();
            IntraRecord { part, sub, changed }
        })
        .collect();
    ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        config: cfg.clone(),
        inventory: Inventory::of(net),
        preset: net
            .preset_synapses()
            .iter()
            .map(|s| LinkRecord {
                pre: layout.id(s.pre as usize),
                post: layout.id(s.post as usize),
            })
            .collect(),
        memory: net
            .memory_synapses()
            .iter()
            .map(|s| MemoryRecord {
                pre: layout.id(s.pre as usize),
                post: layout.id(s.post as usize),
                weight: s.weight,
                formed_o: s.formed_o,
            })
            .collect(),
        intra,
        rng: net.rng.clone(),
    }
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn from_file(file: ModelFile) -> Result<Network> {
    let mut net = build_network(file.config).map_err(|e| schema("config", e.to_string()))?;
    if file.inventory != Inventory::of(&net) {
        return Err(schema("inventory", "does not match the configured layout"));
    }
    let layout = *net.layout();
    let preset: Vec<(NeuronId, NeuronId)> = net
        .preset_synapses()
        .iter()
        .map(|s| (layout.id(s.pre as usize), layout.id(s.post as usize)))
        .collect();
    if preset.len() != file.preset.len()
        || preset
            .iter()
            .zip(&file.preset)
            .any(|(a, b)| a.0 != b.pre || a.1 != b.post)
    {
        return Err(schema(
            "preset",
            "preset synapses differ from the fixed topology",
        ));
    }

    let w_max = net.config().plasticity.w_max;
    for (i, m) in file.memory.iter().enumerate() {
        let at = |field: &str| format!("memory[{i}].{field}");
        let pre = layout
            .index(m.pre)
            .ok_or_else(|| schema(&at("pre"), "neuron outside the layout"))?;
        let post = layout
            .index(m.post)
            .ok_or_else(|| schema(&at("post"), "neuron outside the layout"))?;
        let theory_pitch = |a: usize, b: usize| layout.is_theory(a) && layout.is_pitch(b);
        if !(theory_pitch(pre, post) || theory_pitch(post, pre)) {
            return Err(schema(
                &at("pre"),
                "theory-memory synapses join theory and pitch neurons",
            ));
        }
        if !(m.weight.is_finite() && (0.0..=w_max).contains(&m.weight)) {
            return Err(schema(
                &at("weight"),
                format!("{} outside [0, {w_max}]", m.weight),
            ));
        }
        let fresh = net.insert_memory_raw(MemorySynapse {
            pre: pre as u32,
            post: post as u32,
            weight: m.weight,
            formed_o: m.formed_o,
        });
        if !fresh {
            return Err(schema(&at("pre"), "duplicate synapse"));
        }
    }

    if file.intra.len() != PART_COUNT * 2 {
        return Err(schema(
            "intra",
            format!("expected {} blocks", PART_COUNT * 2),
        ));
    }
    for (b, (rec, (part, sub))) in file.intra.iter().zip(blocks()).enumerate() {
        if rec.part != part || rec.sub != sub {
            return Err(schema(&format!("intra[{b}]"), "blocks out of order"));
        }
        let raw = net.intra_mut(part, sub).raw_mut();
        for (k, &(i, w)) in rec.changed.iter().enumerate() {
            let at = format!("intra[{b}].changed[{k}]");
            if i >= raw.len() {
                return Err(schema(
                    &at,
                    format!("index {i} beyond block of {}", raw.len()),
                ));
            }
            if !(w.is_finite() && (0.0..=w_max as f32).contains(&w)) {
                return Err(schema(&at, format!("weight {w} outside [0, {w_max}]")));
            }
            raw[i] = w;
        }
    }
    net.rng = file.rng;
    Ok(net)
}

pub fn to_json(net: &Network) -> Result<String> {
    Ok(serde_json::to_string(&to_file(net))?)
}

pub fn from_json(text: &str) -> Result<Network> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(FORMAT) => {}
        _ => return Err(schema("format", format!("expected \"{FORMAT}\""))),
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| schema("version", "missing or not an integer"))?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let file: ModelFile = serde_path_to_error::deserialize(value).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    from_file(file)
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(net)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
