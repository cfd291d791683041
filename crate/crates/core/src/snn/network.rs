//! Network structure: neuron layout and every synapse population.
//!
//! Only theory synapses are stored as explicit records. The sequential-memory
//! excitatory synapses (every slot to every later slot, all-to-all across
//! minicolumns) live in dense per-subnetwork weight arrays, and the
//! within-slot inhibitory synapses share one fixed weight and are implicit.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layout::{Layout, NeuronId, Sub, GROUP_SIZE, MODE_GROUPS};
use crate::score::{Key, Mode, PART_COUNT};
use crate::topology::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SynapseKind {
    TheoryPreset,
    TheoryMemory,
    IntraExcitatory,
    IntraInhibitory,
}

/// Uniform view of any synapse, independent of how it is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: f64,
    pub delay: u64,
    pub plastic: bool,
    pub kind: SynapseKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorySynapse {
    pub pre: u32,
    pub post: u32,
    pub weight: f64,
    /// Coincidence count that triggered formation.
    pub formed_o: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetSynapse {
    pub pre: u32,
    pub post: u32,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct MemoryStore {
    pub(crate) synapses: Vec<MemorySynapse>,
    index: HashMap<(u32, u32), u32>,
    out: Vec<Vec<u32>>,
}

impl MemoryStore {
    fn new(neurons: usize) -> Self {
        MemoryStore {
            synapses: Vec::new(),
            index: HashMap::new(),
            out: vec![Vec::new(); neurons],
        }
    }

    pub(crate) fn insert(&mut self, s: MemorySynapse) -> bool {
        if self.index.contains_key(&(s.pre, s.post)) {
            return false;
        }
        let id = self.synapses.len() as u32;
        self.index.insert((s.pre, s.post), id);
        self.out[s.pre as usize].push(id);
        self.synapses.push(s);
        true
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dense excitatory weights of one subnetwork of one part.
#[derive(Debug, Clone)]
pub struct IntraBlock {
    cols: usize,
    layers: usize,
    weights: Vec<f32>,
}

impl IntraBlock {
    fn new(cols: usize, layers: usize, seed: u64, salt: u64, range: [f64; 2]) -> Self {
        let pairs = layers * layers.saturating_sub(1) / 2;
        let n = pairs * cols * cols;
        let weights = (0..n)
            .map(|i| init_weight(seed, salt, i as u64, range))
            .collect();
        IntraBlock {
            cols,
            layers,
            weights,
        }
    }

    pub fn columns(&self) -> usize {
        self.cols
    }

    fn pair_offset(&self, pre_slot: usize, post_slot: usize) -> usize {
        debug_assert!(pre_slot < post_slot && post_slot < self.layers);
        pre_slot * (2 * self.layers - pre_slot - 1) / 2 + (post_slot - pre_slot - 1)
    }

    pub(crate) fn flat_index(
        &self,
        pre_slot: usize,
        pre_col: usize,
        post_slot: usize,
        post_col: usize,
    ) -> usize {
        (self.pair_offset(pre_slot, post_slot) * self.cols + pre_col) * self.cols + post_col
    }

    /// Weights from one presynaptic neuron to every column of `post_slot`.
    pub fn row(&self, pre_slot: usize, pre_col: usize, post_slot: usize) -> &[f32] {
        let start = self.flat_index(pre_slot, pre_col, post_slot, 0);
        &self.weights[start..start + self.cols]
    }

    pub fn get(&self, pre_slot: usize, pre_col: usize, post_slot: usize, post_col: usize) -> f32 {
        self.weights[self.flat_index(pre_slot, pre_col, post_slot, post_col)]
    }

    pub(crate) fn get_mut(
        &mut self,
        pre_slot: usize,
        pre_col: usize,
        post_slot: usize,
        post_col: usize,
    ) -> &mut f32 {
        let i = self.flat_index(pre_slot, pre_col, post_slot, post_col);
        &mut self.weights[i]
    }

    pub(crate) fn raw(&self) -> &[f32] {
        &self.weights
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }
}

/// Initial weight of intra-excitatory element `i`, a pure function of the seed
/// so untouched weights never need to be persisted.
pub(crate) fn init_weight(seed: u64, salt: u64, i: u64, range: [f64; 2]) -> f32 {
    let h = splitmix64(seed ^ splitmix64((salt << 48) ^ i));
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    (range[0] + (range[1] - range[0]) * unit) as f32
}

pub(crate) fn block_salt(part: u8, sub: Sub) -> u64 {
    (part as u64) * 2 + matches!(sub, Sub::Duration) as u64
}

#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) config: NetworkConfig,
    pub(crate) layout: Layout,
    pub(crate) preset: Vec<PresetSynapse>,
    preset_out: Vec<Vec<u32>>,
    pub(crate) memory: MemoryStore,
    pub(crate) intra: Vec<IntraBlock>,
    pub(crate) rng: ChaCha8Rng,
}

impl Network {
    /// Raw construction; `topology::build_network` validates the config first.
    pub(crate) fn assemble(config: NetworkConfig, preset: Vec<PresetSynapse>) -> Self {
        let layout = Layout::new(config.layers);
        let mut preset_out = vec![Vec::new(); MODE_GROUPS * GROUP_SIZE];
        for s in &preset {
            preset_out[s.pre as usize].push(s.post);
        }
        let intra = (1..=PART_COUNT as u8)
            .flat_map(|p| Sub::ALL.map(|s| (p, s)))
            .map(|(p, s)| {
                IntraBlock::new(
                    s.columns(),
                    config.layers,
                    config.rng_seed,
                    block_salt(p, s),
                    config.weight_init,
                )
            })
            .collect();
        Network {
            layout,
            preset,
            preset_out,
            memory: MemoryStore::new(layout.len()),
            intra,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Generation settings may change on a trained network; the rest of the
    /// configuration is fixed at construction.
    pub fn generation_config_mut(&mut self) -> &mut crate::topology::GenerationConfig {
        &mut self.config.generation
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn neuron_count(&self) -> usize {
        self.layout.len()
    }

    pub fn preset_synapses(&self) -> &[PresetSynapse] {
        &self.preset
    }

    pub(crate) fn preset_out(&self, pre: usize) -> &[u32] {
        self.preset_out.get(pre).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn memory_synapses(&self) -> &[MemorySynapse] {
        &self.memory.synapses
    }

    /// Indices into [`Network::memory_synapses`] of synapses leaving `pre`.
    pub fn memory_out(&self, pre: usize) -> &[u32] {
        &self.memory.out[pre]
    }

    pub fn memory_synapse(&self, pre: usize, post: usize) -> Option<&MemorySynapse> {
        self.memory
            .index
            .get(&(pre as u32, post as u32))
            .map(|&i| &self.memory.synapses[i as usize])
    }

    pub(crate) fn memory_weight_mut(&mut self, id: u32) -> &mut f64 {
        &mut self.memory.synapses[id as usize].weight
    }

    /// Adds a theory-memory synapse with a weight drawn from the plasticity
    /// init range. Returns false if it already exists.
    pub(crate) fn grow_memory_synapse(&mut self, pre: usize, post: usize, formed_o: u32) -> bool {
        if self.memory.index.contains_key(&(pre as u32, post as u32)) {
            return false;
        }
        let [lo, hi] = self.config.plasticity.init_weight_range;
        let weight = if hi > lo {
            self.rng.gen_range(lo..hi)
        } else {
            lo
        };
        self.memory.insert(MemorySynapse {
            pre: pre as u32,
            post: post as u32,
            weight,
            formed_o,
        })
    }

    /// Inserts a theory-memory synapse with an explicit weight (model loading,
    /// hand-built fixtures).
    pub fn insert_memory_synapse(&mut self, pre: NeuronId, post: NeuronId, weight: f64) -> bool {
        let (Some(a), Some(b)) = (self.layout.index(pre), self.layout.index(post)) else {
            return false;
        };
        self.memory.insert(MemorySynapse {
            pre: a as u32,
            post: b as u32,
            weight,
            formed_o: 0,
        })
    }

    pub(crate) fn insert_memory_raw(&mut self, s: MemorySynapse) -> bool {
        self.memory.insert(s)
    }

    fn block_index(part: u8, sub: Sub) -> usize {
        (part as usize - 1) * 2 + matches!(sub, Sub::Duration) as usize
    }

    pub fn intra(&self, part: u8, sub: Sub) -> &IntraBlock {
        &self.intra[Self::block_index(part, sub)]
    }

    pub(crate) fn intra_mut(&mut self, part: u8, sub: Sub) -> &mut IntraBlock {
        &mut self.intra[Self::block_index(part, sub)]
    }

    /// Sets one intra-excitatory weight (fixtures and tests).
    pub fn set_intra_weight(
        &mut self,
        part: u8,
        sub: Sub,
        pre: (usize, usize),
        post: (usize, usize),
        w: f32,
    ) {
        *self
            .intra_mut(part, sub)
            .get_mut(pre.1, pre.0, post.1, post.0) = w;
    }

    pub fn intra_delay(&self, pre_slot: usize, post_slot: usize) -> u64 {
        ((post_slot - pre_slot) * self.config.t_sim) as u64
    }

    pub fn synapse_count(&self, kind: SynapseKind) -> usize {
        let l = self.config.layers;
        let pairs = l * l.saturating_sub(1) / 2;
        let per_part = |f: &dyn Fn(usize) -> usize| {
            PART_COUNT * (f(Sub::Pitch.columns()) + f(Sub::Duration.columns()))
        };
        match kind {
            SynapseKind::TheoryPreset => self.preset.len(),
            SynapseKind::TheoryMemory => self.memory.synapses.len(),
            SynapseKind::IntraExcitatory => per_part(&|c| pairs * c * c),
            SynapseKind::IntraInhibitory => per_part(&|c| l * c * (c - 1)),
        }
    }

    /// Every synapse of the given kind, materialized lazily.
    pub fn synapses(&self, kind: SynapseKind) -> Box<dyn Iterator<Item = Synapse> + '_> {
        let id = move |i: u32| self.layout.id(i as usize);
        match kind {
            SynapseKind::TheoryPreset => Box::new(self.preset.iter().map(move |s| Synapse {
                pre: id(s.pre),
                post: id(s.post),
                weight: self.config.preset_weight,
                delay: 0,
                plastic: false,
                kind,
            })),
            SynapseKind::TheoryMemory => {
                Box::new(self.memory.synapses.iter().map(move |s| Synapse {
                    pre: id(s.pre),
                    post: id(s.post),
                    weight: s.weight,
                    delay: 0,
                    plastic: true,
                    kind,
                }))
            }
            SynapseKind::IntraExcitatory => {
                let l = self.config.layers;
                Box::new(self.sms_blocks().flat_map(move |(part, sub)| {
                    let block = self.intra(part, sub);
                    let cols = sub.columns();
                    (0..l).flat_map(move |s| {
                        (s + 1..l).flat_map(move |s2| {
                            (0..cols).flat_map(move |x| {
                                (0..cols).map(move |y| Synapse {
                                    pre: self.sms_id(part, sub, x, s),
                                    post: self.sms_id(part, sub, y, s2),
                                    weight: block.get(s, x, s2, y) as f64,
                                    delay: self.intra_delay(s, s2),
                                    plastic: true,
                                    kind,
                                })
                            })
                        })
                    })
                }))
            }
            SynapseKind::IntraInhibitory => {
                let l = self.config.layers;
                let w = self.config.inhibitory_weight;
                Box::new(self.sms_blocks().flat_map(move |(part, sub)| {
                    let cols = sub.columns();
                    (0..l).flat_map(move |s| {
                        (0..cols).flat_map(move |x| {
                            (0..cols).filter(move |&y| y != x).map(move |y| Synapse {
                                pre: self.sms_id(part, sub, x, s),
                                post: self.sms_id(part, sub, y, s),
                                weight: w,
                                delay: 0,
                                plastic: false,
                                kind,
                            })
                        })
                    })
                }))
            }
        }
    }

    fn sms_blocks(&self) -> impl Iterator<Item = (u8, Sub)> {
        (1..=PART_COUNT as u8).flat_map(|p| Sub::ALL.map(move |s| (p, s)))
    }

    fn sms_id(&self, part: u8, sub: Sub, col: usize, slot: usize) -> NeuronId {
        match sub {
            Sub::Pitch => NeuronId::pitch(part, col as u8, slot),
            Sub::Duration => NeuronId::duration(part, col, slot),
        }
    }

    pub fn mode_neuron(&self, mode: Mode, role: u8) -> usize {
        self.layout.mode_neuron(mode, role)
    }

    pub fn key_neuron(&self, key: Key, class: crate::score::PitchClass) -> usize {
        self.layout.key_neuron(key, class)
    }
}
