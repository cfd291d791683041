//! Network configuration and construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plasticity::PlasticityConfig;
use crate::score::{diatonic_set, Key, Mode, PitchClass};
use crate::snn::network::{Network, PresetSynapse};
use crate::snn::neuron::IzhikevichParams;

/// How the theory clusters are driven while generating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryDrive {
    /// The previous chord, re-encoded against the requested key.
    Chord,
    /// Every neuron of the requested key group and its mode group.
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub theory_drive: TheoryDrive,
    /// Drop pending sequence spikes of the losing minicolumns once a winner is chosen.
    pub cancel_losers: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            theory_drive: TheoryDrive::Group,
            cancel_losers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Slots (layers) per minicolumn.
    pub layers: usize,
    /// Timesteps simulated per note position.
    pub t_sim: usize,
    /// Uniform range for the initial sequence-memory excitatory weights.
    pub weight_init: [f64; 2],
    pub rng_seed: u64,
    pub neuron: IzhikevichParams,
    pub plasticity: PlasticityConfig,
    pub alpha_mode: f64,
    pub alpha_key: f64,
    pub alpha_pitch: f64,
    pub alpha_duration: f64,
    pub inhibitory_weight: f64,
    pub preset_weight: f64,
    /// Only the slot of the current position integrates input; the slot is
    /// returned to rest when its window closes.
    pub layer_gating: bool,
    pub generation: GenerationConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            layers: 32,
            t_sim: 50,
            weight_init: [0.0, 0.5],
            rng_seed: 0,
            neuron: IzhikevichParams::default(),
            plasticity: PlasticityConfig::default(),
            alpha_mode: 50.0,
            alpha_key: 50.0,
            alpha_pitch: 30.0,
            alpha_duration: 30.0,
            inhibitory_weight: -2.0,
            preset_weight: 1.0,
            layer_gating: true,
            generation: GenerationConfig::default(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.layers < 2 {
            return bad("layers must be at least 2");
        }
        if self.layers > u16::MAX as usize {
            return bad("layers too large");
        }
        if self.t_sim < 1 {
            return bad("t_sim must be at least 1");
        }
        let alphas = [
            self.alpha_mode,
            self.alpha_key,
            self.alpha_pitch,
            self.alpha_duration,
        ];
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("scale factors must be positive");
        }
        let [lo, hi] = self.weight_init;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad("weight_init must be an ordered nonnegative range");
        }
        if hi > self.plasticity.w_max {
            return bad("weight_init exceeds w_max");
        }
        if !self.inhibitory_weight.is_finite() || self.inhibitory_weight > 0.0 {
            return bad("inhibitory_weight must be nonpositive");
        }
        if !self.preset_weight.is_finite() {
            return bad("preset_weight must be finite");
        }
        self.plasticity.validate()
    }
}

/// Builds the theory clusters, the sequence-memory grids and their fixed
/// connectivity. No theory-memory synapses exist initially.
pub fn build_network(config: NetworkConfig) -> Result<Network> {
    config.validate()?;
    let preset = preset_synapses();
    Ok(Network::assemble(config, preset))
}

/// Mode-group degree neuron to the matching degree neuron of every same-mode
/// key group (2 × 7 × 12).
fn preset_synapses() -> Vec<PresetSynapse> {
    let layout = crate::snn::layout::Layout::new(2);
    let mut out = Vec::new();
    for mode in [Mode::Major, Mode::Minor] {
        for tonic in PitchClass::all() {
            let key = Key::new(tonic, mode);
            for pc in diatonic_set(key) {
                let role = pc.offset_from(tonic);
                out.push(PresetSynapse {
                    pre: layout.mode_neuron(mode, role) as u32,
                    post: layout.key_neuron(key, pc) as u32,
                });
            }
        }
    }
    out.sort_by_key(|s| (s.pre, s.post));
    out
}

pub fn slot_for_position(position: usize, layers: usize) -> usize {
    position % layers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::layout::Subsystem;
    use crate::snn::network::SynapseKind;

    fn small() -> NetworkConfig {
        NetworkConfig {
            layers: 3,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn population_and_presets() {
        let net = build_network(small()).unwrap();
        assert_eq!(net.synapse_count(SynapseKind::TheoryPreset), 168);
        assert_eq!(net.synapse_count(SynapseKind::TheoryMemory), 0);
        let modes = (0..net.neuron_count())
            .filter(|&i| net.layout().id(i).subsystem == Subsystem::ModeCluster)
            .count();
        assert_eq!(modes, 24);
    }

    #[test]
    fn presets_link_identical_roles() {
        let net = build_network(small()).unwrap();
        for s in net.synapses(SynapseKind::TheoryPreset) {
            assert_eq!(s.pre.subsystem, Subsystem::ModeCluster);
            assert_eq!(s.post.subsystem, Subsystem::KeyCluster);
            let key = Key::from_index(s.post.column as usize);
            assert_eq!(key.mode.index(), s.pre.column as usize);
            let role = PitchClass::wrapping(s.post.slot as i32).offset_from(key.tonic);
            assert_eq!(role as u16, s.pre.slot);
            assert!(!s.plastic && s.delay == 0);
        }
    }

    #[test]
    fn slot_audit() {
        let net = build_network(small()).unwrap();
        let mut exc = 0;
        for s in net.synapses(SynapseKind::IntraExcitatory) {
            assert!(s.pre.slot < s.post.slot);
            assert_eq!(s.pre.part, s.post.part);
            assert_eq!(s.pre.subsystem, s.post.subsystem);
            assert_eq!(s.delay, (s.post.slot - s.pre.slot) as u64 * 50);
            assert!((0.0..=0.5).contains(&s.weight));
            exc += 1;
        }
        assert_eq!(exc, net.synapse_count(SynapseKind::IntraExcitatory));
        assert_eq!(exc, 4 * 3 * (128 * 128 + 64 * 64));
        for s in net.synapses(SynapseKind::IntraInhibitory) {
            assert_eq!(s.pre.slot, s.post.slot);
            assert_ne!(s.pre.column, s.post.column);
        }
    }

    #[test]
    fn no_theory_to_duration_pathway() {
        let net = build_network(small()).unwrap();
        for kind in [SynapseKind::TheoryPreset, SynapseKind::TheoryMemory] {
            for s in net.synapses(kind) {
                assert_ne!(s.post.subsystem, Subsystem::Duration);
            }
        }
    }

    #[test]
    fn slots_wrap() {
        assert_eq!(slot_for_position(0, 32), 0);
        assert_eq!(slot_for_position(32, 32), 0);
        assert_eq!(slot_for_position(5, 32), 5);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(build_network(NetworkConfig {
            layers: 1,
            ..NetworkConfig::default()
        })
        .is_err());
        assert!(build_network(NetworkConfig {
            alpha_key: 0.0,
            ..NetworkConfig::default()
        })
        .is_err());
        assert!(build_network(NetworkConfig {
            t_sim: 0,
            ..NetworkConfig::default()
        })
        .is_err());
    }
}
