//! Symbolic stimuli to external input currents.

use std::collections::BTreeMap;

use crate::score::{Key, NoteEvent, PitchClass, MAX_DURATION, PART_COUNT};
use crate::snn::network::Network;
use crate::topology::slot_for_position;

/// External currents held constant over one window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulusFrame {
    pub position: usize,
    pub key: Option<Key>,
    currents: BTreeMap<u32, f64>,
}

impl StimulusFrame {
    pub fn new(position: usize, key: Option<Key>) -> Self {
        StimulusFrame {
            position,
            key,
            currents: BTreeMap::new(),
        }
    }

    /// Sets (not adds) the current of one neuron.
    pub fn set(&mut self, neuron: usize, current: f64) {
        self.currents.insert(neuron as u32, current);
    }

    pub fn get(&self, neuron: usize) -> f64 {
        self.currents.get(&(neuron as u32)).copied().unwrap_or(0.0)
    }

    pub fn currents(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.currents.iter().map(|(&n, &c)| (n as usize, c))
    }

    pub fn len(&self) -> usize {
        self.currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currents.is_empty()
    }

    pub fn merge(&mut self, other: &StimulusFrame) {
        self.currents
            .extend(other.currents.iter().map(|(&n, &c)| (n, c)));
        if self.key.is_none() {
            self.key = other.key;
        }
    }
}

/// Duration minicolumn for a duration in units; column `k` prefers `k + 1` units.
pub fn duration_column(units: u8) -> usize {
    assert!(
        (1..=MAX_DURATION).contains(&units),
        "duration {units} out of range"
    );
    units as usize - 1
}

/// Key-group neuron of each pitch's class and the mode-group neuron of its
/// offset from the tonic (chromatic offsets included).
pub fn encode_theory(
    net: &Network,
    pitches: impl IntoIterator<Item = u8>,
    key: Key,
) -> StimulusFrame {
    let cfg = net.config();
    let mut frame = StimulusFrame::new(0, Some(key));
    for p in pitches {
        let pc = PitchClass::wrapping(p as i32);
        frame.set(net.key_neuron(key, pc), cfg.alpha_key);
        frame.set(
            net.mode_neuron(key.mode, pc.offset_from(key.tonic)),
            cfg.alpha_mode,
        );
    }
    frame
}

/// Pitch and duration minicolumns of each sounding part at the position's slot.
pub fn encode_sequence(
    net: &Network,
    chord: &[Option<NoteEvent>; PART_COUNT],
    position: usize,
) -> StimulusFrame {
    let cfg = net.config();
    let slot = slot_for_position(position, cfg.layers);
    let mut frame = StimulusFrame::new(position, None);
    for (j, note) in chord.iter().enumerate() {
        let Some(n) = note else { continue };
        let part = j as u8 + 1;
        frame.set(net.layout().pitch(part, n.pitch, slot), cfg.alpha_pitch);
        frame.set(
            net.layout()
                .duration(part, duration_column(n.duration), slot),
            cfg.alpha_duration,
        );
    }
    frame
}

/// Theory plus sequence stimulus for one position of a score.
pub fn encode_position(
    net: &Network,
    chord: &[Option<NoteEvent>; PART_COUNT],
    key: Key,
    position: usize,
) -> StimulusFrame {
    let mut frame = encode_sequence(net, chord, position);
    frame.merge(&encode_theory(
        net,
        chord.iter().flatten().map(|n| n.pitch),
        key,
    ));
    frame.key = Some(key);
    frame
}
