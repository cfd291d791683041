//! Dense neuron indexing.
//!
//! Theory neurons come first (2 mode groups, then 24 key groups, 12 neurons
//! each), followed by one sequential-memory segment per part. A segment holds
//! the pitch grid (`layers × 128`) then the duration grid (`layers × 64`), both
//! slot-major so that one slot of one subnetwork is a contiguous block.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::score::{Key, Mode, PitchClass, PART_COUNT};

pub const PITCH_COLUMNS: usize = 128;
pub const DURATION_COLUMNS: usize = 64;
pub const GROUP_SIZE: usize = 12;
pub const MODE_GROUPS: usize = 2;
pub const KEY_GROUPS: usize = 24;
pub const THEORY_NEURONS: usize = (MODE_GROUPS + KEY_GROUPS) * GROUP_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    ModeCluster,
    KeyCluster,
    Pitch,
    Duration,
}

/// The two sequential-memory subnetworks of a part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sub {
    Pitch,
    Duration,
}

impl Sub {
    pub const ALL: [Sub; 2] = [Sub::Pitch, Sub::Duration];

    pub fn columns(self) -> usize {
        match self {
            Sub::Pitch => PITCH_COLUMNS,
            Sub::Duration => DURATION_COLUMNS,
        }
    }

    pub fn subsystem(self) -> Subsystem {
        match self {
            Sub::Pitch => Subsystem::Pitch,
            Sub::Duration => Subsystem::Duration,
        }
    }
}

/// Structured neuron identity.
///
/// For theory neurons `column` is the group (mode 0..2, key 0..24) and `slot`
/// is the tone within the group (0..12: scale-degree offset for mode groups,
/// absolute pitch class for key groups). For memory neurons `column` is the
/// minicolumn and `slot` the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeuronId {
    pub subsystem: Subsystem,
    pub part: Option<u8>,
    pub column: u16,
    pub slot: u16,
}

impl NeuronId {
    pub fn mode(mode: Mode, role: u8) -> Self {
        NeuronId {
            subsystem: Subsystem::ModeCluster,
            part: None,
            column: mode.index() as u16,
            slot: role as u16,
        }
    }

    pub fn key(key: Key, class: PitchClass) -> Self {
        NeuronId {
            subsystem: Subsystem::KeyCluster,
            part: None,
            column: key.index() as u16,
            slot: class.index() as u16,
        }
    }

    pub fn pitch(part: u8, column: u8, slot: usize) -> Self {
        NeuronId {
            subsystem: Subsystem::Pitch,
            part: Some(part),
            column: column as u16,
            slot: slot as u16,
        }
    }

    pub fn duration(part: u8, column: usize, slot: usize) -> Self {
        NeuronId {
            subsystem: Subsystem::Duration,
            part: Some(part),
            column: column as u16,
            slot: slot as u16,
        }
    }

    pub fn is_theory(&self) -> bool {
        matches!(
            self.subsystem,
            Subsystem::ModeCluster | Subsystem::KeyCluster
        )
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subsystem {
            Subsystem::ModeCluster => write!(f, "mode:{}:{}", self.column, self.slot),
            Subsystem::KeyCluster => write!(f, "key:{}:{}", self.column, self.slot),
            Subsystem::Pitch => write!(
                f,
                "pitch:{}:{}:{}",
                self.part.unwrap_or(0),
                self.column,
                self.slot
            ),
            Subsystem::Duration => write!(
                f,
                "dur:{}:{}:{}",
                self.part.unwrap_or(0),
                self.column,
                self.slot
            ),
        }
    }
}

impl FromStr for NeuronId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("bad neuron id `{s}`"));
        let mut it = s.split(':');
        let kind = it.next().ok_or_else(bad)?;
        let nums: Vec<u16> = it
            .map(|x| x.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (subsystem, part, column, slot) = match (kind, nums.as_slice()) {
            ("mode", &[g, t]) => (Subsystem::ModeCluster, None, g, t),
            ("key", &[g, t]) => (Subsystem::KeyCluster, None, g, t),
            ("pitch", &[p, c, l]) => (Subsystem::Pitch, Some(p as u8), c, l),
            ("dur", &[p, c, l]) => (Subsystem::Duration, Some(p as u8), c, l),
            _ => return Err(bad()),
        };
        Ok(NeuronId {
            subsystem,
            part,
            column,
            slot,
        })
    }
}

impl Serialize for NeuronId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NeuronId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A contiguous slot block of one subnetwork of one part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockRef {
    pub part: u8,
    pub sub: Sub,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    layers: usize,
}

impl Layout {
    pub fn new(layers: usize) -> Self {
        Layout { layers }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    fn segment_len(&self) -> usize {
        self.layers * (PITCH_COLUMNS + DURATION_COLUMNS)
    }

    pub fn len(&self) -> usize {
        THEORY_NEURONS + PART_COUNT * self.segment_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theory_range(&self) -> Range<usize> {
        0..THEORY_NEURONS
    }

    pub fn is_theory(&self, idx: usize) -> bool {
        idx < THEORY_NEURONS
    }

    pub fn mode_neuron(&self, mode: Mode, role: u8) -> usize {
        mode.index() * GROUP_SIZE + role as usize
    }

    pub fn key_neuron(&self, key: Key, class: PitchClass) -> usize {
        (MODE_GROUPS + key.index()) * GROUP_SIZE + class.index() as usize
    }

    fn sub_base(&self, part: u8, sub: Sub) -> usize {
        let seg = THEORY_NEURONS + (part as usize - 1) * self.segment_len();
        match sub {
            Sub::Pitch => seg,
            Sub::Duration => seg + self.layers * PITCH_COLUMNS,
        }
    }

    pub fn block(&self, b: BlockRef) -> Range<usize> {
        let cols = b.sub.columns();
        let start = self.sub_base(b.part, b.sub) + b.slot * cols;
        start..start + cols
    }

    pub fn sms(&self, part: u8, sub: Sub, column: usize, slot: usize) -> usize {
        self.sub_base(part, sub) + slot * sub.columns() + column
    }

    pub fn pitch(&self, part: u8, column: u8, slot: usize) -> usize {
        self.sms(part, Sub::Pitch, column as usize, slot)
    }

    pub fn duration(&self, part: u8, column: usize, slot: usize) -> usize {
        self.sms(part, Sub::Duration, column, slot)
    }

    /// Part, subnetwork, column and slot of a memory neuron.
    pub fn locate(&self, idx: usize) -> Option<(BlockRef, usize)> {
        if idx < THEORY_NEURONS || idx >= self.len() {
            return None;
        }
        let rel = idx - THEORY_NEURONS;
        let part = (rel / self.segment_len()) as u8 + 1;
        let within = rel % self.segment_len();
        let pitch_len = self.layers * PITCH_COLUMNS;
        let (sub, within) = if within < pitch_len {
            (Sub::Pitch, within)
        } else {
            (Sub::Duration, within - pitch_len)
        };
        let cols = sub.columns();
        Some((
            BlockRef {
                part,
                sub,
                slot: within / cols,
            },
            within % cols,
        ))
    }

    pub fn index(&self, id: NeuronId) -> Option<usize> {
        let slot = id.slot as usize;
        let col = id.column as usize;
        match id.subsystem {
            Subsystem::ModeCluster if col < MODE_GROUPS && slot < GROUP_SIZE => {
                Some(col * GROUP_SIZE + slot)
            }
            Subsystem::KeyCluster if col < KEY_GROUPS && slot < GROUP_SIZE => {
                Some((MODE_GROUPS + col) * GROUP_SIZE + slot)
            }
            Subsystem::Pitch | Subsystem::Duration => {
                let part = id.part?;
                let sub = if id.subsystem == Subsystem::Pitch {
                    Sub::Pitch
                } else {
                    Sub::Duration
                };
                if !(1..=PART_COUNT as u8).contains(&part)
                    || col >= sub.columns()
                    || slot >= self.layers
                {
                    return None;
                }
                Some(self.sms(part, sub, col, slot))
            }
            _ => None,
        }
    }

    pub fn id(&self, idx: usize) -> NeuronId {
        if idx < MODE_GROUPS * GROUP_SIZE {
            NeuronId {
                subsystem: Subsystem::ModeCluster,
                part: None,
                column: (idx / GROUP_SIZE) as u16,
                slot: (idx % GROUP_SIZE) as u16,
            }
        } else if idx < THEORY_NEURONS {
            let k = idx - MODE_GROUPS * GROUP_SIZE;
            NeuronId {
                subsystem: Subsystem::KeyCluster,
                part: None,
                column: (k / GROUP_SIZE) as u16,
                slot: (k % GROUP_SIZE) as u16,
            }
        } else {
            let (b, col) = self.locate(idx).expect("neuron index out of range");
            NeuronId {
                subsystem: b.sub.subsystem(),
                part: Some(b.part),
                column: col as u16,
                slot: b.slot as u16,
            }
        }
    }

    /// Pitch class of the minicolumn a pitch neuron sits in.
    pub fn pitch_class_of(&self, idx: usize) -> Option<PitchClass> {
        match self.locate(idx) {
            Some((
                BlockRef {
                    sub: Sub::Pitch, ..
                },
                col,
            )) => Some(PitchClass::wrapping(col as i32)),
            _ => None,
        }
    }

    pub fn is_pitch(&self, idx: usize) -> bool {
        matches!(
            self.locate(idx),
            Some((
                BlockRef {
                    sub: Sub::Pitch,
                    ..
                },
                _
            ))
        )
    }
}
