//! Seeded synthetic four-part corpus with pitch classes drawn from each key's
//! canonical profile.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::ks::key_profile;
use crate::network_seed;
use crate::score::{Key, Part, Score, Source, PART_COUNT};

/// Lowest MIDI pitch of each part's one-octave register.
pub const REGISTER_FLOOR: [u8; PART_COUNT] = [60, 55, 50, 43];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub pieces_per_key: usize,
    pub positions: usize,
    /// Duration of every note, in sixty-fourth units.
    pub duration: u8,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pieces_per_key: 20,
            positions: 32,
            duration: 16,
            seed: 0,
        }
    }
}

/// Pitch of class `class` inside the part's register.
pub fn register_pitch(part: usize, class: usize) -> u8 {
    let floor = REGISTER_FLOOR[part];
    floor + ((class + 12 - floor as usize % 12) % 12) as u8
}

pub fn synth_piece(key: Key, index: usize, cfg: &SynthConfig) -> Result<Score> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(network_seed(cfg.seed, &[key.index() as u64, index as u64]));
    let dist = WeightedIndex::new(key_profile(key)).map_err(|e| Error::Config(e.to_string()))?;
    let parts: Vec<Part> = (0..PART_COUNT)
        .map(|j| {
            let notes: Vec<(u8, u8)> = (0..cfg.positions)
                .map(|_| (register_pitch(j, dist.sample(&mut rng)), cfg.duration))
                .collect();
            Part::from_notes(j as u8 + 1, &notes)
        })
        .collect::<Result<_>>()?;
    let parts: [Part; PART_COUNT] = parts.try_into().expect("four parts");
    Score::new(
        parts,
        key,
        format!("synthetic {key} {index}"),
        Source::Generated,
    )
}

/// Every key in `keys` × `pieces_per_key`, ordered key-major.
pub fn synth_corpus(keys: &[Key], cfg: &SynthConfig) -> Result<Vec<Score>> {
    let jobs: Vec<(Key, usize)> = keys
        .iter()
        .flat_map(|&k| (0..cfg.pieces_per_key).map(move |i| (k, i)))
        .collect();
    exec::map(&jobs, |&(k, i)| synth_piece(k, i, cfg))
        .into_iter()
        .collect()
}
