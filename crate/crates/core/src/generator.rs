//! Key-conditioned generation by winner-takes-all readout of the sequence
//! memory.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{duration_column, encode_sequence, encode_theory, StimulusFrame};
use crate::error::{Error, Result};
use crate::exec;
use crate::score::{Key, NoteEvent, Part, PitchClass, Score, Source, PART_COUNT};
use crate::snn::layout::{BlockRef, Sub};
use crate::snn::network::Network;
use crate::snn::sim::{run_window, SimState, SpikeRecord};
use crate::topology::{slot_for_position, TheoryDrive};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub key: Key,
    /// One note per part, soprano first.
    pub seed: [NoteEvent; PART_COUNT],
    /// Positions generated after the seed.
    pub steps: usize,
    pub rng_seed: u64,
}

impl GenerationRequest {
    pub fn new(
        key: Key,
        pitches: [u8; PART_COUNT],
        duration: u8,
        steps: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        let seed = pitches
            .map(|p| NoteEvent::new(p, duration, 0))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(GenerationRequest {
            key,
            seed: seed.try_into().expect("four notes"),
            steps,
            rng_seed,
        })
    }
}

/// Index of the maximal count; ties are broken by `rng`. `None` when every
/// count is zero.
pub fn wta(counts: &[u32], rng: &mut ChaCha8Rng) -> Option<usize> {
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    let tied: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == max).collect();
    if tied.len() == 1 {
        Some(tied[0])
    } else {
        tied.choose(rng).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readout {
    pub position: usize,
    pub part: u8,
    pub sub: Sub,
    /// Column chosen (or repeated when silent).
    pub column: usize,
    /// Number of columns sharing the maximal count.
    pub tied: usize,
    pub silent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub key: Key,
    pub seed_pitches: [u8; PART_COUNT],
    pub steps: usize,
    pub rng_seed: u64,
    pub theory_drive: TheoryDrive,
    /// Readouts that needed the fallback or a tie-break.
    pub flags: Vec<Readout>,
    pub silent_readouts: usize,
    pub tie_breaks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub score: Score,
    pub meta: GenerationMeta,
}

fn theory_frame(
    net: &Network,
    key: Key,
    chord: &[NoteEvent; PART_COUNT],
    position: usize,
) -> StimulusFrame {
    let cfg = net.config();
    let mut frame = match cfg.generation.theory_drive {
        TheoryDrive::Chord => encode_theory(net, chord.iter().map(|n| n.pitch), key),
        TheoryDrive::Group => {
            let mut f = StimulusFrame::new(position, Some(key));
            for pc in PitchClass::all() {
                f.set(net.key_neuron(key, pc), cfg.alpha_key);
                f.set(
                    net.mode_neuron(key.mode, pc.offset_from(key.tonic)),
                    cfg.alpha_mode,
                );
            }
            f
        }
    };
    frame.position = position;
    frame
}

fn column_counts(net: &Network, rec: &SpikeRecord, block: BlockRef) -> Vec<u32> {
    let range = net.layout().block(block);
    let mut counts = vec![0u32; range.len()];
    for &(n, _) in &rec.spikes {
        let n = n as usize;
        if range.contains(&n) {
            counts[n - range.start] += 1;
        }
    }
    counts
}

/// Generates `steps` chords after the seed under the requested key.
pub fn generate(net: &Network, req: &GenerationRequest) -> Result<Generated> {
    if req.steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let cfg = net.config();
    let mut rng = ChaCha8Rng::seed_from_u64(req.rng_seed);
    let mut state = SimState::new(net);
    let mut chord = req.seed.map(|n| NoteEvent { position: 0, ..n });
    let mut parts: [Vec<NoteEvent>; PART_COUNT] = std::array::from_fn(|j| vec![chord[j]]);
    let mut flags = Vec::new();
    let (mut silent, mut ties) = (0, 0);

    let mut frame = encode_sequence(net, &chord.map(Some), 0);
    frame.merge(&theory_frame(net, req.key, &chord, 0));
    let rec = run_window(net, &mut state, &frame)?;
    let mut winners: [[usize; 2]; PART_COUNT] =
        std::array::from_fn(|j| [chord[j].pitch as usize, duration_column(chord[j].duration)]);
    cancel_losers(net, &mut state, &rec, &winners);

    for pos in 1..=req.steps {
        let frame = theory_frame(net, req.key, &chord, pos);
        let rec = run_window(net, &mut state, &frame)?;
        let slot = slot_for_position(pos, cfg.layers);
        for j in 0..PART_COUNT {
            for (s, sub) in Sub::ALL.into_iter().enumerate() {
                let block = BlockRef {
                    part: j as u8 + 1,
                    sub,
                    slot,
                };
                let counts = column_counts(net, &rec, block);
                let max = counts.iter().copied().max().unwrap_or(0);
                let tied = counts.iter().filter(|&&c| c == max && max > 0).count();
                let choice = wta(&counts, &mut rng);
                if let Some(c) = choice {
                    winners[j][s] = c;
                }
                if choice.is_none() || tied > 1 {
                    silent += choice.is_none() as usize;
                    ties += (tied > 1) as usize;
                    flags.push(Readout {
                        position: pos,
                        part: j as u8 + 1,
                        sub,
                        column: winners[j][s],
                        tied,
                        silent: choice.is_none(),
                    });
                }
            }
            chord[j] = NoteEvent::new(winners[j][0] as u8, winners[j][1] as u8 + 1, pos as u32)?;
            parts[j].push(chord[j]);
        }
        cancel_losers(net, &mut state, &rec, &winners);
    }

    let parts: [Part; PART_COUNT] = std::array::from_fn(|j| Part {
        voice_index: j as u8 + 1,
        events: std::mem::take(&mut parts[j]),
    });
    let score = Score::new(
        parts,
        req.key,
        format!("generated {}", req.key),
        Source::Generated,
    )?;
    Ok(Generated {
        score,
        meta: GenerationMeta {
            key: req.key,
            seed_pitches: req.seed.map(|n| n.pitch),
            steps: req.steps,
            rng_seed: req.rng_seed,
            theory_drive: cfg.generation.theory_drive,
            flags,
            silent_readouts: silent,
            tie_breaks: ties,
        },
    })
}

/// Removes pending sequence deliveries emitted during `rec` by columns other
/// than the winners, so only the chosen chord propagates forward.
fn cancel_losers(
    net: &Network,
    state: &mut SimState,
    rec: &SpikeRecord,
    winners: &[[usize; 2]; PART_COUNT],
) {
    if !net.config().generation.cancel_losers {
        return;
    }
    let slot = rec.slot as u16;
    state.retain_pending(|f| {
        if f.pre_slot != slot || f.emitted < rec.start {
            return true;
        }
        let s = matches!(f.sub, Sub::Duration) as usize;
        f.pre_column as usize == winners[f.part as usize - 1][s]
    });
}

/// Runs independent requests, in parallel when enabled.
pub fn generate_batch(net: &Network, reqs: &[GenerationRequest]) -> Vec<Result<Generated>> {
    exec::map(reqs, |r| generate(net, r))
}
