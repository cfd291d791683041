//! Corpus training: encode, simulate, grow synapses and apply STDP, one note
//! position at a time.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::encoding::encode_position;
use crate::error::Result;
use crate::plasticity::{maybe_create_synapses, stdp_update};
use crate::score::Score;
use crate::snn::network::Network;
use crate::snn::sim::{run_window, SimState};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub pieces: usize,
    pub skipped: usize,
    pub positions: usize,
    pub spikes: u64,
    pub synapses_created: u64,
    pub weight_updates: u64,
    pub abs_delta_sum: f64,
}

impl TrainStats {
    pub fn mean_abs_delta(&self) -> f64 {
        if self.weight_updates == 0 {
            0.0
        } else {
            self.abs_delta_sum / self.weight_updates as f64
        }
    }

    pub fn absorb(&mut self, other: &TrainStats) {
        self.pieces += other.pieces;
        self.skipped += other.skipped;
        self.positions += other.positions;
        self.spikes += other.spikes;
        self.synapses_created += other.synapses_created;
        self.weight_updates += other.weight_updates;
        self.abs_delta_sum += other.abs_delta_sum;
    }
}

/// Trains one piece from a rested network state. Parts shorter than the
/// longest part are silent past their end.
pub fn train_piece(net: &mut Network, score: &Score) -> Result<TrainStats> {
    let mut state = SimState::new(net);
    train_piece_with(net, &mut state, score)
}

fn train_piece_with(net: &mut Network, state: &mut SimState, score: &Score) -> Result<TrainStats> {
    let mut stats = TrainStats::default();
    if score.is_empty() {
        warn!("event=skip_empty title={:?}", score.title);
        return Ok(stats);
    }
    state.reset();
    for pos in 0..score.positions() {
        let chord = score.chord_at(pos);
        let frame = encode_position(net, &chord, score.key, pos);
        let rec = run_window(net, state, &frame)?;
        stats.spikes += rec.len() as u64;
        stats.synapses_created += maybe_create_synapses(&rec, net) as u64;
        for d in stdp_update(&rec, net) {
            stats.weight_updates += 1;
            stats.abs_delta_sum += d.delta.abs();
        }
    }
    stats.pieces = 1;
    stats.positions = score.positions();
    Ok(stats)
}

/// Trains every piece in order for `epochs` passes. A piece that fails is
/// logged and counted as skipped.
pub fn train_corpus(net: &mut Network, scores: &[Score], epochs: usize) -> TrainStats {
    let mut total = TrainStats::default();
    let mut state = SimState::new(net);
    for epoch in 0..epochs {
        for (i, score) in scores.iter().enumerate() {
            match train_piece_with(net, &mut state, score) {
                Ok(s) => {
                    info!(
                        "epoch={} piece={} title={:?} positions={} spikes={} created={} synapses={} mean_abs_dw={:.6}",
                        epoch,
                        i,
                        score.title,
                        s.positions,
                        s.spikes,
                        s.synapses_created,
                        net.memory_synapses().len(),
                        s.mean_abs_delta()
                    );
                    total.absorb(&s);
                }
                Err(e) => {
                    warn!(
                        "epoch={} piece={} event=skip reason={:?}",
                        epoch,
                        i,
                        e.to_string()
                    );
                    total.skipped += 1;
                }
            }
        }
    }
    total
}
