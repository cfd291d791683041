//! Synaptogenesis between co-active theory and pitch neurons, and
//! delay-aware STDP.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::layout::{BlockRef, Sub, THEORY_NEURONS};
use crate::snn::network::{Network, SynapseKind};
use crate::snn::sim::SpikeRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlasticityConfig {
    /// Coincident spike pairs needed to grow a synapse.
    pub o_threshold: u32,
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    /// Two spikes coincide when their times differ by at most this many steps.
    pub coincidence_window: u64,
    pub init_weight_range: [f64; 2],
    pub w_max: f64,
    /// Apply STDP to the sequence-memory excitatory synapses.
    pub learn_intra: bool,
}

impl Default for PlasticityConfig {
    fn default() -> Self {
        PlasticityConfig {
            o_threshold: 5,
            a_plus: 0.1,
            a_minus: 0.1,
            tau_plus: 20.0,
            tau_minus: 20.0,
            coincidence_window: 5,
            init_weight_range: [0.0, 0.5],
            w_max: 5.0,
            learn_intra: true,
        }
    }
}

impl PlasticityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.o_threshold < 1 {
            return bad("plasticity.o_threshold must be at least 1");
        }
        let pos = [
            self.a_plus,
            self.a_minus,
            self.tau_plus,
            self.tau_minus,
            self.w_max,
        ];
        if pos.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return bad("plasticity constants must be positive");
        }
        let [lo, hi] = self.init_weight_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= self.w_max) {
            return bad("plasticity.init_weight_range must lie within [0, w_max]");
        }
        Ok(())
    }

    /// STDP window W(Δt), with W(0) = 0.
    pub fn kernel(&self, dt: f64) -> f64 {
        if dt > 0.0 {
            self.a_plus * (-dt / self.tau_plus).exp()
        } else if dt < 0.0 {
            -self.a_minus * (dt / self.tau_minus).exp()
        } else {
            0.0
        }
    }

    /// Σ over all pre/post pairs of W(t_post − t_pre − delay).
    pub fn delta(&self, pre: &[u64], post: &[u64], delay: u64) -> f64 {
        let mut dw = 0.0;
        for &tp in pre {
            for &tq in post {
                dw += self.kernel(tq as f64 - tp as f64 - delay as f64);
            }
        }
        dw
    }
}

/// Number of spike pairs (one from each train) at most `window` steps apart.
pub fn coincidences(a: &[u64], b: &[u64], window: u64) -> u32 {
    let mut o = 0;
    for &x in a {
        for &y in b {
            if x.abs_diff(y) <= window {
                o += 1;
            }
        }
    }
    o
}

/// One applied weight change, endpoints as dense neuron indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDelta {
    pub pre: u32,
    pub post: u32,
    pub kind: SynapseKind,
    /// Weight after clamping minus weight before.
    pub delta: f64,
}

/// Grows a synapse pair (both directions) between every theory neuron and
/// pitch neuron that co-spiked at least `o_threshold` times in the window.
pub fn maybe_create_synapses(record: &SpikeRecord, net: &mut Network) -> usize {
    let cfg = net.config().plasticity.clone();
    let trains = record.by_neuron();
    let layout = *net.layout();
    let theory: Vec<_> = trains.range(..THEORY_NEURONS as u32).collect();
    let pitch: Vec<_> = trains
        .range(THEORY_NEURONS as u32..)
        .filter(|(&n, _)| layout.is_pitch(n as usize))
        .collect();
    let mut created = 0;
    for (&i, ti) in &theory {
        for (&j, tj) in &pitch {
            if net.memory_synapse(i as usize, j as usize).is_some()
                && net.memory_synapse(j as usize, i as usize).is_some()
            {
                continue;
            }
            let o = coincidences(ti, tj, cfg.coincidence_window);
            if o >= cfg.o_threshold {
                created += net.grow_memory_synapse(i as usize, j as usize, o) as usize;
                created += net.grow_memory_synapse(j as usize, i as usize, o) as usize;
            }
        }
    }
    created
}

/// Applies STDP over every plastic synapse whose endpoints were active in the
/// window. Theory-memory synapses pair spikes directly (zero delay); sequence
/// synapses pair each delayed arrival with the postsynaptic spikes of its
/// target block.
pub fn stdp_update(record: &SpikeRecord, net: &mut Network) -> Vec<WeightDelta> {
    let cfg = net.config().plasticity.clone();
    let trains = record.by_neuron();
    let mut out = Vec::new();

    for (&pre, pre_t) in &trains {
        let ids: Vec<u32> = net.memory_out(pre as usize).to_vec();
        for id in ids {
            let post = net.memory_synapses()[id as usize].post;
            let Some(post_t) = trains.get(&post) else {
                continue;
            };
            let dw = cfg.delta(pre_t, post_t, 0);
            if dw == 0.0 {
                continue;
            }
            let w = net.memory_weight_mut(id);
            let old = *w;
            *w = (old + dw).clamp(0.0, cfg.w_max);
            out.push(WeightDelta {
                pre,
                post,
                kind: SynapseKind::TheoryMemory,
                delta: *w - old,
            });
        }
    }

    if !cfg.learn_intra || record.arrivals.is_empty() {
        return out;
    }
    // arrival times per (part, sub, pre_slot, pre_column, post_slot)
    let mut pre_trains: BTreeMap<(u8, Sub, u16, u16, u16), Vec<u64>> = BTreeMap::new();
    for a in &record.arrivals {
        let f = a.fanout;
        pre_trains
            .entry((f.part, f.sub, f.pre_slot, f.pre_column, f.post_slot))
            .or_default()
            .push(a.t);
    }
    let layout = *net.layout();
    for ((part, sub, pre_slot, pre_col, post_slot), arrivals) in pre_trains {
        let block = layout.block(BlockRef {
            part,
            sub,
            slot: post_slot as usize,
        });
        let pre = layout.sms(part, sub, pre_col as usize, pre_slot as usize) as u32;
        for (&post, post_t) in trains.range(block.start as u32..block.end as u32) {
            // arrival times already include the delay
            let dw = cfg.delta(&arrivals, post_t, 0);
            if dw == 0.0 {
                continue;
            }
            let y = post as usize - block.start;
            let w = net.intra_mut(part, sub).get_mut(
                pre_slot as usize,
                pre_col as usize,
                post_slot as usize,
                y,
            );
            let old = *w;
            *w = (old as f64 + dw).clamp(0.0, cfg.w_max) as f32;
            out.push(WeightDelta {
                pre,
                post,
                kind: SynapseKind::IntraExcitatory,
                delta: *w as f64 - old as f64,
            });
        }
    }
    out
}
