//! Dynamic state and the per-timestep simulation loop.

use std::collections::BTreeMap;
use std::ops::Range;

use super::layout::{BlockRef, NeuronId, Sub, THEORY_NEURONS};
use super::network::Network;
use super::neuron::NeuronState;
use super::queue::{FanOut, SpikeQueue};
use crate::encoding::StimulusFrame;
use crate::error::{Error, Result};
use crate::exec;
use crate::score::PART_COUNT;
use crate::topology::slot_for_position;

/// A delayed sequence-memory delivery observed during a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub fanout: FanOut,
    pub t: u64,
}

/// Spikes emitted (and delayed deliveries received) during one window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpikeRecord {
    pub position: usize,
    pub slot: usize,
    pub start: u64,
    pub end: u64,
    /// (neuron, timestep) in emission order.
    pub spikes: Vec<(u32, u64)>,
    pub arrivals: Vec<Arrival>,
}

impl SpikeRecord {
    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn by_neuron(&self) -> BTreeMap<u32, Vec<u64>> {
        let mut m: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for &(n, t) in &self.spikes {
            m.entry(n).or_default().push(t);
        }
        m
    }

    pub fn count(&self, neuron: usize) -> usize {
        self.spikes
            .iter()
            .filter(|s| s.0 as usize == neuron)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    v: Vec<f64>,
    u: Vec<f64>,
    input: Vec<f64>,
    ext: Vec<f64>,
    queue: SpikeQueue,
    t: u64,
    /// Slot being simulated when layer gating is on.
    gate: Option<usize>,
    rest: NeuronState,
    spiking: Vec<u32>,
    arrivals: Vec<FanOut>,
    inhibit: Vec<(usize, u32)>,
}

impl SimState {
    pub fn new(net: &Network) -> Self {
        let n = net.neuron_count();
        let rest = net.config().neuron.resting_state();
        let horizon = net.config().layers * net.config().t_sim + 1;
        SimState {
            v: vec![rest.v; n],
            u: vec![rest.u; n],
            input: vec![0.0; n],
            ext: vec![0.0; n],
            queue: SpikeQueue::new(horizon),
            t: 0,
            gate: None,
            rest,
            spiking: Vec::new(),
            arrivals: Vec::new(),
            inhibit: Vec::new(),
        }
    }

    /// Every neuron to rest, queue emptied, clock to zero.
    pub fn reset(&mut self) {
        self.v.fill(self.rest.v);
        self.u.fill(self.rest.u);
        self.ext.fill(0.0);
        self.queue.clear(0);
        self.t = 0;
        self.gate = None;
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn neuron(&self, idx: usize) -> NeuronState {
        NeuronState::new(self.v[idx], self.u[idx])
    }

    pub fn set_neuron(&mut self, idx: usize, s: NeuronState) {
        self.v[idx] = s.v;
        self.u[idx] = s.u;
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn queue(&self) -> &SpikeQueue {
        &self.queue
    }

    /// Drops pending deliveries for which `keep` is false.
    pub fn retain_pending(&mut self, keep: impl FnMut(&FanOut) -> bool) {
        self.queue.retain(keep);
    }

    /// Restricts integration to one slot (layer gating); `None` integrates all.
    pub fn set_gate(&mut self, slot: Option<usize>) {
        self.gate = slot;
    }

    fn active(&self, net: &Network) -> Vec<Range<usize>> {
        match self.gate {
            None => std::iter::once(0..net.neuron_count()).collect(),
            Some(slot) => {
                let mut r = Vec::with_capacity(1 + PART_COUNT * 2);
                r.push(0..THEORY_NEURONS);
                for part in 1..=PART_COUNT as u8 {
                    for sub in Sub::ALL {
                        r.push(net.layout().block(BlockRef { part, sub, slot }));
                    }
                }
                r
            }
        }
    }

    fn load(&mut self, frame: &StimulusFrame) {
        for (n, c) in frame.currents() {
            self.ext[n] = c;
        }
    }

    fn unload(&mut self, frame: &StimulusFrame) {
        for (n, _) in frame.currents() {
            self.ext[n] = 0.0;
        }
    }

    /// Emits this step's spikes and accumulates every active neuron's input
    /// (external current, delayed sequence deliveries, zero-delay theory and
    /// inhibitory contributions) into the input buffer.
    fn integrate(
        &mut self,
        net: &Network,
        active: &[Range<usize>],
        mut rec: Option<&mut SpikeRecord>,
    ) {
        let t = self.t;
        let cfg = net.config();
        let layout = net.layout();
        let v_th = cfg.neuron.v_th;

        self.spiking.clear();
        for r in active {
            for i in r.clone() {
                if self.v[i] >= v_th {
                    self.spiking.push(i as u32);
                }
            }
            self.input[r.clone()].copy_from_slice(&self.ext[r.clone()]);
        }

        self.arrivals.clear();
        self.queue.take(t, &mut self.arrivals);
        for ev in &self.arrivals {
            let post_slot = ev.post_slot as usize;
            if self.gate.is_some_and(|g| g != post_slot) {
                continue;
            }
            let block = layout.block(BlockRef {
                part: ev.part,
                sub: ev.sub,
                slot: post_slot,
            });
            let row = net.intra(ev.part, ev.sub).row(
                ev.pre_slot as usize,
                ev.pre_column as usize,
                post_slot,
            );
            for (x, w) in self.input[block].iter_mut().zip(row) {
                *x += *w as f64;
            }
            if let Some(rec) = rec.as_deref_mut() {
                rec.arrivals.push(Arrival { fanout: *ev, t });
            }
        }

        self.inhibit.clear();
        let layers = cfg.layers;
        for &n in &self.spiking {
            let n = n as usize;
            if let Some(rec) = rec.as_deref_mut() {
                rec.spikes.push((n as u32, t));
            }
            for &id in net.memory_out(n) {
                let s = &net.memory_synapses()[id as usize];
                self.input[s.post as usize] += s.weight;
            }
            if n < THEORY_NEURONS {
                for &post in net.preset_out(n) {
                    self.input[post as usize] += cfg.preset_weight;
                }
                continue;
            }
            let (b, col) = layout.locate(n).expect("memory neuron");
            let start = layout.block(b).start;
            match self.inhibit.iter_mut().find(|(s, _)| *s == start) {
                Some((_, k)) => *k += 1,
                None => self.inhibit.push((start, 1)),
            }
            // inhibition reaches every other column of the block
            self.input[n] -= cfg.inhibitory_weight;
            for post_slot in b.slot + 1..layers {
                self.queue.push(
                    t + net.intra_delay(b.slot, post_slot),
                    FanOut {
                        part: b.part,
                        sub: b.sub,
                        pre_slot: b.slot as u16,
                        pre_column: col as u16,
                        post_slot: post_slot as u16,
                        emitted: t,
                    },
                );
            }
        }
        for &(start, k) in &self.inhibit {
            let cols = layout.locate(start).expect("memory neuron").0.sub.columns();
            let w = cfg.inhibitory_weight * k as f64;
            for x in &mut self.input[start..start + cols] {
                *x += w;
            }
        }
    }

    fn advance(&mut self, net: &Network, active: &[Range<usize>]) -> Result<()> {
        let params = &net.config().neuron;
        for r in active {
            if let Err(k) = exec::update_neurons(
                &mut self.v[r.clone()],
                &mut self.u[r.clone()],
                &self.input[r.clone()],
                params,
            ) {
                return Err(Error::NumericFault {
                    neuron: r.start + k,
                    t: self.t,
                });
            }
        }
        self.t += 1;
        Ok(())
    }

    /// One timestep: emit, deliver, integrate. Returns the neurons that spiked.
    pub fn step(&mut self, net: &Network, frame: &StimulusFrame) -> Result<Vec<u32>> {
        let active = self.active(net);
        self.load(frame);
        self.integrate(net, &active, None);
        self.unload(frame);
        let spiked = self.spiking.clone();
        self.advance(net, &active)?;
        Ok(spiked)
    }

    fn reset_slot(&mut self, net: &Network, slot: usize) {
        for part in 1..=PART_COUNT as u8 {
            for sub in Sub::ALL {
                let r = net.layout().block(BlockRef { part, sub, slot });
                self.v[r.clone()].fill(self.rest.v);
                self.u[r].fill(self.rest.u);
            }
        }
    }
}

/// Total input current each active neuron receives at the current timestep,
/// without advancing the clock or consuming the queue. Zero entries omitted.
pub fn deliver_and_integrate(
    net: &Network,
    state: &SimState,
    frame: &StimulusFrame,
) -> BTreeMap<NeuronId, f64> {
    let mut probe = state.clone();
    let active = probe.active(net);
    probe.load(frame);
    probe.integrate(net, &active, None);
    active
        .iter()
        .flat_map(|r| r.clone())
        .filter(|&i| probe.input[i] != 0.0)
        .map(|i| (net.layout().id(i), probe.input[i]))
        .collect()
}

/// Simulates one note position for `t_sim` steps under a constant frame.
pub fn run_window(
    net: &Network,
    state: &mut SimState,
    frame: &StimulusFrame,
) -> Result<SpikeRecord> {
    let cfg = net.config();
    let slot = slot_for_position(frame.position, cfg.layers);
    state.gate = cfg.layer_gating.then_some(slot);
    let active = state.active(net);
    let mut rec = SpikeRecord {
        position: frame.position,
        slot,
        start: state.t,
        ..SpikeRecord::default()
    };
    state.load(frame);
    let mut result = Ok(());
    for _ in 0..cfg.t_sim {
        state.integrate(net, &active, Some(&mut rec));
        result = state.advance(net, &active);
        if result.is_err() {
            break;
        }
    }
    state.unload(frame);
    result?;
    if cfg.layer_gating {
        state.reset_slot(net, slot);
    }
    rec.end = state.t;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::layout::NeuronId;
    use crate::topology::{build_network, NetworkConfig};

    fn net(gating: bool) -> Network {
        build_network(NetworkConfig {
            layers: 3,
            layer_gating: gating,
            ..NetworkConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn quiet_network_stays_quiet() {
        let n = net(true);
        let mut s = SimState::new(&n);
        assert!(deliver_and_integrate(&n, &s, &StimulusFrame::default()).is_empty());
        let rec = run_window(&n, &mut s, &StimulusFrame::default()).unwrap();
        assert!(rec.is_empty());
        assert_eq!(s.time(), 50);
    }

    #[test]
    fn constant_drive_spikes() {
        let n = net(true);
        let mut s = SimState::new(&n);
        let idx = n.layout().index(NeuronId::pitch(1, 60, 0)).unwrap();
        let mut f = StimulusFrame::new(0, None);
        f.set(idx, 50.0);
        let rec = run_window(&n, &mut s, &f).unwrap();
        let times: Vec<u64> = rec.by_neuron()[&(idx as u32)].clone();
        assert_eq!(times, vec![2, 6, 14, 23, 32, 41]);
    }

    #[test]
    fn signed_sum_of_arrivals() {
        let mut n = net(false);
        let pre1 = NeuronId::pitch(1, 10, 0);
        let pre2 = NeuronId::pitch(1, 11, 0);
        let post = NeuronId::pitch(1, 12, 1);
        n.set_intra_weight(1, Sub::Pitch, (10, 0), (12, 1), 1.0);
        n.set_intra_weight(1, Sub::Pitch, (11, 0), (12, 1), 2.0);
        let mut s = SimState::new(&n);
        for id in [pre1, pre2] {
            let i = n.layout().index(id).unwrap();
            s.set_neuron(i, NeuronState::new(30.0, 0.0));
        }
        // a same-slot spike in slot 1 inhibits the target at the arrival step
        let inh = n.layout().index(NeuronId::pitch(1, 90, 1)).unwrap();
        for _ in 0..50 {
            s.step(&n, &StimulusFrame::default()).unwrap();
        }
        s.set_neuron(inh, NeuronState::new(30.0, 0.0));
        let currents = deliver_and_integrate(&n, &s, &StimulusFrame::default());
        assert_eq!(currents[&post], 1.0);
    }

    #[test]
    fn single_arrival() {
        let mut n = net(false);
        n.set_intra_weight(1, Sub::Duration, (3, 0), (5, 2), 2.5);
        let mut s = SimState::new(&n);
        let pre = n.layout().index(NeuronId::duration(1, 3, 0)).unwrap();
        s.set_neuron(pre, NeuronState::new(30.0, 0.0));
        for _ in 0..100 {
            s.step(&n, &StimulusFrame::default()).unwrap();
        }
        let c = deliver_and_integrate(&n, &s, &StimulusFrame::default());
        assert_eq!(c[&NeuronId::duration(1, 5, 2)], 2.5);
    }

    #[test]
    fn windows_are_deterministic() {
        let n = net(true);
        let idx = n.layout().index(NeuronId::pitch(2, 64, 0)).unwrap();
        let mut f = StimulusFrame::new(0, None);
        f.set(idx, 30.0);
        f.set(5, 50.0);
        let run = || {
            let mut s = SimState::new(&n);
            (0..3)
                .map(|p| {
                    let mut g = f.clone();
                    g.position = p;
                    run_window(&n, &mut s, &g).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn numeric_fault_propagates() {
        let n = net(true);
        let mut s = SimState::new(&n);
        let mut f = StimulusFrame::new(0, None);
        f.set(0, f64::INFINITY);
        assert!(matches!(
            run_window(&n, &mut s, &f),
            Err(Error::NumericFault { neuron: 0, .. })
        ));
    }
}
