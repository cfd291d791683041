//! Spiking-network primitives: neurons, layout, synapse storage and the
//! simulation loop.

pub mod layout;
pub mod network;
pub mod neuron;
pub mod queue;
pub mod sim;

pub use layout::{BlockRef, Layout, NeuronId, Sub, Subsystem};
pub use network::{MemorySynapse, Network, Synapse, SynapseKind};
pub use neuron::{step_neuron, IzhikevichParams, NeuronState};
pub use sim::{deliver_and_integrate, run_window, SimState, SpikeRecord};
