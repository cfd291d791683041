//! Data-parallel helpers with a sequential fallback when the `parallel`
//! feature is off.

use crate::snn::neuron::{step_neuron, IzhikevichParams, NeuronState};

/// Ranges shorter than this are updated sequentially even with `parallel`.
pub const PAR_MIN_NEURONS: usize = 4096;
#[cfg(feature = "parallel")]
const CHUNK: usize = 1024;

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Advances every neuron of a contiguous range. Returns the offset of the
/// first neuron whose state became non-finite.
pub fn update_neurons(
    v: &mut [f64],
    u: &mut [f64],
    input: &[f64],
    params: &IzhikevichParams,
) -> Result<(), usize> {
    #[cfg(feature = "parallel")]
    if v.len() >= PAR_MIN_NEURONS {
        use rayon::prelude::*;
        let faults: Option<usize> = v
            .par_chunks_mut(CHUNK)
            .zip(u.par_chunks_mut(CHUNK))
            .zip(input.par_chunks(CHUNK))
            .enumerate()
            .filter_map(|(c, ((v, u), i))| {
                update_neurons_sequential(v, u, i, params)
                    .err()
                    .map(|k| c * CHUNK + k)
            })
            .min();
        return faults.map_or(Ok(()), Err);
    }
    update_neurons_sequential(v, u, input, params)
}

/// Single-threaded reference for [`update_neurons`].
pub fn update_neurons_sequential(
    v: &mut [f64],
    u: &mut [f64],
    input: &[f64],
    params: &IzhikevichParams,
) -> Result<(), usize> {
    let mut fault = None;
    for k in 0..v.len() {
        match step_neuron(NeuronState::new(v[k], u[k]), params, input[k]) {
            Ok((s, _)) => {
                v[k] = s.v;
                u[k] = s.u;
            }
            Err(_) => {
                fault.get_or_insert(k);
            }
        }
    }
    fault.map_or(Ok(()), Err)
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
