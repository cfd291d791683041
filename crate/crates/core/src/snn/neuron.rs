use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IzhikevichParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v_th: f64,
    /// Integrate `v` as two half-millisecond Euler steps instead of one.
    pub half_steps: bool,
}

impl Default for IzhikevichParams {
    fn default() -> Self {
        IzhikevichParams {
            a: 0.1,
            b: 0.2,
            c: -65.0,
            d: 30.0,
            v_th: 30.0,
            half_steps: false,
        }
    }
}

impl IzhikevichParams {
    /// Stable fixed point of the unforced dynamics (u = b·v on the lower root of
    /// 0.04v² + (5 − b)v + 140 = 0). Falls back to (c, b·c) when no rest exists.
    pub fn resting_state(&self) -> NeuronState {
        let p = 5.0 - self.b;
        let disc = p * p - 4.0 * 0.04 * 140.0;
        let v = if disc >= 0.0 {
            (-p - disc.sqrt()) / 0.08
        } else {
            self.c
        };
        NeuronState { v, u: self.b * v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane potential, mV.
    pub v: f64,
    /// Recovery variable.
    pub u: f64,
}

impl NeuronState {
    pub fn new(v: f64, u: f64) -> Self {
        NeuronState { v, u }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFinite;

/// Advances one neuron by one millisecond.
///
/// A neuron whose potential is at or above threshold emits a spike this step
/// and is reset (`v ← c`, `u ← u + d`); otherwise it integrates `input`. The
/// integrated potential is capped at `v_th`, so the spike is reported on the
/// following step.
#[inline]
pub fn step_neuron(
    state: NeuronState,
    params: &IzhikevichParams,
    input: f64,
) -> Result<(NeuronState, bool), NonFinite> {
    let NeuronState { v, u } = state;
    if v >= params.v_th {
        return Ok((
            NeuronState {
                v: params.c,
                u: u + params.d,
            },
            true,
        ));
    }
    let v_next = if params.half_steps {
        let h = v + 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + input);
        h + 0.5 * (0.04 * h * h + 5.0 * h + 140.0 - u + input)
    } else {
        v + (0.04 * v * v + 5.0 * v + 140.0 - u + input)
    };
    let u_next = u + params.a * (params.b * v - u);
    if !v_next.is_finite() || !u_next.is_finite() {
        return Err(NonFinite);
    }
    Ok((
        NeuronState {
            v: v_next.min(params.v_th),
            u: u_next,
        },
        false,
    ))
}
