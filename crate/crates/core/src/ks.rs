//! Connection profiles of the theory clusters and their comparison with the
//! canonical key profiles; correlational key estimation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{Key, Mode, PitchClass, Score};
use crate::snn::layout::GROUP_SIZE;
use crate::snn::network::Network;

#[derive(Debug, Deserialize)]
struct ProfileFile {
    version: u32,
    major: [f64; 12],
    minor: [f64; 12],
}

fn profiles() -> &'static ProfileFile {
    static P: OnceLock<ProfileFile> = OnceLock::new();
    P.get_or_init(|| {
        let f: ProfileFile = serde_json::from_str(include_str!("../data/key_profiles.json"))
            .expect("bundled key profiles parse");
        assert_eq!(f.version, 1);
        f
    })
}

/// Canonical profile of a mode, tonic at index 0.
pub fn canonical_profile(mode: Mode) -> [f64; 12] {
    match mode {
        Mode::Major => profiles().major,
        Mode::Minor => profiles().minor,
    }
}

/// Canonical profile of a key indexed by absolute pitch class.
pub fn key_profile(key: Key) -> [f64; 12] {
    let base = canonical_profile(key.mode);
    std::array::from_fn(|c| base[PitchClass::wrapping(c as i32).offset_from(key.tonic) as usize])
}

pub fn cosine(a: &[f64; 12], b: &[f64; 12]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}

/// Scales so the maximum entry is 1; zero vectors stay zero.
pub fn normalize(v: &[f64; 12]) -> [f64; 12] {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        v.map(|x| x / m)
    } else {
        *v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Cluster {
    Mode(Mode),
    Key(Key),
}

/// Counts and weight sums of the matching theory→pitch synapses per class.
fn matched(net: &Network, cluster: Cluster, rotate_to_tonic: bool) -> ([f64; 12], [f64; 12]) {
    let layout = net.layout();
    let mut count = [0.0; 12];
    let mut sum = [0.0; 12];
    for role in 0..GROUP_SIZE as u8 {
        let pre = match cluster {
            Cluster::Mode(m) => layout.mode_neuron(m, role),
            Cluster::Key(k) => layout.key_neuron(k, PitchClass::wrapping(role as i32)),
        };
        for &id in net.memory_out(pre) {
            let s = net.memory_synapses()[id as usize];
            let Some(class) = layout.pitch_class_of(s.post as usize) else {
                continue;
            };
            let index = match cluster {
                Cluster::Key(k) => {
                    if class.index() != role {
                        continue;
                    }
                    if rotate_to_tonic {
                        class.offset_from(k.tonic)
                    } else {
                        class.index()
                    }
                }
                Cluster::Mode(m) if rotate_to_tonic => {
                    // attribute to the key whose tonic puts this class on `role`
                    let key = Key::new(class.transpose(-(role as i32)), m);
                    if net
                        .memory_synapse(layout.key_neuron(key, class), s.post as usize)
                        .is_none()
                    {
                        continue;
                    }
                    role
                }
                Cluster::Mode(_) => {
                    if class.index() != role {
                        continue;
                    }
                    role
                }
            };
            count[index as usize] += 1.0;
            sum[index as usize] += s.weight;
        }
    }
    (count, sum)
}

/// Pitch synaptic count per class.
///
/// Key clusters match each class neuron to pitch neurons of the same absolute
/// class. Mode clusters match role `r` to pitch neurons whose class sits `r`
/// semitones above the tonic of a same-mode key that also projects to them,
/// which places every key's tonic at index 0. With `rotate_to_tonic` off, a
/// mode cluster matches absolute classes and a key cluster stays absolute.
pub fn psc(net: &Network, cluster: Cluster, rotate_to_tonic: bool) -> [f64; 12] {
    matched(net, cluster, rotate_to_tonic).0
}

/// Pitch average synaptic weight per class; 0 where the count is 0.
pub fn pasw(net: &Network, cluster: Cluster, rotate_to_tonic: bool) -> [f64; 12] {
    let (c, s) = matched(net, cluster, rotate_to_tonic);
    std::array::from_fn(|k| if c[k] > 0.0 { s[k] / c[k] } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: Cluster,
    pub label: String,
    pub psc: [f64; 12],
    pub pasw: [f64; 12],
    pub psc_norm: [f64; 12],
    pub pasw_norm: [f64; 12],
    /// Canonical profile the vectors are compared with, in the same indexing.
    pub reference: [f64; 12],
    pub cos_psc: Option<f64>,
    pub cos_pasw: Option<f64>,
}

impl ClusterProfile {
    pub fn present(&self) -> bool {
        self.psc.iter().any(|&c| c > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    /// Tonic-aligned, one per mode.
    pub modes: Vec<ClusterProfile>,
    /// Absolute classes, one per key (majors first).
    pub keys: Vec<ClusterProfile>,
}

fn cluster_profile(net: &Network, cluster: Cluster) -> ClusterProfile {
    let (rotate, reference, label) = match cluster {
        Cluster::Mode(m) => (true, canonical_profile(m), m.to_string()),
        Cluster::Key(k) => (false, key_profile(k), k.to_string()),
    };
    let psc_v = psc(net, cluster, rotate);
    let pasw_v = pasw(net, cluster, rotate);
    ClusterProfile {
        cluster,
        label,
        psc: psc_v,
        pasw: pasw_v,
        psc_norm: normalize(&psc_v),
        pasw_norm: normalize(&pasw_v),
        reference: normalize(&reference),
        cos_psc: cosine(&psc_v, &reference),
        cos_pasw: cosine(&pasw_v, &reference),
    }
}

pub fn profile_report(net: &Network) -> ProfileReport {
    ProfileReport {
        modes: Mode::ALL
            .iter()
            .map(|&m| cluster_profile(net, Cluster::Mode(m)))
            .collect(),
        keys: Key::all()
            .map(|k| cluster_profile(net, Cluster::Key(k)))
            .collect(),
    }
}

impl ProfileReport {
    /// Fraction of present keys whose PSC and PASW cosines both reach `min`.
    pub fn key_coverage(&self, min: f64) -> Option<f64> {
        let present: Vec<_> = self.keys.iter().filter(|k| k.present()).collect();
        if present.is_empty() {
            return None;
        }
        let ok = present
            .iter()
            .filter(|k| k.cos_psc.unwrap_or(0.0) >= min && k.cos_pasw.unwrap_or(0.0) >= min)
            .count();
        Some(ok as f64 / present.len() as f64)
    }

    pub fn to_table(&self) -> String {
        let fmt_cos =
            |c: Option<f64>| c.map_or_else(|| "absent".to_string(), |c| format!("{c:.3}"));
        let mut out = String::new();
        out.push_str("mode profiles (tonic at index 0, max-normalized)\n");
        for m in &self.modes {
            for (name, v) in [
                ("PSC", &m.psc_norm),
                ("PASW", &m.pasw_norm),
                ("KS", &m.reference),
            ] {
                out.push_str(&format!("{:<6} {:<5}", m.label, name));
                for x in v.iter() {
                    out.push_str(&format!(" {x:>5.2}"));
                }
                out.push('\n');
            }
            out.push_str(&format!(
                "{:<6} cos(PSC,KS)={} cos(PASW,KS)={}\n",
                m.label,
                fmt_cos(m.cos_psc),
                fmt_cos(m.cos_pasw)
            ));
        }
        out.push_str("\nkey profiles\n");
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8}\n",
            "key", "synapses", "cos_psc", "cos_pasw"
        ));
        for k in &self.keys {
            out.push_str(&format!(
                "{:<10} {:>8} {:>8} {:>8}\n",
                k.label,
                k.psc.iter().sum::<f64>() as u64,
                fmt_cos(k.cos_psc),
                fmt_cos(k.cos_pasw)
            ));
        }
        out
    }
}

fn pearson(x: &[f64; 12], y: &[f64; 12]) -> f64 {
    let mx = x.iter().sum::<f64>() / 12.0;
    let my = y.iter().sum::<f64>() / 12.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..12 {
        let (a, b) = (x[k] - mx, y[k] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Key whose rotated profile correlates best with a pitch-class histogram.
/// Ties go to major, then to the lower tonic.
pub fn estimate_key(histogram: &[f64; 12]) -> Result<Key> {
    if histogram.iter().all(|&x| x == 0.0) {
        return Err(Error::Empty("pitch-class histogram"));
    }
    let mut best = (f64::NEG_INFINITY, Key::new(PitchClass::C, Mode::Major));
    for key in Key::all() {
        let r = pearson(histogram, &key_profile(key));
        if r > best.0 {
            best = (r, key);
        }
    }
    Ok(best.1)
}

/// Duration-weighted pitch-class distribution of a score.
pub fn duration_histogram(score: &Score) -> [f64; 12] {
    let mut h = [0.0; 12];
    for e in score.events() {
        h[e.pitch_class().index() as usize] += e.duration as f64;
    }
    h
}

pub fn estimate_score_key(score: &Score) -> Result<Key> {
    estimate_key(&duration_histogram(score))
}
