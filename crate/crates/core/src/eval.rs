//! Pitch features of pieces and corpus-level comparison by distance
//! distributions.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::io::load_corpus;
use crate::score::{is_diatonic, Key, Score};

pub const BINS: usize = 100;
pub const EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Distinct MIDI pitches.
    pub pc: usize,
    pub pch: [f64; 12],
    pub dpr: f64,
    pub pr: u8,
    pub pi: f64,
    /// Row-normalized; rows without outgoing transitions stay zero.
    pub pctm: [[f64; 12]; 12],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Feature {
    Pc,
    Pch,
    Dpr,
    Pr,
    Pi,
    Pctm,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::Pc,
        Feature::Pch,
        Feature::Dpr,
        Feature::Pr,
        Feature::Pi,
        Feature::Pctm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Pc => "PC",
            Feature::Pch => "PCH",
            Feature::Dpr => "DPR",
            Feature::Pr => "PR",
            Feature::Pi => "PI",
            Feature::Pctm => "PCTM",
        }
    }

    pub fn is_scalar(self) -> bool {
        !matches!(self, Feature::Pch | Feature::Pctm)
    }
}

impl FeatureVector {
    pub fn scalar(&self, f: Feature) -> Option<f64> {
        match f {
            Feature::Pc => Some(self.pc as f64),
            Feature::Dpr => Some(self.dpr),
            Feature::Pr => Some(self.pr as f64),
            Feature::Pi => Some(self.pi),
            Feature::Pch | Feature::Pctm => None,
        }
    }

    /// Distance between two pieces under one feature: absolute difference
    /// for scalars, Euclidean for histograms.
    pub fn distance(&self, other: &FeatureVector, f: Feature) -> f64 {
        match f {
            Feature::Pch => euclid(self.pch.iter(), other.pch.iter()),
            Feature::Pctm => euclid(self.pctm.iter().flatten(), other.pctm.iter().flatten()),
            _ => (self.scalar(f).unwrap() - other.scalar(f).unwrap()).abs(),
        }
    }
}

fn euclid<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn features(score: &Score, key: Key) -> Result<FeatureVector> {
    if score.is_empty() {
        return Err(Error::Empty("score"));
    }
    let pitches: Vec<u8> = score.events().map(|e| e.pitch).collect();
    let pc = pitches.iter().collect::<BTreeSet<_>>().len();
    let n = pitches.len() as f64;

    let mut pch = [0.0; 12];
    for &p in &pitches {
        pch[(p % 12) as usize] += 1.0;
    }
    pch.iter_mut().for_each(|x| *x /= n);

    let diatonic = score
        .events()
        .filter(|e| is_diatonic(e.pitch_class(), key))
        .count();
    let pr = pitches.iter().max().unwrap() - pitches.iter().min().unwrap();

    let mut interval_means = Vec::new();
    let mut pctm = [[0.0; 12]; 12];
    for part in &score.parts {
        let ps: Vec<u8> = part.pitches().collect();
        if ps.len() < 2 {
            continue;
        }
        let total: u32 = ps.windows(2).map(|w| w[0].abs_diff(w[1]) as u32).sum();
        interval_means.push(total as f64 / (ps.len() - 1) as f64);
        for w in ps.windows(2) {
            pctm[(w[0] % 12) as usize][(w[1] % 12) as usize] += 1.0;
        }
    }
    for row in &mut pctm {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    let pi = if interval_means.is_empty() {
        0.0
    } else {
        interval_means.iter().sum::<f64>() / interval_means.len() as f64
    };

    Ok(FeatureVector {
        pc,
        pch,
        dpr: diatonic as f64 / n,
        pr,
        pi,
        pctm,
    })
}

/// Probability mass per bin of `xs` over `[lo, hi]`.
fn histogram(xs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut h = vec![0.0; BINS];
    let width = (hi - lo) / BINS as f64;
    for &x in xs {
        let b = (((x - lo) / width) as usize).min(BINS - 1);
        h[b] += 1.0;
    }
    h.iter_mut().for_each(|c| *c /= xs.len() as f64);
    h
}

fn smooth(h: &[f64]) -> Vec<f64> {
    let total: f64 = h.iter().map(|x| x + EPSILON).sum();
    h.iter().map(|x| (x + EPSILON) / total).collect()
}

/// KLD and overlapped area of two distance samples on a shared 100-bin
/// support. Two point masses at the same value give (0, 1).
pub fn compare_samples(intra: &[f64], inter: &[f64]) -> Result<(f64, f64)> {
    if intra.is_empty() || inter.is_empty() {
        return Err(Error::Empty("distance sample"));
    }
    let lo = intra
        .iter()
        .chain(inter)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = intra
        .iter()
        .chain(inter)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return Ok((0.0, 1.0));
    }
    let p = histogram(intra, lo, hi);
    let q = histogram(inter, lo, hi);
    let oa = p
        .iter()
        .zip(&q)
        .map(|(a, b)| a.min(*b))
        .sum::<f64>()
        .min(1.0);
    let (ps, qs) = (smooth(&p), smooth(&q));
    let kld = ps
        .iter()
        .zip(&qs)
        .map(|(a, b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0);
    Ok((kld, oa))
}

/// Intra-set distances within `gen` (every ordered pair, self pairs
/// included) against inter-set distances `gen × reference`.
pub fn interset_stats(
    gen: &[FeatureVector],
    reference: &[FeatureVector],
    f: Feature,
) -> Result<(f64, f64)> {
    if gen.len() < 2 || reference.len() < 2 {
        return Err(Error::Empty("feature list needs at least two pieces"));
    }
    let intra: Vec<f64> = gen
        .iter()
        .flat_map(|a| gen.iter().map(move |b| a.distance(b, f)))
        .collect();
    let inter: Vec<f64> = gen
        .iter()
        .flat_map(|a| reference.iter().map(move |b| a.distance(b, f)))
        .collect();
    compare_samples(&intra, &inter)
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub feature: Feature,
    /// Absent for histogram features.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub name: String,
    pub pieces: usize,
    pub sampled: usize,
    pub features: Vec<FeatureStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterSet {
    pub reference: String,
    pub feature: Feature,
    pub kld: f64,
    pub oa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sample_n: usize,
    pub rng_seed: u64,
    /// Generated corpus first, then the references.
    pub corpora: Vec<CorpusStats>,
    pub interset: Vec<InterSet>,
}

/// Picks up to `n` pieces, keeping corpus order.
pub fn sample_pieces<'a>(
    scores: &'a [Score],
    n: usize,
    rng: &mut ChaCha8Rng,
    name: &str,
) -> Vec<&'a Score> {
    if scores.len() <= n {
        if scores.len() < n {
            warn!(
                "corpus={name} event=short_sample wanted={n} available={}",
                scores.len()
            );
        }
        return scores.iter().collect();
    }
    let mut idx = sample(rng, scores.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| &scores[i]).collect()
}

fn corpus_features(scores: &[&Score]) -> Result<Vec<FeatureVector>> {
    exec::map(scores, |s| features(s, s.key))
        .into_iter()
        .collect()
}

fn stats(name: &str, pieces: usize, fv: &[FeatureVector]) -> CorpusStats {
    let features = Feature::ALL
        .iter()
        .map(|&f| {
            if f.is_scalar() {
                let xs: Vec<f64> = fv.iter().map(|v| v.scalar(f).unwrap()).collect();
                let (m, s) = mean_std(&xs);
                FeatureStat {
                    feature: f,
                    mean: Some(m),
                    std: Some(s),
                }
            } else {
                FeatureStat {
                    feature: f,
                    mean: None,
                    std: None,
                }
            }
        })
        .collect();
    CorpusStats {
        name: name.to_string(),
        pieces,
        sampled: fv.len(),
        features,
    }
}

/// Evaluates a generated corpus against named reference corpora. Every corpus
/// is sampled with a fresh stream from `rng_seed`, so a corpus compared with
/// itself yields the same sample twice.
pub fn evaluate_scores(
    gen: (&str, &[Score]),
    refs: &[(&str, &[Score])],
    sample_n: usize,
    rng_seed: u64,
) -> Result<EvalReport> {
    if gen.1.is_empty() {
        return Err(Error::Empty("generated corpus"));
    }
    let rng = || ChaCha8Rng::seed_from_u64(rng_seed);
    let gen_fv = corpus_features(&sample_pieces(gen.1, sample_n, &mut rng(), gen.0))?;
    let mut corpora = vec![stats(gen.0, gen.1.len(), &gen_fv)];
    let mut interset = Vec::new();
    for &(name, scores) in refs {
        if scores.is_empty() {
            return Err(Error::Empty("reference corpus"));
        }
        let fv = corpus_features(&sample_pieces(scores, sample_n, &mut rng(), name))?;
        for f in Feature::ALL {
            let (kld, oa) = interset_stats(&gen_fv, &fv, f)?;
            interset.push(InterSet {
                reference: name.to_string(),
                feature: f,
                kld,
                oa,
            });
        }
        corpora.push(stats(name, scores.len(), &fv));
    }
    Ok(EvalReport {
        sample_n,
        rng_seed,
        corpora,
        interset,
    })
}

fn corpus_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

pub fn evaluate(
    gen_dir: &Path,
    ref_dirs: &[&Path],
    sample_n: usize,
    rng_seed: u64,
) -> Result<EvalReport> {
    let (gen, _) = load_corpus(gen_dir)?;
    let refs = ref_dirs
        .iter()
        .map(|d| Ok((corpus_name(d), load_corpus(d)?.0)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&str, &[Score])> = refs
        .iter()
        .map(|(n, s)| (n.as_str(), s.as_slice()))
        .collect();
    evaluate_scores((&corpus_name(gen_dir), &gen), &refs, sample_n, rng_seed)
}

impl EvalReport {
    /// One row per feature: mean and STD per corpus, then KLD and OA per
    /// reference.
    pub fn to_table(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let mut head = vec!["feature".to_string()];
        for c in &self.corpora {
            head.push(format!("{} mean", c.name));
            head.push(format!("{} std", c.name));
        }
        for c in &self.corpora[1..] {
            head.push(format!("KLD {}", c.name));
            head.push(format!("OA {}", c.name));
        }
        let mut rows = vec![head];
        for (i, f) in Feature::ALL.iter().enumerate() {
            let mut row = vec![f.name().to_string()];
            for c in &self.corpora {
                row.push(fmt(c.features[i].mean));
                row.push(fmt(c.features[i].std));
            }
            for c in &self.corpora[1..] {
                let s = self
                    .interset
                    .iter()
                    .find(|s| s.reference == c.name && s.feature == *f);
                row.push(fmt(s.map(|s| s.kld)));
                row.push(fmt(s.map(|s| s.oa)));
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap())
            .collect();
        let mut out = String::new();
        for r in rows {
            for (c, cell) in r.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        }
        out
    }
}
