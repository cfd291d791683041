use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::score::{Key, Mode, Score, PART_COUNT};

use super::musicxml::read_musicxml;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub key: Key,
    pub mode: Mode,
    pub part_count: usize,
    pub note_counts: [usize; PART_COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<CorpusEntry>,
    pub skipped: Vec<Skipped>,
}

fn is_score_file(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("xml" | "musicxml")
    )
}

/// Loads every `.xml`/`.musicxml` file directly under `dir` in lexicographic
/// path order. Files that fail to parse or are rejected are listed in the
/// manifest instead of aborting the load.
pub fn load_corpus(dir: &Path) -> Result<(Vec<Score>, CorpusManifest)> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && is_score_file(&p) {
            paths.push(p);
        }
    }
    paths.sort();

    let parsed = exec::map(&paths, |p| read_musicxml(p));
    let mut scores = Vec::new();
    let mut manifest = CorpusManifest::default();
    for (path, r) in paths.into_iter().zip(parsed) {
        match r {
            Ok(s) if s.is_empty() => {
                warn!("path={} event=skip reason=empty", path.display());
                manifest.skipped.push(Skipped {
                    path,
                    reason: "no notes".into(),
                });
            }
            Ok(s) => {
                manifest.entries.push(CorpusEntry {
                    path,
                    key: s.key,
                    mode: s.key.mode,
                    part_count: s.parts.len(),
                    note_counts: std::array::from_fn(|j| s.parts[j].len()),
                });
                scores.push(s);
            }
            Err(e) => {
                warn!("path={} event=skip reason={}", path.display(), e);
                manifest.skipped.push(Skipped {
                    path,
                    reason: e.to_string(),
                });
            }
        }
    }
    info!(
        "dir={} loaded={} skipped={}",
        dir.display(),
        manifest.entries.len(),
        manifest.skipped.len()
    );
    Ok((scores, manifest))
}
