//! Four-part symbolic scores and their tonal annotation.
//!
//! Pitches are MIDI numbers, durations are counts of sixty-fourth notes
//! (1..=64, one whole note at most). A [`Score`] always has exactly four
//! parts, soprano first, and a single [`Key`] annotation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sixty-fourth-note units in one quarter note.
pub const UNITS_PER_QUARTER: u32 = 16;
pub const MAX_DURATION: u8 = 64;
pub const PART_COUNT: usize = 4;

const MAJOR_STEPS: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];
const NATURAL_MINOR_STEPS: [u8; 7] = [0, 2, 3, 5, 7, 8, 10];

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];
const FLAT_NAMES: [&str; 12] = [
    "C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PitchClass(u8);

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);

    pub fn new(index: u8) -> Result<Self> {
        if index < 12 {
            Ok(PitchClass(index))
        } else {
            Err(Error::Range {
                what: "pitch class",
                value: index as i64,
            })
        }
    }

    /// Wraps any integer onto the 12 classes.
    pub fn wrapping(index: i32) -> Self {
        PitchClass(index.rem_euclid(12) as u8)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Self::wrapping(self.0 as i32 + semitones)
    }

    /// Interval in semitones from `tonic` up to `self`, in 0..12.
    pub fn offset_from(self, tonic: PitchClass) -> u8 {
        (self.0 + 12 - tonic.0) % 12
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }

    pub fn name(self) -> &'static str {
        SHARP_NAMES[self.0 as usize]
    }
}

impl TryFrom<u8> for PitchClass {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        PitchClass::new(v)
    }
}

impl From<PitchClass> for u8 {
    fn from(pc: PitchClass) -> u8 {
        pc.0
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = Error;

    /// Accepts a letter with any number of `#`/`b` accidentals, case-insensitive
    /// on the letter (`g`, `Bb`, `f#`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown pitch class `{s}`"));
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let base: i32 = match letter.to_ascii_uppercase() {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return Err(bad()),
        };
        let mut alter = 0;
        for c in chars {
            match c {
                '#' => alter += 1,
                'b' => alter -= 1,
                _ => return Err(bad()),
            }
        }
        Ok(PitchClass::wrapping(base + alter))
    }
}

/// MIDI pitch → pitch class.
pub fn pitch_class(pitch: i32) -> Result<PitchClass> {
    if !(0..=127).contains(&pitch) {
        return Err(Error::Range {
            what: "MIDI pitch",
            value: pitch as i64,
        });
    }
    Ok(PitchClass((pitch % 12) as u8))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Major, Mode::Minor];

    pub fn index(self) -> usize {
        match self {
            Mode::Major => 0,
            Mode::Minor => 1,
        }
    }

    pub fn from_index(i: usize) -> Mode {
        if i == 0 {
            Mode::Major
        } else {
            Mode::Minor
        }
    }

    /// Semitone offsets of the seven diatonic degrees above the tonic.
    pub fn steps(self) -> &'static [u8; 7] {
        match self {
            Mode::Major => &MAJOR_STEPS,
            Mode::Minor => &NATURAL_MINOR_STEPS,
        }
    }

    /// Scale degree (1..=7) of an offset above the tonic, if diatonic.
    pub fn degree_of_offset(self, offset: u8) -> Option<u8> {
        self.steps()
            .iter()
            .position(|&s| s == offset % 12)
            .map(|i| i as u8 + 1)
    }

    pub fn opposite(self) -> Mode {
        match self {
            Mode::Major => Mode::Minor,
            Mode::Minor => Mode::Major,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "major" | "maj" => Ok(Mode::Major),
            "minor" | "min" => Ok(Mode::Minor),
            _ => Err(Error::Parse(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Key {
    pub tonic: PitchClass,
    pub mode: Mode,
}

impl Key {
    pub fn new(tonic: PitchClass, mode: Mode) -> Self {
        Key { tonic, mode }
    }

    /// Majors on C..B, then minors on C..B.
    pub fn all() -> impl Iterator<Item = Key> {
        Mode::ALL
            .into_iter()
            .flat_map(|m| PitchClass::all().map(move |t| Key::new(t, m)))
    }

    /// Key-cluster group index in 0..24 (majors first).
    pub fn index(self) -> usize {
        self.mode.index() * 12 + self.tonic.index() as usize
    }

    pub fn from_index(i: usize) -> Key {
        Key::new(PitchClass((i % 12) as u8), Mode::from_index(i / 12))
    }

    pub fn transpose(self, semitones: i32) -> Key {
        Key::new(self.tonic.transpose(semitones), self.mode)
    }

    /// Position on the circle of fifths as used by key signatures.
    pub fn fifths(self) -> i32 {
        // relative major carries the signature
        let major_tonic = match self.mode {
            Mode::Major => self.tonic,
            Mode::Minor => self.tonic.transpose(3),
        };
        let f = (major_tonic.index() as i32 * 7).rem_euclid(12);
        if f > 6 {
            f - 12
        } else {
            f
        }
    }

    pub fn from_fifths(fifths: i32, mode: Mode) -> Key {
        let major_tonic = PitchClass::wrapping(fifths * 7);
        match mode {
            Mode::Major => Key::new(major_tonic, Mode::Major),
            Mode::Minor => Key::new(major_tonic.transpose(-3), Mode::Minor),
        }
    }

    fn uses_flats(self) -> bool {
        self.fifths() < 0
    }

    pub fn tonic_name(self) -> &'static str {
        let i = self.tonic.index() as usize;
        if self.uses_flats() {
            FLAT_NAMES[i]
        } else {
            SHARP_NAMES[i]
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tonic_name(), self.mode)
    }
}

/// The seven diatonic pitch classes of `key` (natural minor for minor keys),
/// in scale-degree order.
pub fn diatonic_set(key: Key) -> [PitchClass; 7] {
    key.mode.steps().map(|s| key.tonic.transpose(s as i32))
}

pub fn is_diatonic(pc: PitchClass, key: Key) -> bool {
    degree_of(pc, key).is_some()
}

/// Scale degree 1..=7 of `pc` in `key`, or `None` for a chromatic tone.
pub fn degree_of(pc: PitchClass, key: Key) -> Option<u8> {
    key.mode.degree_of_offset(pc.offset_from(key.tonic))
}

/// Parses scientific pitch notation (`C4` = 60, `Bb3` = 58, `F#-1` = 6).
pub fn parse_note_name(s: &str) -> Result<u8> {
    let bad = || Error::Parse(format!("unknown note name `{s}`"));
    let split = s
        .char_indices()
        .skip(1)
        .find(|&(_, c)| c.is_ascii_digit() || c == '-')
        .map(|(i, _)| i)
        .ok_or_else(bad)?;
    let (name, octave) = s.split_at(split);
    let pc: PitchClass = name.parse().map_err(|_| bad())?;
    let octave: i32 = octave.parse().map_err(|_| bad())?;
    // alterations may cross the octave boundary (Cb4 = 59, B#3 = 60)
    let letter = name.chars().next().unwrap();
    let natural: PitchClass = letter.to_string().parse()?;
    let alter: i32 = name[1..]
        .chars()
        .map(|c| if c == '#' { 1 } else { -1 })
        .sum();
    let midi = 12 * (octave + 1) + natural.index() as i32 + alter;
    debug_assert_eq!(PitchClass::wrapping(midi), pc);
    if !(0..=127).contains(&midi) {
        return Err(bad());
    }
    Ok(midi as u8)
}

pub fn note_name(pitch: u8) -> String {
    format!(
        "{}{}",
        SHARP_NAMES[(pitch % 12) as usize],
        pitch as i32 / 12 - 1
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    /// Sixty-fourth-note units, 1..=64.
    pub duration: u8,
    pub position: u32,
}

impl NoteEvent {
    pub fn new(pitch: u8, duration: u8, position: u32) -> Result<Self> {
        if pitch > 127 {
            return Err(Error::Range {
                what: "MIDI pitch",
                value: pitch as i64,
            });
        }
        if !(1..=MAX_DURATION).contains(&duration) {
            return Err(Error::Range {
                what: "duration",
                value: duration as i64,
            });
        }
        Ok(NoteEvent {
            pitch,
            duration,
            position,
        })
    }

    pub fn pitch_class(&self) -> PitchClass {
        PitchClass(self.pitch % 12)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    /// 1 = soprano … 4 = bass.
    pub voice_index: u8,
    pub events: Vec<NoteEvent>,
}

impl Part {
    /// Builds a part from (pitch, duration) pairs, numbering positions from 0.
    pub fn from_notes(voice_index: u8, notes: &[(u8, u8)]) -> Result<Self> {
        if !(1..=PART_COUNT as u8).contains(&voice_index) {
            return Err(Error::Range {
                what: "voice index",
                value: voice_index as i64,
            });
        }
        let events = notes
            .iter()
            .enumerate()
            .map(|(i, &(p, d))| NoteEvent::new(p, d, i as u32))
            .collect::<Result<_>>()?;
        Ok(Part {
            voice_index,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn pitches(&self) -> impl Iterator<Item = u8> + '_ {
        self.events.iter().map(|e| e.pitch)
    }

    fn validate(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if e.position != i as u32 {
                return Err(Error::Rejected(format!(
                    "part {}: positions not consecutive at {}",
                    self.voice_index, i
                )));
            }
            NoteEvent::new(e.pitch, e.duration, e.position)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    File(PathBuf),
    Generated,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File(p) => write!(f, "{}", p.display()),
            Source::Generated => f.write_str("generated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub parts: [Part; PART_COUNT],
    pub key: Key,
    pub title: String,
    pub source: Source,
}

impl Score {
    pub fn new(
        parts: [Part; PART_COUNT],
        key: Key,
        title: impl Into<String>,
        source: Source,
    ) -> Result<Self> {
        for (i, p) in parts.iter().enumerate() {
            if p.voice_index as usize != i + 1 {
                return Err(Error::Rejected(format!(
                    "part {} carries voice index {}",
                    i + 1,
                    p.voice_index
                )));
            }
            p.validate()?;
        }
        Ok(Score {
            parts,
            key,
            title: title.into(),
            source,
        })
    }

    /// Builds a score from per-part (pitch, duration) lists.
    pub fn from_voices(voices: [&[(u8, u8)]; PART_COUNT], key: Key, title: &str) -> Result<Self> {
        let parts = [
            Part::from_notes(1, voices[0])?,
            Part::from_notes(2, voices[1])?,
            Part::from_notes(3, voices[2])?,
            Part::from_notes(4, voices[3])?,
        ];
        Score::new(parts, key, title, Source::Generated)
    }

    /// Longest part length, i.e. the number of lockstep positions.
    pub fn positions(&self) -> usize {
        self.parts.iter().map(Part::len).max().unwrap_or(0)
    }

    pub fn note_count(&self) -> usize {
        self.parts.iter().map(Part::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.note_count() == 0
    }

    /// Notes sounding at `position`, one slot per part.
    pub fn chord_at(&self, position: usize) -> [Option<NoteEvent>; PART_COUNT] {
        std::array::from_fn(|j| self.parts[j].events.get(position).copied())
    }

    pub fn events(&self) -> impl Iterator<Item = &NoteEvent> {
        self.parts.iter().flat_map(|p| p.events.iter())
    }

    pub fn transpose(&self, semitones: i32) -> Result<Score> {
        let mut out = self.clone();
        for part in &mut out.parts {
            for e in &mut part.events {
                let p = e.pitch as i32 + semitones;
                if !(0..=127).contains(&p) {
                    return Err(Error::Range {
                        what: "MIDI pitch",
                        value: p as i64,
                    });
                }
                e.pitch = p as u8;
            }
        }
        out.key = self.key.transpose(semitones);
        Ok(out)
    }
}
