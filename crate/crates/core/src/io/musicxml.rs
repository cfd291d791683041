//! Partwise MusicXML reading and minimal writing.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::ks::estimate_score_key;
use crate::score::{
    Key, Mode, NoteEvent, Part, Score, Source, MAX_DURATION, PART_COUNT, UNITS_PER_QUARTER,
};

fn child<'a, 'i>(n: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(name))
}

fn child_text<'a>(n: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(n, name).and_then(|c| c.text()).map(str::trim)
}

fn parse_num<T: std::str::FromStr>(n: Node, name: &str) -> Result<Option<T>> {
    match child_text(n, name) {
        None => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("bad <{name}> value `{s}`"))),
    }
}

fn step_semitone(step: &str) -> Result<i32> {
    Ok(match step {
        "C" => 0,
        "D" => 2,
        "E" => 4,
        "F" => 5,
        "G" => 7,
        "A" => 9,
        "B" => 11,
        _ => return Err(Error::Parse(format!("bad step `{step}`"))),
    })
}

/// Pending note of one part while reading: MIDI pitch and exact units.
struct Open {
    pitch: u8,
    units: u32,
    tied: bool,
}

struct PartReader<'p> {
    label: &'p str,
    divisions: u32,
    notes: Vec<(u8, u8)>,
    open: Option<Open>,
}

impl PartReader<'_> {
    fn flush(&mut self) {
        if let Some(o) = self.open.take() {
            let units = if o.units > MAX_DURATION as u32 {
                warn!("part={} event=clip_duration units={}", self.label, o.units);
                MAX_DURATION as u32
            } else {
                o.units.max(1)
            };
            self.notes.push((o.pitch, units as u8));
        }
    }

    fn units(&self, duration: u32) -> u32 {
        let exact = duration as u64 * UNITS_PER_QUARTER as u64;
        let d = self.divisions as u64;
        if !exact.is_multiple_of(d) {
            warn!(
                "part={} event=quantize duration={} divisions={}",
                self.label, duration, self.divisions
            );
        }
        ((exact + d / 2) / d) as u32
    }

    fn note(&mut self, n: Node) -> Result<()> {
        if child(n, "grace").is_some() || child(n, "cue").is_some() {
            return Ok(());
        }
        if let Some(v) = child_text(n, "voice") {
            if v != "1" {
                return Ok(());
            }
        }
        let duration: u32 = parse_num(n, "duration")?.unwrap_or(0);
        let units = self.units(duration);
        let ties: Vec<&str> = n
            .children()
            .filter(|c| c.has_tag_name("tie"))
            .filter_map(|c| c.attribute("type"))
            .collect();
        let tie_start = ties.contains(&"start");
        let tie_stop = ties.contains(&"stop");

        if child(n, "rest").is_some() {
            self.flush();
            return Ok(());
        }
        let pitch_node =
            child(n, "pitch").ok_or_else(|| Error::Parse("note without pitch or rest".into()))?;
        let step = step_semitone(child_text(pitch_node, "step").unwrap_or(""))?;
        let alter: f64 = parse_num(pitch_node, "alter")?.unwrap_or(0.0);
        let octave: i32 = parse_num(pitch_node, "octave")?
            .ok_or_else(|| Error::Parse("pitch without octave".into()))?;
        let midi = 12 * (octave + 1) + step + alter.round() as i32;
        if !(0..=127).contains(&midi) {
            return Err(Error::Range {
                what: "MIDI pitch",
                value: midi as i64,
            });
        }
        let midi = midi as u8;

        if child(n, "chord").is_some() {
            if let Some(o) = &mut self.open {
                if midi > o.pitch {
                    o.pitch = midi;
                }
                warn!("part={} event=chord_in_part kept={}", self.label, o.pitch);
            }
            return Ok(());
        }
        if tie_stop {
            if let Some(o) = &mut self.open {
                if o.tied && o.pitch == midi {
                    o.units += units;
                    o.tied = tie_start;
                    return Ok(());
                }
            }
        }
        self.flush();
        self.open = Some(Open {
            pitch: midi,
            units,
            tied: tie_start,
        });
        Ok(())
    }
}

/// Key signature of the first `<key>` element: fifths and the mode if it is
/// major or minor.
fn read_key(doc: &Document) -> Option<(i32, Option<Mode>)> {
    let key = doc.descendants().find(|n| n.has_tag_name("key"))?;
    let fifths = child_text(key, "fifths")?.parse().ok()?;
    let mode = child_text(key, "mode").and_then(|m| m.parse().ok());
    Some((fifths, mode))
}

/// Parses a partwise MusicXML document holding exactly four parts.
pub fn parse_musicxml(bytes: &[u8]) -> Result<Score> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let doc = Document::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("score-partwise") {
        return Err(Error::Parse(format!(
            "root element is <{}>, expected <score-partwise>",
            root.tag_name().name()
        )));
    }
    let parts: Vec<Node> = root.children().filter(|c| c.has_tag_name("part")).collect();
    if parts.len() != PART_COUNT {
        return Err(Error::Rejected(format!(
            "expected 4 parts, found {}",
            parts.len()
        )));
    }
    let title = child(root, "work")
        .and_then(|w| child_text(w, "work-title"))
        .or_else(|| child_text(root, "movement-title"))
        .unwrap_or("")
        .to_string();

    let mut out = Vec::with_capacity(PART_COUNT);
    for (j, part) in parts.iter().enumerate() {
        let mut r = PartReader {
            label: part.attribute("id").unwrap_or("?"),
            divisions: 1,
            notes: Vec::new(),
            open: None,
        };
        for measure in part.children().filter(|c| c.has_tag_name("measure")) {
            for el in measure.children().filter(Node::is_element) {
                match el.tag_name().name() {
                    "attributes" => {
                        if let Some(d) = parse_num::<u32>(el, "divisions")? {
                            if d == 0 {
                                return Err(Error::Parse("divisions of zero".into()));
                            }
                            r.divisions = d;
                        }
                    }
                    "note" => r.note(el)?,
                    _ => {}
                }
            }
        }
        r.flush();
        out.push(Part::from_notes(j as u8 + 1, &r.notes)?);
    }
    let parts: [Part; PART_COUNT] = out.try_into().expect("four parts");
    let placeholder = Key::new(crate::score::PitchClass::C, Mode::Major);
    let mut score = Score::new(parts, placeholder, title, Source::Generated)?;
    score.key = match read_key(&doc) {
        Some((fifths, Some(mode))) => Key::from_fifths(fifths, mode),
        _ => estimate_score_key(&score)
            .map_err(|_| Error::Rejected("no key annotation and no notes".into()))?,
    };
    Ok(score)
}

pub fn read_musicxml(path: &Path) -> Result<Score> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut s = parse_musicxml(&bytes)?;
    s.source = Source::File(path.to_path_buf());
    Ok(s)
}

const STEPS_SHARP: [(&str, i32); 12] = [
    ("C", 0),
    ("C", 1),
    ("D", 0),
    ("D", 1),
    ("E", 0),
    ("F", 0),
    ("F", 1),
    ("G", 0),
    ("G", 1),
    ("A", 0),
    ("A", 1),
    ("B", 0),
];
const STEPS_FLAT: [(&str, i32); 12] = [
    ("C", 0),
    ("D", -1),
    ("D", 0),
    ("E", -1),
    ("E", 0),
    ("F", 0),
    ("G", -1),
    ("G", 0),
    ("A", -1),
    ("A", 0),
    ("B", -1),
    ("B", 0),
];

fn note_type(units: u8) -> Option<(&'static str, bool)> {
    Some(match units {
        64 => ("whole", false),
        48 => ("half", true),
        32 => ("half", false),
        24 => ("quarter", true),
        16 => ("quarter", false),
        12 => ("eighth", true),
        8 => ("eighth", false),
        6 => ("16th", true),
        4 => ("16th", false),
        3 => ("32nd", true),
        2 => ("32nd", false),
        1 => ("64th", false),
        _ => return None,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

const PART_NAMES: [&str; PART_COUNT] = ["Soprano", "Alto", "Tenor", "Bass"];

/// Minimal partwise document: one measure per part, divisions of 16 per
/// quarter so every duration is written in sixty-fourth units.
pub fn to_musicxml(score: &Score) -> String {
    let spell = if score.key.fifths() < 0 {
        &STEPS_FLAT
    } else {
        &STEPS_SHARP
    };
    let mut x = String::new();
    x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    x.push_str("<score-partwise version=\"3.1\">\n");
    let _ = writeln!(
        x,
        "  <work><work-title>{}</work-title></work>",
        escape(&score.title)
    );
    x.push_str("  <part-list>\n");
    for (j, name) in PART_NAMES.iter().enumerate() {
        let _ = writeln!(
            x,
            "    <score-part id=\"P{}\"><part-name>{}</part-name></score-part>",
            j + 1,
            name
        );
    }
    x.push_str("  </part-list>\n");
    for (j, part) in score.parts.iter().enumerate() {
        let _ = writeln!(x, "  <part id=\"P{}\">", j + 1);
        x.push_str("    <measure number=\"1\">\n");
        let _ = writeln!(
            x,
            "      <attributes><divisions>{}</divisions><key><fifths>{}</fifths><mode>{}</mode></key></attributes>",
            UNITS_PER_QUARTER,
            score.key.fifths(),
            score.key.mode
        );
        for e in &part.events {
            let (step, alter) = spell[(e.pitch % 12) as usize];
            let octave = e.pitch as i32 / 12 - 1;
            x.push_str("      <note><pitch>");
            let _ = write!(x, "<step>{step}</step>");
            if alter != 0 {
                let _ = write!(x, "<alter>{alter}</alter>");
            }
            let _ = write!(
                x,
                "<octave>{octave}</octave></pitch><duration>{}</duration>",
                e.duration
            );
            if let Some((t, dotted)) = note_type(e.duration) {
                let _ = write!(x, "<type>{t}</type>");
                if dotted {
                    x.push_str("<dot/>");
                }
            }
            x.push_str("</note>\n");
        }
        x.push_str("    </measure>\n");
        x.push_str("  </part>\n");
    }
    x.push_str("</score-partwise>\n");
    x
}

pub fn write_musicxml(score: &Score, path: &Path) -> Result<()> {
    std::fs::write(path, to_musicxml(score)).map_err(|e| Error::io(path, e))
}

/// Notes of every part, without positions, for round-trip comparison.
pub fn note_lists(score: &Score) -> [Vec<(u8, u8)>; PART_COUNT] {
    std::array::from_fn(|j| {
        score.parts[j]
            .events
            .iter()
            .map(|e: &NoteEvent| (e.pitch, e.duration))
            .collect()
    })
}
