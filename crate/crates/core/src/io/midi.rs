//! Standard MIDI File output: format 1, one track per part.

use std::path::Path;

use crate::error::{Error, Result};
use crate::score::{Score, UNITS_PER_QUARTER};

pub const TICKS_PER_QUARTER: u16 = 480;
pub const TICKS_PER_UNIT: u32 = TICKS_PER_QUARTER as u32 / UNITS_PER_QUARTER;
/// Microseconds per quarter (120 bpm).
pub const TEMPO: u32 = 500_000;
const VELOCITY: u8 = 80;

fn push_vlq(out: &mut Vec<u8>, mut v: u32) {
    let mut buf = [0u8; 4];
    let mut i = 3;
    buf[i] = (v & 0x7f) as u8;
    v >>= 7;
    while v > 0 {
        i -= 1;
        buf[i] = (v & 0x7f) as u8 | 0x80;
        v >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

fn chunk(out: &mut Vec<u8>, tag: &[u8; 4], body: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
}

/// Serializes `score`; identical scores give identical bytes.
pub fn to_midi(score: &Score) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header = Vec::with_capacity(6);
    header.extend_from_slice(&1u16.to_be_bytes());
    header.extend_from_slice(&(score.parts.len() as u16).to_be_bytes());
    header.extend_from_slice(&TICKS_PER_QUARTER.to_be_bytes());
    chunk(&mut out, b"MThd", &header);

    for (j, part) in score.parts.iter().enumerate() {
        let ch = j as u8;
        let mut t = Vec::new();
        if j == 0 {
            t.extend_from_slice(&[0x00, 0xff, 0x51, 0x03]);
            t.extend_from_slice(&TEMPO.to_be_bytes()[1..]);
        }
        for e in &part.events {
            push_vlq(&mut t, 0);
            t.extend_from_slice(&[0x90 | ch, e.pitch, VELOCITY]);
            push_vlq(&mut t, e.duration as u32 * TICKS_PER_UNIT);
            t.extend_from_slice(&[0x80 | ch, e.pitch, 0]);
        }
        t.extend_from_slice(&[0x00, 0xff, 0x2f, 0x00]);
        chunk(&mut out, b"MTrk", &t);
    }
    out
}

pub fn write_midi(score: &Score, path: &Path) -> Result<()> {
    std::fs::write(path, to_midi(score)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{Key, Mode, PitchClass};

    fn read_vlq(b: &[u8], i: &mut usize) -> u32 {
        let mut v = 0;
        loop {
            let x = b[*i];
            *i += 1;
            v = (v << 7) | (x & 0x7f) as u32;
            if x & 0x80 == 0 {
                return v;
            }
        }
    }

    /// Walks the file and returns (channel, pitch, start, end) per note.
    fn notes(b: &[u8]) -> Vec<(u8, u8, u32, u32)> {
        assert_eq!(&b[0..4], b"MThd");
        assert_eq!(&b[8..14], &[0, 1, 0, 4, 0x01, 0xe0]);
        let mut i = 14;
        let mut out = Vec::new();
        for _ in 0..4 {
            assert_eq!(&b[i..i + 4], b"MTrk");
            let len = u32::from_be_bytes(b[i + 4..i + 8].try_into().unwrap()) as usize;
            let end = i + 8 + len;
            i += 8;
            let mut now = 0;
            let mut open = None;
            loop {
                now += read_vlq(b, &mut i);
                let status = b[i];
                if status == 0xff {
                    let kind = b[i + 1];
                    let n = b[i + 2] as usize;
                    i += 3 + n;
                    if kind == 0x2f {
                        break;
                    }
                    continue;
                }
                let (p, v) = (b[i + 1], b[i + 2]);
                i += 3;
                match status & 0xf0 {
                    0x90 if v > 0 => open = Some((status & 0x0f, p, now)),
                    0x80 => {
                        let (c, q, s) = open.take().unwrap();
                        assert_eq!(q, p);
                        out.push((c, p, s, now));
                    }
                    _ => panic!("unexpected status {status:#x}"),
                }
            }
            assert_eq!(i, end);
        }
        assert_eq!(i, b.len());
        out
    }

    #[test]
    fn vlq_encoding() {
        for (v, want) in [
            (0u32, vec![0]),
            (0x7f, vec![0x7f]),
            (0x80, vec![0x81, 0]),
            (480, vec![0x83, 0x60]),
            (0x3fff, vec![0xff, 0x7f]),
        ] {
            let mut b = Vec::new();
            push_vlq(&mut b, v);
            assert_eq!(b, want);
            assert_eq!(read_vlq(&b, &mut 0), v);
        }
    }

    #[test]
    fn structure_and_timing() {
        let key = Key::new(PitchClass::C, Mode::Major);
        let s = Score::from_voices(
            [&[(72, 16), (74, 8)], &[(67, 32)], &[(64, 1)], &[(48, 64)]],
            key,
            "t",
        )
        .unwrap();
        let b = to_midi(&s);
        assert_eq!(b, to_midi(&s));
        let n = notes(&b);
        assert_eq!(
            n,
            vec![
                (0, 72, 0, 480),
                (0, 74, 480, 720),
                (1, 67, 0, 960),
                (2, 64, 0, 30),
                (3, 48, 0, 1920)
            ]
        );
        // tempo meta sits in the first track
        assert_eq!(&b[22..29], &[0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20]);
    }
}
