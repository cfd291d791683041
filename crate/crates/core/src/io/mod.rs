pub mod corpus;
pub mod midi;
pub mod musicxml;

pub use corpus::{load_corpus, CorpusEntry, CorpusManifest, Skipped};
pub use midi::{to_midi, write_midi};
pub use musicxml::{parse_musicxml, read_musicxml, to_musicxml, write_musicxml};
