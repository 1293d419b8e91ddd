//! The neutral embedding data model and its JSON Lines file format.
//!
//! One line per record:
//!
//! ```text
//! {"id":"s1","label":"DATE","tokens":[[0.1,0.2],[0.3,0.4]],"word_spans":[[0,2]]}
//! {"id":"s2","label":"NONPHI","pooled":[0.5,0.25]}
//! ```
//!
//! `id` and `label` are required, at least one of `pooled` / `tokens` must be
//! present, and unknown keys are ignored. Vectors are 32-bit floats written in
//! their shortest round-tripping decimal form.

mod io;
mod record;
mod subword;
mod synth;

pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};
pub(crate) use io::tmp_path;
pub use record::{Dataset, EmbeddingRecord, Span};
pub use subword::{average_subwords, mean_of, pool_words};
pub use synth::synth_fixture;
