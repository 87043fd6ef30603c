//! Two-way visibly pushdown automata and transducers over nested words.
//!
//! The crate covers one-way VPA/VPT ([`vpa`]), two-way automata with their
//! traversal algebra ([`twovpa`]), two-way transducers ([`twovpt`]),
//! composition and look-around removal ([`compose`]) and streaming
//! tree-to-string transducers ([`stst`]).

pub mod alphabet;
pub mod compose;
pub mod error;
pub mod exec;
pub mod format;
pub mod nested;
pub mod oracle;
pub mod rel;
pub mod samples;
pub mod stst;
pub mod twovpa;
pub mod twovpt;
pub mod vpa;

pub use alphabet::{Dir, Letter, StructuredAlphabet};
pub use error::{Error, Result};
pub use exec::Exec;
pub use nested::NestedWord;
