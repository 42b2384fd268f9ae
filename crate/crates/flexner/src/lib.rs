//! Inflection-tolerant gazetteer annotation for German text.
//!
//! The crate builds a two-layer matching structure from a gazetteer: a
//! character-level trie that recognizes word surfaces, and a word-level term
//! graph that recognizes sequences of those words. Each gazetteer label is
//! expanded into the inflected forms of its words (full-form lemma table,
//! compound splitting, genitive heuristics), and the term graph encodes the
//! Cartesian product of the per-word form sets without materializing it.
//!
//! Matching over a text happens in a single left-to-right pass. A rake of
//! lightweight processors walks the term graph in parallel, one processor per
//! possible term start, and an overlap voter reduces the harvested candidates
//! to a non-overlapping, longest-match result.
//!
//! On top of the engine sit:
//!
//! * [`recognizer::HierarchicalRecognizer`], which routes gazetteer entries
//!   into per-policy engines (HIGH, LOW, ACRONYM) and merges their output,
//! * [`stemfst::StemFst`], a stemming baseline over the same gazetteer,
//! * [`eval`], a corpus evaluation harness (recall by edit distance,
//!   precision variants, throughput).

pub mod eval;
pub mod lexicon;
pub mod mlfst;
pub mod morphology;
pub mod recognizer;
pub mod stemfst;
pub mod textgen;

pub use lexicon::{EntityId, EntityType, Gazetteer, PolicyConfig, TermEntry, TolerancePolicy};
pub use mlfst::{Match, MlfstEngine};
pub use morphology::LemmaTable;
pub use recognizer::HierarchicalRecognizer;
pub use stemfst::StemFst;

/// Anything that can annotate plain text with gazetteer matches.
///
/// Implementations return matches sorted by start offset, pairwise
/// non-overlapping, with sorted entity id lists.
pub trait Annotator {
    fn annotate(&self, text: &str) -> Vec<Match>;
}
