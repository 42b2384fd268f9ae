//! Multi-layer matching engine.
//!
//! Terms are stored in two cooperating layers. The character layer is a trie
//! over token surfaces that turns a stream of characters into a stream of
//! word events. The word layer is a graph whose edges are labeled with sets
//! of word ids, so a term given as per-position alternative sets occupies one
//! path regardless of how many concrete sequences the sets multiply out to.
//! Scanning runs a rake of lightweight processors over the event stream, one
//! spawned per word occurrence, forking on ambiguity and harvesting the best
//! accepted span when they die. Harvested spans from all processors go
//! through the overlap voter, which keeps the longest non-overlapping spans.

pub mod char_layer;
pub(crate) mod voter;
pub mod word_layer;

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::lexicon::EntityId;
use char_layer::{is_delimiter, CharTrie, Scanner, WordId};
use voter::{vote_spans, Candidate, EntitySource, RawSpan};
use word_layer::{Rake, RawMatch, TermGraph, TermId};

/// Errors produced by engine construction, mutation, and persistence.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    /// A word surface was empty or contained a delimiter character.
    #[error("invalid word surface {0:?}: must be non-empty and delimiter-free")]
    InvalidWord(String),
    /// A term had no positions, or a position had no surface forms.
    #[error("term for entity {0:?} has an empty position")]
    EmptyTerm(String),
    /// A dump had the wrong format tag or an unsupported version.
    #[error("unsupported index format: expected {expected} v{version}, found {found}")]
    IndexFormat {
        expected: &'static str,
        version: u32,
        found: String,
    },
    #[error("malformed index: {0}")]
    IndexParse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Version envelope wrapped around every serialized index.
#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    payload: T,
}

pub(crate) fn write_versioned<W: Write, T: Serialize>(
    writer: W,
    format: &'static str,
    version: u32,
    payload: &T,
) -> Result<(), EngineError> {
    serde_json::to_writer(
        writer,
        &Envelope {
            format: format.to_string(),
            version,
            payload,
        },
    )?;
    Ok(())
}

pub(crate) fn read_versioned<R: Read, T: for<'de> Deserialize<'de>>(
    reader: R,
    format: &'static str,
    version: u32,
) -> Result<T, EngineError> {
    // Two stages so a wrong format tag is reported as such instead of as a
    // payload shape mismatch.
    let envelope: Envelope<serde_json::Value> = serde_json::from_reader(reader)?;
    if envelope.format != format || envelope.version != version {
        return Err(EngineError::IndexFormat {
            expected: format,
            version,
            found: format!("{} v{}", envelope.format, envelope.version),
        });
    }
    Ok(serde_json::from_value(envelope.payload)?)
}

const ENGINE_FORMAT: &str = "flexner-mlfst";
const ENGINE_VERSION: u32 = 1;

/// Default ceiling on simultaneously live processors during a scan.
pub const DEFAULT_RAKE_CAP: usize = 10_000;

/// Interns entity ids as dense term ids, refcounted so an entity registered
/// under several terms survives until its last term is removed.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
struct TermInterner {
    names: Vec<Option<String>>,
    refcounts: Vec<u32>,
    ids: HashMap<String, u32>,
    free: Vec<u32>,
}

impl TermInterner {
    fn get(&self, entity: &str) -> Option<TermId> {
        self.ids.get(entity).copied().map(TermId)
    }

    fn intern(&mut self, entity: &str) -> TermId {
        if let Some(&id) = self.ids.get(entity) {
            self.refcounts[id as usize] += 1;
            return TermId(id);
        }
        let id = match self.free.pop() {
            Some(id) => {
                self.names[id as usize] = Some(entity.to_string());
                self.refcounts[id as usize] = 1;
                id
            }
            None => {
                self.names.push(Some(entity.to_string()));
                self.refcounts.push(1);
                (self.names.len() - 1) as u32
            }
        };
        self.ids.insert(entity.to_string(), id);
        TermId(id)
    }

    fn release(&mut self, term: TermId) {
        let idx = term.0 as usize;
        self.refcounts[idx] -= 1;
        if self.refcounts[idx] == 0 {
            if let Some(name) = self.names[idx].take() {
                self.ids.remove(&name);
            }
            self.free.push(term.0);
        }
    }

    fn name(&self, term: TermId) -> &str {
        self.names[term.0 as usize]
            .as_deref()
            .expect("live term id")
    }

    fn live_count(&self) -> usize {
        self.ids.len()
    }
}

/// One annotated span. Offsets are character offsets into the scanned text,
/// end exclusive. Entity ids are sorted for deterministic output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity_ids: Vec<String>,
    /// Which recognizer produced the span, e.g. "mlfst-high" or "stemfst".
    pub recognizer: String,
}

/// Scan instrumentation reported alongside matches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnnotateStats {
    /// Most processors simultaneously live at any point of the scan.
    pub peak_processors: usize,
    /// Processors force-harvested because the rake cap was hit.
    pub overflow_harvests: usize,
}

/// The two-layer matching engine: a character trie feeding a word-level
/// term graph scanned by a rake of processors.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct MlfstEngine {
    chars: CharTrie,
    graph: TermGraph,
    terms: TermInterner,
    tag: String,
    rake_cap: usize,
}

impl MlfstEngine {
    pub fn new(tag: &str) -> Self {
        Self::with_rake_cap(tag, DEFAULT_RAKE_CAP)
    }

    pub fn with_rake_cap(tag: &str, rake_cap: usize) -> Self {
        MlfstEngine {
            chars: CharTrie::default(),
            graph: TermGraph::default(),
            terms: TermInterner::default(),
            tag: tag.to_string(),
            rake_cap,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn rake_cap(&self) -> usize {
        self.rake_cap
    }

    pub fn set_rake_cap(&mut self, cap: usize) {
        self.rake_cap = cap;
    }

    /// Canonicalizes per-position surface sets: order-preserving dedup
    /// within each position. Validation happens before any mutation so a
    /// failed add leaves the engine untouched.
    fn canonical_sets<'a>(
        forms_per_position: &'a [Vec<String>],
        entity: &EntityId,
    ) -> Result<Vec<Vec<&'a str>>, EngineError> {
        if forms_per_position.is_empty() {
            return Err(EngineError::EmptyTerm(entity.as_str().to_string()));
        }
        let mut sets = Vec::with_capacity(forms_per_position.len());
        for position in forms_per_position {
            let mut seen = Vec::new();
            for form in position {
                if form.is_empty() || form.chars().any(is_delimiter) {
                    return Err(EngineError::InvalidWord(form.clone()));
                }
                if !seen.contains(&form.as_str()) {
                    seen.push(form.as_str());
                }
            }
            if seen.is_empty() {
                return Err(EngineError::EmptyTerm(entity.as_str().to_string()));
            }
            sets.push(seen);
        }
        Ok(sets)
    }

    /// Resolves surface sets to sorted word id sets without registering
    /// anything. None if any surface is unknown.
    fn try_resolve(&self, sets: &[Vec<&str>]) -> Option<Vec<Vec<WordId>>> {
        let mut id_sets = Vec::with_capacity(sets.len());
        for set in sets {
            let mut ids = Vec::with_capacity(set.len());
            for surface in set {
                ids.push(self.chars.lookup(surface)?);
            }
            ids.sort_unstable();
            ids.dedup();
            id_sets.push(ids);
        }
        Some(id_sets)
    }

    /// Registers a term for an entity. Each element of `forms_per_position`
    /// is the set of surface forms accepted at that position; the term
    /// matches every sequence in the Cartesian product of the sets. Returns
    /// Ok(false) without touching anything if this exact term is already
    /// registered for this entity.
    pub fn add_term(
        &mut self,
        forms_per_position: &[Vec<String>],
        entity: &EntityId,
    ) -> Result<bool, EngineError> {
        let sets = Self::canonical_sets(forms_per_position, entity)?;
        if let Some(term) = self.terms.get(entity.as_str()) {
            if let Some(id_sets) = self.try_resolve(&sets) {
                if let Some(end) = self.graph.find_chain(&id_sets) {
                    if self.graph.accepting(end).contains(&term) {
                        return Ok(false);
                    }
                }
            }
        }
        let mut id_sets = Vec::with_capacity(sets.len());
        for set in &sets {
            let mut ids = Vec::with_capacity(set.len());
            for surface in set {
                ids.push(self.chars.register_word(surface)?);
            }
            ids.sort_unstable();
            ids.dedup();
            id_sets.push(ids);
        }
        let term = self.terms.intern(entity.as_str());
        let added = self.graph.add_term_path(&id_sets, term);
        debug_assert!(added, "pre-check guarantees the path is new for the term");
        Ok(true)
    }

    /// Removes a previously added term. Unknown terms are a logged no-op
    /// returning false; all character and graph storage the term used
    /// exclusively is reclaimed on success.
    pub fn remove_term(&mut self, forms_per_position: &[Vec<String>], entity: &EntityId) -> bool {
        let Ok(sets) = Self::canonical_sets(forms_per_position, entity) else {
            log::warn!("remove_term for {:?}: malformed term shape, ignoring", entity);
            return false;
        };
        let Some(term) = self.terms.get(entity.as_str()) else {
            log::warn!("remove_term for {:?}: unknown entity, ignoring", entity);
            return false;
        };
        let Some(id_sets) = self.try_resolve(&sets) else {
            log::warn!("remove_term for {:?}: unknown surface form, ignoring", entity);
            return false;
        };
        if !self.graph.remove_term_path(&id_sets, term) {
            log::warn!("remove_term for {:?}: term not registered, ignoring", entity);
            return false;
        }
        for set in &sets {
            for surface in set {
                self.chars.unregister_word(surface);
            }
        }
        self.terms.release(term);
        true
    }

    /// Scans text and returns non-overlapping matches sorted by start.
    pub fn annotate(&self, text: &str) -> Vec<Match> {
        self.annotate_with_stats(text).0
    }

    pub fn annotate_with_stats(&self, text: &str) -> (Vec<Match>, AnnotateStats) {
        let (raw, stats) = self.raw_spans_with_stats(text, 0);
        let source = EngineSource {
            engine: self,
            priority: 0,
        };
        let resolved = vote_spans(raw, &[&source]);
        (candidates_to_matches(text, resolved), stats)
    }

    /// Raw accepted spans for recognizers that vote across several engines.
    /// `source` is echoed into every span so the voter can route entity
    /// resolution back to this engine.
    pub(crate) fn raw_spans_with_stats(
        &self,
        text: &str,
        source: u8,
    ) -> (Vec<RawSpan>, AnnotateStats) {
        let mut rake = Rake::new(self.rake_cap);
        let mut raw: Vec<RawMatch> = Vec::new();
        for event in self.chars.scan(text) {
            rake.on_event(&self.graph, &event, &mut raw);
        }
        let spans = raw
            .into_iter()
            .map(|m| RawSpan {
                start: m.start_char,
                end: m.end_char,
                byte_start: m.start_byte,
                byte_end: m.end_byte,
                source,
                payload: m.node,
            })
            .collect();
        let stats = AnnotateStats {
            peak_processors: rake.peak,
            overflow_harvests: rake.overflow,
        };
        (spans, stats)
    }

    pub fn scan<'a>(&'a self, text: &'a str) -> Scanner<'a> {
        self.chars.scan(text)
    }

    /// Nodes in the character trie, root excluded.
    pub fn char_node_count(&self) -> usize {
        self.chars.node_count()
    }

    /// Nodes in the word-level term graph, root excluded.
    pub fn word_node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Distinct word surfaces currently registered.
    pub fn word_count(&self) -> usize {
        self.chars.word_count()
    }

    /// Distinct entities with at least one live term.
    pub fn term_count(&self) -> usize {
        self.terms.live_count()
    }

    /// Number of concrete word sequences the engine accepts for an entity,
    /// i.e. the sum over its terms of the product of per-position set sizes.
    pub fn accepted_sequence_count(&self, entity: &EntityId) -> u64 {
        match self.terms.get(entity.as_str()) {
            Some(term) => self.graph.sequence_count(term),
            None => 0,
        }
    }

    /// Writes the full engine state as versioned JSON.
    pub fn dump<W: Write>(&self, writer: W) -> Result<(), EngineError> {
        write_versioned(writer, ENGINE_FORMAT, ENGINE_VERSION, self)
    }

    /// Restores an engine from a dump produced by [`MlfstEngine::dump`].
    pub fn load<R: Read>(reader: R) -> Result<Self, EngineError> {
        read_versioned(reader, ENGINE_FORMAT, ENGINE_VERSION)
    }
}

/// Adapter exposing an engine's accepting entity sets to the shared voter
/// under a vote priority of the caller's choice.
pub(crate) struct EngineSource<'a> {
    pub engine: &'a MlfstEngine,
    pub priority: u8,
}

impl EntitySource for EngineSource<'_> {
    fn tag(&self) -> &str {
        &self.engine.tag
    }

    fn priority(&self) -> u8 {
        self.priority
    }

    fn fill(&self, payload: u32, out: &mut BTreeSet<String>) {
        for &term in self.engine.graph.accepting(payload) {
            out.insert(self.engine.terms.name(term).to_string());
        }
    }
}

/// Turns voter survivors into user-facing matches, slicing surfaces out of
/// the scanned text by byte span.
pub(crate) fn candidates_to_matches(text: &str, resolved: Vec<Candidate>) -> Vec<Match> {
    resolved
        .into_iter()
        .map(|c| Match {
            start: c.start,
            end: c.end,
            surface: text[c.byte_start..c.byte_end].to_string(),
            entity_ids: c.entities.into_iter().collect(),
            recognizer: c.tag,
        })
        .collect()
}

impl crate::Annotator for MlfstEngine {
    fn annotate(&self, text: &str) -> Vec<Match> {
        MlfstEngine::annotate(self, text)
    }
}
