//! Stemming baseline: a single-layer character trie over stemmed labels.
//!
//! Each gazetteer label is split into words, every word is stemmed, and the
//! stems are rejoined with single spaces to form the trie key. Scanning stems
//! every input token the same way and walks a set of cursors through the
//! trie, one per possible match start, so a key matches any contiguous token
//! run with the same stems. Spans are reported against the original text via
//! the token map. A trailing dot is stripped from a token before stemming and
//! excluded from the reported span, mirroring how a sentence-final word reads
//! without its period; tokens that stem to nothing (bare punctuation) are
//! transparent to the cursor walk, matching how keys are built.

use std::collections::BTreeSet;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::lexicon::Gazetteer;
use crate::mlfst::char_layer::tokenize;
use crate::mlfst::voter::{vote_spans, EntitySource, RawSpan};
use crate::mlfst::{candidates_to_matches, Match};
use crate::morphology::stem;

pub const TAG_STEMFST: &str = "stemfst";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StemNode {
    children: HashMap<char, u32>,
    /// Entity ids accepted at this node; empty means non-accepting.
    entities: BTreeSet<String>,
}

/// Baseline recognizer matching stem-normalized labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemFst {
    nodes: Vec<StemNode>,
    key_count: usize,
}

/// Stem of one token: a single trailing period is dropped first.
fn stem_token(token: &str) -> String {
    stem(token.strip_suffix('.').unwrap_or(token))
}

/// The trie key for a label: per-word stems joined by single spaces. None
/// when no word survives stemming.
fn label_key(label: &str) -> Option<String> {
    let parts: Vec<String> = tokenize(label)
        .into_iter()
        .map(|t| stem_token(t.surface))
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        None
    } else {
        Some(parts.join(" "))
    }
}

impl Default for StemFst {
    fn default() -> Self {
        StemFst {
            nodes: vec![StemNode::default()],
            key_count: 0,
        }
    }
}

impl StemFst {
    /// Indexes every gazetteer label under its stemmed key. Labels that
    /// stem to the same key share one key with unioned entity ids.
    pub fn build(gazetteer: &Gazetteer) -> Self {
        let mut index = StemFst::default();
        for entry in &gazetteer.entries {
            let Some(key) = label_key(&entry.label) else {
                log::warn!("label {:?} stems to nothing, skipping", entry.label);
                continue;
            };
            index.insert(&key, entry.entity.as_str());
        }
        index
    }

    fn insert(&mut self, key: &str, entity: &str) {
        let mut node = 0u32;
        for c in key.chars() {
            let next = match self.nodes[node as usize].children.get(&c) {
                Some(&n) => n,
                None => {
                    let n = self.nodes.len() as u32;
                    self.nodes.push(StemNode::default());
                    self.nodes[node as usize].children.insert(c, n);
                    n
                }
            };
            node = next;
        }
        let slot = &mut self.nodes[node as usize];
        if slot.entities.is_empty() {
            self.key_count += 1;
        }
        slot.entities.insert(entity.to_string());
    }

    fn walk(&self, mut node: u32, part: &str) -> Option<u32> {
        for c in part.chars() {
            node = *self.nodes[node as usize].children.get(&c)?;
        }
        Some(node)
    }

    /// Entity ids stored under a stemmed key, mainly for introspection.
    pub fn entities_for_key(&self, key: &str) -> Option<&BTreeSet<String>> {
        let node = self.walk(0, key)?;
        let entities = &self.nodes[node as usize].entities;
        if entities.is_empty() {
            None
        } else {
            Some(entities)
        }
    }

    /// Distinct stemmed keys in the index.
    pub fn key_count(&self) -> usize {
        self.key_count
    }

    /// Trie nodes, root excluded.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Annotates text: tokens are stemmed on the fly and matched against
    /// the indexed keys; overlaps resolve longest-first, then leftmost.
    pub fn annotate(&self, text: &str) -> Vec<Match> {
        let tokens = tokenize(text);
        // One cursor per candidate match start: (start token, trie node).
        let mut cursors: Vec<(usize, u32)> = Vec::new();
        let mut next: Vec<(usize, u32)> = Vec::new();
        let mut raw: Vec<RawSpan> = Vec::new();
        for (idx, token) in tokens.iter().enumerate() {
            let dotless = token.surface.strip_suffix('.');
            let stemmed = stem(dotless.unwrap_or(token.surface));
            if stemmed.is_empty() {
                continue;
            }
            next.clear();
            for &(start, node) in &cursors {
                if let Some(separator) = self.walk(node, " ") {
                    if let Some(advanced) = self.walk(separator, &stemmed) {
                        next.push((start, advanced));
                    }
                }
            }
            if let Some(spawned) = self.walk(0, &stemmed) {
                next.push((idx, spawned));
            }
            std::mem::swap(&mut cursors, &mut next);
            // The reported span ends at the token's extent, minus a stripped
            // sentence period.
            let trim = usize::from(dotless.is_some());
            for &(start, node) in &cursors {
                if self.nodes[node as usize].entities.is_empty() {
                    continue;
                }
                raw.push(RawSpan {
                    start: tokens[start].char_start,
                    end: token.char_end - trim,
                    byte_start: tokens[start].byte_start,
                    byte_end: token.byte_end - trim,
                    source: 0,
                    payload: node,
                });
            }
        }
        let resolved = vote_spans(raw, &[&StemSource(self)]);
        candidates_to_matches(text, resolved)
    }
}

/// Adapter exposing the index's entity sets to the shared voter.
struct StemSource<'a>(&'a StemFst);

impl EntitySource for StemSource<'_> {
    fn tag(&self) -> &str {
        TAG_STEMFST
    }

    fn priority(&self) -> u8 {
        0
    }

    fn fill(&self, payload: u32, out: &mut BTreeSet<String>) {
        out.extend(self.0.nodes[payload as usize].entities.iter().cloned());
    }
}

impl crate::Annotator for StemFst {
    fn annotate(&self, text: &str) -> Vec<Match> {
        StemFst::annotate(self, text)
    }
}
