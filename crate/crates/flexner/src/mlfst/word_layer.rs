//! Word layer: the term graph and the rake of processors that walks it.
//!
//! The graph is a trie whose edges are labeled with *sets* of word ids
//! (bundles). A term with per-position form sets `S1..Sk` is stored as a
//! chain of k bundles; every word of `Si` converges on the same next node,
//! which is what encodes the Cartesian product of the form sets without
//! materializing it. Terms that share a prefix of identical bundles share
//! those nodes. A single word may appear in several sibling bundles, in
//! which case stepping on that word leads to several targets and a walking
//! processor forks.
//!
//! Matching is done by a rake of processors. Every word event spawns one
//! fresh processor at the root, existing processors either advance along a
//! matching edge or fail and are harvested (their best match so far is
//! emitted). Sentence ends harvest everything. A trailing-dot event forks
//! each processor into an abbreviation reading that keeps running and a
//! sentence-end reading that consumes the dotless word and then harvests.

use super::char_layer::{LayerEvent, WordId};
use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Dense id of a registered term (an interned entity id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(pub u32);

/// One outgoing edge group: a sorted set of word ids converging on a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Bundle {
    words: Vec<WordId>,
    target: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct WordNode {
    /// Word to the targets of all bundles containing it.
    edges: HashMap<WordId, Vec<u32>>,
    bundles: Vec<Bundle>,
    accepting: IndexSet<TermId>,
    /// Number of terms whose chain passes through this node.
    refcount: u32,
}

/// Trie over per-position word-id sets. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermGraph {
    nodes: Vec<WordNode>,
    free_nodes: Vec<u32>,
}

impl Default for TermGraph {
    fn default() -> Self {
        TermGraph {
            nodes: vec![WordNode::default()],
            free_nodes: Vec::new(),
        }
    }
}

impl TermGraph {
    /// Adds a term chain. `sets` must be sorted and deduplicated per
    /// position. Returns false when the term was already present on an
    /// identical chain (the graph is left untouched).
    pub(crate) fn add_term_path(&mut self, sets: &[Vec<WordId>], term: TermId) -> bool {
        debug_assert!(!sets.is_empty());
        if let Some(end) = self.find_chain(sets) {
            if self.nodes[end as usize].accepting.contains(&term) {
                return false;
            }
        }
        let mut node = 0u32;
        let mut chain = Vec::with_capacity(sets.len());
        for set in sets {
            let next = match self.find_bundle(node, set) {
                Some(target) => target,
                None => {
                    let target = self.alloc_node();
                    for &w in set {
                        self.nodes[node as usize]
                            .edges
                            .entry(w)
                            .or_default()
                            .push(target);
                    }
                    self.nodes[node as usize].bundles.push(Bundle {
                        words: set.clone(),
                        target,
                    });
                    target
                }
            };
            chain.push(next);
            node = next;
        }
        for &n in &chain {
            self.nodes[n as usize].refcount += 1;
        }
        self.nodes[node as usize].accepting.insert(term);
        true
    }

    /// Removes a term chain added with identical `sets`. Returns false when
    /// no such registration exists.
    pub(crate) fn remove_term_path(&mut self, sets: &[Vec<WordId>], term: TermId) -> bool {
        let mut node = 0u32;
        let mut chain = Vec::with_capacity(sets.len());
        for set in sets {
            match self.find_bundle(node, set) {
                Some(target) => {
                    chain.push((node, target));
                    node = target;
                }
                None => return false,
            }
        }
        if !self.nodes[node as usize].accepting.shift_remove(&term) {
            return false;
        }
        for &(_, n) in &chain {
            self.nodes[n as usize].refcount -= 1;
        }
        for (idx, &(parent, n)) in chain.iter().enumerate().rev() {
            if self.nodes[n as usize].refcount == 0 {
                debug_assert!(self.nodes[n as usize].bundles.is_empty());
                debug_assert!(self.nodes[n as usize].accepting.is_empty());
                let set = &sets[idx];
                for w in set {
                    if let Some(targets) = self.nodes[parent as usize].edges.get_mut(w) {
                        targets.retain(|&t| t != n);
                        if targets.is_empty() {
                            self.nodes[parent as usize].edges.remove(w);
                        }
                    }
                }
                self.nodes[parent as usize].bundles.retain(|b| b.target != n);
                self.nodes[n as usize] = WordNode::default();
                self.free_nodes.push(n);
            }
        }
        true
    }

    /// Walks existing bundles for `sets`; the end node if the full chain
    /// exists.
    pub(crate) fn find_chain(&self, sets: &[Vec<WordId>]) -> Option<u32> {
        let mut node = 0u32;
        for set in sets {
            node = self.find_bundle(node, set)?;
        }
        Some(node)
    }

    fn find_bundle(&self, node: u32, set: &[WordId]) -> Option<u32> {
        self.nodes[node as usize]
            .bundles
            .iter()
            .find(|b| b.words == set)
            .map(|b| b.target)
    }

    fn alloc_node(&mut self) -> u32 {
        match self.free_nodes.pop() {
            Some(n) => n,
            None => {
                self.nodes.push(WordNode::default());
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Targets reachable from `node` on `word`; empty when there is no edge.
    pub(crate) fn step(&self, node: u32, word: WordId) -> &[u32] {
        self.nodes[node as usize]
            .edges
            .get(&word)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub(crate) fn accepting(&self, node: u32) -> &IndexSet<TermId> {
        &self.nodes[node as usize].accepting
    }

    /// Live nodes, root excluded.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1 - self.free_nodes.len()
    }

    /// Number of distinct word sequences accepted for `term`, by exhaustive
    /// walk over the bundle trie.
    pub(crate) fn sequence_count(&self, term: TermId) -> u64 {
        fn walk(graph: &TermGraph, node: u32, multiplicity: u64, term: TermId, total: &mut u64) {
            if graph.nodes[node as usize].accepting.contains(&term) {
                *total += multiplicity;
            }
            for bundle in &graph.nodes[node as usize].bundles {
                walk(
                    graph,
                    bundle.target,
                    multiplicity * bundle.words.len() as u64,
                    term,
                    total,
                );
            }
        }
        let mut total = 0;
        walk(self, 0, 1, term, &mut total);
        total
    }
}

/// A raw harvested span, still carrying the accepting node it ended on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RawMatch {
    pub start_char: usize,
    pub start_byte: usize,
    pub end_char: usize,
    pub end_byte: usize,
    pub node: u32,
}

#[derive(Debug, Clone, Copy)]
struct Processor {
    node: u32,
    start_char: usize,
    start_byte: usize,
    last_token: usize,
    best: Option<BestMatch>,
}

#[derive(Debug, Clone, Copy)]
struct BestMatch {
    node: u32,
    end_char: usize,
    end_byte: usize,
}

impl Processor {
    fn harvest(&self, out: &mut Vec<RawMatch>) {
        if let Some(best) = self.best {
            out.push(RawMatch {
                start_char: self.start_char,
                start_byte: self.start_byte,
                end_char: best.end_char,
                end_byte: best.end_byte,
                node: best.node,
            });
        }
    }
}

/// The set of live processors for one annotation pass.
pub(crate) struct Rake {
    procs: Vec<Processor>,
    scratch: Vec<Processor>,
    cap: usize,
    /// Highest number of simultaneously live processors observed.
    pub peak: usize,
    /// Processors force-harvested because the rake hit its cap.
    pub overflow: usize,
}

impl Rake {
    pub fn new(cap: usize) -> Self {
        Rake {
            procs: Vec::new(),
            scratch: Vec::new(),
            cap,
            peak: 0,
            overflow: 0,
        }
    }

    pub fn on_event(&mut self, graph: &TermGraph, ev: &LayerEvent, out: &mut Vec<RawMatch>) {
        match *ev {
            LayerEvent::Word {
                word,
                start,
                end,
                byte_start,
                byte_end,
                token_index,
            } => {
                self.word_step(graph, word, start, byte_start, end, byte_end, token_index, out);
            }
            LayerEvent::DotAmbiguous {
                with_dot,
                without_dot,
                start,
                end,
                byte_start,
                byte_end,
                token_index,
            } => match (with_dot, without_dot) {
                (Some(w), Some(wo)) => self.dot_fork(
                    graph, w, wo, start, byte_start, end, byte_end, token_index, out,
                ),
                (Some(w), None) => {
                    // Only the abbreviation reading is viable; an ordinary
                    // word step, dot included.
                    self.word_step(graph, w, start, byte_start, end, byte_end, token_index, out);
                }
                (None, Some(wo)) => {
                    // Only the sentence-end reading is viable: consume the
                    // dotless word, then end the sentence.
                    self.word_step(
                        graph,
                        wo,
                        start,
                        byte_start,
                        end - 1,
                        byte_end - 1,
                        token_index,
                        out,
                    );
                    self.flush_all(out);
                }
                (None, None) => unreachable!("dot event without any word reading"),
            },
            LayerEvent::SentenceEnd | LayerEvent::StreamEnd => self.flush_all(out),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn word_step(
        &mut self,
        graph: &TermGraph,
        word: WordId,
        start_char: usize,
        start_byte: usize,
        end_char: usize,
        end_byte: usize,
        token_index: usize,
        out: &mut Vec<RawMatch>,
    ) {
        self.scratch.clear();
        for proc in self.procs.drain(..) {
            let targets = if proc.last_token + 1 == token_index {
                graph.step(proc.node, word)
            } else {
                &[]
            };
            if targets.is_empty() {
                proc.harvest(out);
                continue;
            }
            for &target in targets {
                self.scratch.push(advanced(
                    &proc, graph, target, end_char, end_byte, token_index,
                ));
            }
        }
        for &target in graph.step(0, word) {
            let spawned = Processor {
                node: 0,
                start_char,
                start_byte,
                last_token: token_index,
                best: None,
            };
            self.scratch
                .push(advanced(&spawned, graph, target, end_char, end_byte, token_index));
        }
        std::mem::swap(&mut self.procs, &mut self.scratch);
        self.peak = self.peak.max(self.procs.len());
        self.enforce_cap(out);
    }

    /// Both dot readings are viable: every processor splits into an
    /// abbreviation copy that consumes the dotted word and stays alive, and
    /// a sentence-end copy that consumes the dotless word (one character
    /// shorter) and is harvested. New processors spawn for both readings;
    /// the sentence-end spawn can only contribute a single-word match.
    #[allow(clippy::too_many_arguments)]
    fn dot_fork(
        &mut self,
        graph: &TermGraph,
        with_dot: WordId,
        without_dot: WordId,
        start_char: usize,
        start_byte: usize,
        end_char: usize,
        end_byte: usize,
        token_index: usize,
        out: &mut Vec<RawMatch>,
    ) {
        let entering = self.procs.len();
        self.scratch.clear();
        for proc in self.procs.drain(..) {
            let adjacent = proc.last_token + 1 == token_index;
            // Sentence-end copy: advance on the dotless word if possible,
            // then harvest unconditionally.
            let wo_targets = if adjacent {
                graph.step(proc.node, without_dot)
            } else {
                &[]
            };
            if wo_targets.is_empty() {
                proc.harvest(out);
            } else {
                for &target in wo_targets {
                    advanced(&proc, graph, target, end_char - 1, end_byte - 1, token_index)
                        .harvest(out);
                }
            }
            // Abbreviation copy: an ordinary step on the dotted word.
            let w_targets = if adjacent {
                graph.step(proc.node, with_dot)
            } else {
                &[]
            };
            if w_targets.is_empty() {
                proc.harvest(out);
            } else {
                for &target in w_targets {
                    self.scratch
                        .push(advanced(&proc, graph, target, end_char, end_byte, token_index));
                }
            }
        }
        let mut spawned_total = 0usize;
        for &target in graph.step(0, with_dot) {
            let spawned = Processor {
                node: 0,
                start_char,
                start_byte,
                last_token: token_index,
                best: None,
            };
            self.scratch
                .push(advanced(&spawned, graph, target, end_char, end_byte, token_index));
            spawned_total += 1;
        }
        for &target in graph.step(0, without_dot) {
            let spawned = Processor {
                node: 0,
                start_char,
                start_byte,
                last_token: token_index,
                best: None,
            };
            advanced(&spawned, graph, target, end_char - 1, end_byte - 1, token_index)
                .harvest(out);
            spawned_total += 1;
        }
        std::mem::swap(&mut self.procs, &mut self.scratch);
        // Transiently both copies of every entering processor exist.
        self.peak = self.peak.max(entering * 2 + spawned_total);
        self.enforce_cap(out);
    }

    fn flush_all(&mut self, out: &mut Vec<RawMatch>) {
        for proc in self.procs.drain(..) {
            proc.harvest(out);
        }
    }

    fn enforce_cap(&mut self, out: &mut Vec<RawMatch>) {
        if self.procs.len() <= self.cap {
            return;
        }
        let excess = self.procs.len() - self.cap;
        for proc in self.procs.drain(..excess) {
            proc.harvest(out);
            self.overflow += 1;
        }
    }

}

/// `proc` moved to `target`, extending its best match if the target accepts.
fn advanced(
    proc: &Processor,
    graph: &TermGraph,
    target: u32,
    end_char: usize,
    end_byte: usize,
    token_index: usize,
) -> Processor {
    let best = if graph.accepting(target).is_empty() {
        proc.best
    } else {
        Some(BestMatch {
            node: target,
            end_char,
            end_byte,
        })
    };
    Processor {
        node: target,
        start_char: proc.start_char,
        start_byte: proc.start_byte,
        last_token: token_index,
        best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(id: u32) -> WordId {
        WordId(id)
    }

    #[test]
    fn chain_is_shared_per_identical_prefix_bundles() {
        let mut g = TermGraph::default();
        assert!(g.add_term_path(&[vec![w(0), w(1)], vec![w(2)]], TermId(0)));
        assert!(g.add_term_path(&[vec![w(0), w(1)], vec![w(3)]], TermId(1)));
        // Shared first node plus one private node each.
        assert_eq!(g.node_count(), 3);
        assert!(g.add_term_path(&[vec![w(0), w(1)]], TermId(2)));
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn overlapping_but_different_sets_get_separate_targets() {
        let mut g = TermGraph::default();
        g.add_term_path(&[vec![w(0), w(1)]], TermId(0));
        g.add_term_path(&[vec![w(1), w(2)]], TermId(1));
        assert_eq!(g.node_count(), 2);
        // Word 1 sits in both bundles, so stepping on it forks.
        assert_eq!(g.step(0, w(1)).len(), 2);
        assert_eq!(g.step(0, w(0)).len(), 1);
        assert_eq!(g.sequence_count(TermId(0)), 2);
        assert_eq!(g.sequence_count(TermId(1)), 2);
    }

    #[test]
    fn re_adding_a_term_is_a_no_op() {
        let mut g = TermGraph::default();
        assert!(g.add_term_path(&[vec![w(0)], vec![w(1)]], TermId(0)));
        let snapshot = g.clone();
        assert!(!g.add_term_path(&[vec![w(0)], vec![w(1)]], TermId(0)));
        assert_eq!(g, snapshot);
    }

    #[test]
    fn remove_restores_the_graph() {
        let mut g = TermGraph::default();
        g.add_term_path(&[vec![w(0), w(1)], vec![w(2)]], TermId(0));
        let snapshot = g.clone();
        g.add_term_path(&[vec![w(0), w(1)], vec![w(3)]], TermId(1));
        assert!(g.remove_term_path(&[vec![w(0), w(1)], vec![w(3)]], TermId(1)));
        assert_eq!(g.node_count(), snapshot.node_count());
        assert_eq!(g.sequence_count(TermId(0)), 2);
        assert_eq!(g.sequence_count(TermId(1)), 0);
    }

    #[test]
    fn remove_of_unknown_term_is_rejected() {
        let mut g = TermGraph::default();
        g.add_term_path(&[vec![w(0)]], TermId(0));
        assert!(!g.remove_term_path(&[vec![w(0)]], TermId(1)));
        assert!(!g.remove_term_path(&[vec![w(5)]], TermId(0)));
    }

    #[test]
    fn sequence_count_multiplies_bundle_sizes() {
        let mut g = TermGraph::default();
        let sets = vec![
            (0..6).map(w).collect::<Vec<_>>(),
            (6..9).map(w).collect(),
            vec![w(9)],
            (10..26).map(w).collect(),
            (26..28).map(w).collect(),
        ];
        g.add_term_path(&sets, TermId(7));
        assert_eq!(g.sequence_count(TermId(7)), 6 * 3 * 16 * 2);
    }
}
