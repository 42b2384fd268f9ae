//! Overlap resolution shared by all recognizers: longest match wins,
//! leftmost on equal length, identical spans merge their entity sets.

use std::collections::{BTreeMap, BTreeSet};

/// A surviving span after overlap resolution. Offsets are character
/// offsets; byte offsets ride along for slicing the surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Candidate {
    pub start: usize,
    pub end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub entities: BTreeSet<String>,
    /// Higher wins residual ties and decides the surviving tag on merges.
    pub priority: u8,
    pub tag: String,
}

/// A span emitted during scanning. Entity ids are not materialized yet:
/// `payload` names an entity set inside the emitting source, so spans that
/// lose the vote never allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct RawSpan {
    pub start: usize,
    pub end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub source: u8,
    pub payload: u32,
}

/// One recognizer feeding spans into a joint vote. `source` in [`RawSpan`]
/// indexes the slice of sources passed to [`vote_spans`].
pub(crate) trait EntitySource {
    fn tag(&self) -> &str;
    fn priority(&self) -> u8;
    /// Writes the entity ids behind `payload` into `out`.
    fn fill(&self, payload: u32, out: &mut BTreeSet<String>);
}

/// Reduces raw spans to a non-overlapping set: identical spans are merged
/// (entity union, highest-priority tag kept), then longer spans beat
/// shorter ones, leftmost wins among equal lengths, and higher priority
/// breaks whatever remains. The result is sorted by start offset. Only
/// surviving spans get their entity sets materialized.
pub(crate) fn vote_spans(mut raw: Vec<RawSpan>, sources: &[&dyn EntitySource]) -> Vec<Candidate> {
    raw.sort_unstable();
    raw.dedup();
    struct Group {
        start: usize,
        end: usize,
        byte_start: usize,
        byte_end: usize,
        members: std::ops::Range<usize>,
        priority: u8,
        tag_source: u8,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut lo = 0;
    while lo < raw.len() {
        let mut hi = lo + 1;
        while hi < raw.len() && (raw[hi].start, raw[hi].end) == (raw[lo].start, raw[lo].end) {
            hi += 1;
        }
        let mut priority = sources[raw[lo].source as usize].priority();
        let mut tag_source = raw[lo].source;
        for span in &raw[lo + 1..hi] {
            let p = sources[span.source as usize].priority();
            if p > priority {
                priority = p;
                tag_source = span.source;
            }
        }
        groups.push(Group {
            start: raw[lo].start,
            end: raw[lo].end,
            byte_start: raw[lo].byte_start,
            byte_end: raw[lo].byte_end,
            members: lo..hi,
            priority,
            tag_source,
        });
        lo = hi;
    }
    groups.sort_unstable_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
            .then(b.priority.cmp(&a.priority))
    });
    let mut accepted: Vec<Group> = Vec::new();
    let mut occupied: BTreeMap<usize, usize> = BTreeMap::new();
    for group in groups {
        // Accepted spans are pairwise disjoint, so the only one that can
        // overlap [start, end) is the one with the greatest start below end.
        let overlaps = occupied
            .range(..group.end)
            .next_back()
            .is_some_and(|(_, &end)| end > group.start);
        if !overlaps {
            occupied.insert(group.start, group.end);
            accepted.push(group);
        }
    }
    accepted.sort_unstable_by_key(|g| g.start);
    accepted
        .into_iter()
        .map(|group| {
            let mut entities = BTreeSet::new();
            for span in &raw[group.members] {
                sources[span.source as usize].fill(span.payload, &mut entities);
            }
            Candidate {
                start: group.start,
                end: group.end,
                byte_start: group.byte_start,
                byte_end: group.byte_end,
                entities,
                priority: group.priority,
                tag: sources[group.tag_source as usize].tag().to_string(),
            }
        })
        .collect()
}
