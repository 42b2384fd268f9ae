//! Evaluation harness: recall itemized by edit distance, four precision
//! variants, and throughput, measured against silver-standard corpora.
//!
//! Correctness is anchored on spans: a system match counts toward an
//! annotation only when their character spans are identical, and entity
//! correctness is decided by comparing the annotation's link against the
//! entity's gazetteer labels. Precision comes in four variants along two
//! axes. The O variants restrict false positives to matches overlapping at
//! least one annotation, the A variants count every match. The starred
//! variants count one unit per match span with its whole candidate entity
//! set (any correct candidate makes the unit correct); the unstarred ones
//! count one unit per (span, candidate entity) pair, so shared labels with
//! many candidate entities weigh a span many times.

pub mod corpus;
pub mod levenshtein;

use std::time::Instant;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::lexicon::Gazetteer;
use crate::mlfst::Match;
use crate::Annotator;
pub use corpus::{
    load_corpus, parse_annotated, parse_concatenated, AnnotatedDocument, Annotation, CorpusError,
};
pub use levenshtein::levenshtein;

/// Recall bucket labels in report order.
pub const RECALL_BUCKETS: [&str; 6] = ["0", "1", "2", "3", "4", ">4"];

/// Maps an edit distance to its report bucket.
pub fn bucket_label(distance: usize) -> &'static str {
    RECALL_BUCKETS[distance.min(5)]
}

/// Entity id to normalized label set, the link-resolution side of the
/// evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelIndex {
    labels: IndexMap<String, IndexSet<String>>,
}

impl LabelIndex {
    pub fn from_gazetteer(gazetteer: &Gazetteer) -> Self {
        let mut labels: IndexMap<String, IndexSet<String>> = IndexMap::new();
        for entry in &gazetteer.entries {
            labels
                .entry(entry.entity.as_str().to_string())
                .or_default()
                .insert(entry.label.clone());
        }
        LabelIndex { labels }
    }

    /// True when the entity has `label` among its gazetteer labels.
    pub fn entity_has_label(&self, entity: &str, label: &str) -> bool {
        self.labels
            .get(entity)
            .is_some_and(|set| set.contains(label))
    }
}

/// Hits and totals for one recall bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BucketTally {
    pub hits: u64,
    pub total: u64,
}

/// Per-bucket recall tallies, mergeable across documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecallByLd {
    pub buckets: [BucketTally; 6],
}

impl RecallByLd {
    pub fn merge(&mut self, other: &RecallByLd) {
        for (mine, theirs) in self.buckets.iter_mut().zip(other.buckets.iter()) {
            mine.hits += theirs.hits;
            mine.total += theirs.total;
        }
    }
}

/// True positive and false positive counts for one precision variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub tp: u64,
    pub fp: u64,
}

impl Tally {
    fn add(&mut self, is_tp: bool) {
        if is_tp {
            self.tp += 1;
        } else {
            self.fp += 1;
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.tp += other.tp;
        self.fp += other.fp;
    }
}

/// The four precision variants, mergeable across documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrecisionTallies {
    pub p_o: Tally,
    pub p_a: Tally,
    pub p_o_star: Tally,
    pub p_a_star: Tally,
}

impl PrecisionTallies {
    pub fn merge(&mut self, other: &PrecisionTallies) {
        self.p_o.merge(&other.p_o);
        self.p_a.merge(&other.p_a);
        self.p_o_star.merge(&other.p_o_star);
        self.p_a_star.merge(&other.p_a_star);
    }
}

/// Buckets every annotation of a document by the edit distance between its
/// surface and its link, counting it as hit when some match covers exactly
/// the annotation's span and carries an entity whose labels include the
/// link.
pub fn recall_by_ld(
    matches: &[Match],
    doc: &AnnotatedDocument,
    labels: &LabelIndex,
) -> RecallByLd {
    let mut recall = RecallByLd::default();
    for annotation in &doc.annotations {
        let bucket = RECALL_BUCKETS
            .iter()
            .position(|&b| b == bucket_label(levenshtein(&annotation.surface, &annotation.link)))
            .expect("bucket_label returns a known bucket");
        let tally = &mut recall.buckets[bucket];
        tally.total += 1;
        let hit = matches
            .iter()
            .find(|m| m.start == annotation.start && m.end == annotation.end)
            .is_some_and(|m| {
                m.entity_ids
                    .iter()
                    .any(|e| labels.entity_has_label(e, &annotation.link))
            });
        if hit {
            tally.hits += 1;
        }
    }
    recall
}

/// Counts the four precision variants over one document's matches.
pub fn precision_suite(
    matches: &[Match],
    doc: &AnnotatedDocument,
    labels: &LabelIndex,
) -> PrecisionTallies {
    let mut precision = PrecisionTallies::default();
    for m in matches {
        let at_annotation = doc
            .annotations
            .iter()
            .find(|a| a.start == m.start && a.end == m.end);
        let overlaps = doc
            .annotations
            .iter()
            .any(|a| m.start < a.end && a.start < m.end);
        let span_correct = |entity: &str| {
            at_annotation.is_some_and(|a| labels.entity_has_label(entity, &a.link))
        };
        let star_tp = m.entity_ids.iter().any(|e| span_correct(e));
        precision.p_a_star.add(star_tp);
        if star_tp || overlaps {
            precision.p_o_star.add(star_tp);
        }
        for entity in &m.entity_ids {
            let tp = span_correct(entity);
            precision.p_a.add(tp);
            if tp || overlaps {
                precision.p_o.add(tp);
            }
        }
    }
    precision
}

/// Wall-clock annotate timing over a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputMeasurement {
    pub chars_per_ms: f64,
    pub wall_time_ms: f64,
    pub match_count: u64,
}

/// Annotates the whole corpus `runs` times single-threaded and reports the
/// fastest run, so scheduling noise only ever slows a measurement down.
/// Parse and build time are excluded by construction.
pub fn throughput(
    annotator: &dyn Annotator,
    docs: &[AnnotatedDocument],
    runs: usize,
) -> ThroughputMeasurement {
    let total_chars: u64 = docs.iter().map(|d| d.char_count() as u64).sum();
    let mut best_ms = f64::INFINITY;
    let mut match_count = 0u64;
    for _ in 0..runs.max(1) {
        let started = Instant::now();
        let mut count = 0u64;
        for doc in docs {
            count += annotator.annotate(&doc.plain_text).len() as u64;
        }
        let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
        best_ms = best_ms.min(elapsed_ms);
        match_count = count;
    }
    ThroughputMeasurement {
        chars_per_ms: total_chars as f64 / best_ms.max(f64::MIN_POSITIVE),
        wall_time_ms: best_ms,
        match_count,
    }
}

/// One recall bucket in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub hits: u64,
    pub total: u64,
    /// hits / total, null when the bucket is empty.
    pub rate: Option<f64>,
}

/// One precision variant in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCounts {
    pub tp: u64,
    pub fp: u64,
    /// tp / (tp + fp), null when no unit was counted.
    pub rate: Option<f64>,
}

impl From<Tally> for PrecisionCounts {
    fn from(t: Tally) -> Self {
        PrecisionCounts {
            tp: t.tp,
            fp: t.fp,
            rate: rate(t.tp, t.tp + t.fp),
        }
    }
}

/// The four precision variants under their conventional names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    #[serde(rename = "P_O")]
    pub p_o: PrecisionCounts,
    #[serde(rename = "P_A")]
    pub p_a: PrecisionCounts,
    #[serde(rename = "P_O_star")]
    pub p_o_star: PrecisionCounts,
    #[serde(rename = "P_A_star")]
    pub p_a_star: PrecisionCounts,
}

/// Full metric suite for one recognizer over one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Keyed by edit-distance bucket, "0" through "4" plus ">4".
    pub recall_by_ld: IndexMap<String, BucketCounts>,
    pub precision: PrecisionReport,
    pub throughput_chars_per_ms: f64,
    pub wall_time_ms: f64,
    pub match_count: u64,
}

fn rate(numerator: u64, denominator: u64) -> Option<f64> {
    if denominator == 0 {
        None
    } else {
        Some(numerator as f64 / denominator as f64)
    }
}

/// Assembles a report from accumulated tallies and a timing measurement.
pub fn build_report(
    recall: &RecallByLd,
    precision: &PrecisionTallies,
    timing: &ThroughputMeasurement,
) -> MetricsReport {
    let recall_by_ld = RECALL_BUCKETS
        .iter()
        .zip(recall.buckets.iter())
        .map(|(&label, tally)| {
            (
                label.to_string(),
                BucketCounts {
                    hits: tally.hits,
                    total: tally.total,
                    rate: rate(tally.hits, tally.total),
                },
            )
        })
        .collect();
    MetricsReport {
        recall_by_ld,
        precision: PrecisionReport {
            p_o: precision.p_o.into(),
            p_a: precision.p_a.into(),
            p_o_star: precision.p_o_star.into(),
            p_a_star: precision.p_a_star.into(),
        },
        throughput_chars_per_ms: timing.chars_per_ms,
        wall_time_ms: timing.wall_time_ms,
        match_count: timing.match_count,
    }
}

/// Default repeat count for throughput timing.
pub const DEFAULT_TIMING_RUNS: usize = 3;

/// Evaluates each named recognizer over the corpus: one metrics pass for
/// recall and precision, then timed runs for throughput.
pub fn compare(
    recognizers: &[(&str, &dyn Annotator)],
    docs: &[AnnotatedDocument],
    labels: &LabelIndex,
    timing_runs: usize,
) -> IndexMap<String, MetricsReport> {
    let mut reports = IndexMap::new();
    for &(name, annotator) in recognizers {
        let mut recall = RecallByLd::default();
        let mut precision = PrecisionTallies::default();
        for doc in docs {
            let matches = annotator.annotate(&doc.plain_text);
            recall.merge(&recall_by_ld(&matches, doc, labels));
            precision.merge(&precision_suite(&matches, doc, labels));
        }
        let timing = throughput(annotator, docs, timing_runs);
        reports.insert(name.to_string(), build_report(&recall, &precision, &timing));
    }
    reports
}
