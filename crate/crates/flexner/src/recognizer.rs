//! Hierarchical recognizer: one matching engine per tolerance policy plus an
//! exact acronym matcher, fed from a gazetteer, merged by a shared voter.
//!
//! Every gazetteer entry is expanded into per-word form sets according to its
//! policy and registered in exactly one sub-engine. A registry keeps the form
//! sets actually used per entity and label, so any registration can be
//! reversed later without recomputing morphology against a possibly changed
//! lemma table.

use indexmap::IndexMap;
use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::lexicon::{EntityId, TermEntry, TolerancePolicy};
use crate::mlfst::char_layer::{is_delimiter, tokenize};
use crate::mlfst::voter::vote_spans;
use crate::mlfst::EngineSource;
use crate::mlfst::{
    candidates_to_matches, read_versioned, write_versioned, AnnotateStats, EngineError, Match,
    MlfstEngine, DEFAULT_RAKE_CAP,
};
use crate::morphology::{genitive_variants, inflected_forms, FormProvenance, LemmaTable};

const RECOGNIZER_FORMAT: &str = "flexner-recognizer";
const RECOGNIZER_VERSION: u32 = 1;

/// Residual-tie priorities: the lower-tolerance engine is the more precise
/// one, so its spans win ties and its tag survives span merges.
const PRIORITY_HIGH: u8 = 0;
const PRIORITY_ACRONYM: u8 = 1;
const PRIORITY_LOW: u8 = 2;

pub const TAG_HIGH: &str = "mlfst-high";
pub const TAG_LOW: &str = "mlfst-low";
pub const TAG_ACRONYM: &str = "acronym";

/// Build-time knobs. Policy assignment itself happens at gazetteer load and
/// travels on each entry, and tag-prefix filtering happens at lemma table
/// load, so neither reappears here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognizerConfig {
    /// Ceiling on simultaneously live processors per engine, minimum 1.
    pub rake_cap: usize,
    /// Also register each high-tolerance form with its first letter's case
    /// swapped, so lowercase inflections of capitalized label words match.
    pub case_fold_first_letter: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            rake_cap: DEFAULT_RAKE_CAP,
            case_fold_first_letter: true,
        }
    }
}

/// One label's registration: which engine holds it and with which form sets,
/// enough to reverse the add exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LabelRegistration {
    label: String,
    policy: TolerancePolicy,
    form_sets: Vec<Vec<String>>,
}

/// Gazetteer matching across three engines: inflection-tolerant (HIGH),
/// genitive-only (LOW), and exact uppercase (ACRONYM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalRecognizer {
    high: MlfstEngine,
    low: MlfstEngine,
    acronym: MlfstEngine,
    table: LemmaTable,
    registry: IndexMap<EntityId, Vec<LabelRegistration>>,
    config: RecognizerConfig,
}

/// Mutation kinds accepted by [`HierarchicalRecognizer::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOp {
    Add,
    Remove,
}

impl HierarchicalRecognizer {
    /// Builds a recognizer over an immutable lemma table, registering every
    /// gazetteer entry under its policy's engine.
    pub fn build(
        gazetteer: &crate::lexicon::Gazetteer,
        table: LemmaTable,
        config: RecognizerConfig,
    ) -> Self {
        let rake_cap = config.rake_cap.max(1);
        let mut recognizer = HierarchicalRecognizer {
            high: MlfstEngine::with_rake_cap(TAG_HIGH, rake_cap),
            low: MlfstEngine::with_rake_cap(TAG_LOW, rake_cap),
            acronym: MlfstEngine::with_rake_cap(TAG_ACRONYM, rake_cap),
            table,
            registry: IndexMap::new(),
            config: RecognizerConfig { rake_cap, ..config },
        };
        for entry in &gazetteer.entries {
            recognizer.apply_add(entry);
        }
        recognizer
    }

    /// Expands a label into per-position form sets for a policy. Forms that
    /// contain a delimiter (such as apostrophe genitives) can never appear
    /// as a token and are dropped; the bare word always survives.
    fn expand_form_sets(&self, label: &str, policy: TolerancePolicy) -> Vec<Vec<String>> {
        let words: Vec<&str> = tokenize(label).into_iter().map(|t| t.surface).collect();
        let mut sets = Vec::with_capacity(words.len());
        for (position, word) in words.iter().enumerate() {
            let mut forms: IndexSet<String> = IndexSet::new();
            match policy {
                TolerancePolicy::High => {
                    let expanded = inflected_forms(word, &self.table);
                    let fallback = expanded.provenance == FormProvenance::Fallback;
                    forms.extend(expanded.forms);
                    if fallback && word.chars().next().is_some_and(char::is_uppercase) {
                        forms.extend(genitive_variants(word));
                    }
                    if self.config.case_fold_first_letter {
                        let swapped: Vec<String> =
                            forms.iter().filter_map(|f| swap_first_case(f)).collect();
                        forms.extend(swapped);
                    }
                }
                TolerancePolicy::Low => {
                    forms.insert(word.to_string());
                    if position + 1 == words.len() {
                        forms.extend(genitive_variants(word));
                    }
                }
                TolerancePolicy::Acronym => {
                    forms.insert(word.to_string());
                }
            }
            forms.retain(|f| !f.chars().any(is_delimiter));
            debug_assert!(!forms.is_empty(), "the bare word is always delimiter-free");
            sets.push(forms.into_iter().collect());
        }
        sets
    }

    fn engine_mut(&mut self, policy: TolerancePolicy) -> &mut MlfstEngine {
        match policy {
            TolerancePolicy::High => &mut self.high,
            TolerancePolicy::Low => &mut self.low,
            TolerancePolicy::Acronym => &mut self.acronym,
        }
    }

    /// The engine serving a policy, exposed for introspection.
    pub fn engine_for(&self, policy: TolerancePolicy) -> &MlfstEngine {
        match policy {
            TolerancePolicy::High => &self.high,
            TolerancePolicy::Low => &self.low,
            TolerancePolicy::Acronym => &self.acronym,
        }
    }

    fn apply_add(&mut self, entry: &TermEntry) {
        let form_sets = self.expand_form_sets(&entry.label, entry.policy);
        if form_sets.is_empty() {
            log::warn!(
                "label {:?} for {:?} has no tokens, skipping",
                entry.label,
                entry.entity
            );
            return;
        }
        // Re-adding an (entity, label) pair replaces the old registration,
        // so a policy or expansion change never leaves stale forms behind.
        self.remove_registration(&entry.entity, &entry.label);
        let entity = entry.entity.clone();
        match self.engine_mut(entry.policy).add_term(&form_sets, &entity) {
            Ok(_) => {
                self.registry.entry(entity).or_default().push(LabelRegistration {
                    label: entry.label.clone(),
                    policy: entry.policy,
                    form_sets,
                });
            }
            Err(err) => {
                log::error!("cannot register label {:?} for {:?}: {err}", entry.label, entry.entity);
            }
        }
    }

    /// Removes one (entity, label) registration if present. True if removed.
    fn remove_registration(&mut self, entity: &EntityId, label: &str) -> bool {
        let Some(registrations) = self.registry.get_mut(entity) else {
            return false;
        };
        let Some(position) = registrations.iter().position(|r| r.label == label) else {
            return false;
        };
        let registration = registrations.remove(position);
        let empty = registrations.is_empty();
        if empty {
            self.registry.shift_remove(entity);
        }
        let removed = self
            .engine_mut(registration.policy)
            .remove_term(&registration.form_sets, entity);
        debug_assert!(removed, "registry and engine must stay in sync");
        true
    }

    /// Applies a gazetteer mutation. Additions are visible to the next
    /// annotate call; removing an unregistered entry is a logged no-op.
    pub fn update(&mut self, op: UpdateOp, entry: &TermEntry) {
        match op {
            UpdateOp::Add => self.apply_add(entry),
            UpdateOp::Remove => {
                if !self.remove_registration(&entry.entity, &entry.label) {
                    log::warn!(
                        "remove of unregistered label {:?} for {:?}, ignoring",
                        entry.label,
                        entry.entity
                    );
                }
            }
        }
    }

    /// Annotates text with all three engines and merges their candidates:
    /// identical spans union entity ids, overlaps resolve longest-first then
    /// leftmost, residual ties prefer the lower-tolerance engine.
    pub fn annotate(&self, text: &str) -> Vec<Match> {
        self.annotate_with_stats(text).0
    }

    pub fn annotate_with_stats(&self, text: &str) -> (Vec<Match>, AnnotateStats) {
        let (mut raw, high_stats) = self.high.raw_spans_with_stats(text, 0);
        let (low_raw, low_stats) = self.low.raw_spans_with_stats(text, 1);
        let (acronym_raw, acronym_stats) = self.acronym.raw_spans_with_stats(text, 2);
        raw.extend(low_raw);
        raw.extend(acronym_raw);
        let high_source = EngineSource {
            engine: &self.high,
            priority: PRIORITY_HIGH,
        };
        let low_source = EngineSource {
            engine: &self.low,
            priority: PRIORITY_LOW,
        };
        let acronym_source = EngineSource {
            engine: &self.acronym,
            priority: PRIORITY_ACRONYM,
        };
        let resolved = vote_spans(raw, &[&high_source, &low_source, &acronym_source]);
        let stats = AnnotateStats {
            peak_processors: high_stats
                .peak_processors
                .max(low_stats.peak_processors)
                .max(acronym_stats.peak_processors),
            overflow_harvests: high_stats.overflow_harvests
                + low_stats.overflow_harvests
                + acronym_stats.overflow_harvests,
        };
        (candidates_to_matches(text, resolved), stats)
    }

    /// Entities with at least one live registration.
    pub fn entity_count(&self) -> usize {
        self.registry.len()
    }

    /// Character trie nodes summed over the three engines.
    pub fn char_node_count(&self) -> usize {
        self.high.char_node_count() + self.low.char_node_count() + self.acronym.char_node_count()
    }

    /// Word-layer graph nodes summed over the three engines.
    pub fn word_node_count(&self) -> usize {
        self.high.word_node_count() + self.low.word_node_count() + self.acronym.word_node_count()
    }

    pub fn lemma_table(&self) -> &LemmaTable {
        &self.table
    }

    /// Writes the full recognizer state as versioned JSON.
    pub fn dump<W: std::io::Write>(&self, writer: W) -> Result<(), EngineError> {
        write_versioned(writer, RECOGNIZER_FORMAT, RECOGNIZER_VERSION, self)
    }

    /// Restores a recognizer from a dump produced by [`Self::dump`].
    pub fn load<R: std::io::Read>(reader: R) -> Result<Self, EngineError> {
        read_versioned(reader, RECOGNIZER_FORMAT, RECOGNIZER_VERSION)
    }
}

impl crate::Annotator for HierarchicalRecognizer {
    fn annotate(&self, text: &str) -> Vec<Match> {
        HierarchicalRecognizer::annotate(self, text)
    }
}

/// The form with its first letter's case swapped, or None when the first
/// character has no case counterpart.
fn swap_first_case(form: &str) -> Option<String> {
    let first = form.chars().next()?;
    let rest = &form[first.len_utf8()..];
    let swapped: String = if first.is_lowercase() {
        first.to_uppercase().chain(rest.chars()).collect()
    } else if first.is_uppercase() {
        first.to_lowercase().chain(rest.chars()).collect()
    } else {
        return None;
    };
    if swapped == form {
        None
    } else {
        Some(swapped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{load_gazetteer, EntityType, Gazetteer, PolicyConfig};
    use crate::morphology::load_lemma_table;
    use proptest::prelude::*;

    /// Adjective and noun rows sized to the label expansion worked through
    /// in the module docs: deutsch 6 forms, Zentrum 3, künstlich 16,
    /// Intelligenz 2, and für absent on purpose.
    const SITE_TABLE: &str = "\
deutsch deutsch ADJ:NOM:SIN:MAS:GRU:SOL
deutsche deutsch ADJ:NOM:SIN:FEM:GRU:SOL
deutscher deutsch ADJ:GEN:PLU:GRU:SOL
deutsches deutsch ADJ:NOM:SIN:NEU:GRU:SOL
deutschen deutsch ADJ:AKK:SIN:MAS:GRU:SOL
deutschem deutsch ADJ:DAT:SIN:MAS:GRU:SOL
Zentrum Zentrum SUB:NOM:SIN:NEU
Zentrums Zentrum SUB:GEN:SIN:NEU
Zentren Zentrum SUB:NOM:PLU:NEU
k\u{fc}nstlich k\u{fc}nstlich ADJ:PRD:GRU
k\u{fc}nstliche k\u{fc}nstlich ADJ:AKK:PLU:FEM:GRU:SOL
k\u{fc}nstlicher k\u{fc}nstlich ADJ:GEN:PLU:GRU:SOL
k\u{fc}nstliches k\u{fc}nstlich ADJ:NOM:SIN:NEU:GRU:SOL
k\u{fc}nstlichen k\u{fc}nstlich ADJ:AKK:SIN:MAS:GRU:SOL
k\u{fc}nstlichem k\u{fc}nstlich ADJ:DAT:SIN:MAS:GRU:SOL
k\u{fc}nstlichere k\u{fc}nstlich ADJ:AKK:PLU:FEM:KOM:SOL
k\u{fc}nstlicherer k\u{fc}nstlich ADJ:GEN:PLU:KOM:SOL
k\u{fc}nstlicheres k\u{fc}nstlich ADJ:NOM:SIN:NEU:KOM:SOL
k\u{fc}nstlicheren k\u{fc}nstlich ADJ:AKK:SIN:MAS:KOM:SOL
k\u{fc}nstlicherem k\u{fc}nstlich ADJ:DAT:SIN:MAS:KOM:SOL
k\u{fc}nstlichste k\u{fc}nstlich ADJ:AKK:PLU:FEM:SUP:SOL
k\u{fc}nstlichster k\u{fc}nstlich ADJ:GEN:PLU:SUP:SOL
k\u{fc}nstlichstes k\u{fc}nstlich ADJ:NOM:SIN:NEU:SUP:SOL
k\u{fc}nstlichsten k\u{fc}nstlich ADJ:AKK:SIN:MAS:SUP:SOL
k\u{fc}nstlichstem k\u{fc}nstlich ADJ:DAT:SIN:MAS:SUP:SOL
Intelligenz Intelligenz SUB:NOM:SIN:FEM
Intelligenzen Intelligenz SUB:NOM:PLU:FEM
Wahrheitswert Wahrheitswert SUB:NOM:SIN:MAS
Wahrheitswerts Wahrheitswert SUB:GEN:SIN:MAS
Wahrheitswerte Wahrheitswert SUB:NOM:PLU:MAS
Wahrheitswerten Wahrheitswert SUB:DAT:PLU:MAS
";

    fn table(src: &str) -> LemmaTable {
        let load = load_lemma_table(src, crate::morphology::DEFAULT_TAG_PREFIXES);
        assert_eq!(load.malformed, 0);
        load.table
    }

    fn gazetteer(lines: &str) -> Gazetteer {
        let load = load_gazetteer(lines, &PolicyConfig::default());
        assert!(load.malformed.is_empty(), "{:?}", load.malformed);
        assert_eq!(load.dropped, 0);
        load.gazetteer
    }

    fn entry(entity: &str, label: &str, policy: TolerancePolicy) -> TermEntry {
        TermEntry {
            entity: EntityId::new(entity),
            label: label.to_string(),
            entity_type: EntityType::unknown(),
            policy,
        }
    }

    fn spans(matches: &[Match]) -> Vec<(usize, usize)> {
        matches.iter().map(|m| (m.start, m.end)).collect()
    }

    #[test]
    fn high_policy_site_label_accepts_the_full_cartesian_product() {
        let gaz = gazetteer("dfki\tDeutsches Forschungszentrum f\u{fc}r K\u{fc}nstliche Intelligenz\torganisation\n");
        let config = RecognizerConfig {
            case_fold_first_letter: false,
            ..RecognizerConfig::default()
        };
        let rec = HierarchicalRecognizer::build(&gaz, table(SITE_TABLE), config);
        assert_eq!(
            rec.engine_for(TolerancePolicy::High)
                .accepted_sequence_count(&EntityId::new("dfki")),
            576
        );
        let matched = rec.annotate("Das Deutsche Forschungszentren f\u{fc}rs K\u{fc}nstlichsten Intelligenzen tagte.");
        assert!(matched.is_empty(), "f\u{fc}r must stay uninflected: {matched:?}");
        let matches =
            rec.annotate("im Deutschen Forschungszentrum f\u{fc}r K\u{fc}nstliche Intelligenzen");
        assert_eq!(spans(&matches), vec![(3, 59)]);
        assert_eq!(matches[0].entity_ids, vec!["dfki"]);
        assert_eq!(matches[0].recognizer, TAG_HIGH);
    }

    #[test]
    fn high_policy_matches_inflected_occurrences_in_running_text() {
        let gaz = gazetteer("q1\tWahrheitswert\tconcept\n");
        let rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let text = "Jede Aussage erh\u{e4}lt einen Wahrheitswert. Die Wahrheitswerte \
                    zusammengesetzter Aussagen folgen aus den Wahrheitswerten ihrer Teile.";
        let matches = rec.annotate(text);
        assert_eq!(matches.len(), 3);
        let surfaces: Vec<&str> = matches.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(
            surfaces,
            vec!["Wahrheitswert", "Wahrheitswerte", "Wahrheitswerten"]
        );
        for m in &matches {
            assert_eq!(m.entity_ids, vec!["q1"]);
        }
    }

    #[test]
    fn case_folding_matches_lowercase_adjective_inflections() {
        let gaz = gazetteer("ki\tK\u{fc}nstliche Intelligenz\tconcept\n");
        let folded = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let unfolded = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig {
                case_fold_first_letter: false,
                ..RecognizerConfig::default()
            },
        );
        let text = "mit k\u{fc}nstlicher Intelligenz";
        assert_eq!(spans(&folded.annotate(text)), vec![(4, 27)]);
        assert!(unfolded.annotate(text).is_empty());
    }

    #[test]
    fn low_policy_allows_exactly_the_genitive() {
        let gaz = gazetteer("p1\tM\u{fc}ller\tperson\n");
        let rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        assert_eq!(spans(&rec.annotate("Herr M\u{fc}ller kam.")), vec![(5, 11)]);
        let matches = rec.annotate("M\u{fc}llers Hund bellt.");
        assert_eq!(spans(&matches), vec![(0, 7)]);
        assert_eq!(matches[0].recognizer, TAG_LOW);
        assert!(rec.annotate("M\u{fc}llern wurde geholfen.").is_empty());
        assert!(rec.annotate("Die M\u{fc}llerin mahlt.").is_empty());
    }

    #[test]
    fn acronym_policy_is_case_sensitive() {
        let gaz = gazetteer("dfki\tDFKI\torganisation\n");
        let rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let matches = rec.annotate("Das DFKI forscht.");
        assert_eq!(spans(&matches), vec![(4, 8)]);
        assert_eq!(matches[0].recognizer, TAG_ACRONYM);
        assert!(rec.annotate("das dfki").is_empty());
        assert!(rec.annotate("Dfki").is_empty());
    }

    #[test]
    fn identical_spans_union_entities_across_engines() {
        // "M\u{fc}llers" is simultaneously the genitive of the LOW person and a
        // table form of the HIGH lemma, so both engines report the same span.
        let with_mueller = concat!(
            "M\u{fc}llers M\u{fc}llerscheibe SUB:NOM:PLU:FEM\n",
            "M\u{fc}llerscheibe M\u{fc}llerscheibe SUB:NOM:SIN:FEM\n"
        );
        let gaz = gazetteer("p1\tM\u{fc}ller\tperson\nd1\tM\u{fc}llerscheibe\tconcept\n");
        let rec = HierarchicalRecognizer::build(
            &gaz,
            table(with_mueller),
            RecognizerConfig::default(),
        );
        let matches = rec.annotate("M\u{fc}llers");
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].entity_ids, vec!["d1", "p1"]);
        assert_eq!(matches[0].recognizer, TAG_LOW);
    }

    #[test]
    fn update_add_then_remove_round_trips() {
        let gaz = gazetteer("p1\tM\u{fc}ller\tperson\n");
        let fresh = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let mut rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let added = entry("ki", "K\u{fc}nstliche Intelligenz", TolerancePolicy::High);
        rec.update(UpdateOp::Add, &added);
        assert_eq!(rec.annotate("k\u{fc}nstlicher Intelligenz").len(), 1);
        assert_eq!(rec.entity_count(), 2);
        rec.update(UpdateOp::Remove, &added);
        // Freed trie slots keep the structures from being memcmp-identical,
        // so equivalence is checked on counts and behavior.
        assert_eq!(rec.entity_count(), fresh.entity_count());
        assert_eq!(rec.char_node_count(), fresh.char_node_count());
        assert_eq!(rec.word_node_count(), fresh.word_node_count());
        assert!(rec.annotate("k\u{fc}nstlicher Intelligenz").is_empty());
        let probe = "M\u{fc}llers k\u{fc}nstliche Intelligenz";
        assert_eq!(rec.annotate(probe), fresh.annotate(probe));
    }

    #[test]
    fn remove_of_unknown_entry_is_a_noop() {
        let gaz = gazetteer("p1\tM\u{fc}ller\tperson\n");
        let mut rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let before = rec.clone();
        rec.update(UpdateOp::Remove, &entry("p2", "Schmidt", TolerancePolicy::Low));
        rec.update(UpdateOp::Remove, &entry("p1", "Schmidt", TolerancePolicy::Low));
        assert_eq!(rec, before);
    }

    #[test]
    fn re_adding_a_label_replaces_the_old_registration() {
        let gaz = gazetteer("p1\tM\u{fc}ller\tperson\n");
        let mut rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        // Same label re-added under HIGH: the LOW registration must vanish.
        rec.update(UpdateOp::Add, &entry("p1", "M\u{fc}ller", TolerancePolicy::High));
        assert_eq!(rec.entity_count(), 1);
        assert_eq!(rec.engine_for(TolerancePolicy::Low).term_count(), 0);
        assert_eq!(rec.engine_for(TolerancePolicy::High).term_count(), 1);
        let matches = rec.annotate("M\u{fc}llers Hund");
        assert_eq!(matches[0].recognizer, TAG_HIGH);
    }

    #[test]
    fn multi_label_entity_keeps_other_labels_on_remove() {
        let gaz = gazetteer("e1\tDFKI\torganisation\ne1\tDeutsches Forschungszentrum f\u{fc}r K\u{fc}nstliche Intelligenz\torganisation\n");
        let mut rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        rec.update(UpdateOp::Remove, &entry("e1", "DFKI", TolerancePolicy::Acronym));
        assert_eq!(rec.entity_count(), 1);
        assert!(rec.annotate("DFKI").is_empty());
        assert_eq!(
            rec.annotate("Deutsches Forschungszentrum f\u{fc}r K\u{fc}nstliche Intelligenz")
                .len(),
            1
        );
    }

    #[test]
    fn dump_and_load_round_trip() {
        let gaz = gazetteer(
            "p1\tM\u{fc}ller\tperson\ndfki\tDFKI\torganisation\nki\tK\u{fc}nstliche Intelligenz\tconcept\n",
        );
        let rec = HierarchicalRecognizer::build(
            &gaz,
            table(SITE_TABLE),
            RecognizerConfig::default(),
        );
        let mut buffer = Vec::new();
        rec.dump(&mut buffer).unwrap();
        let restored = HierarchicalRecognizer::load(buffer.as_slice()).unwrap();
        assert_eq!(restored, rec);
        let text = "M\u{fc}llers Vortrag am DFKI: k\u{fc}nstliche Intelligenzen.";
        assert_eq!(restored.annotate(text), rec.annotate(text));
    }

    #[test]
    fn swap_first_case_examples() {
        assert_eq!(swap_first_case("K\u{fc}nstliche"), Some("k\u{fc}nstliche".to_string()));
        assert_eq!(swap_first_case("haus"), Some("Haus".to_string()));
        assert_eq!(swap_first_case("\u{e4}rmel"), Some("\u{c4}rmel".to_string()));
        assert_eq!(swap_first_case("3M"), None);
        assert_eq!(swap_first_case(""), None);
    }

    proptest! {
        /// Every surface the LOW engine accepts for a name is accepted by
        /// the HIGH engine too, whether the name is table-covered (with its
        /// genitive listed) or completely unknown.
        #[test]
        fn low_matches_are_a_subset_of_high_matches(
            name in "[A-Z][a-z]{2,8}",
            covered in proptest::bool::ANY,
        ) {
            let src = format!("{name} {name} SUB:NOM:SIN:MAS\n{name}s {name} SUB:GEN:SIN:MAS\n");
            let lemmas = if covered { table(&src) } else { LemmaTable::default() };
            let config = RecognizerConfig::default();
            let mut low = HierarchicalRecognizer::build(
                &Gazetteer::default(), lemmas.clone(), config.clone(),
            );
            low.update(UpdateOp::Add, &entry("e1", &name, TolerancePolicy::Low));
            let mut high = HierarchicalRecognizer::build(
                &Gazetteer::default(), lemmas, config,
            );
            high.update(UpdateOp::Add, &entry("e1", &name, TolerancePolicy::High));
            for surface in [name.clone(), format!("{name}s"), format!("{name}x")] {
                let text = format!("heute kam {surface} vorbei");
                let low_spans = spans(&low.annotate(&text));
                let high_spans = spans(&high.annotate(&text));
                prop_assert!(
                    low_spans.iter().all(|s| high_spans.contains(s)),
                    "LOW found {low_spans:?} but HIGH only {high_spans:?} for {surface:?}"
                );
            }
        }
    }
}
