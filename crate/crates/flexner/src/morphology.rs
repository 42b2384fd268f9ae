//! German morphology: full-form lemma table, compound splitting, genitive
//! and stemming heuristics.
//!
//! The lemma table is a text file with one `inflected lemma TAGS` row per
//! line, whitespace separated, tags colon-joined (`künstliche künstlich
//! ADJ:AKK:PLU:FEM:GRU:SOL`). Only adjective and noun rows are indexed by
//! default; other word classes inflate the table without helping gazetteer
//! labels.
//!
//! [`inflected_forms`] is the single entry point used during term expansion.
//! It tries the table first, then compound splitting against noun lemmas,
//! and falls back to the word itself.

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

/// Tag prefixes accepted when loading a lemma table: adjectives and nouns.
pub const DEFAULT_TAG_PREFIXES: &[&str] = &["ADJ", "SUB"];

/// Tag prefix marking noun rows; only noun lemmas participate in compound
/// splitting.
const NOUN_TAG_PREFIX: &str = "SUB";

/// Word forms grouped by lemma, with the extra indexes needed for lookup and
/// compound splitting. Immutable after load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaTable {
    /// Lemma to its inflected forms, in table order.
    by_lemma: IndexMap<String, IndexSet<String>>,
    /// Inflected form to the lemmas it belongs to.
    by_inflected: IndexMap<String, IndexSet<String>>,
    /// Lemmas that have at least one noun row.
    noun_lemmas: IndexSet<String>,
    /// Lowercased noun forms and lemmas to their lemmas, for suffix lookup.
    noun_suffix_index: IndexMap<String, IndexSet<String>>,
}

/// Result of [`load_lemma_table`].
#[derive(Debug, Clone)]
pub struct LemmaTableLoad {
    pub table: LemmaTable,
    /// Rows that did not have the three-field shape, skipped.
    pub malformed: usize,
}

impl LemmaTable {
    /// Inflected forms of `lemma` as listed in the table, if any.
    pub fn forms_of_lemma(&self, lemma: &str) -> Option<&IndexSet<String>> {
        self.by_lemma.get(lemma)
    }

    /// Lemmas the inflected form belongs to, if any.
    pub fn lemmas_of_form(&self, form: &str) -> Option<&IndexSet<String>> {
        self.by_inflected.get(form)
    }

    pub fn is_noun_lemma(&self, lemma: &str) -> bool {
        self.noun_lemmas.contains(lemma)
    }

    pub fn lemma_count(&self) -> usize {
        self.by_lemma.len()
    }

    fn noun_lemmas_for_suffix(&self, suffix_lower: &str) -> Option<&IndexSet<String>> {
        self.noun_suffix_index.get(suffix_lower)
    }
}

/// Parses a full-form lemma table, keeping only rows whose first tag atom
/// starts with one of `accepted_tag_prefixes`. Rows without exactly three
/// whitespace-separated fields are counted as malformed and skipped.
pub fn load_lemma_table(src: &str, accepted_tag_prefixes: &[&str]) -> LemmaTableLoad {
    let mut table = LemmaTable::default();
    let mut malformed = 0usize;
    for raw in src.lines() {
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split_whitespace();
        let (inflected, lemma, tags) = match (fields.next(), fields.next(), fields.next()) {
            (Some(i), Some(l), Some(t)) if fields.next().is_none() => (i, l, t),
            _ => {
                malformed += 1;
                continue;
            }
        };
        let first_atom = tags.split(':').next().unwrap_or("");
        if !accepted_tag_prefixes.iter().any(|p| first_atom.starts_with(p)) {
            continue;
        }
        table
            .by_lemma
            .entry(lemma.to_string())
            .or_default()
            .insert(inflected.to_string());
        table
            .by_inflected
            .entry(inflected.to_string())
            .or_default()
            .insert(lemma.to_string());
        if first_atom.starts_with(NOUN_TAG_PREFIX) {
            table.noun_lemmas.insert(lemma.to_string());
            for key in [lowercase(inflected), lowercase(lemma)] {
                table
                    .noun_suffix_index
                    .entry(key)
                    .or_default()
                    .insert(lemma.to_string());
            }
        }
    }
    LemmaTableLoad { table, malformed }
}

/// Where the forms of a word came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormProvenance {
    /// The word was found in the lemma table.
    Table,
    /// The word was split as a compound and inflected via its last part.
    Decompounded,
    /// The word is unknown; it stands for itself.
    Fallback,
}

/// A word together with its accepted surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordForms {
    pub base: String,
    /// Deduplicated, base word first.
    pub forms: IndexSet<String>,
    pub provenance: FormProvenance,
}

/// All surface forms a word may take in text.
///
/// Table lookups are case-insensitive on the first letter only and the
/// returned forms adopt the query word's initial casing, so a label-cased
/// `Künstliche` finds the lowercase adjective paradigm and yields
/// `Künstlichem`, `Künstlichen`, and so on. The base word is always part of
/// the result.
pub fn inflected_forms(word: &str, table: &LemmaTable) -> WordForms {
    let mut lemmas: IndexSet<&str> = IndexSet::new();
    for key in first_letter_case_keys(word) {
        if table.by_lemma.contains_key(key.as_str()) {
            lemmas.insert(table.by_lemma.get_key_value(key.as_str()).unwrap().0);
        }
        if let Some(ls) = table.lemmas_of_form(&key) {
            lemmas.extend(ls.iter().map(String::as_str));
        }
    }
    if !lemmas.is_empty() {
        let mut forms = IndexSet::new();
        forms.insert(word.to_string());
        let want_upper = first_char_is_uppercase(word);
        for lemma in lemmas {
            if let Some(fs) = table.forms_of_lemma(lemma) {
                for f in fs {
                    forms.insert(recase_first(f, want_upper));
                }
            }
        }
        return WordForms {
            base: word.to_string(),
            forms,
            provenance: FormProvenance::Table,
        };
    }
    if let Some(split) = decompound(word, table) {
        return WordForms {
            base: word.to_string(),
            forms: compound_variants(word, &split, table),
            provenance: FormProvenance::Decompounded,
        };
    }
    let mut forms = IndexSet::new();
    forms.insert(word.to_string());
    WordForms {
        base: word.to_string(),
        forms,
        provenance: FormProvenance::Fallback,
    }
}

/// A compound split: `prefix` + a suffix that inflects like `suffix_lemma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompoundSplit {
    pub prefix: String,
    pub suffix_lemma: String,
    /// Character length of the matched suffix.
    pub match_len: usize,
}

/// Splits a compound at the longest suffix that equals a noun form or noun
/// lemma in the table (case-insensitive). The suffix must be at least 4
/// characters and the remaining prefix at least 3.
pub fn decompound(word: &str, table: &LemmaTable) -> Option<CompoundSplit> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 7 {
        return None;
    }
    for i in 3..=(n - 4) {
        let suffix_lower = lowercase_chars(&chars[i..]);
        if let Some(lemmas) = table.noun_lemmas_for_suffix(&suffix_lower) {
            let suffix_lemma = lemmas.first().expect("suffix index entries are non-empty");
            return Some(CompoundSplit {
                prefix: chars[..i].iter().collect(),
                suffix_lemma: suffix_lemma.clone(),
                match_len: n - i,
            });
        }
    }
    None
}

/// Inflected variants of a compound: the prefix concatenated with every form
/// of the suffix lemma. The form's first letter mirrors the casing the suffix
/// has inside `word`, so `Forschungszentrum` yields `Forschungszentren` while
/// the hyphenated `Stadt-Zentrum` keeps `Stadt-Zentren`. The original word is
/// always included.
pub fn compound_variants(word: &str, split: &CompoundSplit, table: &LemmaTable) -> IndexSet<String> {
    let mut variants = IndexSet::new();
    variants.insert(word.to_string());
    let suffix_upper = first_char_is_uppercase(&word[split.prefix.len()..]);
    if let Some(forms) = table.forms_of_lemma(&split.suffix_lemma) {
        for f in forms {
            let mut v = split.prefix.clone();
            v.push_str(&recase_first(f, suffix_upper));
            variants.insert(v);
        }
    }
    variants
}

/// The word plus its genitive: `word + "s"`, or `word + "'"` when the word
/// already ends in an s-like sound (s, ß, x, z).
pub fn genitive_variants(word: &str) -> IndexSet<String> {
    let mut variants = IndexSet::new();
    variants.insert(word.to_string());
    if let Some(last) = word.chars().last() {
        let lc = last.to_lowercase().next().unwrap_or(last);
        let genitive = if matches!(lc, 's' | 'ß' | 'x' | 'z') {
            format!("{word}'")
        } else {
            format!("{word}s")
        };
        variants.insert(genitive);
    }
    variants
}

const STEM_ENDINGS: &[&str] = &["ern", "em", "er", "en", "es", "e", "s", "n"];

/// Deterministic baseline stemmer: lowercase, fold umlauts and ß, then
/// repeatedly strip the longest matching ending while at least 4 characters
/// remain. Idempotent.
pub fn stem(word: &str) -> String {
    let mut s = String::with_capacity(word.len());
    for c in word.chars().flat_map(char::to_lowercase) {
        match c {
            'ä' => s.push('a'),
            'ö' => s.push('o'),
            'ü' => s.push('u'),
            'ß' => s.push_str("ss"),
            other => s.push(other),
        }
    }
    let mut len = s.chars().count();
    loop {
        let stripped = STEM_ENDINGS.iter().find_map(|e| {
            let elen = e.chars().count();
            if len >= 4 + elen && s.ends_with(e) {
                Some(elen)
            } else {
                None
            }
        });
        match stripped {
            Some(elen) => {
                s.truncate(s.len() - elen);
                len -= elen;
            }
            None => break,
        }
    }
    s
}

/// The word as given plus, when the first letter is cased, the variant with
/// the first letter's case swapped.
fn first_letter_case_keys(word: &str) -> Vec<String> {
    let mut keys = vec![word.to_string()];
    let mut chars = word.chars();
    if let Some(first) = chars.next() {
        let swapped = if first.is_uppercase() {
            single_char(first.to_lowercase())
        } else if first.is_lowercase() {
            single_char(first.to_uppercase())
        } else {
            None
        };
        if let Some(sw) = swapped {
            if sw != first {
                let mut k = String::new();
                k.push(sw);
                k.push_str(chars.as_str());
                keys.push(k);
            }
        }
    }
    keys
}

fn first_char_is_uppercase(s: &str) -> bool {
    s.chars().next().map(char::is_uppercase).unwrap_or(false)
}

/// `form` with its first letter upper- or lowercased. Characters without a
/// single-character case mapping are left alone.
fn recase_first(form: &str, uppercase: bool) -> String {
    let mut chars = form.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => {
            let mapped = if uppercase {
                single_char(first.to_uppercase())
            } else {
                single_char(first.to_lowercase())
            };
            let mut out = String::with_capacity(form.len());
            out.push(mapped.unwrap_or(first));
            out.push_str(chars.as_str());
            out
        }
    }
}

fn single_char(mut it: impl Iterator<Item = char>) -> Option<char> {
    let first = it.next()?;
    if it.next().is_none() {
        Some(first)
    } else {
        None
    }
}

fn lowercase(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

fn lowercase_chars(chars: &[char]) -> String {
    chars.iter().flat_map(|c| c.to_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Full adjective paradigm of `künstlich`: 18 distinct surface forms.
    const KUENSTLICH_TABLE: &str = "\
künstlich       künstlich   ADJ:PRD:GRU
künstliche      künstlich   ADJ:AKK:PLU:FEM:GRU:SOL
künstlichem     künstlich   ADJ:DAT:SIN:MAS:GRU:SOL
künstlichen     künstlich   ADJ:AKK:SIN:MAS:GRU:SOL
künstlicher     künstlich   ADJ:NOM:SIN:MAS:GRU:SOL
künstliches     künstlich   ADJ:NOM:SIN:NEU:GRU:SOL
künstlichere    künstlich   ADJ:NOM:SIN:FEM:KOM:SOL
künstlicherem   künstlich   ADJ:DAT:SIN:MAS:KOM:SOL
künstlicheren   künstlich   ADJ:AKK:SIN:MAS:KOM:SOL
künstlicherer   künstlich   ADJ:NOM:SIN:MAS:KOM:SOL
künstlicheres   künstlich   ADJ:NOM:SIN:NEU:KOM:SOL
künstlichst     künstlich   ADJ:PRD:SUP
künstlichste    künstlich   ADJ:NOM:SIN:FEM:SUP:SOL
künstlichstem   künstlich   ADJ:DAT:SIN:MAS:SUP:SOL
künstlichsten   künstlich   ADJ:AKK:SIN:MAS:SUP:SOL
künstlichster   künstlich   ADJ:NOM:SIN:MAS:SUP:SOL
künstlichstes   künstlich   ADJ:NOM:SIN:NEU:SUP:SOL
künstlichstens  künstlich   ADJ:ADV:SUP
";

    const ZENTRUM_TABLE: &str = "\
Zentrum    Zentrum   SUB:NOM:SIN:NEU
Zentrums   Zentrum   SUB:GEN:SIN:NEU
Zentren    Zentrum   SUB:NOM:PLU:NEU
";

    fn table(src: &str) -> LemmaTable {
        load_lemma_table(src, DEFAULT_TAG_PREFIXES).table
    }

    #[test]
    fn load_indexes_both_directions() {
        let t = table(ZENTRUM_TABLE);
        assert_eq!(t.forms_of_lemma("Zentrum").unwrap().len(), 3);
        assert!(t.lemmas_of_form("Zentren").unwrap().contains("Zentrum"));
        assert!(t.is_noun_lemma("Zentrum"));
    }

    #[test]
    fn load_rejects_unaccepted_word_classes() {
        let src = "ging  gehen  VER:3:SIN:PRT\nZentrum  Zentrum  SUB:NOM:SIN:NEU\n";
        let loaded = load_lemma_table(src, DEFAULT_TAG_PREFIXES);
        assert_eq!(loaded.malformed, 0);
        assert_eq!(loaded.table.lemma_count(), 1);
        assert!(loaded.table.forms_of_lemma("gehen").is_none());
    }

    #[test]
    fn load_counts_malformed_rows() {
        let src = "onlytwo  fields\nZentrum  Zentrum  SUB:NOM:SIN:NEU\none two three four\n";
        let loaded = load_lemma_table(src, DEFAULT_TAG_PREFIXES);
        assert_eq!(loaded.malformed, 2);
        assert_eq!(loaded.table.lemma_count(), 1);
    }

    #[test]
    fn custom_tag_prefixes_change_acceptance() {
        let src = "ging  gehen  VER:3:SIN:PRT\n";
        let loaded = load_lemma_table(src, &["VER"]);
        assert!(loaded.table.forms_of_lemma("gehen").is_some());
    }

    #[test]
    fn full_paradigm_lookup() {
        let t = table(KUENSTLICH_TABLE);
        let wf = inflected_forms("künstlich", &t);
        assert_eq!(wf.provenance, FormProvenance::Table);
        assert_eq!(wf.forms.len(), 18);
        assert!(wf.forms.contains("künstliche"));
        assert!(wf.forms.contains("künstlichem"));
    }

    #[test]
    fn lookup_recases_to_query_casing() {
        let t = table(KUENSTLICH_TABLE);
        let wf = inflected_forms("Künstliche", &t);
        assert_eq!(wf.provenance, FormProvenance::Table);
        assert_eq!(wf.forms.len(), 18);
        assert!(wf.forms.contains("Künstliche"));
        assert!(wf.forms.contains("Künstlichem"));
        assert!(!wf.forms.contains("künstliche"));
    }

    #[test]
    fn lookup_via_inflected_form() {
        let t = table(ZENTRUM_TABLE);
        let wf = inflected_forms("Zentren", &t);
        assert_eq!(wf.provenance, FormProvenance::Table);
        assert_eq!(
            wf.forms,
            ["Zentren", "Zentrum", "Zentrums"]
                .into_iter()
                .map(String::from)
                .collect::<IndexSet<_>>()
        );
    }

    #[test]
    fn unknown_word_is_fallback() {
        let t = table(ZENTRUM_TABLE);
        let wf = inflected_forms("für", &t);
        assert_eq!(wf.provenance, FormProvenance::Fallback);
        assert_eq!(wf.forms.len(), 1);
        assert!(wf.forms.contains("für"));
    }

    #[test]
    fn compound_word_is_decompounded() {
        let t = table(ZENTRUM_TABLE);
        let wf = inflected_forms("Forschungszentrum", &t);
        assert_eq!(wf.provenance, FormProvenance::Decompounded);
        assert!(wf.forms.contains("Forschungszentrum"));
        assert!(wf.forms.contains("Forschungszentrums"));
        assert!(wf.forms.contains("Forschungszentren"));
        assert_eq!(wf.forms.len(), 3);
    }

    #[test]
    fn decompound_splits_at_the_suffix() {
        let t = table(ZENTRUM_TABLE);
        let split = decompound("Forschungszentrum", &t).unwrap();
        assert_eq!(split.prefix, "Forschungs");
        assert_eq!(split.suffix_lemma, "Zentrum");
        assert_eq!(split.match_len, 7);
    }

    #[test]
    fn decompound_handles_inflected_suffixes() {
        let t = table(ZENTRUM_TABLE);
        let split = decompound("Forschungszentren", &t).unwrap();
        assert_eq!(split.prefix, "Forschungs");
        assert_eq!(split.suffix_lemma, "Zentrum");
        let variants = compound_variants("Forschungszentren", &split, &t);
        assert_eq!(variants.len(), 3);
        assert!(variants.contains("Forschungszentren"));
        assert!(variants.contains("Forschungszentrum"));
    }

    #[test]
    fn decompound_prefers_the_longest_suffix() {
        let src = "\
Zentrum            Zentrum            SUB:NOM:SIN:NEU
Forschungszentrum  Forschungszentrum  SUB:NOM:SIN:NEU
";
        let t = table(src);
        let split = decompound("Großforschungszentrum", &t).unwrap();
        assert_eq!(split.suffix_lemma, "Forschungszentrum");
        assert_eq!(split.prefix, "Groß");
    }

    #[test]
    fn decompound_respects_length_floors() {
        let t = table(ZENTRUM_TABLE);
        // Prefix would be 2 characters.
        assert_eq!(decompound("Amzentrum", &t), None);
        // The word itself is in the table, not a compound of it.
        assert_eq!(decompound("Zentrum", &t), None);
        // Suffix shorter than 4 characters never matches.
        let short = table("Uhr  Uhr  SUB:NOM:SIN:FEM\n");
        assert_eq!(decompound("Sonnenuhr", &short), None);
    }

    #[test]
    fn hyphenated_compounds_keep_suffix_casing() {
        let t = table(ZENTRUM_TABLE);
        let split = decompound("Stadt-Zentrum", &t).unwrap();
        assert_eq!(split.prefix, "Stadt-");
        let variants = compound_variants("Stadt-Zentrum", &split, &t);
        let expected: IndexSet<String> = ["Stadt-Zentrum", "Stadt-Zentrums", "Stadt-Zentren"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(variants, expected);
    }

    #[test]
    fn genitive_examples() {
        let g = |w: &str| {
            genitive_variants(w)
                .into_iter()
                .collect::<Vec<_>>()
        };
        assert_eq!(g("Müller"), vec!["Müller", "Müllers"]);
        assert_eq!(g("Marx"), vec!["Marx", "Marx'"]);
        assert_eq!(g("Anna"), vec!["Anna", "Annas"]);
        assert_eq!(g("Strauß"), vec!["Strauß", "Strauß'"]);
        assert_eq!(g("Paris"), vec!["Paris", "Paris'"]);
    }

    #[test]
    fn stem_frozen_values() {
        assert_eq!(stem("Häuser"), "haus");
        assert_eq!(stem("künstlichen"), "kunstlich");
        assert_eq!(stem("Haus"), "haus");
        assert_eq!(stem("Wahrheitswerten"), "wahrheitswert");
        assert_eq!(stem("Straße"), "stra");
        assert_eq!(stem("Häusern"), "haus");
        assert_eq!(stem("gut"), "gut");
        assert_eq!(stem("Ohr"), "ohr");
    }

    proptest! {
        #[test]
        fn stem_is_idempotent(word in "[A-Za-zÄÖÜäöüß]{0,16}") {
            let once = stem(&word);
            prop_assert_eq!(stem(&once), once.clone());
        }

        #[test]
        fn stem_output_is_folded(word in "[A-Za-zÄÖÜäöüß]{0,16}") {
            let s = stem(&word);
            prop_assert!(!s.contains(['ä', 'ö', 'ü', 'ß']));
            prop_assert_eq!(s.to_lowercase(), s.clone());
        }

        #[test]
        fn genitive_always_contains_base_and_one_variant(word in "[A-Za-zäöüß]{1,12}") {
            let vs = genitive_variants(&word);
            prop_assert_eq!(vs.len(), 2);
            prop_assert!(vs.contains(word.as_str()));
        }

        #[test]
        fn inflected_forms_contain_the_base(word in "[A-Za-zÄÖÜäöüß]{1,14}") {
            let t = table(ZENTRUM_TABLE);
            let wf = inflected_forms(&word, &t);
            prop_assert!(wf.forms.contains(word.as_str()));
        }
    }

    /// Brute-force split enumeration used to pin down the longest-suffix rule.
    fn oracle_decompound(word: &str, t: &LemmaTable) -> Option<(String, usize)> {
        let chars: Vec<char> = word.chars().collect();
        let mut best: Option<(String, usize)> = None;
        for i in 3..chars.len() {
            let suffix_len = chars.len() - i;
            if suffix_len < 4 {
                break;
            }
            let suffix: String = chars[i..].iter().flat_map(|c| c.to_lowercase()).collect();
            if let Some(lemmas) = t.noun_suffix_index.get(&suffix) {
                let better = match &best {
                    Some((_, len)) => suffix_len > *len,
                    None => true,
                };
                if better {
                    best = Some((lemmas.first().unwrap().clone(), suffix_len));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn decompound_matches_brute_force(
            prefix in "[A-Za-z]{0,6}",
            suffix in prop::sample::select(vec!["zentrum", "zentren", "haus", "uhr", "xyz", ""]),
            extra in "[a-z]{0,3}",
        ) {
            let src = "\
Zentrum  Zentrum  SUB:NOM:SIN:NEU
Zentren  Zentrum  SUB:NOM:PLU:NEU
Haus     Haus     SUB:NOM:SIN:NEU
";
            let t = table(src);
            let word = format!("{prefix}{suffix}{extra}");
            let got = decompound(&word, &t);
            let want = oracle_decompound(&word, &t);
            match (got, want) {
                (None, None) => {}
                (Some(split), Some((lemma, len))) => {
                    prop_assert_eq!(split.suffix_lemma, lemma);
                    prop_assert_eq!(split.match_len, len);
                    prop_assert_eq!(split.prefix.chars().count() + len, word.chars().count());
                }
                (got, want) => prop_assert!(false, "mismatch: got {:?}, want {:?}", got, want),
            }
        }
    }
}
