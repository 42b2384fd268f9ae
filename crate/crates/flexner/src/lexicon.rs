//! Gazetteer loading: entity labels, label cleanup, tolerance policies.
//!
//! A gazetteer is a TSV stream of `id<TAB>label[<TAB>type]` rows. Labels are
//! cleaned up (trailing qualifier in parentheses removed, junk filtered) and
//! every surviving entry is assigned a [`TolerancePolicy`] that decides how
//! aggressively the recognizer expands it later. Entities and labels are
//! many-to-many: one id may appear with several labels and one label may map
//! to several ids.

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Opaque entity identifier taken verbatim from the gazetteer id column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Entity type label from the optional third gazetteer column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityType(pub String);

impl EntityType {
    pub const UNKNOWN: &'static str = "UNKNOWN";

    pub fn new(t: impl Into<String>) -> Self {
        EntityType(t.into())
    }

    /// Type used when the gazetteer row has no third column.
    pub fn unknown() -> Self {
        EntityType(Self::UNKNOWN.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How much surface variation the recognizer tolerates for an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TolerancePolicy {
    /// Full inflection expansion: lemma table forms, compound splitting,
    /// first-letter case variants, genitive fallback.
    High,
    /// Near-exact matching: only a genitive variant of the last word.
    Low,
    /// Exact all-uppercase matching for short acronym labels.
    Acronym,
}

impl TolerancePolicy {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "HIGH" => Some(TolerancePolicy::High),
            "LOW" => Some(TolerancePolicy::Low),
            "ACRONYM" => Some(TolerancePolicy::Acronym),
            _ => None,
        }
    }
}

impl fmt::Display for TolerancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TolerancePolicy::High => "HIGH",
            TolerancePolicy::Low => "LOW",
            TolerancePolicy::Acronym => "ACRONYM",
        };
        f.write_str(s)
    }
}

/// Maps entity types to tolerance policies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub per_type: IndexMap<EntityType, TolerancePolicy>,
    pub default: TolerancePolicy,
}

impl Default for PolicyConfig {
    /// Person-like types get the near-exact policy, everything else the
    /// tolerant one.
    fn default() -> Self {
        let mut per_type = IndexMap::new();
        for t in ["person", "city", "film"] {
            per_type.insert(EntityType::new(t), TolerancePolicy::Low);
        }
        PolicyConfig {
            per_type,
            default: TolerancePolicy::High,
        }
    }
}

#[derive(Debug, Error)]
pub enum PolicyConfigError {
    #[error("line {line}: expected `type = POLICY`, got {content:?}")]
    Syntax { line: usize, content: String },
    #[error("line {line}: unknown policy {value:?} (expected HIGH, LOW or ACRONYM)")]
    UnknownPolicy { line: usize, value: String },
}

impl PolicyConfig {
    /// Parses a key/value config file. One `type = POLICY` per line, the
    /// special key `default` sets the fallback policy. Blank lines and lines
    /// starting with `#` are ignored. A repeated key overrides the earlier
    /// value.
    pub fn parse(src: &str) -> Result<Self, PolicyConfigError> {
        let mut cfg = PolicyConfig {
            per_type: IndexMap::new(),
            default: TolerancePolicy::High,
        };
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let (key, value) = text.split_once('=').ok_or_else(|| PolicyConfigError::Syntax {
                line,
                content: raw.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let policy =
                TolerancePolicy::parse(value).ok_or_else(|| PolicyConfigError::UnknownPolicy {
                    line,
                    value: value.to_string(),
                })?;
            if key == "default" {
                cfg.default = policy;
            } else {
                cfg.per_type.insert(EntityType::new(key), policy);
            }
        }
        Ok(cfg)
    }
}

/// Policy for an entity type: the configured mapping if present, otherwise
/// the config's default.
pub fn policy_for_type(entity_type: &EntityType, config: &PolicyConfig) -> TolerancePolicy {
    config
        .per_type
        .get(entity_type)
        .copied()
        .unwrap_or(config.default)
}

/// One gazetteer row after cleanup and policy assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub entity: EntityId,
    pub label: String,
    pub entity_type: EntityType,
    pub policy: TolerancePolicy,
}

/// All surviving entries of a gazetteer plus the policy config they were
/// assigned under.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Gazetteer {
    pub entries: Vec<TermEntry>,
    pub policy_config: PolicyConfig,
}

impl Gazetteer {
    /// Normalized labels per entity, in entry order.
    pub fn labels_by_entity(&self) -> IndexMap<EntityId, IndexSet<String>> {
        let mut map: IndexMap<EntityId, IndexSet<String>> = IndexMap::new();
        for entry in &self.entries {
            map.entry(entry.entity.clone())
                .or_default()
                .insert(entry.label.clone());
        }
        map
    }
}

/// A skipped input line together with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub reason: String,
}

/// Result of [`load_gazetteer`]: the gazetteer plus load diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerLoad {
    pub gazetteer: Gazetteer,
    /// Structurally broken lines, skipped.
    pub malformed: Vec<LineIssue>,
    /// Rows whose label did not survive normalization.
    pub dropped: usize,
}

/// Cleans a raw gazetteer label.
///
/// Trailing parenthesized qualifiers preceded by a space are removed
/// (`"Berlin (Russland)"` becomes `"Berlin"`), surrounding whitespace is
/// trimmed, and labels that are empty, a single character, or made up
/// entirely of digits, punctuation and symbols are rejected. The function is
/// idempotent on its own output.
pub fn normalize_label(raw: &str) -> Option<String> {
    let mut label = raw.trim();
    while let Some(stripped) = strip_trailing_qualifier(label) {
        label = stripped.trim_end();
    }
    let mut chars = label.chars();
    match chars.next() {
        None => return None,
        Some(_) => {
            if chars.next().is_none() {
                return None;
            }
        }
    }
    if label.chars().all(is_number_punct_symbol) {
        return None;
    }
    Some(label.to_string())
}

/// If `label` ends with a balanced `(...)` group preceded by a space,
/// returns the part before the space.
fn strip_trailing_qualifier(label: &str) -> Option<&str> {
    if !label.ends_with(')') {
        return None;
    }
    let mut depth = 0usize;
    for (pos, c) in label.char_indices().rev() {
        match c {
            ')' => depth += 1,
            '(' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    let head = &label[..pos];
                    return if head.ends_with(' ') { Some(head) } else { None };
                }
            }
            _ => {}
        }
    }
    None
}

/// True for characters in the number, punctuation and symbol classes. Letters
/// and whitespace are excluded; anything that is neither alphanumeric nor
/// whitespace nor a control character counts as punctuation or symbol.
fn is_number_punct_symbol(c: char) -> bool {
    c.is_numeric() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// Does a normalized label look like an acronym: a single all-uppercase word
/// of 2 to 10 characters.
pub fn is_acronym_label(label: &str) -> bool {
    let len = label.chars().count();
    (2..=10).contains(&len)
        && !label.contains(char::is_whitespace)
        && label.chars().all(char::is_uppercase)
}

/// Loads a TSV gazetteer (`id<TAB>label[<TAB>type]` per line).
///
/// Malformed lines are skipped and reported with their 1-based line number.
/// Rows whose label does not survive [`normalize_label`] are counted in
/// `dropped`. Policies are assigned per entry: an explicit mapping for the
/// row's type wins, otherwise acronym-shaped labels get
/// [`TolerancePolicy::Acronym`], otherwise the config default applies.
pub fn load_gazetteer(src: &str, config: &PolicyConfig) -> GazetteerLoad {
    let mut entries = Vec::new();
    let mut malformed = Vec::new();
    let mut dropped = 0usize;
    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.split('\t');
        let id = parts.next().unwrap_or("").trim();
        let label_raw = match parts.next() {
            Some(l) => l,
            None => {
                malformed.push(LineIssue {
                    line,
                    reason: "missing tab separator".to_string(),
                });
                continue;
            }
        };
        let type_raw = parts.next().map(str::trim);
        if parts.next().is_some() {
            malformed.push(LineIssue {
                line,
                reason: "too many columns".to_string(),
            });
            continue;
        }
        if id.is_empty() {
            malformed.push(LineIssue {
                line,
                reason: "empty id column".to_string(),
            });
            continue;
        }
        let label = match normalize_label(label_raw) {
            Some(l) => l,
            None => {
                dropped += 1;
                continue;
            }
        };
        let entity_type = match type_raw {
            Some(t) if !t.is_empty() => EntityType::new(t),
            _ => EntityType::unknown(),
        };
        let policy = match config.per_type.get(&entity_type) {
            Some(p) => *p,
            None if is_acronym_label(&label) => TolerancePolicy::Acronym,
            None => config.default,
        };
        entries.push(TermEntry {
            entity: EntityId::new(id),
            label,
            entity_type,
            policy,
        });
    }
    GazetteerLoad {
        gazetteer: Gazetteer {
            entries,
            policy_config: config.clone(),
        },
        malformed,
        dropped,
    }
}
