//! Silver-standard corpus parsing.
//!
//! Documents are plain UTF-8 text with inline annotations written as
//! `[[term|link]]` or `[[term]]`. Parsing strips the markup, leaving the term
//! in the plain text, and records each annotation with character offsets into
//! that plain text. Corpora load from a single file, a directory of files, or
//! a concatenated stream whose documents are introduced by `\x01doc_id\n`
//! separator lines.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lexicon::normalize_label;

/// Separator introducing a document in concatenated corpus files.
pub const DOC_SEPARATOR: char = '\u{1}';

/// One silver-standard annotation. Offsets are character offsets into the
/// document's plain text, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub start: usize,
    pub end: usize,
    /// The term as it appears in the text.
    pub surface: String,
    /// The link target, normalized like a gazetteer label. Links that do
    /// not survive normalization keep their raw form.
    pub link: String,
    /// The link exactly as written, None for the `[[term]]` shortcut. Kept
    /// so the source document can be reconstructed byte for byte.
    pub raw_link: Option<String>,
}

/// A parsed document: markup-free text plus its annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub plain_text: String,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedDocument {
    /// Total characters of plain text.
    pub fn char_count(&self) -> usize {
        self.plain_text.chars().count()
    }

    /// Reconstructs the annotated source this document was parsed from.
    pub fn to_annotated_source(&self) -> String {
        let mut out = String::with_capacity(self.plain_text.len());
        let mut char_pos = 0usize;
        let mut chars = self.plain_text.chars();
        for annotation in &self.annotations {
            for _ in char_pos..annotation.start {
                out.push(chars.next().expect("annotation within text"));
            }
            out.push_str("[[");
            for _ in annotation.start..annotation.end {
                out.push(chars.next().expect("annotation within text"));
            }
            if let Some(raw) = &annotation.raw_link {
                out.push('|');
                out.push_str(raw);
            }
            out.push_str("]]");
            char_pos = annotation.end;
        }
        out.extend(chars);
        out
    }
}

/// Parse failures, located by character offset into the document source.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{doc_id}: unbalanced annotation brackets at char {offset}")]
    Unbalanced { doc_id: String, offset: usize },
    #[error("{doc_id}: nested annotation at char {offset}")]
    Nested { doc_id: String, offset: usize },
    #[error("{doc_id}: empty annotation term or link at char {offset}")]
    EmptySegment { doc_id: String, offset: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    /// The document the error was found in, where known.
    pub fn doc_id(&self) -> Option<&str> {
        match self {
            CorpusError::Unbalanced { doc_id, .. }
            | CorpusError::Nested { doc_id, .. }
            | CorpusError::EmptySegment { doc_id, .. } => Some(doc_id),
            CorpusError::Io(_) => None,
        }
    }
}

/// Parses one annotated document. The error offset is the character offset
/// of the offending `[[` or `]]` in the source.
pub fn parse_annotated(doc_id: &str, src: &str) -> Result<AnnotatedDocument, CorpusError> {
    let mut plain = String::with_capacity(src.len());
    let mut annotations = Vec::new();
    let mut plain_chars = 0usize;
    let mut src_chars = 0usize;
    let mut rest = src;
    loop {
        if let Some(stripped) = rest.strip_prefix("[[") {
            let Some(close) = stripped.find("]]") else {
                return Err(CorpusError::Unbalanced {
                    doc_id: doc_id.to_string(),
                    offset: src_chars,
                });
            };
            let body = &stripped[..close];
            if body.contains("[[") {
                return Err(CorpusError::Nested {
                    doc_id: doc_id.to_string(),
                    offset: src_chars,
                });
            }
            let (term, raw_link) = match body.split_once('|') {
                Some((term, link)) => (term, Some(link)),
                None => (body, None),
            };
            if term.is_empty() || raw_link.is_some_and(str::is_empty) {
                return Err(CorpusError::EmptySegment {
                    doc_id: doc_id.to_string(),
                    offset: src_chars,
                });
            }
            let raw = raw_link.unwrap_or(term);
            let link = normalize_label(raw).unwrap_or_else(|| raw.to_string());
            let term_chars = term.chars().count();
            annotations.push(Annotation {
                start: plain_chars,
                end: plain_chars + term_chars,
                surface: term.to_string(),
                link,
                raw_link: raw_link.map(str::to_string),
            });
            plain.push_str(term);
            plain_chars += term_chars;
            src_chars += 2 + body.chars().count() + 2;
            rest = &stripped[close + 2..];
        } else if rest.starts_with("]]") {
            return Err(CorpusError::Unbalanced {
                doc_id: doc_id.to_string(),
                offset: src_chars,
            });
        } else {
            let Some(c) = rest.chars().next() else { break };
            plain.push(c);
            plain_chars += 1;
            src_chars += 1;
            rest = &rest[c.len_utf8()..];
        }
    }
    Ok(AnnotatedDocument {
        doc_id: doc_id.to_string(),
        plain_text: plain,
        annotations,
    })
}

/// Splits a concatenated corpus into documents. Each document starts with a
/// `\x01doc_id\n` line; content before the first separator is rejected as
/// an unbalanced stream. An empty source yields no documents.
pub fn parse_concatenated(src: &str) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    if src.is_empty() {
        return Ok(Vec::new());
    }
    let Some(stripped) = src.strip_prefix(DOC_SEPARATOR) else {
        return Err(CorpusError::Unbalanced {
            doc_id: "<stream>".to_string(),
            offset: 0,
        });
    };
    let mut documents = Vec::new();
    for chunk in stripped.split(DOC_SEPARATOR) {
        let (doc_id, content) = chunk.split_once('\n').unwrap_or((chunk, ""));
        documents.push(parse_annotated(doc_id, content)?);
    }
    Ok(documents)
}

fn load_one_file(path: &Path) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    let src = fs::read_to_string(path)?;
    if src.starts_with(DOC_SEPARATOR) {
        return parse_concatenated(&src);
    }
    let doc_id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(vec![parse_annotated(&doc_id, &src)?])
}

/// Loads a corpus from a file (single document, or concatenated if it opens
/// with the separator) or from a directory (every file, sorted by name).
pub fn load_corpus(path: &Path) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    if !path.is_dir() {
        return load_one_file(path);
    }
    let mut files: Vec<_> = fs::read_dir(path)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut documents = Vec::new();
    for file in files {
        documents.extend(load_one_file(&file)?);
    }
    Ok(documents)
}
