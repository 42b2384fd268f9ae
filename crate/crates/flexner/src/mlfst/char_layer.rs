//! Character layer: a refcounted trie over word surfaces and the scanner
//! that turns raw text into word-level events.
//!
//! The trie assigns every registered surface a dense [`WordId`]. Reference
//! counts track how many term registrations use each node and word, so
//! removing a term prunes exactly the storage it added.
//!
//! [`CharTrie::scan`] walks a text character by character. Tokens are maximal
//! runs between delimiter characters; a token whose full extent is a
//! registered word emits [`LayerEvent::Word`]. A token with a trailing dot is
//! ambiguous between an abbreviation and a word followed by a sentence end,
//! so it emits [`LayerEvent::DotAmbiguous`] carrying both readings. Unknown
//! tokens emit nothing, but every token (known or not) advances the token
//! counter carried on events, which is how downstream processors notice that
//! something unmatchable sat between two known words.

use super::EngineError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Dense identifier of a registered word surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordId(pub u32);

/// Characters that separate tokens. The period and the hyphen are
/// deliberately absent: they are part of abbreviations, ordinals and
/// hyphenated names.
pub fn is_delimiter(c: char) -> bool {
    c.is_whitespace()
        || matches!(
            c,
            ',' | ';'
                | ':'
                | '!'
                | '?'
                | '('
                | ')'
                | '['
                | ']'
                | '{'
                | '}'
                | '"'
                | '\''
                | '«'
                | '»'
                | '/'
                | '\\'
        )
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct CharNode {
    children: HashMap<char, u32>,
    accepting: Option<WordId>,
    /// Number of term registrations whose path passes through this node.
    refcount: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WordSlot {
    surface: String,
    /// Number of term registrations using this word.
    refcount: u32,
}

/// Trie over word surfaces. Node 0 is the root and is never pruned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharTrie {
    nodes: Vec<CharNode>,
    free_nodes: Vec<u32>,
    words: Vec<Option<WordSlot>>,
    free_words: Vec<u32>,
    word_ids: HashMap<String, WordId>,
}

impl Default for CharTrie {
    fn default() -> Self {
        CharTrie {
            nodes: vec![CharNode::default()],
            free_nodes: Vec::new(),
            words: Vec::new(),
            free_words: Vec::new(),
            word_ids: HashMap::new(),
        }
    }
}

impl CharTrie {
    /// Registers a surface, creating trie nodes as needed, and bumps the
    /// reference counts along its path. Registering the same surface again
    /// returns the same id with an increased count.
    pub fn register_word(&mut self, surface: &str) -> Result<WordId, EngineError> {
        if surface.is_empty() || surface.chars().any(is_delimiter) {
            return Err(EngineError::InvalidWord(surface.to_string()));
        }
        let mut node = 0u32;
        for c in surface.chars() {
            let next = match self.nodes[node as usize].children.get(&c) {
                Some(&n) => n,
                None => {
                    let n = self.alloc_node();
                    self.nodes[node as usize].children.insert(c, n);
                    n
                }
            };
            self.nodes[next as usize].refcount += 1;
            node = next;
        }
        let id = match self.word_ids.get(surface) {
            Some(&id) => {
                self.words[id.0 as usize]
                    .as_mut()
                    .expect("registered word has a live slot")
                    .refcount += 1;
                id
            }
            None => {
                let id = match self.free_words.pop() {
                    Some(slot) => WordId(slot),
                    None => {
                        self.words.push(None);
                        WordId((self.words.len() - 1) as u32)
                    }
                };
                self.words[id.0 as usize] = Some(WordSlot {
                    surface: surface.to_string(),
                    refcount: 1,
                });
                self.word_ids.insert(surface.to_string(), id);
                self.nodes[node as usize].accepting = Some(id);
                id
            }
        };
        Ok(id)
    }

    /// Drops one registration of a surface, pruning nodes and the word slot
    /// when their counts reach zero.
    pub(crate) fn unregister_word(&mut self, surface: &str) {
        let Some(&id) = self.word_ids.get(surface) else {
            log::warn!("unregister of unknown word {surface:?} ignored");
            return;
        };
        // Path from the root, as (parent, edge char, node) triples.
        let mut path = Vec::with_capacity(surface.chars().count());
        let mut node = 0u32;
        for c in surface.chars() {
            let next = self.nodes[node as usize].children[&c];
            path.push((node, c, next));
            node = next;
        }
        for &(_, _, n) in &path {
            self.nodes[n as usize].refcount -= 1;
        }
        let slot = self.words[id.0 as usize]
            .as_mut()
            .expect("registered word has a live slot");
        slot.refcount -= 1;
        if slot.refcount == 0 {
            self.nodes[node as usize].accepting = None;
            self.word_ids.remove(surface);
            self.words[id.0 as usize] = None;
            self.free_words.push(id.0);
        }
        for &(parent, c, n) in path.iter().rev() {
            if self.nodes[n as usize].refcount == 0 {
                debug_assert!(self.nodes[n as usize].children.is_empty());
                debug_assert!(self.nodes[n as usize].accepting.is_none());
                self.nodes[parent as usize].children.remove(&c);
                self.nodes[n as usize] = CharNode::default();
                self.free_nodes.push(n);
            }
        }
    }

    fn alloc_node(&mut self) -> u32 {
        match self.free_nodes.pop() {
            Some(n) => n,
            None => {
                self.nodes.push(CharNode::default());
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Id of an exactly matching registered surface.
    pub fn lookup(&self, surface: &str) -> Option<WordId> {
        let mut node = 0u32;
        for c in surface.chars() {
            node = *self.nodes[node as usize].children.get(&c)?;
        }
        self.nodes[node as usize].accepting
    }

    pub fn word_surface(&self, id: WordId) -> Option<&str> {
        self.words
            .get(id.0 as usize)
            .and_then(|slot| slot.as_ref())
            .map(|slot| slot.surface.as_str())
    }

    /// Live trie nodes, root excluded.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1 - self.free_nodes.len()
    }

    pub fn word_count(&self) -> usize {
        self.word_ids.len()
    }

    #[cfg(test)]
    pub(crate) fn word_refcount(&self, surface: &str) -> Option<u32> {
        let id = self.word_ids.get(surface)?;
        self.words[id.0 as usize].as_ref().map(|s| s.refcount)
    }

    /// Streams layer events for `text`. Offsets on events are character
    /// offsets; byte offsets ride along for slicing.
    pub fn scan<'a>(&'a self, text: &'a str) -> Scanner<'a> {
        Scanner {
            trie: self,
            chars: text.char_indices(),
            text_bytes: text.len(),
            char_pos: 0,
            token: None,
            token_counter: 0,
            newlines_in_gap: 0,
            sentence_emitted_in_gap: false,
            pending: std::collections::VecDeque::new(),
            finished: false,
        }
    }
}

/// Event emitted by the character layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerEvent {
    /// A full token matched a registered word.
    Word {
        word: WordId,
        start: usize,
        end: usize,
        byte_start: usize,
        byte_end: usize,
        token_index: usize,
    },
    /// A token with a trailing dot; either an abbreviation word (dot
    /// included) or an ordinary word followed by a sentence end. `end` and
    /// `byte_end` include the dot; the dotless reading ends one character
    /// earlier. At least one of the two word fields is present.
    DotAmbiguous {
        with_dot: Option<WordId>,
        without_dot: Option<WordId>,
        start: usize,
        end: usize,
        byte_start: usize,
        byte_end: usize,
        token_index: usize,
    },
    /// Sentence boundary: `!`, `?` or a blank line.
    SentenceEnd,
    /// End of input.
    StreamEnd,
}

/// Per-token state while scanning.
struct TokenState {
    start_char: usize,
    start_byte: usize,
    /// Trie cursor after all consumed token characters; `None` once dead.
    cursor: Option<u32>,
    /// Trie cursor before the last consumed character, for the dotless
    /// reading of a trailing-dot token.
    prev_cursor: Option<u32>,
    last_char: char,
    len: usize,
}

pub struct Scanner<'a> {
    trie: &'a CharTrie,
    chars: std::str::CharIndices<'a>,
    text_bytes: usize,
    char_pos: usize,
    token: Option<TokenState>,
    token_counter: usize,
    newlines_in_gap: usize,
    sentence_emitted_in_gap: bool,
    pending: std::collections::VecDeque<LayerEvent>,
    finished: bool,
}

impl<'a> Scanner<'a> {
    fn accepting(&self, cursor: Option<u32>) -> Option<WordId> {
        cursor.and_then(|n| self.trie.nodes[n as usize].accepting)
    }

    fn flush_token(&mut self, end_char: usize, end_byte: usize) {
        let Some(tok) = self.token.take() else {
            return;
        };
        let token_index = self.token_counter;
        self.token_counter += 1;
        if tok.last_char == '.' {
            let with_dot = self.accepting(tok.cursor);
            let without_dot = if tok.len >= 2 {
                self.accepting(tok.prev_cursor)
            } else {
                None
            };
            if with_dot.is_some() || without_dot.is_some() {
                self.pending.push_back(LayerEvent::DotAmbiguous {
                    with_dot,
                    without_dot,
                    start: tok.start_char,
                    end: end_char,
                    byte_start: tok.start_byte,
                    byte_end: end_byte,
                    token_index,
                });
            }
        } else if let Some(word) = self.accepting(tok.cursor) {
            self.pending.push_back(LayerEvent::Word {
                word,
                start: tok.start_char,
                end: end_char,
                byte_start: tok.start_byte,
                byte_end: end_byte,
                token_index,
            });
        }
        self.newlines_in_gap = 0;
        self.sentence_emitted_in_gap = false;
    }
}

impl<'a> Iterator for Scanner<'a> {
    type Item = LayerEvent;

    fn next(&mut self) -> Option<LayerEvent> {
        loop {
            if let Some(ev) = self.pending.pop_front() {
                return Some(ev);
            }
            if self.finished {
                return None;
            }
            match self.chars.next() {
                None => {
                    let end_char = self.char_pos;
                    self.flush_token(end_char, self.text_bytes);
                    self.pending.push_back(LayerEvent::StreamEnd);
                    self.finished = true;
                }
                Some((byte_pos, c)) => {
                    let char_pos = self.char_pos;
                    self.char_pos += 1;
                    if is_delimiter(c) {
                        self.flush_token(char_pos, byte_pos);
                        if matches!(c, '!' | '?') {
                            self.pending.push_back(LayerEvent::SentenceEnd);
                        } else if c == '\n' {
                            self.newlines_in_gap += 1;
                            if self.newlines_in_gap >= 2 && !self.sentence_emitted_in_gap {
                                self.pending.push_back(LayerEvent::SentenceEnd);
                                self.sentence_emitted_in_gap = true;
                            }
                        }
                    } else {
                        let tok = self.token.get_or_insert(TokenState {
                            start_char: char_pos,
                            start_byte: byte_pos,
                            cursor: Some(0),
                            prev_cursor: None,
                            last_char: c,
                            len: 0,
                        });
                        tok.prev_cursor = tok.cursor;
                        tok.cursor = tok.cursor.and_then(|n| {
                            self.trie.nodes[n as usize].children.get(&c).copied()
                        });
                        tok.last_char = c;
                        tok.len += 1;
                    }
                }
            }
        }
    }
}

/// A token of `text`: a maximal run of non-delimiter characters, with
/// character and byte spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub surface: &'a str,
    pub char_start: usize,
    pub char_end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
}

/// Splits `text` into tokens using the engine's delimiter set.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut char_pos = 0usize;
    for (byte_pos, c) in text.char_indices() {
        if is_delimiter(c) {
            if let Some((cs, bs)) = start.take() {
                tokens.push(Token {
                    surface: &text[bs..byte_pos],
                    char_start: cs,
                    char_end: char_pos,
                    byte_start: bs,
                    byte_end: byte_pos,
                });
            }
        } else if start.is_none() {
            start = Some((char_pos, byte_pos));
        }
        char_pos += 1;
    }
    if let Some((cs, bs)) = start {
        tokens.push(Token {
            surface: &text[bs..],
            char_start: cs,
            char_end: char_pos,
            byte_start: bs,
            byte_end: text.len(),
        });
    }
    tokens
}
