//! Deterministic corpus generation for benchmarks and linearity checks.
//!
//! Output is German-flavored filler prose with optional planted phrases, so
//! a recognizer built from those phrases does real matching work while the
//! text remains fully reproducible from the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FILLER_WORDS: [&str; 40] = [
    "der", "die", "das", "und", "oder", "aber", "mit", "ohne", "gegen", "durch",
    "eine", "einer", "eines", "immer", "wieder", "heute", "morgen", "gestern",
    "hier", "dort", "Bericht", "Projekt", "Leben", "Wasser", "Geschichte",
    "Arbeit", "Stadt", "Land", "Woche", "Jahr", "Frage", "Antwort", "Weg",
    "Zeit", "Haus", "Licht", "Wort", "Bild", "Teil", "Ziel",
];

/// Probability denominators for structural events while generating.
const PLANT_EVERY: u32 = 12;
const SENTENCE_EVERY: u32 = 9;
const COMMA_EVERY: u32 = 11;
const PARAGRAPH_EVERY: u32 = 40;

/// Generates exactly `target_chars` characters of text, reproducible from
/// the seed. Phrases from `planted` are woven in between filler words;
/// an empty slice yields pure filler.
pub fn generate_text(seed: u64, target_chars: usize, planted: &[&str]) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Guess bytes at ~1.1 per char to keep reallocation rare.
    let mut out = String::with_capacity(target_chars + target_chars / 8);
    let mut chars = 0usize;
    while chars < target_chars {
        let word: &str = if !planted.is_empty() && rng.gen_ratio(1, PLANT_EVERY) {
            planted.choose(&mut rng).expect("planted is non-empty")
        } else {
            FILLER_WORDS.choose(&mut rng).expect("filler is non-empty")
        };
        out.push_str(word);
        chars += word.chars().count();
        if rng.gen_ratio(1, SENTENCE_EVERY) {
            out.push('.');
            chars += 1;
            if rng.gen_ratio(1, PARAGRAPH_EVERY) {
                out.push_str("\n\n");
                chars += 2;
                continue;
            }
        } else if rng.gen_ratio(1, COMMA_EVERY) {
            out.push(',');
            chars += 1;
        }
        out.push(' ');
        chars += 1;
    }
    if chars > target_chars {
        let byte_end = out
            .char_indices()
            .nth(target_chars)
            .map(|(b, _)| b)
            .unwrap_or(out.len());
        out.truncate(byte_end);
    }
    out
}
