//! Text normalisation: cleaning, sentence segmentation and tokenisation.

use super::Sentence;

/// Lowercases `raw`, drops every character that is not alphabetic or
/// whitespace (emoji, punctuation, symbols, digits) and collapses runs of
/// whitespace into single spaces.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = true;
        } else if ch.is_alphabetic() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        }
    }
    out
}

fn is_terminal(ch: char) -> bool {
    matches!(ch, '.' | '!' | '?' | '…' | '。' | '！' | '？')
}

/// Splits raw text into sentence chunks. A chunk ends at a newline, or at a
/// run of sentence-final punctuation followed by whitespace or end of text.
/// Punctuation inside a word ("a.b") does not split.
pub fn split_raw_sentences(raw: &str) -> Vec<&str> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut iter = raw.char_indices().peekable();
    while let Some((i, ch)) = iter.next() {
        if ch == '\n' || ch == '\r' {
            chunks.push(&raw[start..i]);
            start = i + ch.len_utf8();
            continue;
        }
        if is_terminal(ch) {
            let mut end = i + ch.len_utf8();
            while let Some(&(j, next)) = iter.peek() {
                if is_terminal(next) {
                    end = j + next.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            let boundary = match iter.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if boundary {
                chunks.push(&raw[start..end]);
                start = end;
            }
        }
    }
    if start < raw.len() {
        chunks.push(&raw[start..]);
    }
    chunks
}

/// Segments raw text into cleaned, tokenised sentences. Sentences that are
/// empty after cleaning are dropped; indices are assigned after dropping.
pub fn segment_sentences(raw: &str) -> Vec<Sentence> {
    split_raw_sentences(raw)
        .into_iter()
        .map(|chunk| tokenize(&clean_text(chunk)))
        .filter(|tokens| !tokens.is_empty())
        .enumerate()
        .map(|(index, tokens)| Sentence { index, tokens })
        .collect()
}

/// Whitespace tokenisation. No subword splitting.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}
