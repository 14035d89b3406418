use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::emoji::emoji_cluster_len;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Number,
    Emoji,
    Punct,
    Other,
}

/// A token with its normalized form and its byte span in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

impl Token {
    /// Word, number or emoji: the tokens that are indexed and searched.
    pub fn is_content(&self) -> bool {
        matches!(self.kind, TokenKind::Word | TokenKind::Number | TokenKind::Emoji)
    }
}

// French particles that elide before a vowel: "j'ai", "qu'il", "jusqu'au".
const ELISIONS: [&str; 13] = ["c", "d", "j", "l", "m", "n", "s", "t", "qu", "jusqu", "lorsqu", "puisqu", "quoiqu"];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

fn is_combining(c: char) -> bool {
    matches!(c as u32, 0x0300..=0x036F)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining(c)
}

fn is_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"' | '(' | ')' | '[' | ']' | '{' | '}' | '-' | '/'
            | '«' | '»' | '…' | '‘' | '’' | '“' | '”' | '–' | '—' | '¿' | '¡' | '·' | '•' | '‹' | '›' | '„'
    )
}

/// Splits text into lowercased tokens.
///
/// Words keep inner hyphens ("maine-et-loire") and accents. Elided particles
/// keep their apostrophe and are split from the following word ("j'ai" gives
/// "j'" and "ai"); other inner apostrophes stay inside the word
/// ("aujourd'hui"). Decimal separators between digits stay inside numbers.
/// Each emoji cluster is one token; each punctuation mark is its own token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("pos is on a char boundary");
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if let Some(len) = emoji_cluster_len(rest) {
            tokens.push(Token { text: rest[..len].into(), start: pos, end: pos + len, kind: TokenKind::Emoji });
            pos += len;
            continue;
        }
        if c.is_alphanumeric() {
            let len = scan_word(rest);
            let surface = &rest[..len];
            let kind = if surface.chars().all(|ch| ch.is_numeric() || ch == '.' || ch == ',') {
                TokenKind::Number
            } else {
                TokenKind::Word
            };
            tokens.push(Token { text: normalize_surface(surface), start: pos, end: pos + len, kind });
            pos += len;
            continue;
        }
        let len = c.len_utf8();
        let kind = if is_punct(c) { TokenKind::Punct } else { TokenKind::Other };
        let text = if c == '’' { "'".into() } else { rest[..len].into() };
        tokens.push(Token { text, start: pos, end: pos + len, kind });
        pos += len;
    }
    tokens
}

fn normalize_surface(s: &str) -> String {
    s.chars().map(|c| if c == '’' { '\'' } else { c }).collect::<String>().to_lowercase()
}

// Byte length of the word or number starting at `s`.
fn scan_word(s: &str) -> usize {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    let mut numeric = true;
    while i < chars.len() {
        let c = chars[i].1;
        if is_word_char(c) {
            numeric &= c.is_numeric();
            i += 1;
            continue;
        }
        let next_is = |pred: fn(char) -> bool| chars.get(i + 1).is_some_and(|&(_, n)| pred(n));
        if c == '-' && next_is(char::is_alphanumeric) {
            numeric = false;
            i += 1;
            continue;
        }
        if (c == '.' || c == ',') && numeric && next_is(char::is_numeric) {
            i += 1;
            continue;
        }
        if is_apostrophe(c) && next_is(char::is_alphabetic) {
            let so_far = s[..chars[i].0].to_lowercase();
            if ELISIONS.contains(&so_far.as_str()) {
                // particle keeps the apostrophe, the word after is a new token
                return chars[i].0 + c.len_utf8();
            }
            numeric = false;
            i += 1;
            continue;
        }
        break;
    }
    chars.get(i).map_or(s.len(), |&(p, _)| p)
}
