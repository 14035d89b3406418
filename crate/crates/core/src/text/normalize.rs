use alloc::string::String;

use unicode_normalization::UnicodeNormalization;

use super::emoji::emoji_cluster_len;

/// Cleans a raw comment without correcting it.
///
/// Control characters are dropped, the text is put in NFC, every emoji
/// cluster becomes its own space-separated token and whitespace runs collapse
/// to single spaces. Spelling and casing are left alone. Idempotent.
pub fn normalize_comment(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if c.is_control() {
                None
            } else {
                Some(c)
            }
        })
        .collect();
    let composed: String = cleaned.nfc().collect();

    let mut spaced = String::with_capacity(composed.len() + 8);
    let mut rest = composed.as_str();
    while let Some(c) = rest.chars().next() {
        if let Some(len) = emoji_cluster_len(rest) {
            spaced.push(' ');
            spaced.push_str(&rest[..len]);
            spaced.push(' ');
            rest = &rest[len..];
        } else {
            spaced.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }

    let mut out = String::with_capacity(spaced.len());
    for word in spaced.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
