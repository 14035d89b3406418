use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{is_terminator, Abbreviations};

/// Half-open byte range of one sentence inside its parent text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

impl SentenceSpan {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '»' | '”' | '’' | ')' | ']')
}

/// Splits text into sentences.
///
/// A sentence ends after a run of `.`, `!`, `?` or `…` (plus closing quotes or
/// brackets) that is followed by whitespace or the end of the text, unless the
/// run is a single `.` closing a listed abbreviation. Spans are trimmed of
/// surrounding whitespace and cover every non-whitespace character.
pub fn segment_sentences(text: &str, abbreviations: &Abbreviations) -> Vec<SentenceSpan> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;

    while i < n {
        let (pos, c) = chars[i];
        let Some(sentence_start) = start else {
            if !c.is_whitespace() {
                start = Some(pos);
            } else {
                i += 1;
            }
            continue;
        };
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < n && is_terminator(chars[j].1) {
            j += 1;
        }
        let single_period = j == i + 1 && c == '.';
        while j < n && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
        let at_boundary = j == n || chars[j].1.is_whitespace();
        let abbreviated = single_period && end == pos + 1 && {
            let word_start = text[sentence_start..pos]
                .char_indices()
                .rev()
                .find(|(_, ch)| ch.is_whitespace())
                .map_or(sentence_start, |(k, ch)| sentence_start + k + ch.len_utf8());
            abbreviations.contains(&text[word_start..=pos])
        };
        if at_boundary && !abbreviated {
            spans.push(SentenceSpan { start: sentence_start, end });
            start = None;
        }
        i = j;
    }

    if let Some(s) = start {
        let end = text.trim_end().len();
        spans.push(SentenceSpan { start: s, end });
    }
    spans
}

/// Checks that `spans` are ordered, non-overlapping, inside `text`, and that
/// everything outside them is whitespace, i.e. the spans plus the skipped
/// characters rebuild `text` exactly.
pub fn reconstructs(text: &str, spans: &[SentenceSpan]) -> bool {
    let mut cursor = 0;
    let mut rebuilt = alloc::string::String::with_capacity(text.len());
    for span in spans {
        if span.start < cursor || span.end <= span.start || span.end > text.len() {
            return false;
        }
        if !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end) {
            return false;
        }
        let gap = &text[cursor..span.start];
        if !gap.chars().all(char::is_whitespace) {
            return false;
        }
        rebuilt.push_str(gap);
        rebuilt.push_str(&text[span.start..span.end]);
        cursor = span.end;
    }
    let tail = &text[cursor..];
    if !tail.chars().all(char::is_whitespace) {
        return false;
    }
    rebuilt.push_str(tail);
    rebuilt == text
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seg(text: &str) -> Vec<(usize, usize)> {
        segment_sentences(text, &Abbreviations::default()).iter().map(|s| (s.start, s.end)).collect()
    }

    #[test]
    fn empty_text() {
        assert!(seg("").is_empty());
        assert!(seg("   ").is_empty());
    }

    #[test]
    fn two_sentences_byte_offsets() {
        let text = "Bonjour. Ça va ?";
        let spans = segment_sentences(text, &Abbreviations::default());
        assert_eq!(seg(text), vec![(0, 8), (9, 17)]);
        assert_eq!(spans[1].slice(text), "Ça va ?");
        assert!(reconstructs(text, &spans));
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(seg("M. Dupont arrive."), vec![(0, 17)]);
        let mut no_abbr = Abbreviations::empty();
        assert_eq!(segment_sentences("M. Dupont arrive.", &no_abbr).len(), 2);
        no_abbr.insert("M.");
        assert_eq!(segment_sentences("M. Dupont arrive.", &no_abbr).len(), 1);
    }

    #[test]
    fn ellipsis_and_runs() {
        assert_eq!(seg("Bon... On verra… Super!! Oui?!"), vec![(0, 6), (7, 18), (19, 26), (27, 32)]);
    }

    #[test]
    fn no_split_inside_numbers_or_without_space() {
        assert_eq!(seg("Il fait 3.5 degrés.Vraiment"), vec![(0, 28)]);
    }

    #[test]
    fn trailing_unterminated_sentence() {
        let text = "  Une phrase. puis la suite  ";
        assert_eq!(seg(text), vec![(2, 13), (14, 27)]);
        assert!(reconstructs(text, &segment_sentences(text, &Abbreviations::default())));
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(seg("Il dit \"stop.\" Puis part."), vec![(0, 14), (15, 25)]);
    }

    #[test]
    fn reconstruct_rejects_bad_spans() {
        let text = "ab cd";
        assert!(!reconstructs(text, &[SentenceSpan { start: 0, end: 2 }]));
        assert!(!reconstructs(text, &[SentenceSpan { start: 3, end: 5 }, SentenceSpan { start: 0, end: 2 }]));
        assert!(reconstructs(text, &[SentenceSpan { start: 0, end: 2 }, SentenceSpan { start: 3, end: 5 }]));
    }
}
