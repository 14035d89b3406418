use alloc::string::String;

use super::{is_terminator, RestorationConfig, TextError, TimedSegment};

/// Rebuilds punctuated, capitalized text from raw caption fragments.
///
/// A pause of at least `pause_threshold_s` between the end of one fragment
/// and the start of the next closes the sentence with a period (unless one
/// is already there) and capitalizes the next word. The first word is
/// capitalized and unterminated text gets a final period. Words are never
/// altered beyond the case of their first letter.
pub fn restore(segments: &[TimedSegment], config: &RestorationConfig) -> Result<String, TextError> {
    config.validate()?;
    check_segments(segments)?;

    let mut out = String::new();
    let mut prev_end: Option<f64> = None;
    let mut capitalize = config.enabled;

    for seg in segments {
        let mut words = seg.text.split_whitespace().peekable();
        if words.peek().is_none() {
            continue;
        }
        if let Some(end) = prev_end {
            if config.enabled {
                if seg.start_s - end >= config.pause_threshold_s {
                    if !ends_with_terminator(&out) {
                        out.push('.');
                    }
                    capitalize = true;
                } else if ends_with_terminator(&out) {
                    capitalize = true;
                }
            }
            out.push(' ');
        }
        for (i, word) in words.enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if capitalize {
                push_capitalized(&mut out, word);
                capitalize = false;
            } else {
                out.push_str(word);
            }
        }
        prev_end = Some(seg.end_s());
    }

    if config.enabled && !out.is_empty() && !ends_with_terminator(&out) {
        out.push('.');
    }
    Ok(out)
}

fn check_segments(segments: &[TimedSegment]) -> Result<(), TextError> {
    for (index, seg) in segments.iter().enumerate() {
        let ok = seg.start_s.is_finite() && seg.duration_s.is_finite() && seg.start_s >= 0.0 && seg.duration_s >= 0.0;
        if !ok {
            return Err(TextError::InvalidTiming { index });
        }
        if index > 0 && seg.start_s < segments[index - 1].start_s {
            return Err(TextError::UnsortedSegments { index });
        }
    }
    Ok(())
}

fn ends_with_terminator(s: &str) -> bool {
    s.chars().next_back().is_some_and(is_terminator)
}

// Only uppercases when the mapping is one char and lowercases back to the
// same thing, so the lowercased content stream never changes.
fn push_capitalized(out: &mut String, word: &str) {
    let mut chars = word.chars();
    let Some(first) = chars.next() else { return };
    let mut upper = first.to_uppercase();
    match (upper.next(), upper.next()) {
        (Some(u), None) if first.is_lowercase() && u.to_lowercase().eq(first.to_lowercase()) => {
            out.push(u);
            out.push_str(chars.as_str());
        }
        _ => out.push_str(word),
    }
}
