//! Emoji detection by code point ranges.

/// Code points that start an emoji cluster.
pub fn is_emoji_base(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x231A | 0x231B | 0x2328 | 0x23CF
        | 0x23E9..=0x23F3
        | 0x23F8..=0x23FA
        | 0x2B05..=0x2B07
        | 0x2B1B | 0x2B1C | 0x2B50 | 0x2B55
        | 0x2934 | 0x2935 | 0x3030 | 0x303D | 0x3297 | 0x3299)
}

fn is_regional_indicator(c: char) -> bool {
    matches!(c as u32, 0x1F1E6..=0x1F1FF)
}

// variation selectors, skin tones, keycap, tag characters
fn is_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

const ZWJ: char = '\u{200D}';

/// Byte length of the emoji cluster starting at the beginning of `s`, if any.
///
/// A cluster is a base emoji followed by modifiers and ZWJ-joined emoji, or a
/// pair of regional indicators (a flag).
pub fn emoji_cluster_len(s: &str) -> Option<usize> {
    let mut chars = s.chars();
    let first = chars.next()?;
    if !is_emoji_base(first) {
        return None;
    }
    let mut len = first.len_utf8();
    if is_regional_indicator(first) {
        if let Some(second) = chars.next().filter(|c| is_regional_indicator(*c)) {
            len += second.len_utf8();
        }
        return Some(len);
    }
    let rest = &s[len..];
    let mut it = rest.chars().peekable();
    while let Some(&c) = it.peek() {
        if is_modifier(c) {
            len += c.len_utf8();
            it.next();
        } else if c == ZWJ {
            let mut look = it.clone();
            look.next();
            match look.peek() {
                Some(&n) if is_emoji_base(n) => {
                    len += ZWJ.len_utf8() + n.len_utf8();
                    it = look;
                    it.next();
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    Some(len)
}
