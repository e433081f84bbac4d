use crate::dataset::ClassLabelMap;
use crate::error::{Error, Result};

/// Whole-word, case-insensitive occurrences of `needle` in `haystack`
/// (both already lowercased), as byte ranges.
fn word_matches(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    if needle.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = haystack[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[end..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            out.push((start, end));
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    out
}

/// Map a free-form completion onto a class index.
///
/// Exactly one distinct label name must occur as a whole word (case
/// insensitive). A match nested inside a longer label's match does not count.
pub fn parse_label(completion: &str, label_map: &ClassLabelMap) -> Result<usize> {
    let hay = completion.to_lowercase();
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for (label, name) in label_map.names().iter().enumerate() {
        let needle = name.to_lowercase();
        for (s, e) in word_matches(&hay, needle.trim()) {
            hits.push((s, e, label));
        }
    }
    let kept: Vec<(usize, usize, usize)> = hits
        .iter()
        .filter(|&&(s, e, l)| {
            !hits
                .iter()
                .any(|&(s2, e2, l2)| l2 != l && s2 <= s && e <= e2 && (e2 - s2) > (e - s))
        })
        .copied()
        .collect();
    let mut ordered = kept;
    ordered.sort_by_key(|&(s, _, l)| (s, l));
    let Some(&(_, _, first)) = ordered.first() else {
        return Err(Error::NoLabelFound(completion.to_string()));
    };
    if let Some(&(_, _, other)) = ordered.iter().find(|&&(_, _, l)| l != first) {
        return Err(Error::AmbiguousLabel {
            completion: completion.to_string(),
            first: label_map.names()[first].clone(),
            second: label_map.names()[other].clone(),
        });
    }
    Ok(first)
}
