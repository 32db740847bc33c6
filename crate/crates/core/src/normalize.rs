//! Surface-form normalization shared by the graph, retrieval and metrics.

/// Trim, collapse internal whitespace runs to a single space, and lower-case
/// with Unicode case mapping.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Singular form of a single lower-case English word.
///
/// Handles the regular plural suffixes only; irregular plurals pass through.
pub fn singularize_word(word: &str) -> String {
    let n = word.chars().count();
    if n <= 3 {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if n > 4 {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_string();
    }
    match word.strip_suffix('s') {
        Some(stem) => stem.to_string(),
        None => word.to_string(),
    }
}

/// Normalized form with the last word singularized.
pub fn singular_key(s: &str) -> String {
    let norm = normalize(s);
    match norm.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", singularize_word(last)),
        None => singularize_word(&norm),
    }
}

/// Display-form plural of the last word; used by the synthetic corpus.
pub fn pluralize_last(s: &str) -> String {
    let (head, last) = match s.rsplit_once(' ') {
        Some((h, l)) => (Some(h), l),
        None => (None, s),
    };
    let lower = last.to_lowercase();
    let plural = if lower.ends_with('y')
        && !lower.ends_with("ay")
        && !lower.ends_with("ey")
        && !lower.ends_with("oy")
    {
        format!("{}ies", &last[..last.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| lower.ends_with(s)) {
        format!("{last}es")
    } else {
        format!("{last}s")
    };
    match head {
        Some(h) => format!("{h} {plural}"),
        None => plural,
    }
}

/// Title case each whitespace-separated word, leaving the rest of the word as is.
pub fn title_case(s: &str) -> String {
    s.split_whitespace()
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(first) => first.to_uppercase().chain(cs).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
