/// Phrases that mark machine-written files (autoconf, yacc, lex, ...).
/// Matched case-insensitively.
pub const GENERATED_MARKERS: &[&str] = &[
    "generated automatically",
    "automatically generated",
    "do not edit",
    "generated by",
];

/// Number of leading lines inspected for a marker.
pub const GENERATED_HEAD_LINES: usize = 15;

/// First generated-file marker found in the first
/// [`GENERATED_HEAD_LINES`] lines of `head`, if any.
pub fn is_generated(head: &[u8]) -> Option<&'static str> {
    let end = head
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(GENERATED_HEAD_LINES - 1)
        .map_or(head.len(), |(i, _)| i);
    let sample = head[..end].to_ascii_lowercase();
    GENERATED_MARKERS
        .iter()
        .copied()
        .find(|m| sample.windows(m.len()).any(|w| w == m.as_bytes()))
}
