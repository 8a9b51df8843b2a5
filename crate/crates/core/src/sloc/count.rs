use serde::{Deserialize, Serialize};

use super::language::LanguageSpec;

/// Physical line totals for one file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LineCount {
    pub sloc: u64,
    pub total_lines: u64,
}

#[inline]
pub(crate) fn is_blank(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | 0x0b | 0x0c)
}

const WORD_BREAKS: &[u8] = b";|&(){}";

/// A [`LanguageSpec`]'s comment grammar compiled to byte tables.
///
/// The scan is a single pass over the bytes with four states: code, line
/// comment, block comment and string literal. A line is a SLOC when at least
/// one byte scanned in the code or string state is not blank. Block comments
/// and strings carry over newlines; block comments do not nest.
#[derive(Debug, Clone)]
pub struct Scanner {
    line: Vec<Vec<u8>>,
    block: Vec<(Vec<u8>, Vec<u8>)>,
    strings: [bool; 256],
    escape: Option<u8>,
    column_one: [bool; 256],
    word_start: bool,
    /// First bytes of any comment opener.
    opener: [bool; 256],
}

#[derive(Clone, Copy)]
enum State {
    Code,
    LineComment,
    Block(usize),
    Str(u8),
}

impl Scanner {
    pub fn new(spec: &LanguageSpec) -> Scanner {
        let mut opener = [false; 256];
        let line: Vec<Vec<u8>> = spec
            .line_comments
            .iter()
            .map(|m| m.as_bytes().to_vec())
            .collect();
        let block: Vec<(Vec<u8>, Vec<u8>)> = spec
            .block_comments
            .iter()
            .map(|(o, c)| (o.as_bytes().to_vec(), c.as_bytes().to_vec()))
            .collect();
        for m in line.iter().chain(block.iter().map(|(o, _)| o)) {
            opener[m[0] as usize] = true;
        }
        let mut strings = [false; 256];
        for &c in &spec.string_delimiters {
            strings[c as usize] = true;
        }
        let mut column_one = [false; 256];
        for &c in &spec.column_one_comments {
            column_one[c as usize] = true;
        }
        Scanner {
            line,
            block,
            strings,
            escape: spec.escape.map(|c| c as u8),
            column_one,
            word_start: spec.comment_at_word_start,
            opener,
        }
    }

    pub fn count(&self, content: &[u8]) -> LineCount {
        let n = content.len();
        let mut out = LineCount::default();
        let mut state = State::Code;
        let mut line_start = 0usize;
        let mut has_code = false;
        let mut i = 0usize;

        while i < n {
            let b = content[i];
            if b == b'\n' {
                out.total_lines += 1;
                if has_code {
                    out.sloc += 1;
                }
                has_code = false;
                if let State::LineComment = state {
                    state = State::Code;
                }
                i += 1;
                line_start = i;
                continue;
            }
            match state {
                State::Code => {
                    if i == line_start && self.column_one[b as usize] {
                        state = State::LineComment;
                        i += 1;
                        continue;
                    }
                    if is_blank(b) {
                        i += 1;
                        continue;
                    }
                    if self.opener[b as usize] {
                        let rest = &content[i..];
                        if let Some(idx) = self.block.iter().position(|(o, _)| rest.starts_with(o)) {
                            state = State::Block(idx);
                            i += self.block[idx].0.len();
                            continue;
                        }
                        if self.comment_allowed(content, line_start, i) {
                            if let Some(m) = self.line.iter().find(|m| rest.starts_with(m)) {
                                state = State::LineComment;
                                i += m.len();
                                continue;
                            }
                        }
                    }
                    if self.strings[b as usize] {
                        state = State::Str(b);
                    }
                    has_code = true;
                    i += 1;
                }
                State::LineComment => {
                    // Skip straight to the newline.
                    i = match content[i..].iter().position(|&c| c == b'\n') {
                        Some(off) => i + off,
                        None => n,
                    };
                }
                State::Block(idx) => {
                    let close = &self.block[idx].1;
                    if content[i..].starts_with(close) {
                        state = State::Code;
                        i += close.len();
                    } else {
                        i += 1;
                    }
                }
                State::Str(delim) => {
                    if !is_blank(b) {
                        has_code = true;
                    }
                    if Some(b) == self.escape {
                        // An escaped newline still ends the physical line.
                        i += if content.get(i + 1).is_some_and(|&c| c != b'\n') { 2 } else { 1 };
                    } else {
                        if b == delim {
                            state = State::Code;
                        }
                        i += 1;
                    }
                }
            }
        }
        if n > 0 && content[n - 1] != b'\n' {
            out.total_lines += 1;
            if has_code {
                out.sloc += 1;
            }
        }
        out
    }

    fn comment_allowed(&self, content: &[u8], line_start: usize, i: usize) -> bool {
        if !self.word_start || i == line_start {
            return true;
        }
        let prev = content[i - 1];
        is_blank(prev) || WORD_BREAKS.contains(&prev)
    }
}

/// Count physical SLOC of `content` under `spec`'s comment grammar.
pub fn count_file(content: &[u8], spec: &LanguageSpec) -> LineCount {
    Scanner::new(spec).count(content)
}

/// Physical line count, without any comment analysis.
pub fn count_lines(content: &[u8]) -> u64 {
    let newlines = content.iter().filter(|&&b| b == b'\n').count() as u64;
    match content.last() {
        Some(&b) if b != b'\n' => newlines + 1,
        _ => newlines,
    }
}
