//! Naive line-at-a-time reference counter, kept separate from the library's
//! byte scanner. It splits the input into lines first and walks each line
//! with explicit carry-over state.

use debsloc::LanguageSpec;
use rand::rngs::StdRng;
use rand::Rng;

#[derive(Clone, PartialEq, Debug)]
enum Carry {
    Normal,
    InBlock(Vec<u8>),
    InString(u8),
}

fn white(c: u8) -> bool {
    c == b' ' || c == b'\t' || c == b'\r' || c == 0x0b || c == 0x0c
}

pub fn naive_count(content: &[u8], spec: &LanguageSpec) -> (u64, u64) {
    if content.is_empty() {
        return (0, 0);
    }
    let mut lines: Vec<&[u8]> = content.split(|&b| b == b'\n').collect();
    if content.ends_with(b"\n") {
        lines.pop();
    }
    let escape = spec.escape.map(|c| c as u8);
    let mut carry = Carry::Normal;
    let mut sloc = 0;
    for line in &lines {
        let mut code = false;
        let mut col = 0;
        'line: while col < line.len() {
            let c = line[col];
            match carry.clone() {
                Carry::InBlock(close) => {
                    if line[col..].starts_with(&close) {
                        carry = Carry::Normal;
                        col += close.len();
                    } else {
                        col += 1;
                    }
                }
                Carry::InString(delim) => {
                    if !white(c) {
                        code = true;
                    }
                    if Some(c) == escape {
                        col += if col + 1 < line.len() { 2 } else { 1 };
                    } else {
                        if c == delim {
                            carry = Carry::Normal;
                        }
                        col += 1;
                    }
                }
                Carry::Normal => {
                    if col == 0 && spec.column_one_comments.iter().any(|&k| k as u8 == c) {
                        break 'line;
                    }
                    if white(c) {
                        col += 1;
                        continue;
                    }
                    for (open, close) in &spec.block_comments {
                        if line[col..].starts_with(open.as_bytes()) {
                            carry = Carry::InBlock(close.as_bytes().to_vec());
                            col += open.len();
                            continue 'line;
                        }
                    }
                    let word_ok = !spec.comment_at_word_start
                        || col == 0
                        || white(line[col - 1])
                        || b";|&(){}".contains(&line[col - 1]);
                    if word_ok
                        && spec
                            .line_comments
                            .iter()
                            .any(|m| line[col..].starts_with(m.as_bytes()))
                    {
                        break 'line;
                    }
                    if spec.string_delimiters.iter().any(|&d| d as u8 == c) {
                        carry = Carry::InString(c);
                    }
                    code = true;
                    col += 1;
                }
            }
        }
        if code {
            sloc += 1;
        }
    }
    (sloc, lines.len() as u64)
}

/// Lexical fragments relevant to `spec`, plus neutral filler.
pub fn fragments(spec: &LanguageSpec) -> Vec<String> {
    let mut out: Vec<String> = ["x", "foo", "1", " ", "  ", "\t", "\n", "\n", "\n\n", "$", "=", ";", "(", "\r\n"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.extend(spec.line_comments.iter().cloned());
    for (o, c) in &spec.block_comments {
        out.push(o.clone());
        out.push(c.clone());
    }
    out.extend(spec.string_delimiters.iter().map(|c| c.to_string()));
    out.extend(spec.escape.iter().map(|c| c.to_string()));
    out.extend(spec.column_one_comments.iter().map(|c| format!("\n{c}")));
    out
}

/// A random small file built from `spec`'s fragments.
pub fn random_file(rng: &mut StdRng, spec: &LanguageSpec) -> Vec<u8> {
    let frags = fragments(spec);
    let len = rng.gen_range(0..40);
    let mut out = String::new();
    for _ in 0..len {
        out.push_str(&frags[rng.gen_range(0..frags.len())]);
    }
    if rng.gen_bool(0.5) && !out.ends_with('\n') {
        out.push('\n');
    }
    out.into_bytes()
}
