//! Blank-line separated `Field: value` paragraphs, as used by `Sources`
//! indexes and `.dsc` files.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stanza {
    /// 1-based line of the first field.
    pub line: usize,
    fields: Vec<(String, String)>,
}

impl Stanza {
    /// Value of `name` (case-insensitive). Multi-line values keep one row per
    /// line, the first row being whatever followed the colon.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StanzaSyntaxError {
    pub line: usize,
    pub message: String,
}

/// Split `text` into stanzas. A malformed line invalidates only the stanza
/// it belongs to.
pub fn parse_stanzas(text: &str) -> (Vec<Stanza>, Vec<StanzaSyntaxError>) {
    let mut stanzas = Vec::new();
    let mut errors = Vec::new();
    let mut current: Option<Stanza> = None;
    let mut broken = false;

    let mut finish = |current: &mut Option<Stanza>, broken: &mut bool| {
        if let Some(st) = current.take() {
            if !*broken {
                stanzas.push(st);
            }
        }
        *broken = false;
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            finish(&mut current, &mut broken);
            continue;
        }
        if raw.starts_with('#') && current.is_none() {
            continue;
        }
        if raw.starts_with(' ') || raw.starts_with('\t') {
            match current.as_mut().and_then(|st| st.fields.last_mut()) {
                Some((_, value)) => {
                    value.push('\n');
                    value.push_str(raw.trim());
                }
                None => {
                    errors.push(StanzaSyntaxError {
                        line: lineno,
                        message: "continuation line without a field".into(),
                    });
                    broken = true;
                }
            }
            continue;
        }
        match raw.split_once(':') {
            Some((name, value)) if !name.is_empty() && !name.contains(char::is_whitespace) => {
                let st = current.get_or_insert_with(|| Stanza {
                    line: lineno,
                    fields: Vec::new(),
                });
                st.fields.push((name.to_string(), value.trim().to_string()));
            }
            _ => {
                errors.push(StanzaSyntaxError {
                    line: lineno,
                    message: format!("not a `Field: value` line: {raw:?}"),
                });
                current.get_or_insert_with(|| Stanza {
                    line: lineno,
                    fields: Vec::new(),
                });
                broken = true;
            }
        }
    }
    finish(&mut current, &mut broken);
    (stanzas, errors)
}
