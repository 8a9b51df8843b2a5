//! Override file: one rule per line.
//!
//! ```text
//! # comment
//! family gcc: gcc272 gcc2.95 gcc2.96 gcc3.0; representative gcc3.0; reason "..."
//! separate emacs xemacs; reason "..."
//! ```

use serde::{Deserialize, Serialize};

use super::CurationError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OverrideRule {
    /// Pin the representative of family `stem`. A non-empty member list
    /// restricts the family to those names; the rest become singletons.
    Family {
        stem: String,
        members: Vec<String>,
        representative: String,
        reason: String,
    },
    /// Families `a` and `b` are different software and stay apart.
    Separate { a: String, b: String, reason: String },
}

impl OverrideRule {
    pub fn id(&self) -> String {
        match self {
            OverrideRule::Family { stem, .. } => format!("family:{stem}"),
            OverrideRule::Separate { a, b, .. } => format!("separate:{a}+{b}"),
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            OverrideRule::Family { reason, .. } | OverrideRule::Separate { reason, .. } => reason,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideTable {
    pub rules: Vec<OverrideRule>,
}

/// Rules shipped with the tool: the family judgments made for the woody
/// measurement.
pub const DEFAULT_OVERRIDES: &str = r#"# gcc272 is gcc 2.7.2; a literal comparison would rank it above 3.0.
family gcc: gcc272 gcc2.95 gcc2.96 gcc3.0; representative gcc3.0; reason "one compiler in four versions; 272 denotes 2.7.2, so 3.0 is newest"
separate emacs xemacs; reason "xemacs is a fork that evolved on its own; both are counted"
separate gcc gnat; reason "gnat builds on gcc but adds a large Ada front end; both are counted"
"#;

fn parse_reason(part: &str, lineno: usize) -> Result<String, CurationError> {
    let rest = part
        .strip_prefix("reason")
        .map(str::trim)
        .ok_or_else(|| CurationError::OverrideSyntax { line: lineno, message: "expected `reason \"...\"`".into() })?;
    rest.strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .map(str::to_string)
        .ok_or_else(|| CurationError::OverrideSyntax { line: lineno, message: "reason must be double-quoted".into() })
}

/// Split on `;` outside double quotes.
fn clauses(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                out.last_mut().unwrap().push(c);
            }
            ';' if !quoted => out.push(String::new()),
            _ => out.last_mut().unwrap().push(c),
        }
    }
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl OverrideTable {
    pub fn defaults() -> OverrideTable {
        OverrideTable::parse(DEFAULT_OVERRIDES).expect("shipped overrides parse")
    }

    pub fn parse(text: &str) -> Result<OverrideTable, CurationError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |m: &str| CurationError::OverrideSyntax { line: lineno, message: m.to_string() };
            let parts = clauses(line);
            let head = &parts[0];
            if let Some(rest) = head.strip_prefix("family ") {
                let (stem, members) = rest.split_once(':').ok_or_else(|| syntax("expected `family <stem>: members...`"))?;
                let [_, rep, reason] = parts.as_slice() else {
                    return Err(syntax("family rule needs `representative` and `reason` clauses"));
                };
                let representative = rep
                    .strip_prefix("representative")
                    .map(str::trim)
                    .filter(|r| !r.is_empty() && !r.contains(char::is_whitespace))
                    .ok_or_else(|| syntax("expected `representative <name>`"))?;
                rules.push(OverrideRule::Family {
                    stem: stem.trim().to_string(),
                    members: members.split_whitespace().map(str::to_string).collect(),
                    representative: representative.to_string(),
                    reason: parse_reason(reason, lineno)?,
                });
            } else if let Some(rest) = head.strip_prefix("separate ") {
                let names: Vec<&str> = rest.split_whitespace().collect();
                let [a, b] = names[..] else {
                    return Err(syntax("separate takes exactly two stems"));
                };
                let [_, reason] = parts.as_slice() else {
                    return Err(syntax("separate rule needs a `reason` clause"));
                };
                rules.push(OverrideRule::Separate {
                    a: a.to_string(),
                    b: b.to_string(),
                    reason: parse_reason(reason, lineno)?,
                });
            } else {
                return Err(syntax("unknown rule (expected `family` or `separate`)"));
            }
        }
        Ok(OverrideTable { rules })
    }

    /// Concatenation: rules from `other` for an already-covered family
    /// replace the earlier ones.
    pub fn merged(mut self, other: OverrideTable) -> OverrideTable {
        for rule in other.rules {
            let id = rule.id();
            self.rules.retain(|r| r.id() != id);
            self.rules.push(rule);
        }
        self
    }

    pub fn family_rule(&self, stem: &str) -> Option<&OverrideRule> {
        self.rules
            .iter()
            .find(|r| matches!(r, OverrideRule::Family { stem: s, .. } if s == stem))
    }

    /// Render back to the line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            match r {
                OverrideRule::Family { stem, members, representative, reason } => {
                    out.push_str(&format!(
                        "family {stem}: {}; representative {representative}; reason \"{reason}\"\n",
                        members.join(" ")
                    ));
                }
                OverrideRule::Separate { a, b, reason } => {
                    out.push_str(&format!("separate {a} {b}; reason \"{reason}\"\n"));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let t = OverrideTable::defaults();
        assert_eq!(t.rules.len(), 3);
        assert_eq!(t.rules[0].id(), "family:gcc");
        assert_eq!(t.rules[1].id(), "separate:emacs+xemacs");
    }

    #[test]
    fn round_trip_text() {
        let t = OverrideTable::defaults();
        assert_eq!(OverrideTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn semicolon_inside_reason() {
        let t = OverrideTable::parse("family x: x1 x2; representative x2; reason \"a; b\"\n").unwrap();
        assert_eq!(t.rules[0].reason(), "a; b");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = OverrideTable::parse("\n\nfamily x x1; representative x1; reason \"r\"\n").unwrap_err();
        assert!(matches!(err, CurationError::OverrideSyntax { line: 3, .. }));
        assert!(OverrideTable::parse("bogus rule").is_err());
        assert!(OverrideTable::parse("separate a; reason \"r\"").is_err());
        assert!(OverrideTable::parse("family x: x1; representative x1; reason unquoted").is_err());
    }

    #[test]
    fn merge_replaces_same_family() {
        let mine = OverrideTable::parse("family gcc: ; representative gcc2.95; reason \"local\"\n").unwrap();
        let t = OverrideTable::defaults().merged(mine);
        assert_eq!(t.rules.len(), 3);
        assert_eq!(t.family_rule("gcc").unwrap().reason(), "local");
    }
}
