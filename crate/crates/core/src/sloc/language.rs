use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SlocError;

/// Lexical description of one language: enough to tell code from comments
/// and to recognise its files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub id: String,
    #[serde(default)]
    pub line_comments: Vec<String>,
    #[serde(default)]
    pub block_comments: Vec<(String, String)>,
    /// Entries starting with `.` are file-name suffixes; anything else must
    /// equal the whole file name (`Makefile`).
    #[serde(default)]
    pub extensions: Vec<String>,
    #[serde(default)]
    pub shebang_keywords: Vec<String>,
    #[serde(default)]
    pub string_delimiters: Vec<char>,
    /// Escape character inside string literals.
    #[serde(default)]
    pub escape: Option<char>,
    /// Characters that turn a whole line into a comment when they sit in
    /// column 1 (fixed-form FORTRAN).
    #[serde(default)]
    pub column_one_comments: Vec<char>,
    /// Line comment markers only count at the start of a word (shell `#`
    /// versus `$#`).
    #[serde(default)]
    pub comment_at_word_start: bool,
}

impl LanguageSpec {
    fn new(id: &str) -> Self {
        LanguageSpec {
            id: id.to_string(),
            line_comments: Vec::new(),
            block_comments: Vec::new(),
            extensions: Vec::new(),
            shebang_keywords: Vec::new(),
            string_delimiters: Vec::new(),
            escape: None,
            column_one_comments: Vec::new(),
            comment_at_word_start: false,
        }
    }

    fn line(mut self, markers: &[&str]) -> Self {
        self.line_comments = markers.iter().map(|m| m.to_string()).collect();
        self
    }

    fn block(mut self, pairs: &[(&str, &str)]) -> Self {
        self.block_comments = pairs
            .iter()
            .map(|(o, c)| (o.to_string(), c.to_string()))
            .collect();
        self
    }

    fn ext(mut self, exts: &[&str]) -> Self {
        self.extensions = exts.iter().map(|e| e.to_string()).collect();
        self
    }

    fn shebang(mut self, kws: &[&str]) -> Self {
        self.shebang_keywords = kws.iter().map(|k| k.to_string()).collect();
        self
    }

    fn strings(mut self, delims: &[char], escape: Option<char>) -> Self {
        self.string_delimiters = delims.to_vec();
        self.escape = escape;
        self
    }

    fn word_start(mut self) -> Self {
        self.comment_at_word_start = true;
        self
    }

    fn column_one(mut self, chars: &[char]) -> Self {
        self.column_one_comments = chars.to_vec();
        self
    }

    fn validate(&self) -> Result<(), SlocError> {
        let bad = |why: &str| SlocError::InvalidLanguage {
            id: self.id.clone(),
            reason: why.to_string(),
        };
        if self.id.is_empty() || self.id == UNCLASSIFIED || self.id == BINARY {
            return Err(bad("reserved or empty id"));
        }
        let marker_ok = |m: &String| !m.is_empty() && m.is_ascii() && !m.contains('\n');
        if !self.line_comments.iter().all(marker_ok) {
            return Err(bad("line comment markers must be non-empty ASCII"));
        }
        if self
            .block_comments
            .iter()
            .any(|(o, c)| !marker_ok(o) || !marker_ok(c))
        {
            return Err(bad("block comment markers must be non-empty ASCII"));
        }
        let chars = self
            .string_delimiters
            .iter()
            .chain(self.escape.iter())
            .chain(self.column_one_comments.iter());
        if chars.clone().any(|c| !c.is_ascii() || *c == '\n') {
            return Err(bad("delimiters must be ASCII and not newline"));
        }
        if self.extensions.iter().any(|e| e.is_empty() || e == ".") {
            return Err(bad("empty extension"));
        }
        Ok(())
    }
}

pub const UNCLASSIFIED: &str = "unclassified";
pub const BINARY: &str = "binary";

const C_STRINGS: &[char] = &['"', '\''];

fn builtin_languages() -> Vec<LanguageSpec> {
    let c_like = |id: &str| {
        LanguageSpec::new(id)
            .line(&["//"])
            .block(&[("/*", "*/")])
            .strings(C_STRINGS, Some('\\'))
    };
    vec![
        c_like("c").ext(&[".c", ".h"]),
        c_like("cpp").ext(&[
            ".cc", ".cpp", ".cxx", ".c++", ".C", ".hh", ".hpp", ".hxx", ".h++", ".H",
        ]),
        LanguageSpec::new("shell")
            .line(&["#"])
            .word_start()
            .strings(&['"', '\''], Some('\\'))
            .ext(&[".sh", ".bash", ".ksh", ".zsh", ".csh", ".tcsh"])
            .shebang(&["sh"]),
        LanguageSpec::new("lisp")
            .line(&[";"])
            .block(&[("#|", "|#")])
            .strings(&['"'], Some('\\'))
            .ext(&[".el", ".lisp", ".lsp", ".cl", ".scm", ".ss", ".jl"]),
        LanguageSpec::new("perl")
            .line(&["#"])
            .strings(&['"', '\''], Some('\\'))
            .ext(&[".pl", ".pm", ".perl", ".ph"])
            .shebang(&["perl"]),
        LanguageSpec::new("fortran")
            .line(&["!"])
            .column_one(&['C', 'c', '*'])
            .strings(&['\'', '"'], None)
            .ext(&[".f", ".for", ".ftn", ".F", ".f77", ".FOR"]),
        LanguageSpec::new("fortran90")
            .line(&["!"])
            .strings(&['\'', '"'], None)
            .ext(&[".f90", ".f95", ".F90", ".F95"]),
        LanguageSpec::new("python")
            .line(&["#"])
            .strings(&['"', '\''], Some('\\'))
            .ext(&[".py"])
            .shebang(&["python"]),
        LanguageSpec::new("assembler")
            .line(&[";"])
            .block(&[("/*", "*/")])
            .strings(&['"'], Some('\\'))
            .ext(&[".s", ".S", ".asm"]),
        LanguageSpec::new("tcl")
            .line(&["#"])
            .word_start()
            .strings(&['"'], Some('\\'))
            .ext(&[".tcl", ".tk", ".itk", ".exp"])
            .shebang(&["tclsh", "wish", "expect"]),
        LanguageSpec::new("php")
            .line(&["//", "#"])
            .block(&[("/*", "*/")])
            .strings(C_STRINGS, Some('\\'))
            .ext(&[".php", ".php3", ".php4", ".phtml", ".inc"])
            .shebang(&["php"]),
        LanguageSpec::new("ada")
            .line(&["--"])
            .strings(&['"'], None)
            .ext(&[".ada", ".adb", ".ads"]),
        LanguageSpec::new("modula3")
            .block(&[("(*", "*)")])
            .strings(&['"', '\''], Some('\\'))
            .ext(&[".m3", ".i3", ".mg", ".ig"]),
        c_like("java").ext(&[".java"]),
        c_like("objc").ext(&[".m"]),
        c_like("yacc").ext(&[".y", ".yy"]),
        LanguageSpec::new("ml")
            .block(&[("(*", "*)")])
            .strings(&['"'], Some('\\'))
            .ext(&[".ml", ".mli", ".sml", ".mll", ".mly"]),
        c_like("lex").ext(&[".l", ".lex"]),
        LanguageSpec::new("makefile")
            .line(&["#"])
            .ext(&["Makefile", "makefile", "GNUmakefile", ".mk", ".mak"])
            .shebang(&["make"]),
        LanguageSpec::new("awk")
            .line(&["#"])
            .strings(&['"'], Some('\\'))
            .ext(&[".awk"])
            .shebang(&["awk"]),
        LanguageSpec::new("sed")
            .line(&["#"])
            .ext(&[".sed"])
            .shebang(&["sed"]),
        LanguageSpec::new("ruby")
            .line(&["#"])
            .strings(&['"', '\''], Some('\\'))
            .ext(&[".rb"])
            .shebang(&["ruby"]),
    ]
}

#[derive(Debug, Deserialize)]
struct OverrideFile {
    #[serde(default, rename = "language")]
    languages: Vec<LanguageSpec>,
}

/// Set of languages the counter recognises, with the lookup tables the
/// classifier needs.
#[derive(Debug, Clone)]
pub struct Registry {
    languages: Vec<LanguageSpec>,
    by_id: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    /// Suffix entries sorted longest first.
    suffixes: Vec<(String, usize)>,
}

impl Registry {
    pub fn builtin() -> Registry {
        Registry::new(builtin_languages()).expect("builtin language table is consistent")
    }

    pub fn new(languages: Vec<LanguageSpec>) -> Result<Registry, SlocError> {
        let mut by_id = HashMap::new();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (idx, lang) in languages.iter().enumerate() {
            lang.validate()?;
            if by_id.insert(lang.id.clone(), idx).is_some() {
                return Err(SlocError::DuplicateLanguage(lang.id.clone()));
            }
            for ext in &lang.extensions {
                if let Some(prev) = owner.insert(ext, &lang.id) {
                    return Err(SlocError::ExtensionConflict {
                        extension: ext.clone(),
                        first: prev.to_string(),
                        second: lang.id.clone(),
                    });
                }
            }
        }
        let mut by_name = HashMap::new();
        let mut suffixes = Vec::new();
        for (idx, lang) in languages.iter().enumerate() {
            for ext in &lang.extensions {
                if ext.starts_with('.') {
                    suffixes.push((ext.clone(), idx));
                } else {
                    by_name.insert(ext.clone(), idx);
                }
            }
        }
        suffixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Registry {
            languages,
            by_id,
            by_name,
            suffixes,
        })
    }

    /// SHA-256 over the serialized language table; changes whenever a
    /// counting rule changes.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(&self.languages).expect("language table serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Builtin table with the entries of a TOML override file applied: a
    /// `[[language]]` whose id already exists replaces it, new ids are added.
    pub fn with_overrides_str(text: &str) -> Result<Registry, SlocError> {
        let file: OverrideFile =
            toml::from_str(text).map_err(|e| SlocError::OverrideParse(e.to_string()))?;
        let mut languages = builtin_languages();
        for lang in file.languages {
            match languages.iter_mut().find(|l| l.id == lang.id) {
                Some(slot) => *slot = lang,
                None => languages.push(lang),
            }
        }
        Registry::new(languages)
    }

    pub fn with_overrides_file(path: &Path) -> Result<Registry, SlocError> {
        let text = std::fs::read_to_string(path).map_err(|e| SlocError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Registry::with_overrides_str(&text)
    }

    pub fn languages(&self) -> &[LanguageSpec] {
        &self.languages
    }

    pub fn get(&self, id: &str) -> Option<&LanguageSpec> {
        self.by_id.get(id).map(|&i| &self.languages[i])
    }

    pub(crate) fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Language owning `file_name` by exact name or longest suffix, plus the
    /// entry that matched.
    pub(crate) fn by_file_name(&self, file_name: &str) -> Option<(usize, &str)> {
        if let Some((key, &idx)) = self.by_name.get_key_value(file_name) {
            return Some((idx, key.as_str()));
        }
        self.suffixes
            .iter()
            .find(|(suffix, _)| file_name.len() > suffix.len() && file_name.ends_with(suffix.as_str()))
            .map(|(suffix, idx)| (*idx, suffix.as_str()))
    }

    /// Language whose shebang keyword is the longest substring of
    /// `interpreter`; ties go to registration order.
    pub(crate) fn by_interpreter(&self, interpreter: &str) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (idx, lang) in self.languages.iter().enumerate() {
            for kw in &lang.shebang_keywords {
                if !kw.is_empty() && interpreter.contains(kw.as_str()) {
                    match best {
                        Some((len, _)) if len >= kw.len() => {}
                        _ => best = Some((kw.len(), idx)),
                    }
                }
            }
        }
        best.map(|(_, idx)| idx)
    }

    pub(crate) fn spec_at(&self, idx: usize) -> &LanguageSpec {
        &self.languages[idx]
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_ranked_languages() {
        let reg = Registry::builtin();
        for id in [
            "c", "cpp", "shell", "lisp", "perl", "fortran", "python", "assembler", "tcl", "php",
            "ada", "modula3", "java", "objc", "yacc", "ml", "lex", "makefile",
        ] {
            assert!(reg.get(id).is_some(), "missing {id}");
        }
    }

    #[test]
    fn duplicate_extension_rejected() {
        let mut langs = builtin_languages();
        langs.push(LanguageSpec::new("toy").ext(&[".c"]));
        assert!(matches!(
            Registry::new(langs),
            Err(SlocError::ExtensionConflict { .. })
        ));
    }

    #[test]
    fn override_file_adds_and_replaces() {
        let reg = Registry::with_overrides_str(
            r##"
            [[language]]
            id = "toy"
            line_comments = ["%%"]
            extensions = [".toy"]

            [[language]]
            id = "sed"
            line_comments = ["#"]
            extensions = [".sed", ".sedscript"]
            "##,
        )
        .unwrap();
        assert_eq!(reg.get("toy").unwrap().line_comments, vec!["%%"]);
        assert_eq!(reg.by_file_name("x.sedscript").map(|(i, _)| i), reg.index_of("sed"));
    }

    #[test]
    fn longest_suffix_and_exact_names() {
        let reg = Registry::builtin();
        let id = |name: &str| reg.by_file_name(name).map(|(i, _)| reg.spec_at(i).id.clone());
        assert_eq!(id("Makefile").as_deref(), Some("makefile"));
        assert_eq!(id("rules.mk").as_deref(), Some("makefile"));
        assert_eq!(id("x.C").as_deref(), Some("cpp"));
        assert_eq!(id("x.c").as_deref(), Some("c"));
        assert_eq!(id(".c"), None);
        assert_eq!(id("README"), None);
    }

    #[test]
    fn interpreter_prefers_longest_keyword() {
        let reg = Registry::builtin();
        let id = |i: &str| reg.by_interpreter(i).map(|i| reg.spec_at(i).id.clone());
        assert_eq!(id("wish8.3").as_deref(), Some("tcl"));
        assert_eq!(id("bash").as_deref(), Some("shell"));
        assert_eq!(id("perl5.6").as_deref(), Some("perl"));
        assert_eq!(id("gawk").as_deref(), Some("awk"));
    }
}
