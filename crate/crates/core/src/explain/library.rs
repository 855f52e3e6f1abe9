use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sql::{placeholder_counts, SlotKind};

/// Step patterns for one template key.
///
/// Patterns use `{COL1}`, `{TAB2}`, `{AGG1}`, `{OP1}`, `{LIT1}` for the n-th
/// placeholder of that kind in the key, and `{STEP1}` for the n-th step of
/// this template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationTemplate {
    pub key: String,
    pub steps: Vec<String>,
}

impl ExplanationTemplate {
    pub fn new(key: impl Into<String>, steps: Vec<String>) -> Result<Self> {
        let t = ExplanationTemplate { key: key.into(), steps };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let malformed = |message: String| Error::MalformedTemplate {
            key: self.key.clone(),
            message,
        };
        if self.steps.is_empty() {
            return Err(malformed("template has no steps".into()));
        }
        let counts = placeholder_counts(&self.key);
        for (i, step) in self.steps.iter().enumerate() {
            for name in slot_names(step).map_err(|m| malformed(format!("step {}: {m}", i + 1)))? {
                let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
                let (kind, index) = name.split_at(split);
                let index: usize = index
                    .parse()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| malformed(format!("slot {{{name}}} has no index")))?;
                let bound = if kind == "STEP" {
                    index <= i
                } else {
                    match SlotKind::from_placeholder(kind) {
                        Some(k) => index <= counts[k as usize],
                        None => return Err(malformed(format!("unknown slot {{{name}}}"))),
                    }
                };
                if !bound {
                    return Err(malformed(format!("slot {{{name}}} in step {} is not bound", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Names between braces, in order. Errors on an unclosed brace.
pub(crate) fn slot_names(pattern: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| "unclosed '{'".to_string())?;
        out.push(&after[..close]);
        rest = &after[close + 1..];
    }
    Ok(out)
}

pub(crate) fn fill(pattern: &str, lookup: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match lookup(name) {
                    Some(v) => out.push_str(&v),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Phrase names, the slots each may use, and the default wording.
const PHRASES: &[(&str, &[&str], &str)] = &[
    ("table", &["TABLE"], "the {TABLE} table"),
    ("results", &["STEP"], "the results of step {STEP}"),
    (
        "join",
        &["LEFT", "RIGHT"],
        "for each row in {LEFT}, find the corresponding rows in {RIGHT}",
    ),
    ("select", &["ITEMS", "SOURCE"], "find {ITEMS} of {SOURCE}"),
    ("condition", &["COND"], "whose {COND}"),
    ("filter", &["SOURCE", "COND"], "find the rows of {SOURCE} whose {COND}"),
    (
        "aggregation",
        &["GROUP", "SOURCE", "AGGS"],
        "find each value of {GROUP} in {SOURCE} along with {AGGS} of the corresponding rows to each value",
    ),
    (
        "grouping",
        &["GROUP", "SOURCE"],
        "find each value of {GROUP} in {SOURCE}",
    ),
    ("having", &["SOURCE", "COND"], "keep the rows of {SOURCE} whose {COND}"),
    ("distinct", &[], "without repetition"),
    (
        "order",
        &["SOURCE", "KEY", "DIRECTION"],
        "order {SOURCE} by {KEY} in {DIRECTION} order",
    ),
    (
        "extreme",
        &["SOURCE", "KEY", "EXTREME"],
        "find the row with the {EXTREME} {KEY} in {SOURCE}",
    ),
    ("limit", &["SOURCE", "N"], "only keep the first {N} rows of {SOURCE}"),
    ("limit_one", &["SOURCE"], "only keep the first row of {SOURCE}"),
    (
        "intersect",
        &["LEFT", "RIGHT"],
        "show the rows that are in both the results of step {LEFT} and step {RIGHT}",
    ),
    (
        "union",
        &["LEFT", "RIGHT"],
        "show the rows that are in any of the results of step {LEFT} and step {RIGHT}",
    ),
    (
        "except",
        &["LEFT", "RIGHT"],
        "show the rows that are in the results of step {LEFT} but not in the results of step {RIGHT}",
    ),
];

/// Per-clause wording used when no template matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrasebook {
    phrases: BTreeMap<String, String>,
}

impl Default for Phrasebook {
    fn default() -> Self {
        Phrasebook {
            phrases: PHRASES
                .iter()
                .map(|(name, _, text)| (name.to_string(), text.to_string()))
                .collect(),
        }
    }
}

impl Phrasebook {
    pub fn names() -> impl Iterator<Item = &'static str> {
        PHRASES.iter().map(|(n, _, _)| *n)
    }

    pub fn get(&self, name: &str) -> &str {
        self.phrases.get(name).map(String::as_str).unwrap_or("")
    }

    /// Replaces the wording of one phrase. Every slot must be one the phrase
    /// provides.
    pub fn set(&mut self, name: &str, pattern: &str) -> Result<()> {
        let malformed = |message: String| Error::MalformedTemplate {
            key: format!("phrase {name}"),
            message,
        };
        let (_, allowed, _) = PHRASES
            .iter()
            .find(|(n, _, _)| *n == name)
            .ok_or_else(|| malformed("unknown phrase".into()))?;
        for slot in slot_names(pattern).map_err(malformed)? {
            if !allowed.contains(&slot) {
                return Err(malformed(format!("slot {{{slot}}} is not available")));
            }
        }
        self.phrases.insert(name.to_string(), pattern.to_string());
        Ok(())
    }

    pub(crate) fn render(&self, name: &str, slots: &[(&str, &str)]) -> String {
        fill(self.get(name), |s| {
            slots.iter().find(|(k, _)| *k == s).map(|(_, v)| v.to_string())
        })
    }
}

/// Text substitution applied to every rendered step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rewrite {
    pub from: String,
    pub to: String,
}

impl Rewrite {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Result<Self> {
        let (from, to) = (from.into(), to.into());
        if from.is_empty() || to.contains(&from) {
            return Err(Error::MalformedTemplate {
                key: format!("rewrite {from}"),
                message: "replacement must not contain the pattern".into(),
            });
        }
        Ok(Rewrite { from, to })
    }

    pub(crate) fn apply(&self, text: &str) -> String {
        text.replace(&self.from, &self.to)
    }
}

/// Templates by key, plus the fallback phrasebook and rewrite rules.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateLibrary {
    templates: BTreeMap<String, ExplanationTemplate>,
    pub phrasebook: Phrasebook,
    pub rewrites: Vec<Rewrite>,
}

impl TemplateLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, template: ExplanationTemplate) -> Result<()> {
        if self.templates.contains_key(&template.key) {
            return Err(Error::DuplicateTemplate(template.key));
        }
        self.templates.insert(template.key.clone(), template);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&ExplanationTemplate> {
        self.templates.get(key)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> impl Iterator<Item = &ExplanationTemplate> {
        self.templates.values()
    }

    /// Parses the library text format.
    ///
    /// ```text
    /// # comment
    /// template: SELECT COL FROM TAB
    ///   find {COL1} of the {TAB1} table
    /// phrase: distinct = with duplicates removed
    /// rewrite: the the => the
    /// ```
    ///
    /// Indented lines are the steps of the preceding `template:`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lib = TemplateLibrary::new();
        let mut current: Option<(String, Vec<String>)> = None;
        let flush = |lib: &mut TemplateLibrary, current: &mut Option<(String, Vec<String>)>| -> Result<()> {
            if let Some((key, steps)) = current.take() {
                lib.insert(ExplanationTemplate::new(key, steps)?)?;
            }
            Ok(())
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let indented = raw.starts_with([' ', '\t']);
            if indented {
                match &mut current {
                    Some((_, steps)) => steps.push(line.to_string()),
                    None => {
                        return Err(Error::MalformedTemplate {
                            key: String::new(),
                            message: format!("line {}: step outside a template", lineno + 1),
                        })
                    }
                }
                continue;
            }
            flush(&mut lib, &mut current)?;
            let bad = |message: &str| Error::MalformedTemplate {
                key: String::new(),
                message: format!("line {}: {message}", lineno + 1),
            };
            if let Some(key) = line.strip_prefix("template:") {
                current = Some((key.trim().to_string(), Vec::new()));
            } else if let Some(rest) = line.strip_prefix("phrase:") {
                let (name, pattern) = rest
                    .split_once('=')
                    .ok_or_else(|| bad("expected `phrase: name = text`"))?;
                lib.phrasebook.set(name.trim(), pattern.trim())?;
            } else if let Some(rest) = line.strip_prefix("rewrite:") {
                let (from, to) = rest
                    .split_once("=>")
                    .ok_or_else(|| bad("expected `rewrite: from => to`"))?;
                lib.rewrites.push(Rewrite::new(from.trim(), to.trim())?);
            } else {
                return Err(bad("expected `template:`, `phrase:` or `rewrite:`"));
            }
        }
        flush(&mut lib, &mut current)?;
        Ok(lib)
    }
}

pub fn load_library(path: impl AsRef<Path>) -> Result<TemplateLibrary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TemplateLibrary::parse(&text)
}
