//! Embedded query templates.
//!
//! The compiler treats embedded queries as opaque: it only finds the program
//! variables they mention (by name) so it can pass them as parameters.

use std::collections::HashSet;
use std::fmt;

use crate::expr::QueryId;
use crate::value::TypeTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    /// Index into [`QueryTemplate::params`].
    Param(usize),
}

/// One syntactic occurrence of an embedded query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTemplate {
    pub id: QueryId,
    /// Free program variables in first-occurrence order.
    pub params: Vec<String>,
    /// Known when the query's value is assigned directly to a variable.
    pub result_type: Option<TypeTag>,
    segments: Vec<Segment>,
}

impl QueryTemplate {
    /// Splits `text` at every identifier naming one of `in_scope`.
    ///
    /// An identifier counts when it is not qualified (`t.x`), not a qualifier
    /// itself (`x.col`), and not a function name (`x(`).
    pub fn scan(id: QueryId, text: &str, in_scope: &HashSet<String>) -> Self {
        let b = text.as_bytes();
        let mut segments = Vec::new();
        let mut params: Vec<String> = Vec::new();
        let mut lit_start = 0;
        let mut i = 0;
        while i < b.len() {
            match b[i] {
                q @ (b'\'' | b'"') => {
                    i += 1 + text[i + 1..].find(q as char).unwrap_or(text.len() - i - 1) + 1;
                }
                b'-' if b.get(i + 1) == Some(&b'-') => {
                    i = text[i..].find('\n').map_or(b.len(), |n| i + n);
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let len = b[i..]
                        .iter()
                        .take_while(|c| c.is_ascii_alphanumeric() || **c == b'_')
                        .count();
                    let word = text[i..i + len].to_ascii_lowercase();
                    let before = text[..i].trim_end().as_bytes().last().copied();
                    let after = text[i + len..].trim_start().as_bytes().first().copied();
                    let qualified = matches!(before, Some(b'.' | b':'));
                    let qualifier_or_call = matches!(after, Some(b'.' | b'('));
                    if !qualified && !qualifier_or_call && in_scope.contains(&word) {
                        if lit_start < i {
                            segments.push(Segment::Text(text[lit_start..i].to_string()));
                        }
                        let idx = params.iter().position(|p| *p == word).unwrap_or_else(|| {
                            params.push(word.clone());
                            params.len() - 1
                        });
                        segments.push(Segment::Param(idx));
                        lit_start = i + len;
                    }
                    i += len;
                }
                c if c.is_ascii_digit() => {
                    i += b[i..]
                        .iter()
                        .take_while(|c| c.is_ascii_alphanumeric() || **c == b'_')
                        .count();
                }
                _ => i += 1,
            }
        }
        if lit_start < b.len() {
            segments.push(Segment::Text(text[lit_start..].to_string()));
        }
        QueryTemplate {
            id,
            params,
            result_type: None,
            segments,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The text with each parameter spelled by `arg(index)`.
    pub fn instantiate(&self, mut arg: impl FnMut(usize) -> String) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Param(i) => out.push_str(&arg(*i)),
            }
        }
        out
    }

    /// Template text with `:name` placeholders.
    pub fn text(&self) -> String {
        self.instantiate(|i| format!(":{}", self.params[i]))
    }

    /// The text as written in the source.
    pub fn source(&self) -> String {
        self.instantiate(|i| self.params[i].clone())
    }
}

impl fmt::Display for QueryTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}]: {}",
            self.id,
            self.params.join(", "),
            self.text()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope(names: &[&str]) -> HashSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn finds_unqualified_variables_only() {
        let q = QueryTemplate::scan(
            QueryId(1),
            "SELECT p.location FROM location AS p WHERE p.loc = location AND f(roll) < roll",
            &scope(&["location", "roll"]),
        );
        // `FROM location` is (wrongly but by design) a match: name matching is all the compiler does
        assert_eq!(q.params, vec!["location", "roll"]);
        assert_eq!(
            q.text(),
            "SELECT p.location FROM :location AS p WHERE p.loc = :location AND f(:roll) < :roll"
        );
    }

    #[test]
    fn skips_strings_and_casts() {
        let q = QueryTemplate::scan(
            QueryId(2),
            "SELECT 'x' || x::text, \"x\"",
            &scope(&["x", "text"]),
        );
        assert_eq!(q.params, vec!["x"]);
        assert_eq!(q.source(), "SELECT 'x' || x::text, \"x\"");
    }
}
