//! Tokenizer for the function header and the PL/pgSQL body.
//!
//! Parenthesized `SELECT` subqueries are not tokenized: the lexer captures
//! their text verbatim as a single [`Tok::Query`] token.

use crate::error::CompileError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i128),
    Float(f64),
    Str(String),
    /// Dollar-quoted string; `start` is the byte offset of its first content byte.
    Dollar {
        body: String,
        start: usize,
    },
    /// Inner text of `( SELECT ... )`, without the enclosing parentheses.
    Query {
        text: String,
        start: usize,
    },
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Byte offset into the full source.
    pub pos: usize,
}

/// Maps byte offsets back to 1-based line/column pairs.
#[derive(Debug, Clone)]
pub struct LineMap<'a> {
    source: &'a str,
}

impl<'a> LineMap<'a> {
    pub fn new(source: &'a str) -> Self {
        LineMap { source }
    }

    pub fn locate(&self, pos: usize) -> (usize, usize) {
        let upto = &self.source[..pos.min(self.source.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    pub fn syntax(&self, pos: usize, message: impl Into<String>) -> CompileError {
        let (line, col) = self.locate(pos);
        CompileError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }
}

const SYMBOLS: [&str; 22] = [
    ":=", "..", "<<", ">>", "<=", ">=", "<>", "!=", "||", "::", "(", ")", ",", ";", "=", "+", "-",
    "*", "/", "%", "<", ">",
];

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

/// Tokenizes `text`, which starts at byte `base` of the full source `lines` describes.
pub fn tokenize(text: &str, base: usize, lines: &LineMap<'_>) -> Result<Vec<Token>, CompileError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = base + i;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if text[i..].starts_with("--") {
            i = text[i..].find('\n').map_or(bytes.len(), |n| i + n);
        } else if text[i..].starts_with("/*") {
            let end = text[i + 2..]
                .find("*/")
                .ok_or_else(|| lines.syntax(pos, "unterminated comment"))?;
            i += end + 4;
        } else if c == b'$' {
            let tag_end = text[i + 1..]
                .find('$')
                .map(|n| i + 1 + n)
                .filter(|&e| text[i + 1..e].bytes().all(is_ident_char))
                .ok_or_else(|| lines.syntax(pos, "malformed dollar quote"))?;
            let tag = &text[i..=tag_end];
            let body_start = tag_end + 1;
            let close = text[body_start..]
                .find(tag)
                .ok_or_else(|| lines.syntax(pos, format!("unterminated {tag} string")))?;
            out.push(Token {
                tok: Tok::Dollar {
                    body: text[body_start..body_start + close].to_string(),
                    start: base + body_start,
                },
                pos,
            });
            i = body_start + close + tag.len();
        } else if c == b'\'' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match text[j..].find('\'') {
                    None => return Err(lines.syntax(pos, "unterminated string literal")),
                    Some(n) => {
                        s.push_str(&text[j..j + n]);
                        j += n + 1;
                        if bytes.get(j) == Some(&b'\'') {
                            s.push('\'');
                            j += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                pos,
            });
            i = j;
        } else if c == b'(' && starts_select(&text[i + 1..]) {
            let end = matching_paren(text, i)
                .ok_or_else(|| lines.syntax(pos, "unbalanced parentheses in query"))?;
            let inner = &text[i + 1..end];
            let lead = inner.len() - inner.trim_start().len();
            out.push(Token {
                tok: Tok::Query {
                    text: inner.trim().to_string(),
                    start: pos + 1 + lead,
                },
                pos,
            });
            i = end + 1;
        } else if c.is_ascii_digit() {
            let (tok, len) = lex_number(&text[i..]).map_err(|m| lines.syntax(pos, m))?;
            out.push(Token { tok, pos });
            i += len;
        } else if is_ident_start(c) {
            let len = text[i..].bytes().take_while(|&b| is_ident_char(b)).count();
            out.push(Token {
                tok: Tok::Ident(text[i..i + len].to_ascii_lowercase()),
                pos,
            });
            i += len;
        } else if c == b'"' {
            return Err(lines.syntax(pos, "quoted identifiers are not supported"));
        } else if let Some(sym) = SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            out.push(Token {
                tok: Tok::Sym(sym),
                pos,
            });
            i += sym.len();
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(lines.syntax(pos, format!("unexpected character `{ch}`")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: base + text.len(),
    });
    Ok(out)
}

fn starts_select(rest: &str) -> bool {
    let t = rest.trim_start();
    t.len() >= 6
        && t[..6].eq_ignore_ascii_case("select")
        && !t.as_bytes().get(6).copied().is_some_and(is_ident_char)
}

/// Index of the `)` matching the `(` at `open`, skipping strings, quoted names and comments.
pub(crate) fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            q @ (b'\'' | b'"') => {
                i += 1 + text[i + 1..].find(q as char)?;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                i += text[i..].find('\n')?;
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn lex_number(s: &str) -> Result<(Tok, usize), String> {
    let b = s.as_bytes();
    let mut n = b.iter().take_while(|c| c.is_ascii_digit()).count();
    let mut float = false;
    // `1..n` is a range, not a float
    if b.get(n) == Some(&b'.') && b.get(n + 1).is_some_and(u8::is_ascii_digit) {
        float = true;
        n += 1 + b[n + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
    }
    if matches!(b.get(n), Some(b'e' | b'E')) {
        let mut m = n + 1;
        if matches!(b.get(m), Some(b'+' | b'-')) {
            m += 1;
        }
        let digits = b[m..].iter().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            float = true;
            n = m + digits;
        }
    }
    let text = &s[..n];
    if float {
        text.parse()
            .map(|x| (Tok::Float(x), n))
            .map_err(|_| format!("invalid number `{text}`"))
    } else {
        text.parse::<i128>()
            .ok()
            .filter(|v| *v <= i128::from(i64::MAX) + 1)
            .map(|v| (Tok::Int(v), n))
            .ok_or_else(|| format!("integer literal `{text}` out of range"))
    }
}
