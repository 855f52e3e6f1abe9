//! SQL and feedback tokenization.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    Text,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Identifier/keyword text as written; string contents without quotes.
    pub text: String,
    /// Byte offset in the input.
    pub offset: usize,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        self.kind == TokenKind::Word && self.text.eq_ignore_ascii_case(kw)
    }

    pub fn is_symbol(&self, s: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizeMode {
    Sql,
    Feedback,
}

/// Tokenizes `text` into lowercase tokens.
///
/// `Sql` mode yields one token per keyword, identifier, operator and literal
/// (string literals keep a double-quoted form). `Feedback` mode yields word
/// tokens with punctuation stripped and snake_case / camelCase split.
pub fn tokenize(text: &str, mode: TokenizeMode) -> Result<Vec<String>> {
    match mode {
        TokenizeMode::Sql => Ok(lex(text)?
            .into_iter()
            .map(|t| match t.kind {
                TokenKind::Text => format!("\"{}\"", t.text.to_lowercase()),
                _ => t.text.to_lowercase(),
            })
            .collect()),
        TokenizeMode::Feedback => Ok(feedback_tokens(text)),
    }
}

/// Feedback-mode tokenization; total and infallible.
pub fn feedback_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut chunk = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            chunk.push(c);
        } else if c == '\'' || c == '\u{2019}' {
            // apostrophes join: "don't" -> "dont"
        } else if c == '.'
            && chunk.chars().last().is_some_and(|p| p.is_ascii_digit())
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            chunk.push(c);
        } else {
            split_case(&chunk, &mut out);
            chunk.clear();
        }
        i += 1;
    }
    split_case(&chunk, &mut out);
    out
}

/// Splits one alphanumeric run at camelCase boundaries and lowercases it.
fn split_case(chunk: &str, out: &mut Vec<String>) {
    if chunk.is_empty() {
        return;
    }
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = chars[i - 1];
        let cur = chars[i];
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        let boundary =
            (prev.is_lowercase() && cur.is_uppercase()) || (prev.is_uppercase() && cur.is_uppercase() && next_lower);
        if boundary {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    out.push(chars[start..].iter().collect::<String>().to_lowercase());
}

const TWO_CHAR_SYMBOLS: [&str; 4] = ["<=", ">=", "!=", "<>"];
const ONE_CHAR_SYMBOLS: &str = "(),.*=<>+-/;";

/// Lexes SQL text into positioned tokens.
pub fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == '\'' || c == '"' {
            let quote = bytes[i];
            let mut value = String::new();
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(Error::Syntax {
                        position: start,
                        near: text[start..].chars().take(16).collect(),
                        message: "unterminated string literal".into(),
                    });
                }
                if bytes[i] == quote {
                    if bytes.get(i + 1) == Some(&quote) {
                        value.push(quote as char);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                let ch = text[i..].chars().next().expect("char boundary");
                value.push(ch);
                i += ch.len_utf8();
            }
            tokens.push(Token {
                kind: TokenKind::Text,
                text: value,
                offset: start,
            });
        } else if c == '`' || c == '[' {
            let close = if c == '`' { '`' } else { ']' };
            let end = text[i + 1..].find(close).ok_or_else(|| Error::Syntax {
                position: start,
                near: text[start..].chars().take(16).collect(),
                message: "unterminated quoted identifier".into(),
            })?;
            tokens.push(Token {
                kind: TokenKind::Word,
                text: text[i + 1..i + 1 + end].to_string(),
                offset: start,
            });
            i += end + 2;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) && !prev_is_word(&tokens))
        {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: text[start..i].to_string(),
                offset: start,
            });
        } else if c.is_alphabetic() || c == '_' || !c.is_ascii() {
            while i < bytes.len() {
                let ch = text[i..].chars().next().expect("char boundary");
                if ch.is_alphanumeric() || ch == '_' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Word,
                text: text[start..i].to_string(),
                offset: start,
            });
        } else if let Some(sym) = TWO_CHAR_SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            tokens.push(Token {
                kind: TokenKind::Symbol,
                text: (*sym).to_string(),
                offset: start,
            });
            i += 2;
        } else if ONE_CHAR_SYMBOLS.contains(c) {
            tokens.push(Token {
                kind: TokenKind::Symbol,
                text: c.to_string(),
                offset: start,
            });
            i += 1;
        } else {
            return Err(Error::Syntax {
                position: start,
                near: c.to_string(),
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(tokens)
}

fn prev_is_word(tokens: &[Token]) -> bool {
    tokens
        .last()
        .is_some_and(|t| t.kind == TokenKind::Word || t.is_symbol(")"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fb(s: &str) -> Vec<String> {
        tokenize(s, TokenizeMode::Feedback).unwrap()
    }

    fn sql(s: &str) -> Vec<String> {
        tokenize(s, TokenizeMode::Sql).unwrap()
    }

    #[test]
    fn feedback_strips_punctuation() {
        assert_eq!(
            fb("You should use races table."),
            ["you", "should", "use", "races", "table"]
        );
    }

    #[test]
    fn feedback_splits_snake_and_camel_case() {
        assert_eq!(fb("first_name"), ["first", "name"]);
        assert_eq!(fb("StuID"), ["stu", "id"]);
        assert_eq!(fb("maxTemperatureF"), ["max", "temperature", "f"]);
        assert_eq!(fb("HTTPServer"), ["http", "server"]);
    }

    #[test]
    fn feedback_keeps_decimals_and_joins_apostrophes() {
        assert_eq!(fb("don't use 13.5, use 80."), ["dont", "use", "13.5", "use", "80"]);
    }

    #[test]
    fn feedback_empty_and_symbols_only() {
        assert!(fb("").is_empty());
        assert!(fb(" ,;!? ").is_empty());
    }

    #[test]
    fn sql_operator_tokens() {
        assert_eq!(sql("count(*) >= 2"), ["count", "(", "*", ")", ">=", "2"]);
    }

    #[test]
    fn sql_qualified_names_and_strings() {
        assert_eq!(
            sql("SELECT T1.Name FROM t AS T1 WHERE x LIKE '%Math%'"),
            [
                "select",
                "t1",
                ".",
                "name",
                "from",
                "t",
                "as",
                "t1",
                "where",
                "x",
                "like",
                "\"%math%\""
            ]
        );
    }

    #[test]
    fn sql_unterminated_string_reports_position() {
        let err = tokenize("select 'abc", TokenizeMode::Sql).unwrap_err();
        match err {
            Error::Syntax { position, .. } => assert_eq!(position, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sql_doubled_quote_escape() {
        let toks = lex(r#"select "a""b""#).unwrap();
        assert_eq!(toks[1].text, "a\"b");
    }
}
