//! Tokenizer for the DOML subset.

use super::error::DomlError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    /// Numeric literal; the raw text is kept so fixed-decimal values survive a round trip.
    Number { value: f64, text: String },
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Equals,
    /// Single-character unit symbols such as `%` or `$`.
    Symbol(char),
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::Number { text, .. } => format!("number `{text}`"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Arrow => "`=>`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::Symbol(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

pub const UNIT_SYMBOLS: &[char] = &['%', '$', '€', '£'];

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, DomlError> {
    let mut sc = Scanner {
        src,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = sc.peek() {
        if c.is_whitespace() {
            sc.bump();
            continue;
        }
        if c == '/' && sc.peek_at(1) == Some('/') {
            while let Some(c) = sc.peek() {
                if c == '\n' {
                    break;
                }
                sc.bump();
            }
            continue;
        }
        let (line, column, start) = (sc.line, sc.column, sc.pos);
        let kind = match c {
            '{' => {
                sc.bump();
                TokenKind::LBrace
            }
            '}' => {
                sc.bump();
                TokenKind::RBrace
            }
            '[' => {
                sc.bump();
                TokenKind::LBracket
            }
            ']' => {
                sc.bump();
                TokenKind::RBracket
            }
            ',' => {
                sc.bump();
                TokenKind::Comma
            }
            '=' => {
                sc.bump();
                if sc.peek() == Some('>') {
                    sc.bump();
                    TokenKind::Arrow
                } else {
                    TokenKind::Equals
                }
            }
            '"' => {
                sc.bump();
                let mut s = String::new();
                loop {
                    match sc.bump() {
                        None => {
                            return Err(DomlError::syntax(line, column, "unterminated string"));
                        }
                        Some('"') => break,
                        Some('\\') => match sc.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => {
                                return Err(DomlError::syntax(
                                    sc.line,
                                    sc.column.saturating_sub(1).max(1),
                                    "invalid escape sequence in string",
                                ));
                            }
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                TokenKind::Str(s)
            }
            c if c.is_ascii_digit()
                || (c == '-' && sc.peek_at(1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                sc.bump();
                while sc.peek().is_some_and(|d| d.is_ascii_digit()) {
                    sc.bump();
                }
                if sc.peek() == Some('.') && sc.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                    sc.bump();
                    while sc.peek().is_some_and(|d| d.is_ascii_digit()) {
                        sc.bump();
                    }
                }
                if sc.peek().is_some_and(is_ident_start) {
                    return Err(DomlError::syntax(sc.line, sc.column, "malformed number"));
                }
                let text = src[start..sc.pos].to_string();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| DomlError::syntax(line, column, "malformed number"))?;
                TokenKind::Number { value, text }
            }
            c if is_ident_start(c) => {
                while sc.peek().is_some_and(is_ident_continue) {
                    sc.bump();
                }
                TokenKind::Ident(src[start..sc.pos].to_string())
            }
            c if UNIT_SYMBOLS.contains(&c) => {
                sc.bump();
                TokenKind::Symbol(c)
            }
            other => {
                return Err(DomlError::syntax(
                    line,
                    column,
                    format!("unexpected character `{other}`"),
                ));
            }
        };
        out.push(Token {
            kind,
            line,
            column,
            start,
            end: sc.pos,
        });
    }
    Ok(out)
}
