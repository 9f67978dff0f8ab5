// SPDX-License-Identifier: MIT
use super::error::{DslError, DslErrorKind, Position};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Position,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' || (c == '/' && src_peek2(&cur) == Some('/')) {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            '{' => single(&mut cur, Tok::LBrace),
            '}' => single(&mut cur, Tok::RBrace),
            '[' => single(&mut cur, Tok::LBracket),
            ']' => single(&mut cur, Tok::RBracket),
            ':' => single(&mut cur, Tok::Colon),
            ',' => single(&mut cur, Tok::Comma),
            '"' => lex_string(&mut cur, pos)?,
            '-' => {
                cur.bump();
                match cur.peek() {
                    Some('>') => {
                        cur.bump();
                        Tok::Arrow
                    }
                    Some(d) if d.is_ascii_digit() || d == '.' => lex_number(&mut cur, pos, true)?,
                    _ => {
                        return Err(DslError::at(
                            pos,
                            DslErrorKind::Syntax("expected `->` or a number after `-`".into()),
                        ))
                    }
                }
            }
            c if c.is_ascii_digit() || c == '.' || c == '+' => {
                if c == '+' {
                    cur.bump();
                }
                lex_number(&mut cur, pos, false)?
            }
            c if c.is_ascii_alphabetic() || c == '_' => lex_ident(&mut cur),
            other => {
                return Err(DslError::at(
                    pos,
                    DslErrorKind::Syntax(format!("unexpected character `{other}`")),
                ))
            }
        };
        out.push(Token { tok, pos });
    }
}

fn src_peek2(cur: &Cursor<'_>) -> Option<char> {
    let mut it = cur.chars.clone();
    it.next();
    it.next()
}

fn single(cur: &mut Cursor<'_>, tok: Tok) -> Tok {
    cur.bump();
    tok
}

fn lex_ident(cur: &mut Cursor<'_>) -> Tok {
    let mut s = String::new();
    while let Some(c) = cur.peek() {
        if ident_char(c) {
            s.push(c);
            cur.bump();
        } else if c == '-' {
            // `-` continues an identifier only when another identifier char follows
            let mut it = cur.chars.clone();
            it.next();
            match it.next() {
                Some(n) if ident_char(n) => {
                    s.push('-');
                    cur.bump();
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    Tok::Ident(s)
}

fn lex_number(cur: &mut Cursor<'_>, pos: Position, negative: bool) -> Result<Tok, DslError> {
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    while let Some(c) = cur.peek() {
        let exp_sign = (c == '+' || c == '-') && matches!(s.chars().last(), Some('e' | 'E'));
        if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
            s.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Tok::Num)
        .ok_or_else(|| DslError::at(pos, DslErrorKind::Syntax(format!("malformed number `{s}`"))))
}

fn lex_string(cur: &mut Cursor<'_>, pos: Position) -> Result<Tok, DslError> {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => {
                return Err(DslError::at(
                    pos,
                    DslErrorKind::Syntax("unterminated string".into()),
                ))
            }
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => {
                let esc_pos = cur.pos();
                match cur.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    other => {
                        return Err(DslError::at(
                            esc_pos,
                            DslErrorKind::Syntax(format!(
                                "unknown escape `\\{}`",
                                other.map(String::from).unwrap_or_default()
                            )),
                        ))
                    }
                }
            }
            Some(c) => s.push(c),
        }
    }
}
