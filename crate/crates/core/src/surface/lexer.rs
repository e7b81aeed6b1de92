use std::fmt;

/// Token kinds of the statement and formula syntax. Keywords are plain
/// identifiers recognized case-insensitively by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Pipe,
    Star,
    Eq,
    Neq,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "{s}"),
            TokenKind::Str(s) => write!(f, "'{s}'"),
            TokenKind::Num(s) => write!(f, "{s}"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::LBrace => f.write_str("{"),
            TokenKind::RBrace => f.write_str("}"),
            TokenKind::Comma => f.write_str(","),
            TokenKind::Semi => f.write_str(";"),
            TokenKind::Dot => f.write_str("."),
            TokenKind::Pipe => f.write_str("|"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Eq => f.write_str("="),
            TokenKind::Neq => f.write_str("<>"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    /// Tokenizes the whole input. `#` starts a comment running to the end
    /// of the line.
    pub fn tokenize(mut self) -> Result<Vec<Token>, super::ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
                self.bump();
            }
            if self.peek() == Some(b'#') {
                while !matches!(self.peek(), None | Some(b'\n')) {
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let Some(b) = self.peek() else {
                out.push(Token {
                    kind: TokenKind::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let kind = match b {
                b'(' => {
                    self.bump();
                    TokenKind::LParen
                }
                b')' => {
                    self.bump();
                    TokenKind::RParen
                }
                b'{' => {
                    self.bump();
                    TokenKind::LBrace
                }
                b'}' => {
                    self.bump();
                    TokenKind::RBrace
                }
                b',' => {
                    self.bump();
                    TokenKind::Comma
                }
                b';' => {
                    self.bump();
                    TokenKind::Semi
                }
                b'.' => {
                    self.bump();
                    TokenKind::Dot
                }
                b'|' => {
                    self.bump();
                    TokenKind::Pipe
                }
                b'*' => {
                    self.bump();
                    TokenKind::Star
                }
                b'=' => {
                    self.bump();
                    TokenKind::Eq
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        TokenKind::Neq
                    } else {
                        return Err(super::ParseError::new(line, col, "expected '<>'"));
                    }
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        TokenKind::Neq
                    } else {
                        return Err(super::ParseError::new(line, col, "expected '!='"));
                    }
                }
                b'\'' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'\'') => break,
                            Some(c) => s.push(c as char),
                            None => {
                                return Err(super::ParseError::new(
                                    line,
                                    col,
                                    "unterminated string literal",
                                ))
                            }
                        }
                    }
                    TokenKind::Str(s)
                }
                b'0'..=b'9' => {
                    let mut s = String::new();
                    while matches!(self.peek(), Some(b'0'..=b'9')) {
                        s.push(self.bump().unwrap() as char);
                    }
                    TokenKind::Num(s)
                }
                b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                    let mut s = String::new();
                    while matches!(
                        self.peek(),
                        Some(b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_')
                    ) {
                        s.push(self.bump().unwrap() as char);
                    }
                    TokenKind::Ident(s)
                }
                other => {
                    return Err(super::ParseError::new(
                        line,
                        col,
                        format!("unexpected character '{}'", other as char),
                    ))
                }
            };
            out.push(Token { kind, line, col });
        }
    }
}
