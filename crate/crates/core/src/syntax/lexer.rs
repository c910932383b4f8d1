//! Tokenizer for CAL source text.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::{InfixOp, RelOp};
use crate::error::{CalError, Pos, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Box,
    Provided,
    Use,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Punct {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// `$name`
    Var(String),
    /// `$$name`
    EnvVar(String),
    /// `$_`
    AnonVar,
    /// Unsigned rational literal `n` or `n/d`, already in lowest terms.
    Number(BigRational),
    RelOp(RelOp),
    /// `->`
    Arrow,
    /// `=>`
    Implies,
    /// `:=:`
    Equiv,
    Punct(Punct),
    Infix(InfixOp),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Pos,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(
                f,
                "`{}`",
                match k {
                    Keyword::Box => "box",
                    Keyword::Provided => "provided",
                    Keyword::Use => "use",
                    Keyword::End => "end",
                }
            ),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Var(s) => write!(f, "variable `${s}`"),
            TokenKind::EnvVar(s) => write!(f, "variable `$${s}`"),
            TokenKind::AnonVar => f.write_str("`$_`"),
            TokenKind::Number(n) => write!(f, "number `{n}`"),
            TokenKind::RelOp(op) => write!(f, "`{}`", op.as_str()),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::Implies => f.write_str("`=>`"),
            TokenKind::Equiv => f.write_str("`:=:`"),
            TokenKind::Punct(p) => write!(
                f,
                "`{}`",
                match p {
                    Punct::LParen => "(",
                    Punct::RParen => ")",
                    Punct::LBrace => "{",
                    Punct::RBrace => "}",
                    Punct::Comma => ",",
                    Punct::Semi => ";",
                    Punct::Colon => ":",
                }
            ),
            TokenKind::Infix(op) => write!(f, "`{}`", op.as_str()),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Cursor {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            idx: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.idx + n).copied()
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }
}

/// Split CAL source into tokens. `--` starts a comment running to the end
/// of the line.
pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor::new(source);
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '-' && cur.peek_at(1) == Some('-') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let pos = cur.pos();
        let start = cur.idx;
        let kind = if is_ident_start(c) {
            let word = cur.take_while(is_ident_char);
            match word.as_str() {
                "box" => TokenKind::Keyword(Keyword::Box),
                "provided" => TokenKind::Keyword(Keyword::Provided),
                "use" => TokenKind::Keyword(Keyword::Use),
                "end" => TokenKind::Keyword(Keyword::End),
                _ => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, pos)?
        } else if c == '$' {
            lex_variable(&mut cur, pos)?
        } else {
            lex_operator(&mut cur, pos)?
        };
        let lexeme: String = cur.chars[start..cur.idx].iter().collect();
        tokens.push(Token { kind, lexeme, pos });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor, pos: Pos) -> Result<TokenKind> {
    let numer = cur.take_while(|c| c.is_ascii_digit());
    let numer: BigInt = numer.parse().expect("digits");
    // `n/d` with no whitespace is a single rational literal.
    let denom = if cur.peek() == Some('/') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        let d = cur.take_while(|c| c.is_ascii_digit());
        let d: BigInt = d.parse().expect("digits");
        if d.is_zero() {
            return Err(CalError::Lex {
                pos,
                message: "rational literal with zero denominator".into(),
            });
        }
        d
    } else {
        BigInt::from(1)
    };
    if cur.peek().is_some_and(is_ident_start) {
        return Err(CalError::Lex {
            pos,
            message: "identifier may not start with a digit".into(),
        });
    }
    Ok(TokenKind::Number(BigRational::new(numer, denom)))
}

fn lex_variable(cur: &mut Cursor, pos: Pos) -> Result<TokenKind> {
    cur.bump();
    let double = cur.peek() == Some('$');
    if double {
        cur.bump();
    }
    match cur.peek() {
        Some(c) if is_ident_start(c) => {}
        _ => {
            return Err(CalError::Lex {
                pos,
                message: "`$` must be followed by a letter or underscore".into(),
            })
        }
    }
    let name = cur.take_while(is_ident_char);
    Ok(if double {
        TokenKind::EnvVar(name)
    } else if name == "_" {
        TokenKind::AnonVar
    } else {
        TokenKind::Var(name)
    })
}

fn lex_operator(cur: &mut Cursor, pos: Pos) -> Result<TokenKind> {
    let c = cur.bump().expect("peeked");
    let next = cur.peek();
    let two = |cur: &mut Cursor, kind| {
        cur.bump();
        Ok(kind)
    };
    match (c, next) {
        (':', Some('=')) if cur.peek_at(1) == Some(':') => {
            cur.bump();
            cur.bump();
            Ok(TokenKind::Equiv)
        }
        ('=', Some('>')) => two(cur, TokenKind::Implies),
        ('-', Some('>')) => two(cur, TokenKind::Arrow),
        ('>', Some('=')) => two(cur, TokenKind::RelOp(RelOp::Ge)),
        ('<', Some('=')) => two(cur, TokenKind::RelOp(RelOp::Le)),
        ('!', Some('=')) => two(cur, TokenKind::RelOp(RelOp::Ne)),
        ('\\', Some('/')) => two(cur, TokenKind::Infix(InfixOp::Union)),
        ('=', _) => Ok(TokenKind::RelOp(RelOp::Eq)),
        ('>', _) => Ok(TokenKind::RelOp(RelOp::Gt)),
        ('<', _) => Ok(TokenKind::RelOp(RelOp::Lt)),
        ('+', _) => Ok(TokenKind::Infix(InfixOp::Plus)),
        ('-', _) => Ok(TokenKind::Infix(InfixOp::Minus)),
        ('*', _) => Ok(TokenKind::Infix(InfixOp::Times)),
        ('/', _) => Ok(TokenKind::Infix(InfixOp::Slash)),
        ('^', _) => Ok(TokenKind::Infix(InfixOp::Hat)),
        ('(', _) => Ok(TokenKind::Punct(Punct::LParen)),
        (')', _) => Ok(TokenKind::Punct(Punct::RParen)),
        ('{', _) => Ok(TokenKind::Punct(Punct::LBrace)),
        ('}', _) => Ok(TokenKind::Punct(Punct::RBrace)),
        (',', _) => Ok(TokenKind::Punct(Punct::Comma)),
        (';', _) => Ok(TokenKind::Punct(Punct::Semi)),
        (':', _) => Ok(TokenKind::Punct(Punct::Colon)),
        ('\\', _) => Err(CalError::Lex {
            pos,
            message: "backslash names are reserved; only `\\/` is allowed".into(),
        }),
        (other, _) => Err(CalError::Lex {
            pos,
            message: format!("unexpected character `{other}`"),
        }),
    }
}
