//! Recursive-descent parser producing the surface AST.
//!
//! Accepted leniencies over the bare grammar:
//! * header may be written `box Name: (ins) => (outs), ...` (optional trailing `:`)
//!   as well as `box Name ((ins) -> (outs), ...):`;
//! * `provided Conds use Decl; ...; end` takes a list of declarations;
//! * a clause may start with `=>` (empty condition);
//! * the `;` after the last declaration is optional;
//! * a `;`-separated predicate list without `=>` directly following a clause
//!   continues that clause's assertions;
//! * `{}` denotes the empty set.

use num_rational::BigRational;

use super::ast::*;
use super::lexer::{Keyword, Punct, Token, TokenKind};
use crate::error::{CalError, Pos, Result};

/// Input fields (absent when the tuple is omitted) and output tuples.
type Signature = (Option<Vec<String>>, Vec<Vec<String>>);

pub struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
    eof: Pos,
}

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        let eof = tokens
            .last()
            .map(|t| Pos::new(t.pos.line, t.pos.col + t.lexeme.chars().count() as u32))
            .unwrap_or(Pos::new(1, 1));
        Parser { tokens, idx: 0, eof }
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.idx + n).map(|t| &t.kind)
    }

    fn pos(&self) -> Pos {
        self.tokens.get(self.idx).map_or(self.eof, |t| t.pos)
    }

    fn at_eof(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn is_punct(&self, p: Punct) -> bool {
        self.peek() == Some(&TokenKind::Punct(p))
    }

    fn is_keyword(&self, k: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(k))
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T> {
        let found = match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".to_string(),
        };
        Err(CalError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn expect_punct(&mut self, p: Punct, what: &str) -> Result<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn expect_eof(&self) -> Result<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    // ---- declarations ------------------------------------------------------

    pub fn declaration(&mut self) -> Result<SurfaceAst> {
        let header = self.header()?;
        let decls = self.decls(false)?;
        Ok(SurfaceAst { header, decls })
    }

    fn header(&mut self) -> Result<Header> {
        let pos = self.pos();
        if !self.is_keyword(Keyword::Box) {
            return self.error(&["`box`"]);
        }
        self.bump();
        let name = match self.peek() {
            Some(TokenKind::Ident(n)) => n.clone(),
            _ => return self.error(&["box name"]),
        };
        self.bump();

        let (input, outputs) = if self.is_punct(Punct::LParen) {
            self.bump();
            let sig = self.signature(true)?;
            self.expect_punct(Punct::RParen, "`)`")?;
            self.expect_punct(Punct::Colon, "`:`")?;
            sig
        } else if self.is_punct(Punct::Colon) {
            self.bump();
            let sig = self.signature(false)?;
            if self.is_punct(Punct::Colon) {
                self.bump();
            }
            sig
        } else {
            return self.error(&["`(`", "`:`"]);
        };
        Ok(Header {
            name,
            input,
            outputs,
            span: Span(pos),
        })
    }

    fn signature(&mut self, enclosed: bool) -> Result<Signature> {
        let input = if self.is_punct(Punct::LParen) {
            Some(self.tuple_type()?)
        } else {
            None
        };
        match self.peek() {
            Some(TokenKind::Arrow) | Some(TokenKind::Implies) => {
                self.bump();
            }
            _ => return self.error(&["`->`"]),
        }
        let mut outputs = Vec::new();
        if self.is_punct(Punct::LParen) {
            outputs.push(self.tuple_type()?);
            loop {
                let more = self.is_punct(Punct::Comma)
                    && (enclosed || self.peek_at(1) == Some(&TokenKind::Punct(Punct::LParen)));
                if !more {
                    break;
                }
                self.bump();
                outputs.push(self.tuple_type()?);
            }
        }
        Ok((input, outputs))
    }

    fn tuple_type(&mut self) -> Result<Vec<String>> {
        self.expect_punct(Punct::LParen, "`(`")?;
        let mut fields = Vec::new();
        if self.is_punct(Punct::RParen) {
            self.bump();
            return Ok(fields);
        }
        loop {
            match self.peek() {
                Some(TokenKind::Ident(n)) => {
                    fields.push(n.clone());
                    self.bump();
                }
                _ => return self.error(&["field name"]),
            }
            if self.is_punct(Punct::Comma) {
                self.bump();
            } else if self.is_punct(Punct::RParen) {
                self.bump();
                return Ok(fields);
            } else {
                return self.error(&["`,`", "`)`"]);
            }
        }
    }

    fn at_decls_end(&self, nested: bool) -> bool {
        if nested {
            self.is_keyword(Keyword::End)
        } else {
            self.at_eof() || self.is_keyword(Keyword::Box)
        }
    }

    fn decls(&mut self, nested: bool) -> Result<Vec<Decl>> {
        let mut decls: Vec<Decl> = Vec::new();
        loop {
            if self.at_decls_end(nested) {
                break;
            }
            if nested && self.at_eof() {
                return self.error(&["`end`"]);
            }
            if self.is_punct(Punct::Semi) {
                self.bump();
                continue;
            }
            if self.is_keyword(Keyword::Provided) {
                decls.push(Decl::Provided(self.provided()?));
            } else {
                let pos = self.pos();
                let conditions = if self.peek() == Some(&TokenKind::Implies) {
                    Vec::new()
                } else {
                    self.predicates()?
                };
                if self.peek() == Some(&TokenKind::Implies) {
                    self.bump();
                    let assertions = self.predicates()?;
                    decls.push(Decl::Clause(SurfaceClause {
                        conditions,
                        assertions,
                        span: Span(pos),
                    }));
                } else if let Some(Decl::Clause(prev)) = decls.last_mut() {
                    prev.assertions.extend(conditions);
                } else {
                    return self.error(&["`=>`"]);
                }
            }
            if self.is_punct(Punct::Semi) {
                self.bump();
            } else if !self.at_decls_end(nested) {
                return self.error(&["`;`"]);
            }
        }
        Ok(decls)
    }

    fn provided(&mut self) -> Result<ProvidedBlock> {
        let pos = self.pos();
        self.bump();
        let conditions = self.predicates()?;
        if !self.is_keyword(Keyword::Use) {
            return self.error(&["`use`", "`,`"]);
        }
        self.bump();
        let decls = self.decls(true)?;
        if !self.is_keyword(Keyword::End) {
            return self.error(&["`end`"]);
        }
        self.bump();
        Ok(ProvidedBlock {
            conditions,
            decls,
            span: Span(pos),
        })
    }

    pub fn predicates(&mut self) -> Result<Vec<SurfacePredicate>> {
        let mut preds = vec![self.predicate()?];
        while self.is_punct(Punct::Comma) {
            self.bump();
            preds.push(self.predicate()?);
        }
        Ok(preds)
    }

    pub fn predicate(&mut self) -> Result<SurfacePredicate> {
        let pos = self.pos();
        let lhs = self.expr()?;
        match self.peek() {
            Some(TokenKind::RelOp(op)) => {
                let op = *op;
                match &lhs {
                    Expr::Var(_) | Expr::Num(_) => {}
                    _ => {
                        return Err(CalError::Syntax {
                            pos,
                            expected: vec!["variable or constant on the left of a relation".into()],
                            found: "a compound term".into(),
                        })
                    }
                }
                self.bump();
                let rhs = self.expr()?;
                Ok(SurfacePredicate::Relation {
                    lhs,
                    op,
                    rhs,
                    span: Span(pos),
                })
            }
            Some(TokenKind::Equiv) => {
                self.bump();
                let rhs = self.expr()?;
                Ok(SurfacePredicate::Equivalence {
                    lhs,
                    rhs,
                    span: Span(pos),
                })
            }
            _ => self.error(&["`:=:`", "relational operator"]),
        }
    }

    // ---- terms ---------------------------------------------------------------

    /// Full expression: union of additive expressions.
    pub fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.additive()?;
        while self.peek() == Some(&TokenKind::Infix(InfixOp::Union)) {
            self.bump();
            let rhs = self.additive()?;
            lhs = Expr::Binary(InfixOp::Union, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = match self.peek() {
            Some(TokenKind::Infix(op @ (InfixOp::Plus | InfixOp::Minus)))
                if !matches!(self.peek_at(1), Some(TokenKind::Number(_))) =>
            {
                let op = *op;
                self.bump();
                let operand = self.product()?;
                match op {
                    InfixOp::Minus => Expr::Neg(Box::new(operand)),
                    _ => operand,
                }
            }
            _ => self.product()?,
        };
        while let Some(TokenKind::Infix(op @ (InfixOp::Plus | InfixOp::Minus))) = self.peek() {
            let op = *op;
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        while let Some(TokenKind::Infix(op @ (InfixOp::Times | InfixOp::Slash))) = self.peek() {
            let op = *op;
            self.bump();
            let rhs = self.power()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Expr> {
        let mut lhs = self.primary()?;
        while self.peek() == Some(&TokenKind::Infix(InfixOp::Hat)) {
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::Binary(InfixOp::Hat, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = match self.tokens.get(self.idx) {
            Some(t) => t,
            None => return self.error(&["term"]),
        };
        match &tok.kind {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::Num(n.clone()))
            }
            TokenKind::Infix(sign @ (InfixOp::Minus | InfixOp::Plus)) => {
                let sign = *sign;
                if let Some(TokenKind::Number(n)) = self.peek_at(1) {
                    self.bump();
                    self.bump();
                    let n: BigRational = n.clone();
                    Ok(Expr::Num(if sign == InfixOp::Minus { -n } else { n }))
                } else {
                    self.error(&["term"])
                }
            }
            TokenKind::Var(name) => {
                self.bump();
                Ok(Expr::Var(VarRef {
                    sigil: Sigil::Single,
                    name: name.clone(),
                    span: Span(tok.pos),
                }))
            }
            TokenKind::EnvVar(name) => {
                self.bump();
                Ok(Expr::Var(VarRef {
                    sigil: Sigil::Double,
                    name: name.clone(),
                    span: Span(tok.pos),
                }))
            }
            TokenKind::AnonVar => {
                self.bump();
                Ok(Expr::Var(VarRef {
                    sigil: Sigil::Anon,
                    name: "_".into(),
                    span: Span(tok.pos),
                }))
            }
            TokenKind::Ident(name) => {
                self.bump();
                if self.is_punct(Punct::LParen) {
                    self.bump();
                    let args = self.expr_list(Punct::RParen, "`)`")?;
                    if args.is_empty() {
                        return Err(CalError::Syntax {
                            pos: tok.pos,
                            expected: vec!["at least one argument".into()],
                            found: "`()`".into(),
                        });
                    }
                    Ok(Expr::Apply(name.clone(), args))
                } else {
                    Ok(Expr::Sym(name.clone()))
                }
            }
            TokenKind::Punct(Punct::LParen) => {
                self.bump();
                let mut members = self.expr_list(Punct::RParen, "`)`")?;
                match members.len() {
                    0 => Err(CalError::Syntax {
                        pos: tok.pos,
                        expected: vec!["term".into()],
                        found: "`()`".into(),
                    }),
                    1 => Ok(Expr::Group(Box::new(members.pop().expect("one member")))),
                    _ => Ok(Expr::Tuple(members)),
                }
            }
            TokenKind::Punct(Punct::LBrace) => {
                self.bump();
                let members = self.expr_list(Punct::RBrace, "`}`")?;
                Ok(Expr::Set(members))
            }
            _ => self.error(&["term"]),
        }
    }

    /// Comma-separated expressions up to and including the closing token.
    fn expr_list(&mut self, close: Punct, close_name: &str) -> Result<Vec<Expr>> {
        let mut out = Vec::new();
        if self.is_punct(close) {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.is_punct(Punct::Comma) {
                self.bump();
            } else if self.is_punct(close) {
                self.bump();
                return Ok(out);
            } else {
                return self.error(&["`,`", close_name]);
            }
        }
    }
}

/// Parse exactly one box declaration.
pub fn parse_declaration(tokens: &[Token]) -> Result<SurfaceAst> {
    let mut p = Parser::new(tokens);
    let ast = p.declaration()?;
    p.expect_eof()?;
    Ok(ast)
}

/// Parse a source file holding one or more declarations.
pub fn parse_declarations(tokens: &[Token]) -> Result<Vec<SurfaceAst>> {
    let mut p = Parser::new(tokens);
    let mut out = vec![p.declaration()?];
    while !p.at_eof() {
        out.push(p.declaration()?);
    }
    Ok(out)
}

/// Parse a single term.
pub fn parse_term(tokens: &[Token]) -> Result<Expr> {
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parse a comma-separated predicate list.
pub fn parse_predicates(tokens: &[Token]) -> Result<Vec<SurfacePredicate>> {
    let mut p = Parser::new(tokens);
    let preds = p.predicates()?;
    p.expect_eof()?;
    Ok(preds)
}
