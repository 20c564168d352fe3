//! Recursive-descent parser with a light layout rule: a token that starts a
//! line at or left of the enclosing block's column ends the current
//! construct. Explicit braces and `;` are accepted everywhere a block is.

use super::ast::*;
use super::lexer::{lex, Kw, Tok, Token};
use super::SyntaxError;
use crate::lang::{Span, LIST};

type PResult<T> = Result<T, SyntaxError>;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    limits: Vec<u32>,
    logic: bool,
}

/// Lex and parse a whole source file.
pub fn parse_program(path: &str, text: &str) -> PResult<SourceFile> {
    let toks = lex(text)?;
    let mut p = Parser::new(toks);
    let items = p.items()?;
    Ok(SourceFile { path: path.to_string(), text: text.to_string(), items })
}

/// Parse a standalone refinement predicate (used for qualifier files).
pub fn parse_pred(text: &str) -> PResult<SExpr> {
    let mut p = Parser::new(lex(text)?);
    p.logic = true;
    p.limits.push(0);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parse a standalone type.
pub fn parse_type(text: &str) -> PResult<SSig> {
    let mut p = Parser::new(lex(text)?);
    p.limits.push(0);
    let t = p.sig()?;
    p.expect_eof()?;
    Ok(t)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Assoc {
    Left,
    Right,
    Non,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, limits: Vec::new(), logic: false }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn from(&self, start: Span) -> Span {
        start.to(self.prev_span())
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn limit(&self) -> u32 {
        self.limits.last().copied().unwrap_or(0)
    }

    /// True when the current construct cannot continue at this token.
    fn at_end(&self) -> bool {
        let t = self.tok();
        matches!(t.tok, Tok::Eof | Tok::AnnOpen | Tok::AnnClose) || (t.first_on_line && t.col() <= self.limit())
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        Err(SyntaxError {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek()),
        })
    }

    fn is_op(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if o == s)
    }

    fn eat_op(&mut self, s: &str) -> bool {
        if self.is_op(s) && !self.at_end() {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, s: &str) -> PResult<()> {
        if self.is_op(s) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(&t.to_string())
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err("end of input")
        }
    }

    fn lower(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Lower(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("a lower-case identifier"),
        }
    }

    fn upper(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Upper(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("an upper-case identifier"),
        }
    }

    fn with_limit<T>(&mut self, lim: u32, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.limits.push(lim);
        let r = f(self);
        self.limits.pop();
        r
    }

    fn with_logic<T>(&mut self, logic: bool, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let old = self.logic;
        self.logic = logic;
        let r = f(self);
        self.logic = old;
        r
    }

    // ---------------------------------------------------------------- items

    fn items(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Semi => {
                    self.bump();
                }
                Tok::AnnOpen => {
                    self.bump();
                    loop {
                        match self.peek() {
                            Tok::AnnClose => {
                                self.bump();
                                break;
                            }
                            Tok::Semi => {
                                self.bump();
                            }
                            _ => {
                                let col = self.tok().col();
                                let ann = self.with_limit(col, |p| p.annotation())?;
                                items.push(Item::Ann(ann));
                                if !matches!(self.peek(), Tok::AnnClose | Tok::Semi) && !self.tok().first_on_line {
                                    return self.err("`@-}` or a new line");
                                }
                            }
                        }
                    }
                }
                _ => {
                    let col = self.tok().col();
                    let item = self.with_limit(col, |p| p.code_item())?;
                    items.push(item);
                    if !matches!(self.peek(), Tok::Eof | Tok::Semi | Tok::AnnOpen) && !self.tok().first_on_line {
                        return self.err("end of declaration");
                    }
                }
            }
        }
        Ok(items)
    }

    fn annotation(&mut self) -> PResult<Annotation> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Kw(Kw::Type) => {
                self.bump();
                let name = self.upper()?;
                let mut params = Vec::new();
                while let Tok::Lower(s) | Tok::Upper(s) = self.peek().clone() {
                    self.bump();
                    params.push(s);
                }
                self.expect_op("=")?;
                let body = self.ty()?;
                Ok(Annotation::Alias(SAlias { name, params, body, span: self.from(start) }))
            }
            Tok::Kw(Kw::Data) => Ok(Annotation::Data(self.data_decl()?)),
            Tok::Kw(Kw::Measure) => {
                self.bump();
                let name = self.lower()?;
                Ok(Annotation::Measure { name, span: self.from(start) })
            }
            Tok::Kw(Kw::Qualif) => {
                self.bump();
                let name = self.upper()?;
                self.expect(&Tok::LParen)?;
                let mut params = Vec::new();
                self.with_limit(0, |p| {
                    loop {
                        let x = p.lower()?;
                        p.expect_op(":")?;
                        let t = p.btype()?;
                        params.push((x, t));
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    p.expect(&Tok::RParen)
                })?;
                self.expect_op(":")?;
                let body = self.with_logic(true, |p| p.expr())?;
                Ok(Annotation::Qualif(SQualif { name, params, body, span: self.from(start) }))
            }
            Tok::Lower(name) => {
                self.bump();
                self.expect_op("::")?;
                let sig = self.sig()?;
                Ok(Annotation::Sig { name, sig, span: self.from(start) })
            }
            _ => self.err("an annotation (`type`, `data`, `measure`, `qualif` or a signature)"),
        }
    }

    fn data_decl(&mut self) -> PResult<SData> {
        let start = self.span();
        self.expect(&Tok::Kw(Kw::Data))?;
        let name = self.upper()?;
        let mut params = Vec::new();
        while let Tok::Lower(s) = self.peek().clone() {
            self.bump();
            params.push(s);
        }
        let mut ctors = Vec::new();
        if self.eat_op("=") {
            loop {
                ctors.push(self.ctor_decl()?);
                if !self.eat_op("|") {
                    break;
                }
            }
        }
        Ok(SData { name, params, ctors, span: self.from(start) })
    }

    fn ctor_decl(&mut self) -> PResult<SCtor> {
        let start = self.span();
        let name = match self.peek().clone() {
            Tok::Upper(s) => {
                self.bump();
                s
            }
            Tok::LParen => {
                self.bump();
                let op = match self.peek().clone() {
                    Tok::Op(o) if o.starts_with(':') => o,
                    _ => return self.err("a constructor operator"),
                };
                self.bump();
                self.expect(&Tok::RParen)?;
                op
            }
            _ => return self.err("a constructor name"),
        };
        let mut fields = Vec::new();
        if matches!(self.peek(), Tok::LBrace) && !self.at_end() {
            self.bump();
            self.with_limit(0, |p| {
                if !matches!(p.peek(), Tok::RBrace) {
                    loop {
                        let f = p.lower()?;
                        p.expect_op("::")?;
                        let t = p.ty()?;
                        fields.push((Some(f), t));
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                p.expect(&Tok::RBrace)
            })?;
        } else {
            while self.starts_atype() && !self.at_end() {
                fields.push((None, self.atype()?));
            }
        }
        Ok(SCtor { name, fields, span: self.from(start) })
    }

    fn code_item(&mut self) -> PResult<Item> {
        match self.peek() {
            Tok::Kw(Kw::Data) => Ok(Item::Data(self.data_decl()?)),
            _ => Ok(Item::Decl(self.decl()?)),
        }
    }

    // ---------------------------------------------------------------- decls

    fn decl(&mut self) -> PResult<SDecl> {
        let start = self.span();
        if let Tok::Lower(name) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Op(o) if o == "::") || matches!(self.peek_at(1), Tok::Comma) {
                self.bump();
                let mut names = vec![name];
                while self.eat(&Tok::Comma) {
                    names.push(self.lower()?);
                }
                self.expect_op("::")?;
                let sig = self.sig()?;
                return Ok(SDecl::Sig { names, sig, span: self.from(start) });
            }
            if !matches!(self.peek_at(1), Tok::Op(o) if o == "@" || o.starts_with(':')) {
                self.bump();
                let mut args = Vec::new();
                while !self.is_op("=") && !self.is_op("|") {
                    if self.at_end() {
                        return self.err("`=` or `|`");
                    }
                    args.push(self.apat()?);
                }
                let rhs = self.rhs("=")?;
                return Ok(SDecl::Fun { name, args, rhs, span: self.from(start) });
            }
        }
        let pat = self.pat()?;
        let rhs = self.rhs("=")?;
        Ok(SDecl::Pat { pat, rhs, span: self.from(start) })
    }

    fn rhs(&mut self, sep: &str) -> PResult<Rhs> {
        let body = if self.is_op("|") {
            let mut gs = Vec::new();
            while self.eat_op("|") {
                let g = self.expr()?;
                self.expect_op(sep)?;
                let e = self.expr()?;
                gs.push((g, e));
            }
            RhsBody::Guarded(gs)
        } else {
            self.expect_op(sep)?;
            RhsBody::Plain(self.expr()?)
        };
        let mut wheres = Vec::new();
        if matches!(self.peek(), Tok::Kw(Kw::Where)) && !self.at_end() {
            self.bump();
            wheres = self.block(|p| p.decl())?;
        }
        Ok(Rhs { body, wheres })
    }

    /// A layout or explicitly braced block of items.
    fn block<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::LBrace) {
            self.bump();
            self.with_limit(0, |p| {
                while !matches!(p.peek(), Tok::RBrace) {
                    if p.eat(&Tok::Semi) {
                        continue;
                    }
                    out.push(item(p)?);
                    if !matches!(p.peek(), Tok::RBrace | Tok::Semi) {
                        return p.err("`;` or `}`");
                    }
                }
                p.bump();
                Ok(())
            })?;
            return Ok(out);
        }
        if self.at_end() {
            return self.err("a block");
        }
        let col = self.tok().col();
        if col <= self.limit() {
            return self.err("an indented block");
        }
        loop {
            out.push(self.with_limit(col, &mut item)?);
            if self.eat(&Tok::Semi) {
                if self.at_end() && !(self.tok().first_on_line && self.tok().col() == col) {
                    break;
                }
                continue;
            }
            let t = self.tok();
            if t.first_on_line && t.col() == col && !matches!(t.tok, Tok::Eof | Tok::AnnOpen | Tok::AnnClose) {
                continue;
            }
            break;
        }
        Ok(out)
    }

    // ---------------------------------------------------------------- types

    fn sig(&mut self) -> PResult<SSig> {
        let ord = self.context()?;
        let ty = self.ty()?;
        Ok(SSig { ord, ty })
    }

    /// Optional `(Ord a, Ord b) =>` context.
    fn context(&mut self) -> PResult<Vec<String>> {
        let save = self.pos;
        let mut vars = Vec::new();
        let paren = self.eat(&Tok::LParen);
        loop {
            match (self.peek().clone(), self.peek_at(1).clone()) {
                (Tok::Upper(_), Tok::Lower(a)) => {
                    self.bump();
                    self.bump();
                    vars.push(a);
                }
                _ => {
                    self.pos = save;
                    return Ok(Vec::new());
                }
            }
            if !(paren && self.eat(&Tok::Comma)) {
                break;
            }
        }
        if paren && !self.eat(&Tok::RParen) {
            self.pos = save;
            return Ok(Vec::new());
        }
        if !self.is_op("=>") {
            self.pos = save;
            return Ok(Vec::new());
        }
        self.bump();
        Ok(vars)
    }

    pub fn ty(&mut self) -> PResult<SType> {
        let start = self.span();
        let binder = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Lower(x), Tok::Op(o)) if o == ":" => {
                self.bump();
                self.bump();
                Some(x)
            }
            _ => None,
        };
        let dom = self.btype()?;
        if self.eat_op("->") {
            let cod = self.ty()?;
            return Ok(SType { span: self.from(start), kind: STypeKind::Fun(binder, Box::new(dom), Box::new(cod)) });
        }
        if binder.is_some() {
            return self.err("`->` after a dependent binder");
        }
        Ok(dom)
    }

    fn starts_atype(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Upper(_) | Tok::Lower(_) | Tok::LParen | Tok::LBracket | Tok::LBrace | Tok::Int(_)
        )
    }

    fn btype(&mut self) -> PResult<SType> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Upper(c) => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_atype() && !self.at_end() {
                    args.push(self.atype()?);
                }
                Ok(SType { span: self.from(start), kind: STypeKind::Con(c, args) })
            }
            Tok::Lower(x) if !matches!(self.peek_at(1), Tok::Op(o) if o == ":") => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_atype() && !self.at_end() && !matches!(self.peek_at(1), Tok::Op(o) if o == ":") {
                    args.push(self.atype()?);
                }
                if args.is_empty() {
                    Ok(SType { span: self.from(start), kind: STypeKind::Var(x) })
                } else {
                    Ok(SType { span: self.from(start), kind: STypeKind::VarApp(x, args) })
                }
            }
            _ => self.atype(),
        }
    }

    fn atype(&mut self) -> PResult<SType> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Upper(c) => {
                self.bump();
                STypeKind::Con(c, Vec::new())
            }
            Tok::Lower(x) => {
                self.bump();
                STypeKind::Var(x)
            }
            Tok::Int(n) => {
                self.bump();
                STypeKind::PredArg(Box::new(SExpr { span: self.from(start), kind: SExprKind::Int(n) }))
            }
            Tok::LBracket => {
                self.bump();
                let t = self.with_limit(0, |p| p.ty())?;
                self.expect(&Tok::RBracket)?;
                STypeKind::Con(LIST.to_string(), vec![t])
            }
            Tok::LParen => {
                self.bump();
                let mut ts = Vec::new();
                self.with_limit(0, |p| {
                    if !matches!(p.peek(), Tok::RParen) {
                        loop {
                            ts.push(p.ty()?);
                            if !p.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    p.expect(&Tok::RParen)
                })?;
                match ts.len() {
                    0 => STypeKind::Con("()".into(), Vec::new()),
                    1 => return Ok(ts.pop().unwrap()),
                    n => STypeKind::Con(crate::lang::tuple_name(n), ts),
                }
            }
            Tok::LBrace => {
                self.bump();
                let k = self.with_limit(0, |p| {
                    let k = match (p.peek().clone(), p.peek_at(1).clone()) {
                        (Tok::Lower(v), Tok::Op(o)) if o == ":" => {
                            p.bump();
                            p.bump();
                            let t = p.ty()?;
                            p.expect_op("|")?;
                            let e = p.with_logic(true, |p| p.expr())?;
                            STypeKind::Refine(v, Box::new(t), Box::new(e))
                        }
                        _ => STypeKind::PredArg(Box::new(p.with_logic(true, |p| p.expr())?)),
                    };
                    p.expect(&Tok::RBrace)?;
                    Ok(k)
                })?;
                k
            }
            _ => return self.err("a type"),
        };
        Ok(SType { span: self.from(start), kind })
    }

    // ---------------------------------------------------------------- patterns

    fn pat(&mut self) -> PResult<SPat> {
        let start = self.span();
        let lhs = self.lpat()?;
        if let Tok::Op(o) = self.peek().clone() {
            if o.starts_with(':') && o != "::" && !self.at_end() {
                self.bump();
                let rhs = self.pat()?;
                return Ok(SPat { span: self.from(start), kind: SPatKind::Con(o, vec![lhs, rhs]) });
            }
        }
        Ok(lhs)
    }

    fn lpat(&mut self) -> PResult<SPat> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Upper(c) => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_apat() && !self.at_end() {
                    args.push(self.apat()?);
                }
                Ok(SPat { span: self.from(start), kind: SPatKind::Con(c, args) })
            }
            Tok::Op(o) if o == "-" => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(SPat { span: self.from(start), kind: SPatKind::Int(-n) })
                    }
                    _ => self.err("an integer literal"),
                }
            }
            _ => self.apat(),
        }
    }

    fn starts_apat(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Lower(_) | Tok::Upper(_) | Tok::Underscore | Tok::Int(_) | Tok::LParen | Tok::LBracket
        )
    }

    fn apat(&mut self) -> PResult<SPat> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Lower(x) => {
                self.bump();
                if self.is_op("@") {
                    self.bump();
                    let p = self.apat()?;
                    SPatKind::As(x, Box::new(p))
                } else {
                    SPatKind::Var(x)
                }
            }
            Tok::Underscore => {
                self.bump();
                SPatKind::Wild
            }
            Tok::Upper(c) => {
                self.bump();
                SPatKind::Con(c, Vec::new())
            }
            Tok::Int(n) => {
                self.bump();
                SPatKind::Int(n)
            }
            Tok::LBracket => {
                self.bump();
                let mut ps = Vec::new();
                self.with_limit(0, |p| {
                    if !matches!(p.peek(), Tok::RBracket) {
                        loop {
                            ps.push(p.pat()?);
                            if !p.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    p.expect(&Tok::RBracket)
                })?;
                SPatKind::List(ps)
            }
            Tok::LParen => {
                self.bump();
                let mut ps = Vec::new();
                self.with_limit(0, |p| {
                    if !matches!(p.peek(), Tok::RParen) {
                        loop {
                            ps.push(p.pat()?);
                            if !p.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    p.expect(&Tok::RParen)
                })?;
                match ps.len() {
                    0 => SPatKind::Con("()".into(), Vec::new()),
                    1 => return Ok(ps.pop().unwrap()),
                    _ => SPatKind::Tuple(ps),
                }
            }
            _ => return self.err("a pattern"),
        };
        Ok(SPat { span: self.from(start), kind })
    }

    // ---------------------------------------------------------------- expressions

    fn binop_info(&self, op: &str) -> Option<(u8, Assoc)> {
        Some(match op {
            "=>" | "==>" | "<=>" if self.logic => (1, Assoc::Right),
            "||" => (2, Assoc::Right),
            "&&" => (3, Assoc::Right),
            "==" | "/=" | "!=" | "<" | "<=" | ">" | ">=" => (4, Assoc::Non),
            "=" if self.logic => (4, Assoc::Non),
            "+" | "-" => (6, Assoc::Left),
            "*" => (7, Assoc::Left),
            "=" | "|" | "->" | "<-" | "::" | "@" | "\\" | "=>" | "==>" | "<=>" | ".." => return None,
            o if o.starts_with(':') => (5, Assoc::Right),
            _ => (9, Assoc::Left),
        })
    }

    /// The binary operator at the cursor, if any.
    fn peek_binop(&self) -> Option<(String, u8, Assoc, usize)> {
        if self.at_end() {
            return None;
        }
        match self.peek() {
            Tok::Op(o) => {
                let (p, a) = self.binop_info(o)?;
                Some((o.clone(), p, a, 1))
            }
            Tok::Backtick => match (self.peek_at(1), self.peek_at(2)) {
                (Tok::Lower(f), Tok::Backtick) => Some((f.clone(), 9, Assoc::Left, 3)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn expr(&mut self) -> PResult<SExpr> {
        self.op_expr(0)
    }

    fn op_expr(&mut self, min: u8) -> PResult<SExpr> {
        let start = self.span();
        let mut lhs = self.operand()?;
        while let Some((op, prec, assoc, width)) = self.peek_binop() {
            if prec < min {
                break;
            }
            for _ in 0..width {
                self.bump();
            }
            let next = if assoc == Assoc::Right { prec } else { prec + 1 };
            let rhs = self.op_expr(next)?;
            lhs = SExpr { span: self.from(start), kind: SExprKind::BinOp(op, Box::new(lhs), Box::new(rhs)) };
            if assoc == Assoc::Non {
                if let Some((_, p2, _, _)) = self.peek_binop() {
                    if p2 == prec {
                        return self.err("parentheses around a non-associative operator");
                    }
                }
            }
        }
        Ok(lhs)
    }

    fn operand(&mut self) -> PResult<SExpr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Op(o) if o == "-" => {
                self.bump();
                let e = self.fexp()?;
                let kind = match e.kind {
                    SExprKind::Int(n) => SExprKind::Int(-n),
                    _ => SExprKind::Neg(Box::new(e)),
                };
                Ok(SExpr { span: self.from(start), kind })
            }
            Tok::Op(o) if o == "\\" => {
                self.bump();
                let mut ps = Vec::new();
                while !self.is_op("->") {
                    ps.push(self.apat()?);
                }
                self.bump();
                let body = self.expr()?;
                Ok(SExpr { span: self.from(start), kind: SExprKind::Lam(ps, Box::new(body)) })
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                let c = self.expr()?;
                self.expect(&Tok::Kw(Kw::Then))?;
                let a = self.expr()?;
                self.expect(&Tok::Kw(Kw::Else))?;
                let b = self.expr()?;
                Ok(SExpr { span: self.from(start), kind: SExprKind::If(Box::new(c), Box::new(a), Box::new(b)) })
            }
            Tok::Kw(Kw::Case) => {
                self.bump();
                let scrut = self.expr()?;
                self.expect(&Tok::Kw(Kw::Of))?;
                let alts = self.block(|p| {
                    let s = p.span();
                    let pat = p.pat()?;
                    let rhs = p.rhs("->")?;
                    Ok(SAlt { pat, rhs, span: p.from(s) })
                })?;
                Ok(SExpr { span: self.from(start), kind: SExprKind::Case(Box::new(scrut), alts) })
            }
            Tok::Kw(Kw::Let) => {
                self.bump();
                let decls = self.block(|p| p.decl())?;
                self.expect(&Tok::Kw(Kw::In))?;
                let body = self.expr()?;
                Ok(SExpr { span: self.from(start), kind: SExprKind::Let(decls, Box::new(body)) })
            }
            _ => self.fexp(),
        }
    }

    fn starts_aexp(&self) -> bool {
        match self.peek() {
            Tok::Lower(_) | Tok::Upper(_) | Tok::Int(_) | Tok::Str(_) | Tok::LParen | Tok::LBracket => true,
            Tok::Kw(Kw::Otherwise) => true,
            Tok::Star | Tok::Underscore => self.logic,
            _ => false,
        }
    }

    fn fexp(&mut self) -> PResult<SExpr> {
        let start = self.span();
        let mut e = self.aexp()?;
        while self.starts_aexp() && !self.at_end() {
            let a = self.aexp()?;
            e = SExpr { span: self.from(start), kind: SExprKind::App(Box::new(e), Box::new(a)) };
        }
        Ok(e)
    }

    fn aexp(&mut self) -> PResult<SExpr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Lower(x) => {
                self.bump();
                SExprKind::Var(x)
            }
            Tok::Upper(c) => {
                self.bump();
                SExprKind::Con(c)
            }
            Tok::Kw(Kw::Otherwise) => {
                self.bump();
                SExprKind::Con("True".into())
            }
            Tok::Int(n) => {
                self.bump();
                SExprKind::Int(n)
            }
            Tok::Str(s) => {
                self.bump();
                SExprKind::Str(s)
            }
            Tok::Star | Tok::Underscore if self.logic => {
                self.bump();
                let sort = if self.is_op(":") {
                    self.bump();
                    Some(Box::new(self.atype()?))
                } else {
                    None
                };
                SExprKind::Wild(sort)
            }
            Tok::LParen => {
                self.bump();
                return self.with_limit(0, |p| p.paren_expr(start));
            }
            Tok::LBracket => {
                self.bump();
                return self.with_limit(0, |p| p.bracket_expr(start));
            }
            _ => return self.err("an expression"),
        };
        Ok(SExpr { span: self.from(start), kind })
    }

    fn paren_expr(&mut self, start: Span) -> PResult<SExpr> {
        if let Tok::Op(o) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::RParen) {
                self.bump();
                self.bump();
                let kind = if o.starts_with(':') { SExprKind::Con(o) } else { SExprKind::Var(o) };
                return Ok(SExpr { span: self.from(start), kind });
            }
        }
        if self.eat(&Tok::RParen) {
            return Ok(SExpr { span: self.from(start), kind: SExprKind::Con("()".into()) });
        }
        let mut es = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            es.push(self.expr()?);
        }
        self.expect(&Tok::RParen)?;
        if es.len() == 1 {
            let mut e = es.pop().unwrap();
            e.span = self.from(start);
            return Ok(e);
        }
        Ok(SExpr { span: self.from(start), kind: SExprKind::Tuple(es) })
    }

    fn bracket_expr(&mut self, start: Span) -> PResult<SExpr> {
        if self.eat(&Tok::RBracket) {
            return Ok(SExpr { span: self.from(start), kind: SExprKind::Con("[]".into()) });
        }
        let first = self.expr()?;
        if self.is_op("|") {
            self.bump();
            let mut quals = Vec::new();
            loop {
                quals.push(self.qual()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBracket)?;
            return Ok(SExpr { span: self.from(start), kind: SExprKind::Comp(Box::new(first), quals) });
        }
        let mut es = vec![first];
        while self.eat(&Tok::Comma) {
            es.push(self.expr()?);
        }
        self.expect(&Tok::RBracket)?;
        Ok(SExpr { span: self.from(start), kind: SExprKind::List(es) })
    }

    fn qual(&mut self) -> PResult<SQual> {
        let save = self.pos;
        if let Ok(p) = self.pat() {
            if self.is_op("<-") {
                self.bump();
                let e = self.expr()?;
                return Ok(SQual::Gen(p, e));
            }
        }
        self.pos = save;
        Ok(SQual::Guard(self.expr()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> SourceFile {
        match parse_program("t.lm", src) {
            Ok(f) => f,
            Err(e) => panic!("{}: {}", e.span, e.message),
        }
    }

    #[test]
    fn nat_alias() {
        let f = parse("{-@ type Nat = {v:Int | 0 <= v} @-}");
        let Item::Ann(Annotation::Alias(a)) = &f.items[0] else { panic!() };
        assert_eq!(a.name, "Nat");
        let STypeKind::Refine(v, t, p) = &a.body.kind else { panic!() };
        assert_eq!(v, "v");
        assert_eq!(t.kind, STypeKind::Con("Int".into(), vec![]));
        assert!(matches!(&p.kind, SExprKind::BinOp(o, _, _) if o == "<="));
    }

    #[test]
    fn inclist_data() {
        let f = parse("{-@ data IncList a = Emp\n                   | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}");
        let Item::Ann(Annotation::Data(d)) = &f.items[0] else { panic!() };
        assert_eq!(d.ctors.len(), 2);
        assert_eq!(d.ctors[1].name, ":<");
        assert_eq!(d.ctors[1].fields[1].0.as_deref(), Some("tl"));
        let STypeKind::Con(c, args) = &d.ctors[1].fields[1].1.kind else { panic!() };
        assert_eq!(c, "IncList");
        assert!(matches!(args[0].kind, STypeKind::Refine(..)));
    }

    #[test]
    fn ord_context() {
        let f = parse("{-@ insert :: (Ord a) => a -> IncList a -> IncList a @-}");
        let Item::Ann(Annotation::Sig { name, sig, .. }) = &f.items[0] else { panic!() };
        assert_eq!(name, "insert");
        assert_eq!(sig.ord, vec!["a".to_string()]);
        assert!(matches!(sig.ty.kind, STypeKind::Fun(None, _, _)));
    }

    #[test]
    fn guards_and_where() {
        let src = "insert y (x :< xs) | y <= x    = y :< x :< xs\n                   | otherwise = x :< insert y xs\n  where z = 1\n        w = 2\nnext = 3\n";
        let f = parse(src);
        assert_eq!(f.items.len(), 2);
        let Item::Decl(SDecl::Fun { args, rhs, .. }) = &f.items[0] else { panic!() };
        assert_eq!(args.len(), 2);
        let RhsBody::Guarded(gs) = &rhs.body else { panic!() };
        assert_eq!(gs.len(), 2);
        assert_eq!(rhs.wheres.len(), 2);
    }

    #[test]
    fn multiline_annotation_items() {
        let f = parse("{-@ type NEList a = {v:[a] | notEmpty v}\n    head :: NEList a -> a  @-}");
        assert_eq!(f.items.len(), 2);
    }

    #[test]
    fn case_and_comprehension() {
        let f = parse("f xs = case xs of\n  [] -> 0\n  (y:ys) -> length [z | z <- ys, z < y]\n");
        let Item::Decl(SDecl::Fun { rhs, .. }) = &f.items[0] else { panic!() };
        let RhsBody::Plain(SExpr { kind: SExprKind::Case(_, alts), .. }) = &rhs.body else { panic!() };
        assert_eq!(alts.len(), 2);
    }

    #[test]
    fn alias_value_arguments() {
        let t = parse_type("x:a -> l:AVLL a x -> AVLE a {height l} (nodeHeight l r)").unwrap();
        let STypeKind::Fun(Some(x), _, _) = &t.ty.kind else { panic!() };
        assert_eq!(x, "x");
    }

    #[test]
    fn syntax_error_has_location() {
        let e = parse_program("t.lm", "f x = \n").unwrap_err();
        assert!(e.message.starts_with("expected an expression"));
        let e = parse_program("t.lm", "{-@ head :: @-}").unwrap_err();
        assert_eq!(e.span.start.col, 13);
    }

    #[test]
    fn wildcard_predicates() {
        let p = parse_pred("v < len ⋆:[Int]").unwrap();
        assert!(matches!(p.kind, SExprKind::BinOp(..)));
    }
}
