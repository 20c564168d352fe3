use std::fmt;

use super::SyntaxError;
use crate::lang::{Pos, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kw {
    Data,
    Type,
    Measure,
    Qualif,
    If,
    Then,
    Else,
    Case,
    Of,
    Let,
    In,
    Where,
    Otherwise,
}

impl Kw {
    fn from_str(s: &str) -> Option<Kw> {
        Some(match s {
            "data" => Kw::Data,
            "type" => Kw::Type,
            "measure" => Kw::Measure,
            "qualif" => Kw::Qualif,
            "if" => Kw::If,
            "then" => Kw::Then,
            "else" => Kw::Else,
            "case" => Kw::Case,
            "of" => Kw::Of,
            "let" => Kw::Let,
            "in" => Kw::In,
            "where" => Kw::Where,
            "otherwise" => Kw::Otherwise,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Data => "data",
            Kw::Type => "type",
            Kw::Measure => "measure",
            Kw::Qualif => "qualif",
            Kw::If => "if",
            Kw::Then => "then",
            Kw::Else => "else",
            Kw::Case => "case",
            Kw::Of => "of",
            Kw::Let => "let",
            Kw::In => "in",
            Kw::Where => "where",
            Kw::Otherwise => "otherwise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    AnnOpen,
    AnnClose,
    Lower(String),
    Upper(String),
    Int(i64),
    Str(String),
    Op(String),
    Kw(Kw),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Backtick,
    Underscore,
    /// The qualifier wildcard `⋆`.
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::AnnOpen => write!(f, "`{{-@`"),
            Tok::AnnClose => write!(f, "`@-}}`"),
            Tok::Lower(s) | Tok::Upper(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Op(s) => write!(f, "`{s}`"),
            Tok::Kw(k) => write!(f, "`{}`", k.as_str()),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Backtick => write!(f, "backtick"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::Star => write!(f, "`⋆`"),
            Tok::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// No other token precedes this one on its line.
    pub first_on_line: bool,
}

impl Token {
    pub fn col(&self) -> u32 {
        self.span.start.col
    }
}

const SYMBOL_CHARS: &str = "!#$%&*+./<=>?@\\^|-~:";

fn is_symbol(c: char) -> bool {
    SYMBOL_CHARS.contains(c)
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: u32,
    col: u32,
    last_line: u32,
    in_ann: Option<Pos>,
    out: Vec<Token>,
}

/// Split source text into tokens. The stream always ends with `Eof`.
pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        src,
        chars: src.char_indices().collect(),
        i: 0,
        line: 1,
        col: 1,
        last_line: 0,
        in_ann: None,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn pos(&self) -> Pos {
        let offset = self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o);
        Pos::new(self.line, self.col, offset as u32)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c))
    }

    fn push(&mut self, tok: Tok, start: Pos) {
        let first_on_line = start.line != self.last_line;
        self.last_line = start.line;
        self.out.push(Token { tok, span: Span::new(start, self.pos()), first_on_line });
    }

    fn err(&self, start: Pos, msg: impl Into<String>) -> SyntaxError {
        SyntaxError { span: Span::new(start, self.pos()), message: msg.into() }
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        while let Some(c) = self.peek(0) {
            let start = self.pos();
            if c.is_whitespace() {
                self.bump();
            } else if self.starts_with("{-@") {
                if self.in_ann.is_some() {
                    return Err(self.err(start, "nested annotation"));
                }
                self.bump();
                self.bump();
                self.bump();
                self.in_ann = Some(start);
                self.push(Tok::AnnOpen, start);
            } else if self.starts_with("@-}") && self.in_ann.is_some() {
                self.bump();
                self.bump();
                self.bump();
                self.in_ann = None;
                self.push(Tok::AnnClose, start);
            } else if self.starts_with("{-") {
                self.block_comment(start)?;
            } else if self.starts_with("--") && self.is_line_comment() {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(d) = self.peek(0).filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    self.bump();
                }
                let n = s.parse::<i64>().map_err(|_| self.err(start, "integer literal out of range"))?;
                self.push(Tok::Int(n), start);
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(d) = self.peek(0).filter(|d| d.is_alphanumeric() || *d == '_' || *d == '\'') {
                    s.push(d);
                    self.bump();
                }
                let tok = if s == "_" {
                    Tok::Underscore
                } else if let Some(k) = Kw::from_str(&s) {
                    Tok::Kw(k)
                } else if c.is_uppercase() {
                    Tok::Upper(s)
                } else {
                    Tok::Lower(s)
                };
                self.push(tok, start);
            } else if c == '"' {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return Err(self.err(start, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(e) => s.push(e),
                            None => return Err(self.err(start, "unterminated string literal")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                self.push(Tok::Str(s), start);
            } else if c == '⋆' {
                self.bump();
                self.push(Tok::Star, start);
            } else if let Some(tok) = punct(c) {
                self.bump();
                self.push(tok, start);
            } else if is_symbol(c) {
                let mut s = String::new();
                while let Some(d) = self.peek(0).filter(|d| is_symbol(*d)) {
                    if self.in_ann.is_some() && self.starts_with("@-}") {
                        break;
                    }
                    s.push(d);
                    self.bump();
                }
                self.push(Tok::Op(s), start);
            } else {
                self.bump();
                return Err(self.err(start, format!("illegal character {c:?}")));
            }
        }
        if let Some(open) = self.in_ann {
            let end = self.pos();
            return Err(SyntaxError {
                span: Span::new(end, end),
                message: format!("unterminated annotation (opened at {}:{})", open.line, open.col),
            });
        }
        let end = self.pos();
        self.out.push(Token { tok: Tok::Eof, span: Span::new(end, end), first_on_line: true });
        Ok(())
    }

    /// `--` starts a comment unless it is part of a longer operator like `-->`.
    fn is_line_comment(&self) -> bool {
        let mut k = 2;
        while self.peek(k) == Some('-') {
            k += 1;
        }
        !self.peek(k).is_some_and(is_symbol)
    }

    fn block_comment(&mut self, start: Pos) -> Result<(), SyntaxError> {
        self.bump();
        self.bump();
        let mut depth = 1;
        while depth > 0 {
            if self.starts_with("{-") {
                self.bump();
                self.bump();
                depth += 1;
            } else if self.starts_with("-}") {
                self.bump();
                self.bump();
                depth -= 1;
            } else if self.bump().is_none() {
                let end = self.pos();
                return Err(SyntaxError {
                    span: Span::new(end, end),
                    message: format!("unterminated block comment (opened at {}:{})", start.line, start.col),
                });
            }
        }
        Ok(())
    }
}

fn punct(c: char) -> Option<Tok> {
    Some(match c {
        '(' => Tok::LParen,
        ')' => Tok::RParen,
        '[' => Tok::LBracket,
        ']' => Tok::RBracket,
        '{' => Tok::LBrace,
        '}' => Tok::RBrace,
        ',' => Tok::Comma,
        ';' => Tok::Semi,
        '`' => Tok::Backtick,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn measure_annotation() {
        assert_eq!(
            toks("{-@ measure notEmpty @-}"),
            vec![Tok::AnnOpen, Tok::Kw(Kw::Measure), Tok::Lower("notEmpty".into()), Tok::AnnClose, Tok::Eof]
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(toks(""), vec![Tok::Eof]);
    }

    #[test]
    fn unterminated_annotation_reports_eof() {
        let e = lex("{-@ type").unwrap_err();
        assert!(e.message.contains("unterminated annotation"));
        assert_eq!(e.span.start.line, 1);
        assert_eq!(e.span.start.col, 9);
    }

    #[test]
    fn illegal_character_has_location() {
        let e = lex("x = 1\ny = ¤").unwrap_err();
        assert!(e.message.contains("illegal character"));
        assert_eq!((e.span.start.line, e.span.start.col), (2, 5));
    }

    #[test]
    fn comments_and_operators() {
        assert_eq!(
            toks("x :< xs -- tail\n{- block {- nested -} -} a ==> b"),
            vec![
                Tok::Lower("x".into()),
                Tok::Op(":<".into()),
                Tok::Lower("xs".into()),
                Tok::Lower("a".into()),
                Tok::Op("==>".into()),
                Tok::Lower("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn as_pattern_inside_annotation_is_not_a_close() {
        assert_eq!(
            toks("{-@ t@x @-}"),
            vec![Tok::AnnOpen, Tok::Lower("t".into()), Tok::Op("@".into()), Tok::Lower("x".into()), Tok::AnnClose, Tok::Eof]
        );
    }

    #[test]
    fn positions_and_line_starts() {
        let ts = lex("f x\n  = x").unwrap();
        assert!(ts[0].first_on_line);
        assert!(!ts[1].first_on_line);
        assert!(ts[2].first_on_line);
        assert_eq!(ts[2].col(), 3);
    }
}
