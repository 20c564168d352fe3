//! Source text to core program: lexing, parsing, elaboration of
//! annotations and desugaring of code.

pub mod ast;
pub mod desugar;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod pretty;

use thiserror::Error;

use crate::lang::{Program, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

/// Any located error raised before constraint generation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct FrontError {
    pub span: Span,
    pub message: String,
}

impl FrontError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        FrontError { span, message: message.into() }
    }
}

impl From<SyntaxError> for FrontError {
    fn from(e: SyntaxError) -> Self {
        FrontError { span: e.span, message: e.message }
    }
}

/// Parse and elaborate a source file into a core program.
pub fn load(path: &str, text: &str) -> Result<Program, FrontError> {
    let file = parser::parse_program(path, text)?;
    lower::elaborate(&file)
}
