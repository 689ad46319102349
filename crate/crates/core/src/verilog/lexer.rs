//! Tokenizer for the Verilog subset.
//!
//! Comments are dropped. A handful of compiler directives are understood:
//! `` `timescale``, `` `default_nettype``, `` `resetall``, `` `celldefine`` and
//! `` `endcelldefine`` are skipped, and object-like `` `define`` macros are
//! expanded inline. Anything else starting with a backtick is an error.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    Operator,
    Punct,
    String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && self.kind != TokenKind::String
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for LexError {}

pub const KEYWORDS: &[&str] = &[
    "always",
    "and",
    "assign",
    "automatic",
    "begin",
    "buf",
    "bufif0",
    "bufif1",
    "case",
    "casex",
    "casez",
    "deassign",
    "default",
    "defparam",
    "disable",
    "edge",
    "else",
    "end",
    "endcase",
    "endfunction",
    "endgenerate",
    "endmodule",
    "endprimitive",
    "endspecify",
    "endtable",
    "endtask",
    "event",
    "for",
    "force",
    "forever",
    "fork",
    "function",
    "generate",
    "genvar",
    "if",
    "initial",
    "inout",
    "input",
    "integer",
    "join",
    "localparam",
    "macromodule",
    "module",
    "nand",
    "negedge",
    "nor",
    "not",
    "notif0",
    "notif1",
    "or",
    "output",
    "parameter",
    "posedge",
    "primitive",
    "pulldown",
    "pullup",
    "real",
    "realtime",
    "reg",
    "release",
    "repeat",
    "signed",
    "specify",
    "supply0",
    "supply1",
    "table",
    "task",
    "time",
    "tri",
    "unsigned",
    "wait",
    "while",
    "wire",
    "xnor",
    "xor",
];

const OPERATORS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "~&", "~|", "~^", "^~", "**", "+:",
    "-:", "->", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?",
];

const PUNCT: &[char] = &['(', ')', '[', ']', '{', '}', ';', ',', '.', '@', '#', ':'];

const SKIPPED_DIRECTIVES: &[&str] = &[
    "timescale",
    "default_nettype",
    "resetall",
    "celldefine",
    "endcelldefine",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

/// True for a legal simple or escaped Verilog identifier that is not a keyword.
pub fn is_identifier(word: &str) -> bool {
    if let Some(rest) = word.strip_prefix('\\') {
        return !rest.is_empty() && !rest.chars().any(char::is_whitespace);
    }
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$') && !is_keyword(word)
}

pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        macros: HashMap::new(),
        out: Vec::new(),
        depth: 0,
    };
    lexer.run()?;
    Ok(lexer.out)
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    macros: HashMap<String, String>,
    out: Vec<Token>,
    depth: usize,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, LexError> {
        Err(LexError {
            line: self.line,
            message: message.into(),
        })
    }

    fn push(&mut self, kind: TokenKind, text: String, line: usize) {
        self.out.push(Token { kind, text, line });
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek(0) {
            let line = self.line;
            match c {
                _ if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek(1) == Some('/') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '/' if self.peek(1) == Some('*') => {
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(LexError {
                                    line,
                                    message: "unterminated block comment".into(),
                                })
                            }
                            Some('*') if self.peek(0) == Some('/') => {
                                self.bump();
                                break;
                            }
                            _ => {}
                        }
                    }
                }
                '`' => self.directive()?,
                '"' => self.string()?,
                '\\' => {
                    let mut text = String::new();
                    while let Some(c) = self.peek(0) {
                        if c.is_whitespace() {
                            break;
                        }
                        text.push(c);
                        self.bump();
                    }
                    if text.len() == 1 {
                        return self.err("empty escaped identifier");
                    }
                    self.push(TokenKind::Identifier, text, line);
                }
                '$' => {
                    let word = self.word();
                    if word.len() == 1 {
                        return self.err("stray `$`");
                    }
                    self.push(TokenKind::Identifier, word, line);
                }
                _ if c.is_ascii_alphabetic() || c == '_' => {
                    let word = self.word();
                    let kind = if is_keyword(&word) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    };
                    self.push(kind, word, line);
                }
                _ if c.is_ascii_digit() || c == '\'' => self.number()?,
                _ => {
                    if let Some(op) = OPERATORS.iter().find(|op| self.starts_with(op)) {
                        for _ in 0..op.len() {
                            self.bump();
                        }
                        self.push(TokenKind::Operator, op.to_string(), line);
                    } else if PUNCT.contains(&c) {
                        self.bump();
                        self.push(TokenKind::Punct, c.to_string(), line);
                    } else {
                        return self.err(format!("unexpected character `{c}`"));
                    }
                }
            }
        }
        Ok(())
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn word(&mut self) -> String {
        let mut text = String::new();
        if self.peek(0) == Some('$') {
            text.push('$');
            self.bump();
        }
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        text
    }

    fn string(&mut self) -> Result<(), LexError> {
        let line = self.line;
        let mut text = String::from("\"");
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(LexError {
                        line,
                        message: "unterminated string literal".into(),
                    })
                }
                Some('\\') => {
                    text.push('\\');
                    if let Some(c) = self.bump() {
                        text.push(c);
                    }
                }
                Some('"') => {
                    text.push('"');
                    break;
                }
                Some(c) => text.push(c),
            }
        }
        self.push(TokenKind::String, text, line);
        Ok(())
    }

    fn number(&mut self) -> Result<(), LexError> {
        let line = self.line;
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() || c == '_' {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // Real literals are tokenized so the parser can reject them by name.
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            self.bump();
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() || c == '_' {
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            self.push(TokenKind::Number, text, line);
            return Ok(());
        }
        // Optional whitespace between size and base.
        let mut look = 0;
        while self.peek(look).is_some_and(|c| c == ' ' || c == '\t') {
            look += 1;
        }
        if self.peek(look) == Some('\'') {
            let mut base_at = look + 1;
            if self.peek(base_at).is_some_and(|c| c == 's' || c == 'S') {
                base_at += 1;
            }
            if self
                .peek(base_at)
                .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'b' | 'o' | 'd' | 'h'))
            {
                for _ in 0..look {
                    self.bump();
                }
                for _ in look..=base_at {
                    text.push(self.bump().unwrap());
                }
                while self.peek(0).is_some_and(|c| c == ' ' || c == '\t') {
                    self.bump();
                }
                let start = text.len();
                while let Some(c) = self.peek(0) {
                    if c.is_ascii_hexdigit() || matches!(c, '_' | 'x' | 'X' | 'z' | 'Z' | '?') {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if text.len() == start {
                    return self.err(format!("based literal `{text}` has no digits"));
                }
            } else if text.is_empty() {
                return self.err("stray `'`");
            }
        }
        self.push(TokenKind::Number, text, line);
        Ok(())
    }

    fn directive(&mut self) -> Result<(), LexError> {
        let line = self.line;
        self.bump();
        let name = self.word();
        if name.is_empty() {
            return self.err("stray backtick");
        }
        if SKIPPED_DIRECTIVES.contains(&name.as_str()) {
            self.rest_of_line();
            return Ok(());
        }
        match name.as_str() {
            "define" => {
                while self.peek(0).is_some_and(|c| c == ' ' || c == '\t') {
                    self.bump();
                }
                let macro_name = self.word();
                if macro_name.is_empty() {
                    return self.err("`define without a name");
                }
                if self.peek(0) == Some('(') {
                    return self.err(format!("macro `{macro_name}` with arguments is not supported"));
                }
                let body = self.rest_of_line();
                self.macros.insert(macro_name, body);
                Ok(())
            }
            "undef" => {
                let body = self.rest_of_line();
                self.macros.remove(body.trim());
                Ok(())
            }
            _ => {
                let Some(body) = self.macros.get(&name).cloned() else {
                    return Err(LexError {
                        line,
                        message: format!("unsupported or undefined directive `{name}"),
                    });
                };
                if self.depth > 16 {
                    return self.err(format!("macro `{name}` expands recursively"));
                }
                let mut inner = Lexer {
                    chars: body.chars().collect(),
                    pos: 0,
                    line,
                    macros: self.macros.clone(),
                    out: Vec::new(),
                    depth: self.depth + 1,
                };
                inner.run()?;
                for mut tok in inner.out {
                    tok.line = line;
                    self.out.push(tok);
                }
                Ok(())
            }
        }
    }

    /// Consumes to end of line, honouring `\` line continuations. Trailing
    /// `//` comments are stripped.
    fn rest_of_line(&mut self) -> String {
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            if c == '\\' && self.peek(1) == Some('\n') {
                self.bump();
                self.bump();
                text.push('\n');
                continue;
            }
            if c == '\n' {
                break;
            }
            if c == '/' && self.peek(1) == Some('/') {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
                break;
            }
            text.push(c);
            self.bump();
        }
        text.trim().to_string()
    }
}
