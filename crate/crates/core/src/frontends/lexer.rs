// SPDX-License-Identifier: Apache-2.0

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Double(f64),
    Str(String),
    Punct(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Brace-delimited; newlines are insignificant, `//` comments.
    Braces,
    /// Indentation-delimited; emits NEWLINE/INDENT/DEDENT, `#` comments.
    Indent,
}

// Longest first so that greedy matching works.
const PUNCT: &[&str] = &[
    "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "++", "+", "-",
    "*", "/", "%", "<", ">", "=", "!", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
    mode: Mode,
    out: Vec<Token>,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
}

pub fn lex(src: &str, mode: Mode) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
        mode,
        out: Vec::new(),
        depth: 0,
        indents: vec![0],
        at_line_start: true,
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn col(&self, pos: usize) -> usize {
        self.src[self.line_start..pos].chars().count() + 1
    }

    fn err(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col(pos), msg)
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        let col = self.col(start);
        self.out.push(Token {
            tok,
            start,
            end,
            line: self.line,
            col,
        });
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn newline(&mut self) {
        self.pos += 1;
        self.line += 1;
        self.line_start = self.pos;
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.bytes.len() {
            if self.mode == Mode::Indent
                && self.at_line_start
                && self.depth == 0
                && self.indentation()?
            {
                continue;
            }
            let c = self.bytes[self.pos];
            match c {
                b'\n' => {
                    if self.mode == Mode::Indent && self.depth == 0 {
                        self.push_newline(self.pos);
                        self.at_line_start = true;
                    }
                    self.newline();
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'#' if self.mode == Mode::Indent => self.skip_comment(),
                b'/' if self.mode == Mode::Braces && self.bytes.get(self.pos + 1) == Some(&b'/') => {
                    self.skip_comment()
                }
                b'"' | b'\'' => self.string(c)?,
                b'0'..=b'9' => self.number()?,
                c if c == b'_' || c.is_ascii_alphabetic() => self.ident(),
                _ => self.punct()?,
            }
        }
        let end = self.src.len();
        if self.mode == Mode::Indent {
            self.push_newline(end);
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push(Tok::Dedent, end, end);
            }
        }
        self.push(Tok::Eof, end, end);
        Ok(())
    }

    fn push_newline(&mut self, at: usize) {
        let redundant = matches!(
            self.out.last().map(|t| &t.tok),
            None | Some(Tok::Newline | Tok::Indent | Tok::Dedent)
        );
        if !redundant {
            self.push(Tok::Newline, at, at);
        }
    }

    /// Measures leading whitespace of a logical line and emits INDENT or
    /// DEDENT tokens. Returns true when the line was blank or a comment.
    fn indentation(&mut self) -> Result<bool, ParseError> {
        let start = self.pos;
        let mut width = 0;
        while let Some(c) = self.peek() {
            match c {
                b' ' => width += 1,
                b'\t' => width += 4,
                b'\r' => {}
                _ => break,
            }
            self.pos += 1;
        }
        match self.peek() {
            None => return Ok(true),
            Some(b'\n') => {
                self.newline();
                return Ok(true);
            }
            Some(b'#') => {
                self.skip_comment();
                return Ok(true);
            }
            _ => {}
        }
        self.at_line_start = false;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, start, self.pos);
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(Tok::Dedent, self.pos, self.pos);
            }
            if width != *self.indents.last().unwrap() {
                return Err(self.err(self.pos, "inconsistent dedent"));
            }
        }
        Ok(false)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn string(&mut self, quote: u8) -> Result<(), ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut s = String::new();
        loop {
            let Some(c) = self.src[self.pos..].chars().next() else {
                return Err(self.err(start, "unterminated string"));
            };
            self.pos += c.len_utf8();
            match c {
                '\n' => return Err(self.err(start, "unterminated string")),
                '\\' => {
                    let Some(e) = self.src[self.pos..].chars().next() else {
                        return Err(self.err(start, "unterminated string"));
                    };
                    self.pos += e.len_utf8();
                    s.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                }
                c if c as u32 == quote as u32 => break,
                c => s.push(c),
            }
        }
        self.push(Tok::Str(s), start, self.pos);
        Ok(())
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let mut is_double = false;
        while let Some(c) = self.peek() {
            match c {
                b'0'..=b'9' => self.pos += 1,
                b'.' if !is_double
                    && self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit) =>
                {
                    is_double = true;
                    self.pos += 1;
                }
                b'e' | b'E' => {
                    let mut p = self.pos + 1;
                    if matches!(self.bytes.get(p), Some(b'+' | b'-')) {
                        p += 1;
                    }
                    if !self.bytes.get(p).is_some_and(u8::is_ascii_digit) {
                        break;
                    }
                    is_double = true;
                    self.pos = p;
                }
                _ => break,
            }
        }
        let text = &self.src[start..self.pos];
        let tok = if is_double {
            Tok::Double(text.parse().map_err(|_| self.err(start, "malformed number"))?)
        } else {
            Tok::Int(
                text.parse()
                    .map_err(|_| self.err(start, format!("integer literal `{text}` out of range")))?,
            )
        };
        self.push(tok, start, self.pos);
        Ok(())
    }

    fn ident(&mut self) {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c == b'_' || c.is_ascii_alphanumeric())
        {
            self.pos += 1;
        }
        let word = self.src[start..self.pos].to_string();
        self.push(Tok::Ident(word), start, self.pos);
    }

    fn punct(&mut self) -> Result<(), ParseError> {
        let rest = &self.src[self.pos..];
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            let c = rest.chars().next().unwrap();
            return Err(self.err(self.pos, format!("unexpected character `{c}`")));
        };
        match *p {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        let start = self.pos;
        self.pos += p.len();
        self.push(Tok::Punct(p), start, self.pos);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str, mode: Mode) -> Vec<Tok> {
        lex(src, mode).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn braces_mode_ignores_newlines() {
        let toks = kinds("var x = 1.5; // hi\nx += 2", Mode::Braces);
        assert_eq!(
            toks,
            vec![
                Tok::Ident("var".into()),
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Double(1.5),
                Tok::Punct(";"),
                Tok::Ident("x".into()),
                Tok::Punct("+="),
                Tok::Int(2),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn indent_mode_tracks_blocks() {
        let src = "def f(a):\n    # c\n\n    return a\nx = f(\n  1)\n";
        let toks = kinds(src, Mode::Indent);
        let layout: Vec<_> = toks
            .iter()
            .filter(|t| matches!(t, Tok::Newline | Tok::Indent | Tok::Dedent))
            .collect();
        assert_eq!(
            layout,
            vec![&Tok::Newline, &Tok::Indent, &Tok::Newline, &Tok::Dedent, &Tok::Newline]
        );
    }

    #[test]
    fn bad_dedent_and_strings() {
        assert!(lex("if x:\n    a\n  b\n", Mode::Indent).is_err());
        assert!(lex("\"abc", Mode::Braces).is_err());
        assert_eq!(kinds("'a\\n'", Mode::Braces)[0], Tok::Str("a\n".into()));
        assert!(lex("x @ y", Mode::Braces).is_err());
    }
}
