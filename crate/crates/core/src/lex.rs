//! Tokenizer shared by the model and query parsers.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "<<", ">>", "[[", "]]", "->", "&&", "||", "<=", ">=", "==", "=>", "<", ">", "!", "(", ")", "{",
    "}", ":", ";", ",", ".", "-",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Tokenize `text`; `//` starts a comment running to the end of the line.
/// Line and column numbers are 1-based and offset by `line0`.
pub fn tokenize(text: &str, line0: usize) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1 + line0;
        let src = match raw.find("//") {
            Some(p) => &raw[..p],
            None => raw,
        };
        let chars: Vec<(usize, char)> = src.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (off, c) = chars[i];
            let col = src[..off].chars().count() + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let end = chars.get(j).map_or(src.len(), |p| p.0);
                out.push(Token { tok: Tok::Ident(src[off..end].to_string()), line, col });
                i = j;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                let end = chars.get(j).map_or(src.len(), |p| p.0);
                let v: i64 = src[off..end].parse().map_err(|_| LexError {
                    line,
                    col,
                    msg: "integer literal out of range".into(),
                })?;
                if v > (1 << 30) {
                    return Err(LexError { line, col, msg: "integer literal above 2^30".into() });
                }
                out.push(Token { tok: Tok::Int(v), line, col });
                i = j;
                continue;
            }
            let rest = &src[off..];
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push(Token { tok: Tok::Sym(s), line, col });
                    i += s.chars().count();
                }
                None => {
                    return Err(LexError { line, col, msg: format!("unexpected character `{c}`") });
                }
            }
        }
    }
    let line = text.lines().count().max(1) + line0;
    out.push(Token { tok: Tok::Eof, line, col: 1 });
    Ok(out)
}

/// Cursor over a token list.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn at_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}
