//! ISO 10303-21 clear-text tokenizer.

use super::StepError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Keywords, including `ISO-10303-21` and user keywords (`!NAME`).
    Keyword(String),
    /// `#N`
    EntityRef(u64),
    /// Numeric literal; the source text is kept for faithful printing.
    Number { value: f64, text: String },
    /// Apostrophe-quoted string with `''` unescaped.
    Str(String),
    /// `.TOKEN.`
    Enum(String),
    /// Double-quoted binary literal (hex digits).
    Binary(String),
    LParen,
    RParen,
    Comma,
    Equals,
    Semicolon,
    /// `$`
    Unset,
    /// `*`
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn lex_error(&self, line: usize, col: usize, msg: impl Into<String>) -> StepError {
        StepError::Lex {
            line,
            col,
            msg: msg.into(),
        }
    }
}

fn is_ident(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-'
}

/// Splits Part 21 text into tokens, skipping whitespace and `/* */` comments.
pub fn tokenize_part21(input: &[u8]) -> Result<Vec<Token>, StepError> {
    let mut cur = Cursor {
        src: input,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        let push = |out: &mut Vec<Token>, kind| out.push(Token { kind, line, col });
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                cur.bump();
            }
            b'/' if cur.peek_at(1) == Some(b'*') => {
                cur.bump();
                cur.bump();
                loop {
                    match cur.bump() {
                        Some(b'*') if cur.peek() == Some(b'/') => {
                            cur.bump();
                            break;
                        }
                        Some(_) => {}
                        None => return Err(cur.lex_error(line, col, "unterminated comment")),
                    }
                }
            }
            b'(' | b')' | b',' | b'=' | b';' | b'$' | b'*' => {
                cur.bump();
                let kind = match c {
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    b',' => TokenKind::Comma,
                    b'=' => TokenKind::Equals,
                    b';' => TokenKind::Semicolon,
                    b'$' => TokenKind::Unset,
                    _ => TokenKind::Derived,
                };
                push(&mut out, kind);
            }
            b'#' => {
                cur.bump();
                let start = cur.pos;
                while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    cur.bump();
                }
                let digits = std::str::from_utf8(&input[start..cur.pos]).unwrap_or("");
                let id = digits
                    .parse::<u64>()
                    .map_err(|_| cur.lex_error(line, col, "expected digits after '#'"))?;
                push(&mut out, TokenKind::EntityRef(id));
            }
            b'\'' => {
                cur.bump();
                let mut bytes = Vec::new();
                loop {
                    match cur.bump() {
                        Some(b'\'') if cur.peek() == Some(b'\'') => {
                            cur.bump();
                            bytes.push(b'\'');
                        }
                        Some(b'\'') => break,
                        Some(b) => bytes.push(b),
                        None => return Err(cur.lex_error(line, col, "unterminated string")),
                    }
                }
                let s = String::from_utf8(bytes)
                    .map_err(|_| cur.lex_error(line, col, "string is not valid UTF-8"))?;
                push(&mut out, TokenKind::Str(s));
            }
            b'"' => {
                cur.bump();
                let start = cur.pos;
                loop {
                    match cur.bump() {
                        Some(b'"') => break,
                        Some(b) if b.is_ascii_hexdigit() => {}
                        Some(_) => return Err(cur.lex_error(line, col, "illegal character in binary literal")),
                        None => return Err(cur.lex_error(line, col, "unterminated binary literal")),
                    }
                }
                let s = String::from_utf8_lossy(&input[start..cur.pos - 1]).into_owned();
                push(&mut out, TokenKind::Binary(s));
            }
            b'.' if cur.peek_at(1).is_some_and(|d| d.is_ascii_alphabetic()) => {
                cur.bump();
                let start = cur.pos;
                while cur.peek().is_some_and(|d| d.is_ascii_alphanumeric() || d == b'_') {
                    cur.bump();
                }
                let name = String::from_utf8_lossy(&input[start..cur.pos]).into_owned();
                if cur.bump() != Some(b'.') {
                    return Err(cur.lex_error(line, col, "unterminated enumeration"));
                }
                push(&mut out, TokenKind::Enum(name));
            }
            b'+' | b'-' | b'0'..=b'9' => {
                let start = cur.pos;
                cur.bump();
                let mut digits = c.is_ascii_digit();
                while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    cur.bump();
                    digits = true;
                }
                if !digits {
                    return Err(cur.lex_error(line, col, "sign without digits"));
                }
                if cur.peek() == Some(b'.') {
                    cur.bump();
                    while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                if matches!(cur.peek(), Some(b'e' | b'E')) {
                    cur.bump();
                    if matches!(cur.peek(), Some(b'+' | b'-')) {
                        cur.bump();
                    }
                    if !cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                        return Err(cur.lex_error(line, col, "malformed exponent"));
                    }
                    while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                let text = String::from_utf8_lossy(&input[start..cur.pos]).into_owned();
                let value = text
                    .parse::<f64>()
                    .or_else(|_| text.trim_end_matches('.').parse::<f64>())
                    .map_err(|_| cur.lex_error(line, col, format!("bad number '{text}'")))?;
                push(&mut out, TokenKind::Number { value, text });
            }
            b'!' | b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = cur.pos;
                cur.bump();
                while cur.peek().is_some_and(is_ident) {
                    cur.bump();
                }
                let name = String::from_utf8_lossy(&input[start..cur.pos]).into_owned();
                push(&mut out, TokenKind::Keyword(name));
            }
            other => {
                return Err(cur.lex_error(
                    line,
                    col,
                    format!("illegal character {:?}", other as char),
                ))
            }
        }
    }
    Ok(out)
}

impl TokenKind {
    /// Source text that re-tokenizes to this token.
    pub fn to_source(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.clone(),
            TokenKind::EntityRef(id) => format!("#{id}"),
            TokenKind::Number { text, .. } => text.clone(),
            TokenKind::Str(s) => format!("'{}'", s.replace('\'', "''")),
            TokenKind::Enum(e) => format!(".{e}."),
            TokenKind::Binary(b) => format!("\"{b}\""),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Equals => "=".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Unset => "$".into(),
            TokenKind::Derived => "*".into(),
        }
    }
}

/// Prints a token stream back to Part 21 text, one statement per line.
pub fn print_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev_word = false;
    for t in tokens {
        let word = matches!(
            t.kind,
            TokenKind::Keyword(_) | TokenKind::Number { .. } | TokenKind::EntityRef(_)
        );
        if word && prev_word {
            out.push(' ');
        }
        out.push_str(&t.kind.to_source());
        if t.kind == TokenKind::Semicolon {
            out.push('\n');
        }
        prev_word = word;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize_part21(s.as_bytes())
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    fn num(text: &str) -> TokenKind {
        TokenKind::Number {
            value: text.parse().unwrap(),
            text: text.into(),
        }
    }

    #[test]
    fn cartesian_point() {
        use TokenKind::*;
        let expect = vec![
            EntityRef(12),
            Equals,
            Keyword("CARTESIAN_POINT".into()),
            LParen,
            Str(String::new()),
            Comma,
            LParen,
            num("0."),
            Comma,
            num("0."),
            Comma,
            num("0."),
            RParen,
            RParen,
            Semicolon,
        ];
        assert_eq!(kinds("#12=CARTESIAN_POINT('',(0.,0.,0.));"), expect);
    }

    #[test]
    fn empty_and_escapes() {
        assert!(kinds("").is_empty());
        assert!(kinds("  /* only a comment */ ").is_empty());
        assert!(kinds("#1=FOO('a''b');").contains(&TokenKind::Str("a'b".into())));
    }

    #[test]
    fn numbers_enums_markers() {
        use TokenKind::*;
        assert_eq!(
            kinds("(-1.5E-3,.T.,$,*,2)"),
            vec![
                LParen,
                num("-1.5E-3"),
                Comma,
                Enum("T".into()),
                Comma,
                Unset,
                Comma,
                Derived,
                Comma,
                num("2"),
                RParen
            ]
        );
    }

    #[test]
    fn positioned_errors() {
        match tokenize_part21(b"#1=FOO(\n  'abc);") {
            Err(StepError::Lex { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            tokenize_part21(b"/* open"),
            Err(StepError::Lex { line: 1, col: 1, .. })
        ));
        assert!(matches!(
            tokenize_part21(b"#1=A(@);"),
            Err(StepError::Lex { line: 1, col: 6, .. })
        ));
    }

    #[test]
    fn printer_round_trip() {
        let src = "ISO-10303-21;\nHEADER;FILE_NAME('x''y',(''),$);ENDSEC;\nDATA;#1=A(1.E2,.U.,(#2,*));ENDSEC;END-ISO-10303-21;";
        let toks = tokenize_part21(src.as_bytes()).unwrap();
        let again = tokenize_part21(print_tokens(&toks).as_bytes()).unwrap();
        let k1: Vec<_> = toks.iter().map(|t| &t.kind).collect();
        let k2: Vec<_> = again.iter().map(|t| &t.kind).collect();
        assert_eq!(k1, k2);
    }
}
