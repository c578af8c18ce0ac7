//! Part 21 exchange-structure parser producing an [`EntityGraph`].

use std::collections::BTreeMap;

use super::lexer::{Token, TokenKind};
use super::StepError;

/// A parameter value of an entity instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Enum(String),
    Binary(String),
    Ref(u64),
    List(Vec<Value>),
    /// Typed parameter such as `LENGTH_MEASURE(1.0)`; also used for the
    /// parts of a complex instance.
    Typed(String, Vec<Value>),
    /// `$`
    Unset,
    /// `*`
    Derived,
}

impl Value {
    pub fn as_ref_id(&self) -> Option<u64> {
        match self {
            Value::Ref(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Typed(_, inner) if inner.len() == 1 => inner[0].as_f64(),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Enum(e) if e == "T" => Some(true),
            Value::Enum(e) if e == "F" => Some(false),
            _ => None,
        }
    }

    fn collect_refs(&self, out: &mut Vec<u64>) {
        match self {
            Value::Ref(id) => out.push(*id),
            Value::List(items) | Value::Typed(_, items) => {
                items.iter().for_each(|v| v.collect_refs(out))
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part21Entity {
    pub id: u64,
    /// Uppercase type name; complex instances join their part names with `+`
    /// and carry each part as a [`Value::Typed`] argument.
    pub type_name: String,
    pub args: Vec<Value>,
    pub line: usize,
}

impl Part21Entity {
    pub fn is_complex(&self) -> bool {
        self.type_name.contains('+')
    }

    pub fn refs(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_refs(&mut out));
        out
    }
}

/// Header record such as `FILE_NAME(...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeaderRecord {
    pub name: String,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntityGraph {
    pub headers: Vec<HeaderRecord>,
    pub entities: BTreeMap<u64, Part21Entity>,
}

impl EntityGraph {
    pub fn get(&self, id: u64) -> Option<&Part21Entity> {
        self.entities.get(&id)
    }

    pub fn header(&self, name: &str) -> Option<&HeaderRecord> {
        self.headers.iter().find(|h| h.name == name)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn of_type<'a>(&'a self, type_name: &'a str) -> impl Iterator<Item = &'a Part21Entity> + 'a {
        self.entities.values().filter(move |e| e.type_name == type_name)
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn error(&self, msg: impl Into<String>) -> StepError {
        let (line, col) = match self.tokens.get(self.pos).or(self.tokens.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        StepError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<(), StepError> {
        if self.peek() == Some(kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn keyword(&mut self) -> Result<String, StepError> {
        match self.peek() {
            Some(TokenKind::Keyword(k)) => {
                self.pos += 1;
                Ok(k.clone())
            }
            _ => Err(self.error("expected keyword")),
        }
    }

    fn at_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(x)) if x == k)
    }

    /// `( value, value, ... )`
    fn arg_list(&mut self) -> Result<Vec<Value>, StepError> {
        self.expect(&TokenKind::LParen, "'('")?;
        let mut values = Vec::new();
        if self.peek() == Some(&TokenKind::RParen) {
            self.pos += 1;
            return Ok(values);
        }
        loop {
            values.push(self.value()?);
            match self.peek() {
                Some(TokenKind::Comma) => self.pos += 1,
                Some(TokenKind::RParen) => {
                    self.pos += 1;
                    return Ok(values);
                }
                _ => return Err(self.error("expected ',' or ')'")),
            }
        }
    }

    fn value(&mut self) -> Result<Value, StepError> {
        let v = match self.peek() {
            Some(TokenKind::LParen) => return Ok(Value::List(self.arg_list()?)),
            Some(TokenKind::Keyword(k)) => {
                let k = k.clone();
                self.pos += 1;
                return Ok(Value::Typed(k, self.arg_list()?));
            }
            Some(TokenKind::Number { value, .. }) => Value::Number(*value),
            Some(TokenKind::Str(s)) => Value::Str(s.clone()),
            Some(TokenKind::Enum(e)) => Value::Enum(e.clone()),
            Some(TokenKind::Binary(b)) => Value::Binary(b.clone()),
            Some(TokenKind::EntityRef(id)) => Value::Ref(*id),
            Some(TokenKind::Unset) => Value::Unset,
            Some(TokenKind::Derived) => Value::Derived,
            _ => return Err(self.error("expected parameter value")),
        };
        self.pos += 1;
        Ok(v)
    }

    fn header_section(&mut self, graph: &mut EntityGraph) -> Result<(), StepError> {
        self.expect(&TokenKind::Semicolon, "';' after HEADER")?;
        while !self.at_keyword("ENDSEC") {
            let name = self.keyword()?;
            let args = self.arg_list()?;
            self.expect(&TokenKind::Semicolon, "';'")?;
            graph.headers.push(HeaderRecord { name, args });
        }
        self.pos += 1;
        self.expect(&TokenKind::Semicolon, "';' after ENDSEC")
    }

    fn data_section(&mut self, graph: &mut EntityGraph) -> Result<(), StepError> {
        if self.peek() == Some(&TokenKind::LParen) {
            self.arg_list()?;
        }
        self.expect(&TokenKind::Semicolon, "';' after DATA")?;
        self.instances(graph, true)?;
        self.expect(&TokenKind::Semicolon, "';' after ENDSEC")
    }

    /// Entity instances up to `ENDSEC` (consumed) or, for bare streams, the
    /// end of input.
    fn instances(&mut self, graph: &mut EntityGraph, until_endsec: bool) -> Result<(), StepError> {
        loop {
            if until_endsec && self.at_keyword("ENDSEC") {
                self.pos += 1;
                return Ok(());
            }
            if !until_endsec && self.peek().is_none() {
                return Ok(());
            }
            let start = self.pos;
            let (id, line, col) = match self.next() {
                Some(Token {
                    kind: TokenKind::EntityRef(id),
                    line,
                    col,
                }) => (*id, *line, *col),
                _ => {
                    self.pos = start;
                    return Err(self.error("expected entity instance '#N='"));
                }
            };
            self.expect(&TokenKind::Equals, "'='")?;
            let (type_name, args) = if self.peek() == Some(&TokenKind::LParen) {
                // complex instance: (A(...) B(...))
                self.pos += 1;
                let mut names = Vec::new();
                let mut parts = Vec::new();
                while self.peek() != Some(&TokenKind::RParen) {
                    let name = self.keyword()?;
                    let args = self.arg_list()?;
                    names.push(name.clone());
                    parts.push(Value::Typed(name, args));
                }
                self.pos += 1;
                if names.is_empty() {
                    return Err(self.error("empty complex instance"));
                }
                (names.join("+"), parts)
            } else {
                let name = self.keyword()?;
                (name, self.arg_list()?)
            };
            self.expect(&TokenKind::Semicolon, "';'")?;
            if graph.entities.contains_key(&id) {
                return Err(StepError::DuplicateId { id, line, col });
            }
            graph.entities.insert(
                id,
                Part21Entity {
                    id,
                    type_name,
                    args,
                    line,
                },
            );
        }
    }
}

/// Parses a token stream. A stream holding only entity instances (no
/// exchange-structure envelope) is accepted as a bare DATA section.
pub fn parse_part21(tokens: &[Token]) -> Result<EntityGraph, StepError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut graph = EntityGraph::default();
    if tokens.is_empty() {
        return Ok(graph);
    }
    if matches!(p.peek(), Some(TokenKind::EntityRef(_))) {
        p.instances(&mut graph, false)?;
        check_references(&graph)?;
        return Ok(graph);
    }
    if !p.at_keyword("ISO-10303-21") {
        return Err(p.error("expected 'ISO-10303-21'"));
    }
    p.pos += 1;
    p.expect(&TokenKind::Semicolon, "';'")?;
    loop {
        match p.peek() {
            Some(TokenKind::Keyword(k)) if k == "HEADER" => {
                p.pos += 1;
                p.header_section(&mut graph)?;
            }
            Some(TokenKind::Keyword(k)) if k == "DATA" => {
                p.pos += 1;
                p.data_section(&mut graph)?;
            }
            Some(TokenKind::Keyword(k)) if k == "END-ISO-10303-21" => {
                p.pos += 1;
                p.expect(&TokenKind::Semicolon, "';'")?;
                break;
            }
            _ => return Err(p.error("expected HEADER, DATA or END-ISO-10303-21")),
        }
    }
    if p.pos < tokens.len() {
        return Err(p.error("trailing tokens after END-ISO-10303-21"));
    }
    check_references(&graph)?;
    Ok(graph)
}

fn check_references(graph: &EntityGraph) -> Result<(), StepError> {
    for e in graph.entities.values() {
        if let Some(missing) = e.refs().into_iter().find(|r| !graph.entities.contains_key(r)) {
            return Err(StepError::DanglingReference {
                from: e.id,
                to: missing,
                line: e.line,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize_part21;
    use super::*;

    fn parse(src: &str) -> Result<EntityGraph, StepError> {
        parse_part21(&tokenize_part21(src.as_bytes())?)
    }

    const HEADER: &str = "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION(('d'),'2;1');\nFILE_NAME('n','t',('a'),('o'),'p','s','');\nFILE_SCHEMA(('AUTOMOTIVE_DESIGN'));\nENDSEC;\n";

    #[test]
    fn header_only() {
        let g = parse(&format!("{HEADER}DATA;\nENDSEC;\nEND-ISO-10303-21;\n")).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.headers.len(), 3);
        assert!(g.header("FILE_SCHEMA").is_some());
    }

    #[test]
    fn duplicate_id() {
        let src = format!("{HEADER}DATA;\n#5=A(1.);\n#5=B(2.);\nENDSEC;\nEND-ISO-10303-21;\n");
        match parse(&src) {
            Err(StepError::DuplicateId { id: 5, line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_and_typed() {
        let src = format!(
            "{HEADER}DATA;\n#1=(NAMED_UNIT(*) SI_UNIT($,.METRE.) LENGTH_UNIT());\n#2=X(LENGTH_MEASURE(2.5),(#1,#1));\nENDSEC;\nEND-ISO-10303-21;\n"
        );
        let g = parse(&src).unwrap();
        let e1 = g.get(1).unwrap();
        assert!(e1.is_complex());
        assert_eq!(e1.type_name, "NAMED_UNIT+SI_UNIT+LENGTH_UNIT");
        assert_eq!(g.get(2).unwrap().args[0].as_f64(), Some(2.5));
        assert_eq!(g.get(2).unwrap().refs(), vec![1, 1]);
    }

    #[test]
    fn dangling_and_malformed() {
        let src = format!("{HEADER}DATA;\n#1=A(#9);\nENDSEC;\nEND-ISO-10303-21;\n");
        assert!(matches!(
            parse(&src),
            Err(StepError::DanglingReference { from: 1, to: 9, .. })
        ));
        let src = format!("{HEADER}DATA;\n#1=A(1.,;\nENDSEC;\nEND-ISO-10303-21;\n");
        match parse(&src) {
            Err(StepError::Parse { line, col, .. }) => assert_eq!((line, col), (8, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_instances() {
        let g = parse("#1=A(1.);#2=B(#1);").unwrap();
        assert_eq!(g.len(), 2);
    }
}
