//! S-expression reader with line/column positions, and its renderer.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Symbol(String),
    Int(BigInt),
    Rational(BigRational),
}

#[derive(Debug, Clone)]
pub enum Kind {
    Atom(Atom),
    List(Vec<Node>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: Kind,
    pub pos: Pos,
}

/// Trees compare without their positions.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (Kind::Atom(a), Kind::Atom(b)) => a == b,
            (Kind::List(a), Kind::List(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Node {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

impl Node {
    pub fn symbol(&self) -> Option<&str> {
        match &self.kind {
            Kind::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Node]> {
        match &self.kind {
            Kind::List(v) => Some(v),
            _ => None,
        }
    }

    /// The head symbol of a list such as `(ge …)`.
    pub fn head(&self) -> Option<&str> {
        self.list()?.first()?.symbol()
    }

    /// Arguments after the head.
    pub fn args(&self) -> &[Node] {
        match &self.kind {
            Kind::List(v) if !v.is_empty() => &v[1..],
            _ => &[],
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.pos, message)
    }

    pub fn as_int(&self) -> Result<BigInt, ParseError> {
        match &self.kind {
            Kind::Atom(Atom::Int(v)) => Ok(v.clone()),
            _ => Err(self.error(format!("expected an integer, found {self}"))),
        }
    }

    pub fn as_i64(&self) -> Result<i64, ParseError> {
        let v = self.as_int()?;
        i64::try_from(&v).map_err(|_| self.error(format!("{v} is out of range")))
    }

    pub fn as_usize(&self) -> Result<usize, ParseError> {
        let v = self.as_int()?;
        usize::try_from(&v).map_err(|_| self.error(format!("expected a nonnegative count, found {v}")))
    }

    pub fn as_rational(&self) -> Result<BigRational, ParseError> {
        match &self.kind {
            Kind::Atom(Atom::Int(v)) => Ok(BigRational::from_integer(v.clone())),
            Kind::Atom(Atom::Rational(q)) => Ok(q.clone()),
            _ => Err(self.error(format!("expected a rational, found {self}"))),
        }
    }

    pub fn expect_list(&self) -> Result<&[Node], ParseError> {
        self.list().ok_or_else(|| self.error(format!("expected a list, found {self}")))
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn node(&mut self) -> Result<Node, ParseError> {
        self.skip_blank();
        let start = self.pos;
        match self.chars.peek() {
            None => Err(ParseError::new(start, "unexpected end of input")),
            Some(')') => Err(ParseError::new(start, "unbalanced ')'")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => {
                            return Err(ParseError::new(
                                self.pos,
                                format!("unexpected end of input; list opened at {start} is not closed"),
                            ))
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Node { kind: Kind::List(items), pos: start });
                        }
                        Some(_) => items.push(self.node()?),
                    }
                }
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                Ok(Node { kind: Kind::Atom(atom(&tok, start)?), pos: start })
            }
        }
    }
}

fn atom(tok: &str, pos: Pos) -> Result<Atom, ParseError> {
    let numeric = tok.trim_start_matches(['-', '+']).starts_with(|c: char| c.is_ascii_digit());
    if !numeric {
        if tok.chars().all(|c| c.is_alphanumeric() || "-+_*/<>=!?.:".contains(c)) {
            return Ok(Atom::Symbol(tok.to_string()));
        }
        return Err(ParseError::new(pos, format!("bad atom '{tok}'")));
    }
    if let Some((p, q)) = tok.split_once('/') {
        let (p, q) = match (BigInt::from_str(p), BigInt::from_str(q)) {
            (Ok(p), Ok(q)) => (p, q),
            _ => return Err(ParseError::new(pos, format!("bad rational '{tok}'"))),
        };
        if q.is_zero() {
            return Err(ParseError::new(pos, format!("zero denominator in '{tok}'")));
        }
        let r = BigRational::new(p, q);
        return Ok(if r.is_integer() { Atom::Int(r.to_integer()) } else { Atom::Rational(r) });
    }
    BigInt::from_str(tok).map(Atom::Int).map_err(|_| ParseError::new(pos, format!("bad number '{tok}'")))
}

/// Parses a whole document: one or more expressions.
pub fn parse(text: &str) -> Result<Vec<Node>, ParseError> {
    let mut r = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, col: 1 } };
    let mut out = Vec::new();
    loop {
        r.skip_blank();
        if r.chars.peek().is_none() {
            break;
        }
        out.push(r.node()?);
    }
    if out.is_empty() {
        return Err(ParseError::new(r.pos, "empty document"));
    }
    Ok(out)
}

pub fn parse_one(text: &str) -> Result<Node, ParseError> {
    let mut nodes = parse(text)?;
    if nodes.len() > 1 {
        return Err(nodes[1].error("expected a single expression"));
    }
    Ok(nodes.remove(0))
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) => f.write_str(s),
            Atom::Int(v) => write!(f, "{v}"),
            Atom::Rational(q) => write!(f, "{q}"),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Atom(a) => write!(f, "{a}"),
            Kind::List(items) => {
                f.write_str("(")?;
                for (i, n) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Keyword arguments of a form: `(head (key …) (key …) …)`. Each key may
/// appear once unless listed as repeatable.
pub struct Fields<'a> {
    form: &'a Node,
    entries: Vec<(&'a str, &'a Node)>,
}

impl<'a> Fields<'a> {
    pub fn new(form: &'a Node, allowed: &[&str], repeatable: &[&str]) -> Result<Self, ParseError> {
        let mut entries: Vec<(&str, &Node)> = Vec::new();
        for arg in form.args() {
            let key = arg
                .head()
                .ok_or_else(|| arg.error(format!("expected a (key …) entry in {}", form.head().unwrap_or("form"))))?;
            if !allowed.contains(&key) && !repeatable.contains(&key) {
                return Err(arg.error(format!("unknown key '{key}' in {}", form.head().unwrap_or("form"))));
            }
            if !repeatable.contains(&key) {
                if let Some((_, prev)) = entries.iter().find(|(k, _)| *k == key) {
                    return Err(arg.error(format!("duplicate key '{key}' (first given at {})", prev.pos)));
                }
            }
            entries.push((key, arg));
        }
        Ok(Fields { form, entries })
    }

    pub fn get(&self, key: &str) -> Option<&'a Node> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, n)| *n)
    }

    pub fn require(&self, key: &str) -> Result<&'a Node, ParseError> {
        self.get(key)
            .ok_or_else(|| self.form.error(format!("missing ({key} …) in {}", self.form.head().unwrap_or("form"))))
    }

    pub fn all<'b>(&'b self, key: &'b str) -> impl Iterator<Item = &'a Node> + 'b {
        self.entries.iter().filter(move |(k, _)| *k == key).map(|(_, n)| *n)
    }

    /// The single argument of `(key v)`.
    pub fn single(&self, key: &str) -> Result<Option<&'a Node>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(n) if n.args().len() == 1 => Ok(Some(&n.args()[0])),
            Some(n) => Err(n.error(format!("({key} …) takes one argument"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_numbers() {
        let n = parse_one("(mat (row 1 1) (row -1 1)) ; comment").unwrap();
        assert_eq!(n.head(), Some("mat"));
        assert_eq!(n.args().len(), 2);
        assert_eq!(n.args()[1].args()[0].as_int().unwrap(), BigInt::from(-1));
        let q = parse_one("3/6").unwrap();
        assert_eq!(q.as_rational().unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_one("4/2").unwrap().as_int().unwrap(), BigInt::from(2));
        assert_eq!(parse_one("-inf").unwrap().symbol(), Some("-inf"));
        assert_eq!(parse_one("()").unwrap().list().unwrap().len(), 0);
    }

    #[test]
    fn reports_locations() {
        let e = parse("(vol (vfcell").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 13 });
        assert!(e.message.contains("end of input"));
        let e = parse("(a)\n  )").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
        let e = parse("(a 1/0)").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 4 });
        assert!(parse("(a #)").is_err());
    }

    #[test]
    fn duplicate_keys() {
        let n = parse_one("(vfcell (n 1)\n (n 2))").unwrap();
        let e = Fields::new(&n, &["n"], &[]).err().unwrap();
        assert_eq!(e.pos.line, 2);
        assert!(e.message.contains("duplicate key 'n'"));
        let n = parse_one("(pset (cell) (cell))").unwrap();
        assert_eq!(Fields::new(&n, &[], &["cell"]).unwrap().all("cell").count(), 2);
    }

    #[test]
    fn render_round_trip() {
        let text = "(a (b 1 -2/3) () sym (c (d)))";
        let n = parse_one(text).unwrap();
        assert_eq!(n.to_string(), text);
        assert_eq!(parse_one(&n.to_string()).unwrap(), n);
    }
}
