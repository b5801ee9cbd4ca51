//! Template syntax: the rendered query language plus `{name}` placeholders.
//!
//! Precedence, tightest first: `OR`, `AND`, then implicit (space)
//! conjunction. Parentheses produce a [`QueryExpr::Group`].

use super::{QueryError, QueryExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Quoted(String),
    Word(String),
    ExcludeQuoted(String),
    Placeholder(String),
    LParen,
    RParen,
    And,
    Or,
}

fn syntax(msg: impl Into<String>) -> QueryError {
    QueryError::Syntax(msg.into())
}

fn read_quoted(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Result<String, QueryError> {
    let mut s = String::new();
    for c in chars.by_ref() {
        if c == '"' {
            return Ok(s);
        }
        s.push(c);
    }
    Err(syntax("unterminated quote"))
}

/// Splits a query string into tokens. Fails on unbalanced quotes.
pub fn tokenize(input: &str) -> Result<Vec<Token>, QueryError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push(Token::LParen);
            }
            ')' => {
                chars.next();
                tokens.push(Token::RParen);
            }
            '"' => {
                chars.next();
                tokens.push(Token::Quoted(read_quoted(&mut chars)?));
            }
            '{' => {
                chars.next();
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(c) if c.is_alphanumeric() || c == '_' => name.push(c),
                        _ => return Err(syntax("malformed placeholder")),
                    }
                }
                if name.is_empty() {
                    return Err(syntax("empty placeholder name"));
                }
                tokens.push(Token::Placeholder(name));
            }
            '-' if {
                let mut ahead = chars.clone();
                ahead.next();
                ahead.peek() == Some(&'"')
            } =>
            {
                chars.next();
                chars.next();
                tokens.push(Token::ExcludeQuoted(read_quoted(&mut chars)?));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                tokens.push(match word.as_str() {
                    "AND" => Token::And,
                    "OR" => Token::Or,
                    _ => Token::Word(word),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn seq(&mut self) -> Result<QueryExpr, QueryError> {
        let mut items = Vec::new();
        while !matches!(self.peek(), None | Some(Token::RParen)) {
            items.push(self.and_expr()?);
        }
        match items.len() {
            0 => Err(syntax("empty expression")),
            1 => Ok(items.pop().expect("one item")),
            _ => Ok(QueryExpr::All(items)),
        }
    }

    fn and_expr(&mut self) -> Result<QueryExpr, QueryError> {
        let mut items = vec![self.or_expr()?];
        while self.peek() == Some(&Token::And) {
            self.next();
            items.push(self.or_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().expect("one item")
        } else {
            QueryExpr::And(items)
        })
    }

    fn or_expr(&mut self) -> Result<QueryExpr, QueryError> {
        let mut items = vec![self.atom()?];
        while self.peek() == Some(&Token::Or) {
            self.next();
            items.push(self.atom()?);
        }
        Ok(if items.len() == 1 {
            items.pop().expect("one item")
        } else {
            QueryExpr::Or(items)
        })
    }

    fn atom(&mut self) -> Result<QueryExpr, QueryError> {
        match self.next() {
            Some(Token::LParen) => {
                let inner = self.seq()?;
                match self.next() {
                    Some(Token::RParen) => Ok(QueryExpr::group(inner)),
                    _ => Err(syntax("missing closing parenthesis")),
                }
            }
            Some(Token::Quoted(text)) => Ok(QueryExpr::quoted(text)),
            Some(Token::ExcludeQuoted(text)) => Ok(QueryExpr::Exclude(text)),
            Some(Token::Placeholder(name)) => Ok(QueryExpr::Placeholder(name)),
            Some(Token::Word(w)) => word(w),
            Some(Token::RParen) => Err(syntax("unexpected ')'")),
            Some(Token::And) | Some(Token::Or) => Err(syntax("operator without left operand")),
            None => Err(syntax("unexpected end of input")),
        }
    }
}

fn word(w: String) -> Result<QueryExpr, QueryError> {
    if let Some(ext) = w.strip_prefix("filetype:") {
        return Ok(QueryExpr::FileType(ext.parse()?));
    }
    if let Some(site) = w.strip_prefix("site:") {
        if site.is_empty() {
            return Err(QueryError::BadSite(site.to_string()));
        }
        return Ok(QueryExpr::Site(site.to_string()));
    }
    if let Some(term) = w.strip_prefix('-') {
        if term.is_empty() {
            return Err(syntax("dangling '-'"));
        }
        return Ok(QueryExpr::Exclude(term.to_string()));
    }
    Ok(QueryExpr::word(w))
}

/// Template file shipped with the crate.
pub const BUNDLED_TEMPLATES: &str = include_str!("../../data/templates.txt");

/// Parses one template line.
pub fn parse_template(line: &str) -> Result<QueryExpr, QueryError> {
    let mut parser = Parser {
        tokens: tokenize(line)?,
        pos: 0,
    };
    let expr = parser.seq()?;
    if parser.pos < parser.tokens.len() {
        return Err(syntax("unbalanced ')'"));
    }
    Ok(expr)
}

/// Parses a template file: one template per line, `#` comments and blank
/// lines skipped.
pub fn parse_templates(text: &str) -> Result<Vec<QueryExpr>, QueryError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| parse_template(l).map_err(|e| QueryError::Syntax(format!("line {}: {e}", n + 1))))
        .collect()
}
