//! Text format for reaction networks.
//!
//! ```text
//! # model with a reversible birth/death pair
//! 0 <-> A + B @ 1, 1
//! B <-> 2 B   @ 1, 1
//! ```
//!
//! One reaction per line: `complex arrow complex @ rate[, rate]`. `->` takes
//! one rate, `<->` takes forward and backward rates. `0` or `∅` is the empty
//! complex. Species are indexed in order of first appearance.

use crate::error::{Error, Result};
use crate::network::{Complex, Reaction, ReactionNetwork, Species};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(u64),
    Ident(String),
    Empty,
    Plus,
    Arrow,
    BiArrow,
}

struct Lexed {
    tok: Tok,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &[(usize, char)], line: usize) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let (col, c) = text[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            out.push(Lexed { tok: Tok::Plus, column: col });
            i += 1;
        } else if c == '∅' {
            out.push(Lexed { tok: Tok::Empty, column: col });
            i += 1;
        } else if c == '-' {
            if text.get(i + 1).map(|t| t.1) == Some('>') {
                out.push(Lexed { tok: Tok::Arrow, column: col });
                i += 2;
            } else {
                return Err(syntax(line, col, "expected `->`"));
            }
        } else if c == '<' {
            if text.get(i + 1).map(|t| t.1) == Some('-') && text.get(i + 2).map(|t| t.1) == Some('>')
            {
                out.push(Lexed { tok: Tok::BiArrow, column: col });
                i += 3;
            } else {
                return Err(syntax(line, col, "expected `<->`"));
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < text.len() && text[i].1.is_ascii_digit() {
                i += 1;
            }
            let digits: String = text[start..i].iter().map(|t| t.1).collect();
            let value = digits
                .parse::<u64>()
                .map_err(|_| syntax(line, col, format!("coefficient `{digits}` out of range")))?;
            out.push(Lexed { tok: Tok::Int(value), column: col });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < text.len() && (text[i].1.is_ascii_alphanumeric() || text[i].1 == '_') {
                i += 1;
            }
            let name: String = text[start..i].iter().map(|t| t.1).collect();
            out.push(Lexed { tok: Tok::Ident(name), column: col });
        } else {
            return Err(syntax(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// Assigns species indices in first-appearance order.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    names: Vec<String>,
    reactions: Vec<(Vec<(usize, u64)>, Vec<(usize, u64)>, f64, usize)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    /// Adds `reactant -> product`; complexes are `(species name, coefficient)`
    /// lists and `line` is only used in error messages.
    pub fn add(
        &mut self,
        reactant: &[(String, u64)],
        product: &[(String, u64)],
        rate: f64,
        line: usize,
    ) -> Result<()> {
        let mut sides = Vec::with_capacity(2);
        for side in [reactant, product] {
            let mut terms: Vec<(usize, u64)> = Vec::with_capacity(side.len());
            for (name, coeff) in side {
                let idx = self.intern(name);
                if terms.iter().any(|&(j, _)| j == idx) {
                    return Err(Error::DuplicateSpecies {
                        line,
                        name: name.clone(),
                    });
                }
                terms.push((idx, *coeff));
            }
            sides.push(terms);
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::NonPositiveRate { line, value: rate });
        }
        let product = sides.pop().unwrap();
        let reactant = sides.pop().unwrap();
        self.reactions.push((reactant, product, rate, line));
        Ok(())
    }

    pub fn build(self) -> Result<ReactionNetwork> {
        let d = self.names.len();
        let dense = |terms: &[(usize, u64)]| {
            let mut v = vec![0u64; d];
            for &(i, c) in terms {
                v[i] = c;
            }
            Complex::new(v)
        };
        let mut reactions = Vec::with_capacity(self.reactions.len());
        for (r, p, rate, line) in &self.reactions {
            let (r, p) = (dense(r), dense(p));
            if r == p {
                return Err(Error::ReactantEqualsProduct { line: *line });
            }
            reactions.push(Reaction {
                reactant: r,
                product: p,
                rate_constant: *rate,
            });
        }
        let species = self
            .names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species { index, name })
            .collect();
        ReactionNetwork::new(species, reactions)
    }
}

fn parse_complex(
    toks: &[Lexed],
    pos: &mut usize,
    line: usize,
    end_col: usize,
) -> Result<Vec<(String, u64)>> {
    let col_at = |p: usize| toks.get(p).map_or(end_col, |t| t.column);
    match toks.get(*pos).map(|t| &t.tok) {
        Some(Tok::Empty) => {
            *pos += 1;
            return Ok(Vec::new());
        }
        Some(Tok::Int(0)) if !matches!(toks.get(*pos + 1).map(|t| &t.tok), Some(Tok::Ident(_))) => {
            *pos += 1;
            return Ok(Vec::new());
        }
        _ => {}
    }
    let mut terms = Vec::new();
    loop {
        let mut coeff = 1;
        if let Some(Tok::Int(c)) = toks.get(*pos).map(|t| &t.tok) {
            if *c == 0 {
                return Err(syntax(line, col_at(*pos), "zero coefficient"));
            }
            coeff = *c;
            *pos += 1;
        }
        match toks.get(*pos).map(|t| &t.tok) {
            Some(Tok::Ident(name)) => {
                terms.push((name.clone(), coeff));
                *pos += 1;
            }
            _ => return Err(syntax(line, col_at(*pos), "expected species name")),
        }
        if let Some(Tok::Plus) = toks.get(*pos).map(|t| &t.tok) {
            *pos += 1;
        } else {
            return Ok(terms);
        }
    }
}

fn parse_rate(text: &[(usize, char)], line: usize) -> Result<f64> {
    let trimmed: Vec<(usize, char)> = text
        .iter()
        .copied()
        .skip_while(|t| t.1.is_whitespace())
        .collect();
    let col = trimmed.first().map_or_else(|| text.last().map_or(1, |t| t.0 + 1), |t| t.0);
    let s: String = trimmed.iter().map(|t| t.1).collect::<String>().trim_end().to_string();
    if s.is_empty() {
        return Err(syntax(line, col, "missing rate constant"));
    }
    let allowed = |c: char| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-');
    if !s.chars().all(allowed) {
        return Err(syntax(line, col, format!("invalid rate `{s}`")));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| syntax(line, col, format!("invalid rate `{s}`")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::NonPositiveRate { line, value: v });
    }
    Ok(v)
}

pub fn parse_network(text: &str) -> Result<ReactionNetwork> {
    let mut builder = NetworkBuilder::new();
    let mut any = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let chars: Vec<(usize, char)> = raw
            .chars()
            .enumerate()
            .map(|(i, c)| (i + 1, c))
            .take_while(|&(_, c)| c != '#')
            .collect();
        if chars.iter().all(|t| t.1.is_whitespace()) {
            continue;
        }
        let end_col = chars.last().map_or(1, |t| t.0 + 1);
        let at = chars
            .iter()
            .position(|t| t.1 == '@')
            .ok_or_else(|| syntax(line, end_col, "missing `@ rate`"))?;
        let toks = lex(&chars[..at], line)?;
        let at_col = chars[at].0;

        let mut pos = 0;
        let reactant = parse_complex(&toks, &mut pos, line, at_col)?;
        let reversible = match toks.get(pos).map(|t| &t.tok) {
            Some(Tok::Arrow) => false,
            Some(Tok::BiArrow) => true,
            _ => {
                let col = toks.get(pos).map_or(at_col, |t| t.column);
                return Err(syntax(line, col, "expected `->` or `<->`"));
            }
        };
        pos += 1;
        let product = parse_complex(&toks, &mut pos, line, at_col)?;
        if let Some(t) = toks.get(pos) {
            return Err(syntax(line, t.column, "expected `@`"));
        }

        let rate_text = &chars[at + 1..];
        let rates: Vec<&[(usize, char)]> = rate_text.split(|t| t.1 == ',').collect();
        match (reversible, rates.len()) {
            (false, 1) => {
                let k = parse_rate(rates[0], line)?;
                builder.add(&reactant, &product, k, line)?;
            }
            (true, 2) => {
                let kf = parse_rate(rates[0], line)?;
                let kb = parse_rate(rates[1], line)?;
                builder.add(&reactant, &product, kf, line)?;
                builder.add(&product, &reactant, kb, line)?;
            }
            (false, _) => return Err(syntax(line, at_col, "`->` takes exactly one rate")),
            (true, _) => {
                return Err(syntax(line, at_col, "`<->` takes a forward and a backward rate"))
            }
        }
        any = true;
    }
    if !any {
        return Err(Error::EmptyNetwork);
    }
    builder.build()
}

fn render_complex(net: &ReactionNetwork, c: &Complex) -> String {
    if c.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (s, &k) in net.species().iter().zip(c.coefficients()) {
        match k {
            0 => {}
            1 => parts.push(s.name.clone()),
            k => parts.push(format!("{k} {}", s.name)),
        }
    }
    parts.join(" + ")
}

/// Canonical text form. Adjacent mutually reverse reactions are written as
/// one `<->` line.
pub fn render_network(net: &ReactionNetwork) -> String {
    let rs = net.reactions();
    let mut lines = Vec::new();
    let mut i = 0;
    while i < rs.len() {
        let r = &rs[i];
        let lhs = render_complex(net, &r.reactant);
        let rhs = render_complex(net, &r.product);
        match rs.get(i + 1) {
            Some(next) if next.reactant == r.product && next.product == r.reactant => {
                lines.push(format!(
                    "{lhs} <-> {rhs} @ {}, {}",
                    r.rate_constant, next.rate_constant
                ));
                i += 2;
            }
            _ => {
                lines.push(format!("{lhs} -> {rhs} @ {}", r.rate_constant));
                i += 1;
            }
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
