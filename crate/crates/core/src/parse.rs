//! Parser for the plain expression syntax.
//!
//! ```text
//! expr  := power ("x" power)*
//! power := atom ("^" k)?
//! atom  := "1" | "Z" | "Z<m>" | "(" expr ")"
//!        | "Wr(" expr "," m ")" | "WrM(" expr "," m ")"
//!        | "Wr2(" expr "," m "," n ")" | "Wr2M(" expr "," m "," n ")"
//!        | "TwWr(" expr "," expr "," gamma "," m ")" | "TwWrM(" ... ")"
//! gamma := "id" | "inv" | "table[" i, ... "]"
//!        | "perm[" i, ... "]" ( "(" gamma, ... ")" )?
//! ```
//!
//! `G^k` is shorthand for the `k`-fold product; `inv` is the inversion table
//! of an abelian finite `H`.

use crate::error::{Error, Result};
use crate::expr::{GroupExpr, InvolutiveAutomorphism};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Punct(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i]
                .parse::<u64>()
                .map_err(|_| Error::Parse { pos: start, msg: "integer too large".into() })?;
            out.push((Tok::Num(n), start));
        } else if "()[],^".contains(c) {
            out.push((Tok::Punct(c), i));
            i += 1;
        } else {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.offset(), msg: msg.into() })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn number(&mut self) -> Result<u64> {
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.next();
                Ok(n)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn multiplicity(&mut self) -> Result<u64> {
        let at = self.offset();
        let n = self.number()?;
        if n == 0 {
            return Err(Error::Parse { pos: at, msg: "multiplicity must be at least 1".into() });
        }
        Ok(n)
    }

    fn expr(&mut self) -> Result<GroupExpr> {
        let mut factors = vec![self.power()?];
        while matches!(self.peek(), Tok::Ident(s) if s == "x") {
            self.next();
            factors.push(self.power()?);
        }
        Ok(GroupExpr::direct(factors))
    }

    fn power(&mut self) -> Result<GroupExpr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Punct('^') {
            self.next();
            let k = self.multiplicity()?;
            return Ok(GroupExpr::direct(vec![base; k as usize]));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<GroupExpr> {
        let at = self.offset();
        match self.next() {
            Tok::Num(1) => Ok(GroupExpr::Unit),
            Tok::Punct('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.named(&name, at),
            _ => Err(Error::Parse { pos: at, msg: "expected a group expression".into() }),
        }
    }

    fn named(&mut self, name: &str, at: usize) -> Result<GroupExpr> {
        if name == "Z" {
            return Ok(GroupExpr::IntLine);
        }
        if let Some(digits) = name.strip_prefix('Z') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let m: u64 = digits
                    .parse()
                    .map_err(|_| Error::Parse { pos: at, msg: "integer too large".into() })?;
                if m == 0 {
                    return Err(Error::Parse { pos: at, msg: "cyclic order must be at least 1".into() });
                }
                return Ok(GroupExpr::Cyclic(m));
            }
        }
        match name {
            "Wr" | "WrM" => {
                self.expect('(')?;
                let base = self.expr()?;
                self.expect(',')?;
                let m = self.multiplicity()?;
                self.expect(')')?;
                Ok(if name == "Wr" { GroupExpr::wr(base, m) } else { GroupExpr::wr_m(base, m) })
            }
            "Wr2" | "Wr2M" => {
                self.expect('(')?;
                let base = self.expr()?;
                self.expect(',')?;
                let m = self.multiplicity()?;
                self.expect(',')?;
                let n = self.multiplicity()?;
                self.expect(')')?;
                Ok(if name == "Wr2" { GroupExpr::wr2(base, m, n) } else { GroupExpr::wr2_m(base, m, n) })
            }
            "TwWr" | "TwWrM" => {
                self.expect('(')?;
                let g = self.expr()?;
                self.expect(',')?;
                let h = self.expr()?;
                self.expect(',')?;
                let gamma = self.gamma(&h)?;
                self.expect(',')?;
                let m = self.multiplicity()?;
                self.expect(')')?;
                Ok(if name == "TwWr" {
                    GroupExpr::twisted(g, h, gamma, m)
                } else {
                    GroupExpr::twisted_m(g, h, gamma, m)
                })
            }
            _ => Err(Error::Parse { pos: at, msg: format!("unknown constructor `{name}`") }),
        }
    }

    fn index_list(&mut self) -> Result<Vec<usize>> {
        self.expect('[')?;
        let mut out = Vec::new();
        if *self.peek() != Tok::Punct(']') {
            loop {
                out.push(self.number()? as usize);
                if *self.peek() == Tok::Punct(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(']')?;
        Ok(out)
    }

    fn gamma(&mut self, h: &GroupExpr) -> Result<InvolutiveAutomorphism> {
        let at = self.offset();
        let name = match self.next() {
            Tok::Ident(s) => s,
            _ => return Err(Error::Parse { pos: at, msg: "expected an involution".into() }),
        };
        match name.as_str() {
            "id" => Ok(InvolutiveAutomorphism::Identity),
            "inv" => InvolutiveAutomorphism::inversion_table(h)
                .map_err(|e| Error::Parse { pos: at, msg: format!("`inv` needs a finite H: {e}") }),
            "table" => Ok(InvolutiveAutomorphism::Table(self.index_list()?)),
            "perm" => {
                let perm = self.index_list()?;
                let factors: Vec<GroupExpr> = match h {
                    GroupExpr::Direct(fs) => fs.clone(),
                    other => vec![other.clone()],
                };
                let mut inner = vec![InvolutiveAutomorphism::Identity; perm.len()];
                if *self.peek() == Tok::Punct('(') {
                    self.next();
                    for (i, slot) in inner.iter_mut().enumerate() {
                        if i > 0 {
                            self.expect(',')?;
                        }
                        let fh = factors.get(i).cloned().unwrap_or(GroupExpr::Unit);
                        *slot = self.gamma(&fh)?;
                    }
                    self.expect(')')?;
                }
                Ok(InvolutiveAutomorphism::FactorPermutation { perm, inner })
            }
            _ => Err(Error::Parse { pos: at, msg: format!("unknown involution `{name}`") }),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<GroupExpr> {
    let mut lx = Lexer { toks: lex(text)?, pos: 0 };
    let e = lx.expr()?;
    if *lx.peek() != Tok::End {
        return lx.err("trailing input");
    }
    Ok(e)
}

/// Parses an involution of `h` in the `gamma` syntax above.
pub fn parse_gamma(text: &str, h: &GroupExpr) -> Result<InvolutiveAutomorphism> {
    let mut lx = Lexer { toks: lex(text)?, pos: 0 };
    let g = lx.gamma(h)?;
    if *lx.peek() != Tok::End {
        return lx.err("trailing input");
    }
    Ok(g)
}
