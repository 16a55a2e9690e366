//! Element arithmetic.
//!
//! A [`Carrier`] is the evaluable form of a [`GroupExpr`]: the same tree with
//! every shift group either `Z` (`modulus: None`) or a cyclic group of the
//! given modulus. Periodic expressions (`WrM`, `Wr2M`, `TwWrM`) and the finite
//! quotients used for exhaustive checks are both carriers with moduli.
//!
//! All laws use the left shift `phi(a)_i = a_{i+1}`, so that
//! `(a; k)(b; l) = (a_i b_{i+k}; k + l)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use serde_json::Value;

use crate::concrete::ConcreteGroup;
use crate::error::{Error, Result};
use crate::expr::{GroupExpr, InvolutiveAutomorphism};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Unit,
    Int(BigInt),
    Res(u64),
    Tuple(Vec<Element>),
    Wreath { coords: Vec<Element>, shift: BigInt },
    Wreath2 { rows: Vec<Vec<Element>>, shift: (BigInt, BigInt) },
    Twisted { a: Vec<Element>, b: Vec<Element>, shift: BigInt },
}

impl Element {
    pub fn int(k: i64) -> Self {
        Element::Int(BigInt::from(k))
    }

    pub fn wreath(coords: Vec<Element>, shift: i64) -> Self {
        Element::Wreath { coords, shift: BigInt::from(shift) }
    }

    pub fn twisted(a: Vec<Element>, b: Vec<Element>, shift: i64) -> Self {
        Element::Twisted { a, b, shift: BigInt::from(shift) }
    }

    pub fn to_json(&self) -> Value {
        fn big(k: &BigInt) -> Value {
            match k.to_i64() {
                Some(v) => Value::from(v),
                None => Value::String(k.to_string()),
            }
        }
        fn list(xs: &[Element]) -> Value {
            Value::Array(xs.iter().map(Element::to_json).collect())
        }
        match self {
            Element::Unit => Value::Array(vec![]),
            Element::Int(k) => big(k),
            Element::Res(r) => Value::from(*r),
            Element::Tuple(xs) => list(xs),
            Element::Wreath { coords, shift } => Value::Array(vec![list(coords), big(shift)]),
            Element::Wreath2 { rows, shift } => Value::Array(vec![
                Value::Array(rows.iter().map(|r| list(r)).collect()),
                Value::Array(vec![big(&shift.0), big(&shift.1)]),
            ]),
            Element::Twisted { a, b, shift } => Value::Array(vec![list(a), list(b), big(shift)]),
        }
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

#[derive(Debug, Clone)]
pub enum Carrier {
    Unit,
    Integers,
    Cyclic(u64),
    Direct(Vec<Carrier>),
    Wreath { base: Box<Carrier>, m: usize, modulus: Option<u64> },
    Wreath2 { base: Box<Carrier>, m: usize, n: usize, moduli: Option<(u64, u64)> },
    Twisted {
        g: Box<Carrier>,
        h: Box<Carrier>,
        gamma: InvolutiveAutomorphism,
        m: usize,
        modulus: Option<u64>,
    },
    /// A finite group given by its table; elements are `Res(index)`.
    Table(Arc<ConcreteGroup>),
}

fn reduce(k: BigInt, modulus: Option<u64>) -> BigInt {
    match modulus {
        Some(q) => k.mod_floor(&BigInt::from(q)),
        None => k,
    }
}

fn residue(k: &BigInt, m: usize) -> usize {
    k.mod_floor(&BigInt::from(m)).to_usize().unwrap()
}

fn checked_order(parts: impl IntoIterator<Item = Option<u128>>) -> Option<u128> {
    let mut acc: u128 = 1;
    for p in parts {
        acc = acc.saturating_mul(p?);
    }
    Some(acc)
}

fn pow_order(base: Option<u128>, e: usize) -> Option<u128> {
    checked_order(std::iter::repeat_n(base, e))
}

impl Carrier {
    /// Exact carrier of an expression; `Z` stays infinite.
    pub fn from_expr(e: &GroupExpr) -> Carrier {
        Self::build(e, None).expect("exact carriers never fail")
    }

    /// Carrier of the quotient replacing every shift group `Z` by
    /// `Z_{period * n}`. With `int_leaves`, bare `Z` leaves become `Z_n`;
    /// otherwise they are an error.
    pub fn quotient(e: &GroupExpr, n: u64, int_leaves: bool) -> Result<Carrier> {
        if n == 0 {
            return Err(Error::Precondition("quotient multiplier must be at least 1".into()));
        }
        Self::build(e, Some((n, int_leaves)))
    }

    fn build(e: &GroupExpr, q: Option<(u64, bool)>) -> Result<Carrier> {
        let per = |period: u64| q.map(|(n, _)| period * n);
        Ok(match e {
            GroupExpr::Unit => Carrier::Unit,
            GroupExpr::IntLine => match q {
                None => Carrier::Integers,
                Some((n, true)) => Carrier::Cyclic(n),
                Some((_, false)) => return Err(Error::InfiniteLeaf(e.to_string())),
            },
            GroupExpr::Cyclic(m) => Carrier::Cyclic(*m),
            GroupExpr::Direct(fs) => {
                Carrier::Direct(fs.iter().map(|f| Self::build(f, q)).collect::<Result<_>>()?)
            }
            GroupExpr::WrZ { base, m } => Carrier::Wreath {
                base: Box::new(Self::build(base, q)?),
                m: *m as usize,
                modulus: per(*m),
            },
            GroupExpr::WrZm { base, m } => Carrier::Wreath {
                base: Box::new(Self::build(base, q)?),
                m: *m as usize,
                modulus: Some(*m),
            },
            GroupExpr::WrZZ { base, m, n } => Carrier::Wreath2 {
                base: Box::new(Self::build(base, q)?),
                m: *m as usize,
                n: *n as usize,
                moduli: q.map(|(k, _)| (m * k, n * k)),
            },
            GroupExpr::WrZZmn { base, m, n } => Carrier::Wreath2 {
                base: Box::new(Self::build(base, q)?),
                m: *m as usize,
                n: *n as usize,
                moduli: Some((*m, *n)),
            },
            GroupExpr::TwistedWrZ { g, h, gamma, m } => Carrier::Twisted {
                g: Box::new(Self::build(g, q)?),
                h: Box::new(Self::build(h, q)?),
                gamma: gamma.clone(),
                m: *m as usize,
                modulus: per(2 * m),
            },
            GroupExpr::TwistedWrZm { g, h, gamma, m } => Carrier::Twisted {
                g: Box::new(Self::build(g, q)?),
                h: Box::new(Self::build(h, q)?),
                gamma: gamma.clone(),
                m: *m as usize,
                modulus: Some(2 * m),
            },
        })
    }

    pub fn identity(&self) -> Element {
        match self {
            Carrier::Unit => Element::Unit,
            Carrier::Integers => Element::Int(BigInt::zero()),
            Carrier::Cyclic(_) => Element::Res(0),
            Carrier::Table(t) => Element::Res(t.identity() as u64),
            Carrier::Direct(fs) => Element::Tuple(fs.iter().map(Carrier::identity).collect()),
            Carrier::Wreath { base, m, .. } => Element::Wreath {
                coords: vec![base.identity(); *m],
                shift: BigInt::zero(),
            },
            Carrier::Wreath2 { base, m, n, .. } => Element::Wreath2 {
                rows: vec![vec![base.identity(); *n]; *m],
                shift: (BigInt::zero(), BigInt::zero()),
            },
            Carrier::Twisted { g, h, m, .. } => Element::Twisted {
                a: vec![g.identity(); 2 * m],
                b: vec![h.identity(); *m],
                shift: BigInt::zero(),
            },
        }
    }

    /// Checks that `u` has exactly the shape of this carrier with residues
    /// in canonical range.
    pub fn check(&self, u: &Element) -> Result<()> {
        let bad = || Err(Error::Shape(format!("element {u} does not fit {}", self.describe())));
        let in_range = |k: &BigInt, q: Option<u64>| match q {
            Some(q) => !k.is_negative() && *k < BigInt::from(q),
            None => true,
        };
        match (self, u) {
            (Carrier::Unit, Element::Unit) | (Carrier::Integers, Element::Int(_)) => Ok(()),
            (Carrier::Cyclic(m), Element::Res(r)) if r < m => Ok(()),
            (Carrier::Table(t), Element::Res(r)) if (*r as usize) < t.order() => Ok(()),
            (Carrier::Direct(fs), Element::Tuple(xs)) if fs.len() == xs.len() => {
                fs.iter().zip(xs).try_for_each(|(f, x)| f.check(x))
            }
            (Carrier::Wreath { base, m, modulus }, Element::Wreath { coords, shift })
                if coords.len() == *m && in_range(shift, *modulus) =>
            {
                coords.iter().try_for_each(|c| base.check(c))
            }
            (Carrier::Wreath2 { base, m, n, moduli }, Element::Wreath2 { rows, shift })
                if rows.len() == *m
                    && rows.iter().all(|r| r.len() == *n)
                    && in_range(&shift.0, moduli.map(|q| q.0))
                    && in_range(&shift.1, moduli.map(|q| q.1)) =>
            {
                rows.iter().flatten().try_for_each(|c| base.check(c))
            }
            (Carrier::Twisted { g, h, m, modulus, .. }, Element::Twisted { a, b, shift })
                if a.len() == 2 * m && b.len() == *m && in_range(shift, *modulus) =>
            {
                a.iter().try_for_each(|x| g.check(x))?;
                b.iter().try_for_each(|x| h.check(x))
            }
            _ => bad(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Carrier::Unit => "1".into(),
            Carrier::Integers => "Z".into(),
            Carrier::Cyclic(m) => format!("Z{m}"),
            Carrier::Table(t) => format!("table of order {}", t.order()),
            Carrier::Direct(fs) => format!("product of {} factors", fs.len()),
            Carrier::Wreath { m, .. } => format!("wreath with {m} coordinates"),
            Carrier::Wreath2 { m, n, .. } => format!("{m}x{n} matrix wreath"),
            Carrier::Twisted { m, .. } => format!("twisted wreath with m = {m}"),
        }
    }

    pub fn mul(&self, u: &Element, v: &Element) -> Result<Element> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.mul_raw(u, v))
    }

    /// Multiplication without shape checks. Panics on malformed input.
    pub fn mul_raw(&self, u: &Element, v: &Element) -> Element {
        match (self, u, v) {
            (Carrier::Unit, _, _) => Element::Unit,
            (Carrier::Integers, Element::Int(x), Element::Int(y)) => Element::Int(x + y),
            (Carrier::Cyclic(m), Element::Res(x), Element::Res(y)) => Element::Res((x + y) % m),
            (Carrier::Table(t), Element::Res(x), Element::Res(y)) => {
                Element::Res(t.mul(*x as usize, *y as usize) as u64)
            }
            (Carrier::Direct(fs), Element::Tuple(xs), Element::Tuple(ys)) => Element::Tuple(
                fs.iter().zip(xs.iter().zip(ys)).map(|(f, (x, y))| f.mul_raw(x, y)).collect(),
            ),
            (
                Carrier::Wreath { base, m, modulus },
                Element::Wreath { coords: a, shift: k },
                Element::Wreath { coords: b, shift: l },
            ) => {
                let s = residue(k, *m);
                let coords = (0..*m).map(|i| base.mul_raw(&a[i], &b[(i + s) % m])).collect();
                Element::Wreath { coords, shift: reduce(k + l, *modulus) }
            }
            (
                Carrier::Wreath2 { base, m, n, moduli },
                Element::Wreath2 { rows: a, shift: (k1, k2) },
                Element::Wreath2 { rows: b, shift: (l1, l2) },
            ) => {
                let (s, t) = (residue(k1, *m), residue(k2, *n));
                let rows = (0..*m)
                    .map(|i| {
                        (0..*n).map(|j| base.mul_raw(&a[i][j], &b[(i + s) % m][(j + t) % n])).collect()
                    })
                    .collect();
                Element::Wreath2 {
                    rows,
                    shift: (reduce(k1 + l1, moduli.map(|q| q.0)), reduce(k2 + l2, moduli.map(|q| q.1))),
                }
            }
            (
                Carrier::Twisted { g, h, gamma, m, modulus },
                Element::Twisted { a, b, shift: k },
                Element::Twisted { a: c, b: d, shift: l },
            ) => {
                let (c2, d2) = twisted_shift(h, gamma, *m, c, d, residue(k, 2 * m));
                Element::Twisted {
                    a: a.iter().zip(&c2).map(|(x, y)| g.mul_raw(x, y)).collect(),
                    b: b.iter().zip(&d2).map(|(x, y)| h.mul_raw(x, y)).collect(),
                    shift: reduce(k + l, *modulus),
                }
            }
            _ => panic!("element shape does not match carrier"),
        }
    }

    pub fn inverse(&self, u: &Element) -> Result<Element> {
        self.check(u)?;
        Ok(self.inverse_raw(u))
    }

    pub fn inverse_raw(&self, u: &Element) -> Element {
        match (self, u) {
            (Carrier::Unit, _) => Element::Unit,
            (Carrier::Integers, Element::Int(x)) => Element::Int(-x),
            (Carrier::Cyclic(m), Element::Res(x)) => Element::Res((m - x) % m),
            (Carrier::Table(t), Element::Res(x)) => Element::Res(t.inv(*x as usize) as u64),
            (Carrier::Direct(fs), Element::Tuple(xs)) => {
                Element::Tuple(fs.iter().zip(xs).map(|(f, x)| f.inverse_raw(x)).collect())
            }
            (Carrier::Wreath { base, m, modulus }, Element::Wreath { coords, shift }) => {
                let s = residue(shift, *m);
                let coords = (0..*m).map(|j| base.inverse_raw(&coords[(j + m - s) % m])).collect();
                Element::Wreath { coords, shift: reduce(-shift, *modulus) }
            }
            (Carrier::Wreath2 { base, m, n, moduli }, Element::Wreath2 { rows, shift: (k1, k2) }) => {
                let (s, t) = (residue(k1, *m), residue(k2, *n));
                let rows = (0..*m)
                    .map(|i| (0..*n).map(|j| base.inverse_raw(&rows[(i + m - s) % m][(j + n - t) % n])).collect())
                    .collect();
                Element::Wreath2 {
                    rows,
                    shift: (reduce(-k1, moduli.map(|q| q.0)), reduce(-k2, moduli.map(|q| q.1))),
                }
            }
            (Carrier::Twisted { g, h, gamma, m, modulus }, Element::Twisted { a, b, shift }) => {
                let ai: Vec<Element> = a.iter().map(|x| g.inverse_raw(x)).collect();
                let bi: Vec<Element> = b.iter().map(|x| h.inverse_raw(x)).collect();
                let back = (2 * m - residue(shift, 2 * m)) % (2 * m);
                let (a2, b2) = twisted_shift(h, gamma, *m, &ai, &bi, back);
                Element::Twisted { a: a2, b: b2, shift: reduce(-shift, *modulus) }
            }
            _ => panic!("element shape does not match carrier"),
        }
    }

    pub fn power(&self, u: &Element, n: &BigInt) -> Result<Element> {
        self.check(u)?;
        let (mut base, mut e) = if n.is_negative() {
            (self.inverse_raw(u), -n.clone())
        } else {
            (u.clone(), n.clone())
        };
        let mut acc = self.identity();
        let two = BigInt::from(2);
        while !e.is_zero() {
            if e.is_odd() {
                acc = self.mul_raw(&acc, &base);
            }
            e /= &two;
            if !e.is_zero() {
                base = self.mul_raw(&base, &base);
            }
        }
        Ok(acc)
    }

    /// Least `n <= bound` with `u^n = e`. Elements with a nonzero image in
    /// the free shift or `Z` coordinates have infinite order and return
    /// `None` immediately.
    pub fn element_order(&self, u: &Element, bound: u64) -> Result<Option<u64>> {
        self.check(u)?;
        if self.has_free_part(u) {
            return Ok(None);
        }
        let id = self.identity();
        let mut x = u.clone();
        for n in 1..=bound {
            if x == id {
                return Ok(Some(n));
            }
            x = self.mul_raw(&x, u);
        }
        Ok(None)
    }

    fn has_free_part(&self, u: &Element) -> bool {
        match (self, u) {
            (Carrier::Integers, Element::Int(x)) => !x.is_zero(),
            (Carrier::Direct(fs), Element::Tuple(xs)) => fs.iter().zip(xs).any(|(f, x)| f.has_free_part(x)),
            (Carrier::Wreath { modulus: None, .. }, Element::Wreath { shift, .. })
            | (Carrier::Twisted { modulus: None, .. }, Element::Twisted { shift, .. }) => !shift.is_zero(),
            (Carrier::Wreath2 { moduli: None, .. }, Element::Wreath2 { shift, .. }) => {
                !shift.0.is_zero() || !shift.1.is_zero()
            }
            _ => false,
        }
    }

    /// `None` for infinite carriers; saturates at `u128::MAX`.
    pub fn order(&self) -> Option<u128> {
        match self {
            Carrier::Unit => Some(1),
            Carrier::Integers => None,
            Carrier::Cyclic(m) => Some(*m as u128),
            Carrier::Table(t) => Some(t.order() as u128),
            Carrier::Direct(fs) => checked_order(fs.iter().map(Carrier::order)),
            Carrier::Wreath { base, m, modulus } => {
                checked_order([pow_order(base.order(), *m), modulus.map(u128::from)])
            }
            Carrier::Wreath2 { base, m, n, moduli } => checked_order([
                pow_order(base.order(), m * n),
                moduli.map(|q| q.0 as u128 * q.1 as u128),
            ]),
            Carrier::Twisted { g, h, m, modulus, .. } => checked_order([
                pow_order(g.order(), 2 * m),
                pow_order(h.order(), *m),
                modulus.map(u128::from),
            ]),
        }
    }

    /// Position of `u` in the canonical enumeration of a finite carrier:
    /// mixed radix, first coordinate most significant, shifts last.
    pub fn index_of(&self, u: &Element) -> usize {
        let mut digits = Vec::new();
        self.digits(u, &mut digits);
        digits.iter().fold(0usize, |acc, &(d, radix)| acc * radix + d)
    }

    fn digits(&self, u: &Element, out: &mut Vec<(usize, usize)>) {
        match (self, u) {
            (Carrier::Unit, _) => {}
            (Carrier::Cyclic(m), Element::Res(r)) => out.push((*r as usize, *m as usize)),
            (Carrier::Table(t), Element::Res(r)) => out.push((*r as usize, t.order())),
            (Carrier::Direct(fs), Element::Tuple(xs)) => {
                fs.iter().zip(xs).for_each(|(f, x)| f.digits(x, out))
            }
            (Carrier::Wreath { base, modulus: Some(q), .. }, Element::Wreath { coords, shift }) => {
                coords.iter().for_each(|c| base.digits(c, out));
                out.push((shift.to_usize().unwrap(), *q as usize));
            }
            (Carrier::Wreath2 { base, moduli: Some(q), .. }, Element::Wreath2 { rows, shift }) => {
                rows.iter().flatten().for_each(|c| base.digits(c, out));
                out.push((shift.0.to_usize().unwrap(), q.0 as usize));
                out.push((shift.1.to_usize().unwrap(), q.1 as usize));
            }
            (Carrier::Twisted { g, h, modulus: Some(q), .. }, Element::Twisted { a, b, shift }) => {
                a.iter().for_each(|x| g.digits(x, out));
                b.iter().for_each(|x| h.digits(x, out));
                out.push((shift.to_usize().unwrap(), *q as usize));
            }
            _ => panic!("index_of needs a finite carrier and a matching element"),
        }
    }

    /// Inverse of [`Carrier::index_of`].
    pub fn element_at(&self, index: usize) -> Element {
        let mut rest = index;
        self.decode(&mut rest)
    }

    // Decodes from the least significant end, so children are visited in
    // reverse.
    fn decode(&self, rest: &mut usize) -> Element {
        fn take(rest: &mut usize, radix: usize) -> usize {
            let d = *rest % radix;
            *rest /= radix;
            d
        }
        match self {
            Carrier::Unit => Element::Unit,
            Carrier::Integers => panic!("element_at needs a finite carrier"),
            Carrier::Cyclic(m) => Element::Res(take(rest, *m as usize) as u64),
            Carrier::Table(t) => Element::Res(take(rest, t.order()) as u64),
            Carrier::Direct(fs) => {
                let mut xs: Vec<Element> = fs.iter().rev().map(|f| f.decode(rest)).collect();
                xs.reverse();
                Element::Tuple(xs)
            }
            Carrier::Wreath { base, m, modulus } => {
                let q = modulus.expect("element_at needs a finite carrier") as usize;
                let shift = BigInt::from(take(rest, q));
                let mut coords: Vec<Element> = (0..*m).map(|_| base.decode(rest)).collect();
                coords.reverse();
                Element::Wreath { coords, shift }
            }
            Carrier::Wreath2 { base, m, n, moduli } => {
                let q = moduli.expect("element_at needs a finite carrier");
                let l = BigInt::from(take(rest, q.1 as usize));
                let k = BigInt::from(take(rest, q.0 as usize));
                let mut flat: Vec<Element> = (0..m * n).map(|_| base.decode(rest)).collect();
                flat.reverse();
                let rows = flat.chunks(*n).map(|r| r.to_vec()).collect();
                Element::Wreath2 { rows, shift: (k, l) }
            }
            Carrier::Twisted { g, h, m, modulus, .. } => {
                let q = modulus.expect("element_at needs a finite carrier") as usize;
                let shift = BigInt::from(take(rest, q));
                let mut b: Vec<Element> = (0..*m).map(|_| h.decode(rest)).collect();
                b.reverse();
                let mut a: Vec<Element> = (0..2 * m).map(|_| g.decode(rest)).collect();
                a.reverse();
                Element::Twisted { a, b, shift }
            }
        }
    }

    /// Uniform on finite parts; `Z` coordinates uniform in `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, bound: i64) -> Element {
        let free = |rng: &mut R, q: Option<u64>| match q {
            Some(q) => BigInt::from(rng.gen_range(0..q)),
            None => BigInt::from(rng.gen_range(-bound..=bound)),
        };
        match self {
            Carrier::Unit => Element::Unit,
            Carrier::Integers => Element::Int(free(rng, None)),
            Carrier::Cyclic(m) => Element::Res(rng.gen_range(0..*m)),
            Carrier::Table(t) => Element::Res(rng.gen_range(0..t.order() as u64)),
            Carrier::Direct(fs) => Element::Tuple(fs.iter().map(|f| f.random(rng, bound)).collect()),
            Carrier::Wreath { base, m, modulus } => Element::Wreath {
                coords: (0..*m).map(|_| base.random(rng, bound)).collect(),
                shift: free(rng, *modulus),
            },
            Carrier::Wreath2 { base, m, n, moduli } => Element::Wreath2 {
                rows: (0..*m).map(|_| (0..*n).map(|_| base.random(rng, bound)).collect()).collect(),
                shift: (free(rng, moduli.map(|q| q.0)), free(rng, moduli.map(|q| q.1))),
            },
            Carrier::Twisted { g, h, m, modulus, .. } => Element::Twisted {
                a: (0..2 * m).map(|_| g.random(rng, bound)).collect(),
                b: (0..*m).map(|_| h.random(rng, bound)).collect(),
                shift: free(rng, *modulus),
            },
        }
    }

    pub fn element_from_json(&self, v: &Value) -> Result<Element> {
        let bad = || Error::Shape(format!("JSON value {v} does not fit {}", self.describe()));
        let big = |v: &Value| -> Result<BigInt> {
            match v {
                Value::Number(n) => n.as_i64().map(BigInt::from).ok_or_else(bad),
                Value::String(s) => s.parse::<BigInt>().map_err(|_| bad()),
                _ => Err(bad()),
            }
        };
        let arr = |v: &Value| -> Result<Vec<Value>> { v.as_array().cloned().ok_or_else(bad) };
        let list = |c: &Carrier, v: &Value, len: usize| -> Result<Vec<Element>> {
            let xs = arr(v)?;
            if xs.len() != len {
                return Err(bad());
            }
            xs.iter().map(|x| c.element_from_json(x)).collect()
        };
        let e = match self {
            Carrier::Unit => {
                if arr(v)?.is_empty() {
                    Element::Unit
                } else {
                    return Err(bad());
                }
            }
            Carrier::Integers => Element::Int(big(v)?),
            Carrier::Cyclic(_) | Carrier::Table(_) => {
                Element::Res(big(v)?.to_u64().ok_or_else(bad)?)
            }
            Carrier::Direct(fs) => {
                let xs = arr(v)?;
                if xs.len() != fs.len() {
                    return Err(bad());
                }
                Element::Tuple(fs.iter().zip(&xs).map(|(f, x)| f.element_from_json(x)).collect::<Result<_>>()?)
            }
            Carrier::Wreath { base, m, .. } => {
                let p = arr(v)?;
                if p.len() != 2 {
                    return Err(bad());
                }
                Element::Wreath { coords: list(base, &p[0], *m)?, shift: big(&p[1])? }
            }
            Carrier::Wreath2 { base, m, n, .. } => {
                let p = arr(v)?;
                if p.len() != 2 {
                    return Err(bad());
                }
                let rows_v = arr(&p[0])?;
                if rows_v.len() != *m {
                    return Err(bad());
                }
                let rows = rows_v.iter().map(|r| list(base, r, *n)).collect::<Result<_>>()?;
                let s = arr(&p[1])?;
                if s.len() != 2 {
                    return Err(bad());
                }
                Element::Wreath2 { rows, shift: (big(&s[0])?, big(&s[1])?) }
            }
            Carrier::Twisted { g, h, m, .. } => {
                let p = arr(v)?;
                if p.len() != 3 {
                    return Err(bad());
                }
                Element::Twisted { a: list(g, &p[0], 2 * m)?, b: list(h, &p[1], *m)?, shift: big(&p[2])? }
            }
        };
        self.check(&e)?;
        Ok(e)
    }
}

/// `beta^k` on the tuple part of a twisted product via the closed form: the
/// `a`-tuple is shifted by `k` modulo `2m`; position `j` of the `b`-tuple
/// receives `d_{j+k'}` or `gamma(d_{j+k'-m})` for `k' < m`, and
/// `gamma(d_{j+r})` or `d_{j+r-m}` for `k' = m + r`.
fn twisted_shift(
    h: &Carrier,
    gamma: &InvolutiveAutomorphism,
    m: usize,
    c: &[Element],
    d: &[Element],
    k: usize,
) -> (Vec<Element>, Vec<Element>) {
    let a = (0..2 * m).map(|i| c[(i + k) % (2 * m)].clone()).collect();
    let b = if k < m {
        (0..m)
            .map(|j| if j < m - k { d[j + k].clone() } else { apply_gamma(gamma, h, &d[j + k - m]) })
            .collect()
    } else {
        let r = k - m;
        (0..m)
            .map(|j| if j < m - r { apply_gamma(gamma, h, &d[j + r]) } else { d[j + r - m].clone() })
            .collect()
    };
    (a, b)
}

/// Evaluates `gamma` on an element of the carrier `h`.
pub fn apply_gamma(gamma: &InvolutiveAutomorphism, h: &Carrier, x: &Element) -> Element {
    match gamma {
        InvolutiveAutomorphism::Identity => x.clone(),
        InvolutiveAutomorphism::FactorPermutation { perm, inner } => match (h, x) {
            (Carrier::Direct(fs), Element::Tuple(xs)) => {
                let mut out = vec![Element::Unit; xs.len()];
                for i in 0..xs.len() {
                    out[perm[i]] = apply_gamma(&inner[i], &fs[i], &xs[i]);
                }
                Element::Tuple(out)
            }
            _ => apply_gamma(&inner[0], h, x),
        },
        InvolutiveAutomorphism::Table(map) => h.element_at(map[h.index_of(x)]),
    }
}

/// `gamma` as an index table over the canonical enumeration of `h`.
pub fn gamma_table(gamma: &InvolutiveAutomorphism, h: &Carrier, n: usize) -> Vec<usize> {
    (0..n).map(|x| h.index_of(&apply_gamma(gamma, h, &h.element_at(x)))).collect()
}

/// One step of `beta`: `(a_1, .., a_{2m-1}, a_0; b_1, .., b_{m-1}, gamma(b_0))`.
pub fn beta_step(h: &Carrier, gamma: &InvolutiveAutomorphism, a: &[Element], b: &[Element]) -> (Vec<Element>, Vec<Element>) {
    let mut a2 = a[1..].to_vec();
    a2.push(a[0].clone());
    let mut b2 = b[1..].to_vec();
    b2.push(apply_gamma(gamma, h, &b[0]));
    (a2, b2)
}

/// One step of `beta^-1`.
pub fn beta_inverse_step(
    h: &Carrier,
    gamma: &InvolutiveAutomorphism,
    a: &[Element],
    b: &[Element],
) -> (Vec<Element>, Vec<Element>) {
    let mut a2 = vec![a[a.len() - 1].clone()];
    a2.extend_from_slice(&a[..a.len() - 1]);
    let mut b2 = vec![apply_gamma(gamma, h, &b[b.len() - 1])];
    b2.extend_from_slice(&b[..b.len() - 1]);
    (a2, b2)
}

/// The generic semidirect law `(a, k)(b, l) = (a phi^k(b), k + l)` with
/// `phi^k` applied one step at a time.
pub fn semidirect_mul<L>(
    kernel_mul: impl Fn(&L, &L) -> L,
    phi: impl Fn(&L) -> L,
    phi_inv: impl Fn(&L) -> L,
    (a, k): (&L, &BigInt),
    (b, l): (&L, &BigInt),
) -> (L, BigInt)
where
    L: Clone,
{
    let mut moved = b.clone();
    let steps = k.abs().to_u64().expect("shift too large for stepwise evaluation");
    for _ in 0..steps {
        moved = if k.is_positive() { phi(&moved) } else { phi_inv(&moved) };
    }
    (kernel_mul(a, &moved), k + l)
}

/// Product in a twisted carrier through [`semidirect_mul`] with single
/// `beta` steps. Independent of the closed form used by [`Carrier::mul`].
pub fn twisted_mul_oracle(carrier: &Carrier, u: &Element, v: &Element) -> Result<Element> {
    carrier.check(u)?;
    carrier.check(v)?;
    let Carrier::Twisted { g, h, gamma, modulus, .. } = carrier else {
        return Err(Error::Shape("the oracle needs a twisted carrier".into()));
    };
    let (Element::Twisted { a, b, shift: k }, Element::Twisted { a: c, b: d, shift: l }) = (u, v) else {
        unreachable!()
    };
    type Pair = (Vec<Element>, Vec<Element>);
    let kernel_mul = |x: &Pair, y: &Pair| -> Pair {
        (
            x.0.iter().zip(&y.0).map(|(p, q)| g.mul_raw(p, q)).collect(),
            x.1.iter().zip(&y.1).map(|(p, q)| h.mul_raw(p, q)).collect(),
        )
    };
    let ((a2, b2), s) = semidirect_mul(
        kernel_mul,
        |x: &Pair| beta_step(h, gamma, &x.0, &x.1),
        |x: &Pair| beta_inverse_step(h, gamma, &x.0, &x.1),
        (&(a.clone(), b.clone()), k),
        (&(c.clone(), d.clone()), l),
    );
    Ok(Element::Twisted { a: a2, b: b2, shift: reduce(s, *modulus) })
}

/// Product in a plain wreath carrier through [`semidirect_mul`] with single
/// coordinate shifts.
pub fn wreath_mul_oracle(carrier: &Carrier, u: &Element, v: &Element) -> Result<Element> {
    carrier.check(u)?;
    carrier.check(v)?;
    let Carrier::Wreath { base, modulus, .. } = carrier else {
        return Err(Error::Shape("the oracle needs a wreath carrier".into()));
    };
    let (Element::Wreath { coords: a, shift: k }, Element::Wreath { coords: b, shift: l }) = (u, v) else {
        unreachable!()
    };
    let (coords, s) = semidirect_mul(
        |x: &Vec<Element>, y: &Vec<Element>| x.iter().zip(y).map(|(p, q)| base.mul_raw(p, q)).collect(),
        |x: &Vec<Element>| {
            let mut y = x[1..].to_vec();
            y.push(x[0].clone());
            y
        },
        |x: &Vec<Element>| {
            let mut y = vec![x[x.len() - 1].clone()];
            y.extend_from_slice(&x[..x.len() - 1]);
            y
        },
        (a, k),
        (b, l),
    );
    Ok(Element::Wreath { coords, shift: reduce(s, *modulus) })
}

/// Checks every involution in `e`: structure, `gamma^2 = id` and the
/// homomorphism property, exhaustively on small finite `H` and on seeded
/// samples otherwise.
pub fn validate_expr(e: &GroupExpr) -> Result<()> {
    match e {
        GroupExpr::Unit | GroupExpr::IntLine => Ok(()),
        GroupExpr::Cyclic(m) => {
            if *m == 0 {
                Err(Error::Precondition("cyclic order must be at least 1".into()))
            } else {
                Ok(())
            }
        }
        GroupExpr::Direct(fs) => fs.iter().try_for_each(validate_expr),
        GroupExpr::WrZ { base, m } | GroupExpr::WrZm { base, m } => {
            positive(*m)?;
            validate_expr(base)
        }
        GroupExpr::WrZZ { base, m, n } | GroupExpr::WrZZmn { base, m, n } => {
            positive(*m)?;
            positive(*n)?;
            validate_expr(base)
        }
        GroupExpr::TwistedWrZ { g, h, gamma, m } | GroupExpr::TwistedWrZm { g, h, gamma, m } => {
            positive(*m)?;
            validate_expr(g)?;
            validate_expr(h)?;
            validate_gamma(h, gamma)
        }
    }
}

fn positive(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::Precondition("multiplicity must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn gamma_structure(h: &GroupExpr, gamma: &InvolutiveAutomorphism) -> Result<()> {
    match gamma {
        InvolutiveAutomorphism::Identity => Ok(()),
        InvolutiveAutomorphism::Table(map) => {
            if !h.is_finite() {
                return Err(Error::Gamma(format!("table over infinite group {h}")));
            }
            let order = Carrier::from_expr(h).order().unwrap();
            if order > crate::concrete::DEFAULT_CAP as u128 || map.len() as u128 != order {
                return Err(Error::Gamma(format!("table of length {} over a group of order {order}", map.len())));
            }
            let mut seen = vec![false; map.len()];
            for &x in map {
                if x >= map.len() || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::Gamma("table is not a bijection".into()));
                }
            }
            Ok(())
        }
        InvolutiveAutomorphism::FactorPermutation { perm, inner } => {
            let factors: Vec<&GroupExpr> = match h {
                GroupExpr::Direct(fs) => fs.iter().collect(),
                other => vec![other],
            };
            if perm.len() != factors.len() || inner.len() != factors.len() {
                return Err(Error::Gamma(format!(
                    "permutation of length {} over {} factors",
                    perm.len(),
                    factors.len()
                )));
            }
            for (i, &p) in perm.iter().enumerate() {
                if p >= perm.len() || perm[p] != i {
                    return Err(Error::Gamma(format!("{gamma} is not an involutive permutation")));
                }
                if factors[i] != factors[p] {
                    return Err(Error::Gamma(format!("factors {i} and {p} are not identical")));
                }
                gamma_structure(factors[i], &inner[i])?;
            }
            Ok(())
        }
    }
}

/// Validates an involution of `h`.
pub fn validate_gamma(h: &GroupExpr, gamma: &InvolutiveAutomorphism) -> Result<()> {
    use rand::SeedableRng;
    gamma_structure(h, gamma)?;
    if gamma.is_identity() {
        return Ok(());
    }
    let c = Carrier::from_expr(h);
    let ap = |x: &Element| apply_gamma(gamma, &c, x);
    let check_pair = |x: &Element, y: &Element| -> Result<()> {
        if ap(&c.mul_raw(x, y)) != c.mul_raw(&ap(x), &ap(y)) {
            return Err(Error::Gamma(format!("{gamma} is not a homomorphism at ({x}, {y})")));
        }
        Ok(())
    };
    let check_inv = |x: &Element| -> Result<()> {
        if ap(&ap(x)) != *x {
            return Err(Error::Gamma(format!("{gamma} squared moves {x}")));
        }
        Ok(())
    };
    match c.order() {
        Some(n) if n <= 256 => {
            let all: Vec<Element> = (0..n as usize).map(|i| c.element_at(i)).collect();
            for x in &all {
                check_inv(x)?;
                for y in &all {
                    check_pair(x, y)?;
                }
            }
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..2000 {
                let (x, y) = (c.random(&mut rng, 8), c.random(&mut rng, 8));
                check_inv(&x)?;
                check_pair(&x, &y)?;
            }
        }
    }
    Ok(())
}

/// Convenience wrappers on expressions.
pub fn identity(e: &GroupExpr) -> Element {
    Carrier::from_expr(e).identity()
}

pub fn mul(e: &GroupExpr, u: &Element, v: &Element) -> Result<Element> {
    Carrier::from_expr(e).mul(u, v)
}

pub fn inverse(e: &GroupExpr, u: &Element) -> Result<Element> {
    Carrier::from_expr(e).inverse(u)
}

pub fn power(e: &GroupExpr, u: &Element, n: i64) -> Result<Element> {
    Carrier::from_expr(e).power(u, &BigInt::from(n))
}

pub fn element_order(e: &GroupExpr, u: &Element, bound: u64) -> Result<Option<u64>> {
    Carrier::from_expr(e).element_order(u, bound)
}

/// The shift coordinate of a wreath-type element, or the value of `Z`.
pub fn shift_of(u: &Element) -> Option<BigInt> {
    match u {
        Element::Int(k) => Some(k.clone()),
        Element::Wreath { shift, .. } | Element::Twisted { shift, .. } => Some(shift.clone()),
        _ => None,
    }
}
