//! Homogeneous polynomials in `x, y` over `Q`: squarefreeness, Jacobian
//! certificates `A P + B Q = x^m`, and Milnor numbers.

mod milnor;
mod univariate;

pub use milnor::{jacobian_certificate, milnor_number, milnor_number_at, JacobianCertificate, Variable};
pub use univariate::UniPoly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// `coeffs[j]` multiplies `x^(degree - j) y^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousPoly {
    degree: usize,
    coeffs: Vec<BigRational>,
}

impl HomogeneousPoly {
    pub fn new(degree: usize, coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.len() != degree + 1 {
            return Err(Error::Poly(format!("{} coefficients for degree {degree}", coeffs.len())));
        }
        Ok(HomogeneousPoly { degree, coeffs })
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        HomogeneousPoly {
            degree: coeffs.len() - 1,
            coeffs: coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect(),
        }
    }

    pub fn zero(degree: usize) -> Self {
        HomogeneousPoly { degree, coeffs: vec![BigRational::zero(); degree + 1] }
    }

    /// `x^i y^j`.
    pub fn monomial(i: usize, j: usize) -> Self {
        let mut p = Self::zero(i + j);
        p.coeffs[j] = BigRational::one();
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `x^(degree - j) y^j`.
    pub fn coeff(&self, j: usize) -> &BigRational {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.degree != other.degree {
            return Err(Error::Poly("sum of forms of different degrees".into()));
        }
        Self::new(self.degree, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        HomogeneousPoly { degree: self.degree, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree + other.degree);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    /// `g(y, x)`.
    pub fn swap_variables(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        HomogeneousPoly { degree: self.degree, coeffs }
    }

    /// `g(1, t)`.
    pub fn dehomogenize(&self) -> UniPoly {
        UniPoly::new(self.coeffs.clone())
    }

    /// `x^degree p(y / x)`; needs `deg p <= degree`.
    pub fn homogenize(p: &UniPoly, degree: usize) -> Self {
        let mut coeffs = p.coeffs().to_vec();
        assert!(coeffs.len() <= degree + 1, "homogenizing degree too small");
        coeffs.resize(degree + 1, BigRational::zero());
        HomogeneousPoly { degree, coeffs }
    }

    /// Largest `k` with `x^k` dividing the form.
    pub fn x_valuation(&self) -> usize {
        self.coeffs.iter().rev().take_while(|c| c.is_zero()).count()
    }

    /// `(g_x, g_y)`.
    pub fn partials(&self) -> Result<(Self, Self)> {
        if self.degree == 0 {
            return Err(Error::Poly("partials of a constant".into()));
        }
        let d = self.degree;
        let big = |k: usize| BigRational::from_integer(BigInt::from(k));
        let a = (0..d).map(|j| &self.coeffs[j] * big(d - j)).collect();
        let b = (0..d).map(|j| &self.coeffs[j + 1] * big(j + 1)).collect();
        Ok((Self::new(d - 1, a)?, Self::new(d - 1, b)?))
    }

    /// No repeated factors: `gcd(g_x, g_y)` is constant. The dehomogenized
    /// gcd misses common powers of `x`, which are checked separately.
    pub fn is_squarefree(&self) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::Poly("zero polynomial".into()));
        }
        if self.degree < 2 {
            return Err(Error::Poly("squarefreeness needs degree at least 2".into()));
        }
        let (a, b) = self.partials()?;
        if a.x_valuation() > 0 && b.x_valuation() > 0 {
            return Ok(false);
        }
        let (g, _, _) = UniPoly::ext_gcd(&a.dehomogenize(), &b.dehomogenize());
        Ok(g.degree() == Some(0))
    }

    /// Uniform integer coefficients in `[-height, height]`, not all zero.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, degree: usize, height: i64) -> Self {
        loop {
            let coeffs: Vec<i64> = (0..=degree).map(|_| rng.gen_range(-height..=height)).collect();
            if coeffs.iter().any(|&c| c != 0) {
                return Self::from_ints(&coeffs);
            }
        }
    }

    /// Coefficient map keyed by `"i,j"` for `x^i y^j`, values as `p/q` strings.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                map.insert(format!("{},{}", self.degree - j, j), Value::String(c.to_string()));
            }
        }
        serde_json::json!({ "degree": self.degree, "coefficients": map })
    }
}

impl std::fmt::Display for HomogeneousPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let i = self.degree - j;
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let abs = c.abs();
            let mut parts = Vec::new();
            if !abs.is_one() || i + j == 0 {
                parts.push(abs.to_string());
            }
            for (v, e) in [("x", i), ("y", j)] {
                match e {
                    0 => {}
                    1 => parts.push(v.into()),
                    _ => parts.push(format!("{v}^{e}")),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Parses sums of terms `c*x^i*y^j` with rational `c = p/q`; `*` between
/// factors is optional. All terms must have the same degree.
pub fn parse_poly(text: &str) -> Result<HomogeneousPoly> {
    let bytes: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.into() };
    let skip = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let number = |pos: &mut usize| -> Option<BigInt> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        (start < *pos).then(|| bytes[start..*pos].iter().collect::<String>().parse().unwrap())
    };
    let mut terms: Vec<(BigRational, usize, usize)> = Vec::new();
    skip(&mut pos);
    if pos == bytes.len() {
        return Err(err(pos, "empty polynomial"));
    }
    let mut first = true;
    while pos < bytes.len() {
        let mut coef = BigRational::one();
        match bytes[pos] {
            '+' => pos += 1,
            '-' => {
                coef = -coef;
                pos += 1;
            }
            _ if !first => return Err(err(pos, "expected `+` or `-`")),
            _ => {}
        }
        first = false;
        skip(&mut pos);
        let (mut i, mut j) = (0, 0);
        let mut factors = 0;
        loop {
            skip(&mut pos);
            if factors > 0 && pos < bytes.len() && bytes[pos] == '*' {
                pos += 1;
                skip(&mut pos);
            }
            if pos >= bytes.len() {
                break;
            }
            let c = bytes[pos];
            if c.is_ascii_digit() {
                let p = number(&mut pos).unwrap();
                let mut value = BigRational::from_integer(p);
                skip(&mut pos);
                if pos < bytes.len() && bytes[pos] == '/' {
                    pos += 1;
                    skip(&mut pos);
                    let at = pos;
                    let q = number(&mut pos).ok_or_else(|| err(at, "expected a denominator"))?;
                    if q.is_zero() {
                        return Err(err(at, "zero denominator"));
                    }
                    value /= BigRational::from_integer(q);
                }
                coef *= value;
            } else if c == 'x' || c == 'y' {
                pos += 1;
                skip(&mut pos);
                let mut e = 1;
                if pos < bytes.len() && bytes[pos] == '^' {
                    pos += 1;
                    skip(&mut pos);
                    let at = pos;
                    e = number(&mut pos)
                        .ok_or_else(|| err(at, "expected an exponent"))?
                        .try_into()
                        .map_err(|_| err(at, "exponent too large"))?;
                }
                if c == 'x' {
                    i += e;
                } else {
                    j += e;
                }
            } else if factors == 0 {
                return Err(err(pos, "expected a term"));
            } else {
                break;
            }
            factors += 1;
        }
        if factors == 0 {
            return Err(err(pos, "expected a term"));
        }
        terms.push((coef, i, j));
        skip(&mut pos);
    }
    let degree = terms[0].1 + terms[0].2;
    if terms.iter().any(|t| t.1 + t.2 != degree) {
        return Err(Error::Poly("polynomial is not homogeneous".into()));
    }
    let mut p = HomogeneousPoly::zero(degree);
    for (c, _, j) in terms {
        p.coeffs[j] += c;
    }
    if p.is_zero() {
        return Err(Error::Poly("zero polynomial".into()));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> HomogeneousPoly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(p("x^3 - 3*x*y^2").to_string(), "x^3 - 3*x*y^2");
        assert_eq!(p("x y").to_string(), "x*y");
        assert_eq!(p("1/2*x^2 - 2/4 y^2").to_string(), "1/2*x^2 - 1/2*y^2");
        assert_eq!(p("-x*x + y^2"), p("y^2 - x^2"));
        assert!(parse_poly("x^2 + y").is_err());
        assert!(parse_poly("x - x").is_err());
        assert!(parse_poly("").is_err());
        assert!(parse_poly("x + * y").is_err());
        let j = p("x^3 - 3*x*y^2").to_json();
        assert_eq!(j["coefficients"]["1,2"], "-3");
    }

    #[test]
    fn partial_derivatives() {
        let (a, b) = p("x^2 - y^2").partials().unwrap();
        assert_eq!((a, b), (p("2*x"), p("-2*y")));
        let (a, b) = p("x^3 - 3*x*y^2").partials().unwrap();
        assert_eq!((a, b), (p("3*x^2 - 3*y^2"), p("-6*x*y")));
        let (a, b) = p("x*y").partials().unwrap();
        assert_eq!((a, b), (p("y"), p("x")));
        assert!(HomogeneousPoly::from_ints(&[5]).partials().is_err());
    }

    #[test]
    fn squarefree_examples() {
        assert!(p("x^2 - y^2").is_squarefree().unwrap());
        assert!(!p("x^2*y").is_squarefree().unwrap());
        assert!(!p("x*y^2").is_squarefree().unwrap());
        assert!(p("x^3 - 3*x*y^2").is_squarefree().unwrap());
        assert!(!p("x^4 - 2*x^2*y^2 + y^4").is_squarefree().unwrap());
        assert!(p("x^2 + y^2").is_squarefree().unwrap());
        assert!(!p("y^3").is_squarefree().unwrap());
    }
}
