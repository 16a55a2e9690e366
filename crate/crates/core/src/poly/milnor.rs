//! Jacobian certificates and Milnor numbers of squarefree forms.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::{HomogeneousPoly, UniPoly};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variable {
    X,
    Y,
}

/// `A P + B Q = v^m` for `A = g_x`, `B = g_y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacobianCertificate {
    pub variable: Variable,
    pub m: usize,
    pub p: HomogeneousPoly,
    pub q: HomogeneousPoly,
}

impl JacobianCertificate {
    /// Expands `A P + B Q - v^m` from scratch and tests for zero.
    pub fn verify(&self, g: &HomogeneousPoly) -> bool {
        let Ok((a, b)) = g.partials() else { return false };
        let target = match self.variable {
            Variable::X => HomogeneousPoly::monomial(self.m, 0),
            Variable::Y => HomogeneousPoly::monomial(0, self.m),
        };
        a.mul(&self.p)
            .add(&b.mul(&self.q))
            .and_then(|s| s.sub(&target))
            .is_ok_and(|r| r.is_zero())
    }
}

/// Bezout `alpha p + beta q = 1` in `Q[t]` on the chart `x = 1`, then
/// homogenized: `A P + B Q = x^(k + D)` with `k = deg g - 1` and
/// `D = max(deg p, deg q)`. The `y` certificate comes from `g(y, x)` with the
/// roles of `P` and `Q` exchanged.
pub fn jacobian_certificate(g: &HomogeneousPoly, variable: Variable) -> Result<JacobianCertificate> {
    if !g.is_squarefree()? {
        return Err(Error::Poly(format!("{g} has a multiple factor")));
    }
    match variable {
        Variable::X => x_certificate(g),
        Variable::Y => {
            let c = x_certificate(&g.swap_variables())?;
            Ok(JacobianCertificate { variable, m: c.m, p: c.q.swap_variables(), q: c.p.swap_variables() })
        }
    }
}

fn x_certificate(g: &HomogeneousPoly) -> Result<JacobianCertificate> {
    let (a, b) = g.partials()?;
    let (gcd, s, t) = UniPoly::ext_gcd(&a.dehomogenize(), &b.dehomogenize());
    if gcd.degree() != Some(0) {
        return Err(Error::Poly("partial derivatives share a factor".into()));
    }
    let d = s.degree().unwrap_or(0).max(t.degree().unwrap_or(0));
    Ok(JacobianCertificate {
        variable: Variable::X,
        m: a.degree() + d,
        p: HomogeneousPoly::homogenize(&s, d),
        q: HomogeneousPoly::homogenize(&t, d),
    })
}

fn rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, pivot);
        let lead = rows[r][c].clone();
        let pivot_row: Vec<BigRational> = rows[r].iter().map(|x| x / &lead).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
        rows[r] = pivot_row;
        r += 1;
    }
    r
}

/// `sum_{d < cutoff} (d + 1 - rank J_d)` where `J_d` is spanned by the
/// degree-`d` multiples of `A` and `B`.
pub fn milnor_number_at(g: &HomogeneousPoly, cutoff: usize) -> Result<usize> {
    let (a, b) = g.partials()?;
    let n = a.degree();
    let mut total = 0;
    for d in 0..cutoff {
        let mut rows = Vec::new();
        if d >= n {
            let k = d - n;
            for j in 0..=k {
                let mono = HomogeneousPoly::monomial(k - j, j);
                for f in [&a, &b] {
                    rows.push(f.mul(&mono).coeffs().to_vec());
                }
            }
        }
        total += d + 1 - if rows.is_empty() { 0 } else { rank(rows) };
    }
    Ok(total)
}

/// `dim Q[x, y] / (g_x, g_y)`, with the cutoff `2 max(m_x, m_y)` taken from
/// the two certificates; every monomial of degree `>= 2m - 1` lies in the
/// ideal.
pub fn milnor_number(g: &HomogeneousPoly) -> Result<usize> {
    let cx = jacobian_certificate(g, Variable::X)?;
    let cy = jacobian_certificate(g, Variable::Y)?;
    milnor_number_at(g, 2 * cx.m.max(cy.m))
}
