//! Symbolic group expressions.
//!
//! A [`GroupExpr`] names a group built from `1`, `Z` and `Z<m>` by direct
//! products and the wreath-type semidirect products over `Z`, `Z_m` and
//! `Z^2`. Expressions compare structurally; [`normalize`] applies a fixed set
//! of isomorphisms so that equal groups of the shapes we care about end up
//! structurally equal.

use std::fmt;

use crate::arith::Carrier;
use crate::concrete::ConcreteGroup;
use crate::error::Result;

/// An automorphism `gamma` of `H` with `gamma^2 = id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvolutiveAutomorphism {
    Identity,
    /// `H` is a direct product; factor `i` is sent to factor `perm[i]`
    /// after applying `inner[i]` to it.
    FactorPermutation {
        perm: Vec<usize>,
        inner: Vec<InvolutiveAutomorphism>,
    },
    /// A bijection on the canonical enumeration of a finite `H`.
    Table(Vec<usize>),
}

impl InvolutiveAutomorphism {
    pub fn is_identity(&self) -> bool {
        match self {
            Self::Identity => true,
            Self::FactorPermutation { perm, inner } => {
                perm.iter().enumerate().all(|(i, &p)| i == p)
                    && inner.iter().all(InvolutiveAutomorphism::is_identity)
            }
            Self::Table(map) => map.iter().enumerate().all(|(i, &p)| i == p),
        }
    }

    /// Swap of two factors with identity inner maps.
    pub fn permutation(perm: Vec<usize>) -> Self {
        let inner = vec![Self::Identity; perm.len()];
        Self::FactorPermutation { perm, inner }
    }

    /// The inversion `x -> x^-1` of an abelian finite group, as a table.
    pub fn inversion_table(h: &GroupExpr) -> Result<Self> {
        let g = ConcreteGroup::from_expr(h, 1, crate::concrete::DEFAULT_CAP)?;
        Ok(Self::Table((0..g.order()).map(|x| g.inv(x)).collect()))
    }

    fn write_plain(&self, out: &mut String) {
        match self {
            Self::Identity => out.push_str("id"),
            Self::FactorPermutation { perm, inner } => {
                out.push_str("perm[");
                push_list(out, perm);
                out.push(']');
                if inner.iter().any(|g| !g.is_identity()) {
                    out.push('(');
                    for (i, g) in inner.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        g.write_plain(out);
                    }
                    out.push(')');
                }
            }
            Self::Table(map) => {
                out.push_str("table[");
                push_list(out, map);
                out.push(']');
            }
        }
    }
}

fn push_list(out: &mut String, xs: &[usize]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&x.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupExpr {
    Unit,
    IntLine,
    Cyclic(u64),
    Direct(Vec<GroupExpr>),
    /// `G wr_m Z = G^m x| Z`, `Z` shifting coordinates to the left.
    WrZ { base: Box<GroupExpr>, m: u64 },
    /// `G wr_m Z_m`.
    WrZm { base: Box<GroupExpr>, m: u64 },
    /// `G wr_{m,n} Z^2`, `Z^2` shifting rows and columns of an `m x n` matrix.
    WrZZ { base: Box<GroupExpr>, m: u64, n: u64 },
    /// `G wr_{m,n} (Z_m x Z_n)`.
    WrZZmn { base: Box<GroupExpr>, m: u64, n: u64 },
    /// `(G,H) wr_{gamma,m} Z = (G^{2m} x H^m) x| Z`.
    TwistedWrZ {
        g: Box<GroupExpr>,
        h: Box<GroupExpr>,
        gamma: InvolutiveAutomorphism,
        m: u64,
    },
    /// `(G,H) wr_{gamma,m} Z_{2m}`.
    TwistedWrZm {
        g: Box<GroupExpr>,
        h: Box<GroupExpr>,
        gamma: InvolutiveAutomorphism,
        m: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Plain,
    Latex,
}

impl GroupExpr {
    /// Direct product, collapsing empty and singleton factor lists.
    pub fn direct(mut factors: Vec<GroupExpr>) -> Self {
        match factors.len() {
            0 => Self::Unit,
            1 => factors.pop().unwrap(),
            _ => Self::Direct(factors),
        }
    }

    pub fn wr(base: GroupExpr, m: u64) -> Self {
        Self::WrZ { base: Box::new(base), m }
    }

    pub fn wr_m(base: GroupExpr, m: u64) -> Self {
        Self::WrZm { base: Box::new(base), m }
    }

    pub fn wr2(base: GroupExpr, m: u64, n: u64) -> Self {
        Self::WrZZ { base: Box::new(base), m, n }
    }

    pub fn wr2_m(base: GroupExpr, m: u64, n: u64) -> Self {
        Self::WrZZmn { base: Box::new(base), m, n }
    }

    pub fn twisted(g: GroupExpr, h: GroupExpr, gamma: InvolutiveAutomorphism, m: u64) -> Self {
        Self::TwistedWrZ { g: Box::new(g), h: Box::new(h), gamma, m }
    }

    pub fn twisted_m(g: GroupExpr, h: GroupExpr, gamma: InvolutiveAutomorphism, m: u64) -> Self {
        Self::TwistedWrZm { g: Box::new(g), h: Box::new(h), gamma, m }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Unit | Self::IntLine | Self::Cyclic(_))
    }

    /// True when no `Z` appears anywhere: every leaf is `1` or `Z<m>` and
    /// every shift group is periodic.
    pub fn is_finite(&self) -> bool {
        match self {
            Self::Unit | Self::Cyclic(_) => true,
            Self::IntLine | Self::WrZ { .. } | Self::WrZZ { .. } | Self::TwistedWrZ { .. } => false,
            Self::Direct(fs) => fs.iter().all(GroupExpr::is_finite),
            Self::WrZm { base, .. } | Self::WrZZmn { base, .. } => base.is_finite(),
            Self::TwistedWrZm { g, h, .. } => g.is_finite() && h.is_finite(),
        }
    }

    pub fn format(&self, style: Style) -> String {
        let mut out = String::new();
        match style {
            Style::Plain => self.write_plain(&mut out),
            Style::Latex => self.write_latex(&mut out),
        }
        out
    }

    pub fn latex(&self) -> String {
        self.format(Style::Latex)
    }

    fn write_plain(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Self::Unit => out.push('1'),
            Self::IntLine => out.push('Z'),
            Self::Cyclic(m) => write!(out, "Z{m}").unwrap(),
            Self::Direct(fs) if fs.is_empty() => out.push('1'),
            Self::Direct(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" x ");
                    }
                    let wrap = matches!(f, Self::Direct(_));
                    if wrap {
                        out.push('(');
                    }
                    f.write_plain(out);
                    if wrap {
                        out.push(')');
                    }
                }
            }
            Self::WrZ { base, m } => {
                out.push_str("Wr(");
                base.write_plain(out);
                write!(out, ", {m})").unwrap();
            }
            Self::WrZm { base, m } => {
                out.push_str("WrM(");
                base.write_plain(out);
                write!(out, ", {m})").unwrap();
            }
            Self::WrZZ { base, m, n } => {
                out.push_str("Wr2(");
                base.write_plain(out);
                write!(out, ", {m}, {n})").unwrap();
            }
            Self::WrZZmn { base, m, n } => {
                out.push_str("Wr2M(");
                base.write_plain(out);
                write!(out, ", {m}, {n})").unwrap();
            }
            Self::TwistedWrZ { g, h, gamma, m } | Self::TwistedWrZm { g, h, gamma, m } => {
                out.push_str(if matches!(self, Self::TwistedWrZ { .. }) { "TwWr(" } else { "TwWrM(" });
                g.write_plain(out);
                out.push_str(", ");
                h.write_plain(out);
                out.push_str(", ");
                gamma.write_plain(out);
                write!(out, ", {m})").unwrap();
            }
        }
    }

    fn write_latex_operand(&self, out: &mut String) {
        if self.is_atomic() {
            self.write_latex(out);
        } else {
            out.push('(');
            self.write_latex(out);
            out.push(')');
        }
    }

    fn write_latex(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Self::Unit => out.push_str("\\mathbb{1}"),
            Self::IntLine => out.push_str("\\mathbb{Z}"),
            Self::Cyclic(m) => write!(out, "\\mathbb{{Z}}_{{{m}}}").unwrap(),
            Self::Direct(fs) if fs.is_empty() => out.push_str("\\mathbb{1}"),
            Self::Direct(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push_str("\\times ");
                    }
                    f.write_latex_operand(out);
                }
            }
            Self::WrZ { base, m } => {
                base.write_latex_operand(out);
                write!(out, "\\wr_{{{m}}}\\mathbb{{Z}}").unwrap();
            }
            Self::WrZm { base, m } => {
                base.write_latex_operand(out);
                write!(out, "\\wr_{{{m}}}\\mathbb{{Z}}_{{{m}}}").unwrap();
            }
            Self::WrZZ { base, m, n } => {
                base.write_latex_operand(out);
                write!(out, "\\wr_{{{m},{n}}}\\mathbb{{Z}}^{{2}}").unwrap();
            }
            Self::WrZZmn { base, m, n } => {
                base.write_latex_operand(out);
                write!(out, "\\wr_{{{m},{n}}}(\\mathbb{{Z}}_{{{m}}}\\times\\mathbb{{Z}}_{{{n}}})").unwrap();
            }
            Self::TwistedWrZ { g, h, gamma, m } | Self::TwistedWrZm { g, h, gamma, m } => {
                out.push('(');
                g.write_latex(out);
                out.push(',');
                h.write_latex(out);
                out.push(')');
                let gl = if gamma.is_identity() { "\\mathrm{id}" } else { "\\gamma" };
                write!(out, "\\wr_{{{gl},{m}}}").unwrap();
                if matches!(self, Self::TwistedWrZ { .. }) {
                    out.push_str("\\mathbb{Z}");
                } else {
                    write!(out, "\\mathbb{{Z}}_{{{}}}", 2 * m).unwrap();
                }
            }
        }
    }
}

impl fmt::Display for GroupExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(Style::Plain))
    }
}

impl fmt::Display for InvolutiveAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_plain(&mut s);
        f.write_str(&s)
    }
}

pub fn format_expr(e: &GroupExpr, style: Style) -> String {
    e.format(style)
}

/// Rewrites to the canonical representative.
///
/// Besides flattening products, dropping `1` factors and sorting factors,
/// the rules are
///
/// * `Wr(1, 1) = Z`, `Wr(G, 1) = G x Z`,
/// * `Wr2(G, m, 1) = Wr(G, m) x Z` and `Wr2(G, 1, n) = Wr(G, n) x Z`,
/// * `TwWr(G, 1, gamma, m) = Wr(G, 2m)`,
/// * the periodic analogues `WrM(1, m) = Z<m>`, `WrM(G, 1) = G`,
///   `Wr2M(G, m, 1) = WrM(G, m)`, `Wr2M(1, m, n) = Z<m> x Z<n>`,
///   `TwWrM(G, 1, gamma, m) = WrM(G, 2m)`,
/// * `Wr2(1, 1, 1) = Z x Z`.
///
/// Every rule commutes with the finite quotients used by
/// [`invariant_fingerprint`], so fingerprints are unchanged by normalization.
pub fn normalize(e: &GroupExpr) -> GroupExpr {
    let mut cur = e.clone();
    loop {
        let next = step(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Factor order in normal forms: structural order, with `Z` factors last.
fn factor_cmp(a: &GroupExpr, b: &GroupExpr) -> std::cmp::Ordering {
    let key = |e: &GroupExpr| matches!(e, GroupExpr::IntLine);
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

fn step(e: &GroupExpr) -> GroupExpr {
    use GroupExpr::*;
    match e {
        Unit | IntLine => e.clone(),
        Cyclic(1) => Unit,
        Cyclic(_) => e.clone(),
        Direct(fs) => {
            let mut flat = Vec::new();
            for f in fs {
                match step(f) {
                    Unit => {}
                    Direct(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            flat.sort_by(factor_cmp);
            GroupExpr::direct(flat)
        }
        WrZ { base, m } => {
            let b = step(base);
            match (&b, *m) {
                (Unit, 1) => IntLine,
                (_, 1) => Direct(vec![b, IntLine]),
                _ => GroupExpr::wr(b, *m),
            }
        }
        WrZm { base, m } => {
            let b = step(base);
            match (&b, *m) {
                (_, 1) => b,
                (Unit, _) => Cyclic(*m),
                _ => GroupExpr::wr_m(b, *m),
            }
        }
        WrZZ { base, m, n } => {
            let b = step(base);
            match (*m, *n) {
                (1, n) => Direct(vec![GroupExpr::wr(b, n), IntLine]),
                (m, 1) => Direct(vec![GroupExpr::wr(b, m), IntLine]),
                (m, n) => GroupExpr::wr2(b, m, n),
            }
        }
        WrZZmn { base, m, n } => {
            let b = step(base);
            match (&b, *m, *n) {
                (Unit, m, n) => Direct(vec![Cyclic(m), Cyclic(n)]),
                (_, m, 1) => GroupExpr::wr_m(b, m),
                (_, 1, n) => GroupExpr::wr_m(b, n),
                (_, m, n) => GroupExpr::wr2_m(b, m, n),
            }
        }
        TwistedWrZ { g, h, gamma, m } => {
            let g2 = step(g);
            let (h2, gamma2) = step_with_gamma(h, gamma);
            if h2 == Unit {
                GroupExpr::wr(g2, 2 * m)
            } else {
                GroupExpr::twisted(g2, h2, gamma2, *m)
            }
        }
        TwistedWrZm { g, h, gamma, m } => {
            let g2 = step(g);
            let (h2, gamma2) = step_with_gamma(h, gamma);
            if h2 == Unit {
                GroupExpr::wr_m(g2, 2 * m)
            } else {
                GroupExpr::twisted_m(g2, h2, gamma2, *m)
            }
        }
    }
}

/// One normalization pass over `h`, carrying `gamma` along. Tables are tied
/// to the element enumeration of `h`, so `h` is left alone under a
/// non-trivial table.
fn step_with_gamma(
    h: &GroupExpr,
    gamma: &InvolutiveAutomorphism,
) -> (GroupExpr, InvolutiveAutomorphism) {
    use InvolutiveAutomorphism as Inv;
    if gamma.is_identity() {
        return (step(h), Inv::Identity);
    }
    let (perm, inner) = match gamma {
        Inv::Table(_) => return (h.clone(), gamma.clone()),
        Inv::FactorPermutation { perm, inner } => (perm, inner),
        Inv::Identity => unreachable!(),
    };
    let factors = match h {
        GroupExpr::Direct(fs) if fs.len() == perm.len() && inner.len() == perm.len() => fs,
        _ => return (h.clone(), gamma.clone()),
    };

    // Flattened entries: (expression, source key, inner involution, target key).
    type Key = (usize, Option<usize>);
    let mut entries: Vec<(GroupExpr, Key, Inv, Key)> = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        let (f2, g2) = step_with_gamma(f, &inner[i]);
        match (&f2, &g2) {
            (GroupExpr::Unit, _) => {}
            (GroupExpr::Direct(sub), Inv::Identity) => {
                for (s, x) in sub.iter().enumerate() {
                    entries.push((x.clone(), (i, Some(s)), Inv::Identity, (perm[i], Some(s))));
                }
            }
            (GroupExpr::Direct(sub), Inv::FactorPermutation { perm: p2, inner: in2 })
                if p2.len() == sub.len() =>
            {
                for (s, x) in sub.iter().enumerate() {
                    entries.push((x.clone(), (i, Some(s)), in2[s].clone(), (perm[i], Some(p2[s]))));
                }
            }
            _ => entries.push((f2.clone(), (i, None), g2.clone(), (perm[i], None))),
        }
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&x, &y| factor_cmp(&entries[x].0, &entries[y].0).then(entries[x].1.cmp(&entries[y].1)));
    let mut position = std::collections::HashMap::new();
    for (new, &old) in order.iter().enumerate() {
        position.insert(entries[old].1, new);
    }
    let mut new_perm = vec![0; entries.len()];
    let mut new_inner = vec![Inv::Identity; entries.len()];
    for (new, &old) in order.iter().enumerate() {
        let Some(&target) = position.get(&entries[old].3) else {
            return (h.clone(), gamma.clone());
        };
        new_perm[new] = target;
        new_inner[new] = entries[old].2.clone();
    }
    let exprs: Vec<GroupExpr> = order.iter().map(|&o| entries[o].0.clone()).collect();
    match exprs.len() {
        0 => (GroupExpr::Unit, Inv::Identity),
        1 => (exprs.into_iter().next().unwrap(), new_inner.pop().unwrap()),
        _ => {
            let g = Inv::FactorPermutation { perm: new_perm, inner: new_inner };
            let g = if g.is_identity() { Inv::Identity } else { g };
            (GroupExpr::Direct(exprs), g)
        }
    }
}

/// Membership in the class generated from `1` by direct products and
/// `Wr(-, m)`, decided on the normal form.
pub fn is_in_class_g(e: &GroupExpr) -> bool {
    fn rec(e: &GroupExpr) -> bool {
        match e {
            GroupExpr::Unit | GroupExpr::IntLine => true,
            GroupExpr::Direct(fs) => fs.iter().all(rec),
            GroupExpr::WrZ { base, .. } => rec(base),
            _ => false,
        }
    }
    rec(&normalize(e))
}

/// Order and abelianization of one finite quotient.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct QuotientInvariants {
    pub multiplier: u64,
    pub order: usize,
    pub abelian_invariants: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Fingerprint {
    pub levels: Vec<QuotientInvariants>,
}

impl Fingerprint {
    pub fn orders(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.order).collect()
    }
}

/// Orders and abelian invariants of the quotients obtained by replacing
/// each `Z` leaf by `Z_N` and each shift group by its period times `N`,
/// for `N = 1..=depth`.
///
/// This is an invariant of the expression under the rewrites of
/// [`normalize`], not of the abstract group: `Wr(1, 3)` and `Z` are
/// isomorphic but their quotients differ.
pub fn invariant_fingerprint(e: &GroupExpr, depth: u64, cap: usize) -> Result<Fingerprint> {
    let mut levels = Vec::new();
    for n in 1..=depth {
        let carrier = Carrier::quotient(e, n, true)?;
        let g = ConcreteGroup::from_carrier(&carrier, cap)?;
        levels.push(QuotientInvariants {
            multiplier: n,
            order: g.order(),
            abelian_invariants: g.abelian_invariants(),
        });
    }
    Ok(Fingerprint { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    fn p(s: &str) -> GroupExpr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn formats_plain_and_latex() {
        assert_eq!(GroupExpr::wr(GroupExpr::Unit, 1).latex(), "\\mathbb{1}\\wr_{1}\\mathbb{Z}");
        assert_eq!(GroupExpr::Direct(vec![GroupExpr::IntLine, GroupExpr::IntLine]).to_string(), "Z x Z");
        let t = GroupExpr::twisted(GroupExpr::Cyclic(2), GroupExpr::Unit, InvolutiveAutomorphism::Identity, 3);
        assert_eq!(t.to_string(), "TwWr(Z2, 1, id, 3)");
    }

    #[test]
    fn listed_rewrites() {
        assert_eq!(normalize(&p("Wr(1, 1)")), GroupExpr::IntLine);
        assert_eq!(normalize(&p("Wr(Z5, 1)")), p("Z5 x Z"));
        assert_eq!(normalize(&p("Wr2(Z2, 3, 1)")), p("Wr(Z2, 3) x Z"));
        assert_eq!(normalize(&p("Wr2(Z3, 1, 1)")), p("Z3 x Z x Z"));
        assert_eq!(normalize(&p("TwWr(Z2, 1, id, 2)")), p("Wr(Z2, 4)"));
    }

    #[test]
    fn products_sort_and_flatten() {
        assert_eq!(normalize(&p("Z2 x (1 x Z)")), normalize(&p("Z x Z2")));
        assert_eq!(normalize(&p("1 x 1")), GroupExpr::Unit);
        assert_eq!(normalize(&p("Z1")), GroupExpr::Unit);
    }

    #[test]
    fn factor_permutation_follows_sorting() {
        // H = Z3 x Z2 x Z3 with the two Z3 factors swapped; sorting moves Z2 first.
        let e = p("TwWr(1, Z3 x Z2 x Z3, perm[2, 1, 0], 1)");
        let n = normalize(&e);
        assert_eq!(n, p("TwWr(1, Z2 x Z3 x Z3, perm[0, 2, 1], 1)"));
        let f1 = invariant_fingerprint(&e, 1, 5000).unwrap();
        let f2 = invariant_fingerprint(&n, 1, 5000).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn nested_factor_permutation_flattens() {
        let e = p("TwWr(1, (Z2 x Z3) x (Z2 x Z3), perm[1, 0], 1)");
        assert_eq!(normalize(&e), p("TwWr(1, Z2 x Z2 x Z3 x Z3, perm[1, 0, 3, 2], 1)"));
    }

    #[test]
    fn class_g_membership() {
        assert!(is_in_class_g(&p("Wr(Wr(Z, 5) x Wr(Z, 2), 11)")));
        assert!(is_in_class_g(&p("Wr(Wr(Z^3, 5) x Wr(Z^17, 2), 11)")));
        assert!(!is_in_class_g(&p("TwWr(Z2, Z3, id, 2)")));
        assert!(is_in_class_g(&GroupExpr::IntLine));
        assert!(is_in_class_g(&p("TwWr(Z, 1, id, 2)")));
        assert!(!is_in_class_g(&p("Z2")));
        assert!(!is_in_class_g(&p("Wr2(Z, 2, 2)")));
    }

    #[test]
    fn fingerprint_examples() {
        assert_eq!(invariant_fingerprint(&GroupExpr::IntLine, 3, 100).unwrap().orders(), vec![1, 2, 3]);
        assert_eq!(invariant_fingerprint(&p("WrM(Z2, 2)"), 2, 100).unwrap().orders(), vec![8, 8]);
        assert_eq!(invariant_fingerprint(&GroupExpr::Unit, 3, 100).unwrap().orders(), vec![1, 1, 1]);
    }

    #[test]
    fn fingerprint_cap() {
        assert!(invariant_fingerprint(&p("Wr(Z3, 4)"), 2, 100).is_err());
    }
}
