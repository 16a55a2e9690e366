//! Combinatorial data of a special decomposition of a Moebius band.
//!
//! The critical contour `K` cuts the band into a boundary cylinder `Y0` and
//! disks `Y1..Yn`. A generator `g` of the stabilizer modulo the kernel of its
//! action (the class with `eta(g) = 1`) permutes the oriented disks
//! `{1..n} x {+1, -1}`; that action is stored as a [`SignedPermutation`].
//! Indices are 0-based here and 1-based in files.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::arith::{validate_expr, validate_gamma, Element};
use crate::error::{Error, Result};
use crate::expr::{normalize, GroupExpr, InvolutiveAutomorphism};

/// A permutation of `{0..n} x {+1, -1}` commuting with the sign flip:
/// `(i, d) -> (target[i], sign[i] * d)`. The star rule holds by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    image: Vec<(usize, i8)>,
}

impl SignedPermutation {
    pub fn new(image: Vec<(usize, i8)>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for (i, &(t, s)) in image.iter().enumerate() {
            if t >= n || (s != 1 && s != -1) {
                return Err(Error::Invalid(format!("sigma entry {} = ({}, {s}) out of range", i + 1, t + 1)));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::Invalid(format!("sigma is not a bijection: disk {} hit twice", t + 1)));
            }
        }
        Ok(SignedPermutation { image })
    }

    pub fn identity(n: usize) -> Self {
        SignedPermutation { image: (0..n).map(|i| (i, 1)).collect() }
    }

    /// Cyclic shift along explicit cycles: `cycle[k] -> cycle[k + 1]`, with
    /// the last step carrying `closing_sign`.
    pub fn from_cycles(n: usize, cycles: &[(Vec<usize>, i8)]) -> Result<Self> {
        let mut image: Vec<Option<(usize, i8)>> = vec![None; n];
        for (cycle, closing) in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                let (next, s) = if k + 1 == cycle.len() { (cycle[0], *closing) } else { (cycle[k + 1], 1) };
                if x >= n || image[x].is_some() {
                    return Err(Error::Invalid(format!("disk {} listed twice or out of range", x + 1)));
                }
                image[x] = Some((next, s));
            }
        }
        let image = image
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::Invalid(format!("disk {} in no cycle", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(image)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn entries(&self) -> &[(usize, i8)] {
        &self.image
    }

    pub fn apply(&self, (i, d): (usize, i8)) -> (usize, i8) {
        let (t, s) = self.image[i];
        (t, s * d)
    }

    /// `self o other`.
    pub fn compose(&self, other: &Self) -> Self {
        let image = (0..self.len()).map(|i| self.apply(other.apply((i, 1)))).collect();
        SignedPermutation { image }
    }

    pub fn pow(&self, k: u64) -> Self {
        let mut acc = Self::identity(self.len());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            k >>= 1;
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &(t, s))| t == i && s == 1)
    }

    /// Some `(i, d)` with `self(i, d) = (i, d)`.
    pub fn fixed_point(&self) -> Option<usize> {
        self.image.iter().enumerate().position(|(i, &(t, s))| t == i && s == 1)
    }

    /// Relabels disks by `pi`: the result sends `pi(i)` where `self` sends `i`.
    pub fn conjugate(&self, pi: &[usize]) -> Self {
        let mut image = vec![(0, 1); self.len()];
        for (i, &(t, s)) in self.image.iter().enumerate() {
            image[pi[i]] = (pi[t], s);
        }
        SignedPermutation { image }
    }
}

/// Subgroup data `Delta <= S` of a disk: the image of `Delta` is generated
/// by `generators`, elements of the disk group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaRecord {
    pub group: GroupExpr,
    pub generators: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskRecord {
    pub group: GroupExpr,
    pub delta: Option<DeltaRecord>,
}

impl DiskRecord {
    pub fn new(group: GroupExpr) -> Self {
        DiskRecord { group, delta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusDecomposition {
    pub cylinder_group: GroupExpr,
    /// Number of boundary edges of the cylinder's critical side.
    pub c: u64,
    /// Minimal realized shift; must divide `c`.
    pub a: u64,
    pub disks: Vec<DiskRecord>,
    pub sigma: SignedPermutation,
    /// Involution of `H`; the identity when absent.
    pub gamma: Option<InvolutiveAutomorphism>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Positive,
    Divisibility,
    DiskCount,
    Freeness,
    Period,
    GroupsOnOrbits,
    Counting,
    OddWithoutT2,
    EvenWithT2,
    GroupExpression,
    Involution,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::Positive => "a and c positive",
            Constraint::Divisibility => "a divides c",
            Constraint::DiskCount => "sigma acts on all disks",
            Constraint::Freeness => "sigma^k has no fixed element for 0 < k < b",
            Constraint::Period => "sigma of order b",
            Constraint::GroupsOnOrbits => "groups constant on orbits",
            Constraint::Counting => "n = b (d + e/2)",
            Constraint::OddWithoutT2 => "b odd when e = 0",
            Constraint::EvenWithT2 => "b even when e > 0",
            Constraint::GroupExpression => "group expressions well formed",
            Constraint::Involution => "gamma an involution of H",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub witness: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub n: usize,
    pub b: u64,
    pub d: usize,
    pub e: usize,
    pub m: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Present once the orbit structure could be computed.
    pub counts: Option<Counts>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "violated: {} ({})", v.constraint, v.witness)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitType {
    T1,
    T2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitRecord {
    pub kind: OrbitType,
    pub representative: usize,
    #[serde(serialize_with = "serialize_expr")]
    pub representative_group: GroupExpr,
    /// Disks in the order `Y, g(Y), g^2(Y), ...`.
    pub disks: Vec<usize>,
}

impl OrbitRecord {
    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }
}

fn serialize_expr<S: serde::Serializer>(e: &GroupExpr, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

impl MobiusDecomposition {
    pub fn n(&self) -> usize {
        self.disks.len()
    }

    /// `c / a`, rounded down when `a` does not divide `c`.
    pub fn b(&self) -> u64 {
        self.c.checked_div(self.a).unwrap_or(0)
    }

    pub fn gamma(&self) -> InvolutiveAutomorphism {
        self.gamma.clone().unwrap_or(InvolutiveAutomorphism::Identity)
    }

    /// Disk orbits of `sigma`, each listed from its smallest index along
    /// `sigma`, tagged with whether `(Y, -1)` is reached from `(Y, +1)`.
    fn raw_orbits(&self) -> Vec<(Vec<usize>, bool)> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut disks = Vec::new();
            let mut flipped = false;
            let mut cur = (start, 1i8);
            loop {
                if cur == (start, -1) {
                    flipped = true;
                }
                if !seen[cur.0] {
                    seen[cur.0] = true;
                    disks.push(cur.0);
                }
                cur = self.sigma.apply(cur);
                if cur == (start, 1) {
                    break;
                }
            }
            out.push((disks, flipped));
        }
        out
    }

    /// Product of the T2 orbit representatives, the domain of `gamma`.
    pub fn h_group(&self) -> GroupExpr {
        if self.sigma.len() != self.n() {
            return GroupExpr::Unit;
        }
        let orbits = self.raw_orbits();
        GroupExpr::direct(orbits.iter().filter(|o| o.1).map(|o| self.disks[o.0[0]].group.clone()).collect())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |constraint, witness: String| violations.push(Violation { constraint, witness });
        let n = self.n();
        if self.a == 0 || self.c == 0 {
            push(Constraint::Positive, format!("a = {}, c = {}", self.a, self.c));
            return ValidationReport { violations, counts: None };
        }
        if !self.c.is_multiple_of(self.a) {
            push(Constraint::Divisibility, format!("{} does not divide {}", self.a, self.c));
        }
        let b = self.b();
        if self.sigma.len() != n {
            push(Constraint::DiskCount, format!("sigma has {} entries for {n} disks", self.sigma.len()));
            return ValidationReport { violations, counts: None };
        }
        for (i, e) in std::iter::once(&self.cylinder_group).chain(self.disks.iter().map(|d| &d.group)).enumerate() {
            if let Err(err) = validate_expr(e) {
                push(Constraint::GroupExpression, format!("group {i}: {err}"));
            }
        }

        let mut power = self.sigma.clone();
        for k in 1..b {
            if let Some(i) = power.fixed_point() {
                push(Constraint::Freeness, format!("sigma^{k} fixes (Y{}, +1)", i + 1));
                break;
            }
            power = power.compose(&self.sigma);
        }
        let period = self.sigma.pow(b);
        if let Some(i) = (0..n).find(|&i| period.apply((i, 1)) != (i, 1)) {
            let (t, s) = period.apply((i, 1));
            push(Constraint::Period, format!("sigma^{b}(Y{}, +1) = (Y{}, {s})", i + 1, t + 1));
        }
        if n == 0 && b > 1 {
            push(Constraint::Period, format!("no disks, so sigma has order 1, not {b}"));
        }

        let orbits = self.raw_orbits();
        for (disks, _) in &orbits {
            let g0 = normalize(&self.disks[disks[0]].group);
            if let Some(&j) = disks.iter().find(|&&j| normalize(&self.disks[j].group) != g0) {
                push(
                    Constraint::GroupsOnOrbits,
                    format!("Y{} has {} but Y{} has {}", disks[0] + 1, self.disks[disks[0]].group, j + 1, self.disks[j].group),
                );
            }
        }
        let d = orbits.iter().filter(|o| !o.1).count();
        let e = orbits.len() - d;
        if 2 * n as u64 != b * (2 * d + e) as u64 {
            push(Constraint::Counting, format!("n = {n}, b = {b}, d = {d}, e = {e}"));
        }
        if e == 0 && b.is_multiple_of(2) {
            push(Constraint::OddWithoutT2, format!("e = 0, b = {b}"));
        }
        if e > 0 && b % 2 == 1 {
            push(Constraint::EvenWithT2, format!("e = {e}, b = {b}"));
        }
        if let Some(gamma) = &self.gamma {
            if let Err(err) = validate_gamma(&self.h_group(), gamma) {
                push(Constraint::Involution, err.to_string());
            }
        }
        let counts = Counts { n, b, d, e, m: (e > 0).then_some(b / 2) };
        ValidationReport { violations, counts: Some(counts) }
    }

    /// Orbit types of a valid decomposition, ordered by smallest disk index.
    pub fn classify_orbits(&self) -> Result<Vec<OrbitRecord>> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::Invalid(report.to_string()));
        }
        let m = self.b() / 2;
        let half = self.sigma.pow(m);
        self.raw_orbits()
            .into_iter()
            .map(|(disks, flipped)| {
                let y = disks[0];
                if flipped && half.apply((y, 1)) != (y, -1) {
                    return Err(Error::Invalid(format!("sigma^{m} does not reverse Y{}", y + 1)));
                }
                Ok(OrbitRecord {
                    kind: if flipped { OrbitType::T2 } else { OrbitType::T1 },
                    representative: y,
                    representative_group: self.disks[y].group.clone(),
                    disks,
                })
            })
            .collect()
    }

    /// `eta(h) = shift / a` for the raw boundary shift of `h`.
    pub fn eta_value(&self, shift: i64) -> Result<i64> {
        let a = i64::try_from(self.a).map_err(|_| Error::Invalid("a too large".into()))?;
        if a == 0 || shift % a != 0 {
            return Err(Error::Precondition(format!("shift {shift} is not a multiple of a = {}", self.a)));
        }
        Ok(shift / a)
    }

    /// A decomposition with `b = c`, `a = 1`, `d` T1 orbits and `e` T2
    /// orbits laid out in the column convention: T1 orbit `j` occupies
    /// disks `j b .. j b + b - 1` and T2 orbit `j` the next `b/2` disks.
    pub fn from_orbits(
        cylinder_group: GroupExpr,
        b: u64,
        t1_groups: &[GroupExpr],
        t2_groups: &[GroupExpr],
        gamma: Option<InvolutiveAutomorphism>,
    ) -> Result<Self> {
        let bu = b as usize;
        let m = bu / 2;
        let mut disks = Vec::new();
        let mut cycles = Vec::new();
        for g in t1_groups {
            let start = disks.len();
            disks.extend(std::iter::repeat_n(DiskRecord::new(g.clone()), bu));
            cycles.push(((start..start + bu).collect::<Vec<_>>(), 1));
        }
        if !t2_groups.is_empty() && (b % 2 == 1 || m == 0) {
            return Err(Error::Invalid(format!("T2 orbits need b even, got {b}")));
        }
        for g in t2_groups {
            let start = disks.len();
            disks.extend(std::iter::repeat_n(DiskRecord::new(g.clone()), m));
            cycles.push(((start..start + m).collect::<Vec<_>>(), -1));
        }
        let sigma = SignedPermutation::from_cycles(disks.len(), &cycles)?;
        Ok(MobiusDecomposition { cylinder_group, c: b, a: 1, disks, sigma, gamma })
    }
}

impl MobiusDecomposition {
    /// Disk `i` becomes disk `pi[i]`.
    pub fn relabel(&self, pi: &[usize]) -> Self {
        let mut disks = self.disks.clone();
        for (i, d) in self.disks.iter().enumerate() {
            disks[pi[i]] = d.clone();
        }
        MobiusDecomposition { disks, sigma: self.sigma.conjugate(pi), ..self.clone() }
    }

    /// A valid decomposition with `b <= max_b`, at most `max_orbits` orbits of
    /// each type, groups drawn from `groups`, and shuffled disk labels.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, groups: &[GroupExpr], max_b: u64, max_orbits: usize) -> Self {
        let pick = |rng: &mut R, k: usize| -> Vec<GroupExpr> {
            (0..k).map(|_| groups[rng.gen_range(0..groups.len())].clone()).collect()
        };
        let twisted = max_b >= 2 && rng.gen_bool(0.5);
        let (b, e) = if twisted {
            (2 * rng.gen_range(1..=max_b / 2), rng.gen_range(1..=max_orbits.max(1)))
        } else {
            (2 * rng.gen_range(0..max_b.div_ceil(2)) + 1, 0)
        };
        let d = rng.gen_range(0..=max_orbits);
        let b = if d + e == 0 { 1 } else { b };
        let t1 = pick(rng, d);
        let t2 = pick(rng, e);
        let dec = Self::from_orbits(GroupExpr::Unit, b, &t1, &t2, None).expect("parity matches the orbit types");
        let mut pi: Vec<usize> = (0..dec.n()).collect();
        pi.shuffle(rng);
        dec.relabel(&pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    fn groups(xs: &[&str]) -> Vec<GroupExpr> {
        xs.iter().map(|s| parse_expr(s).unwrap()).collect()
    }

    #[test]
    fn figure_counts_validate() {
        let cases: [(u64, usize, usize, usize); 6] =
            [(3, 3, 0, 9), (1, 3, 0, 3), (4, 0, 3, 6), (2, 0, 1, 1), (2, 1, 2, 4), (6, 1, 2, 12)];
        for (b, d, e, n) in cases {
            let t1 = groups(&["Z", "Z x Z", "Wr(Z, 2)"])[..d].to_vec();
            let t2 = groups(&["Z", "Wr(Z, 3)", "Z x Z"])[..e].to_vec();
            let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, b, &t1, &t2, None).unwrap();
            let r = dec.validate();
            assert!(r.is_valid(), "{b} {d} {e}: {r}");
            assert_eq!(r.counts.unwrap(), Counts { n, b, d, e, m: (e > 0).then_some(b / 2) });
        }
    }

    #[test]
    fn parity_violations() {
        // e = 0, b = 2: a 2-cycle without flip
        let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 2, &[GroupExpr::IntLine], &[], None).unwrap();
        let r = dec.validate();
        assert!(r.violates(Constraint::OddWithoutT2), "{r}");
        assert!(!r.violates(Constraint::Counting));

        // e > 0, b odd: one disk reversed by sigma, with c/a = 3
        let mut dec =
            MobiusDecomposition::from_orbits(GroupExpr::Unit, 2, &[], &[GroupExpr::IntLine], None).unwrap();
        dec.c = 3;
        let r = dec.validate();
        assert!(r.violates(Constraint::EvenWithT2), "{r}");
        assert!(r.violates(Constraint::Period));
    }

    #[test]
    fn counting_and_freeness() {
        // b = 3 but the disk is fixed: sigma = id
        let dec = MobiusDecomposition {
            cylinder_group: GroupExpr::Unit,
            c: 3,
            a: 1,
            disks: vec![DiskRecord::new(GroupExpr::IntLine)],
            sigma: SignedPermutation::identity(1),
            gamma: None,
        };
        let r = dec.validate();
        assert!(r.violates(Constraint::Freeness));
        assert!(r.violates(Constraint::Counting));
        let mut dec = dec;
        dec.c = 4;
        dec.a = 3;
        assert!(dec.validate().violates(Constraint::Divisibility));
    }

    #[test]
    fn groups_must_be_constant() {
        let mut dec =
            MobiusDecomposition::from_orbits(GroupExpr::Unit, 3, &[GroupExpr::IntLine], &[], None).unwrap();
        dec.disks[1].group = GroupExpr::Unit;
        assert!(dec.validate().violates(Constraint::GroupsOnOrbits));
    }

    #[test]
    fn orbit_records() {
        let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 4, &[], &groups(&["Z", "Z", "Z x Z"]), None)
            .unwrap();
        let orbits = dec.classify_orbits().unwrap();
        assert_eq!(orbits.len(), 3);
        assert!(orbits.iter().all(|o| o.kind == OrbitType::T2 && o.len() == 2));

        let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 2, &groups(&["Z"]), &groups(&["Z", "Z"]), None)
            .unwrap();
        let kinds: Vec<_> = dec.classify_orbits().unwrap().iter().map(|o| (o.kind, o.len())).collect();
        assert_eq!(kinds, vec![(OrbitType::T1, 2), (OrbitType::T2, 1), (OrbitType::T2, 1)]);

        let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 1, &groups(&["Z", "1"]), &[], None).unwrap();
        assert!(dec.classify_orbits().unwrap().iter().all(|o| o.kind == OrbitType::T1 && o.len() == 1));
    }

    #[test]
    fn eta_examples() {
        let mut dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 3, &[GroupExpr::IntLine], &[], None).unwrap();
        dec.a = 2;
        dec.c = 6;
        assert_eq!(dec.eta_value(6).unwrap(), 3);
        assert_eq!(dec.eta_value(0).unwrap(), 0);
        assert_eq!(dec.eta_value(2).unwrap(), 1);
        assert!(dec.eta_value(3).is_err());
    }

    #[test]
    fn signed_permutation_algebra() {
        let s = SignedPermutation::from_cycles(3, &[(vec![0, 1, 2], -1)]).unwrap();
        assert_eq!(s.pow(3).apply((0, 1)), (0, -1));
        assert!(s.pow(6).is_identity());
        assert!(SignedPermutation::new(vec![(0, 1), (0, 1)]).is_err());
    }
}
