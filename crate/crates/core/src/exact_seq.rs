//! Exact sequences, splittings over `Z`, and the characterization maps
//! `theta` for wreath and twisted wreath products, verified on concrete
//! instances.
//!
//! Conjugation conventions. With the left-shift law of [`crate::arith`],
//! `theta(v, k) = v g^k` is a homomorphism `L x_phi Z -> B` exactly when
//! `phi(v) = g v g^-1`, and `g^i G g^-i` sits at coordinate `-i`. The
//! [`Convention`] enum selects between this reading and right conjugation
//! (`xi(l) = g^-1 l g`, `G_i = g^i G g^-i`); both are checked.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{
    beta_step, semidirect_mul, shift_of, twisted_mul_oracle, wreath_mul_oracle, Carrier, Element,
};
use crate::concrete::ConcreteGroup;
use crate::error::{Error, Result};
use crate::expr::InvolutiveAutomorphism;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convention {
    /// `xi(l) = g^-1 l g` and `G_i = g^i G g^-i`.
    RightConjugation,
    /// `xi(l) = g l g^-1` and `G_i = g^-i G g^i`, matching left shifts.
    ShiftConsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub target: String,
    pub order: usize,
    pub pairs_checked: u64,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(target: impl Into<String>, order: usize) -> Self {
        Report { target: target.into(), order, pairs_checked: 0, checks: Vec::new() }
    }

    fn push(&mut self, name: &str, witness: Option<String>) {
        self.checks.push(Check { name: name.into(), passed: witness.is_none(), witness });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// A group with an epimorphism onto `Z` and an element of degree one.
pub struct EpiToZ<'a> {
    pub carrier: Carrier,
    pub eta: Box<dyn Fn(&Element) -> BigInt + Sync + 'a>,
    pub g: Element,
}

impl EpiToZ<'static> {
    /// The shift projection of `Z`, a wreath or a twisted carrier with
    /// canonical generator `(e; 1)`.
    pub fn shift_projection(carrier: Carrier) -> Result<Self> {
        let mut g = carrier.identity();
        match &mut g {
            Element::Int(k) => *k = BigInt::from(1),
            Element::Wreath { shift, .. } | Element::Twisted { shift, .. } => *shift = BigInt::from(1),
            _ => return Err(Error::Precondition("no shift projection onto Z for this group".into())),
        }
        if carrier.order().is_some() {
            return Err(Error::Precondition("the shift projection needs an infinite cyclic shift".into()));
        }
        Ok(EpiToZ { carrier, eta: Box::new(|u| shift_of(u).unwrap_or_default()), g })
    }
}

/// Checks that `theta(v, k) = v g^k` is an isomorphism `L x_phi Z -> B`
/// compatible with both short exact sequences, on `samples` seeded random
/// pairs.
pub fn split_by_eta(b: &EpiToZ<'_>, convention: Convention, samples: usize, seed: u64) -> Result<Report> {
    let c = &b.carrier;
    c.check(&b.g)?;
    if (b.eta)(&b.g) != BigInt::from(1) {
        return Err(Error::Precondition(format!("eta(g) = {} instead of 1", (b.eta)(&b.g))));
    }
    let g = &b.g;
    let gi = c.inverse_raw(g);
    let pow = |k: &BigInt| c.power(g, k).unwrap();
    let conj = |x: &Element, y: &Element, z: &Element| c.mul_raw(&c.mul_raw(x, y), z);
    let (phi, phi_inv): (Box<dyn Fn(&Element) -> Element + Sync>, Box<dyn Fn(&Element) -> Element + Sync>) =
        match convention {
            Convention::ShiftConsistent => {
                (Box::new(|v| conj(g, v, &gi)), Box::new(|v| conj(&gi, v, g)))
            }
            Convention::RightConjugation => (Box::new(|v| conj(&gi, v, g)), Box::new(|v| conj(g, v, &gi))),
        };
    let theta = |v: &Element, k: &BigInt| c.mul_raw(v, &pow(k));
    let to_kernel = |x: &Element| {
        let k = (b.eta)(x);
        (c.mul_raw(x, &pow(&-k.clone())), k)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::new("split", 0);
    let (mut hom, mut seq, mut bij) = (None, None, None);
    for _ in 0..samples {
        let (v, k) = to_kernel(&c.random(&mut rng, 6));
        let (w, l) = to_kernel(&c.random(&mut rng, 6));
        if !(b.eta)(&v).is_zero() {
            seq.get_or_insert_with(|| format!("{v} escapes the kernel"));
        }
        let (p, s) = semidirect_mul(|x, y| c.mul_raw(x, y), &phi, &phi_inv, (&v, &k), (&w, &l));
        if theta(&p, &s) != c.mul_raw(&theta(&v, &k), &theta(&w, &l)) {
            hom.get_or_insert_with(|| format!("(({v}, {k}), ({w}, {l}))"));
        }
        if theta(&v, &BigInt::zero()) != v || (b.eta)(&theta(&v, &k)) != k {
            seq.get_or_insert_with(|| format!("({v}, {k})"));
        }
        let x = c.random(&mut rng, 6);
        let (vx, kx) = to_kernel(&x);
        if theta(&vx, &kx) != x || to_kernel(&theta(&v, &k)) != (v.clone(), k.clone()) {
            bij.get_or_insert_with(|| format!("{x}"));
        }
        report.pairs_checked += 1;
    }
    report.push("theta homomorphism", hom);
    report.push("sequences commute", seq);
    report.push("theta bijective", bij);
    Ok(report)
}

/// Result of comparing the two equivalent compatibility conditions
/// on samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompatReport {
    pub commutes: bool,
    pub zeta_homomorphism: bool,
    pub witness: Option<String>,
}

impl CompatReport {
    pub fn agree(&self) -> bool {
        self.commutes == self.zeta_homomorphism
    }
}

/// Evaluates `q o phi = phi' o q` on `elements`, and independently whether
/// `zeta(a, k) = (q(a), k)` is multiplicative on all pairs of elements with
/// shifts in `-1..=1`.
#[allow(clippy::too_many_arguments)]
pub fn check_shift_compat(
    l: &Carrier,
    l2: &Carrier,
    q: &dyn Fn(&Element) -> Element,
    phi: &dyn Fn(&Element) -> Element,
    phi_inv: &dyn Fn(&Element) -> Element,
    phi2: &dyn Fn(&Element) -> Element,
    phi2_inv: &dyn Fn(&Element) -> Element,
    elements: &[Element],
) -> CompatReport {
    let mut witness = None;
    let commutes = elements.iter().all(|a| {
        let ok = q(&phi(a)) == phi2(&q(a));
        if !ok {
            witness = Some(format!("q(phi({a})) != phi'(q({a}))"));
        }
        ok
    });
    let ks: Vec<BigInt> = (-1..=1).map(BigInt::from).collect();
    let mut zeta_homomorphism = true;
    'outer: for a in elements {
        for b in elements {
            for k in &ks {
                for s in &ks {
                    let (p, t) = semidirect_mul(|x, y| l.mul_raw(x, y), phi, phi_inv, (a, k), (b, s));
                    let lhs = (q(&p), t);
                    let rhs = semidirect_mul(|x, y| l2.mul_raw(x, y), phi2, phi2_inv, (&q(a), k), (&q(b), s));
                    if lhs != rhs {
                        zeta_homomorphism = false;
                        if witness.is_none() {
                            witness = Some(format!("zeta fails on (({a}, {k}), ({b}, {s}))"));
                        }
                        break 'outer;
                    }
                }
            }
        }
    }
    CompatReport { commutes, zeta_homomorphism, witness }
}

/// Compares the closed-form product of a wreath or twisted carrier with the
/// stepwise semidirect oracle: on every pair when `samples` is `None` (the
/// carrier must be finite), otherwise on `samples` seeded random pairs with
/// free coordinates in `[-bound, bound]`.
pub fn verify_mul_oracle(carrier: &Carrier, samples: Option<usize>, seed: u64, bound: i64) -> Result<Report> {
    let oracle = match carrier {
        Carrier::Twisted { .. } => twisted_mul_oracle,
        Carrier::Wreath { .. } => wreath_mul_oracle,
        _ => return Err(Error::Shape("the oracle needs a wreath or twisted carrier".into())),
    };
    let order = carrier.order();
    let pairs: Vec<(Element, Element)> = match samples {
        None => {
            let n = order.ok_or_else(|| Error::InfiniteLeaf("exhaustive oracle check on an infinite carrier".into()))?;
            let n = usize::try_from(n).map_err(|_| Error::CapExceeded { order: n, cap: usize::MAX as u128 })?;
            let elems: Vec<Element> = (0..n).map(|i| carrier.element_at(i)).collect();
            elems.iter().flat_map(|u| elems.iter().map(move |v| (u.clone(), v.clone()))).collect()
        }
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k).map(|_| (carrier.random(&mut rng, bound), carrier.random(&mut rng, bound))).collect()
        }
    };
    let bad = pairs.par_iter().find_map_first(|(u, v)| {
        let fast = carrier.mul_raw(u, v);
        match oracle(carrier, u, v) {
            Ok(slow) if slow == fast => None,
            Ok(slow) => Some(format!("{u} * {v}: closed form {fast}, oracle {slow}")),
            Err(e) => Some(format!("{u} * {v}: {e}")),
        }
    });
    let mut report = Report::new(carrier.describe(), order.map_or(0, |n| n as usize));
    report.pairs_checked = pairs.len() as u64;
    report.push("oracle", bad);
    Ok(report)
}

/// One node of a 3x3 diagram.
#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub group: ConcreteGroup,
}

/// A homomorphism between nodes, as an index map.
#[derive(Debug, Clone)]
pub struct Arrow {
    pub from: usize,
    pub to: usize,
    pub map: Vec<usize>,
}

/// Nodes in row-major order:
/// `K L L/K`, `A B B/A`, `A/K B/L B/AL`.
#[derive(Debug, Clone)]
pub struct ThreeByThree {
    pub nodes: Vec<Node>,
    pub arrows: Vec<Arrow>,
    pub report: Report,
    /// Embeddings of `K`, `L`, `A` into `B` as element indices.
    pub k_in_b: Vec<usize>,
    pub l_in_b: Vec<usize>,
    pub a_in_b: Vec<usize>,
}

fn mask_members(mask: &[bool]) -> Vec<usize> {
    (0..mask.len()).filter(|&x| mask[x]).collect()
}

/// The subgroup with membership mask `sub` as a group of its own, and its
/// embedding.
fn subgroup(b: &ConcreteGroup, sub: &[bool]) -> Result<(ConcreteGroup, Vec<usize>)> {
    let members = mask_members(sub);
    let mut pos = vec![usize::MAX; b.order()];
    for (i, &x) in members.iter().enumerate() {
        pos[x] = i;
    }
    let n = members.len();
    let mut table = Vec::with_capacity(n * n);
    for &x in &members {
        for &y in &members {
            let z = pos[b.mul(x, y)];
            if z == usize::MAX {
                return Err(Error::Precondition("mask is not closed under multiplication".into()));
            }
            table.push(z as u32);
        }
    }
    let labels = members.iter().map(|&x| b.label(x).clone()).collect();
    Ok((ConcreteGroup::from_table(n, table, labels)?, members))
}

/// Builds the diagram of `A, L` normal in `B` and checks that all six rows
/// and columns are short exact and all four squares commute.
pub fn build_3x3(b: &ConcreteGroup, a: &[bool], l: &[bool]) -> Result<ThreeByThree> {
    for (name, sub) in [("A", a), ("L", l)] {
        if let Some((g, h)) = b.normality_witness(sub) {
            return Err(Error::Precondition(format!(
                "{name} is not normal: {} conjugated by {} leaves it",
                b.label(h),
                b.label(g)
            )));
        }
    }
    let n = b.order();
    let k: Vec<bool> = (0..n).map(|x| a[x] && l[x]).collect();
    let al = b.closure(&(0..n).filter(|&x| a[x] || l[x]).collect::<Vec<_>>());
    let (kg, k_in_b) = subgroup(b, &k)?;
    let (lg, l_in_b) = subgroup(b, l)?;
    let (ag, a_in_b) = subgroup(b, a)?;
    let k_in = |emb: &[usize]| -> Vec<bool> { emb.iter().map(|&x| k[x]).collect() };
    let (lk, lk_proj) = lg.quotient(&k_in(&l_in_b))?;
    let (ak, ak_proj) = ag.quotient(&k_in(&a_in_b))?;
    let (ba, ba_proj) = b.quotient(a)?;
    let (bl, bl_proj) = b.quotient(l)?;
    let (bal, bal_proj) = b.quotient(&al)?;
    // Index of a B-element within a subgroup embedding.
    let position = |emb: &[usize]| {
        let mut pos = vec![usize::MAX; n];
        for (i, &x) in emb.iter().enumerate() {
            pos[x] = i;
        }
        pos
    };
    let (pos_l, pos_a) = (position(&l_in_b), position(&a_in_b));
    // Representatives in B of the quotient classes.
    let reps = |proj: &[usize], size: usize, emb: Option<&[usize]>| {
        let mut r = vec![usize::MAX; size];
        for (x, &c) in proj.iter().enumerate().rev() {
            r[c] = emb.map_or(x, |e| e[x]);
        }
        r
    };
    let lk_reps = reps(&lk_proj, lk.order(), Some(&l_in_b));
    let ak_reps = reps(&ak_proj, ak.order(), Some(&a_in_b));
    let ba_reps = reps(&ba_proj, ba.order(), None);
    let bl_reps = reps(&bl_proj, bl.order(), None);
    let nodes = vec![
        Node { name: "K".into(), group: kg },
        Node { name: "L".into(), group: lg },
        Node { name: "L/K".into(), group: lk },
        Node { name: "A".into(), group: ag },
        Node { name: "B".into(), group: b.clone() },
        Node { name: "B/A".into(), group: ba },
        Node { name: "A/K".into(), group: ak },
        Node { name: "B/L".into(), group: bl },
        Node { name: "B/AL".into(), group: bal },
    ];
    let arrows = vec![
        Arrow { from: 0, to: 1, map: k_in_b.iter().map(|&x| pos_l[x]).collect() },
        Arrow { from: 1, to: 2, map: lk_proj.clone() },
        Arrow { from: 3, to: 4, map: a_in_b.clone() },
        Arrow { from: 4, to: 5, map: ba_proj.clone() },
        Arrow { from: 6, to: 7, map: ak_reps.iter().map(|&x| bl_proj[x]).collect() },
        Arrow { from: 7, to: 8, map: bl_reps.iter().map(|&x| bal_proj[x]).collect() },
        Arrow { from: 0, to: 3, map: k_in_b.iter().map(|&x| pos_a[x]).collect() },
        Arrow { from: 3, to: 6, map: ak_proj.clone() },
        Arrow { from: 1, to: 4, map: l_in_b.clone() },
        Arrow { from: 4, to: 7, map: bl_proj.clone() },
        Arrow { from: 2, to: 5, map: lk_reps.iter().map(|&x| ba_proj[x]).collect() },
        Arrow { from: 5, to: 8, map: ba_reps.iter().map(|&x| bal_proj[x]).collect() },
    ];
    let mut report = Report::new("3x3", n);
    let names = ["row 1", "row 2", "row 3", "column 1", "column 2", "column 3"];
    for (s, name) in names.iter().enumerate() {
        let witness = exactness_failure(&nodes, &arrows[2 * s], &arrows[2 * s + 1]);
        report.push(&format!("{name} exact"), witness);
    }
    for (arrow, name) in arrows.iter().zip(0..) {
        let witness = homomorphism_failure(&nodes[arrow.from].group, &nodes[arrow.to].group, &arrow.map);
        if witness.is_some() {
            report.push(&format!("arrow {name} homomorphism"), witness);
        }
    }
    // Each square as (first, then, first', then'): both paths from the
    // top-left corner agree.
    let squares = [(0, 8, 6, 2), (1, 10, 8, 3), (2, 9, 7, 4), (3, 11, 9, 5)];
    for (i, &(h1, v2, v1, h2)) in squares.iter().enumerate() {
        let src = arrows[h1].from;
        let bad = (0..nodes[src].group.order()).find(|&x| {
            arrows[v2].map[arrows[h1].map[x]] != arrows[h2].map[arrows[v1].map[x]]
        });
        report.push(&format!("square {} commutes", i + 1), bad.map(|x| nodes[src].group.label(x).to_string()));
    }
    Ok(ThreeByThree { nodes, arrows, report, k_in_b, l_in_b, a_in_b })
}

fn exactness_failure(nodes: &[Node], first: &Arrow, second: &Arrow) -> Option<String> {
    let src = &nodes[first.from].group;
    let mid = &nodes[first.to].group;
    let dst = &nodes[second.to].group;
    let mut image = vec![false; mid.order()];
    for &y in &first.map {
        if std::mem::replace(&mut image[y], true) {
            return Some(format!("{} -> {} is not injective", nodes[first.from].name, nodes[first.to].name));
        }
    }
    let mut hit = vec![false; dst.order()];
    second.map.iter().for_each(|&z| hit[z] = true);
    if hit.iter().any(|&h| !h) {
        return Some(format!("{} -> {} is not surjective", nodes[second.from].name, nodes[second.to].name));
    }
    (0..mid.order())
        .find(|&y| image[y] != (second.map[y] == dst.identity()))
        .map(|y| format!("image and kernel differ at {}", mid.label(y)))
        .or_else(|| (src.order() * dst.order() != mid.order()).then(|| "orders do not multiply".into()))
}

fn homomorphism_failure(src: &ConcreteGroup, dst: &ConcreteGroup, map: &[usize]) -> Option<String> {
    (0..src.order())
        .into_par_iter()
        .find_map_first(|x| {
            (0..src.order())
                .find(|&y| map[src.mul(x, y)] != dst.mul(map[x], map[y]))
                .map(|y| format!("({}, {})", src.label(x), src.label(y)))
        })
}

/// Parameters of the concrete instance behind a `theta` verification.
#[derive(Debug, Clone)]
pub struct ThetaOptions {
    pub convention: Convention,
    /// Multiplier `N`: the shift group becomes `Z_(period N)`.
    pub multiplier: u64,
    /// Index in `G` placed at coordinate 0 of the distinguished element,
    /// whose shift is 1. Must be central with order dividing `N` for the
    /// hypotheses to hold.
    pub offset: Option<usize>,
    /// Generators of `P <= G` and `Q <= H` for the 3x3 part.
    pub p_gens: Vec<usize>,
    pub q_gens: Vec<usize>,
    pub cap: usize,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions {
            convention: Convention::ShiftConsistent,
            multiplier: 1,
            offset: None,
            p_gens: Vec::new(),
            q_gens: Vec::new(),
            cap: crate::concrete::DEFAULT_CAP,
        }
    }
}

/// Position of a tuple slot: which factor group and which power of `xi`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    G(usize),
    H(usize),
}

struct Instance<'a> {
    carrier: Carrier,
    b: ConcreteGroup,
    gg: &'a ConcreteGroup,
    hg: Option<&'a ConcreteGroup>,
    period: usize,
    slots: Vec<Slot>,
    opts: &'a ThetaOptions,
}

impl Instance<'_> {
    fn element(&self, values: &[usize], shift: usize) -> Element {
        let res = |v: usize| Element::Res(v as u64);
        let sh = BigInt::from(shift);
        match &self.carrier {
            Carrier::Wreath { .. } => Element::Wreath { coords: values.iter().map(|&v| res(v)).collect(), shift: sh },
            Carrier::Twisted { m, .. } => Element::Twisted {
                a: values[..2 * m].iter().map(|&v| res(v)).collect(),
                b: values[2 * m..].iter().map(|&v| res(v)).collect(),
                shift: sh,
            },
            _ => unreachable!(),
        }
    }

    fn index(&self, values: &[usize], shift: usize) -> usize {
        let modulus = self.period * self.opts.multiplier as usize;
        self.carrier.index_of(&self.element(values, shift % modulus))
    }

    fn decode(&self, x: usize) -> (Vec<usize>, usize) {
        let idx = |e: &Element| match e {
            Element::Res(r) => *r as usize,
            _ => unreachable!(),
        };
        match self.b.label(x) {
            Element::Wreath { coords, shift } => (coords.iter().map(idx).collect(), shift.to_usize().unwrap()),
            Element::Twisted { a, b, shift } => {
                (a.iter().chain(b).map(idx).collect(), shift.to_usize().unwrap())
            }
            _ => unreachable!(),
        }
    }

    fn identity_values(&self) -> Vec<usize> {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::G(_) => self.gg.identity(),
                Slot::H(_) => self.hg.unwrap().identity(),
            })
            .collect()
    }

    /// Element with `v` in slot `s` and identities elsewhere, shift 0.
    fn embed(&self, s: usize, v: usize) -> usize {
        let mut values = self.identity_values();
        values[s] = v;
        self.index(&values, 0)
    }

    fn g(&self) -> usize {
        let mut values = self.identity_values();
        if let Some(o) = self.opts.offset {
            values[0] = o;
        }
        self.index(&values, 1)
    }

    fn xi(&self, l: usize) -> usize {
        let (g, gi) = (self.g(), self.b.inv(self.g()));
        match self.opts.convention {
            Convention::ShiftConsistent => self.b.mul(self.b.mul(g, l), gi),
            Convention::RightConjugation => self.b.mul(self.b.mul(gi, l), g),
        }
    }

    fn xi_pow(&self, l: usize, k: i64) -> usize {
        let (g, gi) = (self.g(), self.b.inv(self.g()));
        let (x, y) = match (self.opts.convention, k >= 0) {
            (Convention::ShiftConsistent, true) | (Convention::RightConjugation, false) => (g, gi),
            _ => (gi, g),
        };
        let (xk, yk) = (self.b.pow(x, k.abs()), self.b.pow(y, k.abs()));
        self.b.mul(self.b.mul(xk, l), yk)
    }

    fn power_of(&self, s: usize) -> i64 {
        match self.slots[s] {
            Slot::G(i) | Slot::H(i) => i as i64,
        }
    }

    /// `xi^-i` applied to the slot-0 copy of the slot's group.
    fn subgroup_copy(&self, s: usize, v: usize) -> usize {
        let base = match self.slots[s] {
            Slot::G(_) => 0,
            Slot::H(_) => 2 * (self.period / 2),
        };
        self.xi_pow(self.embed(base, v), -self.power_of(s))
    }

    /// `theta(values; k) = (prod xi^-i(values_i)) g^k`.
    fn theta(&self, x: usize) -> usize {
        let (values, k) = self.decode(x);
        let prod = values
            .iter()
            .enumerate()
            .fold(self.b.identity(), |acc, (s, &v)| self.b.mul(acc, self.subgroup_copy(s, v)));
        self.b.mul(prod, self.b.pow(self.g(), k as i64))
    }

    fn slot_group(&self, s: usize) -> &ConcreteGroup {
        match self.slots[s] {
            Slot::G(_) => self.gg,
            Slot::H(_) => self.hg.unwrap(),
        }
    }

    fn shift_of(&self, x: usize) -> usize {
        self.decode(x).1
    }

    /// The tuple shift of the construction itself, by single steps.
    fn beta(&self, x: usize) -> usize {
        let (values, k) = self.decode(x);
        let e = self.element(&values, k);
        let moved = match (&self.carrier, e) {
            (Carrier::Wreath { .. }, Element::Wreath { mut coords, shift }) => {
                coords.rotate_left(1);
                Element::Wreath { coords, shift }
            }
            (Carrier::Twisted { h, gamma, .. }, Element::Twisted { a, b, shift }) => {
                let (a2, b2) = beta_step(h, gamma, &a, &b);
                Element::Twisted { a: a2, b: b2, shift }
            }
            _ => unreachable!(),
        };
        self.carrier.index_of(&moved)
    }
}

fn first_failure<F>(n: usize, f: F) -> Option<usize>
where
    F: Fn(usize) -> bool + Sync,
{
    (0..n).into_par_iter().find_first(|&x| !f(x))
}

fn run_theta(inst: &Instance<'_>, target: &str) -> Result<Report> {
    let b = &inst.b;
    let n = b.order();
    let m = inst.period;
    let modulus = m * inst.opts.multiplier as usize;
    let lab = |x: usize| b.label(x).to_string();
    let mut report = Report::new(target, n);
    let g = inst.g();
    let l_mask: Vec<bool> = (0..n).map(|x| inst.shift_of(x) == 0).collect();
    let l_members = mask_members(&l_mask);

    report.push("eta(g) = 1", (inst.shift_of(g) != 1 % modulus).then(|| lab(g)));
    report.push(
        "g^(period N) = e",
        (b.pow(g, modulus as i64) != b.identity()).then(|| lab(b.pow(g, modulus as i64))),
    );
    let gm = b.pow(g, m as i64);
    report.push(
        "g^period commutes with L",
        l_members.iter().find(|&&l| b.mul(gm, l) != b.mul(l, gm)).map(|&l| lab(l)),
    );
    if let Some(hg) = inst.hg {
        let hm = m / 2;
        let base = 2 * hm;
        let h0: Vec<usize> = (0..hg.order()).map(|v| inst.embed(base, v)).collect();
        let mut in_h0 = vec![usize::MAX; n];
        h0.iter().enumerate().for_each(|(v, &x)| in_h0[x] = v);
        let bad = (0..hg.order()).find(|&v| in_h0[inst.xi_pow(h0[v], hm as i64)] == usize::MAX);
        report.push("xi^m(H) = H", bad.map(|v| hg.label(v).to_string()));
        if bad.is_none() {
            let Carrier::Twisted { h, gamma, .. } = &inst.carrier else { unreachable!() };
            let bad = (0..hg.order()).find(|&v| {
                let declared = h.index_of(&crate::arith::apply_gamma(gamma, h, &Element::Res(v as u64)));
                in_h0[inst.xi_pow(h0[v], hm as i64)] != declared
            });
            report.push("gamma = xi^m on H", bad.map(|v| hg.label(v).to_string()));
        }
    }
    // Direct product decomposition of L into the conjugate subgroups.
    let copies: Vec<Vec<usize>> = (0..inst.slots.len())
        .map(|s| (0..inst.slot_group(s).order()).map(|v| inst.subgroup_copy(s, v)).collect())
        .collect();
    let mut commute = None;
    'pairs: for s in 0..copies.len() {
        for t in s + 1..copies.len() {
            for &x in &copies[s] {
                for &y in &copies[t] {
                    if b.mul(x, y) != b.mul(y, x) {
                        commute = Some(format!("{} and {}", lab(x), lab(y)));
                        break 'pairs;
                    }
                }
            }
        }
    }
    let in_l = copies.iter().flatten().find(|&&x| !l_mask[x]).map(|&x| lab(x));
    let thetas: Vec<usize> = (0..n).into_par_iter().map(|x| inst.theta(x)).collect();
    let mut seen = vec![false; n];
    let mut bijective = None;
    for (x, &y) in thetas.iter().enumerate() {
        if std::mem::replace(&mut seen[y], true) {
            bijective = Some(format!("theta({}) repeats", lab(x)));
            break;
        }
    }
    let product = commute.or(in_l).or_else(|| {
        let restricted: Vec<usize> = l_members.iter().map(|&x| thetas[x]).collect();
        (restricted.iter().any(|&y| !l_mask[y])).then(|| "product map leaves L".into())
    });
    report.push("L is the direct product of the conjugates", product);
    report.push("theta bijective", bijective);
    let hom = first_failure(n, |x| (0..n).all(|y| thetas[b.mul(x, y)] == b.mul(thetas[x], thetas[y])));
    report.pairs_checked = (n * n) as u64;
    report.push(
        "theta homomorphism",
        hom.map(|x| {
            let y = (0..n).find(|&y| thetas[b.mul(x, y)] != b.mul(thetas[x], thetas[y])).unwrap();
            format!("({}, {})", lab(x), lab(y))
        }),
    );
    report.push(
        "theta o beta = xi o theta on L",
        l_members.iter().find(|&&x| thetas[inst.beta(x)] != inst.xi(thetas[x])).map(|&x| lab(x)),
    );
    report.push(
        "sequences commute",
        (0..n)
            .find(|&x| inst.shift_of(thetas[x]) != inst.shift_of(x) || (l_mask[x] && !l_mask[thetas[x]]))
            .map(lab),
    );

    // The 3x3 part with P <= G, Q <= H.
    let p_mask = inst.gg.closure(&inst.opts.p_gens);
    let q_mask = inst.hg.map(|h| h.closure(&inst.opts.q_gens));
    let mut generators = vec![gm];
    for s in [0, 2 * (m / 2)] {
        let (mask, grp) = match (inst.slots.get(s), &q_mask) {
            (Some(Slot::G(_)), _) if s == 0 => (&p_mask, inst.gg),
            (Some(Slot::H(_)), Some(qm)) => (qm, inst.hg.unwrap()),
            _ => continue,
        };
        generators.extend((0..grp.order()).filter(|&v| mask[v]).map(|v| inst.embed(s, v)));
    }
    let conjugates: Vec<usize> =
        (0..n).flat_map(|x| generators.iter().map(move |&s| (x, s))).map(|(x, s)| b.conj(x, s)).collect();
    let mut conjugates = conjugates;
    conjugates.sort_unstable();
    conjugates.dedup();
    let a_mask = b.closure(&conjugates);
    let eta_a: Vec<usize> = {
        let mut s: Vec<usize> = (0..n).filter(|&x| a_mask[x]).map(|x| inst.shift_of(x)).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let expected: Vec<usize> = (0..modulus).step_by(m).collect();
    report.push(
        "eta(A) = period Z",
        (eta_a != expected).then(|| format!("eta(A) = {eta_a:?}")),
    );
    let k_mask: Vec<bool> = (0..n).map(|x| a_mask[x] && l_mask[x]).collect();
    let slot_gens: Vec<usize> = (0..inst.slots.len())
        .flat_map(|s| {
            let mask = match inst.slots[s] {
                Slot::G(_) => p_mask.clone(),
                Slot::H(_) => q_mask.clone().unwrap(),
            };
            (0..mask.len()).filter(move |&v| mask[v]).map(move |v| (s, v)).collect::<Vec<_>>()
        })
        .map(|(s, v)| inst.subgroup_copy(s, v))
        .collect();
    report.push(
        "K is generated by the conjugates of P and Q",
        (b.closure(&slot_gens) != k_mask).then(|| "generated subgroup differs from A and L".into()),
    );
    // theta(P^(2m') x Q^(m') x period Z) = A
    let model_a: Vec<bool> = (0..n)
        .map(|x| {
            let (values, k) = inst.decode(x);
            k % m == 0
                && values.iter().enumerate().all(|(s, &v)| match inst.slots[s] {
                    Slot::G(_) => p_mask[v],
                    Slot::H(_) => q_mask.as_ref().unwrap()[v],
                })
        })
        .collect();
    let mut image_a = vec![false; n];
    (0..n).filter(|&x| model_a[x]).for_each(|x| image_a[thetas[x]] = true);
    report.push("theta maps the model A onto A", (image_a != a_mask).then(|| "images differ".into()));
    match (build_3x3(b, &model_a, &l_mask), build_3x3(b, &a_mask, &l_mask)) {
        (Ok(model), Ok(actual)) => {
            let bad = model.report.failures().first().map(|c| format!("model: {}", c.name));
            let bad = bad.or_else(|| actual.report.failures().first().map(|c| format!("target: {}", c.name)));
            report.push("3x3 diagrams exact", bad);
            let maps_nodes = |src: &[usize], dst: &[usize]| {
                let mut hit = vec![false; n];
                dst.iter().for_each(|&x| hit[x] = true);
                src.len() == dst.len() && src.iter().all(|&x| hit[thetas[x]])
            };
            let nodes_ok = maps_nodes(&model.k_in_b, &actual.k_in_b)
                && maps_nodes(&model.l_in_b, &actual.l_in_b)
                && maps_nodes(&model.a_in_b, &actual.a_in_b);
            report.push("theta maps the diagram nodes", (!nodes_ok).then(|| "K, L or A not preserved".into()));
            report.push(
                "identity on the lower row",
                (0..n).find(|&x| inst.shift_of(thetas[x]) != inst.shift_of(x)).map(lab),
            );
        }
        (Err(e), _) | (_, Err(e)) => report.push("3x3 diagrams exact", Some(e.to_string())),
    }
    Ok(report)
}

/// Verifies the characterization map for `G wr_m Z` on the quotient with
/// shift group `Z_(m N)`, exhaustively.
pub fn verify_theta_wreath(g: &ConcreteGroup, m: usize, opts: &ThetaOptions) -> Result<Report> {
    if m == 0 || opts.multiplier == 0 {
        return Err(Error::Precondition("m and N must be positive".into()));
    }
    let carrier = Carrier::Wreath {
        base: Box::new(Carrier::Table(Arc::new(g.clone()))),
        m,
        modulus: Some(m as u64 * opts.multiplier),
    };
    let b = ConcreteGroup::from_carrier(&carrier, opts.cap)?;
    let inst = Instance {
        carrier,
        b,
        gg: g,
        hg: None,
        period: m,
        slots: (0..m).map(Slot::G).collect(),
        opts,
    };
    run_theta(&inst, "wreath")
}

/// Verifies the characterization map for `(G, H) wr_(gamma, m) Z` on the
/// quotient with shift group `Z_(2m N)`, exhaustively. `gamma` is a table
/// over the element indices of `h`.
pub fn verify_theta_twisted(
    g: &ConcreteGroup,
    h: &ConcreteGroup,
    gamma: &[usize],
    m: usize,
    opts: &ThetaOptions,
) -> Result<Report> {
    if m == 0 || opts.multiplier == 0 {
        return Err(Error::Precondition("m and N must be positive".into()));
    }
    if gamma.len() != h.order() {
        return Err(Error::Gamma(format!("table of length {} over a group of order {}", gamma.len(), h.order())));
    }
    let h_carrier = Carrier::Table(Arc::new(h.clone()));
    let bad = (0..h.order()).find(|&x| {
        gamma[gamma[x]] != x || (0..h.order()).any(|y| gamma[h.mul(x, y)] != h.mul(gamma[x], gamma[y]))
    });
    if let Some(x) = bad {
        return Err(Error::Gamma(format!("not an involutive automorphism at {}", h.label(x))));
    }
    let carrier = Carrier::Twisted {
        g: Box::new(Carrier::Table(Arc::new(g.clone()))),
        h: Box::new(h_carrier),
        gamma: InvolutiveAutomorphism::Table(gamma.to_vec()),
        m,
        modulus: Some(2 * m as u64 * opts.multiplier),
    };
    let b = ConcreteGroup::from_carrier(&carrier, opts.cap)?;
    let inst = Instance {
        carrier,
        b,
        gg: g,
        hg: Some(h),
        period: 2 * m,
        slots: (0..2 * m).map(Slot::G).chain((0..m).map(Slot::H)).collect(),
        opts,
    };
    run_theta(&inst, "twisted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::GroupExpr;
    use crate::parse::parse_expr;

    fn cg(s: &str) -> ConcreteGroup {
        ConcreteGroup::from_expr(&parse_expr(s).unwrap(), 1, 1 << 12).unwrap()
    }

    fn inversion(h: &ConcreteGroup) -> Vec<usize> {
        (0..h.order()).map(|x| h.inv(x)).collect()
    }

    #[test]
    fn split_wreath_and_integers() {
        let c = Carrier::from_expr(&parse_expr("Wr(Z2, 2)").unwrap());
        let b = EpiToZ::shift_projection(c).unwrap();
        let r = split_by_eta(&b, Convention::ShiftConsistent, 1000, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        let b = EpiToZ::shift_projection(Carrier::Integers).unwrap();
        assert!(split_by_eta(&b, Convention::ShiftConsistent, 100, 1).unwrap().passed());
    }

    #[test]
    fn split_rejects_degree_two() {
        let c = Carrier::from_expr(&GroupExpr::IntLine);
        let b = EpiToZ { carrier: c, eta: Box::new(|u| shift_of(u).unwrap()), g: Element::int(2) };
        assert!(matches!(split_by_eta(&b, Convention::ShiftConsistent, 10, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn split_right_conjugation_fails_on_nonabelian_kernel() {
        let c = Carrier::from_expr(&parse_expr("Wr(Z2 x Z3, 3)").unwrap());
        let b = EpiToZ::shift_projection(c).unwrap();
        let r = split_by_eta(&b, Convention::RightConjugation, 200, 3).unwrap();
        assert!(!r.check("theta homomorphism").unwrap().passed);
    }

    #[test]
    fn shift_compat_examples() {
        let l = Carrier::Cyclic(4);
        let all: Vec<Element> = (0..4).map(Element::Res).collect();
        let id = |x: &Element| x.clone();
        let inv = |x: &Element| l.inverse_raw(x);
        let r = check_shift_compat(&l, &l, &id, &id, &id, &id, &id, &all);
        assert!(r.commutes && r.zeta_homomorphism);
        let r = check_shift_compat(&l, &l, &id, &id, &id, &inv, &inv, &all);
        assert!(!r.commutes && !r.zeta_homomorphism && r.witness.is_some());
    }

    #[test]
    fn wreath_theta_examples() {
        let opts = ThetaOptions::default();
        for (g, m, order) in [("Z2", 2, 8), ("Z3", 3, 81), ("1", 1, 1)] {
            let r = verify_theta_wreath(&cg(g), m, &opts).unwrap();
            assert!(r.passed(), "{g} {m}: {:?}", r.failures());
            assert_eq!(r.order, order);
        }
        let p_all = ThetaOptions { p_gens: vec![1], ..ThetaOptions::default() };
        assert!(verify_theta_wreath(&cg("Z2"), 2, &p_all).unwrap().passed());
    }

    #[test]
    fn wreath_theta_with_offset_and_multiplier() {
        let opts = ThetaOptions { offset: Some(1), multiplier: 2, ..ThetaOptions::default() };
        let r = verify_theta_wreath(&cg("Z2"), 3, &opts).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        // With N = 1 the offset element has g^m of order 2 in the quotient.
        let opts = ThetaOptions { offset: Some(1), ..ThetaOptions::default() };
        let r = verify_theta_wreath(&cg("Z2"), 3, &opts).unwrap();
        assert!(!r.check("g^(period N) = e").unwrap().passed);
    }

    #[test]
    fn right_conjugation_fails_beyond_small_m() {
        let opts = ThetaOptions { convention: Convention::RightConjugation, ..ThetaOptions::default() };
        assert!(verify_theta_wreath(&cg("Z2"), 2, &opts).unwrap().passed());
        let r = verify_theta_wreath(&cg("Z3"), 3, &opts).unwrap();
        assert!(!r.check("theta homomorphism").unwrap().passed);
        assert!(verify_theta_twisted(&cg("Z2"), &cg("Z3"), &[0, 1, 2], 1, &opts).unwrap().passed());
        let r = verify_theta_twisted(&cg("Z2"), &cg("Z2"), &[0, 1], 2, &opts).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn twisted_theta_examples() {
        let opts = ThetaOptions::default();
        let z2 = cg("Z2");
        let z3 = cg("Z3");
        let r = verify_theta_twisted(&z2, &z2, &[0, 1], 1, &opts).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert_eq!(r.order, 16);
        let r = verify_theta_twisted(&z2, &z3, &[0, 1, 2], 1, &opts).unwrap();
        assert!(r.passed());
        assert_eq!(r.order, 24);
        let r = verify_theta_twisted(&z2, &z3, &inversion(&z3), 1, &opts).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let r = verify_theta_twisted(&cg("1"), &z3, &inversion(&z3), 2, &opts).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let pq = ThetaOptions { p_gens: vec![1], q_gens: vec![1], ..ThetaOptions::default() };
        assert!(verify_theta_twisted(&z2, &z3, &inversion(&z3), 1, &pq).unwrap().passed());
    }

    #[test]
    fn twisted_with_trivial_h_matches_wreath() {
        let opts = ThetaOptions::default();
        let t = verify_theta_twisted(&cg("Z2"), &cg("1"), &[0], 1, &opts).unwrap();
        let w = verify_theta_wreath(&cg("Z2"), 2, &opts).unwrap();
        assert!(t.passed() && w.passed());
        assert_eq!(t.order, w.order);
    }

    #[test]
    fn rejects_bad_gamma() {
        let z4 = cg("Z4");
        let opts = ThetaOptions::default();
        assert!(verify_theta_twisted(&cg("1"), &z4, &[0, 2, 1, 3], 1, &opts).is_err());
    }

    #[test]
    fn cyclic_twelve_diagram() {
        let b = ConcreteGroup::cyclic(12);
        let a = b.closure(&[3]);
        let l = b.closure(&[2]);
        let d = build_3x3(&b, &a, &l).unwrap();
        assert!(d.report.passed(), "{:?}", d.report.failures());
        let orders: Vec<usize> = d.nodes.iter().map(|n| n.group.order()).collect();
        assert_eq!(orders, vec![2, 6, 3, 4, 12, 3, 2, 2, 1]);
    }

    #[test]
    fn degenerate_diagrams() {
        let b = ConcreteGroup::cyclic(6);
        let all = vec![true; 6];
        let d = build_3x3(&b, &all, &all).unwrap();
        assert!(d.report.passed());
        assert!([2, 5, 6, 7, 8].iter().all(|&i| d.nodes[i].group.order() == 1));
        let trivial = b.closure(&[]);
        let d = build_3x3(&b, &trivial, &all).unwrap();
        assert!(d.report.passed());
        assert_eq!(d.nodes[2].group.order(), 6);
    }

    #[test]
    fn non_normal_subgroup_is_reported() {
        let b = cg("WrM(Z2, 2)");
        let x = b.labels().iter().position(|l| l.to_json().to_string() == "[[1,0],0]").unwrap();
        let all = vec![true; 8];
        assert!(matches!(build_3x3(&b, &b.closure(&[x]), &all), Err(Error::Precondition(_))));
    }

    #[test]
    fn mul_oracle_exhaustive_and_sampled() {
        let c = Carrier::quotient(&parse_expr("TwWr(Z2, Z3, id, 1)").unwrap(), 1, false).unwrap();
        let r = verify_mul_oracle(&c, None, 0, 0).unwrap();
        assert!(r.passed());
        assert_eq!((r.order, r.pairs_checked), (24, 576));
        let c = Carrier::from_expr(&parse_expr("TwWr(Z, Z3, inv, 3)").unwrap());
        assert!(verify_mul_oracle(&c, Some(200), 7, 8).unwrap().passed());
        assert!(verify_mul_oracle(&c, None, 0, 0).is_err());
        assert!(verify_mul_oracle(&Carrier::Integers, Some(1), 0, 0).is_err());
    }
}
