//! Fundamental groups of orbits from decomposition data.
//!
//! For a band with T1 orbit groups `G_1..G_d`, T2 orbit groups `H_1..H_e`
//! and boundary factor `A`:
//!
//! * `e = 0`: `A x Wr(G, b)` with `G = G_1 x .. x G_d`,
//! * `e > 0`: `A x TwWr(G, H, gamma, b/2)` with `H = H_1 x .. x H_e` (and
//!   `G = 1` when `d = 0`).
//!
//! A non-orientable surface multiplies the band answers with a background
//! group; every factor lying in the class generated by products and
//! `Wr(-, m)` is absorbed into one factor `A`.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{gamma_table, Carrier, Element};
use crate::concrete::ConcreteGroup;
use crate::error::{Error, Result};
use crate::exact_seq::{verify_theta_twisted, verify_theta_wreath, Report, ThetaOptions};
use crate::expr::{is_in_class_g, normalize, GroupExpr, Style};
use crate::surface::{Counts, MobiusDecomposition, OrbitRecord, OrbitType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    A,
    B,
    C,
    Aggregate,
}

impl Case {
    pub fn as_str(&self) -> &'static str {
        match self {
            Case::A => "A",
            Case::B => "B",
            Case::C => "C",
            Case::Aggregate => "aggregate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pi1Result {
    pub expression: GroupExpr,
    pub case: Case,
    pub in_class_g: bool,
    pub counts: Option<Counts>,
    /// For aggregates: the product of all factors inside the class.
    pub a_factor: Option<GroupExpr>,
    pub pieces: Vec<Pi1Result>,
}

impl Pi1Result {
    pub fn latex(&self) -> String {
        self.expression.format(Style::Latex)
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "expression": self.expression.to_string(),
            "latex": self.latex(),
            "case": self.case.as_str(),
            "in_class_G": self.in_class_g,
            "counts": self.counts,
        });
        if self.case == Case::Aggregate {
            v["a_factor"] = json!(self.a_factor.as_ref().map(|a| a.to_string()));
            v["pieces"] = Value::Array(self.pieces.iter().map(Pi1Result::to_json).collect());
        }
        v
    }
}

struct Split {
    g: GroupExpr,
    h: GroupExpr,
    t1: Vec<OrbitRecord>,
    t2: Vec<OrbitRecord>,
    counts: Counts,
}

fn split(d: &MobiusDecomposition) -> Result<Split> {
    let report = d.validate();
    if !report.is_valid() {
        return Err(Error::Invalid(report.to_string()));
    }
    let orbits = d.classify_orbits()?;
    let (t1, t2): (Vec<_>, Vec<_>) = orbits.into_iter().partition(|o| o.kind == OrbitType::T1);
    let g = GroupExpr::direct(t1.iter().map(|o| o.representative_group.clone()).collect());
    let h = GroupExpr::direct(t2.iter().map(|o| o.representative_group.clone()).collect());
    Ok(Split { g, h, t1, t2, counts: report.counts.expect("valid reports carry counts") })
}

/// `pi_1 O(f)` of a Moebius band. `H` lists the T2 representatives in
/// the order of [`MobiusDecomposition::classify_orbits`]; a supplied
/// `gamma` refers to that order.
pub fn pi1_mobius(d: &MobiusDecomposition) -> Result<Pi1Result> {
    let s = split(d)?;
    let b = s.counts.b;
    let (case, band) = if s.t2.is_empty() {
        (Case::A, GroupExpr::wr(s.g, b))
    } else {
        let case = if s.t1.is_empty() { Case::B } else { Case::C };
        (case, GroupExpr::twisted(s.g, s.h, d.gamma(), b / 2))
    };
    let expression = normalize(&GroupExpr::Direct(vec![d.cylinder_group.clone(), band]));
    Ok(Pi1Result {
        in_class_g: is_in_class_g(&expression),
        expression,
        case,
        counts: Some(s.counts),
        a_factor: None,
        pieces: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceDecomposition {
    /// Non-orientable genus.
    pub genus: u64,
    /// Product of the groups of all pieces other than the bands.
    pub background_group: GroupExpr,
    pub mobius_pieces: Vec<MobiusDecomposition>,
}

pub fn pi1_nonorientable(s: &SurfaceDecomposition) -> Result<Pi1Result> {
    let k = s.mobius_pieces.len() as u64;
    if s.genus < 2 {
        return Err(Error::Invalid(format!("genus {} is below 2", s.genus)));
    }
    if k > s.genus {
        return Err(Error::Invalid(format!("{k} disjoint bands on a surface of genus {}", s.genus)));
    }
    if !is_in_class_g(&s.background_group) {
        return Err(Error::Invalid(format!("background group {} is outside the class", s.background_group)));
    }
    let pieces = s
        .mobius_pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| pi1_mobius(p).map_err(|e| Error::Invalid(format!("piece {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    let mut factors = vec![s.background_group.clone()];
    factors.extend(pieces.iter().map(|p| p.expression.clone()));
    let flat = match normalize(&GroupExpr::Direct(factors)) {
        GroupExpr::Direct(fs) => fs,
        other => vec![other],
    };
    let (inside, outside): (Vec<_>, Vec<_>) = flat.into_iter().partition(is_in_class_g);
    let a_factor = normalize(&GroupExpr::direct(inside));
    let mut all = vec![a_factor.clone()];
    all.extend(outside);
    let expression = normalize(&GroupExpr::direct(all));
    Ok(Pi1Result {
        in_class_g: is_in_class_g(&expression),
        expression,
        case: Case::Aggregate,
        counts: None,
        a_factor: Some(a_factor),
        pieces,
    })
}

/// The nine nodes of the stabilizer diagram in the layout
///
/// ```text
///   K  ->  L  ->  L/K
///   A  ->  B  ->  B/A
///  bZ  ->  Z  ->  Z_b
/// ```
///
/// with `K` the product of the `Delta` subgroups and `L` of the disk groups.
#[derive(Debug, Clone)]
pub struct BieberbachDiagram {
    pub case: Case,
    pub nodes: Vec<(&'static str, String)>,
    /// Exhaustive check on the quotient with shift group `Z_b`, when all
    /// groups are finite and the order fits under the cap.
    pub concrete: Option<Report>,
    pub note: Option<String>,
}

const NODE_NAMES: [&str; 9] = ["K", "L", "L/K", "A", "B", "B/A", "bZ", "Z", "Z_b"];

fn quotient_text(g: &GroupExpr, p: &GroupExpr) -> String {
    if *p == GroupExpr::Unit {
        g.to_string()
    } else if normalize(g) == normalize(p) {
        "1".into()
    } else {
        format!("({g})/({p})")
    }
}

/// `X^k x Y^l x tail`, dropping trivial parts.
fn product_text(parts: &[(String, u64)], tail: &str) -> String {
    let mut out: Vec<String> = parts
        .iter()
        .filter(|(x, k)| x != "1" && *k > 0)
        .map(|(x, k)| {
            let x = if x.contains(' ') { format!("({x})") } else { x.clone() };
            if *k == 1 {
                x
            } else {
                format!("{x}^{k}")
            }
        })
        .collect();
    if tail != "0" || out.is_empty() {
        out.push(tail.to_string());
    }
    if out.len() > 1 && out.last().is_some_and(|t| t == "0") {
        out.pop();
    }
    let s = out.join(" x ");
    if s == "0" {
        "1".into()
    } else {
        s
    }
}

fn multiple_of_z(k: u64) -> String {
    if k == 1 {
        "Z".into()
    } else {
        format!("{k}Z")
    }
}

pub fn bieberbach_diagram(d: &MobiusDecomposition, cap: usize) -> Result<BieberbachDiagram> {
    let s = split(d)?;
    if let Some(i) = d.disks.iter().position(|x| x.delta.is_none()) {
        return Err(Error::Invalid(format!("disk {} has no Delta data", i + 1)));
    }
    let delta_of = |o: &OrbitRecord| d.disks[o.representative].delta.clone().unwrap();
    let p = GroupExpr::direct(s.t1.iter().map(|o| delta_of(o).group).collect());
    let q = GroupExpr::direct(s.t2.iter().map(|o| delta_of(o).group).collect());
    let b = s.counts.b;
    let (g_n, h_n) = (normalize(&s.g), normalize(&s.h));
    let (p, q) = (normalize(&p), normalize(&q));
    let gp = quotient_text(&g_n, &p);
    let hq = quotient_text(&h_n, &q);
    let (case, period, nodes) = if s.t2.is_empty() {
        let b_expr = normalize(&GroupExpr::wr(s.g.clone(), b));
        let quotient_b = if gp == "1" { format!("Z{b}") } else { format!("WrM({gp}, {b})") };
        let nodes = vec![
            product_text(&[(p.to_string(), b)], "0"),
            product_text(&[(g_n.to_string(), b)], "0"),
            product_text(&[(gp.clone(), b)], "0"),
            product_text(&[(p.to_string(), b)], &multiple_of_z(b)),
            b_expr.to_string(),
            if b == 1 { gp.clone() } else { quotient_b },
        ];
        (Case::A, b, nodes)
    } else {
        let m = b / 2;
        let case = if s.t1.is_empty() { Case::B } else { Case::C };
        let b_expr = normalize(&GroupExpr::twisted(s.g.clone(), s.h.clone(), d.gamma(), m));
        let nodes = vec![
            product_text(&[(p.to_string(), 2 * m), (q.to_string(), m)], "0"),
            product_text(&[(g_n.to_string(), 2 * m), (h_n.to_string(), m)], "0"),
            product_text(&[(gp.clone(), 2 * m), (hq.clone(), m)], "0"),
            product_text(&[(p.to_string(), 2 * m), (q.to_string(), m)], &multiple_of_z(2 * m)),
            b_expr.to_string(),
            format!("TwWrM({gp}, {hq}, {}, {m})", d.gamma()),
        ];
        (case, 2 * m, nodes)
    };
    let mut labelled: Vec<(&'static str, String)> = NODE_NAMES.iter().copied().zip(nodes).collect();
    labelled.push(("bZ", multiple_of_z(period)));
    labelled.push(("Z", "Z".into()));
    labelled.push(("Z_b", if period == 1 { "1".into() } else { format!("Z{period}") }));

    let mut diagram = BieberbachDiagram { case, nodes: labelled, concrete: None, note: None };
    let finite = s.g.is_finite() && s.h.is_finite();
    if !finite {
        diagram.note = Some("infinite leaf groups: symbolic diagram only".into());
        return Ok(diagram);
    }
    let gg = ConcreteGroup::from_expr(&s.g, 1, cap)?;
    let p_gens = subgroup_generators(&s.g, &gg, &s.t1, d)?;
    let order = (gg.order() as u128).saturating_pow(period as u32).saturating_mul(period as u128);
    let result = if s.t2.is_empty() {
        if order > cap as u128 {
            Err(Error::CapExceeded { order, cap: cap as u128 })
        } else {
            let opts = ThetaOptions { p_gens, cap, ..ThetaOptions::default() };
            verify_theta_wreath(&gg, period as usize, &opts)
        }
    } else {
        let hg = ConcreteGroup::from_expr(&s.h, 1, cap)?;
        let q_gens = subgroup_generators(&s.h, &hg, &s.t2, d)?;
        let order = order.saturating_mul((hg.order() as u128).saturating_pow(period as u32 / 2));
        if order > cap as u128 {
            Err(Error::CapExceeded { order, cap: cap as u128 })
        } else {
            let hc = Carrier::quotient(&s.h, 1, false)?;
            let gamma = d.gamma();
            let table = gamma_table(&gamma, &hc, hg.order());
            let opts = ThetaOptions { p_gens, q_gens, cap, ..ThetaOptions::default() };
            verify_theta_twisted(&gg, &hg, &table, (period / 2) as usize, &opts)
        }
    };
    match result {
        Ok(r) => diagram.concrete = Some(r),
        Err(Error::CapExceeded { order, cap }) => {
            diagram.note = Some(format!("quotient of order {order} exceeds cap {cap}: symbolic diagram only"))
        }
        Err(e) => return Err(e),
    }
    Ok(diagram)
}


/// Indices in `group` (the product of the orbit representatives) of the
/// declared `Delta` generators, after checking the declared order.
fn subgroup_generators(
    expr: &GroupExpr,
    group: &ConcreteGroup,
    orbits: &[OrbitRecord],
    d: &MobiusDecomposition,
) -> Result<Vec<usize>> {
    let carrier = Carrier::quotient(expr, 1, false)?;
    let single = orbits.len() == 1;
    let mut gens = Vec::new();
    for (j, o) in orbits.iter().enumerate() {
        let disk = &d.disks[o.representative];
        let delta = disk.delta.as_ref().unwrap();
        let local = Carrier::quotient(&disk.group, 1, false)?;
        let mut mine = Vec::new();
        for x in &delta.generators {
            local.check(x)?;
            let elem = if single {
                x.clone()
            } else {
                let mut coords: Vec<Element> =
                    orbits.iter().map(|o| Carrier::quotient(&d.disks[o.representative].group, 1, false).map(|c| c.identity())).collect::<Result<_>>()?;
                coords[j] = x.clone();
                Element::Tuple(coords)
            };
            carrier.check(&elem)?;
            mine.push(carrier.index_of(&elem));
        }
        let size = group.closure(&mine).iter().filter(|&&x| x).count();
        let declared = ConcreteGroup::from_expr(&delta.group, 1, usize::MAX)?.order();
        if size != declared {
            return Err(Error::Invalid(format!(
                "Delta of disk {} generates a subgroup of order {size}, declared {} of order {declared}",
                o.representative + 1,
                delta.group
            )));
        }
        gens.extend(mine);
    }
    Ok(gens)
}
