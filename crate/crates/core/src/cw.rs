//! Cell complexes of the projective plane and cellular automorphisms.
//!
//! Collapsing the boundary of the band to a point `x*` turns the special
//! decomposition into a CW partition of `RP^2`: vertices and edges of `K`,
//! the cell `C0` around `x*`, and one 2-cell per disk. This module counts
//! invariant cells of cellular maps, checks the Lefschetz identity for the
//! partition and for the lift to the sphere, evaluates the seven conditions
//! describing the kernel of the action on oriented disks, and builds such
//! partitions with their symmetries from orbit data.

use std::collections::HashMap;
use std::sync::Arc;

use num_integer::Integer;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::surface::{MobiusDecomposition, OrbitType};

/// Oriented cells: edges by endpoints, 2-cells by boundary cycles of signed
/// edges (`+1` traverses tail to head).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CwComplex {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub faces: Vec<Vec<(usize, i8)>>,
    /// The 2-cell containing `x*`.
    pub base_face: usize,
}

impl CwComplex {
    pub fn counts(&self) -> [usize; 3] {
        [self.vertices, self.edges.len(), self.faces.len()]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Boundary cycles close up and every edge is used exactly twice.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::NonCellular(msg));
        if self.base_face >= self.faces.len() {
            return bad("base face out of range".into());
        }
        if let Some(&(u, v)) = self.edges.iter().find(|&&(u, v)| u >= self.vertices || v >= self.vertices) {
            return bad(format!("edge ({u}, {v}) has an unknown endpoint"));
        }
        let mut uses = vec![0usize; self.edges.len()];
        for (f, cycle) in self.faces.iter().enumerate() {
            if cycle.is_empty() {
                return bad(format!("face {f} has an empty boundary"));
            }
            for (k, &(e, s)) in cycle.iter().enumerate() {
                if e >= self.edges.len() || (s != 1 && s != -1) {
                    return bad(format!("face {f} uses a bad edge entry ({e}, {s})"));
                }
                uses[e] += 1;
                let (next, t) = cycle[(k + 1) % cycle.len()];
                if next >= self.edges.len() {
                    return bad(format!("face {f} uses a bad edge {next}"));
                }
                if self.head(e, s) != self.tail(next, t) {
                    return bad(format!("boundary of face {f} breaks after edge {e}"));
                }
            }
        }
        if let Some(e) = uses.iter().position(|&u| u != 2) {
            return bad(format!("edge {e} lies on {} face sides", uses[e]));
        }
        Ok(())
    }

    fn tail(&self, e: usize, s: i8) -> usize {
        if s > 0 {
            self.edges[e].0
        } else {
            self.edges[e].1
        }
    }

    fn head(&self, e: usize, s: i8) -> usize {
        self.tail(e, -s)
    }

    /// The two faces on the sides of each edge.
    pub fn edge_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.edges.len()];
        for (f, cycle) in self.faces.iter().enumerate() {
            for &(e, _) in cycle {
                out[e].push(f);
            }
        }
        out
    }

    /// An edge with the same 2-cell on both sides, if any.
    pub fn one_sided_edge(&self) -> Option<usize> {
        self.edge_faces().iter().position(|fs| fs.len() == 2 && fs[0] == fs[1])
    }

    /// Quotient by a free cellular involution. Each class is oriented like
    /// its smallest member.
    pub fn quotient(&self, iota: &CellMap) -> Result<Covering> {
        iota.check_bijective(self)?;
        let mut class = [Vec::new(), Vec::new(), Vec::new()];
        let mut rep_sign = [Vec::new(), Vec::new(), Vec::new()];
        let mut reps = [Vec::new(), Vec::new(), Vec::new()];
        for dim in 0..3 {
            let n = self.counts()[dim];
            class[dim] = vec![usize::MAX; n];
            rep_sign[dim] = vec![1i8; n];
            for c in 0..n {
                let partner = iota.perm[dim][c];
                if partner == c || iota.perm[dim][partner] != c {
                    return Err(Error::Precondition(format!("involution is not free on {dim}-cell {c}")));
                }
                if c < partner {
                    class[dim][c] = reps[dim].len();
                    class[dim][partner] = reps[dim].len();
                    rep_sign[dim][partner] = iota.sign[dim][c];
                    reps[dim].push(c);
                }
            }
        }
        let edges = reps[1].iter().map(|&e| (class[0][self.edges[e].0], class[0][self.edges[e].1])).collect();
        let faces = reps[2]
            .iter()
            .map(|&f| self.faces[f].iter().map(|&(e, s)| (class[1][e], s * rep_sign[1][e])).collect())
            .collect();
        let base = CwComplex {
            vertices: reps[0].len(),
            edges,
            faces,
            base_face: class[2][self.base_face],
        };
        Ok(Covering { total: Arc::new(self.clone()), base: Arc::new(base), iota: iota.clone(), class, rep_sign, reps })
    }
}

/// Images and orientation signs of all cells; vertex signs are always `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMap {
    pub perm: [Vec<usize>; 3],
    pub sign: [Vec<i8>; 3],
}

impl CellMap {
    pub fn identity(x: &CwComplex) -> Self {
        let c = x.counts();
        CellMap {
            perm: [(0..c[0]).collect(), (0..c[1]).collect(), (0..c[2]).collect()],
            sign: [vec![1; c[0]], vec![1; c[1]], vec![1; c[2]]],
        }
    }

    /// `self o other`.
    pub fn compose(&self, other: &CellMap) -> CellMap {
        let mut out = other.clone();
        for dim in 0..3 {
            for c in 0..other.perm[dim].len() {
                let mid = other.perm[dim][c];
                out.perm[dim][c] = self.perm[dim][mid];
                out.sign[dim][c] = other.sign[dim][c] * self.sign[dim][mid];
            }
        }
        out
    }

    fn check_bijective(&self, x: &CwComplex) -> Result<()> {
        for (dim, &n) in x.counts().iter().enumerate() {
            if self.perm[dim].len() != n || self.sign[dim].len() != n {
                return Err(Error::NonCellular(format!("{dim}-cell data has the wrong length")));
            }
            let mut seen = vec![false; n];
            for (c, &t) in self.perm[dim].iter().enumerate() {
                if t >= n || std::mem::replace(&mut seen[t], true) {
                    return Err(Error::NonCellular(format!("{dim}-cells are not permuted (cell {c})")));
                }
            }
            if let Some(c) = self.sign[dim].iter().position(|&s| s != 1 && s != -1) {
                return Err(Error::NonCellular(format!("{dim}-cell {c} has sign {}", self.sign[dim][c])));
            }
        }
        if self.sign[0].iter().any(|&s| s != 1) {
            return Err(Error::NonCellular("vertices carry no orientation".into()));
        }
        Ok(())
    }

    /// The map respects endpoints and boundary cycles.
    pub fn check_cellular(&self, x: &CwComplex) -> Result<()> {
        self.check_bijective(x)?;
        for (e, &(u, v)) in x.edges.iter().enumerate() {
            let (u2, v2) = x.edges[self.perm[1][e]];
            let (a, b) = (self.perm[0][u], self.perm[0][v]);
            let ok = if self.sign[1][e] > 0 { (a, b) == (u2, v2) } else { (a, b) == (v2, u2) };
            if !ok {
                return Err(Error::NonCellular(format!("edge {e} and its endpoints disagree")));
            }
        }
        for (f, cycle) in x.faces.iter().enumerate() {
            let mut image: Vec<(usize, i8)> = cycle.iter().map(|&(e, s)| (self.perm[1][e], s * self.sign[1][e])).collect();
            if self.sign[2][f] < 0 {
                image.reverse();
                image.iter_mut().for_each(|p| p.1 = -p.1);
            }
            if !is_rotation(&image, &x.faces[self.perm[2][f]]) {
                return Err(Error::NonCellular(format!("boundary of face {f} is not carried to a boundary")));
            }
        }
        Ok(())
    }
}

fn is_rotation(a: &[(usize, i8)], b: &[(usize, i8)]) -> bool {
    a.len() == b.len() && (0..a.len().max(1)).any(|r| (0..a.len()).all(|i| a[(i + r) % a.len()] == b[i]))
}

/// A cellular self-map of a complex; `eta`, when known, is `(eta(h), b)`.
#[derive(Debug, Clone)]
pub struct CwAutomorphism {
    pub complex: Arc<CwComplex>,
    pub map: CellMap,
    pub eta: Option<(i64, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InvariantCounts {
    pub cells: [usize; 3],
    pub plus: [usize; 3],
    pub minus: [usize; 3],
}

impl InvariantCounts {
    /// `sum (-1)^i (c_i^+ - c_i^-)`.
    pub fn lefschetz(&self) -> i64 {
        (0..3).map(|i| (if i % 2 == 0 { 1 } else { -1 }) * (self.plus[i] as i64 - self.minus[i] as i64)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LefschetzReport {
    pub lefschetz: i64,
    pub euler: i64,
    pub counts: InvariantCounts,
    pub holds: bool,
}

impl CwAutomorphism {
    pub fn identity(complex: Arc<CwComplex>) -> Self {
        let map = CellMap::identity(&complex);
        CwAutomorphism { complex, map, eta: Some((0, 1)) }
    }

    /// Invariant cells by dimension and sign, read off the data as given.
    pub fn invariant_counts(&self) -> InvariantCounts {
        let cells = self.complex.counts();
        let mut plus = [0; 3];
        let mut minus = [0; 3];
        for dim in 0..3 {
            for c in 0..cells[dim] {
                if self.map.perm[dim].get(c) == Some(&c) {
                    if self.map.sign[dim][c] > 0 {
                        plus[dim] += 1;
                    } else {
                        minus[dim] += 1;
                    }
                }
            }
        }
        InvariantCounts { cells, plus, minus }
    }

    pub fn check_cellular(&self) -> Result<()> {
        self.complex.check()?;
        self.map.check_cellular(&self.complex)?;
        if self.map.perm[2][self.complex.base_face] != self.complex.base_face {
            return Err(Error::NonCellular("the cell containing x* is moved".into()));
        }
        Ok(())
    }
}

/// `c0^+ - (c1^+ - c1^-) + (c2^+ - c2^-)` against `chi = 1`.
pub fn lefschetz_check(w: &CwAutomorphism) -> Result<LefschetzReport> {
    w.check_cellular()?;
    let euler = w.complex.euler_characteristic();
    if euler != 1 {
        return Err(Error::Precondition(format!("Euler characteristic {euler}, expected 1")));
    }
    let counts = w.invariant_counts();
    let lefschetz = counts.lefschetz();
    Ok(LefschetzReport { lefschetz, euler, counts, holds: lefschetz == 1 })
}

/// The seven equivalent descriptions of the kernel of the action on
/// oriented disks, evaluated one by one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelProbe {
    pub conditions: Vec<(char, bool)>,
    pub agree: bool,
    /// Cross-check of `(f)` when `eta` is known: the boundary reading.
    pub eta_matches_boundary: Option<bool>,
}

impl KernelProbe {
    pub fn all_true(&self) -> bool {
        self.conditions.iter().all(|c| c.1)
    }
}

pub fn ker_s_act_probe(w: &CwAutomorphism) -> KernelProbe {
    let x = &w.complex;
    let m = &w.map;
    let counts = w.invariant_counts();
    let n = x.faces.len().saturating_sub(1);
    let fixed_plus = |dim: usize, c: usize| m.perm[dim].get(c) == Some(&c) && m.sign[dim][c] > 0;
    let disks_fixed = (0..x.faces.len()).filter(|&f| f != x.base_face).all(|f| fixed_plus(2, f));
    let all_fixed = (0..3).all(|dim| (0..x.counts()[dim]).all(|c| fixed_plus(dim, c)));
    let boundary_fixed = x.faces[x.base_face].iter().all(|&(e, _)| fixed_plus(1, e));
    let eta_reading = w.eta.map(|(eta, b)| b > 0 && eta.mod_floor(&(b as i64)) == 0);
    let conditions = vec![
        ('a', disks_fixed),
        ('b', counts.plus[2] == n + 1 && counts.minus[2] == 0),
        ('c', counts.plus[2] >= 2 || n == 0),
        ('d', all_fixed),
        ('e', counts.plus[1] == counts.cells[1] && counts.minus[1] == 0),
        ('f', eta_reading.unwrap_or(boundary_fixed)),
        ('g', counts.plus[1] > 0),
    ];
    let agree = conditions.iter().all(|c| c.1) || conditions.iter().all(|c| !c.1);
    KernelProbe { conditions, agree, eta_matches_boundary: eta_reading.map(|r| r == boundary_fixed) }
}

/// A double covering of cell complexes given by a free involution.
#[derive(Debug, Clone)]
pub struct Covering {
    pub total: Arc<CwComplex>,
    pub base: Arc<CwComplex>,
    pub iota: CellMap,
    /// Class of each cell of the total space.
    pub class: [Vec<usize>; 3],
    /// Orientation of each cell relative to its class.
    pub rep_sign: [Vec<i8>; 3],
    reps: [Vec<usize>; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiftReport {
    pub commutes_with_involution: bool,
    pub covers_base_map: bool,
    pub lift: InvariantCounts,
    pub base: InvariantCounts,
    /// `c_i^+(lift) = 2 c_i^+(base)` and `c_i^-(lift) = 0` for `i = 1, 2`.
    pub doubled: bool,
    /// `2 = c0^+(lift) - 2 c1^+(base) + 2 c2^+(base)`.
    pub identity_holds: bool,
}

impl LiftReport {
    pub fn passed(&self) -> bool {
        self.commutes_with_involution && self.covers_base_map && self.doubled && self.identity_holds
    }
}

impl Covering {
    /// The map induced on the base by a map commuting with the involution.
    pub fn descend(&self, lift: &CellMap) -> CellMap {
        let mut out = CellMap::identity(&self.base);
        for dim in 0..3 {
            for (q, &r) in self.reps[dim].iter().enumerate() {
                let t = lift.perm[dim][r];
                out.perm[dim][q] = self.class[dim][t];
                out.sign[dim][q] = lift.sign[dim][r] * self.rep_sign[dim][t];
            }
        }
        out
    }

    pub fn check_lift(&self, lift: &CellMap, base: &CwAutomorphism) -> Result<LiftReport> {
        lift.check_cellular(&self.total)?;
        let commutes = (0..3).all(|dim| {
            (0..self.total.counts()[dim]).all(|c| {
                lift.perm[dim][self.iota.perm[dim][c]] == self.iota.perm[dim][lift.perm[dim][c]]
            })
        });
        let covers = (0..3).all(|dim| {
            (0..self.total.counts()[dim])
                .all(|c| self.class[dim][lift.perm[dim][c]] == base.map.perm[dim][self.class[dim][c]])
        });
        let up = CwAutomorphism { complex: self.total.clone(), map: lift.clone(), eta: None }.invariant_counts();
        let down = base.invariant_counts();
        let doubled = (1..3).all(|i| up.plus[i] == 2 * down.plus[i] && up.minus[i] == 0);
        let identity_holds = up.plus[0] as i64 - 2 * down.plus[1] as i64 + 2 * down.plus[2] as i64 == 2;
        Ok(LiftReport {
            commutes_with_involution: commutes,
            covers_base_map: covers,
            lift: up,
            base: down,
            doubled,
            identity_holds,
        })
    }
}

/// How T1 orbits are stacked into bands of the model; T2 orbits always
/// share the middle band. `subdivision` splits every arc into that many
/// edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub bands: Vec<usize>,
    pub subdivision: usize,
}

impl Layout {
    pub fn single_band(d: usize) -> Self {
        Layout { bands: if d == 0 { Vec::new() } else { vec![d] }, subdivision: 1 }
    }

    /// A random composition of `d` into bands and a subdivision in `1..=max_subdivision`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize, max_subdivision: usize) -> Self {
        let mut bands = Vec::new();
        let mut left = d;
        while left > 0 {
            let k = rng.gen_range(1..=left);
            bands.push(k);
            left -= k;
        }
        Layout { bands, subdivision: rng.gen_range(1..=max_subdivision.max(1)) }
    }
}

/// The partition of the sphere double cover of `RP^2` built from orbit data.
///
/// The sphere is a stack of horizontal circles of circumference `2 b D`
/// between two polar caps; consecutive circles touch at the pinch points of
/// the band between them, and each band is a necklace of disks. `R` is the
/// rotation by `2D` and the involution is rotation by `bD` composed with the
/// reflection of the stack. T1 orbits sit in the upper bands (their mirror
/// images below), T2 orbits in the middle band, which exists only when
/// `e > 0`; otherwise the middle of the stack is a single circle.
#[derive(Debug, Clone)]
pub struct LatticeModel {
    pub b: u64,
    pub covering: Covering,
    rotation: CellMap,
    /// `(Y_i, +1)` corresponds to the base 2-cell `disk_faces[i].0` with
    /// orientation `disk_faces[i].1`.
    pub disk_faces: Vec<(usize, i8)>,
}

struct Circle {
    positions: Vec<i64>,
    base_vertex: Vec<usize>,
    edge_start: usize,
}

impl LatticeModel {
    pub fn build(dec: &MobiusDecomposition, layout: &Layout) -> Result<Self> {
        let orbits = dec.classify_orbits()?;
        let b = dec.b();
        let t1: Vec<_> = orbits.iter().filter(|o| o.kind == OrbitType::T1).collect();
        let t2: Vec<_> = orbits.iter().filter(|o| o.kind == OrbitType::T2).collect();
        if layout.bands.iter().sum::<usize>() != t1.len() || layout.bands.contains(&0) {
            return Err(Error::Precondition(format!("layout {:?} does not hold {} T1 orbits", layout.bands, t1.len())));
        }
        if layout.subdivision == 0 {
            return Err(Error::Precondition("subdivision must be positive".into()));
        }
        let mut model = Self::assemble(b as i64, &layout.bands, t2.len(), layout.subdivision)?;

        // Orbit j of band q uses sphere faces r + k p in that band; its
        // disks follow sigma so that R acts on faces like sigma on disks.
        let n = dec.n();
        let mut disk_faces = vec![(0, 1); n];
        let band_starts = model.band_face_starts(&layout.bands, t2.len());
        let mut next = t1.iter();
        for (q, &p) in layout.bands.iter().enumerate() {
            for r in 0..p {
                let orbit = next.next().unwrap();
                model.assign(dec, &orbit.disks, band_starts[q] + r, p, &mut disk_faces);
            }
        }
        let mid = band_starts[layout.bands.len()];
        for (r, orbit) in t2.iter().enumerate() {
            model.assign(dec, &orbit.disks, mid + r, t2.len(), &mut disk_faces);
        }
        model.disk_faces = disk_faces;
        Ok(model)
    }

    fn assign(&self, dec: &MobiusDecomposition, disks: &[usize], first: usize, stride: usize, out: &mut [(usize, i8)]) {
        let mut cur = (disks[0], 1i8);
        for k in 0..disks.len() {
            let face = first + k * stride;
            let (cls, s) = (self.covering.class[2][face], self.covering.rep_sign[2][face]);
            out[cur.0] = (cls, s * cur.1);
            cur = dec.sigma.apply(cur);
        }
    }

    /// First sphere face index of each upper band and of the middle band.
    fn band_face_starts(&self, bands: &[usize], e: usize) -> Vec<usize> {
        let b = self.b as usize;
        let mut starts = Vec::new();
        let mut at = 1;
        for &p in bands {
            starts.push(at);
            at += b * p;
        }
        starts.push(if e > 0 { at } else { usize::MAX });
        starts
    }

    fn assemble(b: i64, bands: &[usize], e: usize, sub: usize) -> Result<Self> {
        if b <= 0 {
            return Err(Error::Precondition("b must be positive".into()));
        }
        if e > 0 && b % 2 == 1 {
            return Err(Error::Precondition("a middle band needs b even".into()));
        }
        let dd = bands.iter().chain((e > 0).then_some(&e)).fold(1i64, |acc, &p| acc.lcm(&(p as i64)));
        let period = 2 * b * dd;
        let half = b * dd;
        let upper = bands.len();
        let ncircles = if e > 0 { 2 * upper + 2 } else { 2 * upper + 1 };
        let nbands = ncircles - 1;
        let mirror = |c: usize| ncircles - 1 - c;

        // (faces, width, offset) per band, top to bottom
        let mut band_shape = Vec::with_capacity(nbands);
        for beta in 0..nbands {
            let (f, w, offset) = if beta < upper {
                let p = bands[beta] as i64;
                (b * p, 2 * dd / p, 0)
            } else if e > 0 && beta == upper {
                (b * e as i64, 2 * dd / e as i64, 0)
            } else {
                let p = bands[nbands - 1 - beta] as i64;
                let w = 2 * dd / p;
                (b * p, w, half.rem_euclid(w))
            };
            band_shape.push((f as usize, w, offset));
        }
        let pinches = |beta: usize| -> Vec<i64> {
            let (f, w, off) = band_shape[beta];
            (0..f as i64).map(|q| off + q * w).collect()
        };

        let mut circles: Vec<Circle> = Vec::with_capacity(ncircles);
        for c in 0..ncircles {
            let mut pos: Vec<i64> = Vec::new();
            if c >= 1 {
                pos.extend(pinches(c - 1));
            }
            if c + 1 < ncircles {
                pos.extend(pinches(c));
            }
            if e == 0 && c == upper {
                pos.extend((0..2 * b).map(|k| k * dd));
            }
            pos.sort_unstable();
            pos.dedup();
            circles.push(Circle { positions: pos, base_vertex: Vec::new(), edge_start: 0 });
        }

        // Base vertices, merged at pinch points.
        let key_index: Vec<usize> = circles
            .iter()
            .scan(0, |acc, c| {
                let s = *acc;
                *acc += c.positions.len();
                Some(s)
            })
            .collect();
        let total: usize = circles.iter().map(|c| c.positions.len()).sum();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let locate = |circles: &[Circle], c: usize, x: i64| circles[c].positions.binary_search(&x.rem_euclid(period)).ok();
        for beta in 0..nbands {
            for x in pinches(beta) {
                let (i, j) = (locate(&circles, beta, x).unwrap(), locate(&circles, beta + 1, x).unwrap());
                let (ri, rj) = (find(&mut parent, key_index[beta] + i), find(&mut parent, key_index[beta + 1] + j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let mut id_of_root = HashMap::new();
        let mut nvert = 0usize;
        for (c, circle) in circles.iter_mut().enumerate() {
            for i in 0..circle.positions.len() {
                let root = find(&mut parent, key_index[c] + i);
                let id = *id_of_root.entry(root).or_insert_with(|| {
                    nvert += 1;
                    nvert - 1
                });
                circle.base_vertex.push(id);
            }
        }
        // Subdivision vertices and edges, circle by circle.
        let mut edges = Vec::new();
        let mut sub_vertex: Vec<Vec<usize>> = Vec::new();
        for circle in circles.iter_mut() {
            circle.edge_start = edges.len();
            let r = circle.positions.len();
            for j in 0..r {
                let inner: Vec<usize> = (1..sub).map(|t| nvert + t - 1).collect();
                nvert += sub - 1;
                let mut chain = vec![circle.base_vertex[j]];
                chain.extend(&inner);
                chain.push(circle.base_vertex[(j + 1) % r]);
                for t in 0..sub {
                    edges.push((chain[t], chain[t + 1]));
                }
                sub_vertex.push(inner);
            }
        }
        let edge = |circles: &[Circle], c: usize, j: usize, t: usize| circles[c].edge_start + j * sub + t;
        let arcs_between = |circles: &[Circle], c: usize, from: i64, full: bool, to: i64| -> Vec<usize> {
            let r = circles[c].positions.len();
            let start = locate(circles, c, from).unwrap();
            let mut out = Vec::new();
            let mut j = start;
            loop {
                for t in 0..sub {
                    out.push(edge(circles, c, j, t));
                }
                j = (j + 1) % r;
                if (!full && circles[c].positions[j] == to.rem_euclid(period)) || j == start {
                    break;
                }
            }
            out
        };

        // Faces: north cap, bands top to bottom, south cap.
        let mut faces: Vec<Vec<(usize, i8)>> = Vec::new();
        let all = |c: usize| (0..circles[c].positions.len() * sub).map(|k| circles[c].edge_start + k).collect::<Vec<_>>();
        faces.push(all(0).into_iter().map(|e| (e, 1)).collect());
        let mut band_face_start = Vec::with_capacity(nbands);
        for beta in 0..nbands {
            band_face_start.push(faces.len());
            let (f, w, _) = band_shape[beta];
            for x in pinches(beta) {
                let full = f == 1;
                let mut cycle: Vec<(usize, i8)> =
                    arcs_between(&circles, beta + 1, x, full, x + w).into_iter().map(|e| (e, 1)).collect();
                let top = arcs_between(&circles, beta, x, full, x + w);
                cycle.extend(top.into_iter().rev().map(|e| (e, -1)));
                faces.push(cycle);
            }
        }
        faces.push(all(ncircles - 1).into_iter().rev().map(|e| (e, -1)).collect());
        let south = faces.len() - 1;
        let complex = CwComplex { vertices: nvert, edges, faces, base_face: 0 };

        // Rotation by `shift` along the circles, with circle map `cmap`.
        let motion = |shift: i64, cmap: &dyn Fn(usize) -> usize, flip: bool| -> CellMap {
            let mut m = CellMap::identity(&complex);
            for (c, circle) in circles.iter().enumerate() {
                let c2 = cmap(c);
                let r = circle.positions.len();
                for j in 0..r {
                    let j2 = locate(&circles, c2, circle.positions[j] + shift).unwrap();
                    m.perm[0][circle.base_vertex[j]] = circles[c2].base_vertex[j2];
                    let first_arc: usize = circles[..c].iter().map(|k| k.positions.len()).sum();
                    let first_arc2: usize = circles[..c2].iter().map(|k| k.positions.len()).sum();
                    for (t, &v) in sub_vertex[first_arc + j].iter().enumerate() {
                        m.perm[0][v] = sub_vertex[first_arc2 + j2][t];
                    }
                    for t in 0..sub {
                        m.perm[1][edge(&circles, c, j, t)] = edge(&circles, c2, j2, t);
                    }
                }
            }
            let fsign = if flip { -1 } else { 1 };
            m.perm[2][0] = if flip { south } else { 0 };
            m.perm[2][south] = if flip { 0 } else { south };
            m.sign[2][0] = fsign;
            m.sign[2][south] = fsign;
            for beta in 0..nbands {
                let beta2 = if flip { nbands - 1 - beta } else { beta };
                let (f, w, off) = band_shape[beta];
                let (_, w2, off2) = band_shape[beta2];
                for q in 0..f {
                    let x = (off + q as i64 * w + shift).rem_euclid(period);
                    let q2 = ((x - off2).rem_euclid(period) / w2) as usize;
                    m.perm[2][band_face_start[beta] + q] = band_face_start[beta2] + q2;
                    m.sign[2][band_face_start[beta] + q] = fsign;
                }
            }
            m
        };
        let rotation = motion(2 * dd, &|c| c, false);
        let iota = motion(half, &mirror, true);
        complex.check()?;
        let covering = complex.quotient(&iota)?;
        Ok(LatticeModel { b: b as u64, covering, rotation, disk_faces: Vec::new() })
    }

    /// `R^k` on the sphere.
    pub fn sphere_map(&self, k: u64) -> CellMap {
        let mut acc = CellMap::identity(&self.covering.total);
        for _ in 0..k % self.b {
            acc = self.rotation.compose(&acc);
        }
        acc
    }

    /// The automorphism of `RP^2` induced by `g^k`, with `eta = k`.
    pub fn automorphism(&self, k: u64) -> CwAutomorphism {
        let map = self.covering.descend(&self.sphere_map(k));
        CwAutomorphism { complex: self.covering.base.clone(), map, eta: Some((k as i64, self.b)) }
    }

    pub fn check_lift(&self, k: u64) -> Result<LiftReport> {
        self.covering.check_lift(&self.sphere_map(k), &self.automorphism(k))
    }

    /// The face action of `g` reproduces `sigma` through `disk_faces`.
    pub fn realizes(&self, dec: &MobiusDecomposition) -> bool {
        let g = self.automorphism(1);
        (0..dec.n()).all(|i| {
            let (f, s) = self.disk_faces[i];
            let (t, d) = dec.sigma.apply((i, 1));
            let (ft, st) = self.disk_faces[t];
            g.map.perm[2][f] == ft && s * g.map.sign[2][f] == st * d
        })
    }
}
