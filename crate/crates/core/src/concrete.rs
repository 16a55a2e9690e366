//! Finite groups given by full multiplication tables.

use rayon::prelude::*;

use crate::arith::{Carrier, Element};
use crate::error::{Error, Result};
use crate::expr::GroupExpr;

/// Largest order for which tables are built unless a caller passes its own cap.
pub const DEFAULT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteGroup {
    n: usize,
    table: Vec<u32>,
    identity: usize,
    inverses: Vec<usize>,
    labels: Vec<Element>,
}

impl ConcreteGroup {
    /// Builds and verifies a group from a row-major table. Checks the Latin
    /// square property, a two-sided identity, and associativity through
    /// Light's test on a generating set.
    pub fn from_table(n: usize, table: Vec<u32>, labels: Vec<Element>) -> Result<Self> {
        if n == 0 || table.len() != n * n || labels.len() != n {
            return Err(Error::NotAGroup(format!("table of length {} for order {n}", table.len())));
        }
        if table.iter().any(|&x| x as usize >= n) {
            return Err(Error::NotAGroup("table entry out of range".into()));
        }
        let latin = (0..n).into_par_iter().all(|i| {
            let mut row = vec![false; n];
            let mut col = vec![false; n];
            for j in 0..n {
                row[table[i * n + j] as usize] = true;
                col[table[j * n + i] as usize] = true;
            }
            row.iter().all(|&b| b) && col.iter().all(|&b| b)
        });
        if !latin {
            return Err(Error::NotAGroup("table is not a Latin square".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e * n + x] as usize == x && table[x * n + e] as usize == x))
            .ok_or_else(|| Error::NotAGroup("no identity element".into()))?;
        let inverses: Vec<usize> = (0..n)
            .map(|x| (0..n).find(|&y| table[x * n + y] as usize == identity).unwrap())
            .collect();
        let g = ConcreteGroup { n, table, identity, inverses, labels };
        for s in g.generators() {
            let bad = (0..n).into_par_iter().find_any(|&x| {
                let xs = g.mul(x, s);
                (0..n).any(|y| g.mul(xs, y) != g.mul(x, g.mul(s, y)))
            });
            if let Some(x) = bad {
                return Err(Error::NotAGroup(format!("associativity fails at ({x}, {s}, _)")));
            }
        }
        Ok(g)
    }

    /// Exhaustive table of a finite carrier in its canonical enumeration.
    pub fn from_carrier(c: &Carrier, cap: usize) -> Result<Self> {
        let order = c.order().ok_or_else(|| Error::InfiniteLeaf("carrier is infinite".into()))?;
        if order > cap as u128 {
            return Err(Error::CapExceeded { order, cap: cap as u128 });
        }
        let n = order as usize;
        let labels: Vec<Element> = (0..n).into_par_iter().map(|i| c.element_at(i)).collect();
        let table: Vec<u32> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let labels = &labels;
                (0..n).map(move |j| c.index_of(&c.mul_raw(&labels[i], &labels[j])) as u32)
            })
            .collect();
        Self::from_table(n, table, labels)
    }

    /// Table of the quotient of `e` with multiplier `n`; `Z` leaves are an error.
    pub fn from_expr(e: &GroupExpr, n: u64, cap: usize) -> Result<Self> {
        Self::from_carrier(&Carrier::quotient(e, n, false)?, cap)
    }

    /// Cyclic group `Z_n` with labels `Res(k)`.
    pub fn cyclic(n: usize) -> Self {
        Self::from_carrier(&Carrier::Cyclic(n as u64), usize::MAX).expect("cyclic tables are valid")
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x * self.n + y] as usize
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverses[x]
    }

    pub fn label(&self, x: usize) -> &Element {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[Element] {
        &self.labels
    }

    pub fn pow(&self, x: usize, k: i64) -> usize {
        let base = if k < 0 { self.inv(x) } else { x };
        (0..k.unsigned_abs()).fold(self.identity, |acc, _| self.mul(acc, base))
    }

    pub fn element_order(&self, x: usize) -> usize {
        let mut y = x;
        let mut k = 1;
        while y != self.identity {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|x| (x..self.n).all(|y| self.mul(x, y) == self.mul(y, x)))
    }

    /// Greedy generating set: scan elements in order, keeping those outside
    /// the subgroup generated so far.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut mask = self.closure(&[]);
        for x in 0..self.n {
            if !mask[x] {
                gens.push(x);
                mask = self.closure(&gens);
            }
        }
        gens
    }

    /// Membership mask of the subgroup generated by `gens`.
    pub fn closure(&self, gens: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        mask[self.identity] = true;
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &s in gens {
                let y = self.mul(x, s);
                if !mask[y] {
                    mask[y] = true;
                    stack.push(y);
                }
            }
        }
        mask
    }

    /// A pair `(g, h)` with `h` in the subgroup and `g h g^-1` outside it.
    pub fn normality_witness(&self, sub: &[bool]) -> Option<(usize, usize)> {
        (0..self.n).into_par_iter().find_map_first(|g| {
            (0..self.n).find(|&h| sub[h] && !sub[self.conj(g, h)]).map(|h| (g, h))
        })
    }

    /// Quotient by a normal subgroup and the projection, coset labels taken
    /// from the first representative of each coset.
    pub fn quotient(&self, sub: &[bool]) -> Result<(ConcreteGroup, Vec<usize>)> {
        if let Some((g, h)) = self.normality_witness(sub) {
            return Err(Error::Precondition(format!(
                "subgroup is not normal: conjugating {} by {} leaves it",
                self.labels[h], self.labels[g]
            )));
        }
        let members: Vec<usize> = (0..self.n).filter(|&x| sub[x]).collect();
        let mut coset = vec![usize::MAX; self.n];
        let mut reps = Vec::new();
        for x in 0..self.n {
            if coset[x] == usize::MAX {
                for &k in &members {
                    coset[self.mul(x, k)] = reps.len();
                }
                reps.push(x);
            }
        }
        let q = reps.len();
        let table = (0..q)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .map(|(i, j)| coset[self.mul(reps[i], reps[j])] as u32)
            .collect();
        let labels = reps.iter().map(|&r| self.labels[r].clone()).collect();
        Ok((ConcreteGroup::from_table(q, table, labels)?, coset))
    }

    pub fn commutator_subgroup(&self) -> Vec<bool> {
        let mut comms: Vec<usize> = (0..self.n)
            .flat_map(|x| (0..self.n).map(move |y| (x, y)))
            .map(|(x, y)| self.mul(self.mul(x, y), self.mul(self.inv(x), self.inv(y))))
            .collect();
        comms.sort_unstable();
        comms.dedup();
        self.closure(&comms)
    }

    /// Invariant factors `d_1 | d_2 | ...` (all `> 1`) of the abelianization.
    pub fn abelian_invariants(&self) -> Vec<u64> {
        let (ab, _) = self.quotient(&self.commutator_subgroup()).expect("commutator subgroup is normal");
        let orders: Vec<u64> = (0..ab.order()).map(|x| ab.element_order(x) as u64).collect();
        let mut per_prime: Vec<(u64, Vec<u32>)> = Vec::new();
        for p in prime_factors(ab.order() as u64) {
            // s[k] = log_p |{x : x^(p^k) = e}|; s[k] - s[k-1] counts parts >= k.
            let mut s = vec![0u32];
            let mut pk = 1u64;
            loop {
                pk *= p;
                let count = orders.iter().filter(|&&o| pk.is_multiple_of(o)).count() as u64;
                let mut log = 0;
                let mut c = count;
                while c > 1 {
                    c /= p;
                    log += 1;
                }
                if log == *s.last().unwrap() {
                    break;
                }
                s.push(log);
            }
            let at_least: Vec<u32> = s.windows(2).map(|w| w[1] - w[0]).collect();
            let parts_count = at_least[0] as usize;
            let mut parts = vec![0u32; parts_count];
            for (i, part) in parts.iter_mut().enumerate() {
                *part = at_least.iter().filter(|&&c| c as usize > i).count() as u32;
            }
            per_prime.push((p, parts));
        }
        let len = per_prime.iter().map(|(_, parts)| parts.len()).max().unwrap_or(0);
        let mut out: Vec<u64> = (0..len)
            .map(|i| per_prime.iter().map(|(p, parts)| parts.get(i).map_or(1, |&e| p.pow(e))).product())
            .collect();
        out.reverse();
        out
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
