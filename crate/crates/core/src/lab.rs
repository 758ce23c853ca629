//! Brute-force oracle over the tiny rings `M_n(Z_p)` with the transpose as
//! involution.
//!
//! Elements are addressed by their index in the lexicographic enumeration
//! of entries (row-major, first entry most significant). Products and
//! adjoints are tabulated once, and every set (inverse classes, one-sided
//! ideals, table rows) is a bitset over indices. Nothing here calls the
//! affine solver or the order predicates; this module is the independent
//! side of the agreement checks.

use std::fmt::{self, Write as _};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inverses::ClassSpec;
use crate::matrix::Mat;
use crate::orders::OrderRelation;
use crate::scalar::RingSpec;

/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "STAR_ORDER_LAB_CAP";

/// Default bound on the number of element pairs a universe may have:
/// `|M_2(Z_3)|² = 81² = 6561`.
pub const DEFAULT_CAP: u128 = 6561;

/// The pair cap in effect: [`CAP_ENV`] if set and parseable, else
/// [`DEFAULT_CAP`].
pub fn configured_cap() -> u128 {
    std::env::var(CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

pub struct FiniteRingUniverse {
    ring: RingSpec,
    n: usize,
    elements: Vec<Mat>,
    mul: Vec<u32>,
    adj: Vec<u32>,
}

impl fmt::Debug for FiniteRingUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M_{}({}) [{} elements]",
            self.n,
            self.ring,
            self.elements.len()
        )
    }
}

impl FiniteRingUniverse {
    /// `M_n(Z_p)` under the configured cap.
    pub fn new(p: u32, n: usize) -> Result<Self> {
        Self::with_cap(p, n, configured_cap())
    }

    pub fn with_cap(p: u32, n: usize, cap: u128) -> Result<Self> {
        let ring = RingSpec::prime_field(p)?;
        if n == 0 {
            return Err(Error::Precondition("matrix size must be positive".into()));
        }
        let size = (p as u128)
            .checked_pow((n * n) as u32)
            .ok_or(Error::CapExceeded {
                requested: u128::MAX,
                cap,
            })?;
        let pairs = size.saturating_mul(size);
        if pairs > cap {
            return Err(Error::CapExceeded {
                requested: pairs,
                cap,
            });
        }
        let size = size as usize;
        let elements: Vec<Mat> = (0..size).map(|k| decode(ring, p, n, k)).collect();
        let index = |m: &Mat| encode(p, m);
        let mul = (0..size)
            .into_par_iter()
            .flat_map_iter(|i| {
                let a = &elements[i];
                elements.iter().map(move |b| index(&(a * b)) as u32)
            })
            .collect();
        let adj = elements
            .iter()
            .map(|a| index(&a.adjoint()) as u32)
            .collect();
        Ok(FiniteRingUniverse {
            ring,
            n,
            elements,
            mul,
            adj,
        })
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Mat {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Mat] {
        &self.elements
    }

    pub fn index_of(&self, m: &Mat) -> Result<usize> {
        if m.ring() != self.ring {
            return Err(Error::RingMismatch {
                expected: self.ring,
                found: m.ring(),
            });
        }
        if m.shape() != (self.n, self.n) {
            return Err(Error::Shape {
                op: "universe",
                detail: format!("expected {0}x{0}, got {1}x{2}", self.n, m.rows(), m.cols()),
            });
        }
        Ok(encode(self.ring.modulus().expect("finite"), m))
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.len() + b] as usize
    }

    fn adj(&self, a: usize) -> usize {
        self.adj[a] as usize
    }

    fn penrose(&self, a: usize, x: usize, spec: ClassSpec) -> bool {
        let ax = self.mul(a, x);
        let xa = self.mul(x, a);
        spec.equations().all(|eq| match eq {
            1 => self.mul(ax, a) == a,
            2 => self.mul(xa, x) == x,
            3 => self.adj(ax) == ax,
            _ => self.adj(xa) == xa,
        })
    }

    fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }

    /// `a{spec}` by testing every element of the universe.
    pub fn class_bits(&self, a: usize, spec: ClassSpec) -> FixedBitSet {
        let mut out = self.empty_set();
        for x in 0..self.len() {
            if self.penrose(a, x, spec) {
                out.insert(x);
            }
        }
        out
    }

    pub fn brute_class(&self, a: &Mat, spec: ClassSpec) -> Result<Vec<Mat>> {
        let i = self.index_of(a)?;
        Ok(self
            .class_bits(i, spec)
            .ones()
            .map(|x| self.elements[x].clone())
            .collect())
    }

    /// Elements with a nonempty `spec` class.
    pub fn existence_set(&self, spec: ClassSpec) -> FixedBitSet {
        let mut out = self.empty_set();
        for a in 0..self.len() {
            if (0..self.len()).any(|x| self.penrose(a, x, spec)) {
                out.insert(a);
            }
        }
        out
    }

    /// `aR` as a set.
    fn right_ideal(&self, a: usize) -> FixedBitSet {
        let mut out = self.empty_set();
        for x in 0..self.len() {
            out.insert(self.mul(a, x));
        }
        out
    }

    /// `Ra` as a set.
    fn left_ideal(&self, a: usize) -> FixedBitSet {
        let mut out = self.empty_set();
        for x in 0..self.len() {
            out.insert(self.mul(x, a));
        }
        out
    }

    /// Every pair decided from the definition of `rel`; existentials over
    /// `g` range over the whole universe and ideal inclusions compare the
    /// enumerated ideals.
    pub fn order_table(&self, rel: OrderRelation) -> OrderTable {
        let n = self.len();
        let witnesses: Option<Vec<FixedBitSet>> = match rel {
            OrderRelation::Minus => Some(ClassSpec::G),
            OrderRelation::OneMp => Some(ClassSpec::ONE_TWO_THREE),
            OrderRelation::MpOne => Some(ClassSpec::ONE_TWO_FOUR),
            _ => None,
        }
        .map(|spec| {
            (0..n)
                .into_par_iter()
                .map(|a| self.class_bits(a, spec))
                .collect()
        });
        let ideals: Option<Vec<FixedBitSet>> = match rel {
            OrderRelation::LeftStar => Some(
                (0..n)
                    .into_par_iter()
                    .map(|a| self.right_ideal(a))
                    .collect(),
            ),
            OrderRelation::RightStar => {
                Some((0..n).into_par_iter().map(|a| self.left_ideal(a)).collect())
            }
            _ => None,
        };
        let left_gram = |a: usize, b: usize| {
            let s = self.adj(a);
            self.mul(s, a) == self.mul(s, b)
        };
        let right_gram = |a: usize, b: usize| {
            let s = self.adj(a);
            self.mul(a, s) == self.mul(b, s)
        };
        let rows = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut row = self.empty_set();
                for b in 0..n {
                    let ok = match rel {
                        OrderRelation::LeftStar => {
                            let id = ideals.as_ref().expect("ideals");
                            left_gram(a, b) && id[a].is_subset(&id[b])
                        }
                        OrderRelation::RightStar => {
                            let id = ideals.as_ref().expect("ideals");
                            right_gram(a, b) && id[a].is_subset(&id[b])
                        }
                        OrderRelation::Star => left_gram(a, b) && right_gram(a, b),
                        OrderRelation::Minus | OrderRelation::OneMp | OrderRelation::MpOne => {
                            witnesses.as_ref().expect("witness classes")[a]
                                .ones()
                                .any(|g| {
                                    self.mul(a, g) == self.mul(b, g)
                                        && self.mul(g, a) == self.mul(g, b)
                                })
                        }
                    };
                    if ok {
                        row.insert(b);
                    }
                }
                row
            })
            .collect();
        OrderTable {
            relation: rel,
            rows,
            existence: self.existence_set(rel.existence_class()),
        }
    }

    /// Reflexivity, antisymmetry and transitivity of `rel` on its
    /// existence set.
    pub fn axioms_report(&self, rel: OrderRelation) -> AxiomReport {
        self.order_table(rel).axioms()
    }

    /// Hasse diagram of `rel` on its existence set, in DOT. Fails if the
    /// relation is not a partial order there.
    pub fn hasse(&self, rel: OrderRelation) -> Result<String> {
        let table = self.order_table(rel);
        let report = table.axioms();
        if !report.passes() {
            return Err(Error::Precondition(report.to_string()));
        }
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", rel.name());
        for a in table.existence.ones() {
            let _ = writeln!(out, "  n{a} [label=\"{}\"];", self.elements[a]);
        }
        for (a, b) in table.covers() {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        Ok(out)
    }
}

fn decode(ring: RingSpec, p: u32, n: usize, k: usize) -> Mat {
    let cells = n * n;
    let mut digits = vec![0u32; cells];
    let mut rest = k;
    for d in digits.iter_mut().rev() {
        *d = (rest % p as usize) as u32;
        rest /= p as usize;
    }
    Mat::from_fn(ring, n, n, |i, j| ring.from_int(digits[i * n + j] as i64))
}

fn encode(p: u32, m: &Mat) -> usize {
    m.entries().iter().fold(0usize, |acc, s| {
        acc * p as usize + s.residue_value().expect("finite field entry") as usize
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderTable {
    pub relation: OrderRelation,
    /// `rows[a]` holds every `b` with `a rel b`.
    pub rows: Vec<FixedBitSet>,
    /// Elements having an inverse in the relation's existence class.
    pub existence: FixedBitSet,
}

impl OrderTable {
    pub fn get(&self, a: usize, b: usize) -> bool {
        self.rows[a].contains(b)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of related pairs, optionally restricted to the existence set.
    pub fn count(&self, restricted: bool) -> usize {
        if restricted {
            self.existence
                .ones()
                .map(|a| self.rows[a].intersection(&self.existence).count())
                .sum()
        } else {
            self.rows.iter().map(|r| r.count_ones(..)).sum()
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("a_index,b_index,rel,holds\n");
        for (a, row) in self.rows.iter().enumerate() {
            for b in 0..self.len() {
                let _ = writeln!(out, "{a},{b},{},{}", self.relation.name(), row.contains(b));
            }
        }
        out
    }

    pub fn axioms(&self) -> AxiomReport {
        let dom = &self.existence;
        let mut report = AxiomReport {
            relation: self.relation,
            domain: dom.count_ones(..),
            reflexivity: None,
            antisymmetry: None,
            transitivity: None,
        };
        for a in dom.ones() {
            if report.reflexivity.is_none() && !self.get(a, a) {
                report.reflexivity = Some(a);
            }
            for b in self.rows[a].intersection(dom) {
                if report.antisymmetry.is_none() && a != b && self.get(b, a) {
                    report.antisymmetry = Some((a, b));
                }
                if report.transitivity.is_none() {
                    let mut escaped = self.rows[b].clone();
                    escaped.intersect_with(dom);
                    escaped.difference_with(&self.rows[a]);
                    if let Some(c) = escaped.ones().next() {
                        report.transitivity = Some((a, b, c));
                    }
                }
            }
        }
        report
    }

    /// The covering pairs `a ⋖ b` within the existence set, in index order.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let dom = &self.existence;
        let mut out = Vec::new();
        for a in dom.ones() {
            let mut above = self.rows[a].clone();
            above.intersect_with(dom);
            above.set(a, false);
            for b in above.ones() {
                let between = above.ones().any(|c| c != b && self.get(c, b));
                if !between {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// First counterexample to each partial-order axiom, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub relation: OrderRelation,
    pub domain: usize,
    pub reflexivity: Option<usize>,
    pub antisymmetry: Option<(usize, usize)>,
    pub transitivity: Option<(usize, usize, usize)>,
}

impl AxiomReport {
    pub fn passes(&self) -> bool {
        self.reflexivity.is_none() && self.antisymmetry.is_none() && self.transitivity.is_none()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {} elements:", self.relation, self.domain)?;
        match self.reflexivity {
            Some(a) => write!(f, " reflexivity fails at {a};")?,
            None => write!(f, " reflexive;")?,
        }
        match self.antisymmetry {
            Some((a, b)) => write!(f, " antisymmetry fails at ({a}, {b});")?,
            None => write!(f, " antisymmetric;")?,
        }
        match self.transitivity {
            Some((a, b, c)) => write!(f, " transitivity fails at ({a}, {b}, {c})"),
            None => write!(f, " transitive"),
        }
    }
}
