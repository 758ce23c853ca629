//! Decompositions of the identity into orthogonal idempotents, the block
//! calculus `x_ij = e_i x f_j`, and `(p, q)`-inverses.
//!
//! Blocks are stored as full-size matrices: the idempotents need not be
//! coordinate projections, so there is no meaningful cropped submatrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affine::{solve_affine, Constraint};
use crate::error::{shape_err, Error, Result};
use crate::matrix::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Precondition(format!(
                "side must be left or right, got {s:?}"
            ))),
        }
    }
}

/// `1 = e_1 + ... + e_k` with mutually orthogonal idempotents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdempotentDecomposition {
    pub parts: Vec<Mat>,
    /// Whether every part is claimed to be self-adjoint.
    pub self_adjoint: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

impl IdempotentDecomposition {
    pub fn new(parts: Vec<Mat>, self_adjoint: bool) -> Self {
        IdempotentDecomposition {
            parts,
            self_adjoint,
        }
    }

    /// `{p, 1 - p}`.
    pub fn from_idempotent(p: &Mat) -> Self {
        let one_p = &p.identity_like_rows() - p;
        let sa = p.is_self_adjoint();
        IdempotentDecomposition::new(vec![p.clone(), one_p], sa)
    }

    pub fn size(&self) -> usize {
        self.parts.first().map_or(0, Mat::rows)
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Whether every part is self-adjoint, regardless of the flag.
    pub fn is_orthogonal(&self) -> bool {
        self.parts.iter().all(Mat::is_self_adjoint)
    }

    pub fn adjoint(&self) -> Self {
        IdempotentDecomposition::new(
            self.parts.iter().map(Mat::adjoint).collect(),
            self.self_adjoint,
        )
    }

    /// Checks every defining identity and lists the ones that fail.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let Some(first) = self.parts.first() else {
            v.push("decomposition has no parts".into());
            return ValidationReport { violations: v };
        };
        let n = first.rows();
        let ring = first.ring();
        for (i, e) in self.parts.iter().enumerate() {
            if e.shape() != (n, n) || e.ring() != ring {
                v.push(format!("e{} is not {n}x{n} over {ring}", i + 1));
            }
        }
        if !v.is_empty() {
            return ValidationReport { violations: v };
        }
        let mut sum = Mat::zeros(ring, n, n);
        for (i, e) in self.parts.iter().enumerate() {
            if !e.is_idempotent() {
                v.push(format!("e{0}·e{0} ≠ e{0}", i + 1));
            }
            if self.self_adjoint && !e.is_self_adjoint() {
                v.push(format!("e{0}* ≠ e{0}", i + 1));
            }
            for (j, f) in self.parts.iter().enumerate() {
                if i != j && !(e * f).is_zero() {
                    v.push(format!("e{}·e{} ≠ 0", i + 1, j + 1));
                }
            }
            sum = &sum + e;
        }
        if sum != Mat::identity(ring, n) {
            v.push("Σ e_i ≠ 1".into());
        }
        ValidationReport { violations: v }
    }

    fn require_valid(&self, what: &str) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidDecomposition(format!("{what}: {report}")))
        }
    }
}

pub fn validate(dec: &IdempotentDecomposition) -> ValidationReport {
    dec.validate()
}

/// The blocks `e_i x f_j` of `x` relative to a row and a column
/// decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockView {
    pub row_decomp: IdempotentDecomposition,
    pub col_decomp: IdempotentDecomposition,
    pub blocks: Vec<Vec<Mat>>,
}

pub fn blocks(
    x: &Mat,
    rd: &IdempotentDecomposition,
    cd: &IdempotentDecomposition,
) -> Result<BlockView> {
    rd.require_valid("row decomposition")?;
    cd.require_valid("column decomposition")?;
    if rd.size() != x.rows() || cd.size() != x.cols() {
        return Err(shape_err(
            "blocks",
            format!(
                "{}x{} matrix against decompositions of sizes {} and {}",
                x.rows(),
                x.cols(),
                rd.size(),
                cd.size()
            ),
        ));
    }
    let blocks = rd
        .parts
        .iter()
        .map(|e| cd.parts.iter().map(|f| e * x * f).collect())
        .collect();
    Ok(BlockView {
        row_decomp: rd.clone(),
        col_decomp: cd.clone(),
        blocks,
    })
}

/// Sum of all blocks.
pub fn assemble(view: &BlockView) -> Mat {
    let first = &view.blocks[0][0];
    let mut acc = Mat::zeros(first.ring(), first.rows(), first.cols());
    for row in &view.blocks {
        for b in row {
            acc = &acc + b;
        }
    }
    acc
}

impl BlockView {
    /// Block-matrix product; the inner decompositions must coincide.
    pub fn product(&self, rhs: &BlockView) -> Result<BlockView> {
        if self.col_decomp.parts != rhs.row_decomp.parts {
            return Err(Error::InvalidDecomposition(
                "inner decompositions of a block product differ".into(),
            ));
        }
        let k = self.col_decomp.len();
        let blocks = (0..self.row_decomp.len())
            .map(|i| {
                (0..rhs.col_decomp.len())
                    .map(|l| {
                        let mut acc = &self.blocks[i][0] * &rhs.blocks[0][l];
                        for j in 1..k {
                            acc = &acc + &(&self.blocks[i][j] * &rhs.blocks[j][l]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(BlockView {
            row_decomp: self.row_decomp.clone(),
            col_decomp: rhs.col_decomp.clone(),
            blocks,
        })
    }

    /// Blocks of `x*` relative to `(f*, e*)`: the transposed grid of block
    /// adjoints.
    pub fn adjoint(&self) -> BlockView {
        let rows = self.row_decomp.len();
        let cols = self.col_decomp.len();
        let blocks = (0..cols)
            .map(|j| (0..rows).map(|i| self.blocks[i][j].adjoint()).collect())
            .collect();
        BlockView {
            row_decomp: self.col_decomp.adjoint(),
            col_decomp: self.row_decomp.adjoint(),
            blocks,
        }
    }
}

fn check_idempotent(name: &str, e: &Mat, size: usize) -> Result<()> {
    if e.shape() != (size, size) {
        return Err(shape_err(
            "pq_inverse",
            format!(
                "{name} must be {size}x{size}, got {}x{}",
                e.rows(),
                e.cols()
            ),
        ));
    }
    if !e.is_idempotent() {
        return Err(Error::Precondition(format!("{name} is not idempotent")));
    }
    Ok(())
}

/// The unique `x ∈ q R p` with `a x = p` and `x a = q`, if `a ∈ p R q`
/// is `(p, q)`-invertible.
pub fn pq_inverse(a: &Mat, p: &Mat, q: &Mat) -> Result<Option<Mat>> {
    check_idempotent("p", p, a.rows())?;
    check_idempotent("q", q, a.cols())?;
    if *a != p * a * q {
        return Ok(None);
    }
    let ring = a.ring();
    let (m, n) = a.shape();
    let im = Mat::identity(ring, m);
    let in_ = Mat::identity(ring, n);
    let minus_one = ring.from_int(-1);
    let constraints = [
        // x - q x p = 0
        Constraint::new(Mat::zeros(ring, n, m))
            .plus(in_.clone(), im.clone())
            .plus(q.scale(&minus_one), p.clone()),
        Constraint::new(p.clone()).plus(a.clone(), im),
        Constraint::new(q.clone()).plus(in_, a.clone()),
    ];
    let set = solve_affine(ring, (n, m), &constraints)?;
    let Some(x) = set.particular() else {
        return Ok(None);
    };
    if !set.basis().is_empty() {
        return Err(Error::Invariant(format!(
            "({p},{q})-inverse of {a} is not unique: {}-dimensional solution set",
            set.dim()
        )));
    }
    Ok(Some(x.clone()))
}

/// Unique solution of `a x = b` in `q R` (left) or `x a = b` in `R p`
/// (right) for a `(p, q)`-invertible `a`.
pub fn solve_in_coset(a: &Mat, p: &Mat, q: &Mat, b: &Mat, side: Side) -> Result<Mat> {
    let inv = pq_inverse(a, p, q)?
        .ok_or_else(|| Error::Precondition("a is not (p,q)-invertible".into()))?;
    let ring = a.ring();
    let (m, n) = a.shape();
    let minus_one = ring.from_int(-1);
    let (shape, constraints, expected) = match side {
        Side::Left => {
            if b.rows() != m {
                return Err(shape_err("solve_in_coset", "b must have as many rows as a"));
            }
            if *b != p * b {
                return Err(Error::Precondition("b is not in pR".into()));
            }
            let k = b.cols();
            let ik = Mat::identity(ring, k);
            let cons = vec![
                // x - q x = 0
                Constraint::new(Mat::zeros(ring, n, k))
                    .plus(Mat::identity(ring, n), ik.clone())
                    .plus(q.scale(&minus_one), ik.clone()),
                Constraint::new(b.clone()).plus(a.clone(), ik),
            ];
            ((n, k), cons, &inv * b)
        }
        Side::Right => {
            if b.cols() != n {
                return Err(shape_err(
                    "solve_in_coset",
                    "b must have as many columns as a",
                ));
            }
            if *b != b * q {
                return Err(Error::Precondition("b is not in Rq".into()));
            }
            let k = b.rows();
            let ik = Mat::identity(ring, k);
            let cons = vec![
                // x - x p = 0
                Constraint::new(Mat::zeros(ring, k, m))
                    .plus(ik.clone(), Mat::identity(ring, m))
                    .plus(ik.scale(&minus_one), p.clone()),
                Constraint::new(b.clone()).plus(ik, a.clone()),
            ];
            ((k, m), cons, b * &inv)
        }
    };
    let set = solve_affine(ring, shape, &constraints)?;
    let x = set.particular().cloned().ok_or_else(|| {
        Error::Invariant("coset equation infeasible for a (p,q)-invertible a".into())
    })?;
    if !set.basis().is_empty() || x != expected {
        return Err(Error::Invariant(format!(
            "coset solution of a={a}, b={b} is not unique or disagrees with the (p,q)-inverse"
        )));
    }
    Ok(x)
}
