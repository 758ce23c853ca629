//! Affine matrix equations in one unknown matrix.
//!
//! A constraint is `Σ left_k · X · right_k + Σ left_l · X* · right_l = rhs`.
//! Such maps are linear over the base field (`Q` for Gaussian rationals,
//! `Z_p` itself for prime fields) even when `X*` appears, so the system is
//! vectorized over the base field by evaluating it on a base-field basis of
//! the unknown and then solved by Gauss-Jordan elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{shape_err, Error, Result};
use crate::matrix::Mat;
use crate::scalar::{RingSpec, Scalar};

#[derive(Debug, Clone)]
pub enum Term {
    /// `left · X · right`
    Linear { left: Mat, right: Mat },
    /// `left · X* · right`
    Adjoint { left: Mat, right: Mat },
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub rhs: Mat,
}

impl Constraint {
    pub fn new(rhs: Mat) -> Self {
        Constraint {
            terms: Vec::new(),
            rhs,
        }
    }

    /// Adds `left · X · right`.
    pub fn plus(mut self, left: Mat, right: Mat) -> Self {
        self.terms.push(Term::Linear { left, right });
        self
    }

    /// Adds `left · X* · right`.
    pub fn plus_adjoint(mut self, left: Mat, right: Mat) -> Self {
        self.terms.push(Term::Adjoint { left, right });
        self
    }

    /// Evaluates the left-hand side at `x`.
    pub fn apply(&self, x: &Mat) -> Mat {
        let mut acc = Mat::zeros(self.rhs.ring(), self.rhs.rows(), self.rhs.cols());
        let mut adj = None;
        for t in &self.terms {
            let v = match t {
                Term::Linear { left, right } => left * x * right,
                Term::Adjoint { left, right } => {
                    let xa = adj.get_or_insert_with(|| x.adjoint());
                    left * &*xa * right
                }
            };
            acc = &acc + &v;
        }
        acc
    }

    pub fn holds(&self, x: &Mat) -> bool {
        self.apply(x) == self.rhs
    }

    fn check_shapes(&self, ring: RingSpec, shape: (usize, usize)) -> Result<()> {
        let (r, c) = shape;
        let (k, l) = self.rhs.shape();
        if self.rhs.ring() != ring {
            return Err(Error::RingMismatch {
                expected: ring,
                found: self.rhs.ring(),
            });
        }
        for t in &self.terms {
            let (left, right, inner) = match t {
                Term::Linear { left, right } => (left, right, (r, c)),
                Term::Adjoint { left, right } => (left, right, (c, r)),
            };
            if left.ring() != ring || right.ring() != ring {
                return Err(shape_err(
                    "solve_affine",
                    "coefficient from a different ring",
                ));
            }
            if left.rows() != k
                || left.cols() != inner.0
                || right.rows() != inner.1
                || right.cols() != l
            {
                return Err(shape_err(
                    "solve_affine",
                    format!(
                        "term {}x{} · X{} · {}x{} does not map a {r}x{c} unknown to {k}x{l}",
                        left.rows(),
                        left.cols(),
                        if matches!(t, Term::Adjoint { .. }) {
                            "*"
                        } else {
                            ""
                        },
                        right.rows(),
                        right.cols()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Solution set `particular + span(basis)` of an affine system, where the span
/// is over the base field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolutionSet {
    ring: RingSpec,
    shape: (usize, usize),
    particular: Option<Mat>,
    basis: Vec<Mat>,
}

impl AffineSolutionSet {
    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn is_empty(&self) -> bool {
        self.particular.is_none()
    }

    pub fn particular(&self) -> Option<&Mat> {
        self.particular.as_ref()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    /// Dimension over the base field.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `particular + Σ coeffs[i] · basis[i]` with base-field coefficients.
    pub fn point(&self, coeffs: &[Scalar]) -> Option<Mat> {
        assert_eq!(
            coeffs.len(),
            self.basis.len(),
            "one coefficient per basis element"
        );
        let mut x = self.particular.clone()?;
        for (c, b) in coeffs.iter().zip(&self.basis) {
            if !c.is_zero() {
                x = &x + &b.scale(c);
            }
        }
        Some(x)
    }

    /// A random member, or `None` if the set is empty.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, bound: u32) -> Option<Mat> {
        let coeffs: Vec<Scalar> = (0..self.basis.len())
            .map(|_| self.ring.random_base(rng, bound))
            .collect();
        self.point(&coeffs)
    }

    /// Every member of the set; finite rings only, at most `cap` members.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<Mat>> {
        let Some(p) = self.ring.modulus() else {
            return Err(Error::Precondition(
                "cannot enumerate a solution set over an infinite field".into(),
            ));
        };
        if self.particular.is_none() {
            return Ok(Vec::new());
        }
        let count = (p as u128)
            .checked_pow(self.basis.len() as u32)
            .unwrap_or(u128::MAX);
        if count > cap {
            return Err(Error::CapExceeded {
                requested: count,
                cap,
            });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0u32; self.basis.len()];
        loop {
            let coeffs: Vec<Scalar> = digits.iter().map(|&d| Scalar::residue(d, p)).collect();
            out.push(self.point(&coeffs).expect("nonempty"));
            // Odometer increment.
            let mut k = 0;
            loop {
                if k == digits.len() {
                    return Ok(out);
                }
                digits[k] += 1;
                if digits[k] < p {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
        }
    }

    /// Membership by a rank test on base-field coordinates.
    pub fn contains(&self, x: &Mat) -> bool {
        let Some(part) = &self.particular else {
            return false;
        };
        if x.shape() != self.shape || x.ring() != self.ring {
            return false;
        }
        let diff = vectorize(&(x - part));
        if self.basis.is_empty() {
            return diff.iter().all(Scalar::is_zero);
        }
        let cols: Vec<Vec<Scalar>> = self.basis.iter().map(vectorize).collect();
        let n = diff.len();
        let span = Mat::from_fn(self.ring, n, cols.len(), |i, j| cols[j][i].clone());
        let aug = Mat::from_fn(self.ring, n, cols.len() + 1, |i, j| {
            if j < cols.len() {
                cols[j][i].clone()
            } else {
                diff[i].clone()
            }
        });
        span.rank() == aug.rank()
    }
}

/// Base-field coordinates of every entry, row-major; over `Q(i)` each entry
/// contributes `(re, im)` as real Gaussian scalars.
fn vectorize(x: &Mat) -> Vec<Scalar> {
    let ring = x.ring();
    let mut out = Vec::with_capacity(x.entries().len() * ring.base_degree());
    for s in x.entries() {
        match ring {
            RingSpec::GaussianRational => {
                let zero = num_rational::BigRational::from_integer(0.into());
                out.push(Scalar::gaussian(s.re().unwrap().clone(), zero.clone()));
                out.push(Scalar::gaussian(s.im().unwrap().clone(), zero));
            }
            RingSpec::PrimeField(_) => out.push(s.clone()),
        }
    }
    out
}

fn devectorize(ring: RingSpec, shape: (usize, usize), v: &[Scalar]) -> Mat {
    let deg = ring.base_degree();
    Mat::from_fn(ring, shape.0, shape.1, |i, j| {
        let k = (i * shape.1 + j) * deg;
        match ring {
            RingSpec::GaussianRational => {
                Scalar::gaussian(v[k].re().unwrap().clone(), v[k + 1].re().unwrap().clone())
            }
            RingSpec::PrimeField(_) => v[k].clone(),
        }
    })
}

/// The base-field basis `E_kl` (and `i·E_kl` over `Q(i)`) of the unknown
/// space, in the same order as [`vectorize`].
fn unknown_basis(ring: RingSpec, shape: (usize, usize)) -> Vec<Mat> {
    let mut out = Vec::new();
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let mut e = Mat::zeros(ring, shape.0, shape.1);
            e.set(i, j, ring.one());
            if let Some(unit) = ring.imaginary_unit() {
                let mut ie = Mat::zeros(ring, shape.0, shape.1);
                ie.set(i, j, unit);
                out.push(e);
                out.push(ie);
            } else {
                out.push(e);
            }
        }
    }
    out
}

/// Reduced row echelon form of a rational matrix, returning only the pivot
/// rows. Elimination runs on integer rows with content removal, which avoids
/// a gcd per rational operation; the reduced form is unique, so the result
/// matches plain Gauss-Jordan.
fn rational_rref(rows: Vec<Vec<BigRational>>) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut rows: Vec<Vec<BigInt>> = rows
        .into_iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            let mut out: Vec<BigInt> = row.iter().map(|x| x.numer() * (&l / x.denom())).collect();
            primitive(&mut out);
            out
        })
        .filter(|row| row.iter().any(|x| !x.is_zero()))
        .collect();
    let m = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == m {
            break;
        }
        let Some(pr) = (row..m).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(row, pr);
        let (before, rest) = rows.split_at_mut(row);
        let (prow, after) = rest.split_first_mut().expect("row < m");
        for target in before.iter_mut().chain(after.iter_mut()) {
            let f = target[col].clone();
            if f.is_zero() {
                continue;
            }
            let d = &prow[col];
            for (t, s) in target.iter_mut().zip(prow.iter()) {
                *t = if s.is_zero() {
                    &*t * d
                } else {
                    &*t * d - &f * s
                };
            }
            primitive(target);
        }
        pivots.push(col);
        row += 1;
    }
    rows.truncate(pivots.len());
    let reduced = rows
        .into_iter()
        .zip(&pivots)
        .map(|(r, &pc)| {
            let d = r[pc].clone();
            r.into_iter()
                .map(|x| BigRational::new(x, d.clone()))
                .collect()
        })
        .collect();
    (reduced, pivots)
}

/// Divides an integer row by the gcd of its entries.
fn primitive(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in row.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return;
            }
        }
    }
    if !g.is_zero() {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Solves the conjunction of `constraints` for an unknown of `shape`.
pub fn solve_affine(
    ring: RingSpec,
    shape: (usize, usize),
    constraints: &[Constraint],
) -> Result<AffineSolutionSet> {
    if shape.0 == 0 || shape.1 == 0 {
        return Err(shape_err("solve_affine", "unknown must be at least 1x1"));
    }
    for c in constraints {
        c.check_shapes(ring, shape)?;
    }
    let unknowns = unknown_basis(ring, shape);
    let n = unknowns.len();

    // Column j of the coefficient matrix is the image of unknown basis j.
    let mut columns: Vec<Vec<Scalar>> = vec![Vec::new(); n];
    let mut rhs = Vec::new();
    for c in constraints {
        for (j, e) in unknowns.iter().enumerate() {
            columns[j].extend(vectorize(&c.apply(e)));
        }
        rhs.extend(vectorize(&c.rhs));
    }
    let m = rhs.len();

    if m == 0 {
        return Ok(AffineSolutionSet {
            ring,
            shape,
            particular: Some(Mat::zeros(ring, shape.0, shape.1)),
            basis: unknowns,
        });
    }

    let (r, pivots) = match ring {
        RingSpec::GaussianRational => {
            let rows = (0..m)
                .map(|i| {
                    (0..=n)
                        .map(|j| {
                            let s = if j < n { &columns[j][i] } else { &rhs[i] };
                            s.re().expect("vectorized entries are real").clone()
                        })
                        .collect()
                })
                .collect();
            let (rows, pivots) = rational_rref(rows);
            let rows = rows
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|x| Scalar::gaussian(x, BigRational::zero()))
                        .collect()
                })
                .collect();
            (rows, pivots)
        }
        RingSpec::PrimeField(_) => {
            let aug = Mat::from_fn(ring, m, n + 1, |i, j| {
                if j < n {
                    columns[j][i].clone()
                } else {
                    rhs[i].clone()
                }
            });
            let (r, pivots) = aug.echelon();
            let mut rows = r.row_vecs();
            rows.truncate(pivots.len());
            (rows, pivots)
        }
    };
    if pivots.last() == Some(&n) {
        return Ok(AffineSolutionSet {
            ring,
            shape,
            particular: None,
            basis: Vec::new(),
        });
    }
    let mut particular = vec![ring.zero(); n];
    for (row, &pc) in pivots.iter().enumerate() {
        particular[pc] = r[row][n].clone();
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![ring.zero(); n];
        v[free] = ring.one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -&r[row][free];
        }
        basis.push(devectorize(ring, shape, &v));
    }
    Ok(AffineSolutionSet {
        ring,
        shape,
        particular: Some(devectorize(ring, shape, &particular)),
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const Q: RingSpec = RingSpec::GaussianRational;

    fn id(ring: RingSpec, n: usize) -> Mat {
        Mat::identity(ring, n)
    }

    #[test]
    fn zero_unknown() {
        let c = Constraint::new(Mat::zeros(Q, 1, 1)).plus(id(Q, 1), id(Q, 1));
        let s = solve_affine(Q, (1, 1), &[c]).unwrap();
        assert_eq!(s.particular().unwrap(), &Mat::zeros(Q, 1, 1));
        assert!(s.basis().is_empty());
    }

    #[test]
    fn scalar_inverse() {
        let a = Mat::from_ints(Q, &[&[2]]);
        let c = Constraint::new(id(Q, 1)).plus(a, id(Q, 1));
        let s = solve_affine(Q, (1, 1), &[c]).unwrap();
        assert_eq!(
            s.particular().unwrap(),
            &Mat::parse(Q, &[&["1/2"]]).unwrap()
        );
        assert!(s.basis().is_empty());
    }

    #[test]
    fn g_inverse_dimension() {
        // axa = a for a = diag(1, 0): x11 = 1, the other three entries free.
        for ring in [RingSpec::PrimeField(2), RingSpec::PrimeField(5), Q] {
            let a = Mat::from_ints(ring, &[&[1, 0], &[0, 0]]);
            let c = Constraint::new(a.clone()).plus(a.clone(), a.clone());
            let s = solve_affine(ring, (2, 2), &[c]).unwrap();
            assert_eq!(s.particular().unwrap(), &a);
            // Over Q(i) the span is taken over Q, so it doubles.
            assert_eq!(s.dim(), 3 * ring.base_degree());
        }
    }

    #[test]
    fn infeasible_system() {
        let a = Mat::from_ints(Q, &[&[0]]);
        let c = Constraint::new(id(Q, 1)).plus(a, id(Q, 1));
        assert!(solve_affine(Q, (1, 1), &[c]).unwrap().is_empty());
    }

    #[test]
    fn adjoint_constraint_over_gaussian() {
        // X* = X for a 1x1 unknown: real numbers, a 1-dimensional Q-space.
        let c = Constraint::new(Mat::zeros(Q, 1, 1))
            .plus(id(Q, 1), id(Q, 1))
            .plus_adjoint(id(Q, 1).scale(&Q.from_int(-1)), id(Q, 1));
        let s = solve_affine(Q, (1, 1), std::slice::from_ref(&c)).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&Mat::from_ints(Q, &[&[3]])));
        assert!(!s.contains(&Mat::parse(Q, &[&["1i"]]).unwrap()));
    }

    #[test]
    fn shape_errors() {
        let c = Constraint::new(Mat::zeros(Q, 2, 2)).plus(id(Q, 3), id(Q, 2));
        assert!(solve_affine(Q, (2, 2), &[c]).is_err());
        let c = Constraint::new(Mat::zeros(Q, 2, 3)).plus_adjoint(id(Q, 2), Mat::zeros(Q, 2, 3));
        assert!(solve_affine(Q, (2, 3), &[c]).is_err());
        assert!(solve_affine(Q, (0, 1), &[]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let f3 = RingSpec::PrimeField(3);
        let a = Mat::from_ints(f3, &[&[1, 0], &[0, 0]]);
        let c = Constraint::new(a.clone()).plus(a.clone(), a.clone());
        let s = solve_affine(f3, (2, 2), std::slice::from_ref(&c)).unwrap();
        let all = s.enumerate(1000).unwrap();
        assert_eq!(all.len(), 27);
        assert!(all.iter().all(|x| c.holds(x)));
        assert!(s.enumerate(10).is_err());
    }

    fn random_system(ring: RingSpec, seed: u64) -> (Vec<Constraint>, (usize, usize)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rng.gen_range(1..=2);
        let c = rng.gen_range(1..=2);
        let k = rng.gen_range(0..=2);
        let mut out = Vec::new();
        for _ in 0..k {
            let rows = rng.gen_range(1..=2);
            let cols = rng.gen_range(1..=2);
            let mut con = Constraint::new(Mat::random(rows, cols, ring, &mut rng, 2));
            con = con.plus(
                Mat::random(rows, r, ring, &mut rng, 2),
                Mat::random(c, cols, ring, &mut rng, 2),
            );
            if rng.gen_bool(0.5) {
                con = con.plus_adjoint(
                    Mat::random(rows, c, ring, &mut rng, 2),
                    Mat::random(r, cols, ring, &mut rng, 2),
                );
            }
            out.push(con);
        }
        (out, (r, c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn solution_set_is_exact(seed: u64, ring_pick in 0usize..3) {
            let ring = [Q, RingSpec::PrimeField(2), RingSpec::PrimeField(3)][ring_pick];
            let (cons, shape) = random_system(ring, seed);
            let set = solve_affine(ring, shape, &cons).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            if let Some(x) = set.sample(&mut rng, 5) {
                for c in &cons {
                    prop_assert!(c.holds(&x));
                }
                for b in set.basis() {
                    for c in &cons {
                        prop_assert!(c.apply(b).is_zero());
                    }
                }
            }
        }

        #[test]
        fn integer_elimination_matches_gauss_jordan(seed: u64, m in 1usize..7, n in 1usize..7, inner in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut real = |r, c| Mat::from_fn(Q, r, c, |_, _| Q.random_base(&mut rng, 4));
            let left = real(m, inner.max(1));
            let right = real(inner.max(1), n);
            let mut x = &left * &right;
            if inner == 0 {
                x = Mat::zeros(Q, m, n);
            }
            x.set(0, 0, crate::scalar::parse_scalar("-5/7", Q).unwrap());
            let rows = x
                .row_vecs()
                .into_iter()
                .map(|r| r.iter().map(|s| s.re().unwrap().clone()).collect())
                .collect();
            let (reduced, pivots) = rational_rref(rows);
            let (expected, expected_pivots) = x.echelon();
            prop_assert_eq!(&pivots, &expected_pivots);
            for (i, row) in reduced.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    prop_assert_eq!(Some(v), expected.get(i, j).re());
                }
            }
        }

        #[test]
        fn z2_brute_force_solutions_lie_in_set(seed: u64) {
            let ring = RingSpec::PrimeField(2);
            let (cons, shape) = random_system(ring, seed);
            let set = solve_affine(ring, shape, &cons).unwrap();
            let cells = shape.0 * shape.1;
            let mut brute = Vec::new();
            for bits in 0u32..(1 << cells) {
                let x = Mat::from_fn(ring, shape.0, shape.1, |i, j| {
                    ring.from_int(((bits >> (i * shape.1 + j)) & 1) as i64)
                });
                if cons.iter().all(|c| c.holds(&x)) {
                    prop_assert!(set.contains(&x));
                    brute.push(x);
                }
            }
            let listed = set.enumerate(1 << 16).unwrap();
            prop_assert_eq!(listed.len(), brute.len());
        }
    }
}
