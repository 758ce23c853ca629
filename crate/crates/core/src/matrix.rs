//! Dense exact matrices over a [`RingSpec`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::scalar::{parse_scalar, RingSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    ring: RingSpec,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Mat {
    pub fn zeros(ring: RingSpec, rows: usize, cols: usize) -> Self {
        Mat {
            ring,
            rows,
            cols,
            data: vec![ring.zero(); rows * cols],
        }
    }

    pub fn identity(ring: RingSpec, n: usize) -> Self {
        let mut m = Mat::zeros(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = ring.one();
        }
        m
    }

    pub fn from_fn(
        ring: RingSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Scalar,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat {
            ring,
            rows,
            cols,
            data,
        }
    }

    /// Builds a matrix from rows of scalars, checking rectangularity and ring.
    pub fn from_rows(ring: RingSpec, rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(Error::MalformedMatrix(
                "matrix must have at least one row and column".into(),
            ));
        }
        let mut data = Vec::with_capacity(m * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for s in row {
                if s.ring() != ring {
                    return Err(Error::RingMismatch {
                        expected: ring,
                        found: s.ring(),
                    });
                }
                data.push(s);
            }
        }
        Ok(Mat {
            ring,
            rows: m,
            cols: n,
            data,
        })
    }

    /// Integer literal matrix; panics on ragged input. Intended for tests and
    /// fixtures.
    pub fn from_ints(ring: RingSpec, rows: &[&[i64]]) -> Self {
        let scalars = rows
            .iter()
            .map(|r| r.iter().map(|&v| ring.from_int(v)).collect())
            .collect();
        Mat::from_rows(ring, scalars).expect("well-formed integer literal")
    }

    /// Parses a matrix of scalar strings in the scalar grammar.
    pub fn parse(ring: RingSpec, rows: &[&[&str]]) -> Result<Self> {
        let scalars = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_scalar(s, ring))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Mat::from_rows(ring, scalars)
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Scalar) {
        assert_eq!(s.ring(), self.ring, "entry from a different ring");
        self.data[i * self.cols + j] = s;
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row_vecs(&self) -> Vec<Vec<Scalar>> {
        self.data
            .chunks(self.cols)
            .map(<[Scalar]>::to_vec)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn identity_like_rows(&self) -> Mat {
        Mat::identity(self.ring, self.rows)
    }

    pub fn identity_like_cols(&self) -> Mat {
        Mat::identity(self.ring, self.cols)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.ring, self.cols, self.rows, |i, j| {
            self.get(j, i).conj()
        })
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ring, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.is_square() && *self == self.adjoint()
    }

    pub fn is_idempotent(&self) -> bool {
        self.is_square() && &(self * self) == self
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        Mat {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn checked_mul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(shape_err(
                "multiply",
                format!("{}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        self.check_ring(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub fn checked_add(&self, rhs: &Mat) -> Result<Mat> {
        self.same_shape("add", rhs)?;
        Ok(self + rhs)
    }

    pub fn checked_sub(&self, rhs: &Mat) -> Result<Mat> {
        self.same_shape("subtract", rhs)?;
        Ok(self - rhs)
    }

    pub(crate) fn same_shape(&self, op: &'static str, rhs: &Mat) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(shape_err(
                op,
                format!("{}x{} vs {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        self.check_ring(rhs)
    }

    pub(crate) fn check_ring(&self, rhs: &Mat) -> Result<()> {
        if self.ring != rhs.ring {
            return Err(Error::RingMismatch {
                expected: self.ring,
                found: rhs.ring,
            });
        }
        Ok(())
    }

    fn mul_unchecked(&self, rhs: &Mat) -> Mat {
        let zero = self.ring.zero();
        let mut out = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = zero.clone();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = &acc + &(a * rhs.get(k, j));
                }
                out.push(acc);
            }
        }
        Mat {
            ring: self.ring,
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        }
    }

    fn zip_with(&self, rhs: &Mat, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "elementwise shape mismatch");
        Mat {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// `[self | rhs]`.
    pub fn hstack(&self, rhs: &Mat) -> Result<Mat> {
        if self.rows != rhs.rows {
            return Err(shape_err(
                "hstack",
                format!("{} vs {} rows", self.rows, rhs.rows),
            ));
        }
        self.check_ring(rhs)?;
        Ok(Mat::from_fn(
            self.ring,
            self.rows,
            self.cols + rhs.cols,
            |i, j| {
                if j < self.cols {
                    self.get(i, j).clone()
                } else {
                    rhs.get(i, j - self.cols).clone()
                }
            },
        ))
    }

    /// Column `j` as an `m x 1` matrix.
    pub fn column(&self, j: usize) -> Mat {
        Mat::from_fn(self.ring, self.rows, 1, |i, _| self.get(i, j).clone())
    }

    /// Reduced row echelon form with the recorded row operations.
    ///
    /// Pivots are the first nonzero entry scanning each column top to bottom
    /// below the current pivot row.
    pub fn rref(&self) -> Rref {
        let (reduced, pivots, transform) = self.reduce(true);
        Rref {
            reduced,
            pivots,
            transform: transform.expect("tracked"),
        }
    }

    /// Reduced form and pivots without the transform.
    pub(crate) fn echelon(&self) -> (Mat, Vec<usize>) {
        let (reduced, pivots, _) = self.reduce(false);
        (reduced, pivots)
    }

    fn reduce(&self, track: bool) -> (Mat, Vec<usize>, Option<Mat>) {
        let (m, n) = self.shape();
        let mut r = self.clone();
        let mut t = track.then(|| Mat::identity(self.ring, m));
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == m {
                break;
            }
            let Some(pr) = (row..m).find(|&i| !r.get(i, col).is_zero()) else {
                continue;
            };
            r.swap_rows(row, pr);
            let inv = r.get(row, col).inv().expect("pivot is nonzero");
            r.scale_row(row, &inv);
            if let Some(t) = t.as_mut() {
                t.swap_rows(row, pr);
                t.scale_row(row, &inv);
            }
            for i in 0..m {
                if i != row && !r.get(i, col).is_zero() {
                    let factor = r.get(i, col).clone();
                    r.sub_row_multiple(i, row, &factor);
                    if let Some(t) = t.as_mut() {
                        t.sub_row_multiple(i, row, &factor);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (r, pivots, t)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, i: usize, s: &Scalar) {
        for j in 0..self.cols {
            let k = i * self.cols + j;
            self.data[k] = &self.data[k] * s;
        }
    }

    /// row[target] -= factor * row[source]
    fn sub_row_multiple(&mut self, target: usize, source: usize, factor: &Scalar) {
        for j in 0..self.cols {
            let s = &self.data[source * self.cols + j];
            if s.is_zero() {
                continue;
            }
            let d = factor * s;
            let k = target * self.cols + j;
            self.data[k] = &self.data[k] - &d;
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon().1.len()
    }

    /// Basis of `{v : self * v = 0}`, one `n x 1` column per free variable,
    /// each scaled so its first nonzero entry is 1.
    pub fn null_space(&self) -> Vec<Mat> {
        let (reduced, pivots) = self.echelon();
        let n = self.cols;
        let ring = self.ring;
        let mut basis = Vec::new();
        for free in (0..n).filter(|c| !pivots.contains(c)) {
            let mut v = Mat::zeros(ring, n, 1);
            v.set(free, 0, ring.one());
            for (row, &pc) in pivots.iter().enumerate() {
                v.set(pc, 0, -reduced.get(row, free));
            }
            // Normalize so the leading nonzero entry is 1.
            let lead = v
                .data
                .iter()
                .find(|s| !s.is_zero())
                .expect("free entry is 1");
            let inv = lead.inv().expect("nonzero");
            basis.push(v.scale(&inv));
        }
        basis
    }

    /// Random matrix from a seed. See [`Mat::random`].
    pub fn random_seeded(rows: usize, cols: usize, ring: RingSpec, seed: u64, bound: u32) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::random(rows, cols, ring, &mut rng, bound)
    }

    pub fn random<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        ring: RingSpec,
        rng: &mut R,
        bound: u32,
    ) -> Mat {
        Mat::from_fn(ring, rows, cols, |_, _| ring.random_scalar(rng, bound))
    }

    /// Product of random `rows x inner` and `inner x cols` factors; rank is at
    /// most `inner`.
    pub fn random_low_rank<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        inner: usize,
        ring: RingSpec,
        rng: &mut R,
        bound: u32,
    ) -> Mat {
        if inner == 0 {
            return Mat::zeros(ring, rows, cols);
        }
        let left = Mat::random(rows, inner, ring, rng, bound);
        let right = Mat::random(inner, cols, ring, rng, bound);
        &left * &right
    }

    /// Sum of squared moduli of all entries (Frobenius norm squared); `Q(i)` only.
    pub fn norm_sqr(&self) -> Option<num_rational::BigRational> {
        let mut acc = num_rational::BigRational::from_integer(0.into());
        for s in &self.data {
            acc += s.norm_sqr()?;
        }
        Some(acc)
    }
}

pub struct Rref {
    pub reduced: Mat,
    pub pivots: Vec<usize>,
    /// Invertible `T` with `T * A = reduced`.
    pub transform: Mat,
}

pub fn rank(a: &Mat) -> usize {
    a.rank()
}

pub fn null_space(a: &Mat) -> Vec<Mat> {
    a.null_space()
}

pub fn adjoint(a: &Mat) -> Mat {
    a.adjoint()
}

/// `R(a) ⊆ R(b)`: column space inclusion, i.e. `a = b c` for some `c`.
pub fn col_space_leq(a: &Mat, b: &Mat) -> Result<bool> {
    if a.rows != b.rows {
        return Err(shape_err(
            "col_space_leq",
            format!("{} vs {} rows", a.rows, b.rows),
        ));
    }
    Ok(b.hstack(a)?.rank() == b.rank())
}

/// Row space inclusion, i.e. `a = c b` for some `c`.
pub fn row_space_leq(a: &Mat, b: &Mat) -> Result<bool> {
    if a.cols != b.cols {
        return Err(shape_err(
            "row_space_leq",
            format!("{} vs {} cols", a.cols, b.cols),
        ));
    }
    col_space_leq(&a.adjoint(), &b.adjoint())
}

/// Seeded random matrix: identical arguments give identical output.
pub fn random_matrix(rows: usize, cols: usize, ring: RingSpec, seed: u64, entry_bound: u32) -> Mat {
    Mat::random_seeded(rows, cols, ring, seed, entry_bound)
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product of {}x{} and {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        assert_eq!(self.ring, rhs.ring, "matrix product across rings");
        self.mul_unchecked(rhs)
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        Mat {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| -x).collect(),
        }
    }
}

macro_rules! forward_mat {
    ($tr:ident, $m:ident) => {
        impl $tr for Mat {
            type Output = Mat;
            fn $m(self, rhs: Mat) -> Mat {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Mat> for Mat {
            type Output = Mat;
            fn $m(self, rhs: &Mat) -> Mat {
                (&self).$m(rhs)
            }
        }
        impl $tr<Mat> for &Mat {
            type Output = Mat;
            fn $m(self, rhs: Mat) -> Mat {
                self.$m(&rhs)
            }
        }
    };
}
forward_mat!(Add, add);
forward_mat!(Sub, sub);
forward_mat!(Mul, mul);

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
