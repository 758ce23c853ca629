//! Penrose-equation inverse classes.
//!
//! For `a` of shape `m x n`, a candidate inverse `x` is `n x m` and the four
//! Penrose equations are
//!
//! 1. `a x a = a`
//! 2. `x a x = x`
//! 3. `(a x)* = a x`
//! 4. `(x a)* = x a`
//!
//! Equations 1, 3 and 4 are affine in `x`, so every class is built from the
//! affine solver. Equation 2 is handled by squeezing a `{1}`-solution
//! `h ↦ h a h`, which preserves 1, 3 and 4 and makes the result reflexive.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::affine::{solve_affine, AffineSolutionSet, Constraint};
use crate::error::{shape_err, Error, Result};
use crate::matrix::Mat;

/// A nonempty subset of the Penrose equations `{1, 2, 3, 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassSpec(u8);

impl ClassSpec {
    pub const G: ClassSpec = ClassSpec(0b0001);
    pub const REFLEXIVE: ClassSpec = ClassSpec(0b0011);
    pub const LEAST_SQUARES: ClassSpec = ClassSpec(0b0101);
    pub const MINIMUM_NORM: ClassSpec = ClassSpec(0b1001);
    pub const ONE_TWO_THREE: ClassSpec = ClassSpec(0b0111);
    pub const ONE_TWO_FOUR: ClassSpec = ClassSpec(0b1011);
    pub const MOORE_PENROSE: ClassSpec = ClassSpec(0b1111);

    pub fn new(equations: &[u8]) -> Result<Self> {
        let mut bits = 0u8;
        for &e in equations {
            if !(1..=4).contains(&e) {
                return Err(Error::Precondition(format!("no Penrose equation ({e})")));
            }
            bits |= 1 << (e - 1);
        }
        if bits == 0 {
            return Err(Error::Precondition("class spec must be nonempty".into()));
        }
        Ok(ClassSpec(bits))
    }

    pub fn contains(&self, equation: u8) -> bool {
        (1..=4).contains(&equation) && self.0 & (1 << (equation - 1)) != 0
    }

    pub fn equations(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=4).filter(|e| self.contains(*e))
    }

    /// The same set with equation 2 removed (may be empty).
    fn linear_bits(&self) -> u8 {
        self.0 & !0b0010
    }

    /// Swaps equations 3 and 4, the effect of passing to adjoints.
    pub fn dual(&self) -> ClassSpec {
        let b = self.0;
        ClassSpec((b & 0b0011) | ((b & 0b0100) << 1) | ((b & 0b1000) >> 1))
    }

    pub fn all() -> impl Iterator<Item = ClassSpec> {
        (1u8..16).map(ClassSpec)
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eqs: Vec<String> = self.equations().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", eqs.join(","))
    }
}

/// Accepts `"123"`, `"1,2,3"` or `"{1,2,3}"`.
impl FromStr for ClassSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut eqs = Vec::new();
        for c in s.chars() {
            match c {
                '1'..='4' => eqs.push(c as u8 - b'0'),
                '{' | '}' | ',' | ' ' => {}
                _ => {
                    return Err(Error::Precondition(format!("bad class spec {s:?}")));
                }
            }
        }
        ClassSpec::new(&eqs)
    }
}

fn check_inverse_shape(a: &Mat, x: &Mat) -> Result<()> {
    if x.shape() != (a.cols(), a.rows()) {
        return Err(shape_err(
            "inverse",
            format!(
                "candidate is {}x{}, expected {}x{}",
                x.rows(),
                x.cols(),
                a.cols(),
                a.rows()
            ),
        ));
    }
    a.check_ring(x)
}

/// Whether `x` satisfies every Penrose equation named in `spec`.
pub fn satisfies(a: &Mat, x: &Mat, spec: ClassSpec) -> Result<bool> {
    check_inverse_shape(a, x)?;
    Ok(satisfies_unchecked(a, x, spec))
}

pub(crate) fn satisfies_unchecked(a: &Mat, x: &Mat, spec: ClassSpec) -> bool {
    let ax = a * x;
    let xa = x * a;
    (!spec.contains(1) || &ax * a == *a)
        && (!spec.contains(2) || &xa * x == *x)
        && (!spec.contains(3) || ax.is_self_adjoint())
        && (!spec.contains(4) || xa.is_self_adjoint())
}

/// Affine constraints for the linear equations (1, 3, 4) present in `spec`.
pub fn penrose_constraints(a: &Mat, spec: ClassSpec) -> Vec<Constraint> {
    let ring = a.ring();
    let (m, n) = a.shape();
    let im = Mat::identity(ring, m);
    let in_ = Mat::identity(ring, n);
    let minus_one = ring.from_int(-1);
    let mut out = Vec::new();
    if spec.contains(1) {
        out.push(Constraint::new(a.clone()).plus(a.clone(), a.clone()));
    }
    if spec.contains(3) {
        // a x - x* a* = 0
        out.push(
            Constraint::new(Mat::zeros(ring, m, m))
                .plus(a.clone(), im.clone())
                .plus_adjoint(im.scale(&minus_one), a.adjoint()),
        );
    }
    if spec.contains(4) {
        // x a - a* x* = 0
        out.push(
            Constraint::new(Mat::zeros(ring, n, n))
                .plus(in_.clone(), a.clone())
                .plus_adjoint(a.adjoint().scale(&minus_one), in_),
        );
    }
    out
}

/// The affine set cut out by the linear equations of `spec`; equation 2, if
/// present, is ignored here.
pub fn linear_solution_set(a: &Mat, spec: ClassSpec) -> AffineSolutionSet {
    solve_affine(
        a.ring(),
        (a.cols(), a.rows()),
        &penrose_constraints(a, spec),
    )
    .expect("Penrose constraints are well-shaped")
}

/// `h a h`
pub fn squeeze(a: &Mat, h: &Mat) -> Mat {
    h * a * h
}

/// Turns a member of the linear part of `spec` into a member of `spec`.
fn finish(a: &Mat, spec: ClassSpec, h: Mat) -> Result<Mat> {
    let x = if spec.contains(2) { squeeze(a, &h) } else { h };
    if !satisfies_unchecked(a, &x, spec) {
        return Err(Error::Invariant(format!(
            "constructed {x} is not a {spec}-inverse of {a}"
        )));
    }
    Ok(x)
}

/// Some member of `a{spec}`, or `None` when the class is empty.
///
/// Classes containing 2 but not 1 always contain the zero matrix, which is
/// returned.
pub fn solve_class(a: &Mat, spec: ClassSpec) -> Result<Option<Mat>> {
    if spec.linear_bits() & 0b0001 == 0 && spec.contains(2) {
        let zero = Mat::zeros(a.ring(), a.cols(), a.rows());
        return finish(a, spec, zero).map(Some);
    }
    let set = linear_solution_set(a, spec);
    match set.particular() {
        None => Ok(None),
        Some(h) => finish(a, spec, h.clone()).map(Some),
    }
}

/// A seeded random member of `a{spec}`.
pub fn sample_class<R: Rng + ?Sized>(
    a: &Mat,
    spec: ClassSpec,
    rng: &mut R,
    bound: u32,
) -> Result<Option<Mat>> {
    if !spec.contains(1) && spec.contains(2) {
        return solve_class(a, spec);
    }
    let set = linear_solution_set(a, spec);
    match set.sample(rng, bound) {
        None => Ok(None),
        Some(h) => finish(a, spec, h).map(Some),
    }
}

/// The Moore-Penrose inverse, or `None` if `a` has none.
///
/// Two different members of `a{1,3,4}` are squeezed and compared, so a
/// returned value also certifies uniqueness on this instance.
pub fn moore_penrose(a: &Mat) -> Result<Option<Mat>> {
    let spec = ClassSpec::MOORE_PENROSE;
    let set = linear_solution_set(a, spec);
    let Some(p) = set.particular() else {
        return Ok(None);
    };
    let first = finish(a, spec, p.clone())?;
    if !set.basis().is_empty() {
        let ones = vec![a.ring().one(); set.dim()];
        let other = finish(a, spec, set.point(&ones).expect("nonempty"))?;
        if other != first {
            return Err(Error::Invariant(format!(
                "two Moore-Penrose inverses of {a}: {first} and {other}"
            )));
        }
    }
    Ok(Some(first))
}

/// Free blocks describing a `{1}`-inverse relative to a reflexive
/// g-inverse `h`, with `p = a h` and `q = h a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GInvParams {
    /// in `q R (1-p)`
    pub x2: Mat,
    /// in `(1-q) R p`
    pub x3: Mat,
    /// in `(1-q) R (1-p)`
    pub x4: Mat,
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}

fn projections(a: &Mat, h: &Mat) -> (Mat, Mat, Mat, Mat) {
    let p = a * h;
    let q = h * a;
    let one_p = &p.identity_like_rows() - &p;
    let one_q = &q.identity_like_rows() - &q;
    (p, q, one_p, one_q)
}

/// `h + x2 + x3 + x4`, a member of `a{1}`; it is in `a{1,2}` exactly when
/// `x4 = x3 a x2`.
pub fn g_inverse_from_params(a: &Mat, h: &Mat, params: &GInvParams) -> Result<Mat> {
    check_inverse_shape(a, h)?;
    require(
        satisfies_unchecked(a, h, ClassSpec::REFLEXIVE),
        "h is not a reflexive g-inverse of a",
    )?;
    for x in [&params.x2, &params.x3, &params.x4] {
        check_inverse_shape(a, x)?;
    }
    let (p, q, one_p, one_q) = projections(a, h);
    require(
        params.x2 == &q * &params.x2 * &one_p,
        "x2 is not in qR(1-p)",
    )?;
    require(
        params.x3 == &one_q * &params.x3 * &p,
        "x3 is not in (1-q)Rp",
    )?;
    require(
        params.x4 == &one_q * &params.x4 * &one_p,
        "x4 is not in (1-q)R(1-p)",
    )?;
    Ok(h + &params.x2 + &params.x3 + &params.x4)
}

/// Reflexive variant: `x4 := x3 a x2`.
pub fn reflexive_from_params(a: &Mat, h: &Mat, x2: &Mat, x3: &Mat) -> Result<Mat> {
    check_inverse_shape(a, x2)?;
    check_inverse_shape(a, x3)?;
    let params = GInvParams {
        x2: x2.clone(),
        x3: x3.clone(),
        x4: x3 * a * x2,
    };
    g_inverse_from_params(a, h, &params)
}

/// Recovers the (unique) blocks of `x ∈ a{1}` relative to `h`.
pub fn params_of(a: &Mat, h: &Mat, x: &Mat) -> Result<GInvParams> {
    check_inverse_shape(a, x)?;
    require(
        satisfies_unchecked(a, h, ClassSpec::REFLEXIVE),
        "h is not a reflexive g-inverse of a",
    )?;
    require(
        satisfies_unchecked(a, x, ClassSpec::G),
        "x is not a g-inverse of a",
    )?;
    let (p, q, one_p, one_q) = projections(a, h);
    Ok(GInvParams {
        x2: &q * x * &one_p,
        x3: &one_q * x * &p,
        x4: &one_q * x * &one_p,
    })
}

fn require_mp(a: &Mat) -> Result<Mat> {
    moore_penrose(a)?.ok_or_else(|| Error::Precondition("a has no Moore-Penrose inverse".into()))
}

fn require_g(a: &Mat, a_minus: &Mat) -> Result<()> {
    check_inverse_shape(a, a_minus)?;
    require(
        satisfies_unchecked(a, a_minus, ClassSpec::G),
        "supplied matrix is not a g-inverse of a",
    )
}

/// 1MP-inverse `a⁻ a a†`, always in `a{1,2,3}`.
pub fn one_mp(a: &Mat, a_minus: &Mat) -> Result<Mat> {
    require_g(a, a_minus)?;
    let mp = require_mp(a)?;
    Ok(a_minus * a * &mp)
}

/// MP1-inverse `a† a a⁻`, always in `a{1,2,4}`.
pub fn mp_one(a: &Mat, a_minus: &Mat) -> Result<Mat> {
    require_g(a, a_minus)?;
    let mp = require_mp(a)?;
    Ok(&mp * a * a_minus)
}

/// `h + (1 - h a) w a h` for `h ∈ a{1,2,3}`; `w` has the shape of `h`.
pub fn construct_123(a: &Mat, h: &Mat, w: &Mat) -> Result<Mat> {
    check_inverse_shape(a, h)?;
    check_inverse_shape(a, w)?;
    require(
        satisfies_unchecked(a, h, ClassSpec::ONE_TWO_THREE),
        "h is not a {1,2,3}-inverse of a",
    )?;
    let ha = h * a;
    let one_ha = &ha.identity_like_rows() - &ha;
    Ok(h + &(&one_ha * w * a * h))
}

/// `h + h a w (1 - a h)` for `h ∈ a{1,2,4}`.
pub fn construct_124(a: &Mat, h: &Mat, w: &Mat) -> Result<Mat> {
    check_inverse_shape(a, h)?;
    check_inverse_shape(a, w)?;
    require(
        satisfies_unchecked(a, h, ClassSpec::ONE_TWO_FOUR),
        "h is not a {1,2,4}-inverse of a",
    )?;
    let ah = a * h;
    let one_ah = &ah.identity_like_rows() - &ah;
    Ok(h + &(h * a * w * &one_ah))
}

/// `G a*` for `G ∈ (a* a){1}`; lands in `a{1,2,3}`.
pub fn from_gram_left(a: &Mat, gram_inverse: &Mat) -> Result<Mat> {
    let gram = &a.adjoint() * a;
    check_inverse_shape(&gram, gram_inverse)?;
    require(
        satisfies_unchecked(&gram, gram_inverse, ClassSpec::G),
        "G is not a g-inverse of a*a",
    )?;
    require(
        solve_class(a, ClassSpec::LEAST_SQUARES)?.is_some(),
        "a has no {1,3}-inverse",
    )?;
    Ok(gram_inverse * &a.adjoint())
}

/// `a* G` for `G ∈ (a a*){1}`; lands in `a{1,2,4}`.
pub fn from_gram_right(a: &Mat, gram_inverse: &Mat) -> Result<Mat> {
    let gram = a * &a.adjoint();
    check_inverse_shape(&gram, gram_inverse)?;
    require(
        satisfies_unchecked(&gram, gram_inverse, ClassSpec::G),
        "G is not a g-inverse of aa*",
    )?;
    require(
        solve_class(a, ClassSpec::MINIMUM_NORM)?.is_some(),
        "a has no {1,4}-inverse",
    )?;
    Ok(&a.adjoint() * gram_inverse)
}

fn require_two_g(a: &Mat, x: &Mat, y: &Mat) -> Result<()> {
    require_g(a, x)?;
    require_g(a, y)
}

/// `x ~_l y ⟺ x a = y a` on `a{1}`.
pub fn sim_l(a: &Mat, x: &Mat, y: &Mat) -> Result<bool> {
    require_two_g(a, x, y)?;
    Ok(x * a == y * a)
}

/// `x ~_r y ⟺ a x = a y` on `a{1}`.
pub fn sim_r(a: &Mat, x: &Mat, y: &Mat) -> Result<bool> {
    require_two_g(a, x, y)?;
    Ok(a * x == a * y)
}

/// Representative `x a a†` of the `~_l` class of `x`.
pub fn canonical_rep_l(a: &Mat, x: &Mat) -> Result<Mat> {
    one_mp(a, x)
}

/// Representative `a† a x` of the `~_r` class of `x`.
pub fn canonical_rep_r(a: &Mat, x: &Mat) -> Result<Mat> {
    mp_one(a, x)
}

/// The involution, used to move between a `{1,2,3}` statement about `a`
/// and the `{1,2,4}` statement about `a*`.
pub fn dual_transport(x: &Mat) -> Mat {
    x.adjoint()
}
