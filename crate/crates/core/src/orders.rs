//! Order relations between matrices of the same shape: minus, left-star,
//! right-star, star, 1MP and MP1.
//!
//! Every relation is decided by two independent routes:
//!
//! * **characterization**: a direct test of defining equalities (Gram
//!   equalities, range inclusions, rank subtractivity);
//! * **feasibility**: the existential witness definition "some `g` in a
//!   class of inverses with `a g = b g` and `g a = g b`", decided exactly by
//!   the affine solver since every condition is linear in `g`.
//!
//! Left-star facts are proved once; right-star twins go through the
//! involution (`a <* b ⟺ a* *< b*`).

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::affine::{solve_affine, Constraint};
use crate::blocks::{blocks, IdempotentDecomposition, Side};
use crate::error::{shape_err, Error, Result};
use crate::inverses::{
    linear_solution_set, penrose_constraints, sample_class, satisfies_unchecked, solve_class,
    squeeze, ClassSpec,
};
use crate::matrix::{col_space_leq, row_space_leq, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderRelation {
    Minus,
    LeftStar,
    RightStar,
    Star,
    OneMp,
    MpOne,
}

impl OrderRelation {
    pub const ALL: [OrderRelation; 6] = [
        OrderRelation::Minus,
        OrderRelation::LeftStar,
        OrderRelation::RightStar,
        OrderRelation::Star,
        OrderRelation::OneMp,
        OrderRelation::MpOne,
    ];

    /// The class whose nonemptiness the relation presupposes for `a`.
    pub fn existence_class(&self) -> ClassSpec {
        match self {
            OrderRelation::Minus => ClassSpec::G,
            OrderRelation::LeftStar | OrderRelation::OneMp => ClassSpec::LEAST_SQUARES,
            OrderRelation::RightStar | OrderRelation::MpOne => ClassSpec::MINIMUM_NORM,
            OrderRelation::Star => ClassSpec::MOORE_PENROSE,
        }
    }

    /// The class searched by the feasibility route.
    fn witness_class(&self) -> ClassSpec {
        match self {
            OrderRelation::Star => ClassSpec::new(&[1, 3, 4]).expect("valid"),
            other => other.existence_class(),
        }
    }

    /// Image under the involution: `a R b ⟺ a* dual(R) b*`.
    pub fn dual(&self) -> OrderRelation {
        match self {
            OrderRelation::LeftStar => OrderRelation::RightStar,
            OrderRelation::RightStar => OrderRelation::LeftStar,
            OrderRelation::OneMp => OrderRelation::MpOne,
            OrderRelation::MpOne => OrderRelation::OneMp,
            other => *other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrderRelation::Minus => "minus",
            OrderRelation::LeftStar => "left-star",
            OrderRelation::RightStar => "right-star",
            OrderRelation::Star => "star",
            OrderRelation::OneMp => "one-mp",
            OrderRelation::MpOne => "mp-one",
        }
    }
}

impl fmt::Display for OrderRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderRelation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "minus" => OrderRelation::Minus,
            "left-star" => OrderRelation::LeftStar,
            "right-star" => OrderRelation::RightStar,
            "star" => OrderRelation::Star,
            "one-mp" | "1mp" => OrderRelation::OneMp,
            "mp-one" | "mp1" => OrderRelation::MpOne,
            _ => return Err(Error::Precondition(format!("unknown relation {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Characterization,
    Feasibility,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Characterization => "characterization",
            Route::Feasibility => "feasibility",
        })
    }
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "characterization" => Ok(Route::Characterization),
            "feasibility" => Ok(Route::Feasibility),
            _ => Err(Error::Precondition(format!("unknown route {s:?}"))),
        }
    }
}

/// The conjunct that failed when a relation does not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// `a* a = a* b` (or its right-hand twin `a a* = b a*`) is false.
    GramEquality { side: Side },
    /// `aR ⊆ bR` (left) or `Ra ⊆ Rb` (right) is false.
    SpaceInclusion { side: Side },
    /// `rank(b - a) ≠ rank(b) - rank(a)`.
    RankSubtractivity,
    /// `a = p b` (left, `p = a h`) or `a = b q` (right, `q = h a`) is false.
    ProjectorIdentity { side: Side },
    /// `a` has no inverse in the class the relation presupposes.
    ClassEmpty(ClassSpec),
    /// The witness system for `g` is inconsistent.
    Infeasible,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::GramEquality { side: Side::Left } => write!(f, "a*a ≠ a*b"),
            Failure::GramEquality { side: Side::Right } => write!(f, "aa* ≠ ba*"),
            Failure::SpaceInclusion { side: Side::Left } => write!(f, "aR ⊄ bR"),
            Failure::SpaceInclusion { side: Side::Right } => write!(f, "Ra ⊄ Rb"),
            Failure::RankSubtractivity => write!(f, "rank(b-a) ≠ rank(b) - rank(a)"),
            Failure::ProjectorIdentity { side: Side::Left } => write!(f, "a ≠ (ah)b"),
            Failure::ProjectorIdentity { side: Side::Right } => write!(f, "a ≠ b(ha)"),
            Failure::ClassEmpty(spec) => write!(f, "a{spec} is empty"),
            Failure::Infeasible => write!(f, "no witness g exists"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub failure: Option<Failure>,
}

impl Verdict {
    fn yes() -> Self {
        Verdict {
            holds: true,
            failure: None,
        }
    }

    fn no(failure: Failure) -> Self {
        Verdict {
            holds: false,
            failure: Some(failure),
        }
    }
}

fn check_pair(a: &Mat, b: &Mat) -> Result<()> {
    a.same_shape("order", b)
}

/// Decides `a rel b` by `route`, reporting the failed conjunct.
pub fn decide(rel: OrderRelation, a: &Mat, b: &Mat, route: Route) -> Result<Verdict> {
    check_pair(a, b)?;
    if a.is_zero() {
        return Ok(Verdict::yes());
    }
    match route {
        Route::Characterization => Ok(characterize(rel, a, b)),
        Route::Feasibility => Ok(feasible(rel, a, b)),
    }
}

pub fn holds(rel: OrderRelation, a: &Mat, b: &Mat, route: Route) -> Result<bool> {
    decide(rel, a, b, route).map(|v| v.holds)
}

fn left_gram(a: &Mat, b: &Mat) -> bool {
    let astar = a.adjoint();
    &astar * a == &astar * b
}

fn right_gram(a: &Mat, b: &Mat) -> bool {
    let astar = a.adjoint();
    a * &astar == b * &astar
}

/// The two-Gram definition of the star order: `a a* = b a*` and `a* a = a* b`.
pub fn two_gram(a: &Mat, b: &Mat) -> Result<bool> {
    check_pair(a, b)?;
    Ok(left_gram(a, b) && right_gram(a, b))
}

fn characterize(rel: OrderRelation, a: &Mat, b: &Mat) -> Verdict {
    use OrderRelation::*;
    let left_incl = || col_space_leq(a, b).expect("same shape");
    let right_incl = || row_space_leq(a, b).expect("same shape");
    match rel {
        Minus => {
            if b.rank() == a.rank() + (b - a).rank() {
                Verdict::yes()
            } else {
                Verdict::no(Failure::RankSubtractivity)
            }
        }
        LeftStar => {
            if !left_gram(a, b) {
                Verdict::no(Failure::GramEquality { side: Side::Left })
            } else if !left_incl() {
                Verdict::no(Failure::SpaceInclusion { side: Side::Left })
            } else {
                Verdict::yes()
            }
        }
        RightStar => {
            if !right_gram(a, b) {
                Verdict::no(Failure::GramEquality { side: Side::Right })
            } else if !right_incl() {
                Verdict::no(Failure::SpaceInclusion { side: Side::Right })
            } else {
                Verdict::yes()
            }
        }
        Star => {
            let left = characterize(LeftStar, a, b);
            if left.holds {
                characterize(RightStar, a, b)
            } else {
                left
            }
        }
        OneMp => {
            // a* a = a* b  ⟺  a h b = a for any h ∈ a{1,3}.
            let Some(h) = solve_class(a, ClassSpec::LEAST_SQUARES).expect("class construction")
            else {
                return Verdict::no(Failure::ClassEmpty(ClassSpec::LEAST_SQUARES));
            };
            if &(a * &h) * b != *a {
                Verdict::no(Failure::ProjectorIdentity { side: Side::Left })
            } else if !left_incl() {
                Verdict::no(Failure::SpaceInclusion { side: Side::Left })
            } else {
                Verdict::yes()
            }
        }
        MpOne => {
            let Some(h) = solve_class(a, ClassSpec::MINIMUM_NORM).expect("class construction")
            else {
                return Verdict::no(Failure::ClassEmpty(ClassSpec::MINIMUM_NORM));
            };
            if b * &(&h * a) != *a {
                Verdict::no(Failure::ProjectorIdentity { side: Side::Right })
            } else if !right_incl() {
                Verdict::no(Failure::SpaceInclusion { side: Side::Right })
            } else {
                Verdict::yes()
            }
        }
    }
}

/// Constraints `g ∈ a{spec}` (linear part), `a g = b g`, `g a = g b`.
fn witness_constraints(a: &Mat, b: &Mat, spec: ClassSpec) -> Vec<Constraint> {
    let ring = a.ring();
    let (m, n) = a.shape();
    let diff = a - b;
    let mut cons = penrose_constraints(a, spec);
    cons.push(Constraint::new(Mat::zeros(ring, m, m)).plus(diff.clone(), Mat::identity(ring, m)));
    cons.push(Constraint::new(Mat::zeros(ring, n, n)).plus(Mat::identity(ring, n), diff));
    cons
}

/// A witness `g` from the feasibility system, if any.
fn feasible_witness(rel: OrderRelation, a: &Mat, b: &Mat) -> std::result::Result<Mat, Failure> {
    let spec = rel.witness_class();
    let set = solve_affine(
        a.ring(),
        (a.cols(), a.rows()),
        &witness_constraints(a, b, spec),
    )
    .expect("witness constraints are well-shaped");
    match set.particular() {
        Some(g) => Ok(g.clone()),
        None if linear_solution_set(a, spec).is_empty() => {
            Err(Failure::ClassEmpty(rel.existence_class()))
        }
        None => Err(Failure::Infeasible),
    }
}

fn feasible(rel: OrderRelation, a: &Mat, b: &Mat) -> Verdict {
    match feasible_witness(rel, a, b) {
        Ok(_) => Verdict::yes(),
        Err(f) => Verdict::no(f),
    }
}

/// Order-certifying data: `g` with `a g = b g`, `g a = g b`, and the
/// idempotents `p = a g`, `q = g a` giving `a = p b = b q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub g: Mat,
    pub p: Mat,
    pub q: Mat,
}

/// Named identity checks, in a fixed order.
pub type Checks = Vec<(String, bool)>;

pub fn all_pass(checks: &Checks) -> bool {
    checks.iter().all(|(_, ok)| *ok)
}

fn failed_names(checks: &Checks) -> String {
    checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Witness {
    fn from_g(a: &Mat, g: Mat) -> Witness {
        Witness {
            p: a * &g,
            q: &g * a,
            g,
        }
    }

    /// Every identity the witness should satisfy for `a rel b`.
    pub fn checks(&self, rel: OrderRelation, a: &Mat, b: &Mat) -> Checks {
        let Witness { g, p, q } = self;
        let class = match rel {
            OrderRelation::Minus => ClassSpec::REFLEXIVE,
            OrderRelation::LeftStar | OrderRelation::OneMp => ClassSpec::ONE_TWO_THREE,
            OrderRelation::RightStar | OrderRelation::MpOne => ClassSpec::ONE_TWO_FOUR,
            OrderRelation::Star => ClassSpec::MOORE_PENROSE,
        };
        let mut out = vec![
            (format!("g in a{class}"), satisfies_unchecked(a, g, class)),
            ("ag = bg".to_string(), a * g == b * g),
            ("ga = gb".to_string(), g * a == g * b),
            ("p = ag".to_string(), *p == a * g),
            ("q = ga".to_string(), *q == g * a),
            ("p^2 = p".to_string(), p.is_idempotent()),
            ("q^2 = q".to_string(), q.is_idempotent()),
            ("a = pb".to_string(), *a == p * b),
            ("a = bq".to_string(), *a == b * q),
        ];
        if matches!(
            rel,
            OrderRelation::LeftStar | OrderRelation::OneMp | OrderRelation::Star
        ) {
            out.push(("p* = p".to_string(), p.is_self_adjoint()));
        }
        if matches!(
            rel,
            OrderRelation::RightStar | OrderRelation::MpOne | OrderRelation::Star
        ) {
            out.push(("q* = q".to_string(), q.is_self_adjoint()));
        }
        out
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}

fn certify(w: Witness, rel: OrderRelation, a: &Mat, b: &Mat) -> Result<Witness> {
    let checks = w.checks(rel, a, b);
    if !all_pass(&checks) {
        return Err(Error::Invariant(format!(
            "{rel} witness for a={a}, b={b} fails: {}",
            failed_names(&checks)
        )));
    }
    Ok(w)
}

/// Constructs `g ∈ a{1,2,3}` certifying `a *< b` from a fixed
/// `h ∈ a{1,2,3}` and any `c` with `b c = a`: `g = h + (1 - q) c q h`.
pub fn left_star_witness(a: &Mat, b: &Mat) -> Result<Witness> {
    check_pair(a, b)?;
    let h = solve_class(a, ClassSpec::ONE_TWO_THREE)?
        .ok_or_else(|| Error::Precondition("a has no {1,3}-inverse".into()))?;
    let verdict = decide(OrderRelation::LeftStar, a, b, Route::Characterization)?;
    if let Some(f) = verdict.failure {
        return Err(Error::Precondition(format!("a *< b fails: {f}")));
    }
    let ring = a.ring();
    let n = a.cols();
    let c_set = solve_affine(
        ring,
        (n, n),
        &[Constraint::new(a.clone()).plus(b.clone(), Mat::identity(ring, n))],
    )?;
    let c = c_set.particular().ok_or_else(|| {
        Error::Invariant(format!("aR ⊆ bR but b c = a is infeasible (a={a}, b={b})"))
    })?;
    let q = &h * a;
    let one_q = &q.identity_like_rows() - &q;
    let c3 = &one_q * c * &q;
    let g = &h + &(&c3 * &h);
    certify(Witness::from_g(a, g), OrderRelation::LeftStar, a, b)
}

/// Right-star twin of [`left_star_witness`], obtained through adjoints.
pub fn right_star_witness(a: &Mat, b: &Mat) -> Result<Witness> {
    check_pair(a, b)?;
    let dual = left_star_witness(&a.adjoint(), &b.adjoint())?;
    let g = dual.g.adjoint();
    certify(Witness::from_g(a, g), OrderRelation::RightStar, a, b)
}

/// A certified witness for any relation that holds.
pub fn witness(rel: OrderRelation, a: &Mat, b: &Mat) -> Result<Witness> {
    check_pair(a, b)?;
    match rel {
        OrderRelation::LeftStar | OrderRelation::OneMp => {
            let w = left_star_witness(a, b)?;
            certify(w, rel, a, b)
        }
        OrderRelation::RightStar | OrderRelation::MpOne => {
            let w = right_star_witness(a, b)?;
            certify(w, rel, a, b)
        }
        OrderRelation::Minus | OrderRelation::Star => {
            let g = feasible_witness(rel, a, b)
                .map_err(|f| Error::Precondition(format!("{rel} fails: {f}")))?;
            certify(Witness::from_g(a, squeeze(a, &g)), rel, a, b)
        }
    }
}

fn side_class(side: Side) -> ClassSpec {
    match side {
        Side::Left => ClassSpec::ONE_TWO_THREE,
        Side::Right => ClassSpec::ONE_TWO_FOUR,
    }
}

fn side_relation(side: Side) -> OrderRelation {
    match side {
        Side::Left => OrderRelation::LeftStar,
        Side::Right => OrderRelation::RightStar,
    }
}

/// `b = a + (1 - a g) d (1 - g a)`; for `g ∈ a{1,2,3}` (left) or
/// `g ∈ a{1,2,4}` (right) this sweeps out the whole upper set of `a`.
pub fn upper_sample(a: &Mat, g: &Mat, d: &Mat, side: Side) -> Result<Mat> {
    let class = side_class(side);
    if g.shape() != (a.cols(), a.rows()) || d.shape() != a.shape() {
        return Err(shape_err(
            "upper_sample",
            "g must be n x m and d must be m x n",
        ));
    }
    require(
        satisfies_unchecked(a, g, class),
        format!("g is not a {class}-inverse of a"),
    )?;
    let ag = a * g;
    let ga = g * a;
    let one_ag = &ag.identity_like_rows() - &ag;
    let one_ga = &ga.identity_like_rows() - &ga;
    Ok(a + &(&one_ag * d * &one_ga))
}

/// Block data of `b` above `a`: `b4 = (1-p) b (1-q)` and a `u` with the
/// off-diagonal block equal to `b4 u` (left, `u ∈ Rq`) or `u b4` (right,
/// `u ∈ pR`), where `p = a h`, `q = h a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpperStructure {
    pub b4: Mat,
    pub u: Mat,
}

/// Extracts the block form of `b` relative to `h`, failing with the first
/// block equality that does not hold.
///
/// Left: `b = [[a, 0], [b4 u, b4]]`. Right: `b = [[a, u b4], [0, b4]]`.
pub fn upper_structure(a: &Mat, b: &Mat, h: &Mat, side: Side) -> Result<UpperStructure> {
    check_pair(a, b)?;
    let class = side_class(side);
    if h.shape() != (a.cols(), a.rows()) {
        return Err(shape_err("upper_structure", "h must be n x m"));
    }
    require(
        satisfies_unchecked(a, h, class),
        format!("h is not a {class}-inverse of a"),
    )?;
    let ring = a.ring();
    let (m, n) = a.shape();
    let p = a * h;
    let q = h * a;
    let one_p = &p.identity_like_rows() - &p;
    let one_q = &q.identity_like_rows() - &q;
    let block = |l: &Mat, r: &Mat| l * b * r;
    let violated = |what: &str| Err(Error::Precondition(format!("block equality {what} fails")));

    if block(&p, &q) != *a {
        return violated("pbq = a");
    }
    let b4 = block(&one_p, &one_q);
    let minus_one = ring.from_int(-1);
    let (shape, cons) = match side {
        Side::Left => {
            if !block(&p, &one_q).is_zero() {
                return violated("pb(1-q) = 0");
            }
            // u - u q = 0, b4 u = (1-p) b q
            let cons = vec![
                Constraint::new(Mat::zeros(ring, n, n))
                    .plus(Mat::identity(ring, n), Mat::identity(ring, n))
                    .plus(Mat::identity(ring, n).scale(&minus_one), q.clone()),
                Constraint::new(block(&one_p, &q)).plus(b4.clone(), Mat::identity(ring, n)),
            ];
            ((n, n), cons)
        }
        Side::Right => {
            if !block(&one_p, &q).is_zero() {
                return violated("(1-p)bq = 0");
            }
            // u - p u = 0, u b4 = p b (1-q)
            let cons = vec![
                Constraint::new(Mat::zeros(ring, m, m))
                    .plus(Mat::identity(ring, m), Mat::identity(ring, m))
                    .plus(p.scale(&minus_one), Mat::identity(ring, m)),
                Constraint::new(block(&p, &one_q)).plus(Mat::identity(ring, m), b4.clone()),
            ];
            ((m, m), cons)
        }
    };
    let set = solve_affine(ring, shape, &cons)?;
    let Some(u) = set.particular().cloned() else {
        return violated(match side {
            Side::Left => "(1-p)bq = b4 u with u in Rq",
            Side::Right => "pb(1-q) = u b4 with u in pR",
        });
    };
    let off = match side {
        Side::Left => &b4 * &u,
        Side::Right => &u * &b4,
    };
    if a + &off + &b4 != *b {
        return Err(Error::Invariant(format!(
            "block reassembly of b={b} failed"
        )));
    }
    Ok(UpperStructure { b4, u })
}

/// Simultaneous block decomposition of `a` and `b` from `h ∈ b{1,2,3}`
/// (left) or `h ∈ b{1,2,4}` (right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleDecomposition {
    pub side: Side,
    pub p1: Mat,
    pub p2: Mat,
    pub p3: Mat,
    pub q1: Mat,
    pub q2: Mat,
    pub q3: Mat,
    /// `h a h`, the `(p1, q1)`-inverse of `a`.
    pub a_inv: Mat,
    /// `h - h a h`, the `(p2, q2)`-inverse of `b - a`.
    pub bma_inv: Mat,
}

fn decomposition_identities(prefix: &str, parts: [&Mat; 3], out: &mut Checks) {
    let n = parts[0].rows();
    let ring = parts[0].ring();
    for (i, e) in parts.iter().enumerate() {
        out.push((
            format!("{prefix}{0}^2 = {prefix}{0}", i + 1),
            e.is_idempotent(),
        ));
    }
    for (i, e) in parts.iter().enumerate() {
        for (j, f) in parts.iter().enumerate() {
            if i != j {
                out.push((
                    format!("{prefix}{}{prefix}{} = 0", i + 1, j + 1),
                    (*e * *f).is_zero(),
                ));
            }
        }
    }
    let sum = parts[0] + parts[1] + parts[2];
    out.push((
        format!("{prefix}1+{prefix}2+{prefix}3 = 1"),
        sum == Mat::identity(ring, n),
    ));
}

impl TripleDecomposition {
    pub fn p_decomposition(&self) -> IdempotentDecomposition {
        IdempotentDecomposition::new(
            vec![self.p1.clone(), self.p2.clone(), self.p3.clone()],
            self.side == Side::Left,
        )
    }

    pub fn q_decomposition(&self) -> IdempotentDecomposition {
        IdempotentDecomposition::new(
            vec![self.q1.clone(), self.q2.clone(), self.q3.clone()],
            self.side == Side::Right,
        )
    }

    /// Every identity of the decomposition: the 9 + 9 idempotent identities
    /// and the two sums, self-adjointness of the orthogonal side, the block
    /// forms of `a` and `b`, and the four `(p, q)`-inverse equations.
    pub fn checks(&self, a: &Mat, b: &Mat) -> Checks {
        let mut out = Vec::new();
        decomposition_identities("p", [&self.p1, &self.p2, &self.p3], &mut out);
        decomposition_identities("q", [&self.q1, &self.q2, &self.q3], &mut out);
        match self.side {
            Side::Left => {
                for (i, p) in [&self.p1, &self.p2, &self.p3].iter().enumerate() {
                    out.push((format!("p{}* = p{}", i + 1, i + 1), p.is_self_adjoint()));
                }
            }
            Side::Right => {
                for (i, q) in [&self.q1, &self.q2, &self.q3].iter().enumerate() {
                    out.push((format!("q{}* = q{}", i + 1, i + 1), q.is_self_adjoint()));
                }
            }
        }
        let bma = b - a;
        out.push(("a = p1 a q1".into(), *a == &self.p1 * a * &self.q1));
        out.push((
            "b-a = p2 (b-a) q2".into(),
            bma == &self.p2 * &bma * &self.q2,
        ));
        let block_form = match blocks(
            b,
            &self.p_decomposition_unflagged(),
            &self.q_decomposition_unflagged(),
        ) {
            Ok(view) => (0..3).all(|i| {
                (0..3).all(|j| {
                    let expected = match (i, j) {
                        (0, 0) => a.clone(),
                        (1, 1) => bma.clone(),
                        _ => Mat::zeros(a.ring(), a.rows(), a.cols()),
                    };
                    view.blocks[i][j] == expected
                })
            }),
            Err(_) => false,
        };
        out.push(("b = diag(a, b-a, 0)".into(), block_form));
        out.push(("a a_inv = p1".into(), a * &self.a_inv == self.p1));
        out.push(("a_inv a = q1".into(), &self.a_inv * a == self.q1));
        out.push(("(b-a) bma_inv = p2".into(), &bma * &self.bma_inv == self.p2));
        out.push(("bma_inv (b-a) = q2".into(), &self.bma_inv * &bma == self.q2));
        out
    }

    fn p_decomposition_unflagged(&self) -> IdempotentDecomposition {
        IdempotentDecomposition::new(
            vec![self.p1.clone(), self.p2.clone(), self.p3.clone()],
            false,
        )
    }

    fn q_decomposition_unflagged(&self) -> IdempotentDecomposition {
        IdempotentDecomposition::new(
            vec![self.q1.clone(), self.q2.clone(), self.q3.clone()],
            false,
        )
    }
}

pub fn simultaneous_decomposition(
    a: &Mat,
    b: &Mat,
    h: &Mat,
    side: Side,
) -> Result<TripleDecomposition> {
    check_pair(a, b)?;
    let class = side_class(side);
    if h.shape() != (b.cols(), b.rows()) {
        return Err(shape_err("simultaneous_decomposition", "h must be n x m"));
    }
    require(
        satisfies_unchecked(b, h, class),
        format!("h is not a {class}-inverse of b"),
    )?;
    let rel = side_relation(side);
    let verdict = decide(rel, a, b, Route::Characterization)?;
    if let Some(f) = verdict.failure {
        return Err(Error::Precondition(format!("{rel} fails: {f}")));
    }
    let im = a.identity_like_rows();
    let in_ = a.identity_like_cols();
    let bma = b - a;
    let hah = h * a * h;
    let dec = TripleDecomposition {
        side,
        p1: a * h,
        p2: &bma * h,
        p3: &im - &(b * h),
        q1: h * a,
        q2: h * &bma,
        q3: &in_ - &(h * b),
        bma_inv: h - &hah,
        a_inv: hah,
    };
    let checks = dec.checks(a, b);
    if !all_pass(&checks) {
        return Err(Error::Invariant(format!(
            "decomposition of a={a}, b={b}, h={h} fails: {}",
            failed_names(&checks)
        )));
    }
    Ok(dec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InclusionMode {
    /// Seeded samples from `b{1,3}`: a `false` is certain, a `true` is
    /// probabilistic.
    Randomized { samples: usize, seed: u64 },
    /// The particular solution and one point per basis direction of the
    /// affine set `b{1,3}`, together with the two parameter choices
    /// `(x3, x4) = (0, 0)` and `((1-q)p, (1-q)(1-p))`. Since membership in
    /// `a{1,3}` is affine, this decides the inclusion exactly.
    Critical,
    /// Delegates to the order relation.
    Theorem,
    /// Every matrix of the right shape over a finite field.
    Exhaustive { cap: u128 },
}

impl InclusionMode {
    pub fn parse(s: &str, seed: u64, samples: usize, cap: u128) -> Result<Self> {
        Ok(match s {
            "randomized" => InclusionMode::Randomized { samples, seed },
            "critical" => InclusionMode::Critical,
            "theorem" => InclusionMode::Theorem,
            "exhaustive" => InclusionMode::Exhaustive { cap },
            _ => return Err(Error::Precondition(format!("unknown inclusion mode {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionVerdict {
    pub included: bool,
    /// A member of `b{1,3}` outside `a{1,3}`, when one was found.
    pub counterexample: Option<Mat>,
}

/// Decides `b{1,3} ⊆ a{1,3}` by `mode`.
pub fn inclusion_13(a: &Mat, b: &Mat, mode: InclusionMode) -> Result<InclusionVerdict> {
    check_pair(a, b)?;
    let ls = ClassSpec::LEAST_SQUARES;
    let set_b = linear_solution_set(b, ls);
    require(!set_b.is_empty(), "b has no {1,3}-inverse")?;
    require(
        !linear_solution_set(a, ls).is_empty(),
        "a has no {1,3}-inverse",
    )?;
    let in_a = |x: &Mat| satisfies_unchecked(a, x, ls);
    let first_miss = |cands: &mut dyn Iterator<Item = Mat>| -> InclusionVerdict {
        match Iterator::find(&mut &mut *cands, |x| !in_a(x)) {
            Some(x) => InclusionVerdict {
                included: false,
                counterexample: Some(x),
            },
            None => InclusionVerdict {
                included: true,
                counterexample: None,
            },
        }
    };
    Ok(match mode {
        InclusionMode::Randomized { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut it = (0..samples).map(|_| set_b.sample(&mut rng, 4).expect("nonempty"));
            first_miss(&mut it)
        }
        InclusionMode::Critical => {
            let part = set_b.particular().expect("nonempty").clone();
            let h = squeeze(b, &part);
            let p = b * &h;
            let q = &h * b;
            let one_p = &p.identity_like_rows() - &p;
            let one_q = &q.identity_like_rows() - &q;
            // For rectangular a the proof's x3 = (1-q)p, x4 = (1-q)(1-p)
            // need a link from the m-side to the n-side; the padded identity
            // plays that role and is the identity in the square case.
            let ring = b.ring();
            let link = Mat::from_fn(ring, b.cols(), b.rows(), |i, j| {
                if i == j {
                    ring.one()
                } else {
                    ring.zero()
                }
            });
            let x3 = &(&one_q * &link) * &p;
            let x4 = &(&one_q * &link) * &one_p;
            let proof_choice = &h + &(&x3 + &x4);
            let mut cands = vec![h, proof_choice, part.clone()];
            cands.extend(set_b.basis().iter().map(|e| &part + e));
            first_miss(&mut cands.into_iter())
        }
        InclusionMode::Theorem => InclusionVerdict {
            included: holds(OrderRelation::LeftStar, a, b, Route::Characterization)?,
            counterexample: None,
        },
        InclusionMode::Exhaustive { cap } => {
            let p = a.ring().modulus().ok_or_else(|| {
                Error::Precondition("exhaustive mode needs a finite field".into())
            })?;
            let cells = (a.rows() * a.cols()) as u32;
            let count = (p as u128).checked_pow(cells).unwrap_or(u128::MAX);
            if count > cap {
                return Err(Error::CapExceeded {
                    requested: count,
                    cap,
                });
            }
            let (r, c) = (a.cols(), a.rows());
            let ring = a.ring();
            let mut it = (0..count).filter_map(|mut k| {
                let x = Mat::from_fn(ring, r, c, |_, _| {
                    let d = (k % p as u128) as i64;
                    k /= p as u128;
                    ring.from_int(d)
                });
                satisfies_unchecked(b, &x, ls).then_some(x)
            });
            first_miss(&mut it)
        }
    })
}

/// `b{1,4} ⊆ a{1,4}`, via `x ∈ b{1,4} ⟺ x* ∈ b*{1,3}`.
pub fn inclusion_14(a: &Mat, b: &Mat, mode: InclusionMode) -> Result<InclusionVerdict> {
    let v = inclusion_13(&a.adjoint(), &b.adjoint(), mode)?;
    Ok(InclusionVerdict {
        included: v.included,
        counterexample: v.counterexample.map(|x| x.adjoint()),
    })
}

/// The (T)-condition on sampled `h ∈ b{1,2,3}`: `h a h ∈ a{1,2,3}`.
pub fn t_condition(a: &Mat, b: &Mat, samples: usize, seed: u64) -> Result<bool> {
    t_condition_side(a, b, samples, seed, Side::Left)
}

/// Right-hand (T)-condition: `h a h ∈ a{1,2,4}` for `h ∈ b{1,2,4}`.
pub fn t_condition_right(a: &Mat, b: &Mat, samples: usize, seed: u64) -> Result<bool> {
    t_condition_side(a, b, samples, seed, Side::Right)
}

fn t_condition_side(a: &Mat, b: &Mat, samples: usize, seed: u64, side: Side) -> Result<bool> {
    check_pair(a, b)?;
    let class = side_class(side);
    let support = OrderRelation::existence_class(&side_relation(side));
    require(
        solve_class(a, support)?.is_some(),
        format!("a has no {support}-inverse"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples.max(1) {
        let h = sample_class(b, class, &mut rng, 4)?
            .ok_or_else(|| Error::Precondition(format!("b has no {support}-inverse")))?;
        if !satisfies_unchecked(a, &squeeze(a, &h), class) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `a` has an inverse in `spec`.
pub fn has_class(a: &Mat, spec: ClassSpec) -> bool {
    !linear_solution_set(a, spec).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::RingSpec;

    const Q: RingSpec = RingSpec::GaussianRational;

    fn m(rows: &[&[i64]]) -> Mat {
        Mat::from_ints(Q, rows)
    }

    fn e() -> Mat {
        m(&[&[1, 0], &[0, 0]])
    }

    fn f() -> Mat {
        m(&[&[1, 0], &[1, 1]])
    }

    fn both(rel: OrderRelation, a: &Mat, b: &Mat) -> bool {
        let c = holds(rel, a, b, Route::Characterization).unwrap();
        let d = holds(rel, a, b, Route::Feasibility).unwrap();
        assert_eq!(c, d, "{rel} routes disagree on a={a} b={b}");
        c
    }

    #[test]
    fn reflexivity() {
        let a = m(&[&[1, 2], &[3, 4], &[0, 1]]);
        for rel in OrderRelation::ALL {
            assert!(both(rel, &a, &a), "{rel}");
        }
    }

    #[test]
    fn e_pair_examples() {
        assert!(both(OrderRelation::LeftStar, &e(), &f()));
        assert!(both(OrderRelation::OneMp, &e(), &f()));
        assert!(!both(OrderRelation::RightStar, &e(), &f()));
        assert!(!both(OrderRelation::MpOne, &e(), &f()));
        assert!(!both(OrderRelation::Star, &e(), &f()));
        assert!(both(OrderRelation::Minus, &e(), &f()));
        let v = decide(
            OrderRelation::RightStar,
            &e(),
            &f(),
            Route::Characterization,
        )
        .unwrap();
        assert_eq!(v.failure, Some(Failure::GramEquality { side: Side::Right }));
    }

    #[test]
    fn failure_diagnostics() {
        let a = m(&[&[1, 0], &[1, 0]]);
        let b = m(&[&[1, 0], &[0, 0]]);
        let v = decide(OrderRelation::LeftStar, &a, &b, Route::Characterization).unwrap();
        assert!(!v.holds);
        let v = decide(
            OrderRelation::LeftStar,
            &e(),
            &(&e() + &e()),
            Route::Characterization,
        )
        .unwrap();
        assert_eq!(v.failure, Some(Failure::GramEquality { side: Side::Left }));
        // Gram equality holds but the range is not contained.
        let a = m(&[&[0, 0], &[1, 0]]);
        let b = m(&[&[1, 0], &[1, 0]]);
        let v = decide(OrderRelation::LeftStar, &a, &b, Route::Characterization).unwrap();
        assert!(!v.holds);
        let v = decide(
            OrderRelation::Minus,
            &e(),
            &m(&[&[0, 0], &[0, 1]]),
            Route::Characterization,
        )
        .unwrap();
        assert_eq!(v.failure, Some(Failure::RankSubtractivity));
        let v = decide(
            OrderRelation::Minus,
            &e(),
            &m(&[&[0, 0], &[0, 1]]),
            Route::Feasibility,
        )
        .unwrap();
        assert_eq!(v.failure, Some(Failure::Infeasible));
        assert!(decide(
            OrderRelation::Minus,
            &e(),
            &Mat::zeros(Q, 3, 2),
            Route::Feasibility
        )
        .is_err());
    }

    #[test]
    fn class_empty_is_false_with_diagnostic() {
        let z2 = RingSpec::PrimeField(2);
        let ones = Mat::from_ints(z2, &[&[1, 1], &[1, 1]]);
        let v = decide(OrderRelation::OneMp, &ones, &ones, Route::Feasibility).unwrap();
        assert_eq!(
            v.failure,
            Some(Failure::ClassEmpty(ClassSpec::LEAST_SQUARES))
        );
        let v = decide(OrderRelation::OneMp, &ones, &ones, Route::Characterization).unwrap();
        assert_eq!(
            v.failure,
            Some(Failure::ClassEmpty(ClassSpec::LEAST_SQUARES))
        );
    }

    #[test]
    fn zero_is_below_everything() {
        let b = m(&[&[3, 1], &[4, 1]]);
        for rel in OrderRelation::ALL {
            assert!(both(rel, &Mat::zeros(Q, 2, 2), &b));
        }
    }

    #[test]
    fn left_star_witness_examples() {
        let w = left_star_witness(&e(), &e()).unwrap();
        assert_eq!(w.g, e());
        assert_eq!(w.p, e());
        assert_eq!(w.q, e());

        let w = left_star_witness(&e(), &f()).unwrap();
        assert_eq!(w.g, m(&[&[1, 0], &[-1, 0]]));
        assert_eq!(w.p, e());
        assert_eq!(w.q, m(&[&[1, 0], &[-1, 0]]));

        let z = Mat::zeros(Q, 2, 2);
        let w = left_star_witness(&z, &f()).unwrap();
        assert!(w.g.is_zero() && w.p.is_zero() && w.q.is_zero());

        assert!(left_star_witness(&f(), &e()).is_err());
    }

    #[test]
    fn right_star_witness_by_transport() {
        let w = right_star_witness(&e().adjoint(), &f().adjoint()).unwrap();
        assert!(all_pass(&w.checks(
            OrderRelation::RightStar,
            &e(),
            &f().adjoint()
        )));
        assert!(right_star_witness(&e(), &f()).is_err());
    }

    #[test]
    fn generic_witnesses() {
        let w = witness(OrderRelation::Minus, &e(), &f()).unwrap();
        assert!(all_pass(&w.checks(OrderRelation::Minus, &e(), &f())));
        let b = m(&[&[1, 0], &[0, 5]]);
        let w = witness(OrderRelation::Star, &e(), &b).unwrap();
        assert_eq!(w.g, e());
        assert!(witness(OrderRelation::Star, &e(), &f()).is_err());
    }

    #[test]
    fn upper_sample_examples() {
        let d0 = Mat::zeros(Q, 2, 2);
        assert_eq!(upper_sample(&e(), &e(), &d0, Side::Left).unwrap(), e());
        let d = m(&[&[0, 0], &[0, 5]]);
        let b = upper_sample(&e(), &e(), &d, Side::Left).unwrap();
        assert_eq!(b, m(&[&[1, 0], &[0, 5]]));
        assert!(both(OrderRelation::LeftStar, &e(), &b));
        assert_eq!(upper_sample(&e(), &e(), &e(), Side::Left).unwrap(), e());
        assert!(upper_sample(&e(), &Mat::identity(Q, 2), &d, Side::Left).is_err());
    }

    #[test]
    fn upper_structure_examples() {
        let s = upper_structure(&e(), &e(), &e(), Side::Left).unwrap();
        assert!(s.b4.is_zero() && s.u.is_zero());

        let s = upper_structure(&e(), &f(), &e(), Side::Left).unwrap();
        assert_eq!(s.b4, m(&[&[0, 0], &[0, 1]]));
        assert_eq!(s.u, m(&[&[0, 0], &[1, 0]]));
        assert_eq!(&s.b4 * &s.u, m(&[&[0, 0], &[1, 0]]));

        let s = upper_structure(&e(), &m(&[&[1, 0], &[0, 5]]), &e(), Side::Left).unwrap();
        assert_eq!(s.b4, m(&[&[0, 0], &[0, 5]]));
        assert!(s.u.is_zero());

        let err = upper_structure(&e(), &f().adjoint(), &e(), Side::Left).unwrap_err();
        assert!(err.to_string().contains("pb(1-q)"), "{err}");
        let s = upper_structure(&e(), &f().adjoint(), &e(), Side::Right).unwrap();
        assert_eq!(&s.u * &s.b4, m(&[&[0, 1], &[0, 0]]));
    }

    #[test]
    fn decomposition_examples() {
        let d = simultaneous_decomposition(&e(), &e(), &Mat::identity(Q, 2), Side::Left);
        // h must be a {1,2,3}-inverse of b = e; the identity is not.
        assert!(d.is_err());
        let d = simultaneous_decomposition(&e(), &e(), &e(), Side::Left).unwrap();
        assert!(d.p2.is_zero() && d.q2.is_zero());
        assert_eq!(d.p1, e());
        assert_eq!(d.p3, m(&[&[0, 0], &[0, 1]]));

        let b_inv = m(&[&[1, 0], &[-1, 1]]);
        let d = simultaneous_decomposition(&e(), &f(), &b_inv, Side::Left).unwrap();
        assert_eq!(d.p1, e());
        assert_eq!(d.p2, m(&[&[0, 0], &[0, 1]]));
        assert!(d.p3.is_zero());
        assert_eq!(d.q1, m(&[&[1, 0], &[-1, 0]]));
        assert_eq!(d.q2, m(&[&[0, 0], &[1, 1]]));
        assert!(d.q3.is_zero());
        assert_eq!(d.a_inv, m(&[&[1, 0], &[-1, 0]]));
        assert!(all_pass(&d.checks(&e(), &f())));
        assert!(d.p_decomposition().validate().is_valid());
        assert!(d.q_decomposition().validate().is_valid());
    }

    #[test]
    fn inclusion_examples() {
        let modes = [
            InclusionMode::Randomized {
                samples: 8,
                seed: 3,
            },
            InclusionMode::Critical,
            InclusionMode::Theorem,
        ];
        for mode in modes {
            assert!(inclusion_13(&f(), &f(), mode).unwrap().included);
            assert!(inclusion_13(&e(), &f(), mode).unwrap().included);
            let v = inclusion_13(&e(), &m(&[&[0, 1], &[1, 0]]), mode).unwrap();
            assert!(!v.included);
        }
        let swap = m(&[&[0, 1], &[1, 0]]);
        let v = inclusion_13(&e(), &swap, InclusionMode::Critical).unwrap();
        assert_eq!(v.counterexample, Some(swap.clone()));
        assert!(inclusion_13(&e(), &f(), InclusionMode::Exhaustive { cap: 1 << 20 }).is_err());

        let z3 = RingSpec::PrimeField(3);
        let e3 = Mat::from_ints(z3, &[&[1, 0], &[0, 0]]);
        let f3 = Mat::from_ints(z3, &[&[1, 0], &[1, 1]]);
        let v = inclusion_13(&e3, &f3, InclusionMode::Exhaustive { cap: 1 << 20 }).unwrap();
        assert!(v.included);
        assert!(inclusion_13(&e3, &f3, InclusionMode::Exhaustive { cap: 10 }).is_err());
        let v = inclusion_14(&e3, &f3, InclusionMode::Exhaustive { cap: 1 << 20 }).unwrap();
        assert!(!v.included);
        assert!(
            !inclusion_14(&e3, &f3, InclusionMode::Critical)
                .unwrap()
                .included
        );
    }

    #[test]
    fn t_condition_examples() {
        assert!(t_condition(&f(), &f(), 5, 1).unwrap());
        assert!(t_condition(&e(), &f(), 5, 1).unwrap());
        let b = upper_sample(&e(), &e(), &m(&[&[2, 7], &[3, 4]]), Side::Left).unwrap();
        assert!(t_condition(&e(), &b, 10, 9).unwrap());
        assert!(!t_condition(&e(), &m(&[&[0, 1], &[1, 0]]), 3, 1).unwrap());
    }

    #[test]
    fn relation_names_round_trip() {
        for rel in OrderRelation::ALL {
            assert_eq!(rel.name().parse::<OrderRelation>().unwrap(), rel);
            assert_eq!(rel.dual().dual(), rel);
        }
        assert!("diamond".parse::<OrderRelation>().is_err());
    }
}
