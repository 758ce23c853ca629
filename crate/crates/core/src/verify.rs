//! Seeded property harness behind `star-order-lab verify`.
//!
//! Each property runs `trials` independent trials. Trial `t` of property
//! `name` in suite `s` over ring `r` draws from its own ChaCha stream keyed
//! by `(seed, "s/r/name", t)`, so adding a suite or a property never changes
//! the samples of another, and trials can run in parallel while the
//! transcript stays ordered by trial index.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affine::{solve_affine, Constraint};
use crate::blocks::{pq_inverse, Side};
use crate::error::{Error, Result};
use crate::inverses::{
    construct_123, from_gram_left, g_inverse_from_params, linear_solution_set, moore_penrose,
    mp_one, one_mp, params_of, reflexive_from_params, sample_class, satisfies, solve_class,
    squeeze, ClassSpec,
};
use crate::lab::{configured_cap, FiniteRingUniverse};
use crate::matrix::Mat;
use crate::orders::{
    all_pass, decide, has_class, holds, inclusion_13, inclusion_14, left_star_witness,
    right_star_witness, simultaneous_decomposition, t_condition, two_gram, upper_sample,
    upper_structure, InclusionMode, OrderRelation, Route,
};
use crate::scalar::RingSpec;

const ENTRY_BOUND: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Inverses,
    Orders,
    Decompositions,
    FiniteOracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Inverses,
        Suite::Orders,
        Suite::Decompositions,
        Suite::FiniteOracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Inverses => "inverses",
            Suite::Orders => "orders",
            Suite::Decompositions => "decompositions",
            Suite::FiniteOracle => "finite-oracle",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: usize,
    /// Largest row or column count of sampled matrices, at most 6.
    pub max_dim: usize,
    pub rings: Vec<RingSpec>,
    pub suites: Vec<Suite>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 1,
            trials: 200,
            max_dim: 4,
            rings: vec![
                RingSpec::GaussianRational,
                RingSpec::PrimeField(2),
                RingSpec::PrimeField(3),
                RingSpec::PrimeField(5),
            ],
            suites: Suite::ALL.to_vec(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.max_dim) {
            return Err(Error::Precondition(format!(
                "max_dim must be between 1 and 6, got {}",
                self.max_dim
            )));
        }
        if self.rings.is_empty() || self.suites.is_empty() {
            return Err(Error::Precondition(
                "need at least one ring and one suite".into(),
            ));
        }
        for r in &self.rings {
            if let RingSpec::PrimeField(p) = r {
                RingSpec::prime_field(*p)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyResult {
    pub suite: Suite,
    pub ring: RingSpec,
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Lowest failing trial index and its description.
    pub first_failure: Option<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub config: VerifyConfig,
    pub results: Vec<PropertyResult>,
}

impl Transcript {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.failed == 0)
    }

    pub fn find(&self, suite: Suite, ring: RingSpec, name: &str) -> Option<&PropertyResult> {
        self.results
            .iter()
            .find(|r| r.suite == suite && r.ring == ring && r.name == name)
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        let rings: Vec<String> = c.rings.iter().map(|r| r.to_string()).collect();
        let suites: Vec<&str> = c.suites.iter().map(|s| s.name()).collect();
        writeln!(
            f,
            "verify seed={} trials={} max_dim={} rings={} suites={}",
            c.seed,
            c.trials,
            c.max_dim,
            rings.join(","),
            suites.join(",")
        )?;
        let (mut pass, mut fail, mut skip) = (0, 0, 0);
        for r in &self.results {
            write!(
                f,
                "[{}] {} {}: {} passed, {} failed",
                r.suite, r.ring, r.name, r.passed, r.failed
            )?;
            if r.skipped > 0 {
                write!(f, ", {} skipped", r.skipped)?;
            }
            writeln!(f)?;
            if let Some((t, msg)) = &r.first_failure {
                writeln!(f, "  first failure at trial {t}: {msg}")?;
            }
            pass += r.passed;
            fail += r.failed;
            skip += r.skipped;
        }
        writeln!(f, "total: {pass} passed, {fail} failed, {skip} skipped")
    }
}

/// A failed trial, carrying its counterexample.
struct Fail(String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(e.to_string())
    }
}

enum Step {
    Pass,
    Skip,
}

type Trial = std::result::Result<Step, Fail>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), Fail> {
    if cond {
        Ok(())
    } else {
        Err(Fail(msg()))
    }
}

fn stream_key(name: &str) -> u64 {
    // FNV-1a; the key must not depend on the standard library's hasher.
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn trial_rng(seed: u64, stream: &str, trial: usize) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(stream_key(stream));
    rng
}

struct Ctx {
    ring: RingSpec,
    max_dim: usize,
    rng: ChaCha8Rng,
}

impl Ctx {
    fn shape(&mut self) -> (usize, usize) {
        (
            self.rng.gen_range(1..=self.max_dim),
            self.rng.gen_range(1..=self.max_dim),
        )
    }

    /// A matrix of the given shape with rank drawn uniformly from
    /// `0..=min(rows, cols)` (as an upper bound over finite fields).
    fn mixed_rank(&mut self, rows: usize, cols: usize) -> Mat {
        let r = self.rng.gen_range(0..=rows.min(cols));
        Mat::random_low_rank(rows, cols, r, self.ring, &mut self.rng, ENTRY_BOUND)
    }

    fn matrix(&mut self) -> Mat {
        let (m, n) = self.shape();
        self.mixed_rank(m, n)
    }

    fn full(&mut self, rows: usize, cols: usize) -> Mat {
        Mat::random(rows, cols, self.ring, &mut self.rng, ENTRY_BOUND)
    }

    fn sample(&mut self, a: &Mat, spec: ClassSpec) -> Result<Option<Mat>> {
        sample_class(a, spec, &mut self.rng, ENTRY_BOUND)
    }

    /// A pair `(a, b)` whose kind cycles with the trial index: left-star
    /// upper pair, right-star upper pair, star upper pair, unrelated pair.
    fn pair(&mut self, trial: usize) -> Result<(Mat, Mat)> {
        let a = self.matrix();
        let (m, n) = a.shape();
        let d = self.full(m, n);
        let spec = match trial % 4 {
            0 => ClassSpec::ONE_TWO_THREE,
            1 => ClassSpec::ONE_TWO_FOUR,
            2 => ClassSpec::MOORE_PENROSE,
            _ => {
                let b = if self.rng.gen_bool(0.5) {
                    self.mixed_rank(m, n)
                } else {
                    d
                };
                return Ok((a, b));
            }
        };
        let side = if spec == ClassSpec::ONE_TWO_FOUR {
            Side::Right
        } else {
            Side::Left
        };
        match self.sample(&a, spec)? {
            Some(g) => {
                let b = upper_sample(&a, &g, &d, side)?;
                Ok((a, b))
            }
            None => Ok((a, d)),
        }
    }

    /// A left-star pair with `a ∈ R^{(1,3)}`, or `None` when the sampled
    /// `a` has no such inverse.
    fn left_pair(&mut self, side: Side) -> Result<Option<(Mat, Mat)>> {
        let a = self.matrix();
        let d = self.full(a.rows(), a.cols());
        let spec = match side {
            Side::Left => ClassSpec::ONE_TWO_THREE,
            Side::Right => ClassSpec::ONE_TWO_FOUR,
        };
        match self.sample(&a, spec)? {
            Some(g) => Ok(Some((a.clone(), upper_sample(&a, &g, &d, side)?))),
            None => Ok(None),
        }
    }
}

type PropertyFn = fn(&mut Ctx, usize) -> Trial;

struct Property {
    name: &'static str,
    run: PropertyFn,
    /// Only meaningful over `Q(i)` (norms).
    gaussian_only: bool,
}

const fn prop(name: &'static str, run: PropertyFn) -> Property {
    Property {
        name,
        run,
        gaussian_only: false,
    }
}

fn inverse_properties() -> Vec<Property> {
    vec![
        prop("class-construction", class_construction),
        prop("penrose", penrose),
        prop("one-mp", one_mp_identities),
        prop("characterizations", characterizations),
        prop("parametrization", parametrization),
        prop("completion", completion),
        Property {
            name: "least-squares",
            run: least_squares,
            gaussian_only: true,
        },
    ]
}

fn order_properties() -> Vec<Property> {
    vec![
        prop("route-agreement", route_agreement),
        prop("one-mp-vs-left-star", one_mp_vs_left_star),
        prop("implications", implications),
        prop("difference-law", difference_law),
        prop("duality", duality),
        prop("star-conjunction", star_conjunction),
        prop("gram-mp", gram_mp),
        prop("witness", witness_soundness),
        prop("inclusion", inclusion_agreement),
        prop("partial-order", partial_order),
    ]
}

fn decomposition_properties() -> Vec<Property> {
    vec![
        prop("triple-left", triple_left),
        prop("triple-right", triple_right),
        prop("upper-structure", upper_structure_prop),
        prop("converse", converse),
    ]
}

pub fn run(config: &VerifyConfig) -> Result<Transcript> {
    config.validate()?;
    let mut results = Vec::new();
    for &suite in &config.suites {
        for &ring in &config.rings {
            let props = match suite {
                Suite::Inverses => inverse_properties(),
                Suite::Orders => order_properties(),
                Suite::Decompositions => decomposition_properties(),
                Suite::FiniteOracle => {
                    results.extend(finite_oracle(ring));
                    continue;
                }
            };
            for p in props {
                if p.gaussian_only && ring.is_finite() {
                    continue;
                }
                results.push(run_property(config, suite, ring, &p));
            }
        }
    }
    Ok(Transcript {
        config: config.clone(),
        results,
    })
}

fn run_property(
    config: &VerifyConfig,
    suite: Suite,
    ring: RingSpec,
    p: &Property,
) -> PropertyResult {
    let stream = format!("{suite}/{ring}/{}", p.name);
    let outcomes: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut ctx = Ctx {
                ring,
                max_dim: config.max_dim,
                rng: trial_rng(config.seed, &stream, t),
            };
            (p.run)(&mut ctx, t)
        })
        .collect();
    let mut res = PropertyResult {
        suite,
        ring,
        name: p.name,
        passed: 0,
        failed: 0,
        skipped: 0,
        first_failure: None,
    };
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(Step::Pass) => res.passed += 1,
            Ok(Step::Skip) => res.skipped += 1,
            Err(Fail(msg)) => {
                res.failed += 1;
                if res.first_failure.is_none() {
                    res.first_failure = Some((t, msg));
                }
            }
        }
    }
    res
}

// ---- inverses ----

fn class_construction(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    for spec in ClassSpec::all() {
        match solve_class(&a, spec)? {
            Some(x) => ensure(satisfies(&a, &x, spec)?, || {
                format!("a={a}: {x} not in a{spec}")
            })?,
            None => ensure(
                spec.contains(1) && linear_solution_set(&a, spec).is_empty(),
                || format!("a={a}: a{spec} reported empty"),
            )?,
        }
        if let Some(x) = ctx.sample(&a, spec)? {
            ensure(satisfies(&a, &x, spec)?, || {
                format!("a={a}: sample {x} not in a{spec}")
            })?;
        }
    }
    Ok(Step::Pass)
}

fn penrose(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    match moore_penrose(&a)? {
        Some(x) => {
            ensure(satisfies(&a, &x, ClassSpec::MOORE_PENROSE)?, || {
                format!("a={a}: a†={x}")
            })?;
            let again = solve_class(&a, ClassSpec::MOORE_PENROSE)?;
            ensure(again.as_ref() == Some(&x), || {
                format!("a={a}: two different a†")
            })?;
            Ok(Step::Pass)
        }
        None => {
            ensure(a.ring().is_finite(), || {
                format!("a={a} over Q(i) has no a†")
            })?;
            Ok(Step::Skip)
        }
    }
}

fn one_mp_identities(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    let Some(mp) = moore_penrose(&a)? else {
        return Ok(Step::Skip);
    };
    let am = ctx.sample(&a, ClassSpec::G)?.expect("fields are regular");
    let x = one_mp(&a, &am)?;
    ensure(&(&x * &a) * &x == x, || {
        format!("a={a}: 1MP {x} fails xax=x")
    })?;
    ensure(&a * &x == &a * &mp, || {
        format!("a={a}: 1MP {x} fails ax=aa†")
    })?;
    ensure(satisfies(&a, &x, ClassSpec::ONE_TWO_THREE)?, || {
        format!("a={a}: 1MP {x} not in a{{1,2,3}}")
    })?;
    let y = mp_one(&a, &am)?;
    ensure(&y * &a == &mp * &a, || {
        format!("a={a}: MP1 {y} fails xa=a†a")
    })?;
    ensure(satisfies(&a, &y, ClassSpec::ONE_TWO_FOUR)?, || {
        format!("a={a}: MP1 {y} not in a{{1,2,4}}")
    })?;
    let g = ctx
        .sample(&a, ClassSpec::ONE_TWO_THREE)?
        .expect("a† exists");
    ensure(g == &(&g * &a) * &mp, || {
        format!("a={a}: g={g} is not g a a†")
    })?;
    Ok(Step::Pass)
}

fn characterizations(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    let ring = a.ring();
    let Some(y) = ctx.sample(&a, ClassSpec::LEAST_SQUARES)? else {
        return Ok(Step::Skip);
    };
    let x = ctx.sample(&a, ClassSpec::G)?.expect("fields are regular");
    let xay = &(&x * &a) * &y;
    ensure(satisfies(&a, &xay, ClassSpec::ONE_TWO_THREE)?, || {
        format!("a={a}: x a y={xay} not in a{{1,2,3}}")
    })?;

    // Every g ∈ a{1,2,3} is reached by construct_123 for a solved w.
    let h = solve_class(&a, ClassSpec::ONE_TWO_THREE)?.expect("a{1,3} nonempty");
    let g = ctx
        .sample(&a, ClassSpec::ONE_TWO_THREE)?
        .expect("a{1,3} nonempty");
    let ha = &h * &a;
    let one_ha = &ha.identity_like_rows() - &ha;
    let w_set = solve_affine(
        ring,
        h.shape(),
        &[Constraint::new(&g - &h).plus(one_ha, &a * &h)],
    )?;
    let w = w_set
        .particular()
        .ok_or_else(|| Fail(format!("a={a}: no w reaches g={g}")))?;
    ensure(construct_123(&a, &h, w)? == g, || {
        format!("a={a}: construct_123 misses g={g}")
    })?;
    let w_rand = ctx.full(h.rows(), h.cols());
    let c = construct_123(&a, &h, &w_rand)?;
    ensure(satisfies(&a, &c, ClassSpec::ONE_TWO_THREE)?, || {
        format!("a={a}: construct_123 left the class")
    })?;

    // G a* for G ∈ (a*a){1} lands in a{1,2,3}, and reaches g.
    let gram = &a.adjoint() * &a;
    let gg = ctx
        .sample(&gram, ClassSpec::G)?
        .expect("fields are regular");
    let fg = from_gram_left(&a, &gg)?;
    ensure(satisfies(&a, &fg, ClassSpec::ONE_TWO_THREE)?, || {
        format!("a={a}: G a*={fg} not in a{{1,2,3}}")
    })?;
    let n = gram.rows();
    let mut cons = crate::inverses::penrose_constraints(&gram, ClassSpec::G);
    cons.push(Constraint::new(g.clone()).plus(Mat::identity(ring, n), a.adjoint()));
    let set = solve_affine(ring, (n, n), &cons)?;
    ensure(!set.is_empty(), || {
        format!("a={a}: g={g} is not G a* for any G ∈ (a*a){{1}}")
    })?;
    Ok(Step::Pass)
}

fn parametrization(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    let h = solve_class(&a, ClassSpec::REFLEXIVE)?.expect("fields are regular");
    let x = ctx.sample(&a, ClassSpec::G)?.expect("fields are regular");
    let params = params_of(&a, &h, &x)?;
    ensure(g_inverse_from_params(&a, &h, &params)? == x, || {
        format!("a={a}: params of {x} do not rebuild it")
    })?;
    let (p, q) = (&a * &h, &h * &a);
    let one_p = &p.identity_like_rows() - &p;
    let one_q = &q.identity_like_rows() - &q;
    let (r, c) = h.shape();
    let x2 = &(&q * &ctx.full(r, c)) * &one_p;
    let x3 = &(&one_q * &ctx.full(r, c)) * &p;
    let y = reflexive_from_params(&a, &h, &x2, &x3)?;
    ensure(satisfies(&a, &y, ClassSpec::REFLEXIVE)?, || {
        format!("a={a}: {y} not reflexive")
    })?;
    Ok(Step::Pass)
}

fn completion(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    let ring = a.ring();
    let Some(x) = ctx.sample(&a, ClassSpec::LEAST_SQUARES)? else {
        return Ok(Step::Skip);
    };
    let g = squeeze(&a, &x);
    ensure(
        satisfies(&a, &g, ClassSpec::ONE_TWO_THREE)? && &a * &g == &a * &x && &g * &a == &x * &a,
        || format!("a={a}: x={x} has no partner in a{{1,2,3}}"),
    )?;
    // Everything agreeing with g in both products lies in a{1,3}.
    let (m, n) = a.shape();
    let cons = [
        Constraint::new(&a * &g).plus(a.clone(), Mat::identity(ring, m)),
        Constraint::new(&g * &a).plus(Mat::identity(ring, n), a.clone()),
    ];
    let set = solve_affine(ring, g.shape(), &cons)?;
    let y = set
        .sample(&mut ctx.rng, ENTRY_BOUND)
        .expect("g itself solves");
    ensure(satisfies(&a, &y, ClassSpec::LEAST_SQUARES)?, || {
        format!("a={a}: {y} escapes a{{1,3}}")
    })?;
    Ok(Step::Pass)
}

fn least_squares(ctx: &mut Ctx, _t: usize) -> Trial {
    let a = ctx.matrix();
    let (m, n) = a.shape();
    let norm = |x: &Mat| x.norm_sqr().expect("Q(i)");
    let g = ctx
        .sample(&a, ClassSpec::LEAST_SQUARES)?
        .expect("Q(i) has all inverses");
    let b = ctx.full(m, 1);
    let best = norm(&(&(&a * &(&g * &b)) - &b));
    for _ in 0..20 {
        let x = ctx.full(n, 1);
        ensure(best <= norm(&(&(&a * &x) - &b)), || {
            format!("a={a}, b={b}: x={x} beats g b")
        })?;
    }
    let g = ctx
        .sample(&a, ClassSpec::MINIMUM_NORM)?
        .expect("Q(i) has all inverses");
    let b = &a * &ctx.full(n, 1);
    let gb = &g * &b;
    ensure(&a * &gb == b, || {
        format!("a={a}: g b does not solve a x = b")
    })?;
    let ga = &g * &a;
    let one_ga = &ga.identity_like_rows() - &ga;
    for _ in 0..20 {
        let x = &gb + &(&one_ga * &ctx.full(n, 1));
        ensure(norm(&gb) <= norm(&x), || {
            format!("a={a}, b={b}: solution {x} is shorter than g b")
        })?;
    }
    Ok(Step::Pass)
}

// ---- orders ----

fn route_agreement(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    for rel in OrderRelation::ALL {
        if !has_class(&a, rel.existence_class()) {
            continue;
        }
        let c = decide(rel, &a, &b, Route::Characterization)?;
        let f = decide(rel, &a, &b, Route::Feasibility)?;
        ensure(c.holds == f.holds, || {
            format!(
                "{rel}: routes disagree on a={a}, b={b} ({:?} vs {:?})",
                c.failure, f.failure
            )
        })?;
    }
    Ok(Step::Pass)
}

fn one_mp_vs_left_star(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let mut checked = false;
    for (x, y) in [
        (OrderRelation::OneMp, OrderRelation::LeftStar),
        (OrderRelation::MpOne, OrderRelation::RightStar),
    ] {
        if has_class(&a, y.existence_class()) {
            checked = true;
            for route in [Route::Characterization, Route::Feasibility] {
                ensure(holds(x, &a, &b, route)? == holds(y, &a, &b, route)?, || {
                    format!("{x} and {y} differ on a={a}, b={b}")
                })?;
            }
        }
    }
    Ok(if checked { Step::Pass } else { Step::Skip })
}

fn implications(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let r = Route::Characterization;
    let minus = holds(OrderRelation::Minus, &a, &b, r)?;
    for rel in [OrderRelation::LeftStar, OrderRelation::RightStar] {
        if has_class(&a, rel.existence_class()) && holds(rel, &a, &b, r)? {
            ensure(minus, || {
                format!("{rel} holds but minus fails on a={a}, b={b}")
            })?;
        }
    }
    Ok(Step::Pass)
}

fn difference_law(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let bma = &b - &a;
    for rel in [OrderRelation::LeftStar, OrderRelation::RightStar] {
        let r = Route::Characterization;
        ensure(holds(rel, &a, &b, r)? == holds(rel, &bma, &b, r)?, || {
            format!("{rel}: a={a} vs b-a={bma} against b={b}")
        })?;
    }
    Ok(Step::Pass)
}

fn duality(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let (a_s, b_s) = (a.adjoint(), b.adjoint());
    for rel in OrderRelation::ALL {
        for route in [Route::Characterization, Route::Feasibility] {
            ensure(
                holds(rel, &a, &b, route)? == holds(rel.dual(), &a_s, &b_s, route)?,
                || {
                    format!(
                        "{rel} on a={a}, b={b} vs {} on adjoints ({route})",
                        rel.dual()
                    )
                },
            )?;
        }
    }
    Ok(Step::Pass)
}

fn star_conjunction(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    if !has_class(&a, ClassSpec::MOORE_PENROSE) {
        return Ok(Step::Skip);
    }
    let r = Route::Characterization;
    let star = holds(OrderRelation::Star, &a, &b, Route::Feasibility)?;
    let conj =
        holds(OrderRelation::LeftStar, &a, &b, r)? && holds(OrderRelation::RightStar, &a, &b, r)?;
    ensure(star == conj, || {
        format!("star={star}, left∧right={conj} on a={a}, b={b}")
    })?;
    ensure(star == two_gram(&a, &b)?, || {
        format!("two-Gram disagrees on a={a}, b={b}")
    })?;
    Ok(Step::Pass)
}

fn gram_mp(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let Some(mp) = moore_penrose(&a)? else {
        return Ok(Step::Skip);
    };
    let astar = a.adjoint();
    let gram = &astar * &a == &astar * &b;
    ensure(gram == (&mp * &a == &mp * &b), || {
        format!("a*a=a*b is {gram} but a†a=a†b is not on a={a}, b={b}")
    })?;
    Ok(Step::Pass)
}

fn witness_soundness(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let r = Route::Characterization;
    let mut checked = false;
    if has_class(&a, ClassSpec::LEAST_SQUARES) && holds(OrderRelation::LeftStar, &a, &b, r)? {
        checked = true;
        let w = left_star_witness(&a, &b)?;
        ensure(upper_sample(&a, &w.g, &(&b - &a), Side::Left)? == b, || {
            format!("upper_sample(a, g, b-a) misses b on a={a}, b={b}")
        })?;
        // Over finite fields b itself may lack {1,3}-inverses.
        if has_class(&b, ClassSpec::LEAST_SQUARES) {
            ensure(t_condition(&a, &b, 3, ctx.rng.gen())?, || {
                format!("(T) fails on a={a}, b={b}")
            })?;
        }
        if let Some(h) = ctx.sample(&b, ClassSpec::ONE_TWO_THREE)? {
            let diff = &h - &squeeze(&a, &h);
            ensure(
                satisfies(&(&b - &a), &diff, ClassSpec::ONE_TWO_THREE)?,
                || format!("h - hah not in (b-a){{1,2,3}} for a={a}, b={b}, h={h}"),
            )?;
        }
    }
    if has_class(&a, ClassSpec::MINIMUM_NORM) && holds(OrderRelation::RightStar, &a, &b, r)? {
        checked = true;
        let w = right_star_witness(&a, &b)?;
        ensure(
            upper_sample(&a, &w.g, &(&b - &a), Side::Right)? == b,
            || format!("right upper_sample misses b on a={a}, b={b}"),
        )?;
    }
    Ok(if checked { Step::Pass } else { Step::Skip })
}

fn inclusion_agreement(ctx: &mut Ctx, t: usize) -> Trial {
    let (a, b) = ctx.pair(t)?;
    let seed: u64 = ctx.rng.gen();
    let mut checked = false;
    type Incl = fn(&Mat, &Mat, InclusionMode) -> Result<crate::orders::InclusionVerdict>;
    let sides: [(ClassSpec, Incl); 2] = [
        (ClassSpec::LEAST_SQUARES, inclusion_13),
        (ClassSpec::MINIMUM_NORM, inclusion_14),
    ];
    for (spec, incl) in sides {
        if !(has_class(&a, spec) && has_class(&b, spec)) {
            continue;
        }
        checked = true;
        let theorem = incl(&a, &b, InclusionMode::Theorem)?.included;
        let critical = incl(&a, &b, InclusionMode::Critical)?;
        ensure(critical.included == theorem, || {
            format!(
                "critical={} theorem={theorem} for a{spec} on a={a}, b={b}",
                critical.included
            )
        })?;
        let randomized = incl(&a, &b, InclusionMode::Randomized { samples: 4, seed })?;
        // A randomized "no" is a certificate, so the theorem must agree.
        ensure(randomized.included || !theorem, || {
            format!(
                "randomized counterexample {:?} against theorem on a={a}, b={b}",
                randomized.counterexample
            )
        })?;
        if let Some(p) = a.ring().modulus() {
            let cells = (a.rows() * a.cols()) as u32;
            if (p as u128).pow(cells) <= 1 << 12 {
                let ex = incl(&a, &b, InclusionMode::Exhaustive { cap: 1 << 12 })?.included;
                ensure(ex == theorem, || {
                    format!("exhaustive={ex} theorem={theorem} on a={a}, b={b}")
                })?;
            }
        }
    }
    Ok(if checked { Step::Pass } else { Step::Skip })
}

fn partial_order(ctx: &mut Ctx, _t: usize) -> Trial {
    let Some((a, b)) = ctx.left_pair(Side::Left)? else {
        return Ok(Step::Skip);
    };
    let Some(g) = ctx.sample(&b, ClassSpec::ONE_TWO_THREE)? else {
        return Ok(Step::Skip);
    };
    let d = ctx.full(b.rows(), b.cols());
    let c = upper_sample(&b, &g, &d, Side::Left)?;
    let rel = OrderRelation::LeftStar;
    let r = Route::Characterization;
    ensure(holds(rel, &a, &a, r)?, || {
        format!("reflexivity fails at {a}")
    })?;
    ensure(holds(rel, &a, &b, r)? && holds(rel, &b, &c, r)?, || {
        format!("upper_sample produced an unrelated pair from a={a}")
    })?;
    ensure(holds(rel, &a, &c, r)?, || {
        format!("transitivity fails on {a} < {b} < {c}")
    })?;
    if has_class(&c, ClassSpec::LEAST_SQUARES) {
        let chained = inclusion_13(&a, &c, InclusionMode::Critical)?.included;
        ensure(chained, || format!("c{{1,3}} ⊄ a{{1,3}} for a={a}, c={c}"))?;
    }
    if holds(rel, &b, &a, r)? {
        ensure(a == b, || format!("antisymmetry fails on a={a}, b={b}"))?;
    }
    Ok(Step::Pass)
}

// ---- decompositions ----

fn triple(ctx: &mut Ctx, side: Side) -> Trial {
    let Some((a, b)) = ctx.left_pair(side)? else {
        return Ok(Step::Skip);
    };
    let spec = match side {
        Side::Left => ClassSpec::ONE_TWO_THREE,
        Side::Right => ClassSpec::ONE_TWO_FOUR,
    };
    let Some(h) = ctx.sample(&b, spec)? else {
        return Ok(Step::Skip);
    };
    let d = simultaneous_decomposition(&a, &b, &h, side)?;
    ensure(all_pass(&d.checks(&a, &b)), || {
        format!("decomposition identities fail for a={a}, b={b}, h={h}")
    })?;
    ensure(
        pq_inverse(&a, &d.p1, &d.q1)?.as_ref() == Some(&d.a_inv),
        || format!("a_inv is not the (p1,q1)-inverse for a={a}, b={b}"),
    )?;
    ensure(
        pq_inverse(&(&b - &a), &d.p2, &d.q2)?.as_ref() == Some(&d.bma_inv),
        || format!("bma_inv is not the (p2,q2)-inverse for a={a}, b={b}"),
    )?;
    Ok(Step::Pass)
}

fn triple_left(ctx: &mut Ctx, _t: usize) -> Trial {
    triple(ctx, Side::Left)
}

fn triple_right(ctx: &mut Ctx, _t: usize) -> Trial {
    triple(ctx, Side::Right)
}

fn upper_structure_prop(ctx: &mut Ctx, t: usize) -> Trial {
    let side = if t.is_multiple_of(2) {
        Side::Left
    } else {
        Side::Right
    };
    let spec = match side {
        Side::Left => ClassSpec::ONE_TWO_THREE,
        Side::Right => ClassSpec::ONE_TWO_FOUR,
    };
    let Some((a, b)) = ctx.left_pair(side)? else {
        return Ok(Step::Skip);
    };
    let h = ctx.sample(&a, spec)?.expect("pair came from this class");
    // Reassembly is verified inside; success is the property.
    upper_structure(&a, &b, &h, side)?;
    Ok(Step::Pass)
}

/// Orthogonal projector onto the column space of `m`, if `m†` exists.
fn range_projector(m: &Mat) -> Result<Option<Mat>> {
    Ok(moore_penrose(m)?.map(|mp| m * &mp))
}

/// Pairs assembled from block data (an orthogonal decomposition on the
/// left, an arbitrary one on the right) are left-star related.
fn converse(ctx: &mut Ctx, _t: usize) -> Trial {
    let ring = ctx.ring;
    let (m, n) = ctx.shape();
    let im = Mat::identity(ring, m);
    let k1 = ctx.rng.gen_range(0..=m);
    let m1 = ctx.mixed_rank(m, k1.max(1));
    let Some(p1) = range_projector(&m1)? else {
        return Ok(Step::Skip);
    };
    let rest = &(&im - &p1) * &ctx.full(m, m);
    let Some(p2) = range_projector(&rest)? else {
        return Ok(Step::Skip);
    };
    // q-side: S diag(1..1, 1..1, 0..0) S⁻¹ split into three pieces.
    let s = ctx.full(n, n);
    if s.rank() < n {
        return Ok(Step::Skip);
    }
    let s_inv = solve_class(&s, ClassSpec::MOORE_PENROSE)?.expect("invertible");
    let cut1 = ctx.rng.gen_range(0..=n);
    let cut2 = ctx.rng.gen_range(cut1..=n);
    let diag = |lo: usize, hi: usize| {
        Mat::from_fn(ring, n, n, |i, j| {
            if i == j && (lo..hi).contains(&i) {
                ring.one()
            } else {
                ring.zero()
            }
        })
    };
    let q1 = &(&s * &diag(0, cut1)) * &s_inv;
    let q2 = &(&s * &diag(cut1, cut2)) * &s_inv;
    let a = &(&p1 * &ctx.full(m, n)) * &q1;
    let c = &(&p2 * &ctx.full(m, n)) * &q2;
    let b = &a + &c;
    ensure(
        (&p1 * &p2).is_zero() && (&q1 * &q2).is_zero() && (&q2 * &q1).is_zero(),
        || format!("block data not orthogonal: p1={p1}, p2={p2}, q1={q1}, q2={q2}"),
    )?;
    ensure(
        holds(OrderRelation::LeftStar, &a, &b, Route::Characterization)?,
        || format!("block-assembled pair a={a}, b={b} is not left-star related"),
    )?;
    Ok(Step::Pass)
}

// ---- finite oracle ----

fn finite_oracle(ring: RingSpec) -> Vec<PropertyResult> {
    let suite = Suite::FiniteOracle;
    let Some(p) = ring.modulus() else {
        return Vec::new();
    };
    let cap = configured_cap();
    let universe = FiniteRingUniverse::with_cap(p, 2, cap)
        .or_else(|_| FiniteRingUniverse::with_cap(p, 1, cap));
    let result = |name: &'static str, checks: Vec<std::result::Result<(), String>>| {
        let mut r = PropertyResult {
            suite,
            ring,
            name,
            passed: 0,
            failed: 0,
            skipped: 0,
            first_failure: None,
        };
        for (i, c) in checks.into_iter().enumerate() {
            match c {
                Ok(()) => r.passed += 1,
                Err(msg) => {
                    r.failed += 1;
                    if r.first_failure.is_none() {
                        r.first_failure = Some((i, msg));
                    }
                }
            }
        }
        r
    };
    let Ok(u) = universe else {
        return vec![PropertyResult {
            suite,
            ring,
            name: "universe",
            passed: 0,
            failed: 0,
            skipped: 1,
            first_failure: None,
        }];
    };
    let n = u.len();
    let tables: Vec<_> = OrderRelation::ALL
        .iter()
        .map(|&rel| u.order_table(rel))
        .collect();

    let agreement: Vec<_> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let u = &u;
            let tables = &tables;
            (0..n).map(move |j| {
                let (a, b) = (u.element(i), u.element(j));
                for t in tables {
                    let rel = t.relation;
                    let expected = t.get(i, j);
                    let in_dom = t.existence.contains(i);
                    let c = holds(rel, a, b, Route::Characterization).map_err(|e| e.to_string())?;
                    let f = holds(rel, a, b, Route::Feasibility).map_err(|e| e.to_string())?;
                    if (rel != OrderRelation::Star || in_dom) && c != expected {
                        return Err(format!(
                            "{rel} characterization {c} vs table {expected} on a={a}, b={b}"
                        ));
                    }
                    if in_dom && f != expected {
                        return Err(format!(
                            "{rel} feasibility {f} vs table {expected} on a={a}, b={b}"
                        ));
                    }
                }
                Ok(())
            })
        })
        .collect();

    let left = &tables[1];
    let right = &tables[2];
    let star = &tables[3];
    let classes: Vec<_> = (0..n)
        .map(|i| u.class_bits(i, ClassSpec::LEAST_SQUARES))
        .collect();
    let mut inclusion = Vec::new();
    for i in left.existence.ones() {
        for j in left.existence.ones() {
            let sub = classes[j].is_subset(&classes[i]);
            inclusion.push(if sub == left.get(i, j) {
                Ok(())
            } else {
                Err(format!(
                    "left-star {} but inclusion {sub} on a={}, b={}",
                    left.get(i, j),
                    u.element(i),
                    u.element(j)
                ))
            });
        }
    }

    let mut conjunction = Vec::new();
    for i in star.existence.ones() {
        for j in 0..n {
            let expected = left.get(i, j) && right.get(i, j);
            conjunction.push(if star.get(i, j) == expected {
                Ok(())
            } else {
                Err(format!(
                    "star vs conjunction on a={}, b={}",
                    u.element(i),
                    u.element(j)
                ))
            });
        }
    }

    let axioms = tables
        .iter()
        .map(|t| {
            let r = t.axioms();
            if r.passes() {
                Ok(())
            } else {
                Err(r.to_string())
            }
        })
        .collect();

    vec![
        result("table-agreement", agreement),
        result("inclusion-oracle", inclusion),
        result("star-conjunction", conjunction),
        result("axioms", axioms),
    ]
}

/// Renders a transcript to a string.
pub fn render(t: &Transcript) -> String {
    let mut s = String::new();
    let _ = write!(s, "{t}");
    s
}
