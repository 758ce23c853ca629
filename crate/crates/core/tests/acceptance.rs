//! Acceptance run: one PASS/FAIL line per criterion, all checks exact.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use star_order_core::blocks::{pq_inverse, Side};
use star_order_core::inverses::{
    construct_123, from_gram_left, moore_penrose, mp_one, one_mp, penrose_constraints, sample_class,
};
use star_order_core::lab::{FiniteRingUniverse, DEFAULT_CAP};
use star_order_core::orders::{all_pass, has_class, simultaneous_decomposition, upper_sample};
use star_order_core::verify::{self, VerifyConfig};
use star_order_core::{
    holds, satisfies, solve_affine, solve_class, ClassSpec, Constraint, Mat, OrderRelation,
    RingSpec, Route,
};

const Q: RingSpec = RingSpec::GaussianRational;
const FINITE: [RingSpec; 3] = [
    RingSpec::PrimeField(2),
    RingSpec::PrimeField(3),
    RingSpec::PrimeField(5),
];
const BOUND: u32 = 3;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Gen {
    ring: RingSpec,
    max_dim: usize,
    rng: ChaCha8Rng,
}

impl Gen {
    fn new(ring: RingSpec, max_dim: usize, seed: u64) -> Self {
        Gen {
            ring,
            max_dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn shape(&mut self) -> (usize, usize) {
        (
            self.rng.gen_range(1..=self.max_dim),
            self.rng.gen_range(1..=self.max_dim),
        )
    }

    fn mixed(&mut self, m: usize, n: usize) -> Mat {
        let r = self.rng.gen_range(0..=m.min(n));
        Mat::random_low_rank(m, n, r, self.ring, &mut self.rng, BOUND)
    }

    fn matrix(&mut self) -> Mat {
        let (m, n) = self.shape();
        self.mixed(m, n)
    }

    fn full(&mut self, m: usize, n: usize) -> Mat {
        Mat::random(m, n, self.ring, &mut self.rng, BOUND)
    }

    fn sample(&mut self, a: &Mat, spec: ClassSpec) -> Option<Mat> {
        sample_class(a, spec, &mut self.rng, BOUND).expect("well-formed class")
    }
}

fn fail(msg: String) -> Outcome {
    Err(msg)
}

fn budget(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

fn universe(p: u32) -> FiniteRingUniverse {
    FiniteRingUniverse::with_cap(p, 2, DEFAULT_CAP).expect("M_2(Z_p) fits the default cap")
}

fn penrose_suite() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut none = 0;
    let rings = std::iter::once((Q, 4)).chain(FINITE.iter().map(|&r| (r, 2)));
    for (k, (ring, dim)) in rings.enumerate() {
        let mut g = Gen::new(ring, dim, 100 + k as u64);
        // 625 elements for Z_5; only classes are brute-forced here.
        let u = ring
            .modulus()
            .map(|p| FiniteRingUniverse::with_cap(p, 2, 1 << 20).unwrap());
        for _ in 0..200 {
            let a = if ring.is_finite() {
                g.full(2, 2)
            } else {
                g.matrix()
            };
            let x = solve_class(&a, ClassSpec::MOORE_PENROSE).map_err(|e| e.to_string())?;
            if let Some(u) = &u {
                let brute = u.brute_class(&a, ClassSpec::MOORE_PENROSE).unwrap();
                if brute != x.iter().cloned().collect::<Vec<_>>() {
                    return fail(format!("a={a}: solver {x:?} vs brute force {brute:?}"));
                }
            }
            let Some(x) = x else {
                if !ring.is_finite() {
                    return fail(format!("a={a} over Q(i) reported without a†"));
                }
                none += 1;
                continue;
            };
            if !satisfies(&a, &x, ClassSpec::MOORE_PENROSE).unwrap() {
                return fail(format!("a={a}: {x} fails a Penrose equation"));
            }
            // a† = a^(1,4) a a^(1,3) for any choice of the two factors.
            let l = g.sample(&a, ClassSpec::LEAST_SQUARES).expect("a† exists");
            let r = g.sample(&a, ClassSpec::MINIMUM_NORM).expect("a† exists");
            if &(&r * &a) * &l != x {
                return fail(format!("a={a}: a{{1,4}} a a{{1,3}} differs from {x}"));
            }
            checked += 1;
        }
    }
    budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{checked} inverses verified, {none} finite matrices without a†, {:.1?}",
        start.elapsed()
    ))
}

fn one_mp_equivalence() -> Outcome {
    let mut g = Gen::new(Q, 4, 200);
    for _ in 0..200 {
        let a = g.matrix();
        let mp = moore_penrose(&a).unwrap().expect("Q(i)");
        let am = g.sample(&a, ClassSpec::G).expect("fields are regular");
        let x = one_mp(&a, &am).unwrap();
        if &(&x * &a) * &x != x || &a * &x != &a * &mp {
            return fail(format!("a={a}, a-={am}: {x} fails xax=x or ax=aa†"));
        }
        if !satisfies(&a, &x, ClassSpec::ONE_TWO_THREE).unwrap() {
            return fail(format!("a={a}: {x} not in a{{1,2,3}}"));
        }
        let y = mp_one(&a, &am).unwrap();
        if &(&y * &a) * &y != y || &y * &a != &mp * &a {
            return fail(format!("a={a}, a-={am}: {y} fails yay=y or ya=a†a"));
        }
        let solved = solve_class(&a, ClassSpec::ONE_TWO_THREE).unwrap().unwrap();
        let sampled = g.sample(&a, ClassSpec::ONE_TWO_THREE).unwrap();
        for h in [solved, sampled] {
            if h != &(&h * &a) * &mp {
                return fail(format!("a={a}: {h} is not h a a†"));
            }
        }
    }
    Ok("200 pairs".into())
}

fn characterizations() -> Outcome {
    let mut g = Gen::new(Q, 4, 300);
    for _ in 0..100 {
        let a = g.matrix();
        let x = g.sample(&a, ClassSpec::G).unwrap();
        let y = g.sample(&a, ClassSpec::LEAST_SQUARES).unwrap();
        let xay = &(&x * &a) * &y;
        if !satisfies(&a, &xay, ClassSpec::ONE_TWO_THREE).unwrap() {
            return fail(format!("a={a}: a{{1}} a a{{1,3}} member {xay} escapes"));
        }
    }
    for _ in 0..100 {
        let a = g.matrix();
        let h = solve_class(&a, ClassSpec::ONE_TWO_THREE).unwrap().unwrap();
        let target = g.sample(&a, ClassSpec::ONE_TWO_THREE).unwrap();
        let ha = &h * &a;
        let c = Constraint::new(&target - &h).plus(&ha.identity_like_rows() - &ha, &a * &h);
        let w = solve_affine(Q, h.shape(), &[c]).unwrap();
        let Some(w) = w.particular() else {
            return fail(format!("a={a}: no w reaches {target}"));
        };
        if construct_123(&a, &h, w).unwrap() != target {
            return fail(format!("a={a}: construct_123 misses {target}"));
        }
    }
    for _ in 0..100 {
        let a = g.matrix();
        let gram = &a.adjoint() * &a;
        let gg = g.sample(&gram, ClassSpec::G).unwrap();
        let fg = from_gram_left(&a, &gg).unwrap();
        if !satisfies(&a, &fg, ClassSpec::ONE_TWO_THREE).unwrap() {
            return fail(format!("a={a}: G a* = {fg} escapes a{{1,2,3}}"));
        }
        let target = g.sample(&a, ClassSpec::ONE_TWO_THREE).unwrap();
        let n = gram.rows();
        let mut cons = penrose_constraints(&gram, ClassSpec::G);
        cons.push(Constraint::new(target.clone()).plus(Mat::identity(Q, n), a.adjoint()));
        if solve_affine(Q, (n, n), &cons).unwrap().is_empty() {
            return fail(format!("a={a}: {target} is not G a* for G in (a*a){{1}}"));
        }
    }
    Ok("3 x 100 trials".into())
}

fn one_mp_vs_star() -> Outcome {
    let rings = std::iter::once((Q, 4)).chain(FINITE.iter().map(|&r| (r, 2)));
    let mut related = 0;
    let mut compared = 0;
    for (k, (ring, dim)) in rings.enumerate() {
        let mut g = Gen::new(ring, dim, 400 + k as u64);
        for t in 0..200 {
            let a = g.matrix();
            let d = g.full(a.rows(), a.cols());
            let b = match t % 4 {
                0 => g
                    .sample(&a, ClassSpec::ONE_TWO_THREE)
                    .map(|h| upper_sample(&a, &h, &d, Side::Left).unwrap()),
                2 => g
                    .sample(&a, ClassSpec::ONE_TWO_FOUR)
                    .map(|h| upper_sample(&a, &h, &d, Side::Right).unwrap()),
                _ => None,
            }
            .unwrap_or(d);
            let pairs = [
                (OrderRelation::OneMp, OrderRelation::LeftStar),
                (OrderRelation::MpOne, OrderRelation::RightStar),
            ];
            for (x, y) in pairs {
                if !has_class(&a, y.existence_class()) {
                    continue;
                }
                for route in [Route::Characterization, Route::Feasibility] {
                    let hx = holds(x, &a, &b, route).unwrap();
                    let hy = holds(y, &a, &b, route).unwrap();
                    if hx != hy {
                        return fail(format!("{x}={hx} vs {y}={hy} ({route}) on a={a}, b={b}"));
                    }
                    compared += 1;
                    related += usize::from(hx);
                }
            }
        }
    }
    Ok(format!("{compared} comparisons, {related} related"))
}

fn inclusion_oracle() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    for p in [2, 3] {
        let u = universe(p);
        let table = u.order_table(OrderRelation::LeftStar);
        let classes: Vec<_> = (0..u.len())
            .map(|i| u.class_bits(i, ClassSpec::LEAST_SQUARES))
            .collect();
        // The equivalence is stated for a, b that both have {1,3}-inverses.
        for i in table.existence.ones() {
            for j in table.existence.ones() {
                let incl = classes[j].is_subset(&classes[i]);
                let (a, b) = (u.element(i), u.element(j));
                let solver = holds(OrderRelation::LeftStar, a, b, Route::Characterization)
                    .map_err(|e| e.to_string())?;
                if table.get(i, j) != incl || solver != incl {
                    return fail(format!(
                        "p={p}: brute {} solver {solver} inclusion {incl} on a={a}, b={b}",
                        table.get(i, j)
                    ));
                }
                pairs += 1;
            }
        }
    }
    budget(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "{pairs} pairs in R^(1,3) x R^(1,3), {:.1?}",
        start.elapsed()
    ))
}

fn decomposition() -> Outcome {
    let mut g = Gen::new(Q, 4, 600);
    let mut done = 0;
    while done < 100 {
        let a = g.matrix();
        let d = g.full(a.rows(), a.cols());
        let h = g.sample(&a, ClassSpec::ONE_TWO_THREE).unwrap();
        let b = upper_sample(&a, &h, &d, Side::Left).unwrap();
        if !holds(OrderRelation::LeftStar, &a, &b, Route::Characterization).unwrap() {
            return fail(format!("upper_sample gave an unrelated pair a={a}, b={b}"));
        }
        let hb = g.sample(&b, ClassSpec::ONE_TWO_THREE).unwrap();
        let dec = simultaneous_decomposition(&a, &b, &hb, Side::Left).unwrap();
        let checks = dec.checks(&a, &b);
        if !all_pass(&checks) {
            let bad: Vec<_> = checks.iter().filter(|c| !c.1).map(|c| &c.0).collect();
            return fail(format!("a={a}, b={b}: {bad:?}"));
        }
        if pq_inverse(&a, &dec.p1, &dec.q1).unwrap().as_ref() != Some(&dec.a_inv)
            || pq_inverse(&(&b - &a), &dec.p2, &dec.q2).unwrap().as_ref() != Some(&dec.bma_inv)
        {
            return fail(format!("a={a}, b={b}: (p,q)-inverses differ"));
        }
        done += 1;
    }
    Ok(format!("{done} pairs"))
}

fn axioms() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for p in [2, 3] {
        let u = universe(p);
        for rel in [OrderRelation::LeftStar, OrderRelation::RightStar] {
            let report = u.axioms_report(rel);
            if !report.passes() {
                return fail(format!("p={p}: {report}"));
            }
            summary.push(format!("Z_{p} {rel} on {}", report.domain));
        }
    }
    budget(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{}, {:.1?}", summary.join("; "), start.elapsed()))
}

fn star_conjunction() -> Outcome {
    let u = universe(3);
    let left = u.order_table(OrderRelation::LeftStar);
    let right = u.order_table(OrderRelation::RightStar);
    let star = u.order_table(OrderRelation::Star);
    let char_route = Route::Characterization;
    let mut finite = 0;
    for i in star.existence.ones() {
        let a = u.element(i);
        for j in 0..u.len() {
            let b = u.element(j);
            let s = holds(OrderRelation::Star, a, b, Route::Feasibility).unwrap();
            let l = holds(OrderRelation::LeftStar, a, b, char_route).unwrap();
            let r = holds(OrderRelation::RightStar, a, b, char_route).unwrap();
            let brute = star.get(i, j) == (left.get(i, j) && right.get(i, j));
            if s != (l && r) || s != star.get(i, j) || !brute {
                return fail(format!("Z_3: star {s} vs {l} and {r} on a={a}, b={b}"));
            }
            finite += 1;
        }
    }
    let mut g = Gen::new(Q, 4, 800);
    let mut related = 0;
    for t in 0..200 {
        let a = g.matrix();
        let d = g.full(a.rows(), a.cols());
        let b = if t % 2 == 0 {
            let h = g.sample(&a, ClassSpec::MOORE_PENROSE).unwrap();
            upper_sample(&a, &h, &d, Side::Left).unwrap()
        } else {
            d
        };
        let s = holds(OrderRelation::Star, &a, &b, Route::Feasibility).unwrap();
        let l = holds(OrderRelation::LeftStar, &a, &b, char_route).unwrap();
        let r = holds(OrderRelation::RightStar, &a, &b, char_route).unwrap();
        if s != (l && r) {
            return fail(format!("Q(i): star {s} vs {l} and {r} on a={a}, b={b}"));
        }
        related += usize::from(s);
    }
    Ok(format!(
        "{finite} Z_3 pairs, 200 Q(i) pairs ({related} related)"
    ))
}

fn least_squares() -> Outcome {
    let mut g = Gen::new(Q, 4, 900);
    let norm = |x: &Mat| x.norm_sqr().expect("Q(i)");
    for _ in 0..100 {
        let a = g.matrix();
        let (m, n) = a.shape();
        let ls = g.sample(&a, ClassSpec::LEAST_SQUARES).unwrap();
        let b = g.full(m, 1);
        let best = norm(&(&(&a * &(&ls * &b)) - &b));
        for _ in 0..20 {
            let x = g.full(n, 1);
            if best > norm(&(&(&a * &x) - &b)) {
                return fail(format!("a={a}, b={b}: x={x} beats g b"));
            }
        }
        let mn = g.sample(&a, ClassSpec::MINIMUM_NORM).unwrap();
        let b = &a * &g.full(n, 1);
        let gb = &mn * &b;
        if &a * &gb != b {
            return fail(format!("a={a}: g b does not solve a x = b"));
        }
        let ga = &mn * &a;
        let one_ga = &ga.identity_like_rows() - &ga;
        for _ in 0..20 {
            let x = &gb + &(&one_ga * &g.full(n, 1));
            if norm(&gb) > norm(&x) {
                return fail(format!("a={a}, b={b}: solution {x} is shorter than g b"));
            }
        }
    }
    Ok("100 x 20 candidates per side".into())
}

fn determinism() -> Outcome {
    let config = VerifyConfig {
        seed: 7,
        trials: 8,
        max_dim: 3,
        ..VerifyConfig::default()
    };
    let first = verify::render(&verify::run(&config).map_err(|e| e.to_string())?);
    let second = verify::render(&verify::run(&config).map_err(|e| e.to_string())?);
    if first != second {
        return fail("transcripts differ".into());
    }
    Ok(format!("{} identical bytes", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Moore-Penrose solutions and uniqueness", penrose_suite),
        ("1MP inverse identities", one_mp_equivalence),
        ("{1,2,3} characterizations", characterizations),
        ("1MP vs left-star, MP1 vs right-star", one_mp_vs_star),
        ("left-star vs {1,3} inclusion, exhaustive", inclusion_oracle),
        ("simultaneous decomposition invariants", decomposition),
        ("partial-order axioms, exhaustive", axioms),
        ("star as left-star and right-star", star_conjunction),
        ("least squares and minimum norm", least_squares),
        ("verify transcript determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[{:>2}] PASS {name}: {detail}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("[{:>2}] FAIL {name}: {msg}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
