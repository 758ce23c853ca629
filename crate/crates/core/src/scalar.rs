//! Exact scalars for the two coefficient rings: Gaussian rationals with
//! complex conjugation, and prime fields `Z_p` with the identity involution.
//!
//! Values are kept in canonical form at all times (reduced rationals with a
//! positive denominator, residues in `[0, p)`), so derived `Eq`/`Hash` are
//! structural.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Largest prime modulus accepted for `Z_p`.
pub const MAX_MODULUS: u32 = 97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RingSpec {
    GaussianRational,
    PrimeField(u32),
}

impl RingSpec {
    pub fn prime_field(p: u32) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&p) {
            return Err(Error::InvalidRing(format!(
                "modulus {p} outside 2..={MAX_MODULUS}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidRing(format!("modulus {p} is not prime")));
        }
        Ok(RingSpec::PrimeField(p))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RingSpec::PrimeField(_))
    }

    pub fn modulus(&self) -> Option<u32> {
        match self {
            RingSpec::PrimeField(p) => Some(*p),
            RingSpec::GaussianRational => None,
        }
    }

    pub fn zero(&self) -> Scalar {
        match *self {
            RingSpec::GaussianRational => {
                Scalar::gaussian(BigRational::zero(), BigRational::zero())
            }
            RingSpec::PrimeField(p) => Scalar::residue(0, p),
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_int(1)
    }

    /// The image of an integer under the canonical ring map.
    pub fn from_int(&self, n: i64) -> Scalar {
        match *self {
            RingSpec::GaussianRational => {
                Scalar::gaussian(BigRational::from_integer(n.into()), BigRational::zero())
            }
            RingSpec::PrimeField(p) => Scalar::residue(n.rem_euclid(p as i64) as u32, p),
        }
    }

    /// The imaginary unit (Gaussian rationals only).
    pub fn imaginary_unit(&self) -> Option<Scalar> {
        match self {
            RingSpec::GaussianRational => {
                Some(Scalar::gaussian(BigRational::zero(), BigRational::one()))
            }
            RingSpec::PrimeField(_) => None,
        }
    }

    /// Number of base-field coordinates of one scalar: 2 for `Q(i)` over `Q`,
    /// 1 for `Z_p` over itself.
    pub fn base_degree(&self) -> usize {
        match self {
            RingSpec::GaussianRational => 2,
            RingSpec::PrimeField(_) => 1,
        }
    }

    /// Random element. For `Q(i)` both parts are `num/den` with
    /// `|num| <= bound` and `1 <= den <= max(bound, 1)`.
    pub fn random_scalar<R: Rng + ?Sized>(&self, rng: &mut R, bound: u32) -> Scalar {
        match *self {
            RingSpec::GaussianRational => {
                let re = random_rational(rng, bound);
                let im = random_rational(rng, bound);
                Scalar::gaussian(re, im)
            }
            RingSpec::PrimeField(p) => Scalar::residue(rng.gen_range(0..p), p),
        }
    }

    /// Random element of the base field (`Q` inside `Q(i)`, or `Z_p`).
    pub fn random_base<R: Rng + ?Sized>(&self, rng: &mut R, bound: u32) -> Scalar {
        match *self {
            RingSpec::GaussianRational => {
                Scalar::gaussian(random_rational(rng, bound), BigRational::zero())
            }
            RingSpec::PrimeField(p) => Scalar::residue(rng.gen_range(0..p), p),
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingSpec::GaussianRational => write!(f, "Q(i)"),
            RingSpec::PrimeField(p) => write!(f, "Z_{p}"),
        }
    }
}

fn random_rational<R: Rng + ?Sized>(rng: &mut R, bound: u32) -> BigRational {
    let b = bound as i64;
    let num = rng.gen_range(-b..=b);
    let den = rng.gen_range(1..=b.max(1));
    BigRational::new(num.into(), den.into())
}

fn is_prime(p: u32) -> bool {
    p >= 2
        && (2..p)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Repr {
    Gaussian { re: BigRational, im: BigRational },
    Residue { value: u32, modulus: u32 },
}

/// An element of `Q(i)` or `Z_p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar(Repr);

impl Scalar {
    pub fn gaussian(re: BigRational, im: BigRational) -> Self {
        // Ratio arithmetic already normalizes; this is the only entry point
        // that could see a raw ratio.
        Scalar(Repr::Gaussian {
            re: normalize(re),
            im: normalize(im),
        })
    }

    pub fn residue(value: u32, modulus: u32) -> Self {
        Scalar(Repr::Residue {
            value: value % modulus,
            modulus,
        })
    }

    pub fn ring(&self) -> RingSpec {
        match &self.0 {
            Repr::Gaussian { .. } => RingSpec::GaussianRational,
            Repr::Residue { modulus, .. } => RingSpec::PrimeField(*modulus),
        }
    }

    pub fn re(&self) -> Option<&BigRational> {
        match &self.0 {
            Repr::Gaussian { re, .. } => Some(re),
            Repr::Residue { .. } => None,
        }
    }

    pub fn im(&self) -> Option<&BigRational> {
        match &self.0 {
            Repr::Gaussian { im, .. } => Some(im),
            Repr::Residue { .. } => None,
        }
    }

    pub fn residue_value(&self) -> Option<u32> {
        match &self.0 {
            Repr::Residue { value, .. } => Some(*value),
            Repr::Gaussian { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Gaussian { re, im } => re.is_zero() && im.is_zero(),
            Repr::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Gaussian { re, im } => re.is_one() && im.is_zero(),
            Repr::Residue { value, .. } => *value == 1,
        }
    }

    /// The involution: complex conjugation on `Q(i)`, identity on `Z_p`.
    pub fn conj(&self) -> Scalar {
        match &self.0 {
            Repr::Gaussian { re, im } => Scalar(Repr::Gaussian {
                re: re.clone(),
                im: -im,
            }),
            Repr::Residue { .. } => self.clone(),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        match &self.0 {
            Repr::Gaussian { re, im } => {
                let norm = re * re + im * im;
                Some(Scalar(Repr::Gaussian {
                    re: re / &norm,
                    im: -(im / &norm),
                }))
            }
            Repr::Residue { value, modulus } => {
                // Fermat: v^(p-2) mod p.
                let p = *modulus as u64;
                let mut base = *value as u64;
                let mut exp = p - 2;
                let mut acc = 1u64;
                while exp > 0 {
                    if exp & 1 == 1 {
                        acc = acc * base % p;
                    }
                    base = base * base % p;
                    exp >>= 1;
                }
                Some(Scalar::residue(acc as u32, *modulus))
            }
        }
    }

    /// `s * conj(s)` as a rational; only meaningful over `Q(i)`.
    pub fn norm_sqr(&self) -> Option<BigRational> {
        match &self.0 {
            Repr::Gaussian { re, im } => Some(re * re + im * im),
            Repr::Residue { .. } => None,
        }
    }

    fn check_same_ring(&self, other: &Scalar) {
        assert_eq!(
            self.ring(),
            other.ring(),
            "scalar arithmetic across different rings"
        );
    }
}

fn normalize(r: BigRational) -> BigRational {
    BigRational::new(r.numer().clone(), r.denom().clone())
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.check_same_ring(rhs);
        match (&self.0, &rhs.0) {
            (Repr::Gaussian { re: a, im: b }, Repr::Gaussian { re: c, im: d }) => {
                Scalar(Repr::Gaussian {
                    re: a + c,
                    im: b + d,
                })
            }
            (Repr::Residue { value: a, modulus }, Repr::Residue { value: b, .. }) => {
                Scalar::residue((a + b) % modulus, *modulus)
            }
            _ => unreachable!(),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.check_same_ring(rhs);
        match (&self.0, &rhs.0) {
            (Repr::Gaussian { re: a, im: b }, Repr::Gaussian { re: c, im: d }) => {
                Scalar(Repr::Gaussian {
                    re: a - c,
                    im: b - d,
                })
            }
            (Repr::Residue { value: a, modulus }, Repr::Residue { value: b, .. }) => {
                Scalar::residue((a + modulus - b) % modulus, *modulus)
            }
            _ => unreachable!(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.check_same_ring(rhs);
        match (&self.0, &rhs.0) {
            (Repr::Gaussian { re: a, im: b }, Repr::Gaussian { re: c, im: d }) => {
                // Solver systems are mostly real; skip the zero products.
                let (re, im) = match (b.is_zero(), d.is_zero()) {
                    (true, true) => (a * c, BigRational::zero()),
                    (true, false) => (a * c, a * d),
                    (false, true) => (a * c, b * c),
                    (false, false) => (a * c - b * d, a * d + b * c),
                };
                Scalar(Repr::Gaussian { re, im })
            }
            (Repr::Residue { value: a, modulus }, Repr::Residue { value: b, .. }) => {
                Scalar::residue(((*a as u64 * *b as u64) % *modulus as u64) as u32, *modulus)
            }
            _ => unreachable!(),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match &self.0 {
            Repr::Gaussian { re, im } => Scalar(Repr::Gaussian { re: -re, im: -im }),
            Repr::Residue { value, modulus } => {
                Scalar::residue((modulus - value) % modulus, *modulus)
            }
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text form; `parse_scalar` inverts it.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Residue { value, .. } => write!(f, "{value}"),
            Repr::Gaussian { re, im } => {
                if im.is_zero() {
                    write!(f, "{}", fmt_rational(re))
                } else if re.is_zero() {
                    write!(f, "{}i", fmt_rational(im))
                } else {
                    let sign = if im.is_negative() { '-' } else { '+' };
                    write!(
                        f,
                        "{}{}{}i",
                        fmt_rational(re),
                        sign,
                        fmt_rational(&im.abs())
                    )
                }
            }
        }
    }
}

fn malformed(text: &str, reason: &str) -> Error {
    Error::MalformedScalar {
        text: text.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_int(text: &str, whole: &str) -> Result<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(whole, "expected an integer"));
    }
    text.parse::<BigInt>()
        .map_err(|_| malformed(whole, "expected an integer"))
}

fn parse_rational(text: &str, whole: &str) -> Result<BigRational> {
    match text.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(text, whole)?)),
        Some((num, den)) => {
            let num = parse_int(num, whole)?;
            if den.starts_with(['-', '+']) {
                return Err(malformed(whole, "denominator must be a positive integer"));
            }
            let den = parse_int(den, whole)?;
            if den.is_zero() {
                return Err(Error::ZeroDenominator(whole.to_string()));
            }
            Ok(BigRational::new(num, den))
        }
    }
}

/// Parses the scalar grammar
///
/// ```text
/// rat      ::= int | int "/" posint
/// gaussian ::= rat | rat ("+"|"-") rat "i" | rat "i"
/// prime    ::= int
/// ```
pub fn parse_scalar(text: &str, ring: RingSpec) -> Result<Scalar> {
    let t = text.trim();
    if t.is_empty() {
        return Err(malformed(text, "empty"));
    }
    match ring {
        RingSpec::PrimeField(p) => {
            let n = parse_int(t, text)?;
            let r = ((n % p) + p) % p;
            let v: u32 = r.try_into().expect("residue fits in u32");
            Ok(Scalar::residue(v, p))
        }
        RingSpec::GaussianRational => {
            let Some(body) = t.strip_suffix('i') else {
                return Ok(Scalar::gaussian(
                    parse_rational(t, text)?,
                    BigRational::zero(),
                ));
            };
            // The split point is the last sign that is not the leading one.
            let split = body
                .char_indices()
                .skip(1)
                .filter(|(_, c)| *c == '+' || *c == '-')
                .map(|(i, _)| i)
                .last();
            match split {
                None => Ok(Scalar::gaussian(
                    BigRational::zero(),
                    parse_rational(body, text)?,
                )),
                Some(i) => {
                    let (re, im) = body.split_at(i);
                    let (sign, im) = im.split_at(1);
                    if im.starts_with(['-', '+']) {
                        return Err(malformed(text, "doubled sign"));
                    }
                    let re = parse_rational(re, text)?;
                    let mut im = parse_rational(im, text)?;
                    if sign == "-" {
                        im = -im;
                    }
                    Ok(Scalar::gaussian(re, im))
                }
            }
        }
    }
}

/// Conjugation with an explicit ring check.
pub fn conj(s: &Scalar, ring: RingSpec) -> Result<Scalar> {
    if s.ring() != ring {
        return Err(Error::RingMismatch {
            expected: ring,
            found: s.ring(),
        });
    }
    Ok(s.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const Q: RingSpec = RingSpec::GaussianRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_scalar("0", Q).unwrap(), Q.zero());
        let s = parse_scalar("1/2+3/4i", Q).unwrap();
        assert_eq!(s.re().unwrap(), &rat(1, 2));
        assert_eq!(s.im().unwrap(), &rat(3, 4));
        let f5 = RingSpec::prime_field(5).unwrap();
        assert_eq!(parse_scalar("7", f5).unwrap().residue_value(), Some(2));
        assert_eq!(parse_scalar("-1", f5).unwrap().residue_value(), Some(4));
    }

    #[test]
    fn parse_forms() {
        let s = parse_scalar("-3/4i", Q).unwrap();
        assert_eq!(s.re().unwrap(), &rat(0, 1));
        assert_eq!(s.im().unwrap(), &rat(-3, 4));
        let s = parse_scalar("-1/2-2i", Q).unwrap();
        assert_eq!(s.re().unwrap(), &rat(-1, 2));
        assert_eq!(s.im().unwrap(), &rat(-2, 1));
        let s = parse_scalar("4/6", Q).unwrap();
        assert_eq!(s.to_string(), "2/3");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_scalar("1/0", Q),
            Err(Error::ZeroDenominator(_))
        ));
        for bad in ["", "abc", "1/", "/2", "1/-2", "i", "1+-2i", "1.5", "1/2/3"] {
            assert!(parse_scalar(bad, Q).is_err(), "{bad:?} should fail");
        }
        let f5 = RingSpec::prime_field(5).unwrap();
        assert!(parse_scalar("1/2", f5).is_err());
        assert!(parse_scalar("2i", f5).is_err());
    }

    #[test]
    fn ring_validation() {
        assert!(RingSpec::prime_field(4).is_err());
        assert!(RingSpec::prime_field(1).is_err());
        assert!(RingSpec::prime_field(101).is_err());
        assert!(RingSpec::prime_field(97).is_ok());
    }

    #[test]
    fn conj_examples() {
        let s = parse_scalar("1/2+3/4i", Q).unwrap();
        assert_eq!(conj(&s, Q).unwrap(), parse_scalar("1/2-3/4i", Q).unwrap());
        let f7 = RingSpec::prime_field(7).unwrap();
        let five = f7.from_int(5);
        assert_eq!(conj(&five, f7).unwrap(), five);
        assert_eq!(Q.zero().conj(), Q.zero());
        assert!(conj(&five, Q).is_err());
    }

    #[test]
    fn residue_inverses() {
        let f97 = RingSpec::prime_field(97).unwrap();
        for v in 1..97 {
            let x = f97.from_int(v);
            assert!((&x * &x.inv().unwrap()).is_one());
        }
        assert!(f97.zero().inv().is_none());
    }

    fn arb_ring() -> impl Strategy<Value = RingSpec> {
        prop_oneof![
            Just(RingSpec::GaussianRational),
            Just(RingSpec::PrimeField(2)),
            Just(RingSpec::PrimeField(3)),
            Just(RingSpec::PrimeField(5)),
            Just(RingSpec::PrimeField(97)),
        ]
    }

    proptest! {
        #[test]
        fn field_axioms(ring in arb_ring(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ring.random_scalar(&mut rng, 7);
            let y = ring.random_scalar(&mut rng, 7);
            let z = ring.random_scalar(&mut rng, 7);
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&x - &x, ring.zero());
            if !x.is_zero() {
                prop_assert!((&x * &x.inv().unwrap()).is_one());
            }
        }

        #[test]
        fn conj_is_involutive_automorphism(ring in arb_ring(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ring.random_scalar(&mut rng, 9);
            let y = ring.random_scalar(&mut rng, 9);
            prop_assert_eq!(x.conj().conj(), x.clone());
            prop_assert_eq!((&x + &y).conj(), &x.conj() + &y.conj());
            prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        }

        #[test]
        fn format_parse_roundtrip(ring in arb_ring(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ring.random_scalar(&mut rng, 50);
            prop_assert_eq!(parse_scalar(&x.to_string(), ring).unwrap(), x);
        }
    }
}
