//! Number-field descriptors, places, quaternion algebras over them, and the
//! small exact arithmetic utilities the rest of the engine leans on.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A coarse description of a totally real base field: enough to track places
/// and ramification without carrying full field arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub label: String,
    pub degree: u32,
    pub real_places: u32,
}

impl FieldDesc {
    pub fn rationals() -> Self {
        FieldDesc {
            label: "Q".into(),
            degree: 1,
            real_places: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::data(format!("field {}: degree must be positive", self.label)));
        }
        if self.real_places > self.degree {
            return Err(Error::data(format!(
                "field {}: {} real places exceed degree {}",
                self.label, self.real_places, self.degree
            )));
        }
        Ok(())
    }
}

/// A finite place label: a rational prime, or an opaque label for a place of
/// a larger base field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FiniteLabel {
    Prime(u64),
    Opaque(String),
}

impl fmt::Display for FiniteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteLabel::Prime(p) => write!(f, "{p}"),
            FiniteLabel::Opaque(s) => write!(f, "v:{s}"),
        }
    }
}

/// A place of a number field. Real places are indexed embeddings; finite
/// places carry a `FiniteLabel`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Real(u32),
    Finite(FiniteLabel),
}

impl Serialize for Place {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Place::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Place {
    pub fn prime(p: u64) -> Self {
        Place::Finite(FiniteLabel::Prime(p))
    }

    pub fn opaque(label: impl Into<String>) -> Self {
        Place::Finite(FiniteLabel::Opaque(label.into()))
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Place::Real(_))
    }

    /// Parses the textual syntax: "inf<i>" for real places, a decimal prime,
    /// or "v:<label>" for opaque finite places.
    pub fn parse(s: &str) -> Result<Place> {
        if let Some(rest) = s.strip_prefix("inf") {
            let i: u32 = rest
                .parse()
                .map_err(|_| Error::usage(format!("bad real place {s:?}")))?;
            return Ok(Place::Real(i));
        }
        if let Some(rest) = s.strip_prefix("v:") {
            if rest.is_empty() {
                return Err(Error::usage("opaque place label must be nonempty".to_string()));
            }
            return Ok(Place::opaque(rest));
        }
        let p: u64 = s
            .parse()
            .map_err(|_| Error::usage(format!("bad place {s:?}")))?;
        if p < 2 {
            return Err(Error::usage(format!("{p} is not a prime")));
        }
        Ok(Place::prime(p))
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real(i) => write!(f, "inf{i}"),
            Place::Finite(l) => write!(f, "{l}"),
        }
    }
}

/// A sign in {+1, -1}, used for epsilon factors and Atkin-Lehner eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EpsilonSign {
    Plus,
    Minus,
}

impl EpsilonSign {
    pub fn as_i64(self) -> i64 {
        match self {
            EpsilonSign::Plus => 1,
            EpsilonSign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            1 => Ok(EpsilonSign::Plus),
            -1 => Ok(EpsilonSign::Minus),
            _ => Err(Error::data(format!("sign must be +1 or -1, got {v}"))),
        }
    }

    pub fn product(signs: impl IntoIterator<Item = EpsilonSign>) -> EpsilonSign {
        let mut acc = EpsilonSign::Plus;
        for s in signs {
            acc = acc * s;
        }
        acc
    }
}

impl std::ops::Mul for EpsilonSign {
    type Output = EpsilonSign;
    fn mul(self, rhs: EpsilonSign) -> EpsilonSign {
        if self == rhs {
            EpsilonSign::Plus
        } else {
            EpsilonSign::Minus
        }
    }
}

impl fmt::Display for EpsilonSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonSign::Plus => write!(f, "+1"),
            EpsilonSign::Minus => write!(f, "-1"),
        }
    }
}

impl Serialize for EpsilonSign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.as_i64())
    }
}

impl<'de> Deserialize<'de> for EpsilonSign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        EpsilonSign::from_i64(v).map_err(serde::de::Error::custom)
    }
}

/// A quaternion algebra over a base field, presented by its ramification set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuaternionAlgebra {
    pub base: FieldDesc,
    pub ramified: BTreeSet<Place>,
}

impl QuaternionAlgebra {
    pub fn new(base: FieldDesc, ramified: BTreeSet<Place>) -> Result<Self> {
        base.validate()?;
        for place in &ramified {
            if let Place::Real(i) = place {
                if *i >= base.real_places {
                    return Err(Error::usage(format!(
                        "real place inf{i} does not exist on {} (it has {} real places)",
                        base.label, base.real_places
                    )));
                }
            }
        }
        if ramified.len() % 2 != 0 {
            return Err(Error::data(format!(
                "ramification set has odd size {}; the product formula over all places \
                 requires \u{220f}_v \u{3b5}_v = 1, so an even number of places must ramify",
                ramified.len()
            )));
        }
        Ok(QuaternionAlgebra { base, ramified })
    }

    pub fn is_matrix_algebra(&self) -> bool {
        self.ramified.is_empty()
    }

    pub fn discriminant_places(&self) -> impl Iterator<Item = &Place> {
        self.ramified.iter()
    }
}

/// The local Hasse invariant of the algebra at a place of its base field.
/// Asking at a place the base field does not have is a usage error.
pub fn hasse_invariant(alg: &QuaternionAlgebra, place: &Place) -> Result<EpsilonSign> {
    if let Place::Real(i) = place {
        if *i >= alg.base.real_places {
            return Err(Error::usage(format!(
                "place inf{i} is not a place of {}",
                alg.base.label
            )));
        }
    }
    Ok(if alg.ramified.contains(place) {
        EpsilonSign::Minus
    } else {
        EpsilonSign::Plus
    })
}

/// Rebuilds a quaternion algebra from a full set of local invariants, i.e.
/// the set of places where the invariant is -1.
pub fn quaternion_from_invariants(
    base: FieldDesc,
    minus_places: impl IntoIterator<Item = Place>,
) -> Result<QuaternionAlgebra> {
    let ramified: BTreeSet<Place> = minus_places.into_iter().collect();
    QuaternionAlgebra::new(base, ramified)
}

/// True when exactly one real place of the base field fails to ramify.
pub fn is_almost_definite(alg: &QuaternionAlgebra) -> bool {
    let ramified_real = alg
        .ramified
        .iter()
        .filter(|p| p.is_real())
        .count() as u32;
    alg.base.real_places == ramified_real + 1
}

/// The Legendre symbol (a/p) for an odd prime p, via Euler's criterion.
pub fn legendre(a: i64, p: u64) -> Result<i64> {
    if p < 3 || p % 2 == 0 || !is_prime(p) {
        return Err(Error::usage(format!("legendre symbol needs an odd prime, got {p}")));
    }
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return Ok(0);
    }
    let e = pow_mod(r, (p - 1) / 2, p);
    Ok(if e == 1 { 1 } else { -1 })
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mm = m as u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            m /= d;
            if m % d == 0 {
                return false;
            }
        }
        d += 1;
    }
    true
}

pub fn prime_factors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            out.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Multiplicity of the prime p in n.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n % p == 0 && n > 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Smallest squarefree d > 1 such that the real quadratic field Q(sqrt(d))
/// splits at every prime in `primes`: for odd p, either p | d is excluded and
/// (d/p) = +1 is required; for p = 2, d = 1 mod 8 is required. Search is
/// bounded; exceeding the bound is an internal error.
pub fn find_real_quadratic_split(primes: &BTreeSet<u64>) -> Result<u64> {
    for p in primes {
        if !is_prime(*p) {
            return Err(Error::usage(format!("{p} is not a prime")));
        }
    }
    const BOUND: u64 = 1_000_000;
    'candidate: for d in 2..=BOUND {
        if !is_squarefree(d) {
            continue;
        }
        for &p in primes {
            if p == 2 {
                if d % 8 != 1 {
                    continue 'candidate;
                }
            } else {
                if d % p == 0 || legendre(d as i64, p)? != 1 {
                    continue 'candidate;
                }
            }
        }
        return Ok(d);
    }
    Err(Error::internal(format!(
        "no split quadratic discriminant below {BOUND} for primes {primes:?}"
    )))
}

/// Torsion units of the ring of integers of a totally real field of degree
/// >= 1: always exactly {1, -1}, since the only roots of unity on the real
/// line are +-1.
pub fn torsion_units_totally_real(field: &FieldDesc) -> Result<Vec<i64>> {
    field.validate()?;
    if field.real_places != field.degree {
        return Err(Error::usage(format!(
            "field {} is not totally real ({} real places, degree {})",
            field.label, field.real_places, field.degree
        )));
    }
    Ok(vec![1, -1])
}
