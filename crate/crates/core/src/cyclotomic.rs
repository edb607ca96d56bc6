//! Exact arithmetic in cyclotomic fields Q(zeta_n).
//!
//! Elements are stored on the power basis 1, zeta, ..., zeta^(phi(n)-1) with
//! arbitrary-precision rational coefficients, reduced modulo the n-th
//! cyclotomic polynomial. Representation is canonical, so structural equality
//! is field-element equality.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub type Rational = num_rational::BigRational;

/// Euler's totient.
pub fn euler_phi(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result = result / p * (p - 1);
        }
        p += 1;
    }
    if m > 1 {
        result = result / m * (m - 1);
    }
    result
}

static CYCLO_CACHE: Lazy<Mutex<HashMap<u64, Arc<Vec<BigInt>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Monic integer coefficients (ascending) of the n-th cyclotomic polynomial.
pub fn cyclotomic_poly(n: u64) -> Arc<Vec<BigInt>> {
    if let Some(p) = CYCLO_CACHE.lock().unwrap().get(&n) {
        return Arc::clone(p);
    }
    // x^n - 1 divided by the product of Phi_d over proper divisors d of n.
    let mut num: Vec<BigInt> = vec![BigInt::zero(); (n + 1) as usize];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_poly(d);
            num = int_poly_div_exact(&num, &phi_d);
        }
    }
    let arc = Arc::new(num);
    CYCLO_CACHE.lock().unwrap().insert(n, Arc::clone(&arc));
    arc
}

/// Exact division of integer polynomials, divisor monic; panics on nonzero remainder.
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    assert!(den.last().map(|c| c.is_one()).unwrap_or(false));
    let mut rem: Vec<BigInt> = num.to_vec();
    let dn = den.len() - 1;
    if rem.len() <= dn {
        assert!(rem.iter().all(|c| c.is_zero()));
        return vec![BigInt::zero()];
    }
    let mut quot = vec![BigInt::zero(); rem.len() - dn];
    for i in (dn..rem.len()).rev() {
        let c = rem[i].clone();
        if c.is_zero() {
            continue;
        }
        quot[i - dn] = c.clone();
        for (j, dc) in den.iter().enumerate() {
            let idx = i - dn + j;
            rem[idx] = &rem[idx] - &c * dc;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact polynomial division");
    quot
}

/// An exact element of Q(zeta_n) in the power basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloElt {
    modulus: u64,
    coeffs: Vec<Rational>,
}

impl CycloElt {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn zero(n: u64) -> Self {
        assert!(n >= 1);
        CycloElt {
            modulus: n,
            coeffs: vec![Rational::zero(); euler_phi(n) as usize],
        }
    }

    pub fn one(n: u64) -> Self {
        Self::from_rational(n, Rational::one())
    }

    pub fn from_rational(n: u64, r: Rational) -> Self {
        let mut e = Self::zero(n);
        e.coeffs[0] = r;
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Reduces an ascending coefficient list modulo Phi_n to power-basis length.
fn reduce_mod_cyclo(n: u64, mut poly: Vec<Rational>) -> Vec<Rational> {
    let phi = euler_phi(n) as usize;
    let cp = cyclotomic_poly(n);
    let den: Vec<Rational> = cp.iter().map(|c| Rational::from_integer(c.clone())).collect();
    while poly.len() > phi {
        let i = poly.len() - 1;
        let c = poly[i].clone();
        if !c.is_zero() {
            let shift = i - (den.len() - 1);
            for (j, dc) in den.iter().enumerate() {
                poly[shift + j] -= &c * dc;
            }
        }
        poly.pop();
    }
    poly.resize(phi, Rational::zero());
    poly
}

/// zeta_n^k reduced to the power basis; k is taken modulo n.
pub fn zeta(n: u64, k: i64) -> CycloElt {
    assert!(n >= 1, "modulus must be positive");
    let k = k.rem_euclid(n as i64) as usize;
    let mut poly = vec![Rational::zero(); k + 1];
    poly[k] = Rational::one();
    CycloElt {
        modulus: n,
        coeffs: reduce_mod_cyclo(n, poly),
    }
}

fn check_same_modulus(a: &CycloElt, b: &CycloElt) -> Result<()> {
    if a.modulus != b.modulus {
        return Err(Error::usage(format!(
            "cyclotomic modulus mismatch: {} vs {}",
            a.modulus, b.modulus
        )));
    }
    Ok(())
}

pub fn add(a: &CycloElt, b: &CycloElt) -> Result<CycloElt> {
    check_same_modulus(a, b)?;
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x + y)
        .collect();
    Ok(CycloElt {
        modulus: a.modulus,
        coeffs,
    })
}

pub fn sub(a: &CycloElt, b: &CycloElt) -> Result<CycloElt> {
    check_same_modulus(a, b)?;
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x - y)
        .collect();
    Ok(CycloElt {
        modulus: a.modulus,
        coeffs,
    })
}

pub fn neg(a: &CycloElt) -> CycloElt {
    CycloElt {
        modulus: a.modulus,
        coeffs: a.coeffs.iter().map(|x| -x).collect(),
    }
}

pub fn mul(a: &CycloElt, b: &CycloElt) -> Result<CycloElt> {
    check_same_modulus(a, b)?;
    let mut conv = vec![Rational::zero(); a.coeffs.len() + b.coeffs.len()];
    for (i, x) in a.coeffs.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            conv[i + j] += x * y;
        }
    }
    Ok(CycloElt {
        modulus: a.modulus,
        coeffs: reduce_mod_cyclo(a.modulus, conv),
    })
}

pub fn scalar_mul(r: &Rational, a: &CycloElt) -> CycloElt {
    CycloElt {
        modulus: a.modulus,
        coeffs: a.coeffs.iter().map(|x| x * r).collect(),
    }
}

/// Re-expresses a in Q(zeta_m); the modulus of a must divide m.
pub fn embed(a: &CycloElt, m: u64) -> Result<CycloElt> {
    if m % a.modulus != 0 {
        return Err(Error::usage(format!(
            "embed target modulus {} is not a multiple of {}",
            m, a.modulus
        )));
    }
    let step = (m / a.modulus) as usize;
    let mut poly = vec![Rational::zero(); (a.coeffs.len() - 1) * step + 1];
    for (i, c) in a.coeffs.iter().enumerate() {
        if !c.is_zero() {
            poly[i * step] = c.clone();
        }
    }
    Ok(CycloElt {
        modulus: m,
        coeffs: reduce_mod_cyclo(m, poly),
    })
}

/// Complex conjugation, the automorphism zeta -> zeta^(-1).
pub fn conj(a: &CycloElt) -> CycloElt {
    let n = a.modulus;
    let mut acc = CycloElt::zero(n);
    for (i, c) in a.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = scalar_mul(c, &zeta(n, -(i as i64)));
        acc = add(&acc, &term).expect("same modulus");
    }
    acc
}

/// The rational value of a when it lies in Q, otherwise None.
pub fn rational_part(a: &CycloElt) -> Option<Rational> {
    if a.coeffs[1..].iter().all(|c| c.is_zero()) {
        Some(a.coeffs[0].clone())
    } else {
        None
    }
}

/// Convenience: exact nonnegative-integer extraction for multiplicity sums.
pub fn nonneg_integer_part(a: &CycloElt) -> Option<u64> {
    let r = rational_part(a)?;
    if !r.denom().is_one() || r.numer().is_negative() {
        return None;
    }
    let (_, digits) = r.numer().to_u64_digits();
    match digits.len() {
        0 => Some(0),
        1 => Some(digits[0]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    #[test]
    fn zeta_of_order_one_is_one() {
        assert_eq!(zeta(1, 0), CycloElt::one(1));
        assert_eq!(zeta(1, 5), CycloElt::one(1));
    }

    #[test]
    fn fourth_roots_cancel() {
        let s = add(&zeta(4, 1), &zeta(4, 3)).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn golden_ratio_minimal_polynomial() {
        // u = zeta_5 + zeta_5^4 = 2cos(2pi/5) satisfies u^2 + u - 1 = 0.
        let u = add(&zeta(5, 1), &zeta(5, 4)).unwrap();
        let u2 = mul(&u, &u).unwrap();
        let lhs = sub(&add(&u2, &u).unwrap(), &CycloElt::one(5)).unwrap();
        assert!(lhs.is_zero());
    }

    #[test]
    fn cube_roots_multiply_and_sum() {
        let prod = mul(&zeta(3, 1), &zeta(3, 2)).unwrap();
        assert_eq!(prod, CycloElt::one(3));
        let s = add(&zeta(3, 1), &zeta(3, 2)).unwrap();
        assert_eq!(s, CycloElt::from_rational(3, rat(-1)));
    }

    #[test]
    fn eighth_root_fourth_power_is_minus_one() {
        let z = zeta(8, 1);
        let mut acc = CycloElt::one(8);
        for _ in 0..4 {
            acc = mul(&acc, &z).unwrap();
        }
        assert_eq!(acc, CycloElt::from_rational(8, rat(-1)));
    }

    #[test]
    fn embed_moves_between_moduli() {
        assert_eq!(embed(&zeta(2, 1), 6).unwrap(), zeta(6, 3));
        assert_eq!(embed(&zeta(3, 1), 6).unwrap(), zeta(6, 2));
        assert_eq!(
            embed(&CycloElt::one(3), 12).unwrap(),
            CycloElt::one(12)
        );
    }

    #[test]
    fn embed_rejects_non_divisible_modulus() {
        assert!(embed(&zeta(4, 1), 6).is_err());
    }

    #[test]
    fn mismatched_moduli_rejected() {
        assert!(add(&zeta(3, 1), &zeta(4, 1)).is_err());
        assert!(mul(&zeta(3, 1), &zeta(4, 1)).is_err());
    }

    #[test]
    fn rational_part_detects_rationality() {
        let s = add(&zeta(3, 1), &zeta(3, 2)).unwrap();
        assert_eq!(rational_part(&s), Some(rat(-1)));
        assert_eq!(rational_part(&zeta(5, 1)), None);
    }

    #[test]
    fn conj_is_involution_and_fixes_real_sums() {
        let u = add(&zeta(7, 2), &zeta(7, 5)).unwrap();
        assert_eq!(conj(&u), u);
        let z = zeta(7, 3);
        assert_eq!(conj(&conj(&z)), z);
    }

    #[test]
    fn power_and_sum_relations_all_moduli() {
        for n in 2..=60u64 {
            let z = zeta(n, 1);
            let mut pow = CycloElt::one(n);
            for _ in 0..n {
                pow = mul(&pow, &z).unwrap();
            }
            assert_eq!(pow, CycloElt::one(n), "zeta({n})^{n} != 1");
            let mut s = CycloElt::zero(n);
            for k in 0..n {
                s = add(&s, &zeta(n, k as i64)).unwrap();
            }
            assert!(s.is_zero(), "sum of all {n}-th roots of unity != 0");
        }
    }

    fn elt_from(n: u64, v: &[i64]) -> CycloElt {
        let mut e = CycloElt::zero(n);
        for (i, x) in v.iter().enumerate() {
            e.coeffs[i] = rat(*x);
        }
        e
    }

    fn arb_triple() -> impl Strategy<Value = (u64, Vec<i64>, Vec<i64>, Vec<i64>)> {
        prop::sample::select(vec![3u64, 4, 5, 8, 12, 15, 24, 36, 45, 60]).prop_flat_map(|n| {
            let phi = euler_phi(n) as usize;
            let coeffs = || proptest::collection::vec(-6i64..=6, phi);
            (Just(n), coeffs(), coeffs(), coeffs())
        })
    }

    proptest! {
        #[test]
        fn ring_axioms((n, va, vb, vc) in arb_triple()) {
            let a = elt_from(n, &va);
            let b = elt_from(n, &vb);
            let c = elt_from(n, &vc);
            // associativity and commutativity of both operations
            prop_assert_eq!(
                add(&add(&a, &b).unwrap(), &c).unwrap(),
                add(&a, &add(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(add(&a, &b).unwrap(), add(&b, &a).unwrap());
            prop_assert_eq!(
                mul(&mul(&a, &b).unwrap(), &c).unwrap(),
                mul(&a, &mul(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(mul(&a, &b).unwrap(), mul(&b, &a).unwrap());
            // distributivity
            prop_assert_eq!(
                mul(&a, &add(&b, &c).unwrap()).unwrap(),
                add(&mul(&a, &b).unwrap(), &mul(&a, &c).unwrap()).unwrap()
            );
            // cancellation to canonical zero
            prop_assert!(sub(&a, &a).unwrap().is_zero());
        }

        #[test]
        fn embed_is_ring_homomorphism(va in proptest::collection::vec(-6i64..=6, 2),
                                      vb in proptest::collection::vec(-6i64..=6, 2)) {
            let a = elt_from(6, &va);
            let b = elt_from(6, &vb);
            let lhs = embed(&mul(&a, &b).unwrap(), 24).unwrap();
            let rhs = mul(&embed(&a, 24).unwrap(), &embed(&b, 24).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            let lhs = embed(&add(&a, &b).unwrap(), 24).unwrap();
            let rhs = add(&embed(&a, 24).unwrap(), &embed(&b, 24).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
