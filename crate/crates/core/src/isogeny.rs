//! Exact calculus of semisimple endomorphism algebras of Jacobians: block
//! decompositions over totally real number fields, dual pairings, isotypic
//! projectors, transpose duality, and the related projector identities.

use crate::cyclotomic::Rational;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Serializes a rational exactly: a JSON integer when the denominator is 1
/// and the numerator fits i64, otherwise the string "p/q".
pub fn rational_to_json(r: &Rational) -> serde_json::Value {
    if r.denom().is_one() {
        if let Ok(n) = i64::try_from(r.numer().clone()) {
            return serde_json::Value::from(n);
        }
    }
    serde_json::Value::from(r.to_string())
}

/// Parses the exact rational encoding accepted by `rational_to_json`.
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(BigInt::from(i)))
            } else if let Some(u) = n.as_u64() {
                Ok(Rational::from_integer(BigInt::from(u)))
            } else {
                Err(Error::data(format!(
                    "schema: {n} is not an exact integer; use \"p/q\" strings for rationals"
                )))
            }
        }
        serde_json::Value::String(s) => s
            .parse::<Rational>()
            .map_err(|e| Error::data(format!("schema: bad rational {s:?}: {e}"))),
        other => Err(Error::data(format!("schema: expected rational, got {other}"))),
    }
}

fn rat_i64(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

// Polynomials are coefficient vectors in ascending degree with no trailing
// zeros; the zero polynomial is the empty vector.

fn poly_trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(out)
}

/// Remainder of a by b (b nonzero), exact division over the rationals.
fn poly_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r: Vec<Rational> = poly_trim(a.to_vec());
    let db = b.len() - 1;
    let lead = &b[db];
    while r.len() > db {
        let dr = r.len() - 1;
        let q = &r[dr] / lead;
        for i in 0..=db {
            let t = &q * &b[i];
            r[dr - db + i] -= t;
        }
        r = poly_trim(r);
        if r.len() <= db {
            break;
        }
    }
    r
}

fn poly_derivative(p: &[Rational]) -> Vec<Rational> {
    if p.len() <= 1 {
        return Vec::new();
    }
    poly_trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * rat_i64(i as i64))
            .collect(),
    )
}

fn poly_gcd_degree(a: &[Rational], b: &[Rational]) -> usize {
    let mut x = poly_trim(a.to_vec());
    let mut y = poly_trim(b.to_vec());
    while !y.is_empty() {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    x.len().saturating_sub(1)
}

fn sign_at_plus_infinity(p: &[Rational]) -> i32 {
    match p.last() {
        None => 0,
        Some(c) if c.is_positive() => 1,
        Some(_) => -1,
    }
}

fn sign_at_minus_infinity(p: &[Rational]) -> i32 {
    let s = sign_at_plus_infinity(p);
    if s == 0 {
        return 0;
    }
    if (p.len() - 1) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn sign_variations(signs: impl Iterator<Item = i32>) -> usize {
    let mut count = 0;
    let mut last = 0;
    for s in signs.filter(|s| *s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Number of distinct real roots of a squarefree polynomial, by Sturm's
/// theorem with exact rational arithmetic.
fn real_root_count(p: &[Rational]) -> usize {
    let mut chain: Vec<Vec<Rational>> = vec![poly_trim(p.to_vec()), poly_derivative(p)];
    loop {
        let last = &chain[chain.len() - 1];
        if last.is_empty() {
            chain.pop();
            break;
        }
        let prev = &chain[chain.len() - 2];
        let mut r = poly_rem(prev, last);
        for c in &mut r {
            *c = -c.clone();
        }
        chain.push(r);
    }
    let at_minus = sign_variations(chain.iter().map(|q| sign_at_minus_infinity(q)));
    let at_plus = sign_variations(chain.iter().map(|q| sign_at_plus_infinity(q)));
    at_minus - at_plus
}

/// One simple isogeny factor: a label, the minimal polynomial of a generator
/// of its endomorphism field, and its multiplicity in the Jacobian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleFactor {
    pub label: String,
    pub min_poly: Vec<Rational>,
    pub multiplicity: u32,
}

impl SimpleFactor {
    pub fn field_degree(&self) -> usize {
        self.min_poly.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.min_poly.len();
        if d < 2 {
            return Err(Error::data(format!(
                "invariant: factor {}: min_poly must have degree >= 1",
                self.label
            )));
        }
        if !self.min_poly[d - 1].is_one() {
            return Err(Error::data(format!(
                "invariant: factor {}: min_poly must be monic",
                self.label
            )));
        }
        let fp = poly_derivative(&self.min_poly);
        if poly_gcd_degree(&self.min_poly, &fp) != 0 {
            return Err(Error::data(format!(
                "invariant: factor {}: min_poly is not squarefree",
                self.label
            )));
        }
        if real_root_count(&self.min_poly) != d - 1 {
            return Err(Error::data(format!(
                "invariant: factor {}: min_poly does not have all-real roots \
                 (the endomorphism field must be totally real)",
                self.label
            )));
        }
        Ok(())
    }
}

/// A semisimple endomorphism-algebra shape: a list of simple factors with
/// distinct labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraSpec {
    pub factors: Vec<SimpleFactor>,
}

impl AlgebraSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.factors {
            f.validate()?;
            if !seen.insert(&f.label) {
                return Err(Error::data(format!(
                    "invariant: duplicate factor label {:?}",
                    f.label
                )));
            }
        }
        Ok(())
    }

    pub fn factor(&self, label: &str) -> Option<&SimpleFactor> {
        self.factors.iter().find(|f| f.label == label)
    }
}

impl Serialize for SimpleFactor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SimpleFactor", 3)?;
        st.serialize_field("label", &self.label)?;
        let coeffs: Vec<serde_json::Value> = self.min_poly.iter().map(rational_to_json).collect();
        st.serialize_field("min_poly", &coeffs)?;
        st.serialize_field("multiplicity", &self.multiplicity)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SimpleFactor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            label: String,
            min_poly: Vec<serde_json::Value>,
            multiplicity: u32,
        }
        let repr = Repr::deserialize(d)?;
        let min_poly = repr
            .min_poly
            .iter()
            .map(rational_from_json)
            .collect::<Result<Vec<_>>>()
            .map_err(DeError::custom)?;
        Ok(SimpleFactor {
            label: repr.label,
            min_poly,
            multiplicity: repr.multiplicity,
        })
    }
}

impl Serialize for AlgebraSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("AlgebraSpec", 1)?;
        st.serialize_field("factors", &self.factors)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for AlgebraSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            factors: Vec<SimpleFactor>,
        }
        let repr = Repr::deserialize(d)?;
        let spec = AlgebraSpec {
            factors: repr.factors,
        };
        spec.validate().map_err(DeError::custom)?;
        Ok(spec)
    }
}

/// A number-field element: coefficient vector of length equal to the field
/// degree, in the power basis of the factor's minimal polynomial.
pub type NfElt = Vec<Rational>;

/// A matrix over one factor's endomorphism field.
pub type NfMat = Vec<Vec<NfElt>>;

pub fn nf_zero(degree: usize) -> NfElt {
    vec![Rational::zero(); degree]
}

pub fn nf_one(degree: usize) -> NfElt {
    let mut e = nf_zero(degree);
    e[0] = Rational::one();
    e
}

pub fn nf_is_zero(a: &NfElt) -> bool {
    a.iter().all(|c| c.is_zero())
}

pub fn nf_add(a: &NfElt, b: &NfElt) -> NfElt {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn nf_sub(a: &NfElt, b: &NfElt) -> NfElt {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Product in the field defined by the monic `min_poly`.
pub fn nf_mul(min_poly: &[Rational], a: &NfElt, b: &NfElt) -> NfElt {
    let degree = min_poly.len() - 1;
    let prod = poly_mul(a, b);
    let mut red = poly_rem(&prod, min_poly);
    red.resize(degree, Rational::zero());
    red
}

fn mat_zero(degree: usize, rows: usize, cols: usize) -> NfMat {
    vec![vec![nf_zero(degree); cols]; rows]
}

fn mat_identity(degree: usize, n: usize) -> NfMat {
    let mut m = mat_zero(degree, n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = nf_one(degree);
    }
    m
}

fn mat_add(a: &NfMat, b: &NfMat) -> NfMat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| nf_add(x, y)).collect())
        .collect()
}

fn mat_mul(min_poly: &[Rational], a: &NfMat, b: &NfMat) -> NfMat {
    let degree = min_poly.len() - 1;
    let rows = a.len();
    let cols = if b.is_empty() { 0 } else { b[0].len() };
    let inner = b.len();
    let mut out = mat_zero(degree, rows, cols);
    for i in 0..rows {
        for k in 0..inner {
            if nf_is_zero(&a[i][k]) {
                continue;
            }
            for j in 0..cols {
                let t = nf_mul(min_poly, &a[i][k], &b[k][j]);
                out[i][j] = nf_add(&out[i][j], &t);
            }
        }
    }
    out
}

fn mat_transpose(a: &NfMat) -> NfMat {
    if a.is_empty() {
        return Vec::new();
    }
    let rows = a.len();
    let cols = a[0].len();
    (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j].clone()).collect())
        .collect()
}

/// An element of the endomorphism algebra: one square block per factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraElement {
    pub blocks: BTreeMap<String, NfMat>,
}

/// An element of Hom(J, J') between two specs: one rectangular block per
/// shared factor label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomElement {
    pub blocks: BTreeMap<String, NfMat>,
}

fn check_block_shape(
    context: &str,
    label: &str,
    m: &NfMat,
    degree: usize,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::usage(format!(
            "{context}: block {label:?} must be {rows} x {cols}"
        )));
    }
    if m.iter().flatten().any(|e| e.len() != degree) {
        return Err(Error::usage(format!(
            "{context}: block {label:?} entries must have {degree} coefficients"
        )));
    }
    Ok(())
}

/// Validates that an element matches a spec: exactly one d_A x d_A block per
/// factor, entries in the right field.
pub fn validate_element(spec: &AlgebraSpec, x: &AlgebraElement) -> Result<()> {
    for f in &spec.factors {
        let block = x.blocks.get(&f.label).ok_or_else(|| {
            Error::usage(format!("element is missing block {:?}", f.label))
        })?;
        check_block_shape(
            "element",
            &f.label,
            block,
            f.field_degree(),
            f.multiplicity as usize,
            f.multiplicity as usize,
        )?;
    }
    if x.blocks.len() != spec.factors.len() {
        return Err(Error::usage("element has blocks at unknown factor labels"));
    }
    Ok(())
}

/// Validates a Hom element between two specs: blocks exactly at shared
/// labels, each d'_A x d_A, with matching endomorphism fields.
pub fn validate_hom(spec_from: &AlgebraSpec, spec_to: &AlgebraSpec, z: &HomElement) -> Result<()> {
    let mut expected = 0;
    for f in &spec_from.factors {
        let Some(g) = spec_to.factor(&f.label) else {
            continue;
        };
        if f.min_poly != g.min_poly {
            return Err(Error::usage(format!(
                "shared factor {:?} has different minimal polynomials in the two specs",
                f.label
            )));
        }
        expected += 1;
        let block = z.blocks.get(&f.label).ok_or_else(|| {
            Error::usage(format!("hom element is missing shared block {:?}", f.label))
        })?;
        check_block_shape(
            "hom element",
            &f.label,
            block,
            f.field_degree(),
            g.multiplicity as usize,
            f.multiplicity as usize,
        )?;
    }
    if z.blocks.len() != expected {
        return Err(Error::usage(
            "hom element has blocks at non-shared labels",
        ));
    }
    Ok(())
}

pub fn zero_element(spec: &AlgebraSpec) -> AlgebraElement {
    AlgebraElement {
        blocks: spec
            .factors
            .iter()
            .map(|f| {
                let d = f.multiplicity as usize;
                (f.label.clone(), mat_zero(f.field_degree(), d, d))
            })
            .collect(),
    }
}

pub fn identity_element(spec: &AlgebraSpec) -> AlgebraElement {
    AlgebraElement {
        blocks: spec
            .factors
            .iter()
            .map(|f| {
                (
                    f.label.clone(),
                    mat_identity(f.field_degree(), f.multiplicity as usize),
                )
            })
            .collect(),
    }
}

pub fn elt_add(spec: &AlgebraSpec, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    AlgebraElement {
        blocks: spec
            .factors
            .iter()
            .map(|f| {
                (
                    f.label.clone(),
                    mat_add(&x.blocks[&f.label], &y.blocks[&f.label]),
                )
            })
            .collect(),
    }
}

pub fn elt_mul(spec: &AlgebraSpec, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    AlgebraElement {
        blocks: spec
            .factors
            .iter()
            .map(|f| {
                (
                    f.label.clone(),
                    mat_mul(&f.min_poly, &x.blocks[&f.label], &y.blocks[&f.label]),
                )
            })
            .collect(),
    }
}

/// The isotypic projector for a factor label: identity on the named block
/// and zero elsewhere. An absent label yields the zero element.
pub fn isotypic_projector(spec: &AlgebraSpec, label: &str) -> AlgebraElement {
    let mut e = zero_element(spec);
    if let Some(f) = spec.factor(label) {
        e.blocks.insert(
            f.label.clone(),
            mat_identity(f.field_degree(), f.multiplicity as usize),
        );
    }
    e
}

/// The perfect pairing of a row vector against a column vector over one
/// factor's field: the composite scalar, i.e. the sum of coordinatewise
/// products.
pub fn dual_pairing(factor: &SimpleFactor, phi: &[NfElt], psi: &[NfElt]) -> Result<NfElt> {
    let d = factor.multiplicity as usize;
    if phi.len() != d || psi.len() != d {
        return Err(Error::usage(format!(
            "pairing over {:?} needs vectors of length {d}, got {} and {}",
            factor.label,
            phi.len(),
            psi.len()
        )));
    }
    let degree = factor.field_degree();
    let mut acc = nf_zero(degree);
    for (a, b) in phi.iter().zip(psi) {
        acc = nf_add(&acc, &nf_mul(&factor.min_poly, a, b));
    }
    Ok(acc)
}

/// Blockwise matrix transpose; an exact anti-involution fixing every
/// isotypic projector (the field involution is trivial, totally real).
pub fn transpose(spec: &AlgebraSpec, x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement {
        blocks: spec
            .factors
            .iter()
            .map(|f| (f.label.clone(), mat_transpose(&x.blocks[&f.label])))
            .collect(),
    }
}

fn hom_project_target(spec_to: &AlgebraSpec, z: &HomElement, label: &str) -> HomElement {
    HomElement {
        blocks: z
            .blocks
            .iter()
            .map(|(l, m)| {
                if l == label {
                    (l.clone(), m.clone())
                } else {
                    let f = spec_to.factor(l).expect("validated");
                    let rows = m.len();
                    let cols = if rows == 0 { 0 } else { m[0].len() };
                    (l.clone(), mat_zero(f.field_degree(), rows, cols))
                }
            })
            .collect(),
    }
}

fn hom_project_source(spec_from: &AlgebraSpec, z: &HomElement, label: &str) -> HomElement {
    hom_project_target(spec_from, z, label)
}

/// Checks the three-way identity: composing z with the target isotypic
/// projector, with both projectors, or with the source projector gives the
/// same Hom element.
pub fn mterms_check(
    spec_from: &AlgebraSpec,
    spec_to: &AlgebraSpec,
    z: &HomElement,
    label: &str,
) -> Result<bool> {
    spec_from.validate()?;
    spec_to.validate()?;
    validate_hom(spec_from, spec_to, z)?;
    let left = hom_project_target(spec_to, z, label);
    let right = hom_project_source(spec_from, z, label);
    let both = hom_project_source(spec_from, &left, label);
    Ok(left == both && both == right)
}

/// Verifies that the isotypic projectors form a complete orthogonal system
/// of idempotents summing to the identity.
pub fn projector_decomposition_check(spec: &AlgebraSpec) -> Result<bool> {
    spec.validate()?;
    let projectors: Vec<AlgebraElement> = spec
        .factors
        .iter()
        .map(|f| isotypic_projector(spec, &f.label))
        .collect();
    let mut sum = zero_element(spec);
    for p in &projectors {
        sum = elt_add(spec, &sum, p);
    }
    if sum != identity_element(spec) {
        return Ok(false);
    }
    for (i, p) in projectors.iter().enumerate() {
        if &elt_mul(spec, p, p) != p {
            return Ok(false);
        }
        for (j, q) in projectors.iter().enumerate() {
            if i != j && elt_mul(spec, p, q) != zero_element(spec) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
