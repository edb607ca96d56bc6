//! Constructive side: split towers of real quadratic extensions, almost
//! definite quaternion selection with prescribed local invariants, and
//! self-contained certificates for forced vanishing at a chosen place.

use crate::arith::{
    find_real_quadratic_split, is_almost_definite, is_prime, EpsilonSign, FieldDesc, FiniteLabel,
    Place, QuaternionAlgebra,
};
use crate::data::{CertPayload, Dataset};
use crate::error::{Error, Result};
use crate::localglobal::LocalKind;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on tower height; 2^24 places is already far beyond any use.
pub const MAX_TOWER_LAYERS: u32 = 24;

/// An abstract tower of quadratic extensions over `base`, each layer split
/// above `split_place`, recorded by the places over it and the coarse
/// descriptor of the top field. The tower does not refine real places, so
/// the top field keeps the base's real place count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDesc {
    pub base: FieldDesc,
    pub layers: u32,
    pub split_place: Place,
    pub places_over: Vec<Place>,
    pub field: FieldDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_layer_d: Option<u64>,
}

/// Builds the tower descriptor: 2^layers degree-one places over
/// `split_place`, labeled "<place>.<i>" with i starting at 1. Over the
/// rationals at a finite prime the first layer is made concrete as the real
/// quadratic field of smallest discriminant split at that prime.
pub fn build_split_tower(base: &FieldDesc, v: &Place, layers: u32) -> Result<TowerDesc> {
    base.validate()?;
    if let Place::Real(i) = v {
        if *i >= base.real_places {
            return Err(Error::usage(format!(
                "real place {v} is out of range for {} with {} real places",
                base.label, base.real_places
            )));
        }
    }
    if layers > MAX_TOWER_LAYERS {
        return Err(Error::usage(format!(
            "a tower of {layers} layers exceeds the supported maximum {MAX_TOWER_LAYERS}"
        )));
    }
    let m: usize = 1 << layers;
    let places_over = if layers == 0 {
        vec![v.clone()]
    } else {
        (1..=m).map(|i| Place::opaque(format!("{v}.{i}"))).collect()
    };
    let field = if layers == 0 {
        base.clone()
    } else {
        let degree = (base.degree as u64) << layers;
        if degree > u32::MAX as u64 {
            return Err(Error::usage(format!(
                "tower degree {degree} over {} is too large",
                base.label
            )));
        }
        FieldDesc {
            label: format!("{}-split-{v}-tower{layers}", base.label),
            degree: degree as u32,
            real_places: base.real_places,
        }
    };
    let first_layer_d = if layers >= 1 && *base == FieldDesc::rationals() {
        if let Place::Finite(FiniteLabel::Prime(p)) = v {
            Some(find_real_quadratic_split(&BTreeSet::from([*p]))?)
        } else {
            None
        }
    } else {
        None
    };
    Ok(TowerDesc {
        base: base.clone(),
        layers,
        split_place: v.clone(),
        places_over,
        field,
        first_layer_d,
    })
}

/// Picks the quaternion algebra over `field` ramified at every real place
/// except the first, subject to constraints (k, s) demanding that the Hasse
/// invariant at `places[k]` differ from s. Parity is repaired, when needed,
/// at the lowest-index unconstrained place, so the constraint count must
/// stay below the place count.
pub fn select_quaternion(
    field: &FieldDesc,
    places: &[Place],
    constraints: &[(usize, EpsilonSign)],
) -> Result<QuaternionAlgebra> {
    field.validate()?;
    if places.is_empty() {
        return Err(Error::usage("at least one finite place is required"));
    }
    for place in places {
        if place.is_real() {
            return Err(Error::usage(format!("place {place} must be finite")));
        }
    }
    let distinct: BTreeSet<&Place> = places.iter().collect();
    if distinct.len() != places.len() {
        return Err(Error::usage("the listed places must be distinct"));
    }
    if constraints.len() >= places.len() {
        return Err(Error::usage(format!(
            "{} constraints over {} places leave no slack to repair parity",
            constraints.len(),
            places.len()
        )));
    }
    let mut constrained: BTreeMap<usize, EpsilonSign> = BTreeMap::new();
    for &(k, forbidden) in constraints {
        if k >= places.len() {
            return Err(Error::usage(format!("constraint index {k} is out of range")));
        }
        if constrained.insert(k, forbidden).is_some() {
            return Err(Error::usage(format!("duplicate constraint at index {k}")));
        }
    }

    let mut ramified: BTreeSet<Place> = (1..field.real_places).map(Place::Real).collect();
    for (&k, &forbidden) in &constrained {
        if forbidden == EpsilonSign::Plus {
            ramified.insert(places[k].clone());
        }
    }
    if ramified.len() % 2 == 1 {
        let repair = (0..places.len())
            .find(|k| !constrained.contains_key(k))
            .expect("constraint count is below the place count");
        ramified.insert(places[repair].clone());
    }
    QuaternionAlgebra::new(field.clone(), ramified)
}

/// One orbit's contribution to a construction certificate: its label and the
/// local sign at the chosen place under each embedding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertInput {
    pub label: String,
    pub hecke_degree: u32,
    pub epsilons: Vec<EpsilonSign>,
}

/// One place over the split place together with the embedding-triple sign
/// the quaternion selection had to dodge there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub k: usize,
    pub place: Place,
    pub epsilon: EpsilonSign,
}

/// A self-contained record of one run of the vanishing construction. Every
/// field is re-derivable from `inputs` and `place`, which is what
/// `verify_certificate` exploits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionCertificate {
    pub inputs: [CertInput; 3],
    pub place: Place,
    pub n: u64,
    pub tower: TowerDesc,
    pub algebra: QuaternionAlgebra,
    pub witnesses: Vec<Witness>,
}

/// Smallest r with 2^r strictly greater than n.
pub fn minimal_layers(n: u64) -> u32 {
    let mut r = 0u32;
    while r < 63 && (1u64 << r) <= n {
        r += 1;
    }
    r
}

/// Signs of the triple form at each embedding triple, in lexicographic
/// order with the third input's embeddings varying fastest.
pub fn embedding_epsilons(inputs: &[CertInput; 3]) -> Vec<EpsilonSign> {
    let mut out = Vec::new();
    for &e1 in &inputs[0].epsilons {
        for &e2 in &inputs[1].epsilons {
            for &e3 in &inputs[2].epsilons {
                out.push(EpsilonSign::product([e1, e2, e3]));
            }
        }
    }
    out
}

fn orbit_input_at(dataset: &Dataset, label: &str, p: u64) -> Result<CertInput> {
    let orbit = crate::data::infer_local_types(dataset.orbit(label)?)?;
    let degree = orbit.hecke_degree as usize;
    let component = orbit.local_type_at(p);
    let epsilons = match &component.kind {
        LocalKind::Special { al_sign } => vec![*al_sign; degree],
        LocalKind::SupercuspidalDihedral { .. } | LocalKind::SupercuspidalOpaque { .. } => {
            let cert = dataset.orbit_certificate(label, p).ok_or_else(|| {
                Error::incomplete(format!(
                    "no certificate records embedding epsilons for {label} at {p}"
                ))
            })?;
            match &cert.payload {
                CertPayload::Dihedral {
                    embedding_epsilons: Some(eps),
                    ..
                } if eps.len() == degree => eps.clone(),
                CertPayload::Dihedral {
                    embedding_epsilons: Some(eps),
                    ..
                } => {
                    return Err(Error::data(format!(
                        "invariant: certificate {}: {} embedding epsilons for an orbit of \
                         degree {degree}",
                        cert.id,
                        eps.len()
                    )));
                }
                _ => {
                    return Err(Error::incomplete(format!(
                        "certificate {} does not record embedding epsilons for {label} at {p}",
                        cert.id
                    )));
                }
            }
        }
        LocalKind::UnramifiedPS | LocalKind::RamifiedPS => {
            return Err(Error::data(format!(
                "the construction needs a discrete series component for {label} at {p}"
            )));
        }
    };
    Ok(CertInput {
        label: label.to_string(),
        hecke_degree: orbit.hecke_degree,
        epsilons,
    })
}

/// End-to-end construction: reads the three orbits' embedding signs at p,
/// builds the minimal split tower with more places than embedding triples,
/// and selects the almost definite quaternion algebra whose Hasse invariant
/// disagrees with the triple sign over every witness place, so the triple
/// form vanishes at all of them.
pub fn vanishing_pipeline(
    dataset: &Dataset,
    labels: &[String; 3],
    p: u64,
) -> Result<ConstructionCertificate> {
    if !is_prime(p) {
        return Err(Error::usage(format!("{p} is not prime")));
    }
    let inputs = [
        orbit_input_at(dataset, &labels[0], p)?,
        orbit_input_at(dataset, &labels[1], p)?,
        orbit_input_at(dataset, &labels[2], p)?,
    ];
    let n: u64 = inputs.iter().map(|i| i.hecke_degree as u64).product();
    let place = Place::prime(p);
    let tower = build_split_tower(&FieldDesc::rationals(), &place, minimal_layers(n))?;
    let witnesses: Vec<Witness> = embedding_epsilons(&inputs)
        .into_iter()
        .enumerate()
        .map(|(k, epsilon)| Witness {
            k,
            place: tower.places_over[k].clone(),
            epsilon,
        })
        .collect();
    let constraints: Vec<(usize, EpsilonSign)> =
        witnesses.iter().map(|w| (w.k, w.epsilon)).collect();
    let algebra = select_quaternion(&tower.field, &tower.places_over, &constraints)?;
    Ok(ConstructionCertificate {
        inputs,
        place,
        n,
        tower,
        algebra,
        witnesses,
    })
}

/// Outcome of a standalone certificate verification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn render_text(&self) -> String {
        if self.ok {
            "certificate: ok\n".to_string()
        } else {
            format!("certificate: INVALID ({})\n", self.failures.join(", "))
        }
    }
}

fn note(failures: &mut Vec<String>, name: &str) {
    if !failures.iter().any(|f| f == name) {
        failures.push(name.to_string());
    }
}

fn label_matches_place(label: &str, place: &Place) -> bool {
    let parts: Vec<&str> = label.split('.').collect();
    if parts.len() != 4 || parts.iter().any(|s| s.is_empty()) {
        return false;
    }
    let level: u64 = match parts[0].parse() {
        Ok(v) if v > 0 => v,
        _ => return false,
    };
    if parts[1] != "2" {
        return false;
    }
    match place {
        Place::Finite(FiniteLabel::Prime(p)) => level % p == 0,
        _ => true,
    }
}

/// Re-derives every field of the certificate from its inputs and place and
/// reports each invariant that fails, by name. No dataset is consulted.
pub fn verify_certificate(cert: &ConstructionCertificate) -> VerificationReport {
    let mut failures: Vec<String> = Vec::new();

    for input in &cert.inputs {
        if input.hecke_degree == 0 || input.epsilons.len() != input.hecke_degree as usize {
            note(&mut failures, "embedding count");
        }
        if !label_matches_place(&input.label, &cert.place) {
            note(&mut failures, "input labels");
        }
    }

    let n: u64 = cert
        .inputs
        .iter()
        .map(|i| i.hecke_degree as u64)
        .product();
    if n == 0 || cert.n != n {
        note(&mut failures, "degree product");
    }
    if cert.tower.layers != minimal_layers(cert.n) {
        note(&mut failures, "minimal layers");
    }
    if cert.tower.split_place != cert.place {
        note(&mut failures, "split place");
    }

    match build_split_tower(&cert.tower.base, &cert.tower.split_place, cert.tower.layers) {
        Ok(rebuilt) => {
            if rebuilt.places_over != cert.tower.places_over {
                note(&mut failures, "tower places");
            }
            if rebuilt.field != cert.tower.field {
                note(&mut failures, "tower field");
            }
            if rebuilt.first_layer_d != cert.tower.first_layer_d {
                note(&mut failures, "first layer discriminant");
            }
        }
        Err(_) => note(&mut failures, "tower rebuild"),
    }

    let eps = embedding_epsilons(&cert.inputs);
    if cert.witnesses.len() as u64 != cert.n || eps.len() != cert.witnesses.len() {
        note(&mut failures, "witness count");
    }
    for (k, w) in cert.witnesses.iter().enumerate() {
        if w.k != k {
            note(&mut failures, "witness indices");
        }
        match cert.tower.places_over.get(k) {
            Some(place) if *place == w.place => {}
            _ => note(&mut failures, "witness places"),
        }
        match eps.get(k) {
            Some(e) if *e == w.epsilon => {}
            _ => note(&mut failures, "witness epsilons"),
        }
    }

    if cert.algebra.base != cert.tower.field {
        note(&mut failures, "algebra base field");
    }
    if cert.algebra.ramified.len() % 2 != 0 {
        note(&mut failures, "Hasse parity");
    }
    let constraints: Vec<(usize, EpsilonSign)> =
        cert.witnesses.iter().map(|w| (w.k, w.epsilon)).collect();
    match select_quaternion(&cert.tower.field, &cert.tower.places_over, &constraints) {
        Ok(expected) => {
            if expected.ramified != cert.algebra.ramified {
                note(&mut failures, "reselection");
            }
        }
        Err(_) => note(&mut failures, "reselection"),
    }
    if !is_almost_definite(&cert.algebra) {
        note(&mut failures, "almost definite");
    }

    VerificationReport {
        ok: failures.is_empty(),
        failures,
    }
}
