//! Local components of automorphic representations, the dichotomy decision
//! rules at each place, local/global root numbers, and the computation of
//! the unique quaternion algebra that can support a triple form.

use crate::arith::{EpsilonSign, FieldDesc, Place, QuaternionAlgebra};
use crate::error::{Error, Result};
use crate::repcore::{parse_label, trilinear_multiplicity, GroupSpec, IrrepLabel};
use serde::ser::SerializeStruct;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Stable reason identifiers used in serialized verdicts.
pub const REASON_CENTRAL_CHARACTER: &str = "central-character";
pub const REASON_AL_SIGN_PRODUCT: &str = "al-sign-product";
pub const REASON_DIHEDRAL_TRILINEAR: &str = "dihedral-trilinear";
pub const REASON_JL_ZERO: &str = "jl-zero";

pub fn reason_certificate(id: &str) -> String {
    format!("certificate:{id}")
}

/// Citation emitted whenever a global root number forces the central
/// L-value to vanish.
pub const L_VALUE_CITATION: &str = "So L(1/2, \u{3c0}) = 0";

/// The isomorphism class of one local component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalKind {
    UnramifiedPS,
    RamifiedPS,
    Special { al_sign: EpsilonSign },
    SupercuspidalDihedral { group: GroupSpec, label: IrrepLabel },
    SupercuspidalOpaque { certificate_id: String },
}

/// A local component together with the (boolean) central-character datum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalComponent {
    pub kind: LocalKind,
    pub central_character_trivial: bool,
}

impl LocalComponent {
    pub fn unramified() -> Self {
        LocalComponent {
            kind: LocalKind::UnramifiedPS,
            central_character_trivial: true,
        }
    }

    pub fn ramified_ps() -> Self {
        LocalComponent {
            kind: LocalKind::RamifiedPS,
            central_character_trivial: true,
        }
    }

    pub fn special(al_sign: EpsilonSign) -> Self {
        LocalComponent {
            kind: LocalKind::Special { al_sign },
            central_character_trivial: true,
        }
    }

    pub fn dihedral(group: GroupSpec, label: IrrepLabel) -> Self {
        LocalComponent {
            kind: LocalKind::SupercuspidalDihedral { group, label },
            central_character_trivial: true,
        }
    }

    pub fn opaque(certificate_id: impl Into<String>) -> Self {
        LocalComponent {
            kind: LocalKind::SupercuspidalOpaque {
                certificate_id: certificate_id.into(),
            },
            central_character_trivial: true,
        }
    }

    /// Special and both supercuspidal kinds are discrete series; the
    /// principal-series kinds are not.
    pub fn is_discrete_series(&self) -> bool {
        matches!(
            self.kind,
            LocalKind::Special { .. }
                | LocalKind::SupercuspidalDihedral { .. }
                | LocalKind::SupercuspidalOpaque { .. }
        )
    }
}

impl fmt::Display for LocalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalKind::UnramifiedPS => write!(f, "unramified-ps"),
            LocalKind::RamifiedPS => write!(f, "ramified-ps"),
            LocalKind::Special { al_sign } => write!(f, "special({al_sign})"),
            LocalKind::SupercuspidalDihedral { group, label } => {
                write!(f, "supercuspidal-dihedral({group}, {label})")
            }
            LocalKind::SupercuspidalOpaque { certificate_id } => {
                write!(f, "supercuspidal-opaque({certificate_id})")
            }
        }
    }
}

#[derive(Serialize, serde::Deserialize)]
struct LocalComponentRepr {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    al_sign: Option<EpsilonSign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<GroupSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_id: Option<String>,
    #[serde(default = "default_true")]
    central_character_trivial: bool,
}

fn default_true() -> bool {
    true
}

impl Serialize for LocalComponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut repr = LocalComponentRepr {
            kind: String::new(),
            al_sign: None,
            group: None,
            rep: None,
            certificate_id: None,
            central_character_trivial: self.central_character_trivial,
        };
        match &self.kind {
            LocalKind::UnramifiedPS => repr.kind = "unramified-ps".into(),
            LocalKind::RamifiedPS => repr.kind = "ramified-ps".into(),
            LocalKind::Special { al_sign } => {
                repr.kind = "special".into();
                repr.al_sign = Some(*al_sign);
            }
            LocalKind::SupercuspidalDihedral { group, label } => {
                repr.kind = "supercuspidal-dihedral".into();
                repr.group = Some(*group);
                repr.rep = Some(label.name.clone());
            }
            LocalKind::SupercuspidalOpaque { certificate_id } => {
                repr.kind = "supercuspidal-opaque".into();
                repr.certificate_id = Some(certificate_id.clone());
            }
        }
        repr.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for LocalComponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = LocalComponentRepr::deserialize(d)?;
        let kind = match repr.kind.as_str() {
            "unramified-ps" => LocalKind::UnramifiedPS,
            "ramified-ps" => LocalKind::RamifiedPS,
            "special" => LocalKind::Special {
                al_sign: repr
                    .al_sign
                    .ok_or_else(|| DeError::custom("special component needs al_sign"))?,
            },
            "supercuspidal-dihedral" => {
                let group = repr
                    .group
                    .ok_or_else(|| DeError::custom("dihedral component needs group"))?;
                let rep = repr
                    .rep
                    .ok_or_else(|| DeError::custom("dihedral component needs rep"))?;
                let label = parse_label(group, &rep).map_err(DeError::custom)?;
                LocalKind::SupercuspidalDihedral { group, label }
            }
            "supercuspidal-opaque" => LocalKind::SupercuspidalOpaque {
                certificate_id: repr
                    .certificate_id
                    .ok_or_else(|| DeError::custom("opaque component needs certificate_id"))?,
            },
            other => return Err(DeError::custom(format!("unknown local kind {other:?}"))),
        };
        Ok(LocalComponent {
            kind,
            central_character_trivial: repr.central_character_trivial,
        })
    }
}

/// Outcome of the dichotomy at one place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerdictOutcome {
    Vanishes { reason: String },
    FormExists { reason: String },
    Inconclusive { missing: Vec<String> },
}

impl VerdictOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            VerdictOutcome::Vanishes { .. } => "vanishes",
            VerdictOutcome::FormExists { .. } => "form-exists",
            VerdictOutcome::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Verdict of the triple-form dichotomy at a single place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleLocalVerdict {
    pub place: Place,
    pub outcome: VerdictOutcome,
    pub epsilon: Option<EpsilonSign>,
}

impl Serialize for TripleLocalVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TripleLocalVerdict", 5)?;
        st.serialize_field("place", &self.place.to_string())?;
        st.serialize_field("outcome", self.outcome.tag())?;
        let reason = match &self.outcome {
            VerdictOutcome::Vanishes { reason } | VerdictOutcome::FormExists { reason } => {
                Some(reason.as_str())
            }
            VerdictOutcome::Inconclusive { .. } => None,
        };
        st.serialize_field("reason", &reason)?;
        st.serialize_field("epsilon", &self.epsilon.map(EpsilonSign::as_i64))?;
        let missing = match &self.outcome {
            VerdictOutcome::Inconclusive { missing } => Some(missing),
            _ => None,
        };
        st.serialize_field("missing", &missing)?;
        st.end()
    }
}

/// True iff all three components have trivial central character, the only
/// regime in which the dichotomy rules below apply; false means the triple
/// form vanishes at this place outright.
pub fn central_character_ok(
    c1: &LocalComponent,
    c2: &LocalComponent,
    c3: &LocalComponent,
) -> bool {
    c1.central_character_trivial && c2.central_character_trivial && c3.central_character_trivial
}

/// Decides the dichotomy at one place for a triple of local components over
/// a base where the ambient quaternion algebra is split (`b_v_split`) or
/// ramified at that place.
pub fn local_triple_verdict(
    v: &Place,
    c1: &LocalComponent,
    c2: &LocalComponent,
    c3: &LocalComponent,
    b_v_split: bool,
) -> Result<TripleLocalVerdict> {
    let comps = [c1, c2, c3];
    if !central_character_ok(c1, c2, c3) {
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome: VerdictOutcome::Vanishes {
                reason: REASON_CENTRAL_CHARACTER.into(),
            },
            epsilon: None,
        });
    }

    if b_v_split {
        split_verdict(v, comps)
    } else {
        nonsplit_verdict(v, comps)
    }
}

fn split_verdict(v: &Place, comps: [&LocalComponent; 3]) -> Result<TripleLocalVerdict> {
    // Any non-discrete component sends the division side to zero, so the
    // dichotomy sum forces the split-side form to exist.
    if comps
        .iter()
        .any(|c| matches!(c.kind, LocalKind::UnramifiedPS))
    {
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome: VerdictOutcome::FormExists {
                reason: REASON_JL_ZERO.into(),
            },
            epsilon: Some(EpsilonSign::Plus),
        });
    }
    if comps
        .iter()
        .any(|c| matches!(c.kind, LocalKind::RamifiedPS))
    {
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome: VerdictOutcome::Inconclusive {
                missing: vec![format!("ramified-ps:{v}")],
            },
            epsilon: None,
        });
    }

    if let Some(epsilon) = all_special_product(comps) {
        let outcome = if epsilon == EpsilonSign::Minus {
            VerdictOutcome::Vanishes {
                reason: REASON_AL_SIGN_PRODUCT.into(),
            }
        } else {
            VerdictOutcome::FormExists {
                reason: REASON_AL_SIGN_PRODUCT.into(),
            }
        };
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome,
            epsilon: Some(epsilon),
        });
    }

    if let Some(m) = dihedral_multiplicity(v, comps)? {
        // A D-side form (m = 1) means the split side has none, and vice
        // versa, by the dichotomy sum.
        let (outcome, epsilon) = if m == 1 {
            (
                VerdictOutcome::Vanishes {
                    reason: REASON_DIHEDRAL_TRILINEAR.into(),
                },
                EpsilonSign::Minus,
            )
        } else {
            (
                VerdictOutcome::FormExists {
                    reason: REASON_DIHEDRAL_TRILINEAR.into(),
                },
                EpsilonSign::Plus,
            )
        };
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome,
            epsilon: Some(epsilon),
        });
    }

    Ok(TripleLocalVerdict {
        place: v.clone(),
        outcome: VerdictOutcome::Inconclusive {
            missing: missing_tokens(v, comps),
        },
        epsilon: None,
    })
}

fn nonsplit_verdict(v: &Place, comps: [&LocalComponent; 3]) -> Result<TripleLocalVerdict> {
    if let Some(c) = comps.iter().find(|c| !c.is_discrete_series()) {
        return Err(Error::data(format!(
            "component {} at ramified place {v} is not a discrete series; \
             the division algebra has no such local representation",
            c.kind
        )));
    }

    if let Some(epsilon) = all_special_product(comps) {
        // The division side carries the form exactly when epsilon = -1.
        let outcome = if epsilon == EpsilonSign::Minus {
            VerdictOutcome::FormExists {
                reason: REASON_AL_SIGN_PRODUCT.into(),
            }
        } else {
            VerdictOutcome::Vanishes {
                reason: REASON_AL_SIGN_PRODUCT.into(),
            }
        };
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome,
            epsilon: Some(epsilon),
        });
    }

    if let Some(m) = dihedral_multiplicity(v, comps)? {
        let (outcome, epsilon) = if m == 1 {
            (
                VerdictOutcome::FormExists {
                    reason: REASON_DIHEDRAL_TRILINEAR.into(),
                },
                EpsilonSign::Minus,
            )
        } else {
            (
                VerdictOutcome::Vanishes {
                    reason: REASON_DIHEDRAL_TRILINEAR.into(),
                },
                EpsilonSign::Plus,
            )
        };
        return Ok(TripleLocalVerdict {
            place: v.clone(),
            outcome,
            epsilon: Some(epsilon),
        });
    }

    Ok(TripleLocalVerdict {
        place: v.clone(),
        outcome: VerdictOutcome::Inconclusive {
            missing: missing_tokens(v, comps),
        },
        epsilon: None,
    })
}

fn all_special_product(comps: [&LocalComponent; 3]) -> Option<EpsilonSign> {
    let mut signs = Vec::with_capacity(3);
    for c in comps {
        match c.kind {
            LocalKind::Special { al_sign } => signs.push(al_sign),
            _ => return None,
        }
    }
    Some(EpsilonSign::product(signs))
}

/// For three dihedral supercuspidals over one common group, the trilinear
/// multiplicity of their labels; checked to be 0 or 1.
fn dihedral_multiplicity(v: &Place, comps: [&LocalComponent; 3]) -> Result<Option<u64>> {
    let mut data: Vec<(GroupSpec, &IrrepLabel)> = Vec::with_capacity(3);
    for c in comps {
        match &c.kind {
            LocalKind::SupercuspidalDihedral { group, label } => data.push((*group, label)),
            _ => return Ok(None),
        }
    }
    let g = data[0].0;
    if data.iter().any(|(h, _)| *h != g) {
        return Ok(None);
    }
    let m = trilinear_multiplicity(g, data[0].1, data[1].1, data[2].1)?;
    if m > 1 {
        return Err(Error::internal(format!(
            "trilinear multiplicity {m} at {v} over {g} exceeds 1; \
             dihedral triple data is inconsistent with the dichotomy"
        )));
    }
    Ok(Some(m))
}

fn missing_tokens(v: &Place, comps: [&LocalComponent; 3]) -> Vec<String> {
    let mut out: Vec<String> = comps
        .iter()
        .filter_map(|c| match &c.kind {
            LocalKind::SupercuspidalOpaque { certificate_id } => Some(certificate_id.clone()),
            _ => None,
        })
        .collect();
    out.dedup();
    if out.is_empty() {
        out.push(format!("mixed-discrete-series:{v}"));
    }
    out
}

/// The epsilon factor at an archimedean place for a triple of weight-2
/// discrete series, the only modeled archimedean type.
pub fn archimedean_epsilon() -> EpsilonSign {
    EpsilonSign::Minus
}

/// Global root number assembled from finite-place verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootNumberResult {
    pub local_signs: BTreeMap<Place, EpsilonSign>,
    pub global_sign: EpsilonSign,
    pub l_value_forced_zero: bool,
}

impl RootNumberResult {
    /// The citation attached to a forced-zero central L-value.
    pub fn citation(&self) -> Option<&'static str> {
        self.l_value_forced_zero.then_some(L_VALUE_CITATION)
    }
}

/// Multiplies the archimedean contribution (-1 per real place) with every
/// known finite epsilon. Finite places not listed contribute +1.
pub fn global_root_number(
    base: &FieldDesc,
    finite_verdicts: &[TripleLocalVerdict],
) -> Result<RootNumberResult> {
    base.validate()?;
    let mut local_signs: BTreeMap<Place, EpsilonSign> = BTreeMap::new();
    for i in 0..base.real_places {
        local_signs.insert(Place::Real(i), archimedean_epsilon());
    }
    for v in finite_verdicts {
        if v.place.is_real() {
            return Err(Error::usage(format!(
                "{} is not a finite place",
                v.place
            )));
        }
        let eps = v.epsilon.ok_or_else(|| {
            Error::incomplete(format!("unknown local sign at {}", v.place))
        })?;
        if local_signs.insert(v.place.clone(), eps).is_some() {
            return Err(Error::usage(format!(
                "duplicate verdict for place {}",
                v.place
            )));
        }
    }
    let global_sign = EpsilonSign::product(local_signs.values().copied());
    Ok(RootNumberResult {
        local_signs,
        global_sign,
        l_value_forced_zero: global_sign == EpsilonSign::Minus,
    })
}

/// The unique quaternion algebra whose Hasse invariants match the local
/// signs at every place, if the candidate ramification set is even: the
/// finite places with sign -1 together with every real place (where the
/// archimedean epsilon is always -1). An odd candidate set means no
/// quaternion algebra supports the triple form.
pub fn supporting_quaternion(
    base: &FieldDesc,
    finite_signs: &BTreeMap<Place, EpsilonSign>,
) -> Result<Option<QuaternionAlgebra>> {
    base.validate()?;
    let mut candidate: std::collections::BTreeSet<Place> = std::collections::BTreeSet::new();
    for (place, sign) in finite_signs {
        if place.is_real() {
            return Err(Error::usage(format!(
                "{place} is a real place; finite_signs must only carry finite places"
            )));
        }
        if *sign == EpsilonSign::Minus {
            candidate.insert(place.clone());
        }
    }
    for i in 0..base.real_places {
        candidate.insert(Place::Real(i));
    }
    if candidate.len() % 2 != 0 {
        return Ok(None);
    }
    Ok(Some(QuaternionAlgebra::new(base.clone(), candidate)?))
}
