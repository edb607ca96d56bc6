//! Curve-level decision procedure: enumerate isotypic triples, decide each
//! one place by place, and aggregate into a goodness verdict.

use crate::arith::{prime_factors, EpsilonSign, FiniteLabel, Place, QuaternionAlgebra};
use crate::data::{infer_local_types, CertPayload, Dataset, NewformOrbit};
use crate::error::{Error, Result};
use crate::localglobal::{
    local_triple_verdict, reason_certificate, LocalComponent, LocalKind, TripleLocalVerdict,
    VerdictOutcome,
};
use crate::repcore::parse_label;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

/// Consequence line attached to a curve that passes every triple check.
pub const VANISHING_CITATION: &str = "modified diagonal cycle vanishes (Lemma vancor2)";

/// Curve labels the bundled tables designate as good.
pub const REFERENCE_GOOD_CURVES: [&str; 7] = [
    "217.A", "295.A", "329.C", "459.B", "459.I", "475.E", "1175.D",
];

/// Aggregated outcome for one isotypic triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TripleConclusion {
    Vanishes { witness: Place },
    FormExists,
    Unknown { blockers: Vec<String> },
}

impl TripleConclusion {
    pub fn tag(&self) -> &'static str {
        match self {
            TripleConclusion::Vanishes { .. } => "vanishes",
            TripleConclusion::FormExists => "form-exists",
            TripleConclusion::Unknown { .. } => "unknown",
        }
    }
}

/// Verdict for one unordered triple of newform orbits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleVerdict {
    pub triple: [String; 3],
    pub per_place: Vec<TripleLocalVerdict>,
    pub conclusion: TripleConclusion,
}

impl Serialize for TripleVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TripleVerdict", 5)?;
        st.serialize_field("labels", &self.triple)?;
        st.serialize_field("conclusion", self.conclusion.tag())?;
        let witness = match &self.conclusion {
            TripleConclusion::Vanishes { witness } => Some(witness.to_string()),
            _ => None,
        };
        st.serialize_field("witness", &witness)?;
        let blockers = match &self.conclusion {
            TripleConclusion::Unknown { blockers } => Some(blockers),
            _ => None,
        };
        st.serialize_field("blockers", &blockers)?;
        st.serialize_field("places", &self.per_place)?;
        st.end()
    }
}

/// Three-way goodness answer for a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoodVerdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for GoodVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoodVerdict::Yes => "yes",
            GoodVerdict::No => "no",
            GoodVerdict::Unknown => "unknown",
        })
    }
}

impl GoodVerdict {
    /// Process exit code under the yes = 0, no = 1, unknown = 2 convention.
    pub fn exit_code(&self) -> i32 {
        match self {
            GoodVerdict::Yes => 0,
            GoodVerdict::No => 1,
            GoodVerdict::Unknown => 2,
        }
    }
}

/// Full report for one curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoodnessReport {
    pub curve: String,
    pub level: u64,
    pub genus: u32,
    pub triples: Vec<TripleVerdict>,
    pub good: GoodVerdict,
    pub citations: Vec<String>,
    /// Set when the genus is at most 1, where nothing needs checking.
    pub trivial: bool,
}

impl Serialize for GoodnessReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = if self.trivial { 7 } else { 6 };
        let mut st = s.serialize_struct("GoodnessReport", n)?;
        st.serialize_field("curve", &self.curve)?;
        st.serialize_field("level", &self.level)?;
        st.serialize_field("genus", &self.genus)?;
        st.serialize_field("good", &self.good.to_string())?;
        if self.trivial {
            st.serialize_field("trivial", &true)?;
        }
        st.serialize_field("triples", &self.triples)?;
        st.serialize_field("citations", &self.citations)?;
        st.end()
    }
}

impl GoodnessReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "curve {}: level {}, genus {}\n",
            self.curve, self.level, self.genus
        );
        if self.trivial {
            out.push_str("  genus at most 1: nothing to check\n");
        }
        for t in &self.triples {
            out.push_str(&render_triple_text(t, "  "));
        }
        out.push_str(&format!("good: {}\n", self.good));
        for c in &self.citations {
            out.push_str(c);
            out.push('\n');
        }
        out
    }
}

fn render_place_line(v: &TripleLocalVerdict) -> String {
    let mut line = format!("{}: {}", v.place, v.outcome.tag());
    match &v.outcome {
        VerdictOutcome::Vanishes { reason } | VerdictOutcome::FormExists { reason } => {
            line.push_str(&format!(" ({reason}"));
            if let Some(e) = v.epsilon {
                line.push_str(&format!(", epsilon = {:+}", e.as_i64()));
            }
            line.push(')');
        }
        VerdictOutcome::Inconclusive { missing } => {
            line.push_str(&format!(" (missing: {})", missing.join(", ")));
        }
    }
    line
}

fn render_triple_text(t: &TripleVerdict, indent: &str) -> String {
    let mut out = format!("{indent}triple ({})\n", t.triple.join(", "));
    for v in &t.per_place {
        out.push_str(&format!("{indent}  {}\n", render_place_line(v)));
    }
    match &t.conclusion {
        TripleConclusion::Vanishes { witness } => {
            out.push_str(&format!("{indent}  conclusion: vanishes, witness {witness}\n"));
        }
        TripleConclusion::FormExists => {
            out.push_str(&format!("{indent}  conclusion: form exists\n"));
        }
        TripleConclusion::Unknown { blockers } => {
            out.push_str(&format!(
                "{indent}  conclusion: unknown, blockers: {}\n",
                blockers.join(", ")
            ));
        }
    }
    out
}

pub fn render_triple_verdict(t: &TripleVerdict) -> String {
    render_triple_text(t, "")
}

fn resolve_orbit(dataset: &Dataset, label: &str) -> Result<NewformOrbit> {
    infer_local_types(dataset.orbit(label)?)
}

/// Decides one isotypic triple. The place set is every prime dividing one of
/// the three levels together with every finite place where the supplied
/// quaternion algebra ramifies; everywhere else all three components are
/// unramified principal series and the split form exists for free.
/// Certificates stored in the dataset are consulted only for places whose
/// direct verdict is inconclusive.
pub fn check_triple(
    dataset: &Dataset,
    labels: &[String; 3],
    algebra: Option<&QuaternionAlgebra>,
) -> Result<TripleVerdict> {
    let orbits = [
        resolve_orbit(dataset, &labels[0])?,
        resolve_orbit(dataset, &labels[1])?,
        resolve_orbit(dataset, &labels[2])?,
    ];

    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for o in &orbits {
        primes.extend(prime_factors(o.level));
    }
    if let Some(b) = algebra {
        for place in &b.ramified {
            match place {
                Place::Real(_) => {}
                Place::Finite(FiniteLabel::Prime(p)) => {
                    primes.insert(*p);
                }
                Place::Finite(FiniteLabel::Opaque(label)) => {
                    return Err(Error::usage(format!(
                        "cannot evaluate local components at the opaque place v:{label}"
                    )));
                }
            }
        }
    }

    let mut per_place = Vec::with_capacity(primes.len());
    for &p in &primes {
        let place = Place::prime(p);
        let split = algebra.map_or(true, |b| !b.ramified.contains(&place));
        let comps = [
            orbits[0].local_type_at(p),
            orbits[1].local_type_at(p),
            orbits[2].local_type_at(p),
        ];
        let mut verdict = local_triple_verdict(&place, &comps[0], &comps[1], &comps[2], split)?;

        if matches!(verdict.outcome, VerdictOutcome::Inconclusive { .. }) {
            let mut resolved = comps.clone();
            let mut changed = false;
            for (i, label) in labels.iter().enumerate() {
                if !matches!(resolved[i].kind, LocalKind::SupercuspidalOpaque { .. }) {
                    continue;
                }
                if let Some(cert) = dataset.orbit_certificate(label, p) {
                    if let CertPayload::Dihedral { group, rep, .. } = &cert.payload {
                        resolved[i] = LocalComponent::dihedral(*group, parse_label(*group, rep)?);
                        changed = true;
                    }
                }
            }
            if changed {
                verdict =
                    local_triple_verdict(&place, &resolved[0], &resolved[1], &resolved[2], split)?;
            }
        }

        if matches!(verdict.outcome, VerdictOutcome::Inconclusive { .. }) {
            if let Some(cert) = dataset.triple_certificate(labels, p) {
                if let CertPayload::Direct { hom_gl2, .. } = &cert.payload {
                    let epsilon = if *hom_gl2 == 1 {
                        EpsilonSign::Plus
                    } else {
                        EpsilonSign::Minus
                    };
                    let exists = if split { *hom_gl2 == 1 } else { *hom_gl2 == 0 };
                    let reason = reason_certificate(&cert.id);
                    verdict = TripleLocalVerdict {
                        place: place.clone(),
                        outcome: if exists {
                            VerdictOutcome::FormExists { reason }
                        } else {
                            VerdictOutcome::Vanishes { reason }
                        },
                        epsilon: Some(epsilon),
                    };
                }
            }
        }

        per_place.push(verdict);
    }

    let witness = per_place
        .iter()
        .find(|v| matches!(v.outcome, VerdictOutcome::Vanishes { .. }))
        .map(|v| v.place.clone());
    let conclusion = if let Some(witness) = witness {
        TripleConclusion::Vanishes { witness }
    } else if per_place
        .iter()
        .all(|v| matches!(v.outcome, VerdictOutcome::FormExists { .. }))
    {
        TripleConclusion::FormExists
    } else {
        let mut blockers = Vec::new();
        for v in &per_place {
            if let VerdictOutcome::Inconclusive { missing } = &v.outcome {
                for token in missing {
                    if !blockers.contains(token) {
                        blockers.push(token.clone());
                    }
                }
            }
        }
        TripleConclusion::Unknown { blockers }
    };

    Ok(TripleVerdict {
        triple: labels.clone(),
        per_place,
        conclusion,
    })
}

/// All unordered triples with repetition from the orbit list, in
/// lexicographic index order.
pub fn triples_with_repetition(labels: &[String]) -> Vec<[String; 3]> {
    let mut out = Vec::new();
    for i in 0..labels.len() {
        for j in i..labels.len() {
            for k in j..labels.len() {
                out.push([labels[i].clone(), labels[j].clone(), labels[k].clone()]);
            }
        }
    }
    out
}

/// Decides goodness of a curve: every isotypic triple must vanish. Triples
/// are checked in parallel; the report lists them in deterministic order.
pub fn check_curve(
    dataset: &Dataset,
    curve_label: &str,
    algebra: Option<&QuaternionAlgebra>,
) -> Result<GoodnessReport> {
    let curve = dataset.curve(curve_label)?;
    if curve.genus <= 1 {
        return Ok(GoodnessReport {
            curve: curve.label.clone(),
            level: curve.level,
            genus: curve.genus,
            triples: Vec::new(),
            good: GoodVerdict::Yes,
            citations: vec![VANISHING_CITATION.to_string()],
            trivial: true,
        });
    }

    let triples = triples_with_repetition(&curve.newforms);
    let verdicts: Result<Vec<TripleVerdict>> = triples
        .par_iter()
        .map(|t| check_triple(dataset, t, algebra))
        .collect();
    let verdicts = verdicts?;

    let good = if verdicts
        .iter()
        .all(|v| matches!(v.conclusion, TripleConclusion::Vanishes { .. }))
    {
        GoodVerdict::Yes
    } else if verdicts
        .iter()
        .any(|v| matches!(v.conclusion, TripleConclusion::FormExists))
    {
        GoodVerdict::No
    } else {
        GoodVerdict::Unknown
    };
    let citations = if good == GoodVerdict::Yes {
        vec![VANISHING_CITATION.to_string()]
    } else {
        Vec::new()
    };

    Ok(GoodnessReport {
        curve: curve.label.clone(),
        level: curve.level,
        genus: curve.genus,
        triples: verdicts,
        good,
        citations,
        trivial: false,
    })
}

/// Comparison of the computed good set against the bundled reference tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TablesReport {
    pub checked: usize,
    pub good: Vec<String>,
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    pub unexpected_unknown: Vec<String>,
    pub ok: bool,
}

impl TablesReport {
    pub fn render_text(&self) -> String {
        let mut out = format!("checked {} curves\n", self.checked);
        out.push_str(&format!("good: {}\n", self.good.join(", ")));
        if !self.missing.is_empty() {
            out.push_str(&format!("missing from good set: {}\n", self.missing.join(", ")));
        }
        if !self.extra.is_empty() {
            out.push_str(&format!("unexpected good: {}\n", self.extra.join(", ")));
        }
        if !self.unexpected_unknown.is_empty() {
            out.push_str(&format!(
                "unexpectedly undecided: {}\n",
                self.unexpected_unknown.join(", ")
            ));
        }
        out.push_str(if self.ok {
            "tables reproduced\n"
        } else {
            "tables NOT reproduced\n"
        });
        out
    }
}

/// Checks every curve in the dataset and diffs the resulting good set
/// against `REFERENCE_GOOD_CURVES`. A curve left undecided counts as a
/// mismatch unless its record carries the `expected_unknown` flag.
pub fn reproduce_tables(dataset: &Dataset) -> Result<TablesReport> {
    let reports: Result<Vec<GoodnessReport>> = dataset
        .curves
        .par_iter()
        .map(|c| check_curve(dataset, &c.label, None))
        .collect();
    let reports = reports?;

    let mut good = Vec::new();
    let mut unexpected_unknown = Vec::new();
    let mut checked = 0usize;
    for (curve, report) in dataset.curves.iter().zip(&reports) {
        if report.trivial {
            continue;
        }
        checked += 1;
        match report.good {
            GoodVerdict::Yes => good.push(curve.label.clone()),
            GoodVerdict::No => {}
            GoodVerdict::Unknown => {
                if !curve.expected_unknown {
                    unexpected_unknown.push(curve.label.clone());
                }
            }
        }
    }

    let good_set: BTreeSet<&str> = good.iter().map(String::as_str).collect();
    let reference: BTreeSet<&str> = REFERENCE_GOOD_CURVES.iter().copied().collect();
    let missing: Vec<String> = reference
        .difference(&good_set)
        .map(|s| s.to_string())
        .collect();
    let extra: Vec<String> = good_set
        .difference(&reference)
        .map(|s| s.to_string())
        .collect();
    let ok = missing.is_empty() && extra.is_empty() && unexpected_unknown.is_empty();

    Ok(TablesReport {
        checked,
        good,
        missing,
        extra,
        unexpected_unknown,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Certificate, CertScope, CurveRecord};
    use crate::repcore::GroupSpec;
    use std::collections::BTreeMap;

    fn orbit(label: &str, level: u64, degree: u32, al: &[(u64, i64)]) -> NewformOrbit {
        NewformOrbit {
            label: label.into(),
            level,
            weight: 2,
            hecke_degree: degree,
            atkin_lehner: al
                .iter()
                .map(|&(p, s)| (p, EpsilonSign::from_i64(s).unwrap()))
                .collect(),
            local_types: BTreeMap::new(),
            nebentypus_trivial: true,
            provenance: None,
        }
    }

    fn curve(label: &str, level: u64, genus: u32, newforms: &[&str]) -> CurveRecord {
        CurveRecord {
            label: label.into(),
            level,
            genus,
            newforms: newforms.iter().map(|s| s.to_string()).collect(),
            expected_unknown: false,
            provenance: None,
        }
    }

    fn squarefree_dataset() -> Dataset {
        let d = Dataset {
            curves: vec![
                curve("217.A", 217, 3, &["217.2.a.a"]),
                curve("217.B", 217, 3, &["217.2.a.b"]),
                curve("217.M", 217, 6, &["217.2.a.a", "217.2.a.b"]),
            ],
            newforms: vec![
                orbit("217.2.a.a", 217, 3, &[(7, -1), (31, -1)]),
                orbit("217.2.a.b", 217, 3, &[(7, 1), (31, 1)]),
            ],
            certificates: vec![],
            meta: serde_json::Value::Null,
        };
        d.validate().unwrap();
        d
    }

    #[test]
    fn all_minus_triple_vanishes_with_first_witness() {
        let d = squarefree_dataset();
        let labels = [
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
        ];
        let v = check_triple(&d, &labels, None).unwrap();
        assert_eq!(v.per_place.len(), 2);
        assert_eq!(
            v.conclusion,
            TripleConclusion::Vanishes {
                witness: Place::prime(7)
            }
        );
        for pv in &v.per_place {
            assert_eq!(pv.epsilon, Some(EpsilonSign::Minus));
        }
    }

    #[test]
    fn all_plus_triple_has_form() {
        let d = squarefree_dataset();
        let labels = [
            "217.2.a.b".to_string(),
            "217.2.a.b".to_string(),
            "217.2.a.b".to_string(),
        ];
        let v = check_triple(&d, &labels, None).unwrap();
        assert_eq!(v.conclusion, TripleConclusion::FormExists);
    }

    #[test]
    fn good_and_bad_curves() {
        let d = squarefree_dataset();
        let a = check_curve(&d, "217.A", None).unwrap();
        assert_eq!(a.good, GoodVerdict::Yes);
        assert_eq!(a.citations, vec![VANISHING_CITATION.to_string()]);
        assert_eq!(a.triples.len(), 1);

        let b = check_curve(&d, "217.B", None).unwrap();
        assert_eq!(b.good, GoodVerdict::No);
        assert!(b.citations.is_empty());

        // the mixed curve has 4 triples; (a,a,b) and (a,b,b) carry sign
        // products +1 at both primes, so a form exists somewhere
        let m = check_curve(&d, "217.M", None).unwrap();
        assert_eq!(m.triples.len(), 4);
        assert_eq!(m.good, GoodVerdict::No);
    }

    #[test]
    fn genus_one_is_trivially_good() {
        let mut d = squarefree_dataset();
        d.newforms.push(orbit("217.2.a.z", 217, 1, &[(7, 1), (31, -1)]));
        d.curves.push(curve("217.Z", 217, 1, &["217.2.a.z"]));
        let r = check_curve(&d, "217.Z", None).unwrap();
        assert!(r.trivial);
        assert_eq!(r.good, GoodVerdict::Yes);
        assert!(r.triples.is_empty());
    }

    /// Independent restatement of the square-free criterion: a curve is good
    /// exactly when every triple of its orbits (with repetition) has some
    /// level prime where the three Atkin-Lehner signs multiply to -1.
    fn oracle_good_squarefree(orbits: &[&NewformOrbit]) -> bool {
        let primes = prime_factors(orbits[0].level);
        let n = orbits.len();
        let mut ok = true;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    ok &= primes.iter().any(|p| {
                        [i, j, k]
                            .iter()
                            .map(|&t| orbits[t].atkin_lehner[p].as_i64())
                            .product::<i64>()
                            == -1
                    });
                }
            }
        }
        ok
    }

    #[test]
    fn squarefree_oracle_agrees() {
        let d = squarefree_dataset();
        for c in &d.curves {
            let orbits: Vec<&NewformOrbit> =
                c.newforms.iter().map(|l| d.orbit(l).unwrap()).collect();
            let expected = if oracle_good_squarefree(&orbits) {
                GoodVerdict::Yes
            } else {
                GoodVerdict::No
            };
            let got = check_curve(&d, &c.label, None).unwrap().good;
            assert_eq!(got, expected, "curve {}", c.label);
        }
    }

    fn dataset_459(with_certs: bool) -> Dataset {
        let mut certificates = Vec::new();
        if with_certs {
            for letter in ["b", "i"] {
                certificates.push(Certificate {
                    id: format!("459-{letter}-p3-dihedral"),
                    scope: CertScope::Orbit {
                        newform: format!("459.2.a.{letter}"),
                        prime: 3,
                    },
                    payload: CertPayload::Dihedral {
                        group: GroupSpec::Dihedral(3),
                        rep: "V_1".into(),
                        embedding_epsilons: None,
                    },
                    provenance: None,
                });
            }
        }
        let d = Dataset {
            curves: vec![curve("459.B", 459, 3, &["459.2.a.b", "459.2.a.i"])],
            newforms: vec![
                orbit("459.2.a.b", 459, 1, &[(17, 1)]),
                orbit("459.2.a.i", 459, 2, &[(17, -1)]),
            ],
            certificates,
            meta: serde_json::Value::Null,
        };
        d.validate().unwrap();
        d
    }

    #[test]
    fn unresolved_cube_prime_blocks_the_verdict() {
        let d = dataset_459(false);
        let r = check_curve(&d, "459.B", None).unwrap();
        assert_eq!(r.good, GoodVerdict::Unknown);
        // the (b,b,b) triple is blocked at 3 and named by certificate id
        let bbb = &r.triples[0];
        match &bbb.conclusion {
            TripleConclusion::Unknown { blockers } => {
                assert_eq!(blockers, &vec!["459.2.a.b@3".to_string()]);
            }
            other => panic!("expected unknown, got {other:?}"),
        }
        // the (b,b,i) triple still vanishes thanks to 17
        assert_eq!(
            r.triples[1].conclusion,
            TripleConclusion::Vanishes {
                witness: Place::prime(17)
            }
        );
    }

    #[test]
    fn dihedral_certificates_decide_the_curve() {
        let d = dataset_459(true);
        let r = check_curve(&d, "459.B", None).unwrap();
        assert_eq!(r.good, GoodVerdict::Yes);
        for t in &r.triples {
            assert_eq!(
                t.conclusion,
                TripleConclusion::Vanishes {
                    witness: Place::prime(3)
                },
                "triple {:?}",
                t.triple
            );
            let at3 = &t.per_place[0];
            match &at3.outcome {
                VerdictOutcome::Vanishes { reason } => assert_eq!(reason, "dihedral-trilinear"),
                other => panic!("expected vanishing at 3, got {other:?}"),
            }
        }
    }

    #[test]
    fn certificates_never_flip_a_decided_curve() {
        let without = check_curve(&dataset_459(false), "459.B", None).unwrap();
        let with = check_curve(&dataset_459(true), "459.B", None).unwrap();
        assert_eq!(without.good, GoodVerdict::Unknown);
        assert_eq!(with.good, GoodVerdict::Yes);

        // a decided square-free dataset is untouched by adding certificates
        let mut d = squarefree_dataset();
        d.certificates.push(Certificate {
            id: "irrelevant".into(),
            scope: CertScope::Triple {
                labels: [
                    "217.2.a.b".into(),
                    "217.2.a.b".into(),
                    "217.2.a.b".into(),
                ],
                prime: 7,
            },
            payload: CertPayload::Direct {
                hom_gl2: 0,
                hom_d: 1,
            },
            provenance: None,
        });
        d.validate().unwrap();
        let b = check_curve(&d, "217.B", None).unwrap();
        assert_eq!(b.good, GoodVerdict::No);
    }

    #[test]
    fn direct_certificate_resolves_an_opaque_place() {
        let mut d = dataset_459(false);
        let labels = [
            "459.2.a.b".to_string(),
            "459.2.a.b".to_string(),
            "459.2.a.b".to_string(),
        ];
        d.certificates.push(Certificate {
            id: "459-bbb-p3".into(),
            scope: CertScope::Triple {
                labels: labels.clone(),
                prime: 3,
            },
            payload: CertPayload::Direct {
                hom_gl2: 0,
                hom_d: 1,
            },
            provenance: None,
        });
        d.validate().unwrap();
        let v = check_triple(&d, &labels, None).unwrap();
        assert_eq!(
            v.conclusion,
            TripleConclusion::Vanishes {
                witness: Place::prime(3)
            }
        );
        let at3 = &v.per_place[0];
        assert_eq!(at3.epsilon, Some(EpsilonSign::Minus));
        match &at3.outcome {
            VerdictOutcome::Vanishes { reason } => {
                assert_eq!(reason, "certificate:459-bbb-p3");
            }
            other => panic!("{other:?}"),
        }

        // the opposite certificate instead asserts the form exists
        d.certificates[0].payload = CertPayload::Direct {
            hom_gl2: 1,
            hom_d: 0,
        };
        let v = check_triple(&d, &labels, None).unwrap();
        assert_eq!(v.conclusion, TripleConclusion::FormExists);
        assert_eq!(v.per_place[0].epsilon, Some(EpsilonSign::Plus));
    }

    #[test]
    fn ramified_algebra_flips_the_dichotomy() {
        let d = squarefree_dataset();
        let labels = [
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
        ];
        // B ramified at 7 and 31: both local signs are -1, so on B the
        // trilinear form exists at both places and nothing vanishes
        let b = QuaternionAlgebra::new(
            crate::arith::FieldDesc::rationals(),
            [Place::prime(7), Place::prime(31)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let v = check_triple(&d, &labels, Some(&b)).unwrap();
        assert_eq!(v.conclusion, TripleConclusion::FormExists);
    }

    #[test]
    fn algebra_ramified_at_unramified_prime_is_a_data_error() {
        let d = squarefree_dataset();
        let labels = [
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
        ];
        let b = QuaternionAlgebra::new(
            crate::arith::FieldDesc::rationals(),
            [Place::prime(5), Place::prime(7)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let err = check_triple(&d, &labels, Some(&b)).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn reproduce_tables_diffs_and_flags() {
        // one genuine good curve, one genuine bad curve: the good set then
        // misses the other six reference labels and has one extra entry
        let d = squarefree_dataset();
        let r = reproduce_tables(&d).unwrap();
        assert!(r.good.contains(&"217.A".to_string()));
        assert!(!r.ok);
        assert!(r.missing.contains(&"295.A".to_string()));
        assert!(r.extra.is_empty());

        // an undecided curve without the flag is a mismatch; with it, not
        let mut d = dataset_459(false);
        let r = reproduce_tables(&d).unwrap();
        assert_eq!(r.unexpected_unknown, vec!["459.B".to_string()]);
        d.curves[0].expected_unknown = true;
        let r = reproduce_tables(&d).unwrap();
        assert!(r.unexpected_unknown.is_empty());
    }

    #[test]
    fn report_json_shape() {
        let d = squarefree_dataset();
        let r = check_curve(&d, "217.A", None).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["curve"], "217.A");
        assert_eq!(json["good"], "yes");
        assert_eq!(json["citations"][0], VANISHING_CITATION);
        let triple = &json["triples"][0];
        assert_eq!(triple["conclusion"], "vanishes");
        assert_eq!(triple["witness"], "7");
        assert_eq!(triple["places"][0]["place"], "7");
        assert_eq!(triple["places"][0]["outcome"], "vanishes");
        assert_eq!(triple["places"][0]["reason"], "al-sign-product");
        assert_eq!(triple["places"][0]["epsilon"], -1);
        assert!(triple["blockers"].is_null());
    }

    #[test]
    fn text_rendering_is_stable() {
        let d = squarefree_dataset();
        let r = check_curve(&d, "217.A", None).unwrap();
        let t1 = r.render_text();
        let t2 = check_curve(&d, "217.A", None).unwrap().render_text();
        assert_eq!(t1, t2);
        assert!(t1.starts_with("curve 217.A: level 217, genus 3\n"));
        assert!(t1.contains("good: yes\n"));
        assert!(t1.ends_with(&format!("{VANISHING_CITATION}\n")));
        assert!(t1.contains("7: vanishes (al-sign-product, epsilon = -1)"));
    }
}
