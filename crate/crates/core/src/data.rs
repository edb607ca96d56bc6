//! Dataset model and ingestion: newform orbits, curve compositions,
//! resolution certificates, and an LMFDB client with an on-disk cache.

use crate::arith::{is_prime, prime_factors, valuation, EpsilonSign};
use crate::error::{Error, Result};
use crate::localglobal::{LocalComponent, LocalKind};
use crate::repcore::{parse_label, GroupSpec};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

/// A Galois orbit of weight-2 newforms with its Atkin-Lehner data and any
/// known local representation types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewformOrbit {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub hecke_degree: u32,
    #[serde(default)]
    pub atkin_lehner: BTreeMap<u64, EpsilonSign>,
    #[serde(default)]
    pub local_types: BTreeMap<u64, LocalComponent>,
    pub nebentypus_trivial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl NewformOrbit {
    /// The local component at p: a stored entry if present, unramified
    /// principal series away from the level, and an opaque supercuspidal
    /// placeholder (naming the certificate that would resolve it) at
    /// unresolved higher-power primes.
    pub fn local_type_at(&self, p: u64) -> LocalComponent {
        if let Some(c) = self.local_types.get(&p) {
            return c.clone();
        }
        if self.level % p != 0 {
            return LocalComponent::unramified();
        }
        if valuation(self.level, p) == 1 {
            if let Some(sign) = self.atkin_lehner.get(&p) {
                return LocalComponent::special(*sign);
            }
        }
        LocalComponent::opaque(format!("{}@{}", self.label, p))
    }

    fn validate(&self) -> Result<()> {
        let l = &self.label;
        if self.weight != 2 {
            return Err(Error::data(format!(
                "invariant: orbit {l}: weight {} is out of scope (only 2)",
                self.weight
            )));
        }
        if !self.nebentypus_trivial {
            return Err(Error::data(format!(
                "invariant: orbit {l}: nontrivial nebentypus is out of scope"
            )));
        }
        if self.hecke_degree == 0 {
            return Err(Error::data(format!(
                "invariant: orbit {l}: hecke_degree must be positive"
            )));
        }
        if self.level == 0 {
            return Err(Error::data(format!("invariant: orbit {l}: level must be positive")));
        }
        for (&p, component) in &self.local_types {
            if !is_prime(p) {
                return Err(Error::data(format!(
                    "invariant: orbit {l}: local type key {p} is not prime"
                )));
            }
            match &component.kind {
                LocalKind::UnramifiedPS if self.level % p == 0 => {
                    return Err(Error::data(format!(
                        "invariant: orbit {l}: unramified type declared at {p} | level"
                    )));
                }
                _ if self.level % p != 0
                    && !matches!(component.kind, LocalKind::UnramifiedPS) =>
                {
                    return Err(Error::data(format!(
                        "invariant: orbit {l}: ramified type declared at {p} away from the level"
                    )));
                }
                _ => {}
            }
        }
        let mut expected_al: BTreeSet<u64> = prime_factors(self.level)
            .into_iter()
            .filter(|&p| valuation(self.level, p) == 1)
            .collect();
        for (&p, component) in &self.local_types {
            if let LocalKind::Special { al_sign } = component.kind {
                expected_al.insert(p);
                if let Some(stored) = self.atkin_lehner.get(&p) {
                    if *stored != al_sign {
                        return Err(Error::data(format!(
                            "invariant: orbit {l}: special type at {p} disagrees with the \
                             stored Atkin-Lehner sign"
                        )));
                    }
                }
            }
        }
        let keys: BTreeSet<u64> = self.atkin_lehner.keys().copied().collect();
        if keys != expected_al {
            return Err(Error::data(format!(
                "invariant: orbit {l}: atkin_lehner keys {keys:?} must be exactly the primes \
                 dividing the level once or declared special, {expected_al:?}"
            )));
        }
        Ok(())
    }
}

/// A curve from the fixture tables, presented by its newform composition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub label: String,
    pub level: u64,
    pub genus: u32,
    pub newforms: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expected_unknown: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// What a certificate talks about: one orbit at one prime, or a specific
/// triple of orbits at one prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertScope {
    Orbit { newform: String, prime: u64 },
    Triple { labels: [String; 3], prime: u64 },
}

/// Certified resolution data: a dihedral assignment for an orbit's local
/// component, or a direct dichotomy verdict for a triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CertPayload {
    Dihedral {
        group: GroupSpec,
        rep: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding_epsilons: Option<Vec<EpsilonSign>>,
    },
    Direct {
        hom_gl2: u8,
        hom_d: u8,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub id: String,
    pub scope: CertScope,
    pub payload: CertPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// The full input to the decision engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Dataset {
    #[serde(default)]
    pub curves: Vec<CurveRecord>,
    #[serde(default)]
    pub newforms: Vec<NewformOrbit>,
    #[serde(default)]
    pub certificates: Vec<Certificate>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl Dataset {
    pub fn orbit(&self, label: &str) -> Result<&NewformOrbit> {
        self.newforms
            .iter()
            .find(|o| o.label == label)
            .ok_or_else(|| Error::data(format!("dangling-reference: newform orbit {label:?}")))
    }

    pub fn curve(&self, label: &str) -> Result<&CurveRecord> {
        self.curves
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::data(format!("dangling-reference: curve {label:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        let mut orbit_labels = BTreeSet::new();
        for o in &self.newforms {
            o.validate()?;
            if !orbit_labels.insert(o.label.clone()) {
                return Err(Error::data(format!(
                    "schema: duplicate newform label {:?}",
                    o.label
                )));
            }
        }
        let mut curve_labels = BTreeSet::new();
        for c in &self.curves {
            if !curve_labels.insert(c.label.clone()) {
                return Err(Error::data(format!("schema: duplicate curve label {:?}", c.label)));
            }
            if c.newforms.is_empty() {
                return Err(Error::data(format!(
                    "invariant: curve {}: must list at least one newform orbit",
                    c.label
                )));
            }
            let mut genus_sum: u64 = 0;
            for nf in &c.newforms {
                let orbit = self.orbit(nf).map_err(|_| {
                    Error::data(format!(
                        "dangling-reference: curve {} references missing orbit {nf:?}",
                        c.label
                    ))
                })?;
                if orbit.level != c.level {
                    return Err(Error::data(format!(
                        "invariant: curve {}: orbit {nf} has level {} but the curve has \
                         level {}",
                        c.label, orbit.level, c.level
                    )));
                }
                genus_sum += orbit.hecke_degree as u64;
            }
            if genus_sum != c.genus as u64 {
                return Err(Error::data(format!(
                    "genus-mismatch: curve {}: orbit degrees sum to {genus_sum} but genus \
                     is {}",
                    c.label, c.genus
                )));
            }
        }
        let mut cert_ids = BTreeSet::new();
        for cert in &self.certificates {
            if !cert_ids.insert(cert.id.clone()) {
                return Err(Error::data(format!("schema: duplicate certificate id {:?}", cert.id)));
            }
            let (labels, prime): (Vec<&String>, u64) = match &cert.scope {
                CertScope::Orbit { newform, prime } => (vec![newform], *prime),
                CertScope::Triple { labels, prime } => (labels.iter().collect(), *prime),
            };
            if !is_prime(prime) {
                return Err(Error::data(format!(
                    "invariant: certificate {}: {prime} is not prime",
                    cert.id
                )));
            }
            for label in &labels {
                let orbit = self.orbit(label).map_err(|_| {
                    Error::data(format!(
                        "dangling-reference: certificate {} references missing orbit {label:?}",
                        cert.id
                    ))
                })?;
                if orbit.level % prime != 0 {
                    return Err(Error::data(format!(
                        "invariant: certificate {}: prime {prime} does not divide the level \
                         of {label}",
                        cert.id
                    )));
                }
            }
            match &cert.payload {
                CertPayload::Dihedral {
                    group,
                    rep,
                    embedding_epsilons,
                } => {
                    parse_label(*group, rep).map_err(|e| {
                        Error::data(format!("invariant: certificate {}: {e}", cert.id))
                    })?;
                    if let (CertScope::Orbit { newform, .. }, Some(eps)) =
                        (&cert.scope, embedding_epsilons)
                    {
                        let orbit = self.orbit(newform)?;
                        if eps.len() != orbit.hecke_degree as usize {
                            return Err(Error::data(format!(
                                "invariant: certificate {}: {} embedding epsilons for an \
                                 orbit of degree {}",
                                cert.id,
                                eps.len(),
                                orbit.hecke_degree
                            )));
                        }
                    }
                }
                CertPayload::Direct { hom_gl2, hom_d } => {
                    if hom_gl2 + hom_d != 1 {
                        return Err(Error::data(format!(
                            "invariant: certificate {}: hom_gl2 + hom_d must equal 1",
                            cert.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Orbit-scoped dihedral certificate for (label, p), if any.
    pub fn orbit_certificate(&self, label: &str, p: u64) -> Option<&Certificate> {
        self.certificates.iter().find(|c| {
            matches!(&c.scope, CertScope::Orbit { newform, prime }
                if newform == label && *prime == p)
                && matches!(c.payload, CertPayload::Dihedral { .. })
        })
    }

    /// Triple-scoped direct certificate for the given unordered labels at p.
    pub fn triple_certificate(&self, labels: &[String; 3], p: u64) -> Option<&Certificate> {
        let mut want = labels.clone();
        want.sort();
        self.certificates.iter().find(|c| {
            if let CertScope::Triple {
                labels: have,
                prime,
            } = &c.scope
            {
                let mut have = have.clone();
                have.sort();
                *prime == p && have == want
            } else {
                false
            }
        })
    }
}

/// Parses and fully validates a dataset file.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("schema: cannot read {}: {e}", path.display())))?;
    let dataset: Dataset = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("schema: {}: {e}", path.display())))?;
    dataset.validate()?;
    Ok(dataset)
}

/// Canonical serialization: two-space pretty JSON with sorted map keys and
/// a trailing newline. load and save are mutually inverse on this form.
pub fn save_dataset(dataset: &Dataset) -> String {
    let mut s = serde_json::to_string_pretty(dataset).expect("dataset serializes");
    s.push('\n');
    s
}

/// Fills derivable local types: a Special component (with the stored
/// Atkin-Lehner sign) at each prime dividing the level exactly once. Primes
/// with square divisibility are left unresolved. Existing entries are never
/// overwritten, so the operation is idempotent.
pub fn infer_local_types(orbit: &NewformOrbit) -> Result<NewformOrbit> {
    orbit.validate()?;
    let mut out = orbit.clone();
    for p in prime_factors(orbit.level) {
        if out.local_types.contains_key(&p) {
            continue;
        }
        if valuation(orbit.level, p) == 1 {
            let sign = orbit.atkin_lehner.get(&p).ok_or_else(|| {
                Error::data(format!(
                    "invariant: orbit {}: no Atkin-Lehner sign at {p}",
                    orbit.label
                ))
            })?;
            out.local_types.insert(p, LocalComponent::special(*sign));
        }
    }
    Ok(out)
}

/// LMFDB client configuration.
#[derive(Clone, Debug)]
pub struct LmfdbConfig {
    pub base_url: String,
    pub cache_dir: PathBuf,
    pub offline: bool,
}

pub const ENV_CACHE_DIR: &str = "GOODCURVES_CACHE_DIR";
pub const ENV_OFFLINE: &str = "GOODCURVES_OFFLINE";
pub const ENV_LMFDB_URL: &str = "GOODCURVES_LMFDB_URL";

impl LmfdbConfig {
    pub fn from_env() -> Self {
        let base_url = std::env::var(ENV_LMFDB_URL)
            .unwrap_or_else(|_| "https://www.lmfdb.org".to_string());
        let cache_dir = std::env::var(ENV_CACHE_DIR).map(PathBuf::from).unwrap_or_else(|_| {
            if let Ok(xdg) = std::env::var("XDG_CACHE_HOME") {
                PathBuf::from(xdg).join("goodcurves")
            } else if let Ok(home) = std::env::var("HOME") {
                PathBuf::from(home).join(".cache").join("goodcurves")
            } else {
                std::env::temp_dir().join("goodcurves-cache")
            }
        });
        let offline = std::env::var(ENV_OFFLINE)
            .map(|v| v == "1" || v.eq_ignore_ascii_case("true"))
            .unwrap_or(false);
        LmfdbConfig {
            base_url,
            cache_dir,
            offline,
        }
    }
}

/// Fetched orbits plus a staleness marker when the result had to come from
/// the cache after a failed network attempt.
#[derive(Clone, Debug)]
pub struct FetchResult {
    pub orbits: Vec<NewformOrbit>,
    pub stale: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CacheEnvelope {
    fetched_at: String,
    level: u64,
    weight: u32,
    data: serde_json::Value,
}

fn cache_path(cfg: &LmfdbConfig, level: u64, weight: u32) -> PathBuf {
    cfg.cache_dir
        .join(format!("mf_newforms.level-{level}.weight-{weight}.json"))
}

/// Civil date-time in UTC from a unix timestamp, ISO 8601.
fn iso8601_utc(secs: u64) -> String {
    let days = secs / 86_400;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    // days-to-civil, Gregorian calendar
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { y + 1 } else { y };
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

fn now_iso8601() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    iso8601_utc(secs)
}

fn read_cache(cfg: &LmfdbConfig, level: u64, weight: u32) -> Option<CacheEnvelope> {
    let path = cache_path(cfg, level, weight);
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_cache(cfg: &LmfdbConfig, envelope: &CacheEnvelope) -> Result<()> {
    std::fs::create_dir_all(&cfg.cache_dir).map_err(|e| {
        Error::network(format!(
            "cannot create cache directory {}: {e}",
            cfg.cache_dir.display()
        ))
    })?;
    let path = cache_path(cfg, envelope.level, envelope.weight);
    let body = serde_json::to_string_pretty(envelope).expect("envelope serializes");
    std::fs::write(&path, body)
        .map_err(|e| Error::network(format!("cannot write cache {}: {e}", path.display())))?;
    Ok(())
}

fn http_get_json(url: &str) -> Result<serde_json::Value> {
    let response = ureq::get(url)
        .timeout(std::time::Duration::from_secs(30))
        .call()
        .map_err(|e| Error::network(format!("GET {url}: {e}")))?;
    let mut body = String::new();
    response
        .into_reader()
        .take(64 << 20)
        .read_to_string(&mut body)
        .map_err(|e| Error::network(format!("GET {url}: {e}")))?;
    serde_json::from_str(&body).map_err(|e| Error::network(format!("GET {url}: bad JSON: {e}")))
}

fn parse_orbits(level: u64, weight: u32, data: &serde_json::Value) -> Result<Vec<NewformOrbit>> {
    let rows = data
        .get("data")
        .and_then(|d| d.as_array())
        .ok_or_else(|| Error::network("response has no data array".to_string()))?;
    let mut orbits = Vec::new();
    for row in rows {
        let label = row
            .get("label")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::network("newform row has no label".to_string()))?
            .to_string();
        let dim = row
            .get("dim")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::network(format!("newform {label} has no dim")))?;
        let nebentypus_trivial = match row.get("char_order").and_then(|v| v.as_u64()) {
            Some(order) => order == 1,
            None => label.split('.').nth(2) == Some("a"),
        };
        let mut atkin_lehner = BTreeMap::new();
        if let Some(pairs) = row.get("atkin_lehner_eigenvals").and_then(|v| v.as_array()) {
            for pair in pairs {
                let p = pair
                    .get(0)
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| Error::network(format!("{label}: bad AL pair")))?;
                let s = pair
                    .get(1)
                    .and_then(|v| v.as_i64())
                    .ok_or_else(|| Error::network(format!("{label}: bad AL pair")))?;
                // only exact level divisors belong in the stored map
                if valuation(level, p) == 1 {
                    atkin_lehner.insert(p, EpsilonSign::from_i64(s)?);
                }
            }
        }
        orbits.push(NewformOrbit {
            label,
            level,
            weight,
            hecke_degree: dim as u32,
            atkin_lehner,
            local_types: BTreeMap::new(),
            nebentypus_trivial,
            provenance: Some(format!(
                "lmfdb:/api/mf_newforms/?level=i{level}&weight=i{weight}"
            )),
        });
    }
    Ok(orbits)
}

/// Fetches the weight-`weight` newform orbits of level `level`, preferring
/// the network and falling back to the on-disk cache. Cached fallbacks are
/// flagged stale with their original fetch timestamp.
pub fn lmfdb_fetch(cfg: &LmfdbConfig, level: u64, weight: u32) -> Result<FetchResult> {
    if cfg.offline {
        let envelope = read_cache(cfg, level, weight).ok_or_else(|| {
            Error::network(format!(
                "offline and no cached result for level {level} weight {weight} under {}",
                cfg.cache_dir.display()
            ))
        })?;
        return Ok(FetchResult {
            orbits: parse_orbits(level, weight, &envelope.data)?,
            stale: None,
        });
    }
    let url = format!(
        "{}/api/mf_newforms/?level=i{level}&weight=i{weight}&_format=json",
        cfg.base_url.trim_end_matches('/')
    );
    match http_get_json(&url) {
        Ok(data) => {
            let orbits = parse_orbits(level, weight, &data)?;
            write_cache(
                cfg,
                &CacheEnvelope {
                    fetched_at: now_iso8601(),
                    level,
                    weight,
                    data,
                },
            )?;
            Ok(FetchResult {
                orbits,
                stale: None,
            })
        }
        Err(network_error) => match read_cache(cfg, level, weight) {
            Some(envelope) => Ok(FetchResult {
                orbits: parse_orbits(level, weight, &envelope.data)?,
                stale: Some(format!("stale: {}", envelope.fetched_at)),
            }),
            None => Err(network_error),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn small_dataset() -> Dataset {
        Dataset {
            curves: vec![CurveRecord {
                label: "217.A".into(),
                level: 217,
                genus: 3,
                newforms: vec!["217.2.a.a".into()],
                expected_unknown: false,
                provenance: Some("test".into()),
            }],
            newforms: vec![
                orbit("217.2.a.a", 217, 3, &[(7, -1), (31, -1)]),
                orbit("217.2.a.b", 217, 3, &[(7, 1), (31, 1)]),
            ],
            certificates: vec![],
            meta: serde_json::json!({"source": "test"}),
        }
    }

    #[test]
    fn valid_dataset_passes() {
        small_dataset().validate().unwrap();
    }

    #[test]
    fn empty_dataset_is_valid() {
        Dataset::default().validate().unwrap();
    }

    #[test]
    fn wrong_weight_rejected() {
        let mut d = small_dataset();
        d.newforms[0].weight = 4;
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("invariant:"), "{err}");
    }

    #[test]
    fn genus_mismatch_rejected() {
        let mut d = small_dataset();
        d.curves[0].genus = 4;
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("genus-mismatch:"), "{err}");
    }

    #[test]
    fn dangling_reference_rejected() {
        let mut d = small_dataset();
        d.curves[0].newforms.push("217.2.a.z".into());
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("dangling-reference:"), "{err}");
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut d = small_dataset();
        let dup = d.newforms[0].clone();
        d.newforms.push(dup);
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("schema:"), "{err}");
    }

    #[test]
    fn al_keys_must_match_exact_divisors() {
        let mut d = small_dataset();
        // drop a required key
        d.newforms[0].atkin_lehner.remove(&31);
        assert!(d.validate().is_err());
        // add a key at a non-divisor
        let mut d = small_dataset();
        d.newforms[0]
            .atkin_lehner
            .insert(3, EpsilonSign::Plus);
        assert!(d.validate().is_err());
    }

    #[test]
    fn al_keys_at_square_primes_need_special_declaration() {
        // 459 = 3^3 * 17: only 17 is exact
        let good = orbit("459.2.a.b", 459, 1, &[(17, 1)]);
        let d = Dataset {
            newforms: vec![good],
            ..Dataset::default()
        };
        d.validate().unwrap();

        let bad = orbit("459.2.a.b", 459, 1, &[(3, -1), (17, 1)]);
        let d = Dataset {
            newforms: vec![bad],
            ..Dataset::default()
        };
        assert!(d.validate().is_err());
    }

    #[test]
    fn direct_certificate_sum_enforced() {
        let mut d = small_dataset();
        d.certificates.push(Certificate {
            id: "bad".into(),
            scope: CertScope::Triple {
                labels: [
                    "217.2.a.a".into(),
                    "217.2.a.a".into(),
                    "217.2.a.b".into(),
                ],
                prime: 7,
            },
            payload: CertPayload::Direct {
                hom_gl2: 1,
                hom_d: 1,
            },
            provenance: None,
        });
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("hom_gl2 + hom_d"), "{err}");
    }

    #[test]
    fn dihedral_certificate_label_checked() {
        let mut d = small_dataset();
        d.certificates.push(Certificate {
            id: "bad-rep".into(),
            scope: CertScope::Orbit {
                newform: "217.2.a.a".into(),
                prime: 7,
            },
            payload: CertPayload::Dihedral {
                group: GroupSpec::Dihedral(5),
                rep: "V_3".into(),
                embedding_epsilons: None,
            },
            provenance: None,
        });
        assert!(d.validate().is_err());
    }

    #[test]
    fn embedding_epsilon_length_checked() {
        let mut d = small_dataset();
        d.certificates.push(Certificate {
            id: "short".into(),
            scope: CertScope::Orbit {
                newform: "217.2.a.a".into(),
                prime: 7,
            },
            payload: CertPayload::Dihedral {
                group: GroupSpec::Dihedral(3),
                rep: "V_1".into(),
                embedding_epsilons: Some(vec![EpsilonSign::Plus]),
            },
            provenance: None,
        });
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("embedding"), "{err}");
    }

    #[test]
    fn save_load_round_trips_byte_identically() {
        let d = small_dataset();
        let s1 = save_dataset(&d);
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("d.json");
        std::fs::write(&path, &s1).unwrap();
        let d2 = load_dataset(&path).unwrap();
        assert_eq!(d2, d);
        let s2 = save_dataset(&d2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn infer_fills_special_at_exact_primes() {
        let o = orbit("217.2.a.a", 217, 3, &[(7, -1), (31, -1)]);
        let filled = infer_local_types(&o).unwrap();
        assert_eq!(
            filled.local_types.get(&7),
            Some(&LocalComponent::special(EpsilonSign::Minus))
        );
        assert_eq!(
            filled.local_types.get(&31),
            Some(&LocalComponent::special(EpsilonSign::Minus))
        );
        // idempotent
        assert_eq!(infer_local_types(&filled).unwrap(), filled);
    }

    #[test]
    fn infer_leaves_square_primes_unresolved_and_keeps_existing() {
        let mut o = orbit("459.2.a.b", 459, 1, &[(17, 1)]);
        let g = GroupSpec::Dihedral(3);
        let dihedral =
            LocalComponent::dihedral(g, crate::repcore::parse_label(g, "V_1").unwrap());
        o.local_types.insert(3, dihedral.clone());
        let filled = infer_local_types(&o).unwrap();
        assert_eq!(filled.local_types.get(&3), Some(&dihedral));
        assert_eq!(
            filled.local_types.get(&17),
            Some(&LocalComponent::special(EpsilonSign::Plus))
        );

        let bare = orbit("459.2.a.c", 459, 1, &[(17, -1)]);
        let filled = infer_local_types(&bare).unwrap();
        assert!(!filled.local_types.contains_key(&3));
        // lookups synthesize the blocker naming the needed certificate
        assert_eq!(
            filled.local_type_at(3),
            LocalComponent::opaque("459.2.a.c@3")
        );
        assert_eq!(filled.local_type_at(5), LocalComponent::unramified());
    }

    #[test]
    fn certificate_lookup_ignores_label_order() {
        let mut d = small_dataset();
        d.certificates.push(Certificate {
            id: "t".into(),
            scope: CertScope::Triple {
                labels: [
                    "217.2.a.b".into(),
                    "217.2.a.a".into(),
                    "217.2.a.a".into(),
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
        let key = [
            "217.2.a.a".to_string(),
            "217.2.a.a".to_string(),
            "217.2.a.b".to_string(),
        ];
        assert!(d.triple_certificate(&key, 7).is_some());
        assert!(d.triple_certificate(&key, 31).is_none());
    }

    #[test]
    fn timestamp_format() {
        assert_eq!(iso8601_utc(0), "1970-01-01T00:00:00Z");
        assert_eq!(iso8601_utc(951_782_400), "2000-02-29T00:00:00Z");
        assert_eq!(iso8601_utc(1_755_302_400), "2025-08-16T00:00:00Z");
    }

    fn lmfdb_stub_response() -> String {
        serde_json::json!({
            "data": [
                {
                    "label": "217.2.a.a",
                    "level": 217,
                    "weight": 2,
                    "dim": 3,
                    "char_order": 1,
                    "atkin_lehner_eigenvals": [[7, -1], [31, -1]]
                },
                {
                    "label": "217.2.a.b",
                    "level": 217,
                    "weight": 2,
                    "dim": 3,
                    "char_order": 1,
                    "atkin_lehner_eigenvals": [[7, 1], [31, 1]]
                }
            ]
        })
        .to_string()
    }

    fn spawn_stub(body: String, responses: usize) -> (String, std::thread::JoinHandle<()>) {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for _ in 0..responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 4096];
                let _ = std::io::Read::read(&mut stream, &mut buf);
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                std::io::Write::write_all(&mut stream, response.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), handle)
    }

    #[test]
    fn fetch_parses_and_caches() {
        let (base_url, handle) = spawn_stub(lmfdb_stub_response(), 1);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = LmfdbConfig {
            base_url,
            cache_dir: tmp.path().to_path_buf(),
            offline: false,
        };
        let result = lmfdb_fetch(&cfg, 217, 2).unwrap();
        handle.join().unwrap();
        assert_eq!(result.stale, None);
        assert_eq!(result.orbits.len(), 2);
        let a = &result.orbits[0];
        assert_eq!(a.label, "217.2.a.a");
        assert_eq!(a.hecke_degree, 3);
        assert_eq!(a.atkin_lehner.get(&7), Some(&EpsilonSign::Minus));
        a.validate().unwrap();

        // the server is gone; a warm cache serves a stale result
        let result = lmfdb_fetch(&cfg, 217, 2).unwrap();
        assert_eq!(result.orbits.len(), 2);
        let stale = result.stale.expect("stale flag");
        assert!(stale.starts_with("stale: "), "{stale}");

        // offline mode reads the same cache without the stale flag
        let offline_cfg = LmfdbConfig {
            offline: true,
            ..cfg.clone()
        };
        let result = lmfdb_fetch(&offline_cfg, 217, 2).unwrap();
        assert_eq!(result.stale, None);

        // offline with a cold cache is an explicit error
        let err = lmfdb_fetch(&offline_cfg, 43, 2).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(err.to_string().contains("offline"), "{err}");
    }

    #[test]
    fn fetch_drops_al_signs_at_square_primes() {
        let body = serde_json::json!({
            "data": [{
                "label": "459.2.a.b",
                "level": 459,
                "weight": 2,
                "dim": 1,
                "char_order": 1,
                "atkin_lehner_eigenvals": [[3, -1], [17, 1]]
            }]
        })
        .to_string();
        let (base_url, handle) = spawn_stub(body, 1);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = LmfdbConfig {
            base_url,
            cache_dir: tmp.path().to_path_buf(),
            offline: false,
        };
        let result = lmfdb_fetch(&cfg, 459, 2).unwrap();
        handle.join().unwrap();
        let o = &result.orbits[0];
        assert!(!o.atkin_lehner.contains_key(&3));
        assert_eq!(o.atkin_lehner.get(&17), Some(&EpsilonSign::Plus));
        o.validate().unwrap();
    }
}
