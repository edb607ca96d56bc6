//! Integrity checks for the bundled fixture files: they must parse, pass
//! dataset validation, round-trip byte-identically through the canonical
//! writer, and agree with the curve records they describe.

use std::collections::BTreeSet;
use std::path::PathBuf;

use goodcurves::data::{load_dataset, save_dataset};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[test]
fn table_fixture_loads_and_validates() {
    let ds = load_dataset(&fixture("go_table1.json")).expect("fixture must load");
    assert_eq!(ds.curves.len(), 43);
    assert_eq!(ds.newforms.len(), 63);
    assert!(ds.certificates.is_empty());
    for curve in &ds.curves {
        assert_eq!(curve.genus, 3, "{} is not genus 3", curve.label);
    }
}

#[test]
fn certificate_fixture_merges_cleanly() {
    let mut ds = load_dataset(&fixture("go_table1.json")).unwrap();
    let raw = std::fs::read_to_string(fixture("certificates_459.json")).unwrap();
    let extra: goodcurves::data::Dataset = serde_json::from_str(&raw).unwrap();
    assert_eq!(extra.certificates.len(), 4);
    ds.certificates.extend(extra.certificates);
    ds.validate().expect("merged dataset must validate");
    let ids: BTreeSet<&str> = ds.certificates.iter().map(|c| c.id.as_str()).collect();
    for letter in ["b", "i", "c", "l"] {
        assert!(ids.contains(format!("459-{letter}-p3-dihedral").as_str()));
    }
}

#[test]
fn fixtures_are_in_canonical_form() {
    for name in ["go_table1.json", "certificates_459.json"] {
        let path = fixture(name);
        let raw = std::fs::read_to_string(&path).unwrap();
        let ds: goodcurves::data::Dataset =
            serde_json::from_str(&raw).expect("fixture must parse");
        assert_eq!(raw, save_dataset(&ds), "{name} is not in canonical form");
    }
}

#[test]
fn atkin_lehner_keys_are_exact_divisors() {
    let ds = load_dataset(&fixture("go_table1.json")).unwrap();
    for orbit in &ds.newforms {
        for p in orbit.atkin_lehner.keys() {
            assert_eq!(
                goodcurves::arith::valuation(orbit.level, *p),
                1,
                "{}: sign stored at non-exact prime {p}",
                orbit.label
            );
        }
    }
}
