//! Command line interface: argument parsing, subcommand dispatch, output
//! rendering, and exit-code policy.

use crate::arith::{
    find_real_quadratic_split, hasse_invariant, is_almost_definite, is_prime, EpsilonSign,
    FieldDesc, Place, QuaternionAlgebra,
};
use crate::construct::{vanishing_pipeline, verify_certificate, ConstructionCertificate};
use crate::data::{lmfdb_fetch, load_dataset, Dataset, LmfdbConfig};
use crate::error::{Error, Result};
use crate::goodness::{
    check_curve, check_triple, render_triple_verdict, reproduce_tables, TripleConclusion,
};
use crate::localglobal::{
    global_root_number, supporting_quaternion, RootNumberResult, TripleLocalVerdict,
    VerdictOutcome, REASON_AL_SIGN_PRODUCT,
};
use crate::repcore::{parse_label, trilinear_multiplicity, GroupSpec};
use clap::{Parser, Subcommand};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "goodcurves",
    version,
    about = "Decide vanishing of triple-product components of modified diagonal cycles",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Dataset file with curves, newform orbits, and certificates
    #[arg(long, global = true, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Extra certificate file merged into the dataset
    #[arg(long, global = true, value_name = "PATH")]
    pub certificates: Option<PathBuf>,

    /// Emit machine-readable JSON instead of text
    #[arg(long, global = true)]
    pub json: bool,

    /// Never touch the network; only the local cache is consulted
    #[arg(long, global = true)]
    pub offline: bool,

    /// Cache directory for fetched data
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a curve is good: every isotypic triple must vanish
    CheckCurve {
        /// Curve label, e.g. 217.A
        label: String,
    },
    /// Decide one triple of newform orbits
    CheckTriple {
        /// Exactly three orbit labels
        #[arg(num_args = 3, value_name = "LABEL")]
        labels: Vec<String>,
    },
    /// Trilinear multiplicity of three irreducible characters
    Trilinear {
        /// Group family: dihedral or cyclic
        group: String,
        /// Group parameter n
        n: u64,
        /// Exactly three irreducible labels, e.g. V_1 or chi_2
        #[arg(num_args = 3, value_name = "REP")]
        reps: Vec<String>,
    },
    /// Global root number over Q from finite local signs
    RootNumber {
        /// Finite signs as place=+1 or place=-1 tokens
        #[arg(value_name = "SIGN")]
        signs: Vec<String>,
    },
    /// Hasse invariants of a quaternion algebra given its ramification set
    Hasse {
        /// Ramified places (primes, infN, or v:label)
        #[arg(long, num_args = 1.., value_name = "PLACE")]
        ramified: Vec<String>,
        /// Additional places to evaluate
        #[arg(long, num_args = 1.., value_name = "PLACE")]
        at: Vec<String>,
        /// Base field degree
        #[arg(long, default_value_t = 1, value_name = "N")]
        base_degree: u32,
        /// Number of real places of the base field
        #[arg(long, default_value_t = 1, value_name = "N")]
        base_real: u32,
    },
    /// Smallest real quadratic field split at all the given primes
    FindQuadratic {
        /// Rational primes
        #[arg(value_name = "PRIME")]
        primes: Vec<u64>,
    },
    /// Build a vanishing construction certificate for a triple at a prime
    Construct {
        /// Exactly three orbit labels
        #[arg(num_args = 3, value_name = "LABEL")]
        labels: Vec<String>,
        /// The prime to force vanishing at
        #[arg(long, value_name = "PRIME")]
        at: u64,
        /// Write the certificate JSON to this file
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Re-derive and check every invariant of a construction certificate
    Verify {
        /// Certificate JSON file
        certificate: PathBuf,
    },
    /// Fetch newform orbit data for a level, with an on-disk cache
    FetchLmfdb {
        /// Level N
        level: u64,
        /// Weight (only 2 is in scope)
        #[arg(long, default_value_t = 2, value_name = "K")]
        weight: u32,
    },
    /// Check every curve in the dataset against the bundled good set
    ReproduceTables,
}

/// Runs the CLI against explicit writers and returns the process exit code.
pub fn run_with_writers(
    args: Vec<String>,
    out: &mut dyn Write,
    err_out: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err_out, "{e}");
                    3
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err_out, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the CLI against the process stdout and stderr.
pub fn run(args: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_writers(args, &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::CheckCurve { label } => cmd_check_curve(cli, label, out),
        Command::CheckTriple { labels } => cmd_check_triple(cli, labels, out),
        Command::Trilinear { group, n, reps } => cmd_trilinear(cli, group, *n, reps, out),
        Command::RootNumber { signs } => cmd_root_number(cli, signs, out),
        Command::Hasse {
            ramified,
            at,
            base_degree,
            base_real,
        } => cmd_hasse(cli, ramified, at, *base_degree, *base_real, out),
        Command::FindQuadratic { primes } => cmd_find_quadratic(cli, primes, out),
        Command::Construct { labels, at, out: out_path } => {
            cmd_construct(cli, labels, *at, out_path.as_deref(), out)
        }
        Command::Verify { certificate } => cmd_verify(cli, certificate, out),
        Command::FetchLmfdb { level, weight } => cmd_fetch(cli, *level, *weight, out),
        Command::ReproduceTables => cmd_reproduce(cli, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::internal(format!("cannot write output: {e}")))
}

fn emit_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::internal(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    emit(out, &s)
}

fn required_dataset(cli: &Cli) -> Result<Dataset> {
    let path = cli
        .data
        .as_ref()
        .ok_or_else(|| Error::usage("this command needs --data <PATH>"))?;
    let mut dataset = load_dataset(path)?;
    if let Some(extra) = &cli.certificates {
        let text = std::fs::read_to_string(extra).map_err(|e| {
            Error::data(format!("schema: cannot read {}: {e}", extra.display()))
        })?;
        let extra_set: Dataset = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("schema: {}: {e}", extra.display())))?;
        dataset.certificates.extend(extra_set.certificates);
        dataset.validate()?;
    }
    Ok(dataset)
}

fn three_labels(labels: &[String]) -> Result<[String; 3]> {
    match labels {
        [a, b, c] => Ok([a.clone(), b.clone(), c.clone()]),
        _ => Err(Error::usage("exactly three orbit labels are required")),
    }
}

fn cmd_check_curve(cli: &Cli, label: &str, out: &mut dyn Write) -> Result<i32> {
    let dataset = required_dataset(cli)?;
    let report = check_curve(&dataset, label, None)?;
    if cli.json {
        emit_json(out, &report)?;
    } else {
        emit(out, &report.render_text())?;
    }
    Ok(report.good.exit_code())
}

fn cmd_check_triple(cli: &Cli, labels: &[String], out: &mut dyn Write) -> Result<i32> {
    let dataset = required_dataset(cli)?;
    let labels = three_labels(labels)?;
    let verdict = check_triple(&dataset, &labels, None)?;
    if cli.json {
        emit_json(out, &verdict)?;
    } else {
        emit(out, &render_triple_verdict(&verdict))?;
    }
    Ok(match verdict.conclusion {
        TripleConclusion::Vanishes { .. } => 0,
        TripleConclusion::FormExists => 1,
        TripleConclusion::Unknown { .. } => 2,
    })
}

fn cmd_trilinear(
    cli: &Cli,
    group: &str,
    n: u64,
    reps: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let g = match group {
        "dihedral" => GroupSpec::Dihedral(n),
        "cyclic" => GroupSpec::Cyclic(n),
        other => {
            return Err(Error::usage(format!(
                "unknown group family {other:?}; use dihedral or cyclic"
            )));
        }
    };
    g.validate()?;
    let labels = match reps {
        [a, b, c] => [parse_label(g, a)?, parse_label(g, b)?, parse_label(g, c)?],
        _ => return Err(Error::usage("exactly three representation labels are required")),
    };
    let m = trilinear_multiplicity(g, &labels[0], &labels[1], &labels[2])?;
    if cli.json {
        emit_json(
            out,
            &serde_json::json!({
                "group": g.to_string(),
                "reps": reps,
                "multiplicity": m,
            }),
        )?;
    } else {
        emit(out, &format!("multiplicity: {m}\n"))?;
    }
    Ok(0)
}

fn parse_sign_token(token: &str) -> Result<(Place, EpsilonSign)> {
    let (place, sign) = token
        .split_once('=')
        .ok_or_else(|| Error::usage(format!("bad sign token {token:?}; use place=+1 or place=-1")))?;
    let place = Place::parse(place)?;
    if place.is_real() {
        return Err(Error::usage(format!(
            "{place} is a real place; its sign is fixed and cannot be supplied"
        )));
    }
    let sign = match sign {
        "+1" => EpsilonSign::Plus,
        "-1" => EpsilonSign::Minus,
        other => {
            return Err(Error::usage(format!(
                "bad sign {other:?} in {token:?}; use +1 or -1"
            )));
        }
    };
    Ok((place, sign))
}

fn cmd_root_number(cli: &Cli, signs: &[String], out: &mut dyn Write) -> Result<i32> {
    let base = FieldDesc::rationals();
    let mut finite: BTreeMap<Place, EpsilonSign> = BTreeMap::new();
    for token in signs {
        let (place, sign) = parse_sign_token(token)?;
        if finite.insert(place.clone(), sign).is_some() {
            return Err(Error::usage(format!("duplicate sign for place {place}")));
        }
    }
    let verdicts: Vec<TripleLocalVerdict> = finite
        .iter()
        .map(|(place, sign)| TripleLocalVerdict {
            place: place.clone(),
            outcome: match sign {
                EpsilonSign::Plus => VerdictOutcome::FormExists {
                    reason: REASON_AL_SIGN_PRODUCT.into(),
                },
                EpsilonSign::Minus => VerdictOutcome::Vanishes {
                    reason: REASON_AL_SIGN_PRODUCT.into(),
                },
            },
            epsilon: Some(*sign),
        })
        .collect();
    let result: RootNumberResult = global_root_number(&base, &verdicts)?;
    let supporting = supporting_quaternion(&base, &finite)?;

    if cli.json {
        let almost = supporting.as_ref().map(is_almost_definite);
        emit_json(
            out,
            &serde_json::json!({
                "local_signs": result.local_signs,
                "global_sign": result.global_sign,
                "l_value_forced_zero": result.l_value_forced_zero,
                "citation": result.citation(),
                "supporting_quaternion": supporting,
                "almost_definite": almost,
            }),
        )?;
        return Ok(0);
    }

    let fmt_signs = |pred: &dyn Fn(&Place) -> bool| {
        result
            .local_signs
            .iter()
            .filter(|(p, _)| pred(p))
            .map(|(p, s)| format!("{p} = {s}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    emit(out, &format!("archimedean: {}\n", fmt_signs(&|p| p.is_real())))?;
    let finite_line = fmt_signs(&|p| !p.is_real());
    emit(
        out,
        &format!(
            "finite: {}\n",
            if finite_line.is_empty() { "none" } else { &finite_line }
        ),
    )?;
    emit(out, &format!("global sign: {}\n", result.global_sign))?;
    if let Some(citation) = result.citation() {
        emit(out, &format!("{citation}\n"))?;
    }
    match &supporting {
        Some(alg) => {
            let places: Vec<String> = alg.ramified.iter().map(|p| p.to_string()).collect();
            emit(
                out,
                &format!("supporting quaternion: ramified at {}\n", places.join(", ")),
            )?;
            emit(
                out,
                &format!(
                    "almost definite: {}\n",
                    if is_almost_definite(alg) { "yes" } else { "no" }
                ),
            )?;
        }
        None => emit(out, "supporting quaternion: none\n")?,
    }
    Ok(0)
}

fn cmd_hasse(
    cli: &Cli,
    ramified: &[String],
    at: &[String],
    base_degree: u32,
    base_real: u32,
    out: &mut dyn Write,
) -> Result<i32> {
    let base = if base_degree == 1 && base_real == 1 {
        FieldDesc::rationals()
    } else {
        FieldDesc {
            label: format!("F[{base_degree},{base_real}]"),
            degree: base_degree,
            real_places: base_real,
        }
    };
    let mut places: BTreeSet<Place> = BTreeSet::new();
    for token in ramified {
        let place = Place::parse(token)?;
        if !places.insert(place) {
            return Err(Error::usage(format!("duplicate ramified place {token}")));
        }
    }
    let algebra = QuaternionAlgebra::new(base, places)?;
    let mut queries: Vec<Place> = algebra.ramified.iter().cloned().collect();
    for token in at {
        let place = Place::parse(token)?;
        if !queries.contains(&place) {
            queries.push(place);
        }
    }
    let invariants: Vec<(Place, EpsilonSign)> = queries
        .iter()
        .map(|p| hasse_invariant(&algebra, p).map(|s| (p.clone(), s)))
        .collect::<Result<_>>()?;

    if cli.json {
        let table: BTreeMap<String, i64> = invariants
            .iter()
            .map(|(p, s)| (p.to_string(), s.as_i64()))
            .collect();
        emit_json(
            out,
            &serde_json::json!({
                "algebra": algebra,
                "invariants": table,
                "matrix_algebra": algebra.is_matrix_algebra(),
                "almost_definite": is_almost_definite(&algebra),
            }),
        )?;
        return Ok(0);
    }

    emit(
        out,
        &format!(
            "base: {}, degree {}, {} real places\n",
            algebra.base.label, algebra.base.degree, algebra.base.real_places
        ),
    )?;
    let ram: Vec<String> = algebra.ramified.iter().map(|p| p.to_string()).collect();
    emit(
        out,
        &format!(
            "ramified: {}\n",
            if ram.is_empty() { "none".to_string() } else { ram.join(", ") }
        ),
    )?;
    for (place, sign) in &invariants {
        emit(out, &format!("invariant at {place}: {sign}\n"))?;
    }
    emit(
        out,
        &format!(
            "matrix algebra: {}\n",
            if algebra.is_matrix_algebra() { "yes" } else { "no" }
        ),
    )?;
    emit(
        out,
        &format!(
            "almost definite: {}\n",
            if is_almost_definite(&algebra) { "yes" } else { "no" }
        ),
    )?;
    Ok(0)
}

fn cmd_find_quadratic(cli: &Cli, primes: &[u64], out: &mut dyn Write) -> Result<i32> {
    if primes.is_empty() {
        return Err(Error::usage("at least one prime is required"));
    }
    let mut set = BTreeSet::new();
    for &p in primes {
        if !is_prime(p) {
            return Err(Error::usage(format!("{p} is not prime")));
        }
        set.insert(p);
    }
    let d = find_real_quadratic_split(&set)?;
    if cli.json {
        emit_json(
            out,
            &serde_json::json!({
                "primes": set.iter().collect::<Vec<_>>(),
                "d": d,
            }),
        )?;
    } else {
        emit(out, &format!("d = {d}\n"))?;
    }
    Ok(0)
}

fn cmd_construct(
    cli: &Cli,
    labels: &[String],
    at: u64,
    out_path: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let dataset = required_dataset(cli)?;
    let labels = three_labels(labels)?;
    let cert = vanishing_pipeline(&dataset, &labels, at)?;
    let report = verify_certificate(&cert);
    if !report.ok {
        return Err(Error::internal(format!(
            "freshly built certificate failed verification: {}",
            report.failures.join(", ")
        )));
    }
    if let Some(path) = out_path {
        let mut body = serde_json::to_string_pretty(&cert)
            .map_err(|e| Error::internal(format!("cannot serialize certificate: {e}")))?;
        body.push('\n');
        std::fs::write(path, body)
            .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    }
    if cli.json {
        emit_json(out, &cert)?;
        return Ok(0);
    }
    for input in &cert.inputs {
        emit(
            out,
            &format!("input: {} (degree {})\n", input.label, input.hecke_degree),
        )?;
    }
    emit(out, &format!("place: {}\n", cert.place))?;
    emit(out, &format!("embedding triples: {}\n", cert.n))?;
    let first_layer = match cert.tower.first_layer_d {
        Some(d) => format!(", first layer d = {d}"),
        None => String::new(),
    };
    emit(
        out,
        &format!(
            "tower: {} layers, {} places over {}{}\n",
            cert.tower.layers,
            cert.tower.places_over.len(),
            cert.tower.split_place,
            first_layer
        ),
    )?;
    emit(
        out,
        &format!(
            "algebra: {} ramified places, almost definite: {}\n",
            cert.algebra.ramified.len(),
            if is_almost_definite(&cert.algebra) { "yes" } else { "no" }
        ),
    )?;
    emit(out, &format!("witnesses: {}\n", cert.witnesses.len()))?;
    emit(out, "certificate: ok\n")?;
    Ok(0)
}

fn cmd_verify(cli: &Cli, path: &std::path::Path, out: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("schema: cannot read {}: {e}", path.display())))?;
    let cert: ConstructionCertificate = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("schema: {}: {e}", path.display())))?;
    let report = verify_certificate(&cert);
    if cli.json {
        emit_json(out, &report)?;
    } else {
        emit(out, &report.render_text())?;
    }
    Ok(if report.ok { 0 } else { 1 })
}

fn cmd_fetch(cli: &Cli, level: u64, weight: u32, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = LmfdbConfig::from_env();
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    if cli.offline {
        cfg.offline = true;
    }
    let result = lmfdb_fetch(&cfg, level, weight)?;
    if cli.json {
        emit_json(
            out,
            &serde_json::json!({
                "level": level,
                "weight": weight,
                "stale": result.stale,
                "orbits": result.orbits,
            }),
        )?;
        return Ok(0);
    }
    if let Some(stale) = &result.stale {
        emit(out, &format!("{stale}\n"))?;
    }
    for orbit in &result.orbits {
        let al: Vec<String> = orbit
            .atkin_lehner
            .iter()
            .map(|(p, s)| format!("{p} = {s}"))
            .collect();
        emit(
            out,
            &format!(
                "{}: dim {}, AL {}\n",
                orbit.label,
                orbit.hecke_degree,
                if al.is_empty() { "none".to_string() } else { al.join(", ") }
            ),
        )?;
    }
    Ok(0)
}

fn cmd_reproduce(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let dataset = required_dataset(cli)?;
    let report = reproduce_tables(&dataset)?;
    if cli.json {
        emit_json(out, &report)?;
    } else {
        emit(out, &report.render_text())?;
    }
    Ok(if report.ok { 0 } else { 1 })
}
