//! Process-level checks of the installed binary: exit codes, output
//! determinism, file round trips, and the network client against a local
//! stub server.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_goodcurves")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_with_data(args: &[&str]) -> Output {
    let data = fixture("go_table1.json");
    Command::new(bin())
        .args(args)
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process must exit normally")
}

#[test]
fn check_curve_exit_codes_follow_the_verdict() {
    let yes = run_with_data(&["check-curve", "217.A"]);
    assert_eq!(code(&yes), 0, "stderr: {}", stderr(&yes));
    let text = stdout(&yes);
    assert!(text.contains("good: yes"), "{text}");
    assert!(text.contains("modified diagonal cycle vanishes (Lemma vancor2)"));

    let no = run_with_data(&["check-curve", "217.B"]);
    assert_eq!(code(&no), 1);
    assert!(stdout(&no).contains("good: no"));

    let unknown = run_with_data(&["check-curve", "459.B"]);
    assert_eq!(code(&unknown), 2);
    assert!(stdout(&unknown).contains("good: unknown"));

    let certs = fixture("certificates_459.json");
    let certified = Command::new(bin())
        .args(["check-curve", "459.B", "--certificates"])
        .arg(&certs)
        .arg("--data")
        .arg(fixture("go_table1.json"))
        .output()
        .unwrap();
    assert_eq!(code(&certified), 0, "stderr: {}", stderr(&certified));
    assert!(stdout(&certified).contains("good: yes"));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let first = run_with_data(&["check-curve", "217.A", "--json"]);
    let second = run_with_data(&["check-curve", "217.A", "--json"]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(parsed["good"], "yes");

    let tables_a = run_with_data(&["reproduce-tables", "--json"]);
    let tables_b = run_with_data(&["reproduce-tables", "--json"]);
    assert_eq!(tables_a.stdout, tables_b.stdout);
}

#[test]
fn usage_and_data_errors_use_reserved_exit_codes() {
    let missing_data = run(&["check-curve", "217.A"]);
    assert_eq!(code(&missing_data), 3);
    assert!(stderr(&missing_data).contains("--data"));

    let bad_path = run(&["check-curve", "217.A", "--data", "/nonexistent/ds.json"]);
    assert_eq!(code(&bad_path), 4);

    let two_labels = run_with_data(&["check-triple", "217.2.a.a", "217.2.a.a"]);
    assert_eq!(code(&two_labels), 3);

    let unknown_command = run(&["frobnicate"]);
    assert_eq!(code(&unknown_command), 3);

    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("goodcurves"));

    let version = run(&["--version"]);
    assert_eq!(code(&version), 0);
}

#[test]
fn construct_verify_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("cert.json");
    let built = Command::new(bin())
        .args(["construct", "217.2.a.a", "217.2.a.a", "217.2.a.a", "--at", "7", "--out"])
        .arg(&cert_path)
        .arg("--data")
        .arg(fixture("go_table1.json"))
        .output()
        .unwrap();
    assert_eq!(code(&built), 0, "stderr: {}", stderr(&built));
    assert!(stdout(&built).contains("certificate: ok"));

    let verified = run(&["verify", cert_path.to_str().unwrap()]);
    assert_eq!(code(&verified), 0, "stderr: {}", stderr(&verified));
    assert!(stdout(&verified).contains("certificate: ok"));

    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
    let n = value["n"].as_u64().unwrap();
    value["n"] = (n + 1).into();
    let tampered_path = dir.path().join("tampered.json");
    std::fs::write(&tampered_path, serde_json::to_string(&value).unwrap()).unwrap();
    let tampered = run(&["verify", tampered_path.to_str().unwrap()]);
    assert_eq!(code(&tampered), 1);
    assert!(stdout(&tampered).contains("INVALID"));

    let absent = run(&["verify", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&absent), 4);
}

#[test]
fn root_number_reports_the_forced_zero() {
    let forced = run(&["root-number", "7=+1", "11=+1"]);
    assert_eq!(code(&forced), 0);
    let text = stdout(&forced);
    assert!(text.contains("global sign: -1"), "{text}");
    assert!(text.contains("So L(1/2, \u{3c0}) = 0"), "{text}");

    let unforced = run(&["root-number", "7=-1", "11=+1"]);
    assert_eq!(code(&unforced), 0);
    let text = stdout(&unforced);
    assert!(text.contains("global sign: +1"), "{text}");
    assert!(!text.contains("So L(1/2,"), "{text}");

    let malformed = run(&["root-number", "7=maybe"]);
    assert_eq!(code(&malformed), 3);
}

#[test]
fn reproduce_tables_requires_the_certificates() {
    let with = Command::new(bin())
        .args(["reproduce-tables", "--certificates"])
        .arg(fixture("certificates_459.json"))
        .arg("--data")
        .arg(fixture("go_table1.json"))
        .output()
        .unwrap();
    assert_eq!(code(&with), 0, "stderr: {}", stderr(&with));
    assert!(stdout(&with).contains("tables reproduced"));

    let without = run_with_data(&["reproduce-tables"]);
    assert_eq!(code(&without), 1);
    assert!(stdout(&without).contains("tables NOT reproduced"));
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

fn stub_body() -> String {
    serde_json::json!({
        "data": [
            {
                "label": "217.2.a.a",
                "dim": 3,
                "char_order": 1,
                "atkin_lehner_eigenvals": [[7, -1], [31, -1]],
            },
            {
                "label": "217.2.a.b",
                "dim": 3,
                "char_order": 1,
                "atkin_lehner_eigenvals": [[7, 1], [31, 1]],
            },
        ]
    })
    .to_string()
}

fn fetch_with(base_url: &str, cache_dir: &Path, offline: bool) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(["fetch-lmfdb", "217", "--cache-dir"])
        .arg(cache_dir)
        .env("GOODCURVES_LMFDB_URL", base_url);
    if offline {
        cmd.arg("--offline");
    }
    cmd.output().unwrap()
}

#[test]
fn fetch_lmfdb_caches_and_degrades() {
    let dir = tempfile::tempdir().unwrap();
    let (base_url, handle) = spawn_stub(stub_body(), 1);

    let fresh = fetch_with(&base_url, dir.path(), false);
    handle.join().unwrap();
    assert_eq!(code(&fresh), 0, "stderr: {}", stderr(&fresh));
    let text = stdout(&fresh);
    assert!(text.contains("217.2.a.a: dim 3, AL 7 = -1, 31 = -1"), "{text}");
    assert!(!text.contains("stale"), "{text}");
    let cache_file = dir.path().join("mf_newforms.level-217.weight-2.json");
    assert!(cache_file.exists());

    // warm cache answers offline without touching the network
    let offline_warm = fetch_with("http://127.0.0.1:1", dir.path(), true);
    assert_eq!(code(&offline_warm), 0);
    assert!(stdout(&offline_warm).contains("217.2.a.a: dim 3"));

    // a dead server degrades to the cache and marks the answer stale
    let dead = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        format!("http://{addr}")
    };
    let degraded = fetch_with(&dead, dir.path(), false);
    assert_eq!(code(&degraded), 0, "stderr: {}", stderr(&degraded));
    let text = stdout(&degraded);
    assert!(text.starts_with("stale: "), "{text}");
    assert!(text.contains("217.2.a.b: dim 3, AL 7 = +1, 31 = +1"), "{text}");

    // a cold cache offline is a network error
    let cold = tempfile::tempdir().unwrap();
    let offline_cold = fetch_with("http://127.0.0.1:1", cold.path(), true);
    assert_eq!(code(&offline_cold), 5);
    assert!(stderr(&offline_cold).contains("offline"));
}

#[test]
fn check_triple_reports_each_place() {
    let output = run_with_data(&[
        "check-triple",
        "329.2.a.c",
        "329.2.a.c",
        "329.2.a.c",
        "--json",
    ]);
    assert_eq!(code(&output), 0);
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(parsed["conclusion"], "vanishes");
    assert_eq!(parsed["witness"], "7");
    let places = parsed["places"].as_array().unwrap();
    assert_eq!(places.len(), 2);
    assert_eq!(places[0]["place"], "7");
    assert_eq!(places[0]["epsilon"], -1);
}
