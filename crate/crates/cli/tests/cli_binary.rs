use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use qmonty::lab::{parse_csv_report, ReportRow};

fn qmonty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmonty"))
        .args(args)
        .env_remove("QMONTY_PORT")
        .output()
        .unwrap()
}

fn rows(out: &Output) -> Vec<ReportRow> {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    parse_csv_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("qmonty-{}-{name}", std::process::id()))
}

#[test]
fn haar_switch_report() {
    let out = qmonty(&["simulate", "--host", "haar", "--player", "switch", "-n", "1000000", "--seed", "42"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    assert!((rows[0].estimate - 2.0 / 3.0).abs() <= 0.0019, "{:?}", rows[0]);
    assert_eq!(rows[0].trials, 1_000_000);
    assert_eq!(rows[0].seed, 42);
}

#[test]
fn cheats_win_every_game() {
    let finite = rows(&qmonty(&["simulate", "--host", "axes", "--player", "cheat-finite", "-n", "10000"]));
    assert_eq!(finite[0].estimate, 1.0);
    let real = rows(&qmonty(&["simulate", "--host", "real", "--player", "cheat-real", "-n", "10000"]));
    assert_eq!(real[0].estimate, 1.0);
    let catalog = rows(&qmonty(&["simulate", "--host", "finite:100", "--player", "cheat-finite", "-n", "10000"]));
    assert_eq!(catalog[0].estimate, 1.0);
}

#[test]
fn truncated_announcements_are_reported_without_error() {
    let four = rows(&qmonty(&["simulate", "--host", "real", "--player", "cheat-real", "-n", "10000", "--digits", "4"]));
    assert!(four[0].estimate <= 1.0);
    assert_eq!(four[0].rules, "strict@4d");
    let one = rows(&qmonty(&["simulate", "--host", "real", "--player", "cheat-real", "-n", "10000", "--digits", "1"]));
    assert!(one[0].estimate < 1.0, "{:?}", one[0]);
}

#[test]
fn exit_codes() {
    let violation = qmonty(&["simulate", "--host", "ignore", "--player", "switch", "-n", "1000"]);
    assert_eq!(violation.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&violation.stderr).contains("host violation"));

    for args in [
        &["simulate", "--host", "bogus"][..],
        &["simulate", "--player", "cheat-finite", "--host", "haar"],
        &["simulate", "--bogus"],
        &["simulate", "--digits", "0"],
        &["simulate", "--format", "xml"],
        &["simulate", "--player", "stick", "--theta-sweep", "0,1"],
        &["simulate", "-n", "0"],
        &["frobnicate"],
    ] {
        let out = qmonty(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(qmonty(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_reports_match_csv() {
    let args = ["simulate", "--host", "axes", "--player", "stick", "-n", "5000", "--seed", "7"];
    let csv = rows(&qmonty(&args));
    let json = qmonty(&[&args[..], &["--format", "json"]].concat());
    let parsed: Vec<ReportRow> = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(parsed, csv);
}

#[test]
fn theta_sweep_writes_one_row_per_angle() {
    let path = scratch("sweep.csv");
    let out = qmonty(&[
        "simulate",
        "--host",
        "haar",
        "--theta-sweep",
        "0:pi/2:5",
        "-n",
        "20000",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let rows = parse_csv_report(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let predicted = row.analytic.unwrap();
        let sigma = (predicted * (1.0 - predicted) / row.trials as f64).sqrt();
        assert!((row.estimate - predicted).abs() <= 4.0 * sigma, "{row:?}");
    }
    assert!(rows[0].player.starts_with("angle:0"));
}

#[test]
fn config_files_describe_whole_experiments() {
    let path = scratch("config.json");
    std::fs::write(
        &path,
        r#"{"host": {"kind": "real_vector"}, "player": {"kind": "real_cheat"}, "trials": 2000, "seed": 3, "format": "json"}"#,
    )
    .unwrap();
    let out = qmonty(&["simulate", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<ReportRow> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0].estimate, 1.0);
    assert_eq!(rows[0].seed, 3);

    let out = qmonty(&["simulate", "--config", "/nonexistent/qmonty.json"]);
    assert_eq!(out.status.code(), Some(1));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn serve_takes_its_port_from_the_environment() {
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_qmonty"))
        .args(["serve", "--port", "1"])
        .env("QMONTY_PORT", port.to_string())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut stream = loop {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().unwrap();
                panic!("service never came up: {e}");
            }
        }
    };
    stream
        .write_all(b"GET /api/v1/strategies HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"hosts\""));
}

#[test]
fn serve_fails_when_the_port_is_taken() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = qmonty(&["serve", "--port", &port]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot serve"));
}
