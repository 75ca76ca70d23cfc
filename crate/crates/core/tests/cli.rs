use std::path::PathBuf;
use std::process::{Command, Output};

use qpc::grid::{parse_csv, HEADER};

fn qpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpc")).args(args).output().expect("spawn qpc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn run_equal_unequal_and_aborted() {
    let base = ["run", "--protocol", "osb", "--n", "16", "--seed", "7", "--ma", "0xBEEF"];
    let eq = qpc(&[&base[..], &["--mb", "0xBEEF"]].concat());
    assert_eq!(eq.status.code(), Some(0));
    assert!(stdout(&eq).ends_with("verdict=equal\n"));

    let ne = qpc(&[&base[..], &["--mb", "0xBEEE"]].concat());
    assert_eq!(ne.status.code(), Some(0));
    assert!(stdout(&ne).ends_with("verdict=unequal:15\n"));

    let ab = qpc(&[&base[..], &["--mb", "0xBEEF", "--noise-a", "bf:1.0"]].concat());
    assert_eq!(ab.status.code(), Some(2));
    assert!(stdout(&ab).contains("verdict=aborted:OSB4"));
}

#[test]
fn transcript_goes_to_out_file() {
    let path = scratch("run.log");
    let o = qpc(&["run", "--protocol", "sqpc", "--n", "4", "--ma", "0x9", "--mb", "0x9", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let log = std::fs::read_to_string(&path).unwrap();
    assert!(log.lines().next().unwrap().starts_with("SQ2 TP send"));
    assert!(log.contains("SQ9 TP announce verdict=equal"));
    assert!(!stdout(&o).contains("SQ2"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qpc(&["nonsense"]).status.code(), Some(1));
    assert_eq!(qpc(&["run", "--n", "x"]).status.code(), Some(1));
    let o = qpc(&["run", "--n", "4", "--ma", "0xFFF"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not fit"));
    assert_eq!(qpc(&["attack", "--protocol", "osb", "--attack", "memory-alice"]).status.code(), Some(1));
    assert_eq!(qpc(&["fidelity-grid", "--step", "0.3"]).status.code(), Some(1));
    assert_eq!(qpc(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override_and_line_numbers() {
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "# equal inputs\nprotocol=osb\nn=8\nma=0x5A\nmb=0x5A\nseed=3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = qpc(&["run", "--config", c]);
    assert!(stdout(&o).ends_with("verdict=equal\n"));
    let o = qpc(&["run", "--config", c, "--mb", "0x5B"]);
    assert!(stdout(&o).ends_with("verdict=unequal:7\n"));

    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "n=8\nseed=3\ntrials=many\n").unwrap();
    let o = qpc(&["attack", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn grid_file_round_trips_and_contains_reference_rows() {
    let path = scratch("grid.csv");
    let o = qpc(&["fidelity-grid", "--step", "0.1", "--trips", "oneway", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(HEADER));
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 16 * 2 * 121);
    assert_eq!(qpc::grid::to_csv(&rows), text);
    assert!(rows.iter().all(|r| r.abs_deviation < 1e-10));

    let ad = rows
        .iter()
        .find(|r| r.kind_pair() == "AD-AD" && !r.parity && r.p1 == 0.5 && r.p2 == 0.5)
        .unwrap();
    assert!((ad.closed_form - 0.625).abs() < 1e-12);
    let bf_end = rows
        .iter()
        .find(|r| r.kind_pair() == "BF-BF" && r.p1 == 1.0 && r.p2 == 1.0)
        .unwrap();
    assert_eq!(bf_end.closed_form, 1.0);
}

#[test]
fn efficiency_table() {
    let o = qpc(&["efficiency", "--ns", "1,1000000"]);
    let out = stdout(&o);
    assert!(out.contains("protocol=osb n=1 c=2 q=12 b=6 eta=1/9"));
    assert!(out.contains("protocol=sqpc n=1 c=2 q=58 b=45 eta=2/103"));
    assert!(out.contains("protocol=osb n=1000000 c=2000000 q=12000000 b=5000001 eta=2000000/17000001 eta_percent=11.7647"));
    assert!(out.contains("eta_percent=1.9608"));
}

#[test]
fn verify_formulas_reports_every_family() {
    let o = qpc(&["verify-formulas", "--step", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("family=")).count(), 20);
    assert!(out.ends_with("oneway_families=10 roundtrip_families=10 passed=true\n"));
}

#[test]
fn attack_campaigns_through_the_cli() {
    let o = qpc(&["attack", "--protocol", "osb", "--n", "6", "--attack", "iy", "--trials", "50"]);
    let out = stdout(&o);
    assert!(out.contains("detection_rate=1 by_stage=OSB4:50"), "{out}");
    let o = qpc(&["attack", "--protocol", "sqpc", "--n", "16", "--attack", "intercept-resend", "--trials", "400", "--format", "csv"]);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let rate: f64 = row[9].parse().unwrap();
    assert!((rate - 0.5).abs() < 0.02);
}
