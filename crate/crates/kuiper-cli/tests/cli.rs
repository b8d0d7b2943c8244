use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kuiper::grid::{read_field, smooth_random_field, write_field};
use kuiper::{Grid, Rank};

fn kuiper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuiper")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small planar run: 97^2 resolves the first two stages of the desk schedule.
fn small_run(dir: &Path, extra: &[&str]) -> Output {
    let out = format!("out={}", dir.display());
    let mut args = vec!["run", "grid=97", "stages=2", "holder_pairs=2000", &out];
    args.extend_from_slice(extra);
    kuiper(&args)
}

#[test]
fn tables_csv_and_text() {
    let o = kuiper(&["tables", "n_max=8", "format=csv", "frame_n_max=3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,rho_half,dim_L,xi_n,margin,gram_condition"));
    let row8 = csv.lines().find(|l| l.starts_with("8,")).unwrap();
    assert!(row8.starts_with("8,4,4,32,"), "{row8}");
    assert!(csv.lines().any(|l| l.starts_with("7,0,1,27,")));
    let text = stdout(&kuiper(&["tables", "n_max=2", "frame_n_max=0"]));
    let row2 = text.lines().nth(1).unwrap();
    assert!(row2.trim_end().ends_with("0.2000000000"), "{row2}");
}

#[test]
fn config_errors_exit_with_two() {
    let o = kuiper(&["tables", "bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `bogus`"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n_max = 4\ncolour = blue\n").unwrap();
    let o = kuiper(&["tables", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(kuiper(&["tables", "n_max=65"]).status.code(), Some(2));
    assert_eq!(kuiper(&["schedule-check", "alpha_target=0.3"]).status.code(), Some(2));
}

#[test]
fn keys_listing() {
    let o = kuiper(&["run", "--keys"]);
    assert!(o.status.success());
    for k in ["forced_mode", "script_C", "alpha_target", "save_stages"] {
        assert!(stdout(&o).contains(k));
    }
}

#[test]
fn schedule_check_outcomes() {
    let ok = kuiper(&["schedule-check"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("schedule audit passed"));
    let b1 = kuiper(&["schedule-check", "b=1"]);
    assert_eq!(b1.status.code(), Some(4));
    assert!(stderr(&b1).contains("b>1"));
    let c = kuiper(&["schedule-check", "c=3"]);
    assert_eq!(c.status.code(), Some(4));
    assert!(stderr(&c).contains("final"));
    let desk = kuiper(&["schedule-check", "a=4"]);
    assert_eq!(desk.status.code(), Some(4));
    assert!(stderr(&desk).contains("first failing stage q = 0"));
    let csv = kuiper(&["schedule-check", "format=csv", "stages=2"]);
    assert!(stdout(&csv).starts_with("q,check,lhs,rhs,pass\n"));
}

#[test]
fn algebra_commands() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frame3.txt");
    let o = kuiper(&["frame", "n=3", &format!("out={}", path.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("xi_n = 5"));
    assert!(fs::read_to_string(&path).unwrap().starts_with("# config_hash = "));
    let o = kuiper(&["frame", "n=4"]);
    assert_eq!(o.status.code(), Some(3));
    let o = kuiper(&["certify", "n=6"]);
    assert!(stdout(&o).contains("certified = true"));
    let o = kuiper(&["base-locus", "space=matrix", "matrix=1,0;0,-1", "restarts=20"]);
    assert!(stdout(&o).contains("verdict = null_cone_point_found"));
    let o = kuiper(&["base-locus", "n=4"]);
    assert!(stdout(&o).contains("verdict = empty_null_cone"));
}

#[test]
fn decompose_writes_fields_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.cifd");
    write_field(&input, &smooth_random_field(&Grid::unit(2, 33).unwrap(), Rank::Sym, 4, 2)).unwrap();
    let out = dir.path().join("dec");
    let o = kuiper(&["decompose", &format!("input={}", input.display()), "n=2", &format!("out={}", out.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let proj: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("projection_residual: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(proj <= 1e-8);
    let a_sq = read_field(&out.join("a_sq.cifd")).unwrap();
    assert_eq!(a_sq.ncomp(), 2);
    assert!(a_sq.values.iter().all(|v| *v >= 0.0));
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("phi.cifd"));
    let wrong = kuiper(&["decompose", &format!("input={}", input.display()), "n=3"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn run_outputs_are_deterministic_and_tagged() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o1 = small_run(d1.path(), &[]);
    assert!(o1.status.success() || o1.status.code() == Some(4), "{}", stderr(&o1));
    let o2 = small_run(d2.path(), &[]);
    assert_eq!(o1.status.code(), o2.status.code());
    let mut names: Vec<String> =
        fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for f in ["stage_000.csv", "stage_001.csv", "stage_002.csv", "checks.csv", "summary.txt", "config.txt", "V_002.cifd", "v.cifd", "manifest.txt"] {
        assert!(names.iter().any(|n| n == f), "missing {f} in {names:?}");
    }
    let hash_line = fs::read_to_string(d1.path().join("config.txt")).unwrap().lines().nth(1).unwrap().to_string();
    assert!(hash_line.starts_with("# config_hash = "));
    for n in names.iter().filter(|n| n != &"config.txt") {
        let a = fs::read(d1.path().join(n)).unwrap();
        let b = fs::read(d2.path().join(n)).unwrap();
        assert!(a == b, "{n} differs between identical runs");
        if n.ends_with(".csv") || n.ends_with(".txt") {
            assert!(String::from_utf8(a).unwrap().starts_with(&hash_line), "{n} lacks the hash");
        }
    }
    let stage = fs::read_to_string(d1.path().join("stage_001.csv")).unwrap();
    assert!(stage.contains("q,delta_q,lambda_q,mu0,l,D_norm,bound,pass,V_c1,V_c2,holder_seminorm\n1,"));
}

#[test]
fn report_merges_and_recomputes() {
    let run_dir = tempfile::tempdir().unwrap();
    small_run(run_dir.path(), &["save_stages=none"]);
    let o = kuiper(&["report", &format!("run_dir={}", run_dir.path().display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("delta_recomputed_exactly = true"));
    assert!(stdout(&o).contains("delta_monotone = true"));
    let series = fs::read_to_string(run_dir.path().join("series_deficit.csv")).unwrap();
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let single = tempfile::tempdir().unwrap();
    fs::copy(run_dir.path().join("stage_000.csv"), single.path().join("stage_000.csv")).unwrap();
    let o = kuiper(&["report", &format!("run_dir={}", single.path().display())]);
    assert!(o.status.success());
    let holder = fs::read_to_string(single.path().join("series_holder.csv")).unwrap();
    assert_eq!(holder.lines().filter(|l| !l.starts_with('#')).count(), 2);

    let empty = tempfile::tempdir().unwrap();
    let o = kuiper(&["report", &format!("run_dir={}", empty.path().display())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no stage_*.csv"));

    fs::write(single.path().join("stage_001.csv"), "garbage\n").unwrap();
    let o = kuiper(&["report", &format!("run_dir={}", single.path().display())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stage_001.csv"));

    let tampered = fs::read_to_string(run_dir.path().join("stage_001.csv")).unwrap();
    let mut lines: Vec<String> = tampered.lines().map(String::from).collect();
    let last = lines.pop().unwrap();
    let mut cols: Vec<String> = last.split(',').map(String::from).collect();
    cols[1] = format!("{}", cols[1].parse::<f64>().unwrap() * (1.0 + 1e-15));
    lines.push(cols.join(","));
    fs::write(run_dir.path().join("stage_001.csv"), lines.join("\n") + "\n").unwrap();
    let o = kuiper(&["report", &format!("run_dir={}", run_dir.path().display())]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unresolved_stage_halts_with_numerical_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["stages=3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("under-resolved"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("stages_done = 2"));
}

#[test]
fn unforced_run_refuses_failing_requirements() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["forced_mode=false", "stages=1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("forced mode"));
}
