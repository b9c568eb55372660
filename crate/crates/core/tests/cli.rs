use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sp1d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sp1d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn sweep_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = sp1d(&[
            "sweep",
            "--h-list",
            "0.1,0.05,0.025",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (ra, rb) = (read_csvs(&a), read_csvs(&b));
    assert_eq!(ra.len(), 3);
    assert_eq!(ra, rb);
    let svgs = fs::read_dir(&a)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "svg")
        })
        .count();
    assert_eq!(svgs, 3);
    let sweep = String::from_utf8(fs::read(a.join("sweep.csv")).unwrap()).unwrap();
    assert!(sweep.starts_with(
        "h,n_grid,Nh,iters,sup_err,holder_err,pair_const,pair_x,pair_sin,mass,runtime_ms\n"
    ));
    assert_eq!(sweep.lines().count(), 4);
}

#[test]
fn degenerate_threshold_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("deg.cfg");
    fs::write(&cfg, "# threshold below the ground level\neps_S = -3.5\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = sp1d(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
    let out = sp1d(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sp1d(&[
        "solve",
        "--h",
        "0.05",
        "--trace",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in ["solution.csv", "levels.csv", "decay.csv", "trace.csv"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eps_1 = "));
}

#[test]
fn bad_config_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "h = 0.45\n").unwrap();
    let out = sp1d(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let missing = sp1d(&["limit", "--config", "/nonexistent/config.cfg"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn limit_prints_theta() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sp1d(&["limit", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("theta = 0.1143"));
    assert!(tmp.path().join("limit.csv").exists());
}
