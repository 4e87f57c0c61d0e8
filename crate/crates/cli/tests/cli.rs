use std::path::Path;
use std::process::{Command, Output};

fn lkcharge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkcharge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(file: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(file).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn extremal_charge_meets_equality() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["verify", "--case", "extremal-charge", "--d", "2", "--h", "1", "--grid", "256", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("verify.csv"));
    assert_eq!(r.len(), 3);
    for row in &r {
        let slack: f64 = row[7].parse().unwrap();
        assert!(slack.abs() <= 1e-3 && slack >= -1e-6, "{row:?}");
        assert_eq!(row[8], "true");
    }
    let json = std::fs::read_to_string(dir.path().join("verify.json")).unwrap();
    assert!(json.contains("\"passed\": true"));
}

#[test]
fn zero_density_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["verify", "--case", "zero-charge", "--grid", "64", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    for row in rows(&dir.path().join("verify.csv")) {
        for col in [5, 6, 7] {
            assert_eq!(row[col].parse::<f64>().unwrap(), 0.0, "{row:?}");
        }
    }
}

#[test]
fn corrupted_extremal_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["verify", "--case", "corrupted-extremal", "--grid", "64", "--out", path(dir.path())]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8(o.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert!(!lines.is_empty());
    for l in lines {
        let parts: Vec<&str> = l.split('\t').collect();
        assert_eq!(parts.len(), 3, "{l}");
        assert_eq!(parts[0], "FAIL");
        assert!(parts[1].starts_with("corrupted-extremal/"));
    }
    // outputs are still written
    assert!(dir.path().join("verify.csv").exists());
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "case = \"zero-charge\"\ngird = 64\n").unwrap();
    let o = lkcharge(&["verify", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gird"));

    std::fs::write(&cfg, "command = \"recover\"\n").unwrap();
    assert_eq!(code(&lkcharge(&["verify", "--config", path(&cfg)])), 2);

    assert_eq!(code(&lkcharge(&["verify", "--case", "nope"])), 2);
    assert_eq!(code(&lkcharge(&["verify", "--case", "extremal-charge", "--d", "9"])), 2);
    assert_eq!(code(&lkcharge(&["verify", "--case", "extremal-charge", "--h", "-1"])), 2);
    assert_eq!(code(&lkcharge(&["recover", "--delta", "0"])), 2);
    // nothing was computed, so nothing was written
    assert!(!dir.path().join("verify.csv").exists());
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "case = \"extremal-charge\"\nd = 2\ngrid = 32\n[cone]\nkind = \"halfspace\"\nnormals = [[1.0, 0.0], [-1.0, 0.0]]\n",
    )
    .unwrap();
    let o = lkcharge(&["verify", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mixed_extremals_and_trig_polynomials() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["0", "1"] {
        let o = lkcharge(&["verify", "--case", "extremal-mixed", "--d", "2", "--m", m, "--out", path(dir.path())]);
        assert_eq!(code(&o), 0, "m={m}");
    }
    let o = lkcharge(&["verify", "--case", "trig-mixed", "--d", "2", "--m", "1", "--count", "5", "--grid", "96", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&dir.path().join("verify.csv")).len(), 10);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("density.toml");
    std::fs::write(
        &cfg,
        "command = \"verify\"\ncase = \"density\"\nd = 2\nm = 1\nh = [0.25, 0.5]\ngrid = 96\nseed = 4\n\
         [[density]]\nkind = \"gaussian\"\ncenter = [0.0, 0.1]\nsigma = 0.3\namplitude = 1.0\n",
    )
    .unwrap();
    for out in [a.path(), b.path()] {
        assert_eq!(code(&lkcharge(&["verify", "--config", path(&cfg), "--out", path(&out.join("v"))])), 0);
        assert_eq!(code(&lkcharge(&["verify", "--case", "trig-mixed", "--grid", "64", "--count", "3", "--seed", "9", "--out", path(&out.join("t"))])), 0);
        assert_eq!(code(&lkcharge(&["stechkin-curve", "--d", "2", "--m", "1", "--grid", "128", "--out", path(&out.join("s"))])), 0);
        assert_eq!(code(&lkcharge(&["recover", "--delta", "0.1", "--seed", "3", "--out", path(&out.join("r"))])), 0);
        assert_eq!(code(&lkcharge(&["sharpness-search", "--budget", "200", "--seed", "2", "--out", path(&out.join("x"))])), 0);
    }
    for file in [
        "v/verify.csv",
        "v/verify.json",
        "t/verify.csv",
        "s/stechkin_curve.csv",
        "s/omega.csv",
        "s/attained.csv",
        "s/stechkin_curve.svg",
        "r/recover.csv",
        "r/recover_field_0.csv",
        "r/recover.svg",
        "x/sharpness_trajectory.csv",
    ] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
}

#[test]
fn different_seeds_change_random_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        assert_eq!(code(&lkcharge(&["verify", "--case", "trig-mixed", "--grid", "64", "--count", "2", "--seed", seed, "--out", path(&out)])), 0);
    }
    let x = std::fs::read(dir.path().join("1/verify.csv")).unwrap();
    let y = std::fs::read(dir.path().join("2/verify.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn line_curve_passes_through_known_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["stechkin-curve", "--d", "1", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    let r = rows(&dir.path().join("stechkin_curve.csv"));
    let at_one = r.iter().find(|row| row[0].parse::<f64>().unwrap() == 1.0).expect("N = 1 is on the grid");
    assert_eq!(at_one[1].parse::<f64>().unwrap(), 0.25);
    for row in rows(&dir.path().join("attained.csv")) {
        let (e, m): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((m - e).abs() <= 1e-3 * e, "{row:?}");
    }
    let svg = std::fs::read_to_string(dir.path().join("stechkin_curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(r#"viewBox="0 0 800 600""#));
    assert!(svg.contains("<polyline") && svg.contains("<circle"));
}

#[test]
fn recovery_hugs_the_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["recover", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("recover.csv"));
    assert_eq!(r.len(), 9);
    for row in r {
        let ratio: f64 = row[5].parse().unwrap();
        match row[0].as_str() {
            "worst-case" => assert!((ratio - 1.0).abs() <= 1e-3, "{row:?}"),
            "typical" => assert!(ratio < 1.0, "{row:?}"),
            // exact data leave only the deviation term d/(d+1) of Omega
            "exact" => assert!((ratio - 2.0 / 3.0).abs() <= 1e-3, "{row:?}"),
            other => panic!("unexpected kind {other}"),
        }
    }
    let dump = std::fs::read_to_string(dir.path().join("recover_field_0.csv")).unwrap();
    assert!(dump.starts_with("cell,x0,x1,estimate\n"));
}

#[test]
fn sharpness_control_and_exploration() {
    let dir = tempfile::tempdir().unwrap();
    let o = lkcharge(&["sharpness-search", "--d", "2", "--m", "1", "--budget", "600", "--seed", "11", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    let o = lkcharge(&["sharpness-search", "--d", "2", "--m", "2", "--budget", "1000", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    let json = std::fs::read_to_string(dir.path().join("sharpness.json")).unwrap();
    assert!(json.contains("\"exploratory\": true"));
    for row in rows(&dir.path().join("sharpness_trajectory.csv")) {
        assert!(row[3].parse::<f64>().unwrap() <= 1.0 + 1e-6);
    }
}
