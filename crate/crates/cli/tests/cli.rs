use std::path::Path;
use std::process::{Command, Output};

fn csdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csdist"))
        .args(args)
        .env_remove("CSDIST_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output, header comments and column line removed.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn laplace_g2(k: f64) -> f64 {
    // independent closed form: L = ln(1/κ)
    if k == 0.0 {
        return 1.0;
    }
    let l = -k.ln();
    1.0 - k * (1.0 + l + l * l / 2.0)
}

#[test]
fn gfun_laplace_matches_closed_form() {
    let o = csdist(&["gfun", "laplace", "--q", "2"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 101);
    for r in rows {
        let k: f64 = r[0].parse().unwrap();
        let g: f64 = r[1].parse().unwrap();
        assert!((g - laplace_g2(k)).abs() < 1e-7, "kappa {k}: {g}");
    }
}

#[test]
fn gfun_pzero_matches_boundary_density() {
    let o = csdist(&["gfun", "pzero", "--q", "2", "--kappas", "0.02:0.98:25"]);
    assert!(o.status.success());
    for r in data_rows(&stdout(&o)) {
        let k: f64 = r[0].parse().unwrap();
        let g: f64 = r[1].parse().unwrap();
        assert!((g - (1.0 - k.sqrt()).powi(2)).abs() < 1e-6, "kappa {k}: {g}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["gfun", "laplace", "--kappas", ""][..],
        &["gfun", "nonsense"],
        &["hfun", "ggd:-1"],
        &["simulate", "--decoders", "magic"],
        &["simulate", "--k-rule", "sometimes"],
        &[],
    ] {
        let o = csdist(args);
        assert_eq!(o.status.code(), Some(2), "args {args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn header_embeds_version_and_config() {
    let o = csdist(&["hfun", "laplace", "--deltas", "0.2,0.4"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# tool: csdist {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), "# schema: hfun/v1");
    let cfg: serde_json::Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["command"], "hfun");
    assert_eq!(cfg["deltas"], serde_json::json!([0.2, 0.4]));
    assert_eq!(lines.next().unwrap(), "delta,H,rho_star");
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "--trials", "3", "--deltas", "0.3,0.7", "--seed", "11"];
    let a = csdist(&args);
    let b = csdist(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = csdist(&["simulate", "--trials", "3", "--deltas", "0.3,0.7", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_csdist"));
        c.args(["simulate", "--trials", "1", "--deltas", "0.5", "--decoders", "ls"]);
        match env {
            Some(v) => c.env("CSDIST_SEED", v),
            None => c.env_remove("CSDIST_SEED"),
        };
        c.output().unwrap().stdout
    };
    let flag = csdist(&["simulate", "--trials", "1", "--deltas", "0.5", "--decoders", "ls", "--seed", "77"]);
    assert_eq!(run(Some("77")), flag.stdout);
    assert_ne!(run(None), flag.stdout);
}

fn check(path: &Path) -> Output {
    csdist(&["--check", path.to_str().unwrap()])
}

#[test]
fn check_accepts_untouched_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("g.csv", vec!["gfun", "ggd:0.7", "--q", "1", "--kappas", "0.1:0.9:7"]),
        ("g.json", vec!["gfun", "laplace", "--format", "json"]),
        ("d.csv", vec!["delta0", "laplace"]),
        ("r.csv", vec!["report", "laplace", "--deltas", "0.3,0.6"]),
        ("io.json", vec!["iocheck", "ggd:0.5"]),
        ("f4.csv", vec!["fig4"]),
        ("s.csv", vec!["simulate", "--trials", "2", "--deltas", "0.4,0.8"]),
        ("s.jsonl", vec!["simulate", "--trials", "2", "--deltas", "0.4", "--format", "json"]),
        ("n.csv", vec!["nspfuzz", "--m", "20", "--n", "40", "--k", "2", "--directions", "50"]),
    ];
    for (name, mut args) in cases {
        let path = dir.path().join(name);
        args.extend(["--out", path.to_str().unwrap()]);
        let o = csdist(&args);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let c = check(&path);
        assert!(c.status.success(), "{name}: {}", String::from_utf8_lossy(&c.stderr));
        assert!(stdout(&c).starts_with("ok"));
    }
}

#[test]
fn check_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    assert!(csdist(&["gfun", "laplace", "--kappas", "0.1,0.2,0.3", "--out", path.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("\n0.2,", "\n0.2,1", 1);
    assert_ne!(text, tampered);
    std::fs::write(&path, tampered).unwrap();
    let c = check(&path);
    assert_eq!(c.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&c.stderr).contains("check failed"));
}

#[test]
fn fig4_curve_and_step() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f4.svg");
    let o = csdist(&["fig4", "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    let at = |k: f64| rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - k).abs() < 1e-12).unwrap().clone();
    let g = |r: &[String]| r[1].parse::<f64>().unwrap();
    assert!((g(&at(0.18)) - 0.5113).abs() < 1e-4);
    assert_eq!(g(&at(1.0)), 0.0);
    for r in &rows {
        let (g1, step): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(g1 >= step);
    }
    let plot = std::fs::read_to_string(svg).unwrap();
    assert!(plot.starts_with("<svg"));
    assert!(plot.contains("polyline"));
}

#[test]
fn fig2_small_run_has_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f2.svg");
    let o = csdist(&["fig2", "--trials", "4", "--deltas", "0.2,0.5,0.8", "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("delta,ls_theory,oracle_theory,rho_star,k,oracle_mc,l1_mc,l1_nonconverged"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let d: f64 = r[0].parse().unwrap();
        assert!((r[1].parse::<f64>().unwrap() - (1.0 - d)).abs() < 1e-15);
        assert_eq!(r[7], "0");
    }
    let plot = std::fs::read_to_string(svg).unwrap();
    for label in ["3 dB", "10 dB", "20 dB"] {
        assert!(plot.contains(label));
    }
}

#[test]
fn imgstats_from_pgm_directory() {
    let dir = tempfile::tempdir().unwrap();
    // 32x32 8-bit gradient with a bright square
    let (w, h) = (32usize, 32usize);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            let v = if (8..16).contains(&r) && (8..16).contains(&c) { 250 } else { (r * 4 + c) as u8 };
            bytes.push(v);
        }
    }
    std::fs::write(dir.path().join("a.pgm"), bytes).unwrap();
    let o = csdist(&["imgstats", "--dir", dir.path().to_str().unwrap(), "--size", "8", "--count", "20", "--transform", "db4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 64);
    let vals: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));

    let empty = tempfile::tempdir().unwrap();
    let o = csdist(&["imgstats", "--dir", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_verdicts() {
    let verdict = |d: &str| {
        let o = csdist(&["report", d, "--deltas", "0.5"]);
        assert!(o.status.success());
        data_rows(&stdout(&o)).into_iter().find(|r| r[0] == "verdict").unwrap()[2].clone()
    };
    assert_eq!(verdict("ts:1:2.69"), "compressible_infinite_variance");
    assert_eq!(verdict("ggd:0.7"), "incompressible_finite_fourth");
    assert_eq!(verdict("ts:1:6"), "incompressible_finite_fourth");
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["gfun", "hfun", "delta0", "report", "simulate", "iocheck", "nspfuzz", "imgstats", "fig2", "fig4", "fig5"] {
        let o = csdist(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"));
    }
}
