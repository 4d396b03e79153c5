use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sdw-bound"));
    c.env_remove("SDW_BOUND_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

const QUICK: [&str; 4] = [
    "--points-per-decade",
    "12",
    "--set",
    "optimizer.rel_tol=1e-2",
];

#[test]
fn constants_report() {
    let o = run(&["constants"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["a_K/a_V = 37.9", "scaled constant = -0.115", "C = 0.520"] {
        assert!(text.contains(needle), "missing '{needle}' in\n{text}");
    }
}

#[test]
fn solve_writes_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("profile.csv");
    let o = run(&[
        "solve",
        "--rs",
        "3",
        "--h",
        "0.5",
        "--eps",
        "6.3e-3",
        "--out",
        prof.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["iterations"].as_u64().unwrap() <= 60);
    assert!(summary["delta_e_total"].as_f64().unwrap() < 0.0);
    let csv = fs::read_to_string(&prof).unwrap();
    assert!(csv.starts_with("x,xi,b_sq\n"));
    assert!(column(&csv, "xi")[0] >= 0.499);
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["solve", "--rs", "3", "--eps", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["scan", "--rs-list", ""]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["--set", "solver.nope=1", "constants"]).status.code(),
        Some(1)
    );
    let capped = run(&[
        "solve",
        "--rs",
        "1",
        "--eps",
        "1e-4",
        "--set",
        "solver.max_iter=3",
    ]);
    assert_eq!(capped.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn scan_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let mut args = vec![
            "scan",
            "--rs-list",
            "1,0.3",
            "--h-list",
            "0.5",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend(QUICK);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(!Path::new(&format!("{}.partial", a.display())).exists());
    assert_eq!(
        text.lines().next().unwrap(),
        "r_s,h,eps_star,eps0,eps_ratio,delta_e_fg,delta_e_sdw,delta_e_total,scaled_energy,iterations,residual,error"
    );
    assert_eq!(column(&text, "r_s"), vec![0.3, 1.0]);
    for v in column(&text, "scaled_energy") {
        assert!((-0.15..=-0.05).contains(&v), "{v}");
    }
    // twelve significant digits
    let cell = text.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    assert_eq!(
        cell.split('e')
            .next()
            .unwrap()
            .replace(['-', '.'], "")
            .len(),
        12
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# capped\nsolver.max_iter = 3\n").unwrap();
    let args = ["solve", "--rs", "1", "--eps", "1e-4"];
    let o = bin().args(args).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(args)
        .env("SDW_BOUND_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(args)
        .env("SDW_BOUND_CONFIG", &cfg)
        .args(["--set", "solver.max_iter=5000"])
        .output()
        .unwrap();
    assert!(o.status.success());
    fs::write(&cfg, "grid.bogus = 1\n").unwrap();
    let o = bin()
        .args(["constants", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fermi_gas_curve() {
    let o = run(&[
        "fg",
        "--rs",
        "4",
        "--eps-list",
        "0,0.1",
        "--h-grid",
        "0.2,0.35,0.5,0.65,0.8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let eps = column(&text, "eps");
    let quad = column(&text, "delta_e_fg_quadrature");
    let h = column(&text, "h");
    assert!(eps
        .iter()
        .zip(&quad)
        .filter(|(e, _)| **e == 0.0)
        .all(|(_, q)| *q == 0.0));
    let curve: Vec<(f64, f64)> = eps
        .iter()
        .zip(h.iter().zip(&quad))
        .filter(|(e, _)| **e == 0.1)
        .map(|(_, (h, q))| (*h, *q))
        .collect();
    let best = curve.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((0.3..=0.55).contains(&best.0), "{curve:?}");
}

#[test]
fn plots() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "r_s,h,eps_star,eps0,eps_ratio,delta_e_fg,delta_e_sdw,delta_e_total,scaled_energy,iterations,residual,error\n").unwrap();
    let o = run(&["plot", "--in", empty.to_str().unwrap(), "--kind", "fig3"]);
    assert!(o.status.success());
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("-0.115") && svg.contains("stroke-dasharray"));

    let scan = dir.path().join("scan.csv");
    fs::write(
        &scan,
        "r_s,h,eps_star,eps0,eps_ratio,delta_e_fg,delta_e_sdw,delta_e_total,scaled_energy,iterations,residual,error\n\
         1.0e-2,5.0e-1,1.0e-34,1.0e-34,1.05e0,1,-2,-1,-1.17e-1,200,1e-11,\n\
         1.0e0,5.0e-1,1.0e-4,1.0e-4,1.86e0,1,-2,-1,-1.47e-1,60,1e-11,\n",
    )
    .unwrap();
    let reference = dir.path().join("ref.csv");
    fs::write(&reference, "label,r_s,value\nHF,1,1.7\n").unwrap();
    let out = dir.path().join("fig4.svg");
    let o = run(&[
        "plot",
        "--in",
        scan.to_str().unwrap(),
        "--kind",
        "fig4",
        "--ref",
        reference.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(&out).unwrap();
    assert!(svg.contains("eps* / eps0") && svg.contains(">HF<") && svg.contains("polyline"));

    let o = run(&["plot", "--in", scan.to_str().unwrap(), "--kind", "profile"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "plot",
        "--in",
        scan.to_str().unwrap(),
        "--kind",
        "fig3",
        "--sdw-count",
        "6",
    ]);
    assert!(stdout(&o).contains("-0.691"));
}
