//! End-to-end runs of the `ion-dfs` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ion-dfs"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(kind: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(kind).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header and rows of a written CSV, skipping the schema comment.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let body = text.split_once('\n').unwrap().1;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn scalars(dir: &Path) -> toml::Table {
    let doc: toml::Table = std::fs::read_to_string(dir.join("summary.toml")).unwrap().parse().unwrap();
    doc["scalars"].as_table().unwrap().clone()
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("experiment = \"kernels\"\n[time_grid]\nn_points = 1\n", "time_grid.n_points"),
        ("experiment = \"exact\"\n[truncation]\nn_modes = 2\nfock_dims = [4]\n", "truncation.fock_dims"),
        ("experiment = \"kernels\"\n[bath]\nomega_c = -1.0\n", "bath"),
        ("experiment = \"kernels\"\n[bath]\nomega_cc = 1.0\n", "omega_cc"),
        ("experiment = \"dfs\"\n[dfs]\ndelta = \"big\"\n", "delta"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let p = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(needle), "{needle} missing from: {}", stderr(&o));
        let o = run("kernels", &p, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2));
    }
}

#[test]
fn bad_flags_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "k.toml", "experiment = \"teleport\"\n");
    let o = run("teleport", &p, &dir.path().join("out"), &["--workers", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = run("teleport", &p, &dir.path().join("out"), &["--tolerance=-1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn dfs_entangling_time() {
    let dir = tempfile::tempdir().unwrap();
    // κ = λΔ²/(2(ω₀² − 4λ²)) = 0.01/10
    let p = write_config(
        dir.path(),
        "dfs.toml",
        "experiment = \"dfs\"\n[dfs]\ndelta = 0.1\nomega_0 = 3.0\nlambda = 1.0\n[time_grid]\nt_end = 400.0\nn_points = 5\n",
    );
    let o = run("dfs", &p, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = scalars(dir.path());
    let kappa = s["kappa"].as_float().unwrap();
    let t_star = s["t_star"].as_float().unwrap();
    assert!((kappa - 1e-3).abs() < 1e-15);
    assert!((t_star - std::f64::consts::PI / 0.008).abs() < 1e-9 * t_star);
    assert!(s["fidelity_t_star"].as_float().unwrap() > 1.0 - 1e-12);
    let (h, rows) = read_csv(&dir.path().join("output.csv"));
    assert_eq!(rows.len(), 5);
    let p10 = column(&h, &rows, "p10");
    let p01 = column(&h, &rows, "p01");
    assert_eq!(p10[0], 1.0);
    assert!(p10.iter().zip(&p01).all(|(a, b)| (a + b - 1.0).abs() < 1e-12));
}

#[test]
fn zero_temperature_kernel_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "k.toml",
        "experiment = \"kernels\"\n[bath]\neta = 1.0\nomega_c = 1.0\ntemperature = 0.0\n\
         [time_grid]\nt_end = 50.0\nn_points = 26\n",
    );
    let o = run("kernels", &p, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("output.csv"));
    let t = column(&h, &rows, "t");
    let g = column(&h, &rows, "gamma");
    for (t, g) in t.iter().zip(&g) {
        let want = 0.5 * (1.0 + t * t).ln();
        assert!((g - want).abs() <= 1e-8 * want.max(1e-300), "t={t}: {g} vs {want}");
    }
}

#[test]
fn exact_agrees_with_mode_sum_dephasing() {
    let dir = tempfile::tempdir().unwrap();
    let common = "[chain]\nn_modes = 1\n[bath]\ntemperature = 0.5\n[dfs]\ndelta = 0.0\nomega_0 = 0.3\n\
                  [kernels]\nmethod = \"mode_sum\"\n\
                  [truncation]\nn_modes = 1\nthermal_dims = true\nmax_deficit = 1e-10\nprune_weight = 1e-12\n\
                  converge = true\nconverge_tol = 1e-10\n\
                  [time_grid]\nt_end = 12.0\nn_points = 7\n";
    let pe = write_config(dir.path(), "e.toml", &format!("experiment = \"exact\"\n{common}"));
    let pd = write_config(dir.path(), "d.toml", &format!("experiment = \"dephase\"\n{common}"));
    let (oe, od) = (dir.path().join("exact"), dir.path().join("dephase"));
    let o = run("exact", &pe, &oe, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run("dephase", &pd, &od, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (he, re) = read_csv(&oe.join("output.csv"));
    let (hd, rd) = read_csv(&od.join("output.csv"));
    for name in ["abs_rho23", "abs_rho14", "p11", "p10", "p01", "p00"] {
        let a = column(&he, &re, name);
        let b = column(&hd, &rd, name);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{name}: exact {x} vs dephase {y}");
        }
    }
}

#[test]
fn sweep_rows_follow_grid_order_and_keep_failures() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "s.toml",
        "experiment = \"sweep\"\n[time_grid]\nt_end = 20.0\nn_points = 11\n\
         [sweep]\ninner = \"kernels\"\n\
         [[sweep.axes]]\nparameter = \"bath.temperature\"\nvalues = [0.0, 0.5]\n\
         [[sweep.axes]]\nparameter = \"kernels.r\"\nvalues = [0.0, 1.0, -3.0]\n",
    );
    let o = run("sweep", &p, dir.path(), &["--workers", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("output.csv"));
    assert_eq!(&h[..4], ["bath.temperature", "kernels.r", "status", "reason"]);
    let order: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(order, [(0.0, 0.0), (0.0, 1.0), (0.0, -3.0), (0.5, 0.0), (0.5, 1.0), (0.5, -3.0)]);
    for r in &rows {
        let bad = r[1] == "-3.0000000000000000e0";
        assert_eq!(r[2], if bad { "failed" } else { "ok" });
        assert_eq!(r[3].contains("kernels.r"), bad, "{}", r[3]);
    }
    // r = 0: the decoherence-free combination never decays
    let gm = h.iter().position(|c| c == "gamma_minus_max").unwrap();
    assert_eq!(rows[0][gm].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[3][gm].parse::<f64>().unwrap(), 0.0);
    assert!(rows[4][gm].parse::<f64>().unwrap() > 0.0);
    let s = scalars(dir.path());
    assert_eq!(s["points"].as_integer(), Some(6));
    assert_eq!(s["failed"].as_integer(), Some(2));
}

#[test]
fn seed_flag_changes_monte_carlo_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "t.toml",
        "experiment = \"teleport\"\n[teleport]\nresource = \"dephased\"\ndecay = 0.6\nsamples = 2000\n",
    );
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(run("teleport", &p, &a, &["--seed", "1"]).status.success());
    assert!(run("teleport", &p, &b, &["--seed", "1"]).status.success());
    assert!(run("teleport", &p, &c, &["--seed", "2"]).status.success());
    let (sa, sb, sc) = (scalars(&a), scalars(&b), scalars(&c));
    assert_eq!(sa, sb);
    assert_eq!(sa["average_fidelity"], sc["average_fidelity"]);
    assert_ne!(sa["mc_fidelity"], sc["mc_fidelity"]);
}
