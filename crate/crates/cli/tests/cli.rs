//! End-to-end runs of the `sldonoghue` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BESSEL_HALF: &str = "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 0.5\nb = \"inf\"\n";
const BESSEL_LP: &str = "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 1.5\nb = \"inf\"\n";
const FLAT: &str =
    "[problem]\nfamily = \"constant\"\np = 1.0\nq = 0.0\nr = 1.0\na = 0.0\nb = 3.141592653589793\n";

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn exec(&self, args: &[&str], cfg: &Path, env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sldonoghue"));
        cmd.args(args).arg("--config").arg(cfg);
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn classify_examples() {
    let run = Run::new();
    let cases = [
        (BESSEL_HALF, "a: limit-circle, b: limit-point, n± = 1", 1),
        (FLAT, "a: limit-circle, b: limit-circle, n± = 2", 2),
        (BESSEL_LP, "a: limit-point, b: limit-point, n± = 0, T_min self-adjoint", 0),
    ];
    for (i, (text, summary, n)) in cases.into_iter().enumerate() {
        let cfg = run.config(&format!("c{i}.toml"), text);
        let o = run.exec(&["classify"], &cfg, &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v = json(&o);
        let row = &v["rows"][0];
        assert_eq!(row["summary"], summary);
        assert_eq!(row["n_pm"], n);
        assert_eq!(row["t_min_self_adjoint"], n == 0);
    }
}

#[test]
fn normalization_row() {
    let run = Run::new();
    let text = "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 0.0\nb = \"inf\"\n\
                [extension]\nkind = \"one_endpoint\"\nalpha = 0.0\n\
                [grid]\nkind = \"points\"\npoints = [[0.0, 1.0]]\n";
    let cfg = run.config("n.toml", text);
    let o = run.exec(&["donoghue", "--format", "csv"], &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z_re,z_im,M11_re,M11_im,herglotz_margin,sym_residual,error");
    assert_eq!(lines.next().unwrap(), "0.0,1.0,0.0,1.0,0.0,0.0,");
}

#[test]
fn free_interval_matches_oracle_file() {
    let oracle: Value =
        serde_json::from_str(include_str!("data/free_interval_2i.json")).unwrap();
    let run = Run::new();
    let text = format!(
        "{FLAT}[extension]\nkind = \"separated\"\nalpha = 0.0\nbeta = 0.0\n[grid]\nkind = \"points\"\npoints = [[0.0, 2.0]]\n"
    );
    let cfg = run.config("f.toml", &text);
    let o = run.exec(&["donoghue"], &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row = &json(&o)["rows"][0];
    for j in 0..2 {
        for k in 0..2 {
            let want = &oracle["m"][j][k];
            let re = num(&row[format!("M{}{}_re", j + 1, k + 1)]);
            let im = num(&row[format!("M{}{}_im", j + 1, k + 1)]);
            let err = (re - num(&want[0])).hypot(im - num(&want[1]));
            assert!(err < 1e-9, "M{}{}: {err:e}", j + 1, k + 1);
        }
    }
    assert!(num(&row["herglotz_margin"]) > 0.0);
    assert!(num(&row["sym_residual"]) < 1e-12);
}

/// Every cell as `Some(f64)`, `Some(text)` or `None`; numbers compare bitwise.
#[derive(Debug, PartialEq)]
enum Canon {
    Num(u64),
    Text(String),
    Missing,
}

fn canon_csv(bytes: &[u8]) -> (Vec<String>, Vec<Vec<Canon>>) {
    let mut rd = csv::Reader::from_reader(bytes);
    let cols: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|c| match c.parse::<f64>() {
                    _ if c.is_empty() => Canon::Missing,
                    Ok(v) => Canon::Num(v.to_bits()),
                    Err(_) => Canon::Text(c.to_string()),
                })
                .collect()
        })
        .collect();
    (cols, rows)
}

fn canon_json(v: &Value) -> (Vec<String>, Vec<Vec<Canon>>) {
    let cols: Vec<String> = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().into()).collect();
    let rows = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            cols.iter()
                .map(|c| match &r[c] {
                    Value::Null => Canon::Missing,
                    Value::Number(n) => Canon::Num(n.as_f64().unwrap().to_bits()),
                    Value::Bool(b) => Canon::Text(b.to_string()),
                    Value::String(s) => Canon::Text(s.clone()),
                    other => panic!("{other}"),
                })
                .collect()
        })
        .collect();
    (cols, rows)
}

#[test]
fn csv_and_json_agree() {
    let run = Run::new();
    let text = "[problem]\nfamily = \"bessel\"\ndelta = 0.5\nnu = -0.5\ngamma = 0.25\nb = 1.0\n\
                [extension]\nkind = \"coupled\"\nphi = 1.0471975511965976\nr = [[1.0, 1.0], [0.0, 1.0]]\n\
                [grid]\nkind = \"random\"\ncount = 12\nre = [-3.0, 3.0]\nim_abs = [1e-7, 5.0]\nseed = 3\n";
    let cfg = run.config("e.toml", text);
    let c = run.exec(&["donoghue", "--format", "csv"], &cfg, &[]);
    let j = run.exec(&["donoghue", "--format", "json"], &cfg, &[]);
    assert_eq!(code(&c), code(&j));
    let (cc, rc) = canon_csv(&c.stdout);
    let (cj, rj) = canon_json(&json(&j));
    assert_eq!(cc, cj);
    assert_eq!(rc, rj);
    assert_eq!(rc.len(), 12);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let run = Run::new();
    let text = format!(
        "{BESSEL_HALF}[extension]\nkind = \"one_endpoint\"\nalpha = 0.4\n\
         [grid]\nkind = \"rect\"\nre = [-2.0, 2.0]\nim = [0.1, 1.0]\nn_re = 4\nn_im = 3\n"
    );
    let cfg = run.config("d.toml", &text);
    let one = run.exec(&["donoghue", "--format", "csv"], &cfg, &[("SLDONOGHUE_THREADS", "1")]);
    let four = run.exec(&["donoghue", "--format", "csv"], &cfg, &[("SLDONOGHUE_THREADS", "4")]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    let out = run.dir.path().join("o.csv");
    let to_file = run.exec(&["donoghue", "--format", "csv", "--out", out.to_str().unwrap()], &cfg, &[]);
    assert_eq!(code(&to_file), 0);
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), one.stdout);
    let bad = run.exec(&["donoghue"], &cfg, &[("SLDONOGHUE_THREADS", "zero")]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn seed_flag_reseeds_random_grid() {
    let run = Run::new();
    let text = format!(
        "{BESSEL_HALF}[grid]\nkind = \"random\"\ncount = 3\nre = [-1.0, 1.0]\nim_abs = [0.5, 2.0]\nseed = 1\n"
    );
    let cfg = run.config("s.toml", &text);
    let z = |o: &Output| -> Vec<f64> {
        json(o)["rows"].as_array().unwrap().iter().flat_map(|r| [num(&r["z_re"]), num(&r["z_im"])]).collect()
    };
    let a = run.exec(&["weyl"], &cfg, &[]);
    let b = run.exec(&["weyl", "--seed", "1"], &cfg, &[]);
    let c = run.exec(&["weyl", "--seed", "2"], &cfg, &[]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(z(&a), z(&b));
    assert_ne!(z(&a), z(&c));
}

#[test]
fn weyl_and_closed_form_agree() {
    let run = Run::new();
    let text = format!("{BESSEL_HALF}[grid]\nkind = \"points\"\npoints = [[0.0, 2.0], [-1.5, -0.3]]\n");
    let cfg = run.config("w.toml", &text);
    let w = json(&run.exec(&["weyl"], &cfg, &[]));
    let r = json(&run.exec(&["bessel-ref"], &cfg, &[]));
    // ψ = e^{i√z x}: m(2i) = −1 + i
    assert!((num(&r["rows"][0]["m0_re"]) + 1.0).abs() < 1e-12);
    assert!((num(&r["rows"][0]["m0_im"]) - 1.0).abs() < 1e-12);
    for k in 0..2 {
        let (a, b) = (&w["rows"][k], &r["rows"][k]);
        let err = (num(&a["m0_re"]) - num(&b["m0_re"])).hypot(num(&a["m0_im"]) - num(&b["m0_im"]));
        assert!(err < 1e-9, "{err:e}");
    }
}

#[test]
fn exit_codes() {
    let run = Run::new();
    // unparsable document
    let cfg = run.config("bad.toml", "[problem]\nfamily = \"bessel\"\n");
    assert_eq!(code(&run.exec(&["classify"], &cfg, &[])), 2);
    // specs inconsistent with the classification
    let grid = "[grid]\nkind = \"points\"\npoints = [[0.0, 1.0]]\n";
    for (text, ext) in [
        (BESSEL_HALF, "[extension]\nkind = \"separated\"\nalpha = 0.0\nbeta = 0.0\n"),
        (FLAT, "[extension]\nkind = \"one_endpoint\"\nalpha = 0.0\n"),
        (BESSEL_LP, "[extension]\nkind = \"one_endpoint\"\nalpha = 0.0\n"),
    ] {
        let cfg = run.config("x.toml", &format!("{text}{ext}{grid}"));
        let o = run.exec(&["donoghue"], &cfg, &[]);
        assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    }
    // one row too close to the axis: exit 3, the other row intact
    let text = format!(
        "{FLAT}[extension]\nkind = \"separated\"\nalpha = 0.5\nbeta = 1.0\n\
         [grid]\nkind = \"points\"\npoints = [[1.0, 1e-9], [1.0, 1.0]]\n"
    );
    let cfg = run.config("r.toml", &text);
    let o = run.exec(&["donoghue"], &cfg, &[]);
    assert_eq!(code(&o), 3);
    let v = json(&o);
    assert!(v["rows"][0]["error"].as_str().unwrap().contains("real axis"));
    assert!(v["rows"][0]["M11_re"].is_null());
    assert!(v["rows"][1]["error"].is_null());
    assert!(num(&v["rows"][1]["herglotz_margin"]) > 0.0);
    // an unattainable threshold fails validation
    let cfg = run.config("v.toml", FLAT);
    assert_eq!(code(&run.exec(&["validate", "--rtol", "1e-30"], &cfg, &[])), 4);
}

#[test]
fn validate_suites_pass() {
    let run = Run::new();
    for (i, text) in [
        BESSEL_HALF.to_string(),
        FLAT.to_string(),
        BESSEL_LP.to_string(),
        "[problem]\nfamily = \"bessel\"\ndelta = 0.5\nnu = -0.5\ngamma = 0.25\nb = 1.0\n\
         [extension]\nkind = \"krein_von_neumann\"\n"
            .to_string(),
    ]
    .iter()
    .enumerate()
    {
        let cfg = run.config(&format!("v{i}.toml"), text);
        let o = run.exec(&["validate"], &cfg, &[]);
        let v = json(&o);
        assert_eq!(code(&o), 0, "{v:#}");
        let names: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
        if i == 0 {
            for n in ["normalization", "herglotz", "symmetry", "krein-identity", "bessel-weyl", "bessel-donoghue"] {
                assert!(names.contains(&n), "{names:?}");
            }
        }
    }
}

#[test]
fn krein_matrices() {
    let run = Run::new();
    let text = "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 0.5\nb = 1.0\n\
                [extension]\nkind = \"separated\"\nalpha = 0.7\nbeta = 0.3\n\
                [grid]\nkind = \"points\"\npoints = [[0.5, 1.0], [0.5, -1.0]]\n";
    let cfg = run.config("k.toml", text);
    let o = run.exec(&["krein"], &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    // K(z̄) = conj K(z) for real coefficients
    let (a, b) = (&v["rows"][0], &v["rows"][1]);
    assert_eq!(a["dim"], 2);
    for c in ["K11", "K12", "K21", "K22"] {
        let d = (num(&a[format!("{c}_re")]) - num(&b[format!("{c}_re")]))
            .hypot(num(&a[format!("{c}_im")]) + num(&b[format!("{c}_im")]));
        assert!(d < 1e-9, "{c}: {d:e}");
    }
    let text = text.replace("alpha = 0.7\nbeta = 0.3", "alpha = 0.0\nbeta = 0.0");
    let cfg = run.config("k0.toml", &text);
    assert_eq!(code(&run.exec(&["krein"], &cfg, &[])), 2);
}

#[test]
fn tabulated_problem_from_relative_path() {
    let run = Run::new();
    let mut csv = String::from("x,p,q,r\n");
    for k in 0..=40 {
        let x = k as f64 / 40.0;
        csv.push_str(&format!("{x},{},{},1.0\n", 1.0 + 0.5 * x, x * x));
    }
    std::fs::write(run.dir.path().join("coeffs.csv"), csv).unwrap();
    let cfg = run.config(
        "t.toml",
        "[problem]\nfamily = \"tabulated\"\ntable = \"coeffs.csv\"\n\
         [extension]\nkind = \"separated\"\nalpha = 0.2\nbeta = 1.1\n\
         [grid]\nkind = \"points\"\npoints = [[0.0, 1.0], [2.0, 0.5], [2.0, -0.5]]\n",
    );
    let o = run.exec(&["donoghue"], &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    for r in v["rows"].as_array().unwrap() {
        assert!(num(&r["herglotz_margin"]) > -1e-8);
        assert!(num(&r["sym_residual"]) < 1e-9);
    }
}
