use std::path::Path;
use std::process::{Command, Output};

fn nlbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbs"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output as string cells, header first.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

fn floats(col: &[String]) -> Vec<f64> {
    col.iter().map(|c| c.parse().unwrap()).collect()
}

#[test]
fn linear_family_returns_s() {
    let o = nlbs(&[
        "eval",
        "--family",
        "linear",
        "--d",
        "1",
        "--s-range",
        "0.5:3:6",
        "--t-range",
        "0:1:3",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["S", "t", "z", "u", "delta", "in_domain"]);
    assert_eq!(column(&rows, "S"), column(&rows, "u"));
}

#[test]
fn header_embeds_the_runspec() {
    let o = nlbs(&[
        "eval",
        "--family",
        "r",
        "--c",
        "0.35",
        "--s-range",
        "1:2:2",
        "--t-range",
        "0:0:1",
    ]);
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    let json = first.split_once("runspec=").unwrap().1;
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["c"], 0.35);
    assert_eq!(v["s_range"], "1:2:2");
}

#[test]
fn out_of_domain_rows_are_kept_with_empty_cells() {
    let o = nlbs(&[
        "eval",
        "--family",
        "u1",
        "--c",
        "-0.5",
        "--s-range",
        "0.1:1:10",
        "--t-range",
        "0:0:1",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 11);
    let dom = column(&rows, "in_domain");
    let u = column(&rows, "u");
    for (d, u) in dom.iter().zip(&u) {
        assert_eq!(d == "false", u.is_empty());
    }
    assert_eq!(dom[0], "false");
    assert_eq!(dom[9], "true");
}

#[test]
fn r_family_is_finite_on_the_invariant_window() {
    // z in (-5, 4.5) at t = 0 with |c| = 0.35, b = 1
    let s = format!("{}:{}:200", (-4.99f64).exp(), 4.49f64.exp());
    let o = nlbs(&[
        "eval",
        "--family",
        "r",
        "--c",
        "0.35",
        "--s-range",
        &s,
        "--t-range",
        "0:0:1",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert!(column(&rows, "in_domain").iter().all(|d| d == "true"));
    assert!(floats(&column(&rows, "u")).iter().all(|u| u.is_finite()));
}

#[test]
fn u2_surfaces_decrease_with_abs_c() {
    let o = nlbs(&[
        "sweep",
        "--family",
        "u2",
        "--sweep-param",
        "c",
        "--sweep-values",
        "0.01,1,5,10,20",
        "--sigma",
        "0.4",
        "--s-range",
        "3:15:25",
        "--t-range",
        "1:1:1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    let u = column(&rows, "u");
    let dom = column(&rows, "in_domain");
    let n = 25;
    for i in 0..n {
        let vals: Vec<Option<f64>> = (0..5)
            .map(|k| (dom[k * n + i] == "true").then(|| u[k * n + i].parse().unwrap()))
            .collect();
        if vals.iter().all(Option::is_some) {
            let v: Vec<f64> = vals.into_iter().flatten().collect();
            assert!(v.windows(2).all(|w| w[0] > w[1]), "S index {i}: {v:?}");
        }
    }
}

#[test]
fn greeks_show_strong_small_s_dependence() {
    let o = nlbs(&[
        "greeks",
        "--family",
        "u3",
        "--c",
        "-1",
        "--sigma",
        "0.4",
        "--s-range",
        "0.05:5:100",
        "--t-range",
        "0.01:0.5:5",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let d = floats(&column(&rows, "delta"));
    let fd = floats(&column(&rows, "delta_fd"));
    for (a, b) in d.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-6);
    }
    // first time level: slope of delta near S = 0.05 vs near S = 5
    let small = (d[1] - d[0]).abs();
    let large = (d[99] - d[98]).abs();
    assert!(small > 20.0 * large, "{small} vs {large}");
}

#[test]
fn residual_gates_pass_at_reference_parameters() {
    for fam in ["r", "u1", "u2"] {
        let c = if fam == "r" { "0.5" } else { "-0.5" };
        let o = nlbs(&[
            "residual",
            "--family",
            fam,
            "--c",
            c,
            "--s-range",
            "0.01:5:60",
            "--t-range",
            "0:0.5:6",
        ]);
        assert!(
            o.status.success(),
            "{fam}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let rows = csv_rows(&stdout(&o));
        assert_eq!(column(&rows, "pass"), ["true"]);
        let pde: f64 = column(&rows, "max_pde_residual")[0].parse().unwrap();
        assert!(pde < 1e-7);
        if fam == "u1" {
            let skipped: usize = column(&rows, "skipped")[0].parse().unwrap();
            assert!(skipped > 0);
        }
    }
}

#[test]
fn residual_gate_failure_exits_nonzero() {
    // exact families solve the SDE model, not the quadratic-cost one
    let o = nlbs(&[
        "residual",
        "--family",
        "r",
        "--model",
        "cjp",
        "--s-range",
        "0.5:2:5",
        "--t-range",
        "0:0:1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(column(&csv_rows(&stdout(&o)), "pass"), ["false"]);
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        vec!["eval", "--family", "r", "--rho", "0"],
        vec!["eval", "--s-range", "2:1:5"],
        vec!["eval", "--family", "u2", "--c", "0.5"],
        vec!["eval", "--sigma", "-1"],
        vec!["eval", "--family", "nope"],
        vec!["solve", "--payoff", "put:1"],
    ] {
        let o = nlbs(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn solver_validity_loss_exits_3() {
    let o = nlbs(&[
        "solve",
        "--family",
        "r",
        "--c",
        "0.5",
        "--s-range",
        "0.2:5:201",
        "--t-range",
        "0:0.5:51",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("denominator breach"));
}

#[test]
fn zero_rho_solves_agree_across_models() {
    let run = |model: &str| {
        let o = nlbs(&[
            "solve",
            "--model",
            model,
            "--rho",
            "0",
            "--payoff",
            "call:1",
            "--s-range",
            "0.3:3:41",
            "--t-range",
            "0:0.5:11",
        ]);
        assert!(o.status.success());
        floats(&column(&csv_rows(&stdout(&o)), "u"))
    };
    let a = run("cjp");
    for m in ["frey", "sircar"] {
        let b = run(m);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12), "{m}");
    }
}

#[test]
fn converge_reports_second_order_on_u3() {
    let o = nlbs(&[
        "converge",
        "--family",
        "u3",
        "--c",
        "-0.5",
        "--ladder",
        "101,201,401",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let orders = column(&rows, "order");
    assert!(orders[0].is_empty());
    for o in &orders[1..] {
        let o: f64 = o.parse().unwrap();
        assert!((o - 2.0).abs() < 0.1);
    }
}

#[test]
fn output_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = dir.path().join("spec.json");
    std::fs::write(
        &cfg,
        r#"{"family": "u3", "c": -1.0, "s_range": "0.1:5:40"}"#,
    )
    .unwrap();
    for p in [&a, &b] {
        let o = nlbs(&[
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    // the runspec embeds the output path, so compare everything after it
    let body = |p: &Path| {
        let t = std::fs::read_to_string(p).unwrap();
        t.split_once('\n').unwrap().1.to_string()
    };
    assert_eq!(body(&a), body(&b));
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 3, "{names:?}");
}

#[test]
fn identical_specs_give_identical_bytes() {
    let args = [
        "sweep",
        "--family",
        "u2",
        "--sweep-param",
        "c",
        "--sweep-values",
        "0.5,1,2,4",
        "--format",
        "json",
    ];
    assert_eq!(nlbs(&args).stdout, nlbs(&args).stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    std::fs::write(
        &cfg,
        r#"{"family": "linear", "d": 2.0, "s_range": "1:2:2", "t_range": "0:0:1"}"#,
    )
    .unwrap();
    let o = nlbs(&["eval", "--config", cfg.to_str().unwrap(), "--d", "3"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(column(&rows, "u"), ["3.0", "6.0"]);
    std::fs::write(&cfg, r#"{"unknown_field": 1}"#).unwrap();
    assert_eq!(
        nlbs(&["eval", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn json_mirrors_the_csv_schema() {
    let o = nlbs(&[
        "eval",
        "--family",
        "u1",
        "--c",
        "-0.5",
        "--s-range",
        "0.1:1:3",
        "--t-range",
        "0:0:1",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        v["columns"],
        serde_json::json!(["S", "t", "z", "u", "delta", "in_domain"])
    );
    assert_eq!(v["rows"][0][3], serde_json::Value::Null);
    assert_eq!(v["rows"][0][5], false);
    assert_eq!(v["runspec"]["family"], "u1");
}
