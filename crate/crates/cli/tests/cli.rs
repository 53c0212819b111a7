use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netglm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netglm")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = netglm(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn simulate(dir: &Path, n: &str, seed: &str) {
    ok(&[
        "simulate", "--n", n, "--latent-rank", "2", "--intercept", "-1", "--strength", "0.5",
        "--seed", seed, "--out", dir.to_str().unwrap(),
    ]);
}

fn read_dense(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn metric(dir: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    text.lines()
        .find_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2] == name).then(|| f[3].parse().unwrap())
        })
        .unwrap()
}

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, "25", "11");
    simulate(&b, "25", "11");
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in names {
        let pa = a.join(&name);
        if pa.is_file() {
            assert_eq!(fs::read(&pa).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
    }
    let c = tmp.path().join("c");
    simulate(&c, "25", "12");
    assert_ne!(fs::read(a.join("edges.tsv")).unwrap(), fs::read(c.join("edges.tsv")).unwrap());
}

/// Two-covariate logistic regression by Newton's method.
fn newton_logit(y: &[f64], x1: &[f64], x2: &[f64]) -> [f64; 2] {
    let mut b = [0.0f64; 2];
    for _ in 0..50 {
        let (mut g, mut h) = ([0.0; 2], [[0.0; 2]; 2]);
        for k in 0..y.len() {
            let x = [x1[k], x2[k]];
            let p = 1.0 / (1.0 + (-(b[0] * x[0] + b[1] * x[1])).exp());
            for r in 0..2 {
                g[r] += (y[k] - p) * x[r];
                for c in 0..2 {
                    h[r][c] += p * (1.0 - p) * x[r] * x[c];
                }
            }
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        b[0] += (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        b[1] += (h[0][0] * g[1] - h[1][0] * g[0]) / det;
    }
    b
}

#[test]
fn zero_budget_fit_matches_newton_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let fit = tmp.path().join("fit");
    simulate(&sim, "30", "5");
    let s = sim.to_str().unwrap();
    ok(&[
        "fit", "--n", "30", "--edges", &format!("{s}/edges.tsv"),
        "--covariate", &format!("{s}/covariate_1.csv"), "--covariate", &format!("{s}/covariate_2.csv"),
        "--budget", "0", "--out", fit.to_str().unwrap(),
    ]);
    let mut y = vec![0.0; 900];
    for line in fs::read_to_string(sim.join("edges.tsv")).unwrap().lines().skip(1) {
        let f: Vec<f64> = line.split('\t').map(|v| v.parse().unwrap()).collect();
        y[f[0] as usize * 30 + f[1] as usize] = f[2];
    }
    let flat = |p: &str| read_dense(&sim.join(p)).concat();
    let want = newton_logit(&y, &flat("covariate_1.csv"), &flat("covariate_2.csv"));
    let got: Vec<f64> = fs::read_to_string(fit.join("params_beta.csv"))
        .unwrap()
        .lines()
        .map(|v| v.parse().unwrap())
        .collect();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-4, "{g} vs {w}");
    }
    assert_eq!(metric(&fit, "nuclear_norm"), 0.0);
    assert_eq!(fs::read_to_string(fit.join("params_theta_sigma.csv")).unwrap(), "");
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&sim, "20", "3");
    let s = sim.to_str().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "n = 20\nedges = \"{s}/edges.tsv\"\ncovariates = [\"{s}/covariate_1.csv\", \"{s}/covariate_2.csv\"]\n\
             budget = 5.0\nrank_cap = 1\nseed = 4\nranks = [1, 2]\nbudgets = [5.0, 20.0]\n"
        ),
    )
    .unwrap();
    let out = tmp.path().join("fit");
    ok(&["fit", "--config", cfg.to_str().unwrap(), "--budget", "8", "--out", out.to_str().unwrap()]);
    assert!((metric(&out, "nuclear_norm") - 8.0).abs() < 1e-9);
    assert_eq!(metric(&out, "rank"), 1.0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["budget"], 8.0);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);

    let grid = tmp.path().join("grid");
    ok(&["grid-search", "--config", cfg.to_str().unwrap(), "--out", grid.to_str().unwrap()]);
    let table = fs::read_to_string(grid.join("grid.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("s,R,replicate,auc,iterations,converged"));
    assert_eq!(table.lines().count(), 5);

    let eval = tmp.path().join("eval");
    ok(&[
        "evaluate", "--config", cfg.to_str().unwrap(), "--params", grid.to_str().unwrap(),
        "--truth", &format!("{s}/truth_mean.csv"), "--out", eval.to_str().unwrap(),
    ]);
    let auc = metric(&eval, "auc");
    assert!((0.0..=1.0).contains(&auc));
    assert!(metric(&eval, "rmse") > 0.0);
}

#[test]
fn convert_attrs_inner_product_of_one_hot() {
    let tmp = tempfile::tempdir().unwrap();
    let attrs = tmp.path().join("attrs.tsv");
    fs::write(&attrs, "0\t1,0\n1\t0,1\n2\t1,0\n").unwrap();
    let out = tmp.path().join("x");
    ok(&["convert-attrs", "--n", "3", "--attrs", attrs.to_str().unwrap(), "--method", "inner-product", "--out", out.to_str().unwrap()]);
    let x = read_dense(&out.join("covariate.csv"));
    assert_eq!(x, vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);
}

fn error_record(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn exit_codes_and_error_records() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let missing = netglm(&["fit", "--n", "4", "--edges", t.join("none.tsv").to_str().unwrap(), "--budget", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_record(&missing)["kind"], "input");

    let bad = t.join("bad.tsv");
    fs::write(&bad, "0\t1\n# ok\n1\tx\n").unwrap();
    let parse = netglm(&["fit", "--n", "4", "--edges", bad.to_str().unwrap(), "--budget", "1"]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(error_record(&parse)["message"].as_str().unwrap().contains(":3:"));

    let edges = t.join("e.tsv");
    fs::write(&edges, "0\t1\n1\t2\n").unwrap();
    let zeros = t.join("zero.csv");
    fs::write(&zeros, "0,0,0\n0,0,0\n0,0,0\n").unwrap();
    let numerical = netglm(&[
        "fit", "--n", "3", "--edges", edges.to_str().unwrap(), "--budget", "1",
        "--truth", zeros.to_str().unwrap(), "--out", t.join("f").to_str().unwrap(),
    ]);
    assert_eq!(numerical.status.code(), Some(3));
    assert_eq!(error_record(&numerical)["kind"], "numerical");

    ok(&["fit", "--n", "3", "--edges", edges.to_str().unwrap(), "--budget", "1", "--out", t.join("f").to_str().unwrap()]);
    let empty = t.join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let undefined = netglm(&[
        "evaluate", "--n", "3", "--edges", empty.to_str().unwrap(), "--params", t.join("f").to_str().unwrap(),
    ]);
    assert_eq!(undefined.status.code(), Some(4));
    assert_eq!(error_record(&undefined)["kind"], "auc_undefined");

    let unknown = t.join("u.toml");
    fs::write(&unknown, "buget = 3\n").unwrap();
    let cfg = netglm(&["fit", "--config", unknown.to_str().unwrap()]);
    assert_eq!(cfg.status.code(), Some(2));
}
