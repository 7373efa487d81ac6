use std::path::Path;
use std::process::{Command, Output};

fn catoni(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catoni"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_EXPERIMENT: &str = r#"
[model]
preset = "var1-sim"

[noise]
law = "pareto"
mu = 1.5
centered = true

[run]
replications = 12
n_train = 200
burn_in = 500
master_seed = 4

[sgd]
eta = 0.01
gamma = 0.01

[[losses]]
kind = "psi_alpha"
alphas = [1.1, 1.3]
lambda = 0.035

[[losses]]
kind = "absolute"

[[losses]]
kind = "huber"
tau = 0.5
sigma = 1.0

[output]
trajectory_stride = 20
"#;

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn experiment_outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(&cfg, SMALL_EXPERIMENT).unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "1", "4"] {
        let out = tmp.path().join(format!("out{}", runs.len()));
        let res = catoni(&[
            "--config",
            path(&cfg),
            "--threads",
            threads,
            "--out",
            path(&out),
            "experiment",
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        for f in ["report.json", "risk.svg", "prediction_errors.svg", "config.toml"] {
            assert!(out.join(f).exists(), "{f} missing");
        }
        runs.push(csv_files(&out));
    }
    assert_eq!(runs[0].len(), 3);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);

    let table = String::from_utf8(runs[0].iter().find(|(n, _)| n == "table.csv").unwrap().1.clone()).unwrap();
    assert!(table.starts_with("model,noise,shape,alpha,loss,mean_risk,mean_log_pred_err\n"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn report_rerenders_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(&cfg, SMALL_EXPERIMENT).unwrap();
    let first = tmp.path().join("first");
    assert!(catoni(&["--config", path(&cfg), "--out", path(&first), "experiment"])
        .status
        .success());
    let second = tmp.path().join("second");
    let res = catoni(&[
        "--out",
        path(&second),
        "report",
        "--input",
        path(&first.join("report.json")),
        "--format",
        "csv",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(csv_files(&first), csv_files(&second));
    assert!(!second.join("risk.svg").exists());
}

#[test]
fn unstable_model_exits_with_numeric_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = SMALL_EXPERIMENT.replace(
        "preset = \"var1-sim\"",
        "phi = [[[0.6, 0.0, 0.0, 0.0, 0.0], [0.0, 1.2, 0.0, 0.0, 0.0], [0.0, 0.0, 0.1, 0.0, 0.0], [0.0, 0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 0.0, -0.2]]]",
    );
    std::fs::write(&cfg, text.replace("[sgd]\n", "[sgd]\ntheta0 = \"zeros\"\n")).unwrap();
    let res = catoni(&[
        "--config",
        path(&cfg),
        "--out",
        path(&tmp.path().join("o")),
        "experiment",
    ]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let res = catoni(&["--config", path(&missing), "experiment"]);
    assert_eq!(res.status.code(), Some(2));

    let cfg = tmp.path().join("alpha.toml");
    std::fs::write(&cfg, SMALL_EXPERIMENT.replace("[1.1, 1.3]", "[1.1, 1.6]")).unwrap();
    let res = catoni(&[
        "--config",
        path(&cfg),
        "--out",
        path(&tmp.path().join("o")),
        "experiment",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
}

#[test]
fn simulate_then_hill_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let res = catoni(&[
            "--seed",
            "7",
            "--out",
            path(dir),
            "simulate",
            "--preset",
            "var2",
            "--noise",
            "frechet",
            "--n",
            "400",
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let series = a.join("series.csv");
    assert_eq!(
        std::fs::read(&series).unwrap(),
        std::fs::read(b.join("series.csv")).unwrap()
    );
    assert_eq!(std::fs::read_to_string(&series).unwrap().lines().count(), 401);

    let res = catoni(&["--out", path(&a), "hill", "--input", path(&series), "--k-max", "100"]);
    assert!(res.status.success());
    let hill = std::fs::read_to_string(a.join("hill.csv")).unwrap();
    assert_eq!(hill.lines().count(), 100);
    assert!(String::from_utf8_lossy(&res.stdout).starts_with("1/gamma*(100) = "));

    let fit_cfg = tmp.path().join("fit.toml");
    std::fs::write(
        &fit_cfg,
        "n_train = 300\nn_iter = 600\neta = 0.01\ngamma = 0.01\ncheckpoints = [300, 600]\n\n[psi]\nalpha = 1.2\nlambda = 0.035\n\n[huber]\ntau = 0.5\nsigma = 1.0\n",
    )
    .unwrap();
    let fit_out = tmp.path().join("fit");
    let res = catoni(&[
        "--config",
        path(&fit_cfg),
        "--out",
        path(&fit_out),
        "fit",
        "--input",
        path(&series),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = std::fs::read_to_string(fit_out.join("checkpoints.csv")).unwrap();
    assert_eq!(rows.lines().count(), 7);
}

#[test]
fn ingest_applies_transform_and_column_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("raw.csv");
    std::fs::write(&input, "date,x,y,z\n2001,1,10,100\n2002,2,20,400\n2003,4,30,900\n").unwrap();
    let out = tmp.path().join("o");
    let res = catoni(&[
        "--out",
        path(&out),
        "ingest",
        "--input",
        path(&input),
        "--transform",
        "diff",
        "--columns",
        "z,x",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines, ["t,z1,z2", "0,300.0,1.0", "1,500.0,2.0"]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("z,x"));

    std::fs::write(&input, "x,y\n1,2\n3,oops\n").unwrap();
    let res = catoni(&["--out", path(&out), "ingest", "--input", path(&input)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn toy_and_bound_tables() {
    let res = catoni(&["toy", "--n", "201,2001"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[1] >= r[2]));

    assert_eq!(catoni(&["toy", "--n", "200"]).status.code(), Some(2));

    let tmp = tempfile::tempdir().unwrap();
    let res = catoni(&["--out", path(tmp.path()), "bound", "--n", "1000,100000"]);
    assert!(res.status.success());
    let bound = std::fs::read_to_string(tmp.path().join("bound.csv")).unwrap();
    let rates: Vec<f64> = bound
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rates.len(), 2);
    assert!(rates[1] < rates[0]);
}
