use catoni_core::data::RegressionData;
use catoni_core::evaluation::empirical_l1_risk;
use catoni_core::harness::{
    ingest_csv, render_real_data, run_experiment, run_real_data, ExperimentConfig, Format, RealDataConfig, Transform,
};
use catoni_core::losses::LossSpec;
use catoni_core::optimizer::{fit_all_three, sgd_fit, Sampling, SharedSettings};
use catoni_core::rng::{splitmix64, RngStream};
use catoni_core::tail_dist::NoiseSpec;
use catoni_core::var_model::{simulate, VarCoefficients, VarPreset};

fn var1_data(seed: u64, n: usize) -> RegressionData {
    let coeffs = VarPreset::Var1Sim.coefficients();
    let mut rng = RngStream::new(seed, 0);
    let series = simulate(&coeffs, &NoiseSpec::pareto(1.8), n + 1, 5000, &mut rng).unwrap();
    RegressionData::var_design(&series, 1, 1..n + 1).unwrap()
}

fn shared(steps: usize) -> SharedSettings {
    SharedSettings {
        theta0: VarPreset::Var1Sim.default_theta0(),
        eta: 0.01,
        steps,
        gamma: 0.01,
        sampling: Sampling::SequentialPass,
        c0: None,
        risk_eval_stride: 1,
        psi: LossSpec::PsiAlpha {
            alpha: 1.2,
            lambda: 0.035,
        },
        huber: LossSpec::Huber { tau: 0.5, sigma: 1.0 },
    }
}

#[test]
fn psi_fit_lowers_risk_on_every_replication() {
    let settings = shared(800);
    for rep in 0..30 {
        let data = var1_data(splitmix64(rep), 800);
        let fit = sgd_fit(&data, &settings.config_for(settings.psi), &mut RngStream::new(rep, 1)).unwrap();
        let start = empirical_l1_risk(&fit.thetas[0], &data).unwrap();
        let end = empirical_l1_risk(fit.last(), &data).unwrap();
        assert!(end < start, "replication {rep}: {end} >= {start}");
    }
}

#[test]
fn psi_fit_moves_toward_truth() {
    let truth = VarPreset::Var1Sim.coefficients().stacked();
    let settings = shared(800);
    let data = var1_data(17, 800);
    let fit = sgd_fit(&data, &settings.config_for(settings.psi), &mut RngStream::new(17, 1)).unwrap();
    let before = (&settings.theta0 - &truth).norm();
    let after = (fit.last() - &truth).norm();
    assert!(after < 0.5 * before, "{after} vs {before}");
}

#[test]
fn fit_all_three_is_reproducible() {
    let data = var1_data(5, 300);
    let mut settings = shared(300);
    settings.sampling = Sampling::UniformWithReplacement;
    let rng = RngStream::new(99, 1);
    let a = fit_all_three(&data, &settings, &rng).unwrap();
    let b = fit_all_three(&data, &settings, &rng).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.thetas.len(), 301);
        assert!(x
            .thetas
            .iter()
            .zip(&y.thetas)
            .all(|(p, q)| p.as_slice() == q.as_slice()));
    }
    let alone = sgd_fit(&data, &settings.config_for(LossSpec::Absolute), &mut rng.clone()).unwrap();
    assert_eq!(alone.last().as_slice(), a[1].last().as_slice());
}

#[test]
fn toml_round_trip_reproduces_the_experiment() {
    let mut cfg = ExperimentConfig::study_scenario(VarPreset::Var2Sim, NoiseSpec::frechet(1.5));
    cfg.run.replications = 6;
    cfg.output.trajectory_stride = 100;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    let back = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(back, cfg);

    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&back).unwrap();
    assert_eq!(a.cells, b.cells);
    assert_eq!(a.cells.len(), 6);
    assert!(a
        .cells
        .iter()
        .all(|c| c.failed == 0 && c.trajectory.last().map(|t| t.0) == Some(800)));
}

#[test]
fn real_data_workflow_from_csv() {
    let coeffs = VarCoefficients::diagonal(&[vec![0.5, -0.3, 0.2]]).unwrap();
    let series = simulate(&coeffs, &NoiseSpec::frechet(1.8), 60, 200, &mut RngStream::new(3, 0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("levels.csv");
    let mut text = String::from("date,a,b,c\n");
    for (t, row) in series.rows().enumerate() {
        let level: Vec<String> = row.iter().map(|v| (100.0 + v).to_string()).collect();
        text.push_str(&format!("2000-{:02},{}\n", t + 1, level.join(",")));
    }
    std::fs::write(&csv, text).unwrap();

    let ts = ingest_csv(&csv, Transform::Diff, None).unwrap();
    assert_eq!((ts.len(), ts.dim()), (59, 3));

    let mut cfg = RealDataConfig::for_width(20).unwrap();
    cfg.n_train = 40;
    cfg.n_iter = 400;
    cfg.eta = 0.01;
    cfg.checkpoints = vec![100, 200, 400];
    let report = run_real_data(&ts, &cfg).unwrap();
    assert_eq!(report.rows.len(), 9);
    assert!(report
        .rows
        .iter()
        .all(|r| r.pred_error.is_finite() && r.risk.is_finite()));
    assert!(report.error_at(400, "psi_alpha").is_some());

    let out = dir.path().join("out");
    let written = render_real_data(&report, &out, &[Format::Csv, Format::Svg]).unwrap();
    assert!(written.iter().all(|p| p.exists()));
    let again = run_real_data(&ts, &cfg).unwrap();
    assert_eq!(again.rows, report.rows);
}
