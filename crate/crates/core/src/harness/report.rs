//! CSV and SVG output for experiment and real-data reports.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::experiment::{CellReport, ExperimentReport};
use super::real_data::RealDataReport;
use super::svg::{box_plot, line_plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format {other:?}; use csv or svg"))),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub(crate) fn cell_label(c: &CellReport) -> String {
    match c.alpha {
        Some(a) => format!("{} ({a})", c.loss),
        None => c.loss.clone(),
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

/// `table.csv` rows for several scenarios.
pub fn table_csv(reports: &[&ExperimentReport]) -> Result<Vec<u8>> {
    let rows = reports.iter().flat_map(|r| {
        r.cells.iter().map(move |c| {
            vec![
                r.model.clone(),
                r.noise.clone(),
                opt(r.shape),
                opt(c.alpha),
                c.loss.clone(),
                opt(c.mean_final_risk),
                opt(c.log_pred_error.as_ref().map(|b| b.mean)),
            ]
        })
    });
    csv_bytes(
        &[
            "model",
            "noise",
            "shape",
            "alpha",
            "loss",
            "mean_risk",
            "mean_log_pred_err",
        ],
        rows,
    )
}

/// Write the report's CSV tables and/or SVG figures into `dir`, plus the
/// resolved configuration as `config.toml`. Returns the files written.
pub fn render_report(report: &ExperimentReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    write_file(
        dir,
        "config.toml",
        report.config.to_toml_string().as_bytes(),
        &mut written,
    )?;
    if formats.contains(&Format::Csv) {
        let traj = report.cells.iter().flat_map(|c| {
            c.trajectory
                .iter()
                .map(move |&(k, r)| vec![k.to_string(), c.loss.clone(), opt(c.alpha), num(r)])
        });
        write_file(
            dir,
            "risk_trajectories.csv",
            &csv_bytes(&["step", "loss", "alpha", "mean_risk"], traj)?,
            &mut written,
        )?;

        let preds = report.cells.iter().filter_map(|c| {
            c.log_pred_error.as_ref().map(|b| {
                vec![
                    c.loss.clone(),
                    opt(c.alpha),
                    num(b.mean),
                    num(b.median),
                    num(b.q1),
                    num(b.q3),
                ]
            })
        });
        let header = ["loss", "alpha", "mean_log10", "median_log10", "q1", "q3"];
        write_file(dir, "prediction_errors.csv", &csv_bytes(&header, preds)?, &mut written)?;
        write_file(dir, "table.csv", &table_csv(&[report])?, &mut written)?;
    }
    if formats.contains(&Format::Svg) {
        let points: Vec<Vec<(f64, f64)>> = report
            .cells
            .iter()
            .map(|c| c.trajectory.iter().map(|&(k, r)| (k as f64, r)).collect())
            .collect();
        let series: Vec<Series> = report
            .cells
            .iter()
            .zip(&points)
            .map(|(c, p)| Series {
                label: cell_label(c),
                points: p,
            })
            .collect();
        let title = format!("{} with {} noise: mean empirical risk", report.model, report.noise);
        write_file(
            dir,
            "risk.svg",
            line_plot(&title, "step", "mean risk", &series).as_bytes(),
            &mut written,
        )?;

        let boxes: Vec<(String, _)> = report
            .cells
            .iter()
            .filter_map(|c| c.log_pred_error.clone().map(|b| (cell_label(c), b)))
            .collect();
        let title = format!("{} with {} noise: logged prediction errors", report.model, report.noise);
        write_file(
            dir,
            "prediction_errors.svg",
            box_plot(&title, "log10 error", &boxes).as_bytes(),
            &mut written,
        )?;
    }
    Ok(written)
}

/// Checkpoint table, Δ metrics and an error-vs-step plot for a real-data run.
pub fn render_real_data(report: &RealDataReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    write_file(
        dir,
        "config.toml",
        report.config.to_toml_string().as_bytes(),
        &mut written,
    )?;
    if formats.contains(&Format::Csv) {
        let rows = report.rows.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.loss.clone(),
                num(r.risk),
                num(r.pred_error),
                num(r.log10_pred_error),
            ]
        });
        let header = ["step", "loss", "risk", "pred_error", "log10_pred_error"];
        write_file(dir, "checkpoints.csv", &csv_bytes(&header, rows)?, &mut written)?;
        let deltas = report
            .deltas
            .iter()
            .map(|d| vec![d.step.to_string(), d.comparison.clone(), num(d.delta)]);
        write_file(
            dir,
            "deltas.csv",
            &csv_bytes(&["step", "comparison", "delta"], deltas)?,
            &mut written,
        )?;
    }
    if formats.contains(&Format::Svg) {
        let names = ["psi_alpha", "lad", "huber"];
        let points: Vec<Vec<(f64, f64)>> = names
            .iter()
            .map(|n| {
                report
                    .rows
                    .iter()
                    .filter(|r| r.loss == *n)
                    .map(|r| (r.step as f64, r.log10_pred_error))
                    .collect()
            })
            .collect();
        let series: Vec<Series> = names
            .iter()
            .zip(&points)
            .map(|(n, p)| Series {
                label: n.to_string(),
                points: p,
            })
            .collect();
        let title = format!("{} ({} columns): logged prediction error", report.series, report.dim);
        write_file(
            dir,
            "prediction_errors.svg",
            line_plot(&title, "step", "log10 error", &series).as_bytes(),
            &mut written,
        )?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::tail_dist::NoiseSpec;
    use crate::var_model::VarPreset;

    fn report(cells: Vec<CellReport>) -> ExperimentReport {
        ExperimentReport {
            config: ExperimentConfig::study_scenario(VarPreset::Var1Sim, NoiseSpec::pareto(1.8)),
            model: "VAR(1)".into(),
            noise: "pareto".into(),
            shape: Some(1.8),
            cells,
            deltas: vec![],
            elapsed_secs: 0.0,
            threads: 1,
        }
    }

    fn cell(loss: &str, alpha: Option<f64>) -> CellReport {
        CellReport {
            loss: loss.into(),
            alpha,
            trajectory: vec![(0, 10.0), (1, 8.0), (2, 7.5)],
            mean_final_risk: Some(7.5),
            mean_pred_error: Some(1.0),
            log_pred_error: crate::evaluation::aggregate(&[0.0, 0.5, 1.0]).ok(),
            succeeded: 3,
            failed: 0,
        }
    }

    #[test]
    fn empty_report_gives_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        render_report(&report(vec![]), dir.path(), &[Format::Csv]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert_eq!(text, "model,noise,shape,alpha,loss,mean_risk,mean_log_pred_err\n");
        let text = std::fs::read_to_string(dir.path().join("risk_trajectories.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn two_losses_two_polylines() {
        let dir = tempfile::tempdir().unwrap();
        let rep = report(vec![cell("psi_alpha", Some(1.2)), cell("lad", None)]);
        render_report(&rep, dir.path(), &[Format::Csv, Format::Svg]).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("risk.svg")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("href"));
        let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert_eq!(table.lines().nth(1).unwrap(), "VAR(1),pareto,1.8,1.2,psi_alpha,7.5,0.5");
        assert_eq!(table.lines().nth(2).unwrap(), "VAR(1),pareto,1.8,,lad,7.5,0.5");
        let boxes = std::fs::read_to_string(dir.path().join("prediction_errors.svg")).unwrap();
        assert_eq!(boxes.matches("<rect").count(), 1 + 2);
        let echo = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&echo).unwrap(), rep.config);
    }
}
