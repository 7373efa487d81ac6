use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use catoni_core::evaluation::hill_curve_fast;
use catoni_core::harness::config::{ExperimentConfig, RealDataConfig};
use catoni_core::harness::experiment::ExperimentReport;
use catoni_core::harness::report::table_csv;
use catoni_core::harness::{
    ingest_csv, render_real_data, render_report, run_experiment, run_real_data, Format, Transform,
};
use catoni_core::rng::{splitmix64, RngStream};
use catoni_core::series::TimeSeries;
use catoni_core::tail_dist::NoiseSpec;
use catoni_core::theory::{excess_risk_rate, toy_lad_failure_mc, toy_lad_failure_prob, tuning_params, TheoryParams};
use catoni_core::var_model::{simulate, VarPreset};
use catoni_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "catoni",
    version,
    about = "Heavy-tailed VAR estimation with Catoni-type losses"
)]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (overrides the config)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Var1,
    Var2,
}

impl From<Preset> for VarPreset {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Var1 => VarPreset::Var1Sim,
            Preset::Var2 => VarPreset::Var2Sim,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Pareto,
    Frechet,
}

#[derive(Args)]
struct Scenario {
    /// Model preset when no config is given
    #[arg(long, value_enum, default_value = "var1")]
    preset: Preset,
    /// Noise law when no config is given
    #[arg(long, value_enum, default_value = "pareto")]
    noise: Law,
    /// Noise shape when no config is given
    #[arg(long, default_value_t = 1.8)]
    shape: f64,
}

impl Scenario {
    fn noise(&self) -> NoiseSpec {
        match self.noise {
            Law::Pareto => NoiseSpec::pareto(self.shape),
            Law::Frechet => NoiseSpec::frechet(self.shape),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a VAR path and write it as CSV
    Simulate {
        #[command(flatten)]
        scenario: Scenario,
        /// Rows to keep after burn-in
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        burn_in: usize,
    },
    /// Fit psi_alpha, LAD and Huber to an observed series
    Fit {
        /// Series CSV (t,z1,...,zd); the config's [data] section is used when absent
        #[arg(long)]
        input: Option<PathBuf>,
        /// Built-in setting for a 20-, 55- or 75-column series when no config is given
        #[arg(long)]
        width: Option<usize>,
    },
    /// Run a replicated simulation study
    Experiment {
        #[command(flatten)]
        scenario: Scenario,
        /// Run every model and shape for the chosen noise law and write one combined table
        #[arg(long)]
        suite: bool,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Hill and averaged Hill estimates of the row norms of a series
    Hill {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 160)]
        k_max: usize,
    },
    /// Failure probability of the median in the scalar toy model
    Toy {
        /// Odd sample sizes
        #[arg(long, value_delimiter = ',', default_values_t = vec![201, 2001, 20001])]
        n: Vec<usize>,
        /// Monte Carlo trials per size (0 skips the simulation)
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 1.5)]
        mu: f64,
    },
    /// Tuning parameters and excess-risk rate over a grid of sample sizes
    Bound {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1000, 10000, 100000, 1000000])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.2554)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 5)]
        d1: usize,
        #[arg(long, default_value_t = 5)]
        d2: usize,
        #[arg(long, default_value_t = 5)]
        kappa: usize,
        #[arg(long, default_value_t = 3.0)]
        r: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Read a headered CSV, select columns, transform and write a series CSV
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "none")]
        transform: Transform,
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
    },
    /// Re-render a saved experiment report
    Report {
        /// report.json written by `experiment`
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec!["csv".to_string(), "svg".to_string()])]
        format: Vec<String>,
    },
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn load_experiment(cli: &Cli, scenario: &Scenario) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::study_scenario(scenario.preset.into(), scenario.noise()),
    };
    if let Some(seed) = cli.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    Ok(cfg)
}

fn save_experiment(report: &ExperimentReport, dir: &Path) -> Result<()> {
    render_report(report, dir, &[Format::Csv, Format::Svg])?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&dir.join("report.json"), &json)?;
    for c in &report.cells {
        let label = c
            .alpha
            .map(|a| format!("{} ({a})", c.loss))
            .unwrap_or_else(|| c.loss.clone());
        let risk = c
            .mean_final_risk
            .map(|r| format!("{r:.3}"))
            .unwrap_or_else(|| "n/a".into());
        eprintln!(
            "  {label:<18} mean risk {risk:>10}  failed {}/{}",
            c.failed,
            c.failed + c.succeeded
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { scenario, n, burn_in } => {
            let (coeffs, noise, seed) = match &cli.config {
                Some(path) => {
                    let cfg = ExperimentConfig::from_file(path)?;
                    (cfg.model.coefficients()?, cfg.noise, cfg.run.master_seed)
                }
                None => (
                    VarPreset::from(scenario.preset).coefficients(),
                    scenario.noise().centered(),
                    0,
                ),
            };
            let seed = cli.seed.unwrap_or(seed);
            let series = simulate(&coeffs, &noise, *n, *burn_in, &mut RngStream::new(splitmix64(seed), 0))?;
            create_out(&cli.out)?;
            series.write_csv_file(&cli.out.join("series.csv"))?;
            eprintln!(
                "wrote {} rows to {}",
                series.len(),
                cli.out.join("series.csv").display()
            );
        }
        Command::Fit { input, width } => {
            let mut cfg = match (&cli.config, width) {
                (Some(path), _) => RealDataConfig::from_file(path)?,
                (None, Some(w)) => RealDataConfig::for_width(*w)
                    .ok_or_else(|| Error::Config(format!("no built-in setting for width {w}; pass --config")))?,
                (None, None) => return Err(Error::Config("fit needs --config or --width".into())),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let series = match (input, &cfg.data) {
                (Some(path), _) => TimeSeries::read_csv_file(path)?,
                (None, Some(data)) => ingest_csv(&data.path, data.transform, data.columns.as_deref())?,
                (None, None) => return Err(Error::Config("fit needs --input or a [data] section".into())),
            };
            let report = run_real_data(&series, &cfg)?;
            render_real_data(&report, &cli.out, &[Format::Csv, Format::Svg])?;
            for (loss, step) in &report.penalty_drop_steps {
                eprintln!(
                    "  {loss:<10} penalty dropped at step {}",
                    step.map(|s| s.to_string()).unwrap_or_else(|| "never".into())
                );
            }
        }
        Command::Experiment {
            scenario,
            suite,
            replications,
        } => {
            create_out(&cli.out)?;
            let configs: Vec<ExperimentConfig> = if *suite {
                let mut out = Vec::new();
                for preset in [Preset::Var1, Preset::Var2] {
                    for shape in [1.2, 1.5, 1.8] {
                        let s = Scenario {
                            preset,
                            noise: scenario.noise,
                            shape,
                        };
                        out.push(load_experiment(&cli, &s)?);
                    }
                }
                out
            } else {
                vec![load_experiment(&cli, scenario)?]
            };
            let mut reports = Vec::new();
            for mut cfg in configs {
                if let Some(r) = replications {
                    cfg.run.replications = *r;
                }
                eprintln!("{} / {} {:?}", cfg.model.label(), cfg.noise.name(), cfg.noise.shape());
                let report = run_experiment(&cfg)?;
                let dir = if *suite {
                    let tag = format!(
                        "{}_{}_{}",
                        cfg.model.label().to_lowercase().replace(['(', ')'], ""),
                        cfg.noise.name(),
                        cfg.noise.shape().unwrap_or(0.0)
                    );
                    cli.out.join(tag)
                } else {
                    cli.out.clone()
                };
                save_experiment(&report, &dir)?;
                reports.push(report);
            }
            if *suite {
                let refs: Vec<&ExperimentReport> = reports.iter().collect();
                let bytes = table_csv(&refs)?;
                std::fs::write(cli.out.join("table.csv"), bytes).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Command::Hill { input, k_max } => {
            let series = TimeSeries::read_csv_file(input)?;
            let rows = hill_curve_fast(&series.row_norms(), *k_max)?;
            create_out(&cli.out)?;
            let mut text = String::from("k,gamma_k,gamma_star_k,inv_gamma_star_k\n");
            for r in &rows {
                text.push_str(&format!("{},{},{},{}\n", r.k, r.gamma, r.gamma_star, r.inv_gamma_star));
            }
            write_text(&cli.out.join("hill.csv"), &text)?;
            if let Some(last) = rows.last() {
                println!("1/gamma*({}) = {:.4}", last.k, last.inv_gamma_star);
            }
        }
        Command::Toy { n, trials, mu } => {
            let bound = 9.0 / (16.0 * std::f64::consts::E.powi(2));
            let mut rng = RngStream::new(splitmix64(cli.seed.unwrap_or(0)), 0);
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "n,failure_prob,bound,monte_carlo");
            for &size in n {
                let exact = toy_lad_failure_prob(size)?;
                let mc = if *trials > 0 {
                    toy_lad_failure_mc(size, *mu, *trials, &mut rng)?.to_string()
                } else {
                    String::new()
                };
                let _ = writeln!(out, "{size},{exact},{bound},{mc}");
            }
        }
        Command::Bound {
            n,
            beta,
            b,
            d1,
            d2,
            kappa,
            r,
            alpha,
            eps,
        } => {
            create_out(&cli.out)?;
            let mut text = String::from("n,delta,lambda,gamma,rate\n");
            for &size in n {
                let p = TheoryParams {
                    n: size,
                    beta: *beta,
                    b: *b,
                    d1: *d1,
                    d2: *d2,
                    kappa: *kappa,
                    r: *r,
                    alpha: *alpha,
                    eps: *eps,
                };
                let t = tuning_params(&p)?;
                let rate = excess_risk_rate(&p)?;
                if !t.conditions.all_hold() {
                    eprintln!("n = {size}: side conditions not met ({:?})", t.conditions);
                }
                text.push_str(&format!("{size},{},{},{},{rate}\n", t.delta, t.lambda, t.gamma));
            }
            write_text(&cli.out.join("bound.csv"), &text)?;
        }
        Command::Ingest {
            input,
            transform,
            columns,
        } => {
            let series = ingest_csv(input, *transform, columns.as_deref())?;
            create_out(&cli.out)?;
            series.write_csv_file(&cli.out.join("series.csv"))?;
            eprintln!(
                "{} rows x {} columns: {}",
                series.len(),
                series.dim(),
                series.columns.join(",")
            );
        }
        Command::Report { input, format } => {
            let text =
                std::fs::read_to_string(input).map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
            let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let formats = format.iter().map(|f| f.parse()).collect::<Result<Vec<Format>>>()?;
            render_report(&report, &cli.out, &formats)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
