//! Batch front-end: runs scenario x method x time-step matrices and writes
//! plot-ready CSV files plus a manifest describing the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Deserialize;

use radauplast::convergence::{run_study, Quantity, Report, Study};
use radauplast::material::Material;
use radauplast::scenarios::{Scenario, SCENARIO_NAMES};
use radauplast::stage_solver::Method;

/// Convergence-study runner for implicit Runge-Kutta elasto-plasticity.
#[derive(Parser, Debug)]
#[command(name = "radauplast", version)]
struct Cli {
    /// Optional TOML configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario names (comma separated).
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Method labels (comma separated): BE, RIIa-l, RIIa-l-SP, RIIa-q, RIIa-q-SP, RIIa-q-exSP.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Stage count override for the RIIa methods (1, 2 or 3).
    #[arg(long)]
    stages: Option<usize>,
    /// Time-step ladder (comma separated); defaults to the scenario's ladder.
    #[arg(long, value_delimiter = ',')]
    dts: Vec<f64>,
    /// Evaluation times (comma separated); defaults to the scenario's times.
    #[arg(long, value_delimiter = ',')]
    eval_times: Vec<f64>,
    /// Reference time step; defaults to the scenario's reference step.
    #[arg(long)]
    ref_dt: Option<f64>,
    /// Output directory for CSV files and the manifest.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Error quantities to report (comma separated): E, Ep, S, Ep_zz.
    #[arg(long, value_delimiter = ',')]
    quantities: Vec<String>,
    /// Wall-time repetitions per run (median is reported).
    #[arg(long)]
    repetitions: Option<usize>,
}

/// Material parameters as they appear in configuration files.
#[derive(Debug, Deserialize)]
struct MaterialConfig {
    #[serde(rename = "E")]
    e: f64,
    nu: f64,
    #[serde(rename = "sigma_Y")]
    sigma_y: f64,
    #[serde(rename = "sigma_inf_minus_Y")]
    sigma_inf_minus_y: f64,
    #[serde(rename = "H")]
    h: f64,
    delta: f64,
}

impl MaterialConfig {
    fn to_material(&self) -> Material {
        Material {
            youngs: self.e,
            poisson: self.nu,
            sigma_y: self.sigma_y,
            sigma_sat: self.sigma_inf_minus_y,
            hardening_h: self.h,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<Vec<String>>,
    methods: Option<Vec<String>>,
    stages: Option<usize>,
    dts: Option<Vec<f64>>,
    eval_times: Option<Vec<f64>>,
    ref_dt: Option<f64>,
    out: Option<PathBuf>,
    quantities: Option<Vec<String>>,
    repetitions: Option<usize>,
    /// Optional material override applied to every selected scenario.
    material: Option<MaterialConfig>,
}

/// Fully resolved run parameters (file config merged with flag overrides).
struct RunConfig {
    scenarios: Vec<String>,
    methods: Vec<String>,
    stages: Option<usize>,
    dts: Option<Vec<f64>>,
    eval_times: Option<Vec<f64>>,
    ref_dt: Option<f64>,
    out: PathBuf,
    quantities: Vec<Quantity>,
    repetitions: usize,
    material: Option<MaterialConfig>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn parse_quantity(label: &str) -> Option<Quantity> {
    match label {
        "E" => Some(Quantity::Strain),
        "Ep" => Some(Quantity::PlasticStrain),
        "S" => Some(Quantity::Stress),
        "Ep_zz" => Some(Quantity::EpZz),
        _ => None,
    }
}

/// Formats a float with 17 significant digits so that the value survives a
/// text round trip exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` atomically (write to a temporary file in the
/// same directory, then rename).
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn report_file_name(report: &Report) -> String {
    format!(
        "{}_{}_{}_t{}.csv",
        sanitize(&report.scenario),
        sanitize(&report.method),
        sanitize(report.quantity.label()),
        sanitize(&format!("{}", report.eval_time)),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Ok(workers) = std::env::var("RADAUPLAST_MAX_WORKERS") {
        match workers.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("rayon pool is built once at startup");
            }
            _ => return usage_error("RADAUPLAST_MAX_WORKERS must be a positive integer"),
        }
    }

    let file_config = match &cli.config {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return usage_error(&format!("cannot read {}: {e}", path.display())),
            };
            match toml::from_str::<FileConfig>(&text) {
                Ok(c) => c,
                Err(e) => return usage_error(&format!("invalid config {}: {e}", path.display())),
            }
        }
        None => FileConfig::default(),
    };

    // Flags override the config file.
    let scenarios = if cli.scenario.is_empty() {
        file_config.scenario.unwrap_or_default()
    } else {
        cli.scenario.clone()
    };
    let methods = if cli.methods.is_empty() {
        file_config.methods.unwrap_or_default()
    } else {
        cli.methods.clone()
    };
    let quantity_labels = if cli.quantities.is_empty() {
        file_config.quantities.unwrap_or_else(|| vec!["S".into()])
    } else {
        cli.quantities.clone()
    };

    if scenarios.is_empty() {
        return usage_error(&format!(
            "no scenario selected; valid scenarios: {}",
            SCENARIO_NAMES.join(", ")
        ));
    }
    if methods.is_empty() {
        return usage_error("empty method list; valid methods: BE, RIIa-l, RIIa-l-SP, RIIa-q, RIIa-q-SP, RIIa-q-exSP");
    }
    let mut quantities = Vec::new();
    for label in &quantity_labels {
        match parse_quantity(label) {
            Some(q) => quantities.push(q),
            None => {
                return usage_error(&format!(
                    "unknown quantity '{label}'; valid quantities: E, Ep, S, Ep_zz"
                ))
            }
        }
    }

    let config = RunConfig {
        scenarios,
        methods,
        stages: cli.stages.or(file_config.stages),
        dts: if cli.dts.is_empty() { file_config.dts } else { Some(cli.dts.clone()) },
        eval_times: if cli.eval_times.is_empty() {
            file_config.eval_times
        } else {
            Some(cli.eval_times.clone())
        },
        ref_dt: cli.ref_dt.or(file_config.ref_dt),
        out: if cli.out == PathBuf::from("results") {
            file_config.out.unwrap_or(cli.out.clone())
        } else {
            cli.out.clone()
        },
        quantities,
        repetitions: cli.repetitions.or(file_config.repetitions).unwrap_or(1),
        material: file_config.material,
    };

    if let Some(s) = config.stages {
        if !(1..=3).contains(&s) {
            return usage_error("stages must be 1, 2 or 3");
        }
    }

    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(msg)) => usage_error(&msg),
        Err(RunError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum RunError {
    Usage(String),
    Failure(String),
}

fn run(config: &RunConfig) -> Result<(), RunError> {
    let mut methods = Vec::new();
    for label in &config.methods {
        let mut m = Method::from_label(label).ok_or_else(|| {
            RunError::Usage(format!(
                "unknown method '{label}'; valid methods: BE, RIIa-l, RIIa-l-SP, RIIa-q, RIIa-q-SP, RIIa-q-exSP"
            ))
        })?;
        // BE is fixed to a single backward-Euler stage; the override applies
        // to the RIIa variants only.
        if let Some(s) = config.stages {
            if label != "BE" {
                m = m.with_stages(s);
            }
        }
        methods.push((label.clone(), m));
    }

    fs::create_dir_all(&config.out)
        .map_err(|e| RunError::Failure(format!("cannot create {}: {e}", config.out.display())))?;
    let cache_dir = config.out.join("ref-cache");

    let mut all_reports = Vec::new();
    let mut manifest_scenarios = Vec::new();
    for name in &config.scenarios {
        let mut scenario = Scenario::by_name(name).ok_or_else(|| {
            RunError::Usage(format!(
                "unknown scenario '{name}'; valid scenarios: {}",
                SCENARIO_NAMES.join(", ")
            ))
        })?;
        if let Some(mat) = &config.material {
            scenario.material = mat.to_material();
        }
        let study = Study {
            scenario: &scenario,
            methods: methods.clone(),
            dts: config.dts.clone().unwrap_or_else(|| scenario.dt_ladder.clone()),
            eval_times: config
                .eval_times
                .clone()
                .unwrap_or_else(|| scenario.eval_times.clone()),
            ref_dt: config.ref_dt.unwrap_or(scenario.ref_dt),
            quantities: config.quantities.clone(),
            cache_dir: cache_dir.clone(),
            repetitions: config.repetitions,
        };
        let reports = run_study(&study)
            .map_err(|e| RunError::Failure(format!("scenario {name} failed: {e}")))?;
        let ref_method = radauplast::convergence::reference_method(scenario.kind);
        manifest_scenarios.push(serde_json::json!({
            "scenario": name,
            "ref_dt": study.ref_dt,
            "dts": study.dts,
            "eval_times": study.eval_times,
            "reference_cache_key": radauplast::convergence::reference_cache_key(
                &scenario, &ref_method, study.ref_dt, &study.eval_times),
        }));
        all_reports.extend(reports);
    }

    // Per-report CSVs: one (dt, error) table per scenario/method/quantity/time.
    for report in &all_reports {
        let mut csv = String::from("dt,error\n");
        for row in &report.rows {
            csv.push_str(&format!("{},{}\n", fmt17(row.dt), fmt17(row.error)));
        }
        let path = config.out.join(report_file_name(report));
        write_atomic(&path, &csv)
            .map_err(|e| RunError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }

    // Summary CSV with the fitted orders.
    let mut summary = String::from("scenario,method,quantity,eval_time,order,n_points,n_excluded\n");
    for report in &all_reports {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.scenario,
            report.method,
            report.quantity.label(),
            fmt17(report.eval_time),
            report.order.map(fmt17).unwrap_or_default(),
            report.rows.len(),
            report.excluded,
        ));
    }
    let summary_path = config.out.join("summary.csv");
    write_atomic(&summary_path, &summary)
        .map_err(|e| RunError::Failure(format!("cannot write summary.csv: {e}")))?;

    // Manifest: parameters, code version and cache keys; the timestamp lives
    // only here so the CSV outputs stay byte-identical across runs.
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "generated_unix_secs": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "methods": config.methods,
        "stages": config.stages,
        "quantities": config.quantities.iter().map(|q| q.label()).collect::<Vec<_>>(),
        "repetitions": config.repetitions,
        "scenarios": manifest_scenarios,
    });
    let manifest_path = config.out.join("manifest.json");
    write_atomic(
        &manifest_path,
        &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON")),
    )
    .map_err(|e| RunError::Failure(format!("cannot write manifest.json: {e}")))?;

    for report in &all_reports {
        println!(
            "{} {} {} t={}: order {} ({} rows, {} excluded)",
            report.scenario,
            report.method,
            report.quantity.label(),
            report.eval_time,
            report.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "n/a".into()),
            report.rows.len(),
            report.excluded,
        );
    }
    Ok(())
}
