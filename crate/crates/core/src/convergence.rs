//! Convergence-order laboratory: Gauss-point-averaged relative errors
//! against an overkill reference, log-log order regression, a disk cache for
//! reference solutions, and wall-clock speed-up evaluation.

use crate::fem::{self, GpRecord, RunOptions};
use crate::scenarios::{self, Kind, Scenario};
use crate::stage_solver::Method;
use crate::strain_path::Interpolation;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Errors below this are treated as the machine-precision plateau and
/// excluded from order regression.
pub const PLATEAU_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("order regression needs at least 3 usable rows, got {0}")]
    InsufficientData(usize),
    #[error("gauss point counts differ: run {run} vs reference {reference}")]
    MismatchedRecords { run: usize, reference: usize },
    #[error("no plastically deformed gauss points at the evaluation time")]
    NoPlasticPoints,
    #[error("simulation failed: {0}")]
    Fem(#[from] fem::FemError),
    #[error("material-point integration failed: {0}")]
    MaterialPoint(#[from] crate::stage_solver::SolverError),
    #[error("reference cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("reference cache format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Quantity whose relative error is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Strain,
    PlasticStrain,
    Stress,
    /// Out-of-plane plastic strain component (material-point scenario).
    EpZz,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Strain => "E",
            Quantity::PlasticStrain => "Ep",
            Quantity::Stress => "S",
            Quantity::EpZz => "Ep_zz",
        }
    }
}

fn record_norm_dev(q: Quantity, a: &GpRecord, b: &GpRecord) -> (f64, f64) {
    match q {
        Quantity::Strain => ((a.strain - b.strain).norm(), b.strain.norm()),
        Quantity::PlasticStrain => ((a.state.ep - b.state.ep).norm(), b.state.ep.norm()),
        Quantity::Stress => ((a.stress - b.stress).norm(), b.stress.norm()),
        Quantity::EpZz => (
            (a.state.ep.0[2] - b.state.ep.0[2]).abs(),
            b.state.ep.0[2].abs(),
        ),
    }
}

/// Gauss-point-averaged relative error against the reference. Only points
/// that have plastified in the reference (alpha > 0) enter the average;
/// points with a vanishing reference norm are skipped as well.
pub fn relative_error(
    run: &[GpRecord],
    reference: &[GpRecord],
    q: Quantity,
) -> Result<f64, LabError> {
    if run.len() != reference.len() {
        return Err(LabError::MismatchedRecords {
            run: run.len(),
            reference: reference.len(),
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in run.iter().zip(reference) {
        if b.state.alpha <= 0.0 {
            continue;
        }
        let (dev, norm) = record_norm_dev(q, a, b);
        if norm == 0.0 {
            continue;
        }
        sum += dev / norm;
        count += 1;
    }
    if count == 0 {
        return Err(LabError::NoPlasticPoints);
    }
    Ok(sum / count as f64)
}

/// Least-squares slope of log10(error) vs log10(dt), excluding rows at the
/// machine-precision plateau. Returns (order, excluded row count).
pub fn fit_order(rows: &[(f64, f64)]) -> Result<(f64, usize), LabError> {
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(dt, e)| *dt > 0.0 && e.is_finite() && *e > PLATEAU_THRESHOLD)
        .map(|&(dt, e)| (dt.log10(), e.log10()))
        .collect();
    if usable.len() < 3 {
        return Err(LabError::InsufficientData(usable.len()));
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|(x, _)| x).sum();
    let sy: f64 = usable.iter().map(|(_, y)| y).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok((slope, rows.len() - usable.len()))
}

/// One measured row of a convergence sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReportRow {
    pub dt: f64,
    pub error: f64,
    /// Median wall time of the time-stepping loop, seconds.
    pub wall_secs: f64,
}

/// Convergence report for one (scenario, method, quantity, evaluation time).
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub method: String,
    pub quantity: Quantity,
    pub eval_time: f64,
    pub rows: Vec<ReportRow>,
    pub order: Option<f64>,
    pub excluded: usize,
}

/// Per-evaluation-time Gauss-point records of one run.
#[derive(Serialize, Deserialize)]
pub struct Trajectory {
    pub eval_times: Vec<f64>,
    pub records: Vec<Vec<GpRecord>>,
}

fn mp_method(method: &Method) -> (usize, bool) {
    (
        method.stages,
        method.sp != crate::stage_solver::SpMode::Off,
    )
}

/// Runs one (scenario, method, dt) combination and samples all evaluation
/// times. Returns the trajectory and the wall time of the stepping loop.
pub fn run_once(
    scenario: &Scenario,
    method: &Method,
    dt: f64,
    eval_times: &[f64],
) -> Result<(Trajectory, f64), LabError> {
    let start = Instant::now();
    let records = match scenario.kind {
        Kind::Fem => {
            let problem = scenario.problem().expect("FEM scenario");
            let out = fem::run(&problem, *method, dt, eval_times, &RunOptions::default())?;
            out.snapshots.into_iter().map(|s| s.gps).collect()
        }
        Kind::MaterialPoint => {
            let (stages, sp) = mp_method(method);
            let run =
                scenarios::run_material_point(&scenario.material, stages, sp, dt, eval_times)?;
            run.samples
                .into_iter()
                .map(|s| {
                    vec![GpRecord {
                        stress: s.stress,
                        strain: s.strain,
                        state: s.state,
                    }]
                })
                .collect()
        }
    };
    let wall = start.elapsed().as_secs_f64();
    Ok((
        Trajectory {
            eval_times: eval_times.to_vec(),
            records,
        },
        wall,
    ))
}

/// The reference integrator: quadratic stage-strain interpolation with
/// extrapolated switching-point detection (two stages); the material-point
/// scenario uses three stages with exact switching-point location.
pub fn reference_method(kind: Kind) -> Method {
    match kind {
        Kind::Fem => Method {
            stages: 2,
            interp: Interpolation::Quadratic,
            sp: crate::stage_solver::SpMode::Extrapolated,
        },
        Kind::MaterialPoint => Method {
            stages: 3,
            interp: Interpolation::Quadratic,
            sp: crate::stage_solver::SpMode::Interpolated,
        },
    }
}

#[derive(Serialize)]
struct CacheKey<'a> {
    scenario: &'a str,
    material: crate::material::Material,
    stages: usize,
    interp: String,
    sp: String,
    ref_dt: f64,
    eval_times: &'a [f64],
}

/// Stable content hash identifying a reference run.
pub fn reference_cache_key(scenario: &Scenario, method: &Method, ref_dt: f64, eval_times: &[f64]) -> String {
    let key = CacheKey {
        scenario: scenario.name,
        material: scenario.material,
        stages: method.stages,
        interp: format!("{:?}", method.interp),
        sp: format!("{:?}", method.sp),
        ref_dt,
        eval_times,
    };
    let bytes = serde_json::to_vec(&key).expect("key serialization");
    hex::encode(Sha256::digest(&bytes))
}

/// Loads the reference trajectory from the cache or computes and stores it.
pub fn reference_trajectory(
    scenario: &Scenario,
    ref_dt: f64,
    eval_times: &[f64],
    cache_dir: &Path,
) -> Result<Trajectory, LabError> {
    let method = reference_method(scenario.kind);
    let key = reference_cache_key(scenario, &method, ref_dt, eval_times);
    let path = cache_dir.join(format!("{key}.json"));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(traj) = serde_json::from_slice::<Trajectory>(&bytes) {
            return Ok(traj);
        }
        // unreadable or stale format: regenerate below
    }
    let (traj, _) = run_once(scenario, &method, ref_dt, eval_times)?;
    std::fs::create_dir_all(cache_dir)?;
    let tmp = cache_dir.join(format!("{key}.json.tmp"));
    std::fs::write(&tmp, serde_json::to_vec(&traj)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(traj)
}

/// Study configuration: which methods and step sizes to sweep.
pub struct Study<'a> {
    pub scenario: &'a Scenario,
    /// (label, method) pairs; labels appear verbatim in reports and CSVs.
    pub methods: Vec<(String, Method)>,
    pub dts: Vec<f64>,
    pub eval_times: Vec<f64>,
    pub ref_dt: f64,
    pub quantities: Vec<Quantity>,
    pub cache_dir: PathBuf,
    /// Wall-time repetitions per run; the median is reported.
    pub repetitions: usize,
}

pub fn run_study(study: &Study) -> Result<Vec<Report>, LabError> {
    let reference = reference_trajectory(
        study.scenario,
        study.ref_dt,
        &study.eval_times,
        &study.cache_dir,
    )?;
    let mut reports = Vec::new();
    for (label, method) in &study.methods {
        // rows[t][q] accumulated per dt
        let mut per_combo: Vec<Vec<Vec<ReportRow>>> =
            vec![vec![Vec::new(); study.quantities.len()]; study.eval_times.len()];
        for &dt in &study.dts {
            let reps = study.repetitions.max(1);
            let mut walls = Vec::with_capacity(reps);
            let mut traj = None;
            for _ in 0..reps {
                let (t, w) = run_once(study.scenario, method, dt, &study.eval_times)?;
                walls.push(w);
                traj = Some(t);
            }
            walls.sort_by(f64::total_cmp);
            let wall = walls[walls.len() / 2];
            let traj = traj.unwrap();
            for (ti, _) in study.eval_times.iter().enumerate() {
                for (qi, &q) in study.quantities.iter().enumerate() {
                    let error = relative_error(&traj.records[ti], &reference.records[ti], q)?;
                    per_combo[ti][qi].push(ReportRow {
                        dt,
                        error,
                        wall_secs: wall,
                    });
                }
            }
        }
        for (ti, &eval_time) in study.eval_times.iter().enumerate() {
            for (qi, &quantity) in study.quantities.iter().enumerate() {
                let rows = per_combo[ti][qi].clone();
                let fit = fit_order(&rows.iter().map(|r| (r.dt, r.error)).collect::<Vec<_>>());
                let (order, excluded) = match fit {
                    Ok((o, x)) => (Some(o), x),
                    Err(_) => (None, 0),
                };
                reports.push(Report {
                    scenario: study.scenario.name.to_string(),
                    method: label.clone(),
                    quantity,
                    eval_time,
                    rows,
                    order,
                    excluded,
                });
            }
        }
    }
    Ok(reports)
}

/// Wall time a method needs to reach `tol`, interpolated on the log-log
/// (error, time) curve; extrapolates with the fitted line when `tol` lies
/// outside the measured error range.
pub fn time_to_tolerance(rows: &[ReportRow], tol: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite() && r.wall_secs > 0.0)
        .map(|r| (r.error.log10(), r.wall_secs.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let ltol = tol.log10();
    // piecewise-linear interpolation between bracketing points
    let mut sorted = pts.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if (x0 - ltol) * (x1 - ltol) <= 0.0 && x1 != x0 {
            let y = y0 + (y1 - y0) * (ltol - x0) / (x1 - x0);
            return Some(10f64.powf(y));
        }
    }
    // outside the range: least-squares extrapolation
    let n = sorted.len() as f64;
    let sx: f64 = sorted.iter().map(|(x, _)| x).sum();
    let sy: f64 = sorted.iter().map(|(_, y)| y).sum();
    let sxx: f64 = sorted.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = sorted.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Some(10f64.powf(slope * ltol + intercept))
}

/// Speed-up of `method_rows` over `baseline_rows` at the error tolerance.
pub fn speedup(baseline_rows: &[ReportRow], method_rows: &[ReportRow], tol: f64) -> Option<f64> {
    let tb = time_to_tolerance(baseline_rows, tol)?;
    let tm = time_to_tolerance(method_rows, tol)?;
    Some(tb / tm)
}
