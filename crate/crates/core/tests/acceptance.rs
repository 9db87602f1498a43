//! Acceptance gate: one check per numbered criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them). Criteria 6 and 9 form
//! the long annulus suite and are `#[ignore]`d by default:
//! `cargo test --release --test acceptance -- --ignored --nocapture`.

use std::path::PathBuf;
use std::time::Instant;

use radauplast::butcher::Tableau;
use radauplast::convergence::{
    fit_order, relative_error, run_once, run_study, speedup, Quantity, Report, Study,
};
use radauplast::fem::{run, RunOptions};
use radauplast::material::{Material, PlasticState, SQRT_2_3};
use radauplast::scenarios::{run_material_point, Scenario};
use radauplast::stage_solver::{solve_stages, step, FixedStageStrains, GpHistory, Method};
use radauplast::strain_path::{stage_strain, Interpolation};
use radauplast::tensor::SymTensor2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ref-cache")
}

/// Prints the verdict line for a criterion and panics on failure.
fn verdict(criterion: usize, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {status} — {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn study_reports(
    scenario: &Scenario,
    methods: Vec<(String, Method)>,
    dts: Vec<f64>,
    eval_times: Vec<f64>,
    quantity: Quantity,
    repetitions: usize,
) -> Vec<Report> {
    let study = Study {
        scenario,
        methods,
        dts,
        eval_times,
        ref_dt: scenario.ref_dt,
        quantities: vec![quantity],
        cache_dir: cache_dir(),
        repetitions,
    };
    run_study(&study).expect("study must complete")
}

fn report_at<'r>(reports: &'r [Report], method: &str, t: f64) -> &'r Report {
    reports
        .iter()
        .find(|r| r.method == method && (r.eval_time - t).abs() < 1e-12)
        .expect("report exists")
}

/// Criterion 1: the analytic elastic/plastic switching time of the
/// prescribed-strain biaxial test is found to high accuracy, quickly.
#[test]
fn criterion_1_analytic_switching_point() {
    let scenario = Scenario::by_name("case_II").unwrap();
    let started = Instant::now();
    let run = run_material_point(&scenario.material, 2, true, 0.25, &[1.0]).unwrap();
    let elapsed = started.elapsed();
    let t_sp = run.t_switch.expect("switching point detected");
    let target = 0.693375;
    let ok = (t_sp - target).abs() < 1e-6 && elapsed.as_secs_f64() < 1.0;
    verdict(
        1,
        ok,
        &format!(
            "detected t_sp {t_sp:.9} (target {target} ± 1e-6) in {:.0} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

/// Criterion 2: switching-point detection restores the theoretical orders
/// 2s-1 of the prescribed-strain test; without it both higher-stage methods
/// drop below 2.5 and their error curves coincide asymptotically.
#[test]
fn criterion_2_order_restoration_material_point() {
    let scenario = Scenario::by_name("case_II").unwrap();
    let started = Instant::now();

    // With SP detection, over the default ladder.
    let sp_methods: Vec<(String, Method)> = (1..=3)
        .map(|s| {
            (
                format!("s={s}"),
                Method::from_label("RIIa-q-SP").unwrap().with_stages(s),
            )
        })
        .collect();
    let sp_reports = study_reports(
        &scenario,
        sp_methods,
        scenario.dt_ladder.clone(),
        vec![1.0],
        Quantity::EpZz,
        1,
    );
    let sp_orders: Vec<f64> = (1..=3)
        .map(|s| report_at(&sp_reports, &format!("s={s}"), 1.0).order.unwrap())
        .collect();
    let sp_ok = (sp_orders[0] - 1.0).abs() <= 0.3
        && (sp_orders[1] - 3.0).abs() <= 0.4
        && (sp_orders[2] - 5.0).abs() <= 0.6;

    // Without SP detection the convergence is strongly non-monotone; the fit
    // uses the default ladder extended by two halvings and the coincidence of
    // the two curves is asserted on the three finest rows (the asymptotic
    // regime, where the crossing-step defect dominates both methods).
    let ladder: Vec<f64> = (0..7).map(|k| 0.25 / 2f64.powi(k)).collect();
    let nosp_methods: Vec<(String, Method)> = [2usize, 3]
        .iter()
        .map(|&s| {
            (
                format!("s={s}"),
                Method::from_label("RIIa-q").unwrap().with_stages(s),
            )
        })
        .collect();
    let nosp_reports = study_reports(
        &scenario,
        nosp_methods,
        ladder,
        vec![1.0],
        Quantity::EpZz,
        1,
    );
    let r2 = report_at(&nosp_reports, "s=2", 1.0);
    let r3 = report_at(&nosp_reports, "s=3", 1.0);
    let nosp_orders = [r2.order.unwrap(), r3.order.unwrap()];
    let mut max_mismatch: f64 = 0.0;
    let n = r2.rows.len();
    for i in n - 3..n {
        let (e2, e3) = (r2.rows[i].error, r3.rows[i].error);
        max_mismatch = max_mismatch.max((e2 - e3).abs() / e3);
    }
    let nosp_ok = nosp_orders[0] < 2.5 && nosp_orders[1] < 2.5 && max_mismatch <= 0.05;

    let elapsed = started.elapsed();
    verdict(
        2,
        sp_ok && nosp_ok && elapsed.as_secs_f64() < 60.0,
        &format!(
            "SP orders s=1..3: {:.2}/{:.2}/{:.2} (targets 1.0±0.3, 3.0±0.4, 5.0±0.6); \
             no-SP orders {:.2}/{:.2} (< 2.5), curves coincide within {:.1}% (≤ 5%) on the \
             3 finest rows; {:.0} s",
            sp_orders[0],
            sp_orders[1],
            sp_orders[2],
            nosp_orders[0],
            nosp_orders[1],
            max_mismatch * 100.0,
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 3: FEM biaxial stretch — linear interpolation is limited to
/// order 2; quadratic interpolation with extrapolation-based SP detection
/// reaches order 3 in the stress error at the final time.
#[test]
fn criterion_3_fem_biaxial_order_barrier_and_cure() {
    let scenario = Scenario::by_name("biaxial").unwrap();
    let started = Instant::now();
    let methods = vec![
        ("RIIa-l".to_string(), Method::from_label("RIIa-l").unwrap()),
        (
            "RIIa-q-exSP".to_string(),
            Method::from_label("RIIa-q-exSP").unwrap(),
        ),
    ];
    let reports = study_reports(
        &scenario,
        methods,
        scenario.dt_ladder.clone(),
        vec![10.0],
        Quantity::Stress,
        1,
    );
    let o_lin = report_at(&reports, "RIIa-l", 10.0).order.unwrap();
    let o_ex = report_at(&reports, "RIIa-q-exSP", 10.0).order.unwrap();
    let elapsed = started.elapsed();
    verdict(
        3,
        (o_lin - 2.0).abs() <= 0.3 && (o_ex - 3.0).abs() <= 0.3 && elapsed.as_secs_f64() < 600.0,
        &format!(
            "e(S) orders at t=10: RIIa-l {o_lin:.2} (2.0±0.3), RIIa-q-exSP {o_ex:.2} (3.0±0.3); {:.0} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 4: with zero initial yield stress there is no switching point,
/// the strain path is smooth, and the methods show their interpolation-limited
/// orders with strictly monotone error curves.
#[test]
fn criterion_4_smooth_case_without_switching() {
    let scenario = Scenario::by_name("case_I").unwrap();
    let started = Instant::now();
    let methods = vec![
        ("BE".to_string(), Method::BE),
        ("RIIa-l".to_string(), Method::from_label("RIIa-l").unwrap()),
        ("RIIa-q".to_string(), Method::from_label("RIIa-q").unwrap()),
    ];
    let reports = study_reports(
        &scenario,
        methods,
        scenario.dt_ladder.clone(),
        scenario.eval_times.clone(),
        Quantity::Stress,
        1,
    );
    let targets = [("BE", 1.05), ("RIIa-l", 1.7), ("RIIa-q", 2.85)];
    let mut ok = true;
    let mut details = Vec::new();
    for (label, target) in targets {
        let report = report_at(&reports, label, 1.5);
        let order = report.order.unwrap();
        ok &= (order - target).abs() <= 0.3;
        details.push(format!("{label} {order:.2} ({target}±0.3)"));
    }
    // Strict monotonicity of every error curve at every evaluation time.
    for report in &reports {
        for pair in report.rows.windows(2) {
            ok &= pair[1].error < pair[0].error;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        4,
        ok && elapsed.as_secs_f64() < 600.0,
        &format!(
            "orders at t=1.5: {}; all curves strictly monotone; {:.0} s",
            details.join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 5: simple shear — backward Euler is first order, linear
/// interpolation second order at every evaluation time, and quadratic
/// interpolation with SP detection reaches third order late in the history.
#[test]
fn criterion_5_simple_shear_orders() {
    let scenario = Scenario::by_name("simple_shear").unwrap();
    let started = Instant::now();
    let methods = vec![
        ("BE".to_string(), Method::BE),
        ("RIIa-l".to_string(), Method::from_label("RIIa-l").unwrap()),
        (
            "RIIa-q-SP".to_string(),
            Method::from_label("RIIa-q-SP").unwrap(),
        ),
    ];
    let reports = study_reports(
        &scenario,
        methods,
        scenario.dt_ladder.clone(),
        scenario.eval_times.clone(),
        Quantity::Stress,
        1,
    );
    let mut ok = true;
    let mut details = Vec::new();
    for &t in &scenario.eval_times {
        let o_be = report_at(&reports, "BE", t).order.unwrap();
        let o_lin = report_at(&reports, "RIIa-l", t).order.unwrap();
        ok &= (o_be - 1.0).abs() <= 0.15 && (o_lin - 1.95).abs() <= 0.2;
        details.push(format!("t={t}: BE {o_be:.2}, RIIa-l {o_lin:.2}"));
    }
    let o_q = report_at(&reports, "RIIa-q-SP", 100.0).order.unwrap();
    ok &= o_q >= 2.9;
    details.push(format!("RIIa-q-SP at t=100: {o_q:.2} (≥ 2.9)"));
    let elapsed = started.elapsed();
    verdict(
        5,
        ok && elapsed.as_secs_f64() < 300.0,
        &format!("{}; {:.0} s", details.join("; "), elapsed.as_secs_f64()),
    );
}

/// Criterion 6 (long suite): the annulus discriminates smooth from kinked
/// loading — saturating hardening from a zero-radius yield surface (case B)
/// admits third order, while a finite yield surface (case A) does not.
#[test]
#[ignore = "long annulus suite; run with --ignored"]
fn criterion_6_annulus_smoothness_dichotomy() {
    let started = Instant::now();
    let methods = vec![("RIIa-q".to_string(), Method::from_label("RIIa-q").unwrap())];

    let scenario_b = Scenario::by_name("annulus_B").unwrap();
    let reports_b = study_reports(
        &scenario_b,
        methods.clone(),
        scenario_b.dt_ladder.clone(),
        vec![0.25],
        Quantity::Stress,
        1,
    );
    let o_b = report_at(&reports_b, "RIIa-q", 0.25).order.unwrap();

    let scenario_a = Scenario::by_name("annulus_A").unwrap();
    let reports_a = study_reports(
        &scenario_a,
        methods,
        scenario_a.dt_ladder.clone(),
        vec![0.5],
        Quantity::Stress,
        1,
    );
    let o_a = report_at(&reports_a, "RIIa-q", 0.5).order.unwrap();

    let elapsed = started.elapsed();
    verdict(
        6,
        (2.6..=3.2).contains(&o_b) && o_a < 2.5 && elapsed.as_secs_f64() < 7200.0,
        &format!(
            "RIIa-q orders: case B at t=0.25: {o_b:.2} (within [2.6, 3.2]); \
             case A at t=0.5: {o_a:.2} (< 2.5); {:.0} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 7: the consistent tangent equals central finite differences of
/// the step map on logged plastic steps, and drives the global Newton on the
/// annulus to convergence in few iterations with terminal quadratic decay.
#[test]
fn criterion_7_consistent_tangent() {
    let started = Instant::now();

    // Part 1: finite-difference check on at least 50 logged plastic steps
    // drawn from three different scenarios.
    let mut samples = Vec::new();
    for (name, dt, t_end) in [
        ("biaxial", 0.0625, 2.0),
        ("simple_shear", 0.3125, 20.0),
        ("case_I", 0.09375, 1.5),
    ] {
        let scenario = Scenario::by_name(name).unwrap();
        let problem = scenario.problem().unwrap();
        let output = run(
            &problem,
            Method::from_label("RIIa-q").unwrap(),
            dt,
            &[t_end],
            &RunOptions {
                tangent_samples: 20,
                log_newton: false,
            },
        )
        .unwrap();
        samples.extend(output.tangent_samples);
    }
    let n_samples = samples.len();
    let mut max_rel: f64 = 0.0;
    for sample in &samples {
        let res = step(&sample.material, &sample.method, &sample.history, &sample.strain).unwrap();
        let scale = res.tangent.max_abs();
        let h = 1e-7 * sample.strain.norm().max(1e-3);
        for q in 0..6 {
            let mut ep = sample.strain;
            ep.0[q] += h;
            let mut em = sample.strain;
            em.0[q] -= h;
            let sp = step(&sample.material, &sample.method, &sample.history, &ep)
                .unwrap()
                .stress;
            let sm = step(&sample.material, &sample.method, &sample.history, &em)
                .unwrap()
                .stress;
            for p in 0..6 {
                let fd = (sp.0[p] - sm.0[p]) / (2.0 * h);
                max_rel = max_rel.max((fd - res.tangent.0[p][q]).abs() / scale);
            }
        }
    }
    let fd_ok = n_samples >= 50 && max_rel < 1e-5;

    // Part 2: global Newton behaviour on the annulus with saturating
    // hardening at a coarse step.
    let scenario = Scenario::by_name("annulus_B").unwrap();
    let problem = scenario.problem().unwrap();
    let output = run(
        &problem,
        Method::from_label("RIIa-q").unwrap(),
        0.05,
        &[0.5],
        &RunOptions {
            tangent_samples: 0,
            log_newton: true,
        },
    )
    .unwrap();
    let mut max_iters = 0usize;
    let mut quadratic = true;
    for history in &output.newton_histories {
        // history[0] is the initial out-of-balance force; corrections follow.
        max_iters = max_iters.max(history.len() - 1);
        // Terminal quadratic decay: once inside the Newton basin the residual
        // exponent should at least double (allowing a generous constant and
        // skipping residuals at the round-off floor).
        let floor = 1e-8 * history[0];
        for k in 2..history.len() {
            let (r2, r1, r0) = (history[k], history[k - 1], history[k - 2]);
            if r2 > floor {
                let prev_rate = r1 / r0;
                quadratic &= r2 / r1 <= (100.0 * prev_rate * prev_rate).max(1e-10);
            }
        }
    }
    let newton_ok = max_iters <= 6 && quadratic;

    let elapsed = started.elapsed();
    verdict(
        7,
        fd_ok && newton_ok,
        &format!(
            "tangent vs central differences: max relative deviation {max_rel:.2e} (< 1e-5) \
             on {n_samples} logged plastic steps (≥ 50); annulus Newton: ≤ {max_iters} \
             iterations per step (≤ 6), terminal decay quadratic: {quadratic}; {:.0} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 8: structural properties — tableau order conditions, stiff
/// accuracy, yield consistency, deviatoric flow, the closed-form
/// backward-Euler oracle and quadratic interpolation exactness.
#[test]
fn criterion_8_property_suite() {
    let started = Instant::now();
    let mat = Material {
        youngs: 210000.0,
        poisson: 0.3,
        sigma_y: 460.0,
        sigma_sat: 211.0,
        hardening_h: 1500.0,
        delta: 300.0,
    };
    let two_mu = 2.0 * mat.shear_modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    let mut details = Vec::new();

    // Tableau order conditions and stiff accuracy of the coefficients.
    let mut cond_max: f64 = 0.0;
    for s in 1..=3 {
        let tab = Tableau::radau_iia(s);
        for k in 1..=s {
            let b_cond: f64 =
                (0..s).map(|j| tab.b[j] * tab.c[j].powi(k as i32 - 1)).sum::<f64>() - 1.0 / k as f64;
            cond_max = cond_max.max(b_cond.abs());
            for i in 0..s {
                let c_cond: f64 = (0..s)
                    .map(|j| tab.a[i][j] * tab.c[j].powi(k as i32 - 1))
                    .sum::<f64>()
                    - tab.c[i].powi(k as i32) / k as f64;
                cond_max = cond_max.max(c_cond.abs());
            }
        }
        for j in 0..s {
            cond_max = cond_max.max((tab.a[s - 1][j] - tab.b[j]).abs());
        }
    }
    ok &= cond_max < 1e-14;
    details.push(format!("order conditions ≤ {cond_max:.1e} (< 1e-14)"));

    // Stiff accuracy, yield residual and traceless plastic flow on random
    // plastifying steps for every stage count.
    let mut f_max: f64 = 0.0;
    let mut trace_max: f64 = 0.0;
    let mut stiff_max: f64 = 0.0;
    for _ in 0..200 {
        let e = SymTensor2(std::array::from_fn(|_| rng.gen_range(-8e-3..8e-3)));
        if mat.yield_function(&e, &SymTensor2::ZERO, 0.0) < 1e-3 {
            continue;
        }
        for s in 1..=3 {
            let tab = Tableau::radau_iia(s);
            let stages: Vec<SymTensor2> = tab.c.iter().map(|&c| e.scale(c)).collect();
            let sol = solve_stages(&mat, &tab, &FixedStageStrains::new(&stages), &PlasticState::default())
                .unwrap();
            stiff_max = stiff_max.max((sol.state.ep - *sol.stage_eps.last().unwrap()).norm());
            trace_max = trace_max.max(sol.state.ep.trace().abs());
            let trial = e.deviator().norm();
            let scale = mat.yield_radius(sol.state.alpha).max(two_mu * trial).max(1.0);
            let f = mat.yield_function(&e, &sol.state.ep, sol.state.alpha);
            f_max = f_max.max(f.abs() / scale);
        }
    }
    ok &= stiff_max <= 1e-15 && f_max < 1e-10 && trace_max < 1e-12;
    details.push(format!(
        "stiff accuracy ≤ {stiff_max:.1e}, scaled yield residual ≤ {f_max:.1e} (< 1e-10), \
         |trace(Ep)| ≤ {trace_max:.1e} (< 1e-12)"
    ));

    // Backward Euler against the closed-form radial return (linear
    // hardening) on 1000 random steps.
    let lin = Material {
        sigma_sat: 0.0,
        delta: 0.0,
        ..mat
    };
    let lin_two_mu = 2.0 * lin.shear_modulus();
    let mut be_max: f64 = 0.0;
    let mut checked = 0;
    while checked < 1000 {
        let mut hist = GpHistory::new();
        hist.state = PlasticState {
            ep: SymTensor2(std::array::from_fn(|_| rng.gen_range(-2e-3..2e-3))).deviator(),
            alpha: rng.gen_range(0.0..5e-3),
        };
        let e = SymTensor2(std::array::from_fn(|_| rng.gen_range(-8e-3..8e-3)));
        let trial = e.deviator() - hist.state.ep;
        let f_trial =
            lin_two_mu * trial.norm() - SQRT_2_3 * (lin.sigma_y + lin.hardening(hist.state.alpha));
        if f_trial <= 1e-6 || trial.norm() < 1e-9 {
            continue;
        }
        checked += 1;
        let dgamma = f_trial / (lin_two_mu + 2.0 / 3.0 * lin.hardening_h);
        let ep_exact = hist.state.ep + trial.scale(dgamma / trial.norm());
        let result = step(&lin, &Method::BE, &hist, &e).unwrap();
        be_max = be_max.max((result.state.ep - ep_exact).norm() / ep_exact.norm().max(1e-3));
    }
    ok &= be_max <= 1e-12;
    details.push(format!(
        "backward Euler vs radial return ≤ {be_max:.1e} (≤ 1e-12) on 1000 steps"
    ));

    // Quadratic interpolation is exact on degree-2 paths.
    let mut interp_max: f64 = 0.0;
    for _ in 0..100 {
        let a = SymTensor2(std::array::from_fn(|_| rng.gen_range(-1e-2..1e-2)));
        let b = SymTensor2(std::array::from_fn(|_| rng.gen_range(-1e-2..1e-2)));
        let q = SymTensor2(std::array::from_fn(|_| rng.gen_range(-1e-2..1e-2)));
        let path = |t: f64| a + b.scale(t) + q.scale(t * t);
        let (t_n, dt, c) = (
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.01..1.0),
            rng.gen_range(0.0..1.0),
        );
        let interp = stage_strain(
            Interpolation::Quadratic,
            Some(&path(t_n - dt)),
            &path(t_n),
            &path(t_n + dt),
            c,
        );
        let exact = path(t_n + c * dt);
        interp_max = interp_max.max((interp - exact).norm() / exact.norm().max(1.0));
    }
    ok &= interp_max < 1e-12;
    details.push(format!(
        "quadratic interpolation exact to {interp_max:.1e} on degree-2 paths"
    ));

    let elapsed = started.elapsed();
    verdict(
        8,
        ok,
        &format!("{}; {:.1} s", details.join("; "), elapsed.as_secs_f64()),
    );
}

/// Criterion 9 (long suite): at a stress-error target of 1e-4 on the annulus
/// with saturating hardening, the third-order method is more than five times
/// faster than backward Euler.
#[test]
#[ignore = "long annulus suite; run with --ignored"]
fn criterion_9_speedup_over_backward_euler() {
    let started = Instant::now();
    let scenario = Scenario::by_name("annulus_B").unwrap();
    let methods = vec![
        ("BE".to_string(), Method::BE),
        (
            "RIIa-q-exSP".to_string(),
            Method::from_label("RIIa-q-exSP").unwrap(),
        ),
    ];
    let reports = study_reports(
        &scenario,
        methods,
        scenario.dt_ladder.clone(),
        vec![0.25],
        Quantity::Stress,
        3,
    );
    let base = report_at(&reports, "BE", 0.25);
    let fast = report_at(&reports, "RIIa-q-exSP", 0.25);
    let factor = speedup(&base.rows, &fast.rows, 1e-4).expect("speed-up computable");
    let elapsed = started.elapsed();
    verdict(
        9,
        factor > 5.0,
        &format!(
            "wall-time ratio BE / RIIa-q-exSP at e(S)=1e-4: {factor:.1} (> 5); {:.0} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// The error-accumulation observation: at fixed step size the backward-Euler
/// stress error grows along the deformation history.
#[test]
fn first_order_error_gap_widens_over_the_shear_history() {
    // At a fixed step size the accuracy advantage of the third-order method
    // over backward Euler keeps growing along the load history, so longer
    // simulations benefit more and more from the higher-order scheme.
    let scenario = Scenario::by_name("simple_shear").unwrap();
    let eval_times = vec![20.0, 100.0];
    let reference = radauplast::convergence::reference_trajectory(
        &scenario,
        scenario.ref_dt,
        &eval_times,
        &cache_dir(),
    )
    .unwrap();
    let (be, _) = run_once(&scenario, &Method::BE, 2.5, &eval_times).unwrap();
    let hi_method = Method::from_label("RIIa-q-SP").unwrap();
    let (hi, _) = run_once(&scenario, &hi_method, 2.5, &eval_times).unwrap();
    let err = |traj: &radauplast::convergence::Trajectory, i: usize| {
        relative_error(&traj.records[i], &reference.records[i], Quantity::Stress).unwrap()
    };
    let ratio_20 = err(&be, 0) / err(&hi, 0);
    let ratio_100 = err(&be, 1) / err(&hi, 1);
    assert!(
        ratio_100 > ratio_20 && ratio_20 > 1.0,
        "high-order advantage should grow with simulated time: \
         e_BE/e_q at t=20 is {ratio_20:.3e}, at t=100 is {ratio_100:.3e}"
    );
}

/// Exact power-law data recovers its exponent (regression sanity inside the
/// acceptance target).
#[test]
fn fit_order_recovers_exact_power_law() {
    let rows: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let dt = 0.5 / 2f64.powi(k);
            (dt, 3.7 * dt.powi(3))
        })
        .collect();
    let (order, excluded) = fit_order(&rows).unwrap();
    assert!((order - 3.0).abs() < 1e-10);
    assert_eq!(excluded, 0);
}
