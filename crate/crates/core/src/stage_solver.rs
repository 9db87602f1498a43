//! Runge-Kutta stage solver for the plastic evolution equations, consistent
//! algorithmic tangent, and the per-material-point step driver with
//! elastic/plastic switching-point handling.
//!
//! A plastic step solves, per stage i = 1..s, the coupled system
//!
//!   Ep_i  = Ep_n + sum_j a_ij dG_j N_j,       N_j = x_j / ||x_j||,
//!   0     = 2 mu ||x_i|| - sqrt(2/3) (sigma_y + K'(L_i)),
//!
//! with x_i = dev(E_i) - Ep_i and L_i = alpha_n + sqrt(2/3) sum_j a_ij dG_j.
//! Unknowns are the six stored components of Ep_i plus the stage increment
//! dG_i (seven per stage). The hardening variable is linear in the dG's and
//! is eliminated. Because the tableaus are stiffly accurate, the last stage
//! is the step result.

use crate::butcher::Tableau;
use crate::material::{Material, PlasticState, SQRT_2_3};
use crate::strain_path::{self, cbar, find_first_root, Interpolation};
use crate::tensor::{SymTensor2, SymTensor4, WEIGHTS};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative Newton tolerance on the residual infinity norm (stress units).
const NEWTON_RTOL: f64 = 1e-13;
/// Relaxed acceptance threshold when the iteration stalls at roundoff level.
const NEWTON_ACCEPT_RTOL: f64 = 5e-11;
const NEWTON_MAX_ITERS: usize = 50;
/// Iterations without residual improvement before declaring a stall.
const NEWTON_STALL_ITERS: usize = 5;
/// Trial yield values below this magnitude count as "on the surface" for
/// switching-point detection.
const SP_TRIGGER_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("stage Newton did not converge (best residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("singular stage Jacobian")]
    SingularJacobian,
    #[error("vanishing deviatoric direction at stage {stage}")]
    DegenerateDirection { stage: usize },
}

/// Supplies the deviatoric stage strains and their coupling (if any) to the
/// unknown stage plastic strain.
pub trait StageStrains {
    /// Deviator of the total strain at stage `i`, given the current iterate
    /// of that stage's plastic strain.
    fn deviator(&self, stage: usize, ep_stage: &SymTensor2) -> SymTensor2;

    /// Raw partial derivative of [`Self::deviator`] with respect to the
    /// stored components of `ep_stage`. Zero when the stage strain is fixed
    /// data, as in a strain-driven finite-element step.
    fn ddev_dep(&self, _stage: usize) -> SymTensor4 {
        SymTensor4::ZERO
    }
}

/// Fixed stage strains, precomputed from an interpolant of the endpoint
/// strains of the step.
pub struct FixedStageStrains {
    devs: Vec<SymTensor2>,
}

impl FixedStageStrains {
    pub fn new(strains: &[SymTensor2]) -> Self {
        FixedStageStrains {
            devs: strains.iter().map(|e| e.deviator()).collect(),
        }
    }
}

impl StageStrains for FixedStageStrains {
    fn deviator(&self, stage: usize, _ep_stage: &SymTensor2) -> SymTensor2 {
        self.devs[stage]
    }
}

/// Converged stage solution of one plastic (sub-)step.
pub struct StageSolution {
    /// End-of-step internal variables (last stage, by stiff accuracy).
    pub state: PlasticState,
    /// Plastic strain at every stage.
    pub stage_eps: Vec<SymTensor2>,
    /// Stage increments dG_i (consistency parameter times weight).
    pub dgammas: Vec<f64>,
    pub iterations: usize,
}

struct System {
    residual: DVector<f64>,
    jacobian: DMatrix<f64>,
    /// Unit flow directions N_i and 1/||x_i|| for tangent assembly.
    normals: Vec<SymTensor2>,
    inv_norms: Vec<f64>,
}

fn assemble(
    mat: &Material,
    tab: &Tableau,
    strains: &dyn StageStrains,
    state_n: &PlasticState,
    x: &DVector<f64>,
) -> Result<System, SolverError> {
    let s = tab.stages;
    let n = 7 * s;
    let two_mu = 2.0 * mat.shear_modulus();
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    let mut normals = Vec::with_capacity(s);
    let mut inv_norms = Vec::with_capacity(s);
    let mut couplings = Vec::with_capacity(s);

    let ep_of = |x: &DVector<f64>, i: usize| {
        SymTensor2([
            x[7 * i],
            x[7 * i + 1],
            x[7 * i + 2],
            x[7 * i + 3],
            x[7 * i + 4],
            x[7 * i + 5],
        ])
    };
    let dg_of = |x: &DVector<f64>, i: usize| x[7 * i + 6];

    for i in 0..s {
        let ep_i = ep_of(x, i);
        let xi = strains.deviator(i, &ep_i) - ep_i;
        let norm = xi.norm();
        if norm <= f64::MIN_POSITIVE {
            return Err(SolverError::DegenerateDirection { stage: i });
        }
        normals.push(xi.scale(1.0 / norm));
        inv_norms.push(1.0 / norm);
        couplings.push(strains.ddev_dep(i) - SymTensor4::identity());
    }

    for i in 0..s {
        // R1_i = Ep_i - Ep_n - sum_j a_ij dG_j N_j
        let mut r1 = ep_of(x, i) - state_n.ep;
        let mut lambda = state_n.alpha;
        for j in 0..s {
            let dg = dg_of(x, j);
            r1 -= normals[j].scale(tab.a[i][j] * dg);
            lambda += SQRT_2_3 * tab.a[i][j] * dg;
        }
        for q in 0..6 {
            r[7 * i + q] = r1.0[q];
        }
        // R2_i: stage consistency condition
        r[7 * i + 6] = two_mu / inv_norms[i] - mat.yield_radius(lambda);

        for j in 0..s {
            let dg = dg_of(x, j);
            // dN_j/dEp_j = G_j (D_j - I), G_j = (I - N_j (x) N_j) / ||x_j||
            let g_j = (SymTensor4::identity() - SymTensor4::dyad(&normals[j], &normals[j]))
                .scale(inv_norms[j]);
            let dn_dep = g_j.compose(&couplings[j]);
            for p in 0..6 {
                for q in 0..6 {
                    let mut v = -tab.a[i][j] * dg * dn_dep.0[p][q];
                    if i == j && p == q {
                        v += 1.0;
                    }
                    jac[(7 * i + p, 7 * j + q)] = v;
                }
                jac[(7 * i + p, 7 * j + 6)] = -tab.a[i][j] * normals[j].0[p];
            }
        }
        // d(2 mu ||x_i||)/dEp_i = 2 mu (w . N_i)^T (D_i - I)
        for q in 0..6 {
            let mut v = 0.0;
            for k in 0..6 {
                v += WEIGHTS[k] * normals[i].0[k] * couplings[i].0[k][q];
            }
            jac[(7 * i + 6, 7 * i + q)] = two_mu * v;
        }
        let kpp = mat.hardening_slope(lambda_of(tab, state_n.alpha, x, i));
        for j in 0..s {
            jac[(7 * i + 6, 7 * j + 6)] = -(2.0 / 3.0) * kpp * tab.a[i][j];
        }
    }

    Ok(System {
        residual: r,
        jacobian: jac,
        normals,
        inv_norms,
    })
}

fn lambda_of(tab: &Tableau, alpha_n: f64, x: &DVector<f64>, i: usize) -> f64 {
    let mut l = alpha_n;
    for j in 0..tab.stages {
        l += SQRT_2_3 * tab.a[i][j] * x[7 * j + 6];
    }
    l
}

/// Residual infinity norm with the strain rows promoted to stress units so a
/// single tolerance applies to the whole system.
fn residual_norm(r: &DVector<f64>, two_mu: f64, stages: usize) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..stages {
        for q in 0..6 {
            m = m.max((two_mu * r[7 * i + q]).abs());
        }
        m = m.max(r[7 * i + 6].abs());
    }
    m
}

/// Solves the coupled stage system by Newton's method. The consistency
/// condition is enforced as an equality at every stage, exactly as in the
/// step scheme: a step whose stage abscissa falls before the elastic/plastic
/// transition then carries a (small) negative stage increment — the
/// inconsistency responsible for order reduction that switching-point
/// detection removes.
pub fn solve_stages(
    mat: &Material,
    tab: &Tableau,
    strains: &dyn StageStrains,
    state_n: &PlasticState,
) -> Result<StageSolution, SolverError> {
    let s = tab.stages;
    let n = 7 * s;
    let two_mu = 2.0 * mat.shear_modulus();
    // Characteristic stress for relative tolerances.
    let mut scale = mat.yield_radius(state_n.alpha).max(1.0);
    for i in 0..s {
        let xi = strains.deviator(i, &state_n.ep) - state_n.ep;
        scale = scale.max(two_mu * xi.norm());
    }

    let mut x = DVector::zeros(n);
    for i in 0..s {
        for q in 0..6 {
            x[7 * i + q] = state_n.ep.0[q];
        }
    }

    let mut best = f64::INFINITY;
    let mut best_x = x.clone();
    let mut since_best = 0;
    let mut converged = false;
    let mut total_iters = 0;
    for _ in 0..NEWTON_MAX_ITERS {
        total_iters += 1;
        let sys = assemble(mat, tab, strains, state_n, &x)?;
        let rn = residual_norm(&sys.residual, two_mu, s);
        if rn < best {
            best = rn;
            best_x.copy_from(&x);
            since_best = 0;
        } else {
            since_best += 1;
        }
        if rn <= NEWTON_RTOL * scale {
            converged = true;
            break;
        }
        if since_best >= NEWTON_STALL_ITERS {
            break;
        }
        let lu = sys.jacobian.lu();
        let dx = lu
            .solve(&(-&sys.residual))
            .ok_or(SolverError::SingularJacobian)?;
        x += dx;
    }
    if !converged {
        // Accept an iterate stalled at the roundoff floor of the residual.
        if best <= NEWTON_ACCEPT_RTOL * scale {
            x.copy_from(&best_x);
        } else {
            return Err(SolverError::NonConvergence {
                residual: best,
                iterations: total_iters,
            });
        }
    }

    let mut stage_eps = Vec::with_capacity(s);
    let mut dgammas = Vec::with_capacity(s);
    for i in 0..s {
        stage_eps.push(SymTensor2([
            x[7 * i],
            x[7 * i + 1],
            x[7 * i + 2],
            x[7 * i + 3],
            x[7 * i + 4],
            x[7 * i + 5],
        ]));
        dgammas.push(x[7 * i + 6]);
    }
    let alpha = lambda_of(tab, state_n.alpha, &x, s - 1);
    Ok(StageSolution {
        state: PlasticState {
            ep: stage_eps[s - 1],
            alpha,
        },
        stage_eps,
        dgammas,
        iterations: total_iters,
    })
}

/// Consistent algorithmic tangent dS/dE_{n+1} of a converged plastic step.
///
/// The sensitivity of the last-stage plastic strain is obtained from the
/// converged stage Jacobian with right-hand sides built from the stage-strain
/// sensitivities `cbars[j] = d(stage strain_j)/d(E_{n+1})` (a scalar times
/// the deviatoric projector).
pub fn consistent_tangent(
    mat: &Material,
    tab: &Tableau,
    strains: &dyn StageStrains,
    state_n: &PlasticState,
    sol: &StageSolution,
    cbars: &[f64],
) -> Result<SymTensor4, SolverError> {
    let s = tab.stages;
    let n = 7 * s;
    let two_mu = 2.0 * mat.shear_modulus();

    let mut x = DVector::zeros(n);
    for i in 0..s {
        for q in 0..6 {
            x[7 * i + q] = sol.stage_eps[i].0[q];
        }
        x[7 * i + 6] = sol.dgammas[i];
    }
    let sys = assemble(mat, tab, strains, state_n, &x)?;

    let p = SymTensor4::dev_projector();
    let mut rhs = DMatrix::zeros(n, 6);
    for i in 0..s {
        // dR1_i/dE = -sum_j a_ij dG_j G_j (cbar_j P)
        for j in 0..s {
            let g_j = (SymTensor4::identity() - SymTensor4::dyad(&sys.normals[j], &sys.normals[j]))
                .scale(sys.inv_norms[j]);
            let block = g_j.compose(&p).scale(-tab.a[i][j] * sol.dgammas[j] * cbars[j]);
            for q in 0..6 {
                for e in 0..6 {
                    rhs[(7 * i + q, e)] += block.0[q][e];
                }
            }
        }
        // dR2_i/dE = 2 mu cbar_i (w . N_i)^T P
        for e in 0..6 {
            let mut v = 0.0;
            for k in 0..6 {
                v += WEIGHTS[k] * sys.normals[i].0[k] * p.0[k][e];
            }
            rhs[(7 * i + 6, e)] = two_mu * cbars[i] * v;
        }
    }

    let lu = sys.jacobian.lu();
    let sens = lu.solve(&(-rhs)).ok_or(SolverError::SingularJacobian)?;

    // dEp_{n+1}/dE is the last-stage plastic-strain block.
    let mut dep = SymTensor4::ZERO;
    for q in 0..6 {
        for e in 0..6 {
            dep.0[q][e] = sens[(7 * (s - 1) + q, e)];
        }
    }
    Ok(mat.elasticity() - dep.scale(two_mu))
}

/// Switching-point detection mode for steps that start elastic and end
/// plastic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpMode {
    /// Integrate the whole step with the plastic stage system.
    Off,
    /// Locate the yield crossing on the interpolated strain path (linear or
    /// quadratic, matching the stage interpolation).
    Interpolated,
    /// Locate the crossing on the strain path extrapolated from the previous
    /// step, which keeps the consistent tangent exact.
    Extrapolated,
}

/// A named time-integration method: stage count, stage-strain interpolation
/// and switching-point handling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Method {
    pub stages: usize,
    pub interp: Interpolation,
    pub sp: SpMode,
}

impl Method {
    pub const BE: Method = Method {
        stages: 1,
        interp: Interpolation::Constant,
        sp: SpMode::Off,
    };

    pub fn from_label(label: &str) -> Option<Method> {
        let m = |stages, interp, sp| Some(Method { stages, interp, sp });
        match label {
            "BE" => m(1, Interpolation::Constant, SpMode::Off),
            "RIIa-l" => m(2, Interpolation::Linear, SpMode::Off),
            "RIIa-l-SP" => m(2, Interpolation::Linear, SpMode::Interpolated),
            "RIIa-q" => m(2, Interpolation::Quadratic, SpMode::Off),
            "RIIa-q-SP" => m(2, Interpolation::Quadratic, SpMode::Interpolated),
            "RIIa-q-exSP" => m(2, Interpolation::Quadratic, SpMode::Extrapolated),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match (self.stages, self.interp, self.sp) {
            (1, Interpolation::Constant, SpMode::Off) => "BE".into(),
            (s, Interpolation::Linear, SpMode::Off) => format!("RIIa-l(s={s})"),
            (s, Interpolation::Linear, SpMode::Interpolated) => format!("RIIa-l-SP(s={s})"),
            (s, Interpolation::Quadratic, SpMode::Off) => format!("RIIa-q(s={s})"),
            (s, Interpolation::Quadratic, SpMode::Interpolated) => format!("RIIa-q-SP(s={s})"),
            (s, Interpolation::Quadratic, SpMode::Extrapolated) => format!("RIIa-q-exSP(s={s})"),
            (s, i, sp) => format!("method(s={s},{i:?},{sp:?})"),
        }
    }

    pub fn with_stages(&self, stages: usize) -> Method {
        Method { stages, ..*self }
    }
}

/// Per-material-point history carried between steps.
#[derive(Clone, Copy, Debug)]
pub struct GpHistory {
    pub state: PlasticState,
    /// Total strain at the last converged step.
    pub e_n: SymTensor2,
    /// Total strain one step earlier (for quadratic interpolation and
    /// extrapolated switching-point detection).
    pub e_prev: Option<SymTensor2>,
    /// Set when the previous step contained a switching point; the strain
    /// history has a kink there, so quadratic data is downgraded once.
    pub post_sp: bool,
}

impl GpHistory {
    pub fn new() -> GpHistory {
        GpHistory {
            state: PlasticState::default(),
            e_n: SymTensor2::ZERO,
            e_prev: None,
            post_sp: false,
        }
    }

    /// Rolls the history forward after a converged global step.
    pub fn commit(&mut self, result: &StepResult, e_np1: SymTensor2) {
        self.state = result.state;
        self.e_prev = Some(self.e_n);
        self.e_n = e_np1;
        self.post_sp = result.switch.is_some();
    }
}

impl Default for GpHistory {
    fn default() -> Self {
        GpHistory::new()
    }
}

/// Outcome of one material-point step.
pub struct StepResult {
    pub state: PlasticState,
    pub stress: SymTensor2,
    pub tangent: SymTensor4,
    pub plastic: bool,
    /// Normalised step coordinate of the detected switching point, if any.
    pub switch: Option<f64>,
    pub iterations: usize,
    /// The assembled tangent is exact for this step (elastic, full plastic,
    /// or a switching point whose location does not depend on E_{n+1}).
    pub tangent_exact: bool,
}

/// Advances one material point from the committed history to the end-of-step
/// strain `e_np1` using the given method. The history itself is not rolled;
/// call [`GpHistory::commit`] once the global step is accepted.
pub fn step(
    mat: &Material,
    method: &Method,
    hist: &GpHistory,
    e_np1: &SymTensor2,
) -> Result<StepResult, SolverError> {
    let f_trial = mat.yield_function(e_np1, &hist.state.ep, hist.state.alpha);
    if f_trial < 0.0 {
        return Ok(StepResult {
            state: hist.state,
            stress: mat.stress(e_np1, &hist.state.ep),
            tangent: mat.elasticity(),
            plastic: false,
            switch: None,
            iterations: 0,
            tangent_exact: true,
        });
    }

    let tab = Tableau::radau_iia(method.stages);
    // Quadratic data needs a kink-free previous interval.
    let have_prev = hist.e_prev.is_some() && !hist.post_sp;
    let interp = match method.interp {
        Interpolation::Quadratic if !have_prev => Interpolation::Linear,
        other => other,
    };

    let f_n = mat.yield_function(&hist.e_n, &hist.state.ep, hist.state.alpha);
    let scale = mat.yield_radius(hist.state.alpha).max(1.0);
    let mut switch = None;
    let mut sp_exact_tangent = false;
    let mut start_strain = hist.e_n;

    if method.sp != SpMode::Off && f_n < -SP_TRIGGER_TOL * scale {
        let ftr = |e: SymTensor2| mat.yield_function(&e, &hist.state.ep, hist.state.alpha);
        let located = match method.sp {
            SpMode::Extrapolated if have_prev => {
                let e_prev = hist.e_prev.unwrap();
                let root =
                    find_first_root(|x| ftr(strain_path::extrapolated_strain(&e_prev, &hist.e_n, x)), 0.0, 1.0);
                root.map(|x| {
                    sp_exact_tangent = true;
                    (x, strain_path::extrapolated_strain(&e_prev, &hist.e_n, x))
                })
            }
            _ => None,
        };
        // Fall back to interpolated detection when extrapolation does not
        // bracket the crossing (or has no history yet).
        let located = located.or_else(|| {
            let e_prev = hist.e_prev;
            let det_interp = if interp == Interpolation::Quadratic && method.sp == SpMode::Interpolated
            {
                Interpolation::Quadratic
            } else {
                Interpolation::Linear
            };
            find_first_root(
                |x| ftr(strain_path::stage_strain(det_interp, e_prev.as_ref(), &hist.e_n, e_np1, x)),
                0.0,
                1.0,
            )
            .map(|x| {
                (
                    x,
                    strain_path::stage_strain(det_interp, e_prev.as_ref(), &hist.e_n, e_np1, x),
                )
            })
        });
        if let Some((x, e_sp)) = located {
            switch = Some(x);
            start_strain = e_sp;
        }
    }

    // Stage strains: after a switching point they always run linearly from
    // the switch strain to the end-of-step strain.
    let (stage_strains, cbars): (Vec<SymTensor2>, Vec<f64>) = if switch.is_some() {
        tab.c
            .iter()
            .map(|&ci| {
                (
                    strain_path::stage_strain(Interpolation::Linear, None, &start_strain, e_np1, ci),
                    ci,
                )
            })
            .unzip()
    } else {
        tab.c
            .iter()
            .map(|&ci| {
                (
                    strain_path::stage_strain(interp, hist.e_prev.as_ref(), &hist.e_n, e_np1, ci),
                    cbar(interp, ci),
                )
            })
            .unzip()
    };

    let provider = FixedStageStrains::new(&stage_strains);
    let sol = solve_stages(mat, &tab, &provider, &hist.state)?;
    let tangent = consistent_tangent(mat, &tab, &provider, &hist.state, &sol, &cbars)?;
    let stress = mat.stress(e_np1, &sol.state.ep);
    let iterations = sol.iterations;
    // With interpolated detection the switch strain depends on E_{n+1}; that
    // indirect sensitivity is not assembled, so the tangent is approximate.
    let tangent_exact = switch.is_none() || sp_exact_tangent;
    Ok(StepResult {
        state: sol.state,
        stress,
        tangent,
        plastic: true,
        switch,
        iterations,
        tangent_exact,
    })
}
