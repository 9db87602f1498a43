//! Minimal displacement-controlled total-Lagrangian finite-element solver:
//! trilinear hexahedra, 2x2x2 Gauss quadrature, Green-Lagrange strain,
//! dense LU for the condensed free-DOF system.
//!
//! All loading is prescribed displacement, linear in time (one rate per
//! driven degree of freedom), so a step only needs the target time.

use crate::material::{Material, PlasticState};
use crate::stage_solver::{self, GpHistory, Method, SolverError, StepResult};
use crate::tensor::{SymTensor2, WEIGHTS};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

/// Gauss points per element (2x2x2).
pub const GP_PER_ELEM: usize = 8;

const NEWTON_MAX_ITERS: usize = 30;
/// Relative drop of the residual norm required for convergence.
const NEWTON_RTOL: f64 = 1e-10;
/// Absolute floor relative to the first residual of the whole run.
const NEWTON_ATOL_REL: f64 = 1e-12;
/// A stalled residual this far below the initial one counts as converged.
const NEWTON_STALL_RTOL: f64 = 1e-7;
/// Smallest Newton step-length fraction tried by the backtracking search.
const LINE_SEARCH_MIN: f64 = 1.0 / 64.0;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("material point failed at element {element}, gauss point {gp}: {source}")]
    MaterialPoint {
        element: usize,
        gp: usize,
        source: SolverError,
    },
    #[error("global Newton did not converge at t = {time} (residual {residual:.3e})")]
    NonConvergence { time: f64, residual: f64 },
    #[error("singular global stiffness at t = {time}")]
    SingularStiffness { time: f64 },
}

/// Boundary condition of a single degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DofBc {
    Free,
    Fixed,
    /// Prescribed displacement u(t) = rate * t.
    Driven(f64),
}

pub struct Mesh {
    /// Reference coordinates.
    pub nodes: Vec<[f64; 3]>,
    /// Hex8 connectivity, right-handed node ordering.
    pub elements: Vec<[usize; 8]>,
}

impl Mesh {
    pub fn n_dofs(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn n_gps(&self) -> usize {
        self.elements.len() * GP_PER_ELEM
    }
}

pub struct Problem {
    pub mesh: Mesh,
    pub material: Material,
    /// One entry per degree of freedom (3 per node, x/y/z fastest).
    pub bcs: Vec<DofBc>,
}

/// Per-Gauss-point record captured at an evaluation time.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct GpRecord {
    pub stress: SymTensor2,
    pub strain: SymTensor2,
    pub state: PlasticState,
}

/// Solution snapshot at one evaluation time.
pub struct Snapshot {
    pub time: f64,
    pub gps: Vec<GpRecord>,
}

/// Replayable material-point step, captured for tangent verification.
#[derive(Clone, Copy, Debug)]
pub struct TangentSample {
    pub material: Material,
    pub method: Method,
    pub history: GpHistory,
    pub strain: SymTensor2,
}

#[derive(Default)]
pub struct RunOptions {
    /// Capture up to this many plastic steps with an exactly assembled
    /// tangent for later finite-difference verification.
    pub tangent_samples: usize,
    /// Record the global Newton residual history of every time step.
    pub log_newton: bool,
}

pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub tangent_samples: Vec<TangentSample>,
    /// Residual norms per Newton iteration, one vector per time step.
    pub newton_histories: Vec<Vec<f64>>,
}

/// Natural coordinates of the hex8 corners.
const XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

fn gauss_points() -> [[f64; 3]; GP_PER_ELEM] {
    let g = 1.0 / 3.0_f64.sqrt();
    let mut pts = [[0.0; 3]; GP_PER_ELEM];
    for (k, p) in pts.iter_mut().enumerate() {
        *p = [
            if k & 1 == 0 { -g } else { g },
            if k & 2 == 0 { -g } else { g },
            if k & 4 == 0 { -g } else { g },
        ];
    }
    pts
}

fn shape_derivs(xi: &[f64; 3]) -> [[f64; 3]; 8] {
    let mut d = [[0.0; 3]; 8];
    for a in 0..8 {
        let [xa, ya, za] = XI[a];
        d[a] = [
            0.125 * xa * (1.0 + ya * xi[1]) * (1.0 + za * xi[2]),
            0.125 * ya * (1.0 + xa * xi[0]) * (1.0 + za * xi[2]),
            0.125 * za * (1.0 + xa * xi[0]) * (1.0 + ya * xi[1]),
        ];
    }
    d
}

/// Gradients with respect to reference coordinates plus the Jacobian
/// determinant, precomputed per Gauss point at construction.
struct GpGeometry {
    grad: [[f64; 3]; 8],
    detj: f64,
}

fn gp_geometry(nodes: &[[f64; 3]], conn: &[usize; 8]) -> Vec<GpGeometry> {
    gauss_points()
        .iter()
        .map(|xi| {
            let dn = shape_derivs(xi);
            let mut j = [[0.0; 3]; 3];
            for a in 0..8 {
                let x = nodes[conn[a]];
                for r in 0..3 {
                    for c in 0..3 {
                        j[r][c] += dn[a][r] * x[c];
                    }
                }
            }
            let m = nalgebra::Matrix3::from_fn(|r, c| j[r][c]);
            let detj = m.determinant();
            assert!(detj > 0.0, "inverted or degenerate element (detJ = {detj})");
            let inv = m.try_inverse().expect("singular element Jacobian");
            let mut grad = [[0.0; 3]; 8];
            for a in 0..8 {
                for c in 0..3 {
                    // dN/dX_c = sum_r (J^-1)_cr dN/dxi_r  with J_rc = dX_c/dxi_r
                    let mut v = 0.0;
                    for r in 0..3 {
                        v += inv[(r, c)] * dn[a][r];
                    }
                    grad[a][c] = v;
                }
            }
            GpGeometry { grad, detj }
        })
        .collect()
}

/// Deformation gradient F = I + sum_a u_a (x) gradN_a.
fn deformation_gradient(grad: &[[f64; 3]; 8], ue: &[[f64; 3]; 8]) -> [[f64; 3]; 3] {
    let mut f = [[0.0; 3]; 3];
    for m in 0..3 {
        f[m][m] = 1.0;
    }
    for a in 0..8 {
        for m in 0..3 {
            for i in 0..3 {
                f[m][i] += ue[a][m] * grad[a][i];
            }
        }
    }
    f
}

/// Green-Lagrange strain E = (F^T F - I) / 2.
fn green_lagrange(f: &[[f64; 3]; 3]) -> SymTensor2 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for m in 0..3 {
                v += f[m][i] * f[m][j];
            }
            c[i][j] = v;
        }
    }
    for i in 0..3 {
        c[i][i] -= 1.0;
    }
    for row in &mut c {
        for v in row {
            *v *= 0.5;
        }
    }
    SymTensor2::from_mat3(&c)
}

/// Strain-displacement matrix in the crate's component ordering:
/// B[I][3a+m] = dE_I / du_{a,m} for the stored (single) components.
fn b_matrix(grad: &[[f64; 3]; 8], f: &[[f64; 3]; 3]) -> [[f64; 24]; 6] {
    const IJ: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)];
    let mut b = [[0.0; 24]; 6];
    for (row, &(i, j)) in IJ.iter().enumerate() {
        for a in 0..8 {
            for m in 0..3 {
                b[row][3 * a + m] = 0.5 * (f[m][i] * grad[a][j] + f[m][j] * grad[a][i]);
            }
        }
    }
    b
}

struct ElementResult {
    f_int: [f64; 24],
    stiffness: Box<[[f64; 24]; 24]>,
    steps: Vec<StepResult>,
    strains: Vec<SymTensor2>,
}

/// Simulation state advanced step by step.
pub struct Simulation<'a> {
    problem: &'a Problem,
    method: Method,
    geometry: Vec<Vec<GpGeometry>>,
    histories: Vec<GpHistory>,
    u: DVector<f64>,
    free: Vec<usize>,
    time: f64,
    /// Residual scale fixed by the first nonzero residual of the run.
    force_scale: f64,
}

impl<'a> Simulation<'a> {
    pub fn new(problem: &'a Problem, method: Method) -> Simulation<'a> {
        assert_eq!(problem.bcs.len(), problem.mesh.n_dofs());
        let geometry = problem
            .mesh
            .elements
            .iter()
            .map(|conn| gp_geometry(&problem.mesh.nodes, conn))
            .collect();
        let free = problem
            .bcs
            .iter()
            .enumerate()
            .filter(|(_, bc)| matches!(bc, DofBc::Free))
            .map(|(d, _)| d)
            .collect();
        Simulation {
            problem,
            method,
            geometry,
            histories: vec![GpHistory::new(); problem.mesh.n_gps()],
            u: DVector::zeros(problem.mesh.n_dofs()),
            free,
            time: 0.0,
            force_scale: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn element_results(&self, u: &DVector<f64>) -> Result<Vec<ElementResult>, FemError> {
        let mesh = &self.problem.mesh;
        let mat = &self.problem.material;
        let method = &self.method;
        mesh.elements
            .par_iter()
            .enumerate()
            .map(|(e, conn)| {
                let mut ue = [[0.0; 3]; 8];
                for a in 0..8 {
                    for m in 0..3 {
                        ue[a][m] = u[3 * conn[a] + m];
                    }
                }
                let mut f_int = [0.0; 24];
                let mut ke = Box::new([[0.0; 24]; 24]);
                let mut steps = Vec::with_capacity(GP_PER_ELEM);
                let mut strains = Vec::with_capacity(GP_PER_ELEM);
                for (g, geo) in self.geometry[e].iter().enumerate() {
                    let fgrad = deformation_gradient(&geo.grad, &ue);
                    let strain = green_lagrange(&fgrad);
                    let hist = &self.histories[e * GP_PER_ELEM + g];
                    let step = stage_solver::step(mat, method, hist, &strain).map_err(|source| {
                        FemError::MaterialPoint {
                            element: e,
                            gp: g,
                            source,
                        }
                    })?;
                    let b = b_matrix(&geo.grad, &fgrad);
                    let ws: [f64; 6] =
                        std::array::from_fn(|i| WEIGHTS[i] * step.stress.0[i] * geo.detj);
                    for col in 0..24 {
                        let mut v = 0.0;
                        for i in 0..6 {
                            v += b[i][col] * ws[i];
                        }
                        f_int[col] += v;
                    }
                    // material stiffness  B^T diag(W) Cep B
                    let mut cb = [[0.0; 24]; 6];
                    for i in 0..6 {
                        for col in 0..24 {
                            let mut v = 0.0;
                            for j in 0..6 {
                                v += step.tangent.0[i][j] * b[j][col];
                            }
                            cb[i][col] = v;
                        }
                    }
                    for row in 0..24 {
                        for col in 0..24 {
                            let mut v = 0.0;
                            for i in 0..6 {
                                v += b[i][row] * WEIGHTS[i] * cb[i][col];
                            }
                            ke[row][col] += v * geo.detj;
                        }
                    }
                    // geometric stiffness  (grad_a . S . grad_b) I3
                    let smat = step.stress.to_mat3();
                    for a in 0..8 {
                        let sa: [f64; 3] = std::array::from_fn(|j| {
                            (0..3).map(|i| geo.grad[a][i] * smat[i][j]).sum()
                        });
                        for b_ in 0..8 {
                            let mut v = 0.0;
                            for j in 0..3 {
                                v += sa[j] * geo.grad[b_][j];
                            }
                            v *= geo.detj;
                            for m in 0..3 {
                                ke[3 * a + m][3 * b_ + m] += v;
                            }
                        }
                    }
                    steps.push(step);
                    strains.push(strain);
                }
                Ok(ElementResult {
                    f_int,
                    stiffness: ke,
                    steps,
                    strains,
                })
            })
            .collect()
    }

    /// Advances the simulation to `t_next`. Returns the per-GP step results
    /// committed at the new time together with the Newton residual history.
    pub fn advance(
        &mut self,
        t_next: f64,
    ) -> Result<(Vec<StepResult>, Vec<SymTensor2>, Vec<f64>), FemError> {
        let ndof = self.problem.mesh.n_dofs();
        let mut u = self.u.clone();
        for d in 0..ndof {
            match self.problem.bcs[d] {
                DofBc::Free => {}
                DofBc::Fixed => u[d] = 0.0,
                DofBc::Driven(rate) => u[d] = rate * t_next,
            }
        }

        let nf = self.free.len();
        let mut residuals = Vec::new();
        let mut results = self.element_results(&u)?;
        if nf > 0 {
            let condense = |results: &[ElementResult]| {
                let mut r = DVector::zeros(nf);
                for (e, er) in results.iter().enumerate() {
                    let conn = &self.problem.mesh.elements[e];
                    for a in 0..8 {
                        for m in 0..3 {
                            let dof = 3 * conn[a] + m;
                            if let Ok(k) = self.free.binary_search(&dof) {
                                r[k] += er.f_int[3 * a + m];
                            }
                        }
                    }
                }
                r
            };
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITERS {
                let r = condense(&results);
                let rn = r.amax();
                residuals.push(rn);
                if self.force_scale == 0.0 && rn > 0.0 {
                    self.force_scale = rn;
                }
                let tol =
                    (NEWTON_RTOL * residuals[0]).max(NEWTON_ATOL_REL * self.force_scale.max(1.0));
                if rn <= tol {
                    converged = true;
                    break;
                }
                // Round-off stall: the residual has stopped decreasing while
                // already many decades below the initial out-of-balance force.
                let n = residuals.len();
                if n >= 2
                    && rn >= 0.5 * residuals[n - 2]
                    && rn <= NEWTON_STALL_RTOL * residuals[0]
                {
                    converged = true;
                    break;
                }
                let mut k = DMatrix::zeros(nf, nf);
                for (e, er) in results.iter().enumerate() {
                    let conn = &self.problem.mesh.elements[e];
                    for a in 0..8 {
                        for m in 0..3 {
                            let row_dof = 3 * conn[a] + m;
                            let Ok(rk) = self.free.binary_search(&row_dof) else {
                                continue;
                            };
                            for b in 0..8 {
                                for n in 0..3 {
                                    let col_dof = 3 * conn[b] + n;
                                    if let Ok(ck) = self.free.binary_search(&col_dof) {
                                        k[(rk, ck)] += er.stiffness[3 * a + m][3 * b + n];
                                    }
                                }
                            }
                        }
                    }
                }
                let du = k
                    .lu()
                    .solve(&(-&r))
                    .ok_or(FemError::SingularStiffness { time: t_next })?;
                // Backtracking line search on the residual norm: the full
                // step is tried first so terminal quadratic convergence is
                // unaffected; scaled-back steps only kick in when the full
                // update overshoots (e.g. an elastic/plastic front sweeping
                // through the mesh in a coarse increment).
                let mut alpha = 1.0;
                loop {
                    let mut u_trial = u.clone();
                    for (k_idx, &dof) in self.free.iter().enumerate() {
                        u_trial[dof] += alpha * du[k_idx];
                    }
                    match self.element_results(&u_trial) {
                        Ok(trial) if alpha <= LINE_SEARCH_MIN || condense(&trial).amax() < rn => {
                            u = u_trial;
                            results = trial;
                            break;
                        }
                        Err(_) if alpha <= LINE_SEARCH_MIN => {
                            return Err(FemError::NonConvergence {
                                time: t_next,
                                residual: rn,
                            });
                        }
                        _ => alpha *= 0.5,
                    }
                }
            }
            if !converged {
                return Err(FemError::NonConvergence {
                    time: t_next,
                    residual: *residuals.last().unwrap(),
                });
            }
        }

        // Commit: roll every Gauss-point history to the converged state.
        let mut steps = Vec::with_capacity(self.problem.mesh.n_gps());
        let mut strains = Vec::with_capacity(self.problem.mesh.n_gps());
        for (e, er) in results.into_iter().enumerate() {
            for (g, (step, strain)) in er.steps.into_iter().zip(er.strains).enumerate() {
                self.histories[e * GP_PER_ELEM + g].commit(&step, strain);
                steps.push(step);
                strains.push(strain);
            }
        }
        self.u = u;
        self.time = t_next;
        Ok((steps, strains, residuals))
    }

    pub fn history(&self, gp: usize) -> &GpHistory {
        &self.histories[gp]
    }

    /// Integration weight (Jacobian determinant) of every Gauss point.
    pub fn gauss_volumes(&self) -> Vec<f64> {
        self.geometry
            .iter()
            .flat_map(|geos| geos.iter().map(|g| g.detj))
            .collect()
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.u
    }
}

/// Runs a full simulation with constant step size, capturing snapshots at the
/// requested evaluation times (which must be integer multiples of `dt`).
pub fn run(
    problem: &Problem,
    method: Method,
    dt: f64,
    eval_times: &[f64],
    opts: &RunOptions,
) -> Result<RunOutput, FemError> {
    let t_end = eval_times
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    let n_steps = (t_end / dt).round() as usize;
    assert!(
        (n_steps as f64 * dt - t_end).abs() <= 1e-9 * t_end.max(1.0),
        "t_end must be a multiple of dt"
    );
    for &te in eval_times {
        let k = (te / dt).round();
        assert!(
            (k * dt - te).abs() <= 1e-9 * te.max(1.0),
            "evaluation time {te} is not a multiple of dt {dt}"
        );
    }

    let mut sim = Simulation::new(problem, method);
    let mut snapshots = Vec::new();
    let mut tangent_samples = Vec::new();
    let mut newton_histories = Vec::new();
    for step_idx in 1..=n_steps {
        let t = step_idx as f64 * dt;
        // Capture histories before the step so plastic steps can be replayed.
        let want_samples = tangent_samples.len() < opts.tangent_samples;
        let pre: Option<Vec<GpHistory>> = want_samples.then(|| sim.histories.clone());
        let (steps, strains, residuals) = sim.advance(t)?;
        if let Some(pre) = pre {
            for (gp, step) in steps.iter().enumerate() {
                if tangent_samples.len() >= opts.tangent_samples {
                    break;
                }
                if step.plastic && step.tangent_exact {
                    tangent_samples.push(TangentSample {
                        material: problem.material,
                        method,
                        history: pre[gp],
                        strain: strains[gp],
                    });
                }
            }
        }
        if opts.log_newton {
            newton_histories.push(residuals);
        }
        if eval_times
            .iter()
            .any(|&te| ((te / dt).round() as usize) == step_idx)
        {
            let gps = steps
                .iter()
                .zip(&strains)
                .map(|(s, e)| GpRecord {
                    stress: s.stress,
                    strain: *e,
                    state: s.state,
                })
                .collect();
            snapshots.push(Snapshot { time: t, gps });
        }
    }
    Ok(RunOutput {
        snapshots,
        tangent_samples,
        newton_histories,
    })
}
