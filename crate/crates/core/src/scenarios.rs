//! Built-in benchmark scenarios: homogeneous cube tests (simple shear,
//! biaxial stretch and its degenerate-yield-surface variant), a
//! plane-stress-like material-point problem with an analytically reachable
//! elastic/plastic switching time, and the radially contracted quarter
//! annulus in four hardening variants.

use crate::fem::{DofBc, Mesh, Problem};
use crate::material::{Material, PlasticState};
use crate::stage_solver::{self, SolverError, StageStrains};
use crate::strain_path::find_first_root;
use crate::butcher::Tableau;
use crate::tensor::{SymTensor2, SymTensor4};

/// Geometric coincidence tolerance for mesh-based BC selection.
const COORD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Fem,
    /// Strain-driven single material point with a plane-stress-like
    /// out-of-plane coupling (E_zz tracks the plastic strain).
    MaterialPoint,
}

pub struct Scenario {
    pub name: &'static str,
    pub material: Material,
    pub kind: Kind,
    pub eval_times: Vec<f64>,
    pub dt_ladder: Vec<f64>,
    pub ref_dt: f64,
}

pub const SCENARIO_NAMES: [&str; 8] = [
    "simple_shear",
    "biaxial",
    "case_I",
    "case_II",
    "annulus_A0",
    "annulus_B0",
    "annulus_A",
    "annulus_B",
];

fn ladder(top: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| top / 2.0_f64.powi(k as i32)).collect()
}

impl Scenario {
    pub fn by_name(name: &str) -> Option<Scenario> {
        let biaxial_mat = Material {
            youngs: 700_000.0,
            poisson: 0.2,
            sigma_y: 875.0,
            sigma_sat: 211.0,
            hardening_h: 1500.0,
            delta: 300.0,
        };
        let annulus = |name, sigma_y, sigma_sat, hardening_h, delta| Scenario {
            name,
            material: Material {
                youngs: 68_900.0,
                poisson: 0.33,
                sigma_y,
                sigma_sat,
                hardening_h,
                delta,
            },
            kind: Kind::Fem,
            eval_times: vec![0.10, 0.25, 0.50],
            dt_ladder: ladder(0.05, 5),
            ref_dt: 1e-4,
        };
        match name {
            "simple_shear" => Some(Scenario {
                name: "simple_shear",
                material: Material {
                    youngs: 210_000.0,
                    poisson: 0.3,
                    sigma_y: 460.0,
                    sigma_sat: 0.0,
                    hardening_h: 10_000.0,
                    delta: 0.0,
                },
                kind: Kind::Fem,
                eval_times: vec![20.0, 60.0, 100.0],
                dt_ladder: ladder(2.5, 6),
                ref_dt: 1e-4,
            }),
            "biaxial" => Some(Scenario {
                name: "biaxial",
                material: biaxial_mat,
                kind: Kind::Fem,
                eval_times: vec![1.0, 2.0, 5.0, 10.0],
                dt_ladder: ladder(0.125, 6),
                ref_dt: 1e-4,
            }),
            "case_I" => Some(Scenario {
                name: "case_I",
                material: Material {
                    sigma_y: 0.0,
                    ..biaxial_mat
                },
                kind: Kind::Fem,
                eval_times: vec![1.5, 3.0],
                dt_ladder: ladder(0.25, 5),
                ref_dt: 1e-4,
            }),
            "case_II" => Some(Scenario {
                name: "case_II",
                material: Material {
                    poisson: 0.0,
                    ..biaxial_mat
                },
                kind: Kind::MaterialPoint,
                eval_times: vec![1.0, 2.0, 5.0, 10.0],
                dt_ladder: ladder(0.25, 5),
                ref_dt: 1e-5,
            }),
            "annulus_A0" => Some(annulus("annulus_A0", 0.0, 0.0, 10_000.0, 0.0)),
            "annulus_B0" => Some(annulus("annulus_B0", 0.0, 200.0, 3_000.0, 5_000.0)),
            "annulus_A" => Some(annulus("annulus_A", 300.0, 0.0, 10_000.0, 0.0)),
            "annulus_B" => Some(annulus("annulus_B", 300.0, 200.0, 3_000.0, 5_000.0)),
            _ => None,
        }
    }

    /// FEM problem (mesh + boundary conditions); `None` for the
    /// material-point scenario.
    pub fn problem(&self) -> Option<Problem> {
        match self.name {
            "simple_shear" => Some(simple_shear_problem(self.material)),
            "biaxial" | "case_I" => Some(biaxial_problem(self.material)),
            name if name.starts_with("annulus") => Some(annulus_problem(self.material)),
            _ => None,
        }
    }
}

fn unit_cube_mesh() -> Mesh {
    let mut nodes = Vec::with_capacity(8);
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..2 {
                nodes.push([i as f64, j as f64, k as f64]);
            }
        }
    }
    Mesh {
        nodes,
        elements: vec![[0, 1, 3, 2, 4, 5, 7, 6]],
    }
}

/// Unit cube in simple shear: the z = 0 face is clamped, the z = 1 face is
/// dragged in y with rate 0.001, and all other displacement components are
/// suppressed so the deformation state stays exactly homogeneous.
fn simple_shear_problem(material: Material) -> Problem {
    let mesh = unit_cube_mesh();
    let mut bcs = vec![DofBc::Fixed; mesh.n_dofs()];
    for (n, x) in mesh.nodes.iter().enumerate() {
        if x[2] > 0.5 {
            bcs[3 * n + 1] = DofBc::Driven(0.001);
        }
    }
    Problem {
        mesh,
        material,
        bcs,
    }
}

/// Unit cube under biaxial stretch: E_xx = 0.0005 t (one x-face held, the
/// other pulled) and E_yy = 0.002 t (both y-faces pulled apart at 0.001),
/// the z = 1 face left free so a plane-stress state (S_zz = 0) develops.
fn biaxial_problem(material: Material) -> Problem {
    let mesh = unit_cube_mesh();
    let mut bcs = vec![DofBc::Free; mesh.n_dofs()];
    for (n, x) in mesh.nodes.iter().enumerate() {
        bcs[3 * n] = if x[0] < 0.5 {
            DofBc::Fixed
        } else {
            DofBc::Driven(0.0005)
        };
        bcs[3 * n + 1] = if x[1] > 0.5 {
            DofBc::Driven(0.001)
        } else {
            DofBc::Driven(-0.001)
        };
        if x[2] < 0.5 {
            bcs[3 * n + 2] = DofBc::Fixed;
        }
    }
    Problem {
        mesh,
        material,
        bcs,
    }
}

/// Quarter annulus (r_i = 20, r_o = 40, thickness 1), 10 radial x 10
/// circumferential x 1 elements. Symmetry planes are rollers, z = 0 is
/// fixed in z, and the inner rim is pulled radially inwards with unit rate.
pub fn annulus_mesh() -> Mesh {
    const NR: usize = 10;
    const NT: usize = 10;
    let (r_i, r_o) = (20.0, 40.0);
    let mut nodes = Vec::with_capacity(2 * (NR + 1) * (NT + 1));
    for zl in 0..2 {
        for k in 0..=NR {
            let r = r_i + (r_o - r_i) * k as f64 / NR as f64;
            for m in 0..=NT {
                let th = std::f64::consts::FRAC_PI_2 * m as f64 / NT as f64;
                nodes.push([r * th.cos(), r * th.sin(), zl as f64]);
            }
        }
    }
    let layer = (NR + 1) * (NT + 1);
    let idx = |zl: usize, k: usize, m: usize| zl * layer + k * (NT + 1) + m;
    let mut elements = Vec::with_capacity(NR * NT);
    for k in 0..NR {
        for m in 0..NT {
            elements.push([
                idx(0, k, m),
                idx(0, k + 1, m),
                idx(0, k + 1, m + 1),
                idx(0, k, m + 1),
                idx(1, k, m),
                idx(1, k + 1, m),
                idx(1, k + 1, m + 1),
                idx(1, k, m + 1),
            ]);
        }
    }
    Mesh { nodes, elements }
}

fn annulus_problem(material: Material) -> Problem {
    let mesh = annulus_mesh();
    let r_i = 20.0;
    let mut bcs = vec![DofBc::Free; mesh.n_dofs()];
    for (n, x) in mesh.nodes.iter().enumerate() {
        if x[2].abs() < COORD_TOL {
            bcs[3 * n + 2] = DofBc::Fixed;
        }
        if x[0].abs() < COORD_TOL {
            bcs[3 * n] = DofBc::Fixed; // theta = pi/2 symmetry plane
        }
        if x[1].abs() < COORD_TOL {
            bcs[3 * n + 1] = DofBc::Fixed; // theta = 0 symmetry plane
        }
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if (r - r_i).abs() < 1e-6 * r_i {
            let (c, s) = (x[0] / r, x[1] / r);
            bcs[3 * n] = DofBc::Driven(-c);
            if s.abs() > COORD_TOL {
                bcs[3 * n + 1] = DofBc::Driven(-s);
            }
        }
    }
    Problem {
        mesh,
        material,
        bcs,
    }
}

/// Prescribed in-plane strain rates of the material-point scenario.
pub const MP_RATE_XX: f64 = 0.0005;
pub const MP_RATE_YY: f64 = 0.002;

/// Stage strains of the material-point scenario: in-plane components are
/// prescribed exactly (no interpolation error) while E_zz tracks the unknown
/// stage plastic strain so S_zz = 0 holds pointwise (nu = 0).
struct OutOfPlaneCoupled {
    in_plane: Vec<(f64, f64)>,
}

impl StageStrains for OutOfPlaneCoupled {
    fn deviator(&self, stage: usize, ep_stage: &SymTensor2) -> SymTensor2 {
        let (exx, eyy) = self.in_plane[stage];
        SymTensor2::diag(exx, eyy, ep_stage.0[2]).deviator()
    }

    fn ddev_dep(&self, _stage: usize) -> SymTensor4 {
        // dE/dEp is the unit zz tensor; its deviator fills column 2
        let col = SymTensor2::diag(0.0, 0.0, 1.0).deviator();
        let mut d = SymTensor4::ZERO;
        for i in 0..6 {
            d.0[i][2] = col.0[i];
        }
        d
    }
}

/// One sampled instant of a material-point trajectory.
#[derive(Clone, Copy, Debug)]
pub struct MpSample {
    pub time: f64,
    pub state: PlasticState,
    /// Total strain including the out-of-plane component E_zz = Ep_zz.
    pub strain: SymTensor2,
    pub stress: SymTensor2,
}

pub struct MpRun {
    pub samples: Vec<MpSample>,
    /// First detected elastic/plastic switching time, if SP handling is on.
    pub t_switch: Option<f64>,
}

/// Integrates the material-point scenario with exact prescribed stage
/// strains. With `sp` enabled, the elastic/plastic transition inside a step
/// is located on the exact strain path and the stage system runs on the
/// reduced interval; the state is frozen before the switch.
pub fn run_material_point(
    mat: &Material,
    stages: usize,
    sp: bool,
    dt: f64,
    eval_times: &[f64],
) -> Result<MpRun, SolverError> {
    let tab = Tableau::radau_iia(stages);
    let t_end = eval_times.iter().copied().fold(0.0_f64, f64::max);
    let n_steps = (t_end / dt).round() as usize;
    assert!((n_steps as f64 * dt - t_end).abs() <= 1e-9 * t_end.max(1.0));

    let mut state = PlasticState::default();
    let mut samples = Vec::new();
    let mut t_switch = None;
    for step_idx in 1..=n_steps {
        let t0 = (step_idx - 1) as f64 * dt;
        let t1 = step_idx as f64 * dt;
        // trial yield along the exact path with the plastic state frozen
        let ftr = |t: f64| {
            let e = SymTensor2::diag(MP_RATE_XX * t, MP_RATE_YY * t, state.ep.0[2]);
            mat.yield_function(&e, &state.ep, state.alpha)
        };
        if ftr(t1) < 0.0 {
            // elastic: state frozen
        } else {
            let scale = mat.yield_radius(state.alpha).max(1.0);
            let t_start = if sp && ftr(t0) < -1e-9 * scale {
                match find_first_root(ftr, t0, t1) {
                    Some(ts) => {
                        if t_switch.is_none() {
                            t_switch = Some(ts);
                        }
                        ts
                    }
                    None => t0,
                }
            } else {
                t0
            };
            let in_plane = tab
                .c
                .iter()
                .map(|&ci| {
                    let t = t_start + ci * (t1 - t_start);
                    (MP_RATE_XX * t, MP_RATE_YY * t)
                })
                .collect();
            let provider = OutOfPlaneCoupled { in_plane };
            let sol = stage_solver::solve_stages(mat, &tab, &provider, &state)?;
            state = sol.state;
        }
        if eval_times
            .iter()
            .any(|&te| ((te / dt).round() as usize) == step_idx)
        {
            let strain = SymTensor2::diag(MP_RATE_XX * t1, MP_RATE_YY * t1, state.ep.0[2]);
            samples.push(MpSample {
                time: t1,
                state,
                strain,
                stress: mat.stress(&strain, &state.ep),
            });
        }
    }
    Ok(MpRun { samples, t_switch })
}
