//! Strain interpolation across a time step and scalar root finding for
//! elastic/plastic switching-point detection.
//!
//! All interpolants are parametrised by the normalised step coordinate
//! c in [0, 1] (c = 0 at t_n, c = 1 at t_{n+1}); the quadratic variants also
//! use the strain of the previous step at c = -1 and assume a constant step
//! size across the two intervals.

use crate::tensor::SymTensor2;

/// How stage strains are obtained from the endpoint strains of a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// All stages see the end-of-step strain (classical backward-Euler data).
    Constant,
    /// Linear interpolation between E_n and E_{n+1}.
    Linear,
    /// Quadratic interpolation through E_{n-1}, E_n and E_{n+1}.
    Quadratic,
}

impl Interpolation {
    /// Polynomial degree actually used for the stage data (q).
    pub fn degree(&self) -> usize {
        match self {
            Interpolation::Constant => 0,
            Interpolation::Linear => 1,
            Interpolation::Quadratic => 2,
        }
    }
}

/// Strain at normalised coordinate `c` for the given interpolation. `e_prev`
/// is required only for [`Interpolation::Quadratic`].
pub fn stage_strain(
    interp: Interpolation,
    e_prev: Option<&SymTensor2>,
    e_n: &SymTensor2,
    e_np1: &SymTensor2,
    c: f64,
) -> SymTensor2 {
    match interp {
        Interpolation::Constant => *e_np1,
        Interpolation::Linear => *e_n + (*e_np1 - *e_n).scale(c),
        Interpolation::Quadratic => {
            let e_prev = e_prev.expect("quadratic interpolation needs the previous strain");
            e_prev.scale(0.5 * c * (c - 1.0))
                + e_n.scale(1.0 - c * c)
                + e_np1.scale(0.5 * c * (c + 1.0))
        }
    }
}

/// Sensitivity of the stage strain at coordinate `c` with respect to the
/// end-of-step strain E_{n+1}: stage_strain = ... + cbar * E_{n+1}.
pub fn cbar(interp: Interpolation, c: f64) -> f64 {
    match interp {
        Interpolation::Constant => 1.0,
        Interpolation::Linear => c,
        Interpolation::Quadratic => 0.5 * c * (c + 1.0),
    }
}

/// Forward extrapolation from the previous interval: E_n + x (E_n - E_{n-1}).
/// With a constant step size, x in [0, 1] covers [t_n, t_{n+1}].
pub fn extrapolated_strain(e_prev: &SymTensor2, e_n: &SymTensor2, x: f64) -> SymTensor2 {
    *e_n + (*e_n - *e_prev).scale(x)
}

/// Number of scan subintervals used to bracket the first sign change.
const ROOT_SCAN_STEPS: usize = 64;
/// Absolute residual tolerance for the scalar root solve.
const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITERS: usize = 100;

/// First root of `g` in [a, b], assuming g(a) <= 0, found by scanning for the
/// first sign change and polishing it with a safeguarded secant/bisection
/// iteration. Returns `None` when no sign change exists in the interval.
pub fn find_first_root<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64) -> Option<f64> {
    let ga = g(a);
    if ga > 0.0 {
        return Some(a);
    }
    let mut lo = a;
    let mut glo = ga;
    let mut hi = a;
    let mut ghi = ga;
    let mut bracketed = false;
    for k in 1..=ROOT_SCAN_STEPS {
        let x = a + (b - a) * (k as f64 / ROOT_SCAN_STEPS as f64);
        let gx = g(x);
        if gx >= 0.0 {
            hi = x;
            ghi = gx;
            bracketed = true;
            break;
        }
        lo = x;
        glo = gx;
    }
    if !bracketed {
        return None;
    }
    if ghi.abs() <= ROOT_TOL {
        return Some(hi);
    }
    if glo == 0.0 {
        return Some(lo);
    }
    for _ in 0..ROOT_MAX_ITERS {
        // Secant step, falling back to bisection when it leaves the bracket.
        let mut x = hi - ghi * (hi - lo) / (ghi - glo);
        if !(x > lo && x < hi) || !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx.abs() <= ROOT_TOL || (hi - lo) <= f64::EPSILON * (1.0 + hi.abs()) {
            return Some(x);
        }
        if gx < 0.0 {
            lo = x;
            glo = gx;
        } else {
            hi = x;
            ghi = gx;
        }
    }
    Some(0.5 * (lo + hi))
}
