//! Symmetric second- and fourth-order tensor arithmetic in 6-component storage.
//!
//! Component ordering is fixed as (xx, yy, zz, xy, yz, zx) across the whole
//! crate. Off-diagonal components are stored once, as true tensor components
//! (no engineering-shear doubling); the contraction weight of 2 for the
//! off-diagonal entries is applied inside the contraction and norm routines.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Contraction weights for the (xx, yy, zz, xy, yz, zx) storage.
pub const WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Symmetric second-order tensor stored as (xx, yy, zz, xy, yz, zx).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2(pub [f64; 6]);

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2([0.0; 6]);

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, yz: f64, zx: f64) -> Self {
        SymTensor2([xx, yy, zz, xy, yz, zx])
    }

    /// The second-order identity tensor.
    pub fn identity() -> Self {
        SymTensor2([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn diag(xx: f64, yy: f64, zz: f64) -> Self {
        SymTensor2([xx, yy, zz, 0.0, 0.0, 0.0])
    }

    pub fn from_mat3(m: &[[f64; 3]; 3]) -> Self {
        SymTensor2([
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[1][2] + m[2][1]),
            0.5 * (m[2][0] + m[0][2]),
        ])
    }

    pub fn to_mat3(&self) -> [[f64; 3]; 3] {
        let [xx, yy, zz, xy, yz, zx] = self.0;
        [[xx, xy, zx], [xy, yy, yz], [zx, yz, zz]]
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Deviatoric part T - (1/3) tr(T) 1.
    pub fn deviator(&self) -> SymTensor2 {
        let p = self.trace() / 3.0;
        SymTensor2([
            self.0[0] - p,
            self.0[1] - p,
            self.0[2] - p,
            self.0[3],
            self.0[4],
            self.0[5],
        ])
    }

    /// Full double contraction A : B, counting off-diagonal components twice.
    pub fn contract(&self, other: &SymTensor2) -> f64 {
        let mut acc = 0.0;
        for i in 0..6 {
            acc += WEIGHTS[i] * self.0[i] * other.0[i];
        }
        acc
    }

    /// sqrt(T : T).
    pub fn norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn scale(&self, a: f64) -> SymTensor2 {
        let mut out = self.0;
        for v in &mut out {
            *v *= a;
        }
        SymTensor2(out)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        let mut out = self.0;
        for i in 0..6 {
            out[i] += rhs.0[i];
        }
        SymTensor2(out)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        let mut out = self.0;
        for i in 0..6 {
            out[i] -= rhs.0[i];
        }
        SymTensor2(out)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, rhs: SymTensor2) {
        for i in 0..6 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, rhs: SymTensor2) {
        for i in 0..6 {
            self.0[i] -= rhs.0[i];
        }
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, a: f64) -> SymTensor2 {
        self.scale(a)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        self.scale(-1.0)
    }
}

/// Symmetric fourth-order tensor as a 6x6 matrix acting on [`SymTensor2`].
///
/// The matrix entries are the raw partial derivatives d(C:T)_I / dT_J of the
/// stored components, i.e. the contraction weights for the off-diagonal
/// columns are baked into the matrix on construction. With this convention,
/// `apply` is a plain matrix-vector product, composition of two maps is the
/// plain matrix product, and the matrix can be compared entry-by-entry
/// against central finite differences of a stress update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymTensor4(pub [[f64; 6]; 6]);

impl SymTensor4 {
    pub const ZERO: SymTensor4 = SymTensor4([[0.0; 6]; 6]);

    /// The fourth-order identity: apply(Id, T) = T.
    pub fn identity() -> Self {
        let mut m = [[0.0; 6]; 6];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        SymTensor4(m)
    }

    /// Dyadic product A (x) B with apply(dyad(A,B), T) = A * (B : T).
    pub fn dyad(a: &SymTensor2, b: &SymTensor2) -> Self {
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] = a.0[i] * b.0[j] * WEIGHTS[j];
            }
        }
        SymTensor4(m)
    }

    /// Deviatoric projector with apply(P, T) = deviator(T) and P : P = P.
    pub fn dev_projector() -> Self {
        let one = SymTensor2::identity();
        SymTensor4::identity() - SymTensor4::dyad(&one, &one).scale(1.0 / 3.0)
    }

    pub fn apply(&self, t: &SymTensor2) -> SymTensor2 {
        let mut out = [0.0; 6];
        for i in 0..6 {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += self.0[i][j] * t.0[j];
            }
            out[i] = acc;
        }
        SymTensor2(out)
    }

    /// Composition C : D such that apply(compose, T) = apply(C, apply(D, T)).
    pub fn compose(&self, other: &SymTensor4) -> SymTensor4 {
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            for k in 0..6 {
                let mut acc = 0.0;
                for j in 0..6 {
                    acc += self.0[i][j] * other.0[j][k];
                }
                m[i][k] = acc;
            }
        }
        SymTensor4(m)
    }

    pub fn scale(&self, a: f64) -> SymTensor4 {
        let mut m = self.0;
        for row in &mut m {
            for v in row {
                *v *= a;
            }
        }
        SymTensor4(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

impl Add for SymTensor4 {
    type Output = SymTensor4;
    fn add(self, rhs: SymTensor4) -> SymTensor4 {
        let mut m = self.0;
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += rhs.0[i][j];
            }
        }
        SymTensor4(m)
    }
}

impl Sub for SymTensor4 {
    type Output = SymTensor4;
    fn sub(self, rhs: SymTensor4) -> SymTensor4 {
        let mut m = self.0;
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] -= rhs.0[i][j];
            }
        }
        SymTensor4(m)
    }
}
