//! Butcher tableaus for the stiffly-accurate Radau IIa family (s = 1, 2, 3).
//!
//! All three tableaus satisfy a_sj = b_j, so the last stage value is the
//! step result. The classical order is p = 2s - 1.

/// Radau IIa tableau with `stages` stages.
#[derive(Clone, Debug)]
pub struct Tableau {
    pub stages: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Tableau {
    /// Radau IIa tableau for s in {1, 2, 3}; s = 1 is backward Euler.
    ///
    /// # Panics
    /// Panics for any other stage count.
    pub fn radau_iia(stages: usize) -> Tableau {
        match stages {
            1 => Tableau {
                stages: 1,
                a: vec![vec![1.0]],
                b: vec![1.0],
                c: vec![1.0],
            },
            2 => Tableau {
                stages: 2,
                a: vec![
                    vec![5.0 / 12.0, -1.0 / 12.0],
                    vec![3.0 / 4.0, 1.0 / 4.0],
                ],
                b: vec![3.0 / 4.0, 1.0 / 4.0],
                c: vec![1.0 / 3.0, 1.0],
            },
            3 => {
                let r6 = 6.0_f64.sqrt();
                let a = vec![
                    vec![
                        (88.0 - 7.0 * r6) / 360.0,
                        (296.0 - 169.0 * r6) / 1800.0,
                        (-2.0 + 3.0 * r6) / 225.0,
                    ],
                    vec![
                        (296.0 + 169.0 * r6) / 1800.0,
                        (88.0 + 7.0 * r6) / 360.0,
                        (-2.0 - 3.0 * r6) / 225.0,
                    ],
                    vec![(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0],
                ];
                Tableau {
                    stages: 3,
                    b: a[2].clone(),
                    c: vec![(4.0 - r6) / 10.0, (4.0 + r6) / 10.0, 1.0],
                    a,
                }
            }
            _ => panic!("Radau IIa tableau only defined for 1, 2 or 3 stages"),
        }
    }

    /// Classical order of accuracy, p = 2s - 1.
    pub fn order(&self) -> usize {
        2 * self.stages - 1
    }
}
