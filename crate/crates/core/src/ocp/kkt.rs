//! The discrete optimality system in time-major block form and its direct
//! solution.
//!
//! Unknowns are `(x^0..x^M, λ^0..λ^M)`. Row blocks, in order:
//!
//! ```text
//! x^0                                                      = x0 + ε4
//! (x^{m+1}-x^m)/dt - A x̄ - G λ̄                             = f̄ + B u_ref + ε̄3   (m < M)
//! -(λ^{m+1}-λ^m)/dt - Aᵀ λ̄ + Q x̄                            = Q x_ref + ε̄1      (m < M)
//! λ^M                                                      = ε2
//! ```
//!
//! with midpoint averages `x̄ = (x^m + x^{m+1})/2`, `G = B Bᵀ / α²`,
//! `Q = Cᵀ C`. This is exactly the stationarity system of the implicit
//! midpoint discretization with the cost sampled at the midpoints.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::sparse::SparseMatrix;
use super::tridiag::{CyclicFactor, CyclicTridiagonal};
use super::OcpError;

/// Discrete operators shared by the direct and the reduced solver.
#[derive(Debug, Clone)]
pub(crate) struct Operators {
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub a: CyclicTridiagonal,
    pub at: CyclicTridiagonal,
    /// Diagonal of `B` (square root of the cell-averaged control indicator).
    pub b: Vec<f64>,
    /// Diagonal of `Q = Cᵀ C`.
    pub q: Vec<f64>,
    pub alpha2: f64,
}

/// Right-hand side data of the optimality system.
#[derive(Debug, Clone)]
pub(crate) struct SystemData {
    pub x0: Vec<f64>,
    pub lambda_end: Vec<f64>,
    /// `f̄ + ε̄3` per interval, `M × N`.
    pub state_src: Vec<f64>,
    /// `Q x_ref + ε̄1` per interval, `M × N`.
    pub adjoint_src: Vec<f64>,
    pub u_ref: Vec<f64>,
}

impl Operators {
    pub fn unknowns(&self) -> usize {
        2 * self.n * (self.m + 1)
    }

    fn g(&self, i: usize) -> f64 {
        self.b[i] * self.b[i] / self.alpha2
    }

    pub fn assemble(&self) -> SparseMatrix {
        let (n, m, dt) = (self.n, self.m, self.dt);
        let xo = |lvl: usize| lvl * n;
        let lo = |lvl: usize| (m + 1) * n + lvl * n;
        let mut trip = Vec::with_capacity(16 * n * (m + 1));
        for i in 0..n {
            trip.push((i, i, 1.0));
        }
        let tri = |trip: &mut Vec<(usize, usize, f64)>, row: usize, col0: usize, t: &CyclicTridiagonal, i: usize, s: f64, d: f64| {
            trip.push((row, col0 + (i + n - 1) % n, s * t.sub[i]));
            trip.push((row, col0 + i, d + s * t.diag[i]));
            trip.push((row, col0 + (i + 1) % n, s * t.sup[i]));
        };
        for step in 0..m {
            for i in 0..n {
                let row = n + step * n + i;
                tri(&mut trip, row, xo(step + 1), &self.a, i, -0.5, 1.0 / dt);
                tri(&mut trip, row, xo(step), &self.a, i, -0.5, -1.0 / dt);
                let g = self.g(i);
                if g != 0.0 {
                    trip.push((row, lo(step + 1) + i, -0.5 * g));
                    trip.push((row, lo(step) + i, -0.5 * g));
                }
                let row = (m + 1) * n + step * n + i;
                tri(&mut trip, row, lo(step + 1), &self.at, i, -0.5, -1.0 / dt);
                tri(&mut trip, row, lo(step), &self.at, i, -0.5, 1.0 / dt);
                if self.q[i] != 0.0 {
                    trip.push((row, xo(step + 1) + i, 0.5 * self.q[i]));
                    trip.push((row, xo(step) + i, 0.5 * self.q[i]));
                }
            }
        }
        for i in 0..n {
            let row = (m + 1) * n + m * n + i;
            trip.push((row, lo(m) + i, 1.0));
        }
        let size = self.unknowns();
        SparseMatrix::from_triplets(size, size, trip)
    }

    pub fn rhs(&self, d: &SystemData) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut r = vec![0.0; self.unknowns()];
        r[..n].copy_from_slice(&d.x0);
        for step in 0..m {
            for i in 0..n {
                r[n + step * n + i] = d.state_src[step * n + i] + self.b[i] * d.u_ref[i];
                r[(m + 1) * n + step * n + i] = d.adjoint_src[step * n + i];
            }
        }
        r[(m + 1) * n + m * n..].copy_from_slice(&d.lambda_end);
        r
    }

    /// Matrix-free product with the system matrix.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let (n, m, dt) = (self.n, self.m, self.dt);
        let (xs, ls) = z.split_at((m + 1) * n);
        let mut out = vec![0.0; self.unknowns()];
        out[..n].copy_from_slice(&xs[..n]);
        let mut ax = vec![0.0; n];
        let mut al = vec![0.0; n];
        let mut mid = vec![0.0; n];
        for step in 0..m {
            let (x0, x1) = (&xs[step * n..(step + 1) * n], &xs[(step + 1) * n..(step + 2) * n]);
            let (l0, l1) = (&ls[step * n..(step + 1) * n], &ls[(step + 1) * n..(step + 2) * n]);
            for i in 0..n {
                mid[i] = 0.5 * (x0[i] + x1[i]);
            }
            self.a.apply(&mid, &mut ax);
            for i in 0..n {
                mid[i] = 0.5 * (l0[i] + l1[i]);
            }
            self.at.apply(&mid, &mut al);
            for i in 0..n {
                let xbar = 0.5 * (x0[i] + x1[i]);
                let lbar = mid[i];
                out[n + step * n + i] = (x1[i] - x0[i]) / dt - ax[i] - self.g(i) * lbar;
                out[(m + 1) * n + step * n + i] = -(l1[i] - l0[i]) / dt - al[i] + self.q[i] * xbar;
            }
        }
        out[(m + 1) * n + m * n..].copy_from_slice(&ls[m * n..]);
        out
    }

    /// Largest absolute row sum of the system matrix.
    pub fn norm_inf(&self) -> f64 {
        let inv = 1.0 / self.dt;
        let mut best = 1.0f64;
        for i in 0..self.n {
            let off = 0.5 * (self.a.sub[i].abs() + self.a.sup[i].abs());
            let d = (inv - 0.5 * self.a.diag[i]).abs() + (inv + 0.5 * self.a.diag[i]).abs();
            best = best.max(d + 2.0 * off + self.g(i));
            let off = 0.5 * (self.at.sub[i].abs() + self.at.sup[i].abs());
            let d = (inv + 0.5 * self.at.diag[i]).abs() + (inv - 0.5 * self.at.diag[i]).abs();
            best = best.max(d + 2.0 * off + self.q[i]);
        }
        best
    }

    /// Normwise backward error `||K z - r|| / (||K||_∞ ||z|| + ||r||)`.
    pub fn residual(&self, z: &[f64], rhs: &[f64]) -> f64 {
        let kz = self.apply(z);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let num = kz.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = self.norm_inf() * norm(z) + norm(rhs);
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    /// Midpoint stepping matrices `(I - dt/2 A)` factored and `(I + dt/2 A)`, plus the adjoint pair.
    pub fn steppers(&self) -> Result<Steppers, OcpError> {
        let h = 0.5 * self.dt;
        Ok(Steppers {
            state_implicit: self.a.shifted(1.0, -h, None).factor()?,
            state_explicit: self.a.shifted(1.0, h, None),
            adjoint_implicit: self.at.shifted(1.0, -h, None).factor()?,
            adjoint_explicit: self.at.shifted(1.0, h, None),
        })
    }
}

pub(crate) struct Steppers {
    pub state_implicit: CyclicFactor,
    pub state_explicit: CyclicTridiagonal,
    pub adjoint_implicit: CyclicFactor,
    pub adjoint_explicit: CyclicTridiagonal,
}

/// Sparse LU of the assembled system.
pub(crate) fn solve_direct(ops: &Operators, data: &SystemData) -> Result<(Vec<f64>, f64), OcpError> {
    let k = ops.assemble();
    let rhs = ops.rhs(data);
    let lu = k
        .to_faer()
        .sp_lu()
        .map_err(|e| OcpError::Numeric(format!("sparse LU failed: {e:?}")))?;
    let mut sol = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(sol.as_mut());
    let mut z: Vec<f64> = (0..rhs.len()).map(|i| sol[(i, 0)]).collect();
    // The boundary rows are identities; pin them to the data exactly.
    let n = ops.n;
    z[..n].copy_from_slice(&data.x0);
    let end = z.len() - n;
    z[end..].copy_from_slice(&data.lambda_end);
    let residual = ops.residual(&z, &rhs);
    if !z.iter().all(|v| v.is_finite()) || !(residual <= 1e-8) {
        let zn = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rn = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        return Err(OcpError::Singular {
            residual,
            condition_estimate: k.norm_one() * zn / rn,
        });
    }
    Ok((z, residual))
}
