//! Cyclic tridiagonal matrices and their direct solution.
//!
//! Row `i` reads `sub[i] x_{i-1} + diag[i] x_i + sup[i] x_{i+1}` with
//! periodic indices. The solver eliminates `x_0`: the rows `1..n` form an
//! ordinary tridiagonal system, solved twice (data and the coupling column),
//! and row 0 then fixes `x_0` through a scalar Schur complement.
//!
//! For `I - τ(A - K)` with `A = -diag(c) D` (central differences) and
//! `K >= 0` diagonal, the products `sub[i] sup[i-1]` are negative, so every
//! Thomas pivot satisfies `d_i >= diag_i >= 1` whatever the Courant number.

use super::OcpError;

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl CyclicTridiagonal {
    /// `A_h = -diag(c) D_h`, `D_h x_i = (x_{i+1} - x_{i-1}) / 2h`.
    pub fn advection(c: &[f64], h: f64) -> Self {
        let n = c.len();
        Self {
            sub: c.iter().map(|ci| ci / (2.0 * h)).collect(),
            diag: vec![0.0; n],
            sup: c.iter().map(|ci| -ci / (2.0 * h)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn transpose(&self) -> Self {
        let n = self.len();
        Self {
            sub: (0..n).map(|i| self.sup[(i + n - 1) % n]).collect(),
            diag: self.diag.clone(),
            sup: (0..n).map(|i| self.sub[(i + 1) % n]).collect(),
        }
    }

    /// `a I + s self - s diag(damping)`.
    pub fn shifted(&self, a: f64, s: f64, damping: Option<&[f64]>) -> Self {
        let n = self.len();
        Self {
            sub: self.sub.iter().map(|v| s * v).collect(),
            diag: (0..n)
                .map(|i| a + s * self.diag[i] - s * damping.map_or(0.0, |d| d[i]))
                .collect(),
            sup: self.sup.iter().map(|v| s * v).collect(),
        }
    }

    /// `out = self x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let l = x[(i + n - 1) % n];
            let r = x[(i + 1) % n];
            out[i] = self.sub[i] * l + self.diag[i] * x[i] + self.sup[i] * r;
        }
    }

    pub fn factor(&self) -> Result<CyclicFactor, OcpError> {
        let n = self.len();
        let m = n - 1;
        let mut lower = vec![0.0; m];
        let mut pivots = vec![0.0; m];
        pivots[0] = self.diag[1];
        for j in 1..m {
            let r = j + 1;
            lower[j] = self.sub[r] / pivots[j - 1];
            pivots[j] = self.diag[r] - lower[j] * self.sup[r - 1];
        }
        let scale = self.diag.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        if pivots.iter().any(|p| !(p.abs() > 1e-14 * scale)) {
            return Err(OcpError::Singular {
                residual: f64::NAN,
                condition_estimate: f64::INFINITY,
            });
        }
        let mut f = CyclicFactor {
            lower,
            pivots,
            sup: self.sup[1..].to_vec(),
            coupling: vec![0.0; m],
            a01: self.sup[0],
            a0n: self.sub[0],
            denom: 0.0,
        };
        let mut z = vec![0.0; m];
        z[0] -= self.sub[1];
        z[m - 1] -= self.sup[n - 1];
        f.thomas(&mut z);
        f.denom = self.diag[0] + f.a01 * z[0] + f.a0n * z[m - 1];
        if !(f.denom.abs() > 1e-14 * scale) {
            return Err(OcpError::Singular {
                residual: f64::NAN,
                condition_estimate: f64::INFINITY,
            });
        }
        f.coupling = z;
        Ok(f)
    }
}

#[derive(Debug, Clone)]
pub struct CyclicFactor {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    sup: Vec<f64>,
    coupling: Vec<f64>,
    a01: f64,
    a0n: f64,
    denom: f64,
}

impl CyclicFactor {
    fn thomas(&self, y: &mut [f64]) {
        let m = y.len();
        for j in 1..m {
            y[j] -= self.lower[j] * y[j - 1];
        }
        y[m - 1] /= self.pivots[m - 1];
        for j in (0..m - 1).rev() {
            y[j] = (y[j] - self.sup[j] * y[j + 1]) / self.pivots[j];
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (head, rest) = b.split_at_mut(1);
        self.thomas(rest);
        let m = rest.len();
        let x0 = (head[0] - self.a01 * rest[0] - self.a0n * rest[m - 1]) / self.denom;
        head[0] = x0;
        for (r, z) in rest.iter_mut().zip(&self.coupling) {
            *r += x0 * z;
        }
    }
}
