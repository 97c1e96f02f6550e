//! Matrix-free solution of the optimality system by conjugate gradients on
//! the midpoint controls.
//!
//! Eliminating the state and the costate leaves the symmetric positive
//! definite system `α² u - B λ̄(u) = α² u_ref + B λ̄_data`, where `λ̄(u)` is
//! obtained from one forward state sweep and one backward costate sweep.
//! Each sweep costs `M` cyclic tridiagonal solves.

use super::kkt::{Operators, Steppers, SystemData};
use super::OcpError;

pub(crate) struct ReducedOutcome {
    pub z: Vec<f64>,
    pub iterations: usize,
}

struct Sweeper<'a> {
    ops: &'a Operators,
    st: Steppers,
}

impl Sweeper<'_> {
    /// State levels for midpoint controls `u` (`M × N`).
    fn forward(&self, u: &[f64], data: Option<&SystemData>) -> Vec<f64> {
        let (n, m, dt) = (self.ops.n, self.ops.m, self.ops.dt);
        let mut x = vec![0.0; (m + 1) * n];
        if let Some(d) = data {
            x[..n].copy_from_slice(&d.x0);
        }
        let mut rhs = vec![0.0; n];
        for step in 0..m {
            let (done, next) = x.split_at_mut((step + 1) * n);
            let cur = &done[step * n..];
            self.st.state_explicit.apply(cur, &mut rhs);
            for i in 0..n {
                let mut s = self.ops.b[i] * u[step * n + i];
                if let Some(d) = data {
                    s += d.state_src[step * n + i];
                }
                rhs[i] += dt * s;
            }
            self.st.state_implicit.solve_in_place(&mut rhs);
            next[..n].copy_from_slice(&rhs);
        }
        x
    }

    /// Costate levels for the state levels `x`.
    fn backward(&self, x: &[f64], data: Option<&SystemData>) -> Vec<f64> {
        let (n, m, dt) = (self.ops.n, self.ops.m, self.ops.dt);
        let mut l = vec![0.0; (m + 1) * n];
        if let Some(d) = data {
            l[m * n..].copy_from_slice(&d.lambda_end);
        }
        let mut rhs = vec![0.0; n];
        for step in (0..m).rev() {
            let (head, tail) = l.split_at_mut((step + 1) * n);
            self.st.adjoint_explicit.apply(&tail[..n], &mut rhs);
            for i in 0..n {
                let xbar = 0.5 * (x[step * n + i] + x[(step + 1) * n + i]);
                let mut s = -self.ops.q[i] * xbar;
                if let Some(d) = data {
                    s += d.adjoint_src[step * n + i];
                }
                rhs[i] += dt * s;
            }
            self.st.adjoint_implicit.solve_in_place(&mut rhs);
            head[step * n..].copy_from_slice(&rhs);
        }
        l
    }

    fn b_lambda_bar(&self, l: &[f64], out: &mut [f64]) {
        let n = self.ops.n;
        for step in 0..self.ops.m {
            for i in 0..n {
                out[step * n + i] = self.ops.b[i] * 0.5 * (l[step * n + i] + l[(step + 1) * n + i]);
            }
        }
    }

    fn hessian(&self, v: &[f64], out: &mut [f64]) {
        let x = self.forward(v, None);
        let l = self.backward(&x, None);
        self.b_lambda_bar(&l, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = self.ops.alpha2 * vi - *o;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn solve_reduced(ops: &Operators, data: &SystemData, tol: f64, max_iter: usize) -> Result<ReducedOutcome, OcpError> {
    let sw = Sweeper { ops, st: ops.steppers()? };
    let (n, m) = (ops.n, ops.m);
    let size = n * m;
    let x_data = sw.forward(&vec![0.0; size], Some(data));
    let l_data = sw.backward(&x_data, Some(data));
    let mut b = vec![0.0; size];
    sw.b_lambda_bar(&l_data, &mut b);
    for step in 0..m {
        for i in 0..n {
            b[step * n + i] += ops.alpha2 * data.u_ref[i];
        }
    }
    let bnorm = dot(&b, &b).sqrt();
    let rhs = ops.rhs(data);
    let assemble = |u: &[f64]| {
        let mut z = sw.forward(u, Some(data));
        let l = sw.backward(&z, Some(data));
        z.extend_from_slice(&l);
        z
    };
    let mut u = vec![0.0; size];
    let mut iterations = 0;
    if bnorm == 0.0 {
        return Ok(ReducedOutcome { z: assemble(&u), iterations });
    }
    // The reduced residual and the backward error of the full system differ
    // by a problem-dependent factor, so the inner target is tightened until
    // the latter meets `tol`.
    let mut target = tol;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut hp = vec![0.0; size];
    let mut rr = dot(&r, &r);
    loop {
        while rr.sqrt() > target * bnorm {
            if iterations >= max_iter {
                return Err(OcpError::NotConverged {
                    iterations,
                    residual: rr.sqrt() / bnorm,
                });
            }
            sw.hessian(&p, &mut hp);
            let php = dot(&p, &hp);
            if !(php > 0.0) {
                return Err(OcpError::Numeric("reduced Hessian lost positivity".into()));
            }
            let a = rr / php;
            for i in 0..size {
                u[i] += a * p[i];
                r[i] -= a * hp[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..size {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
            iterations += 1;
        }
        let z = assemble(&u);
        let eta = ops.residual(&z, &rhs);
        if eta <= tol {
            return Ok(ReducedOutcome { z, iterations });
        }
        if target < 1e-15 {
            return Err(OcpError::NotConverged { iterations, residual: eta });
        }
        target *= (0.5 * tol / eta).clamp(1e-3, 0.5);
    }
}

/// State levels for given midpoint controls, used to evaluate the cost.
pub(crate) fn state_for_controls(ops: &Operators, data: &SystemData, u: &[f64]) -> Result<Vec<f64>, OcpError> {
    let sw = Sweeper { ops, st: ops.steppers()? };
    Ok(sw.forward(u, Some(data)))
}
