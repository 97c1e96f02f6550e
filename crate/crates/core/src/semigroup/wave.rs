//! Damped wave equation `x_tt = c² x_ww - χ(2k x_t + k² x)` on `[0, L]`
//! with homogeneous Dirichlet conditions.
//!
//! With `ξ1 = x` and `ξ2(w) = -∫_0^w (x_t + kχ x)` the Riemann variables
//! `ζ1 = (c ξ1 + ξ2)/2` and `ζ2 = (-c ξ1 + ξ2)/2` satisfy
//! `ζ1_t = -c ζ1_w - kχ ζ1` and `ζ2_t = c ζ2_w - kχ ζ2`. Folding
//! `v = ζ1` on `[0, L]` and `v(w) = ζ2(2L - w)` on `[L, 2L]` turns the pair
//! into one rightward periodic transport on a circle of length `2L`, damped
//! on `Ω_c ∩ [0, L]` and its mirror image `2L - Ω_c`. Back transform:
//! `x = (ζ1 - ζ2)/c`, `x_t = -ξ2_w - kχ x`.
//!
//! Grid functions use the periodic `N`-node grid of `[0, L)`; node 0 stands
//! for both Dirichlet ends, and the folded variable lives on `2N` nodes.

use crate::geometry::{indicator_on_grid, restrict_domain, Grid1D, GridFunction, Interval, IntervalUnion, PeriodicDensity};

use super::{check_speed, check_time, FeedbackProfile, SemigroupError};

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub x: GridFunction,
    pub velocity: GridFunction,
    /// `ξ2` at nodes `0..=N`.
    pub xi2: Vec<f64>,
    /// Folded Riemann variable on the `2N`-node grid of `[0, 2L)`.
    pub folded: GridFunction,
}

impl WaveState {
    /// `(ζ1, ζ2)` at nodes `0..=N`.
    pub fn riemann_pair(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self.folded.values();
        let n = self.x.grid().cells();
        let z1 = (0..=n).map(|i| v[i % (2 * n)]).collect();
        let z2 = (0..=n).map(|i| v[(2 * n - i) % (2 * n)]).collect();
        (z1, z2)
    }

    /// `h Σ_cells [c² (D⁺x)² + (D⁺ξ2)²]`, i.e. `c²||x_w||² + ||x_t||²` when
    /// the damping vanishes.
    pub fn energy(&self, c: f64) -> f64 {
        let grid = self.x.grid();
        let n = grid.cells();
        let h = grid.h();
        let x = self.x.values();
        let mut e = 0.0;
        for i in 0..n {
            let xr = if i + 1 == n { 0.0 } else { x[i + 1] };
            let dx = (xr - x[i]) / h;
            let dxi = (self.xi2[i + 1] - self.xi2[i]) / h;
            e += c * c * dx * dx + dxi * dxi;
        }
        h * e
    }

    /// `||ζ1||² + ||ζ2||²`, the squared norm of the folded variable.
    pub fn zeta_energy(&self) -> f64 {
        let v = self.folded.values();
        self.folded.grid().h() * v.iter().map(|a| a * a).sum::<f64>()
    }
}

struct Doubled {
    grid2: Grid1D,
    /// Odd extension of `x0`.
    x0: GridFunction,
    /// Primitive of the odd extension of `x1 + kχ x0`.
    primitive: GridFunction,
}

fn doubled_data(x0: &GridFunction, x1: &GridFunction, source_gain: Option<&[f64]>) -> Result<Doubled, SemigroupError> {
    let grid = x0.grid();
    if x1.grid() != grid {
        return Err(SemigroupError::InvalidArgument("displacement and velocity grids differ".into()));
    }
    let n = grid.cells();
    let h = grid.h();
    let grid2 = Grid1D::new(2.0 * grid.length(), 2 * n)?;
    let odd = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..2 * n)
            .map(|j| match j {
                0 => 0.0,
                j if j < n => f(j),
                j if j == n => 0.0,
                j => -f(2 * n - j),
            })
            .collect()
    };
    let xt = odd(&|j| x0.values()[j]);
    let g = odd(&|j| x1.values()[j] + source_gain.map_or(0.0, |s| s[j]) * x0.values()[j]);
    let mut prim = vec![0.0; 2 * n];
    for j in 1..2 * n {
        prim[j] = prim[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
    }
    Ok(Doubled {
        grid2,
        x0: GridFunction::new(grid2, xt)?,
        primitive: GridFunction::new(grid2, prim)?,
    })
}

fn assemble(grid: Grid1D, folded: GridFunction, c: f64, damping: Option<&[f64]>) -> Result<WaveState, SemigroupError> {
    let n = grid.cells();
    let h = grid.h();
    let v = folded.values();
    let z1 = |i: usize| v[i % (2 * n)];
    let z2 = |i: usize| v[(2 * n - i) % (2 * n)];
    let x: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { (z1(i) - z2(i)) / c }).collect();
    let xi2: Vec<f64> = (0..=n).map(|i| z1(i) + z2(i)).collect();
    let velocity: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i == 0 { xi2[1] } else { xi2[i - 1] };
            let d = (xi2[i + 1] - left) / (2.0 * h);
            -d - damping.map_or(0.0, |k| k[i]) * x[i]
        })
        .collect();
    Ok(WaveState {
        x: GridFunction::new(grid, x)?,
        velocity: GridFunction::new(grid, velocity)?,
        xi2,
        folded,
    })
}

/// d'Alembert's formula for the undamped problem, using the odd `2L`-periodic
/// extensions of the data.
pub fn wave_dalembert(x0: &GridFunction, x1: &GridFunction, t: f64, c: f64) -> Result<WaveState, SemigroupError> {
    check_time(t)?;
    check_speed(c)?;
    let grid = x0.grid();
    let n = grid.cells();
    let d = doubled_data(x0, x1, None)?;
    let s = c * t;
    let at = |f: &GridFunction, y: f64| f.eval_linear(y);
    let mut folded = vec![0.0; 2 * n];
    for i in 0..=n {
        let w = grid.node(i);
        let (fp, fm) = (at(&d.x0, w + s), at(&d.x0, w - s));
        let (gp, gm) = (at(&d.primitive, w + s), at(&d.primitive, w - s));
        let x = 0.5 * (fp + fm) + (gp - gm) / (2.0 * c);
        let xi2 = 0.5 * c * (fm - fp) - 0.5 * (gm + gp);
        if i < n {
            folded[i] = 0.5 * (c * x + xi2);
        }
        if i > 0 {
            folded[2 * n - i] = 0.5 * (xi2 - c * x);
        }
    }
    let folded = GridFunction::new(d.grid2, folded)?;
    assemble(grid, folded, c, None)
}

/// Damped wave with feedback `u = -2k x_t - k² x` on `Ω_c ∩ [0, L]`, solved
/// through the folded transport.
pub fn wave_damped(
    x0: &GridFunction,
    x1: &GridFunction,
    t: f64,
    c: f64,
    control: &IntervalUnion,
    k: f64,
) -> Result<WaveState, SemigroupError> {
    check_time(t)?;
    check_speed(c)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(SemigroupError::InvalidArgument(format!("gain must be non-negative, got {k}")));
    }
    let grid = x0.grid();
    let l = grid.length();
    let chi = indicator_on_grid(control, grid);
    let source: Vec<f64> = chi.values().iter().map(|v| k * v).collect();
    let d = doubled_data(x0, x1, Some(&source))?;
    let v0: Vec<f64> = d
        .x0
        .values()
        .iter()
        .zip(d.primitive.values())
        .map(|(a, g)| 0.5 * (c * a - g))
        .collect();
    let v0 = GridFunction::new(d.grid2, v0)?;
    let pieces = restrict_domain(control, l).prefix().to_vec();
    let mut folded_pieces: Vec<(Interval, f64)> = pieces.iter().map(|iv| (*iv, k)).collect();
    for iv in pieces.iter().rev() {
        folded_pieces.push((Interval::new(2.0 * l - iv.hi(), 2.0 * l - iv.lo())?, k));
    }
    let fb = FeedbackProfile::from_density(PeriodicDensity::new(2.0 * l, folded_pieces)?)?;
    let folded = super::transport_damped(&v0, t, c, &fb)?;
    assemble(grid, folded, c, Some(&source))
}
