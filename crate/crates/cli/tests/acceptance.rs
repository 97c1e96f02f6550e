//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyploc_core::analysis::{fit_decay_rate, spacetime_pairing, time_sliced_l2, weighted_spacetime_norms};
use hyploc_core::characteristics::{FlowMap, VelocityField};
use hyploc_core::domain_check::{check_condition_ii, FailureReason};
use hyploc_core::geometry::{ExpWeight, Grid1D, GridFunction, IntervalUnion, SpaceTimeField, TimeGrid};
use hyploc_core::ocp::{
    bump_initial, closed_loop_midpoint, solve_error_system, solve_ocp, solve_perturbed, OcpConfig, Perturbation, SolverKind,
};
use hyploc_core::semigroup::{adversarial_probes, estimate_operator_norm, transport_damped, transport_free, wave_dalembert, wave_damped, FeedbackProfile};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn speed2() -> VelocityField {
    VelocityField::constant(2.0).expect("positive speed")
}

fn rel_l2(a: &GridFunction, b: &GridFunction) -> f64 {
    let num: f64 = a.values().iter().zip(b.values()).map(|(p, q)| (p - q).powi(2)).sum();
    let den: f64 = b.values().iter().map(|q| q * q).sum();
    (num / den).sqrt()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_hyploc");
    let run = |domain: &str, rates: bool| {
        let mut cmd = Command::new(bin);
        cmd.args(["check-domain", "--domain", domain]);
        if rates {
            cmd.args(["--k", "1", "--big-k", "5"]);
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        Ok::<_, String>((out.status.code(), String::from_utf8_lossy(&out.stdout).to_string()))
    };
    let (code_eq, text_eq) = run("{periodic: {prefix: [], start: 0.0, period: 1.0, pattern: [[0.0, 0.2]]}}", true)?;
    let (code_single, text_single) = run("{finite: [[0.0, 0.2]]}", true)?;
    let lib_eq = check_condition_ii(&IntervalUnion::equidistant(0.0, 0.2, 1.0).expect("layout"), 1.0, 5.0).map_err(|e| e.to_string())?;
    let lib_single = check_condition_ii(&IntervalUnion::single(0.0, 0.2).expect("layout"), 1.0, 5.0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ok = code_eq == Some(0)
        && text_eq.contains("\"stabilizable\": true")
        && code_single == Some(1)
        && text_single.contains("\"reason\": \"finite-measure\"")
        && lib_eq.stabilizable
        && lib_single.reason == Some(FailureReason::FiniteMeasure)
        && within(elapsed, 1.0);
    verdict(
        ok,
        format!(
            "equidistant exit {code_eq:?}, single exit {code_single:?} reason {:?}, {elapsed:.2?}",
            lib_single.reason.map(|r| r.to_string())
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::new(1.0, 128).expect("grid");
    let time = TimeGrid::new(2.5, 256).expect("time");
    let x0 = bump_initial(0.8, 0.5, grid).map_err(|e| e.to_string())?;
    let n0 = x0.l2_norm();
    let cfg = OcpConfig::new(grid, time, speed2(), 0.125, IntervalUnion::empty(), x0.clone());
    let sol = solve_ocp(&cfg).map_err(|e| e.to_string())?;
    let stepper = closed_loop_midpoint(&x0, &speed2(), None, time).map_err(|e| e.to_string())?;
    let drift = |f: &SpaceTimeField| (0..time.levels()).map(|m| (f.level(m).l2_norm() - n0).abs() / n0).fold(0.0, f64::max);
    let (d_ocp, d_step) = (drift(&sol.x), drift(&stepper));
    let elapsed = start.elapsed();
    verdict(
        d_ocp <= 1e-10 && d_step <= 1e-10 && within(elapsed, 5.0),
        format!("max relative norm drift {d_ocp:.2e} (optimality system), {d_step:.2e} (stepper), {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let grid = Grid1D::new(1.0, 128).expect("grid");
    let time = TimeGrid::new(2.5, 256).expect("time");
    let dt = time.dt();
    let x0 = GridFunction::from_fn(grid, |_| 1.0);
    let gain = GridFunction::from_fn(grid, |_| 1.0);
    let f = closed_loop_midpoint(&x0, &speed2(), Some(&gain), time).map_err(|e| e.to_string())?;
    let rho = (1.0 - 0.5 * dt) / (1.0 + 0.5 * dt);
    let n0 = x0.l2_norm();
    let (mut exact_err, mut cont_err) = (0.0f64, 0.0f64);
    for m in 0..time.levels() {
        let nm = f.level(m).l2_norm() / n0;
        let r = rho.powi(m as i32);
        exact_err = exact_err.max((nm - r).abs() / r);
        let e = (-time.time(m)).exp();
        cont_err = cont_err.max((r - e).abs() / e);
    }
    verdict(
        exact_err <= 1e-12 && cont_err <= 3.0 * dt * dt,
        format!("|norm - rho^m|/rho^m = {exact_err:.2e}, |rho^m - e^-t|/e^-t = {cont_err:.2e} (limit {:.2e})", 3.0 * dt * dt),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut errors = Vec::new();
    for n in [128usize, 256, 512] {
        let grid = Grid1D::new(1.0, n).expect("grid");
        let time = TimeGrid::new(0.5, n).expect("time");
        let x0 = GridFunction::from_fn(grid, |w| (2.0 * std::f64::consts::PI * w).sin().exp());
        let cfg = OcpConfig::new(grid, time, speed2(), 0.125, IntervalUnion::empty(), x0.clone());
        let sol = solve_ocp(&cfg).map_err(|e| e.to_string())?;
        let exact = transport_free(&x0, 0.5, 2.0).map_err(|e| e.to_string())?;
        errors.push(sol.x.level(n).difference_norm(&exact));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let elapsed = start.elapsed();
    verdict(
        orders.iter().all(|o| *o >= 1.9) && within(elapsed, 60.0),
        format!("L2 errors {errors:?}, orders {orders:.3?}, {elapsed:.2?}"),
    )
}

trait DiffNorm {
    fn difference_norm(&self, other: &GridFunction) -> f64;
}

impl DiffNorm for GridFunction {
    fn difference_norm(&self, other: &GridFunction) -> f64 {
        let h = self.grid().h();
        (h * self.values().iter().zip(other.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let vel = VelocityField::sine(2.0, 0.5, 1.0).map_err(|e| e.to_string())?;
    let map = FlowMap::new(&vel, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut round, mut deriv) = (0.0f64, 0.0f64);
    let eps = 1e-5;
    for _ in 0..1000 {
        let p0: f64 = rng.random_range(0.0..1.0);
        let t: f64 = rng.random_range(0.0..3.0);
        let p = map.forward(p0, t).map_err(|e| e.to_string())?.position;
        let back = map.backward(p, t).map_err(|e| e.to_string())?.position;
        round = round.max((back - p0).abs());
        let q = |q0: f64| map.backward(q0, t).map(|r| r.position);
        let fd = (q(p0 + eps).map_err(|e| e.to_string())? - q(p0 - eps).map_err(|e| e.to_string())?) / (2.0 * eps);
        let qt = q(p0).map_err(|e| e.to_string())?;
        let identity = vel.periodic(qt, 1.0) / vel.periodic(p0, 1.0);
        deriv = deriv.max((fd - identity).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        round <= 1e-8 && deriv <= 1e-6 && within(elapsed, 30.0),
        format!("max roundtrip error {round:.2e}, max derivative mismatch {deriv:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let dom = IntervalUnion::single(0.0, 0.2).expect("layout");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut estimates = Vec::new();
    for k in 1..=3 {
        let l = 0.2 + 6.0 * k as f64;
        let grid = Grid1D::new(l, (l * 160.0).round() as usize).expect("grid");
        let t = k as f64;
        let fb = FeedbackProfile::uniform(&dom, 5.0, l).map_err(|e| e.to_string())?;
        let probes = adversarial_probes(grid, &dom, 2.0, t);
        let prop = |x0: &GridFunction| transport_damped(x0, t, 2.0, &fb);
        estimates.push(estimate_operator_norm(&prop, grid, 4, &mut rng, &probes).map_err(|e| e.to_string())?);
    }
    verdict(estimates.iter().all(|e| *e >= 0.99), format!("norm estimates at t = 1, 2, 3: {estimates:.6?}"))
}

struct Sweep {
    l2: Vec<f64>,
    weighted: Vec<f64>,
    mu: f64,
}

fn sweep(dom: &IntervalUnion, lengths: &[f64]) -> Result<Sweep, String> {
    let mut fields = Vec::new();
    for &l in lengths {
        let grid = Grid1D::with_resolution(l, 128).map_err(|e| e.to_string())?;
        let time = TimeGrid::with_max_step(5.0, grid.h() / 2.0).map_err(|e| e.to_string())?;
        let x0 = bump_initial(0.8, 0.6, grid).map_err(|e| e.to_string())?;
        let cfg = OcpConfig::new(grid, time, speed2(), 0.125, dom.clone(), x0);
        fields.push(solve_ocp(&cfg).map_err(|e| e.to_string())?.x);
    }
    let l2 = fields
        .iter()
        .map(|x| weighted_spacetime_norms(x, &ExpWeight::unit(), x.time()).map(|r| r.l2l2))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let first = &fields[0];
    let profile = time_sliced_l2(first, first.time()).map_err(|e| e.to_string())?;
    let mu = fit_decay_rate(&profile, 0.6, 1e-8).map_err(|e| e.to_string())?.rate;
    let weight = ExpWeight::new(0.6, mu.max(0.0)).map_err(|e| e.to_string())?;
    let weighted = fields
        .iter()
        .map(|x| weighted_spacetime_norms(x, &weight, x.time()).map(|r| r.two_and_inf))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Sweep { l2, weighted, mu })
}

fn spread(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn criteria_7_8() -> (Outcome, Outcome) {
    let start = Instant::now();
    let lengths = [2.0, 4.0, 6.0, 8.0];
    let single = sweep(&IntervalUnion::single(0.0, 0.2).expect("layout"), &lengths);
    let equi = sweep(&IntervalUnion::equidistant(0.0, 0.2, 1.0).expect("layout"), &lengths);
    let elapsed = start.elapsed();
    let (single, equi) = match (single, equi) {
        (Ok(s), Ok(e)) => (s, e),
        (Err(e), _) | (_, Err(e)) => return (Err(e.clone()), Err(e)),
    };
    let increasing = single.l2.windows(2).all(|w| w[1] > w[0]);
    let growth = single.l2[3] / single.l2[0];
    let equi_spread = spread(&equi.l2);
    let c7 = verdict(
        increasing && growth >= 2.0 && equi_spread <= 1.5 && within(elapsed, 600.0),
        format!(
            "single {:.4?} (L=8/L=2 = {growth:.3}), equidistant {:.6?} (max/min = {equi_spread:.4}), {elapsed:.2?}",
            single.l2, equi.l2
        ),
    );
    let w_spread = spread(&equi.weighted);
    let c8 = verdict(
        w_spread <= 2.0 && equi.mu > 0.0,
        format!("mu = {:.4}, weighted norms {:.5?}, max/min = {w_spread:.4}", equi.mu, equi.weighted),
    );
    (c7, c8)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let pi = std::f64::consts::PI;
    let grid = Grid1D::new(1.0, 512).expect("grid");
    let x0 = GridFunction::from_fn(grid, |w| (pi * w).sin().powi(3));
    let x1 = GridFunction::from_fn(grid, |w| (2.0 * pi * w).sin());
    let empty = IntervalUnion::empty();
    let mut eq_err = 0.0f64;
    for t in [0.1, 0.3, 0.7] {
        let a = wave_damped(&x0, &x1, t, 1.0, &empty, 0.0).map_err(|e| e.to_string())?;
        let b = wave_dalembert(&x0, &x1, t, 1.0).map_err(|e| e.to_string())?;
        eq_err = eq_err.max(rel_l2(&a.x, &b.x));
    }
    let e0 = wave_damped(&x0, &x1, 0.0, 1.0, &empty, 0.0).map_err(|e| e.to_string())?.energy(1.0);
    let mut drift = 0.0f64;
    for j in 1..=128 {
        let t = j as f64 / 64.0;
        let e = wave_damped(&x0, &x1, t, 1.0, &empty, 0.0).map_err(|e| e.to_string())?.energy(1.0);
        drift = drift.max((e - e0).abs() / e0);
    }
    let res_coarse = second_order_residual(128)?;
    let res_fine = second_order_residual(256)?;
    let ratio = res_coarse / res_fine;
    let elapsed = start.elapsed();
    verdict(
        eq_err <= 1e-6 && drift <= 1e-8 && (3.5..=4.5).contains(&ratio) && within(elapsed, 60.0),
        format!(
            "fold vs d'Alembert {eq_err:.2e}, energy drift {drift:.2e}, residuals {res_coarse:.3e} -> {res_fine:.3e} (ratio {ratio:.3}), {elapsed:.2?}"
        ),
    )
}

/// Discrete residual of `x_tt = c² x_ww - 2k x_t - k² x` for the damped
/// wave with damping everywhere, from time levels one cell transit apart.
fn second_order_residual(n: usize) -> Result<f64, String> {
    let pi = std::f64::consts::PI;
    let (c, k, t) = (1.0, 0.5, 0.5);
    let grid = Grid1D::new(1.0, n).expect("grid");
    let h = grid.h();
    let tau = h / c;
    let x0 = GridFunction::from_fn(grid, |w| (pi * w).sin());
    let x1 = GridFunction::zeros(grid);
    let dom = IntervalUnion::half_line();
    let at = |s: f64| wave_damped(&x0, &x1, s, c, &dom, k).map(|w| w.x).map_err(|e| e.to_string());
    let (xm, x, xp) = (at(t - tau)?, at(t)?, at(t + tau)?);
    let (vm, v, vp) = (xm.values(), x.values(), xp.values());
    let mut sum = 0.0;
    for i in 1..n {
        let right = if i + 1 == n { 0.0 } else { v[i + 1] };
        let xtt = (vp[i] - 2.0 * v[i] + vm[i]) / (tau * tau);
        let xww = (right - 2.0 * v[i] + v[i - 1]) / (h * h);
        let xt = (vp[i] - vm[i]) / (2.0 * tau);
        let r = xtt - c * c * xww + 2.0 * k * xt + k * k * v[i];
        sum += h * r * r;
    }
    Ok(sum.sqrt())
}

fn criterion_10() -> Outcome {
    let grid = Grid1D::new(2.0, 48).expect("grid");
    let time = TimeGrid::new(1.0, 40).expect("time");
    let x0 = bump_initial(0.8, 0.6, grid).map_err(|e| e.to_string())?;
    let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).expect("layout");
    let cfg = OcpConfig::new(grid, time, speed2(), 0.125, dom, x0).with_solver(SolverKind::Direct);
    let base = solve_ocp(&cfg).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let eps = Perturbation::random(grid, time, 0.1, &mut rng);
        let pert = solve_perturbed(&cfg, &eps).map_err(|e| e.to_string())?;
        let err = solve_error_system(&cfg, &eps).map_err(|e| e.to_string())?;
        for (a, b, c) in [(&pert.x, &base.x, &err.x), (&pert.lambda, &base.lambda, &err.lambda), (&pert.u, &base.u, &err.u)] {
            let d = a.data().iter().zip(b.data()).zip(c.data()).map(|((p, q), r)| (p - q - r).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    verdict(worst <= 1e-9, format!("max |perturbed - nominal - error| = {worst:.2e} over 5 draws"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(4..40);
        let m = rng.random_range(1..40);
        let grid = Grid1D::new(rng.random_range(0.5..5.0), n).expect("grid");
        let time = TimeGrid::new(rng.random_range(0.1..4.0), m).expect("time");
        let mut draw = || {
            let amp: f64 = rng.random_range(0.1..10.0);
            let rows = (0..=m).map(|_| (0..n).map(|_| amp * rng.random_range(-1.0..1.0)).collect()).collect();
            SpaceTimeField::from_rows(grid, time, rows).expect("shape")
        };
        let (v, w) = (draw(), draw());
        let pair = spacetime_pairing(&v, &w, time).map_err(|e| e.to_string())?.abs();
        let nv = weighted_spacetime_norms(&v, &ExpWeight::unit(), time).map_err(|e| e.to_string())?;
        let nw = weighted_spacetime_norms(&w, &ExpWeight::unit(), time).map_err(|e| e.to_string())?;
        worst = worst.max(pair - nv.two_and_inf * nw.one_or_two);
    }
    verdict(worst <= 1e-10, format!("max of |<v,w>| - ||v||_2^inf ||w||_1v2 over 100 pairs: {worst:.3e}"))
}

fn main() {
    let (c7, c8) = criteria_7_8();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        c7,
        c8,
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("criterion {:>2}: PASS  {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
