use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hyploc_core::characteristics::{Density, Exactness, FlowMap, VelocityField};
use hyploc_core::geometry::{Grid1D, GridFunction, IntervalUnion, PeriodicDensity};
use hyploc_core::semigroup::{
    adversarial_probes, continuity_damped, estimate_operator_norm, transport_damped, transport_free,
    transport_variable, wave_dalembert, wave_damped, FeedbackProfile,
};

fn rk4(f: impl Fn(f64) -> f64, y0: f64, t: f64, dt: f64) -> f64 {
    let steps = (t / dt).round() as usize;
    let dt = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * dt * k1);
        let k3 = f(y + 0.5 * dt * k2);
        let k4 = f(y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

fn l2_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    let h = a.grid().h();
    (h * a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt()
}

#[test]
fn sine_flow_matches_rk4() {
    let vel = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
    let map = FlowMap::new(&vel, 1.0).unwrap();
    let p = map.forward(0.0, 0.25).unwrap().position;
    let oracle = rk4(|y| 2.0 + 0.5 * (2.0 * PI * y).sin(), 0.0, 0.25, 1e-6);
    assert!((p - oracle).abs() < 1e-8, "{p} vs {oracle}");
}

#[test]
fn indicator_path_integral_over_one_period() {
    let k = 3.7;
    let vel = VelocityField::constant(1.0).unwrap();
    let map = FlowMap::new(&vel, 1.0).unwrap();
    let dens = PeriodicDensity::from_domain(&IntervalUnion::single(0.0, 0.5).unwrap(), 1.0, k);
    for w in [0.0, 0.13, 0.5, 0.77, 2.4] {
        let v = map.path_integral(&Density::PiecewiseConstant(&dens), w - 1.0, w).unwrap();
        assert!((v - 0.5 * k).abs() < 1e-13);
    }
}

#[test]
fn half_domain_damping_over_one_period_is_uniform() {
    let grid = Grid1D::new(1.0, 100).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (2.0 * PI * w).cos() + 2.0);
    let fb = FeedbackProfile::uniform(&IntervalUnion::single(0.0, 0.5).unwrap(), 1.3, 1.0).unwrap();
    let x = transport_damped(&x0, 1.0, 1.0, &fb).unwrap();
    let factor = (-0.5f64 * 1.3).exp();
    for (a, b) in x.values().iter().zip(x0.values()) {
        assert!((a - factor * b).abs() < 1e-13);
    }
}

#[test]
fn weighted_norm_is_conserved_by_variable_transport() {
    // x(w, t) = x0(q(t, w)) conserves ∫ x² / c.
    let vel = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
    let grid = Grid1D::new(1.0, 2048).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (2.0 * PI * w).sin().exp());
    let weighted = |f: &GridFunction| {
        f.values().iter().enumerate().map(|(i, v)| v * v / vel.periodic(grid.node(i), 1.0)).sum::<f64>() * grid.h()
    };
    for t in [0.1, 0.37, 1.2] {
        let x = transport_variable(&x0, t, &vel, None).unwrap();
        let (a, b) = (weighted(&x), weighted(&x0));
        assert!((a - b).abs() < 1e-6 * b, "t = {t}: {a} vs {b}");
    }
}

#[test]
fn continuity_conserves_mass() {
    let vel = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
    let map = FlowMap::new(&vel, 1.0).unwrap();
    let grid = Grid1D::new(1.0, 2048).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| 1.0 + 0.5 * (2.0 * PI * w).cos());
    let mass = |f: &GridFunction| f.values().iter().sum::<f64>() * grid.h();
    for t in [map.period_time(), 0.21, 0.83] {
        let x = continuity_damped(&x0, t, &vel, None).unwrap();
        assert!((mass(&x) - mass(&x0)).abs() < 1e-6 * mass(&x0), "t = {t}");
    }
}

#[test]
fn standing_wave_mode() {
    let c = 1.5;
    let grid = Grid1D::new(2.0, 512).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (PI * w / 2.0).sin());
    let x1 = GridFunction::zeros(grid);
    for t in [0.2, 0.9, 1.7] {
        let s = wave_damped(&x0, &x1, t, c, &IntervalUnion::empty(), 0.0).unwrap();
        let exact = GridFunction::from_fn(grid, |w| (PI * c * t / 2.0).cos() * (PI * w / 2.0).sin());
        assert!(l2_diff(&s.x, &exact) < 1e-5, "t = {t}");
    }
}

#[test]
fn full_damping_folds_to_exponential_energy_decay() {
    let (c, k) = (1.0, 0.8);
    let grid = Grid1D::new(1.0, 256).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (PI * w).sin().powi(2));
    let x1 = GridFunction::from_fn(grid, |w| (3.0 * PI * w).sin());
    let e0 = wave_damped(&x0, &x1, 0.0, c, &IntervalUnion::half_line(), k).unwrap().zeta_energy();
    for t in [0.25, 0.5, 1.5] {
        let e = wave_damped(&x0, &x1, t, c, &IntervalUnion::half_line(), k).unwrap().zeta_energy();
        assert!((e / e0 - (-2.0 * k * t).exp()).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn undamped_wave_matches_dalembert() {
    let grid = Grid1D::new(1.0, 512).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (PI * w).sin().powi(3));
    let x1 = GridFunction::from_fn(grid, |w| w * (1.0 - w));
    for t in [0.1, 0.55, 1.3] {
        let a = wave_damped(&x0, &x1, t, 1.0, &IntervalUnion::empty(), 0.0).unwrap();
        let b = wave_dalembert(&x0, &x1, t, 1.0).unwrap();
        assert!(l2_diff(&a.x, &b.x) < 1e-8);
    }
}

#[test]
fn equidistant_damping_obeys_the_uniform_bound() {
    let (c, k, a, b) = (2.0, 3.0, 0.0, 0.2);
    let dom = IntervalUnion::equidistant(a, b, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in [2.0, 4.0, 8.0, 16.0] {
        let grid = Grid1D::with_resolution(l, 64).unwrap();
        let fb = FeedbackProfile::uniform(&dom, k, l).unwrap();
        for steps in [32usize, 80, 150] {
            let t = steps as f64 * grid.h() / c;
            let bound = (-(k / c) * (c * t).floor() * (b - a)).exp();
            let probes = adversarial_probes(grid, &dom, c, t);
            let prop = |x0: &GridFunction| transport_damped(x0, t, c, &fb);
            let est = estimate_operator_norm(&prop, grid, 4, &mut rng, &probes).unwrap();
            assert!(est <= bound * (1.0 + 1e-12), "L = {l}, t = {t}: {est} > {bound}");
        }
    }
}

#[test]
fn damping_only_acts_downstream_of_the_control() {
    let (c, l, a, b) = (2.0, 4.0, 1.0, 1.5);
    let grid = Grid1D::with_resolution(l, 64).unwrap();
    let x0 = GridFunction::from_fn(grid, |w| (w * 1.7).sin() + 1.1);
    let fb = FeedbackProfile::uniform(&IntervalUnion::single(a, b).unwrap(), 4.0, l).unwrap();
    for t in [0.3, 0.9, (l - b) / c] {
        let damped = transport_damped(&x0, t, c, &fb).unwrap();
        let free = transport_free(&x0, t, c).unwrap();
        for i in 0..grid.cells() {
            let w = grid.node(i);
            if w < a || w > b + c * t {
                assert_eq!(damped.values()[i], free.values()[i], "w = {w}, t = {t}");
            }
        }
    }
}

fn sine_velocity() -> impl Strategy<Value = (VelocityField, f64)> {
    (1.0f64..3.0, 0.0f64..0.9, 1usize..4, 0.5f64..3.0).prop_map(|(mean, frac, waves, l)| {
        (VelocityField::sine(mean, frac * mean, l / waves as f64).unwrap(), l)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_and_speed_bounds((vel, l) in sine_velocity(), p0 in 0.0f64..1.0, t in 0.01f64..4.0) {
        let map = FlowMap::new(&vel, l).unwrap();
        let p0 = p0 * l;
        let p = map.forward(p0, t).unwrap().position;
        let back = map.backward(p.rem_euclid(l), t).unwrap().position;
        let lap = (p / l).floor() * l;
        prop_assert!((back - (p0 - lap)).abs() <= 1e-8 * (1.0 + lap.abs()));
        let speed = (p - p0) / t;
        prop_assert!(speed >= vel.c_min() * (1.0 - 1e-9) && speed <= vel.c_max() * (1.0 + 1e-9));
    }

    #[test]
    fn forward_flow_increases_in_time((vel, l) in sine_velocity(), p0 in 0.0f64..1.0, t in 0.01f64..2.0, dt in 0.001f64..1.0) {
        let map = FlowMap::new(&vel, l).unwrap();
        let a = map.forward(p0 * l, t).unwrap().position;
        let b = map.forward(p0 * l, t + dt).unwrap().position;
        prop_assert!(b > a);
    }

    #[test]
    fn travel_time_is_additive_and_periodic((vel, l) in sine_velocity(), a in -3.0f64..3.0, d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
        let map = FlowMap::new(&vel, l).unwrap();
        let whole = map.travel_time(a, a + d1 + d2).unwrap();
        let parts = map.travel_time(a, a + d1).unwrap() + map.travel_time(a + d1, a + d1 + d2).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-10 * (1.0 + whole));
        let lap = map.travel_time(a, a + l).unwrap();
        prop_assert!((lap - map.period_time()).abs() <= 1e-10 * lap);
    }

    #[test]
    fn constant_flow_is_exact(c in 0.1f64..5.0, l in 0.5f64..4.0, p0 in 0.0f64..4.0, t in 0.0f64..6.0) {
        let vel = VelocityField::constant(c).unwrap();
        let r = FlowMap::new(&vel, l).unwrap().forward(p0, t).unwrap();
        prop_assert_eq!(r.exactness, Exactness::Analytic);
        prop_assert!((r.travel_time_integral - (r.position - p0).abs() / c).abs() <= 1e-14 * (1.0 + t));
    }

    #[test]
    fn damped_transport_is_a_contraction(cells in 8usize..128, gain in 0.0f64..10.0, lo in 0.0f64..0.5, len in 0.05f64..0.5, t in 0.0f64..3.0, seed in any::<u64>()) {
        let grid = Grid1D::new(1.0, cells).unwrap();
        let fb = FeedbackProfile::uniform(&IntervalUnion::single(lo, lo + len).unwrap(), gain, 1.0).unwrap();
        let x0 = GridFunction::from_fn(grid, |w| ((seed % 13) as f64 * w).sin() + 0.2);
        let x = transport_damped(&x0, t, 2.0, &fb).unwrap();
        prop_assert!(x.l2_norm() <= x0.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn semigroup_law_at_whole_cell_shifts(cells in 8usize..128, s1 in 0usize..300, s2 in 0usize..300, gain in 0.0f64..5.0) {
        let c = 2.0;
        let grid = Grid1D::new(1.0, cells).unwrap();
        let fb = FeedbackProfile::uniform(&IntervalUnion::equidistant(0.0, 0.3, 0.5).unwrap(), gain, 1.0).unwrap();
        let x0 = GridFunction::from_fn(grid, |w| (2.0 * PI * w).sin() + 0.5);
        let (t1, t2) = (s1 as f64 * grid.h() / c, s2 as f64 * grid.h() / c);
        let once = transport_damped(&x0, t1 + t2, c, &fb).unwrap();
        let twice = transport_damped(&transport_damped(&x0, t1, c, &fb).unwrap(), t2, c, &fb).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn variable_semigroup_law_is_second_order() {
    let vel = VelocityField::sine(2.0, 0.5, 1.0).unwrap();
    let err = |n: usize| {
        let grid = Grid1D::new(1.0, n).unwrap();
        let x0 = GridFunction::from_fn(grid, |w| (2.0 * PI * w).sin().exp());
        let once = transport_variable(&x0, 0.7, &vel, None).unwrap();
        let twice = transport_variable(&transport_variable(&x0, 0.3, &vel, None).unwrap(), 0.4, &vel, None).unwrap();
        l2_diff(&once, &twice)
    };
    let (e1, e2, e3) = (err(128), err(256), err(512));
    // Interpolation errors oscillate between levels, so fit over two halvings.
    let order = 0.5 * (e1 / e3).log2();
    assert!(e1 < 1e-3 && e2 < e1 && order > 1.8, "{e1} {e2} {e3}");
}
