use proptest::prelude::*;

use hyploc_core::domain_check::{
    certify_rates, check_condition_ii, check_condition_iii, check_condition_iii_default, enumerate_pair_sup,
    period_balance, FailureReason, DEFAULT_HORIZON,
};
use hyploc_core::geometry::{
    indicator_on_grid, measure_intersection, periodize_eval, restrict_domain, wrap, ExpWeight, Grid1D, GridFunction,
    Interval, IntervalUnion,
};

/// Sorted disjoint intervals inside `[0, span]` from raw cut fractions.
fn intervals_from_cuts(mut cuts: Vec<f64>, span: f64) -> Vec<Interval> {
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut out = Vec::new();
    for pair in cuts.chunks_exact(2) {
        if pair[1] - pair[0] > 1e-3 {
            out.push(Interval::new(pair[0] * span, pair[1] * span).unwrap());
        }
    }
    out
}

/// Periodic unions whose first interval starts at 0.
fn periodic_domain() -> impl Strategy<Value = IntervalUnion> {
    (
        0.2f64..0.9,
        prop::collection::vec(0.0f64..1.0, 0..4),
        0.3f64..3.0,
        prop::collection::vec(0.01f64..0.99, 2..6),
    )
        .prop_map(|(first_len, prefix_cuts, period, pattern_cuts)| {
            let mut prefix = vec![Interval::new(0.0, first_len).unwrap()];
            let extra: Vec<Interval> = intervals_from_cuts(prefix_cuts, 2.0)
                .into_iter()
                .map(|iv| Interval::new(iv.lo() + first_len + 0.01, iv.hi() + first_len + 0.01).unwrap())
                .collect();
            prefix.extend(extra);
            let start = prefix.last().unwrap().hi() + 0.05;
            let mut pattern = intervals_from_cuts(pattern_cuts, period);
            if pattern.is_empty() {
                pattern.push(Interval::new(0.0, 0.5 * period).unwrap());
            }
            IntervalUnion::periodic(prefix, start, period, pattern).unwrap()
        })
}

#[test]
fn measure_of_equidistant_probe_matches_fine_grid_count() {
    let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap();
    let probe = Interval::new(0.5, 1.1).unwrap();
    let exact = measure_intersection(&dom, probe);
    assert!((exact - 0.1).abs() < 1e-14);
    let n = 600_000;
    let h = probe.length() / n as f64;
    let count = (0..n).filter(|i| dom.contains(probe.lo() + (*i as f64 + 0.5) * h)).count();
    assert!((count as f64 * h - exact).abs() < 1e-5);
}

#[test]
fn indicator_cells_cover_the_interval_exactly() {
    let grid = Grid1D::new(1.0, 10).unwrap();
    let chi = indicator_on_grid(&IntervalUnion::single(0.0, 0.2).unwrap(), grid);
    let total: f64 = chi.values().iter().sum::<f64>() * grid.h();
    assert!((total - 0.2).abs() < 1e-14);
    // cells [w_i - h/2, w_i + h/2]: node 1 is fully inside, node 2 half
    let expected = |w: f64| ((w + 0.05).min(0.2) - (w - 0.05).max(0.0)).max(0.0) / 0.1
        + ((w + 0.05 - 1.0).min(0.2) - (w - 0.05 - 1.0).max(0.0)).max(0.0) / 0.1
        + ((w + 0.05 + 1.0).min(0.2) - (w - 0.05 + 1.0).max(0.0)).max(0.0) / 0.1;
    for (i, v) in chi.values().iter().enumerate() {
        assert!((v - expected(grid.node(i))).abs() < 1e-12, "node {i}: {v}");
    }
}

#[test]
fn weight_examples() {
    let w = ExpWeight::new(0.0, 1.0).unwrap();
    assert!((w.value(2.0) - 2f64.exp()).abs() < 1e-14);
    assert_eq!(ExpWeight::new(0.6, 2.0).unwrap().value(0.6), 1.0);
    assert_eq!(ExpWeight::new(0.3, 0.0).unwrap().value(17.0), 1.0);
    assert!(ExpWeight::new(0.0, 1.0).is_ok());
}

#[test]
fn restriction_example() {
    let dom = IntervalUnion::equidistant(0.5, 0.7, 1.0).unwrap();
    let r = restrict_domain(&dom, 1.0);
    let pieces: Vec<_> = r.intervals().map(|iv| (iv.lo(), iv.hi())).collect();
    assert_eq!(pieces, vec![(0.5, 0.7)]);
    let full = IntervalUnion::equidistant(0.0, 1.0, 1.0).unwrap();
    assert!(full.tail().is_some());
    assert_eq!(full.cumulative_measure(7.5), 7.5);
}

#[test]
fn certificate_stays_below_density_by_scan() {
    let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap();
    let cert = certify_rates(&dom).unwrap();
    assert!(cert.k / cert.big_k <= 0.2 + 1e-12);
    // No ratio above the density passes, for any K in a wide scan.
    for i in -10..=10 {
        let big_k = 2f64.powi(i);
        for ratio in [0.21, 0.3, 0.5, 0.9] {
            assert!(!check_condition_ii(&dom, ratio * big_k, big_k).unwrap().stabilizable);
        }
    }
}

#[test]
fn measure_condition_example() {
    let dom = IntervalUnion::equidistant(0.0, 0.2, 1.0).unwrap();
    assert!(check_condition_iii_default(&dom, 0.2, 1.0, 64));
    // Brute force over probes with endpoints on a 0.05 lattice.
    for a in 0..200 {
        for b in a + 1..=200 {
            let p = Interval::new(a as f64 * 0.05, b as f64 * 0.05).unwrap();
            assert!(check_condition_iii(&dom, 0.2, 1.0, &[p]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn periodization_ignores_whole_periods(w in 0.0f64..5.0, k in -20i32..20, l in 0.5f64..4.0) {
        let f = |x: f64| (3.0 * x).sin() + x;
        let a = periodize_eval(f, w + k as f64 * l, l).unwrap();
        let b = periodize_eval(f, w, l).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + k.unsigned_abs() as f64));
        let r = wrap(w + k as f64 * l, l);
        prop_assert!((0.0..l).contains(&r));
    }

    #[test]
    fn indicator_sum_equals_measure(dom in periodic_domain(), cells in 8usize..400, l in 0.5f64..6.0) {
        let grid = Grid1D::new(l, cells).unwrap();
        let chi = indicator_on_grid(&dom, grid);
        let total = chi.values().iter().sum::<f64>() * grid.h();
        let exact = measure_intersection(&dom, Interval::new(0.0, l).unwrap());
        prop_assert!((total - exact).abs() <= 1e-12 * exact.max(1.0));
    }

    #[test]
    fn measure_is_additive_and_monotone(dom in periodic_domain(), a in 0.0f64..10.0, d1 in 0.01f64..5.0, d2 in 0.01f64..5.0) {
        let whole = measure_intersection(&dom, Interval::new(a, a + d1 + d2).unwrap());
        let left = measure_intersection(&dom, Interval::new(a, a + d1).unwrap());
        let right = measure_intersection(&dom, Interval::new(a + d1, a + d1 + d2).unwrap());
        prop_assert!((whole - left - right).abs() < 1e-12 * (1.0 + whole));
        prop_assert!(left <= whole + 1e-12);
        prop_assert!(whole <= d1 + d2 + 1e-12);
    }

    #[test]
    fn whole_cell_shift_is_a_norm_preserving_permutation(cells in 4usize..200, shift in 0usize..400, seed in any::<u64>()) {
        let grid = Grid1D::new(1.5, cells).unwrap();
        let f = GridFunction::from_fn(grid, |w| ((seed % 97) as f64 * w).sin() + 0.3);
        let g = f.shifted(shift as f64 * grid.h());
        for i in 0..cells {
            prop_assert!((g.values()[(i + shift) % cells] - f.values()[i]).abs() < 1e-12);
        }
        prop_assert!((g.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn text_form_round_trips(dom in periodic_domain()) {
        let back = IntervalUnion::parse(&dom.to_text()).unwrap();
        prop_assert_eq!(back, dom);
    }

    #[test]
    fn closed_form_matches_long_enumeration(dom in periodic_domain(), big_k in 0.25f64..16.0, ratio in 0.01f64..0.99) {
        let k = ratio * big_k;
        prop_assume!(period_balance(&dom, k, big_k).unwrap() <= 0.0);
        let short = enumerate_pair_sup(&dom, k, big_k, 2);
        let long = enumerate_pair_sup(&dom, k, big_k, DEFAULT_HORIZON);
        prop_assert!((short.value - long.value).abs() <= 1e-12 * (1.0 + long.value.abs()));
    }

    #[test]
    fn pair_and_measure_conditions_agree(dom in periodic_domain(), big_k in 0.25f64..16.0, ratio in 0.01f64..0.99) {
        let k = ratio * big_k;
        let sup = enumerate_pair_sup(&dom, k, big_k, 2).value;
        prop_assume!((sup - 1.0).abs() > 1e-9);
        let ii = check_condition_ii(&dom, k, big_k).unwrap().stabilizable;
        let iii = check_condition_iii_default(&dom, k / big_k, 1.0 / big_k, DEFAULT_HORIZON);
        prop_assert_eq!(ii, iii);
    }

    #[test]
    fn certificates_pass_and_bound_gaps(dom in periodic_domain()) {
        if let Some(cert) = certify_rates(&dom) {
            prop_assert!(cert.k < cert.big_k);
            let v = check_condition_ii(&dom, cert.k, cert.big_k).unwrap();
            prop_assert!(v.stabilizable && v.certificate.is_some());
            let ivs: Vec<Interval> = dom.intervals().take(dom.prefix().len() + 8 * dom.tail().unwrap().pattern().len()).collect();
            for w in ivs.windows(2) {
                prop_assert!(w[1].lo() - w[0].hi() <= 1.0 / cert.k + 1e-12);
            }
        }
    }

    #[test]
    fn necessary_conditions_reject(lo in 0.01f64..1.0, len in 0.01f64..2.0, big_k in 0.25f64..16.0, ratio in 0.01f64..0.99) {
        let k = ratio * big_k;
        let offset = IntervalUnion::equidistant(lo, lo + len, lo + len + 1.0).unwrap();
        prop_assert_eq!(check_condition_ii(&offset, k, big_k).unwrap().reason, Some(FailureReason::FirstIntervalOffset));
        let finite = IntervalUnion::single(0.0, len).unwrap();
        prop_assert_eq!(check_condition_ii(&finite, k, big_k).unwrap().reason, Some(FailureReason::FiniteMeasure));
    }
}
