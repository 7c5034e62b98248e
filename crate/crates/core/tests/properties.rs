//! Property tests for the structural invariants: exact CSV round-trips,
//! idempotent slicing, weight normalization, and affine invariances.

use gepu_core::calendar::Month;
use gepu_core::ingest::{load_epu_panel, restrict_months, EpuPanel, GdpWeightTable};
use gepu_core::pca::normalize_window;
use gepu_core::regress::{pearson_correlation, rescale_to_match};
use ndarray::Array2;
use proptest::prelude::*;

fn month(s: &str) -> Month {
    s.parse().unwrap()
}

prop_compose! {
    /// A valid panel: 2..40 consecutive months, 1..6 economies, positive
    /// finite values spanning many orders of magnitude.
    fn arb_panel()(
        n_months in 2usize..40,
        n_economies in 1usize..6,
        start_offset in 0i32..240,
        cells in proptest::collection::vec(1e-3f64..1e6, 240usize)
    ) -> EpuPanel {
        let start = month("1998-01").add_months(start_offset);
        let months: Vec<Month> = (0..n_months).map(|k| start.add_months(k as i32)).collect();
        let economies: Vec<String> = (0..n_economies).map(|i| format!("E{i}")).collect();
        let values = Array2::from_shape_fn((n_months, n_economies), |(r, c)| {
            cells[(r * n_economies + c) % cells.len()]
        });
        EpuPanel::new(months, economies, values).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn epu_csv_round_trip_is_exact(panel in arb_panel()) {
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), &buf).unwrap();
        let reloaded = load_epu_panel(file.path(), None).unwrap();
        prop_assert_eq!(panel, reloaded);
    }

    #[test]
    fn restrict_months_is_idempotent(panel in arb_panel(), lo in 0usize..10, hi in 0usize..10) {
        let n = panel.n_months();
        let first = panel.first_month().add_months((lo % n) as i32);
        let last_offset = (lo % n) + hi % (n - lo % n).max(1);
        let last = panel.first_month().add_months(last_offset.min(n - 1) as i32);
        prop_assume!(first <= last);
        let once = restrict_months(&panel, first, last).unwrap();
        let twice = restrict_months(&once, first, last).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn gdp_weights_sum_to_one(
        values in proptest::collection::vec(0f64..1e9, 1..30),
        years in proptest::collection::vec(1990i32..2030, 1..30),
    ) {
        let rows: Vec<(i32, String, f64)> = values
            .iter()
            .zip(&years)
            .enumerate()
            .map(|(i, (&v, &y))| (y, format!("E{i}"), v))
            .collect();
        // Reject draws where some year's values sum to zero.
        match GdpWeightTable::from_values(&rows) {
            Ok(table) => {
                for year in table.years() {
                    let total: f64 = table.year_weights(year).unwrap().values().sum();
                    prop_assert!((total - 1.0).abs() < 1e-12, "year {} sums to {}", year, total);
                }
            }
            Err(_) => prop_assume!(false),
        }
    }

    #[test]
    fn normalization_is_affine_invariant(
        base in proptest::collection::vec(1.0f64..1e4, 6..24),
        scale in 1e-2f64..1e3,
        shift in 0f64..1e4,
    ) {
        let spread = base.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - base.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);

        let n = base.len();
        let months: Vec<Month> = (0..n).map(|k| month("2003-01").add_months(k as i32)).collect();
        let transformed: Vec<f64> = base.iter().map(|v| scale * v + shift).collect();

        let p1 = EpuPanel::new(
            months.clone(),
            vec!["A".to_string()],
            Array2::from_shape_fn((n, 1), |(r, _)| base[r]),
        ).unwrap();
        let p2 = EpuPanel::new(
            months,
            vec!["A".to_string()],
            Array2::from_shape_fn((n, 1), |(r, _)| transformed[r]),
        ).unwrap();

        let end = p1.last_month();
        let w1 = normalize_window(&p1, end, n).unwrap();
        let w2 = normalize_window(&p2, end, n).unwrap();
        for s in 0..n {
            prop_assert!((w1.x[(0, s)] - w2.x[(0, s)]).abs() < 1e-9);
        }
    }

    #[test]
    fn pearson_is_invariant_under_positive_affine_maps(
        a in proptest::collection::vec(-1e3f64..1e3, 4..40),
        scale in 1e-3f64..1e3,
        shift in -1e3f64..1e3,
    ) {
        let n = a.len();
        let b: Vec<f64> = (0..n).map(|k| (k as f64 * 0.83).sin() * 10.0).collect();
        prop_assume!(a.windows(2).any(|w| w[0] != w[1]));
        let r = pearson_correlation(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
        prop_assume!(a2.windows(2).any(|w| w[0] != w[1]));
        let r2 = pearson_correlation(&a2, &b).unwrap();
        prop_assert!((r - r2).abs() < 1e-12, "{} vs {}", r, r2);
    }

    #[test]
    fn rescale_matches_target_sample_moments(
        series in proptest::collection::vec(-1e3f64..1e3, 4..40),
        target_mean in -1e3f64..1e3,
        target_sd in 1e-2f64..1e3,
    ) {
        prop_assume!(series.windows(2).any(|w| w[0] != w[1]));
        let n = series.len();
        let target: Vec<f64> = (0..n)
            .map(|k| target_mean + target_sd * ((k as f64 * 1.31).sin()))
            .collect();
        prop_assume!(target.windows(2).any(|w| w[0] != w[1]));

        let rescaled = rescale_to_match(&series, &target).unwrap();
        let moments = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
            (mean, var)
        };
        let (mt, vt) = moments(&target);
        let (mr, vr) = moments(&rescaled);
        prop_assert!((mt - mr).abs() < 1e-9 * (1.0 + mt.abs()));
        prop_assert!((vt - vr).abs() < 1e-9 * (1.0 + vt.abs()).powi(2));
    }
}
