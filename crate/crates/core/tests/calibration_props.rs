use proptest::prelude::*;
use siaflow_core::calibration::poly2_coefficients;
use siaflow_core::{evaluate_fixed_sqrt, fit_poly2, fit_scaled_sqrt, Measurement, MeasurementSet};

fn dataset(drops: &[f64]) -> MeasurementSet<f64> {
    MeasurementSet::new(
        drops
            .iter()
            .enumerate()
            .map(|(i, &d)| Measurement {
                n_plates: i as u32 + 1,
                mean_time: 8.0,
                std_time: 0.1,
                delta_t: 1.0,
                pressure_drop: d,
            })
            .collect(),
    )
    .unwrap()
}

fn rmse_of(drops: &[f64], model: impl Fn(f64) -> f64) -> f64 {
    let sse: f64 = drops
        .iter()
        .enumerate()
        .map(|(i, d)| (d - model(i as f64 + 1.0)).powi(2))
        .sum();
    (sse / drops.len() as f64).sqrt()
}

fn not_flat(drops: &[f64]) -> bool {
    drops.iter().any(|d| (d - drops[0]).abs() > 1e-3)
}

proptest! {
    #[test]
    fn scaled_sqrt_residuals_are_orthogonal(drops in prop::collection::vec(0.0f64..60.0, 3..9)) {
        prop_assume!(not_flat(&drops));
        let a = fit_scaled_sqrt(&dataset(&drops)).unwrap().coefficients[0];
        let dot: f64 = drops
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let s = (i as f64 + 1.0).sqrt();
                s * (d - a * s)
            })
            .sum();
        prop_assert!(dot.abs() <= 1e-9 * drops.iter().sum::<f64>().max(1.0), "{}", dot);
    }

    #[test]
    fn fitted_sqrt_dominates_fixed(
        drops in prop::collection::vec(0.0f64..60.0, 3..9),
        dp_o in 0.1f64..40.0,
    ) {
        prop_assume!(not_flat(&drops));
        let d = dataset(&drops);
        let fitted = fit_scaled_sqrt(&d).unwrap().rmse;
        let fixed = evaluate_fixed_sqrt(&d, Some(dp_o)).unwrap().rmse;
        prop_assert!(fitted <= fixed * (1.0 + 1e-12), "{} > {}", fitted, fixed);
    }

    #[test]
    fn poly2_dominates_each_basis_alone(drops in prop::collection::vec(0.0f64..60.0, 3..9)) {
        prop_assume!(not_flat(&drops));
        let full = fit_poly2(&dataset(&drops)).unwrap().rmse;
        // One-term least squares for y = b x^k.
        for k in [1, 2] {
            let (num, den) = drops.iter().enumerate().fold((0.0, 0.0), |(n, m), (i, d)| {
                let x = (i as f64 + 1.0).powi(k);
                (n + x * d, m + x * x)
            });
            let b = num / den;
            let single = rmse_of(&drops, |n| b * n.powi(k));
            prop_assert!(full <= single * (1.0 + 1e-9), "k = {}: {} > {}", k, full, single);
        }
    }

    #[test]
    fn fits_are_scale_equivariant(
        drops in prop::collection::vec(0.0f64..60.0, 3..9),
        s in 0.01f64..100.0,
    ) {
        prop_assume!(not_flat(&drops));
        let scaled: Vec<f64> = drops.iter().map(|d| d * s).collect();
        let (d1, d2) = (dataset(&drops), dataset(&scaled));
        let pairs = [
            (fit_scaled_sqrt(&d1).unwrap(), fit_scaled_sqrt(&d2).unwrap()),
            (fit_poly2(&d1).unwrap(), fit_poly2(&d2).unwrap()),
            (evaluate_fixed_sqrt(&d1, Some(12.95)).unwrap(), evaluate_fixed_sqrt(&d2, Some(12.95 * s)).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!((b.rmse - s * a.rmse).abs() <= 1e-9 * (s * a.rmse).max(1e-9), "{:?} {:?}", a, b);
            prop_assert!((b.r_squared - a.r_squared).abs() <= 1e-9, "{:?} {:?}", a, b);
            prop_assert_eq!(fit_scaled_sqrt(&d1).unwrap(), fit_scaled_sqrt(&d1).unwrap());
        }
    }

    #[test]
    fn poly2_normal_equations_match_direct_solve(
        a1 in -10.0f64..10.0,
        a2 in -2.0f64..2.0,
        noise in prop::collection::vec(-0.5f64..0.5, 7),
    ) {
        let pts: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let x = i as f64 + 1.0;
                (x, a1 * x + a2 * x * x + e)
            })
            .collect();
        let (b1, b2) = poly2_coefficients(&pts).unwrap();
        let x = nalgebra::DMatrix::from_fn(pts.len(), 2, |r, c| pts[r].0.powi(c as i32 + 1));
        let y = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let sol = x.svd(true, true).solve(&y, 1e-14).unwrap();
        prop_assert!((b1 - sol[0]).abs() <= 1e-8 * (1.0 + sol[0].abs()));
        prop_assert!((b2 - sol[1]).abs() <= 1e-8 * (1.0 + sol[1].abs()));
    }
}
