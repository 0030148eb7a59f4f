//! Plate-scaling fits of the characteristic pressure drop against plate count.
//!
//! Pressure drops are in kPa throughout this module, times in seconds.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub n_plates: u32,
    pub mean_time: T,
    pub std_time: T,
    pub delta_t: T,
    pub pressure_drop: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    rows: Vec<Measurement<T>>,
}

impl<T: Scalar> MeasurementSet<T> {
    pub fn new(rows: Vec<Measurement<T>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if rows[..i].iter().any(|o| o.n_plates == r.n_plates) {
                return Err(Error::InvalidMeasurements(format!(
                    "duplicate plate count N{}",
                    r.n_plates
                )));
            }
            let fields = [r.mean_time, r.std_time, r.delta_t, r.pressure_drop];
            if fields.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasurements(format!(
                    "non-finite value in row N{}",
                    r.n_plates
                )));
            }
            if r.pressure_drop < T::zero() {
                return Err(Error::InvalidMeasurements(format!(
                    "negative pressure drop in row N{}",
                    r.n_plates
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Measured means for the N0..N7 resistors at 50 kPa supply.
    pub fn table1() -> Self {
        const ROWS: [(u32, f64, f64, f64, f64); 8] = [
            (0, 7.15, 0.11, 0.00, 2.19),
            (1, 7.81, 0.05, 0.66, 12.95),
            (2, 8.93, 0.09, 1.78, 17.91),
            (3, 8.77, 0.04, 1.62, 19.90),
            (4, 8.88, 0.12, 1.73, 25.41),
            (5, 9.34, 0.09, 2.19, 23.67),
            (6, 9.86, 0.42, 2.71, 23.46),
            (7, 14.41, 0.12, 7.25, 34.66),
        ];
        let rows = ROWS
            .iter()
            .map(|&(n, m, s, d, p)| Measurement {
                n_plates: n,
                mean_time: T::lit(m),
                std_time: T::lit(s),
                delta_t: T::lit(d),
                pressure_drop: T::lit(p),
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Measurement<T>] {
        &self.rows
    }

    pub fn row(&self, n_plates: u32) -> Option<&Measurement<T>> {
        self.rows.iter().find(|r| r.n_plates == n_plates)
    }

    /// `(N, drop)` pairs with at least one plate.
    fn fit_points(&self) -> Vec<(T, T)> {
        self.rows
            .iter()
            .filter(|r| r.n_plates >= 1)
            .map(|r| (T::lit(r.n_plates as f64), r.pressure_drop))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitModel {
    /// `dp = sqrt(N) * dp_o` with `dp_o` fixed.
    FixedSqrt,
    /// `dp = a * sqrt(N)`, `a` fitted.
    ScaledSqrt,
    /// `dp = a1 N + a2 N^2`.
    Poly2,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::FixedSqrt => "FixedSqrt",
            FitModel::ScaledSqrt => "ScaledSqrt",
            FitModel::Poly2 => "Poly2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: FitModel,
    pub coefficients: Vec<T>,
    pub rmse: T,
    pub r_squared: T,
}

impl<T: Scalar> FitResult<T> {
    pub fn predict(&self, n_plates: T) -> T {
        match self.model {
            FitModel::FixedSqrt | FitModel::ScaledSqrt => self.coefficients[0] * n_plates.sqrt(),
            FitModel::Poly2 => {
                (self.coefficients[0] + self.coefficients[1] * n_plates) * n_plates
            }
        }
    }
}

/// RMSE and coefficient of determination.
pub fn goodness<T: Scalar>(observed: &[T], predicted: &[T]) -> Result<(T, T)> {
    if observed.is_empty() || observed.len() != predicted.len() {
        return Err(Error::InsufficientData(format!(
            "{} observed vs {} predicted values",
            observed.len(),
            predicted.len()
        )));
    }
    let m = T::lit(observed.len() as f64);
    let mean = observed.iter().fold(T::zero(), |a, &y| a + y) / m;
    let ss_res = observed
        .iter()
        .zip(predicted)
        .fold(T::zero(), |a, (&y, &p)| a + (y - p) * (y - p));
    let ss_tot = observed.iter().fold(T::zero(), |a, &y| a + (y - mean) * (y - mean));
    if !(ss_tot > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    Ok(((ss_res / m).sqrt(), T::one() - ss_res / ss_tot))
}

fn finish<T: Scalar>(model: FitModel, coefficients: Vec<T>, points: &[(T, T)]) -> Result<FitResult<T>> {
    let mut fit = FitResult {
        model,
        coefficients,
        rmse: T::zero(),
        r_squared: T::one(),
    };
    let observed: Vec<T> = points.iter().map(|p| p.1).collect();
    let predicted: Vec<T> = points.iter().map(|p| fit.predict(p.0)).collect();
    let (rmse, r2) = goodness(&observed, &predicted)?;
    fit.rmse = rmse;
    fit.r_squared = r2;
    Ok(fit)
}

/// Least squares `a = sum(sqrt(N) dp) / sum(N)` over rows with N >= 1.
pub fn fit_scaled_sqrt<T: Scalar>(data: &MeasurementSet<T>) -> Result<FitResult<T>> {
    let points = data.fit_points();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} rows with at least one plate, need 2",
            points.len()
        )));
    }
    let num = points.iter().fold(T::zero(), |a, &(n, y)| a + n.sqrt() * y);
    let den = points.iter().fold(T::zero(), |a, &(n, _)| a + n);
    finish(FitModel::ScaledSqrt, vec![num / den], &points)
}

/// Evaluates `sqrt(N) * dp_o` without fitting. `None` takes `dp_o` from the
/// N1 row.
pub fn evaluate_fixed_sqrt<T: Scalar>(data: &MeasurementSet<T>, delta_p_o: Option<T>) -> Result<FitResult<T>> {
    let dp_o = match delta_p_o {
        Some(v) => v,
        None => data.row(1).ok_or(Error::MissingBaseline)?.pressure_drop,
    };
    if !(dp_o > T::zero()) || !dp_o.is_finite() {
        return Err(Error::InvalidBaseline(dp_o.as_f64()));
    }
    let points = data.fit_points();
    if points.is_empty() {
        return Err(Error::InsufficientData("no rows with at least one plate".into()));
    }
    finish(FitModel::FixedSqrt, vec![dp_o], &points)
}

/// `(a1, a2)` from the 2x2 normal equations of `y = a1 x + a2 x^2`.
pub fn poly2_coefficients<T: Scalar>(points: &[(T, T)]) -> Result<(T, T)> {
    let (mut s2, mut s3, mut s4, mut sy1, mut sy2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let x2 = x * x;
        s2 = s2 + x2;
        s3 = s3 + x2 * x;
        s4 = s4 + x2 * x2;
        sy1 = sy1 + x * y;
        sy2 = sy2 + x2 * y;
    }
    let det = s2 * s4 - s3 * s3;
    // Cauchy-Schwarz: det >= 0 with equality iff all x are equal (or zero).
    if !(det > T::lit(1e-12) * s2 * s4) {
        return Err(Error::DegenerateFit);
    }
    Ok(((sy1 * s4 - s3 * sy2) / det, (s2 * sy2 - s3 * sy1) / det))
}

pub fn fit_poly2<T: Scalar>(data: &MeasurementSet<T>) -> Result<FitResult<T>> {
    let points = data.fit_points();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} rows with at least one plate, need 3",
            points.len()
        )));
    }
    let (a1, a2) = poly2_coefficients(&points)?;
    finish(FitModel::Poly2, vec![a1, a2], &points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64, ns: &[u32]) -> MeasurementSet<f64> {
        MeasurementSet::new(
            ns.iter()
                .map(|&n| Measurement {
                    n_plates: n,
                    mean_time: 0.0,
                    std_time: 0.0,
                    delta_t: 0.0,
                    pressure_drop: f(n as f64),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_sqrt_data() {
        let d = synthetic(|n| 5.0 * n.sqrt(), &[1, 2, 3, 4]);
        let f = fit_scaled_sqrt(&d).unwrap();
        assert_relative_eq!(f.coefficients[0], 5.0, max_relative = 1e-14);
        assert!(f.rmse < 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
        let g = evaluate_fixed_sqrt(&d, Some(5.0)).unwrap();
        assert!(g.rmse < 1e-12);
    }

    #[test]
    fn table1_scaled_sqrt() {
        let f = fit_scaled_sqrt(&MeasurementSet::<f64>::table1()).unwrap();
        assert!((f.coefficients[0] - 11.63).abs() < 0.01, "{f:?}");
        assert!((f.rmse - 2.79).abs() < 0.01, "{f:?}");
        assert!((f.r_squared - 0.804).abs() < 0.001, "{f:?}");
    }

    #[test]
    fn table1_fixed_sqrt_uses_n1_row() {
        let t = MeasurementSet::<f64>::table1();
        let f = evaluate_fixed_sqrt(&t, None).unwrap();
        assert_eq!(f.coefficients[0], 12.95);
        assert!((f.rmse - 3.84).abs() < 0.01, "{f:?}");
        assert_eq!(f, evaluate_fixed_sqrt(&t, Some(12.95)).unwrap());
    }

    #[test]
    fn fixed_sqrt_errors() {
        let d = synthetic(|n| n, &[2, 3]);
        assert_eq!(evaluate_fixed_sqrt(&d, None), Err(Error::MissingBaseline));
        assert!(evaluate_fixed_sqrt(&d, Some(0.0)).is_err());
    }

    #[test]
    fn too_few_rows() {
        let d = synthetic(|n| n, &[0, 1]);
        assert!(matches!(fit_scaled_sqrt(&d), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_poly2(&d), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn exact_parabola() {
        let d = synthetic(|n| 3.0 * n - 0.25 * n * n, &[1, 2, 3, 5, 7]);
        let f = fit_poly2(&d).unwrap();
        assert_relative_eq!(f.coefficients[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.coefficients[1], -0.25, max_relative = 1e-12);
        assert!(f.rmse < 1e-12);
    }

    #[test]
    fn same_n_is_degenerate() {
        let pts = [(3.0, 1.0), (3.0, 2.0), (3.0, 3.0)];
        assert_eq!(poly2_coefficients(&pts), Err(Error::DegenerateFit));
    }

    #[test]
    fn goodness_examples() {
        let y: [f64; 3] = [1.0, 2.0, 4.0];
        assert_eq!(goodness(&y, &y).unwrap(), (0.0, 1.0));
        let mean = [7.0 / 3.0; 3];
        assert!(goodness(&y, &mean).unwrap().1.abs() < 1e-15);
        assert_eq!(goodness(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::ZeroVariance));
        assert!(goodness::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn rejects_bad_rows() {
        let row = |n, p| Measurement {
            n_plates: n,
            mean_time: 1.0,
            std_time: 0.0,
            delta_t: 0.0,
            pressure_drop: p,
        };
        assert!(MeasurementSet::new(vec![row(1, 1.0), row(1, 2.0)]).is_err());
        assert!(MeasurementSet::new(vec![row(1, -1.0)]).is_err());
    }
}
