use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SMOOTHING_WINDOW: usize = 5;

/// First time `series` reaches `fraction * reference`, linearly interpolated.
/// `Ok(None)` means the level is never reached.
pub fn activation_time<T: Scalar>(
    times: &[T],
    series: &[T],
    reference: T,
    fraction: T,
) -> Result<Option<T>> {
    if !(fraction > T::zero() && fraction < T::one()) {
        return Err(Error::InvalidMeasurements(format!(
            "activation fraction {fraction} outside (0, 1)"
        )));
    }
    if times.len() != series.len() {
        return Err(Error::InvalidMeasurements(
            "time base and series differ in length".into(),
        ));
    }
    let level = fraction * reference;
    let Some(first) = series.first() else {
        return Ok(None);
    };
    if *first >= level {
        return Ok(Some(times[0]));
    }
    for i in 1..series.len() {
        let (a, b) = (series[i - 1], series[i]);
        if b >= level {
            let w = (level - a) / (b - a);
            return Ok(Some(times[i - 1] + w * (times[i] - times[i - 1])));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflectionDrop<T> {
    pub time: T,
    pub index: usize,
    /// `upstream(t*) - downstream(t*)`.
    pub drop: T,
}

/// Drop across a resistor at the steepest point of the downstream rise.
///
/// The slope is a centered difference (one-sided at the ends), smoothed by a
/// centered 5-sample moving average truncated at the edges. Ties go to the
/// earliest sample.
pub fn pressure_drop_at_inflection<T: Scalar>(
    times: &[T],
    upstream: &[T],
    downstream: &[T],
) -> Result<InflectionDrop<T>> {
    let n = downstream.len();
    if n < SMOOTHING_WINDOW {
        return Err(Error::InsufficientData(format!(
            "{n} samples, need at least {SMOOTHING_WINDOW}"
        )));
    }
    if times.len() != n || upstream.len() != n {
        return Err(Error::InvalidMeasurements(
            "series do not share a time base".into(),
        ));
    }
    let slope: Vec<T> = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (downstream[hi] - downstream[lo]) / (times[hi] - times[lo])
        })
        .collect();
    let half = SMOOTHING_WINDOW / 2;
    let mut best = (0, T::neg_infinity());
    for i in 0..n {
        let (lo, hi) = (i.saturating_sub(half), (i + half).min(n - 1));
        let sum = slope[lo..=hi].iter().fold(T::zero(), |acc, &s| acc + s);
        let avg = sum / T::lit((hi - lo + 1) as f64);
        if avg > best.1 {
            best = (i, avg);
        }
    }
    let index = best.0;
    Ok(InflectionDrop {
        time: times[index],
        index,
        drop: upstream[index] - downstream[index],
    })
}
