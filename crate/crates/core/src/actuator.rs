//! Nonlinear-spring accumulator model of an inflatable actuator.
//!
//! Gauge pressure is a polynomial in fill volume with no constant term,
//! `P(V) = sum_n k_n V^n`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MONOTONICITY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorSpec<T> {
    volume_capacity: T,
    /// `k_1, k_2, ...` in Pa / m^(3n).
    spring_coeffs: Vec<T>,
    initial_volume: T,
}

impl<T: Scalar> ActuatorSpec<T> {
    /// Validates capacity, initial volume and strict monotonicity of the
    /// spring curve on `[0, capacity]`.
    pub fn new(volume_capacity: T, spring_coeffs: Vec<T>, initial_volume: T) -> Result<Self> {
        if !(volume_capacity > T::zero()) || !volume_capacity.is_finite() {
            return Err(Error::InvalidActuator(format!(
                "volume capacity {volume_capacity} must be positive"
            )));
        }
        if !(initial_volume >= T::zero() && initial_volume <= volume_capacity) {
            return Err(Error::InvalidActuator(format!(
                "initial volume {initial_volume} outside [0, {volume_capacity}]"
            )));
        }
        if spring_coeffs.is_empty() || spring_coeffs.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidActuator(
                "spring coefficients must be finite and non-empty".into(),
            ));
        }
        let spec = Self {
            volume_capacity,
            spring_coeffs,
            initial_volume,
        };
        spec.check_monotone()?;
        Ok(spec)
    }

    fn check_monotone(&self) -> Result<()> {
        let cap = self.volume_capacity;
        let step = cap / T::lit(MONOTONICITY_SAMPLES as f64);
        let mut prev = self.pressure_unchecked(T::zero());
        for i in 0..=MONOTONICITY_SAMPLES {
            let v = step * T::lit(i as f64);
            if !(self.stiffness(v) > T::zero()) && i > 0 {
                return Err(Error::InvalidActuator(format!(
                    "spring curve is not strictly increasing at V = {v}"
                )));
            }
            if i > 0 {
                let p = self.pressure_unchecked(v);
                if !(p > prev) {
                    return Err(Error::InvalidActuator(format!(
                        "spring curve is not strictly increasing at V = {v}"
                    )));
                }
                prev = p;
            }
        }
        Ok(())
    }

    pub fn volume_capacity(&self) -> T {
        self.volume_capacity
    }

    pub fn spring_coeffs(&self) -> &[T] {
        &self.spring_coeffs
    }

    pub fn initial_volume(&self) -> T {
        self.initial_volume
    }

    /// Pressure at full capacity.
    pub fn max_pressure(&self) -> T {
        self.pressure_unchecked(self.volume_capacity)
    }

    /// Horner evaluation without the range check; used inside the
    /// integrator, whose intermediate stages may step slightly outside.
    #[inline]
    pub fn pressure_unchecked(&self, v: T) -> T {
        self.spring_coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &k| (acc + k) * v)
    }

    /// `dP/dV`.
    pub fn stiffness(&self, v: T) -> T {
        self.spring_coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(T::zero(), |acc, (i, &k)| acc * v + k * T::lit((i + 1) as f64))
    }

    pub fn pressure_from_volume(&self, v: T) -> Result<T> {
        if !(v >= T::zero() && v <= self.volume_capacity) {
            return Err(Error::VolumeOutOfRange {
                volume: v.as_f64(),
                capacity: self.volume_capacity.as_f64(),
            });
        }
        Ok(self.pressure_unchecked(v))
    }

    /// Inverse of the spring curve by bisection.
    pub fn volume_from_pressure(&self, p: T) -> Result<T> {
        let max = self.max_pressure();
        if !(p >= T::zero() && p <= max) {
            return Err(Error::PressureOutOfRange {
                pressure: p.as_f64(),
                max: max.as_f64(),
            });
        }
        if p == T::zero() {
            return Ok(T::zero());
        }
        if p == max {
            return Ok(self.volume_capacity);
        }
        let tol = T::lit(1e-12) * self.volume_capacity;
        let (mut lo, mut hi) = (T::zero(), self.volume_capacity);
        while hi - lo > tol {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.pressure_unchecked(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) / T::lit(2.0))
    }
}

/// Coarse fill time `V / Q`.
pub fn fill_time_estimate<T: Scalar>(volume: T, flow: T) -> Result<T> {
    if !(flow > T::zero()) {
        return Err(Error::InvalidFlow(flow.as_f64()));
    }
    Ok(volume / flow)
}
