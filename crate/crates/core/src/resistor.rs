//! Passive multi-orifice-plate flow resistors.
//!
//! All quantities are SI: metres, pascals (gauge), cubic metres per second.

use crate::error::{Error, Result};
use crate::scalar::{signed_sqrt, Scalar};

/// Sharp-edged orifice discharge coefficient.
pub const DEFAULT_DISCHARGE_COEFF: f64 = 0.61;
/// Air at 20 degC, kg/m^3.
pub const DEFAULT_GAS_DENSITY: f64 = 1.204;
/// Single-plate drop measured at a 50 kPa supply, Pa.
pub const SINGLE_PLATE_DROP: f64 = 12.95e3;
/// Plain-tube drop measured at a 50 kPa supply, Pa.
pub const PLAIN_TUBE_DROP: f64 = 2.19e3;
/// Supply pressure of the reference drop measurements, Pa.
pub const REFERENCE_SUPPLY: f64 = 50e3;

/// How a resistor turns a pressure differential into flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FlowLaw {
    /// `Q = (xi / k(N)) * sqrt*(dp)`.
    #[default]
    ScaledOrifice,
    /// As [`FlowLaw::ScaledOrifice`] but with a dead band of
    /// `activation_drop` around zero differential.
    ActivationThreshold,
}

/// Geometry and gas parameters of one resistor tube.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistorSpec<T> {
    /// Number of orifice plates; 0 is a plain tube.
    pub n_plates: u32,
    pub tube_inner_diameter: T,
    pub orifice_diameter: T,
    pub plate_thickness: T,
    pub tube_length: T,
    pub discharge_coeff: T,
    pub gas_density: T,
    /// Sustained differential the threshold law holds back, Pa.
    pub activation_drop: T,
}

impl<T: Scalar> ResistorSpec<T> {
    /// The printed resistor family: 4 mm bore, 0.98 mm orifices, 0.5 mm
    /// plates in a 40 mm tube.
    pub fn reference(n_plates: u32) -> Self {
        Self {
            n_plates,
            tube_inner_diameter: T::lit(4e-3),
            orifice_diameter: T::lit(0.98e-3),
            plate_thickness: T::lit(0.5e-3),
            tube_length: T::lit(40e-3),
            discharge_coeff: T::lit(DEFAULT_DISCHARGE_COEFF),
            gas_density: T::lit(DEFAULT_GAS_DENSITY),
            activation_drop: default_activation_drop(n_plates, T::lit(REFERENCE_SUPPLY)),
        }
    }

    /// Orifice-to-bore diameter ratio `h / delta`.
    pub fn diameter_ratio(&self) -> T {
        self.orifice_diameter / self.tube_inner_diameter
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.tube_inner_diameter;
        let h = self.orifice_diameter;
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::InvalidGeometry(format!("tube diameter {d} must be positive")));
        }
        if !(h > T::zero()) {
            return Err(Error::InvalidGeometry(format!("orifice diameter {h} must be positive")));
        }
        if h > d / T::lit(2.0) {
            return Err(Error::InvalidGeometry(format!(
                "orifice diameter {h} exceeds half the tube diameter {d}"
            )));
        }
        if !(self.plate_thickness >= T::zero()) || self.plate_thickness >= d {
            return Err(Error::InvalidGeometry(format!(
                "plate thickness {} must be below the tube diameter {d}",
                self.plate_thickness
            )));
        }
        let stack = T::lit(self.n_plates as f64) * (self.plate_thickness + d);
        if !(self.tube_length > T::zero()) || stack > self.tube_length {
            return Err(Error::InvalidGeometry(format!(
                "{} plates with spacing {d} need {stack}, tube length is {}",
                self.n_plates, self.tube_length
            )));
        }
        if !(self.discharge_coeff > T::zero()) {
            return Err(Error::InvalidGeometry(format!(
                "discharge coefficient {} must be positive",
                self.discharge_coeff
            )));
        }
        if !(self.gas_density > T::zero()) {
            return Err(Error::InvalidGas(self.gas_density.as_f64()));
        }
        if !(self.activation_drop >= T::zero()) || !self.activation_drop.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "activation drop {} must be non-negative",
                self.activation_drop
            )));
        }
        Ok(())
    }
}

/// `C_D * A * sqrt(2 / rho)` for a circular opening of the given diameter.
fn opening_xi<T: Scalar>(diameter: T, discharge_coeff: T, rho: T) -> Result<T> {
    if !(diameter > T::zero()) {
        return Err(Error::InvalidGeometry(format!("opening diameter {diameter} must be positive")));
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidGas(rho.as_f64()));
    }
    let area = T::PI() * diameter * diameter / T::lit(4.0);
    Ok(discharge_coeff * area * (T::lit(2.0) / rho).sqrt())
}

/// Single-orifice construction constant `xi = C_D * A_o * sqrt(2 / rho)`.
pub fn orifice_xi<T: Scalar>(spec: &ResistorSpec<T>) -> Result<T> {
    opening_xi(spec.orifice_diameter, spec.discharge_coeff, spec.gas_density)
}

/// The plain tube treated as an orifice of the bore diameter.
pub fn tube_xi<T: Scalar>(spec: &ResistorSpec<T>) -> Result<T> {
    opening_xi(spec.tube_inner_diameter, spec.discharge_coeff, spec.gas_density)
}

/// `Q = xi * sqrt*(dp)`.
pub fn single_orifice_flow<T: Scalar>(xi: T, delta_p: T) -> T {
    xi * signed_sqrt(delta_p)
}

/// Plate-count drop scaling `k(N) = sqrt(N)`.
pub fn plate_scaling<T: Scalar>(n_plates: i64) -> Result<T> {
    if n_plates <= 0 {
        return Err(Error::InvalidPlateCount(n_plates));
    }
    Ok(T::lit(n_plates as f64).sqrt())
}

/// Orifice coefficient `C_o = sqrt((1 - b^2)(b^-4 - 1) / (2 C_D))`.
///
/// Diagnostic only; the flow laws do not use it.
pub fn orifice_coefficient<T: Scalar>(spec: &ResistorSpec<T>) -> Result<T> {
    let beta = spec.diameter_ratio();
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::InvalidRatio(beta.as_f64()));
    }
    let b2 = beta * beta;
    let num = (T::one() - b2) * (T::one() / (b2 * b2) - T::one());
    Ok((num / (T::lit(2.0) * spec.discharge_coeff)).sqrt())
}

/// Drop a resistor holds back when no measurement is configured:
/// `k(N) * 12.95 kPa`, scaled linearly with the supply pressure. A plain
/// tube uses the measured tube drop.
pub fn default_activation_drop<T: Scalar>(n_plates: u32, supply_pressure: T) -> T {
    let scale = supply_pressure / T::lit(REFERENCE_SUPPLY);
    if n_plates == 0 {
        T::lit(PLAIN_TUBE_DROP) * scale
    } else {
        T::lit(n_plates as f64).sqrt() * T::lit(SINGLE_PLATE_DROP) * scale
    }
}

/// Effective conductance: the tube for `N = 0`, otherwise `xi / sqrt(N)`.
pub fn effective_xi<T: Scalar>(spec: &ResistorSpec<T>) -> Result<T> {
    if spec.n_plates == 0 {
        tube_xi(spec)
    } else {
        Ok(orifice_xi(spec)? / plate_scaling::<T>(i64::from(spec.n_plates))?)
    }
}

/// Flow from `p_up` to `p_down` through the resistor under `law`.
pub fn resistor_flow<T: Scalar>(spec: &ResistorSpec<T>, p_up: T, p_down: T, law: FlowLaw) -> Result<T> {
    Ok(flow_with_xi(effective_xi(spec)?, spec.activation_drop, p_up - p_down, law))
}

/// Flow for a precomputed effective conductance.
#[inline]
pub fn flow_with_xi<T: Scalar>(xi: T, activation_drop: T, delta_p: T, law: FlowLaw) -> T {
    match law {
        FlowLaw::ScaledOrifice => single_orifice_flow(xi, delta_p),
        FlowLaw::ActivationThreshold => {
            let excess = (delta_p.abs() - activation_drop).max(T::zero());
            let signed = if delta_p < T::zero() { -excess } else { excess };
            single_orifice_flow(xi, signed)
        }
    }
}

/// A resistor instance placed in a circuit: spec, law and cached conductance.
#[derive(Debug, Clone, PartialEq)]
pub struct Resistor<T> {
    pub spec: ResistorSpec<T>,
    pub law: FlowLaw,
    xi: T,
}

impl<T: Scalar> Resistor<T> {
    pub fn new(spec: ResistorSpec<T>, law: FlowLaw) -> Result<Self> {
        spec.validate()?;
        let xi = effective_xi(&spec)?;
        Ok(Self { spec, law, xi })
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    #[inline]
    pub fn flow(&self, p_up: T, p_down: T) -> T {
        flow_with_xi(self.xi, self.spec.activation_drop, p_up - p_down, self.law)
    }
}
