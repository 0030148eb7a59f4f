//! Models for pneumatic circuits of series inflatable actuators timed by
//! passive multi-orifice flow resistors.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below are what the command-line tool uses.

pub mod actuator;
pub mod calibration;
pub mod circuit;
pub mod error;
pub mod geometry;
pub mod resistor;
pub mod scalar;

pub use actuator::{fill_time_estimate, ActuatorSpec};
pub use calibration::{
    evaluate_fixed_sqrt, fit_poly2, fit_scaled_sqrt, goodness, FitModel, FitResult, Measurement,
    MeasurementSet,
};
pub use circuit::{
    activation_time, pressure_drop_at_inflection, simulate, step, Circuit, CircuitBuilder,
    SimConfig, SimState, TraceSet, ValveSchedule, ValveState,
};
pub use error::{Error, Result};
pub use geometry::{chamber_angle, chamber_params, circle_line_intersection, design_actuator};
pub use resistor::{FlowLaw, Resistor, ResistorSpec};
pub use scalar::{signed_sqrt, Scalar};

pub type ChamberGeometry64 = geometry::ChamberGeometry<f64>;
pub type ActuatorDesign64 = geometry::ActuatorDesign<f64>;
pub type ResistorSpec64 = ResistorSpec<f64>;
pub type Resistor64 = Resistor<f64>;
pub type ActuatorSpec64 = ActuatorSpec<f64>;
pub type Circuit64 = Circuit<f64>;
pub type CircuitBuilder64 = CircuitBuilder<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type TraceSet64 = TraceSet<f64>;
pub type MeasurementSet64 = MeasurementSet<f64>;
pub type FitResult64 = FitResult<f64>;

pub type Circuit32 = Circuit<f32>;
pub type TraceSet32 = TraceSet<f32>;
