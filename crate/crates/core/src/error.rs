use thiserror::Error;

/// Errors raised by the geometry, flow, simulation and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chamber count {0} is degenerate, at least 2 chambers are required")]
    DegenerateChamberCount(usize),
    #[error("joint angle {0} rad is outside (0, pi]")]
    InvalidAngle(f64),
    #[error("line y = x tan(phi) misses the chamber circle (discriminant {0})")]
    NoIntersection(f64),
    #[error("chamber geometry cannot close: {0}")]
    InfeasibleChamber(String),
    #[error("no feasible chamber design in the search grid")]
    NoFeasibleDesign,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid gas density {0} kg/m^3")]
    InvalidGas(f64),
    #[error("plate count {0} is not a positive integer")]
    InvalidPlateCount(i64),
    #[error("orifice diameter ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),

    #[error("invalid actuator: {0}")]
    InvalidActuator(String),
    #[error("volume {volume} m^3 outside [0, {capacity}]")]
    VolumeOutOfRange { volume: f64, capacity: f64 },
    #[error("pressure {pressure} Pa outside [0, {max}]")]
    PressureOutOfRange { pressure: f64, max: f64 },
    #[error("flow {0} m^3/s must be positive")]
    InvalidFlow(f64),

    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid simulation settings: {0}")]
    InvalidSimConfig(String),
    #[error("non-finite state at node `{node}` at t = {time} s")]
    NumericalDivergence { node: String, time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("normal equations are singular")]
    DegenerateFit,
    #[error("observed values have zero variance")]
    ZeroVariance,
    #[error("no single-plate baseline row for the pressure-drop anchor")]
    MissingBaseline,
    #[error("baseline pressure drop {0} kPa must be positive")]
    InvalidBaseline(f64),
    #[error("invalid measurement set: {0}")]
    InvalidMeasurements(String),
}

pub type Result<T> = std::result::Result<T, Error>;
