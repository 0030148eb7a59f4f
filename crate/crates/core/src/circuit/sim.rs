use super::trace::TraceSet;
use super::Circuit;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_end: T,
    /// Record one sample every this many steps (t = 0 and t_end always).
    pub record_every: usize,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(dt: T, t_end: T, record_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidSimConfig(format!("dt = {} must be positive", self.dt)));
        }
        // t_end = 0 is the degenerate single-sample run
        if !(self.t_end == T::zero() || self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidSimConfig(format!(
                "t_end = {} must be 0 or at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidSimConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of grid steps; a trailing partial step counts as one.
    pub fn n_steps(&self) -> usize {
        let ratio = (self.t_end / self.dt).as_f64();
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub time: T,
    /// Actuator volumes in state-slot order.
    pub volumes: Vec<T>,
}

impl<T: Scalar> SimState<T> {
    pub fn initial(circuit: &Circuit<T>) -> Self {
        Self {
            time: T::zero(),
            volumes: circuit.initial_volumes(),
        }
    }
}

/// An actuator volume pushed against `[0, V_cap]` by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampEvent<T> {
    pub time: T,
    pub node: String,
    /// Volume before clamping, m^3.
    pub unclamped: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub state: SimState<T>,
    pub clamps: Vec<ClampEvent<T>>,
}

struct Workspace<T> {
    pressures: Vec<T>,
    k: [Vec<T>; 4],
    trial: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(circuit: &Circuit<T>) -> Self {
        let n = circuit.actuator_nodes().len();
        Self {
            pressures: vec![T::zero(); circuit.nodes().len()],
            k: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
            trial: vec![T::zero(); n],
        }
    }
}

fn derivative<T: Scalar>(circuit: &Circuit<T>, volumes: &[T], open: &[bool], pressures: &mut [T], out: &mut [T]) {
    circuit.fill_pressures(volumes, open, pressures);
    for (slot, &node) in circuit.actuator_nodes().iter().enumerate() {
        out[slot] = circuit.node_net_inflow(node, pressures, open);
    }
}

/// Classical RK4 over `[state.time, state.time + h]` with valve states frozen
/// at the interval start, followed by clamping to `[0, V_cap]`.
fn rk4_substep<T: Scalar>(
    circuit: &Circuit<T>,
    state: &mut SimState<T>,
    h: T,
    ws: &mut Workspace<T>,
    clamps: &mut Vec<ClampEvent<T>>,
) -> Result<()> {
    let open = circuit.edge_states(state.time);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let n = state.volumes.len();
    let Workspace { pressures, k, trial } = ws;
    let [k1, k2, k3, k4] = k;

    derivative(circuit, &state.volumes, &open, pressures, k1);
    for i in 0..n {
        trial[i] = state.volumes[i] + h / two * k1[i];
    }
    derivative(circuit, trial, &open, pressures, k2);
    for i in 0..n {
        trial[i] = state.volumes[i] + h / two * k2[i];
    }
    derivative(circuit, trial, &open, pressures, k3);
    for i in 0..n {
        trial[i] = state.volumes[i] + h * k3[i];
    }
    derivative(circuit, trial, &open, pressures, k4);

    let t_next = state.time + h;
    for i in 0..n {
        let v = state.volumes[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        if !v.is_finite() {
            return Err(Error::NumericalDivergence {
                node: circuit.nodes()[circuit.actuator_nodes()[i]].name.clone(),
                time: t_next.as_f64(),
            });
        }
        let cap = circuit.actuator_spec(i).volume_capacity();
        let clamped = v.max(T::zero()).min(cap);
        if clamped != v {
            clamps.push(ClampEvent {
                time: t_next,
                node: circuit.nodes()[circuit.actuator_nodes()[i]].name.clone(),
                unclamped: v,
            });
        }
        state.volumes[i] = clamped;
    }
    state.time = t_next;
    Ok(())
}

/// One RK4 step of length `dt` from `state`, valve states taken at
/// `state.time`.
pub fn step<T: Scalar>(circuit: &Circuit<T>, state: &SimState<T>, dt: T) -> Result<StepOutcome<T>> {
    if state.volumes.len() != circuit.actuator_nodes().len() {
        return Err(Error::InvalidSimConfig("state does not match the circuit".into()));
    }
    let mut ws = Workspace::new(circuit);
    let mut next = state.clone();
    let mut clamps = Vec::new();
    rk4_substep(circuit, &mut next, dt, &mut ws, &mut clamps)?;
    Ok(StepOutcome { state: next, clamps })
}

/// Integrates from the actuators' initial volumes to `sim.t_end`.
///
/// Steps land on the grid `k * dt`; a step that straddles a valve event is
/// split at the event time.
pub fn simulate<T: Scalar>(circuit: &Circuit<T>, sim: &SimConfig<T>) -> Result<TraceSet<T>> {
    sim.validate()?;
    let mut ws = Workspace::new(circuit);
    let mut state = SimState::initial(circuit);
    let mut trace = TraceSet::empty(circuit);
    let mut clamps = Vec::new();
    trace.record(circuit, &state);

    let events = circuit.event_times();
    let mut next_event = 0;
    let n_steps = sim.n_steps();
    for k in 0..n_steps {
        let t_target = if k + 1 == n_steps {
            sim.t_end
        } else {
            sim.dt * T::lit((k + 1) as f64)
        };
        while next_event < events.len() && events[next_event] <= state.time {
            next_event += 1;
        }
        while next_event < events.len() && events[next_event] < t_target {
            let h = events[next_event] - state.time;
            rk4_substep(circuit, &mut state, h, &mut ws, &mut clamps)?;
            state.time = events[next_event];
            next_event += 1;
        }
        let h = t_target - state.time;
        if h > T::zero() {
            rk4_substep(circuit, &mut state, h, &mut ws, &mut clamps)?;
        }
        state.time = t_target;
        if (k + 1) % sim.record_every == 0 || k + 1 == n_steps {
            trace.record(circuit, &state);
        }
    }
    trace.set_clamps(clamps);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::ActuatorSpec;
    use crate::circuit::{CircuitBuilder, ValveSchedule, ValveState};
    use crate::resistor::{FlowLaw, Resistor, ResistorSpec};

    fn linear_fill() -> Circuit<f64> {
        CircuitBuilder::new()
            .source("src", 5e4)
            .actuator("A", ActuatorSpec::new(2e-3, vec![5e7], 0.0).unwrap())
            .resistor(
                "R",
                "src",
                "A",
                Resistor::new(ResistorSpec::reference(1), FlowLaw::ScaledOrifice).unwrap(),
            )
            .build()
            .unwrap()
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 1).is_err());
        assert!(SimConfig::new(1e-3, 1e-4, 1).is_err());
        assert!(SimConfig::new(1e-3, 1.0, 0).is_err());
        assert!(SimConfig::new(1e-3, 0.0, 1).is_ok());
        assert_eq!(SimConfig::new(1e-3, 1.0, 1).unwrap().n_steps(), 1000);
        assert_eq!(SimConfig::new(0.1, 0.25, 1).unwrap().n_steps(), 3);
    }

    #[test]
    fn zero_flux_leaves_state_unchanged() {
        let c = linear_fill();
        let full = SimState {
            time: 0.0,
            volumes: vec![1e-3],
        };
        let out = step(&c, &full, 1e-3).unwrap();
        assert_eq!(out.state.volumes, vec![1e-3]);
        assert!(out.clamps.is_empty());
    }

    #[test]
    fn t_end_zero_gives_one_sample() {
        let c = linear_fill();
        let trace = simulate(&c, &SimConfig::new(1e-3, 0.0, 1).unwrap()).unwrap();
        assert_eq!(trace.times(), &[0.0]);
        assert_eq!(trace.actuator_volumes()[0], vec![0.0]);
    }

    #[test]
    fn records_start_and_end() {
        let c = linear_fill();
        let trace = simulate(&c, &SimConfig::new(1e-3, 0.0105, 4).unwrap()).unwrap();
        assert_eq!(trace.times().first(), Some(&0.0));
        assert_eq!(trace.times().last(), Some(&0.0105));
        assert_eq!(trace.len(), 1 + 2 + 1);
    }

    #[test]
    fn closed_inlet_gives_flat_traces() {
        let c = CircuitBuilder::new()
            .source("src", 5e4)
            .actuator("A", ActuatorSpec::new(2e-3, vec![5e7], 0.0).unwrap())
            .valve(
                "V",
                "src",
                "A",
                ValveSchedule::new(ValveState::Open, vec![(0.0, ValveState::Closed)]).unwrap(),
                1e-6,
            )
            .build()
            .unwrap();
        let trace = simulate(&c, &SimConfig::new(1e-3, 1.0, 100).unwrap()).unwrap();
        assert!(trace.actuator_volumes()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn valve_event_splits_the_step() {
        // inlet closes mid-step; the fill must stop exactly at the event
        let schedule = ValveSchedule::new(ValveState::Open, vec![(0.0105, ValveState::Closed)]).unwrap();
        let c = CircuitBuilder::new()
            .source("src", 5e4)
            .actuator("A", ActuatorSpec::new(2e-3, vec![5e7], 0.0).unwrap())
            .valve("V", "src", "A", schedule, 1e-6)
            .build()
            .unwrap();
        let trace = simulate(&c, &SimConfig::new(1e-3, 0.05, 1).unwrap()).unwrap();
        let vols = &trace.actuator_volumes()[0];
        let at = |t: f64| vols[trace.times().iter().position(|&x| (x - t).abs() < 1e-12).unwrap()];
        assert!(at(0.010) < at(0.011));
        assert_eq!(at(0.011), at(0.05));
        // short fill: dV/dt ~ xi sqrt(P_in) nearly constant
        let expected = 1e-6 * 5e4_f64.sqrt() * 0.0105;
        assert!((at(0.05) - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn over_capacity_is_clamped_and_logged() {
        let c = CircuitBuilder::new()
            .source("src", 5e4)
            .actuator("A", ActuatorSpec::new(1e-4, vec![1e8], 0.0).unwrap())
            .valve("V", "src", "A", ValveSchedule::always(ValveState::Open), 1e-5)
            .build()
            .unwrap();
        let trace = simulate(&c, &SimConfig::new(1e-3, 0.5, 10).unwrap()).unwrap();
        assert!(trace.actuator_volumes()[0].iter().all(|&v| v <= 1e-4));
        assert!(!trace.clamps().is_empty());
        assert_eq!(trace.clamps()[0].node, "A");
    }

    #[test]
    fn divergence_reports_node() {
        let c = CircuitBuilder::new()
            .source("src", f64::MAX)
            .actuator("A", ActuatorSpec::new(1.0, vec![1.0], 0.0).unwrap())
            .valve("V", "src", "A", ValveSchedule::always(ValveState::Open), f64::MAX)
            .build()
            .unwrap();
        let err = simulate(&c, &SimConfig::new(1.0, 1.0, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NumericalDivergence { node, .. } if node == "A"));
    }
}
