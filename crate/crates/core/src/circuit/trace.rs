use std::fmt::Write as _;

use super::sim::{ClampEvent, SimState};
use super::Circuit;
use crate::scalar::Scalar;

/// Sampled output of a simulation run. Series are indexed
/// `[node | actuator | edge][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet<T> {
    times: Vec<T>,
    node_names: Vec<String>,
    actuator_names: Vec<String>,
    edge_names: Vec<String>,
    node_pressures: Vec<Vec<T>>,
    actuator_volumes: Vec<Vec<T>>,
    edge_flows: Vec<Vec<T>>,
    clamps: Vec<ClampEvent<T>>,
}

/// Flux conservation over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport<T> {
    /// Largest `|sum dV/dt - (Q_sources - Q_outlets)|` over the samples.
    pub max_residual: T,
    /// Largest edge flow magnitude seen in the run.
    pub flow_scale: T,
}

impl<T: Scalar> ConservationReport<T> {
    pub fn relative(&self) -> T {
        if self.flow_scale > T::zero() {
            self.max_residual / self.flow_scale
        } else {
            self.max_residual
        }
    }
}

impl<T: Scalar> TraceSet<T> {
    pub(crate) fn empty(circuit: &Circuit<T>) -> Self {
        let nodes = circuit.nodes();
        Self {
            times: Vec::new(),
            node_names: nodes.iter().map(|n| n.name.clone()).collect(),
            actuator_names: circuit
                .actuator_nodes()
                .iter()
                .map(|&i| nodes[i].name.clone())
                .collect(),
            edge_names: circuit.edges().iter().map(|e| e.name.clone()).collect(),
            node_pressures: vec![Vec::new(); nodes.len()],
            actuator_volumes: vec![Vec::new(); circuit.actuator_nodes().len()],
            edge_flows: vec![Vec::new(); circuit.edges().len()],
            clamps: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, circuit: &Circuit<T>, state: &SimState<T>) {
        let open = circuit.edge_states(state.time);
        let p = circuit.node_pressures(&state.volumes, &open);
        let flows = circuit.edge_flows(&p, &open);
        self.times.push(state.time);
        for (series, value) in self.node_pressures.iter_mut().zip(&p) {
            series.push(*value);
        }
        for (series, value) in self.actuator_volumes.iter_mut().zip(&state.volumes) {
            series.push(*value);
        }
        for (series, value) in self.edge_flows.iter_mut().zip(&flows) {
            series.push(*value);
        }
    }

    pub(crate) fn set_clamps(&mut self, clamps: Vec<ClampEvent<T>>) {
        self.clamps = clamps;
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn actuator_names(&self) -> &[String] {
        &self.actuator_names
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn node_pressures(&self) -> &[Vec<T>] {
        &self.node_pressures
    }

    pub fn actuator_volumes(&self) -> &[Vec<T>] {
        &self.actuator_volumes
    }

    pub fn edge_flows(&self) -> &[Vec<T>] {
        &self.edge_flows
    }

    pub fn clamps(&self) -> &[ClampEvent<T>] {
        &self.clamps
    }

    /// Pressure series of the named node.
    pub fn pressure(&self, node: &str) -> Option<&[T]> {
        let i = self.node_names.iter().position(|n| n == node)?;
        Some(&self.node_pressures[i])
    }

    pub fn volume(&self, actuator: &str) -> Option<&[T]> {
        let i = self.actuator_names.iter().position(|n| n == actuator)?;
        Some(&self.actuator_volumes[i])
    }

    pub fn flow(&self, edge: &str) -> Option<&[T]> {
        let i = self.edge_names.iter().position(|n| n == edge)?;
        Some(&self.edge_flows[i])
    }

    /// Flux balance of every recorded sample, using the recorded edge flows
    /// (all evaluated on that sample's pressure vector).
    pub fn conservation(&self, circuit: &Circuit<T>) -> ConservationReport<T> {
        let mut max_residual = T::zero();
        let mut flow_scale = T::zero();
        let mut flows = vec![T::zero(); self.edge_flows.len()];
        for s in 0..self.len() {
            for (f, series) in flows.iter_mut().zip(&self.edge_flows) {
                *f = series[s];
            }
            let (actuators, boundary, max_abs) = circuit.flux_balance(&flows);
            max_residual = max_residual.max((actuators - boundary).abs());
            flow_scale = flow_scale.max(max_abs);
        }
        ConservationReport {
            max_residual,
            flow_scale,
        }
    }

    /// CSV with header `t,<node>.P,...,<actuator>.V,...,<edge>.Q,...`, SI
    /// units, nine significant digits, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.node_names {
            let _ = write!(out, ",{n}.P");
        }
        for n in &self.actuator_names {
            let _ = write!(out, ",{n}.V");
        }
        for n in &self.edge_names {
            let _ = write!(out, ",{n}.Q");
        }
        out.push('\n');
        for s in 0..self.len() {
            out.push_str(&format_sig9(self.times[s].as_f64()));
            for series in self
                .node_pressures
                .iter()
                .chain(&self.actuator_volumes)
                .chain(&self.edge_flows)
            {
                out.push(',');
                out.push_str(&format_sig9(series[s].as_f64()));
            }
            out.push('\n');
        }
        out
    }
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-5 <= |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
