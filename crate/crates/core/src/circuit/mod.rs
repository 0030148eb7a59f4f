//! Pneumatic networks of sources, actuators, junctions and outlets joined by
//! resistors and scheduled valves.
//!
//! Actuator volumes are the only state. Sources and outlets hold fixed
//! pressures; junctions have no volume, so their pressure is whatever makes
//! the net flux through them vanish.

mod analysis;
mod sim;
mod trace;

pub use analysis::{activation_time, pressure_drop_at_inflection, InflectionDrop};
pub use sim::{simulate, step, ClampEvent, SimConfig, SimState, StepOutcome};
pub use trace::{format_sig9, ConservationReport, TraceSet};

use std::collections::{HashMap, HashSet, VecDeque};

use crate::actuator::ActuatorSpec;
use crate::error::{Error, Result};
use crate::resistor::Resistor;
use crate::scalar::{signed_sqrt, Scalar};

const JUNCTION_MAX_SWEEPS: usize = 500;
const BISECTION_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValveState {
    Open,
    Closed,
}

/// Piecewise-constant valve state: `initial` until the first event, then the
/// state of the latest event whose time is `<= t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValveSchedule<T> {
    initial: ValveState,
    events: Vec<(T, ValveState)>,
}

impl<T: Scalar> ValveSchedule<T> {
    pub fn new(initial: ValveState, events: Vec<(T, ValveState)>) -> Result<Self> {
        for pair in events.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::Config(format!(
                    "valve event times must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if events.iter().any(|(t, _)| !t.is_finite() || *t < T::zero()) {
            return Err(Error::Config("valve event times must be finite and >= 0".into()));
        }
        Ok(Self { initial, events })
    }

    pub fn always(state: ValveState) -> Self {
        Self {
            initial: state,
            events: Vec::new(),
        }
    }

    pub fn initial(&self) -> ValveState {
        self.initial
    }

    pub fn events(&self) -> &[(T, ValveState)] {
        &self.events
    }

    pub fn state_at(&self, t: T) -> ValveState {
        self.events
            .iter()
            .take_while(|(te, _)| *te <= t)
            .last()
            .map_or(self.initial, |(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<T> {
    Source { pressure: T },
    Actuator(ActuatorSpec<T>),
    Outlet { pressure: T },
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub name: String,
    pub kind: NodeKind<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element<T> {
    Resistor(Resistor<T>),
    /// On/off valve passing `xi_open * sqrt*(dp)` when open.
    Valve {
        schedule: ValveSchedule<T>,
        xi_open: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub element: Element<T>,
}

/// Collects named nodes and edges; [`CircuitBuilder::build`] resolves and
/// validates them.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder<T> {
    nodes: Vec<Node<T>>,
    edges: Vec<(String, String, String, Element<T>)>,
}

impl<T: Scalar> CircuitBuilder<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn node(mut self, name: impl Into<String>, kind: NodeKind<T>) -> Self {
        self.nodes.push(Node {
            name: name.into(),
            kind,
        });
        self
    }

    pub fn source(self, name: impl Into<String>, pressure: T) -> Self {
        self.node(name, NodeKind::Source { pressure })
    }

    pub fn actuator(self, name: impl Into<String>, spec: ActuatorSpec<T>) -> Self {
        self.node(name, NodeKind::Actuator(spec))
    }

    pub fn outlet(self, name: impl Into<String>, pressure: T) -> Self {
        self.node(name, NodeKind::Outlet { pressure })
    }

    pub fn junction(self, name: impl Into<String>) -> Self {
        self.node(name, NodeKind::Junction)
    }

    pub fn edge(
        mut self,
        name: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        element: Element<T>,
    ) -> Self {
        self.edges.push((name.into(), from.into(), to.into(), element));
        self
    }

    pub fn resistor(
        self,
        name: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        resistor: Resistor<T>,
    ) -> Self {
        self.edge(name, from, to, Element::Resistor(resistor))
    }

    pub fn valve(
        self,
        name: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        schedule: ValveSchedule<T>,
        xi_open: T,
    ) -> Self {
        self.edge(name, from, to, Element::Valve { schedule, xi_open })
    }

    pub fn build(self) -> Result<Circuit<T>> {
        let mut names = HashSet::new();
        for n in &self.nodes {
            if !names.insert(n.name.as_str()) {
                return Err(Error::Config(format!("duplicate node name `{}`", n.name)));
            }
            match &n.kind {
                NodeKind::Source { pressure } | NodeKind::Outlet { pressure } => {
                    if !pressure.is_finite() {
                        return Err(Error::Config(format!("node `{}` has a non-finite pressure", n.name)));
                    }
                }
                _ => {}
            }
        }
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut edge_names = HashSet::new();
        for (name, from, to, element) in self.edges {
            if names.contains(name.as_str()) || !edge_names.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate name `{name}`")));
            }
            let lookup = |n: &str| {
                index
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("edge `{name}` references undefined node `{n}`")))
            };
            let (from, to) = (lookup(&from)?, lookup(&to)?);
            if from == to {
                return Err(Error::Config(format!("edge `{name}` is a self-loop")));
            }
            if let Element::Valve { xi_open, .. } = &element {
                if !(*xi_open >= T::zero()) || !xi_open.is_finite() {
                    return Err(Error::Config(format!("valve `{name}` needs a non-negative xi_open")));
                }
            }
            edges.push(Edge {
                name,
                from,
                to,
                element,
            });
        }
        Circuit::assemble(self.nodes, edges)
    }
}

/// A validated network. Node and edge order is declaration order.
#[derive(Debug, Clone)]
pub struct Circuit<T> {
    nodes: Vec<Node<T>>,
    edges: Vec<Edge<T>>,
    /// Node index of every actuator, in declaration order.
    actuators: Vec<usize>,
    junctions: Vec<usize>,
    /// Incident edges per node with `true` when the node is the edge's head.
    incident: Vec<Vec<(usize, bool)>>,
    coupled_junctions: bool,
}

impl<T: Scalar> Circuit<T> {
    fn assemble(nodes: Vec<Node<T>>, edges: Vec<Edge<T>>) -> Result<Self> {
        if !nodes.iter().any(|n| matches!(n.kind, NodeKind::Source { .. })) {
            return Err(Error::Config("circuit needs at least one source".into()));
        }
        let mut incident = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            incident[e.from].push((i, false));
            incident[e.to].push((i, true));
        }
        for (i, n) in nodes.iter().enumerate() {
            if incident[i].is_empty() && matches!(n.kind, NodeKind::Actuator(_) | NodeKind::Junction) {
                return Err(Error::Config(format!("node `{}` has no connections", n.name)));
            }
        }
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(e, _) in &incident[u] {
                let v = if edges[e].from == u { edges[e].to } else { edges[e].from };
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!(
                "circuit is disconnected: `{}` is unreachable from `{}`",
                nodes[i].name, nodes[0].name
            )));
        }
        let actuators = (0..nodes.len())
            .filter(|&i| matches!(nodes[i].kind, NodeKind::Actuator(_)))
            .collect();
        let junctions: Vec<usize> = (0..nodes.len())
            .filter(|&i| matches!(nodes[i].kind, NodeKind::Junction))
            .collect();
        let coupled_junctions = edges.iter().any(|e| {
            matches!(nodes[e.from].kind, NodeKind::Junction) && matches!(nodes[e.to].kind, NodeKind::Junction)
        });
        Ok(Self {
            nodes,
            edges,
            actuators,
            junctions,
            incident,
            coupled_junctions,
        })
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Node indices of the actuators; position in this slice is the
    /// actuator's state slot.
    pub fn actuator_nodes(&self) -> &[usize] {
        &self.actuators
    }

    pub fn actuator_spec(&self, slot: usize) -> &ActuatorSpec<T> {
        match &self.nodes[self.actuators[slot]].kind {
            NodeKind::Actuator(spec) => spec,
            _ => unreachable!("actuator slot points at a non-actuator node"),
        }
    }

    pub fn initial_volumes(&self) -> Vec<T> {
        (0..self.actuators.len())
            .map(|s| self.actuator_spec(s).initial_volume())
            .collect()
    }

    /// Open/closed flag of every edge at time `t`; resistors are always open.
    pub fn edge_states(&self, t: T) -> Vec<bool> {
        self.edges
            .iter()
            .map(|e| match &e.element {
                Element::Resistor(_) => true,
                Element::Valve { schedule, .. } => schedule.state_at(t) == ValveState::Open,
            })
            .collect()
    }

    /// Times at which any valve changes state.
    pub fn event_times(&self) -> Vec<T> {
        let mut times: Vec<T> = self
            .edges
            .iter()
            .filter_map(|e| match &e.element {
                Element::Valve { schedule, .. } => Some(schedule.events().iter().map(|(t, _)| *t)),
                Element::Resistor(_) => None,
            })
            .flatten()
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite event times"));
        times.dedup();
        times
    }

    /// Flow along edge `e` from its tail to its head.
    #[inline]
    pub fn edge_flow(&self, e: usize, pressures: &[T], open: bool) -> T {
        let edge = &self.edges[e];
        if !open {
            return T::zero();
        }
        let (p_up, p_down) = (pressures[edge.from], pressures[edge.to]);
        match &edge.element {
            Element::Resistor(r) => r.flow(p_up, p_down),
            Element::Valve { xi_open, .. } => *xi_open * signed_sqrt(p_up - p_down),
        }
    }

    /// Net inflow into `node` for the given pressures.
    fn node_net_inflow(&self, node: usize, pressures: &[T], open: &[bool]) -> T {
        self.incident[node].iter().fold(T::zero(), |acc, &(e, head)| {
            let q = self.edge_flow(e, pressures, open[e]);
            if head {
                acc + q
            } else {
                acc - q
            }
        })
    }

    /// Pressure of every node for the given actuator volumes and edge states.
    pub fn node_pressures(&self, volumes: &[T], open: &[bool]) -> Vec<T> {
        let mut p = vec![T::zero(); self.nodes.len()];
        self.fill_pressures(volumes, open, &mut p);
        p
    }

    pub(crate) fn fill_pressures(&self, volumes: &[T], open: &[bool], p: &mut [T]) {
        for (i, n) in self.nodes.iter().enumerate() {
            match &n.kind {
                NodeKind::Source { pressure } | NodeKind::Outlet { pressure } => p[i] = *pressure,
                NodeKind::Actuator(_) | NodeKind::Junction => {}
            }
        }
        for (slot, &i) in self.actuators.iter().enumerate() {
            p[i] = self.actuator_spec(slot).pressure_unchecked(volumes[slot]);
        }
        if self.junctions.is_empty() {
            return;
        }
        for &j in &self.junctions {
            let (lo, hi) = self.neighbour_range(j, p, None);
            p[j] = (lo + hi) / T::lit(2.0);
        }
        let sweeps = if self.coupled_junctions { JUNCTION_MAX_SWEEPS } else { 1 };
        for _ in 0..sweeps {
            let mut change = T::zero();
            let mut scale = T::zero();
            for &j in &self.junctions {
                let before = p[j];
                p[j] = self.solve_junction(j, p, open);
                change = change.max((p[j] - before).abs());
                scale = scale.max(p[j].abs());
            }
            if change <= T::epsilon() * scale.max(T::one()) * T::lit(4.0) {
                break;
            }
        }
    }

    /// Min and max pressure over neighbours reached through open edges
    /// (all edges when `open` is `None`).
    fn neighbour_range(&self, j: usize, p: &[T], open: Option<&[bool]>) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &(e, head) in &self.incident[j] {
            if let Some(open) = open {
                if !open[e] {
                    continue;
                }
            }
            let other = if head { self.edges[e].from } else { self.edges[e].to };
            lo = lo.min(p[other]);
            hi = hi.max(p[other]);
        }
        (lo, hi)
    }

    /// Bisection on the junction pressure; net inflow is non-increasing in it.
    fn solve_junction(&self, j: usize, p: &mut [T], open: &[bool]) -> T {
        let (mut lo, mut hi) = self.neighbour_range(j, p, Some(open));
        if lo > hi {
            let (a, b) = self.neighbour_range(j, p, None);
            return (a + b) / T::lit(2.0);
        }
        if lo == hi {
            return lo;
        }
        let eval = |x: T, p: &mut [T]| {
            p[j] = x;
            self.node_net_inflow(j, p, open)
        };
        let mut g_lo = eval(lo, p);
        let mut g_hi = eval(hi, p);
        for _ in 0..BISECTION_MAX_ITERS {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = eval(mid, p);
            if g > T::zero() {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
                g_hi = g;
            }
        }
        if g_lo.abs() <= g_hi.abs() {
            lo
        } else {
            hi
        }
    }

    /// `dV/dt` of every actuator: inbound minus outbound edge flows.
    pub fn net_flux(&self, pressures: &[T], open: &[bool]) -> Vec<T> {
        self.actuators
            .iter()
            .map(|&i| self.node_net_inflow(i, pressures, open))
            .collect()
    }

    /// Flow on every edge.
    pub fn edge_flows(&self, pressures: &[T], open: &[bool]) -> Vec<T> {
        (0..self.edges.len())
            .map(|e| self.edge_flow(e, pressures, open[e]))
            .collect()
    }

    /// Sum of actuator fluxes, net boundary supply (sources out minus outlets
    /// in) and the largest edge flow magnitude, all from one flow vector.
    pub fn flux_balance(&self, flows: &[T]) -> (T, T, T) {
        let mut actuator_sum = T::zero();
        let mut boundary = T::zero();
        let mut max_abs = T::zero();
        for (e, edge) in self.edges.iter().enumerate() {
            let q = flows[e];
            max_abs = max_abs.max(q.abs());
            for (node, sign) in [(edge.from, -T::one()), (edge.to, T::one())] {
                match self.nodes[node].kind {
                    NodeKind::Actuator(_) => actuator_sum = actuator_sum + sign * q,
                    NodeKind::Source { .. } => boundary = boundary - sign * q,
                    NodeKind::Outlet { .. } => boundary = boundary - sign * q,
                    NodeKind::Junction => {}
                }
            }
        }
        (actuator_sum, boundary, max_abs)
    }
}
