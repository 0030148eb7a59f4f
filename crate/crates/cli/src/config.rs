//! Line-oriented circuit description.
//!
//! ```text
//! # comment
//! [source S]
//! pressure_kpa = 50
//!
//! [actuator A1]
//! volume_l = 1
//! spring_k1 = 40        # kPa/L
//! spring_k3 = 160       # kPa/L^3
//!
//! [resistor R1]
//! from = S
//! to = A1
//! n_plates = 3
//!
//! [sim]
//! t_end = 60
//! ```
//!
//! Values are written in kPa, litres, millimetres and seconds and converted
//! to SI here, once. Valve conductances `xi_open` are SI (m^3 s^-1 Pa^-1/2).

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use siaflow_core::circuit::{CircuitBuilder, ValveSchedule, ValveState};
use siaflow_core::resistor::{default_activation_drop, DEFAULT_DISCHARGE_COEFF, DEFAULT_GAS_DENSITY};
use siaflow_core::{ActuatorSpec, Circuit, FlowLaw, Resistor, ResistorSpec};

const KPA: f64 = 1e3;
const LITRE: f64 = 1e-3;
const MM: f64 = 1e-3;
const MAX_SPRING_ORDER: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeSpec {
    Source { pressure: f64 },
    Actuator {
        volume_capacity: f64,
        /// `k_1, k_2, ...` in SI.
        spring_coeffs: Vec<f64>,
        initial_volume: f64,
    },
    Outlet { pressure: f64 },
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSection {
    pub name: String,
    pub spec: NodeSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistorSection {
    pub n_plates: u32,
    pub tube_inner_diameter: f64,
    pub orifice_diameter: f64,
    pub plate_thickness: f64,
    pub tube_length: f64,
    pub discharge_coeff: f64,
    pub gas_density: f64,
    pub law: FlowLaw,
    /// `None` takes the plate-count default at the highest source pressure.
    pub activation_drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeSpec {
    Resistor(ResistorSection),
    Valve {
        initial: ValveState,
        events: Vec<(f64, ValveState)>,
        xi_open: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSection {
    pub name: String,
    pub from: String,
    pub to: String,
    pub spec: EdgeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub activation_fraction: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 60.0,
            record_every: 10,
            activation_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub nodes: Vec<NodeSection>,
    pub edges: Vec<EdgeSection>,
    pub sim: SimSection,
}

struct RawSection {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

/// Key/value access with line-numbered errors and unknown-key detection.
struct Fields<'a> {
    section: &'a RawSection,
    used: HashSet<&'a str>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Fields<'a> {
    fn raw(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        let section: &'a RawSection = self.section;
        let (k, v, line) = section.entries.iter().find(|(k, _, _)| k == key)?;
        self.used.insert(k.as_str());
        Some((v.as_str(), *line))
    }

    fn text(&mut self, key: &'static str) -> Option<String> {
        match self.raw(key) {
            Some((v, _)) => Some(v.to_string()),
            None => {
                self.missing(key);
                None
            }
        }
    }

    fn missing(&mut self, key: &str) {
        let s = self.section;
        self.errors.push(ConfigError::at(
            s.line,
            format!("[{}] is missing `{key}`", s.kind),
        ));
    }

    fn number_opt(&mut self, key: &'static str) -> Option<f64> {
        let (v, line) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.errors
                    .push(ConfigError::at(line, format!("`{key}` expects a finite number, got `{v}`")));
                None
            }
        }
    }

    fn number(&mut self, key: &'static str) -> Option<f64> {
        if self.section.entries.iter().any(|(k, _, _)| k == key) {
            self.number_opt(key)
        } else {
            self.missing(key);
            None
        }
    }

    /// Checks a number against a predicate, reporting `what` on failure.
    fn checked(&mut self, key: &'static str, value: Option<f64>, ok: impl Fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = value?;
        if ok(x) {
            Some(x)
        } else {
            let line = self.line_of(key);
            self.errors.push(ConfigError::at(line, format!("`{key}` = {x} {what}")));
            None
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.section
            .entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map_or(self.section.line, |e| e.2)
    }

    fn finish(self) {
        for (k, _, line) in &self.section.entries {
            if !self.used.contains(k.as_str()) {
                self.errors.push(ConfigError::at(
                    *line,
                    format!("unknown key `{k}` in [{}]", self.section.kind),
                ));
            }
        }
    }
}

fn split_sections(text: &str, errors: &mut Vec<ConfigError>) -> Vec<RawSection> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                errors.push(ConfigError::at(line, format!("unterminated section header `{content}`")));
                continue;
            };
            let mut words = header.split_whitespace();
            let kind = words.next().unwrap_or("").to_string();
            let name = words.next().map(str::to_string);
            if words.next().is_some() {
                errors.push(ConfigError::at(line, format!("section header `{content}` has extra words")));
            }
            sections.push(RawSection {
                kind,
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::at(line, format!("expected `key = value`, got `{content}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = sections.last_mut() else {
            errors.push(ConfigError::at(line, format!("`{key}` appears before any section")));
            continue;
        };
        if section.entries.iter().any(|(k, _, _)| k == key) {
            errors.push(ConfigError::at(line, format!("duplicate key `{key}`")));
            continue;
        }
        section.entries.push((key.to_string(), value.to_string(), line));
    }
    sections
}

/// kPa / L^n in Pa / m^(3n), an exact power of 1000.
fn spring_unit(n: usize) -> f64 {
    1000f64.powi(n as i32 + 1)
}

fn parse_state(s: &str) -> Option<ValveState> {
    match s {
        "open" => Some(ValveState::Open),
        "closed" => Some(ValveState::Closed),
        _ => None,
    }
}

fn state_name(s: ValveState) -> &'static str {
    match s {
        ValveState::Open => "open",
        ValveState::Closed => "closed",
    }
}

/// `"0:open,12.5:closed"`; an entry at t = 0 sets the initial state,
/// which is otherwise open.
fn parse_schedule(s: &str) -> Result<(ValveState, Vec<(f64, ValveState)>), String> {
    let mut initial = ValveState::Open;
    let mut events = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (t, state) = item
            .split_once(':')
            .ok_or_else(|| format!("schedule entry `{item}` is not `time:state`"))?;
        let t: f64 = t
            .trim()
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| format!("schedule time `{}` is not a non-negative number", t.trim()))?;
        let state = parse_state(state.trim()).ok_or_else(|| format!("valve state `{}` is not open|closed", state.trim()))?;
        if t == 0.0 && events.is_empty() {
            initial = state;
        } else {
            events.push((t, state));
        }
    }
    ValveSchedule::new(initial, events.clone()).map_err(|e| e.to_string())?;
    Ok((initial, events))
}

fn parse_node(kind: &str, f: &mut Fields<'_>) -> Option<NodeSpec> {
    match kind {
        "source" | "outlet" => {
            let p = f.number("pressure_kpa");
            let p = f.checked("pressure_kpa", p, |x| x >= 0.0, "must be non-negative")? * KPA;
            Some(if kind == "source" {
                NodeSpec::Source { pressure: p }
            } else {
                NodeSpec::Outlet { pressure: p }
            })
        }
        "junction" => Some(NodeSpec::Junction),
        "actuator" => {
            let v = f.number("volume_l");
            let cap = f.checked("volume_l", v, |x| x > 0.0, "must be positive");
            let init = f.number_opt("initial_volume_l").unwrap_or(0.0);
            let mut coeffs = vec![0.0; MAX_SPRING_ORDER];
            let mut order = 0;
            const KEYS: [&str; MAX_SPRING_ORDER] = [
                "spring_k1", "spring_k2", "spring_k3", "spring_k4", "spring_k5", "spring_k6", "spring_k7",
                "spring_k8", "spring_k9",
            ];
            for (i, key) in KEYS.iter().enumerate() {
                if let Some(k) = f.number_opt(key) {
                    coeffs[i] = k * spring_unit(i + 1);
                    order = i + 1;
                }
            }
            if order == 0 {
                f.missing("spring_k1");
                return None;
            }
            coeffs.truncate(order);
            let cap = cap? * LITRE;
            let init = init * LITRE;
            match ActuatorSpec::new(cap, coeffs.clone(), init) {
                Ok(_) => Some(NodeSpec::Actuator {
                    volume_capacity: cap,
                    spring_coeffs: coeffs,
                    initial_volume: init,
                }),
                Err(e) => {
                    f.errors.push(ConfigError::at(f.section.line, e.to_string()));
                    None
                }
            }
        }
        _ => unreachable!(),
    }
}

fn parse_resistor(f: &mut Fields<'_>) -> Option<ResistorSection> {
    let reference = ResistorSpec::<f64>::reference(0);
    let n = f.number("n_plates");
    let n = f.checked("n_plates", n, |x| x >= 0.0 && x.fract() == 0.0 && x <= 1e6, "must be a non-negative integer")?;
    let mm = |f: &mut Fields<'_>, key: &'static str, default: f64| f.number_opt(key).map_or(default, |x| x * MM);
    let tube = mm(f, "tube_mm", reference.tube_inner_diameter);
    let orifice = mm(f, "orifice_mm", reference.orifice_diameter);
    let plate = mm(f, "plate_mm", reference.plate_thickness);
    let length = mm(f, "length_mm", reference.tube_length);
    let cd = f.number_opt("discharge_coeff").unwrap_or(DEFAULT_DISCHARGE_COEFF);
    let rho = f.number_opt("gas_density").unwrap_or(DEFAULT_GAS_DENSITY);
    let drop = f.number_opt("activation_drop_kpa").map(|x| x * KPA);
    let law = match f.raw("law") {
        None | Some(("scaled", _)) => FlowLaw::ScaledOrifice,
        Some(("threshold", _)) => FlowLaw::ActivationThreshold,
        Some((other, line)) => {
            f.errors
                .push(ConfigError::at(line, format!("`law` must be scaled|threshold, got `{other}`")));
            return None;
        }
    };
    let section = ResistorSection {
        n_plates: n as u32,
        tube_inner_diameter: tube,
        orifice_diameter: orifice,
        plate_thickness: plate,
        tube_length: length,
        discharge_coeff: cd,
        gas_density: rho,
        law,
        activation_drop: drop,
    };
    if let Err(e) = Resistor::new(section.spec(0.0), law) {
        f.errors.push(ConfigError::at(f.section.line, e.to_string()));
        return None;
    }
    Some(section)
}

fn parse_sim(f: &mut Fields<'_>) -> Option<SimSection> {
    let d = SimSection::default();
    let dt = f.number_opt("dt");
    let dt = f.checked("dt", dt.or(Some(d.dt)), |x| x > 0.0, "must be positive");
    let t_end = f.number_opt("t_end");
    let t_end = f.checked("t_end", t_end.or(Some(d.t_end)), |x| x >= 0.0, "must be non-negative");
    let every = f.number_opt("record_every");
    let every = f.checked(
        "record_every",
        every.or(Some(d.record_every as f64)),
        |x| x >= 1.0 && x.fract() == 0.0,
        "must be a positive integer",
    );
    let frac = f.number_opt("activation_fraction");
    let frac = f.checked(
        "activation_fraction",
        frac.or(Some(d.activation_fraction)),
        |x| x > 0.0 && x < 1.0,
        "must lie in (0, 1)",
    );
    let sim = SimSection {
        dt: dt?,
        t_end: t_end?,
        record_every: every? as usize,
        activation_fraction: frac?,
    };
    if let Err(e) = siaflow_core::SimConfig::new(sim.dt, sim.t_end, sim.record_every) {
        f.errors.push(ConfigError::at(f.section.line, e.to_string()));
        return None;
    }
    Some(sim)
}

pub fn parse_config(text: &str) -> Result<ConfigDocument, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let sections = split_sections(text, &mut errors);
    if sections.is_empty() && errors.is_empty() {
        return Err(vec![ConfigError::global("no sections")]);
    }
    let mut nodes = Vec::new();
    let mut edge_sections = Vec::new();
    let mut sim = None;
    let mut names: HashMap<String, usize> = HashMap::new();
    // Node sections that failed to parse still count as declared, so their
    // errors do not cascade into every edge that touches them.
    let mut declared_nodes: HashSet<String> = HashSet::new();
    for s in &sections {
        let is_sim = s.kind == "sim";
        match (&s.name, is_sim) {
            (Some(_), true) => errors.push(ConfigError::at(s.line, "[sim] takes no name")),
            (None, false) => errors.push(ConfigError::at(s.line, format!("[{}] needs a name", s.kind))),
            (Some(n), false) => {
                if let Some(first) = names.insert(n.clone(), s.line) {
                    errors.push(ConfigError::at(
                        s.line,
                        format!("name `{n}` already used on line {first}"),
                    ));
                }
            }
            (None, true) => {}
        }
        let mut f = Fields {
            section: s,
            used: HashSet::new(),
            errors: &mut errors,
        };
        let name = s.name.clone().unwrap_or_default();
        match s.kind.as_str() {
            "source" | "outlet" | "junction" | "actuator" => {
                declared_nodes.insert(name.clone());
                if let Some(spec) = parse_node(&s.kind, &mut f) {
                    nodes.push(NodeSection { name, spec });
                }
            }
            "resistor" | "valve" => {
                let from = f.text("from");
                let to = f.text("to");
                let spec = if s.kind == "resistor" {
                    parse_resistor(&mut f).map(EdgeSpec::Resistor)
                } else {
                    let sched = match f.raw("schedule") {
                        None => Some((ValveState::Open, Vec::new())),
                        Some((v, line)) => match parse_schedule(v) {
                            Ok(x) => Some(x),
                            Err(e) => {
                                f.errors.push(ConfigError::at(line, e));
                                None
                            }
                        },
                    };
                    let xi = f.number("xi_open");
                    let xi = f.checked("xi_open", xi, |x| x >= 0.0, "must be non-negative");
                    match (sched, xi) {
                        (Some((initial, events)), Some(xi_open)) => Some(EdgeSpec::Valve {
                            initial,
                            events,
                            xi_open,
                        }),
                        _ => None,
                    }
                };
                if let (Some(from), Some(to), Some(spec)) = (from, to, spec) {
                    edge_sections.push((
                        s.line,
                        EdgeSection {
                            name,
                            from,
                            to,
                            spec,
                        },
                    ));
                }
            }
            "sim" => {
                if sim.is_some() {
                    f.errors.push(ConfigError::at(s.line, "duplicate [sim] section"));
                }
                sim = parse_sim(&mut f).or(sim);
            }
            other => {
                f.errors
                    .push(ConfigError::at(s.line, format!("unknown section kind `{other}`")));
                continue;
            }
        }
        f.finish();
    }

    for (line, e) in &edge_sections {
        for end in [&e.from, &e.to] {
            if !declared_nodes.contains(end.as_str()) {
                errors.push(ConfigError::at(*line, format!("`{}` refers to undefined node `{end}`", e.name)));
            }
        }
        if e.from == e.to {
            errors.push(ConfigError::at(*line, format!("`{}` connects `{}` to itself", e.name, e.from)));
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(errors);
    }
    let doc = ConfigDocument {
        nodes,
        edges: edge_sections.into_iter().map(|(_, e)| e).collect(),
        sim: sim.unwrap_or_default(),
    };
    doc.circuit().map_err(|e| vec![ConfigError::global(e.to_string())])?;
    Ok(doc)
}

impl ResistorSection {
    /// Core spec, with the default activation drop evaluated at `supply`.
    pub fn spec(&self, supply: f64) -> ResistorSpec<f64> {
        ResistorSpec {
            n_plates: self.n_plates,
            tube_inner_diameter: self.tube_inner_diameter,
            orifice_diameter: self.orifice_diameter,
            plate_thickness: self.plate_thickness,
            tube_length: self.tube_length,
            discharge_coeff: self.discharge_coeff,
            gas_density: self.gas_density,
            activation_drop: self
                .activation_drop
                .unwrap_or_else(|| default_activation_drop(self.n_plates, supply)),
        }
    }
}

impl ConfigDocument {
    /// Highest source pressure; the activation reference.
    pub fn supply_pressure(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n.spec {
                NodeSpec::Source { pressure } => Some(pressure),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn circuit(&self) -> siaflow_core::Result<Circuit<f64>> {
        let supply = self.supply_pressure();
        let mut b = CircuitBuilder::new();
        for n in &self.nodes {
            b = match &n.spec {
                NodeSpec::Source { pressure } => b.source(&n.name, *pressure),
                NodeSpec::Outlet { pressure } => b.outlet(&n.name, *pressure),
                NodeSpec::Junction => b.junction(&n.name),
                NodeSpec::Actuator {
                    volume_capacity,
                    spring_coeffs,
                    initial_volume,
                } => b.actuator(
                    &n.name,
                    ActuatorSpec::new(*volume_capacity, spring_coeffs.clone(), *initial_volume)?,
                ),
            };
        }
        for e in &self.edges {
            b = match &e.spec {
                EdgeSpec::Resistor(r) => b.resistor(&e.name, &e.from, &e.to, Resistor::new(r.spec(supply), r.law)?),
                EdgeSpec::Valve {
                    initial,
                    events,
                    xi_open,
                } => b.valve(
                    &e.name,
                    &e.from,
                    &e.to,
                    ValveSchedule::new(*initial, events.clone())?,
                    *xi_open,
                ),
            };
        }
        b.build()
    }

    pub fn sim_config(&self) -> siaflow_core::Result<siaflow_core::SimConfig<f64>> {
        siaflow_core::SimConfig::new(self.sim.dt, self.sim.t_end, self.sim.record_every)
    }

    /// Renders back to the text format, engineering units.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            match &n.spec {
                NodeSpec::Source { pressure } => {
                    let _ = writeln!(out, "[source {}]\npressure_kpa = {}", n.name, pressure / KPA);
                }
                NodeSpec::Outlet { pressure } => {
                    let _ = writeln!(out, "[outlet {}]\npressure_kpa = {}", n.name, pressure / KPA);
                }
                NodeSpec::Junction => {
                    let _ = writeln!(out, "[junction {}]", n.name);
                }
                NodeSpec::Actuator {
                    volume_capacity,
                    spring_coeffs,
                    initial_volume,
                } => {
                    let _ = writeln!(out, "[actuator {}]\nvolume_l = {}", n.name, volume_capacity / LITRE);
                    for (i, k) in spring_coeffs.iter().enumerate() {
                        if *k != 0.0 {
                            let _ = writeln!(out, "spring_k{} = {}", i + 1, k / spring_unit(i + 1));
                        }
                    }
                    if *initial_volume != 0.0 {
                        let _ = writeln!(out, "initial_volume_l = {}", initial_volume / LITRE);
                    }
                }
            }
            out.push('\n');
        }
        for e in &self.edges {
            match &e.spec {
                EdgeSpec::Resistor(r) => {
                    let _ = writeln!(out, "[resistor {}]\nfrom = {}\nto = {}", e.name, e.from, e.to);
                    let _ = writeln!(out, "n_plates = {}", r.n_plates);
                    let _ = writeln!(out, "tube_mm = {}", r.tube_inner_diameter / MM);
                    let _ = writeln!(out, "orifice_mm = {}", r.orifice_diameter / MM);
                    let _ = writeln!(out, "plate_mm = {}", r.plate_thickness / MM);
                    let _ = writeln!(out, "length_mm = {}", r.tube_length / MM);
                    let _ = writeln!(out, "discharge_coeff = {}", r.discharge_coeff);
                    let _ = writeln!(out, "gas_density = {}", r.gas_density);
                    let law = match r.law {
                        FlowLaw::ScaledOrifice => "scaled",
                        FlowLaw::ActivationThreshold => "threshold",
                    };
                    let _ = writeln!(out, "law = {law}");
                    if let Some(d) = r.activation_drop {
                        let _ = writeln!(out, "activation_drop_kpa = {}", d / KPA);
                    }
                }
                EdgeSpec::Valve {
                    initial,
                    events,
                    xi_open,
                } => {
                    let _ = writeln!(out, "[valve {}]\nfrom = {}\nto = {}", e.name, e.from, e.to);
                    let mut sched = format!("0:{}", state_name(*initial));
                    for (t, s) in events {
                        let _ = write!(sched, ",{t}:{}", state_name(*s));
                    }
                    let _ = writeln!(out, "schedule = {sched}\nxi_open = {xi_open:e}");
                }
            }
            out.push('\n');
        }
        let s = &self.sim;
        let _ = writeln!(
            out,
            "[sim]\ndt = {}\nt_end = {}\nrecord_every = {}\nactivation_fraction = {}",
            s.dt, s.t_end, s.record_every, s.activation_fraction
        );
        out
    }
}
