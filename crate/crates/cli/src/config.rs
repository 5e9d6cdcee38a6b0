//! Flat `key = value` run configuration.

use crate::error::CliError;
use lskin::{Boundary, ChainSpec, InitialState, Propagation};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundaries {
    One(Boundary),
    Both,
}

impl Boundaries {
    pub fn list(self) -> Vec<Boundary> {
        match self {
            Boundaries::One(b) => vec![b],
            Boundaries::Both => vec![Boundary::Open, Boundary::Periodic],
        }
    }
}

/// Parameter swept across a range.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| ((self.start + k as f64 * self.step) * 1e10).round() / 1e10).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let f = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Spec with the boundary of the first entry of `boundaries`.
    pub spec: ChainSpec,
    pub boundaries: Boundaries,
    pub sweep: Option<SweepAxis>,
    pub times: TimeGrid,
    pub init: InitialState,
    pub propagation: Propagation,
    pub numeric_spectrum: bool,
    pub winding_grid: usize,
    pub lifetime_l: f64,
    pub scenario: Option<String>,
    pub lifetime_cells: Vec<usize>,
    pub output: Option<String>,
}

const KEYS: &[&str] = &[
    "t1",
    "t2",
    "gl1",
    "gg1",
    "gl2",
    "gg2",
    "gl0",
    "gg0",
    "boundary",
    "cells",
    "sweep",
    "sweep_start",
    "sweep_stop",
    "sweep_step",
    "t_start",
    "t_stop",
    "t_count",
    "t_spacing",
    "init",
    "propagation",
    "method",
    "grid",
    "lifetime_l",
    "scenario",
    "lifetime_cells",
    "output",
];

/// Names a `ChainSpec` field that can be swept.
pub const SWEEPABLE: &[&str] = &["t1", "t2", "gl1", "gg1", "gl2", "gg2", "gl0", "gg0", "cells"];

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse(format!("line {line}: {}", msg.into()))
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn num(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(*line, format!("{key}: expected a finite number, got '{v}'"))),
            },
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse::<usize>().map_err(|_| parse_err(*line, format!("{key}: expected a non-negative integer, got '{v}'"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }
}

fn tokenize(text: &str) -> Result<Entries, CliError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| parse_err(line, format!("expected 'key = value', got '{content}'")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(parse_err(line, format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(parse_err(line, format!("{key}: missing value")));
        }
        if map.insert(key.clone(), (line, value)).is_some() {
            return Err(parse_err(line, format!("duplicate key '{key}'")));
        }
    }
    if map.is_empty() {
        return Err(CliError::Parse("configuration is empty".into()));
    }
    Ok(Entries { map })
}

fn parse_boundaries(e: &Entries) -> Result<Boundaries, CliError> {
    match e.text("boundary").unwrap_or("open").to_ascii_lowercase().as_str() {
        "open" | "obc" => Ok(Boundaries::One(Boundary::Open)),
        "periodic" | "pbc" => Ok(Boundaries::One(Boundary::Periodic)),
        "both" => Ok(Boundaries::Both),
        other => Err(parse_err(e.line("boundary"), format!("boundary: expected open, periodic or both, got '{other}'"))),
    }
}

fn parse_init(e: &Entries) -> Result<InitialState, CliError> {
    let line = e.line("init");
    let text = e.text("init").unwrap_or("filled");
    let mut parts = text.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    match kind {
        "filled" if rest.is_empty() => Ok(InitialState::FullyFilled),
        "single" if rest.len() == 1 => rest[0]
            .parse::<usize>()
            .map(InitialState::SingleParticle)
            .map_err(|_| parse_err(line, format!("init: bad site index '{}'", rest[0]))),
        "occupations" if !rest.is_empty() => rest
            .join("")
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse_err(line, format!("init: bad occupation '{v}'"))))
            .collect::<Result<Vec<_>, _>>()
            .map(InitialState::Occupations),
        _ => Err(parse_err(line, format!("init: expected 'filled', 'single <site>' or 'occupations <v1,v2,...>', got '{text}'"))),
    }
}

fn parse_cells_range(e: &Entries) -> Result<Vec<usize>, CliError> {
    let line = e.line("lifetime_cells");
    let text = e.text("lifetime_cells").unwrap_or("8:16");
    let bad = || parse_err(line, format!("lifetime_cells: expected '<from>:<to>' or a comma list, got '{text}'"));
    let cells: Vec<usize> = if let Some((a, b)) = text.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',').map(|v| v.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if cells.len() < 2 || cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(parse_err(line, "lifetime_cells: need at least two strictly increasing sizes"));
    }
    Ok(cells)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let e = tokenize(text)?;
    let boundaries = parse_boundaries(&e)?;
    let cells = e.count("cells", 12)?;
    let first = boundaries.list()[0];
    let spec = ChainSpec {
        t1: e.num("t1", 1.0)?,
        t2: e.num("t2", 1.0)?,
        gl1: e.num("gl1", 0.0)?,
        gg1: e.num("gg1", 0.0)?,
        gl2: e.num("gl2", 0.0)?,
        gg2: e.num("gg2", 0.0)?,
        gl0: e.num("gl0", 0.0)?,
        gg0: e.num("gg0", 0.0)?,
        boundary: first,
        cells,
    };
    let sweep = match e.text("sweep") {
        None => None,
        Some(name) => {
            let line = e.line("sweep");
            if !SWEEPABLE.contains(&name) {
                return Err(parse_err(line, format!("sweep: '{name}' is not a chain parameter ({})", SWEEPABLE.join(", "))));
            }
            let axis = SweepAxis {
                name: name.to_string(),
                start: e.num("sweep_start", f64::NAN)?,
                stop: e.num("sweep_stop", f64::NAN)?,
                step: e.num("sweep_step", f64::NAN)?,
            };
            if axis.start.is_nan() || axis.stop.is_nan() || axis.step.is_nan() {
                return Err(parse_err(line, "sweep needs sweep_start, sweep_stop and sweep_step"));
            }
            if axis.step <= 0.0 || axis.stop < axis.start {
                return Err(parse_err(line, "sweep: need sweep_step > 0 and sweep_stop >= sweep_start"));
            }
            if name == "cells" && [axis.start, axis.stop, axis.step].iter().any(|v| v.fract() != 0.0) {
                return Err(parse_err(line, "sweep: cells takes integer bounds and step"));
            }
            Some(axis)
        }
    };
    let spacing = match e.text("t_spacing").unwrap_or("linear") {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => return Err(parse_err(e.line("t_spacing"), format!("t_spacing: expected linear or log, got '{other}'"))),
    };
    let times = TimeGrid {
        start: e.num("t_start", 0.0)?,
        stop: e.num("t_stop", 10.0)?,
        count: e.count("t_count", 101)?,
        spacing,
    };
    let tl = e.line("t_start").max(e.line("t_stop")).max(e.line("t_count"));
    if times.count == 0 || times.start < 0.0 || (times.count > 1 && times.stop <= times.start) {
        return Err(parse_err(tl, "times must be strictly increasing from a non-negative start"));
    }
    if spacing == Spacing::Log && times.start <= 0.0 {
        return Err(parse_err(tl, "log spacing needs t_start > 0"));
    }
    let propagation = match e.text("propagation").unwrap_or("modes") {
        "modes" => Propagation::ExactModes,
        "numeric" => Propagation::NumericModes,
        "ode" => Propagation::Ode,
        other => return Err(parse_err(e.line("propagation"), format!("propagation: expected modes, numeric or ode, got '{other}'"))),
    };
    let numeric_spectrum = match e.text("method").unwrap_or("closed") {
        "closed" => false,
        "numeric" => true,
        other => return Err(parse_err(e.line("method"), format!("method: expected closed or numeric, got '{other}'"))),
    };
    let lifetime_l = e.num("lifetime_l", 3.0)?;
    if lifetime_l <= 0.0 {
        return Err(parse_err(e.line("lifetime_l"), "lifetime_l must be positive"));
    }
    Ok(RunConfig {
        spec,
        boundaries,
        sweep,
        times,
        init: parse_init(&e)?,
        propagation,
        numeric_spectrum,
        winding_grid: e.count("grid", 500)?,
        lifetime_l,
        scenario: e.text("scenario").map(str::to_string),
        lifetime_cells: parse_cells_range(&e)?,
        output: e.text("output").map(str::to_string),
    })
}

/// Copy of `spec` with one named field replaced.
pub fn with_param(spec: &ChainSpec, name: &str, value: f64) -> ChainSpec {
    let mut s = spec.clone();
    match name {
        "t1" => s.t1 = value,
        "t2" => s.t2 = value,
        "gl1" => s.gl1 = value,
        "gg1" => s.gg1 = value,
        "gl2" => s.gl2 = value,
        "gg2" => s.gg2 = value,
        "gl0" => s.gl0 = value,
        "gg0" => s.gg0 = value,
        "cells" => s.cells = value as usize,
        _ => unreachable!("sweep axis validated at parse time"),
    }
    s
}
