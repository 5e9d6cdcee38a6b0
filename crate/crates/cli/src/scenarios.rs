//! Scenario execution: one table (plus an optional plot) per output file.

use crate::config::{with_param, Boundaries, RunConfig};
use crate::csv::{num, opt, Table};
use crate::error::CliError;
use crate::svg::PlotSpec;
use clap::Subcommand;
use lskin::linalg::complexify;
use lskin::{
    build_damping, classify_ep, classify_ness, gap_closed_form, lifetime_scan, numeric_spectrum, rapidities_closed_form,
    skin_parameter, steady_current, steady_occupation, topology_report, trajectory, Boundary, ChainSpec, Complex64,
    LifetimeFit, NessClass,
};
use rayon::prelude::*;

const EP_WARN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Scenario {
    /// Rapidity spectrum, closed form or from the dense eigensolver.
    Spectrum,
    /// Liouvillian gaps of both boundaries.
    Gap,
    /// Winding number, skin parameter and exceptional-point distances.
    Topology,
    /// Steady filling, steady current and long-time class.
    Steady,
    /// Occupations, current and polarization along the time grid.
    Evolve,
    /// Edge lifetime against chain length, with its linear fit.
    Lifetime,
    /// Lifetime fit at every point of the sweep axis.
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Gap => "gap",
            Scenario::Topology => "topology",
            Scenario::Steady => "steady",
            Scenario::Evolve => "evolve",
            Scenario::Lifetime => "lifetime",
            Scenario::Sweep => "sweep",
        }
    }
}

/// One CSV file; `suffix` is appended to the output stem.
#[derive(Debug, Clone)]
pub struct Output {
    pub suffix: &'static str,
    pub table: Table,
    pub plot: Option<PlotSpec>,
}

pub struct Report {
    pub outputs: Vec<Output>,
    pub warnings: Vec<String>,
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Open => "open",
        Boundary::Periodic => "periodic",
    }
}

fn plot(title: &str, x: &str, ys: &[&str], group: Option<&str>, scatter: bool, log_x: bool) -> Option<PlotSpec> {
    Some(PlotSpec {
        title: title.into(),
        x: x.into(),
        ys: ys.iter().map(|s| s.to_string()).collect(),
        group: group.map(str::to_string),
        scatter,
        log_x,
    })
}

struct Point {
    value: f64,
    spec: ChainSpec,
}

fn sweep_points(cfg: &RunConfig) -> Result<(String, Vec<Point>), CliError> {
    let (name, values) = match &cfg.sweep {
        Some(axis) => (axis.name.clone(), axis.values()),
        None => ("t1".to_string(), vec![cfg.spec.t1]),
    };
    let points = values
        .into_iter()
        .map(|value| {
            let spec = with_param(&cfg.spec, &name, value);
            spec.validate().map_err(|e| match cfg.sweep {
                Some(_) => CliError::Parse(format!("{name} = {value}: {e}")),
                None => CliError::Parse(e.to_string()),
            })?;
            Ok(Point { value, spec })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((name, points))
}

fn single_spec(cfg: &RunConfig, scenario: Scenario, warnings: &mut Vec<String>) -> Result<ChainSpec, CliError> {
    if cfg.boundaries == Boundaries::Both {
        return Err(CliError::Parse(format!("{} needs a single boundary, not 'both'", scenario.name())));
    }
    if cfg.sweep.is_some() {
        warnings.push(format!("{} ignores the sweep axis", scenario.name()));
    }
    cfg.spec.validate().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(cfg.spec.clone())
}

fn ep_warnings(param: &str, value: f64, spec: &ChainSpec) -> Vec<String> {
    classify_ep(spec, EP_WARN_TOL)
        .iter()
        .map(|h| format!("{param} = {value}: bond {} at an exceptional point (t = {}gamma)", h.bond, if h.sign > 0 { "" } else { "-" }))
        .collect()
}

/// Rows of every sweep point, computed in parallel and kept in sweep order.
///
/// A failing point is reported as a warning unless every point fails.
fn per_point<F>(param: &str, points: &[Point], warnings: &mut Vec<String>, f: F) -> Result<Vec<Vec<String>>, CliError>
where
    F: Fn(&Point) -> Result<(Vec<Vec<String>>, Vec<String>), CliError> + Sync,
{
    let results: Vec<_> = points.par_iter().map(&f).collect();
    if let Some(first) = results.iter().position(Result::is_err) {
        if results.iter().all(Result::is_err) {
            return results.into_iter().nth(first).expect("index in range").map(|_| Vec::new());
        }
    }
    let mut rows = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok((mut rs, ws)) => {
                rows.append(&mut rs);
                warnings.extend(ws);
            }
            Err(e) => warnings.push(format!("{param} = {}: skipped: {e}", p.value)),
        }
    }
    Ok(rows)
}

fn spectrum(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let (param, points) = sweep_points(cfg)?;
    let bounds = cfg.boundaries.list();
    let rows = per_point(&param, &points, warnings, |p| {
        let mut rows = Vec::new();
        let mut warns = ep_warnings(&param, p.value, &p.spec);
        for &b in &bounds {
            let spec = p.spec.with_boundary(b);
            let (labels, betas): (Vec<String>, Vec<Complex64>) = if cfg.numeric_spectrum {
                let ns = numeric_spectrum(&complexify(&build_damping(&spec).xc))?;
                if ns.is_defective() {
                    warns.push(format!("{param} = {}: {} defective eigenvalues ({})", p.value, ns.defective.len(), boundary_name(b)));
                }
                let mut order: Vec<usize> = (0..ns.values.len()).collect();
                order.sort_by(|&i, &j| {
                    let (a, c) = (ns.values[i], ns.values[j]);
                    a.re.total_cmp(&c.re).then(a.im.total_cmp(&c.im))
                });
                (order.iter().enumerate().map(|(k, _)| format!("num@{k}")).collect(), order.iter().map(|&i| ns.values[i]).collect())
            } else {
                let (labels, betas) = rapidities_closed_form(&spec);
                (labels.iter().map(ToString::to_string).collect(), betas)
            };
            for (label, beta) in labels.into_iter().zip(betas) {
                rows.push(vec![num(p.value), boundary_name(b).into(), label, num(beta.re), num(beta.im)]);
            }
        }
        Ok((rows, warns))
    })?;
    let mut table = Table::new([param.as_str(), "boundary", "mode_label", "re_beta", "im_beta"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output { suffix: "", table, plot: plot("rapidity spectrum", &param, &["re_beta"], Some("boundary"), true, false) }])
}

fn gap(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let (param, points) = sweep_points(cfg)?;
    let bounds = cfg.boundaries.list();
    let rows = per_point(&param, &points, warnings, |p| {
        let rows = bounds
            .iter()
            .map(|&b| {
                let g = gap_closed_form(&p.spec.with_boundary(b));
                vec![num(p.value), boundary_name(b).into(), num(g.delta_obc), opt(g.delta_pbc), num(g.delta_numeric), num(g.tc)]
            })
            .collect();
        Ok((rows, Vec::new()))
    })?;
    let mut table = Table::new([param.as_str(), "boundary", "delta_obc", "delta_pbc", "delta_numeric", "tc"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output { suffix: "", table, plot: plot("Liouvillian gap", &param, &["delta_numeric"], Some("boundary"), false, false) }])
}

fn topology(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let (param, points) = sweep_points(cfg)?;
    let bounds = cfg.boundaries.list();
    let rows = per_point(&param, &points, warnings, |p| {
        let mut rows = Vec::new();
        for &b in &bounds {
            let rep = topology_report(&p.spec.with_boundary(b), cfg.winding_grid)?;
            let topological = match rep.topological {
                Some(true) => "true",
                Some(false) => "false",
                None => "indeterminate",
            };
            let mut row = vec![
                num(p.value),
                boundary_name(b).into(),
                rep.nu.map_or_else(|| "nan".into(), |v| v.to_string()),
                topological.into(),
                opt(rep.skin.map(|s| s.r2)),
                opt(rep.skin.map(|s| s.xi)),
            ];
            row.extend(rep.ep_distances.iter().map(|&d| num(d)));
            rows.push(row);
        }
        Ok((rows, ep_warnings(&param, p.value, &p.spec)))
    })?;
    let mut table = Table::new([
        param.as_str(),
        "boundary",
        "nu",
        "topological",
        "r2",
        "xi",
        "ep_t1_minus",
        "ep_t1_plus",
        "ep_t2_minus",
        "ep_t2_plus",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output { suffix: "", table, plot: plot("skin parameter", &param, &["r2"], Some("boundary"), false, false) }])
}

fn steady(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let (param, points) = sweep_points(cfg)?;
    let bounds = cfg.boundaries.list();
    let rows = per_point(&param, &points, warnings, |p| {
        let mut rows = Vec::new();
        let mut warns = Vec::new();
        let n_ss = steady_occupation(&p.spec.rates())?;
        for &b in &bounds {
            let spec = p.spec.with_boundary(b);
            let (class, mut omega) = match classify_ness(&spec) {
                NessClass::Unique => ("unique", None),
                NessClass::Degenerate { .. } => ("degenerate", None),
                NessClass::Quasi { frequency, .. } => ("quasi", Some(frequency)),
            };
            let j_ss = match steady_current(&spec) {
                Ok(j) => {
                    omega = omega.or(j.oscillation.map(|o| o.omega));
                    Some(j.leading)
                }
                Err(e) => {
                    warns.push(format!("{param} = {} ({}): no steady current: {e}", p.value, boundary_name(b)));
                    None
                }
            };
            rows.push(vec![num(p.value), boundary_name(b).into(), class.into(), num(n_ss), opt(j_ss), opt(omega)]);
        }
        Ok((rows, warns))
    })?;
    let mut table = Table::new([param.as_str(), "boundary", "ness_class", "n_ss", "j_ss", "omega"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output { suffix: "", table, plot: plot("steady current", &param, &["j_ss"], Some("boundary"), false, false) }])
}

fn evolve(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let spec = single_spec(cfg, Scenario::Evolve, warnings)?;
    warnings.extend(ep_warnings("t1", spec.t1, &spec));
    let times = cfg.times.values();
    let traj = trajectory(&spec, &cfg.init, &times, cfg.propagation)?;
    let n = spec.sites();
    let mut header = vec!["t".to_string(), "j_c".to_string()];
    header.extend((1..=n).map(|j| format!("n_{j}")));
    header.push("deltaP".into());
    let mut table = Table::new(header);
    for (k, &t) in traj.times.iter().enumerate() {
        let mut row = vec![num(t), num(traj.current[k])];
        row.extend(traj.occupations[k].iter().map(|&v| num(v)));
        row.push(opt(traj.polarization[k]));
        table.push(row);
    }
    let log_x = times[0] > 0.0;
    Ok(vec![Output { suffix: "", table, plot: plot("current", "t", &["j_c"], None, false, log_x) }])
}

fn fit_row(fit: &LifetimeFit, spec: &ChainSpec) -> Vec<String> {
    let xi = skin_parameter(spec).map(|s| s.xi).ok();
    vec![
        num(fit.l),
        num(fit.slope),
        num(fit.intercept),
        num(fit.r_squared),
        num(fit.xi_fit),
        opt(xi),
        num(fit.delta_eff),
        num(fit.delta_eff_intercept),
        num(gap_closed_form(spec).delta_obc),
        fit.flagged.to_string(),
    ]
}

const FIT_COLUMNS: [&str; 10] =
    ["l", "slope", "intercept", "r_squared", "xi_fit", "xi", "delta_eff", "delta_eff_intercept", "delta_obc", "flagged"];

fn lifetime(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    let spec = single_spec(cfg, Scenario::Lifetime, warnings)?;
    warnings.extend(ep_warnings("t1", spec.t1, &spec));
    let fit = lifetime_scan(&spec, &cfg.lifetime_cells, &cfg.init, cfg.lifetime_l)?;
    if fit.flagged {
        warnings.push("lifetime: the edge signal re-crossed the threshold for at least one size".into());
    }
    let mut sizes = Table::new(["cells", "L", "tau"]);
    for (&cells, &tau) in fit.cells.iter().zip(&fit.taus) {
        sizes.push(vec![cells.to_string(), (2 * cells - 1).to_string(), num(tau)]);
    }
    let mut summary = Table::new(FIT_COLUMNS);
    summary.push(fit_row(&fit, &spec));
    Ok(vec![
        Output { suffix: "", table: sizes, plot: plot("edge lifetime", "L", &["tau"], None, false, false) },
        Output { suffix: "_fit", table: summary, plot: None },
    ])
}

fn sweep(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Output>, CliError> {
    if cfg.sweep.is_none() {
        return Err(CliError::Parse("sweep needs a sweep axis (sweep, sweep_start, sweep_stop, sweep_step)".into()));
    }
    if cfg.boundaries != Boundaries::One(Boundary::Open) {
        return Err(CliError::Parse("sweep fits open-chain lifetimes; set boundary = open".into()));
    }
    let (param, points) = sweep_points(cfg)?;
    let rows = per_point(&param, &points, warnings, |p| {
        let fit = lifetime_scan(&p.spec, &cfg.lifetime_cells, &cfg.init, cfg.lifetime_l)?;
        let mut row = vec![num(p.value)];
        row.extend(fit_row(&fit, &p.spec));
        Ok((vec![row], ep_warnings(&param, p.value, &p.spec)))
    })?;
    let mut header = vec![param.clone()];
    header.extend(FIT_COLUMNS.iter().map(|s| s.to_string()));
    let mut table = Table::new(header);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![Output { suffix: "", table, plot: plot("localization length", &param, &["xi_fit", "xi"], None, false, false) }])
}

pub fn run(scenario: Scenario, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut warnings = Vec::new();
    let outputs = match scenario {
        Scenario::Spectrum => spectrum(cfg, &mut warnings),
        Scenario::Gap => gap(cfg, &mut warnings),
        Scenario::Topology => topology(cfg, &mut warnings),
        Scenario::Steady => steady(cfg, &mut warnings),
        Scenario::Evolve => evolve(cfg, &mut warnings),
        Scenario::Lifetime => lifetime(cfg, &mut warnings),
        Scenario::Sweep => sweep(cfg, &mut warnings),
    }?;
    Ok(Report { outputs, warnings })
}
