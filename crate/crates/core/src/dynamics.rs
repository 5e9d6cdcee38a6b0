//! Covariance evolution and derived observables.
//!
//! Deviations from the steady state obey `∂C̃ = −C̃X − XᵀC̃`; with the block-diagonal
//! damping matrix every `n × n` block evolves as `Mᵀ B M`, `M = e^{−X_c t}`.

use crate::builder::{build_damping, build_heff, sublattice_phases};
use crate::error::{Error, Result};
use crate::exact::{mode_set, modes_or_numeric, numeric_modes, pbc_regular_modes, ModeSet, SshParams};
use crate::linalg::{adjoint, c, complexify, infinity_norm, CMat};
use crate::model::{derive_rates, Boundary, ChainSpec, DerivedRates, InitialState};
use crate::steady::{steady_covariance, steady_occupation, Covariance};
use crate::topology::{obc_gap, skin_parameter};
use ndarray::{s, Array2};
use num_complex::Complex64;

const ODE_STEP_BUDGET: f64 = 0.05;
const MAX_ODE_STEPS: f64 = 1e8;
const DIVERGENCE_THRESHOLD: f64 = 1e-8;

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::BadTimes);
        }
        prev = t;
    }
    Ok(())
}

/// Absolute covariance of a product state with the given site occupations.
pub fn covariance_from_occupations(v: &[f64]) -> Covariance {
    let n = v.len();
    let mut cm = Array2::zeros((2 * n, 2 * n));
    for (j, &x) in v.iter().enumerate() {
        cm[[j, j + n]] = c(0.0, -(2.0 * x - 1.0));
        cm[[j + n, j]] = c(0.0, 2.0 * x - 1.0);
    }
    Covariance { c: cm, time: Some(0.0) }
}

/// Deviation `C̃(0) = C(0) − C_ss` of the initial state from the steady state.
pub fn initial_covariance(spec: &ChainSpec, init: &InitialState) -> Result<Covariance> {
    let v = init.occupations(spec.sites())?;
    let ss = steady_covariance(spec)?;
    let mut c0 = covariance_from_occupations(&v);
    c0.c -= &ss.c;
    Ok(c0)
}

/// Mode-sum propagator for the four `n × n` blocks of a deviation covariance.
struct BlockEvolver {
    betas: Vec<Complex64>,
    /// Columns `conj(L_m)`.
    left_conj: CMat,
    /// `L†`.
    left_adj: CMat,
    /// `Rᵀ B R` for the blocks (A, B, lower-left, D); `None` for zero blocks.
    projected: [Option<CMat>; 4],
    n: usize,
}

impl BlockEvolver {
    fn new(modes: &ModeSet, c0: &CMat) -> Self {
        let n = modes.right.nrows();
        let r = &modes.right;
        let rt = r.t();
        let blocks = [s![..n, ..n], s![..n, n..], s![n.., ..n], s![n.., n..]];
        let projected = blocks.map(|sl| {
            let b = c0.slice(sl);
            if b.iter().all(|z| *z == c(0.0, 0.0)) {
                None
            } else {
                Some(rt.dot(&b).dot(r))
            }
        });
        BlockEvolver {
            betas: modes.betas.clone(),
            left_conj: modes.left.mapv(|z| z.conj()),
            left_adj: adjoint(&modes.left),
            projected,
            n,
        }
    }

    fn weights(&self, t: f64) -> Vec<Complex64> {
        self.betas.iter().map(|b| (-b * t).exp()).collect()
    }

    fn block(&self, p: &CMat, e: &[Complex64]) -> CMat {
        let mut w = p.clone();
        for ((m, l), z) in w.indexed_iter_mut() {
            *z *= e[m] * e[l];
        }
        self.left_conj.dot(&w).dot(&self.left_adj)
    }

    fn covariance(&self, t: f64) -> CMat {
        let n = self.n;
        let e = self.weights(t);
        let mut out = Array2::zeros((2 * n, 2 * n));
        let blocks = [s![..n, ..n], s![..n, n..], s![n.., ..n], s![n.., n..]];
        for (p, sl) in self.projected.iter().zip(blocks) {
            if let Some(p) = p {
                out.slice_mut(sl).assign(&self.block(p, &e));
            }
        }
        out
    }

    /// `C̃_{j, j+n}(t)` in `O(n²)`.
    fn cross_diagonal(&self, j: usize, t: f64) -> Complex64 {
        let Some(p) = &self.projected[1] else { return c(0.0, 0.0) };
        let e = self.weights(t);
        let a: Vec<Complex64> = (0..self.betas.len()).map(|m| self.left_conj[[j, m]] * e[m]).collect();
        let mut total = c(0.0, 0.0);
        for (m, am) in a.iter().enumerate() {
            let mut row = c(0.0, 0.0);
            for (l, al) in a.iter().enumerate() {
                row += p[[m, l]] * al;
            }
            total += am * row;
        }
        total
    }
}

/// Evolves a deviation covariance by the biorthogonal mode expansion.
pub fn evolve_modesum(modes: &ModeSet, c0: &Covariance, times: &[f64]) -> Result<Vec<Covariance>> {
    check_times(times)?;
    let ev = BlockEvolver::new(modes, &c0.c);
    Ok(times.iter().map(|&t| Covariance { c: ev.covariance(t), time: Some(t) }).collect())
}

fn rk4_steps(x: &Array2<f64>, span: f64) -> Result<usize> {
    let steps = (span * infinity_norm(x) / ODE_STEP_BUDGET).ceil().max(1.0);
    if steps > MAX_ODE_STEPS {
        return Err(Error::Unsupported(format!("time span {span} needs {steps:e} integration steps")));
    }
    Ok(steps as usize)
}

/// Integrates `∂C = −CX − XᵀC + iY` from an absolute covariance with fixed-step RK4.
pub fn evolve_ode(spec: &ChainSpec, c0: &Covariance, times: &[f64]) -> Result<Vec<Covariance>> {
    check_times(times)?;
    let d = build_damping(spec);
    let x = d.x_full();
    let y = d.y_full();
    let xt = x.t().to_owned();
    // C = iK with K real.
    let mut k = c0.c.mapv(|z| z.im);
    let rhs = |k: &Array2<f64>| -> Array2<f64> { -(k.dot(&x)) - xt.dot(k) + &y };
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = rk4_steps(&x, span)?;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(&k);
                let k2 = rhs(&(&k + &(&k1 * (h / 2.0))));
                let k3 = rhs(&(&k + &(&k2 * (h / 2.0))));
                let k4 = rhs(&(&k + &(&k3 * h)));
                k = &k + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (h / 6.0));
                k = (&k - &k.t()) * 0.5;
            }
            now = t;
        }
        out.push(Covariance { c: k.mapv(|v| c(0.0, v)), time: Some(t) });
    }
    Ok(out)
}

fn sigma(n: usize) -> CMat {
    let u = sublattice_phases(n);
    Array2::from_shape_fn((n, n), |(j, k)| u[j].conj() * u[k])
}

fn correlator_core(cm: &CMat, offset: f64) -> CMat {
    let n = cm.nrows() / 2;
    let sg = sigma(n);
    Array2::from_shape_fn((n, n), |(j, k)| {
        let cross = c(0.0, 0.25) * (cm[[j, k + n]] + cm[[k, j + n]]);
        let same = (cm[[j, k]] + cm[[j + n, k + n]]) * 0.25;
        let diag = if j == k { offset } else { 0.0 };
        sg[[j, k]] * (cross - same) + diag
    })
}

/// Single-particle correlator `Q_{jk} = ⟨a_j† a_k⟩`.
pub fn correlator(cov: &Covariance) -> CMat {
    correlator_core(&cov.c, 0.5)
}

/// Correlator deviation `Q − Q_ss` from a deviation covariance.
pub fn correlator_deviation(dev: &Covariance) -> CMat {
    correlator_core(&dev.c, 0.0)
}

/// Site occupations `(1 + i C_{j,j+n}) / 2`.
pub fn occupation(cov: &Covariance) -> Vec<f64> {
    let n = cov.sites();
    (0..n).map(|j| 0.5 * (1.0 + (c(0.0, 1.0) * cov.c[[j, j + n]]).re)).collect()
}

/// Occupations relative to the steady filling `(γ − η) / (2γ)`.
pub fn deviation(cov: &Covariance, rates: &DerivedRates) -> Result<Vec<f64>> {
    let nss = steady_occupation(rates)?;
    Ok(occupation(cov).into_iter().map(|x| x - nss).collect())
}

fn deviation_of(dev: &Covariance) -> Vec<f64> {
    let n = dev.sites();
    (0..n).map(|j| 0.5 * (c(0.0, 1.0) * dev.c[[j, j + n]]).re).collect()
}

/// Bond current `(i/n) Σ_j (Q_{j,j+1} − Q_{j+1,j})`; periodic chains include the wrap bond.
pub fn current(q: &CMat, boundary: Boundary) -> f64 {
    let n = q.nrows();
    let mut total = c(0.0, 0.0);
    for j in 0..n - 1 {
        total += q[[j, j + 1]] - q[[j + 1, j]];
    }
    if boundary == Boundary::Periodic {
        total += q[[n - 1, 0]] - q[[0, n - 1]];
    }
    (c(0.0, 1.0) * total / n as f64).re
}

/// Damping polarisation `Σ j ñ_j / (n Σ ñ_j)`; `None` once the denominator underflows.
pub fn polarization(deviations: &[f64]) -> Option<f64> {
    let n = deviations.len() as f64;
    let total: f64 = deviations.iter().sum();
    let scale: f64 = deviations.iter().map(|x| x.abs()).sum();
    if !total.is_finite() || total.abs() <= 1e-12 * scale || total.abs() < f64::MIN_POSITIVE * 1e10 {
        return None;
    }
    let moment: f64 = deviations.iter().enumerate().map(|(j, x)| (j + 1) as f64 * x).sum();
    Some(moment / (n * total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// Closed-form modes, falling back to the dense eigensolver near exceptional points.
    ExactModes,
    /// Dense eigensolver modes.
    NumericModes,
    /// Fixed-step Runge–Kutta integration.
    Ode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub occupations: Vec<Vec<f64>>,
    pub deviations: Vec<Vec<f64>>,
    pub current: Vec<f64>,
    pub polarization: Vec<Option<f64>>,
}

fn damping_modes(spec: &ChainSpec, how: Propagation) -> Result<ModeSet> {
    match how {
        Propagation::NumericModes => numeric_modes(&complexify(&build_damping(spec).xc)),
        _ => mode_set(spec),
    }
}

/// Deviation covariances along `times`.
fn deviation_series(spec: &ChainSpec, init: &InitialState, times: &[f64], how: Propagation) -> Result<Vec<Covariance>> {
    let dev0 = initial_covariance(spec, init)?;
    let ode = |spec: &ChainSpec| -> Result<Vec<Covariance>> {
        let ss = steady_covariance(spec)?;
        let abs0 = Covariance { c: &dev0.c + &ss.c, time: Some(0.0) };
        let mut out = evolve_ode(spec, &abs0, times)?;
        for cov in &mut out {
            cov.c -= &ss.c;
        }
        Ok(out)
    };
    if how == Propagation::Ode {
        return ode(spec);
    }
    match damping_modes(spec, how) {
        Ok(m) => evolve_modesum(&m, &dev0, times),
        Err(Error::DefectiveBasis { .. }) => ode(spec),
        Err(e) => Err(e),
    }
}

pub fn trajectory(spec: &ChainSpec, init: &InitialState, times: &[f64], how: Propagation) -> Result<Trajectory> {
    let ss = steady_covariance(spec)?;
    let devs = deviation_series(spec, init, times, how)?;
    let mut traj = Trajectory {
        times: times.to_vec(),
        occupations: Vec::with_capacity(times.len()),
        deviations: Vec::with_capacity(times.len()),
        current: Vec::with_capacity(times.len()),
        polarization: Vec::with_capacity(times.len()),
    };
    for dev in devs {
        let full = Covariance { c: &dev.c + &ss.c, time: dev.time };
        let dn = deviation_of(&dev);
        traj.occupations.push(occupation(&full));
        traj.current.push(current(&correlator(&full), spec.boundary));
        traj.polarization.push(polarization(&dn));
        traj.deviations.push(dn);
    }
    Ok(traj)
}

/// Long-time current carried by the slowest modes: `j(t) ≈ background + amplitude(t) e^{−rate t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCurrent {
    /// `2 min Re β`.
    pub decay_rate: f64,
    /// Oscillating amplitude of the slowest modes at the requested time.
    pub amplitude: f64,
    /// Current of the steady covariance.
    pub background: f64,
    pub slow_modes: usize,
}

///
/// Periodic chains tolerate Jordan blocks at grid momenta as long as they decay faster than the
/// retained modes.
pub fn asymptotic_current(spec: &ChainSpec, init: &InitialState, t: f64) -> Result<AsymptoticCurrent> {
    let p = SshParams::from_spec(spec);
    let (modes, skipped) = if p.periodic { pbc_regular_modes(&p) } else { (mode_set(spec)?, Vec::new()) };
    let dev0 = initial_covariance(spec, init)?;
    let ss = steady_covariance(spec)?;
    let min_re = modes.betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
    let scale = 1.0 + derive_rates(spec).g + spec.t1.abs() + spec.t2.abs();
    let window = 1e-9 * scale;
    if let Some(&q) = skipped.first() {
        if p.shift <= min_re + window {
            return Err(Error::DegenerateBasis { q });
        }
    }
    let keep: Vec<bool> = modes.betas.iter().map(|b| b.re <= min_re + window).collect();
    let mut ev = BlockEvolver::new(&modes, &dev0.c);
    ev.betas = modes
        .betas
        .iter()
        .zip(&keep)
        .map(|(b, &k)| if k { c(b.re - min_re, b.im) } else { c(f64::INFINITY, 0.0) })
        .collect();
    let slow = Covariance { c: ev.covariance(t), time: Some(t) };
    Ok(AsymptoticCurrent {
        decay_rate: 2.0 * min_re,
        amplitude: current(&correlator_deviation(&slow), spec.boundary),
        background: current(&correlator(&ss), spec.boundary),
        slow_modes: keep.iter().filter(|&&k| k).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifetime {
    pub tau: f64,
    pub peak_time: f64,
    /// The tail re-crossed the threshold after the reported time.
    pub flagged: bool,
}

/// Time at which `|ñ_last|` falls to `e^{−l}` of its initial value, after its global maximum.
pub fn lifetime(spec: &ChainSpec, init: &InitialState, l: f64) -> Result<Lifetime> {
    if spec.boundary != Boundary::Open {
        return Err(Error::Unsupported("edge lifetime is defined for open chains".into()));
    }
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Lifetime(format!("threshold exponent must be positive, got {l}")));
    }
    let modes = mode_set(spec)?;
    let dev0 = initial_covariance(spec, init)?;
    let ev = BlockEvolver::new(&modes, &dev0.c);
    let last = spec.sites() - 1;
    let f = |t: f64| (0.5 * (c(0.0, 1.0) * ev.cross_diagonal(last, t)).re).abs();
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Err(Error::Lifetime("edge site starts at the steady filling".into()));
    }
    let target = (-l).exp() * f0;
    let rates = derive_rates(spec);
    let h = 0.02 / (rates.g + spec.t1.abs() + spec.t2.abs()).max(1e-3);
    let floor = target * (-5.0f64).exp();
    let slowest = modes.betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
    let horizon = if slowest > 0.0 { (l + 40.0) / slowest } else { 1e4 };
    let mut samples = vec![(0.0, f0)];
    let mut t = 0.0;
    while t < horizon {
        t += h;
        let v = f(t);
        samples.push((t, v));
        if v < floor {
            break;
        }
    }
    let (peak_idx, &(peak_time, _)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("samples are non-empty");
    let cross = samples[peak_idx..]
        .iter()
        .position(|&(_, v)| v < target)
        .map(|k| k + peak_idx)
        .ok_or_else(|| Error::Lifetime("no threshold crossing within the search horizon".into()))?;
    let flagged = samples[cross..].iter().any(|&(_, v)| v >= target);
    let (mut lo, mut hi) = (samples[cross - 1].0, samples[cross].0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Lifetime { tau: 0.5 * (lo + hi), peak_time, flagged })
}

/// Linear fit `τ(N) = intercept + slope · N` with derived length and gap estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeFit {
    pub l: f64,
    pub cells: Vec<usize>,
    pub taus: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `2 / (slope · Δ_OBC)`, assuming the effective gap equals the open-chain gap.
    pub xi_fit: f64,
    /// `ln(1/|r²|) / slope`.
    pub delta_eff: f64,
    /// `1 / intercept`.
    pub delta_eff_intercept: f64,
    pub flagged: bool,
}

pub fn lifetime_scan(template: &ChainSpec, cells: &[usize], init: &InitialState, l: f64) -> Result<LifetimeFit> {
    if cells.len() < 2 {
        return Err(Error::Lifetime("a fit needs at least two system sizes".into()));
    }
    let mut taus = Vec::with_capacity(cells.len());
    let mut flagged = false;
    for &n in cells {
        let lt = lifetime(&template.with_cells(n), init, l)?;
        flagged |= lt.flagged;
        taus.push(lt.tau);
    }
    let xs: Vec<f64> = cells.iter().map(|&n| n as f64).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = taus.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&taus).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&taus).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = taus.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = skin_parameter(template)?.r2.abs();
    Ok(LifetimeFit {
        l,
        cells: cells.to_vec(),
        taus,
        slope,
        intercept,
        r_squared: 1.0 - ss_res / ss_tot,
        xi_fit: 2.0 / (slope * obc_gap(template)),
        delta_eff: (1.0 / r2).ln() / slope,
        delta_eff_intercept: 1.0 / intercept,
        flagged,
    })
}

/// Correlators generated by the no-jump Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRun {
    pub betas: Vec<Complex64>,
    pub times: Vec<f64>,
    pub correlators: Vec<CMat>,
}

pub fn effective_dynamics(spec: &ChainSpec, init: &InitialState, times: &[f64]) -> Result<EffectiveRun> {
    check_times(times)?;
    let n = spec.sites();
    let v = init.occupations(n)?;
    let model = build_heff(spec);
    let r = derive_rates(spec);
    let p = SshParams {
        t1: spec.t1,
        t2: spec.t2,
        g1: r.e1,
        g2: r.e2,
        cells: spec.cells,
        periodic: spec.boundary == Boundary::Periodic,
        shift: r.e + model.s0,
    };
    let modes = modes_or_numeric(&p, || model.damping())?;
    let mut dv = Array2::zeros((2 * n, 2 * n));
    for (j, &x) in v.iter().enumerate() {
        // Cross-block entry −2i v_j maps onto Q = σ ∘ (Mᵀ diag(v) M).
        dv[[j, j + n]] = c(0.0, -2.0 * x);
    }
    let ev = BlockEvolver::new(&modes, &dv);
    let correlators = times
        .iter()
        .map(|&t| correlator_deviation(&Covariance { c: ev.covariance(t), time: Some(t) }))
        .collect();
    Ok(EffectiveRun { betas: modes.betas.clone(), times: times.to_vec(), correlators })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDivergence {
    pub times: Vec<f64>,
    /// `max_j |n_j^PBC − n_j^OBC|` over the shared sites.
    pub max_difference: Vec<f64>,
    /// First time with a difference above `1e-8`.
    pub divergence_time: Option<f64>,
    /// Distance from the centre to the open edge over the largest group velocity.
    pub ballistic_estimate: f64,
}

/// Compares periodic and open chains started from one particle on the central site `N`.
pub fn boundary_sensitivity(spec: &ChainSpec, times: &[f64]) -> Result<BoundaryDivergence> {
    let pbc = spec.with_boundary(Boundary::Periodic);
    let obc = spec.with_boundary(Boundary::Open);
    let init = InitialState::SingleParticle(spec.cells);
    let tp = trajectory(&pbc, &init, times, Propagation::NumericModes)?;
    let to = trajectory(&obc, &init, times, Propagation::NumericModes)?;
    let shared = obc.sites();
    let max_difference: Vec<f64> = tp
        .occupations
        .iter()
        .zip(&to.occupations)
        .map(|(a, b)| (0..shared).map(|j| (a[j] - b[j]).abs()).fold(0.0, f64::max))
        .collect();
    let divergence_time = times.iter().zip(&max_difference).find(|(_, &d)| d > DIVERGENCE_THRESHOLD).map(|(&t, _)| t);
    let speed = 2.0 * spec.t1.abs().min(spec.t2.abs());
    let distance = (spec.cells - 1) as f64;
    let ballistic_estimate = if speed > 0.0 { distance / speed } else { f64::INFINITY };
    Ok(BoundaryDivergence { times: times.to_vec(), max_difference, divergence_time, ballistic_estimate })
}
