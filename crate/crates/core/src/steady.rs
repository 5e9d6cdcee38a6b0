//! Steady covariance, NESS classification, steady occupation and steady currents.

use crate::builder::build_damping;
use crate::error::{Error, Result};
use crate::exact::{rapidities_closed_form, Band, ModeLabel};
use crate::linalg::{adjoint, c, complexify, inverse, max_abs, numeric_spectrum, solve, CMat};
use crate::model::{derive_rates, Boundary, ChainSpec, DerivedRates};
use ndarray::{s, Array2};
use num_complex::Complex64;
use std::f64::consts::PI;

const SINGULAR_GAP: f64 = 1e-10;
const KRONECKER_MAX_DIM: usize = 40;
const RESIDUAL_TOL: f64 = 1e-10;
const HOPPING_TOL: f64 = 1e-9;

/// Majorana covariance `C` in the basis `(c₁…c_n, d₁…d_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub c: CMat,
    /// Evolution time; `None` marks a steady state.
    pub time: Option<f64>,
}

impl Covariance {
    pub fn sites(&self) -> usize {
        self.c.nrows() / 2
    }

    /// `max |C + Cᵀ|`.
    pub fn antisymmetry_drift(&self) -> f64 {
        max_abs(&(&self.c + &self.c.t()))
    }

    /// `max |Re C|`.
    pub fn real_part_drift(&self) -> f64 {
        self.c.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    /// Cross block `C[:n, n:]`.
    pub fn cross(&self) -> CMat {
        let n = self.sites();
        self.c.slice(s![..n, n..]).to_owned()
    }
}

/// `[[0, I], [−I, 0]]` scaled by `factor`.
pub(crate) fn symplectic(n: usize, factor: Complex64) -> CMat {
    let mut j = Array2::zeros((2 * n, 2 * n));
    for k in 0..n {
        j[[k, k + n]] = factor;
        j[[k + n, k]] = -factor;
    }
    j
}

fn sylvester_residual(x: &CMat, y: &CMat, cm: &CMat) -> f64 {
    let lhs = adjoint(x).dot(cm) + cm.dot(x);
    max_abs(&(&lhs - &y.mapv(|z| z * c(0.0, 1.0))))
}

fn kronecker_solve(x: &CMat, y: &CMat) -> CMat {
    let n = x.nrows();
    let xh = adjoint(x);
    // Column-major vec: vec(X† C + C X) = (I ⊗ X† + Xᵀ ⊗ I) vec(C).
    let mut big = Array2::zeros((n * n, n * n));
    for col in 0..n {
        for i in 0..n {
            let row = col * n + i;
            for k in 0..n {
                big[[row, col * n + k]] += xh[[i, k]];
                big[[row, k * n + i]] += x[[k, col]];
            }
        }
    }
    let rhs = Array2::from_shape_fn((n * n, 1), |(r, _)| c(0.0, 1.0) * y[[r % n, r / n]]);
    let v = solve(&big, &rhs);
    Array2::from_shape_fn((n, n), |(i, j)| v[[j * n + i, 0]])
}

/// Solves `X† C + C X = i Y` through the eigenbasis of `X`, with a dense fallback for small systems.
pub fn solve_sylvester(x: &CMat, y: &CMat) -> Result<Covariance> {
    let n = x.nrows();
    let spec = numeric_spectrum(x)?;
    let mut gap = f64::INFINITY;
    for bm in &spec.values {
        for bl in &spec.values {
            gap = gap.min((bm.conj() + bl).norm());
        }
    }
    if gap < SINGULAR_GAP {
        return Err(Error::SingularSylvester { gap });
    }
    let scale = 1.0 + max_abs(y);
    if !spec.is_defective() {
        let v = &spec.right;
        let w = inverse(v);
        let iy = y.mapv(|z| z * c(0.0, 1.0));
        let mut z = adjoint(v).dot(&iy).dot(v);
        for ((m, l), val) in z.indexed_iter_mut() {
            *val /= spec.values[m].conj() + spec.values[l];
        }
        let cm = adjoint(&w).dot(&z).dot(&w);
        if sylvester_residual(x, y, &cm) < RESIDUAL_TOL * scale || n > KRONECKER_MAX_DIM {
            return Ok(Covariance { c: cm, time: None });
        }
    } else if n > KRONECKER_MAX_DIM {
        return Err(Error::DefectiveBasis { condition: spec.condition });
    }
    Ok(Covariance { c: kronecker_solve(x, y), time: None })
}

/// Steady covariance `(iη/γ) [[0, I], [−I, 0]]` of a solvable chain.
pub fn covariance_solvable(rates: &DerivedRates, n: usize) -> Result<Covariance> {
    rates.require_positive()?;
    if !rates.solvable {
        return Err(Error::NotSolvable);
    }
    Ok(Covariance { c: symplectic(n, c(0.0, rates.e / rates.g)), time: None })
}

/// Steady covariance: closed form when solvable, otherwise the `n × n` cross-block Sylvester equation.
pub fn steady_covariance(spec: &ChainSpec) -> Result<Covariance> {
    let rates = derive_rates(spec);
    rates.require_positive()?;
    let n = spec.sites();
    if rates.solvable {
        return covariance_solvable(&rates, n);
    }
    let d = build_damping(spec);
    // The diagonal blocks decouple with zero source; the cross block obeys Xᵀ B + B X = 4i M₂.
    let cross = solve_sylvester(&complexify(&d.xc), &complexify(&(&d.m2 * 4.0)))?;
    let mut full = Array2::zeros((2 * n, 2 * n));
    full.slice_mut(s![..n, n..]).assign(&cross.c);
    full.slice_mut(s![n.., ..n]).assign(&cross.c.t().mapv(|z| -z));
    Ok(Covariance { c: full, time: None })
}

/// `(γ − η) / (2γ)`.
pub fn steady_occupation(rates: &DerivedRates) -> Result<f64> {
    rates.require_positive()?;
    Ok((rates.g - rates.e) / (2.0 * rates.g))
}

#[derive(Debug, Clone, PartialEq)]
pub enum NessClass {
    Unique,
    /// Zero-rapidity bulk modes.
    Degenerate { modes: Vec<ModeLabel> },
    /// Modes with vanishing decay and finite frequency.
    Quasi { modes: Vec<ModeLabel>, frequency: f64 },
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= HOPPING_TOL * (1.0 + a.abs().max(b.abs()))
}

fn classify_on_grid(spec: &ChainSpec) -> NessClass {
    let (labels, betas) = rapidities_closed_form(spec);
    let scale = 1.0 + derive_rates(spec).g + spec.t1.abs() + spec.t2.abs();
    let slow: Vec<usize> = (0..betas.len()).filter(|&k| betas[k].re.abs() < 1e-9 * scale).collect();
    if slow.is_empty() {
        return NessClass::Unique;
    }
    let modes = slow.iter().map(|&k| labels[k]).collect();
    let frequency = slow.iter().map(|&k| betas[k].im.abs()).fold(0.0, f64::max);
    if frequency < 1e-9 * scale {
        NessClass::Degenerate { modes }
    } else {
        NessClass::Quasi { modes, frequency }
    }
}

/// Long-time character of the chain in the thermodynamic limit.
///
/// Periodic chains follow the closed-form band analysis; parameter sets outside its
/// reach (`γ₁ = 0 < γ₂`, or no dissipation) are classified from the finite grid.
pub fn classify_ness(spec: &ChainSpec) -> NessClass {
    let r = derive_rates(spec);
    let (t1, t2) = (spec.t1, spec.t2);
    if spec.boundary == Boundary::Open || r.g == 0.0 || (r.g1 == 0.0 && r.g2 != 0.0) {
        return classify_on_grid(spec);
    }
    let plus = |q: f64| ModeLabel::Bulk { band: Band::Plus, q };
    if r.g2 != 0.0 {
        return if same(t1, t2) { NessClass::Degenerate { modes: vec![plus(-PI)] } } else { NessClass::Unique };
    }
    if same(t1.abs(), t2.abs()) {
        let q = -PI / 2.0 * ((t1 * t2).signum() + 1.0);
        return NessClass::Degenerate { modes: vec![plus(q)] };
    }
    if t1.abs() < t2.abs() {
        let q = (-t1 / t2).acos();
        let modes = vec![
            plus(q),
            plus(-q),
            ModeLabel::Bulk { band: Band::Minus, q },
            ModeLabel::Bulk { band: Band::Minus, q: -q },
        ];
        return NessClass::Quasi { modes, frequency: (t2 * t2 - t1 * t1).sqrt() };
    }
    NessClass::Unique
}

/// `cos`/`sin` correction of order `1/N²` to the quasi-steady current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentOscillation {
    pub cos_amplitude: f64,
    pub sin_amplitude: f64,
    pub omega: f64,
}

/// Long-time current of the periodic chain started from the filled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyCurrent {
    pub leading: f64,
    pub oscillation: Option<CurrentOscillation>,
}

impl SteadyCurrent {
    /// Leading value plus the oscillating correction at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.leading
            + self.oscillation.map_or(0.0, |o| o.cos_amplitude * (o.omega * t).cos() + o.sin_amplitude * (o.omega * t).sin())
    }
}

pub fn steady_current(spec: &ChainSpec) -> Result<SteadyCurrent> {
    let r = derive_rates(spec);
    r.require_positive()?;
    let zero = SteadyCurrent { leading: 0.0, oscillation: None };
    if spec.boundary == Boundary::Open {
        return Ok(zero);
    }
    let (t1, t2) = (spec.t1, spec.t2);
    let cells = spec.cells as f64;
    let pref = (r.g + r.e) / r.g;
    let unit = SteadyCurrent { leading: pref / (2.0 * cells), oscillation: None };
    if r.g1 != 0.0 && r.g2 != 0.0 {
        return Ok(if same(t1, t2) { unit } else { zero });
    }
    if r.g2 != 0.0 || r.g1 == 0.0 {
        return Err(Error::Unsupported("steady current derived for g1 > 0 with g2 = 0 or g1 * g2 != 0".into()));
    }
    if t2 <= 0.0 {
        return Err(Error::Unsupported("steady current for g2 = 0 is derived for t2 > 0".into()));
    }
    if same(t1, t2) {
        return Ok(unit);
    }
    if same(t1, -t2) || t1.abs() > t2 {
        return Ok(zero);
    }
    let ratio = (t1 + t2) / t2;
    let alpha = (1.0 - (t1 / t2).powi(2)).sqrt();
    let corr = pref / (2.0 * cells * cells);
    Ok(SteadyCurrent {
        leading: pref * ratio / (2.0 * cells),
        oscillation: Some(CurrentOscillation {
            cos_amplitude: corr * ratio,
            sin_amplitude: corr * alpha,
            omega: 2.0 * t2 * alpha,
        }),
    })
}

/// Smallest real part of the rapidities, from the mode set of the damping matrix.
#[cfg(test)]
fn slowest_rate(spec: &ChainSpec) -> Result<f64> {
    let m = crate::exact::mode_set(spec)?;
    Ok(m.betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_damping;
    use proptest::prelude::*;

    fn full_xy(spec: &ChainSpec) -> (CMat, CMat) {
        let d = build_damping(spec);
        (complexify(&d.x_full()), complexify(&d.y_full()))
    }

    #[test]
    fn balanced_rates_give_zero_covariance() {
        let s = ChainSpec::new(1.0, 0.7, Boundary::Open, 3).balanced(0.6, 0.2);
        let (x, y) = full_xy(&s);
        let cov = solve_sylvester(&x, &y).unwrap();
        assert!(max_abs(&cov.c) < 1e-12);
        assert!(max_abs(&steady_covariance(&s).unwrap().c) == 0.0);
    }

    #[test]
    fn proportional_rates_match_closed_form() {
        let s = ChainSpec::new(1.0, 0.7, Boundary::Periodic, 3).strengths(0.4, 0.2, 0.8, 0.4);
        let rates = derive_rates(&s);
        assert!(rates.solvable);
        let (x, y) = full_xy(&s);
        let generic = solve_sylvester(&x, &y).unwrap();
        let closed = covariance_solvable(&rates, s.sites()).unwrap();
        assert!(max_abs(&(&generic.c - &closed.c)) < 1e-10);
        assert!((closed.c[[0, s.sites()]] - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn loss_only_rates_give_unit_factor() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Open, 4).loss_only(0.2, 0.8);
        let cov = covariance_solvable(&derive_rates(&s), s.sites()).unwrap();
        assert!((cov.c[[0, s.sites()]] - c(0.0, 1.0)).norm() < 1e-15);
        let (x, y) = full_xy(&s);
        assert!(sylvester_residual(&x, &y, &cov.c) < 1e-12);
    }

    #[test]
    fn non_solvable_rates_use_generic_solve() {
        let s = ChainSpec::new(1.0, 0.8, Boundary::Open, 3).strengths(1.0, 0.5, 0.3, 0.1);
        let rates = derive_rates(&s);
        assert!(!rates.solvable);
        assert_eq!(covariance_solvable(&rates, s.sites()).unwrap_err(), Error::NotSolvable);
        let (x, y) = full_xy(&s);
        let full = solve_sylvester(&x, &y).unwrap();
        assert!(sylvester_residual(&x, &y, &full.c) < 1e-10);
        let blocks = steady_covariance(&s).unwrap();
        assert!(max_abs(&(&full.c - &blocks.c)) < 1e-10);
        assert!(blocks.antisymmetry_drift() < 1e-12 && blocks.real_part_drift() < 1e-10);
    }

    #[test]
    fn kronecker_fallback_agrees_with_eigen_method() {
        let s = ChainSpec::new(0.9, 1.1, Boundary::Open, 2).strengths(0.7, 0.3, 0.4, -0.2);
        let (x, y) = full_xy(&s);
        let a = solve_sylvester(&x, &y).unwrap();
        let b = kronecker_solve(&x, &y);
        assert!(max_abs(&(&a.c - &b)) < 1e-12);
    }

    #[test]
    fn gapless_chain_is_singular() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 4).balanced(0.5, 0.3);
        let (x, y) = full_xy(&s);
        assert!(matches!(solve_sylvester(&x, &y), Err(Error::SingularSylvester { .. })));
    }

    #[test]
    fn occupation_examples() {
        let base = ChainSpec::new(1.0, 1.0, Boundary::Open, 3);
        assert_eq!(steady_occupation(&derive_rates(&base.clone().balanced(0.3, 0.1))).unwrap(), 0.5);
        assert_eq!(steady_occupation(&derive_rates(&base.clone().loss_only(0.2, 0.8))).unwrap(), 0.0);
        let gain = base.clone().bond1(0.0, 0.4).bond2(0.0, 0.2);
        assert_eq!(steady_occupation(&derive_rates(&gain)).unwrap(), 1.0);
        assert_eq!(steady_occupation(&derive_rates(&base)), Err(Error::ZeroRate));
    }

    #[test]
    fn ness_classes() {
        let quasi = ChainSpec::new(0.5, 1.0, Boundary::Periodic, 8).balanced(1.5, 0.0);
        match classify_ness(&quasi) {
            NessClass::Quasi { modes, frequency } => {
                assert_eq!(modes.len(), 4);
                assert!((frequency - 0.75f64.sqrt()).abs() < 1e-15);
            }
            other => panic!("expected quasi, got {other:?}"),
        }
        assert_eq!(classify_ness(&quasi.with_boundary(Boundary::Open)), NessClass::Unique);
        let deg = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 8).balanced(1.5, 0.5);
        assert_eq!(classify_ness(&deg), NessClass::Degenerate { modes: vec![ModeLabel::Bulk { band: Band::Plus, q: -PI }] });
        let anti = ChainSpec::new(-1.0, 1.0, Boundary::Periodic, 8).balanced(1.5, 0.0);
        assert_eq!(classify_ness(&anti), NessClass::Degenerate { modes: vec![ModeLabel::Bulk { band: Band::Plus, q: 0.0 }] });
        let gapped = ChainSpec::new(2.0, 1.0, Boundary::Periodic, 8).balanced(1.5, 0.0);
        assert_eq!(classify_ness(&gapped), NessClass::Unique);
    }

    #[test]
    fn degenerate_mode_has_zero_rapidity_on_even_grid() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 8).balanced(1.5, 0.5);
        assert!(slowest_rate(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn steady_current_examples() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 12).balanced(1.5, 0.5);
        assert!((steady_current(&s).unwrap().leading - 1.0 / 24.0).abs() < 1e-15);
        let weak = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 12).balanced(0.02, 0.01);
        assert!((steady_current(&weak).unwrap().leading - steady_current(&s).unwrap().leading).abs() < 1e-9);
        let anti = ChainSpec::new(-1.0, 1.0, Boundary::Periodic, 12).balanced(1.5, 0.0);
        assert_eq!(steady_current(&anti).unwrap().leading, 0.0);
        let quasi = ChainSpec::new(0.5, 1.0, Boundary::Periodic, 32).balanced(1.5, 0.0);
        let j = steady_current(&quasi).unwrap();
        assert!((j.leading - 1.5 / 64.0).abs() < 1e-15);
        let o = j.oscillation.unwrap();
        assert!((j.value_at(0.0) - j.leading - o.cos_amplitude).abs() < 1e-15);
        assert_eq!(steady_current(&s.with_boundary(Boundary::Open)).unwrap().leading, 0.0);
        let loss = ChainSpec::new(1.0, 1.0, Boundary::Periodic, 10).loss_only(0.2, 0.8);
        assert!((steady_current(&loss).unwrap().leading - 0.1).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn sylvester_residual_on_gapped_specs(
            t1 in -2.0..2.0f64, t2 in -2.0..2.0f64,
            l1 in 0.0..2.0f64, a1 in 0.0..2.0f64, l2 in 0.0..2.0f64, a2 in 0.0..2.0f64,
            l0 in 0.0..0.5f64, cells in 2usize..4, pbc: bool,
        ) {
            let b = if pbc { Boundary::Periodic } else { Boundary::Open };
            let s = ChainSpec::new(t1, t2, b, cells).bond1(l1, a1).bond2(l2, a2).onsite(l0, 0.0);
            let (x, y) = full_xy(&s);
            let gap = numeric_spectrum(&x).unwrap().values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
            prop_assume!(gap > 1e-8);
            let cov = solve_sylvester(&x, &y).unwrap();
            prop_assert!(sylvester_residual(&x, &y, &cov.c) < 1e-10 * (1.0 + max_abs(&y)));
        }

        #[test]
        fn occupation_invariant_under_rescaling(
            l1 in 0.0..2.0f64, a1 in 0.0..2.0f64, l2 in 0.0..2.0f64, a2 in 0.0..2.0f64, k in 0.01..50.0f64,
        ) {
            let base = ChainSpec::new(1.0, 1.0, Boundary::Open, 3);
            let s = base.clone().bond1(l1, a1).bond2(l2, a2);
            prop_assume!(l1 + a1 + l2 + a2 > 1e-3);
            let scaled = base.bond1(k * l1, k * a1).bond2(k * l2, k * a2);
            let n0 = steady_occupation(&derive_rates(&s)).unwrap();
            let n1 = steady_occupation(&derive_rates(&scaled)).unwrap();
            prop_assert!((n0 - n1).abs() < 1e-12);
        }
    }
}
