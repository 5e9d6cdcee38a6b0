//! Winding number, topological regime, exceptional points, skin parameter and gaps.

use crate::error::{Error, Result};
use crate::exact::{rapidities_closed_form, SshParams};
use crate::linalg::c;
use crate::model::{derive_rates, ChainSpec};
use num_complex::Complex64;
use std::f64::consts::PI;

const DET_TOL: f64 = 1e-12;
const EQUAL_TOL: f64 = 1e-12;

/// Winding of `det H_S(q)` around the Brillouin zone, by phase accumulation on `grid` points.
pub fn winding_number(spec: &ChainSpec, grid: usize) -> Result<i32> {
    if grid < 100 {
        return Err(Error::InvalidSpec(format!("winding grid needs at least 100 points, got {grid}")));
    }
    let p = SshParams::from_spec(spec);
    let det = |q: f64| {
        let (a, b) = p.bloch_ab(c(q, 0.0));
        -a * b
    };
    let mut prev = det(-PI);
    if prev.norm() < DET_TOL {
        return Err(Error::DetZero { q: -PI });
    }
    let mut total = 0.0;
    for k in 1..=grid {
        let q = -PI + 2.0 * PI * k as f64 / grid as f64;
        let d = det(q);
        if d.norm() < DET_TOL {
            return Err(Error::DetZero { q });
        }
        total += (d / prev).arg();
        prev = d;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

fn strictly(a: f64, b: f64) -> Option<bool> {
    if (a - b).abs() <= EQUAL_TOL * (1.0 + a.abs().max(b.abs())) {
        None
    } else {
        Some(a < b)
    }
}

fn inequality_regime(t1: f64, t2: f64, g1: f64, g2: f64) -> Option<bool> {
    let dt = (t1.abs() - t2.abs()).abs();
    let st = t1.abs() + t2.abs();
    let dg = (g1.abs() - g2.abs()).abs();
    let sg = g1.abs() + g2.abs();
    let prod = t1 * t2;
    if prod.abs() <= EQUAL_TOL {
        return None;
    }
    if prod > 0.0 {
        Some(strictly(dt, sg)? && strictly(dg, st)?)
    } else {
        let a = strictly(dt, dg)?;
        let b = strictly(sg, st)?;
        Some(a == b)
    }
}

fn localisation_regime(t1: f64, t2: f64, g1: f64, g2: f64) -> Option<bool> {
    let rr = ((t1 - g1) / (t2 + g2)).abs();
    let rl = ((t1 + g1) / (t2 - g2)).abs();
    let sign = |r: f64| {
        let l = r.ln();
        if !l.is_finite() || l.abs() <= EQUAL_TOL {
            None
        } else {
            Some(l > 0.0)
        }
    };
    Some(sign(rr)? != sign(rl)?)
}

/// Whether boundary modes localise at opposite ends, from both the inequality sets and the
/// signs of `ln|r_L|`, `ln|r_R|`; boundaries and disagreement are indeterminate.
pub fn topological_regime(spec: &ChainSpec) -> Result<bool> {
    let r = derive_rates(spec);
    if r.g1 * r.g2 < 0.0 {
        return Err(Error::Unsupported("regime inequalities need g1 * g2 >= 0".into()));
    }
    let a = inequality_regime(spec.t1, spec.t2, r.g1, r.g2).ok_or(Error::Indeterminate)?;
    let b = localisation_regime(spec.t1, spec.t2, r.g1, r.g2).ok_or(Error::Indeterminate)?;
    if a != b {
        return Err(Error::Indeterminate);
    }
    Ok(a)
}

/// Localisation factors of the boundary and bulk modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkinParameters {
    pub r_r: f64,
    pub r_l: f64,
    /// `r = √(r_R / r_L)`, principal branch.
    pub r: Complex64,
    pub r2: f64,
    /// `2 / |ln|r²||`; infinite without skin effect, zero at an exceptional point.
    pub xi: f64,
    /// `r²` is zero or infinite: hopping is one-way on some bond.
    pub extreme: bool,
}

pub fn skin_parameter(spec: &ChainSpec) -> Result<SkinParameters> {
    let rates = derive_rates(spec);
    let (t1, t2, g1, g2) = (spec.t1, spec.t2, rates.g1, rates.g2);
    let num = (t1 - g1) * (t2 - g2);
    let den = (t1 + g1) * (t2 + g2);
    if num == 0.0 && den == 0.0 {
        return Err(Error::InvalidSpec("skin parameter undefined: both hopping directions vanish".into()));
    }
    let r_r = -(t1 - g1) / (t2 + g2);
    let r_l = -(t1 + g1) / (t2 - g2);
    let r2 = num / den;
    let extreme = num == 0.0 || den == 0.0;
    let r = if extreme { c(r2.abs().sqrt(), 0.0) } else { c(r2, 0.0).sqrt() };
    let log = r2.abs().ln().abs();
    let xi = if log == 0.0 { f64::INFINITY } else { 2.0 / log };
    Ok(SkinParameters { r_r, r_l, r, r2, xi, extreme })
}

/// Closed-form and grid-evaluated Liouvillian gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub delta_obc: f64,
    /// Periodic-chain envelope; only derived for `γ₂ = 0`.
    pub delta_pbc: Option<f64>,
    /// `2 min Re β` over the finite momentum grid of the given boundary.
    pub delta_numeric: f64,
    /// Crossover hopping of the periodic gap, `(|t₂| + √(t₂² + 4γ₁²)) / 2`.
    pub tc: f64,
}

pub(crate) fn obc_gap(spec: &ChainSpec) -> f64 {
    let r = derive_rates(spec);
    let mut delta = 2.0 * r.g;
    for (t, g) in [(spec.t1, r.g1), (spec.t2, r.g2)] {
        if g > t.abs() {
            delta -= 2.0 * (g * g - t * t).sqrt();
        }
    }
    delta
}

pub(crate) fn critical_hopping(t2: f64, g1: f64) -> f64 {
    (t2.abs() + (t2 * t2 + 4.0 * g1 * g1).sqrt()) / 2.0
}

/// Periodic gap for `γ₂ = 0`, including the on-site offset `2γ₀`.
pub(crate) fn pbc_gap(t1: f64, t2: f64, g1: f64, g0: f64) -> f64 {
    let (a1, a2) = (t1.abs(), t2.abs());
    let tc = critical_hopping(t2, g1);
    let bulk = if a1 <= a2 {
        0.0
    } else if a1 <= tc {
        2.0 * g1 - 2.0 * (g1 * g1 - (a1 - a2).powi(2)).max(0.0).sqrt()
    } else {
        2.0 * g1 - 2.0 * g1 * a2 / (t1 * t1 - g1 * g1).sqrt()
    };
    2.0 * g0 + bulk
}

pub fn gap_closed_form(spec: &ChainSpec) -> GapReport {
    let r = derive_rates(spec);
    let (_, betas) = rapidities_closed_form(spec);
    let delta_numeric = 2.0 * betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
    let delta_pbc = (r.g2 == 0.0).then(|| pbc_gap(spec.t1, spec.t2, r.g1, r.g0));
    GapReport { delta_obc: obc_gap(spec), delta_pbc, delta_numeric, tc: critical_hopping(spec.t2, r.g1) }
}

/// One bond sitting on `t = ±γ` within tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpHit {
    pub bond: u8,
    /// `+1` for `t = γ`, `−1` for `t = −γ`.
    pub sign: i8,
    pub distance: f64,
    /// Distinct open-chain rapidities left at this point: three with one bond at an EP, one with both.
    pub distinct_rapidities: usize,
}

pub fn classify_ep(spec: &ChainSpec, tol: f64) -> Vec<EpHit> {
    let r = derive_rates(spec);
    let mut hits = Vec::new();
    for (bond, t, g) in [(1u8, spec.t1, r.g1), (2u8, spec.t2, r.g2)] {
        for sign in [1i8, -1i8] {
            let distance = (t - sign as f64 * g).abs();
            if distance <= tol && !(sign == -1 && g == 0.0) {
                hits.push(EpHit { bond, sign, distance, distinct_rapidities: 0 });
            }
        }
    }
    let both = hits.iter().any(|h| h.bond == 1) && hits.iter().any(|h| h.bond == 2);
    for h in &mut hits {
        h.distinct_rapidities = if both { 1 } else { 3 };
    }
    hits
}

/// Collected diagnostics for one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    /// `None` when `det H_S(q)` vanishes on the grid.
    pub nu: Option<i32>,
    /// `None` on phase boundaries.
    pub topological: Option<bool>,
    pub skin: Option<SkinParameters>,
    /// `|t₁ − γ₁|, |t₁ + γ₁|, |t₂ − γ₂|, |t₂ + γ₂|`.
    pub ep_distances: [f64; 4],
}

pub fn topology_report(spec: &ChainSpec, grid: usize) -> Result<TopologyReport> {
    let r = derive_rates(spec);
    let nu = match winding_number(spec, grid) {
        Ok(v) => Some(v),
        Err(Error::DetZero { .. }) => None,
        Err(e) => return Err(e),
    };
    let topological = match topological_regime(spec) {
        Ok(v) => Some(v),
        Err(Error::Indeterminate) => None,
        Err(e) => return Err(e),
    };
    Ok(TopologyReport {
        nu,
        topological,
        skin: skin_parameter(spec).ok(),
        ep_distances: [
            (spec.t1 - r.g1).abs(),
            (spec.t1 + r.g1).abs(),
            (spec.t2 - r.g2).abs(),
            (spec.t2 + r.g2).abs(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use proptest::prelude::*;

    fn pbc(t1: f64, t2: f64, g1: f64, g2: f64) -> ChainSpec {
        ChainSpec::new(t1, t2, Boundary::Periodic, 12).balanced(g1, g2)
    }

    fn counting_winding(t1: f64, t2: f64, g1: f64, g2: f64) -> i32 {
        ((t2 + g2).abs() > (t1 - g1).abs()) as i32 - ((t2 - g2).abs() > (t1 + g1).abs()) as i32
    }

    #[test]
    fn hermitian_limit_has_no_winding() {
        assert_eq!(winding_number(&pbc(0.5, 1.0, 0.0, 0.0), 500).unwrap(), 0);
        assert_eq!(winding_number(&pbc(1.5, 1.0, 0.0, 0.0), 500).unwrap(), 0);
    }

    #[test]
    fn winding_in_topological_window() {
        let s = pbc(1.0, 1.0, 0.2, 0.5);
        assert_eq!(winding_number(&s, 500).unwrap().abs(), 1);
        assert!(topological_regime(&s).unwrap());
        assert!(matches!(winding_number(&s, 50), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn winding_rejects_vanishing_determinant() {
        let s = pbc(1.0, 1.0, 0.0, 0.0);
        assert!(matches!(winding_number(&s, 500), Err(Error::DetZero { .. })));
    }

    #[test]
    fn regime_examples() {
        assert!(!topological_regime(&pbc(5.0, 1.0, 0.2, 0.1)).unwrap());
        assert!(!topological_regime(&pbc(1.0, 0.5, 0.0, 0.0)).unwrap());
        assert!(!topological_regime(&pbc(0.5, 1.0, 0.0, 0.0)).unwrap());
        assert_eq!(topological_regime(&pbc(1.0, 1.0, 0.0, 0.0)), Err(Error::Indeterminate));
        let opposite = pbc(-1.0, 1.0, 1.5, 0.3);
        let v = topological_regime(&opposite).unwrap();
        assert_eq!(v, winding_number(&opposite, 500).unwrap().abs() == 1);
    }

    #[test]
    fn skin_parameter_examples() {
        let a = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 5).loss_only(0.2, 0.8)).unwrap();
        assert!((a.r2 - 0.16 / 2.16).abs() < 1e-15);
        let b = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 5).loss_only(0.1, 0.05)).unwrap();
        assert!((b.r2 - 0.9 * 0.95 / (1.1 * 1.05)).abs() < 1e-15);
        let h = skin_parameter(&ChainSpec::new(1.0, 0.7, Boundary::Open, 5)).unwrap();
        assert_eq!(h.r2, 1.0);
        assert!(h.xi.is_infinite() && !h.extreme);
        let ep = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 5).balanced(1.0, 0.3)).unwrap();
        assert!(ep.extreme && ep.r2 == 0.0 && ep.xi == 0.0);
        let one = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 5).balanced(0.2, 0.0)).unwrap();
        assert!((one.r_r + 0.8).abs() < 1e-15 && (one.r_l + 1.2).abs() < 1e-15);
        assert!((one.r2 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn obc_gap_example() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Open, 200).balanced(1.5, 0.0);
        let g = gap_closed_form(&s);
        assert!((g.delta_obc - (3.0 - 2.0 * 1.25f64.sqrt())).abs() < 1e-14);
        assert!((g.delta_numeric - g.delta_obc).abs() < 2e-3);
    }

    #[test]
    fn obc_gap_weak_regime_is_twice_total_rate() {
        let s = ChainSpec::new(1.0, 0.8, Boundary::Open, 9).balanced(0.3, 0.2);
        let g = gap_closed_form(&s);
        assert!((g.delta_obc - 1.0).abs() < 1e-15);
        assert!((g.delta_numeric - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pbc_gap_branches() {
        let s = pbc(0.5, 1.0, 1.5, 0.0);
        assert_eq!(gap_closed_form(&s).delta_pbc, Some(0.0));
        let tc = critical_hopping(1.0, 1.5);
        assert!((tc - (1.0 + 10f64.sqrt()) / 2.0).abs() < 1e-15);
        let below = pbc_gap(tc * (1.0 - 1e-13), 1.0, 1.5, 0.0);
        let above = pbc_gap(tc * (1.0 + 1e-13), 1.0, 1.5, 0.0);
        assert!((below - above).abs() < 1e-9);
        assert_eq!(gap_closed_form(&pbc(1.0, 1.0, 1.5, 0.5)).delta_pbc, None);
        assert!((pbc_gap(2.0, 1.0, 1.5, 0.25) - pbc_gap(2.0, 1.0, 1.5, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn obc_gap_derivative_jumps_at_ep() {
        let gap = |t1: f64| obc_gap(&ChainSpec::new(t1, 1.0, Boundary::Open, 5).balanced(1.5, 0.0));
        let h = 1e-4;
        let left = (gap(1.5 - h) - gap(1.5 - 2.0 * h)) / h;
        let right = (gap(1.5 + 2.0 * h) - gap(1.5 + h)) / h;
        assert!((left - right).abs() > 0.1);
    }

    #[test]
    fn ep_classification() {
        let s = ChainSpec::new(1.0, 1.0, Boundary::Open, 5).balanced(1.0, 0.3);
        let hits = classify_ep(&s, 1e-12);
        assert_eq!(hits.len(), 1);
        assert_eq!((hits[0].bond, hits[0].sign, hits[0].distinct_rapidities), (1, 1, 3));
        let near = ChainSpec::new(1.0, 1.0, Boundary::Open, 5).balanced(0.999999, 0.0);
        assert_eq!(classify_ep(&near, 1e-5).len(), 1);
        assert!(classify_ep(&ChainSpec::new(1.0, 0.6, Boundary::Open, 5).balanced(0.3, 0.2), 1e-9).is_empty());
        let both = ChainSpec::new(1.0, -0.5, Boundary::Open, 5).balanced(1.0, 0.5);
        assert!(classify_ep(&both, 1e-12).iter().all(|h| h.distinct_rapidities == 1));
    }

    #[test]
    fn report_collects_diagnostics() {
        let rep = topology_report(&pbc(1.0, 1.0, 0.2, 0.5), 500).unwrap();
        assert_eq!(rep.nu.map(i32::abs), Some(1));
        assert_eq!(rep.topological, Some(true));
        assert!((rep.ep_distances[0] - 0.8).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn winding_stable_under_refinement_and_matches_counting(
            t1 in -3.0..3.0f64, t2 in -3.0..3.0f64, g1 in 0.0..3.0f64, g2 in 0.0..3.0f64,
        ) {
            let margin = |a: f64, b: f64| (a.abs() - b.abs()).abs() > 0.3;
            prop_assume!(margin(t2 + g2, t1 - g1) && margin(t2 - g2, t1 + g1));
            let s = pbc(t1, t2, g1, g2);
            let coarse = winding_number(&s, 500).unwrap();
            prop_assert_eq!(coarse, winding_number(&s, 2000).unwrap());
            prop_assert_eq!(coarse, counting_winding(t1, t2, g1, g2));
            if let Ok(v) = topological_regime(&s) {
                prop_assert_eq!(v, coarse.abs() == 1);
            }
        }
    }
}
