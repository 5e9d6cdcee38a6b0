//! Matrix representations of the chain: Majorana blocks, damping matrix,
//! non-Hermitian SSH matrix, Bloch blocks and the no-jump Hamiltonian.

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::model::{derive_rates, site_count, Boundary, ChainSpec};
use ndarray::{s, Array2};
use num_complex::Complex64;

/// Quadratic-form blocks in the Majorana basis.
#[derive(Debug, Clone)]
pub struct RealSpaceMatrices {
    /// Hamiltonian block: purely imaginary, antisymmetric.
    pub h0: CMat,
    /// Symmetric part of the bath matrix, built from the strengths `γᵢ`.
    pub m1: Array2<f64>,
    /// Source part of the bath matrix, built from the imbalances `ηᵢ`.
    pub m2: Array2<f64>,
}

pub fn build_real_space(spec: &ChainSpec) -> RealSpaceMatrices {
    let n = site_count(spec);
    let r = derive_rates(spec);
    let mut h0 = Array2::zeros((n, n));
    let mut m1 = Array2::zeros((n, n));
    let mut m2 = Array2::zeros((n, n));
    for p in 0..n - 1 {
        let intra = p % 2 == 0;
        let (hop, sign, g, e) = if intra { (spec.t1, 1.0, r.g1, r.e1) } else { (spec.t2, -1.0, -r.g2, -r.e2) };
        h0[[p, p + 1]] = c(0.0, 0.25 * sign * hop);
        h0[[p + 1, p]] = c(0.0, -0.25 * sign * hop);
        m1[[p, p + 1]] = 0.5 * g;
        m1[[p + 1, p]] = 0.5 * g;
        m2[[p, p + 1]] = 0.5 * e;
        m2[[p + 1, p]] = 0.5 * e;
    }
    if spec.boundary == Boundary::Periodic {
        h0[[n - 1, 0]] = c(0.0, -0.25 * spec.t2);
        h0[[0, n - 1]] = c(0.0, 0.25 * spec.t2);
        m1[[n - 1, 0]] = -0.5 * r.g2;
        m1[[0, n - 1]] = -0.5 * r.g2;
        m2[[n - 1, 0]] = -0.5 * r.e2;
        m2[[0, n - 1]] = -0.5 * r.e2;
    }
    for p in 0..n {
        m1[[p, p]] = 0.5 * r.g;
        m2[[p, p]] = 0.5 * r.e;
    }
    RealSpaceMatrices { h0, m1, m2 }
}

/// Damping matrix of one Majorana species and the source block.
///
/// The full `2n × 2n` damping matrix is block diagonal with two copies of
/// `xc`; the source matrix is `4 [[0, m2], [-m2, 0]]`.
#[derive(Debug, Clone)]
pub struct DampingBlocks {
    pub xc: Array2<f64>,
    pub m2: Array2<f64>,
    /// Half the trace of the full damping matrix, `n γ`.
    pub a0: f64,
}

impl DampingBlocks {
    pub fn sites(&self) -> usize {
        self.xc.nrows()
    }

    pub fn x_full(&self) -> Array2<f64> {
        let n = self.sites();
        let mut x = Array2::zeros((2 * n, 2 * n));
        x.slice_mut(s![..n, ..n]).assign(&self.xc);
        x.slice_mut(s![n.., n..]).assign(&self.xc);
        x
    }

    pub fn y_full(&self) -> Array2<f64> {
        let n = self.sites();
        let mut y = Array2::zeros((2 * n, 2 * n));
        y.slice_mut(s![..n, n..]).assign(&(&self.m2 * 4.0));
        y.slice_mut(s![n.., ..n]).assign(&(&self.m2 * -4.0));
        y
    }
}

pub fn build_damping(spec: &ChainSpec) -> DampingBlocks {
    let rs = build_real_space(spec);
    let n = rs.m1.nrows();
    let xc = Array2::from_shape_fn((n, n), |(i, j)| (rs.h0[[i, j]] * c(0.0, -4.0)).re + 2.0 * rs.m1[[i, j]]);
    DampingBlocks { xc, m2: rs.m2, a0: n as f64 * derive_rates(spec).g }
}

/// Diagonal of the gauge transform `U = diag(1, i, 1, i, …)`.
pub fn sublattice_phases(n: usize) -> Vec<Complex64> {
    (0..n).map(|p| if p % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) }).collect()
}

pub(crate) fn hs_matrix(t1: f64, t2: f64, g1: f64, g2: f64, n: usize, periodic: bool) -> Array2<f64> {
    let mut h = Array2::zeros((n, n));
    for p in 0..n - 1 {
        let (t, g) = if p % 2 == 0 { (t1, g1) } else { (t2, g2) };
        h[[p, p + 1]] = t + g;
        h[[p + 1, p]] = t - g;
    }
    if periodic {
        h[[n - 1, 0]] = t2 + g2;
        h[[0, n - 1]] = t2 - g2;
    }
    h
}

/// Non-Hermitian SSH matrix with hoppings `tᵢ ± γᵢ`.
pub fn build_hs(spec: &ChainSpec) -> Array2<f64> {
    let r = derive_rates(spec);
    hs_matrix(spec.t1, spec.t2, r.g1, r.g2, site_count(spec), spec.boundary == Boundary::Periodic)
}

/// Momentum-space 2×2 blocks on the (A, B) sublattice basis.
#[derive(Debug, Clone)]
pub struct BlochBlocks {
    pub q: f64,
    pub h0q: CMat,
    pub m1q: CMat,
    pub m2q: CMat,
    pub xq: CMat,
    pub hsq: CMat,
}

fn two_by_two(diag: Complex64, ab: Complex64, ba: Complex64) -> CMat {
    ndarray::array![[diag, ab], [ba, diag]]
}

pub fn build_bloch(spec: &ChainSpec, q: f64) -> Result<BlochBlocks> {
    if spec.boundary != Boundary::Periodic {
        return Err(Error::Unsupported("Bloch blocks need periodic boundaries".into()));
    }
    let r = derive_rates(spec);
    let back = Complex64::from_polar(1.0, -q);
    let fwd = Complex64::from_polar(1.0, q);
    let zero = c(0.0, 0.0);
    let h0q = two_by_two(zero, c(0.0, 0.25) * (spec.t1 + spec.t2 * back), c(0.0, -0.25) * (spec.t1 + spec.t2 * fwd));
    let m1q = two_by_two(c(0.5 * r.g, 0.0), 0.5 * (r.g1 - r.g2 * back), 0.5 * (r.g1 - r.g2 * fwd));
    let m2q = two_by_two(c(0.5 * r.e, 0.0), 0.5 * (r.e1 - r.e2 * back), 0.5 * (r.e1 - r.e2 * fwd));
    let xq = h0q.mapv(|z| z * c(0.0, -4.0)) + m1q.mapv(|z| z * 2.0);
    let hsq = two_by_two(zero, (spec.t1 + r.g1) + (spec.t2 - r.g2) * back, (spec.t1 - r.g1) + (spec.t2 + r.g2) * fwd);
    Ok(BlochBlocks { q, h0q, m1q, m2q, xq, hsq })
}

/// No-jump Hamiltonian: single-particle matrix without the scalar shift, plus the shift.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub heff: CMat,
    /// Magnitude of the scalar imaginary shift, `(γ − η) n / 2`.
    pub s0: f64,
}

impl EffectiveModel {
    /// Damping-matrix analogue `i U h_effᵀ U⁻¹ + s0`, whose spectrum is the effective rapidities.
    pub fn damping(&self) -> CMat {
        let n = self.heff.nrows();
        let u = sublattice_phases(n);
        Array2::from_shape_fn((n, n), |(j, k)| {
            let shift = if j == k { c(self.s0, 0.0) } else { c(0.0, 0.0) };
            c(0.0, 1.0) * u[j] * self.heff[[k, j]] * u[k].conj() + shift
        })
    }
}

pub fn build_heff(spec: &ChainSpec) -> EffectiveModel {
    let n = site_count(spec);
    let r = derive_rates(spec);
    let mut heff = Array2::zeros((n, n));
    for p in 0..n - 1 {
        let (t, e) = if p % 2 == 0 { (spec.t1, r.e1) } else { (spec.t2, r.e2) };
        heff[[p, p + 1]] = c(t - e, 0.0);
        heff[[p + 1, p]] = c(t + e, 0.0);
    }
    if spec.boundary == Boundary::Periodic {
        heff[[n - 1, 0]] = c(spec.t2 - r.e2, 0.0);
        heff[[0, n - 1]] = c(spec.t2 + r.e2, 0.0);
    }
    for p in 0..n {
        heff[[p, p]] = c(0.0, -r.e);
    }
    EffectiveModel { heff, s0: 0.5 * (r.g - r.e) * n as f64 }
}
