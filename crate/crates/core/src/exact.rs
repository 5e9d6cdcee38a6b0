//! Closed-form rapidities and biorthogonal eigenvectors of the damping matrix.

use crate::builder::{build_damping, sublattice_phases};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, c, complexify, numeric_spectrum, CMat};
use crate::model::{derive_rates, Boundary, ChainSpec};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

const EP_TOL: f64 = 1e-9;
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Plus,
    Minus,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Plus => 1.0,
            Band::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeLabel {
    /// Boundary mode of the open chain, rapidity exactly `γ`.
    Zero,
    Bulk { band: Band, q: f64 },
    /// Mode obtained from the dense eigensolver, indexed in solver order.
    Numeric(usize),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Zero => write!(f, "zero"),
            ModeLabel::Bulk { band: Band::Plus, q } => write!(f, "plus@{q:.16e}"),
            ModeLabel::Bulk { band: Band::Minus, q } => write!(f, "minus@{q:.16e}"),
            ModeLabel::Numeric(k) => write!(f, "num@{k}"),
        }
    }
}

/// Rapidities with matched right/left eigenvectors of the damping matrix.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub labels: Vec<ModeLabel>,
    pub betas: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: CMat,
    /// Left eigenvectors as columns (`left[:,m]† right[:,l] = δ_ml`).
    pub left: CMat,
    pub bio_residual: f64,
}

impl ModeSet {
    fn assemble(labels: Vec<ModeLabel>, betas: Vec<Complex64>, right: CMat, left: CMat) -> Self {
        let bio_residual = bio_residual(&right, &left);
        ModeSet { labels, betas, right, left, bio_residual }
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `exp(−X t)` reconstructed from the modes.
    pub fn propagator(&self, t: f64) -> CMat {
        self.filtered_propagator(|beta| (-beta * t).exp())
    }

    /// `Σ_m w(β_m) R_m L_m†` for a per-mode weight.
    pub fn filtered_propagator(&self, weight: impl Fn(Complex64) -> Complex64) -> CMat {
        let n = self.right.nrows();
        let mut scaled = self.right.clone();
        for (m, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let w = weight(self.betas[m]);
            col.mapv_inplace(|z| z * w);
        }
        let out = scaled.dot(&adjoint(&self.left));
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// Largest residual of `X R = R β` and `X† L = L β*`, per column relative to the column norm.
    pub fn eigen_residual(&self, x: &CMat) -> f64 {
        let xr = x.dot(&self.right);
        let xl = adjoint(x).dot(&self.left);
        let mut worst: f64 = 0.0;
        for m in 0..self.len() {
            let (mut rr, mut rl, mut nr, mut nl) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..x.nrows() {
                rr += (xr[[i, m]] - self.right[[i, m]] * self.betas[m]).norm_sqr();
                rl += (xl[[i, m]] - self.left[[i, m]] * self.betas[m].conj()).norm_sqr();
                nr += self.right[[i, m]].norm_sqr();
                nl += self.left[[i, m]].norm_sqr();
            }
            worst = worst.max((rr / nr).sqrt()).max((rl / nl).sqrt());
        }
        worst
    }
}

fn bio_residual(right: &CMat, left: &CMat) -> f64 {
    let g = adjoint(left).dot(right);
    let mut worst: f64 = 0.0;
    for ((i, j), z) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((z - target).norm());
    }
    worst
}

/// Hoppings and dissipation strengths entering the non-Hermitian SSH matrix.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SshParams {
    pub t1: f64,
    pub t2: f64,
    pub g1: f64,
    pub g2: f64,
    pub cells: usize,
    pub periodic: bool,
    /// Real offset added to `i E`, i.e. `β = shift + i E`.
    pub shift: f64,
}

impl SshParams {
    pub fn from_spec(spec: &ChainSpec) -> Self {
        let r = derive_rates(spec);
        SshParams {
            t1: spec.t1,
            t2: spec.t2,
            g1: r.g1,
            g2: r.g2,
            cells: spec.cells,
            periodic: spec.boundary == Boundary::Periodic,
            shift: r.g,
        }
    }

    fn sites(&self) -> usize {
        if self.periodic {
            2 * self.cells
        } else {
            2 * self.cells - 1
        }
    }

    /// Off-diagonal Bloch entries `(a, b)` with `E² = a b`; `q` may be complex.
    pub fn bloch_ab(&self, q: Complex64) -> (Complex64, Complex64) {
        let i = c(0.0, 1.0);
        let a = (self.t1 + self.g1) + (self.t2 - self.g2) * (-i * q).exp();
        let b = (self.t1 - self.g1) + (self.t2 + self.g2) * (i * q).exp();
        (a, b)
    }

    fn check_ep(&self) -> Result<()> {
        let scale = 1.0 + self.t1.abs().max(self.t2.abs());
        if (self.t1.abs() - self.g1.abs()).abs() < EP_TOL * scale {
            return Err(Error::ExceptionalPoint { bond: 1 });
        }
        if (self.t2.abs() - self.g2.abs()).abs() < EP_TOL * scale {
            return Err(Error::ExceptionalPoint { bond: 2 });
        }
        Ok(())
    }

    fn obc_constants(&self) -> ObcConstants {
        let (t1, t2, g1, g2) = (self.t1, self.t2, self.g1, self.g2);
        let s = (c(t1 * t1 - g1 * g1, 0.0) * (t2 * t2 - g2 * g2)).sqrt();
        let c0 = t1 * t1 + t2 * t2 - g1 * g1 - g2 * g2;
        let p1 = t1 + g1;
        let p2 = t2 + g2;
        let (r, k) = if p1 != 0.0 && p2 != 0.0 && t2 - g2 != 0.0 {
            let r_r = -(t1 - g1) / p2;
            let r_l = -p1 / (t2 - g2);
            let r = c(r_r / r_l, 0.0).sqrt();
            (Some(r), p1 * p2 * r)
        } else {
            (None, s)
        };
        let flip = (k + s).norm() < (k - s).norm();
        ObcConstants { c0, k, r, flip }
    }
}

struct ObcConstants {
    c0: f64,
    /// Coupling in `E² = c0 + 2K cos q`; `K² = S²`.
    k: Complex64,
    r: Option<Complex64>,
    /// Labels are reported as `π − q` when `K = −S`.
    flip: bool,
}

/// Principal square root with a round-off imaginary part snapped to `+0`,
/// so that values on the negative real axis land on the upper branch.
pub(crate) fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-14 * z.re.abs() {
        c(z.re, 0.0).sqrt()
    } else {
        z.sqrt()
    }
}

fn pbc_grid(cells: usize) -> Vec<f64> {
    let start = -((cells / 2) as i64);
    (0..cells as i64).map(|k| 2.0 * PI * (start + k) as f64 / cells as f64).collect()
}

fn obc_grid(cells: usize) -> Vec<f64> {
    (1..cells).map(|m| PI * m as f64 / cells as f64).collect()
}

fn closed_form(p: &SshParams) -> (Vec<ModeLabel>, Vec<Complex64>) {
    let i = c(0.0, 1.0);
    let mut labels = Vec::new();
    let mut betas = Vec::new();
    if p.periodic {
        for q in pbc_grid(p.cells) {
            let (a, b) = p.bloch_ab(c(q, 0.0));
            let e0 = principal_sqrt(a * b);
            for band in [Band::Plus, Band::Minus] {
                labels.push(ModeLabel::Bulk { band, q });
                betas.push(p.shift + i * e0 * band.sign());
            }
        }
    } else {
        labels.push(ModeLabel::Zero);
        betas.push(c(p.shift, 0.0));
        let k = p.obc_constants();
        for q in obc_grid(p.cells) {
            let e0 = principal_sqrt(k.c0 + 2.0 * k.k * q.cos());
            let label_q = if k.flip { PI - q } else { q };
            for band in [Band::Plus, Band::Minus] {
                labels.push(ModeLabel::Bulk { band, q: label_q });
                betas.push(p.shift + i * e0 * band.sign());
            }
        }
    }
    (labels, betas)
}

/// Rapidities from the closed-form band structure on the boundary-appropriate momentum grid.
pub fn rapidities_closed_form(spec: &ChainSpec) -> (Vec<ModeLabel>, Vec<Complex64>) {
    closed_form(&SshParams::from_spec(spec))
}

pub(crate) fn pbc_modes(p: &SshParams) -> Result<ModeSet> {
    let (modes, skipped) = pbc_regular_modes(p);
    match skipped.first() {
        Some(&q) => Err(Error::DegenerateBasis { q }),
        None => Ok(modes),
    }
}

/// Bloch modes of every momentum whose block is diagonalisable, plus the skipped momenta.
pub(crate) fn pbc_regular_modes(p: &SshParams) -> (ModeSet, Vec<f64>) {
    let n = p.sites();
    let cells = p.cells;
    let u = sublattice_phases(n);
    let i = c(0.0, 1.0);
    let norm = 1.0 / (2.0 * cells as f64).sqrt();
    let mut right = Vec::with_capacity(n * n);
    let mut left = Vec::with_capacity(n * n);
    let mut labels = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for q in pbc_grid(cells) {
        let (a, b) = p.bloch_ab(c(q, 0.0));
        let e0 = principal_sqrt(a * b);
        // One vanishing off-diagonal makes the Bloch block a Jordan block.
        if a.norm().min(b.norm()) < EP_TOL * a.norm().max(b.norm()) || e0.norm() < DEGENERATE_TOL {
            skipped.push(q);
            continue;
        }
        for band in [Band::Plus, Band::Minus] {
            let e = e0 * band.sign();
            let ra = a / e;
            let la = b.conj() / e.conj();
            let mut r = vec![c(0.0, 0.0); n];
            let mut l = vec![c(0.0, 0.0); n];
            for j in 0..cells {
                let phase = Complex64::from_polar(norm, q * (j + 1) as f64);
                r[2 * j] = u[2 * j] * ra * phase;
                r[2 * j + 1] = u[2 * j + 1] * phase;
                l[2 * j] = u[2 * j] * la * phase;
                l[2 * j + 1] = u[2 * j + 1] * phase;
            }
            right.push(r);
            left.push(l);
            labels.push(ModeLabel::Bulk { band, q });
            betas.push(p.shift + i * e);
        }
    }
    let k = betas.len();
    let right = Array2::from_shape_fn((n, k), |(s, m)| right[m][s]);
    let left = Array2::from_shape_fn((n, k), |(s, m)| left[m][s]);
    (ModeSet::assemble(labels, betas, right, left), skipped)
}

pub(crate) fn obc_modes(p: &SshParams) -> Result<ModeSet> {
    p.check_ep()?;
    let (t1, t2, g1, g2) = (p.t1, p.t2, p.g1, p.g2);
    let scale = 1.0 + (t1 * t1 - g1 * g1).abs().max((t2 * t2 - g2 * g2).abs());
    if ((t1 * t1 - g1 * g1).abs() - (t2 * t2 - g2 * g2).abs()).abs() < EP_TOL * scale {
        return Err(Error::GapClosing);
    }
    let cells = p.cells;
    let n = p.sites();
    let u = sublattice_phases(n);
    let i = c(0.0, 1.0);
    let mut right = Array2::zeros((n, n));
    let mut left = Array2::zeros((n, n));
    let mut labels = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);

    // Boundary mode living on the A sublattice only.
    let r_r = c(-(t1 - g1) / (t2 + g2), 0.0);
    let r_l = c(-(t1 + g1) / (t2 - g2), 0.0);
    let x = r_l.conj() * r_r;
    let product = (1.0 - x) / (x * (1.0 - x.powu(cells as u32)));
    let n_r = product.sqrt();
    let n_l = n_r.conj();
    for j in 1..=cells {
        right[[2 * j - 2, 0]] = u[2 * j - 2] * n_r * r_r.powu(j as u32);
        left[[2 * j - 2, 0]] = u[2 * j - 2] * n_l * r_l.powu(j as u32);
    }
    labels.push(ModeLabel::Zero);
    betas.push(c(p.shift, 0.0));

    let k = p.obc_constants();
    let r = k.r.ok_or(Error::ExceptionalPoint { bond: 1 })?;
    let rl = 1.0 / r;
    let amp = 1.0 / (2.0 * cells as f64).sqrt();
    let mut col = 1;
    for q in obc_grid(cells) {
        let e0 = principal_sqrt(k.c0 + 2.0 * k.k * q.cos());
        for band in [Band::Plus, Band::Minus] {
            let e = e0 * band.sign();
            if e.norm() < DEGENERATE_TOL {
                return Err(Error::DegenerateBasis { q });
            }
            let spinor = |qq: f64, s: f64, rr: Complex64| -> [Complex64; 2] {
                let top = (t1 + s * g1 + (t2 - s * g2) / rr * Complex64::from_polar(1.0, -qq)) / e;
                let pref = i / 2f64.sqrt();
                [pref * top, pref]
            };
            let (up, um) = (spinor(q, 1.0, r), spinor(-q, 1.0, r));
            let (lp, lm) = (spinor(q, -1.0, rl), spinor(-q, -1.0, rl));
            for j in 1..=cells {
                let fwd = Complex64::from_polar(1.0, q * j as f64);
                let bwd = fwd.conj();
                let rj = r.powu(j as u32);
                let rlj = rl.powu(j as u32);
                for s in 0..2 {
                    let site = 2 * j - 2 + s;
                    if site >= n {
                        continue;
                    }
                    let vr = rj * (fwd * up[s] - bwd * um[s]) * amp;
                    let vl = (rlj * (fwd * lp[s] - bwd * lm[s]) * amp).conj();
                    right[[site, col]] = u[site] * vr;
                    left[[site, col]] = u[site] * vl;
                }
            }
            labels.push(ModeLabel::Bulk { band, q: if k.flip { PI - q } else { q } });
            betas.push(p.shift + i * e);
            col += 1;
        }
    }
    Ok(ModeSet::assemble(labels, betas, right, left))
}

/// Exact eigensystem of the periodic chain from Bloch spinors.
pub fn pbc_eigensystem(spec: &ChainSpec) -> Result<ModeSet> {
    if spec.boundary != Boundary::Periodic {
        return Err(Error::Unsupported("pbc_eigensystem needs periodic boundaries".into()));
    }
    pbc_modes(&SshParams::from_spec(spec))
}

/// Exact eigensystem of the open chain (odd site count): boundary mode plus standing waves.
pub fn obc_eigensystem(spec: &ChainSpec) -> Result<ModeSet> {
    if spec.boundary != Boundary::Open {
        return Err(Error::Unsupported("obc_eigensystem needs open boundaries".into()));
    }
    obc_modes(&SshParams::from_spec(spec))
}

/// Mode set from the dense eigensolver; refuses defective bases.
pub fn numeric_modes(x: &CMat) -> Result<ModeSet> {
    let s = numeric_spectrum(x)?;
    if s.is_defective() {
        return Err(Error::DefectiveBasis { condition: s.condition });
    }
    let labels = (0..s.values.len()).map(ModeLabel::Numeric).collect();
    Ok(ModeSet::assemble(labels, s.values, s.right, s.left))
}

pub(crate) fn modes_or_numeric(p: &SshParams, x: impl FnOnce() -> CMat) -> Result<ModeSet> {
    let exact = if p.periodic { pbc_modes(p) } else { obc_modes(p) };
    match exact {
        Ok(m) => Ok(m),
        Err(Error::ExceptionalPoint { .. } | Error::GapClosing | Error::DegenerateBasis { .. }) => numeric_modes(&x()),
        Err(e) => Err(e),
    }
}

/// Exact modes where the closed form applies, otherwise the dense eigensolver.
pub fn mode_set(spec: &ChainSpec) -> Result<ModeSet> {
    modes_or_numeric(&SshParams::from_spec(spec), || complexify(&build_damping(spec).xc))
}

/// Diagonal of the transform `R` that maps the open-chain `H_S` onto a symmetric SSH matrix.
pub fn similarity_transform(spec: &ChainSpec) -> Result<Vec<Complex64>> {
    if spec.boundary != Boundary::Open {
        return Err(Error::Unsupported("similarity transform is defined for open chains".into()));
    }
    let p = SshParams::from_spec(spec);
    p.check_ep()?;
    let r1 = c((p.t1 - p.g1) / (p.t1 + p.g1), 0.0).sqrt();
    let r2 = c((p.t2 - p.g2) / (p.t2 + p.g2), 0.0).sqrt();
    let n = p.sites();
    Ok((0..n).map(|s| r1.powu(s.div_ceil(2) as u32) * r2.powu((s / 2) as u32)).collect())
}
