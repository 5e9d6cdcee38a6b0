//! Dense linear algebra helpers and the numerical eigensolver oracle.

use crate::error::{Error, Result};
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;

const RADIX: f64 = 2.0;
const DEFECTIVE_KAPPA: f64 = 1e7;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn to_faer(a: &CMat) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

pub fn complexify(a: &Array2<f64>) -> CMat {
    a.mapv(|x| c(x, 0.0))
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn inverse(a: &CMat) -> CMat {
    from_faer(to_faer(a).partial_piv_lu().inverse().as_ref())
}

/// Solves `a x = b` for a square `a`.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    let lu = to_faer(a).partial_piv_lu();
    from_faer(lu.solve(to_faer(b)).as_ref())
}

pub(crate) fn infinity_norm(a: &Array2<f64>) -> f64 {
    a.rows().into_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn one_norm(a: &CMat) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn is_tridiagonal(a: &CMat) -> bool {
    a.indexed_iter().all(|((i, j), z)| i.abs_diff(j) <= 1 || *z == Complex64::new(0.0, 0.0))
}

/// Scaling that gives every tridiagonal pair `(k, k+1)` equal magnitudes.
fn symmetrizing_scaling(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    for k in 0..n.saturating_sub(1) {
        let up = a[[k, k + 1]].norm();
        let down = a[[k + 1, k]].norm();
        let ratio = if up > 0.0 && down > 0.0 { (down / up).sqrt() } else { 1.0 };
        d[k + 1] = d[k] * ratio;
    }
    d
}

/// Diagonal scaling `d` such that `D⁻¹ a D` has comparable row and column norms.
///
/// Norm balancing cannot detect the grading of a Toeplitz-like non-normal
/// chain, so tridiagonal input is first scaled to equal pair magnitudes.
pub fn balance(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    let mut d = if is_tridiagonal(a) { symmetrizing_scaling(a) } else { vec![1.0; n] };
    let mut m = Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]].norm() * d[j] / d[i]);
    for _ in 0..10_000 {
        let mut converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[[j, i]];
                    row += m[[i, j]];
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let s = col + row;
            let mut f = 1.0;
            let mut g = row / RADIX;
            while col < g && f < 1e150 {
                f *= RADIX;
                col *= RADIX;
                row /= RADIX;
                g /= RADIX;
            }
            g = col / RADIX;
            while g >= row && f > 1e-150 {
                f /= RADIX;
                col /= RADIX;
                g /= RADIX;
                row *= RADIX;
            }
            if col + row >= 0.95 * s {
                continue;
            }
            converged = false;
            d[i] *= f;
            for j in 0..n {
                m[[i, j]] /= f;
                m[[j, i]] *= f;
            }
        }
        if converged {
            break;
        }
    }
    d
}

/// Full non-symmetric eigendecomposition with biorthonormal left vectors.
#[derive(Debug, Clone)]
pub struct NumericSpectrum {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as unit-norm columns.
    pub right: CMat,
    /// Left eigenvectors as columns, scaled so that `left[:,m]† right[:,l] = δ_ml`.
    pub left: CMat,
    /// `‖V‖₁ ‖V⁻¹‖₁` of the eigenbasis of the balanced matrix.
    pub condition: f64,
    /// Indices whose eigenvalue condition number marks a (near-)defective block.
    pub defective: Vec<usize>,
}

impl NumericSpectrum {
    pub fn is_defective(&self) -> bool {
        !self.defective.is_empty()
    }

    pub fn bio_residual(&self) -> f64 {
        let g = adjoint(&self.left).dot(&self.right);
        let n = g.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - target).norm());
            }
        }
        worst
    }
}

pub fn numeric_spectrum(x: &CMat) -> Result<NumericSpectrum> {
    let n = x.nrows();
    assert_eq!(n, x.ncols(), "numeric_spectrum needs a square matrix");
    let d = balance(x);
    let balanced = Mat::from_fn(n, n, |i, j| x[[i, j]] * (d[j] / d[i]));
    let evd = balanced.eigen().map_err(|_| Error::EigenFailure)?;
    let values: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let mut vb = from_faer(evd.U());
    for mut col in vb.columns_mut() {
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            col.mapv_inplace(|z| z / nrm);
        }
    }
    let winv = inverse(&vb);
    let condition = one_norm(&vb) * one_norm(&winv);
    let mut defective = Vec::new();
    for m in 0..n {
        let kappa = winv.row(m).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !kappa.is_finite() || kappa > DEFECTIVE_KAPPA {
            defective.push(m);
        }
    }
    let mut right = Array2::zeros((n, n));
    let mut left = Array2::zeros((n, n));
    for m in 0..n {
        let r: Array1<Complex64> = Array1::from_shape_fn(n, |i| vb[[i, m]] * d[i]);
        let l: Array1<Complex64> = Array1::from_shape_fn(n, |i| winv[[m, i]].conj() / d[i]);
        let nrm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        right.column_mut(m).assign(&r.mapv(|z| z / nrm));
        left.column_mut(m).assign(&l.mapv(|z| z * nrm));
    }
    Ok(NumericSpectrum { values, right, left, condition, defective })
}

/// Largest distance between paired elements after greedy nearest-neighbour matching.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (k, w) in b.iter().enumerate() {
            let dist = (z - w).norm();
            if !used[k] && dist < best_d {
                best_d = dist;
                best = Some(k);
            }
        }
        if let Some(k) = best {
            used[k] = true;
        }
        worst = worst.max(best_d);
    }
    worst
}
