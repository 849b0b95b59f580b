//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Everything in the crate works over `Complex64`: frequency-domain
//! evaluations at `i*omega` and diagonal signal generators force complex
//! arithmetic even for real-coefficient models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian part (A + A*)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn spectral_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Numerical rank with the crate-wide relative threshold.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        None | Some(0.0) => 0,
        Some(&max) => sv.iter().filter(|&&s| s > rel_tol * max).count(),
    }
}

/// Two-norm condition estimate; `f64::INFINITY` for a singular matrix.
pub fn condition(a: &CMat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    }
}

/// Moore-Penrose pseudoinverse with relative singular-value cutoff.
pub fn pseudo_inverse(a: &CMat) -> Result<CMat> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    svd.pseudo_inverse(tol::RANK_REL * max_sv.max(f64::MIN_POSITIVE))
        .map_err(|m| Error::InvariantViolation(m.to_string()))
}

pub fn try_inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Solve A X = B by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized
/// first so callers may pass data that is Hermitian only up to roundoff.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

pub fn hermitian_min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a).first().copied().unwrap_or(0.0)
}

pub fn hermitian_max_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a).last().copied().unwrap_or(0.0)
}

/// All eigenvalues of a general complex matrix via the Schur form.
///
/// The QR iteration for complex matrices converges to a triangular factor;
/// any residual 2x2 bump on the subdiagonal is resolved by the quadratic
/// formula on that block.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigFailure);
    }
    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(Error::EigFailure)?;
    let (_, t) = schur.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(1.0);
    let mut eigs = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let sub = if i + 1 < n { t[(i + 1, i)].norm() } else { 0.0 };
        if i + 1 < n && sub > 1e-12 * scale {
            // unresolved 2x2 block: eigenvalues of [[a,b],[c,d]]
            let (a11, a12, a21, a22) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr - det.scale(4.0)).sqrt();
            eigs.push((tr + disc).scale(0.5));
            eigs.push((tr - disc).scale(0.5));
            i += 2;
        } else {
            eigs.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(eigs)
}

/// Largest real part over the spectrum.
pub fn abscissa(a: &CMat) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Stack blocks horizontally. Panics on inconsistent row counts.
pub fn hstack(blocks: &[&CMat]) -> CMat {
    assert!(!blocks.is_empty());
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: inconsistent row counts");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Stack blocks vertically. Panics on inconsistent column counts.
pub fn vstack(blocks: &[&CMat]) -> CMat {
    assert!(!blocks.is_empty());
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: inconsistent column counts");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// 2x2 block matrix [[a, b], [c, d]].
pub fn block2x2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    vstack(&[&hstack(&[a, b]), &hstack(&[c, d])])
}

pub fn max_abs_entry(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
