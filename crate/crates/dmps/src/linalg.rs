//! Dense complex linear algebra used by the tensor operations.
//!
//! The workhorse is [`truncated_svd`], which factorizes a matricized two-site
//! tensor and discards small singular values subject to a maximum rank
//! `d_max` and a relative threshold `eps`. The discarded weight (the squared
//! norm fraction of the dropped spectrum) is reported back to the caller so
//! truncation errors can be accumulated across a circuit.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, SVDInto, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
pub type CMat = Array2<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Result of a rank-truncated singular value decomposition.
///
/// `u` has orthonormal columns, `vh` orthonormal rows, `s` is descending and
/// non-negative. `discarded_weight` is `sum(dropped s_i^2) / sum(all s_i^2)`,
/// in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: CMat,
    pub s: Array1<f64>,
    pub vh: CMat,
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|x| x.conj())
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Max-norm deviation of `m` from unitarity.
pub fn unitarity_error(m: &CMat) -> f64 {
    let n = m.nrows();
    let p = dagger(m).dot(m);
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C_ONE } else { C_ZERO };
            err = err.max((p[[i, j]] - target).norm());
        }
    }
    err
}

/// SVD truncated to at most `d_max` singular values, additionally dropping
/// values with `s_i / ||s||_2 < eps`. At least one value is always kept so a
/// bond never collapses to dimension zero. Ties at the cut are resolved by
/// keeping the earlier (descending-order) values.
pub fn truncated_svd(m: &CMat, d_max: usize, eps: f64) -> Result<TruncatedSvd> {
    if d_max < 1 {
        return Err(Error::invalid("truncated_svd: d_max must be >= 1"));
    }
    if !(eps >= 0.0) {
        return Err(Error::invalid("truncated_svd: eps must be >= 0"));
    }
    if !is_finite(m) {
        return Err(Error::invalid("truncated_svd: input has non-finite entries"));
    }
    let (rows, cols) = m.dim();
    let (u, s, vh) = m
        .to_owned()
        .svd_into(true, true)
        .map_err(|e| Error::Numerical(format!("SVD failed on {rows}x{cols} matrix: {e}")))?;
    let u = u.expect("requested U");
    let vh = vh.expect("requested V^H");

    let total: f64 = s.iter().map(|x| x * x).sum();
    let norm = total.sqrt();
    let mut keep = s.len().min(d_max);
    if norm > 0.0 {
        let cutoff = eps * norm;
        let above = s.iter().take(keep).filter(|&&x| x >= cutoff).count();
        keep = keep.min(above);
    }
    keep = keep.max(1);

    let kept: f64 = s.iter().take(keep).map(|x| x * x).sum();
    let discarded_weight = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };

    Ok(TruncatedSvd {
        u: u.slice(s![.., ..keep]).to_owned(),
        s: s.slice(s![..keep]).to_owned(),
        vh: vh.slice(s![..keep, ..]).to_owned(),
        discarded_weight,
    })
}

/// Inverse square root of a Hermitian positive semi-definite matrix.
/// Eigenvalues below `floor` are clamped to keep the result finite.
pub fn herm_inv_sqrt(m: &CMat, floor: f64) -> Result<CMat> {
    let (vals, vecs) = herm_eigh(m)?;
    let d = Array1::from_iter(
        vals.iter()
            .map(|&v| Complex64::new(1.0 / v.max(floor).sqrt(), 0.0)),
    );
    let mut scaled = vecs.clone();
    for (mut col, f) in scaled.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|x| x * f);
    }
    Ok(scaled.dot(&dagger(&vecs)))
}

/// Hermitian eigendecomposition (ascending eigenvalues); column `i` of the
/// returned matrix is the eigenvector of eigenvalue `i`.
///
/// The backend hands back the vectors conjugated for row-major complex input,
/// which is undone here.
pub fn herm_eigh(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    let (vals, vecs) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigh failed on {}x{} matrix: {e}", m.nrows(), m.ncols())))?;
    Ok((vals, vecs.mapv(|x| x.conj())))
}

pub fn reconstruct(svd: &TruncatedSvd) -> CMat {
    let k = svd.rank();
    let mut us = svd.u.clone();
    for (mut col, &sv) in us.columns_mut().into_iter().zip(svd.s.iter()).take(k) {
        col.mapv_inplace(|x| x * sv);
    }
    us.dot(&svd.vh)
}
