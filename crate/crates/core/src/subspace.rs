//! ESPRIT engine: sample covariance, MDL order selection and TLS-ESPRIT
//! space values.
//!
//! Eigen-decompositions are always sorted by descending eigenvalue. A space
//! value `kappa` is the phase step between adjacent rows of the snapshot
//! matrix, reported in `(-pi, pi]`.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `L x S` matrix: `L` samples along the invariance axis, `S` snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<Complex64>,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() < 2 || data.ncols() < 1 {
            return Err(Error::DimensionMismatch {
                expected: "L >= 2, S >= 1".into(),
                got: format!("{} x {}", data.nrows(), data.ncols()),
            });
        }
        Ok(SnapshotMatrix { data })
    }

    pub fn from_fn(l: usize, s: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(DMatrix::from_fn(l, s, f))
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn conj(&self) -> Self {
        SnapshotMatrix { data: self.data.map(|v| v.conj()) }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        SnapshotMatrix { data: self.data.map(|v| v * c) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceValueSet {
    pub count: usize,
    /// Space values sorted by decreasing dominance.
    pub values: Vec<f64>,
    /// Bartlett power `a(k)^H R a(k) / L^2` of each value.
    pub dominance: Vec<f64>,
    /// Order selected by MDL, even when a forced order was used.
    pub mdl_order: usize,
}

impl SpaceValueSet {
    pub fn dominant(&self) -> Option<f64> {
        self.values.first().copied()
    }
}

/// `R = Y Y^H / S`.
pub fn covariance(y: &SnapshotMatrix) -> DMatrix<Complex64> {
    let s = y.snapshots() as f64;
    let mut r = &y.data * y.data.adjoint();
    r.unscale_mut(s);
    // exact Hermitian symmetry for the eigensolver
    let rh = r.adjoint();
    (r + rh).unscale(2.0)
}

/// Eigenpairs of a Hermitian matrix, descending by eigenvalue.
pub fn hermitian_eigen(r: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let eig = nalgebra::SymmetricEigen::try_new(r.clone(), 1e-14, 10_000).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let vectors = DMatrix::from_fn(r.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Wax-Kailath MDL over `k = 0..=max_sources`.
///
/// Eigenvalues below `1e-12` of the largest are raised to that floor, so
/// noiseless rank-`k` data yields `k`. An all-zero spectrum yields 0.
pub fn mdl_order(eigenvalues: &[f64], snapshots: usize, max_sources: usize) -> Result<usize> {
    if eigenvalues.is_empty() {
        return Err(Error::EmptyEigenvalues);
    }
    let l = eigenvalues.len();
    let lmax = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Ok(0);
    }
    let floor = 1e-12 * lmax;
    let mut lam: Vec<f64> = eigenvalues.iter().map(|v| v.max(floor)).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    let s = snapshots.max(1) as f64;
    let kmax = max_sources.min(l - 1);

    let mut best = (0usize, f64::INFINITY);
    for k in 0..=kmax {
        let tail = &lam[k..];
        let p = tail.len() as f64;
        let am = tail.iter().sum::<f64>() / p;
        let ln_gm = tail.iter().map(|v| v.ln()).sum::<f64>() / p;
        // ln(GM/AM) <= 0; clip roundoff above zero
        let ratio = (ln_gm - am.ln()).min(0.0);
        let kf = k as f64;
        let mdl = -s * p * ratio + 0.5 * kf * (2.0 * l as f64 - kf) * s.ln();
        if mdl < best.1 {
            best = (k, mdl);
        }
    }
    Ok(best.0)
}

fn bartlett(r: &DMatrix<Complex64>, kappa: f64) -> f64 {
    let l = r.nrows();
    let a = DVector::from_fn(l, |i, _| Complex64::from_polar(1.0, kappa * i as f64));
    let p = (a.adjoint() * r * &a)[(0, 0)].re;
    p / (l * l) as f64
}

fn general_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m, 1e-14, 10_000).ok_or(Error::EigenFailure)?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

fn sort_by_dominance(r: &DMatrix<Complex64>, kappas: Vec<f64>, mdl: usize) -> SpaceValueSet {
    let mut pairs: Vec<(f64, f64)> = kappas.into_iter().map(|k| (k, bartlett(r, k))).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
    SpaceValueSet {
        count: pairs.len(),
        values: pairs.iter().map(|p| p.0).collect(),
        dominance: pairs.iter().map(|p| p.1).collect(),
        mdl_order: mdl,
    }
}

/// TLS-ESPRIT. The order comes from MDL unless `forced_order` is given.
pub fn esprit_space_values(y: &SnapshotMatrix, forced_order: Option<usize>) -> Result<SpaceValueSet> {
    let l = y.len();
    let r = covariance(y);
    let (lam, u) = hermitian_eigen(&r)?;
    let mdl = mdl_order(&lam, y.snapshots(), l - 1)?;
    let k = forced_order.unwrap_or(mdl);
    if k == 0 {
        return Err(Error::NoTarget);
    }
    if l < k + 1 {
        return Err(Error::ArrayTooShort { len: l, order: k });
    }

    let us = u.columns(0, k);
    let mut u1 = DMatrix::<Complex64>::zeros(l - 1, 2 * k);
    u1.view_mut((0, 0), (l - 1, k)).copy_from(&us.rows(0, l - 1));
    u1.view_mut((0, k), (l - 1, k)).copy_from(&us.rows(1, l - 1));
    let rt = u1.adjoint() * &u1;
    let (_, e) = hermitian_eigen(&rt)?;
    let ua = e.view((0, k), (k, k)).clone_owned();
    let ub = e.view((k, k), (k, k)).clone_owned();
    let ub_inv = ub.try_inverse().ok_or(Error::SingularRotation { order: k })?;
    let rot = -(ua * ub_inv);
    if rot.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularRotation { order: k });
    }
    let kappas = general_eigenvalues(rot)?.into_iter().map(|z| z.arg()).collect();
    Ok(sort_by_dominance(&r, kappas, mdl))
}

/// Single-source ESPRIT for snapshots whose mean along the invariance axis
/// was removed.
///
/// After mean removal a tone `e^{j k n}` becomes `e^{j k n} - mu`. Its
/// principal eigenvector `u` then satisfies `u[n+1] = a u[n] + g` with
/// `a = e^{j k}`, so `a` is found by a least-squares fit of that affine
/// recursion.
pub fn esprit_mean_removed(y: &SnapshotMatrix) -> Result<SpaceValueSet> {
    let l = y.len();
    if l < 3 {
        return Err(Error::ArrayTooShort { len: l, order: 1 });
    }
    let r = covariance(y);
    let (lam, u) = hermitian_eigen(&r)?;
    let mdl = mdl_order(&lam, y.snapshots(), l - 1)?;
    if !(lam[0] > 0.0) {
        return Err(Error::NoTarget);
    }
    let u = u.column(0);
    let design = DMatrix::from_fn(l - 1, 2, |i, j| if j == 0 { u[i] } else { Complex64::new(1.0, 0.0) });
    let rhs = DVector::from_fn(l - 1, |i, _| u[i + 1]);
    let gram = design.adjoint() * &design;
    let gram_inv = gram.try_inverse().ok_or(Error::SingularRotation { order: 1 })?;
    let coef = gram_inv * design.adjoint() * rhs;
    let a = coef[0];
    if !(a.re.is_finite() && a.im.is_finite()) || a.norm() == 0.0 {
        return Err(Error::SingularRotation { order: 1 });
    }
    let kappa = a.arg();
    Ok(SpaceValueSet {
        count: 1,
        values: vec![kappa],
        dominance: vec![lam[0]],
        mdl_order: mdl,
    })
}
