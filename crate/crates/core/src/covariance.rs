//! Two-mode covariance matrices in the ordering (x_A, p_A, x_B, p_B) with
//! hbar = 1, so the vacuum is `I/2`.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{direct_sum, max_abs, omega, sub2, Mat2, Mat4, Vec4};
use crate::tolerance::Tolerances;

/// Real symmetric 4x4 covariance matrix with optional first moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMat4 {
    entries: Mat4,
    mean: Vec4,
}

/// Result of the uncertainty-principle check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Symplectic eigenvalues in ascending order.
    pub symplectic_eigs: [f64; 2],
    pub is_physical: bool,
    pub is_pure: bool,
    pub positive_definite: bool,
}

/// Partial-transpose separability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptReport {
    pub nu_tilde_min: f64,
    pub separable: bool,
}

/// x and p sectors of a covariance without x-p cross terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPair {
    /// Rows/cols (x_A, x_B).
    pub x: Mat2,
    /// Rows/cols (p_A, p_B).
    pub p: Mat2,
}

impl BlockPair {
    pub fn to_covariance(&self) -> CovMat4 {
        let mut m = Mat4::zeros();
        for (i, a) in [0usize, 2].into_iter().enumerate() {
            for (j, b) in [0usize, 2].into_iter().enumerate() {
                m[(a, b)] = self.x[(i, j)];
                m[(a + 1, b + 1)] = self.p[(i, j)];
            }
        }
        CovMat4 { entries: m, mean: Vec4::zeros() }
    }
}

impl CovMat4 {
    /// Checks symmetry (relative tolerance) and symmetrizes the stored matrix.
    pub fn new(entries: Mat4) -> Result<Self> {
        Self::with_tolerances(entries, &Tolerances::default())
    }

    pub fn with_tolerances(entries: Mat4, tol: &Tolerances) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = max_abs(&(entries - entries.transpose()));
        let scale = max_abs(&entries).max(1.0);
        if asym > tol.symmetry * scale {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        let sym = (entries + entries.transpose()) * 0.5;
        Ok(Self { entries: sym, mean: Vec4::zeros() })
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Mat4::from_fn(|i, j| rows[i][j]))
    }

    /// Wraps a matrix known to be symmetric by construction.
    pub(crate) fn from_symmetric(entries: Mat4) -> Self {
        let sym = (entries + entries.transpose()) * 0.5;
        Self { entries: sym, mean: Vec4::zeros() }
    }

    pub fn vacuum() -> Self {
        Self::from_symmetric(Mat4::identity() * 0.5)
    }

    /// Covariance of the two-mode squeezed vacuum with squeeze parameter `r`.
    pub fn tmsv(r: f64) -> Self {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        Self::from_symmetric(
            Mat4::new(
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, -s, //
                s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ) * 0.5,
        )
    }

    pub fn with_mean(mut self, mean: Vec4) -> Self {
        self.mean = mean;
        self
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    pub fn mean(&self) -> &Vec4 {
        &self.mean
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.entries[(i, j)];
            }
        }
        out
    }

    /// Local blocks `(A, B, C)` of `[[A, C], [C^T, B]]`.
    pub fn local_blocks(&self) -> (Mat2, Mat2, Mat2) {
        let v = &self.entries;
        let a = v.fixed_view::<2, 2>(0, 0).into_owned();
        let b = v.fixed_view::<2, 2>(2, 2).into_owned();
        let c = v.fixed_view::<2, 2>(0, 2).into_owned();
        (a, b, c)
    }

    /// The four local symplectic invariants `(det A, det B, det C, det V)`.
    pub fn local_invariants(&self) -> [f64; 4] {
        let (a, b, c) = self.local_blocks();
        [a.determinant(), b.determinant(), c.determinant(), self.entries.determinant()]
    }

    /// Symplectic eigenvalues in ascending order: the moduli of the
    /// eigenvalues of `i J V`.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        symplectic_spectrum(&self.entries)
    }

    pub fn validate(&self) -> ValidityReport {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> ValidityReport {
        let positive_definite = self.entries.cholesky().is_some();
        let eigs = self.symplectic_eigenvalues();
        let is_physical = positive_definite && eigs[0] >= 0.5 - tol.physical;
        let is_pure = is_physical && eigs.iter().all(|nu| (nu - 0.5).abs() <= tol.physical);
        ValidityReport { symplectic_eigs: eigs, is_physical, is_pure, positive_definite }
    }

    /// Returns `self` if physical, otherwise `NotPhysical`.
    pub fn require_physical(&self, tol: &Tolerances) -> Result<&Self> {
        let report = self.validate_with(tol);
        if report.is_physical {
            Ok(self)
        } else {
            Err(Error::NotPhysical { min_symplectic_eigenvalue: report.symplectic_eigs[0] })
        }
    }

    /// Splits a covariance with vanishing x-p couplings into its x and p sectors.
    pub fn blocks(&self) -> Result<BlockPair> {
        self.blocks_with(&Tolerances::default())
    }

    pub fn blocks_with(&self, tol: &Tolerances) -> Result<BlockPair> {
        let v = &self.entries;
        let coupling = [(0, 1), (0, 3), (2, 1), (2, 3)]
            .iter()
            .fold(0.0_f64, |acc, &(i, j)| acc.max(v[(i, j)].abs()));
        if coupling > tol.block {
            return Err(Error::NotStandardBlockForm { max_coupling: coupling });
        }
        Ok(BlockPair { x: sub2(v, 0, 2), p: sub2(v, 1, 3) })
    }

    /// Congruence `S V S^T` (and `S d` for the mean).
    pub fn apply_symplectic(&self, s: &Mat4) -> Result<Self> {
        self.apply_symplectic_with(s, &Tolerances::default())
    }

    pub fn apply_symplectic_with(&self, s: &Mat4, tol: &Tolerances) -> Result<Self> {
        let defect = symplectic_defect(s);
        if defect > tol.symplectic * max_abs(s).max(1.0).powi(2) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(self.congruence(s))
    }

    /// Congruence without the symplecticity check.
    pub(crate) fn congruence(&self, s: &Mat4) -> Self {
        let m = s * self.entries * s.transpose();
        Self { entries: (m + m.transpose()) * 0.5, mean: s * self.mean }
    }

    /// Phase-space partial transpose `p_B -> -p_B`.
    pub fn partial_transpose(&self) -> Self {
        let f = Mat4::from_diagonal(&Vec4::new(1.0, 1.0, 1.0, -1.0));
        self.congruence(&f)
    }

    pub fn ppt_separability(&self) -> PptReport {
        self.ppt_separability_with(&Tolerances::default())
    }

    pub fn ppt_separability_with(&self, tol: &Tolerances) -> PptReport {
        let nu = self.partial_transpose().symplectic_eigenvalues()[0];
        PptReport { nu_tilde_min: nu, separable: nu >= 0.5 - tol.physical }
    }
}

/// Max entry of `S^T J S - J`.
pub fn symplectic_defect(s: &Mat4) -> f64 {
    let j = omega();
    max_abs(&(s.transpose() * j * s - j))
}

fn symplectic_spectrum(v: &Mat4) -> [f64; 2] {
    // For V > 0 with V = L L^T, the symplectic eigenvalues are the singular
    // values of the antisymmetric matrix L^T J L, each appearing twice.
    if let Some(chol) = v.cholesky() {
        let l = chol.l();
        let k = l.transpose() * omega() * l;
        let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| a.total_cmp(b));
        return [0.5 * (sv[0] + sv[1]), 0.5 * (sv[2] + sv[3])];
    }
    let jv = omega() * v;
    let mut moduli: Vec<f64> = jv
        .complex_eigenvalues()
        .iter()
        .map(|z: &Complex<f64>| z.norm())
        .collect();
    moduli.sort_by(|a, b| a.total_cmp(b));
    [0.5 * (moduli[0] + moduli[1]), 0.5 * (moduli[2] + moduli[3])]
}

/// Phase-space matrix of the two-mode squeeze `U(r) = exp(r(a^+ b^+ - a b))`.
pub fn two_mode_squeeze_matrix(r: f64) -> Mat4 {
    let (c, s) = (r.cosh(), r.sinh());
    Mat4::new(
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, -s, //
        s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    )
}

/// Local symplectic `S_A (+) S_B`.
pub fn local_symplectic(sa: &Mat2, sb: &Mat2) -> Mat4 {
    direct_sum(sa, sb)
}

/// Exchange of the two modes.
pub fn mode_swap() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 2)] = 1.0;
    m[(1, 3)] = 1.0;
    m[(2, 0)] = 1.0;
    m[(3, 1)] = 1.0;
    m
}
