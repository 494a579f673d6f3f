//! Truncated two-mode Fock space. A pure state is stored as its
//! coefficient matrix `psi[(n, m)] = <n, m | psi>`.

pub mod probe;
pub mod tridiag;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::epr::EntanglementValue;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Norm loss tolerated when an operator pushes weight past the buffer.
pub const MAX_NORM_DEFICIT: f64 = 1e-6;
pub const DEFAULT_BUFFER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FockStateMatrix {
    pub psi: CMatrix,
    /// Probability discarded by truncation before renormalization.
    pub tail_mass: f64,
}

impl FockStateMatrix {
    /// Normalizes `psi`; the tail mass is zero.
    pub fn new(psi: CMatrix) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("state has zero or non-finite norm".into()));
        }
        Ok(Self { psi: psi / Complex64::from(norm), tail_mass: 0.0 })
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut psi = CMatrix::zeros(dim, dim);
        psi[(0, 0)] = Complex64::from(1.0);
        Self { psi, tail_mass: 0.0 }
    }

    /// `|phi_A> (x) |phi_B>`.
    pub fn product(phi_a: &DVector<Complex64>, phi_b: &DVector<Complex64>) -> Result<Self> {
        Self::new(phi_a * phi_b.transpose())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.psi.shape()
    }

    /// Zero-pads (or truncates) to `dim x dim`; truncation renormalizes and
    /// adds the discarded weight to the tail mass.
    pub fn resized(&self, dim: usize) -> Self {
        let mut psi = CMatrix::zeros(dim, dim);
        let (na, nb) = self.dims();
        for n in 0..na.min(dim) {
            for m in 0..nb.min(dim) {
                psi[(n, m)] = self.psi[(n, m)];
            }
        }
        let kept = psi.norm_squared();
        let total = self.psi.norm_squared();
        let lost = (1.0 - kept / total).max(0.0);
        Self { psi: psi / Complex64::from(kept.sqrt()), tail_mass: self.tail_mass + lost }
    }

    /// Schmidt probabilities in descending order.
    pub fn schmidt_probabilities(&self) -> Vec<f64> {
        let sv = self.psi.clone().singular_values();
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let mut p: Vec<f64> = sv.iter().map(|s| s * s / total).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        p
    }

    pub fn entanglement(&self) -> EntanglementValue {
        entanglement_entropy(self)
    }
}

/// `-sum p log2 p` over Schmidt probabilities.
pub fn entanglement_entropy(state: &FockStateMatrix) -> EntanglementValue {
    EntanglementValue(shannon_bits(&state.schmidt_probabilities()))
}

pub(crate) fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 1e-300).map(|&x| -x * x.log2()).sum::<f64>().max(0.0)
}

/// The EPR operator `1 + 2 s^2 a^dag a + 2 c^2 b^dag b - sin 2theta (ab + a^dag b^dag)`
/// on the product basis `|n, m>` with `n, m < dim`, index `n * dim + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub theta: f64,
    pub dim: usize,
    pub matrix: DMatrix<f64>,
}

fn diag_entry(theta: f64, n: usize, m: usize) -> f64 {
    let (s, c) = theta.sin_cos();
    1.0 + 2.0 * s * s * n as f64 + 2.0 * c * c * m as f64
}

/// `<n+1, m+1 | Lambda | n, m>`.
fn ladder_entry(theta: f64, n: usize, m: usize) -> f64 {
    -(2.0 * theta).sin() * (((n + 1) * (m + 1)) as f64).sqrt()
}

pub fn build_lambda_operator(theta: f64, dim: usize) -> Result<TruncatedOperator> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("Fock dimension must be >= 2, got {dim}")));
    }
    let size = dim * dim;
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    for n in 0..dim {
        for m in 0..dim {
            let i = n * dim + m;
            matrix[(i, i)] = diag_entry(theta, n, m);
            if n + 1 < dim && m + 1 < dim {
                let j = (n + 1) * dim + m + 1;
                let w = ladder_entry(theta, n, m);
                matrix[(i, j)] = w;
                matrix[(j, i)] = w;
            }
        }
    }
    Ok(TruncatedOperator { theta, dim, matrix })
}

impl TruncatedOperator {
    pub fn expectation(&self, state: &FockStateMatrix) -> f64 {
        lambda_expectation(self.theta, state)
    }

    /// Spectrum of the dense matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `Lambda psi` computed from the ladder structure, in coefficient-matrix form.
pub fn apply_lambda(theta: f64, psi: &CMatrix) -> CMatrix {
    let (na, nb) = psi.shape();
    let mut out = CMatrix::zeros(na, nb);
    for n in 0..na {
        for m in 0..nb {
            let mut acc = psi[(n, m)] * diag_entry(theta, n, m);
            if n + 1 < na && m + 1 < nb {
                acc += psi[(n + 1, m + 1)] * ladder_entry(theta, n, m);
            }
            if n > 0 && m > 0 {
                acc += psi[(n - 1, m - 1)] * ladder_entry(theta, n - 1, m - 1);
            }
            out[(n, m)] = acc;
        }
    }
    out
}

/// `<psi| Lambda |psi>` for a normalized state.
pub fn lambda_expectation(theta: f64, state: &FockStateMatrix) -> f64 {
    let l = apply_lambda(theta, &state.psi);
    state.psi.iter().zip(l.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Smallest eigenvalue of the truncated operator, from its invariant
/// `n - m` blocks (each tridiagonal).
pub fn min_eig_lambda(theta: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("Fock dimension must be >= 2, got {dim}")));
    }
    let mut best = f64::INFINITY;
    for d in -(dim as i64 - 1)..=(dim as i64 - 1) {
        let (n0, m0) = if d >= 0 { (d as usize, 0) } else { (0, (-d) as usize) };
        let len = dim - d.unsigned_abs() as usize;
        let diag: Vec<f64> = (0..len).map(|k| diag_entry(theta, n0 + k, m0 + k)).collect();
        let off: Vec<f64> = (0..len - 1).map(|k| ladder_entry(theta, n0 + k, m0 + k)).collect();
        best = best.min(tridiag::min_eigenvalue(&diag, &off));
    }
    Ok(best)
}

/// `c_n = tanh^n r / cosh r` on the diagonal, renormalized.
pub fn tmsv_state(r: f64, dim: usize) -> FockStateMatrix {
    let t = r.tanh();
    let mut psi = CMatrix::zeros(dim, dim);
    let mut c = 1.0 / r.cosh();
    for n in 0..dim {
        psi[(n, n)] = Complex64::from(c);
        c *= t;
    }
    let kept = psi.norm_squared();
    FockStateMatrix { psi: psi / Complex64::from(kept.sqrt()), tail_mass: (1.0 - kept).max(0.0) }
}

fn embed(psi: &CMatrix, dim: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    let (na, nb) = psi.shape();
    out.view_mut((0, 0), (na, nb)).copy_from(psi);
    out
}

fn truncate_back(big: CMatrix, na: usize, nb: usize, prior_tail: f64) -> Result<FockStateMatrix> {
    let total = big.norm_squared();
    let psi = big.view((0, 0), (na, nb)).into_owned();
    let kept = psi.norm_squared();
    let deficit = (1.0 - kept / total).max(0.0);
    if deficit > MAX_NORM_DEFICIT {
        return Err(Error::TruncationOverflow { deficit, limit: MAX_NORM_DEFICIT });
    }
    Ok(FockStateMatrix { psi: psi / Complex64::from(kept.sqrt()), tail_mass: prior_tail + deficit })
}

/// `U(r) = exp(r (a^dag b^dag - a b))`, exponentiated blockwise in `n - m`
/// on a space enlarged by `buffer` levels, then truncated back.
pub fn apply_two_mode_squeeze(state: &FockStateMatrix, r: f64, buffer: usize) -> Result<FockStateMatrix> {
    let (na, nb) = state.dims();
    let dim = na.max(nb) + buffer;
    let big = embed(&state.psi, dim);
    let mut out = CMatrix::zeros(dim, dim);
    for d in -(dim as i64 - 1)..=(dim as i64 - 1) {
        let (n0, m0) = if d >= 0 { (d as usize, 0) } else { (0, (-d) as usize) };
        let len = dim - d.unsigned_abs() as usize;
        let coeffs: Vec<Complex64> = (0..len).map(|k| big[(n0 + k, m0 + k)]).collect();
        if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        let mut gen = DMatrix::<f64>::zeros(len, len);
        for k in 0..len - 1 {
            let w = (((n0 + k + 1) * (m0 + k + 1)) as f64).sqrt() * r;
            gen[(k + 1, k)] = w;
            gen[(k, k + 1)] = -w;
        }
        let u = gen.exp();
        for i in 0..len {
            let mut acc = Complex64::from(0.0);
            for (j, c) in coeffs.iter().enumerate() {
                acc += c * u[(i, j)];
            }
            out[(n0 + i, m0 + i)] = acc;
        }
    }
    truncate_back(out, na, nb, state.tail_mass)
}

/// `U(r) (|phi_A> (x) |0>)` with both modes truncated at `len(phi_A)`.
pub fn saturating_state(phi_a: &DVector<Complex64>, r: f64, buffer: usize) -> Result<FockStateMatrix> {
    let dim = phi_a.len();
    let mut vac = DVector::<Complex64>::zeros(dim);
    vac[0] = Complex64::from(1.0);
    let start = FockStateMatrix::product(phi_a, &vac)?;
    apply_two_mode_squeeze(&start, r, buffer)
}

/// Single-mode displacement `exp(alpha a^dag - alpha* a)` on `dim` levels.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> CMatrix {
    let mut gen = CMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] = alpha * s;
        gen[(n, n + 1)] = -alpha.conj() * s;
    }
    gen.exp()
}

/// Phase-space displacement by `xi = (x_A, p_A, x_B, p_B)`; each mode gets
/// `alpha = (x + i p) / sqrt 2`.
pub fn apply_displacement(state: &FockStateMatrix, xi: [f64; 4], buffer: usize) -> Result<FockStateMatrix> {
    let (na, nb) = state.dims();
    let dim = na.max(nb) + buffer;
    let big = embed(&state.psi, dim);
    let da = displacement_matrix(Complex64::new(xi[0], xi[1]) / 2f64.sqrt(), dim);
    let db = displacement_matrix(Complex64::new(xi[2], xi[3]) / 2f64.sqrt(), dim);
    let out = da * big * db.transpose();
    truncate_back(out, na, nb, state.tail_mass)
}

/// `(<x_A>, <p_A>, <x_B>, <p_B>)` with `x = (a + a^dag)/sqrt 2`, `p = (a - a^dag)/(i sqrt 2)`.
pub fn quadrature_means(state: &FockStateMatrix) -> [f64; 4] {
    let (na, nb) = state.dims();
    let psi = &state.psi;
    // <a> = sum_{n,m} conj(psi[n-1,m]) sqrt(n) psi[n,m]
    let mut a = Complex64::from(0.0);
    let mut b = Complex64::from(0.0);
    for n in 0..na {
        for m in 0..nb {
            if n > 0 {
                a += psi[(n - 1, m)].conj() * (n as f64).sqrt() * psi[(n, m)];
            }
            if m > 0 {
                b += psi[(n, m - 1)].conj() * (m as f64).sqrt() * psi[(n, m)];
            }
        }
    }
    let s = 2f64.sqrt();
    [s * a.re, s * a.im, s * b.re, s * b.im]
}
