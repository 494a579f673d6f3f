//! Reduction of an arbitrary two-mode covariance to the standard form
//!
//! ```text
//!        [ a*b*n      0           b*kx       0       ]
//! V = 1/2[ 0          n/(a*b)     0          -kp/b   ]
//!        [ b*kx       0           b*m/a      0       ]
//!        [ 0          -kp/b       0          a*m/b   ]
//! ```
//!
//! with the local scale pair `(a, b) = (alpha, beta)`.

use serde::{Deserialize, Serialize};

use crate::covariance::{local_symplectic, mode_swap, CovMat4};
use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_unimodular, signed_svd2, Mat4, Vec4};

/// The quadruple `(n, m, kx, kp)` with local scalings stripped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardFormParams {
    pub n: f64,
    pub m: f64,
    pub kx: f64,
    pub kp: f64,
}

/// Local scale freedom `(alpha, beta)`; equivalent to per-mode squeeze
/// factors `lambda_A = sqrt(alpha*beta)`, `lambda_B = sqrt(beta/alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalScalePair {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LocalScalePair {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

impl LocalScalePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "local scales must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn lambda_a(&self) -> f64 {
        (self.alpha * self.beta).sqrt()
    }

    pub fn lambda_b(&self) -> f64 {
        (self.beta / self.alpha).sqrt()
    }

    /// Diagonal symplectic taking the `alpha = beta = 1` form to this scaling.
    pub fn symplectic(&self) -> Mat4 {
        let (la, lb) = (self.lambda_a(), self.lambda_b());
        Mat4::from_diagonal(&Vec4::new(la, 1.0 / la, lb, 1.0 / lb))
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: 1.0 / self.alpha, beta: 1.0 / self.beta }
    }
}

impl StandardFormParams {
    pub fn new(n: f64, m: f64, kx: f64, kp: f64) -> Self {
        Self { n, m, kx, kp }
    }

    /// Covariance for the given local scaling.
    pub fn to_covariance(&self, scale: LocalScalePair) -> CovMat4 {
        let LocalScalePair { alpha: a, beta: b } = scale;
        let Self { n, m, kx, kp } = *self;
        CovMat4::from_symmetric(
            Mat4::new(
                a * b * n, 0.0, b * kx, 0.0, //
                0.0, n / (a * b), 0.0, -kp / b, //
                b * kx, 0.0, b * m / a, 0.0, //
                0.0, -kp / b, 0.0, a * m / b,
            ) * 0.5,
        )
    }

    pub fn covariance(&self) -> CovMat4 {
        self.to_covariance(LocalScalePair::default())
    }

    /// `n m - kx^2`, four times the x-sector determinant.
    pub fn det_x(&self) -> f64 {
        self.n * self.m - self.kx * self.kx
    }

    /// `n m - kp^2`, four times the p-sector determinant.
    pub fn det_p(&self) -> f64 {
        self.n * self.m - self.kp * self.kp
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.n - self.m).abs() <= tol * self.n.max(1.0)
    }
}

/// Standard form of a covariance together with the local symplectic that
/// produced it: `transform * V * transform^T = params.covariance()`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormReduction {
    pub params: StandardFormParams,
    pub transform: Mat4,
    /// Modes were exchanged to enforce `n >= m`; `transform` includes the swap.
    pub swapped: bool,
    /// Both quadrature correlations carry the same sign (`kp < 0`), which
    /// forces `det C >= 0` and hence separability.
    pub same_sign_correlations: bool,
}

/// Determinant below which a local block counts as singular.
const DEGENERATE_DET: f64 = 1e-300;

/// Local Williamson normalization of both modes followed by a rotation SVD
/// of the correlation block; swaps modes so that `n >= m`.
pub fn reduce_to_standard_form(v: &CovMat4) -> Result<StandardFormReduction> {
    let (a, b, _) = v.local_blocks();
    let (det_a, det_b) = (a.determinant(), b.determinant());
    if !(det_a > DEGENERATE_DET) || a[(0, 0)] <= 0.0 {
        return Err(Error::DegenerateLocalBlock { mode: 'A', det: det_a });
    }
    if !(det_b > DEGENERATE_DET) || b[(0, 0)] <= 0.0 {
        return Err(Error::DegenerateLocalBlock { mode: 'B', det: det_b });
    }

    let whiten_a = inv_sqrt_unimodular(&(a / det_a.sqrt()));
    let whiten_b = inv_sqrt_unimodular(&(b / det_b.sqrt()));
    let step1 = local_symplectic(&whiten_a, &whiten_b);
    let w = v.congruence(&step1);
    let (_, _, c) = w.local_blocks();

    let (u, s1, s2, wr) = signed_svd2(&c);
    let step2 = local_symplectic(&u.transpose(), &wr.transpose());
    let mut transform = step2 * step1;

    let mut n = 2.0 * det_a.sqrt();
    let mut m = 2.0 * det_b.sqrt();
    let swapped = n < m;
    if swapped {
        std::mem::swap(&mut n, &mut m);
        transform = mode_swap() * transform;
    }
    let params = StandardFormParams { n, m, kx: 2.0 * s1, kp: -2.0 * s2 };
    Ok(StandardFormReduction {
        params,
        transform,
        swapped,
        same_sign_correlations: params.kp < 0.0,
    })
}

/// Standard-form parameters recovered from the four local invariants alone.
/// Used as an independent cross-check of [`reduce_to_standard_form`].
pub fn params_from_invariants(inv: [f64; 4]) -> StandardFormParams {
    let [det_a, det_b, det_c, det_v] = inv;
    let (mut n, mut m) = (2.0 * det_a.sqrt(), 2.0 * det_b.sqrt());
    if n < m {
        std::mem::swap(&mut n, &mut m);
    }
    // det C = -kx kp / 4 and 16 det V = (nm - kx^2)(nm - kp^2).
    let prod = -4.0 * det_c;
    let nm = n * m;
    // With s = kx^2 + kp^2: 16 det V = (nm)^2 - nm s + prod^2.
    let s = (nm * nm + prod * prod - 16.0 * det_v) / nm;
    let disc = (s * s - 4.0 * prod * prod).max(0.0).sqrt();
    let kx = ((s + disc) / 2.0).max(0.0).sqrt();
    let kp_abs = ((s - disc) / 2.0).max(0.0).sqrt();
    StandardFormParams { n, m, kx, kp: kp_abs.copysign(prod) }
}

impl From<StandardFormParams> for [f64; 4] {
    fn from(p: StandardFormParams) -> Self {
        [p.n, p.m, p.kx, p.kp]
    }
}
