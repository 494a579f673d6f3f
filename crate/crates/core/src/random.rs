//! Seeded generators for random physical states, used by tests, the
//! acceptance suite and the CLI self-checks.

use rand::Rng;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::canonical::CanonicalForm;
use crate::covariance::{local_symplectic, two_mode_squeeze_matrix, CovMat4};
use crate::linalg::{rotation, squeeze, Mat4, Vec4};
use crate::standard_form::StandardFormParams;

/// Random single-mode symplectic `R(a) Sq(g) R(b)` with `|g| <= max_squeeze`.
pub fn random_single_mode<R: Rng + ?Sized>(rng: &mut R, max_squeeze: f64) -> crate::linalg::Mat2 {
    rotation(rng.random_range(0.0..PI))
        * squeeze(rng.random_range(-max_squeeze..=max_squeeze))
        * rotation(rng.random_range(0.0..PI))
}

pub fn random_local<R: Rng + ?Sized>(rng: &mut R, max_squeeze: f64) -> Mat4 {
    let a = random_single_mode(rng, max_squeeze);
    let b = random_single_mode(rng, max_squeeze);
    local_symplectic(&a, &b)
}

/// Beam splitter with mixing angle `phi`.
pub fn beam_splitter(phi: f64) -> Mat4 {
    let (s, c) = phi.sin_cos();
    Mat4::new(
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, s, //
        -s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    )
}

/// Generic two-mode symplectic built from local operations, a beam splitter
/// and a two-mode squeeze.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, max_squeeze: f64) -> Mat4 {
    random_local(rng, max_squeeze)
        * beam_splitter(rng.random_range(0.0..PI))
        * two_mode_squeeze_matrix(rng.random_range(0.0..=max_squeeze))
        * random_local(rng, max_squeeze)
}

/// `S diag(nu1, nu1, nu2, nu2) S^T` with symplectic eigenvalues in
/// `[1/2, 1/2 + max_thermal]`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, max_squeeze: f64, max_thermal: f64) -> CovMat4 {
    let nu1 = 0.5 + rng.random_range(0.0..=max_thermal);
    let nu2 = 0.5 + rng.random_range(0.0..=max_thermal);
    let d = Mat4::from_diagonal(&Vec4::new(nu1, nu1, nu2, nu2));
    let s = random_symplectic(rng, max_squeeze);
    CovMat4::from_symmetric(s * d * s.transpose())
}

/// Random state whose PPT margin `1/2 - nu_tilde_min` exceeds `margin`.
pub fn random_inseparable_state<R: Rng + ?Sized>(
    rng: &mut R,
    max_squeeze: f64,
    max_thermal: f64,
    margin: f64,
) -> CovMat4 {
    loop {
        let v = random_state(rng, max_squeeze, max_thermal);
        if 0.5 - v.ppt_separability().nu_tilde_min > margin {
            return v;
        }
    }
}

/// Random canonical parameters with `r0 <= max_r` and `u, v <= max_uv`,
/// respecting `tan(theta0) >= tanh(r0)`.
pub fn random_canonical<R: Rng + ?Sized>(rng: &mut R, max_r: f64, max_uv: f64) -> CanonicalForm {
    let r0 = rng.random_range(0.0..=max_r);
    let theta_min = r0.tanh().atan().max(1e-3);
    let theta0 = rng.random_range(theta_min..=FRAC_PI_4);
    CanonicalForm {
        r0,
        theta0,
        u: rng.random_range(0.0..=max_uv),
        v: rng.random_range(0.0..=max_uv),
        alpha0: 1.0,
        beta0: 1.0,
    }
}

/// Random symmetric standard form `(n, n, kx, kp)` that fails PPT by `margin`.
pub fn random_symmetric_inseparable<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> StandardFormParams {
    loop {
        let n: f64 = rng.random_range(1.0..4.0);
        let kx: f64 = rng.random_range(0.0..n);
        let kp = rng.random_range(-kx..=kx);
        let p = StandardFormParams::new(n, n, kx, kp);
        let v = p.covariance();
        if v.validate().is_physical && 0.5 - v.ppt_separability().nu_tilde_min > margin {
            return p;
        }
    }
}

/// Random `(n, m, k)` with `n >= m` for the equal-correlation family that
/// fails PPT by `margin`.
pub fn random_equal_k_inseparable<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> (f64, f64, f64) {
    loop {
        let m: f64 = rng.random_range(1.0..3.0);
        let n: f64 = m + rng.random_range(0.0..2.0);
        let k = rng.random_range(0.0..(n * m).sqrt());
        let v = StandardFormParams::new(n, m, k, k).covariance();
        if v.validate().is_physical && 0.5 - v.ppt_separability().nu_tilde_min > margin {
            return (n, m, k);
        }
    }
}
