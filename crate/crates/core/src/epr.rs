//! Generalized EPR correlation
//!
//! ```text
//! Lambda_theta = <x_theta^2> + <p_theta^2>,
//! x_theta = sin(theta) x_A - cos(theta) x_B,   p_theta = sin(theta) p_A + cos(theta) p_B
//! ```
//!
//! together with the squeezing/entanglement relation of the two-mode
//! squeezed vacuum and the angle-rapidity duality `tan(theta_r) = tanh(r)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, LN_2};

use crate::covariance::CovMat4;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec4};

/// Angle in `(0, pi/4]` indexing the EPR family.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EprAngle(f64);

impl EprAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta <= FRAC_PI_4 + 1e-15 {
            Ok(Self(theta.min(FRAC_PI_4)))
        } else {
            Err(Error::InvalidArgument(format!("angle {theta} outside (0, pi/4]")))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Dual rapidity `artanh(tan theta)`; `None` at `pi/4`.
    pub fn rapidity(self) -> Option<f64> {
        r_dual(self.0)
    }

    /// Whether the pair `(theta, r)` satisfies `tan(theta) >= tanh(r)`.
    pub fn admits(self, r: f64) -> bool {
        self.0.tan() >= r.tanh()
    }
}

/// Entanglement in ebits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EntanglementValue(pub f64);

impl EntanglementValue {
    pub fn ebits(self) -> f64 {
        self.0
    }
}

/// Below this, `x log x` is taken as zero.
const XLOGX_FLOOR: f64 = 1e-300;

/// `E(N) = (N+1) log2(N+1) - N log2 N` for mean photon number `N = sinh^2 r`.
fn entropy_of_photons(n: f64) -> f64 {
    if n < XLOGX_FLOOR {
        return 0.0;
    }
    (n.ln_1p() + n * (1.0 / n).ln_1p()) / LN_2
}

/// `E_r = cosh^2 r log2 cosh^2 r - sinh^2 r log2 sinh^2 r`.
pub fn entanglement_of_squeezing(r: f64) -> EntanglementValue {
    EntanglementValue(entropy_of_photons(r.sinh().powi(2)))
}

/// Inverse of [`entanglement_of_squeezing`] on `r >= 0`.
pub fn squeezing_of_entanglement(e: EntanglementValue) -> Result<f64> {
    let e = e.0;
    if !(e >= 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument(format!("entanglement must be finite and >= 0, got {e}")));
    }
    if e == 0.0 {
        return Ok(0.0);
    }
    // log2(N+1) <= E < log2(N+1) + 1/ln 2
    let mut lo = ((e - 1.0 / LN_2) * LN_2).exp_m1().max(0.0);
    let mut hi = (e * LN_2).exp_m1();
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if entropy_of_photons(mid) < e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut n = 0.5 * (lo + hi);
    for _ in 0..3 {
        let slope = (1.0 / n).ln_1p() / LN_2;
        if !(slope > 0.0 && slope.is_finite()) {
            break;
        }
        let next = n - (entropy_of_photons(n) - e) / slope;
        if next > 0.0 {
            n = next;
        }
    }
    Ok(n.sqrt().asinh())
}

/// `theta_r = arctan(tanh r)`.
pub fn theta_dual(r: f64) -> f64 {
    r.tanh().atan()
}

/// `r_theta = artanh(tan theta)`, or `None` where it diverges (`theta >= pi/4`).
pub fn r_dual(theta: f64) -> Option<f64> {
    (theta.abs() < FRAC_PI_4 - 1e-15).then(|| theta.tan().atanh())
}

/// `cosh 2r - sin 2theta sinh 2r`.
pub fn lambda_theta_tmsv(r: f64, theta: f64) -> f64 {
    (2.0 * r).cosh() - (2.0 * theta).sin() * (2.0 * r).sinh()
}

/// Quadratic form of the covariance (central moments; the mean drops out).
pub fn lambda_theta_gaussian(v: &CovMat4, theta: f64) -> f64 {
    let e = v.entries();
    let (s, c) = theta.sin_cos();
    s * s * (e[(0, 0)] + e[(1, 1)]) + c * c * (e[(2, 2)] + e[(3, 3)]) - 2.0 * s * c * (e[(0, 2)] - e[(1, 3)])
}

/// Raw second moment `<x_theta^2> + <p_theta^2>` including the mean, which
/// is what the Fock-space operator measures on a displaced state.
pub fn lambda_theta_moments(v: &CovMat4, theta: f64) -> f64 {
    let d: &Vec4 = v.mean();
    let (s, c) = theta.sin_cos();
    let mx = s * d[0] - c * d[2];
    let mp = s * d[1] + c * d[3];
    lambda_theta_gaussian(v, theta) + mx * mx + mp * mp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// `Lambda_theta((S_A (x) S_B) Psi_r) - Lambda_theta(Psi_r)`.
    pub gap: f64,
    /// `tan(theta) >= tanh(r)`; outside this range the gap may be negative.
    pub in_range: bool,
}

/// Increase of `Lambda_theta` when local symplectics act on the two-mode
/// squeezed vacuum, from the closed form
/// `(1/2){cosh 2r [s^2 tr(S_A S_A^T) + c^2 tr(S_B S_B^T)] - sin 2theta sinh 2r tr(Z S_A Z S_B^T)}`
/// with `Z = diag(1, -1)`.
pub fn local_squeeze_gap(r: f64, theta: f64, sa: &Mat2, sb: &Mat2) -> Result<GapReport> {
    for (name, m) in [("S_A", sa), ("S_B", sb)] {
        let d = m.determinant();
        if (d - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("{name} is not symplectic (det {d})")));
        }
    }
    let (s, c) = theta.sin_cos();
    let z = Mat2::new(1.0, 0.0, 0.0, -1.0);
    let lam = 0.5
        * ((2.0 * r).cosh() * (s * s * (sa * sa.transpose()).trace() + c * c * (sb * sb.transpose()).trace())
            - (2.0 * theta).sin() * (2.0 * r).sinh() * (z * sa * z * sb.transpose()).trace());
    Ok(GapReport { gap: lam - lambda_theta_tmsv(r, theta), in_range: theta.tan() >= r.tanh() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_v0, CanonicalForm};
    use crate::covariance::local_symplectic;
    use crate::linalg::{rotation, squeeze};
    use std::f64::consts::PI;

    /// Entropy of the Schmidt distribution `tanh^{2n} r / cosh^2 r`, summed
    /// until the tail is negligible.
    fn schmidt_entropy(r: f64) -> f64 {
        let t2 = r.tanh().powi(2);
        let mut p = 1.0 / r.cosh().powi(2);
        let mut s = 0.0;
        for _ in 0..20000 {
            if p > 0.0 {
                s -= p * p.log2();
            }
            p *= t2;
            if p < 1e-300 {
                break;
            }
        }
        s
    }

    #[test]
    fn entanglement_values() {
        assert_eq!(entanglement_of_squeezing(0.0).ebits(), 0.0);
        let e1 = entanglement_of_squeezing(1.0).ebits();
        assert!((e1 - schmidt_entropy(1.0)).abs() < 1e-12);
        assert!((e1 - 2.336_909_3).abs() < 1e-7);
        assert!(entanglement_of_squeezing(1e-8).ebits() < 1e-12);
        for r in [0.05, 0.3, 2.0] {
            assert!((entanglement_of_squeezing(r).ebits() - schmidt_entropy(r)).abs() < 1e-11);
        }
    }

    #[test]
    fn entanglement_inversion() {
        assert_eq!(squeezing_of_entanglement(EntanglementValue(0.0)).unwrap(), 0.0);
        let e1 = entanglement_of_squeezing(1.0);
        assert!((squeezing_of_entanglement(e1).unwrap() - 1.0).abs() < 1e-8);
        for e in [1e-9, 0.01, 0.5, 3.0, 10.0, 40.0] {
            let r = squeezing_of_entanglement(EntanglementValue(e)).unwrap();
            assert!((entanglement_of_squeezing(r).ebits() - e).abs() < 1e-10 * e.max(1.0), "{e}");
        }
        assert!(squeezing_of_entanglement(EntanglementValue(-1.0)).is_err());
    }

    #[test]
    fn dual_identities() {
        assert_eq!(theta_dual(0.0), 0.0);
        for r in [0.1, 0.5, 1.3] {
            let t = theta_dual(r);
            assert!((t.tan() - r.tanh()).abs() < 1e-12);
            assert!(((2.0 * t).sin() - (2.0 * r).tanh()).abs() < 1e-12);
            assert!(((2.0 * t).cos() - 1.0 / (2.0 * r).cosh()).abs() < 1e-12);
            assert!((r_dual(t).unwrap() - r).abs() < 1e-12);
        }
        assert!(r_dual(FRAC_PI_4).is_none());
        assert!(EprAngle::new(FRAC_PI_4).unwrap().rapidity().is_none());
        assert!(EprAngle::new(0.0).is_err());
    }

    #[test]
    fn lambda_tmsv_cases() {
        let r: f64 = 0.7;
        assert!((lambda_theta_tmsv(r, FRAC_PI_4) - (-2.0 * r).exp()).abs() < 1e-14);
        assert_eq!(lambda_theta_tmsv(0.0, 0.3), 1.0);
        let t = theta_dual(r);
        assert!((lambda_theta_tmsv(r, t) - (2.0 * t).cos()).abs() < 1e-12);
    }

    #[test]
    fn lambda_gaussian_matches_closed_forms() {
        for r in [0.2, 0.5, 1.0] {
            for th in [theta_dual(r), PI / 6.0, FRAC_PI_4] {
                let g = lambda_theta_gaussian(&CovMat4::tmsv(r), th);
                assert!((g - lambda_theta_tmsv(r, th)).abs() < 1e-12);
            }
        }
        assert!((lambda_theta_gaussian(&CovMat4::vacuum(), 0.4) - 1.0).abs() < 1e-15);
        let cf = CanonicalForm::new(0.3, PI / 6.0, 0.4, 0.2).unwrap();
        let l = lambda_theta_gaussian(&build_v0(&cf), cf.theta0);
        assert!((l - lambda_theta_tmsv(0.3, PI / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn mean_enters_only_raw_moments() {
        let v = CovMat4::tmsv(0.4);
        let shifted = v.clone().with_mean(Vec4::new(0.7, -0.2, 0.1, 0.4));
        assert_eq!(lambda_theta_gaussian(&v, 0.5), lambda_theta_gaussian(&shifted, 0.5));
        assert!(lambda_theta_moments(&shifted, 0.5) > lambda_theta_moments(&v, 0.5));
    }

    #[test]
    fn gap_closed_form_matches_congruence() {
        let id = Mat2::identity();
        assert!(local_squeeze_gap(0.3, 0.5, &id, &id).unwrap().gap.abs() < 1e-15);

        let sa = squeeze(0.4);
        let g = local_squeeze_gap(0.3, FRAC_PI_4, &sa, &id).unwrap();
        assert!(g.gap > 0.0 && g.in_range);

        for (sa, sb) in [
            (rotation(0.3) * squeeze(0.7) * rotation(-1.1), squeeze(-0.2) * rotation(0.4)),
            (squeeze(1.1), rotation(2.0) * squeeze(0.5)),
        ] {
            for (r, th) in [(0.3, PI / 5.0), (0.8, 0.2)] {
                let v = CovMat4::tmsv(r).apply_symplectic(&local_symplectic(&sa, &sb)).unwrap();
                let direct = lambda_theta_gaussian(&v, th) - lambda_theta_tmsv(r, th);
                let closed = local_squeeze_gap(r, th, &sa, &sb).unwrap().gap;
                assert!((direct - closed).abs() < 1e-12, "{direct} vs {closed}");
            }
        }
        assert!(local_squeeze_gap(0.3, 0.5, &Mat2::identity().scale(2.0), &id).is_err());
    }

    #[test]
    fn gap_can_be_negative_below_dual_angle() {
        let r = 0.3;
        let th = 0.5 * theta_dual(r);
        let g = local_squeeze_gap(r, th, &squeeze(-1.0), &squeeze(-0.05)).unwrap();
        assert!(!g.in_range);
        assert!(g.gap < 0.0, "{g:?}");
    }
}
