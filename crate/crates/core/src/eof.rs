//! Entanglement of formation driver: PPT short-circuit, standard form,
//! canonical form, and `E_{r0}` with a certificate for both bounds.

use serde::Serialize;

use crate::canonical::{canonical_reduce, residual_m, CanonicalReduction};
use crate::covariance::{CovMat4, PptReport};
use crate::epr::{entanglement_of_squeezing, lambda_theta_gaussian, lambda_theta_tmsv};
use crate::error::{Error, Result};
use crate::standard_form::{reduce_to_standard_form, StandardFormParams};
use crate::tolerance::Tolerances;

/// Evidence attached to an EOF value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EofCertificate {
    /// `Lambda_{theta0}` evaluated on the canonical covariance.
    pub lambda_theta0: f64,
    /// `cosh 2r0 - sin 2theta0 sinh 2r0`, its value on the squeezed vacuum.
    pub lambda_reference: f64,
    /// The lower bound `EOF >= E_{r0}` holds only if the extremality
    /// conjecture for the EPR family does; always true here as a label.
    pub lower_bound_conditional: bool,
    /// Smallest eigenvalue of `V0 - V_tmsv(r0)` (upper-bound ensemble witness).
    pub residual_min_eigenvalue: f64,
    pub residual_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EofReport {
    pub ebits: f64,
    pub r0: f64,
    pub separable: bool,
    pub ppt: PptReport,
    pub standard_form: Option<StandardFormParams>,
    pub canonical: Option<CanonicalReduction>,
    pub certificate: Option<EofCertificate>,
}

pub fn eof(v: &CovMat4) -> Result<EofReport> {
    eof_with(v, &Tolerances::default())
}

pub fn eof_with(v: &CovMat4, tol: &Tolerances) -> Result<EofReport> {
    v.require_physical(tol)?;
    let ppt = v.ppt_separability_with(tol);
    let separable_report = |standard_form| EofReport {
        ebits: 0.0,
        r0: 0.0,
        separable: true,
        ppt,
        standard_form,
        canonical: None,
        certificate: None,
    };
    if ppt.separable {
        let sf = reduce_to_standard_form(v).ok().map(|r| r.params);
        return Ok(separable_report(sf));
    }
    let sf = reduce_to_standard_form(v)?;
    let red = match canonical_reduce(&sf.params) {
        Ok(red) => red,
        // Marginal states on the PPT boundary.
        Err(Error::Separable) => return Ok(separable_report(Some(sf.params))),
        Err(e) => return Err(e),
    };
    let cf = red.form;
    let v0 = sf.params.to_covariance(cf.scale());
    let res = residual_m(&v0, cf.r0)?;
    let certificate = EofCertificate {
        lambda_theta0: lambda_theta_gaussian(&v0, cf.theta0),
        lambda_reference: lambda_theta_tmsv(cf.r0, cf.theta0),
        lower_bound_conditional: true,
        residual_min_eigenvalue: res.eigenvalues[3],
        residual_rank: res.rank,
    };
    Ok(EofReport {
        ebits: entanglement_of_squeezing(cf.r0).ebits(),
        r0: cf.r0,
        separable: false,
        ppt,
        standard_form: Some(sf.params),
        canonical: Some(red),
        certificate: Some(certificate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_v0, squeeze_transport, CanonicalForm};
    use crate::covariance::local_symplectic;
    use crate::linalg::{rotation, squeeze, Mat4};
    use std::f64::consts::PI;

    #[test]
    fn pure_squeezed_vacuum() {
        let rep = eof(&CovMat4::tmsv(1.0)).unwrap();
        assert!((rep.ebits - 2.336_909_3).abs() < 1e-6);
        assert!((rep.r0 - 1.0).abs() < 1e-7);
        assert!(!rep.separable);
    }

    #[test]
    fn vacuum_is_separable() {
        let rep = eof(&CovMat4::vacuum()).unwrap();
        assert_eq!(rep.ebits, 0.0);
        assert!(rep.separable && rep.canonical.is_none());
    }

    #[test]
    fn symmetric_mixed_state() {
        let v = StandardFormParams::new(2.0, 2.0, 1.5, 0.5).covariance();
        let rep = eof(&v).unwrap();
        let r0 = -0.25 * 0.75f64.ln();
        assert!((rep.r0 - r0).abs() < 1e-10);
        assert!((rep.ebits - entanglement_of_squeezing(r0).ebits()).abs() < 1e-10);
        let cert = rep.certificate.unwrap();
        assert!((cert.lambda_theta0 - cert.lambda_reference).abs() < 1e-9);
        assert!(cert.residual_min_eigenvalue > -1e-9);
    }

    #[test]
    fn unphysical_input_rejected() {
        let v = CovMat4::new(Mat4::identity() * 0.25).unwrap();
        assert!(matches!(eof(&v), Err(Error::NotPhysical { .. })));
    }

    #[test]
    fn invariant_under_local_symplectics() {
        let cf = CanonicalForm::new(0.35, PI / 5.0, 0.3, 0.6).unwrap();
        let v = build_v0(&cf);
        let s = local_symplectic(&(rotation(0.4) * squeeze(0.9)), &(squeeze(-0.3) * rotation(1.2)));
        let a = eof(&v).unwrap().ebits;
        let b = eof(&v.apply_symplectic(&s).unwrap()).unwrap().ebits;
        assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn transported_form_has_shifted_entanglement() {
        let cf = CanonicalForm::new(0.2, PI / 6.0, 0.4, 0.2).unwrap();
        let t = squeeze_transport(&cf, 0.3).unwrap();
        let e = eof(&build_v0(&t)).unwrap().ebits;
        assert!((e - entanglement_of_squeezing(0.5).ebits()).abs() < 1e-7);
    }
}
