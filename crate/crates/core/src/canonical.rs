//! Canonical form of a two-mode covariance:
//!
//! ```text
//! V0 = V_tmsv(r0) + M_X (+) M_P
//! M_X = (u/2) [[c^2, cs], [cs, s^2]],   M_P = (v/2) [[c^2, -cs], [-cs, s^2]]
//! c = cos(theta0), s = sin(theta0),     tan(theta0) >= tanh(r0)
//! ```
//!
//! The solver searches the local scale pair `(alpha, beta)` of the standard
//! form. For a fixed `alpha`, the x-sector residual `X - X_tmsv(r)` is PSD
//! iff `beta >= bx(r)` and the p-sector residual iff `beta <= bp(r)`; the
//! smallest `r` where the two bounds meet makes both residuals singular. The
//! outer search bisects on `alpha` until the null vectors of the two
//! residuals coincide.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::covariance::CovMat4;
use crate::error::{Error, Result};
use crate::linalg::{principal_angle, sub2, Mat2, Mat4, Vec4};
use crate::standard_form::{LocalScalePair, StandardFormParams};

/// Canonical parameters plus the local scaling that realizes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub r0: f64,
    pub theta0: f64,
    pub u: f64,
    pub v: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

/// Solver output with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalReduction {
    pub form: CanonicalForm,
    /// Number of sign changes of the angle mismatch found by the alpha scan.
    pub alpha_roots: usize,
    /// The angle bracket was missing (a residual block vanishes) and the
    /// minimum of `r(alpha)` was located directly instead.
    pub used_fallback: bool,
    /// Both residual blocks vanish: the input is a pure state.
    pub pure: bool,
    /// Disagreement of the x- and p-sector null-vector angles at the solution.
    pub theta_mismatch: f64,
}

/// Result of the closed-form special cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialCase {
    pub r0: f64,
    pub beta: f64,
    pub separable: bool,
}

/// `V0 - V_tmsv(r0)` with its spectral data and recovered parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualM {
    pub matrix: Mat4,
    /// Eigenvalues in descending order.
    pub eigenvalues: [f64; 4],
    /// Unit eigenvectors matching `eigenvalues`.
    pub eigenvectors: [Vec4; 4],
    pub rank: usize,
    pub u: f64,
    pub v: f64,
    pub theta_x: Option<f64>,
    pub theta_p: Option<f64>,
}

pub const RANK_THRESHOLD: f64 = 1e-8;
const NEGATIVE_RESIDUAL: f64 = 1e-7;
const ALPHA_SCAN: usize = 64;
const CONSTRAINT_TOL: f64 = 1e-8;
/// Trace (relative to `cosh^2 r`) below which a residual block counts as absent.
const BLOCK_FLOOR: f64 = 1e-7;

impl CanonicalForm {
    /// Canonical parameters with unit local scaling.
    pub fn new(r0: f64, theta0: f64, u: f64, v: f64) -> Result<Self> {
        let cf = Self { r0, theta0, u, v, alpha0: 1.0, beta0: 1.0 };
        cf.check()?;
        Ok(cf)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.r0 >= 0.0
            && self.theta0 > 0.0
            && self.theta0 <= FRAC_PI_4 + 1e-12
            && self.u >= 0.0
            && self.v >= 0.0
            && [self.r0, self.theta0, self.u, self.v].iter().all(|x| x.is_finite());
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid canonical parameters {self:?}")));
        }
        let (t, h) = (self.theta0.tan(), self.r0.tanh());
        if t - h < -CONSTRAINT_TOL {
            return Err(Error::ConstraintViolated { tan_theta: t, tanh_r: h });
        }
        Ok(())
    }

    pub fn scale(&self) -> LocalScalePair {
        LocalScalePair { alpha: self.alpha0, beta: self.beta0 }
    }

    /// `tan(theta0) - tanh(r0)`; nonnegative for a valid canonical form.
    pub fn constraint_slack(&self) -> f64 {
        self.theta0.tan() - self.r0.tanh()
    }
}

/// The canonical covariance `V0` for the given parameters.
pub fn build_v0(cf: &CanonicalForm) -> CovMat4 {
    let (big_c, big_s) = ((2.0 * cf.r0).cosh(), (2.0 * cf.r0).sinh());
    let (s, c) = cf.theta0.sin_cos();
    let (u, v) = (cf.u, cf.v);
    CovMat4::from_symmetric(
        Mat4::new(
            big_c + u * c * c, 0.0, big_s + u * c * s, 0.0, //
            0.0, big_c + v * c * c, 0.0, -big_s - v * c * s, //
            big_s + u * c * s, 0.0, big_c + u * s * s, 0.0, //
            0.0, -big_s - v * c * s, 0.0, big_c + v * s * s,
        ) * 0.5,
    )
}

/// Standard-form parameters and local scaling of a covariance that already
/// has diagonal local blocks and no x-p couplings (such as `build_v0`).
pub fn scale_of_block_form(v: &CovMat4) -> (StandardFormParams, LocalScalePair) {
    let e = v.entries();
    let n = 2.0 * (e[(0, 0)] * e[(1, 1)]).sqrt();
    let m = 2.0 * (e[(2, 2)] * e[(3, 3)]).sqrt();
    let beta = 2.0 * (e[(0, 0)] * e[(2, 2)]).sqrt() / (n * m).sqrt();
    let alpha = (e[(0, 0)] / e[(1, 1)]).sqrt() / beta;
    let params = StandardFormParams { n, m, kx: 2.0 * e[(0, 2)] / beta, kp: -2.0 * e[(1, 3)] * beta };
    (params, LocalScalePair { alpha, beta })
}

/// Evaluation of the inner problem at one `alpha`.
#[derive(Debug, Clone, Copy)]
struct AlphaPoint {
    alpha: f64,
    r: f64,
    beta: f64,
    /// Feasible already without subtracting any squeezing.
    feasible_at_zero: bool,
    theta_x: f64,
    theta_p: f64,
    trace_x: f64,
    trace_p: f64,
}

impl AlphaPoint {
    fn mismatch(&self) -> f64 {
        self.theta_p - self.theta_x
    }
}

struct Solver {
    p: StandardFormParams,
    dx: f64,
    dp: f64,
}

impl Solver {
    fn new(p: StandardFormParams) -> Result<Self> {
        let (dx, dp) = (p.det_x(), p.det_p());
        if !(dx > 0.0 && dp > 0.0 && p.n > 0.0 && p.m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "standard form has non-positive sector determinant: {p:?}"
            )));
        }
        Ok(Self { p, dx, dp })
    }

    /// `(ln bp - ln bx, bx, bp)`: the log-width of the beta interval on which
    /// both residuals are PSD, and its end points.
    fn gap(&self, alpha: f64, r: f64) -> (f64, f64, f64) {
        let StandardFormParams { n, m, kx, kp } = self.p;
        let a = alpha * n + m / alpha;
        let ap = n / alpha + alpha * m;
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let t = a * c - 2.0 * kx * s;
        let tp = ap * c - 2.0 * kp * s;
        let bx = (t + (t * t - 4.0 * self.dx).max(0.0).sqrt()) / (2.0 * self.dx);
        let bp = 2.0 * self.dp / (tp + (tp * tp - 4.0 * self.dp).max(0.0).sqrt());
        (bp.ln() - bx.ln(), bx, bp)
    }

    /// Smallest `r` for which some `beta` makes both residuals PSD at this
    /// `alpha`. When the interval never opens, the closest approach is used.
    fn squeeze_at(&self, alpha: f64) -> (f64, f64, bool) {
        let g = |r: f64| self.gap(alpha, r).0;
        if g(0.0) >= 0.0 {
            return (0.0, 0.0, true);
        }
        let mut hi = 0.5;
        while (g(hi) > g(0.5 * hi) || g(hi) >= 0.0) && hi < 256.0 {
            hi *= 2.0;
        }
        let (peak, g_peak) = golden_max(&g, 0.0, hi, 1e-14);
        let r = if g_peak < 0.0 {
            peak
        } else {
            bisect(&g, 0.0, peak, 1e-16)
        };
        (r, 0.0, false)
    }

    fn eval(&self, alpha: f64) -> AlphaPoint {
        let (r, _, feasible_at_zero) = self.squeeze_at(alpha);
        let (_, bx, bp) = self.gap(alpha, r);
        let beta = (bx * bp).sqrt();
        let (mx, mp) = self.residual_blocks(alpha, beta, r);
        AlphaPoint {
            alpha,
            r,
            beta,
            feasible_at_zero,
            theta_x: principal_angle(&mx),
            theta_p: -principal_angle(&mp),
            trace_x: mx.trace(),
            trace_p: mp.trace(),
        }
    }

    fn residual_blocks(&self, alpha: f64, beta: f64, r: f64) -> (Mat2, Mat2) {
        let StandardFormParams { n, m, kx, kp } = self.p;
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let x = Mat2::new(alpha * n, kx, kx, m / alpha) * beta;
        let p = Mat2::new(n / alpha, -kp, -kp, alpha * m) / beta;
        let mx = (x - Mat2::new(c, s, s, c)) * 0.5;
        let mp = (p - Mat2::new(c, -s, -s, c)) * 0.5;
        (mx, mp)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol * b.abs().max(1.0) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Bisection for a sign change of `f` on `[a, b]`, `f(a) < 0 <= f(b)` or the reverse.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Canonical form of a standard-form covariance.
///
/// The residual weights are reported with `u >= v`; the exchanged form is
/// locally equivalent (see [`swap_residual_blocks`]). Separable inputs,
/// detected by the solver itself as feasibility without any subtracted
/// squeezing, return [`Error::Separable`].
pub fn canonical_reduce(p: &StandardFormParams) -> Result<CanonicalReduction> {
    let solver = Solver::new(*p)?;
    let lo = (p.m / p.n).sqrt();
    let hi = (p.n / p.m).sqrt();
    if hi < lo {
        return Err(Error::InvalidArgument(format!("standard form requires n >= m: {p:?}")));
    }

    let purity = 1e-10 * p.n * p.n;
    if (p.n - p.m).abs() <= 1e-10 * p.n && (p.det_x() - 1.0).abs() <= purity && (p.det_p() - 1.0).abs() <= purity {
        if p.n - 1.0 <= 1e-12 {
            return Err(Error::Separable);
        }
        let form = CanonicalForm {
            r0: 0.5 * p.n.acosh(),
            theta0: FRAC_PI_4,
            u: 0.0,
            v: 0.0,
            alpha0: 1.0,
            beta0: 1.0,
        };
        return Ok(CanonicalReduction { form, alpha_roots: 0, used_fallback: false, pure: true, theta_mismatch: 0.0 });
    }

    if hi / lo - 1.0 < 1e-13 {
        let pt = solver.eval(1.0);
        if pt.feasible_at_zero {
            return Err(Error::Separable);
        }
        return finish(pt, 1, false);
    }

    let ratio = hi / lo;
    let grid: Vec<AlphaPoint> = (0..ALPHA_SCAN)
        .map(|i| lo * ratio.powf(i as f64 / (ALPHA_SCAN - 1) as f64))
        .map(|a| solver.eval(a))
        .collect();
    if grid.iter().any(|pt| pt.feasible_at_zero) {
        return Err(Error::Separable);
    }

    let mut candidates = Vec::new();
    for w in grid.windows(2) {
        let (f0, f1) = (w[0].mismatch(), w[1].mismatch());
        if f0 == 0.0 {
            candidates.push(w[0]);
        } else if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            let alpha = bisect(&|a| solver.eval(a).mismatch(), w[0].alpha, w[1].alpha, 1e-15);
            candidates.push(solver.eval(alpha));
        }
    }
    if let Some(last) = grid.last() {
        if last.mismatch() == 0.0 {
            candidates.push(*last);
        }
    }
    let roots = candidates.len();

    // r0 is also the minimum of r(alpha); this route stays well defined when
    // a residual block vanishes and its angle is noise.
    let (alpha_min, _) = golden_max(&|a| -solver.eval(a).r, lo, hi, 1e-13);
    let at_min = solver.eval(alpha_min);
    let floor = BLOCK_FLOOR * at_min.r.cosh().powi(2);
    let best = candidates
        .into_iter()
        .filter(|pt| pt.trace_x > floor && pt.trace_p > floor && pt.r <= at_min.r + 1e-9)
        .min_by(|a, b| a.r.total_cmp(&b.r));
    match best {
        Some(pt) => finish(pt, roots, false),
        None => {
            let red = finish(at_min, roots, true)?;
            if red.theta_mismatch > 1e-6 {
                return Err(Error::NoRootBracketed { alpha_lo: lo, alpha_hi: hi });
            }
            Ok(red)
        }
    }
}

fn finish(pt: AlphaPoint, roots: usize, used_fallback: bool) -> Result<CanonicalReduction> {
    let u = 2.0 * pt.trace_x;
    let v = 2.0 * pt.trace_p;
    let floor = 2.0 * BLOCK_FLOOR * pt.r.cosh().powi(2);
    let has_x = u > floor;
    let has_p = v > floor;
    let (theta0, pure) = match (has_x, has_p) {
        (true, true) => ((u * pt.theta_x + v * pt.theta_p) / (u + v), false),
        (true, false) => (pt.theta_x, false),
        (false, true) => (pt.theta_p, false),
        (false, false) => (FRAC_PI_4, true),
    };
    let mismatch = if has_x && has_p { (pt.theta_x - pt.theta_p).abs() } else { 0.0 };
    let theta0 = if theta0 > FRAC_PI_4 && theta0 - FRAC_PI_4 < 1e-10 { FRAC_PI_4 } else { theta0 };
    let mut form = CanonicalForm {
        r0: pt.r,
        theta0,
        u: u.max(0.0),
        v: v.max(0.0),
        alpha0: pt.alpha,
        beta0: pt.beta,
    };
    if form.u < form.v {
        form = swap_residual_blocks(&form);
    }
    let (t, h) = (form.theta0.tan(), form.r0.tanh());
    if t - h < -CONSTRAINT_TOL {
        return Err(Error::ConstraintViolated { tan_theta: t, tanh_r: h });
    }
    Ok(CanonicalReduction { form, alpha_roots: roots, used_fallback, pure, theta_mismatch: mismatch })
}

/// The locally equivalent form with `u` and `v` exchanged (a quarter-turn
/// phase rotation of both modes), with its realizing scale pair.
pub fn swap_residual_blocks(cf: &CanonicalForm) -> CanonicalForm {
    let mut out = CanonicalForm { u: cf.v, v: cf.u, ..*cf };
    let (_, scale) = scale_of_block_form(&build_v0(&out));
    out.alpha0 = scale.alpha;
    out.beta0 = scale.beta;
    out
}

/// Canonical squeezing `r0`, with 0 for separable inputs.
pub fn canonical_squeeze(p: &StandardFormParams) -> Result<f64> {
    match canonical_reduce(p) {
        Ok(red) => Ok(red.form.r0),
        Err(Error::Separable) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Closed form for `n = m`: `exp(-2 r0) = sqrt((n - kx)(n - kp))` with
/// `beta = sqrt((n - kp)/(n - kx))` and `theta0 = pi/4`.
pub fn canonical_symmetric(n: f64, kx: f64, kp: f64) -> Result<SpecialCase> {
    let (dx, dp) = (n - kx, n - kp);
    if !(dx > 0.0 && dp > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "symmetric closed form needs n > kx and n > kp (n={n}, kx={kx}, kp={kp})"
        )));
    }
    let beta = (dp / dx).sqrt();
    let prod = dx * dp;
    if prod >= 1.0 {
        return Ok(SpecialCase { r0: 0.0, beta, separable: true });
    }
    Ok(SpecialCase { r0: -0.25 * prod.ln(), beta, separable: false })
}

/// Closed form for `kx = kp = k`: `cosh(2 eta - 2 r0) = (nm - k^2 + 1)/N`,
/// `exp(2 eta) = (n + m + 2k)/N`, `N = sqrt((n+m)^2 - 4k^2)`; unit scaling.
pub fn canonical_equal_k(n: f64, m: f64, k: f64) -> Result<SpecialCase> {
    let big_n2 = (n + m).powi(2) - 4.0 * k * k;
    if !(big_n2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "equal-k closed form needs (n+m)^2 > 4k^2 (n={n}, m={m}, k={k})"
        )));
    }
    let big_n = big_n2.sqrt();
    let eta = 0.5 * ((n + m + 2.0 * k) / big_n).ln();
    let q = ((n * m - k * k + 1.0) / big_n).max(1.0);
    let r0 = eta - 0.5 * q.acosh();
    if r0 <= 0.0 {
        return Ok(SpecialCase { r0: 0.0, beta: 1.0, separable: true });
    }
    Ok(SpecialCase { r0, beta: 1.0, separable: false })
}

/// Splits `V0 - V_tmsv(r0)` and recovers `(u, v, theta0)` from its blocks.
pub fn residual_m(v0: &CovMat4, r0: f64) -> Result<ResidualM> {
    let matrix = v0.entries() - CovMat4::tmsv(r0).entries();
    let eig = nalgebra::SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = [0, 1, 2, 3].map(|i| eig.eigenvalues[order[i]]);
    let eigenvectors = [0, 1, 2, 3].map(|i| eig.eigenvectors.column(order[i]).into_owned());
    if eigenvalues[3] < -NEGATIVE_RESIDUAL {
        return Err(Error::NegativeResidual { min_eigenvalue: eigenvalues[3] });
    }
    let rank = eigenvalues.iter().filter(|&&l| l > RANK_THRESHOLD).count();
    let mx = sub2(&matrix, 0, 2);
    let mp = sub2(&matrix, 1, 3);
    let u = 2.0 * mx.trace();
    let v = 2.0 * mp.trace();
    let theta_x = (u > RANK_THRESHOLD).then(|| principal_angle(&mx));
    let theta_p = (v > RANK_THRESHOLD).then(|| -principal_angle(&mp));
    Ok(ResidualM { matrix, eigenvalues, eigenvectors, rank, u: u.max(0.0), v: v.max(0.0), theta_x, theta_p })
}

impl ResidualM {
    /// The common null-vector angle, or `None` if both blocks vanish.
    pub fn theta0(&self) -> Option<f64> {
        match (self.theta_x, self.theta_p) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            (a, b) => a.or(b),
        }
    }

    /// `|theta_x - theta_p|` when both blocks are present.
    pub fn theta_mismatch(&self) -> f64 {
        match (self.theta_x, self.theta_p) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        }
    }

    /// Orthonormal basis of the range (eigenvectors above the rank threshold).
    pub fn range_basis(&self) -> Vec<(f64, Vec4)> {
        self.eigenvalues
            .iter()
            .zip(self.eigenvectors.iter())
            .filter(|(l, _)| **l > RANK_THRESHOLD)
            .map(|(l, e)| (*l, *e))
            .collect()
    }
}

/// Canonical parameters after the two-mode squeeze `U(r)`: `r0` shifts by
/// `r`, `(u, v)` scale by `cosh 2r + sin 2theta0 sinh 2r`, and
/// `sin 2theta0' = (sinh 2r + cosh 2r sin 2theta0) / (cosh 2r + sin 2theta0 sinh 2r)`.
pub fn squeeze_transport(cf: &CanonicalForm, r: f64) -> Result<CanonicalForm> {
    if r < -cf.r0 - 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "transport by {r} would push r0 = {} below zero",
            cf.r0
        )));
    }
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let s2 = (2.0 * cf.theta0).sin();
    let factor = ch + s2 * sh;
    let sin2 = ((sh + ch * s2) / factor).clamp(-1.0, 1.0);
    let mut out = CanonicalForm {
        r0: (cf.r0 + r).max(0.0),
        theta0: 0.5 * sin2.asin(),
        u: cf.u * factor,
        v: cf.v * factor,
        alpha0: 1.0,
        beta0: 1.0,
    };
    let (_, scale) = scale_of_block_form(&build_v0(&out));
    out.alpha0 = scale.alpha;
    out.beta0 = scale.beta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::two_mode_squeeze_matrix;
    use crate::standard_form::reduce_to_standard_form;
    use std::f64::consts::PI;

    fn reduce_v(v: &CovMat4) -> CanonicalReduction {
        let red = reduce_to_standard_form(v).unwrap();
        canonical_reduce(&red.params).unwrap()
    }

    #[test]
    fn pure_tmsv_is_its_own_canonical_form() {
        let r: f64 = 0.5;
        let p = StandardFormParams::new((2.0 * r).cosh(), (2.0 * r).cosh(), (2.0 * r).sinh(), (2.0 * r).sinh());
        let red = canonical_reduce(&p).unwrap();
        let cf = red.form;
        assert!((cf.r0 - r).abs() < 1e-14, "{cf:?}");
        assert!(cf.u == 0.0 && cf.v == 0.0);
        assert!(cf.alpha0 == 1.0 && cf.beta0 == 1.0);
        assert!(red.pure);
    }

    #[test]
    fn symmetric_mixed_example() {
        // exp(-2 r0) = sqrt(0.75)
        let want = -0.25 * 0.75f64.ln();
        let closed = canonical_symmetric(2.0, 1.5, 0.5).unwrap();
        assert!((closed.r0 - want).abs() < 1e-15);
        assert!((closed.r0 - 0.071_920_518_0).abs() < 1e-9);
        let red = canonical_reduce(&StandardFormParams::new(2.0, 2.0, 1.5, 0.5)).unwrap();
        assert!((red.form.r0 - want).abs() < 1e-10);
        assert!((red.form.theta0 - FRAC_PI_4).abs() < 1e-10);
        assert!((red.form.beta0 - 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn asymmetric_example_structure() {
        let p = StandardFormParams::new(2.2, 1.6, 1.1, 0.8);
        let red = canonical_reduce(&p).unwrap();
        let cf = red.form;
        // Frozen from an independent scan of min over alpha of r(alpha).
        assert!((cf.r0 - 0.060_873_469_808_07).abs() < 1e-9, "{cf:?}");
        assert!((cf.alpha0 - 1.033_199_041_73).abs() < 1e-8);
        assert!(cf.constraint_slack() >= 0.0);
        let v0 = p.to_covariance(cf.scale());
        let rebuilt = build_v0(&cf);
        assert!((v0.entries() - rebuilt.entries()).abs().max() < 1e-9);
        let res = residual_m(&v0, cf.r0).unwrap();
        assert_eq!(res.rank, 2);
        assert!(res.theta_mismatch() < 1e-7);
    }

    #[test]
    fn symmetric_closed_form_edge_cases() {
        let r: f64 = 1.0;
        let c = canonical_symmetric((2.0 * r).cosh(), (2.0 * r).sinh(), (2.0 * r).sinh()).unwrap();
        assert!((c.r0 - 1.0).abs() < 1e-12);
        let sep = canonical_symmetric(2.0, 0.5, 0.5).unwrap();
        assert!(sep.separable && sep.r0 == 0.0);
        assert!(canonical_symmetric(1.0, 1.5, 0.2).is_err());
    }

    #[test]
    fn equal_k_closed_form() {
        let c = canonical_equal_k(2f64.cosh(), 2f64.cosh(), 2f64.sinh()).unwrap();
        assert!((c.r0 - 1.0).abs() < 1e-12);

        let (n, m, k) = (2.5, 1.5, 1.2);
        let c = canonical_equal_k(n, m, k).unwrap();
        assert!(!c.separable);
        let (ch, sh) = ((2.0 * c.r0).cosh(), (2.0 * c.r0).sinh());
        let det = (n - ch) * (m - ch) - (k - sh) * (k - sh);
        assert!(det.abs() < 1e-10);
        let red = canonical_reduce(&StandardFormParams::new(n, m, k, k)).unwrap();
        assert!((red.form.r0 - c.r0).abs() < 1e-10);
        assert!((red.form.alpha0 - 1.0).abs() < 1e-8 && (red.form.beta0 - 1.0).abs() < 1e-8);

        let sep = canonical_equal_k(2.5, 1.5, 0.1).unwrap();
        assert!(sep.separable);
        let ppt = StandardFormParams::new(2.5, 1.5, 0.1, 0.1).covariance().ppt_separability();
        assert!(ppt.separable);
    }

    #[test]
    fn build_v0_examples() {
        let cf = CanonicalForm::new(0.5, FRAC_PI_4, 0.0, 0.0).unwrap();
        assert!((build_v0(&cf).entries() - CovMat4::tmsv(0.5).entries()).abs().max() < 1e-15);

        let cf = CanonicalForm::new(0.3, PI / 6.0, 0.4, 0.2).unwrap();
        let v0 = build_v0(&cf);
        assert!(v0.validate().is_physical);
        let res = residual_m(&v0, 0.3).unwrap();
        assert_eq!(res.rank, 2);
        assert!((res.u - 0.4).abs() < 1e-12 && (res.v - 0.2).abs() < 1e-12);
        assert!((res.theta0().unwrap() - PI / 6.0).abs() < 1e-10);

        let sep = build_v0(&CanonicalForm::new(0.0, FRAC_PI_4, 0.7, 0.3).unwrap());
        assert!(sep.ppt_separability().separable);
    }

    #[test]
    fn residual_examples() {
        let res = residual_m(&CovMat4::tmsv(0.4), 0.4).unwrap();
        assert_eq!(res.rank, 0);
        assert!(res.theta0().is_none());
        assert!(matches!(
            residual_m(&CovMat4::tmsv(0.5), 0.6),
            Err(Error::NegativeResidual { .. })
        ));
    }

    #[test]
    fn residual_range_vectors() {
        let cf = CanonicalForm::new(0.3, PI / 6.0, 0.4, 0.2).unwrap();
        let res = residual_m(&build_v0(&cf), cf.r0).unwrap();
        let (s, c) = cf.theta0.sin_cos();
        let basis = res.range_basis();
        assert_eq!(basis.len(), 2);
        assert!((basis[0].0 - 0.2).abs() < 1e-12 && (basis[1].0 - 0.1).abs() < 1e-12);
        let ex = Vec4::new(c, 0.0, s, 0.0);
        let ep = Vec4::new(0.0, c, 0.0, -s);
        assert!((basis[0].1.dot(&ex).abs() - 1.0).abs() < 1e-12);
        assert!((basis[1].1.dot(&ep).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transport_matches_direct_congruence() {
        let cf = CanonicalForm::new(0.2, PI / 6.0, 0.4, 0.2).unwrap();
        let t = squeeze_transport(&cf, 0.3).unwrap();
        let f = 0.6f64.cosh() + (PI / 3.0).sin() * 0.6f64.sinh();
        let s2 = (0.6f64.sinh() + 0.6f64.cosh() * (PI / 3.0).sin()) / f;
        assert!((t.r0 - 0.5).abs() < 1e-15);
        assert!(((2.0 * t.theta0).sin() - s2).abs() < 1e-14);
        assert!((t.u - 0.4 * f).abs() < 1e-14 && (t.v - 0.2 * f).abs() < 1e-14);

        let moved = build_v0(&cf).apply_symplectic(&two_mode_squeeze_matrix(0.3)).unwrap();
        assert!((moved.entries() - build_v0(&t).entries()).abs().max() < 1e-12);
        let direct = reduce_v(&moved).form;
        for (a, b) in [(direct.r0, t.r0), (direct.theta0, t.theta0), (direct.u, t.u), (direct.v, t.v)] {
            assert!((a - b).abs() < 1e-7, "{direct:?} vs {t:?}");
        }

        let id = squeeze_transport(&cf, 0.0).unwrap();
        assert!((id.theta0 - cf.theta0).abs() < 1e-15 && id.u == cf.u && id.r0 == cf.r0);

        let twice = squeeze_transport(&squeeze_transport(&cf, 0.25).unwrap(), 0.4).unwrap();
        let once = squeeze_transport(&cf, 0.65).unwrap();
        assert!((twice.r0 - once.r0).abs() < 1e-14);
        assert!((twice.theta0 - once.theta0).abs() < 1e-12);
        assert!((twice.u - once.u).abs() < 1e-12 && (twice.v - once.v).abs() < 1e-12);

        assert!(squeeze_transport(&cf, -0.3).is_err());
    }

    #[test]
    fn degenerate_blocks_use_surviving_angle() {
        for (u, v) in [(0.0, 0.3), (0.3, 0.0)] {
            let cf = CanonicalForm::new(0.4, PI / 6.0, u, v).unwrap();
            let red = reduce_v(&build_v0(&cf));
            assert!((red.form.r0 - 0.4).abs() < 1e-7, "{red:?}");
            assert!((red.form.theta0 - PI / 6.0).abs() < 1e-6, "{red:?}");
            assert!((red.form.u - 0.3).abs() < 1e-6 && red.form.v < 1e-6);
        }
    }

    #[test]
    fn swapped_blocks_share_the_standard_form() {
        let cf = CanonicalForm::new(0.3, PI / 6.0, 0.1, 0.5).unwrap();
        let p = reduce_to_standard_form(&build_v0(&cf)).unwrap().params;
        let sw = swap_residual_blocks(&cf);
        assert_eq!((sw.u, sw.v), (0.5, 0.1));
        let rebuilt = p.to_covariance(sw.scale());
        assert!((rebuilt.entries() - build_v0(&sw).entries()).abs().max() < 1e-12);
        let red = canonical_reduce(&p).unwrap().form;
        assert!((red.u - 0.5).abs() < 1e-8 && (red.v - 0.1).abs() < 1e-8);
    }

    #[test]
    fn separable_input_detected_by_solver() {
        let p = StandardFormParams::new(2.5, 1.5, 0.1, 0.1);
        assert!(matches!(canonical_reduce(&p), Err(Error::Separable)));
        assert_eq!(canonical_squeeze(&p).unwrap(), 0.0);
        let same_sign = StandardFormParams::new(2.0, 1.8, 1.0, -0.6);
        assert_eq!(canonical_squeeze(&same_sign).unwrap(), 0.0);
    }

    #[test]
    fn invalid_forms_rejected() {
        assert!(CanonicalForm::new(-0.1, 0.5, 0.0, 0.0).is_err());
        assert!(CanonicalForm::new(0.1, 0.9, 0.0, 0.0).is_err());
        assert!(matches!(
            CanonicalForm::new(1.0, 0.1, 0.0, 0.0),
            Err(Error::ConstraintViolated { .. })
        ));
    }
}
