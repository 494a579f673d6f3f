//! Optimal pure-state decomposition of a canonical state: a Gaussian
//! distribution of displacements, supported on the range of the residual
//! `M = V0 - V_tmsv(r0)`, applied to the squeezed vacuum `|Psi_{r0}>`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{build_v0, residual_m, squeeze_transport, CanonicalForm};
use crate::covariance::{two_mode_squeeze_matrix, CovMat4};
use crate::epr::entanglement_of_squeezing;
use crate::error::{Error, Result};
use crate::fock::{apply_displacement, entanglement_entropy, tmsv_state, DEFAULT_BUFFER};
use crate::linalg::{max_abs, Mat4, Vec4};

const CHUNK: usize = 1 << 16;

/// Truncation used by the displaced-member entanglement check.
pub const MEMBER_DIM: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub r0: f64,
    pub residual: Mat4,
    /// `(variance, unit direction)` for each range direction of the residual.
    pub components: Vec<(f64, Vec4)>,
    pub target: Mat4,
}

impl EnsembleSpec {
    pub fn is_point_mass(&self) -> bool {
        self.components.is_empty()
    }

    /// Normalized Gaussian density of `xi` on the range of the residual;
    /// `None` if `xi` has a component off the range (beyond `1e-9`).
    pub fn density(&self, xi: &Vec4) -> Option<f64> {
        let mut rest = *xi;
        let mut log_density = 0.0;
        for (var, dir) in &self.components {
            let t = dir.dot(xi);
            rest -= dir * t;
            log_density += -0.5 * t * t / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        }
        (rest.norm() <= 1e-9).then(|| log_density.exp())
    }

    pub fn member_covariance(&self) -> Mat4 {
        *CovMat4::tmsv(self.r0).entries()
    }
}

pub fn make_ensemble(cf: &CanonicalForm) -> Result<EnsembleSpec> {
    cf.check()?;
    let v0 = build_v0(cf);
    let res = residual_m(&v0, cf.r0)?;
    Ok(EnsembleSpec {
        r0: cf.r0,
        residual: res.matrix,
        components: res.range_basis(),
        target: *v0.entries(),
    })
}

fn fill_chunk(spec: &EnsembleSpec, seed: u64, chunk: usize, len: usize) -> Vec<Vec4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    (0..len)
        .map(|_| {
            spec.components.iter().fold(Vec4::zeros(), |acc, (var, dir)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc + dir * (var.sqrt() * z)
            })
        })
        .collect()
}

/// Draws `count` displacements; chunks use independent streams of the seed
/// so the output does not depend on the thread count.
pub fn sample(spec: &EnsembleSpec, count: usize, seed: u64) -> Vec<Vec4> {
    if spec.is_point_mass() {
        return vec![Vec4::zeros(); count];
    }
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| fill_chunk(spec, seed, c, CHUNK.min(count - c * CHUNK)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationReport {
    pub count: usize,
    pub seed: u64,
    pub v_hat: Mat4,
    pub max_abs_dev: f64,
    /// Largest `|Cov_ij - M_ij|` in units of its standard error.
    pub max_cov_z: f64,
    /// Largest `|mean_i|` in units of its standard error.
    pub max_mean_z: f64,
    pub member_displacement: Vec4,
    pub member_entanglement: f64,
    pub reference_entanglement: f64,
}

impl RealizationReport {
    pub fn within(&self, z: f64) -> bool {
        self.max_cov_z <= z && self.max_mean_z <= z
    }

    pub fn member_error(&self) -> f64 {
        (self.member_entanglement - self.reference_entanglement).abs()
    }
}

/// Entanglement of `D(xi) |Psi_r>` computed in a truncated Fock space.
pub fn displaced_member_entanglement(r: f64, xi: &Vec4, dim: usize) -> Result<f64> {
    let state = tmsv_state(r, dim);
    let moved = apply_displacement(&state, [xi[0], xi[1], xi[2], xi[3]], DEFAULT_BUFFER.max(dim / 2))?;
    Ok(entanglement_entropy(&moved).ebits())
}

pub fn verify_realization(spec: &EnsembleSpec, count: usize, seed: u64) -> Result<RealizationReport> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let xs = sample(spec, count, seed);
    let n = count as f64;
    let mean = xs.iter().fold(Vec4::zeros(), |a, x| a + x) / n;
    let cov = xs.iter().fold(Mat4::zeros(), |a, x| a + x * x.transpose()) / n;
    let m = &spec.residual;
    let v_hat = spec.member_covariance() + cov;
    let mut max_cov_z: f64 = 0.0;
    let mut max_mean_z: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let se = ((m[(i, i)] * m[(j, j)] + m[(i, j)] * m[(i, j)]) / n).sqrt();
            let dev = (cov[(i, j)] - m[(i, j)]).abs();
            max_cov_z = max_cov_z.max(if se > 0.0 { dev / se } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
        }
        let se = (m[(i, i)] / n).sqrt();
        let dev = mean[i].abs();
        max_mean_z = max_mean_z.max(if se > 0.0 { dev / se } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let member = xs.iter().take(100).min_by(|a, b| a.norm().total_cmp(&b.norm())).copied().unwrap_or_default();
    Ok(RealizationReport {
        count,
        seed,
        max_abs_dev: max_abs(&(v_hat - spec.target)),
        v_hat,
        max_cov_z,
        max_mean_z,
        member_displacement: member,
        member_entanglement: displaced_member_entanglement(spec.r0, &member, MEMBER_DIM)?,
        reference_entanglement: entanglement_of_squeezing(spec.r0).ebits(),
    })
}

/// `max |S(r) (V_Psi + M) S(r)^T - (V_Psi' + M')|` where primes denote the
/// ensemble of the transported canonical form.
pub fn squeeze_covariance_defect(cf: &CanonicalForm, r: f64) -> Result<f64> {
    let spec = make_ensemble(cf)?;
    let moved = make_ensemble(&squeeze_transport(cf, r)?)?;
    let s = two_mode_squeeze_matrix(r);
    let lhs = s * (spec.member_covariance() + spec.residual) * s.transpose();
    let rhs = moved.member_covariance() + moved.residual;
    Ok(max_abs(&(lhs - rhs)))
}
