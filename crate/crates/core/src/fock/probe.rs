//! Numerical search for pure states that beat the squeezed vacuum on
//! `Lambda_theta` at equal or lower entanglement.
//!
//! Minimizes `<Lambda_theta> + mu max(0, E(psi) - E_budget)^2` over unit
//! vectors by Riemannian gradient descent with Armijo backtracking and
//! Barzilai-Borwein steps, under a continuation schedule for `mu`. Every
//! restart finishes with a feasibility repair (Schmidt tempering) so the
//! reported minimum is attained by a state that meets the budget.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, LN_2};

use super::{apply_lambda, shannon_bits, tmsv_state, CMatrix, FockStateMatrix};
use crate::epr::{lambda_theta_tmsv, squeezing_of_entanglement, theta_dual, EntanglementValue};
use crate::error::{Error, Result};

/// Margin below which a restart counts as a counterexample candidate.
pub const COUNTEREXAMPLE_MARGIN: f64 = -1e-6;
/// Slack on the entanglement budget accepted as feasible.
pub const BUDGET_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOptions {
    pub dim: usize,
    pub restarts: usize,
    pub seed: u64,
    pub penalties: Vec<f64>,
    pub max_iters: usize,
    pub reverify_dim: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            dim: 25,
            restarts: 64,
            seed: 0,
            penalties: vec![10.0, 100.0, 1000.0],
            max_iters: 200,
            reverify_dim: 35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reverification {
    pub dim: usize,
    pub lambda: f64,
    pub entanglement: f64,
    pub margin: f64,
    pub survives: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub theta: f64,
    pub e_budget: f64,
    pub r_budget: f64,
    pub reference_lambda: f64,
    pub best_lambda: f64,
    pub margin: f64,
    pub best_entanglement: f64,
    /// Index of the restart that produced the minimum.
    pub best_restart: usize,
    /// Leading Schmidt probabilities of the minimizer.
    pub argmin_schmidt: Vec<f64>,
    /// `sum |p_k - q_k|` against the Schmidt distribution of the reference
    /// squeezed vacuum; zero means equal up to local unitaries.
    pub schmidt_distance_to_reference: f64,
    pub reverified: Option<Reverification>,
    /// A negative margin that survived re-verification at a larger dimension.
    pub counterexample: bool,
    pub dim: usize,
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub argmin_state: FockStateMatrix,
}

fn inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn normalized(psi: CMatrix) -> CMatrix {
    let n = psi.norm();
    psi / Complex64::from(n)
}

fn lambda_of(theta: f64, psi: &CMatrix) -> f64 {
    inner(psi, &apply_lambda(theta, psi)).re
}

fn entropy_of(psi: &CMatrix) -> f64 {
    let sv = psi.clone().singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    shannon_bits(&sv.iter().map(|s| s * s / total).collect::<Vec<_>>())
}

/// Penalized objective on a unit vector.
pub fn objective(theta: f64, e_budget: f64, mu: f64, psi: &CMatrix) -> f64 {
    let excess = (entropy_of(psi) - e_budget).max(0.0);
    lambda_of(theta, psi) + mu * excess * excess
}

/// Gradient of [`objective`] projected on the tangent space of the sphere
/// at `psi`, in the convention `df = 2 Re <G, dpsi>`.
pub fn riemannian_gradient(theta: f64, e_budget: f64, mu: f64, psi: &CMatrix) -> CMatrix {
    let mut g = apply_lambda(theta, psi);
    let svd = psi.clone().svd(true, true);
    let sv = &svd.singular_values;
    let probs: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let excess = (shannon_bits(&probs) - e_budget).max(0.0);
    if excess > 0.0 {
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let weights: Vec<f64> = sv
            .iter()
            .map(|&s| if s > 1e-150 { s * ((s * s).log2() + 1.0 / LN_2) } else { 0.0 })
            .collect();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| Complex64::from(w)),
        ));
        let ge = u * d * vt;
        g -= ge * Complex64::from(2.0 * mu * excess);
    }
    let radial = inner(psi, &g).re;
    g - psi * Complex64::from(radial)
}

fn descend(theta: f64, e_budget: f64, mu: f64, mut psi: CMatrix, iters: usize) -> CMatrix {
    let mut f = objective(theta, e_budget, mu, &psi);
    let mut g = riemannian_gradient(theta, e_budget, mu, &psi);
    let mut step = 0.05;
    for _ in 0..iters {
        let gn2 = g.norm_squared();
        if gn2 < 1e-24 {
            break;
        }
        let mut t = step;
        let (cand, fc) = loop {
            let cand = normalized(&psi - &g * Complex64::from(t));
            let fc = objective(theta, e_budget, mu, &cand);
            if fc <= f - 1e-4 * t * gn2 || t < 1e-12 {
                break (cand, fc);
            }
            t *= 0.5;
        };
        if fc >= f {
            break;
        }
        let g_new = riemannian_gradient(theta, e_budget, mu, &cand);
        let s = &cand - &psi;
        let y = &g_new - &g;
        let sy = inner(&s, &y).re;
        step = if sy > 1e-300 { (s.norm_squared() / sy).clamp(1e-6, 10.0) } else { (2.0 * t).min(10.0) };
        let done = f - fc < 1e-15 * (1.0 + f.abs());
        psi = cand;
        f = fc;
        g = g_new;
        if done {
            break;
        }
    }
    psi
}

/// Sharpens the Schmidt distribution `p_k -> p_k^t / Z` until the
/// entanglement meets the budget; keeps the Schmidt vectors.
pub fn temper_to_budget(psi: &CMatrix, e_budget: f64) -> CMatrix {
    let svd = psi.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let p: Vec<f64> = sv.iter().map(|s| s * s / total).collect();
    if shannon_bits(&p) <= e_budget {
        return psi.clone();
    }
    let top = p.iter().copied().fold(0.0, f64::max);
    let tempered = |t: f64| -> Vec<f64> {
        let w: Vec<f64> = p.iter().map(|&x| if x > 0.0 { (x / top).powf(t) } else { 0.0 }).collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|x| x / z).collect()
    };
    let only_top = || -> Vec<f64> {
        let k = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        (0..p.len()).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    };
    let new_p = if e_budget <= 0.0 {
        only_top()
    } else {
        let mut hi = 2.0;
        while shannon_bits(&tempered(hi)) > e_budget && hi < 1e6 {
            hi *= 2.0;
        }
        if shannon_bits(&tempered(hi)) > e_budget {
            only_top()
        } else {
            let mut lo = 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if shannon_bits(&tempered(mid)) > e_budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            tempered(hi)
        }
    };
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        new_p.len(),
        new_p.iter().map(|&x| Complex64::from(x.sqrt())),
    ));
    normalized(u * d * vt)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Even restarts are Haar-like random states, odd ones perturbed squeezed vacua.
fn initial_state(index: usize, seed: u64, dim: usize, r_budget: f64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let noise = gaussian_matrix(&mut rng, dim);
    if index.is_multiple_of(2) {
        normalized(noise)
    } else {
        let base = tmsv_state(r_budget, dim).psi;
        normalized(base + noise * Complex64::from(0.1 / dim as f64))
    }
}

fn run_restart(theta: f64, e_budget: f64, r_budget: f64, index: usize, opts: &ProbeOptions) -> (f64, f64, CMatrix) {
    let mut psi = initial_state(index, opts.seed, opts.dim, r_budget);
    for &mu in &opts.penalties {
        psi = descend(theta, e_budget, mu, psi, opts.max_iters);
    }
    let psi = temper_to_budget(&psi, e_budget);
    (lambda_of(theta, &psi), entropy_of(&psi), psi)
}

/// Tail `tanh^{2 dim} r` that truncation discards from the reference state.
pub fn reference_tail(r: f64, dim: usize) -> f64 {
    r.tanh().powi(2 * dim as i32)
}

pub fn conjecture_probe(theta: f64, e_budget: f64, opts: &ProbeOptions) -> Result<ProbeReport> {
    let r_budget = squeezing_of_entanglement(EntanglementValue(e_budget))?;
    let theta_min = theta_dual(r_budget);
    if !(theta >= theta_min - 1e-12 && theta <= FRAC_PI_4 + 1e-12) {
        return Err(Error::OutOfConjectureRange { theta, theta_min });
    }
    if opts.dim < 2 || opts.restarts == 0 {
        return Err(Error::InvalidArgument("probe needs dim >= 2 and at least one restart".into()));
    }
    let tail = reference_tail(r_budget, opts.dim);
    if tail > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "dimension {} too small for the reference state (tail {tail:.2e} > 1e-8)",
            opts.dim
        )));
    }
    let reference = lambda_theta_tmsv(r_budget, theta);
    let results: Vec<(f64, f64, CMatrix)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| run_restart(theta, e_budget, r_budget, i, opts))
        .collect();
    let (best_restart, best) = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1 <= e_budget + BUDGET_SLACK)
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(i, r)| (i, r.clone()))
        .expect("tempering always yields a feasible state");
    let (best_lambda, best_entanglement, psi) = best;
    let margin = best_lambda - reference;

    let reverified = (margin < COUNTEREXAMPLE_MARGIN).then(|| {
        let big = FockStateMatrix { psi: psi.clone(), tail_mass: 0.0 }.resized(opts.reverify_dim).psi;
        let mu = opts.penalties.last().copied().unwrap_or(1000.0);
        let polished = temper_to_budget(&descend(theta, e_budget, mu, big, opts.max_iters), e_budget);
        let lambda = lambda_of(theta, &polished);
        let margin = lambda - reference;
        Reverification {
            dim: opts.reverify_dim,
            lambda,
            entanglement: entropy_of(&polished),
            margin,
            survives: margin < COUNTEREXAMPLE_MARGIN,
        }
    });

    let state = FockStateMatrix { psi, tail_mass: 0.0 };
    let probs = state.schmidt_probabilities();
    let reference_probs = tmsv_state(r_budget, opts.dim).schmidt_probabilities();
    let distance = probs.iter().zip(reference_probs.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(ProbeReport {
        theta,
        e_budget,
        r_budget,
        reference_lambda: reference,
        best_lambda,
        margin,
        best_entanglement,
        best_restart,
        argmin_schmidt: probs.iter().take(6).copied().collect(),
        schmidt_distance_to_reference: distance,
        counterexample: reverified.as_ref().is_some_and(|r| r.survives),
        reverified,
        dim: opts.dim,
        restarts: opts.restarts,
        seed: opts.seed,
        argmin_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epr::entanglement_of_squeezing;

    fn small(restarts: usize) -> ProbeOptions {
        ProbeOptions { dim: 12, restarts, seed: 3, max_iters: 150, ..Default::default() }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dim = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..20 {
            let psi = normalized(gaussian_matrix(&mut rng, dim));
            let raw = gaussian_matrix(&mut rng, dim);
            let eta = &raw - &psi * Complex64::from(inner(&psi, &raw).re);
            let (theta, eb, mu) = (0.3 + 0.02 * k as f64, 0.5, 10.0);
            let g = riemannian_gradient(theta, eb, mu, &psi);
            let h = 1e-6;
            let fp = objective(theta, eb, mu, &normalized(&psi + &eta * Complex64::from(h)));
            let fm = objective(theta, eb, mu, &normalized(&psi - &eta * Complex64::from(h)));
            let fd = (fp - fm) / (2.0 * h);
            let an = 2.0 * inner(&g, &eta).re;
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    #[test]
    fn tempering_meets_budget() {
        let psi = tmsv_state(0.8, 20).psi;
        let eb = entanglement_of_squeezing(0.4).ebits();
        let t = temper_to_budget(&psi, eb);
        assert!((entropy_of(&t) - eb).abs() < 1e-9);
        let p = temper_to_budget(&psi, 0.0);
        assert!(entropy_of(&p) < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_is_not_beaten() {
        let eb = entanglement_of_squeezing(0.5).ebits();
        let rep = conjecture_probe(FRAC_PI_4, eb, &small(4)).unwrap();
        assert!(rep.margin >= COUNTEREXAMPLE_MARGIN, "{rep:?}");
        assert!(!rep.counterexample);
        assert!(rep.best_entanglement <= eb + BUDGET_SLACK);
    }

    #[test]
    fn zero_budget_reference_is_one() {
        let rep = conjecture_probe(0.5, 0.0, &small(2)).unwrap();
        assert_eq!(rep.reference_lambda, 1.0);
        assert!(rep.best_lambda >= 1.0 - 1e-6);
    }

    #[test]
    fn out_of_range_rejected() {
        let eb = entanglement_of_squeezing(0.8).ebits();
        let err = conjecture_probe(0.1, eb, &small(1)).unwrap_err();
        assert!(matches!(err, Error::OutOfConjectureRange { .. }));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let eb = entanglement_of_squeezing(0.3).ebits();
        let a = conjecture_probe(0.6, eb, &small(2)).unwrap();
        let b = conjecture_probe(0.6, eb, &small(2)).unwrap();
        assert_eq!(a.best_lambda.to_bits(), b.best_lambda.to_bits());
    }
}
