//! Sampling check of the characterization of `r0` as the smallest squeeze
//! `r` for which `V - S_loc V_tmsv(r) S_loc^T >= 0` holds for some local
//! symplectic `S_loc`. Works on the raw covariance and never consults the
//! canonical solver.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::covariance::{local_symplectic, CovMat4};
use crate::linalg::{min_eigenvalue4, rotation, squeeze, Mat4};

/// Local symplectic parametrized as `R(a1) Sq(g1) R(a2) (+) R(b1) Sq(g2) R(b2)`.
pub type LocalParams = [f64; 6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub r: f64,
    /// Largest minimum eigenvalue of the difference found by the search.
    pub min_eig_found: f64,
    pub feasible: bool,
    pub best_locals: LocalParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryBracket {
    /// Largest `r` found infeasible.
    pub lower: f64,
    /// Smallest `r` with a feasibility witness.
    pub upper: f64,
    pub witness: LocalParams,
    /// Margin at the `r` of maximal slack located during the joint search.
    pub peak_margin: f64,
    pub peak_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityOptions {
    pub samples: usize,
    pub gamma_max: f64,
    /// Number of best samples refined by Nelder-Mead.
    pub refine: usize,
    pub tolerance: f64,
    pub max_iters: u64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self { samples: 2000, gamma_max: 3.0, refine: 3, tolerance: 1e-7, max_iters: 4000 }
    }
}

pub fn local_from_params(p: &LocalParams) -> Mat4 {
    let sa = rotation(p[0]) * squeeze(p[1]) * rotation(p[2]);
    let sb = rotation(p[3]) * squeeze(p[4]) * rotation(p[5]);
    local_symplectic(&sa, &sb)
}

/// `lambda_min(V - S V_tmsv(r) S^T)`.
pub fn subtraction_margin(v: &CovMat4, r: f64, p: &LocalParams) -> f64 {
    let s = local_from_params(p);
    let sub = s * CovMat4::tmsv(r).entries() * s.transpose();
    min_eigenvalue4(&(v.entries() - sub))
}

fn random_params<R: Rng>(rng: &mut R, gamma_max: f64) -> LocalParams {
    let mut p = [0.0; 6];
    for (i, x) in p.iter_mut().enumerate() {
        *x = if i % 3 == 1 {
            rng.random_range(-gamma_max..=gamma_max)
        } else {
            rng.random_range(0.0..PI)
        };
    }
    p
}

#[derive(Clone, Copy)]
struct LocalCost<'a> {
    v: &'a CovMat4,
    r: f64,
}

impl CostFunction for LocalCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let p: LocalParams = x[..6].try_into().expect("six local parameters");
        Ok(-subtraction_margin(self.v, self.r, &p))
    }
}

/// Joint cost over `(r, locals)`; `r` is clamped at zero.
#[derive(Clone, Copy)]
struct JointCost<'a> {
    v: &'a CovMat4,
}

impl CostFunction for JointCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let p: LocalParams = x[1..7].try_into().expect("six local parameters");
        Ok(-subtraction_margin(self.v, x[0].max(0.0), &p))
    }
}

fn simplex(start: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut out = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut x = start.to_vec();
        x[i] += step;
        out.push(x);
    }
    out
}

fn nelder_mead<C>(cost: C, start: &[f64], step: f64, max_iters: u64) -> (Vec<f64>, f64)
where
    C: CostFunction<Param = Vec<f64>, Output = f64> + Copy,
{
    // The minimum eigenvalue is not smooth where eigenvalues cross, so the
    // simplex is rebuilt around the incumbent until it stops improving.
    let mut best = (start.to_vec(), cost.cost(&start.to_vec()).unwrap_or(f64::INFINITY));
    let mut step = step;
    for _ in 0..6 {
        let solver = NelderMead::new(simplex(&best.0, step))
            .with_sd_tolerance(1e-13)
            .expect("valid tolerance");
        let res = Executor::new(cost, solver)
            .configure(|st| st.max_iters(max_iters))
            .run()
            .expect("cost is infallible");
        let state = res.state();
        let c = state.get_best_cost();
        let improved = best.1 - c;
        if c < best.1 {
            best = (state.get_best_param().cloned().unwrap_or_else(|| best.0.clone()), c);
        }
        if improved < 1e-12 {
            break;
        }
        step *= 0.5;
    }
    best
}

/// Searches local symplectics for a witness that `V - S V_tmsv(r) S^T >= 0`.
/// Random samples (plus any `warm` starts and the identity) are ranked and
/// the best are polished by Nelder-Mead. A report of infeasibility is only
/// as strong as the search; a feasible report carries an explicit witness.
pub fn squeeze_feasibility(
    v: &CovMat4,
    r: f64,
    seed: u64,
    opts: &FeasibilityOptions,
    warm: &[LocalParams],
) -> FeasibilityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(f64, LocalParams)> = Vec::with_capacity(opts.samples + warm.len() + 1);
    pool.push((subtraction_margin(v, r, &[0.0; 6]), [0.0; 6]));
    for w in warm {
        pool.push((subtraction_margin(v, r, w), *w));
    }
    for _ in 0..opts.samples {
        let p = random_params(&mut rng, opts.gamma_max);
        pool.push((subtraction_margin(v, r, &p), p));
    }
    // Warm starts and the identity are always refined.
    let fixed = warm.len() + 1;
    let (head, tail) = pool.split_at_mut(fixed);
    tail.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut starts: Vec<(f64, LocalParams)> = head.to_vec();
    starts.extend(tail.iter().take(opts.refine).copied());

    let mut best = starts.iter().copied().fold((f64::NEG_INFINITY, [0.0; 6]), |a, b| if b.0 > a.0 { b } else { a });
    for (_, p) in &starts {
        if best.0 >= opts.tolerance.abs() {
            break;
        }
        let (x, c) = nelder_mead(LocalCost { v, r }, p, 0.2, opts.max_iters);
        if -c > best.0 {
            best = (-c, x[..6].try_into().expect("six local parameters"));
        }
    }
    FeasibilityReport {
        r,
        min_eig_found: best.0,
        feasible: best.0 >= -opts.tolerance,
        best_locals: best.1,
    }
}

/// Locates the lower end of the feasible squeeze interval by bisection to
/// `width`, starting from the point of maximal slack found by a joint search
/// over `(r, locals)`. Returns `None` when no feasible `r` is found.
pub fn feasibility_boundary(
    v: &CovMat4,
    seed: u64,
    opts: &FeasibilityOptions,
    r_max: f64,
    width: f64,
) -> Option<BoundaryBracket> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut pool: Vec<(f64, Vec<f64>)> = Vec::with_capacity(4 * opts.samples + 1);
    pool.push((subtraction_margin(v, 0.0, &[0.0; 6]), vec![0.0; 7]));
    for _ in 0..4 * opts.samples {
        let r = rng.random_range(0.0..=r_max);
        let p = random_params(&mut rng, opts.gamma_max);
        let mut x = vec![r];
        x.extend_from_slice(&p);
        pool.push((subtraction_margin(v, r, &p), x));
    }
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut peak = (f64::NEG_INFINITY, vec![0.0; 7]);
    for (_, x) in pool.iter().take(4 * opts.refine.max(1)) {
        let (y, c) = nelder_mead(JointCost { v }, x, 0.1, opts.max_iters);
        if -c > peak.0 {
            peak = (-c, y);
        }
        if peak.0 > opts.tolerance {
            break;
        }
    }
    if peak.0 < -opts.tolerance {
        return None;
    }
    let peak_r = peak.1[0].max(0.0);
    let peak_locals: LocalParams = peak.1[1..7].try_into().expect("six local parameters");

    let light = FeasibilityOptions { samples: opts.samples / 4, ..*opts };
    let mut witness = peak_locals;
    let at_zero = squeeze_feasibility(v, 0.0, seed, opts, &[witness]);
    if at_zero.feasible {
        return Some(BoundaryBracket {
            lower: 0.0,
            upper: 0.0,
            witness: at_zero.best_locals,
            peak_margin: peak.0,
            peak_r,
        });
    }
    let (mut lo, mut hi) = (0.0, peak_r);
    let mut step = 0u64;
    while hi - lo > width {
        step += 1;
        let mid = 0.5 * (lo + hi);
        let rep = squeeze_feasibility(v, mid, seed.wrapping_add(step), &light, &[witness]);
        if rep.feasible {
            hi = mid;
            witness = rep.best_locals;
        } else {
            lo = mid;
        }
    }
    Some(BoundaryBracket { lower: lo, upper: hi, witness, peak_margin: peak.0, peak_r })
}
