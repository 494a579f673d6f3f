use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gauss_eof::canonical::{build_v0, canonical_reduce, residual_m, squeeze_transport, swap_residual_blocks, CanonicalForm};
use gauss_eof::ensemble::{make_ensemble, sample};
use gauss_eof::eof::eof;
use gauss_eof::epr::{entanglement_of_squeezing, lambda_theta_moments, squeezing_of_entanglement, theta_dual};
use gauss_eof::fock::{apply_displacement, entanglement_entropy, lambda_expectation, min_eig_lambda, tmsv_state, FockStateMatrix};
use gauss_eof::io::format_number;
use gauss_eof::linalg::Vec4;
use gauss_eof::random::{random_canonical, random_inseparable_state, random_local};
use gauss_eof::{reduce_to_standard_form, CovMat4};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn unitary(seed: u64, dim: usize) -> DMatrix<Complex64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        Complex64::new(a, b)
    });
    g.qr().q()
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn eof_is_locally_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_inseparable_state(&mut rng, 0.8, 0.6, 1e-4);
        let s = random_local(&mut rng, 0.8);
        let a = eof(&v).unwrap().ebits;
        let b = eof(&v.apply_symplectic(&s).unwrap()).unwrap().ebits;
        prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
    }

    #[test]
    fn canonical_residual_is_psd_rank_two(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_inseparable_state(&mut rng, 1.0, 1.0, 1e-6);
        let sf = reduce_to_standard_form(&v).unwrap();
        let cf = canonical_reduce(&sf.params).unwrap().form;
        let res = residual_m(&sf.params.to_covariance(cf.scale()), cf.r0).unwrap();
        prop_assert!(res.eigenvalues[3] >= -1e-8);
        prop_assert!(res.rank <= 2);
        prop_assert!(cf.constraint_slack() >= -1e-10);
        prop_assert!(cf.u >= cf.v);
    }

    #[test]
    fn canonical_parameters_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cf = random_canonical(&mut rng, 1.0, 1.0);
        prop_assume!(cf.r0 > 1e-3 && cf.u + cf.v > 1e-3);
        let want = if cf.u < cf.v { swap_residual_blocks(&cf) } else { cf };
        let sf = reduce_to_standard_form(&build_v0(&cf)).unwrap();
        let got = canonical_reduce(&sf.params).unwrap().form;
        for (a, b) in [(got.r0, want.r0), (got.theta0, want.theta0), (got.u, want.u), (got.v, want.v)] {
            prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", got, want);
        }
    }

    #[test]
    fn transport_composes(seed in any::<u64>(), a in 0.0f64..0.6, b in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cf = random_canonical(&mut rng, 1.0, 1.0);
        let twice = squeeze_transport(&squeeze_transport(&cf, a).unwrap(), b).unwrap();
        let once = squeeze_transport(&cf, a + b).unwrap();
        prop_assert!((twice.r0 - once.r0).abs() < 1e-12);
        prop_assert!((twice.theta0 - once.theta0).abs() < 1e-10);
        prop_assert!((twice.u - once.u).abs() < 1e-10 * (1.0 + once.u));
        prop_assert!((twice.v - once.v).abs() < 1e-10 * (1.0 + once.v));
        prop_assert!(twice.constraint_slack() >= -1e-10);
    }

    #[test]
    fn squeezing_entanglement_inverse(r in 0.0f64..3.0) {
        let e = entanglement_of_squeezing(r);
        let back = squeezing_of_entanglement(e).unwrap();
        prop_assert!((back - r).abs() < 1e-9 * (1.0 + r));
        prop_assert!(theta_dual(r) <= FRAC_PI_4);
    }

    #[test]
    fn entanglement_invariant_under_local_unitaries(seed in any::<u64>(), r in 0.0f64..0.8) {
        let dim = 10;
        let state = tmsv_state(r, 60).resized(dim);
        let (ua, ub) = (unitary(seed, dim), unitary(seed ^ 1, dim));
        let moved = FockStateMatrix::new(&ua * &state.psi * ub.transpose()).unwrap();
        let (a, b) = (entanglement_entropy(&state).ebits(), entanglement_entropy(&moved).ebits());
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn operator_matches_covariance_path(r in 0.0f64..0.7, theta in 0.05f64..FRAC_PI_4, x in -0.6f64..0.6, p in -0.6f64..0.6) {
        let xi = [x, p, -0.5 * p, 0.3 * x];
        let state = apply_displacement(&tmsv_state(r, 60), xi, 20).unwrap();
        let v = CovMat4::tmsv(r).with_mean(Vec4::from(xi));
        prop_assert!((lambda_expectation(theta, &state) - lambda_theta_moments(&v, theta)).abs() < 1e-7);
    }

    #[test]
    fn numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn ensemble_sampling_is_reproducible(seed in any::<u64>()) {
        let spec = make_ensemble(&CanonicalForm::new(0.3, 0.6, 0.4, 0.2).unwrap()).unwrap();
        let a = sample(&spec, 70_000, seed);
        let b = sample(&spec, 70_000, seed);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|x| x.iter().all(|c| c.is_finite())));
    }
}

#[test]
fn spectral_floor_decreases_with_truncation() {
    for theta in [0.2, 0.5, FRAC_PI_4] {
        let seq: Vec<f64> = [4, 8, 16, 32].iter().map(|&n| min_eig_lambda(theta, n).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{seq:?}");
        assert!(seq.iter().all(|&x| x >= (2.0 * theta).cos() - 1e-12));
    }
}
