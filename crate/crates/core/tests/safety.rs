use owlscreen::oracle;
use owlscreen::penalty::{group_owl_prox, row_norms};
use owlscreen::*;
use proptest::prelude::*;

fn instance(n: usize, d: usize, kind: LossKind, seed: u64, factor: f64) -> (ProblemData, WeightVector) {
    let spec = SyntheticSpec {
        n,
        d,
        q: 2,
        support_size: 6,
        group_count: 3,
        rho: 0.6,
        noise_sigma: 0.3,
        seed,
    };
    let data = synth_correlated(&spec, kind).unwrap().dataset.data;
    let w = oscar_weights(d, &OscarSpec::DataDriven { factor }, Some(&data)).unwrap();
    (data, w)
}

#[test]
fn screened_features_are_zero_in_the_reference() {
    for kind in [LossKind::Squared, LossKind::Multinomial] {
        for seed in 0..6 {
            let (data, w) = instance(30, 80, kind, seed, 0.1 + 0.03 * seed as f64);
            let reference = solve_apgd(
                &data,
                &w,
                &ApgdConfig {
                    gap_tolerance: 1e-10,
                    ..Default::default()
                }
                .without_screening(),
            )
            .unwrap();
            assert!(reference.converged);
            let norms = row_norms(reference.coefficients.view());
            let runs = [
                solve_apgd(&data, &w, &ApgdConfig::default()).unwrap(),
                solve_spgd(&data, &w, &SpgdConfig { batch_size: 10, seed, ..Default::default() }).unwrap(),
            ];
            for run in runs {
                for i in run.screened() {
                    assert!(norms[i] <= 1e-8, "feature {i} screened but has norm {}", norms[i]);
                }
            }
        }
    }
}

#[test]
fn unscaled_dual_breaks_safety() {
    // without the feasibility scaling the radius test can discard support
    // features; some instance in a small sweep must show it
    let mut violations = 0;
    for seed in 0..10 {
        let (data, w) = instance(30, 80, LossKind::Squared, seed, 0.15);
        let cfg = ApgdConfig {
            screening: ScreeningConfig {
                warmup: Warmup::Iterations(0),
                dual_scaling: false,
                ..Default::default()
            },
            max_iterations: 2000,
            ..Default::default()
        };
        let reference = solve_apgd(
            &data,
            &w,
            &ApgdConfig {
                gap_tolerance: 1e-10,
                ..Default::default()
            }
            .without_screening(),
        )
        .unwrap();
        let norms = row_norms(reference.coefficients.view());
        if let Ok(run) = solve_apgd(&data, &w, &cfg) {
            violations += run.screened().iter().filter(|&&i| norms[i] > 1e-8).count();
        }
    }
    assert!(violations > 0);
}

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2.0f64, max_len).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_prox_matches_brute_force(
        d in 1usize..=5,
        q in 1usize..=3,
        seed in any::<u64>(),
        t in 0.1..2.0f64,
    ) {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = ndarray::Array2::from_shape_simple_fn((d, q), || 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let mut lam: Vec<f64> = (0..d).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng).abs()).collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let w = WeightVector::new(lam).unwrap();
        let fast = group_owl_prox(b.view(), &w, t).unwrap();
        let slow = oracle::group_owl_prox(b.view(), &w, t);
        let f_fast = oracle::group_prox_objective(fast.view(), b.view(), &w, t);
        let f_slow = oracle::group_prox_objective(slow.view(), b.view(), &w, t);
        prop_assert!(f_fast <= f_slow + 1e-6);
        prop_assert!((&fast - &slow).iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-5);
    }

    #[test]
    fn vector_prox_matches_brute_force(
        v in prop::collection::vec(-3.0..3.0f64, 1..=6),
        lam in weights(6),
        t in 0.1..2.0f64,
    ) {
        let w = WeightVector::new(lam[..v.len()].to_vec()).unwrap();
        let fast = owlscreen::penalty::owl_prox(&v, &w, t).unwrap();
        let slow = oracle::owl_prox(&v, &w, t);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
