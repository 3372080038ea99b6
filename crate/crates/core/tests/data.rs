use ndarray::Axis;
use owlscreen::data::max_feature_correlation;
use owlscreen::loss::primal_loss;
use owlscreen::penalty::group_owl_norm;
use owlscreen::*;

fn correlation(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn mean_within_group_correlation(rho: f64, seed: u64) -> f64 {
    let spec = SyntheticSpec {
        n: 400,
        d: 40,
        q: 2,
        support_size: 12,
        group_count: 3,
        rho,
        noise_sigma: 0.1,
        seed,
    };
    let p = synth_correlated(&spec, LossKind::Squared).unwrap();
    let x = p.dataset.data.design().to_dense();
    let mut total = 0.0;
    let mut count = 0;
    for a in 0..p.support.len() {
        for b in a + 1..p.support.len() {
            if p.groups[a] == p.groups[b] {
                total += correlation(x.column(p.support[a]), x.column(p.support[b]));
                count += 1;
            }
        }
    }
    total / count as f64
}

#[test]
fn uncorrelated_groups_have_small_correlation() {
    let avg: f64 = (0..5).map(|s| mean_within_group_correlation(0.0, s)).sum::<f64>() / 5.0;
    assert!(avg.abs() < 0.1, "{avg}");
}

#[test]
fn correlated_groups_reach_the_target_correlation() {
    let avg: f64 = (0..5).map(|s| mean_within_group_correlation(0.7, s)).sum::<f64>() / 5.0;
    assert!((avg - 0.7).abs() < 0.1, "{avg}");
}

#[test]
fn noiseless_regression_has_zero_loss_at_truth() {
    let spec = SyntheticSpec {
        noise_sigma: 0.0,
        d: 50,
        ..Default::default()
    };
    let p = synth_correlated(&spec, LossKind::Squared).unwrap();
    let data = &p.dataset.data;
    let w = oscar_weights(50, &OscarSpec::Explicit { alpha1: 1.0, alpha2: 0.1 }, None).unwrap();
    let loss = primal_loss(data, p.coefficients.view()).unwrap();
    let penalty = group_owl_norm(p.coefficients.view(), &w).unwrap();
    assert!(loss.abs() < 1e-20 * penalty.max(1.0) + 1e-20);
}

#[test]
fn truth_rows_share_norms_within_groups() {
    let p = synth_correlated(&SyntheticSpec::default(), LossKind::Squared).unwrap();
    for (a, &ia) in p.support.iter().enumerate() {
        for (b, &ib) in p.support.iter().enumerate() {
            if p.groups[a] == p.groups[b] {
                assert_eq!(p.coefficients.row(ia), p.coefficients.row(ib));
            }
        }
    }
    let nz: Vec<usize> = p
        .coefficients
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(nz, p.support);
}

#[test]
fn synthesis_is_deterministic() {
    for kind in [LossKind::Squared, LossKind::Multinomial] {
        let spec = SyntheticSpec { seed: 42, ..Default::default() };
        let a = synth_correlated(&spec, kind).unwrap();
        let b = synth_correlated(&spec, kind).unwrap();
        assert_eq!(a.dataset.data.design().to_dense(), b.dataset.data.design().to_dense());
        assert_eq!(a.dataset.data.targets(), b.dataset.data.targets());
    }
}

#[test]
fn multinomial_targets_are_one_hot() {
    let p = synth_correlated(&SyntheticSpec::default(), LossKind::Multinomial).unwrap();
    for row in p.dataset.data.targets().axis_iter(Axis(0)) {
        assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(row.sum(), 1.0);
    }
}

#[test]
fn data_driven_weights_use_the_dense_correlation() {
    let p = synth_correlated(&SyntheticSpec { d: 200, ..Default::default() }, LossKind::Squared).unwrap();
    let data = &p.dataset.data;
    let x = data.design().to_dense();
    let y = data.targets();
    // dense column-by-column oracle
    let mut best: f64 = 0.0;
    for i in 0..x.ncols() {
        let c = x.column(i);
        let norm = (0..y.ncols())
            .map(|k| c.iter().zip(y.column(k)).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        best = best.max(norm);
    }
    assert!((max_feature_correlation(data) - best).abs() <= 1e-10 * best.max(1.0));
    let w = oscar_weights(200, &OscarSpec::sparsity_index(2, 1.0), Some(data)).unwrap();
    let a1 = 2.0 * (-1.0f64).exp() * best;
    assert!((w.as_slice()[199] - a1).abs() <= 1e-10 * a1);
    assert!((w.as_slice()[0] - (a1 + a1 / 200.0 * 199.0)).abs() <= 1e-10 * a1);
}

#[test]
fn oscar_examples() {
    let w = oscar_weights(4, &OscarSpec::Explicit { alpha1: 2.0, alpha2: 0.5 }, None).unwrap();
    assert_eq!(w.as_slice(), &[3.5, 3.0, 2.5, 2.0]);
    let w = oscar_weights(3, &OscarSpec::Explicit { alpha1: 1.5, alpha2: 0.0 }, None).unwrap();
    assert_eq!(w.as_slice(), &[1.5; 3]);
    assert!(oscar_weights(3, &OscarSpec::Explicit { alpha1: -1.0, alpha2: 0.0 }, None).is_err());
    assert!(oscar_weights(3, &OscarSpec::DataDriven { factor: 0.1 }, None).is_err());
}

#[test]
fn standardized_columns_have_squared_norm_n() {
    let p = synth_correlated(&SyntheticSpec { d: 30, ..Default::default() }, LossKind::Squared).unwrap();
    for &norm in p.dataset.data.feature_norms() {
        assert!((norm * norm - 100.0).abs() < 1e-9);
    }
}

#[test]
fn oversized_support_is_rejected() {
    let spec = SyntheticSpec { d: 5, support_size: 6, ..Default::default() };
    assert!(synth_correlated(&spec, LossKind::Squared).is_err());
}
