//! Randomized oracle checks on small instances.

use ndarray::Array2;
use owlscreen::duality::{certify, max_constraint_violation};
use owlscreen::loss::{loss_gradient, primal_loss};
use owlscreen::penalty::{group_owl_prox, pava_nonincreasing, row_norms};
use owlscreen::{
    oracle, oscar_weights, solve_apgd, solve_spgd, synth_correlated, ApgdConfig, LossKind, OscarSpec, ProblemData,
    ScreeningConfig, SpgdConfig, SyntheticSpec, Warmup, WeightVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::args::{Fault, VerifyArgs};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub instances: usize,
    /// Seed and message of the first failing instance.
    pub failure: Option<(u64, String)>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn line(&self) -> String {
        match &self.failure {
            None => format!("PASS {} ({} instances)", self.name, self.instances),
            Some((seed, msg)) => format!("FAIL {}: {msg} (seed {seed})", self.name),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

fn random_weights(rng: &mut ChaCha8Rng, d: usize) -> WeightVector {
    let mut v: Vec<f64> = (0..d).map(|_| normal(rng).abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    WeightVector::new(v).unwrap()
}

fn run_check(
    name: &'static str,
    count: usize,
    base: u64,
    mut one: impl FnMut(u64) -> Result<(), String>,
) -> Check {
    let failure = (0..count as u64)
        .map(|k| base.wrapping_add(k))
        .find_map(|seed| one(seed).err().map(|m| (seed, m)));
    Check {
        name,
        instances: count,
        failure,
    }
}

fn prox_instance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=6);
    let q = rng.random_range(1..=3);
    let t = rng.random_range(0.1..2.0);
    let b = Array2::from_shape_simple_fn((d, q), || 2.0 * normal(&mut rng));
    let w = random_weights(&mut rng, d);
    let fast = group_owl_prox(b.view(), &w, t).map_err(|e| e.to_string())?;
    let slow = oracle::group_owl_prox(b.view(), &w, t);
    let f_fast = oracle::group_prox_objective(fast.view(), b.view(), &w, t);
    let f_slow = oracle::group_prox_objective(slow.view(), b.view(), &w, t);
    let dist = (&fast - &slow).iter().map(|v| v * v).sum::<f64>().sqrt();
    if f_fast > f_slow + 1e-6 || dist > 1e-5 {
        return Err(format!("objective {f_fast} vs {f_slow}, distance {dist}"));
    }
    Ok(())
}

fn pava_instance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=8);
    let z: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
    let fast = pava_nonincreasing(&z).map_err(|e| e.to_string())?;
    let slow = oracle::isotonic_nonincreasing(&z);
    match fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) {
        e if e <= 1e-10 => Ok(()),
        e => Err(format!("max deviation {e}")),
    }
}

fn small_problem(rng: &mut ChaCha8Rng, kind: LossKind) -> ProblemData {
    let (n, d, q) = (rng.random_range(3..=8), rng.random_range(2..=6), rng.random_range(2..=4));
    let x = Array2::from_shape_simple_fn((n, d), || normal(rng));
    let y = match kind {
        LossKind::Squared => Array2::from_shape_simple_fn((n, q), || normal(rng)),
        LossKind::Multinomial => {
            let mut y = Array2::zeros((n, q));
            for i in 0..n {
                y[[i, rng.random_range(0..q)]] = 1.0;
            }
            y
        }
    };
    ProblemData::new(owlscreen::Design::Dense(x), y, kind).unwrap()
}

fn gradient_instance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for kind in [LossKind::Squared, LossKind::Multinomial] {
        let data = small_problem(&mut rng, kind);
        let b = Array2::from_shape_simple_fn((data.n_features(), data.n_tasks()), || 0.5 * normal(&mut rng));
        let g = loss_gradient(&data, b.view()).map_err(|e| e.to_string())?;
        let h = 1e-5;
        let mut fd = Array2::zeros(b.raw_dim());
        for idx in ndarray::indices(b.raw_dim()) {
            let (mut up, mut down) = (b.clone(), b.clone());
            up[idx] += h;
            down[idx] -= h;
            let f = |m: &Array2<f64>| primal_loss(&data, m.view()).unwrap();
            fd[idx] = (f(&up) - f(&down)) / (2.0 * h);
        }
        let err = (&g - &fd).iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        if err / scale > 1e-5 {
            return Err(format!("{kind}: relative error {}", err / scale));
        }
    }
    Ok(())
}

fn certificate_instance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for kind in [LossKind::Squared, LossKind::Multinomial] {
        let data = small_problem(&mut rng, kind);
        let w = random_weights(&mut rng, data.n_features());
        for _ in 0..5 {
            let b = Array2::from_shape_simple_fn((data.n_features(), data.n_tasks()), || normal(&mut rng));
            let point = certify(&data, b.view(), &w).map_err(|e| e.to_string())?;
            if point.certificate.gap < -1e-10 {
                return Err(format!("{kind}: negative gap {}", point.certificate.gap));
            }
            let slack = -max_constraint_violation(&point.scores, &w);
            if slack < -1e-12 {
                return Err(format!("{kind}: constraint slack {slack}"));
            }
        }
        let sol = solve_apgd(&data, &w, &ApgdConfig::default()).map_err(|e| e.to_string())?;
        if let Some(r) = sol.trace.rows.iter().find(|r| r.gap < -1e-10) {
            return Err(format!("{kind}: gap {} at iteration {}", r.gap, r.iteration));
        }
    }
    Ok(())
}

/// Screened features must be zero rows of an unscreened high-precision
/// solve; screened and unscreened objectives must agree.
fn screening_instance(seed: u64, d: usize, fault: Option<Fault>) -> (Result<(), String>, Result<(), String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = if seed.is_multiple_of(2) {
        LossKind::Squared
    } else {
        LossKind::Multinomial
    };
    let spec = SyntheticSpec {
        n: 30,
        d,
        q: 3,
        support_size: 6,
        group_count: 3,
        rho: rng.random_range(0.0..0.8),
        noise_sigma: 0.3,
        seed,
    };
    let data = match synth_correlated(&spec, kind) {
        Ok(p) => p.dataset.data,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let factor = rng.random_range(0.08..0.3);
    let w = oscar_weights(d, &OscarSpec::DataDriven { factor }, Some(&data)).unwrap();
    let precise = ApgdConfig {
        gap_tolerance: 1e-10,
        ..Default::default()
    };
    let reference = match solve_apgd(&data, &w, &precise.clone().without_screening()) {
        Ok(s) => s,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let norms = row_norms(reference.coefficients.view());
    let screening = match fault {
        Some(Fault::SkipScaling) => ScreeningConfig {
            warmup: Warmup::Iterations(0),
            dual_scaling: false,
            ..Default::default()
        },
        None => ScreeningConfig::default(),
    };
    let apgd = solve_apgd(&data, &w, &ApgdConfig { screening, ..precise.clone() });
    let spgd = solve_spgd(
        &data,
        &w,
        &SpgdConfig {
            batch_size: 10,
            gap_tolerance: 1e-10,
            seed,
            screening,
            ..Default::default()
        },
    );
    let (apgd, spgd) = match (apgd, spgd) {
        (Ok(a), Ok(s)) => (a, s),
        (Err(e), _) | (_, Err(e)) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let mut safety = Ok(());
    let mut equivalence = Ok(());
    for (name, run) in [("apgd", &apgd), ("spgd", &spgd)] {
        if let Some(&i) = run.screened().iter().find(|&&i| norms[i] > 1e-8) {
            safety = Err(format!("{name} screened feature {i} with reference norm {:e}", norms[i]));
        }
        let diff = (run.objective - reference.objective).abs();
        if diff > 1e-8 {
            equivalence = Err(format!("{name} objective differs by {diff:e}"));
        }
    }
    (safety, equivalence)
}

pub fn run(args: &VerifyArgs) -> Vec<Check> {
    let (light, screens, d) = if args.quick { (50, 6, 50) } else { (200, 20, 100) };
    let base = args.seed;
    let mut checks = vec![
        run_check("prox_brute_force", light, base, prox_instance),
        run_check("pava_enumeration", light, base, pava_instance),
        run_check("gradient_finite_differences", light / 10, base, gradient_instance),
        run_check("gap_nonnegative_and_feasible", light / 10, base, certificate_instance),
    ];
    let mut equivalence: Option<(u64, String)> = None;
    let safety = run_check("screening_safety", screens, base, |seed| {
        let (safe, same) = screening_instance(seed, d, args.fault);
        if let (Err(m), None) = (same, &equivalence) {
            equivalence = Some((seed, m));
        }
        safe
    });
    checks.push(safety);
    checks.push(Check {
        name: "screening_equivalence",
        instances: screens,
        failure: equivalence,
    });
    checks
}
