//! Variance-reduced stochastic proximal gradient with dynamic screening.
//!
//! The outer loop takes a snapshot `B` with its full gradient `ṽ = ∇F(B)`,
//! certifies and screens, then runs `T` inner steps
//! `v = (∇F_I(B̃) − ∇F_I(B)) / l + ṽ`, `B̃ ← prox_γ(B̃ − γ v)` on mini-batches
//! of `l` samples drawn uniformly with replacement.

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{gradient_step_constant, minibatch_gradient_difference, ProblemData};
use crate::penalty::{group_owl_prox, WeightVector};
use crate::solver::{all_finite, check_tolerance, ActiveProblem, RestartRecord, ScreeningConfig, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpgdConfig {
    pub batch_size: usize,
    pub inner_iterations: usize,
    /// Defaults to `1/(10·L_F)`.
    pub step_size: Option<f64>,
    pub max_outer: usize,
    pub gap_tolerance: f64,
    pub seed: u64,
    pub screening: ScreeningConfig,
}

impl Default for SpgdConfig {
    fn default() -> Self {
        SpgdConfig {
            batch_size: 32,
            inner_iterations: 10,
            step_size: None,
            max_outer: 100_000,
            gap_tolerance: 1e-6,
            seed: 0,
            screening: ScreeningConfig::default(),
        }
    }
}

impl SpgdConfig {
    pub fn without_screening(mut self) -> Self {
        self.screening.enabled = false;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        check_tolerance(self.gap_tolerance)?;
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::InvalidArgument(format!(
                "batch size {} outside 1..={n}",
                self.batch_size
            )));
        }
        if self.inner_iterations == 0 {
            return Err(Error::InvalidArgument("inner iterations must be at least 1".into()));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0) {
                return Err(Error::InvalidArgument(format!("step size must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Draws a mini-batch of `size` sample indices uniformly with replacement.
pub fn draw_batch<R: Rng>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    (0..size).map(|_| rng.random_range(0..n)).collect()
}

/// The inner-loop direction `v = (∇F_I(B̃) − ∇F_I(B)) / l + ṽ`.
pub fn stochastic_direction(
    data: &ProblemData,
    current: &Array2<f64>,
    snapshot: &Array2<f64>,
    snapshot_gradient: &Array2<f64>,
    batch: &[usize],
) -> Result<Array2<f64>> {
    data.check_coef(current.view())?;
    data.check_coef(snapshot.view())?;
    crate::loss::check_batch(data, batch)?;
    let mut v = minibatch_gradient_difference(data, current.view(), snapshot.view(), batch);
    let inv = 1.0 / batch.len() as f64;
    Zip::from(&mut v).and(snapshot_gradient).for_each(|x, &g| *x = *x * inv + g);
    Ok(v)
}

pub fn solve_spgd(data: &ProblemData, w: &WeightVector, config: &SpgdConfig) -> Result<Solution> {
    config.validate(data.n_samples())?;
    let step = match config.step_size {
        Some(s) => s,
        None => 1.0 / (10.0 * gradient_step_constant(data)?),
    };
    let mut problem = ActiveProblem::new(data, w, config.screening)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = data.n_samples();
    let l = config.batch_size;

    let mut b = Array2::<f64>::zeros((data.n_features(), data.n_tasks()));
    let mut outer = 0usize;
    let mut eval = problem.evaluate(b.view(), Array2::zeros((n, data.n_tasks())), 0)?;

    loop {
        if eval.dual.certificate.gap <= config.gap_tolerance || outer >= config.max_outer {
            problem.record(outer, &eval.dual);
            break;
        }
        if let Some(kept) = problem.screen(&eval, outer)? {
            let before = eval.dual.certificate.primal_value;
            b = problem.restrict(b.view(), &kept)?;
            let xb = problem.data.design().dot(b.view());
            eval = problem.evaluate(b.view(), xb, outer)?;
            problem.restarts.push(RestartRecord {
                iteration: outer,
                objective_before: before,
                objective_after: eval.dual.certificate.primal_value,
            });
            if eval.dual.certificate.gap <= config.gap_tolerance {
                problem.record(outer, &eval.dual);
                break;
            }
        }
        problem.record(outer, &eval.dual);

        // snapshot B and its full gradient ṽ
        let snapshot = b;
        let full_gradient = &eval.gradient;
        let mut inner = snapshot.clone();
        for _ in 0..config.inner_iterations {
            let batch = draw_batch(&mut rng, n, l);
            let mut forward = minibatch_gradient_difference(&problem.data, inner.view(), snapshot.view(), &batch);
            let scale = step / l as f64;
            Zip::from(&mut forward)
                .and(&inner)
                .and(full_gradient)
                .for_each(|v, &x, &g| *v = x - scale * *v - step * g);
            inner = group_owl_prox(forward.view(), &problem.weights, step)?;
        }
        if !all_finite(&inner) {
            return Err(Error::Diverged(outer));
        }
        b = inner;
        outer += 1;
        let xb = problem.data.design().dot(b.view());
        eval = problem.evaluate(b.view(), xb, outer)?;
    }

    let dual = eval.dual.clone();
    problem.finish(b.view(), outer, &dual, config.gap_tolerance)
}
