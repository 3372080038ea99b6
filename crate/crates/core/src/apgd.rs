//! Accelerated proximal gradient descent with dynamic screening.
//!
//! Each iteration certifies the current iterate, screens, and on an
//! active-set change restarts the momentum from the restricted iterate.
//! The gradient/prox step is the constant `1/L_F`; the momentum scalar
//! follows `t_{k+1} = (1 + √(1 + 4t_k²)) / 2`.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{gradient_step_constant, value_and_dual, LossKind, ProblemData};
use crate::penalty::{group_owl_prox, WeightVector};
use crate::solver::{all_finite, check_tolerance, ActiveProblem, RestartRecord, ScreeningConfig, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApgdConfig {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub screening: ScreeningConfig,
    /// Replaces `1/L_F` when set.
    pub step_size: Option<f64>,
}

impl Default for ApgdConfig {
    fn default() -> Self {
        ApgdConfig {
            max_iterations: 100_000,
            gap_tolerance: 1e-6,
            screening: ScreeningConfig::default(),
            step_size: None,
        }
    }
}

impl ApgdConfig {
    pub fn without_screening(mut self) -> Self {
        self.screening.enabled = false;
        self
    }
}

pub fn solve_apgd(data: &ProblemData, w: &WeightVector, config: &ApgdConfig) -> Result<Solution> {
    check_tolerance(config.gap_tolerance)?;
    let step = match config.step_size {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {s}")))
        }
        None => 1.0 / gradient_step_constant(data)?,
    };
    let mut problem = ActiveProblem::new(data, w, config.screening)?;
    let q = data.n_tasks();

    let mut b = Array2::<f64>::zeros((data.n_features(), q));
    let mut b_prev = b.clone();
    let mut xb_prev = Array2::<f64>::zeros((data.n_samples(), q));
    let mut grad_prev = b.clone();
    let mut t = 1.0_f64;
    let mut beta = 0.0_f64;
    let mut iterations = 0usize;
    let mut eval = problem.evaluate(b.view(), xb_prev.clone(), 0)?;

    loop {
        let gap = eval.dual.certificate.gap;
        if gap <= config.gap_tolerance || iterations >= config.max_iterations {
            problem.record(iterations, &eval.dual);
            break;
        }
        if let Some(kept) = problem.screen(&eval, iterations)? {
            let before = eval.dual.certificate.primal_value;
            b = problem.restrict(b.view(), &kept)?;
            let xb = problem.data.design().dot(b.view());
            eval = problem.evaluate(b.view(), xb, iterations)?;
            problem.restarts.push(RestartRecord {
                iteration: iterations,
                objective_before: before,
                objective_after: eval.dual.certificate.primal_value,
            });
            // restart: B̂ = B, t = t₁
            b_prev = b.clone();
            t = 1.0;
            beta = 0.0;
            if eval.dual.certificate.gap <= config.gap_tolerance {
                problem.record(iterations, &eval.dual);
                break;
            }
        }
        problem.record(iterations, &eval.dual);

        let grad = &eval.gradient;
        let (b_hat, grad_hat) = if beta == 0.0 {
            (b.clone(), grad.clone())
        } else {
            let b_hat = &b + &((&b - &b_prev) * beta);
            let grad_hat = match problem.data.kind() {
                // ∇F is affine for the squared loss
                LossKind::Squared => grad + &((grad - &grad_prev) * beta),
                LossKind::Multinomial => {
                    let xb = &eval.scores_xb;
                    let xb_hat = xb + &((xb - &xb_prev) * beta);
                    let (_, theta) = value_and_dual(LossKind::Multinomial, xb_hat.view(), problem.data.targets());
                    problem.data.design().t_dot(theta.view())
                }
            };
            (b_hat, grad_hat)
        };

        let mut forward = b_hat;
        Zip::from(&mut forward).and(&grad_hat).for_each(|x, &g| *x -= step * g);
        let b_next = group_owl_prox(forward.view(), &problem.weights, step)?;
        if !all_finite(&b_next) {
            return Err(Error::Diverged(iterations));
        }
        let xb_next = problem.data.design().dot(b_next.view());

        b_prev = std::mem::replace(&mut b, b_next);
        iterations += 1;
        let next = problem.evaluate(b.view(), xb_next, iterations)?;
        let prev = std::mem::replace(&mut eval, next);
        xb_prev = prev.scores_xb;
        grad_prev = prev.gradient;

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        beta = (t - 1.0) / t_next;
        t = t_next;
    }

    let dual = eval.dual.clone();
    problem.finish(b.view(), iterations, &dual, config.gap_tolerance)
}
