//! Pieces shared by the batch and stochastic solvers: warm-up policy, trace
//! records, the compact active problem, and the returned solution.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::duality::{certify_from_parts, DualPoint, DualScores, GapCertificate};
use crate::error::{Error, Result};
use crate::loss::{value_and_dual, ProblemData};
use crate::penalty::WeightVector;
use crate::screening::{expand, restrict, screening_fixpoint, ActiveSet, ScreeningEvent};

/// When screening may start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Warmup {
    /// Skip screening for this many iterations.
    Iterations(usize),
    /// Skip screening until the gap falls below this absolute value.
    GapBelow(f64),
    /// Whichever comes first: `iterations` elapsed, or the gap falls below
    /// `primal_fraction` times the primal value at the starting point.
    FirstOf {
        iterations: usize,
        primal_fraction: f64,
    },
}

impl Default for Warmup {
    fn default() -> Self {
        Warmup::FirstOf {
            iterations: 10,
            primal_fraction: 0.1,
        }
    }
}

impl Warmup {
    fn is_over(&self, iterations: usize, gap: f64, initial_primal: f64) -> bool {
        match *self {
            Warmup::Iterations(k) => iterations >= k,
            Warmup::GapBelow(g) => gap <= g,
            Warmup::FirstOf {
                iterations: k,
                primal_fraction,
            } => iterations >= k || gap <= primal_fraction * initial_primal,
        }
    }
}

/// One gap evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub wall_time_s: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// Active features after any screening at this iteration.
    pub active_count: usize,
    pub screened_cumulative: usize,
    /// Filled in once the inactive count at the optimum is known.
    pub screening_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    /// Sets `screening_rate = screened / inactive_at_optimum` on every row
    /// (1 when the optimum has no inactive feature).
    pub fn backfill_screening_rate(&mut self, inactive_at_optimum: usize) {
        for row in &mut self.rows {
            row.screening_rate = Some(if inactive_at_optimum == 0 {
                1.0
            } else {
                (row.screened_cumulative as f64 / inactive_at_optimum as f64).min(1.0)
            });
        }
    }
}

/// Objective just before and just after a screening-triggered restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub iteration: usize,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    /// Full `d × q` coefficients; screened rows are zero.
    pub coefficients: Array2<f64>,
    pub iterations: usize,
    pub final_gap: f64,
    pub objective: f64,
    /// False when the iteration cap stopped the run first.
    pub converged: bool,
    pub trace: SolverTrace,
    /// Non-empty screening events in order.
    pub active_history: Vec<ScreeningEvent>,
    pub restarts: Vec<RestartRecord>,
    pub final_active: Vec<usize>,
}

impl Solution {
    /// Original ids of rows with nonzero norm.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        self.coefficients
            .outer_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Every feature id ever screened.
    pub fn screened(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .active_history
            .iter()
            .flat_map(|e| e.removed.iter().copied())
            .collect();
        ids.sort_unstable();
        ids
    }
}

/// Screening options common to both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub enabled: bool,
    pub warmup: Warmup,
    pub every: usize,
    /// Scale the dual candidate into the feasible set before the screening
    /// test. Stopping always uses the scaled certificate.
    /// Turning this off breaks safety; it exists for negative-control tests.
    pub dual_scaling: bool,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            enabled: true,
            warmup: Warmup::default(),
            every: 1,
            dual_scaling: true,
        }
    }
}

impl ScreeningConfig {
    pub fn disabled() -> Self {
        ScreeningConfig {
            enabled: false,
            ..Default::default()
        }
    }
}

/// Dual evaluation at the current iterate of the compact problem.
pub(crate) struct Evaluation {
    pub scores_xb: Array2<f64>,
    pub gradient: Array2<f64>,
    pub dual: DualPoint,
    /// Unscaled point used by the screening test when scaling is disabled.
    pub unscaled: Option<DualPoint>,
}

/// The compact problem over the active features plus run bookkeeping.
pub(crate) struct ActiveProblem<'a> {
    full: &'a ProblemData,
    pub data: ProblemData,
    pub weights: WeightVector,
    pub active: ActiveSet,
    screening: ScreeningConfig,
    warm: bool,
    initial_primal: Option<f64>,
    screened: usize,
    pub events: Vec<ScreeningEvent>,
    pub trace: SolverTrace,
    pub restarts: Vec<RestartRecord>,
    start: Instant,
}

impl<'a> ActiveProblem<'a> {
    pub fn new(full: &'a ProblemData, w: &WeightVector, screening: ScreeningConfig) -> Result<Self> {
        if w.len() != full.n_features() {
            return Err(Error::dims(format!(
                "{} weights for {} features",
                w.len(),
                full.n_features()
            )));
        }
        if screening.every == 0 {
            return Err(Error::InvalidArgument("screen_every must be at least 1".into()));
        }
        Ok(ActiveProblem {
            full,
            data: full.clone(),
            weights: w.clone(),
            active: ActiveSet::full(full),
            screening,
            warm: false,
            initial_primal: None,
            screened: 0,
            events: Vec::new(),
            trace: SolverTrace::default(),
            restarts: Vec::new(),
            start: Instant::now(),
        })
    }

    /// Loss gradient and certified dual point at `b`, given `X_A b`.
    pub fn evaluate(&self, b: ArrayView2<f64>, xb: Array2<f64>, iteration: usize) -> Result<Evaluation> {
        let (value, theta_raw) = value_and_dual(self.data.kind(), xb.view(), self.data.targets());
        if !value.is_finite() {
            return Err(Error::Diverged(iteration));
        }
        let gradient = self.data.design().t_dot(theta_raw.view());
        if self.weights.as_slice().iter().all(|&l| l == 0.0) {
            return Ok(Evaluation {
                dual: stationarity_point(value, theta_raw, &gradient),
                scores_xb: xb,
                gradient,
                unscaled: None,
            });
        }
        let dual = certify_from_parts(&self.data, b, value, &theta_raw, gradient.view(), &self.weights, true)?;
        let unscaled = if self.screening.dual_scaling {
            None
        } else {
            Some(certify_from_parts(&self.data, b, value, &theta_raw, gradient.view(), &self.weights, false)?)
        };
        Ok(Evaluation {
            scores_xb: xb,
            gradient,
            dual,
            unscaled,
        })
    }

    /// Runs the screening fixpoint if due. Returns the kept positions when
    /// the active set shrank.
    pub fn screen(&mut self, eval: &Evaluation, iteration: usize) -> Result<Option<Vec<usize>>> {
        let cert = &eval.dual.certificate;
        let initial = *self.initial_primal.get_or_insert(cert.primal_value);
        if !self.screening.enabled {
            return Ok(None);
        }
        if !self.warm {
            self.warm = self.screening.warmup.is_over(iteration, cert.gap, initial);
            if !self.warm {
                return Ok(None);
            }
        }
        if !iteration.is_multiple_of(self.screening.every) || self.active.is_empty() {
            return Ok(None);
        }
        let tested = eval.unscaled.as_ref().unwrap_or(&eval.dual);
        let outcome = screening_fixpoint(
            &tested.scores,
            &tested.certificate,
            &self.active,
            &self.weights,
            iteration,
        )?;
        if !outcome.changed() {
            return Ok(None);
        }
        for e in outcome.events {
            self.screened += e.removed.len();
            self.events.push(e);
        }
        self.active = outcome.active;
        Ok(Some(outcome.kept_positions))
    }

    /// Drops screened columns from the compact problem and returns `b`
    /// restricted accordingly.
    pub fn restrict(&mut self, b: ArrayView2<f64>, kept: &[usize]) -> Result<Array2<f64>> {
        let (data, b_compact, weights) = restrict(&self.data, b, &self.weights, kept)?;
        self.data = data;
        self.weights = weights;
        Ok(b_compact)
    }

    pub fn record(&mut self, iteration: usize, dual: &DualPoint) {
        let c = &dual.certificate;
        self.trace.rows.push(TraceRow {
            iteration,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            primal: c.primal_value,
            dual: c.dual_value,
            gap: c.gap,
            active_count: self.active.len(),
            screened_cumulative: self.screened,
            screening_rate: None,
        });
    }

    pub fn finish(self, b: ArrayView2<f64>, iterations: usize, last: &DualPoint, tolerance: f64) -> Result<Solution> {
        let coefficients = expand(b, &self.active, self.full.n_features())?;
        Ok(Solution {
            coefficients,
            iterations,
            final_gap: last.certificate.gap,
            objective: last.certificate.primal_value,
            converged: last.certificate.gap <= tolerance,
            trace: self.trace,
            active_history: self.events,
            restarts: self.restarts,
            final_active: self.active.original_indices().to_vec(),
        })
    }
}

/// Unpenalized problems have no scalable dual point; the reported gap is
/// the stationarity residual `‖XᵀΘ‖_F` and nothing can be screened.
fn stationarity_point(value: f64, theta: Array2<f64>, gradient: &Array2<f64>) -> DualPoint {
    let residual = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    DualPoint {
        theta,
        scores: DualScores::from_correlations(gradient.view()),
        certificate: GapCertificate {
            primal_value: value,
            dual_value: value - residual,
            gap: residual,
            radius: f64::INFINITY,
            scale: 1.0,
        },
    }
}

pub(crate) fn check_tolerance(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

pub(crate) fn all_finite(a: &Array2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}
