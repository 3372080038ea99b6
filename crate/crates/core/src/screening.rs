//! Dynamic safe screening and active-set bookkeeping.
//!
//! A feature `i` is certified inactive when
//! `‖xᵢᵀΘ‖₂ + ‖xᵢ‖·r < λ_{|A|}` for a feasible dual point `Θ`, its safe
//! radius `r`, and the current active-set size `|A|`. Removing features
//! raises the threshold to a larger weight, so the test is repeated with the
//! same scores and radius until a sweep removes nothing.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::duality::{dual_scores, DualScores, GapCertificate};
use crate::error::{Error, Result};
use crate::loss::ProblemData;
use crate::penalty::WeightVector;

/// Surviving features of a run, as 0-based ids into the original problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    original_indices: Vec<usize>,
    feature_norms: Vec<f64>,
}

impl ActiveSet {
    /// All features of `data` active.
    pub fn full(data: &ProblemData) -> Self {
        ActiveSet {
            original_indices: (0..data.n_features()).collect(),
            feature_norms: data.feature_norms().to_vec(),
        }
    }

    pub fn new(original_indices: Vec<usize>, feature_norms: Vec<f64>) -> Result<Self> {
        if original_indices.len() != feature_norms.len() {
            return Err(Error::dims("indices and norms differ in length"));
        }
        if original_indices.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidArgument(
                "active indices must be strictly increasing".into(),
            ));
        }
        Ok(ActiveSet {
            original_indices,
            feature_norms,
        })
    }

    pub fn len(&self) -> usize {
        self.original_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original_indices.is_empty()
    }

    pub fn original_indices(&self) -> &[usize] {
        &self.original_indices
    }

    pub fn feature_norms(&self) -> &[f64] {
        &self.feature_norms
    }

    /// Keeps the listed positions (sorted, into this set).
    pub fn retain_positions(&self, positions: &[usize]) -> ActiveSet {
        ActiveSet {
            original_indices: positions.iter().map(|&p| self.original_indices[p]).collect(),
            feature_norms: positions.iter().map(|&p| self.feature_norms[p]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEvent {
    pub outer_iteration: usize,
    /// Original feature ids removed by this sweep.
    pub removed: Vec<usize>,
    pub active_after: usize,
    pub gap_at_test: f64,
}

fn sweep_positions(
    scores: &[f64],
    radius: f64,
    norms: &[f64],
    alive: &[usize],
    threshold: f64,
) -> Vec<usize> {
    alive
        .iter()
        .copied()
        .filter(|&p| scores[p] + norms[p] * radius < threshold)
        .collect()
}

/// One screening test against `λ_{|A|}`. Returns the original ids of the
/// features that pass; `scores` are aligned with the active positions.
pub fn screening_sweep(
    scores: &DualScores,
    radius: f64,
    active: &ActiveSet,
    w: &WeightVector,
) -> Result<Vec<usize>> {
    check_alignment(scores, active, w)?;
    if active.is_empty() {
        return Ok(Vec::new());
    }
    let alive: Vec<usize> = (0..active.len()).collect();
    let threshold = w.lambda(active.len());
    Ok(sweep_positions(
        scores.as_slice(),
        radius,
        &active.feature_norms,
        &alive,
        threshold,
    )
    .into_iter()
    .map(|p| active.original_indices[p])
    .collect())
}

fn check_alignment(scores: &DualScores, active: &ActiveSet, w: &WeightVector) -> Result<()> {
    if scores.len() != active.len() {
        return Err(Error::dims(format!(
            "{} scores for {} active features",
            scores.len(),
            active.len()
        )));
    }
    if w.len() < active.len() {
        return Err(Error::dims("fewer weights than active features"));
    }
    Ok(())
}

/// Result of repeating the screening test until the active set is stable.
#[derive(Debug, Clone)]
pub struct FixpointOutcome {
    pub active: ActiveSet,
    /// Positions (into the input active set) that survived.
    pub kept_positions: Vec<usize>,
    /// One event per non-empty sweep, or a single empty event if nothing
    /// was screened.
    pub events: Vec<ScreeningEvent>,
}

impl FixpointOutcome {
    pub fn changed(&self) -> bool {
        self.events.iter().any(|e| !e.removed.is_empty())
    }
}

/// Repeats [`screening_sweep`] with threshold `λ_{|A|}` for the shrinking
/// active set. Scores and radius stay fixed; only the threshold moves.
pub fn screening_fixpoint(
    scores: &DualScores,
    certificate: &GapCertificate,
    active: &ActiveSet,
    w: &WeightVector,
    outer_iteration: usize,
) -> Result<FixpointOutcome> {
    check_alignment(scores, active, w)?;
    let radius = certificate.radius;
    let mut alive: Vec<usize> = (0..active.len()).collect();
    let mut events = Vec::new();
    while !alive.is_empty() {
        let threshold = w.lambda(alive.len());
        let hit = sweep_positions(
            scores.as_slice(),
            radius,
            &active.feature_norms,
            &alive,
            threshold,
        );
        if hit.is_empty() {
            break;
        }
        alive.retain(|p| hit.binary_search(p).is_err());
        events.push(ScreeningEvent {
            outer_iteration,
            removed: hit.iter().map(|&p| active.original_indices[p]).collect(),
            active_after: alive.len(),
            gap_at_test: certificate.gap,
        });
    }
    if events.is_empty() {
        events.push(ScreeningEvent {
            outer_iteration,
            removed: Vec::new(),
            active_after: active.len(),
            gap_at_test: certificate.gap,
        });
    }
    Ok(FixpointOutcome {
        active: active.retain_positions(&alive),
        kept_positions: alive,
        events,
    })
}

/// [`screening_fixpoint`] with scores computed from the full problem and a
/// feasible dual point.
pub fn screening_fixpoint_for(
    data: &ProblemData,
    theta: ArrayView2<f64>,
    certificate: &GapCertificate,
    active: &ActiveSet,
    w: &WeightVector,
    outer_iteration: usize,
) -> Result<FixpointOutcome> {
    let scores = dual_scores(data, theta, active)?;
    screening_fixpoint(&scores, certificate, active, w, outer_iteration)
}

/// Compact problem over the kept positions: columns of `X`, rows of `B`,
/// and the `|kept|` largest weights.
pub fn restrict(
    data: &ProblemData,
    b: ArrayView2<f64>,
    w: &WeightVector,
    kept_positions: &[usize],
) -> Result<(ProblemData, Array2<f64>, WeightVector)> {
    data.check_coef(b)?;
    if let Some(&bad) = kept_positions.iter().find(|&&p| p >= data.n_features()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: data.n_features(),
        });
    }
    let compact = data.select_features(kept_positions);
    let b_compact = b.select(ndarray::Axis(0), kept_positions);
    Ok((compact, b_compact, w.truncated(kept_positions.len())))
}

/// Scatters compact rows back to their original ids; other rows are zero.
pub fn expand(b_compact: ArrayView2<f64>, active: &ActiveSet, d: usize) -> Result<Array2<f64>> {
    if b_compact.nrows() != active.len() {
        return Err(Error::dims(format!(
            "{} compact rows for {} active features",
            b_compact.nrows(),
            active.len()
        )));
    }
    let mut out = Array2::zeros((d, b_compact.ncols()));
    for (row, &i) in b_compact.outer_iter().zip(&active.original_indices) {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, len: d });
        }
        out.row_mut(i).assign(&row);
    }
    Ok(out)
}
