//! Feasible dual points, duality gaps and the safe dual radius.
//!
//! A dual point `Θ` is feasible when the sorted feature scores
//! `‖xᵢᵀΘ‖₂` satisfy every cumulative constraint
//! `Σ_{j≤i} score₍ⱼ₎ ≤ Σ_{j≤i} λⱼ`. Any feasible point and any primal point
//! give a gap `G = P(B) − D(Θ) ≥ 0`, and strong concavity of the dual bounds
//! the distance to the dual optimum by `√(2G/L)`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{self, strong_concavity_modulus, ProblemData};
use crate::numeric::compensated_cumsum;
use crate::penalty::{group_owl_norm, row_norms, WeightVector};
use crate::screening::ActiveSet;

/// Numerical slack below zero tolerated for a duality gap.
pub const GAP_SLACK: f64 = 1e-10;

/// Per-feature dual scores `‖xᵢᵀΘ‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualScores(Vec<f64>);

impl DualScores {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dual scores must be finite and nonnegative".into(),
            ));
        }
        Ok(DualScores(values))
    }

    /// Scores from a precomputed `XᵀΘ` (`d × q`).
    pub fn from_correlations(xt_theta: ArrayView2<f64>) -> Self {
        DualScores(row_norms(xt_theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> DualScores {
        DualScores(self.0.iter().map(|v| v * alpha).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub radius: f64,
    pub scale: f64,
}

impl GapCertificate {
    /// Builds a certificate; a gap below `-GAP_SLACK` is an error.
    pub fn new(primal_value: f64, dual_value: f64, scale: f64, modulus: f64) -> Result<Self> {
        let gap = primal_value - dual_value;
        if !gap.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite gap {gap}")));
        }
        if gap < -GAP_SLACK {
            return Err(Error::DualityViolation(gap));
        }
        Ok(GapCertificate {
            primal_value,
            dual_value,
            gap,
            radius: safe_radius(gap, modulus),
            scale,
        })
    }
}

/// `√(2·max(G, 0)/L)`.
pub fn safe_radius(gap: f64, modulus: f64) -> f64 {
    (2.0 * gap.max(0.0) / modulus).sqrt()
}

/// Scores `‖xᵢᵀΘ‖₂` for the active features of `data`, in active order.
pub fn dual_scores(data: &ProblemData, theta: ArrayView2<f64>, active: &ActiveSet) -> Result<DualScores> {
    if theta.nrows() != data.n_samples() || theta.ncols() != data.n_tasks() {
        return Err(Error::dims("dual point does not match the problem shape"));
    }
    if let Some(&bad) = active.original_indices().iter().find(|&&i| i >= data.n_features()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: data.n_features(),
        });
    }
    let sub = data.design().select_columns(active.original_indices());
    Ok(DualScores::from_correlations(sub.t_dot(theta).view()))
}

/// Largest `α ∈ (0, 1]` such that `α·Θ` satisfies every cumulative
/// constraint. Constraints whose cumulative score is zero are skipped.
pub fn feasibility_scale(scores: &DualScores, w: &WeightVector) -> Result<f64> {
    if scores.len() != w.len() {
        return Err(Error::dims(format!(
            "{} scores vs {} weights",
            scores.len(),
            w.len()
        )));
    }
    let mut sorted = scores.0.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cum_scores = compensated_cumsum(&sorted);
    let cum_weights = compensated_cumsum(w.as_slice());
    let mut alpha = 1.0_f64;
    for (&s, &l) in cum_scores.iter().zip(&cum_weights) {
        if s > 0.0 {
            alpha = alpha.min(l / s);
        }
    }
    if alpha <= 0.0 {
        return Err(Error::NoFeasibleScaling);
    }
    Ok(alpha)
}

/// Largest violation `Σ_{j≤i} score₍ⱼ₎ − Σ_{j≤i} λⱼ` over all `i`
/// (nonpositive when the scores are feasible).
pub fn max_constraint_violation(scores: &DualScores, w: &WeightVector) -> f64 {
    let mut sorted = scores.0.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cum_scores = compensated_cumsum(&sorted);
    let cum_weights = compensated_cumsum(w.as_slice());
    cum_scores
        .iter()
        .zip(&cum_weights)
        .map(|(s, l)| s - l)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Gap certificate for `B` and an already feasible `Θ`.
pub fn duality_gap(
    data: &ProblemData,
    b: ArrayView2<f64>,
    theta_scaled: ArrayView2<f64>,
    w: &WeightVector,
) -> Result<GapCertificate> {
    let primal = loss::primal_loss(data, b)? + group_owl_norm(b, w)?;
    let dual = loss::dual_objective(data, theta_scaled)?;
    GapCertificate::new(primal, dual, 1.0, strong_concavity_modulus(data.kind()))
}

/// Everything the solvers need from one dual evaluation.
#[derive(Debug, Clone)]
pub struct DualPoint {
    /// Feasible dual point `α·Θ_raw`.
    pub theta: Array2<f64>,
    /// Scores of the feasible point.
    pub scores: DualScores,
    pub certificate: GapCertificate,
}

/// Builds the feasible dual point from the raw dual candidate and certifies
/// the gap. `xt_theta_raw = XᵀΘ_raw` is the loss gradient at `B`, which the
/// solvers already hold.
pub(crate) fn certify_from_parts(
    data: &ProblemData,
    b: ArrayView2<f64>,
    loss_value: f64,
    theta_raw: &Array2<f64>,
    xt_theta_raw: ArrayView2<f64>,
    w: &WeightVector,
    scale_dual: bool,
) -> Result<DualPoint> {
    let raw_scores = DualScores::from_correlations(xt_theta_raw);
    let alpha = if scale_dual {
        feasibility_scale(&raw_scores, w)?
    } else {
        1.0
    };
    let theta = theta_raw * alpha;
    let primal = loss_value + group_owl_norm(b, w)?;
    let dual = loss::dual_objective(data, theta.view())?;
    let modulus = strong_concavity_modulus(data.kind());
    let certificate = if scale_dual {
        GapCertificate::new(primal, dual, alpha, modulus)?
    } else {
        // unscaled points may be infeasible; report the raw gap unchecked
        let gap = primal - dual;
        GapCertificate {
            primal_value: primal,
            dual_value: dual,
            gap,
            radius: safe_radius(gap, modulus),
            scale: 1.0,
        }
    };
    Ok(DualPoint {
        theta,
        scores: raw_scores.scaled(alpha),
        certificate,
    })
}

/// Standard recipe: `Θ_raw = ∇f(XB)`, scale into the feasible set, certify.
pub fn certify(data: &ProblemData, b: ArrayView2<f64>, w: &WeightVector) -> Result<DualPoint> {
    data.check_coef(b)?;
    if w.len() != data.n_features() {
        return Err(Error::dims("weights do not match the feature count"));
    }
    let scores = data.design().dot(b);
    let (value, theta_raw) = loss::value_and_dual(data.kind(), scores.view(), data.targets());
    let xt = data.design().t_dot(theta_raw.view());
    certify_from_parts(data, b, value, &theta_raw, xt.view(), w, true)
}
