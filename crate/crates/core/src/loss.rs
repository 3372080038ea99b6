//! Multi-task squared loss and multinomial logistic loss.
//!
//! Both losses are sums over samples, `F(B) = Σᵢ fᵢ(xᵢᵀB)`. The dual
//! candidate of a coefficient matrix is the matrix of per-sample loss
//! gradients `Θᵢ = ∇fᵢ(xᵢᵀB)`, and the dual objective is `-Σᵢ f*ᵢ(Θᵢ)`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Slack allowed when checking that `Θᵢ + Yᵢ` lies in the probability simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `½‖Y − XB‖²_F`
    Squared,
    /// Multinomial logistic loss with one-hot targets.
    Multinomial,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Squared => f.write_str("squared"),
            LossKind::Multinomial => f.write_str("multinomial"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "regression" => Ok(LossKind::Squared),
            "multinomial" => Ok(LossKind::Multinomial),
            other => Err(Error::InvalidArgument(format!(
                "unsupported loss kind {other:?}"
            ))),
        }
    }
}

/// Design matrix, targets and loss family. Immutable once built.
#[derive(Debug, Clone)]
pub struct ProblemData {
    design: Design,
    targets: Array2<f64>,
    kind: LossKind,
    feature_norms: Vec<f64>,
}

impl ProblemData {
    pub fn new(design: Design, targets: Array2<f64>, kind: LossKind) -> Result<Self> {
        if design.nrows() != targets.nrows() {
            return Err(Error::dims(format!(
                "design has {} rows, targets have {}",
                design.nrows(),
                targets.nrows()
            )));
        }
        if targets.ncols() == 0 {
            return Err(Error::InvalidData("targets have no columns".into()));
        }
        if !design.is_finite() || !targets.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidData("non-finite entries".into()));
        }
        if kind == LossKind::Multinomial {
            for (i, row) in targets.axis_iter(Axis(0)).enumerate() {
                let binary = row.iter().all(|&v| v == 0.0 || v == 1.0);
                if !binary || row.sum() != 1.0 {
                    return Err(Error::InvalidData(format!("target row {i} is not one-hot")));
                }
            }
        }
        let feature_norms = design.column_norms();
        Ok(ProblemData {
            design,
            targets,
            kind,
            feature_norms,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn targets(&self) -> ArrayView2<'_, f64> {
        self.targets.view()
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn n_samples(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.design.ncols()
    }

    pub fn n_tasks(&self) -> usize {
        self.targets.ncols()
    }

    /// `‖xᵢ‖₂` for every feature column.
    pub fn feature_norms(&self) -> &[f64] {
        &self.feature_norms
    }

    /// Same targets and loss, restricted to the listed feature columns.
    pub fn select_features(&self, keep: &[usize]) -> ProblemData {
        ProblemData {
            design: self.design.select_columns(keep),
            targets: self.targets.clone(),
            kind: self.kind,
            feature_norms: keep.iter().map(|&i| self.feature_norms[i]).collect(),
        }
    }

    pub(crate) fn check_coef(&self, b: ArrayView2<f64>) -> Result<()> {
        if b.nrows() != self.n_features() || b.ncols() != self.n_tasks() {
            return Err(Error::dims(format!(
                "coefficients are {}×{}, problem expects {}×{}",
                b.nrows(),
                b.ncols(),
                self.n_features(),
                self.n_tasks()
            )));
        }
        Ok(())
    }
}

/// Stabilized log-sum-exp of a row.
pub fn log_sum_exp(z: ArrayView1<f64>) -> f64 {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax_into(z: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut total = 0.0;
    Zip::from(&mut out).and(&z).for_each(|o, &v| {
        *o = (v - m).exp();
        total += *o;
    });
    out.mapv_inplace(|v| v / total);
}

/// Loss value and per-sample gradients from the linear scores `Z = XB`.
pub(crate) fn value_and_dual(kind: LossKind, scores: ArrayView2<f64>, y: ArrayView2<f64>) -> (f64, Array2<f64>) {
    match kind {
        LossKind::Squared => {
            let theta = &scores - &y;
            let value = 0.5 * compensated_sum(theta.iter().map(|v| v * v));
            (value, theta)
        }
        LossKind::Multinomial => {
            let mut theta = Array2::zeros(scores.raw_dim());
            let mut terms = Vec::with_capacity(scores.nrows());
            for ((z, yi), th) in scores
                .axis_iter(Axis(0))
                .zip(y.axis_iter(Axis(0)))
                .zip(theta.axis_iter_mut(Axis(0)))
            {
                terms.push(log_sum_exp(z) - z.dot(&yi));
                softmax_into(z, th);
            }
            theta -= &y;
            (compensated_sum(terms), theta)
        }
    }
}

/// Per-sample loss gradient `∇fᵢ(z)` at the scores `z = xᵢᵀB`.
pub(crate) fn sample_gradient(kind: LossKind, z: ArrayView1<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    match kind {
        LossKind::Squared => &z - &y,
        LossKind::Multinomial => {
            let mut g = Array1::zeros(z.len());
            softmax_into(z, g.view_mut());
            g -= &y;
            g
        }
    }
}

/// `F(B)`.
pub fn primal_loss(data: &ProblemData, b: ArrayView2<f64>) -> Result<f64> {
    data.check_coef(b)?;
    let scores = data.design.dot(b);
    Ok(value_and_dual(data.kind, scores.view(), data.targets()).0)
}

/// `Θ = ∇f(XB)`: `XB − Y` for squared loss, `softmax(XB) − Y` for multinomial.
pub fn dual_candidate(data: &ProblemData, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    data.check_coef(b)?;
    let scores = data.design.dot(b);
    Ok(value_and_dual(data.kind, scores.view(), data.targets()).1)
}

/// `D(Θ) = −Σᵢ f*ᵢ(Θᵢ)`.
pub fn dual_objective(data: &ProblemData, theta: ArrayView2<f64>) -> Result<f64> {
    let y = data.targets();
    if theta.raw_dim() != y.raw_dim() {
        return Err(Error::dims(format!(
            "dual point is {}×{}, targets are {}×{}",
            theta.nrows(),
            theta.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    match data.kind {
        LossKind::Squared => Ok(-compensated_sum(
            theta
                .iter()
                .zip(y.iter())
                .map(|(&t, &yi)| 0.5 * t * t + t * yi),
        )),
        LossKind::Multinomial => {
            let mut terms = Vec::with_capacity(theta.len());
            for (th, yi) in theta.axis_iter(Axis(0)).zip(y.axis_iter(Axis(0))) {
                let mut p: Vec<f64> = th.iter().zip(yi.iter()).map(|(a, b)| a + b).collect();
                if p.iter().any(|&v| v < -SIMPLEX_TOLERANCE || !v.is_finite()) {
                    return Err(Error::InfeasibleDual);
                }
                p.iter_mut().for_each(|v| *v = v.max(0.0));
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(Error::InfeasibleDual);
                }
                for v in p {
                    let v = v / total;
                    if v > 0.0 {
                        terms.push(-v * v.ln());
                    }
                }
            }
            Ok(compensated_sum(terms))
        }
    }
}

/// `∇F(B) = Xᵀ Θ` with `Θ` the dual candidate.
pub fn loss_gradient(data: &ProblemData, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    let theta = dual_candidate(data, b)?;
    Ok(data.design.t_dot(theta.view()))
}

/// Gradient of the partial sum `Σ_{i∈I} fᵢ(xᵢᵀB)`. Repeated indices count
/// once per occurrence. Not divided by the batch size.
pub fn minibatch_gradient(data: &ProblemData, b: ArrayView2<f64>, indices: &[usize]) -> Result<Array2<f64>> {
    data.check_coef(b)?;
    check_batch(data, indices)?;
    let mut acc = Array2::zeros((data.n_features(), data.n_tasks()));
    for &i in indices {
        let z = data.design.row_dot(i, b);
        let g = sample_gradient(data.kind, z.view(), data.targets.row(i));
        data.design.add_row_outer(i, g.view(), &mut acc);
    }
    Ok(acc)
}

/// `Σ_{i∈I} xᵢ (∇fᵢ(xᵢᵀB₁) − ∇fᵢ(xᵢᵀB₀))`, the mini-batch correction of
/// the variance-reduced step, in one pass over the batch.
pub(crate) fn minibatch_gradient_difference(
    data: &ProblemData,
    b1: ArrayView2<f64>,
    b0: ArrayView2<f64>,
    indices: &[usize],
) -> Array2<f64> {
    let mut acc = Array2::zeros((data.n_features(), data.n_tasks()));
    for &i in indices {
        let y = data.targets.row(i);
        let g = match data.kind {
            // linear in z, so the difference needs one product
            LossKind::Squared => data.design.row_dot(i, (&b1 - &b0).view()),
            LossKind::Multinomial => {
                let z1 = data.design.row_dot(i, b1);
                let z0 = data.design.row_dot(i, b0);
                sample_gradient(data.kind, z1.view(), y) - sample_gradient(data.kind, z0.view(), y)
            }
        };
        data.design.add_row_outer(i, g.view(), &mut acc);
    }
    acc
}

pub(crate) fn check_batch(data: &ProblemData, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty mini-batch".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= data.n_samples()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: data.n_samples(),
        });
    }
    Ok(())
}

/// Strong-concavity modulus `L` of the dual objective.
///
/// Squared loss: `f*(θ) = ½‖θ‖² + ⟨θ, y⟩` has identity Hessian. Multinomial:
/// negative entropy restricted to the simplex has Hessian `diag(1/p) ⪰ I`.
pub fn strong_concavity_modulus(kind: LossKind) -> f64 {
    match kind {
        LossKind::Squared | LossKind::Multinomial => 1.0,
    }
}

/// Lipschitz constant `L_F` of `∇F`: `σ_max(X)²` for squared loss,
/// `½ σ_max(X)²` for multinomial (the softmax Jacobian is bounded by ½).
pub fn gradient_step_constant(data: &ProblemData) -> Result<f64> {
    let sigma = data.design.spectral_norm(1e-6, 500);
    let l = match data.kind {
        LossKind::Squared => sigma * sigma,
        LossKind::Multinomial => 0.5 * sigma * sigma,
    };
    if !(l > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    Ok(l)
}
