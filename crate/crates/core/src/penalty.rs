//! Group OWL norm and its proximal operator.
//!
//! The Group OWL penalty of a `d × q` coefficient matrix is
//! `Σᵢ wᵢ · r₍ᵢ₎` where `r₍₁₎ ≥ … ≥ r₍d₎` are the sorted row L2 norms and
//! `w` is a non-increasing, nonnegative weight vector. Its proximal operator
//! reduces to the vector OWL prox applied to the row norms, followed by a
//! rescaling of each row.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argsort_desc, compensated_sum};

/// Ordered regularization weights `λ₁ ≥ λ₂ ≥ … ≥ λ_d ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidWeights(format!("entry {i} is not finite")));
        }
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidWeights(format!("entry {i} is negative")));
        }
        if let Some(i) = values.windows(2).position(|p| p[0] < p[1]) {
            return Err(Error::InvalidWeights(format!(
                "entries {i} and {} are increasing",
                i + 1
            )));
        }
        Ok(WeightVector(values))
    }

    /// Constant weights; the Group OWL norm becomes `λ · ‖B‖₂,₁`.
    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The `k`-th largest weight, 1-based (`λ_k`).
    pub fn lambda(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    /// Keeps the `len` largest weights. This is the weight vector of the
    /// compacted problem once `d - len` features are known to be zero.
    pub fn truncated(&self, len: usize) -> WeightVector {
        WeightVector(self.0[..len.min(self.0.len())].to_vec())
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        WeightVector::new(values)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Euclidean projection onto the cone of non-increasing sequences
/// (pool adjacent violators).
pub fn pava_nonincreasing(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::EmptySequence);
    }
    // Each block is (sum, count); block means are non-increasing on the stack.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(z.len());
    for &value in z {
        blocks.push((value, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            // mean0 < mean1, cross-multiplied to avoid a division
            if s0 * (c1 as f64) < s1 * (c0 as f64) {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(z.len());
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        out.extend(std::iter::repeat_n(mean, count));
    }
    Ok(out)
}

/// Proximal operator of `t · Σᵢ wᵢ |x|₍ᵢ₎` evaluated at `v`.
pub fn owl_prox(v: &[f64], w: &WeightVector, t: f64) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(Error::dims(format!(
            "owl_prox: {} values vs {} weights",
            v.len(),
            w.len()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "prox step must be positive, got {t}"
        )));
    }
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let magnitudes: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let order = argsort_desc(&magnitudes);
    let shifted: Vec<f64> = order
        .iter()
        .zip(w.as_slice())
        .map(|(&i, &wi)| magnitudes[i] - t * wi)
        .collect();
    let projected = pava_nonincreasing(&shifted)?;

    let mut out = vec![0.0; v.len()];
    for (&i, &p) in order.iter().zip(&projected) {
        let m = p.max(0.0);
        out[i] = if v[i] < 0.0 { -m } else { m };
    }
    Ok(out)
}

/// L2 norm of every row.
pub fn row_norms(b: ArrayView2<f64>) -> Vec<f64> {
    b.axis_iter(Axis(0))
        .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect()
}

/// Proximal operator of `t · J_w` on a coefficient matrix.
pub fn group_owl_prox(b: ArrayView2<f64>, w: &WeightVector, t: f64) -> Result<Array2<f64>> {
    if b.nrows() != w.len() {
        return Err(Error::dims(format!(
            "group_owl_prox: {} rows vs {} weights",
            b.nrows(),
            w.len()
        )));
    }
    let norms = row_norms(b);
    let shrunk = owl_prox(&norms, w, t)?;
    let mut out = Array2::zeros(b.raw_dim());
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        if norms[i] > 0.0 && shrunk[i] > 0.0 {
            let scale = shrunk[i] / norms[i];
            row.zip_mut_with(&b.row(i), |o, &x| *o = x * scale);
        }
    }
    Ok(out)
}

/// Group OWL norm `Σᵢ wᵢ r₍ᵢ₎`.
pub fn group_owl_norm(b: ArrayView2<f64>, w: &WeightVector) -> Result<f64> {
    if b.nrows() != w.len() {
        return Err(Error::dims(format!(
            "group_owl_norm: {} rows vs {} weights",
            b.nrows(),
            w.len()
        )));
    }
    let mut norms = row_norms(b);
    norms.sort_by(|a, b| b.total_cmp(a));
    Ok(compensated_sum(
        norms.iter().zip(w.as_slice()).map(|(r, wi)| r * wi),
    ))
}
