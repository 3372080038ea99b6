//! Brute-force reference computations for small instances.
//!
//! These enumerate the polyhedral pieces of the objectives directly and
//! share no code path with the fast operators in [`crate::penalty`]. They are
//! exponential in the dimension and meant for `d ≤ 7`.

use ndarray::{Array2, ArrayView2, Axis};

use crate::penalty::WeightVector;

/// Minimizes `½‖y − u‖²` over the cone `y₁ ≥ … ≥ y_m` (and `y_m ≥ 0` when
/// `nonnegative`) by enumerating every face of the cone.
fn cone_projection(u: &[f64], nonnegative: bool) -> Vec<f64> {
    let m = u.len();
    let n_constraints = if nonnegative { m } else { m.saturating_sub(1) };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut y = vec![0.0; m];
    for mask in 0u32..(1u32 << n_constraints) {
        // bit k < m-1 ties y_k = y_{k+1}; bit m-1 ties y_{m-1} = 0
        let zero_tail = nonnegative && mask & (1 << (m - 1)) != 0;
        let mut start = 0;
        while start < m {
            let mut end = start + 1;
            while end < m && mask & (1 << (end - 1)) != 0 {
                end += 1;
            }
            let value = if zero_tail && end == m {
                0.0
            } else {
                u[start..end].iter().sum::<f64>() / (end - start) as f64
            };
            y[start..end].iter_mut().for_each(|v| *v = value);
            start = end;
        }
        let feasible = y.windows(2).all(|p| p[0] >= p[1]) && (!nonnegative || y[m - 1] >= 0.0);
        if !feasible {
            continue;
        }
        let dist: f64 = y.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, y.clone()));
        }
    }
    best.map(|(_, y)| y).unwrap_or_default()
}

/// Projection onto non-increasing sequences by face enumeration.
pub fn isotonic_nonincreasing(z: &[f64]) -> Vec<f64> {
    cone_projection(z, false)
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

/// `½‖x − v‖² + t Σᵢ wᵢ |x|₍ᵢ₎`.
pub fn owl_prox_objective(x: &[f64], v: &[f64], w: &WeightVector, t: f64) -> f64 {
    let mut mags: Vec<f64> = x.iter().map(|a| a.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let penalty: f64 = mags.iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
    0.5 * x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * penalty
}

/// Exact OWL prox by enumerating every (sign pattern, ordering) region.
/// On a region the penalty is linear, so the regional minimizer is a cone
/// projection; the global minimizer is the best regional one.
pub fn owl_prox(v: &[f64], w: &WeightVector, t: f64) -> Vec<f64> {
    let m = v.len();
    assert!(m <= 8, "brute-force prox is exponential; got d = {m}");
    if m == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut u = vec![0.0; m];
    let mut x = vec![0.0; m];
    for perm in permutations(m) {
        for signs in 0u32..(1u32 << m) {
            // y_k = σ_{π(k)} x_{π(k)} lives in the monotone nonnegative cone
            for (k, &i) in perm.iter().enumerate() {
                let s = if signs & (1 << i) != 0 { -1.0 } else { 1.0 };
                u[k] = s * v[i] - t * w.as_slice()[k];
            }
            let y = cone_projection(&u, true);
            for (k, &i) in perm.iter().enumerate() {
                let s = if signs & (1 << i) != 0 { -1.0 } else { 1.0 };
                x[i] = s * y[k];
            }
            let obj = owl_prox_objective(&x, v, w, t);
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, x.clone()));
            }
        }
    }
    best.unwrap().1
}

/// `½‖X − B‖²_F + t Σᵢ wᵢ ‖X‖₍ᵢ₎` with row norms sorted descending.
pub fn group_prox_objective(x: ArrayView2<f64>, b: ArrayView2<f64>, w: &WeightVector, t: f64) -> f64 {
    let mut norms: Vec<f64> = x
        .axis_iter(Axis(0))
        .map(|r| r.iter().map(|a| a * a).sum::<f64>().sqrt())
        .collect();
    norms.sort_by(|a, b| b.total_cmp(a));
    let penalty: f64 = norms.iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
    0.5 * (&x - &b).iter().map(|a| a * a).sum::<f64>() + t * penalty
}

/// Group prox through the vector oracle on row norms: at the minimizer each
/// row is a nonnegative multiple of the input row, so only the norms are
/// free.
pub fn group_owl_prox(b: ArrayView2<f64>, w: &WeightVector, t: f64) -> Array2<f64> {
    let norms: Vec<f64> = b
        .axis_iter(Axis(0))
        .map(|r| r.iter().map(|a| a * a).sum::<f64>().sqrt())
        .collect();
    let shrunk = owl_prox(&norms, w, t);
    let mut out = Array2::zeros(b.raw_dim());
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        if norms[i] > 0.0 {
            row.assign(&(&b.row(i) * (shrunk[i] / norms[i])));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_reference_example() {
        assert_eq!(isotonic_nonincreasing(&[3.0, 1.0, 2.0]), vec![3.0, 1.5, 1.5]);
    }

    #[test]
    fn isotonic_matches_grid_search() {
        // every non-increasing sequence on a 0.05 grid over [0, 4]
        let z = [3.0, 1.0, 2.0];
        let grid: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
        let mut best = (f64::INFINITY, [0.0; 3]);
        for &a in &grid {
            for &b in grid.iter().filter(|&&b| b <= a) {
                for &c in grid.iter().filter(|&&c| c <= b) {
                    let dist = (a - z[0]).powi(2) + (b - z[1]).powi(2) + (c - z[2]).powi(2);
                    if dist < best.0 {
                        best = (dist, [a, b, c]);
                    }
                }
            }
        }
        let exact = isotonic_nonincreasing(&z);
        for (g, e) in best.1.iter().zip(&exact) {
            assert!((g - e).abs() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn prox_reference_examples() {
        let w = WeightVector::new(vec![2.0, 1.0]).unwrap();
        let x = owl_prox(&[3.0, 1.0], &w, 1.0);
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        let x = owl_prox(&[2.0, -2.0], &w, 1.0);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn prox_reference_beats_subgradient_descent() {
        // a generic first-order minimizer must not find a lower objective
        let v = [1.3, -0.4, 2.2, 0.9];
        let w = WeightVector::new(vec![1.0, 0.7, 0.7, 0.1]).unwrap();
        let t = 0.6;
        let exact = owl_prox(&v, &w, t);
        let best = owl_prox_objective(&exact, &v, &w, t);
        let mut x = v.to_vec();
        for k in 1..200_000 {
            let mags: Vec<f64> = x.iter().map(|a| a.abs()).collect();
            let order = crate::numeric::argsort_desc(&mags);
            let mut g: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - b).collect();
            for (rank, &i) in order.iter().enumerate() {
                g[i] += t * w.as_slice()[rank] * x[i].signum();
            }
            let step = 1.0 / k as f64;
            x.iter_mut().zip(&g).for_each(|(a, b)| *a -= step * b);
        }
        assert!(best <= owl_prox_objective(&x, &v, &w, t) + 1e-9);
    }
}
