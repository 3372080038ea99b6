//! Dataset ingestion, synthetic problems with known support, and OSCAR
//! weight schedules.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{Design, SparseMatrix};
use crate::error::{Error, Result};
use crate::loss::{LossKind, ProblemData};
use crate::penalty::{row_norms, WeightVector};

/// A loaded problem plus the class labels behind the one-hot columns
/// (ascending), when the targets are classes.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: ProblemData,
    pub classes: Option<Vec<f64>>,
}

fn one_hot(labels: &[f64]) -> (Array2<f64>, Vec<f64>) {
    let mut classes = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let mut y = Array2::zeros((labels.len(), classes.len()));
    for (i, l) in labels.iter().enumerate() {
        let c = classes.binary_search_by(|p| p.total_cmp(l)).unwrap();
        y[[i, c]] = 1.0;
    }
    (y, classes)
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse {tok:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(v)
}

/// Reads the LIBSVM sparse text format: `label idx:val idx:val …` with
/// 1-based, strictly increasing indices. Regression targets may be
/// comma-separated for several tasks; multinomial labels become one-hot
/// rows over the ascending distinct labels.
pub fn read_libsvm(path: &Path, kind: LossKind) -> Result<Dataset> {
    read_libsvm_with_features(path, kind, None)
}

/// As [`read_libsvm`], with a lower bound on the feature count (trailing
/// all-zero features are otherwise invisible in the format).
pub fn read_libsvm_with_features(path: &Path, kind: LossKind, min_features: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels: Vec<Vec<f64>> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = min_features.unwrap_or(0);
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: Vec<f64> = label_tok
            .split(',')
            .map(|t| parse_f64(t, path, lineno))
            .collect::<Result<_>>()?;
        if let Some(first) = labels.first() {
            if first.len() != label.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    msg: format!("expected {} targets, found {}", first.len(), label.len()),
                });
            }
        }
        if kind == LossKind::Multinomial && label.len() != 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: "classification needs a single label".into(),
            });
        }
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("expected idx:val, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    msg: format!("feature index {idx} not increasing"),
                });
            }
            prev = idx;
            d = d.max(idx);
            row.push((idx - 1, parse_f64(val, path, lineno)?));
        }
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoSamples(path.to_path_buf()));
    }
    let x = SparseMatrix::from_rows(d, &rows)?;
    let (y, classes) = match kind {
        LossKind::Squared => {
            let q = labels[0].len();
            let flat: Vec<f64> = labels.into_iter().flatten().collect();
            (Array2::from_shape_vec((rows.len(), q), flat).unwrap(), None)
        }
        LossKind::Multinomial => {
            let flat: Vec<f64> = labels.into_iter().map(|l| l[0]).collect();
            let (y, classes) = one_hot(&flat);
            (y, Some(classes))
        }
    };
    Ok(Dataset {
        data: ProblemData::new(Design::Sparse(x), y, kind)?,
        classes,
    })
}

/// Writes a dataset in the LIBSVM format read by [`read_libsvm`]. Stored
/// sparse entries are written as-is; dense designs skip zeros.
pub fn write_libsvm(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let data = &dataset.data;
    let y = data.targets();
    let io = |e| Error::io(path, e);
    for i in 0..data.n_samples() {
        let label = match (&dataset.classes, data.kind()) {
            (Some(classes), LossKind::Multinomial) => {
                let c = y.row(i).iter().position(|&v| v == 1.0).unwrap();
                format!("{}", classes[c])
            }
            _ => y
                .row(i)
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(","),
        };
        write!(out, "{label}").map_err(io)?;
        match data.design() {
            Design::Sparse(s) => {
                let (idx, val) = s.row(i);
                for (c, v) in idx.iter().zip(val) {
                    write!(out, " {}:{}", c + 1, v).map_err(io)?;
                }
            }
            Design::Dense(x) => {
                for (c, v) in x.row(i).iter().enumerate() {
                    if *v != 0.0 {
                        write!(out, " {}:{}", c + 1, v).map_err(io)?;
                    }
                }
            }
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Dense CSV with the first `n_targets` columns as targets. For
/// multinomial problems the single target column holds class labels.
pub fn read_csv(path: &Path, kind: LossKind, n_targets: usize, has_header: bool, standardize_columns: bool) -> Result<Dataset> {
    if n_targets == 0 {
        return Err(Error::InvalidArgument("at least one target column is required".into()));
    }
    if kind == LossKind::Multinomial && n_targets != 1 {
        return Err(Error::InvalidArgument("classification CSV needs exactly one label column".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let mut targets = Vec::new();
    let mut features = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + usize::from(has_header);
        let record = record.map_err(|e| csv_error(path, line, e))?;
        let values: Vec<f64> = record
            .iter()
            .map(|t| parse_f64(t, path, line))
            .collect::<Result<_>>()?;
        if values.len() <= n_targets {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("{} columns, need more than {n_targets}", values.len()),
            });
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: "ragged row".into(),
            });
        }
        targets.extend_from_slice(&values[..n_targets]);
        features.extend_from_slice(&values[n_targets..]);
    }
    let n = targets.len() / n_targets;
    if n == 0 {
        return Err(Error::NoSamples(path.to_path_buf()));
    }
    let d = features.len() / n;
    let mut x = Array2::from_shape_vec((n, d), features).unwrap();
    if standardize_columns {
        standardize(&mut x);
    }
    let (y, classes) = match kind {
        LossKind::Squared => (Array2::from_shape_vec((n, n_targets), targets).unwrap(), None),
        LossKind::Multinomial => {
            let (y, classes) = one_hot(&targets);
            (y, Some(classes))
        }
    };
    Ok(Dataset {
        data: ProblemData::new(Design::Dense(x), y, kind)?,
        classes,
    })
}

fn csv_error(path: &Path, line: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Centers every column and scales it to unit population variance
/// (`‖xᵢ‖² = n`). Constant columns become zero.
pub fn standardize(x: &mut Array2<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| v / sd);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub support_size: usize,
    pub group_count: usize,
    /// Pairwise correlation of columns within a group, in `[0, 1)`.
    pub rho: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 100,
            d: 1000,
            q: 3,
            support_size: 10,
            group_count: 5,
            rho: 0.5,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.q == 0 {
            return Err(Error::InvalidArgument("n, d and q must be positive".into()));
        }
        if self.support_size > self.d {
            return Err(Error::InvalidArgument(format!(
                "support size {} exceeds d = {}",
                self.support_size, self.d
            )));
        }
        if self.support_size > 0 && (self.group_count == 0 || self.group_count > self.support_size) {
            return Err(Error::InvalidArgument(format!(
                "group count must be in 1..={}",
                self.support_size
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument("rho must lie in [0, 1)".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub dataset: Dataset,
    /// Sorted ids of the features with nonzero true coefficients.
    pub support: Vec<usize>,
    /// Group id of each support feature, aligned with `support`.
    pub groups: Vec<usize>,
    pub coefficients: Array2<f64>,
}

/// Correlated-groups design with a planted sparse coefficient matrix.
///
/// Columns in a group share a latent factor, giving pairwise correlation
/// `rho`; every support feature of a group has the same coefficient row.
/// Columns are standardized before the targets are drawn.
pub fn synth_correlated(spec: &SyntheticSpec, kind: LossKind) -> Result<SyntheticProblem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d, q) = (spec.n, spec.d, spec.q);

    let mut ids: Vec<usize> = (0..d).collect();
    ids.shuffle(&mut rng);
    let mut support: Vec<usize> = ids[..spec.support_size].to_vec();
    support.sort_unstable();
    // support features are dealt round-robin into groups
    let groups: Vec<usize> = (0..spec.support_size).map(|k| k % spec.group_count.max(1)).collect();

    let mut x = Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng));
    let latent = Array2::<f64>::from_shape_simple_fn((n, spec.group_count), || StandardNormal.sample(&mut rng));
    let (shared, own) = (spec.rho.sqrt(), (1.0 - spec.rho).sqrt());
    for (&j, &g) in support.iter().zip(&groups) {
        let mut col = x.column_mut(j);
        col.zip_mut_with(&latent.column(g), |v, &z| *v = shared * z + own * *v);
    }
    standardize(&mut x);

    let mut b_true = Array2::zeros((d, q));
    let group_rows: Vec<Vec<f64>> = (0..spec.group_count)
        .map(|_| {
            let dir: Vec<f64> = (0..q).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt().max(1e-12);
            let magnitude = 1.0 + rng.random::<f64>();
            dir.into_iter().map(|v| v / norm * magnitude).collect()
        })
        .collect();
    for (&j, &g) in support.iter().zip(&groups) {
        for (k, v) in group_rows[g].iter().enumerate() {
            b_true[[j, k]] = *v;
        }
    }

    let scores = x.dot(&b_true);
    let (y, classes) = match kind {
        LossKind::Squared => {
            let noise = Array2::from_shape_simple_fn((n, q), || {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.noise_sigma * z
            });
            (scores + noise, None)
        }
        LossKind::Multinomial => {
            let mut y = Array2::zeros((n, q));
            for (i, z) in scores.axis_iter(Axis(0)).enumerate() {
                let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let p: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let total: f64 = p.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut class = q - 1;
                for (c, pc) in p.iter().enumerate() {
                    if u < *pc {
                        class = c;
                        break;
                    }
                    u -= pc;
                }
                y[[i, class]] = 1.0;
            }
            (y, Some((0..q).map(|c| c as f64).collect()))
        }
    };
    Ok(SyntheticProblem {
        dataset: Dataset {
            data: ProblemData::new(Design::Dense(x), y, kind)?,
            classes,
        },
        support,
        groups,
        coefficients: b_true,
    })
}

/// OSCAR schedule `λᵢ = α₁ + α₂(d − i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OscarSpec {
    Explicit { alpha1: f64, alpha2: f64 },
    /// `α₁ = factor · maxᵢ ‖xᵢᵀY‖₂`, `α₂ = α₁ / d`.
    DataDriven { factor: f64 },
}

impl OscarSpec {
    /// Data-driven schedule with sparsity factor `pᵢ = i·e^{−τ}`.
    pub fn sparsity_index(index: u32, tau: f64) -> OscarSpec {
        OscarSpec::DataDriven {
            factor: index as f64 * (-tau).exp(),
        }
    }
}

/// `maxᵢ ‖xᵢᵀY‖₂`.
pub fn max_feature_correlation(data: &ProblemData) -> f64 {
    let xty = data.design().t_dot(data.targets());
    row_norms(xty.view()).into_iter().fold(0.0, f64::max)
}

pub fn oscar_weights(d: usize, spec: &OscarSpec, data: Option<&ProblemData>) -> Result<WeightVector> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let (alpha1, alpha2) = match *spec {
        OscarSpec::Explicit { alpha1, alpha2 } => (alpha1, alpha2),
        OscarSpec::DataDriven { factor } => {
            if !(factor >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative sparsity factor {factor}")));
            }
            let data = data.ok_or_else(|| {
                Error::InvalidArgument("data-driven OSCAR weights need the problem data".into())
            })?;
            let a1 = factor * max_feature_correlation(data);
            (a1, a1 / d as f64)
        }
    };
    if !(alpha1 >= 0.0) || !(alpha2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "OSCAR parameters must be nonnegative, got α₁ = {alpha1}, α₂ = {alpha2}"
        )));
    }
    WeightVector::new((1..=d).map(|i| alpha1 + alpha2 * (d - i) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn libsvm_classification_line() {
        let f = write_tmp("1 2:1.0\n2 1:0.5 3:1.0\n3 1:-1\n");
        let ds = read_libsvm(f.path(), LossKind::Multinomial).unwrap();
        assert_eq!(ds.classes, Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(ds.data.targets().row(1).to_vec(), vec![0.0, 1.0, 0.0]);
        let x = ds.data.design().to_dense();
        assert_eq!(x.row(1).to_vec(), vec![0.5, 0.0, 1.0]);
    }

    #[test]
    fn libsvm_multitarget_regression() {
        let f = write_tmp("1.5,-2 1:1\n0.25,3 2:2 # comment\n\n");
        let ds = read_libsvm(f.path(), LossKind::Squared).unwrap();
        assert_eq!(ds.data.n_tasks(), 2);
        assert_eq!(ds.data.targets().row(1).to_vec(), vec![0.25, 3.0]);
    }

    #[test]
    fn libsvm_errors() {
        let f = write_tmp("");
        assert!(matches!(read_libsvm(f.path(), LossKind::Squared), Err(Error::NoSamples(_))));
        let f = write_tmp("1 1:0.5\n1 3:1 2:1\n");
        match read_libsvm(f.path(), LossKind::Squared) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("1 1:abc\n");
        assert!(matches!(read_libsvm(f.path(), LossKind::Squared), Err(Error::Parse { line: 1, .. })));
        let f = write_tmp("1 0:1\n");
        assert!(read_libsvm(f.path(), LossKind::Squared).is_err());
        let f = write_tmp("1 1:1\n1,2 1:1\n");
        assert!(read_libsvm(f.path(), LossKind::Squared).is_err());
        assert!(matches!(
            read_libsvm(Path::new("/nonexistent/file.svm"), LossKind::Squared),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn libsvm_round_trip() {
        let f = write_tmp("2 1:0.1 4:-3.25e-7\n1 2:1e300\n2 3:0.30000000000000004\n");
        let ds = read_libsvm(f.path(), LossKind::Multinomial).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_libsvm(out.path(), &ds).unwrap();
        let back = read_libsvm(out.path(), LossKind::Multinomial).unwrap();
        assert_eq!(back.data.design(), ds.data.design());
        assert_eq!(back.data.targets(), ds.data.targets());
        assert_eq!(back.classes, ds.classes);
        let again = tempfile::NamedTempFile::new().unwrap();
        write_libsvm(again.path(), &back).unwrap();
        assert_eq!(
            std::fs::read_to_string(out.path()).unwrap(),
            std::fs::read_to_string(again.path()).unwrap()
        );
    }

    #[test]
    fn libsvm_column_norms_match_dense() {
        let f = write_tmp("1 1:3 2:4\n2 2:1.5\n1 1:-1 3:2\n");
        let ds = read_libsvm(f.path(), LossKind::Squared).unwrap();
        let dense = ds.data.design().to_dense();
        for (j, norm) in ds.data.feature_norms().iter().enumerate() {
            let direct = dense.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_reading() {
        let f = write_tmp("y1,y2,a,b\n1,2,3,4\n5,6,7,8\n");
        let ds = read_csv(f.path(), LossKind::Squared, 2, true, false).unwrap();
        assert_eq!(ds.data.n_features(), 2);
        assert_eq!(ds.data.targets().row(1).to_vec(), vec![5.0, 6.0]);
        let ds = read_csv(f.path(), LossKind::Squared, 2, true, true).unwrap();
        let x = ds.data.design().to_dense();
        assert_eq!(x.column(0).to_vec(), vec![-1.0, 1.0]);

        let f = write_tmp("0,1.0\n1,2.0\n0,3.0\n");
        let ds = read_csv(f.path(), LossKind::Multinomial, 1, false, false).unwrap();
        assert_eq!(ds.classes, Some(vec![0.0, 1.0]));
        let f = write_tmp("1,2\n1\n");
        assert!(read_csv(f.path(), LossKind::Squared, 1, false, false).is_err());
    }

    #[test]
    fn oscar_examples() {
        let w = oscar_weights(4, &OscarSpec::Explicit { alpha1: 2.0, alpha2: 0.5 }, None).unwrap();
        assert_eq!(w.as_slice(), &[3.5, 3.0, 2.5, 2.0]);
        let w = oscar_weights(3, &OscarSpec::Explicit { alpha1: 1.5, alpha2: 0.0 }, None).unwrap();
        assert_eq!(w.as_slice(), &[1.5, 1.5, 1.5]);
        assert!(oscar_weights(3, &OscarSpec::Explicit { alpha1: -1.0, alpha2: 0.0 }, None).is_err());
        assert!(oscar_weights(3, &OscarSpec::DataDriven { factor: 0.1 }, None).is_err());
        let p = OscarSpec::sparsity_index(2, 3.0);
        assert_eq!(p, OscarSpec::DataDriven { factor: 2.0 * (-3.0f64).exp() });
    }

    #[test]
    fn synthetic_validation_and_determinism() {
        let spec = SyntheticSpec {
            n: 20,
            d: 30,
            q: 2,
            support_size: 4,
            group_count: 2,
            ..Default::default()
        };
        let a = synth_correlated(&spec, LossKind::Squared).unwrap();
        let b = synth_correlated(&spec, LossKind::Squared).unwrap();
        assert_eq!(a.dataset.data.design(), b.dataset.data.design());
        assert_eq!(a.dataset.data.targets(), b.dataset.data.targets());
        assert_eq!(a.support.len(), 4);
        let norms = row_norms(a.coefficients.view());
        for (k, &j) in a.support.iter().enumerate() {
            for (m, &i) in a.support.iter().enumerate() {
                if a.groups[k] == a.groups[m] {
                    assert_eq!(norms[i], norms[j]);
                }
            }
        }
        assert!(synth_correlated(&SyntheticSpec { support_size: 31, ..spec.clone() }, LossKind::Squared).is_err());
        assert!(synth_correlated(&SyntheticSpec { rho: 1.0, ..spec.clone() }, LossKind::Squared).is_err());
        let m = synth_correlated(&spec, LossKind::Multinomial).unwrap();
        for row in m.dataset.data.targets().axis_iter(Axis(0)) {
            assert_eq!(row.sum(), 1.0);
        }
    }
}
