//! Per-layer 2D coordinates: PCA computed here, external projections passed
//! through unchanged.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProjectionMethod {
    Pca,
    External(String),
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionMethod::Pca => f.write_str("pca"),
            ProjectionMethod::External(name) => write!(f, "external:{name}"),
        }
    }
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("pca") {
            return Ok(ProjectionMethod::Pca);
        }
        match s.strip_prefix("external:") {
            Some(name) if !name.is_empty() => Ok(ProjectionMethod::External(name.to_string())),
            _ => Err(Error::InvalidConfig(format!(
                "projection must be `pca` or `external:NAME`, got {s:?}"
            ))),
        }
    }
}

impl TryFrom<String> for ProjectionMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProjectionMethod> for String {
    fn from(m: ProjectionMethod) -> Self {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    /// Recorded verbatim for external methods (e.g. `n_neighbors`, `min_dist`).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

impl ProjectionConfig {
    pub fn pca() -> Self {
        Self {
            method: ProjectionMethod::Pca,
            params: serde_json::Value::Null,
        }
    }

    pub fn external(name: impl Into<String>) -> Self {
        Self {
            method: ProjectionMethod::External(name.into()),
            params: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProjection {
    pub layer: usize,
    pub coords: Vec<[f64; 2]>,
    pub method: ProjectionConfig,
    pub explained_variance: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub coords: Vec<[f64; 2]>,
    /// Principal axes as rows, each of unit length.
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
}

/// Projects the rows of `vectors` onto their top two principal axes.
///
/// The eigendecomposition runs on whichever is smaller: the `d × d`
/// covariance or the `n × n` Gram matrix of the centered data. Each axis is
/// oriented so that its largest-magnitude component is positive.
pub fn pca_project(vectors: &Matrix) -> Result<Pca> {
    let (n, d) = (vectors.rows(), vectors.cols());
    if n < 2 {
        return Err(Error::DegenerateInput(format!("PCA needs n >= 2 points, got {n}")));
    }
    if d < 2 {
        return Err(Error::DegenerateInput(format!("PCA needs d >= 2 dimensions, got {d}")));
    }
    vectors.ensure_finite("PCA input")?;

    let mut mean = vec![0.0; d];
    for row in vectors.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| vectors.get(i, j) - mean[j]);
    let scale = (n - 1) as f64;

    let (values, basis, gram) = if d <= n {
        let eig = SymmetricEigen::new(centered.transpose() * &centered / scale);
        (eig.eigenvalues, eig.eigenvectors, false)
    } else {
        let eig = SymmetricEigen::new(&centered * centered.transpose() / scale);
        (eig.eigenvalues, eig.eigenvectors, true)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top = values[order[0]].max(0.0);

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut variances = [0.0; 2];
    for (slot, &r) in order.iter().take(2).enumerate() {
        let lambda = values[r].max(0.0);
        let informative = lambda > 1e-12 * top.max(f64::MIN_POSITIVE);
        let mut axis: Vec<f64> = if !informative {
            Vec::new()
        } else if gram {
            // Right singular vector recovered from the left one.
            let u = basis.column(r);
            let norm = (lambda * scale).sqrt();
            (0..d).map(|j| centered.column(j).dot(&u) / norm).collect()
        } else {
            basis.column(r).iter().copied().collect()
        };
        if axis.is_empty() {
            axis = complete_basis(&axes, d);
        }
        orient(&mut axis);
        variances[slot] = if informative { lambda } else { 0.0 };
        axes.push(axis);
    }

    let coords = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let project = |axis: &[f64]| axis.iter().zip(row.iter()).map(|(a, c)| a * c).sum();
            [project(&axes[0]), project(&axes[1])]
        })
        .collect();
    let [a0, a1]: [Vec<f64>; 2] = axes.try_into().expect("exactly two principal axes");
    Ok(Pca {
        coords,
        components: [a0, a1],
        explained_variance: variances,
    })
}

/// A unit vector orthogonal to `existing`, built from the first standard
/// basis vector that survives Gram–Schmidt.
fn complete_basis(existing: &[Vec<f64>], d: usize) -> Vec<f64> {
    for e in 0..d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for a in existing {
            let dot: f64 = a.iter().zip(&v).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(a).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
    unreachable!("d >= 2 always leaves an orthogonal direction")
}

fn orient(axis: &mut [f64]) {
    let pivot = axis
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
        .0;
    if axis[pivot] < 0.0 {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Projection of one layer, restricted to `selection` (in the given order).
/// PCA is fit on that layer's selected vectors only.
pub fn project_layer(
    dataset: &Dataset,
    config: &ProjectionConfig,
    selection: &[usize],
    layer: usize,
) -> Result<LayerProjection> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(&bad) = selection.iter().find(|&&i| i >= dataset.n_points()) {
        return Err(Error::OutOfRange(format!("point id {bad}")));
    }
    if layer >= dataset.n_layers() {
        return Err(Error::OutOfRange(format!("layer {layer}")));
    }
    match &config.method {
        ProjectionMethod::Pca => {
            let pca = pca_project(&dataset.embeddings.layer_matrix(layer, selection))?;
            Ok(LayerProjection {
                layer,
                coords: pca.coords,
                method: config.clone(),
                explained_variance: Some(pca.explained_variance),
            })
        }
        ProjectionMethod::External(name) => {
            let ext = dataset
                .external_projections
                .get(name)
                .ok_or_else(|| Error::UnknownProjection(name.clone()))?;
            Ok(LayerProjection {
                layer,
                coords: selection.iter().map(|&i| ext.layers[layer][i]).collect(),
                method: config.clone(),
                explained_variance: None,
            })
        }
    }
}

/// [`project_layer`] for every layer of the dataset, in parallel.
pub fn project_layers(
    dataset: &Dataset,
    config: &ProjectionConfig,
    selection: &[usize],
) -> Result<Vec<LayerProjection>> {
    (0..dataset.n_layers())
        .into_par_iter()
        .map(|layer| project_layer(dataset, config, selection, layer))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent route: cyclic Jacobi eigendecomposition of the explicitly
    /// formed sample covariance. Returns eigenvalues (descending), eigenvectors
    /// as columns in the same order, and the mean.
    fn covariance_eigen(m: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let (n, d) = (m.rows(), m.cols());
        let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| m.get(i, j)).sum::<f64>() / n as f64).collect();
        let mut a: Vec<Vec<f64>> = (0..d)
            .map(|p| {
                (0..d)
                    .map(|q| {
                        (0..n).map(|i| (m.get(i, p) - mean[p]) * (m.get(i, q) - mean[q])).sum::<f64>()
                            / (n - 1) as f64
                    })
                    .collect()
            })
            .collect();
        let mut v: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        for _ in 0..100 {
            let off: f64 = (0..d).flat_map(|p| (0..d).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| a[p][q] * a[p][q]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut() {
                        let (vp, vq) = (row[p], row[q]);
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
        let vals = idx.iter().map(|&i| a[i][i]).collect();
        let vecs = idx.iter().map(|&i| (0..d).map(|r| v[r][i]).collect()).collect();
        (vals, vecs, mean)
    }

    #[test]
    fn axis_aligned_2d_is_identity_up_to_sign() {
        let m = Matrix::from_rows(&[[3.0, 0.5], [-3.0, 0.5], [1.0, -0.5], [-1.0, -0.5]]).unwrap();
        let pca = pca_project(&m).unwrap();
        for (i, p) in pca.coords.iter().enumerate() {
            assert!((p[0].abs() - m.get(i, 0).abs()).abs() < 1e-12);
            assert!((p[1].abs() - m.get(i, 1).abs()).abs() < 1e-12);
        }
        let var_x = (9.0 + 9.0 + 1.0 + 1.0) / 3.0;
        let var_y = 4.0 * 0.25 / 3.0;
        assert!((pca.explained_variance[0] - var_x).abs() < 1e-12);
        assert!((pca.explained_variance[1] - var_y).abs() < 1e-12);
    }

    #[test]
    fn planar_3d_points_reconstruct_from_two_components() {
        // Points on the plane spanned by u, v through an offset.
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, -1.0, 0.0];
        let rows: Vec<[f64; 3]> = (0..12)
            .map(|i| {
                let (a, b) = ((i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos());
                [4.0 + a * u[0] + b * v[0], -2.0 + a * u[1] + b * v[1], 1.0 + a * u[2] + b * v[2]]
            })
            .collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let pca = pca_project(&m).unwrap();
        let (vals, vecs, mean) = covariance_eigen(&m);

        for k in 0..2 {
            assert!((pca.explained_variance[k] - vals[k]).abs() < 1e-9);
            let dot: f64 = (0..3).map(|j| pca.components[k][j] * vecs[k][j]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-9, "axis {k} disagrees with oracle");
        }
        for (i, p) in pca.coords.iter().enumerate() {
            for j in 0..3 {
                let rec = mean[j] + p[0] * pca.components[0][j] + p[1] * pca.components[1][j];
                assert!((rec - m.get(i, j)).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn identical_points_give_zero_coords() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]; 5]).unwrap();
        let pca = pca_project(&m).unwrap();
        assert!(pca.coords.iter().flatten().all(|&c| c == 0.0));
        assert_eq!(pca.explained_variance, [0.0, 0.0]);
    }

    #[test]
    fn rejects_degenerate_and_nonfinite() {
        let one = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(pca_project(&one).unwrap_err().code(), "DEGENERATE_INPUT");
        let nan = Matrix::from_rows(&[[1.0, f64::NAN], [0.0, 0.0]]).unwrap();
        assert_eq!(pca_project(&nan).unwrap_err().code(), "NONFINITE_VALUE");
    }

    #[test]
    fn method_strings() {
        assert_eq!("pca".parse::<ProjectionMethod>().unwrap(), ProjectionMethod::Pca);
        assert_eq!(
            "external:aligned_umap".parse::<ProjectionMethod>().unwrap(),
            ProjectionMethod::External("aligned_umap".into())
        );
        assert!("tsne".parse::<ProjectionMethod>().is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (3usize..12, 2usize..16).prop_flat_map(|(n, d)| {
            prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| Matrix::new(n, d, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn components_orthonormal_and_variance_ordered(m in matrix_strategy()) {
            let pca = pca_project(&m).unwrap();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            prop_assert!((dot(&pca.components[0], &pca.components[0]) - 1.0).abs() < 1e-6);
            prop_assert!((dot(&pca.components[1], &pca.components[1]) - 1.0).abs() < 1e-6);
            prop_assert!(dot(&pca.components[0], &pca.components[1]).abs() < 1e-6);
            prop_assert!(pca.explained_variance[0] >= pca.explained_variance[1]);
            prop_assert!(pca.explained_variance[1] >= 0.0);
        }

        #[test]
        fn variances_match_jacobi_oracle(m in matrix_strategy()) {
            let pca = pca_project(&m).unwrap();
            let (vals, _, _) = covariance_eigen(&m);
            for k in 0..2 {
                prop_assert!((pca.explained_variance[k] - vals[k].max(0.0)).abs() <= 1e-8 * vals[0].max(1.0));
            }
            // Coordinates carry the variance they claim.
            for k in 0..2 {
                let var = pca.coords.iter().map(|p| p[k] * p[k]).sum::<f64>() / (m.rows() - 1) as f64;
                prop_assert!((var - pca.explained_variance[k]).abs() <= 1e-8 * vals[0].max(1.0));
            }
        }

        #[test]
        fn translation_changes_coords_by_sign_only(m in matrix_strategy(), shift in prop::collection::vec(-50.0f64..50.0, 16)) {
            let mut moved = m.clone();
            for i in 0..m.rows() {
                for (j, v) in moved.row_mut(i).iter_mut().enumerate() {
                    *v += shift[j];
                }
            }
            let a = pca_project(&m).unwrap();
            let b = pca_project(&moved).unwrap();
            // Skip near-degenerate spectra where the axes are not unique.
            let [v0, v1] = a.explained_variance;
            prop_assume!(v0 - v1 > 1e-3 * v0.max(1.0));
            let next = covariance_eigen(&m).0.get(2).copied().unwrap_or(0.0);
            prop_assume!(v1 - next > 1e-3 * v0.max(1.0));
            for (p, q) in a.coords.iter().zip(&b.coords) {
                for k in 0..2 {
                    prop_assert!((p[k].abs() - q[k].abs()).abs() < 1e-6);
                }
            }
        }
    }
}
