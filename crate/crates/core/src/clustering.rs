//! Agglomerative clustering with silhouette-driven cut selection.
//!
//! Dendrogram node ids follow the usual convention: leaves are `0..n`, and the
//! cluster created by merge `i` is node `n + i`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DistanceMatrix, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "2d")]
    Ld2,
    #[serde(rename = "hd")]
    Hd,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Ld2 => "2d",
            Space::Hd => "hd",
        })
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Ok(Space::Ld2),
            "hd" => Ok(Space::Hd),
            _ => Err(Error::InvalidConfig(format!("unknown space {s:?}; expected 2d or hd"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    /// WPGMA.
    Weighted,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Single,
        Linkage::Complete,
        Linkage::Average,
        Linkage::Weighted,
    ];

    /// Lance–Williams update of the distance from `k` to the union of `a` and `b`.
    fn update(self, d_ak: f64, d_bk: f64, size_a: usize, size_b: usize) -> f64 {
        match self {
            Linkage::Single => d_ak.min(d_bk),
            Linkage::Complete => d_ak.max(d_bk),
            Linkage::Average => {
                (size_a as f64 * d_ak + size_b as f64 * d_bk) / (size_a + size_b) as f64
            }
            Linkage::Weighted => 0.5 * d_ak + 0.5 * d_bk,
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `1 - cos(a, b)`, in `[0, 2]`. A zero vector is at distance 1 from everything
/// else; identical vectors are at distance exactly 0.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0)
}

pub fn pairwise_distances(vectors: &Matrix, metric: DistanceMetric) -> Result<DistanceMatrix> {
    vectors.ensure_finite("distance input")?;
    let f = match metric {
        DistanceMetric::Cosine => cosine_distance,
        DistanceMetric::Euclidean => euclidean,
    };
    Ok(DistanceMatrix::from_fn(vectors.rows(), |i, j| {
        f(vectors.row(i), vectors.row(j))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Leaf count of the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Flat labels after applying the first `n - k` merges. Labels are dense
    /// and numbered by first appearance in point order.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        assert!(k >= 1 && k <= self.n.max(1), "cut into {k} clusters of {}", self.n);
        let mut parent: Vec<usize> = (0..self.n + self.merges.len()).collect();
        for (i, m) in self.merges.iter().take(self.n - k).enumerate() {
            parent[m.left] = self.n + i;
            parent[m.right] = self.n + i;
        }
        let root = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let mut seen = std::collections::HashMap::new();
        (0..self.n)
            .map(|leaf| {
                let r = root(leaf);
                let next = seen.len();
                *seen.entry(r).or_insert(next)
            })
            .collect()
    }

    /// Left-to-right leaf order; at each merge the child holding the smaller
    /// leaf id goes first.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n;
        if n == 0 {
            return Vec::new();
        }
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut min_leaf: Vec<usize> = (0..n).collect();
        for m in &self.merges {
            min_leaf.push(min_leaf[m.left].min(min_leaf[m.right]));
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(node) = stack.pop() {
            if node < n {
                order.push(node);
                continue;
            }
            let m = &self.merges[node - n];
            let (first, second) = if min_leaf[m.left] <= min_leaf[m.right] {
                (m.left, m.right)
            } else {
                (m.right, m.left)
            };
            stack.push(second);
            stack.push(first);
        }
        order
    }
}

/// Agglomerates all points under `linkage`. The closest active pair is
/// chosen with ties broken by the smallest leaf ids of the two clusters.
pub fn build_dendrogram(dist: &DistanceMatrix, linkage: Linkage) -> Dendrogram {
    let n = dist.len();
    let mut d: Vec<f64> = dist.as_slice().to_vec();
    // Each active slot is indexed by its cluster's smallest leaf id.
    let mut active: Vec<usize> = (0..n).collect();
    let mut node: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let (mut best, mut bi, mut bj) = (f64::INFINITY, 0, 1);
        for (x, &a) in active.iter().enumerate() {
            let row = &d[a * n..(a + 1) * n];
            for (y, &b) in active.iter().enumerate().skip(x + 1) {
                if row[b] < best {
                    (best, bi, bj) = (row[b], x, y);
                }
            }
        }
        let (a, b) = (active[bi], active[bj]);
        merges.push(Merge {
            left: node[a],
            right: node[b],
            height: best,
            size: size[a] + size[b],
        });
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let v = linkage.update(d[a * n + k], d[b * n + k], size[a], size[b]);
            d[a * n + k] = v;
            d[k * n + a] = v;
        }
        size[a] += size[b];
        node[a] = n + merges.len() - 1;
        active.remove(bj);
    }
    Dendrogram { n, merges }
}

/// Mean silhouette. Singleton clusters contribute 0, as do points whose
/// cohesion and separation are both 0.
pub fn silhouette(dist: &DistanceMatrix, labels: &[usize]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if counts[own] <= 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let row = dist.row(i);
        for (j, &l) in labels.iter().enumerate() {
            sums[l] += row[j];
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

/// Cluster counts considered by [`select_cut`]: the `ceil(0.1 · (n − 1))`
/// cuts nearest the root, restricted to `2 ≤ k ≤ n − 1`.
pub fn candidate_cluster_counts(n: usize) -> std::ops::RangeInclusive<usize> {
    let window = ((n.saturating_sub(1)) as f64 * 0.1).ceil() as usize;
    2..=(window + 1).min(n.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub labels: Vec<usize>,
    pub k_clusters: usize,
    pub silhouette: f64,
}

/// Best-silhouette cut among [`candidate_cluster_counts`]; ties go to fewer
/// clusters.
pub fn select_cut(dendrogram: &Dendrogram, dist: &DistanceMatrix) -> Result<Cut> {
    let n = dendrogram.n;
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let mut best: Option<Cut> = None;
    for k in candidate_cluster_counts(n) {
        let labels = dendrogram.cut(k);
        let s = silhouette(dist, &labels);
        if best.as_ref().is_none_or(|b| s > b.silhouette) {
            best = Some(Cut {
                labels,
                k_clusters: k,
                silhouette: s,
            });
        }
    }
    Ok(best.expect("candidate window is non-empty for n >= 3"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub space: Space,
    pub layer: usize,
    pub labels: Vec<usize>,
    pub linkage: Linkage,
    pub silhouette: f64,
    pub k_clusters: usize,
}

impl ClusterAssignment {
    /// Everything in one cluster; used when there are too few points to cut.
    pub fn single_cluster(space: Space, layer: usize, n: usize) -> Self {
        Self {
            space,
            layer,
            labels: vec![0; n],
            linkage: Linkage::Single,
            silhouette: 0.0,
            k_clusters: 1,
        }
    }

    /// Member ids of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Runs all four linkages and keeps the best silhouette (ties by linkage order).
pub fn cluster_layer(dist: &DistanceMatrix, space: Space, layer: usize) -> Result<ClusterAssignment> {
    let mut best: Option<ClusterAssignment> = None;
    for linkage in Linkage::ALL {
        let dendrogram = build_dendrogram(dist, linkage);
        let cut = select_cut(&dendrogram, dist)?;
        if best.as_ref().is_none_or(|b| cut.silhouette > b.silhouette) {
            best = Some(ClusterAssignment {
                space,
                layer,
                labels: cut.labels,
                linkage,
                silhouette: cut.silhouette,
                k_clusters: cut.k_clusters,
            });
        }
    }
    Ok(best.expect("four linkages evaluated"))
}
