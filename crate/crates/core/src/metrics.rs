//! Projection-quality metrics: MST-based FPR/FNR, neighborhood metrics and
//! distance-distortion metrics, plus HD k-nearest neighbors.
//!
//! Tie-breaking is ascending `(weight, min id, max id)` everywhere.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::{cosine_distance, euclidean};
use crate::error::{Error, Result};
use crate::matrix::{DistanceMatrix, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mst {
    pub n: usize,
    pub edges: Vec<MstEdge>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Mst {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal's algorithm over the complete graph described by `dist`.
pub fn kruskal_mst(dist: &DistanceMatrix) -> Result<Mst> {
    let n = dist.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("MST needs n >= 2, got {n}")));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let w = dist.get(i, j);
            if !w.is_finite() || w < 0.0 {
                return Err(Error::DegenerateInput(format!("edge ({i}, {j}) has weight {w}")));
            }
            pairs.push((w, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut sets = DisjointSet::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    let mut adjacency = vec![Vec::new(); n];
    for (w, u, v) in pairs {
        if sets.union(u, v) {
            edges.push(MstEdge { u, v, weight: w });
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(Mst { n, edges, adjacency })
}

pub fn euclidean_distances(coords: &[[f64; 2]]) -> DistanceMatrix {
    DistanceMatrix::from_fn(coords.len(), |i, j| euclidean(&coords[i], &coords[j]))
}

/// Grows a neighborhood of `start` along MST edges, `steps` times adding the
/// outside node reached by the lightest edge leaving the current set.
pub fn mst_neighborhood(mst: &Mst, start: usize, steps: usize) -> Vec<usize> {
    let mut inside = vec![false; mst.n];
    inside[start] = true;
    // Ordered by (weight, min id, max id), smallest first.
    let mut frontier = BinaryHeap::new();
    let push = |frontier: &mut BinaryHeap<_>, from: usize, inside: &[bool]| {
        for &(to, w) in mst.neighbors(from) {
            if !inside[to] {
                frontier.push(Reverse((OrdF64(w), from.min(to), from.max(to), to)));
            }
        }
    };
    push(&mut frontier, start, &inside);
    let mut grown = Vec::with_capacity(steps);
    while grown.len() < steps {
        let Some(Reverse((_, _, _, next))) = frontier.pop() else {
            break;
        };
        if inside[next] {
            continue;
        }
        inside[next] = true;
        grown.push(next);
        push(&mut frontier, next, &inside);
    }
    grown
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.fn_ + self.tp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-point confusion counts of the MST-grown 2D neighborhood against the
/// point's HD cluster (the point itself excluded from both sides).
pub fn mst_confusion(hd_labels: &[usize], mst: &Mst) -> Result<Vec<Confusion>> {
    let n = hd_labels.len();
    if mst.n != n {
        return Err(Error::CountMismatch {
            what: "MST nodes vs cluster labels",
            expected: n,
            found: mst.n,
        });
    }
    let k = hd_labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in hd_labels {
        sizes[l] += 1;
    }
    Ok((0..n)
        .map(|p| {
            let own = hd_labels[p];
            let hood = mst_neighborhood(mst, p, sizes[own] - 1);
            let tp = hood.iter().filter(|&&q| hd_labels[q] == own).count();
            let fp = hood.len() - tp;
            let fn_ = sizes[own] - 1 - tp;
            Confusion {
                tp,
                fp,
                fn_,
                tn: n - 1 - tp - fp - fn_,
            }
        })
        .collect())
}

/// Per-point false-positive and false-negative rates.
pub fn fpr_fnr(hd_labels: &[usize], mst: &Mst) -> Result<(Vec<f64>, Vec<f64>)> {
    let conf = mst_confusion(hd_labels, mst)?;
    Ok(conf.iter().map(|c| (c.fpr(), c.fnr())).unzip())
}

/// `k` nearest ids of `i` under `dist`, ties by ascending id.
pub fn nearest(dist: &DistanceMatrix, i: usize, k: usize) -> Vec<usize> {
    let row = dist.row(i);
    let mut others: Vec<usize> = (0..dist.len()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    others.truncate(k);
    others
}

/// HD neighbors by cosine similarity (largest first, ties by id).
pub fn hd_knn(vectors: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = vectors.rows();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    vectors.ensure_finite("k-NN input")?;
    let dist = DistanceMatrix::from_fn(n, |i, j| cosine_distance(vectors.row(i), vectors.row(j)));
    Ok((0..n).map(|i| nearest(&dist, i, k)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetricId {
    Pps,
    Compression,
    Stretching,
    AggError,
    TrueNeighbors,
    FalseNeighbors,
    MissingNeighbors,
    Lcmc,
    Fpr,
    Fnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsBetter,
    HigherIsWorse,
}

impl MetricId {
    pub const ALL: [MetricId; 10] = [
        MetricId::Pps,
        MetricId::Compression,
        MetricId::Stretching,
        MetricId::AggError,
        MetricId::TrueNeighbors,
        MetricId::FalseNeighbors,
        MetricId::MissingNeighbors,
        MetricId::Lcmc,
        MetricId::Fpr,
        MetricId::Fnr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Pps => "PPS",
            MetricId::Compression => "COMPRESSION",
            MetricId::Stretching => "STRETCHING",
            MetricId::AggError => "AGG_ERROR",
            MetricId::TrueNeighbors => "TRUE_NEIGHBORS",
            MetricId::FalseNeighbors => "FALSE_NEIGHBORS",
            MetricId::MissingNeighbors => "MISSING_NEIGHBORS",
            MetricId::Lcmc => "LCMC",
            MetricId::Fpr => "FPR",
            MetricId::Fnr => "FNR",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricId::Pps | MetricId::TrueNeighbors | MetricId::Lcmc => Orientation::HigherIsBetter,
            _ => Orientation::HigherIsWorse,
        }
    }

    /// Documented value range for `n` points with neighborhood sizes in
    /// `[k_min, k_max]` (only LCMC depends on them).
    pub fn range(self, n: usize, k_min: usize, k_max: usize) -> (f64, f64) {
        match self {
            MetricId::Lcmc => {
                let m = n.saturating_sub(1).max(1) as f64;
                (-(k_max as f64) / m, 1.0 - k_min as f64 / m)
            }
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "k", rename_all = "snake_case")]
pub enum KMode {
    Fixed(usize),
    /// Each point uses `max(1, |HD cluster| − 1)`.
    ClusterSize,
}

impl Default for KMode {
    fn default() -> Self {
        KMode::ClusterSize
    }
}

/// Per-point neighborhood sizes.
pub fn resolve_k(k_mode: KMode, n: usize, hd_labels: Option<&[usize]>) -> Result<Vec<usize>> {
    match k_mode {
        KMode::Fixed(k) => {
            if k == 0 || k >= n {
                return Err(Error::KOutOfRange {
                    k,
                    max: n.saturating_sub(1),
                });
            }
            Ok(vec![k; n])
        }
        KMode::ClusterSize => {
            let labels = hd_labels.ok_or_else(|| {
                Error::InvalidConfig("cluster-size k requires HD cluster labels".into())
            })?;
            if labels.len() != n {
                return Err(Error::CountMismatch {
                    what: "cluster labels",
                    expected: n,
                    found: labels.len(),
                });
            }
            if n < 2 {
                return Err(Error::KOutOfRange { k: 1, max: 0 });
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut sizes = vec![0usize; k];
            for &l in labels {
                sizes[l] += 1;
            }
            Ok(labels.iter().map(|&l| (sizes[l].max(2) - 1).min(n - 1)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub layer: usize,
    pub metric: MetricId,
    pub k_mode: KMode,
    pub values: Vec<f64>,
}

fn report(layer: usize, metric: MetricId, k_mode: KMode, values: Vec<f64>) -> QualityReport {
    QualityReport {
        layer,
        metric,
        k_mode,
        values,
    }
}

fn check_shapes(coords: &[[f64; 2]], hd: &Matrix) -> Result<()> {
    if coords.len() != hd.rows() {
        return Err(Error::CountMismatch {
            what: "2D points vs HD vectors",
            expected: hd.rows(),
            found: coords.len(),
        });
    }
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("2D coordinates".into()));
    }
    hd.ensure_finite("HD vectors")
}

/// TRUE/FALSE/MISSING neighbors and LCMC, with euclidean neighborhoods in
/// both spaces.
pub fn neighbor_metrics(
    layer: usize,
    coords: &[[f64; 2]],
    hd: &Matrix,
    k_mode: KMode,
    hd_labels: Option<&[usize]>,
) -> Result<BTreeMap<MetricId, QualityReport>> {
    check_shapes(coords, hd)?;
    let n = coords.len();
    let ks = resolve_k(k_mode, n, hd_labels)?;
    let d2 = euclidean_distances(coords);
    let dh = pairwise_euclidean(hd);
    let mut t = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for (i, &k) in ks.iter().enumerate() {
        let low = nearest(&d2, i, k);
        let high = nearest(&dh, i, k);
        let shared = low.iter().filter(|q| high.contains(q)).count();
        let kf = k as f64;
        t.push(shared as f64 / kf);
        f.push((k - shared) as f64 / kf);
        m.push((high.len() - shared) as f64 / kf);
        l.push(shared as f64 / kf - kf / (n - 1) as f64);
    }
    Ok(BTreeMap::from([
        (MetricId::TrueNeighbors, report(layer, MetricId::TrueNeighbors, k_mode, t)),
        (MetricId::FalseNeighbors, report(layer, MetricId::FalseNeighbors, k_mode, f)),
        (MetricId::MissingNeighbors, report(layer, MetricId::MissingNeighbors, k_mode, m)),
        (MetricId::Lcmc, report(layer, MetricId::Lcmc, k_mode, l)),
    ]))
}

fn pairwise_euclidean(m: &Matrix) -> DistanceMatrix {
    DistanceMatrix::from_fn(m.rows(), |i, j| euclidean(m.row(i), m.row(j)))
}

fn max_normalized(d: &DistanceMatrix) -> DistanceMatrix {
    let max = d.max();
    if max > 0.0 {
        d.map_off_diagonal(|v| v / max)
    } else {
        DistanceMatrix::from_fn(d.len(), |_, _| 0.0)
    }
}

fn unit(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// PPS, point compression, point stretching and aggregated error.
pub fn distance_metrics(
    layer: usize,
    coords: &[[f64; 2]],
    hd: &Matrix,
    k_mode: KMode,
    hd_labels: Option<&[usize]>,
) -> Result<BTreeMap<MetricId, QualityReport>> {
    check_shapes(coords, hd)?;
    let n = coords.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("distance metrics need n >= 2, got {n}")));
    }
    let ks = resolve_k(k_mode, n, hd_labels)?;
    let raw2 = euclidean_distances(coords);
    let rawh = pairwise_euclidean(hd);
    let low = max_normalized(&raw2);
    let high = max_normalized(&rawh);

    let mut compression = Vec::with_capacity(n);
    let mut stretching = Vec::with_capacity(n);
    let mut aggregate = Vec::with_capacity(n);
    let mut pps = Vec::with_capacity(n);
    let denom = (n - 1) as f64;
    for i in 0..n {
        let (mut c, mut s, mut a) = (0.0, 0.0, 0.0);
        for j in (0..n).filter(|&j| j != i) {
            let e = low.get(i, j) - high.get(i, j);
            c += (-e).max(0.0);
            s += e.max(0.0);
            a += e.abs();
        }
        compression.push(c / denom);
        stretching.push(s / denom);
        aggregate.push(a / denom);

        let hood = nearest(&raw2, i, ks[i]);
        let mut dl: Vec<f64> = hood.iter().map(|&j| raw2.get(i, j)).collect();
        let mut dh: Vec<f64> = hood.iter().map(|&j| rawh.get(i, j)).collect();
        unit(&mut dl);
        unit(&mut dh);
        let gap = dl.iter().zip(&dh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        pps.push(1.0 - gap / 2.0);
    }
    Ok(BTreeMap::from([
        (MetricId::Pps, report(layer, MetricId::Pps, k_mode, pps)),
        (MetricId::Compression, report(layer, MetricId::Compression, k_mode, compression)),
        (MetricId::Stretching, report(layer, MetricId::Stretching, k_mode, stretching)),
        (MetricId::AggError, report(layer, MetricId::AggError, k_mode, aggregate)),
    ]))
}

/// All ten metrics for one layer, in [`MetricId::ALL`] order.
pub fn all_metrics(
    layer: usize,
    coords: &[[f64; 2]],
    hd: &Matrix,
    k_mode: KMode,
    hd_labels: &[usize],
) -> Result<Vec<QualityReport>> {
    let mut map = distance_metrics(layer, coords, hd, k_mode, Some(hd_labels))?;
    map.extend(neighbor_metrics(layer, coords, hd, k_mode, Some(hd_labels))?);
    let mst = kruskal_mst(&euclidean_distances(coords))?;
    let (fpr, fnr) = fpr_fnr(hd_labels, &mst)?;
    map.insert(MetricId::Fpr, report(layer, MetricId::Fpr, k_mode, fpr));
    map.insert(MetricId::Fnr, report(layer, MetricId::Fnr, k_mode, fnr));
    Ok(map.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    /// Minimum spanning-tree weight by enumerating every Prüfer sequence.
    fn brute_force_mst_weight(d: &DistanceMatrix) -> f64 {
        let n = d.len();
        if n == 2 {
            return d.get(0, 1);
        }
        let total = n.pow((n - 2) as u32);
        let mut best = f64::INFINITY;
        for code in 0..total {
            let mut seq = Vec::with_capacity(n - 2);
            let mut c = code;
            for _ in 0..n - 2 {
                seq.push(c % n);
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut w = 0.0;
            for &s in &seq {
                let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
                w += d.get(leaf, s);
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            w += d.get(rest[0], rest[1]);
            best = best.min(w);
        }
        best
    }

    #[test]
    fn two_nodes_single_edge() {
        let mst = kruskal_mst(&line(&[0.0, 3.0])).unwrap();
        assert_eq!(mst.edges, vec![MstEdge { u: 0, v: 1, weight: 3.0 }]);
    }

    #[test]
    fn collinear_chain() {
        let mst = kruskal_mst(&line(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(mst.total_weight(), 3.0);
        let pairs: Vec<(usize, usize)> = mst.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn prufer_oracle_counts_all_trees() {
        // Sanity check of the oracle itself: 6^4 sequences for n = 6.
        assert_eq!(6usize.pow(4), 1296);
        let d = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(brute_force_mst_weight(&d), 5.0);
    }

    #[test]
    fn worked_four_point_instance() {
        // HD clusters {p1,p2}, {p3,p4}; 2D p1=0, p3=1, p2=5, p4=6 on a line.
        let coords = [[0.0, 0.0], [5.0, 0.0], [1.0, 0.0], [6.0, 0.0]];
        let labels = [0, 0, 1, 1];
        let mst = kruskal_mst(&euclidean_distances(&coords)).unwrap();
        let mut edges: Vec<(usize, usize, f64)> = mst.edges.iter().map(|e| (e.u, e.v, e.weight)).collect();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        assert_eq!(edges, vec![(0, 2, 1.0), (1, 2, 4.0), (1, 3, 1.0)]);
        let conf = mst_confusion(&labels, &mst).unwrap();
        assert_eq!(conf[0], Confusion { tp: 0, fp: 1, fn_: 1, tn: 1 });
        let (fpr, fnr) = fpr_fnr(&labels, &mst).unwrap();
        assert_eq!((fpr[0], fnr[0]), (0.5, 1.0));
    }

    #[test]
    fn separated_blobs_score_zero() {
        let coords = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let labels = [0, 0, 0, 1, 1, 1];
        let mst = kruskal_mst(&euclidean_distances(&coords)).unwrap();
        let (fpr, fnr) = fpr_fnr(&labels, &mst).unwrap();
        assert!(fpr.iter().chain(&fnr).all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_cluster_scores_zero() {
        let coords = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let labels = [0, 1, 1];
        let mst = kruskal_mst(&euclidean_distances(&coords)).unwrap();
        let conf = mst_confusion(&labels, &mst).unwrap();
        assert_eq!((conf[0].tp, conf[0].fn_, conf[0].fp), (0, 0, 0));
        let (fpr, fnr) = fpr_fnr(&labels, &mst).unwrap();
        assert_eq!((fpr[0], fnr[0]), (0.0, 0.0));
    }

    #[test]
    fn label_count_mismatch() {
        let mst = kruskal_mst(&line(&[0.0, 1.0, 2.0])).unwrap();
        assert_eq!(fpr_fnr(&[0, 0], &mst).unwrap_err().code(), "COUNT_MISMATCH");
    }

    #[test]
    fn knn_by_cosine() {
        let v = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.1], [0.0, 1.0], [1.0, 0.1]]).unwrap();
        let nn = hd_knn(&v, 1).unwrap();
        assert_eq!(nn[0], vec![1]);
        assert_eq!(nn[1], vec![3]);
        assert_eq!(nn[3], vec![1]);
        let all = hd_knn(&v, 3).unwrap();
        assert_eq!(all[0], vec![1, 3, 2]);
        assert_eq!(hd_knn(&v, 0).unwrap_err().code(), "K_OUT_OF_RANGE");
        assert_eq!(hd_knn(&v, 4).unwrap_err().code(), "K_OUT_OF_RANGE");
    }

    #[test]
    fn identity_projection_is_perfect() {
        let pts = [[0.0, 0.0], [1.0, 0.3], [2.5, 1.0], [0.2, 4.0], [3.0, 3.0]];
        let hd = Matrix::from_rows(&pts).unwrap();
        let nb = neighbor_metrics(0, &pts, &hd, KMode::Fixed(2), None).unwrap();
        for i in 0..5 {
            assert_eq!(nb[&MetricId::TrueNeighbors].values[i], 1.0);
            assert_eq!(nb[&MetricId::FalseNeighbors].values[i], 0.0);
            assert_eq!(nb[&MetricId::MissingNeighbors].values[i], 0.0);
            assert_eq!(nb[&MetricId::Lcmc].values[i], 1.0 - 2.0 / 4.0);
        }
        // A similarity transform of the same layout.
        let moved: Vec<[f64; 2]> = pts.iter().map(|p| [3.0 * p[1] + 7.0, -3.0 * p[0] - 1.0]).collect();
        let dm = distance_metrics(0, &moved, &hd, KMode::Fixed(2), None).unwrap();
        for i in 0..5 {
            assert!(dm[&MetricId::AggError].values[i].abs() < 1e-12);
            assert!((dm[&MetricId::Pps].values[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_pair_neighborhood() {
        // HD: 0 near 1, 2 near 3. 2D swaps points 1 and 2.
        let hd = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]]).unwrap();
        let low = [[0.0, 0.0], [10.0, 0.0], [1.0, 0.0], [11.0, 0.0]];
        let nb = neighbor_metrics(0, &low, &hd, KMode::Fixed(1), None).unwrap();
        for i in 0..4 {
            assert_eq!(nb[&MetricId::TrueNeighbors].values[i], 0.0);
            assert_eq!(nb[&MetricId::FalseNeighbors].values[i], 1.0);
            assert_eq!(nb[&MetricId::MissingNeighbors].values[i], 1.0);
        }
    }

    #[test]
    fn collinear_aggregate_error_by_hand() {
        let hd = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        let low = [[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]];
        let dm = distance_metrics(0, &low, &hd, KMode::Fixed(1), None).unwrap();
        // Normalized HD: d01 = .5, d02 = 1, d12 = .5; 2D: .25, 1, .75.
        let e01: f64 = 0.25 - 0.5;
        let e12: f64 = 0.75 - 0.5;
        let expected = [e01.abs() / 2.0, (e01.abs() + e12.abs()) / 2.0, e12.abs() / 2.0];
        for i in 0..3 {
            assert!((dm[&MetricId::AggError].values[i] - expected[i]).abs() < 1e-15);
        }
        assert!((dm[&MetricId::Compression].values[0] - 0.125).abs() < 1e-15);
        assert!((dm[&MetricId::Stretching].values[2] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn coincident_space_is_defined() {
        let hd = Matrix::from_rows(&[[1.0, 1.0]; 4]).unwrap();
        let low = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let dm = distance_metrics(0, &low, &hd, KMode::Fixed(1), None).unwrap();
        for r in dm.values() {
            assert!(r.values.iter().all(|v| v.is_finite()));
        }
        assert!(dm[&MetricId::Stretching].values[0] > 0.0);
    }

    #[test]
    fn cluster_size_k_mode() {
        let ks = resolve_k(KMode::ClusterSize, 5, Some(&[0, 0, 0, 1, 2])).unwrap();
        assert_eq!(ks, vec![2, 2, 2, 1, 1]);
        assert!(resolve_k(KMode::ClusterSize, 5, None).is_err());
        assert_eq!(resolve_k(KMode::Fixed(5), 5, None).unwrap_err().code(), "K_OUT_OF_RANGE");
    }

    fn coords_strategy(max_n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0).prop_map(|(a, b)| [a, b]), 2..=max_n)
    }

    proptest! {
        #[test]
        fn kruskal_matches_prufer_enumeration(pts in coords_strategy(7)) {
            let d = euclidean_distances(&pts);
            let mst = kruskal_mst(&d).unwrap();
            prop_assert_eq!(mst.edges.len(), pts.len() - 1);
            prop_assert!((mst.total_weight() - brute_force_mst_weight(&d)).abs() < 1e-9);
        }

        #[test]
        fn neighborhood_is_connected_with_cluster_size(pts in coords_strategy(15), seed in 0usize..100) {
            let n = pts.len();
            let labels: Vec<usize> = (0..n).map(|i| (i * 7 + seed) % 3).collect();
            let dense = {
                let mut map = BTreeMap::new();
                labels.iter().map(|l| { let next = map.len(); *map.entry(*l).or_insert(next) }).collect::<Vec<_>>()
            };
            let mst = kruskal_mst(&euclidean_distances(&pts)).unwrap();
            for p in 0..n {
                let size = dense.iter().filter(|&&l| l == dense[p]).count();
                let hood = mst_neighborhood(&mst, p, size - 1);
                prop_assert_eq!(hood.len(), size - 1);
                // Each grown node is MST-adjacent to an earlier member.
                let mut seen = vec![p];
                for &q in &hood {
                    prop_assert!(mst.neighbors(q).iter().any(|(r, _)| seen.contains(r)));
                    seen.push(q);
                }
            }
            let (fpr, fnr) = fpr_fnr(&dense, &mst).unwrap();
            prop_assert!(fpr.iter().chain(&fnr).all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
