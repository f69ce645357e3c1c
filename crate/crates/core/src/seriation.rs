//! Row/column orderings for distance-matrix views.

use serde::{Deserialize, Serialize};

use crate::clustering::{build_dendrogram, Linkage, Space};
use crate::matrix::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Linkage,
    Nn,
    Greedy,
}

impl Ordering {
    pub const ALL: [Ordering; 3] = [Ordering::Linkage, Ordering::Nn, Ordering::Greedy];
}

impl std::str::FromStr for Ordering {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "linkage" => Ok(Ordering::Linkage),
            "nn" => Ok(Ordering::Nn),
            "greedy" => Ok(Ordering::Greedy),
            _ => Err(crate::Error::InvalidConfig(format!("unknown ordering {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixView {
    pub space: Space,
    pub layer: usize,
    pub dist: DistanceMatrix,
    pub order: Vec<usize>,
    pub ordering_method: Ordering,
    /// Cluster ids for the top bar (2D clusters).
    pub row_cluster_colors: Vec<usize>,
    /// Cluster ids for the left bar (HD clusters).
    pub col_cluster_colors: Vec<usize>,
}

/// Dendrogram leaf order under `linkage`.
pub fn order_linkage(dist: &DistanceMatrix, linkage: Linkage) -> Vec<usize> {
    build_dendrogram(dist, linkage).leaf_order()
}

/// Nearest-neighbor chain starting at point 0.
pub fn order_nn_heuristic(dist: &DistanceMatrix) -> Vec<usize> {
    let n = dist.len();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = 0;
    visited[0] = true;
    order.push(0);
    while order.len() < n {
        let row = dist.row(current);
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
            .expect("an unvisited point remains");
        visited[next] = true;
        order.push(next);
        current = next;
    }
    order
}

/// Greedy edge insertion: shortest pairs first, keeping path degree ≤ 2 and
/// no cycles, then walks the resulting path from its lower-id endpoint.
pub fn order_greedy(dist: &DistanceMatrix) -> Vec<usize> {
    let n = dist.len();
    if n <= 1 {
        return (0..n).collect();
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((dist.get(i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Fragment endpoints are tracked via a union-find over fragments.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); n];
    let mut accepted = 0;
    for (_, i, j) in pairs {
        if adj[i].len() >= 2 || adj[j].len() >= 2 {
            continue;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj {
            continue;
        }
        parent[ri] = rj;
        adj[i].push(j);
        adj[j].push(i);
        accepted += 1;
        if accepted == n - 1 {
            break;
        }
    }
    let start = (0..n).find(|&v| adj[v].len() == 1).expect("a path has two endpoints");
    let mut order = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        order.push(cur);
        match adj[cur].iter().find(|&&x| x != prev) {
            Some(&next) => {
                prev = cur;
                cur = next;
            }
            None => break,
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    fn is_permutation(order: &[usize], n: usize) -> bool {
        let mut s = order.to_vec();
        s.sort_unstable();
        s == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn linkage_examples() {
        assert_eq!(order_linkage(&line(&[0.0, 1.0]), Linkage::Average), vec![0, 1]);
        assert_eq!(order_linkage(&line(&[0.0, 1.0, 10.0]), Linkage::Single), vec![0, 1, 2]);
        let blobs = line(&[0.0, 50.0, 0.2, 50.3, 0.1, 50.1]);
        let order = order_linkage(&blobs, Linkage::Complete);
        let side: Vec<bool> = order.iter().map(|&i| i % 2 == 0).collect();
        assert_eq!(side, vec![true, true, true, false, false, false]);
    }

    #[test]
    fn nn_examples() {
        assert_eq!(order_nn_heuristic(&line(&[0.0, 10.0, 1.0])), vec![0, 2, 1]);
        let tri = DistanceMatrix::from_fn(3, |_, _| 1.0);
        assert_eq!(order_nn_heuristic(&tri), vec![0, 1, 2]);
        assert_eq!(order_nn_heuristic(&line(&[4.0])), vec![0]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(order_greedy(&line(&[0.0, 1.0, 3.0, 6.0])), vec![0, 1, 2, 3]);
        assert_eq!(order_greedy(&line(&[0.0, 1.0])), vec![0, 1]);
        // Pairs {0,2} and {1,3}; the bridge 2–1 (distance 9) joins them.
        assert_eq!(order_greedy(&line(&[0.0, 10.0, 1.0, 11.0])), vec![0, 2, 1, 3]);
    }

    /// Integer-valued dissimilarities keep the constant shift exact.
    fn dist_strategy() -> impl Strategy<Value = DistanceMatrix> {
        (1usize..25).prop_flat_map(|n| {
            prop::collection::vec(1u32..30, n * n).prop_map(move |v| {
                DistanceMatrix::from_fn(n, |i, j| f64::from(v[i * n + j]))
            })
        })
    }

    proptest! {
        #[test]
        fn orderings_are_permutations_and_shift_invariant(d in dist_strategy(), c in 1u32..50) {
            let n = d.len();
            let shifted = d.map_off_diagonal(|v| v + f64::from(c));
            for l in Linkage::ALL {
                let o = order_linkage(&d, l);
                prop_assert!(is_permutation(&o, n));
                // Average/weighted updates round differently after the shift.
                if matches!(l, Linkage::Single | Linkage::Complete) {
                    prop_assert_eq!(o, order_linkage(&shifted, l));
                }
            }
            let nn = order_nn_heuristic(&d);
            prop_assert!(is_permutation(&nn, n));
            prop_assert_eq!(nn, order_nn_heuristic(&shifted));
            let g = order_greedy(&d);
            prop_assert!(is_permutation(&g, n));
            prop_assert_eq!(g, order_greedy(&shifted));
        }

        #[test]
        fn block_structure_stays_contiguous(sizes in (1usize..6, 1usize..6), l in 0usize..4) {
            let (a, b) = sizes;
            let n = a + b;
            let d = DistanceMatrix::from_fn(n, |i, j| if (i < a) == (j < a) { 1.0 } else { 10.0 });
            let o = order_linkage(&d, Linkage::ALL[l]);
            let switches = o.windows(2).filter(|w| (w[0] < a) != (w[1] < a)).count();
            prop_assert_eq!(switches, 1);
        }
    }
}
