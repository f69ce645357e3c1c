//! Agglomerative clustering with silhouette-selected cut, in both spaces.
use embedflow::clustering::{
    build_dendrogram, candidate_cluster_counts, cluster_layer, pairwise_distances, select_cut, DistanceMetric,
    Linkage, Space,
};
use embedflow::Matrix;

fn main() -> anyhow::Result<()> {
    // Two tight groups on a line and one outlier.
    let points = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [0.2, 0.1], [5.0, 5.0], [5.1, 5.2], [5.0, 5.1], [9.0, 0.0]])?;
    let dist = pairwise_distances(&points, DistanceMetric::Euclidean)?;
    println!("candidate cluster counts: {:?}", candidate_cluster_counts(dist.len()));
    for linkage in Linkage::ALL {
        let dendrogram = build_dendrogram(&dist, linkage);
        let cut = select_cut(&dendrogram, &dist)?;
        println!(
            "{linkage:?}: k={} silhouette={:.4} labels={:?} leaf order={:?}",
            cut.k_clusters,
            cut.silhouette,
            cut.labels,
            dendrogram.leaf_order()
        );
    }
    let best = cluster_layer(&dist, Space::Ld2, 0)?;
    println!("chosen: {:?} with k={} ({:.4})", best.linkage, best.k_clusters, best.silhouette);
    Ok(())
}
