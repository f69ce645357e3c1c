//! The full per-point quality metric suite for one projected layer.
use embedflow::clustering::{cluster_layer, pairwise_distances, DistanceMetric, Space};
use embedflow::metrics::{all_metrics, KMode};
use embedflow::projection::pca_project;
use embedflow::synthetic::{generate, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let dataset = generate(&SyntheticConfig { n_points: 60, noise: 0.2, ..Default::default() })?.dataset;
    let ids: Vec<usize> = (0..dataset.n_points()).collect();
    let hd = dataset.embeddings.layer_matrix(0, &ids);
    let coords = pca_project(&hd)?.coords;
    let hd_clusters = cluster_layer(&pairwise_distances(&hd, DistanceMetric::Cosine)?, Space::Hd, 0)?;
    for k_mode in [KMode::Fixed(5), KMode::ClusterSize] {
        println!("{k_mode:?}");
        for report in all_metrics(0, &coords, &hd, k_mode, &hd_clusters.labels)? {
            let mean = report.values.iter().sum::<f64>() / report.values.len() as f64;
            let worst = report.values.iter().copied().fold(f64::NAN, f64::max);
            println!("  {:<12} mean {mean:>8.4}  max {worst:>8.4}  ({:?})", report.metric.as_str(), report.metric.orientation());
        }
    }
    Ok(())
}
