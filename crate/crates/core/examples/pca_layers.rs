//! Project every layer of a generated corpus to 2D with per-layer PCA.
use embedflow::projection::{project_layers, ProjectionConfig};
use embedflow::synthetic::{generate, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let dataset = generate(&SyntheticConfig::default())?.dataset;
    let selection: Vec<usize> = (0..dataset.n_points()).collect();
    for proj in project_layers(&dataset, &ProjectionConfig::pca(), &selection)? {
        let [v1, v2] = proj.explained_variance.unwrap_or_default();
        let first = proj.coords[0];
        println!(
            "layer {}: explained variance {v1:.4} / {v2:.4}, point 0 at ({:.3}, {:.3})",
            proj.layer, first[0], first[1]
        );
    }
    Ok(())
}
