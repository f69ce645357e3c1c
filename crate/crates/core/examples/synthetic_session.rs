//! Build a full session on a generated corpus and print what it found.
use std::sync::Arc;
use std::time::Instant;

use embedflow::session::{ColorBy, Session, SessionConfig, DEFAULT_MAX_POINTS};
use embedflow::corpus::FeatureKind;
use embedflow::synthetic::{generate, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let synthetic = generate(&SyntheticConfig::default())?;
    let mut config = SessionConfig::new("synthetic", r#"token == "cell""#);
    config.color_by = ColorBy::Feature(FeatureKind::Pos);
    let start = Instant::now();
    let session = Session::build(Arc::new(synthetic.dataset.clone()), &config, DEFAULT_MAX_POINTS)?;
    println!("session {} built in {:?}", session.id, start.elapsed());
    for (pos, layer) in session.rows[0].layers.iter().enumerate() {
        println!(
            "layer {}: 2D k={} ({:?}), HD k={}",
            layer.projection.layer,
            layer.clusters_2d.k_clusters,
            layer.clusters_2d.linkage,
            session.hd[pos].clusters.k_clusters
        );
        for s in &layer.summaries {
            if s.feature == FeatureKind::Pos || s.feature == FeatureKind::Syncat {
                println!("  {} c{} {}={} certainty {:.3}", s.space, s.cluster_id, s.feature, s.label, s.certainty);
            }
        }
    }
    println!(
        "bundles: {} (planted transitions {})",
        session.rows[0].flows.len(),
        synthetic.planted_transitions()
    );
    Ok(())
}
