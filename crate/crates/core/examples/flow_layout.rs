//! Framing, cluster stretching, bundled flow paths and hulls for two layers.
use embedflow::clustering::Space;
use embedflow::flow::{
    build_flow_paths, bundle_flows, cluster_hulls, normalize_and_frame, stretch_clusters, DEFAULT_GAP,
};

fn main() -> anyhow::Result<()> {
    let layer0 = vec![[0.0, 0.0], [1.0, 0.2], [0.5, 0.1], [3.0, 2.0], [3.5, 2.2]];
    let layer1 = vec![[0.0, 1.0], [0.2, 1.1], [2.0, 0.0], [2.1, 0.2], [2.2, 0.1]];
    let labels0 = [0, 0, 0, 1, 1];
    let labels1 = [0, 0, 1, 1, 1];
    let property: Vec<String> = ["NOUN", "NOUN", "VERB", "VERB", "VERB"].map(String::from).to_vec();

    let (scaled, frames) = normalize_and_frame(&[layer0, layer1], 100.0, 100.0, DEFAULT_GAP)?;
    let s0 = stretch_clusters(&scaled[0], &labels0, 2.0)?;
    let s1 = stretch_clusters(&scaled[1], &labels1, 2.0)?;
    println!("cluster offsets: layer 0 {:?}, layer 1 {:?}", s0.offsets, s1.offsets);

    let links: Vec<(usize, usize)> = (0..5).map(|i| (i, i)).collect();
    let paths = build_flow_paths(&s0.positions, &s1.positions, &frames[0], &frames[1], &links)?;
    for bundle in bundle_flows(&paths, &labels0, &labels1, &property)? {
        println!(
            "bundle {:?} size {} continuous {}: first link {}",
            bundle.color_key,
            bundle.size(),
            bundle.is_continuous(),
            serde_json::to_string(&bundle.segments[..4])?
        );
    }
    for hull in cluster_hulls(Space::Ld2, &s0.positions, &labels0) {
        println!("hull of cluster {}: {:?}", hull.cluster_id, hull.vertices);
    }
    Ok(())
}
