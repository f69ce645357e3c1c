//! Cluster summary labels with certainty and traffic-light bands.
use std::collections::BTreeMap;

use embedflow::clustering::Space;
use embedflow::corpus::{Dataset, EmbeddingTensor, FeatureKind, TokenOccurrence};
use embedflow::summaries::{certainty_band, summarize_clusters};

fn occurrence(id: usize, word: &str, pos: &str) -> TokenOccurrence {
    TokenOccurrence {
        id,
        token: "active".into(),
        sentence_id: id,
        token_index: 1,
        context_before: vec!["very".into()],
        context_after: vec![word.into()],
        sentence: format!("very active {word}"),
        annotations: BTreeMap::from([(FeatureKind::Pos, pos.to_string())]),
    }
}

fn main() -> anyhow::Result<()> {
    let tags = ["ADJ", "ADJ", "ADJ", "ADJ", "NOUN", "NOUN", "ADJ", "VERB"];
    let occ: Vec<_> = tags
        .iter()
        .enumerate()
        .map(|(i, t)| occurrence(i, if i % 2 == 0 { "volcano" } else { "member" }, t))
        .collect();
    let emb = EmbeddingTensor::new(1, occ.len(), 2, vec![0.0; occ.len() * 2])?;
    let dataset = Dataset::new("demo", occ, emb, BTreeMap::new())?;
    let ids: Vec<usize> = (0..dataset.n_points()).collect();
    let labels = [0, 0, 0, 0, 1, 1, 1, 1];
    for feature in [FeatureKind::Pos, FeatureKind::TokenIndex, FeatureKind::Ngram] {
        for s in summarize_clusters(Space::Ld2, 0, &ids, &labels, feature, &dataset)? {
            println!(
                "cluster {} {}: {:?} certainty {:.4} ({:?})",
                s.cluster_id,
                feature,
                s.label,
                s.certainty,
                certainty_band(s.certainty)?
            );
        }
    }
    Ok(())
}
