#![allow(dead_code)]

use std::path::{Path, PathBuf};

use embedflow::corpus::{Dataset, ExternalProjection};
use embedflow::synthetic::{generate, SyntheticConfig};

pub fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        n_points: 30,
        n_layers: 3,
        dim: 8,
        merge_at: 2,
        noise: 0.05,
        seed: 11,
    }
}

/// Synthetic dataset with an imported projection named `jitter`.
pub fn small_dataset() -> Dataset {
    let mut dataset = generate(&small_config()).unwrap().dataset;
    dataset.name = "small".into();
    // Points 0..3 use a distinct token, one per group.
    for occ in &mut dataset.occurrences[..3] {
        occ.token = "cells".into();
        occ.sentence = occ.sentence.replace(" cell ", " cells ");
    }
    let layers = (0..dataset.n_layers())
        .map(|l| {
            (0..dataset.n_points())
                .map(|i| {
                    let v = dataset.embeddings.vector(l, i);
                    [f64::from(v[3 * l % 8]) + i as f64 * 1e-3, f64::from(v[(3 * l + 1) % 8])]
                })
                .collect()
        })
        .collect();
    dataset.external_projections.insert(
        "jitter".into(),
        ExternalProjection {
            method: "jitter".into(),
            params: serde_json::json!({"seed": 1}),
            layers,
        },
    );
    dataset
}

/// Writes the small dataset into `dir` and returns its manifest path.
pub fn write_small(dir: &Path) -> PathBuf {
    small_dataset().save(dir, "small").unwrap()
}

pub fn session_json(dataset: &str, filter: &str) -> serde_json::Value {
    serde_json::json!({
        "dataset": dataset,
        "token_filter": filter,
        "projections": [{"method": "pca"}],
    })
}
