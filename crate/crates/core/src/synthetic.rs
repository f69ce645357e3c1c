//! Seeded synthetic corpora with planted cluster structure.
//!
//! Three groups of occurrences live at distinct directions of the embedding
//! space. From layer `merge_at` on, the first two groups share one direction,
//! so the planted partition goes from three clusters to two.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Dataset, EmbeddingTensor, FeatureKind, TokenOccurrence};
use crate::error::{Error, Result};

/// POS label per group.
pub const GROUP_POS: [&str; 3] = ["NOUN", "VERB", "ADJ"];
/// SYNCAT label per group; the first two groups share one, matching the merge.
pub const GROUP_SYNCAT: [&str; 3] = ["NP", "NP", "AP"];
const GROUP_WORD: [&str; 3] = ["divides", "rings", "block"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_points: usize,
    pub n_layers: usize,
    pub dim: usize,
    /// First layer at which groups 0 and 1 coincide.
    pub merge_at: usize,
    /// Standard deviation of the per-coordinate gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_points: 150,
            n_layers: 4,
            dim: 32,
            merge_at: 2,
            noise: 0.05,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Group (0, 1 or 2) of every point.
    pub groups: Vec<usize>,
    /// Planted cluster label of every point, per layer.
    pub planted: Vec<Vec<usize>>,
}

impl Synthetic {
    /// Number of planted clusters at `layer`.
    pub fn planted_k(&self, layer: usize) -> usize {
        self.planted[layer].iter().collect::<BTreeSet<_>>().len()
    }

    /// Distinct (cluster at l, cluster at l+1, POS) triples summed over
    /// consecutive layers: the bundle count a POS-bundled layout should show.
    pub fn planted_transitions(&self) -> usize {
        self.planted
            .windows(2)
            .map(|w| {
                (0..self.groups.len())
                    .map(|i| (w[0][i], w[1][i], self.groups[i]))
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .sum()
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<Synthetic> {
    if config.n_points < 3 || config.n_layers == 0 || config.dim < 3 {
        return Err(Error::InvalidConfig(
            "synthetic corpus needs n_points >= 3, n_layers >= 1, dim >= 3".into(),
        ));
    }
    if !(config.noise.is_finite() && config.noise >= 0.0) {
        return Err(Error::InvalidConfig("noise must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let groups: Vec<usize> = (0..config.n_points).map(|i| i % 3).collect();

    let planted: Vec<Vec<usize>> = (0..config.n_layers)
        .map(|l| {
            groups
                .iter()
                .map(|&g| match (l >= config.merge_at, g) {
                    (true, 1) => 0,
                    (true, 2) => 1,
                    _ => g,
                })
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(config.n_layers * config.n_points * config.dim);
    for (l, labels) in planted.iter().enumerate() {
        for &c in labels {
            // Each layer uses its own set of axes so layers differ.
            let axis = (3 * l + c) % config.dim;
            for d in 0..config.dim {
                let signal = if d == axis { 1.0 } else { 0.0 };
                values.push((signal + normal.sample(&mut rng)) as f32);
            }
        }
    }
    let embeddings = EmbeddingTensor::new(config.n_layers, config.n_points, config.dim, values)?;

    let occurrences = groups
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let before = vec![format!("s{i}"), "the".to_string()];
            let after = vec![GROUP_WORD[g].to_string()];
            TokenOccurrence {
                id: i,
                token: "cell".into(),
                sentence_id: i,
                token_index: 2,
                sentence: format!("s{i} the cell {}", GROUP_WORD[g]),
                context_before: before,
                context_after: after,
                annotations: BTreeMap::from([
                    (FeatureKind::Pos, GROUP_POS[g].to_string()),
                    (FeatureKind::Syncat, GROUP_SYNCAT[g].to_string()),
                ]),
            }
        })
        .collect();
    let dataset = Dataset::new("synthetic", occurrences, embeddings, BTreeMap::new())?;
    Ok(Synthetic {
        dataset,
        groups,
        planted,
    })
}
