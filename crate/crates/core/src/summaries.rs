//! Cluster summary labels with a certainty score.
//!
//! `certainty = (c_in / c_total)² · (c_in / cluster_size)²`, where `c_in` counts
//! label carriers inside the cluster and `c_total` inside the whole selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clustering::Space;
use crate::corpus::{Dataset, FeatureKind, TokenOccurrence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub space: Space,
    pub layer: usize,
    pub cluster_id: usize,
    pub feature: FeatureKind,
    pub label: String,
    pub certainty: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertaintyBand {
    Green,
    Yellow,
    Red,
}

/// The values `occ` exhibits for `feature`. Missing annotations yield an
/// empty list; NGRAM yields the bigrams then trigrams of the context window.
pub fn feature_values(occ: &TokenOccurrence, feature: FeatureKind) -> Vec<String> {
    match feature {
        FeatureKind::TokenIndex => vec![occ.token_index.to_string()],
        FeatureKind::Ngram => {
            let window: Vec<String> = occ
                .context_before
                .iter()
                .chain(std::iter::once(&occ.token))
                .chain(&occ.context_after)
                .map(|w| w.to_lowercase())
                .collect();
            (2..=3)
                .flat_map(|len| window.windows(len).map(|w| w.join(" ")).collect::<Vec<_>>())
                .collect()
        }
        kind => occ.annotations.get(&kind).cloned().into_iter().collect(),
    }
}

/// [`feature_values`] with a check that the dataset carries `feature` at all.
pub fn extract_feature_values(
    dataset: &Dataset,
    occurrence: &TokenOccurrence,
    feature: FeatureKind,
) -> Result<Vec<String>> {
    if !dataset.has_feature(feature) {
        return Err(Error::UnknownFeature(feature.to_string()));
    }
    Ok(feature_values(occurrence, feature))
}

/// Number of points exhibiting each value at least once.
fn point_counts<'a>(
    ids: impl IntoIterator<Item = &'a usize>,
    dataset: &Dataset,
    feature: FeatureKind,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for &id in ids {
        let distinct: BTreeSet<String> =
            feature_values(&dataset.occurrences[id], feature).into_iter().collect();
        for v in distinct {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    counts
}

pub fn summarize_cluster(
    members: &[usize],
    feature: FeatureKind,
    dataset: &Dataset,
    universe: &[usize],
) -> Result<(String, f64, usize)> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if !dataset.has_feature(feature) {
        return Err(Error::UnknownFeature(feature.to_string()));
    }
    let inside = point_counts(members, dataset, feature);
    // BTreeMap iteration is lexicographic, so the first maximum wins ties.
    let (label, c_in) = inside
        .iter()
        .fold(None::<(&String, usize)>, |best, (v, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((v, c)),
        })
        .ok_or_else(|| Error::NoFeatureValues(feature.to_string()))?;
    let c_total = universe
        .iter()
        .filter(|&&id| feature_values(&dataset.occurrences[id], feature).contains(label))
        .count()
        .max(c_in);
    let purity = c_in as f64 / members.len() as f64;
    let exclusivity = c_in as f64 / c_total as f64;
    Ok((label.clone(), exclusivity.powi(2) * purity.powi(2), c_in))
}

/// Summaries for every cluster of `labels` (indexed like `ids`). Clusters
/// whose members carry no value of `feature` are skipped.
pub fn summarize_clusters(
    space: Space,
    layer: usize,
    ids: &[usize],
    labels: &[usize],
    feature: FeatureKind,
    dataset: &Dataset,
) -> Result<Vec<ClusterSummary>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (pos, &l) in labels.iter().enumerate() {
        members[l].push(ids[pos]);
    }
    let mut out = Vec::with_capacity(k);
    for (cluster_id, m) in members.iter().enumerate() {
        match summarize_cluster(m, feature, dataset, ids) {
            Ok((label, certainty, support)) => out.push(ClusterSummary {
                space,
                layer,
                cluster_id,
                feature,
                label,
                certainty,
                support,
            }),
            Err(Error::NoFeatureValues(_)) | Err(Error::EmptyCluster) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandThresholds {
    pub yellow: f64,
    pub green: f64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        Self {
            yellow: 1.0 / 3.0,
            green: 2.0 / 3.0,
        }
    }
}

pub fn certainty_band(certainty: f64) -> Result<CertaintyBand> {
    certainty_band_with(certainty, BandThresholds::default())
}

pub fn certainty_band_with(certainty: f64, t: BandThresholds) -> Result<CertaintyBand> {
    if !(0.0..=1.0).contains(&certainty) {
        return Err(Error::OutOfRange(format!("certainty {certainty}")));
    }
    Ok(if certainty >= t.green {
        CertaintyBand::Green
    } else if certainty >= t.yellow {
        CertaintyBand::Yellow
    } else {
        CertaintyBand::Red
    })
}
