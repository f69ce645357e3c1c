//! Sessions: a configuration plus every artifact computed from it, and the
//! versioned JSON payloads served for it.
//!
//! Payload bodies are rendered once when the session is built, so every read
//! returns identical bytes, and the CLI writes exactly what the service serves.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{cluster_layer, pairwise_distances, ClusterAssignment, DistanceMetric, Linkage, Space};
use crate::corpus::{filter_occurrences, Dataset, FeatureKind, Filter, TokenOccurrence};
use crate::error::{Error, Result};
use crate::flow::{
    build_flow_paths, bundle_flows, cluster_hulls, normalize_and_frame, stretch_clusters, Frame, Hull, Segment,
    DEFAULT_GAP, DEFAULT_PADDING_FRACTION,
};
use crate::matrix::DistanceMatrix;
use crate::metrics::{all_metrics, hd_knn, resolve_k, KMode, MetricId, Orientation, QualityReport};
use crate::projection::{project_layer, LayerProjection, ProjectionConfig};
use crate::seriation::{order_greedy, order_linkage, order_nn_heuristic, Ordering};
use crate::summaries::{certainty_band, feature_values, summarize_clusters, CertaintyBand, ClusterSummary};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    #[serde(default)]
    pub metric_2d: DistanceMetric,
    #[serde(default)]
    pub metric_hd: DistanceMetric,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            metric_2d: DistanceMetric::Cosine,
            metric_hd: DistanceMetric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default)]
    pub k_mode: KMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub width: f64,
    pub height: f64,
    pub gap: f64,
    /// Defaults to 2% of `height`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<f64>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            width: 200.0,
            height: 200.0,
            gap: DEFAULT_GAP,
            padding: None,
        }
    }
}

impl LayoutConfig {
    pub fn padding(&self) -> f64 {
        self.padding.unwrap_or(DEFAULT_PADDING_FRACTION * self.height)
    }
}

/// What points and flows are colored by: a linguistic feature (categorical)
/// or a quality metric (sequential).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ColorBy {
    Feature(FeatureKind),
    Metric(MetricId),
}

impl Default for ColorBy {
    fn default() -> Self {
        ColorBy::Feature(FeatureKind::Pos)
    }
}

impl std::str::FromStr for ColorBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(f) = s.parse::<FeatureKind>() {
            return Ok(ColorBy::Feature(f));
        }
        s.parse::<MetricId>()
            .map(ColorBy::Metric)
            .map_err(|_| Error::InvalidConfig(format!("color_by {s:?} is neither a feature nor a metric")))
    }
}

impl TryFrom<String> for ColorBy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ColorBy> for String {
    fn from(c: ColorBy) -> Self {
        match c {
            ColorBy::Feature(f) => f.to_string(),
            ColorBy::Metric(m) => m.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub dataset: String,
    #[serde(default)]
    pub token_filter: String,
    pub projections: Vec<ProjectionConfig>,
    /// Inclusive model-layer range; all layers when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<[usize; 2]>,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub color_by: ColorBy,
}

impl SessionConfig {
    pub fn new(dataset: impl Into<String>, token_filter: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            token_filter: token_filter.into(),
            projections: vec![ProjectionConfig::pca()],
            layers: None,
            clustering: ClusteringConfig::default(),
            metrics: MetricsConfig::default(),
            layout: LayoutConfig::default(),
            color_by: ColorBy::default(),
        }
    }

    /// Checks local validity and canonicalizes the filter text.
    pub fn normalized(&self) -> Result<(SessionConfig, Filter)> {
        if self.projections.is_empty() || self.projections.len() > 2 {
            return Err(Error::InvalidConfig(format!(
                "one or two projections required, got {}",
                self.projections.len()
            )));
        }
        if let Some([a, b]) = self.layers {
            if a > b {
                return Err(Error::InvalidConfig(format!("empty layer range {a}-{b}")));
            }
        }
        let l = &self.layout;
        if !(l.width > 0.0 && l.height > 0.0 && l.gap >= 0.0 && l.padding().is_finite() && l.padding() >= 0.0) {
            return Err(Error::InvalidConfig("layout dimensions must be positive".into()));
        }
        if let KMode::Fixed(0) = self.metrics.k_mode {
            return Err(Error::KOutOfRange { k: 0, max: 0 });
        }
        let filter: Filter = self.token_filter.parse()?;
        let mut config = self.clone();
        config.token_filter = filter.to_string();
        Ok((config, filter))
    }

    /// Content digest of the normalized configuration.
    pub fn hash(&self) -> Result<String> {
        let (config, _) = self.normalized()?;
        let bytes = serde_json::to_vec(&config).expect("config serializes");
        Ok(hex::encode(Sha256::digest(&bytes))[..32].to_string())
    }
}

/// Everything computed for one layer of one projection row.
#[derive(Debug, Clone)]
pub struct RowLayer {
    pub projection: LayerProjection,
    pub dist_2d: DistanceMatrix,
    pub clusters_2d: ClusterAssignment,
    pub metrics: Vec<QualityReport>,
    pub summaries: Vec<ClusterSummary>,
    pub positions: Vec<[f64; 2]>,
    pub cluster_offsets: Vec<f64>,
    pub hulls: Vec<Hull>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub config: ProjectionConfig,
    pub layers: Vec<RowLayer>,
    /// Bundled flows between consecutive session layers.
    pub flows: Vec<crate::flow::FlowPath>,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct HdLayer {
    pub dist: DistanceMatrix,
    pub clusters: ClusterAssignment,
}

/// Rendered JSON payloads.
#[derive(Debug, Clone)]
pub struct Payloads {
    pub layout: Vec<u8>,
    pub metrics: Vec<u8>,
    pub matrices: Vec<u8>,
    pub summaries: Vec<u8>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub dataset: Arc<Dataset>,
    /// Dataset ids of the selection, ascending; all per-point arrays follow it.
    pub ids: Vec<usize>,
    /// Model layers covered, ascending.
    pub layers: Vec<usize>,
    pub frames: Vec<Frame>,
    pub hd: Vec<HdLayer>,
    pub rows: Vec<Row>,
    pub payloads: Payloads,
}

fn cluster_or_single(dist: &DistanceMatrix, space: Space, layer: usize) -> Result<ClusterAssignment> {
    match cluster_layer(dist, space, layer) {
        Err(Error::TooFewPoints { .. }) => Ok(ClusterAssignment::single_cluster(space, layer, dist.len())),
        other => other,
    }
}

/// Features the dataset can summarize, in enum order.
fn summary_features(dataset: &Dataset) -> Vec<FeatureKind> {
    FeatureKind::ALL.into_iter().filter(|&f| dataset.has_feature(f)).collect()
}

fn point_property(occ: &TokenOccurrence, feature: FeatureKind) -> String {
    feature_values(occ, feature).into_iter().next().unwrap_or_default()
}

impl Session {
    pub fn build(dataset: Arc<Dataset>, config: &SessionConfig, max_points: usize) -> Result<Session> {
        let (config, filter) = config.normalized()?;
        if config.dataset != dataset.name {
            return Err(Error::UnknownDataset(config.dataset.clone()));
        }
        let id = config.hash()?;
        let ids = filter_occurrences(&dataset, &filter)?;
        if ids.len() < 3 {
            return Err(Error::TooFewPoints { min: 3, got: ids.len() });
        }
        if ids.len() > max_points {
            return Err(Error::TooManyPoints { max: max_points, got: ids.len() });
        }
        let n = ids.len();
        let layers: Vec<usize> = match config.layers {
            None => (0..dataset.n_layers()).collect(),
            Some([a, b]) if b < dataset.n_layers() => (a..=b).collect(),
            Some([_, b]) => {
                return Err(Error::InvalidConfig(format!(
                    "layer {b} out of range; dataset has {} layers",
                    dataset.n_layers()
                )))
            }
        };
        if let ColorBy::Feature(f) = config.color_by {
            if !dataset.has_feature(f) {
                return Err(Error::UnknownFeature(f.to_string()));
            }
        }
        if let KMode::Fixed(k) = config.metrics.k_mode {
            resolve_k(KMode::Fixed(k), n, None)?;
        }
        for p in &config.projections {
            if let crate::projection::ProjectionMethod::External(name) = &p.method {
                if !dataset.external_projections.contains_key(name) {
                    return Err(Error::UnknownProjection(name.clone()));
                }
            }
        }

        let hd_vectors: Vec<crate::Matrix> = layers
            .iter()
            .map(|&l| dataset.embeddings.layer_matrix(l, &ids))
            .collect();
        let hd: Vec<HdLayer> = layers
            .par_iter()
            .zip(&hd_vectors)
            .map(|(&l, v)| {
                let dist = pairwise_distances(v, config.clustering.metric_hd)?;
                let clusters = cluster_or_single(&dist, Space::Hd, l)?;
                Ok(HdLayer { dist, clusters })
            })
            .collect::<Result<_>>()?;

        let features = summary_features(&dataset);
        let layout = config.layout;
        let mut frames = Vec::new();
        let mut rows = Vec::with_capacity(config.projections.len());
        for pconf in &config.projections {
            let computed: Vec<(LayerProjection, DistanceMatrix, ClusterAssignment, Vec<QualityReport>, Vec<ClusterSummary>)> = layers
                .par_iter()
                .enumerate()
                .map(|(pos, &l)| {
                    let proj = project_layer(&dataset, pconf, &ids, l)?;
                    let dist_2d = pairwise_distances(
                        &crate::Matrix::from_rows(&proj.coords)?,
                        config.clustering.metric_2d,
                    )?;
                    let clusters_2d = cluster_or_single(&dist_2d, Space::Ld2, l)?;
                    let hd_labels = &hd[pos].clusters.labels;
                    let metrics = all_metrics(l, &proj.coords, &hd_vectors[pos], config.metrics.k_mode, hd_labels)?;
                    let mut summaries = Vec::new();
                    for &f in &features {
                        summaries.extend(summarize_clusters(Space::Ld2, l, &ids, &clusters_2d.labels, f, &dataset)?);
                        summaries.extend(summarize_clusters(Space::Hd, l, &ids, hd_labels, f, &dataset)?);
                    }
                    Ok((proj, dist_2d, clusters_2d, metrics, summaries))
                })
                .collect::<Result<_>>()?;

            let coords: Vec<Vec<[f64; 2]>> = computed.iter().map(|c| c.0.coords.clone()).collect();
            let (scaled, row_frames) = normalize_and_frame(&coords, layout.width, layout.height, layout.gap)?;
            let row_frames: Vec<Frame> = row_frames
                .into_iter()
                .zip(&layers)
                .map(|(f, &l)| Frame { layer: l, ..f })
                .collect();
            frames = row_frames.clone();

            let mut row_layers = Vec::with_capacity(layers.len());
            for (pos, ((proj, dist_2d, clusters_2d, metrics, summaries), scaled)) in
                computed.into_iter().zip(scaled).enumerate()
            {
                let stretched = stretch_clusters(&scaled, &clusters_2d.labels, layout.padding())?;
                let mut hulls = cluster_hulls(Space::Ld2, &stretched.positions, &clusters_2d.labels);
                hulls.extend(cluster_hulls(Space::Hd, &stretched.positions, &hd[pos].clusters.labels));
                row_layers.push(RowLayer {
                    projection: proj,
                    dist_2d,
                    clusters_2d,
                    metrics,
                    summaries,
                    positions: stretched.positions,
                    cluster_offsets: stretched.offsets,
                    hulls,
                });
            }

            let property: Vec<String> = match config.color_by {
                ColorBy::Feature(f) => ids.iter().map(|&i| point_property(&dataset.occurrences[i], f)).collect(),
                ColorBy::Metric(_) => vec![String::new(); n],
            };
            let links: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
            let mut flows = Vec::new();
            for pos in 0..layers.len().saturating_sub(1) {
                let (a, b) = (&row_layers[pos], &row_layers[pos + 1]);
                let paths = build_flow_paths(&a.positions, &b.positions, &row_frames[pos], &row_frames[pos + 1], &links)?;
                flows.extend(bundle_flows(&paths, &a.clusters_2d.labels, &b.clusters_2d.labels, &property)?);
            }
            let height = row_layers
                .iter()
                .flat_map(|l| l.positions.iter().map(|p| p[1]))
                .fold(layout.height, f64::max);
            rows.push(Row {
                config: pconf.clone(),
                layers: row_layers,
                flows,
                height,
            });
        }

        let mut session = Session {
            id,
            config,
            dataset,
            ids,
            layers,
            frames,
            hd,
            rows,
            payloads: Payloads {
                layout: Vec::new(),
                metrics: Vec::new(),
                matrices: Vec::new(),
                summaries: Vec::new(),
            },
        };
        session.payloads = Payloads {
            layout: to_json(&session.layout_payload()?),
            metrics: to_json(&session.metrics_payload()),
            matrices: to_json(&session.matrices_payload()),
            summaries: to_json(&session.summaries_payload()?),
        };
        Ok(session)
    }

    pub fn n_points(&self) -> usize {
        self.ids.len()
    }

    /// Position of a model layer within the session.
    pub fn layer_position(&self, layer: usize) -> Option<usize> {
        self.layers.iter().position(|&l| l == layer)
    }

    /// Position of a dataset id within the selection.
    pub fn point_position(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn dataset_ids(&self, local: &[usize]) -> Vec<usize> {
        local.iter().map(|&i| self.ids[i]).collect()
    }

    fn summary_json(s: &ClusterSummary) -> Result<SummaryJson> {
        Ok(SummaryJson {
            space: s.space,
            cluster_id: s.cluster_id,
            feature: s.feature,
            label: s.label.clone(),
            certainty: s.certainty,
            band: certainty_band(s.certainty)?,
            support: s.support,
        })
    }

    fn color_payload(&self) -> ColorJson {
        match self.config.color_by {
            ColorBy::Feature(f) => {
                let categories: BTreeSet<String> = self
                    .ids
                    .iter()
                    .map(|&i| point_property(&self.dataset.occurrences[i], f))
                    .filter(|s| !s.is_empty())
                    .collect();
                ColorJson {
                    by: ColorBy::Feature(f),
                    kind: "categorical",
                    scale: "categorical",
                    categories: Some(categories.into_iter().collect()),
                    orientation: None,
                    range: None,
                }
            }
            ColorBy::Metric(m) => {
                let n = self.n_points();
                let ks: Vec<usize> = match self.config.metrics.k_mode {
                    KMode::Fixed(k) => vec![k],
                    KMode::ClusterSize => self
                        .hd
                        .iter()
                        .flat_map(|h| resolve_k(KMode::ClusterSize, n, Some(&h.clusters.labels)).unwrap_or_default())
                        .collect(),
                };
                let (lo, hi) = m.range(
                    n,
                    ks.iter().copied().min().unwrap_or(1),
                    ks.iter().copied().max().unwrap_or(1),
                );
                ColorJson {
                    by: ColorBy::Metric(m),
                    kind: "sequential",
                    scale: "inferno",
                    categories: None,
                    orientation: Some(m.orientation()),
                    range: Some([lo, hi]),
                }
            }
        }
    }

    pub fn layout_payload(&self) -> Result<LayoutJson> {
        let color = self.color_payload();
        let category_index: BTreeMap<String, usize> = color
            .categories
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();

        let mut y_offset = 0.0;
        let mut offsets = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            offsets.push(y_offset);
            y_offset += row.height + self.config.layout.gap;
        }
        let total_height = y_offset - self.config.layout.gap;

        let mut layers = Vec::with_capacity(self.layers.len());
        for (pos, (&layer, frame)) in self.layers.iter().zip(&self.frames).enumerate() {
            let mut rows = Vec::with_capacity(self.rows.len());
            for (r, row) in self.rows.iter().enumerate() {
                let rl = &row.layers[pos];
                let metric_values = match self.config.color_by {
                    ColorBy::Metric(m) => rl.metrics.iter().find(|q| q.metric == m).map(|q| q.values.clone()),
                    ColorBy::Feature(_) => None,
                };
                let points = (0..self.n_points())
                    .map(|i| {
                        let color = match (self.config.color_by, &metric_values) {
                            (ColorBy::Metric(_), Some(v)) => {
                                let [lo, hi] = color.range.expect("metric color has a range");
                                let t = if hi > lo { (v[i] - lo) / (hi - lo) } else { 0.0 };
                                PointColor::Scalar(t.clamp(0.0, 1.0))
                            }
                            (ColorBy::Feature(f), _) => {
                                let p = point_property(&self.dataset.occurrences[self.ids[i]], f);
                                category_index
                                    .get(&p)
                                    .map_or(PointColor::None, |&c| PointColor::Category(c))
                            }
                            _ => PointColor::None,
                        };
                        PointJson {
                            id: self.ids[i],
                            x: rl.positions[i][0],
                            y: rl.positions[i][1],
                            cluster_2d: rl.clusters_2d.labels[i],
                            cluster_hd: self.hd[pos].clusters.labels[i],
                            color,
                        }
                    })
                    .collect();
                rows.push(LayoutRowJson {
                    projection: r,
                    method: row.config.method.to_string(),
                    y_offset: offsets[r],
                    height: row.height,
                    cluster_offsets: rl.cluster_offsets.clone(),
                    points,
                    hulls: rl.hulls.clone(),
                    summaries: rl.summaries.iter().map(Self::summary_json).collect::<Result<_>>()?,
                });
            }
            layers.push(LayoutLayerJson { layer, frame: *frame, rows });
        }

        let mut flows = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for f in &row.flows {
                let pos = self.layer_position(f.layer_from).expect("flow starts at a session layer");
                flows.push(FlowJson {
                    projection: r,
                    layer_from: f.layer_from,
                    layer_to: self.layers[pos + 1],
                    size: f.size(),
                    color_key: f.color_key.clone(),
                    source_ids: self.dataset_ids(&f.source_ids),
                    segments: f.segments.clone(),
                });
            }
        }
        Ok(LayoutJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            dataset: self.dataset.name.clone(),
            ids: self.ids.clone(),
            frame_width: self.config.layout.width,
            frame_height: self.config.layout.height,
            gap: self.config.layout.gap,
            total_width: self.frames.last().map_or(0.0, |f| f.x_right),
            total_height,
            color,
            layers,
            flows,
        })
    }

    pub fn metrics_payload(&self) -> MetricsJson {
        let n = self.n_points();
        MetricsJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            ids: self.ids.clone(),
            projections: self
                .rows
                .iter()
                .enumerate()
                .map(|(r, row)| MetricsRowJson {
                    projection: r,
                    method: row.config.method.to_string(),
                    layers: row
                        .layers
                        .iter()
                        .zip(&self.hd)
                        .map(|(rl, hd)| {
                            let ks = resolve_k(self.config.metrics.k_mode, n, Some(&hd.clusters.labels))
                                .unwrap_or_default();
                            let (k_min, k_max) = (
                                ks.iter().copied().min().unwrap_or(1),
                                ks.iter().copied().max().unwrap_or(1),
                            );
                            MetricsLayerJson {
                                layer: rl.projection.layer,
                                explained_variance: rl.projection.explained_variance,
                                clusters_2d: ClustersJson::from(&rl.clusters_2d),
                                clusters_hd: ClustersJson::from(&hd.clusters),
                                metrics: rl
                                    .metrics
                                    .iter()
                                    .map(|q| {
                                        let (lo, hi) = q.metric.range(n, k_min, k_max);
                                        MetricJson {
                                            metric: q.metric,
                                            orientation: q.metric.orientation(),
                                            range: [lo, hi],
                                            k_mode: q.k_mode,
                                            values: q.values.clone(),
                                        }
                                    })
                                    .collect(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// One matrix view: `projection` selects whose 2D clusters color the top bar.
    pub fn matrix_view(&self, projection: usize, pos: usize, space: Space, ordering: Ordering) -> MatrixJson {
        let row = &self.rows[projection].layers[pos];
        let hd = &self.hd[pos];
        let (dist, linkage) = match space {
            Space::Hd => (&hd.dist, hd.clusters.linkage),
            Space::Ld2 => (&row.dist_2d, row.clusters_2d.linkage),
        };
        MatrixJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            projection,
            layer: self.layers[pos],
            space,
            ordering,
            linkage: (ordering == Ordering::Linkage).then_some(linkage),
            ids: self.ids.clone(),
            scale: "viridis",
            dist: rows_of(dist),
            order: self.dataset_ids(&order_for(dist, ordering, linkage)),
            top_bar: row.clusters_2d.labels.clone(),
            left_bar: hd.clusters.labels.clone(),
        }
    }

    pub fn matrices_payload(&self) -> MatricesJson {
        MatricesJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            ids: self.ids.clone(),
            projections: (0..self.rows.len())
                .map(|r| MatricesRowJson {
                    projection: r,
                    layers: (0..self.layers.len())
                        .map(|pos| MatricesLayerJson {
                            layer: self.layers[pos],
                            spaces: [Space::Ld2, Space::Hd]
                                .into_iter()
                                .map(|space| {
                                    let (dist, linkage) = match space {
                                        Space::Hd => (&self.hd[pos].dist, self.hd[pos].clusters.linkage),
                                        Space::Ld2 => (
                                            &self.rows[r].layers[pos].dist_2d,
                                            self.rows[r].layers[pos].clusters_2d.linkage,
                                        ),
                                    };
                                    MatrixSpaceJson {
                                        space,
                                        linkage,
                                        scale: "viridis",
                                        dist: rows_of(dist),
                                        orderings: Ordering::ALL
                                            .into_iter()
                                            .map(|o| (o, self.dataset_ids(&order_for(dist, o, linkage))))
                                            .collect(),
                                        top_bar: self.rows[r].layers[pos].clusters_2d.labels.clone(),
                                        left_bar: self.hd[pos].clusters.labels.clone(),
                                    }
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn summaries_payload(&self) -> Result<SummariesJson> {
        Ok(SummariesJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            projections: self
                .rows
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    Ok(SummariesRowJson {
                        projection: r,
                        layers: row
                            .layers
                            .iter()
                            .map(|rl| {
                                Ok(SummariesLayerJson {
                                    layer: rl.projection.layer,
                                    summaries: rl.summaries.iter().map(Self::summary_json).collect::<Result<_>>()?,
                                })
                            })
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }

    /// HD cosine k-NN per session layer, as dataset ids.
    pub fn neighbors_payload(&self, k: usize) -> Result<NeighborsJson> {
        let layers = self
            .layers
            .iter()
            .map(|&l| {
                let nn = hd_knn(&self.dataset.embeddings.layer_matrix(l, &self.ids), k)?;
                Ok(NeighborLayerJson {
                    layer: l,
                    neighbors: nn.iter().map(|v| self.dataset_ids(v)).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(NeighborsJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            k,
            ids: self.ids.clone(),
            layers,
        })
    }

    pub fn context_payload(&self, id: usize) -> Option<ContextJson> {
        self.point_position(id).map(|_| ContextJson {
            v: SCHEMA_VERSION,
            occurrence: self.dataset.occurrences[id].clone(),
        })
    }

    /// 2D clusters of one layer with their summaries and member occurrences.
    pub fn close_reading_payload(&self, projection: usize, pos: usize) -> Result<CloseReadingJson> {
        let rl = &self.rows[projection].layers[pos];
        let clusters = rl
            .clusters_2d
            .members()
            .into_iter()
            .enumerate()
            .map(|(c, members)| {
                Ok(CloseReadingClusterJson {
                    cluster_id: c,
                    summaries: rl
                        .summaries
                        .iter()
                        .filter(|s| s.space == Space::Ld2 && s.cluster_id == c)
                        .map(Self::summary_json)
                        .collect::<Result<_>>()?,
                    members: members
                        .iter()
                        .map(|&i| self.dataset.occurrences[self.ids[i]].clone())
                        .collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(CloseReadingJson {
            v: SCHEMA_VERSION,
            session: self.id.clone(),
            projection,
            layer: self.layers[pos],
            clusters,
        })
    }
}

fn order_for(dist: &DistanceMatrix, ordering: Ordering, linkage: Linkage) -> Vec<usize> {
    match ordering {
        Ordering::Linkage => order_linkage(dist, linkage),
        Ordering::Nn => order_nn_heuristic(dist),
        Ordering::Greedy => order_greedy(dist),
    }
}

fn rows_of(dist: &DistanceMatrix) -> Vec<Vec<f64>> {
    (0..dist.len()).map(|i| dist.row(i).to_vec()).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("payload serializes")
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub space: Space,
    pub cluster_id: usize,
    pub feature: FeatureKind,
    pub label: String,
    pub certainty: f64,
    pub band: CertaintyBand,
    pub support: usize,
}

#[derive(Debug, Serialize)]
pub struct ColorJson {
    pub by: ColorBy,
    pub kind: &'static str,
    pub scale: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum PointColor {
    /// Index into the categorical palette.
    Category(usize),
    /// Metric value mapped onto `[0, 1]` by its documented range.
    Scalar(f64),
    None,
}

#[derive(Debug, Serialize)]
pub struct PointJson {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub cluster_2d: usize,
    pub cluster_hd: usize,
    pub color: PointColor,
}

#[derive(Debug, Serialize)]
pub struct LayoutRowJson {
    pub projection: usize,
    pub method: String,
    pub y_offset: f64,
    pub height: f64,
    pub cluster_offsets: Vec<f64>,
    pub points: Vec<PointJson>,
    pub hulls: Vec<Hull>,
    pub summaries: Vec<SummaryJson>,
}

#[derive(Debug, Serialize)]
pub struct LayoutLayerJson {
    pub layer: usize,
    pub frame: Frame,
    pub rows: Vec<LayoutRowJson>,
}

#[derive(Debug, Serialize)]
pub struct FlowJson {
    pub projection: usize,
    pub layer_from: usize,
    pub layer_to: usize,
    pub size: usize,
    pub color_key: String,
    pub source_ids: Vec<usize>,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Serialize)]
pub struct LayoutJson {
    pub v: u32,
    pub session: String,
    pub dataset: String,
    pub ids: Vec<usize>,
    pub frame_width: f64,
    pub frame_height: f64,
    pub gap: f64,
    pub total_width: f64,
    pub total_height: f64,
    pub color: ColorJson,
    pub layers: Vec<LayoutLayerJson>,
    pub flows: Vec<FlowJson>,
}

#[derive(Debug, Serialize)]
pub struct ClustersJson {
    pub linkage: Linkage,
    pub silhouette: f64,
    pub k_clusters: usize,
    pub labels: Vec<usize>,
}

impl From<&ClusterAssignment> for ClustersJson {
    fn from(a: &ClusterAssignment) -> Self {
        Self {
            linkage: a.linkage,
            silhouette: a.silhouette,
            k_clusters: a.k_clusters,
            labels: a.labels.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MetricJson {
    pub metric: MetricId,
    pub orientation: Orientation,
    pub range: [f64; 2],
    pub k_mode: KMode,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct MetricsLayerJson {
    pub layer: usize,
    pub explained_variance: Option<[f64; 2]>,
    pub clusters_2d: ClustersJson,
    pub clusters_hd: ClustersJson,
    pub metrics: Vec<MetricJson>,
}

#[derive(Debug, Serialize)]
pub struct MetricsRowJson {
    pub projection: usize,
    pub method: String,
    pub layers: Vec<MetricsLayerJson>,
}

#[derive(Debug, Serialize)]
pub struct MetricsJson {
    pub v: u32,
    pub session: String,
    pub ids: Vec<usize>,
    pub projections: Vec<MetricsRowJson>,
}

#[derive(Debug, Serialize)]
pub struct MatrixJson {
    pub v: u32,
    pub session: String,
    pub projection: usize,
    pub layer: usize,
    pub space: Space,
    pub ordering: Ordering,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linkage: Option<Linkage>,
    pub ids: Vec<usize>,
    pub scale: &'static str,
    pub dist: Vec<Vec<f64>>,
    /// Row/column order as dataset ids.
    pub order: Vec<usize>,
    /// 2D cluster per point (top bar).
    pub top_bar: Vec<usize>,
    /// HD cluster per point (left bar).
    pub left_bar: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct MatrixSpaceJson {
    pub space: Space,
    pub linkage: Linkage,
    pub scale: &'static str,
    pub dist: Vec<Vec<f64>>,
    pub orderings: BTreeMap<Ordering, Vec<usize>>,
    pub top_bar: Vec<usize>,
    pub left_bar: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct MatricesLayerJson {
    pub layer: usize,
    pub spaces: Vec<MatrixSpaceJson>,
}

#[derive(Debug, Serialize)]
pub struct MatricesRowJson {
    pub projection: usize,
    pub layers: Vec<MatricesLayerJson>,
}

#[derive(Debug, Serialize)]
pub struct MatricesJson {
    pub v: u32,
    pub session: String,
    pub ids: Vec<usize>,
    pub projections: Vec<MatricesRowJson>,
}

#[derive(Debug, Serialize)]
pub struct SummariesLayerJson {
    pub layer: usize,
    pub summaries: Vec<SummaryJson>,
}

#[derive(Debug, Serialize)]
pub struct SummariesRowJson {
    pub projection: usize,
    pub layers: Vec<SummariesLayerJson>,
}

#[derive(Debug, Serialize)]
pub struct SummariesJson {
    pub v: u32,
    pub session: String,
    pub projections: Vec<SummariesRowJson>,
}

#[derive(Debug, Serialize)]
pub struct NeighborLayerJson {
    pub layer: usize,
    pub neighbors: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct NeighborsJson {
    pub v: u32,
    pub session: String,
    pub k: usize,
    pub ids: Vec<usize>,
    pub layers: Vec<NeighborLayerJson>,
}

#[derive(Debug, Serialize)]
pub struct ContextJson {
    pub v: u32,
    pub occurrence: TokenOccurrence,
}

#[derive(Debug, Serialize)]
pub struct CloseReadingClusterJson {
    pub cluster_id: usize,
    pub summaries: Vec<SummaryJson>,
    pub members: Vec<TokenOccurrence>,
}

#[derive(Debug, Serialize)]
pub struct CloseReadingJson {
    pub v: u32,
    pub session: String,
    pub projection: usize,
    pub layer: usize,
    pub clusters: Vec<CloseReadingClusterJson>,
}
