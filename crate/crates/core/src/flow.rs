//! Resolution-independent geometry for the interlinked layer view.
//!
//! Layout units have `y` growing upward. Positions produced here are snapped
//! to a `2^-20` grid so that per-cluster translations are exact and
//! within-cluster offsets survive stretching bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::Space;
use crate::error::{Error, Result};

pub const DEFAULT_GAP: f64 = 50.0;
/// Padding between stretched clusters as a fraction of frame height.
pub const DEFAULT_PADDING_FRACTION: f64 = 0.02;

const GRID: f64 = 1.0 / 1_048_576.0;

fn snap(v: f64) -> f64 {
    (v / GRID).round() * GRID
}

fn snap_up(v: f64) -> f64 {
    (v / GRID).ceil() * GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub layer: usize,
    pub x_left: f64,
    pub x_right: f64,
    pub width: f64,
    pub gap: f64,
}

/// Scales each layer's coordinates independently on x and y into a
/// `width × height` frame; frames are tiled left to right with `gap` between.
/// An axis with a single distinct value is centered.
pub fn normalize_and_frame(
    layers: &[Vec<[f64; 2]>],
    width: f64,
    height: f64,
    gap: f64,
) -> Result<(Vec<Vec<[f64; 2]>>, Vec<Frame>)> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "frame size must be positive, got {width} x {height}"
        )));
    }
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(Error::InvalidConfig(format!("gap must be non-negative, got {gap}")));
    }
    let mut positions = Vec::with_capacity(layers.len());
    let mut frames = Vec::with_capacity(layers.len());
    for (layer, coords) in layers.iter().enumerate() {
        let x_left = layer as f64 * (width + gap);
        frames.push(Frame {
            layer,
            x_left,
            x_right: x_left + width,
            width,
            gap,
        });
        let fit = |axis: usize, extent: f64, origin: f64| {
            let (lo, hi) = coords
                .iter()
                .map(|p| p[axis])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            move |v: f64| {
                if hi > lo {
                    snap(origin + (v - lo) / (hi - lo) * extent)
                } else {
                    snap(origin + extent / 2.0)
                }
            }
        };
        let fx = fit(0, width, x_left);
        let fy = fit(1, height, 0.0);
        positions.push(coords.iter().map(|p| [fx(p[0]), fy(p[1])]).collect());
    }
    Ok((positions, frames))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchedLayout {
    pub positions: Vec<[f64; 2]>,
    /// Vertical translation applied to each cluster.
    pub offsets: Vec<f64>,
}

impl StretchedLayout {
    pub fn max_y(&self) -> f64 {
        self.positions.iter().map(|p| p[1]).fold(0.0, f64::max)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Moves clusters upward until their vertical extents are separated by at
/// least `padding`, scanning clusters in ascending order of median `y`.
pub fn stretch_clusters(positions: &[[f64; 2]], labels: &[usize], padding: f64) -> Result<StretchedLayout> {
    if positions.len() != labels.len() {
        return Err(Error::CountMismatch {
            what: "positions vs labels",
            expected: labels.len(),
            found: positions.len(),
        });
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::InvalidConfig(format!("padding must be non-negative, got {padding}")));
    }
    let padding = snap_up(padding);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut ys: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (p, &l) in positions.iter().zip(labels) {
        ys[l].push(p[1]);
    }
    let stats: Vec<Option<(f64, f64, f64)>> = ys
        .iter_mut()
        .map(|v| {
            if v.is_empty() {
                return None;
            }
            let med = median(v);
            Some((med, v[0], v[v.len() - 1]))
        })
        .collect();
    let mut order: Vec<usize> = (0..k).filter(|&c| stats[c].is_some()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (stats[a].unwrap().0, stats[b].unwrap().0);
        ma.total_cmp(&mb).then(a.cmp(&b))
    });

    let mut offsets = vec![0.0; k];
    let mut prev_max: Option<f64> = None;
    for &c in &order {
        let (_, min, max) = stats[c].unwrap();
        if let Some(pm) = prev_max {
            if min < pm + padding {
                offsets[c] = snap_up(pm + padding - min);
            }
        }
        prev_max = Some(max + offsets[c]);
    }
    let positions = positions
        .iter()
        .zip(labels)
        .map(|(p, &l)| [p[0], p[1] + offsets[l]])
        .collect();
    Ok(StretchedLayout { positions, offsets })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Segment {
    Hline { from: [f64; 2], to: [f64; 2] },
    Cubic { start: [f64; 2], control: [f64; 2], end: [f64; 2] },
}

impl Segment {
    pub fn start(&self) -> [f64; 2] {
        match *self {
            Segment::Hline { from, .. } => from,
            Segment::Cubic { start, .. } => start,
        }
    }

    pub fn end(&self) -> [f64; 2] {
        match *self {
            Segment::Hline { to, .. } => to,
            Segment::Cubic { end, .. } => end,
        }
    }
}

/// Segments contributed by one point's link.
pub const SEGMENTS_PER_LINK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub source_ids: Vec<usize>,
    pub layer_from: usize,
    /// `SEGMENTS_PER_LINK` consecutive segments per member, members in
    /// `source_ids` order.
    pub segments: Vec<Segment>,
    pub color_key: String,
}

impl FlowPath {
    pub fn size(&self) -> usize {
        self.source_ids.len()
    }

    /// Each member's sub-path.
    pub fn links(&self) -> impl Iterator<Item = &[Segment]> {
        self.segments.chunks(SEGMENTS_PER_LINK)
    }

    /// Whether every member's segments chain end-to-start exactly.
    pub fn is_continuous(&self) -> bool {
        self.links().all(|link| link.windows(2).all(|w| w[0].end() == w[1].start()))
    }
}

/// The four-piece link from `source` in frame `from` to `target` in frame `to`:
/// a horizontal run to the frame border, two mirrored curves meeting halfway
/// between the frames, and a horizontal run into the target.
pub fn link_segments(source: [f64; 2], target: [f64; 2], from: &Frame, to: &Frame) -> [Segment; 4] {
    let [x1, y1] = source;
    let [x7, y3] = target;
    let x2 = from.x_right;
    let x6 = to.x_left;
    let x4 = (x2 + x6) / 2.0;
    let y2 = (y1 + y3) / 2.0;
    let x3 = (x2 + x4) / 2.0;
    let x5 = (x4 + x6) / 2.0;
    [
        Segment::Hline { from: [x1, y1], to: [x2, y1] },
        Segment::Cubic { start: [x2, y1], control: [x3, y1], end: [x4, y2] },
        Segment::Cubic { start: [x4, y2], control: [x5, y3], end: [x6, y3] },
        Segment::Hline { from: [x6, y3], to: [x7, y3] },
    ]
}

/// One unbundled path per `(source index, target index)` link.
pub fn build_flow_paths(
    from_positions: &[[f64; 2]],
    to_positions: &[[f64; 2]],
    from: &Frame,
    to: &Frame,
    links: &[(usize, usize)],
) -> Result<Vec<FlowPath>> {
    links
        .iter()
        .map(|&(s, t)| {
            let source = *from_positions.get(s).ok_or(Error::MissingPosition(s))?;
            let target = *to_positions.get(t).ok_or(Error::MissingPosition(t))?;
            Ok(FlowPath {
                source_ids: vec![s],
                layer_from: from.layer,
                segments: link_segments(source, target, from, to).to_vec(),
                color_key: String::new(),
            })
        })
        .collect()
}

/// Groups single-member paths by `(cluster at l, cluster at l+1, property)`.
/// Groups come out in key order; members keep their input order.
pub fn bundle_flows(
    paths: &[FlowPath],
    labels_from: &[usize],
    labels_to: &[usize],
    property: &[String],
) -> Result<Vec<FlowPath>> {
    let mut groups: BTreeMap<(usize, usize, &str), FlowPath> = BTreeMap::new();
    for path in paths {
        for (idx, link) in path.source_ids.iter().zip(path.links()) {
            let idx = *idx;
            let (Some(&a), Some(&b), Some(prop)) =
                (labels_from.get(idx), labels_to.get(idx), property.get(idx))
            else {
                return Err(Error::MissingPosition(idx));
            };
            let entry = groups.entry((a, b, prop.as_str())).or_insert_with(|| FlowPath {
                source_ids: Vec::new(),
                layer_from: path.layer_from,
                segments: Vec::new(),
                color_key: prop.clone(),
            });
            entry.source_ids.push(idx);
            entry.segments.extend_from_slice(link);
        }
    }
    Ok(groups.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub space: Space,
    pub cluster_id: usize,
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull by Andrew's monotone chain, collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

/// One hull per cluster of `labels`.
pub fn cluster_hulls(space: Space, positions: &[[f64; 2]], labels: &[usize]) -> Vec<Hull> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (p, &l) in positions.iter().zip(labels) {
        members[l].push(*p);
    }
    members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(cluster_id, m)| Hull {
            space,
            cluster_id,
            vertices: convex_hull(m),
        })
        .collect()
}
