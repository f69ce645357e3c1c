mod common;

use std::sync::Arc;

use embedflow::clustering::{DistanceMetric, Space};
use embedflow::corpus::FeatureKind;
use embedflow::metrics::{KMode, MetricId};
use embedflow::projection::ProjectionConfig;
use embedflow::service::AppState;
use embedflow::session::{ColorBy, Session, SessionConfig, DEFAULT_MAX_POINTS};
use proptest::prelude::*;

use common::{small_dataset, write_small};

fn arb_config() -> impl Strategy<Value = SessionConfig> {
    (
        prop::sample::select(vec!["*", r#"POS == "NOUN" || POS == "ADJ""#, r#"token == "cell""#, r#"SYNCAT == "NP""#]),
        prop::bool::ANY,
        prop::sample::select(vec![None, Some([0, 1]), Some([1, 2]), Some([2, 2])]),
        prop::sample::select(vec![DistanceMetric::Cosine, DistanceMetric::Euclidean]),
        prop::sample::select(vec![DistanceMetric::Cosine, DistanceMetric::Euclidean]),
        prop_oneof![Just(KMode::ClusterSize), (1usize..6).prop_map(KMode::Fixed)],
        prop::sample::select(vec![
            ColorBy::Feature(FeatureKind::Pos),
            ColorBy::Feature(FeatureKind::Ngram),
            ColorBy::Metric(MetricId::Fpr),
            ColorBy::Metric(MetricId::Lcmc),
        ]),
        (50.0f64..300.0, 50.0f64..300.0, 0.0f64..80.0),
    )
        .prop_map(|(filter, dual, layers, m2, mh, k_mode, color_by, (w, h, gap))| {
            let mut c = SessionConfig::new("small", filter);
            if dual {
                c.projections.push(ProjectionConfig::external("jitter"));
            }
            c.layers = layers;
            c.clustering.metric_2d = m2;
            c.clustering.metric_hd = mh;
            c.metrics.k_mode = k_mode;
            c.color_by = color_by;
            c.layout.width = w;
            c.layout.height = h;
            c.layout.gap = gap;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cached_session_equals_fresh_computation(config in arb_config()) {
        let dir = tempfile::tempdir().unwrap();
        write_small(dir.path());
        let state = AppState::with_default_cap(dir.path()).unwrap();
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        let (first, cached_first) = rt.block_on(state.create_session(config.clone())).unwrap();
        let (again, cached_again) = rt.block_on(state.create_session(config.clone())).unwrap();
        prop_assert!(!cached_first && cached_again);
        prop_assert!(Arc::ptr_eq(&first, &again));

        let fresh = Session::build(Arc::new(small_dataset()), &config, DEFAULT_MAX_POINTS).unwrap();
        prop_assert_eq!(&fresh.id, &again.id);
        prop_assert!(fresh.payloads.layout == again.payloads.layout);
        prop_assert!(fresh.payloads.metrics == again.payloads.metrics);
        prop_assert!(fresh.payloads.matrices == again.payloads.matrices);
        prop_assert!(fresh.payloads.summaries == again.payloads.summaries);
    }

    #[test]
    fn session_artifacts_are_consistent(config in arb_config()) {
        let s = Session::build(Arc::new(small_dataset()), &config, DEFAULT_MAX_POINTS).unwrap();
        let n = s.n_points();
        prop_assert_eq!(s.hd.len(), s.layers.len());
        prop_assert_eq!(s.frames.len(), s.layers.len());
        for row in &s.rows {
            for (pos, rl) in row.layers.iter().enumerate() {
                prop_assert_eq!(rl.positions.len(), n);
                prop_assert_eq!(rl.clusters_2d.labels.len(), n);
                prop_assert_eq!(rl.metrics.len(), MetricId::ALL.len());
                prop_assert!(rl.metrics.iter().all(|q| q.values.len() == n));
                prop_assert_eq!(rl.projection.layer, s.layers[pos]);
                // Stretched clusters occupy disjoint y-intervals.
                let members = rl.clusters_2d.members();
                let spans: Vec<(f64, f64)> = members
                    .iter()
                    .map(|m| m.iter().map(|&i| rl.positions[i][1]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y))))
                    .collect();
                for (a, sa) in spans.iter().enumerate() {
                    for sb in &spans[a + 1..] {
                        prop_assert!(sa.1 < sb.0 || sb.1 < sa.0, "{:?} overlaps {:?}", sa, sb);
                    }
                }
                for h in &rl.hulls {
                    prop_assert!(h.space == Space::Ld2 || h.space == Space::Hd);
                }
            }
            let covered: usize = row.flows.iter().map(|f| f.size()).sum();
            prop_assert_eq!(covered, n * (s.layers.len() - 1));
            prop_assert!(row.flows.iter().all(|f| f.is_continuous()));
        }
    }
}

#[test]
fn config_digest_tracks_every_setting() {
    let base = SessionConfig::new("small", "*");
    let mut variants = vec![base.clone()];
    let mut c = base.clone();
    c.token_filter = r#"POS == "NOUN""#.into();
    variants.push(c);
    let mut c = base.clone();
    c.layout.padding = Some(1.0);
    variants.push(c);
    let mut c = base.clone();
    c.metrics.k_mode = KMode::Fixed(3);
    variants.push(c);
    let mut c = base.clone();
    c.color_by = ColorBy::Metric(MetricId::Pps);
    variants.push(c);
    let mut c = base.clone();
    c.layers = Some([0, 1]);
    variants.push(c);
    let mut ids: Vec<String> = variants.iter().map(|c| c.hash().unwrap()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), variants.len());

    let mut spaced = base.clone();
    spaced.token_filter = "  *  ".into();
    assert_eq!(spaced.hash().unwrap(), base.hash().unwrap());
}

#[test]
fn config_json_defaults() {
    let c: SessionConfig =
        serde_json::from_str(r#"{"dataset": "small", "projections": [{"method": "pca"}]}"#).unwrap();
    assert_eq!(c, SessionConfig::new("small", ""));
    assert_eq!(c.color_by, ColorBy::Feature(FeatureKind::Pos));
    assert_eq!(c.metrics.k_mode, KMode::ClusterSize);
    let bad = serde_json::from_str::<SessionConfig>(
        r#"{"dataset": "small", "projections": [{"method": "pca"}], "color_by": "COLOR"}"#,
    );
    assert!(bad.is_err());
}

#[test]
fn invalid_layer_ranges_are_rejected() {
    let ds = Arc::new(small_dataset());
    for range in [[2, 1], [0, 3]] {
        let mut c = SessionConfig::new("small", "*");
        c.layers = Some(range);
        let err = Session::build(ds.clone(), &c, DEFAULT_MAX_POINTS).unwrap_err();
        assert_eq!(err.code(), "INVALID_CONFIG", "{range:?}");
    }
}
