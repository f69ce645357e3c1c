//! Dataset ingestion: `LFEB` embedding tensors, JSONL token annotations,
//! externally computed projections, and the JSON manifest tying them together.

pub mod filter;
pub mod lfeb;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use filter::{filter_occurrences, Filter};

/// Linguistic property a point can be summarized or filtered by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureKind {
    Pos,
    Syncat,
    Sense,
    Ner,
    TokenIndex,
    /// Computed from the context window, never ingested.
    Ngram,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Pos,
        FeatureKind::Syncat,
        FeatureKind::Sense,
        FeatureKind::Ner,
        FeatureKind::TokenIndex,
        FeatureKind::Ngram,
    ];

    /// Kinds that may appear as keys of an occurrence's `annotations` map.
    pub fn is_annotation(self) -> bool {
        matches!(
            self,
            FeatureKind::Pos | FeatureKind::Syncat | FeatureKind::Sense | FeatureKind::Ner
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Pos => "POS",
            FeatureKind::Syncat => "SYNCAT",
            FeatureKind::Sense => "SENSE",
            FeatureKind::Ner => "NER",
            FeatureKind::TokenIndex => "TOKEN_INDEX",
            FeatureKind::Ngram => "NGRAM",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenOccurrence {
    pub id: usize,
    pub token: String,
    pub sentence_id: usize,
    pub token_index: usize,
    #[serde(default)]
    pub context_before: Vec<String>,
    #[serde(default)]
    pub context_after: Vec<String>,
    pub sentence: String,
    #[serde(default)]
    pub annotations: BTreeMap<FeatureKind, String>,
}

impl TokenOccurrence {
    fn validate(&self, expected_id: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidOccurrence {
            id: expected_id,
            reason,
        };
        if self.id != expected_id {
            return Err(bad(format!(
                "ids must be contiguous from 0; found id {}",
                self.id
            )));
        }
        let words: Vec<&str> = self.sentence.split_whitespace().collect();
        if words.get(self.token_index) != Some(&self.token.as_str()) {
            return Err(bad(format!(
                "token {:?} not found at index {} of the whitespace-split sentence",
                self.token, self.token_index
            )));
        }
        if self.context_before.len() > 2 || self.context_after.len() > 2 {
            return Err(bad("context windows hold at most two tokens".into()));
        }
        if let Some(k) = self.annotations.keys().find(|k| !k.is_annotation()) {
            return Err(bad(format!("{k} cannot be ingested as an annotation")));
        }
        Ok(())
    }
}

/// Per-layer embedding vectors, stored as in the `LFEB` payload.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTensor {
    n_layers: usize,
    n_points: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingTensor {
    pub fn new(n_layers: usize, n_points: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if n_layers == 0 || n_points == 0 || dim == 0 {
            return Err(Error::Format(format!(
                "empty tensor shape {n_layers}x{n_points}x{dim}"
            )));
        }
        if values.len() != n_layers * n_points * dim {
            return Err(Error::CountMismatch {
                what: "tensor values",
                expected: n_layers * n_points * dim,
                found: values.len(),
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            let per_layer = n_points * dim;
            return Err(Error::NonFinite(format!(
                "embedding layer {} point {} component {}",
                p / per_layer,
                (p % per_layer) / dim,
                p % dim
            )));
        }
        Ok(Self {
            n_layers,
            n_points,
            dim,
            values,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn vector(&self, layer: usize, point: usize) -> &[f32] {
        let start = (layer * self.n_points + point) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// The selected points of one layer, widened to `f64`.
    pub fn layer_matrix(&self, layer: usize, ids: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(ids.len(), self.dim);
        for (row, &id) in ids.iter().enumerate() {
            for (dst, &src) in m.row_mut(row).iter_mut().zip(self.vector(layer, id)) {
                *dst = f64::from(src);
            }
        }
        m
    }
}

/// 2D coordinates produced by an external tool (UMAP, Aligned UMAP, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalProjection {
    pub method: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub layers: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub occurrences: Vec<TokenOccurrence>,
    pub embeddings: EmbeddingTensor,
    pub external_projections: BTreeMap<String, ExternalProjection>,
}

impl Dataset {
    /// Validates all cross-component invariants.
    pub fn new(
        name: impl Into<String>,
        occurrences: Vec<TokenOccurrence>,
        embeddings: EmbeddingTensor,
        external_projections: BTreeMap<String, ExternalProjection>,
    ) -> Result<Self> {
        if occurrences.len() != embeddings.n_points() {
            return Err(Error::CountMismatch {
                what: "annotation records vs embedding points",
                expected: embeddings.n_points(),
                found: occurrences.len(),
            });
        }
        for (i, occ) in occurrences.iter().enumerate() {
            occ.validate(i)?;
        }
        for (name, proj) in &external_projections {
            if proj.layers.len() != embeddings.n_layers() {
                return Err(Error::CountMismatch {
                    what: "projection layers",
                    expected: embeddings.n_layers(),
                    found: proj.layers.len(),
                });
            }
            for (l, layer) in proj.layers.iter().enumerate() {
                if layer.len() != embeddings.n_points() {
                    return Err(Error::CountMismatch {
                        what: "projection points",
                        expected: embeddings.n_points(),
                        found: layer.len(),
                    });
                }
                if layer.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("projection {name} layer {l}")));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            occurrences,
            embeddings,
            external_projections,
        })
    }

    pub fn n_points(&self) -> usize {
        self.embeddings.n_points()
    }

    pub fn n_layers(&self) -> usize {
        self.embeddings.n_layers()
    }

    /// Whether any occurrence can answer `kind`.
    pub fn has_feature(&self, kind: FeatureKind) -> bool {
        match kind {
            FeatureKind::TokenIndex | FeatureKind::Ngram => true,
            _ => self.occurrences.iter().any(|o| o.annotations.contains_key(&kind)),
        }
    }

    /// Writes the dataset as `<stem>.lfeb`, `<stem>.jsonl`, one projection file
    /// per method and a `<stem>.manifest.json`; returns the manifest path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let emb_name = format!("{stem}.lfeb");
        let ann_name = format!("{stem}.jsonl");
        write_file(&dir.join(&emb_name), &lfeb::encode(&self.embeddings))?;

        let mut jsonl = Vec::new();
        for occ in &self.occurrences {
            serde_json::to_writer(&mut jsonl, occ).expect("occurrence serializes");
            jsonl.push(b'\n');
        }
        write_file(&dir.join(&ann_name), &jsonl)?;

        let mut projections = Vec::new();
        for (key, proj) in &self.external_projections {
            let file = format!("{stem}.proj.{key}.json");
            let body = serde_json::to_vec(proj).expect("projection serializes");
            write_file(&dir.join(&file), &body)?;
            projections.push(file);
        }
        let manifest = Manifest {
            name: self.name.clone(),
            embeddings: emb_name,
            annotations: ann_name,
            projections,
        };
        let path = dir.join(format!("{stem}.manifest.json"));
        let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_file(&path, &body)?;
        Ok(path)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// `{"name": …, "embeddings": …, "annotations": …, "projections": […]}`;
/// file references are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub embeddings: String,
    pub annotations: String,
    #[serde(default)]
    pub projections: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("manifest {}: {e}", path.display())))
    }
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let parts = DatasetParts::read(manifest_path)?;
    Dataset::new(parts.manifest.name, parts.occurrences?, parts.embeddings?, parts.external?)
}

/// Every violation found in a dataset, checking each file independently.
/// Empty iff [`load_dataset`] would succeed.
pub fn validate_dataset(manifest_path: &Path) -> Vec<Error> {
    let parts = match DatasetParts::read(manifest_path) {
        Ok(p) => p,
        Err(e) => return vec![e],
    };
    let mut errors = Vec::new();
    let (emb, occ, ext) = (parts.embeddings, parts.occurrences, parts.external);
    let emb = emb.map_err(|e| errors.push(e)).ok();
    let occ = occ.map_err(|e| errors.push(e)).ok();
    let ext = ext.map_err(|e| errors.push(e)).ok();
    if let (Some(emb), Some(occ), Some(ext)) = (emb, occ, ext) {
        if let Err(e) = Dataset::new(parts.manifest.name, occ, emb, ext) {
            errors.push(e);
        }
    }
    errors
}

struct DatasetParts {
    manifest: Manifest,
    embeddings: Result<EmbeddingTensor>,
    occurrences: Result<Vec<TokenOccurrence>>,
    external: Result<BTreeMap<String, ExternalProjection>>,
}

impl DatasetParts {
    fn read(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

        let emb_path = base.join(&manifest.embeddings);
        let embeddings = fs::read(&emb_path)
            .map_err(|e| Error::io(&emb_path, e))
            .and_then(|bytes| lfeb::decode(&bytes));
        let occurrences = read_annotations(&base.join(&manifest.annotations));
        let external = read_projections(base, &manifest.projections);
        Ok(Self {
            manifest,
            embeddings,
            occurrences,
            external,
        })
    }
}

fn read_projections(base: &Path, files: &[String]) -> Result<BTreeMap<String, ExternalProjection>> {
    let mut external = BTreeMap::new();
    for rel in files {
        let path = base.join(rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let proj: ExternalProjection = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("projection {}: {e}", path.display())))?;
        if external.contains_key(&proj.method) {
            return Err(Error::Format(format!("duplicate projection {:?}", proj.method)));
        }
        external.insert(proj.method.clone(), proj);
    }
    Ok(external)
}

fn read_annotations(path: &Path) -> Result<Vec<TokenOccurrence>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let occ: TokenOccurrence = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        out.push(occ);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn occurrence(id: usize, token: &str, pos: &str) -> TokenOccurrence {
        TokenOccurrence {
            id,
            token: token.into(),
            sentence_id: id,
            token_index: 1,
            context_before: vec!["the".into()],
            context_after: vec!["was".into(), "here".into()],
            sentence: format!("the {token} was here"),
            annotations: BTreeMap::from([(FeatureKind::Pos, pos.to_string())]),
        }
    }

    pub(crate) fn tiny_dataset() -> Dataset {
        let occ = vec![
            occurrence(0, "cell", "NOUN"),
            occurrence(1, "strike", "VERB"),
            occurrence(2, "cell", "NOUN"),
        ];
        let emb = EmbeddingTensor::new(2, 3, 4, (0..24).map(|v| v as f32).collect()).unwrap();
        Dataset::new("tiny", occ, emb, BTreeMap::new()).unwrap()
    }

    #[test]
    fn save_then_load_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = tiny_dataset();
        ds.external_projections.insert(
            "umap".into(),
            ExternalProjection {
                method: "umap".into(),
                params: serde_json::json!({"n_neighbors": 15, "min_dist": 0.1}),
                layers: vec![vec![[0.0, 1.0], [2.0, 3.0], [4.0, 5.5]]; 2],
            },
        );
        let path = ds.save(dir.path(), "tiny").unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn count_mismatch_between_annotations_and_tensor() {
        let emb = EmbeddingTensor::new(1, 3, 2, vec![0.0; 6]).unwrap();
        let occ = (0..4).map(|i| occurrence(i, "a", "X")).collect();
        let err = Dataset::new("x", occ, emb, BTreeMap::new()).unwrap_err();
        assert_eq!(err.code(), "COUNT_MISMATCH");
    }

    #[test]
    fn occurrence_invariants_enforced() {
        let emb = || EmbeddingTensor::new(1, 1, 2, vec![0.0; 2]).unwrap();
        let mut bad_index = occurrence(0, "cell", "NOUN");
        bad_index.token_index = 3;
        let mut bad_id = occurrence(0, "cell", "NOUN");
        bad_id.id = 5;
        let mut long_ctx = occurrence(0, "cell", "NOUN");
        long_ctx.context_before = vec!["a".into(), "b".into(), "c".into()];
        let mut ngram = occurrence(0, "cell", "NOUN");
        ngram.annotations.insert(FeatureKind::Ngram, "x y".into());
        for occ in [bad_index, bad_id, long_ctx, ngram] {
            let err = Dataset::new("x", vec![occ], emb(), BTreeMap::new()).unwrap_err();
            assert_eq!(err.code(), "INVALID_OCCURRENCE");
        }
    }

    #[test]
    fn missing_annotation_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = tiny_dataset().save(dir.path(), "t").unwrap();
        fs::remove_file(dir.path().join("t.jsonl")).unwrap();
        assert_eq!(load_dataset(&path).unwrap_err().code(), "IO_ERROR");
    }

    #[test]
    fn filters_on_token_and_annotations() {
        let ds = tiny_dataset();
        let ids = |q: &str| filter_occurrences(&ds, &q.parse().unwrap());
        assert_eq!(ids("token == cell").unwrap(), vec![0, 2]);
        assert_eq!(ids("POS == VERB AND token ^= str").unwrap(), vec![1]);
        assert_eq!(ids("POS == VERB OR token == cell").unwrap(), vec![0, 1, 2]);
        assert_eq!(ids("token == nothing").unwrap(), Vec::<usize>::new());
        assert_eq!(ids("morphology == x").unwrap_err().code(), "UNKNOWN_FEATURE");
        assert_eq!(ids("SENSE == x").unwrap_err().code(), "UNKNOWN_FEATURE");
    }
}
