//! Model files: one JSON header line, then little-endian array payloads in
//! the order the header lists them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoostingModel, FlatTree, ForestModel, LearnerSpec, LogisticModel, ModelState, TrainSummary,
    TrainedModel,
};
use crate::error::{Error, Result};

const FORMAT: &str = "balcmp-model";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    id: String,
    spec: LearnerSpec,
    feature_names: Vec<String>,
    train_summary: TrainSummary,
    warnings: Vec<String>,
    scalars: BTreeMap<String, f64>,
    arrays: Vec<ArrayMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayMeta {
    name: String,
    dtype: Dtype,
    len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Dtype {
    F64,
    U32,
}

enum Payload {
    F64(Vec<f64>),
    U32(Vec<u32>),
}

#[derive(Default)]
struct Arrays {
    metas: Vec<ArrayMeta>,
    bytes: Vec<u8>,
}

impl Arrays {
    fn f64(&mut self, name: &str, v: &[f64]) {
        self.metas.push(ArrayMeta { name: name.into(), dtype: Dtype::F64, len: v.len() });
        v.iter().for_each(|x| self.bytes.extend_from_slice(&x.to_le_bytes()));
    }

    fn u32(&mut self, name: &str, v: &[u32]) {
        self.metas.push(ArrayMeta { name: name.into(), dtype: Dtype::U32, len: v.len() });
        v.iter().for_each(|x| self.bytes.extend_from_slice(&x.to_le_bytes()));
    }

    fn trees(&mut self, trees: &[FlatTree]) {
        let sizes: Vec<u32> = trees.iter().map(|t| t.n_nodes() as u32).collect();
        self.u32("tree_sizes", &sizes);
        let cat_u32 = |f: fn(&FlatTree) -> &Vec<u32>| trees.iter().flat_map(f).copied().collect::<Vec<_>>();
        let cat_f64 = |f: fn(&FlatTree) -> &Vec<f64>| trees.iter().flat_map(f).copied().collect::<Vec<_>>();
        self.u32("feature", &cat_u32(|t| &t.feature));
        self.f64("threshold", &cat_f64(|t| &t.threshold));
        self.u32("left", &cat_u32(|t| &t.left));
        self.u32("right", &cat_u32(|t| &t.right));
        self.f64("value", &cat_f64(|t| &t.value));
    }
}

/// Serialize a model to bytes.
pub fn model_to_bytes(model: &TrainedModel) -> Vec<u8> {
    let mut arrays = Arrays::default();
    let mut scalars = BTreeMap::new();
    match &model.state {
        ModelState::Logistic(m) => {
            scalars.insert("intercept".to_string(), m.intercept);
            arrays.f64("means", &m.means);
            arrays.f64("scales", &m.scales);
            arrays.f64("weights", &m.weights);
        }
        ModelState::Forest(m) => arrays.trees(&m.trees),
        ModelState::Boosting(m) => {
            scalars.insert("base_score".to_string(), m.base_score);
            arrays.trees(&m.trees);
        }
    }
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        id: model.id.clone(),
        spec: model.spec.clone(),
        feature_names: model.feature_names.clone(),
        train_summary: model.train_summary.clone(),
        warnings: model.warnings.clone(),
        scalars,
        arrays: arrays.metas,
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.extend_from_slice(&arrays.bytes);
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    let bad = |m: &str| Error::ModelFormat(m.to_string());
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line"))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    if header.format != FORMAT {
        return Err(bad("not a model file"));
    }
    if header.version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {}", header.version)));
    }
    header.spec.validate()?;

    let mut body = &bytes[newline + 1..];
    let mut payloads: BTreeMap<String, Payload> = BTreeMap::new();
    for meta in &header.arrays {
        let width = match meta.dtype {
            Dtype::F64 => 8,
            Dtype::U32 => 4,
        };
        let size = meta.len.checked_mul(width).ok_or_else(|| bad("array too large"))?;
        if body.len() < size {
            return Err(Error::ModelFormat(format!("truncated array `{}`", meta.name)));
        }
        let (chunk, rest) = body.split_at(size);
        body = rest;
        let payload = match meta.dtype {
            Dtype::F64 => Payload::F64(
                chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            Dtype::U32 => Payload::U32(
                chunk.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
        };
        payloads.insert(meta.name.clone(), payload);
    }
    if !body.is_empty() {
        return Err(bad("trailing bytes after arrays"));
    }

    let mut take_f64 = |name: &str| match payloads.remove(name) {
        Some(Payload::F64(v)) => Ok(v),
        _ => Err(Error::ModelFormat(format!("missing f64 array `{name}`"))),
    };
    let scalar = |name: &str| {
        header
            .scalars
            .get(name)
            .copied()
            .ok_or_else(|| Error::ModelFormat(format!("missing scalar `{name}`")))
    };
    let m = header.feature_names.len();
    let state = match header.spec.family {
        super::Family::Logistic => {
            let means = take_f64("means")?;
            let scales = take_f64("scales")?;
            let weights = take_f64("weights")?;
            if means.len() != m || scales.len() != m || weights.len() != m {
                return Err(bad("coefficient arrays do not match feature count"));
            }
            ModelState::Logistic(LogisticModel { means, scales, intercept: scalar("intercept")?, weights })
        }
        super::Family::RandomForest => ModelState::Forest(ForestModel { trees: read_trees(&mut payloads, m)? }),
        super::Family::GradientBoosting => ModelState::Boosting(BoostingModel {
            base_score: scalar("base_score")?,
            trees: read_trees(&mut payloads, m)?,
        }),
    };
    Ok(TrainedModel::from_parts(
        header.spec,
        state,
        header.feature_names,
        header.train_summary,
        header.warnings,
        header.id,
    ))
}

fn read_trees(payloads: &mut BTreeMap<String, Payload>, n_features: usize) -> Result<Vec<FlatTree>> {
    let mut u32s = |name: &str| match payloads.remove(name) {
        Some(Payload::U32(v)) => Ok(v),
        _ => Err(Error::ModelFormat(format!("missing u32 array `{name}`"))),
    };
    let sizes = u32s("tree_sizes")?;
    let feature = u32s("feature")?;
    let left = u32s("left")?;
    let right = u32s("right")?;
    let mut f64s = |name: &str| match payloads.remove(name) {
        Some(Payload::F64(v)) => Ok(v),
        _ => Err(Error::ModelFormat(format!("missing f64 array `{name}`"))),
    };
    let threshold = f64s("threshold")?;
    let value = f64s("value")?;
    let total: usize = sizes.iter().map(|&s| s as usize).sum();
    if [feature.len(), left.len(), right.len(), threshold.len(), value.len()]
        .iter()
        .any(|&l| l != total)
    {
        return Err(Error::ModelFormat("tree arrays disagree in length".into()));
    }
    let mut trees = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &s in &sizes {
        let r = at..at + s as usize;
        let t = FlatTree {
            feature: feature[r.clone()].to_vec(),
            threshold: threshold[r.clone()].to_vec(),
            left: left[r.clone()].to_vec(),
            right: right[r.clone()].to_vec(),
            value: value[r].to_vec(),
        };
        validate_tree(&t, n_features)?;
        trees.push(t);
        at += s as usize;
    }
    Ok(trees)
}

/// Children must point forward so traversal always terminates.
fn validate_tree(t: &FlatTree, n_features: usize) -> Result<()> {
    if t.n_nodes() == 0 {
        return Err(Error::ModelFormat("empty tree".into()));
    }
    for n in 0..t.n_nodes() {
        if t.feature[n] == super::tree::LEAF {
            continue;
        }
        let ok = (t.feature[n] as usize) < n_features
            && [t.left[n], t.right[n]]
                .iter()
                .all(|&c| (c as usize) > n && (c as usize) < t.n_nodes());
        if !ok {
            return Err(Error::ModelFormat(format!("malformed tree node {n}")));
        }
    }
    Ok(())
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let bytes = model_to_bytes(model);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
