//! Model files.
//!
//! A model file is one JSON object:
//!
//! | field            | content                                                        |
//! |------------------|----------------------------------------------------------------|
//! | `format_version` | `1`                                                            |
//! | `dims`           | `{"input": 36, "hidden": H, "classes": C, "layers": 3}`        |
//! | `label_map`      | class names, index order                                       |
//! | `dropout_rates`  | four rates: input, after layer 0, after layer 1, after layer 2 |
//! | `preprocessing`  | `{"normalization": "full" or "scale-only", "interval", "min_len"}` |
//! | `tensors`        | `[{"name", "shape", "data"}]` in the fixed order below          |
//!
//! Tensor order: for `l` in `0..3`: `layer{l}.w_r`, `u_r`, `b_r`, `w_z`,
//! `u_z`, `b_z`, `w_h`, `u_h`, `b_h`; then `head.w`, `head.b`. Matrices are
//! row-major. Numbers are written in shortest round-trip form, so parameters
//! survive save/load bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skelact_core::grunet::{NetworkDims, NUM_DROPOUT, NUM_LAYERS};
use skelact_core::{GruNetwork, IntervalConfig, LabelMap, Normalization};

use crate::error::{IoError, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const LAYER_TENSORS: [&str; 9] = ["w_r", "u_r", "b_r", "w_z", "u_z", "b_z", "w_h", "u_h", "b_h"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsRecord {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
    pub layers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationRecord {
    Full,
    ScaleOnly,
}

impl From<Normalization> for NormalizationRecord {
    fn from(n: Normalization) -> Self {
        match n {
            Normalization::Full => NormalizationRecord::Full,
            Normalization::ScaleOnly => NormalizationRecord::ScaleOnly,
        }
    }
}

impl From<NormalizationRecord> for Normalization {
    fn from(n: NormalizationRecord) -> Self {
        match n {
            NormalizationRecord::Full => Normalization::Full,
            NormalizationRecord::ScaleOnly => Normalization::ScaleOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessing {
    pub normalization: NormalizationRecord,
    pub interval: usize,
    pub min_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub dims: DimsRecord,
    pub label_map: Vec<String>,
    pub dropout_rates: [f64; NUM_DROPOUT],
    pub preprocessing: Preprocessing,
    pub tensors: Vec<TensorRecord>,
}

/// A network with the metadata needed to run it on raw keypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub net: GruNetwork,
    pub label_map: LabelMap,
    pub normalization: Normalization,
    pub interval: IntervalConfig,
}

fn tensor_names() -> Vec<String> {
    let mut names: Vec<String> = (0..NUM_LAYERS)
        .flat_map(|l| LAYER_TENSORS.iter().map(move |t| format!("layer{l}.{t}")))
        .collect();
    names.push("head.w".into());
    names.push("head.b".into());
    names
}

fn tensor_shapes(dims: NetworkDims) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    for l in 0..NUM_LAYERS {
        let input = if l == 0 { dims.input_dim } else { dims.hidden_dim };
        let h = dims.hidden_dim;
        for _ in 0..3 {
            shapes.push(vec![h, input]);
            shapes.push(vec![h, h]);
            shapes.push(vec![h]);
        }
    }
    shapes.push(vec![dims.num_classes, dims.hidden_dim]);
    shapes.push(vec![dims.num_classes]);
    shapes
}

impl ModelFile {
    pub fn from_model(model: &SavedModel) -> Self {
        let dims = model.net.dims();
        let tensors = tensor_names()
            .into_iter()
            .zip(tensor_shapes(dims))
            .zip(model.net.tensors())
            .map(|((name, shape), data)| TensorRecord {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            dims: DimsRecord {
                input: dims.input_dim,
                hidden: dims.hidden_dim,
                classes: dims.num_classes,
                layers: NUM_LAYERS,
            },
            label_map: model.label_map.names().to_vec(),
            dropout_rates: model.net.dropout_rates,
            preprocessing: Preprocessing {
                normalization: model.normalization.into(),
                interval: model.interval.interval,
                min_len: model.interval.min_len,
            },
            tensors,
        }
    }

    pub fn into_model(self) -> Result<SavedModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(IoError::Version {
                found: self.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let d = self.dims;
        if d.layers != NUM_LAYERS {
            return Err(IoError::Schema(format!("expected {NUM_LAYERS} layers, found {}", d.layers)));
        }
        if d.input != skelact_core::VECTOR_LEN {
            return Err(IoError::Schema(format!(
                "input size must be {}, found {}",
                skelact_core::VECTOR_LEN,
                d.input
            )));
        }
        let label_map = LabelMap::new(&self.label_map).map_err(|e| IoError::Schema(format!("label_map: {e}")))?;
        if label_map.len() != d.classes {
            return Err(IoError::Schema(format!(
                "label_map has {} names but dims.classes is {}",
                label_map.len(),
                d.classes
            )));
        }
        let dims = NetworkDims {
            input_dim: d.input,
            hidden_dim: d.hidden,
            num_classes: d.classes,
        };
        let mut net = GruNetwork::zeros(dims, self.dropout_rates)
            .map_err(|e| IoError::Schema(format!("dims or dropout_rates: {e}")))?;

        let names = tensor_names();
        let shapes = tensor_shapes(dims);
        if self.tensors.len() != names.len() {
            return Err(IoError::Schema(format!(
                "expected {} tensors, found {}",
                names.len(),
                self.tensors.len()
            )));
        }
        for (((record, name), shape), dst) in self
            .tensors
            .iter()
            .zip(&names)
            .zip(&shapes)
            .zip(net.tensors_mut())
        {
            if &record.name != name {
                return Err(IoError::Schema(format!("expected tensor `{name}`, found `{}`", record.name)));
            }
            if &record.shape != shape || record.data.len() != dst.len() {
                return Err(IoError::Schema(format!(
                    "tensor `{name}`: expected shape {shape:?} ({} values), found {:?} ({} values)",
                    dst.len(),
                    record.shape,
                    record.data.len()
                )));
            }
            dst.copy_from_slice(&record.data);
        }
        net.validate().map_err(|e| IoError::Schema(e.to_string()))?;
        let interval = IntervalConfig::new(self.preprocessing.interval, self.preprocessing.min_len)
            .map_err(|e| IoError::Schema(format!("preprocessing: {e}")))?;
        Ok(SavedModel {
            net,
            label_map,
            normalization: self.preprocessing.normalization.into(),
            interval,
        })
    }
}

pub fn model_to_string(model: &SavedModel) -> String {
    let mut s = serde_json::to_string(&ModelFile::from_model(model)).expect("serializable");
    s.push('\n');
    s
}

pub fn model_from_str(text: &str, origin: &Path) -> Result<SavedModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| IoError::parse(origin, e))?;
    file.into_model()
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| IoError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    model_from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SavedModel {
        SavedModel {
            net: GruNetwork::init(NetworkDims::new(5, 3), [0.1, 0.2, 0.3, 0.4], 17).unwrap(),
            label_map: LabelMap::new(&["a", "b", "c"]).unwrap(),
            normalization: Normalization::ScaleOnly,
            interval: IntervalConfig::new(3, 2).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact_and_canonical() {
        let m = sample();
        let text = model_to_string(&m);
        let back = model_from_str(&text, Path::new("m")).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.net.tensors().iter().zip(m.net.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let text = model_to_string(&sample());
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_str(cut, Path::new("m")), Err(IoError::Parse { .. })));
    }

    #[test]
    fn version_and_shape_checked() {
        let mut file = ModelFile::from_model(&sample());
        file.format_version = 2;
        assert!(matches!(file.into_model(), Err(IoError::Version { found: 2, .. })));

        let mut file = ModelFile::from_model(&sample());
        file.tensors[4].data.pop();
        assert!(matches!(file.into_model(), Err(IoError::Schema(_))));

        let mut file = ModelFile::from_model(&sample());
        file.tensors.swap(0, 1);
        assert!(matches!(file.into_model(), Err(IoError::Schema(_))));
    }
}
