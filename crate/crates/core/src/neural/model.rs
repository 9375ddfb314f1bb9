//! JSON model files.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Layer, Network};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub benchmark: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub verified: bool,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct LinearDoc {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    arch: Vec<usize>,
    activations: Vec<String>,
    layers: Vec<LinearDoc>,
    #[serde(default)]
    meta: ModelMeta,
}

pub fn model_to_json(net: &Network, meta: &ModelMeta) -> serde_json::Value {
    let layers = net
        .linear_layers()
        .map(|(w, b)| LinearDoc {
            w: w.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: b.to_vec(),
        })
        .collect::<Vec<_>>();
    let doc = ModelDoc {
        arch: net.widths(),
        activations: vec!["tanh".into(); layers.len() - 1],
        layers,
        meta: meta.clone(),
    };
    serde_json::to_value(doc).expect("serializable")
}

pub fn model_from_json(value: &str) -> Result<(Network, ModelMeta)> {
    let doc: ModelDoc = serde_json::from_str(value)?;
    if doc.layers.is_empty() {
        return Err(invalid("model has no layers"));
    }
    if doc.activations.len() + 1 != doc.layers.len() {
        return Err(invalid(format!(
            "model has {} linear layers but {} activations",
            doc.layers.len(),
            doc.activations.len()
        )));
    }
    if let Some(a) = doc.activations.iter().find(|a| a.as_str() != "tanh") {
        return Err(invalid(format!("unsupported activation '{a}'")));
    }
    let mut layers = Vec::with_capacity(2 * doc.layers.len() - 1);
    for (k, l) in doc.layers.into_iter().enumerate() {
        if k > 0 {
            layers.push(Layer::Tanh);
        }
        let rows = l.w.len();
        let cols = l.w.first().map_or(0, Vec::len);
        if l.w.iter().any(|r| r.len() != cols) {
            return Err(invalid(format!("layer {k}: ragged weight matrix")));
        }
        let flat: Vec<f64> = l.w.into_iter().flatten().collect();
        let w = Array2::from_shape_vec((rows, cols), flat).map_err(|e| invalid(e.to_string()))?;
        layers.push(Layer::Linear {
            w,
            b: Array1::from(l.b),
        });
    }
    let net = Network::from_layers(layers)?;
    if net.widths() != doc.arch {
        return Err(invalid(format!(
            "arch {:?} does not match the layer shapes {:?}",
            doc.arch,
            net.widths()
        )));
    }
    Ok((net, doc.meta))
}

pub fn save_model(path: &Path, net: &Network, meta: &ModelMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(&model_to_json(net, meta))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Network, ModelMeta)> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::nn_init;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = nn_init(&[3, 8, 8, 1], 5).unwrap();
        let meta = ModelMeta {
            benchmark: "lyapunov".into(),
            seed: 5,
            epsilon: 1e-3,
            verified: true,
            config: serde_json::json!({"eta": 0.1}),
        };
        let v = model_to_json(&net, &meta);
        assert_eq!(v["arch"], serde_json::json!([3, 8, 8, 1]));
        assert_eq!(v["activations"], serde_json::json!(["tanh"]));
        let (back, m) = model_from_json(&v.to_string()).unwrap();
        assert_eq!(back, net);
        assert_eq!(m, meta);
    }

    #[test]
    fn rejects_inconsistent_models() {
        let net = nn_init(&[2, 4, 4, 1], 1).unwrap();
        let mut v = model_to_json(&net, &ModelMeta::default());
        v["arch"] = serde_json::json!([2, 5, 5, 1]);
        assert!(model_from_json(&v.to_string()).is_err());
        let mut v = model_to_json(&net, &ModelMeta::default());
        v["activations"] = serde_json::json!(["relu"]);
        assert!(model_from_json(&v.to_string()).is_err());
        let mut v = model_to_json(&net, &ModelMeta::default());
        v["layers"][0]["W"][1] = serde_json::json!([1.0]);
        assert!(model_from_json(&v.to_string()).is_err());
    }
}
