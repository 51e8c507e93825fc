//! Feed-forward controllers: representation, JSON weight files, and exact
//! forward evaluation.
//!
//! Weight file layout (row-major matrices):
//!
//! ```json
//! {"layers": [{"W": [[...]], "b": [...], "act": "relu"}, ...],
//!  "out": {"W": [[...]], "b": [...]}}
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};

/// Elementwise activation. Every variant is slope-restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = Activation::Sigmoid.apply(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = ReachError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(ReachError::UnknownActivation(s.to_string())),
        }
    }
}

/// Affine map `z = W a + b` followed by an activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: DMatrix<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// `k` hidden layers followed by an affine output map with no activation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNetwork {
    hidden: Vec<Layer>,
    out_weight: DMatrix<f64>,
    out_bias: Vec<f64>,
}

impl FeedForwardNetwork {
    /// Validates the dimension chain.
    pub fn new(hidden: Vec<Layer>, out_weight: DMatrix<f64>, out_bias: Vec<f64>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        let shapes = hidden
            .iter()
            .map(|l| (&l.weight, l.bias.len()))
            .chain(std::iter::once((&out_weight, out_bias.len())));
        for (idx, (w, blen)) in shapes.enumerate() {
            let layer_no = idx + 1;
            if w.nrows() == 0 || w.ncols() == 0 {
                return Err(ReachError::Network(format!("layer {layer_no} has an empty weight matrix")));
            }
            if let Some(p) = prev {
                if w.ncols() != p {
                    return Err(ReachError::Network(format!(
                        "layer {layer_no} expects {} inputs, got {p}",
                        w.ncols()
                    )));
                }
            }
            if blen != w.nrows() {
                return Err(ReachError::Network(format!(
                    "layer {layer_no} has {} outputs but a bias of length {blen}",
                    w.nrows()
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(ReachError::Network(format!("layer {layer_no} has non-finite weights")));
            }
            prev = Some(w.nrows());
        }
        Ok(Self {
            hidden,
            out_weight,
            out_bias,
        })
    }

    pub fn hidden_layers(&self) -> &[Layer] {
        &self.hidden
    }

    pub fn out_weight(&self) -> &DMatrix<f64> {
        &self.out_weight
    }

    pub fn out_bias(&self) -> &[f64] {
        &self.out_bias
    }

    pub fn input_dim(&self) -> usize {
        self.hidden
            .first()
            .map_or(self.out_weight.ncols(), |l| l.weight.ncols())
    }

    pub fn output_dim(&self) -> usize {
        self.out_weight.nrows()
    }

    /// Number of neurons per hidden layer.
    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(|l| l.weight.nrows()).collect()
    }

    pub fn is_relu(&self) -> bool {
        self.hidden.iter().all(|l| l.activation == Activation::Relu)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(ReachError::DimensionMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut a = x.to_vec();
        for layer in &self.hidden {
            let mut z = affine(&layer.weight, &layer.bias, &a);
            z.iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        Ok(affine(&self.out_weight, &self.out_bias, &a))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ReachError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: NetworkFile = serde_json::from_str(&text).map_err(|source| ReachError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        file.try_into()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|source| ReachError::Parse {
            path: "<inline>".into(),
            source,
        })?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile::from(self)).expect("network serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|source| ReachError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `W a + b`, accumulated left to right in each row.
pub(crate) fn affine(w: &DMatrix<f64>, b: &[f64], a: &[f64]) -> Vec<f64> {
    (0..w.nrows())
        .map(|r| {
            let mut s = 0.0;
            for (c, v) in a.iter().enumerate() {
                s += w[(r, c)] * v;
            }
            s + b[r]
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    act: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutFile {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    layers: Vec<LayerFile>,
    out: OutFile,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(ReachError::Network(format!(
            "{what}: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

impl TryFrom<NetworkFile> for FeedForwardNetwork {
    type Error = ReachError;

    fn try_from(file: NetworkFile) -> Result<Self> {
        let hidden = file
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Ok(Layer {
                    weight: matrix_from_rows(&l.w, &format!("layer {}", i + 1))?,
                    bias: l.b.clone(),
                    activation: l.act.parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out = matrix_from_rows(&file.out.w, "output layer")?;
        FeedForwardNetwork::new(hidden, out, file.out.b)
    }
}

impl From<&FeedForwardNetwork> for NetworkFile {
    fn from(net: &FeedForwardNetwork) -> Self {
        NetworkFile {
            layers: net
                .hidden
                .iter()
                .map(|l| LayerFile {
                    w: matrix_to_rows(&l.weight),
                    b: l.bias.clone(),
                    act: l.activation.as_str().to_string(),
                })
                .collect(),
            out: OutFile {
                w: matrix_to_rows(&net.out_weight),
                b: net.out_bias.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_relu() -> FeedForwardNetwork {
        FeedForwardNetwork::from_json(
            r#"{"layers":[{"W":[[1]],"b":[0],"act":"relu"}],"out":{"W":[[1]],"b":[0]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_single_layer_network() {
        let net = identity_relu();
        assert_eq!(net.input_dim(), 1);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.hidden_layers().len(), 1);
    }

    #[test]
    fn relu_forward_kills_negatives() {
        let net = identity_relu();
        assert_eq!(net.forward(&[-1.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn mismatched_dims_are_rejected_with_layer_number() {
        let text = r#"{"layers":[
            {"W":[[1,0],[0,1],[1,1]],"b":[0,0,0],"act":"relu"},
            {"W":[[1,0,0,0]],"b":[0],"act":"relu"}],
            "out":{"W":[[1]],"b":[0]}}"#;
        let err = FeedForwardNetwork::from_json(text).unwrap_err();
        assert_eq!(err.to_string(), "layer 2 expects 4 inputs, got 3");
    }

    #[test]
    fn unknown_activation_is_rejected() {
        let text = r#"{"layers":[{"W":[[1]],"b":[0],"act":"gelu"}],"out":{"W":[[1]],"b":[0]}}"#;
        assert!(matches!(
            FeedForwardNetwork::from_json(text),
            Err(ReachError::UnknownActivation(_))
        ));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = r#"{"layers":[{"W":[[1, 2],[1]],"b":[0, 0],"act":"relu"}],"out":{"W":[[1, 1]],"b":[0]}}"#;
        assert!(FeedForwardNetwork::from_json(text).is_err());
    }

    #[test]
    fn input_dimension_is_checked() {
        assert!(identity_relu().forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn bias_length_is_checked() {
        let text = r#"{"layers":[{"W":[[1]],"b":[0, 1],"act":"relu"}],"out":{"W":[[1]],"b":[0]}}"#;
        assert!(FeedForwardNetwork::from_json(text).is_err());
    }
}
