//! Trainable parameters of the surrogate and their JSON container.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{Layer, Mlp, OUTPUT_WIDTH, THREE_BODY_INPUT, TWO_BODY_INPUT};
use crate::error::{invalid, Error, Result};
use crate::oracle::Mat3;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const ACTIVATION: &str = "tanh";

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    pub h_theta2: Mlp,
    pub g_theta3: Mlp,
    /// Diagonal of the constant single-particle mobility block.
    pub alpha1: [f64; 3],
    /// Cutoff used to build faces at inference time.
    pub face_r_cut: f64,
}

impl SurrogateParams {
    pub fn new(h_theta2: Mlp, g_theta3: Mlp, alpha1: [f64; 3], face_r_cut: f64) -> Result<Self> {
        for (name, net, input) in [("h_theta2", &h_theta2, TWO_BODY_INPUT), ("g_theta3", &g_theta3, THREE_BODY_INPUT)] {
            if net.input_width() != input || net.output_width() != OUTPUT_WIDTH {
                return Err(Error::Shape(format!(
                    "{name} must map {input} -> {OUTPUT_WIDTH}, got {} -> {}",
                    net.input_width(),
                    net.output_width()
                )));
            }
        }
        if !alpha1.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(invalid("alpha1", format!("diagonal must be positive, got {alpha1:?}")));
        }
        if !(face_r_cut.is_finite() && face_r_cut > 0.0) {
            return Err(invalid("face_r_cut", format!("must be positive, got {face_r_cut}")));
        }
        Ok(Self {
            h_theta2,
            g_theta3,
            alpha1,
            face_r_cut,
        })
    }

    /// Glorot-initialized kernels from a seeded generator.
    pub fn initialize(alpha1: [f64; 3], face_r_cut: f64, seed: u64) -> Result<Self> {
        Self::initialize_scaled(alpha1, face_r_cut, seed, 1.0)
    }

    /// Glorot initialization with the output-layer weights multiplied by
    /// `output_scale`. A small scale starts both kernels near zero, so early
    /// predictions stay close to the isolated-particle response.
    pub fn initialize_scaled(alpha1: [f64; 3], face_r_cut: f64, seed: u64, output_scale: f64) -> Result<Self> {
        if !(output_scale.is_finite() && output_scale >= 0.0) {
            return Err(invalid("output_scale", format!("must be non-negative, got {output_scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Mlp::glorot(&Mlp::kernel_widths(TWO_BODY_INPUT), &mut rng);
        let mut g = Mlp::glorot(&Mlp::kernel_widths(THREE_BODY_INPUT), &mut rng);
        for net in [&mut h, &mut g] {
            if let Some(last) = net.layers_mut().last_mut() {
                last.weights.iter_mut().for_each(|w| *w *= output_scale);
            }
        }
        Self::new(h, g, alpha1, face_r_cut)
    }

    pub fn alpha1_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.alpha1.into())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Shape("model file lacks a format_version".into()))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::FormatVersion {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(value)?;
        if file.activation != ACTIVATION {
            return Err(Error::Shape(format!("unsupported activation `{}`", file.activation)));
        }
        Self::new(file.h_theta2.into_mlp()?, file.g_theta3.into_mlp()?, file.alpha1, file.face_r_cut)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.h_theta2.parameter_count() + self.g_theta3.parameter_count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    activation: String,
    alpha1: [f64; 3],
    face_r_cut: f64,
    h_theta2: NetFile,
    g_theta3: NetFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    /// `[inputs, outputs]`; weights are stored row-major in this shape.
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<&SurrogateParams> for ModelFile {
    fn from(p: &SurrogateParams) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            activation: ACTIVATION.to_string(),
            alpha1: p.alpha1,
            face_r_cut: p.face_r_cut,
            h_theta2: NetFile::from(&p.h_theta2),
            g_theta3: NetFile::from(&p.g_theta3),
        }
    }
}

impl From<&Mlp> for NetFile {
    fn from(m: &Mlp) -> Self {
        Self {
            layers: m
                .layers()
                .iter()
                .map(|l| LayerFile {
                    shape: [l.inputs, l.outputs],
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl NetFile {
    fn into_mlp(self) -> Result<Mlp> {
        Mlp::new(
            self.layers
                .into_iter()
                .map(|l| Layer {
                    inputs: l.shape[0],
                    outputs: l.shape[1],
                    weights: l.weights,
                    bias: l.bias,
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let p = SurrogateParams::initialize([0.05, 0.06, 0.07], 5.0, 9).unwrap();
        let text = p.to_json().unwrap();
        assert_eq!(SurrogateParams::from_json(&text).unwrap(), p);
        assert!(text.contains("\"activation\": \"tanh\""));
        assert_eq!(p.fingerprint().unwrap(), SurrogateParams::from_json(&text).unwrap().fingerprint().unwrap());
    }

    #[test]
    fn version_mismatch_is_reported() {
        let p = SurrogateParams::initialize([0.05; 3], 5.0, 1).unwrap();
        let text = p.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(
            SurrogateParams::from_json(&text),
            Err(Error::FormatVersion { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let p = SurrogateParams::initialize([0.05; 3], 5.0, 1).unwrap();
        assert!(SurrogateParams::new(p.h_theta2.clone(), p.g_theta3.clone(), [0.05, 0.0, 0.05], 5.0).is_err());
        assert!(SurrogateParams::new(p.h_theta2.clone(), p.g_theta3.clone(), [0.05; 3], -1.0).is_err());
        assert!(SurrogateParams::new(p.g_theta3.clone(), p.h_theta2.clone(), [0.05; 3], 5.0).is_err());
        let text = p.to_json().unwrap().replace("\"tanh\"", "\"relu\"");
        assert!(SurrogateParams::from_json(&text).is_err());
    }

    #[test]
    fn seeds_determine_initialization() {
        let a = SurrogateParams::initialize([0.05; 3], 5.0, 3).unwrap();
        let b = SurrogateParams::initialize([0.05; 3], 5.0, 3).unwrap();
        let c = SurrogateParams::initialize([0.05; 3], 5.0, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.g_theta3.layers().iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }
}
