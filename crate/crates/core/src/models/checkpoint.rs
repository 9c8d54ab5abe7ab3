use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::{ModelId, ModelSpec, Network, Parameters};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMetadata {
    /// Zero-based epoch the parameters were taken from.
    pub epoch: u32,
    pub validation_accuracy: f64,
    pub seed: u64,
}

/// Trained model state tied to the spec it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: Parameters,
    pub metadata: TrainingMetadata,
}

impl Checkpoint {
    pub fn new(spec: ModelSpec, params: Parameters, metadata: TrainingMetadata) -> Result<Self> {
        let net = Network::new(&spec)?;
        if params.values.len() != net.num_params() {
            return Err(Error::shape(format!(
                "model {} has {} parameters, checkpoint carries {}",
                spec.id,
                net.num_params(),
                params.values.len()
            )));
        }
        if params.bn.len() != net.bn_channels().len()
            || params.bn.iter().zip(net.bn_channels()).any(|(s, &c)| s.channels() != c || s.var.len() != c)
        {
            return Err(Error::shape(format!("batch-norm statistics do not match model {}", spec.id)));
        }
        Ok(Self { spec, params, metadata })
    }

    /// Rebuilds a checkpoint for a registered model id.
    pub fn for_model(id: &str, params: Parameters, metadata: TrainingMetadata) -> Result<Self> {
        let model: ModelId = id.parse()?;
        Self::new(model.spec(), params, metadata)
    }

    pub fn model_id(&self) -> &str {
        &self.spec.id
    }

    pub fn network(&self) -> Result<Network> {
        Network::new(&self.spec)
    }

    /// Names of the running-statistics blocks, parallel to `params.bn`.
    pub fn bn_names(&self) -> Result<Vec<String>> {
        let net = self.network()?;
        Ok(net
            .slices()
            .iter()
            .filter(|s| s.kind == super::ParamKind::BnGamma)
            .map(|s| s.name.trim_end_matches(".gamma").into())
            .collect())
    }

    /// SHA-256 over the model id, metadata, parameters and running
    /// statistics, bit-exact.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.spec.id.as_bytes());
        h.update(self.metadata.epoch.to_le_bytes());
        h.update(self.metadata.validation_accuracy.to_bits().to_le_bytes());
        h.update(self.metadata.seed.to_le_bytes());
        for v in &self.params.values {
            h.update(v.to_bits().to_le_bytes());
        }
        for s in &self.params.bn {
            for v in s.mean.iter().chain(&s.var) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }
}
