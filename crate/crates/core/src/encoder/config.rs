use crate::error::{Error, Result};
use crate::fuzzy::FuzzyConfig;

/// Encoder sizes, ablation switches and fuzzy settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Embedding width.
    pub d: usize,
    /// Temporal kernel width.
    pub kernel: usize,
    /// Number of gated temporal layers.
    pub layers: usize,
    pub use_fuzzy: bool,
    pub use_spatial: bool,
    pub use_temporal: bool,
    /// Weight of the coding regression that trains the FCIS head.
    pub coding_weight: f64,
    pub fuzzy: FuzzyConfig,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d: 64,
            kernel: 3,
            layers: 2,
            use_fuzzy: true,
            use_spatial: true,
            use_temporal: true,
            coding_weight: 0.1,
            fuzzy: FuzzyConfig::default(),
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.kernel == 0 || self.layers == 0 {
            return Err(Error::Config(
                "d, kernel and layers must be positive".into(),
            ));
        }
        if !(self.coding_weight >= 0.0) {
            return Err(Error::Config(format!(
                "coding weight must be >= 0, got {}",
                self.coding_weight
            )));
        }
        self.fuzzy.validate()
    }

    /// Kernel width actually used; 1 when temporal mixing is ablated.
    pub fn effective_kernel(&self) -> usize {
        if self.use_temporal {
            self.kernel
        } else {
            1
        }
    }

    /// Frames lost to valid padding across all temporal layers.
    pub fn frames_consumed(&self) -> usize {
        self.layers * (self.effective_kernel() - 1)
    }

    /// Shortest view the temporal stack accepts.
    pub fn min_frames(&self) -> usize {
        self.frames_consumed() + 1
    }
}
