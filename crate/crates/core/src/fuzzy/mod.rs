//! Fuzzy component and knowledge inference.
//!
//! Two stages turn an encoder's per-component scores into emotion knowledge:
//!
//! 1. Component inference de-fuzzifies twelve raw scores into a soft
//!    component coding using triangular attribute memberships.
//! 2. Knowledge inference matches that coding against a bank of crisp rule
//!    prototypes. The normalized L1 distance ("eccentricity") to the closest
//!    prototype of each of the 18 (emotion, intensity) classes gives a class
//!    membership; membership-weighted prototypes form the semantic vector
//!    appended to the encoder embedding.
//!
//! Intensity curves over eccentricity are kept separately and only feed the
//! annotation path.

mod curves;
mod membership;
mod rules;

pub use curves::{IntensityCurve, IntensityCurves};
pub use membership::{
    default_attribute_specs, fcis_defuzzify, fcis_memberships, tri_membership, AttributeSpec,
    CodingMode, ComponentCoding,
};
pub use rules::{
    annotate, eccentricity, fkis_class_memberships, fuzzy_semantic_vector, Annotation,
    ClassMemberships, FuzzyRule, RuleBank,
};

use crate::error::{Error, Result};

/// Membership ranges of the two inference stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyConfig {
    /// Component-stage range; attribute half-width is `0.5 + lambda1`.
    pub lambda1: f64,
    /// Knowledge-stage range; eccentricity half-width is `0.25 + lambda2 / 2`.
    pub lambda2: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.4,
            lambda2: 0.4,
        }
    }
}

impl FuzzyConfig {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let cfg = Self { lambda1, lambda2 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Param(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    pub fn fcis_half_width(&self) -> f64 {
        0.5 + self.lambda1
    }

    pub fn fkis_half_width(&self) -> f64 {
        0.25 + self.lambda2 / 2.0
    }
}
