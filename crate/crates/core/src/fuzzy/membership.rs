//! Attribute membership functions and the component inference stage.
//!
//! Every facial component takes values from a small integer set: three-valued
//! components use {-1, 0, 1} and binary ones {0, 1}. Each value owns a
//! triangular membership centred on it. De-fuzzification takes the centroid of
//! the active memberships and falls back to the nearest value when none fire.

use crate::error::{Error, Result};

use super::FuzzyConfig;

/// Triangular membership `max(0, 1 - |u - center| / half_width)`.
pub fn tri_membership(u: f64, center: f64, half_width: f64) -> Result<f64> {
    if !(half_width > 0.0) {
        return Err(Error::Param(format!(
            "membership half-width must be positive, got {half_width}"
        )));
    }
    Ok(tri(u, center, half_width))
}

#[inline]
pub(crate) fn tri(u: f64, center: f64, half_width: f64) -> f64 {
    (1.0 - (u - center).abs() / half_width).max(0.0)
}

/// Crisp codings sit on attribute values; soft codings are de-fuzzified
/// centroids anywhere in each component's value range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodingMode {
    Crisp,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCoding {
    pub values: Vec<f64>,
    pub mode: CodingMode,
}

impl ComponentCoding {
    /// A crisp coding; every value must be -1, 0 or 1.
    pub fn crisp(values: impl Into<Vec<f64>>) -> Result<Self> {
        let values = values.into();
        if let Some(v) = values.iter().find(|v| ![-1.0, 0.0, 1.0].contains(*v)) {
            return Err(Error::Param(format!(
                "crisp coding value {v} not in {{-1,0,1}}"
            )));
        }
        Ok(Self {
            values,
            mode: CodingMode::Crisp,
        })
    }

    pub fn soft(values: impl Into<Vec<f64>>) -> Self {
        Self {
            values: values.into(),
            mode: CodingMode::Soft,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    /// 1-based component number.
    pub component_index: usize,
    pub name: &'static str,
    /// Admissible attribute values, ascending.
    pub value_set: Vec<i8>,
}

impl AttributeSpec {
    pub fn three_valued(component_index: usize, name: &'static str) -> Self {
        Self {
            component_index,
            name,
            value_set: vec![-1, 0, 1],
        }
    }

    pub fn binary(component_index: usize, name: &'static str) -> Self {
        Self {
            component_index,
            name,
            value_set: vec![0, 1],
        }
    }

    pub fn min_value(&self) -> f64 {
        f64::from(self.value_set[0])
    }

    pub fn max_value(&self) -> f64 {
        f64::from(*self.value_set.last().unwrap())
    }

    /// Membership of `u` in each attribute value, in `value_set` order.
    /// The vector need not sum to one.
    pub fn memberships(&self, u: f64, cfg: &FuzzyConfig) -> Vec<f64> {
        let hw = cfg.fcis_half_width();
        self.value_set
            .iter()
            .map(|&v| tri(u, f64::from(v), hw))
            .collect()
    }

    /// The attribute value closest to `u`.
    pub fn nearest_value(&self, u: f64) -> f64 {
        let u = if u.is_nan() { 0.0 } else { u };
        self.value_set
            .iter()
            .map(|&v| f64::from(v))
            .min_by(|a, b| (a - u).abs().total_cmp(&(b - u).abs()))
            .unwrap()
    }

    /// Centroid of the active memberships; the nearest value when none fire.
    pub fn defuzzify(&self, u: f64, cfg: &FuzzyConfig) -> f64 {
        let mu = self.memberships(u, cfg);
        let total: f64 = mu.iter().sum();
        if total > 0.0 {
            let weighted: f64 = mu
                .iter()
                .zip(&self.value_set)
                .map(|(m, &v)| m * f64::from(v))
                .sum();
            weighted / total
        } else {
            self.nearest_value(u)
        }
    }
}

/// The twelve facial components and their attribute value sets.
pub fn default_attribute_specs() -> Vec<AttributeSpec> {
    vec![
        AttributeSpec::three_valued(1, "left eyebrow"),
        AttributeSpec::three_valued(2, "right eyebrow"),
        AttributeSpec::binary(3, "brow crest"),
        AttributeSpec::three_valued(4, "left eye"),
        AttributeSpec::three_valued(5, "right eye"),
        AttributeSpec::binary(6, "nose"),
        AttributeSpec::binary(7, "nostril"),
        AttributeSpec::binary(8, "mouth"),
        AttributeSpec::three_valued(9, "upper lip"),
        AttributeSpec::three_valued(10, "lower lip"),
        AttributeSpec::three_valued(11, "left mouth corner"),
        AttributeSpec::three_valued(12, "right mouth corner"),
    ]
}

/// Per-value memberships of a raw component score.
pub fn fcis_memberships(u: f64, spec: &AttributeSpec, cfg: &FuzzyConfig) -> Vec<f64> {
    spec.memberships(u, cfg)
}

/// De-fuzzifies one raw score per component into a soft coding.
pub fn fcis_defuzzify(
    u: &[f64],
    specs: &[AttributeSpec],
    cfg: &FuzzyConfig,
) -> Result<ComponentCoding> {
    if u.len() != specs.len() {
        return Err(Error::Param(format!(
            "expected {} component scores, got {}",
            specs.len(),
            u.len()
        )));
    }
    Ok(ComponentCoding::soft(
        u.iter()
            .zip(specs)
            .map(|(&x, spec)| spec.defuzzify(x, cfg))
            .collect::<Vec<_>>(),
    ))
}
