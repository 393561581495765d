use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::labels::{Emotion, EmotionClass, Intensity, NUM_CLASSES};

use super::membership::tri;

const DEFAULT_CURVES: &str = include_str!("../../data/curves.txt");

/// Triangular intensity membership over eccentricity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityCurve {
    pub class: EmotionClass,
    pub center: f64,
    pub half_width: f64,
}

impl IntensityCurve {
    pub fn new(class: EmotionClass, center: f64, half_width: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&center) {
            return Err(Error::Param(format!(
                "curve center {center} outside [0, 1]"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::Param(format!(
                "curve half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            class,
            center,
            half_width,
        })
    }

    pub fn eval(&self, e: f64) -> f64 {
        tri(e, self.center, self.half_width)
    }
}

/// One optional curve per class.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityCurves {
    curves: [Option<IntensityCurve>; NUM_CLASSES],
}

impl IntensityCurves {
    pub fn new(list: impl IntoIterator<Item = IntensityCurve>) -> Self {
        let mut curves = [None; NUM_CLASSES];
        for c in list {
            curves[c.class.index()] = Some(c);
        }
        Self { curves }
    }

    /// Shipped curves: every emotion uses the calibrated Angry shape.
    pub fn default_curves() -> Self {
        Self::parse(DEFAULT_CURVES).expect("shipped intensity curves parse")
    }

    pub fn get(&self, class: EmotionClass) -> Option<&IntensityCurve> {
        self.curves[class.index()].as_ref()
    }

    pub fn eval(&self, class: EmotionClass, e: f64) -> Result<f64> {
        self.get(class)
            .map(|c| c.eval(e))
            .ok_or_else(|| Error::Lookup(format!("no intensity curve for {class}")))
    }

    /// `<Emotion> <Intensity> <center> <half_width>` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut list = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", tokens.len())));
            }
            let emotion: Emotion = tokens[0].parse().map_err(|e: Error| err(e.to_string()))?;
            let intensity: Intensity = tokens[1].parse().map_err(|e: Error| err(e.to_string()))?;
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| err(format!("bad number `{t}`")))
            };
            let curve = IntensityCurve::new(
                EmotionClass::new(emotion, intensity),
                num(tokens[2])?,
                num(tokens[3])?,
            )
            .map_err(|e| err(e.to_string()))?;
            list.push(curve);
        }
        Ok(Self::new(list))
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for c in self.curves.iter().flatten() {
            writeln!(
                out,
                "{} {} {} {}",
                c.class.emotion, c.class.intensity, c.center, c.half_width
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{Emotion::*, Intensity::*};

    #[test]
    fn angry_anchor_values() {
        let curves = IntensityCurves::default_curves();
        let medium = curves.eval(EmotionClass::new(Angry, Medium), 0.2).unwrap();
        assert!((medium - 0.34).abs() <= 0.005, "{medium}");
        assert_eq!(
            curves.eval(EmotionClass::new(Angry, Low), 0.2).unwrap(),
            0.0
        );
    }

    #[test]
    fn peak_at_center_for_every_class() {
        let curves = IntensityCurves::default_curves();
        for class in EmotionClass::all() {
            let c = curves.get(class).unwrap();
            assert_eq!(c.eval(c.center), 1.0);
        }
    }

    #[test]
    fn missing_curve_is_a_lookup_error() {
        let curves = IntensityCurves::parse("Angry High 0.05 0.25\n").unwrap();
        assert!(curves.eval(EmotionClass::new(Angry, High), 0.1).is_ok());
        assert!(matches!(
            curves.eval(EmotionClass::new(Sad, Low), 0.1),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            IntensityCurves::parse("Angry High 0.05 0.25\nAngry Low 0.6\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            IntensityCurves::parse("Angry High 0.05 -1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let curves = IntensityCurves::default_curves();
        assert_eq!(IntensityCurves::parse(&curves.serialize()).unwrap(), curves);
    }
}
