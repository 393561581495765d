//! Emotion and intensity labels and the 18-way class index.
//!
//! Class order is fixed: emotions Angry < Happy < Disgust < Fear < Sad <
//! Surprise, and within an emotion Low < Medium < High. The flat index is
//! `emotion * 3 + intensity`, so index 0 is Angry-Low and 17 is
//! Surprise-High. Every tie-break in the crate follows this order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const NUM_EMOTIONS: usize = 6;
pub const NUM_INTENSITIES: usize = 3;
pub const NUM_CLASSES: usize = NUM_EMOTIONS * NUM_INTENSITIES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Angry,
    Happy,
    Disgust,
    Fear,
    Sad,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; NUM_EMOTIONS] = [
        Emotion::Angry,
        Emotion::Happy,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Sad,
        Emotion::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Angry => "Angry",
            Emotion::Happy => "Happy",
            Emotion::Disgust => "Disgust",
            Emotion::Fear => "Fear",
            Emotion::Sad => "Sad",
            Emotion::Surprise => "Surprise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Intensity {
    Low,
    Medium,
    High,
}

impl Intensity {
    pub const ALL: [Intensity; NUM_INTENSITIES] =
        [Intensity::Low, Intensity::Medium, Intensity::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Intensity::Low => "Low",
            Intensity::Medium => "Medium",
            Intensity::High => "High",
        }
    }
}

/// One of the 18 (emotion, intensity) classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmotionClass {
    pub emotion: Emotion,
    pub intensity: Intensity,
}

impl EmotionClass {
    pub fn new(emotion: Emotion, intensity: Intensity) -> Self {
        Self { emotion, intensity }
    }

    pub fn index(self) -> usize {
        self.emotion.index() * NUM_INTENSITIES + self.intensity.index()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= NUM_CLASSES {
            return None;
        }
        Some(Self {
            emotion: Emotion::from_index(i / NUM_INTENSITIES)?,
            intensity: Intensity::from_index(i % NUM_INTENSITIES)?,
        })
    }

    /// All 18 classes in index order.
    pub fn all() -> impl Iterator<Item = EmotionClass> {
        (0..NUM_CLASSES).map(|i| EmotionClass::from_index(i).unwrap())
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Formats as `Emotion-Intensity`, e.g. `Angry-High`.
impl fmt::Display for EmotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.emotion, self.intensity)
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Lookup(format!("unknown emotion `{s}`")))
    }
}

impl FromStr for Intensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Intensity::ALL
            .iter()
            .copied()
            .find(|i| i.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Lookup(format!("unknown intensity `{s}`")))
    }
}

impl FromStr for EmotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (e, i) = s
            .split_once('-')
            .ok_or_else(|| Error::Lookup(format!("expected `Emotion-Intensity`, got `{s}`")))?;
        Ok(EmotionClass::new(e.parse()?, i.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_follows_class_order() {
        let all: Vec<_> = EmotionClass::all().collect();
        assert_eq!(all.len(), 18);
        assert_eq!(all[0], EmotionClass::new(Emotion::Angry, Intensity::Low));
        assert_eq!(
            all[17],
            EmotionClass::new(Emotion::Surprise, Intensity::High)
        );
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
        assert!(EmotionClass::from_index(18).is_none());
    }

    #[test]
    fn parse_and_display() {
        let c: EmotionClass = "disgust-medium".parse().unwrap();
        assert_eq!(c.to_string(), "Disgust-Medium");
        assert!("Bored-High".parse::<EmotionClass>().is_err());
        assert!("Angry".parse::<EmotionClass>().is_err());
    }
}
