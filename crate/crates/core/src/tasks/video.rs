//! Multi-modal long videos and their on-disk container.
//!
//! Container layout (little-endian): `b"FZMVIDEO"`, `u32` version,
//! `u32` frames, `u32` text rows, `u32` visual dim, `u32` text dim,
//! `u32` label count, then per label `u8` emotion, `u8` intensity,
//! `u32` start, `u32` end; then visual rows and text rows as `f64`.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::labels::{Emotion, EmotionClass, Intensity};

pub const VISUAL_DIM: usize = 35;
pub const TEXT_DIM: usize = 300;

const MAGIC: &[u8; 8] = b"FZMVIDEO";
const VERSION: u32 = 1;

/// A labelled frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentLabel {
    pub class: EmotionClass,
    pub start: usize,
    pub end: usize,
}

impl SegmentLabel {
    pub fn new(class: EmotionClass, start: usize, end: usize) -> Self {
        Self { class, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-frame visual features, one text feature row per labelled segment,
/// and the ordered segment labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LongVideo {
    visual: Tensor<f64>,
    text: Tensor<f64>,
    labels: Vec<SegmentLabel>,
}

impl LongVideo {
    pub fn new(visual: Tensor<f64>, text: Tensor<f64>, labels: Vec<SegmentLabel>) -> Result<Self> {
        let mut prev_end = 0;
        for (i, l) in labels.iter().enumerate() {
            if l.start >= l.end {
                return Err(Error::Data(format!(
                    "segment {i} is empty ([{}, {}))",
                    l.start, l.end
                )));
            }
            if l.start < prev_end {
                return Err(Error::Data(format!(
                    "segment {i} overlaps or precedes segment {}",
                    i - 1
                )));
            }
            if l.end > visual.rows() {
                return Err(Error::Data(format!(
                    "segment {i} ends at frame {} beyond {} frames",
                    l.end,
                    visual.rows()
                )));
            }
            prev_end = l.end;
        }
        if text.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} text rows for {} labelled segments",
                text.rows(),
                labels.len()
            )));
        }
        Ok(Self {
            visual,
            text,
            labels,
        })
    }

    pub fn visual(&self) -> &Tensor<f64> {
        &self.visual
    }

    pub fn text(&self) -> &Tensor<f64> {
        &self.text
    }

    pub fn labels(&self) -> &[SegmentLabel] {
        &self.labels
    }

    pub fn frames(&self) -> usize {
        self.visual.rows()
    }

    /// Same labels with replaced features (used by noise injectors).
    pub fn with_features(&self, visual: Tensor<f64>, text: Tensor<f64>) -> Result<Self> {
        if visual.shape() != self.visual.shape() || text.shape() != self.text.shape() {
            return Err(Error::shape(
                "with_features",
                "feature shapes must be preserved",
            ));
        }
        Ok(Self {
            visual,
            text,
            labels: self.labels.clone(),
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        for v in [
            self.visual.rows(),
            self.text.rows(),
            self.visual.cols(),
            self.text.cols(),
            self.labels.len(),
        ] {
            w.write_u32::<LE>(v as u32)?;
        }
        for l in &self.labels {
            w.write_u8(l.class.emotion.index() as u8)?;
            w.write_u8(l.class.intensity.index() as u8)?;
            w.write_u32::<LE>(l.start as u32)?;
            w.write_u32::<LE>(l.end as u32)?;
        }
        for &v in self.visual.data().iter().chain(self.text.data()) {
            w.write_f64::<LE>(v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Data("not a video container".into()));
        }
        let version = r.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::Data(format!(
                "unsupported video container version {version}"
            )));
        }
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = r.read_u32::<LE>()? as usize;
        }
        let [frames, text_rows, vdim, tdim, nlabels] = dims;
        let mut labels = Vec::with_capacity(nlabels);
        for i in 0..nlabels {
            let e = r.read_u8()?;
            let k = r.read_u8()?;
            let class = match (
                Emotion::from_index(e as usize),
                Intensity::from_index(k as usize),
            ) {
                (Some(e), Some(k)) => EmotionClass::new(e, k),
                _ => {
                    return Err(Error::Data(format!(
                        "segment {i}: bad class code ({e}, {k})"
                    )))
                }
            };
            let start = r.read_u32::<LE>()? as usize;
            let end = r.read_u32::<LE>()? as usize;
            labels.push(SegmentLabel::new(class, start, end));
        }
        let mut read_matrix = |rows: usize, cols: usize| -> Result<Tensor<f64>> {
            let mut data = vec![0.0; rows * cols];
            r.read_f64_into::<LE>(&mut data)?;
            Tensor::new(rows, cols, data)
        };
        let visual = read_matrix(frames, vdim)?;
        let text = read_matrix(text_rows, tdim)?;
        Self::new(visual, text, labels)
    }
}
