use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::video::{LongVideo, SegmentLabel};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::labels::EmotionClass;

pub const POS_DIM: usize = 8;
const POS_HIDDEN: usize = 16;
const POS_SEED: u64 = 0x7055_1710;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Visual,
    Text,
}

impl Modality {
    pub fn flag(self) -> f64 {
        match self {
            Modality::Visual => 0.0,
            Modality::Text => 1.0,
        }
    }
}

/// One modality of a video with its segment positions.
///
/// Visual streams are frame-aligned; text streams hold one row per segment.
#[derive(Debug, Clone)]
pub struct TaggedStream {
    pub modality: Modality,
    pub features: Tensor<f64>,
    pub positions: Vec<usize>,
}

/// Splits a video into its visual and text streams, both tagged with
/// positions `0..n` in label order.
pub fn segment_modalities(v: &LongVideo) -> Result<(TaggedStream, TaggedStream)> {
    if v.labels().is_empty() {
        return Err(Error::Data("video has no labelled segments".into()));
    }
    let positions: Vec<usize> = (0..v.labels().len()).collect();
    Ok((
        TaggedStream {
            modality: Modality::Visual,
            features: v.visual().clone(),
            positions: positions.clone(),
        },
        TaggedStream {
            modality: Modality::Text,
            features: v.text().clone(),
            positions,
        },
    ))
}

/// Cuts a stream into one view per labelled segment.
pub fn segment_by_labels(stream: &TaggedStream, labels: &[SegmentLabel]) -> Result<Vec<View>> {
    let pos_enc = PositionEncoder::shipped();
    segment_with(stream, labels, &pos_enc, 0)
}

fn segment_with(
    stream: &TaggedStream,
    labels: &[SegmentLabel],
    pos_enc: &PositionEncoder,
    source: usize,
) -> Result<Vec<View>> {
    let f = &stream.features;
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let rows = match stream.modality {
                Modality::Visual => {
                    if l.start >= l.end || l.end > f.rows() {
                        return Err(Error::Data(format!(
                            "segment {i} [{}, {}) outside a stream of {} frames",
                            l.start,
                            l.end,
                            f.rows()
                        )));
                    }
                    l.start..l.end
                }
                Modality::Text => {
                    if i >= f.rows() {
                        return Err(Error::Data(format!(
                            "segment {i} has no text row ({} rows)",
                            f.rows()
                        )));
                    }
                    i..i + 1
                }
            };
            let data = f.data()[rows.start * f.cols()..rows.end * f.cols()].to_vec();
            let frames = Tensor::new(rows.len(), f.cols(), data)?;
            let position = stream.positions.get(i).copied().unwrap_or(i);
            let pos_code = pos_enc.encode(position, labels.len(), stream.modality);
            View::new(
                stream.modality,
                frames,
                position,
                labels.len(),
                l.class,
                pos_code,
                source,
            )
        })
        .collect()
}

/// One modality's features for one labelled segment.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    modality: Modality,
    frames: Tensor<f64>,
    position: usize,
    class: EmotionClass,
    pos_code: [f64; POS_DIM],
    source: usize,
}

impl View {
    pub fn new(
        modality: Modality,
        frames: Tensor<f64>,
        position: usize,
        segment_count: usize,
        class: EmotionClass,
        pos_code: [f64; POS_DIM],
        source: usize,
    ) -> Result<Self> {
        if frames.rows() == 0 {
            return Err(Error::Data("view has no frames".into()));
        }
        if position >= segment_count {
            return Err(Error::Data(format!(
                "position {position} of {segment_count} segments"
            )));
        }
        Ok(Self {
            modality,
            frames,
            position,
            class,
            pos_code,
            source,
        })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn frames(&self) -> &Tensor<f64> {
        &self.frames
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn class(&self) -> EmotionClass {
        self.class
    }

    pub fn pos_code(&self) -> &[f64; POS_DIM] {
        &self.pos_code
    }

    /// Identifier of the video the view was cut from.
    pub fn source(&self) -> usize {
        self.source
    }
}

/// The visual and text views of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGroup {
    visual: View,
    text: View,
}

impl ViewGroup {
    pub fn new(visual: View, text: View) -> Result<Self> {
        if visual.modality != Modality::Visual || text.modality != Modality::Text {
            return Err(Error::Invariant(
                "view group needs one visual and one text view".into(),
            ));
        }
        if visual.position != text.position
            || visual.class != text.class
            || visual.source != text.source
        {
            return Err(Error::Invariant(format!(
                "views disagree: position {} vs {}, {} vs {}",
                visual.position, text.position, visual.class, text.class
            )));
        }
        Ok(Self { visual, text })
    }

    pub fn visual(&self) -> &View {
        &self.visual
    }

    pub fn text(&self) -> &View {
        &self.text
    }

    pub fn class(&self) -> EmotionClass {
        self.visual.class
    }

    pub fn position(&self) -> usize {
        self.visual.position
    }

    pub fn source(&self) -> usize {
        self.visual.source
    }
}

impl AsRef<ViewGroup> for ViewGroup {
    fn as_ref(&self) -> &ViewGroup {
        self
    }
}

/// All view groups of a video, in label order. `source` tags the views
/// with the video's identifier.
pub fn video_groups(
    v: &LongVideo,
    source: usize,
    pos_enc: &PositionEncoder,
) -> Result<Vec<ViewGroup>> {
    let (vis, txt) = segment_modalities(v)?;
    let vis = segment_with(&vis, v.labels(), pos_enc, source)?;
    let txt = segment_with(&txt, v.labels(), pos_enc, source)?;
    vis.into_iter()
        .zip(txt)
        .map(|(a, b)| ViewGroup::new(a, b))
        .collect()
}

/// Fixed two-layer perceptron: (relative position, modality flag) through
/// a tanh hidden layer to an 8-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEncoder {
    w1: [[f64; POS_HIDDEN]; 2],
    b1: [f64; POS_HIDDEN],
    w2: [[f64; POS_DIM]; POS_HIDDEN],
    b2: [f64; POS_DIM],
}

impl PositionEncoder {
    pub fn zeros() -> Self {
        Self {
            w1: [[0.0; POS_HIDDEN]; 2],
            b1: [0.0; POS_HIDDEN],
            w2: [[0.0; POS_DIM]; POS_HIDDEN],
            b2: [0.0; POS_DIM],
        }
    }

    /// Glorot-uniform weights from `seed`, zero biases.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut enc = Self::zeros();
        let a1 = (6.0 / (2 + POS_HIDDEN) as f64).sqrt();
        for row in &mut enc.w1 {
            for w in row.iter_mut() {
                *w = rng.random_range(-a1..a1);
            }
        }
        let a2 = (6.0 / (POS_HIDDEN + POS_DIM) as f64).sqrt();
        for row in &mut enc.w2 {
            for w in row.iter_mut() {
                *w = rng.random_range(-a2..a2);
            }
        }
        enc
    }

    /// The encoder used throughout the crate.
    pub fn shipped() -> Self {
        Self::seeded(POS_SEED)
    }

    pub fn encode(
        &self,
        position: usize,
        segment_count: usize,
        modality: Modality,
    ) -> [f64; POS_DIM] {
        let x = [
            position as f64 / segment_count.max(1) as f64,
            modality.flag(),
        ];
        let mut h = self.b1;
        for (i, hv) in h.iter_mut().enumerate() {
            *hv = (*hv + x[0] * self.w1[0][i] + x[1] * self.w1[1][i]).tanh();
        }
        let mut out = self.b2;
        for (j, o) in out.iter_mut().enumerate() {
            *o += h
                .iter()
                .zip(&self.w2)
                .map(|(hv, row)| hv * row[j])
                .sum::<f64>();
        }
        out
    }
}
