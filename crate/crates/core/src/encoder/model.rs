use std::rc::Rc;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::EncoderConfig;
use super::graph::{spatial_conv, TaskGraph};
use crate::autodiff::{ParamSet, Real, Tensor, Var, VarSet};
use crate::error::{Error, Result};
use crate::fuzzy::{
    default_attribute_specs, fcis_defuzzify, fkis_class_memberships, fuzzy_semantic_vector,
    AttributeSpec, RuleBank,
};
use crate::labels::NUM_CLASSES;
use crate::tasks::{ViewGroup, POS_DIM, TEXT_DIM, VISUAL_DIM};

pub const CODING_DIM: usize = 12;

/// Value and gate kernels of one gated temporal layer.
#[derive(Clone, Copy)]
pub struct GluLayer<'g, T: Real> {
    pub value_w: Var<'g, T>,
    pub value_b: Var<'g, T>,
    pub gate_w: Var<'g, T>,
    pub gate_b: Var<'g, T>,
}

/// Stacked gated linear units over row segments of `x` (valid padding).
/// Returns the output and the shrunken segment lengths.
pub fn temporal_conv<'g, T: Real>(
    x: Var<'g, T>,
    lens: &[usize],
    layers: &[GluLayer<'g, T>],
    k: usize,
) -> Result<(Var<'g, T>, Vec<usize>)> {
    let need = layers.len() * (k - 1) + 1;
    if let Some(&short) = lens.iter().find(|&&l| l < need) {
        return Err(Error::Data(format!(
            "view of {short} frames is too short for the temporal stack (needs at least {need})"
        )));
    }
    let mut h = x;
    let mut lens = lens.to_vec();
    for layer in layers {
        let windows = h.unfold(Rc::from(lens.as_slice()), k)?;
        let value = windows.matmul(layer.value_w)?.add_row(layer.value_b)?;
        let gate = windows
            .matmul(layer.gate_w)?
            .add_row(layer.gate_b)?
            .sigmoid();
        h = value.mul(gate)?;
        for l in &mut lens {
            *l -= k - 1;
        }
    }
    Ok((h, lens))
}

/// Constant inputs for forwarding a list of view groups.
#[derive(Debug, Clone)]
pub struct ViewBatch<T: Real> {
    visual_x: Tensor<T>,
    visual_pos: Tensor<T>,
    text_x: Tensor<T>,
    text_pos: Tensor<T>,
    text_repeat: Vec<usize>,
    conv_lens: Vec<usize>,
    pool: Tensor<T>,
    a_hat: Tensor<T>,
    labels: Vec<usize>,
    onehot: Tensor<T>,
    coding_targets: Tensor<T>,
}

impl<T: Real> ViewBatch<T> {
    pub fn num_views(&self) -> usize {
        self.labels.len()
    }

    /// Class index per node (group `i` owns nodes `2i`, `2i + 1`).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn onehot(&self) -> &Tensor<T> {
        &self.onehot
    }
}

/// Log-probabilities and intermediate outputs of one forward pass.
pub struct Forward<'g, T: Real> {
    pub log_probs: Var<'g, T>,
    /// FCIS head output, one coding row per view.
    pub coding: Var<'g, T>,
    /// Fuzzy semantic features fed to the classifier (constant).
    pub semantic: Tensor<T>,
}

/// Temporal, spatial and fuzzy-semantic encoder with an 18-way classifier.
#[derive(Debug, Clone)]
pub struct Encoder {
    cfg: EncoderConfig,
    bank: RuleBank,
    specs: Vec<AttributeSpec>,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig, bank: RuleBank) -> Result<Self> {
        cfg.validate()?;
        if bank.n_components() != CODING_DIM {
            return Err(Error::Config(format!(
                "rule bank has {} components, the encoder needs {CODING_DIM}",
                bank.n_components()
            )));
        }
        bank.require_complete()?;
        Ok(Self {
            cfg,
            bank,
            specs: default_attribute_specs(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &RuleBank {
        &self.bank
    }

    /// Copy with different fuzzy settings; parameters stay compatible.
    pub fn with_fuzzy(&self, fuzzy: crate::fuzzy::FuzzyConfig) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.fuzzy = fuzzy;
        Self::new(cfg, self.bank.clone())
    }

    fn layer_inputs(&self, layer: usize) -> usize {
        if layer == 0 {
            self.cfg.d + POS_DIM
        } else {
            self.cfg.d
        }
    }

    /// Parameter names and shapes in checkpoint order.
    pub fn param_shapes(&self) -> Vec<(String, [usize; 2])> {
        let d = self.cfg.d;
        let k = self.cfg.effective_kernel();
        let mut out = vec![
            ("proj_visual.w".to_string(), [VISUAL_DIM, d]),
            ("proj_visual.b".to_string(), [1, d]),
            ("proj_text.w".to_string(), [TEXT_DIM, d]),
            ("proj_text.b".to_string(), [1, d]),
        ];
        for l in 0..self.cfg.layers {
            let fan_in = k * self.layer_inputs(l);
            for part in ["value", "gate"] {
                out.push((format!("temporal{l}.{part}.w"), [fan_in, d]));
                out.push((format!("temporal{l}.{part}.b"), [1, d]));
            }
        }
        out.push(("spatial.w".to_string(), [d, d]));
        out.push(("fcis.w".to_string(), [d, CODING_DIM]));
        out.push(("fcis.b".to_string(), [1, CODING_DIM]));
        out.push(("classifier.w".to_string(), [d + CODING_DIM, NUM_CLASSES]));
        out.push(("classifier.b".to_string(), [1, NUM_CLASSES]));
        out
    }

    /// Glorot-uniform weights and zero biases from `seed`.
    pub fn init_params<T: Real>(&self, seed: u64) -> ParamSet<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for (name, [r, c]) in self.param_shapes() {
            let t = if name.ends_with(".b") {
                Tensor::zeros(r, c)
            } else {
                let a = (6.0 / (r + c) as f64).sqrt();
                let data = (0..r * c).map(|_| T::of(rng.random_range(-a..a))).collect();
                Tensor::new(r, c, data).expect("sized buffer")
            };
            params.insert(name, t).expect("unique names");
        }
        params
    }

    /// Checks that `params` has exactly this encoder's layout.
    pub fn check_params<T: Real>(&self, params: &ParamSet<T>) -> Result<()> {
        let expected = self.param_shapes();
        let ok = params.len() == expected.len()
            && params
                .iter()
                .zip(&expected)
                .all(|((n, t), (en, es))| n == en && t.shape() == *es);
        if ok {
            Ok(())
        } else {
            Err(Error::Data(
                "parameters do not match the encoder layout".into(),
            ))
        }
    }

    /// Gathers the constant inputs of `groups`.
    pub fn batch<T: Real>(&self, groups: &[Arc<ViewGroup>]) -> Result<ViewBatch<T>> {
        if groups.is_empty() {
            return Err(Error::Data("no view groups to encode".into()));
        }
        let n = groups.len();
        let min_frames = self.cfg.min_frames();
        let consumed = self.cfg.frames_consumed();

        let mut visual = Vec::new();
        let mut visual_pos = Vec::new();
        let mut text = Vec::with_capacity(n * TEXT_DIM);
        let mut text_pos = Vec::with_capacity(n * POS_DIM);
        let mut conv_lens = Vec::with_capacity(2 * n);
        for g in groups {
            let f = g.visual().frames();
            if f.cols() != VISUAL_DIM {
                return Err(Error::Data(format!(
                    "visual view has {} features, expected {VISUAL_DIM}",
                    f.cols()
                )));
            }
            if f.rows() < min_frames {
                return Err(Error::Data(format!(
                    "view of {} frames is too short for the temporal stack (needs at least {min_frames})",
                    f.rows()
                )));
            }
            visual.extend(f.data().iter().map(|&v| T::of(v)));
            for _ in 0..f.rows() {
                visual_pos.extend(g.visual().pos_code().iter().map(|&v| T::of(v)));
            }
            conv_lens.push(f.rows());

            let t = g.text().frames();
            if t.cols() != TEXT_DIM || t.rows() != 1 {
                return Err(Error::Data(format!(
                    "text view is {:?}, expected [1, {TEXT_DIM}]",
                    t.shape()
                )));
            }
            text.extend(t.data().iter().map(|&v| T::of(v)));
            text_pos.extend(g.text().pos_code().iter().map(|&v| T::of(v)));
        }
        let total_frames: usize = conv_lens.iter().sum();
        // a constant sequence convolves to a constant, so the shortest valid
        // length gives the same pooled embedding as any other
        let text_repeat: Vec<usize> = (0..n)
            .flat_map(|i| std::iter::repeat_n(i, min_frames))
            .collect();
        conv_lens.extend(std::iter::repeat_n(min_frames, n));

        let out_total: usize = conv_lens.iter().map(|l| l - consumed).sum();
        let mut pool = Tensor::zeros(2 * n, out_total);
        let mut offset = 0;
        for (seg, &len) in conv_lens.iter().enumerate() {
            let node = if seg < n { 2 * seg } else { 2 * (seg - n) + 1 };
            let out_len = len - consumed;
            let w = T::one() / T::of(out_len as f64);
            for c in offset..offset + out_len {
                pool.set(node, c, w);
            }
            offset += out_len;
        }

        let a_hat = if self.cfg.use_spatial {
            TaskGraph::from_groups(groups).normalized().cast()
        } else {
            Tensor::identity(2 * n)
        };

        let mut labels = Vec::with_capacity(2 * n);
        let mut onehot = Tensor::zeros(2 * n, NUM_CLASSES);
        let mut targets = Vec::with_capacity(2 * n * CODING_DIM);
        for g in groups {
            let class = g.class();
            let proto = self
                .bank
                .prototype(class)
                .ok_or_else(|| Error::Lookup(format!("no rule for {class}")))?;
            for _ in 0..2 {
                onehot.set(labels.len(), class.index(), T::one());
                labels.push(class.index());
                targets.extend(proto.prototype.iter().map(|&v| T::of(v)));
            }
        }

        Ok(ViewBatch {
            visual_x: Tensor::new(total_frames, VISUAL_DIM, visual)?,
            visual_pos: Tensor::new(total_frames, POS_DIM, visual_pos)?,
            text_x: Tensor::new(n, TEXT_DIM, text)?,
            text_pos: Tensor::new(n, POS_DIM, text_pos)?,
            text_repeat,
            conv_lens,
            pool,
            a_hat,
            labels,
            onehot,
            coding_targets: Tensor::new(2 * n, CODING_DIM, targets)?,
        })
    }

    /// Runs the encoder on a batch.
    ///
    /// `semantic` overrides the fuzzy features; when absent they are
    /// inferred from the detached FCIS head output.
    pub fn forward<'g, T: Real>(
        &self,
        vars: &VarSet<'g, T>,
        batch: &ViewBatch<T>,
        semantic: Option<&Tensor<T>>,
    ) -> Result<Forward<'g, T>> {
        let p = |name: &str| vars.get(name);
        let g = p("proj_visual.w")?.graph();
        let k = self.cfg.effective_kernel();

        let xv = g
            .constant(batch.visual_x.clone())
            .matmul(p("proj_visual.w")?)?
            .add_row(p("proj_visual.b")?)?;
        let xv = Var::concat_cols(&[xv, g.constant(batch.visual_pos.clone())])?;
        let xt = g
            .constant(batch.text_x.clone())
            .matmul(p("proj_text.w")?)?
            .add_row(p("proj_text.b")?)?;
        let xt = Var::concat_cols(&[xt, g.constant(batch.text_pos.clone())])?
            .gather_rows(Rc::from(batch.text_repeat.as_slice()))?;
        let x = Var::concat_rows(&[xv, xt])?;

        let layers = (0..self.cfg.layers)
            .map(|l| {
                Ok(GluLayer {
                    value_w: p(&format!("temporal{l}.value.w"))?,
                    value_b: p(&format!("temporal{l}.value.b"))?,
                    gate_w: p(&format!("temporal{l}.gate.w"))?,
                    gate_b: p(&format!("temporal{l}.gate.b"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (h, _) = temporal_conv(x, &batch.conv_lens, &layers, k)?;
        let z = g.constant(batch.pool.clone()).matmul(h)?;

        let z = if self.cfg.use_spatial {
            spatial_conv(z, g.constant(batch.a_hat.clone()), p("spatial.w")?)?
        } else {
            z
        };

        let coding = z.matmul(p("fcis.w")?)?.add_row(p("fcis.b")?)?;
        let semantic = match semantic {
            Some(s) => {
                if s.shape() != [batch.num_views(), CODING_DIM] {
                    return Err(Error::shape(
                        "forward",
                        format!("semantic features {:?}", s.shape()),
                    ));
                }
                s.clone()
            }
            None if self.cfg.use_fuzzy => self.semantic_features(&coding.value())?,
            None => Tensor::zeros(batch.num_views(), CODING_DIM),
        };
        let features = Var::concat_cols(&[z, g.constant(semantic.clone())])?;
        let log_probs = features
            .matmul(p("classifier.w")?)?
            .add_row(p("classifier.b")?)?
            .log_softmax();
        Ok(Forward {
            log_probs,
            coding,
            semantic,
        })
    }

    /// Fuzzy semantic vector per coding row: FCIS de-fuzzification, FKIS
    /// class memberships, then the membership-weighted prototype centroid.
    pub fn semantic_features<T: Real>(&self, coding: &Tensor<T>) -> Result<Tensor<T>> {
        let mut out = Vec::with_capacity(coding.len());
        for r in 0..coding.rows() {
            let u: Vec<f64> = coding.row(r).iter().map(|v| v.to_f64().unwrap()).collect();
            let o = fcis_defuzzify(&u, &self.specs, &self.cfg.fuzzy)?;
            let cm = fkis_class_memberships(&o.values, &self.bank, &self.cfg.fuzzy)?;
            out.extend(
                fuzzy_semantic_vector(&cm, &self.bank)?
                    .into_iter()
                    .map(T::of),
            );
        }
        Tensor::new(coding.rows(), CODING_DIM, out)
    }

    /// Mean squared distance of the FCIS head output to the label
    /// prototypes, scaled by the configured weight; zero when the fuzzy
    /// branch is off.
    pub fn coding_loss<'g, T: Real>(
        &self,
        fwd: &Forward<'g, T>,
        batch: &ViewBatch<T>,
    ) -> Result<Option<Var<'g, T>>> {
        if !self.cfg.use_fuzzy || self.cfg.coding_weight == 0.0 {
            return Ok(None);
        }
        let g = fwd.coding.graph();
        let diff = fwd.coding.sub(g.constant(batch.coding_targets.clone()))?;
        let per_view = T::of(self.cfg.coding_weight / batch.num_views() as f64);
        Ok(Some(diff.mul(diff)?.sum().scale(per_view)))
    }
}
