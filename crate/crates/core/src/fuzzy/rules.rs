//! Rule bank, eccentricity matching and the knowledge inference stage.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::labels::{Emotion, EmotionClass, Intensity, NUM_CLASSES};

use super::curves::IntensityCurves;
use super::membership::{tri, ComponentCoding};
use super::FuzzyConfig;

const DEFAULT_RULES: &str = include_str!("../../data/rules.txt");

pub const DEFAULT_COMPONENTS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRule {
    pub class: EmotionClass,
    /// Crisp prototype with values in {-1, 0, 1}.
    pub prototype: Vec<f64>,
    /// Rule weight in (0, 1].
    pub weight: f64,
}

impl FuzzyRule {
    pub fn new(class: EmotionClass, prototype: Vec<f64>) -> Result<Self> {
        Self::weighted(class, prototype, 1.0)
    }

    pub fn weighted(class: EmotionClass, prototype: Vec<f64>, weight: f64) -> Result<Self> {
        ComponentCoding::crisp(prototype.clone())?;
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::Param(format!(
                "rule weight must lie in (0, 1], got {weight}"
            )));
        }
        Ok(Self {
            class,
            prototype,
            weight,
        })
    }
}

/// Rules grouped by class. Classes may hold any number of rules, including
/// none; [`RuleBank::require_complete`] checks full 18-class coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBank {
    n_components: usize,
    rules: Vec<FuzzyRule>,
    class_index: Vec<Vec<usize>>,
}

impl RuleBank {
    pub fn new(n_components: usize, rules: Vec<FuzzyRule>) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::Param(
                "rule bank needs at least one component".into(),
            ));
        }
        let mut class_index = vec![Vec::new(); NUM_CLASSES];
        for (i, r) in rules.iter().enumerate() {
            if r.prototype.len() != n_components {
                return Err(Error::Param(format!(
                    "rule {} ({}) has {} components, bank expects {n_components}",
                    i,
                    r.class,
                    r.prototype.len()
                )));
            }
            class_index[r.class.index()].push(i);
        }
        Ok(Self {
            n_components,
            rules,
            class_index,
        })
    }

    /// The shipped 18-rule bank.
    pub fn default_bank() -> Self {
        Self::parse(DEFAULT_RULES).expect("shipped rule bank parses")
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Indices of the rules for `class`.
    pub fn class_rules(&self, class: EmotionClass) -> &[usize] {
        &self.class_index[class.index()]
    }

    /// First rule of `class`, if any.
    pub fn prototype(&self, class: EmotionClass) -> Option<&FuzzyRule> {
        self.class_index[class.index()]
            .first()
            .map(|&i| &self.rules[i])
    }

    /// Rules per emotion; counts may differ between emotions.
    pub fn rules_per_emotion(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for r in &self.rules {
            counts[r.class.emotion.index()] += 1;
        }
        counts
    }

    /// Errors unless every class has a rule and every rule's own prototype
    /// attains the maximum membership at its class (the fixed-point check).
    pub fn require_complete(&self) -> Result<()> {
        for class in EmotionClass::all() {
            if self.class_index[class.index()].is_empty() {
                return Err(Error::Config(format!("rule bank has no rule for {class}")));
            }
        }
        let cfg = FuzzyConfig::default();
        for r in &self.rules {
            let cm = fkis_class_memberships(&r.prototype, self, &cfg)?;
            let own = cm.mu[r.class.index()];
            if let Some(c) = (0..NUM_CLASSES).find(|&c| c != r.class.index() && cm.mu[c] >= own) {
                return Err(Error::Config(format!(
                    "prototype of {} does not win its own class (ties or loses to {})",
                    r.class,
                    EmotionClass::from_index(c).unwrap()
                )));
            }
        }
        Ok(())
    }

    /// Parses a bank with the default 12 components.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_components(text, DEFAULT_COMPONENTS)
    }

    /// `<Emotion> <Intensity> v1 .. vN [w=<weight>]` per line, `#` comments.
    pub fn parse_with_components(text: &str, n_components: usize) -> Result<Self> {
        let mut rules = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let mut tokens: Vec<&str> = line.split_whitespace().collect();
            let mut weight = 1.0;
            if let Some(last) = tokens.last() {
                if let Some(w) = last.strip_prefix("w=") {
                    weight = w
                        .parse::<f64>()
                        .map_err(|_| err(format!("bad weight `{w}`")))?;
                    tokens.pop();
                }
            }
            if tokens.len() != 2 + n_components {
                return Err(err(format!(
                    "expected emotion, intensity and {n_components} values, found {} fields",
                    tokens.len()
                )));
            }
            let emotion: Emotion = tokens[0].parse().map_err(|e: Error| err(e.to_string()))?;
            let intensity: Intensity = tokens[1].parse().map_err(|e: Error| err(e.to_string()))?;
            let prototype = tokens[2..]
                .iter()
                .map(|t| match *t {
                    "-1" => Ok(-1.0),
                    "0" => Ok(0.0),
                    "1" => Ok(1.0),
                    other => Err(err(format!("value `{other}` not in {{-1,0,1}}"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            let rule =
                FuzzyRule::weighted(EmotionClass::new(emotion, intensity), prototype, weight)
                    .map_err(|e| err(e.to_string()))?;
            rules.push(rule);
        }
        Self::new(n_components, rules)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            write!(out, "{} {}", r.class.emotion, r.class.intensity).unwrap();
            for v in &r.prototype {
                write!(out, " {}", *v as i8).unwrap();
            }
            if r.weight != 1.0 {
                write!(out, " w={}", r.weight).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Normalized L1 distance `sum |o_j - r_j| / (2 n)`; lies in [0, 1] for
/// codings inside [-1, 1].
pub fn eccentricity(o: &[f64], r: &[f64]) -> Result<f64> {
    if o.len() != r.len() || o.is_empty() {
        return Err(Error::Param(format!(
            "eccentricity needs equal non-empty codings, got {} and {}",
            o.len(),
            r.len()
        )));
    }
    let l1: f64 = o.iter().zip(r).map(|(a, b)| (a - b).abs()).sum();
    Ok(l1 / (2 * o.len()) as f64)
}

/// Output of the knowledge stage for one coding.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMemberships {
    /// Membership per class, in class-index order.
    pub mu: [f64; NUM_CLASSES],
    /// Eccentricity to the closest rule of each class (`INFINITY` if the
    /// class has no rule).
    pub eccentricity: [f64; NUM_CLASSES],
    /// Index of the closest rule of each class.
    pub nearest: [Option<usize>; NUM_CLASSES],
    /// True when no class fired and `mu` is the uniform fallback.
    pub fallback: bool,
}

impl ClassMemberships {
    /// Memberships supplied directly; each class is represented by its first
    /// rule in `bank`.
    pub fn from_weights(mu: [f64; NUM_CLASSES], bank: &RuleBank) -> Self {
        let mut nearest = [None; NUM_CLASSES];
        for class in EmotionClass::all() {
            nearest[class.index()] = bank.class_rules(class).first().copied();
        }
        Self {
            mu,
            eccentricity: [f64::NAN; NUM_CLASSES],
            nearest,
            fallback: false,
        }
    }

    /// Highest-membership class; ties go to the lower class index.
    pub fn argmax(&self) -> (EmotionClass, f64) {
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if self.mu[c] > self.mu[best] {
                best = c;
            }
        }
        (EmotionClass::from_index(best).unwrap(), self.mu[best])
    }
}

/// Matches a coding against every class of the bank.
///
/// Per class the closest rule (first on ties) gives eccentricity `e_c` and
/// membership `tri(e_c, 0, 0.25 + lambda2 / 2) * weight`. Classes without
/// rules get zero. When nothing fires the result is the uniform vector 1/18.
pub fn fkis_class_memberships(
    o: &[f64],
    bank: &RuleBank,
    cfg: &FuzzyConfig,
) -> Result<ClassMemberships> {
    if o.len() != bank.n_components() {
        return Err(Error::Param(format!(
            "coding has {} components, rule bank expects {}",
            o.len(),
            bank.n_components()
        )));
    }
    let hw = cfg.fkis_half_width();
    let mut mu = [0.0; NUM_CLASSES];
    let mut ecc = [f64::INFINITY; NUM_CLASSES];
    let mut nearest = [None; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        for &ri in &bank.class_index[c] {
            let e = eccentricity(o, &bank.rules[ri].prototype)?;
            if e < ecc[c] {
                ecc[c] = e;
                nearest[c] = Some(ri);
            }
        }
        if let Some(ri) = nearest[c] {
            mu[c] = tri(ecc[c], 0.0, hw) * bank.rules[ri].weight;
        }
    }
    let fallback = mu.iter().all(|&m| m == 0.0);
    if fallback {
        mu = [1.0 / NUM_CLASSES as f64; NUM_CLASSES];
    }
    Ok(ClassMemberships {
        mu,
        eccentricity: ecc,
        nearest,
        fallback,
    })
}

/// Membership-weighted centroid of each class's matched prototype.
pub fn fuzzy_semantic_vector(cm: &ClassMemberships, bank: &RuleBank) -> Result<Vec<f64>> {
    let mut s = vec![0.0; bank.n_components()];
    let mut total = 0.0;
    for c in 0..NUM_CLASSES {
        let (m, Some(ri)) = (cm.mu[c], cm.nearest[c]) else {
            continue;
        };
        if m < 0.0 {
            return Err(Error::Invariant(format!("negative class membership {m}")));
        }
        if m == 0.0 {
            continue;
        }
        total += m;
        for (acc, p) in s.iter_mut().zip(&bank.rules[ri].prototype) {
            *acc += m * p;
        }
    }
    if total == 0.0 {
        return Err(Error::Invariant(
            "all class memberships are zero; the uniform fallback should have fired".into(),
        ));
    }
    for v in &mut s {
        *v /= total;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub class: EmotionClass,
    /// Class membership of the winning class.
    pub confidence: f64,
    /// Eccentricity to the winning class's closest rule.
    pub eccentricity: f64,
    /// Degree of the winning class's intensity curve at that eccentricity.
    pub curve_degree: f64,
}

/// Assigns an (emotion, intensity) label to a coding.
pub fn annotate(
    o: &[f64],
    bank: &RuleBank,
    curves: &IntensityCurves,
    cfg: &FuzzyConfig,
) -> Result<Annotation> {
    let cm = fkis_class_memberships(o, bank, cfg)?;
    let (class, confidence) = if cm.fallback {
        // uniform memberships carry no ranking; fall back to the nearest rule
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if cm.eccentricity[c] < cm.eccentricity[best] {
                best = c;
            }
        }
        (EmotionClass::from_index(best).unwrap(), cm.mu[best])
    } else {
        cm.argmax()
    };
    let e = cm.eccentricity[class.index()];
    let curve_degree = if e.is_finite() {
        curves.eval(class, e.clamp(0.0, 1.0))?
    } else {
        0.0
    };
    Ok(Annotation {
        class,
        confidence,
        eccentricity: e,
        curve_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{Emotion::*, Intensity::*};

    fn class(e: Emotion, i: Intensity) -> EmotionClass {
        EmotionClass::new(e, i)
    }

    fn proto(bank: &RuleBank, e: Emotion, i: Intensity) -> Vec<f64> {
        bank.prototype(class(e, i)).unwrap().prototype.clone()
    }

    #[test]
    fn default_bank_is_complete() {
        let bank = RuleBank::default_bank();
        assert_eq!(bank.len(), 18);
        bank.require_complete().unwrap();
        assert_eq!(
            proto(&bank, Happy, High),
            vec![1., 1., 0., 1., 1., 0., 1., 0., 0., 1., 1., 1.]
        );
    }

    #[test]
    fn eccentricity_examples() {
        let bank = RuleBank::default_bank();
        let a = proto(&bank, Angry, High);
        assert_eq!(eccentricity(&a, &a).unwrap(), 0.0);
        assert_eq!(eccentricity(&[1.0; 12], &[-1.0; 12]).unwrap(), 1.0);
        // hand sum of per-component differences: 9 ones + 3 twos
        assert_eq!(
            eccentricity(&a, &proto(&bank, Happy, High)).unwrap(),
            15.0 / 24.0
        );
        assert_eq!(
            eccentricity(&a, &proto(&bank, Angry, Low)).unwrap(),
            9.0 / 24.0
        );
        assert_eq!(
            eccentricity(&a, &proto(&bank, Angry, Medium)).unwrap(),
            13.0 / 24.0
        );
        assert!(eccentricity(&a, &a[..11]).is_err());
    }

    #[test]
    fn happy_high_prototype_wins_with_full_membership() {
        let bank = RuleBank::default_bank();
        let o = [1., 1., 0., 1., 1., 0., 1., 0., 0., 1., 1., 1.];
        let cm = fkis_class_memberships(&o, &bank, &FuzzyConfig::default()).unwrap();
        assert_eq!(cm.argmax(), (class(Happy, High), 1.0));
        assert!(!cm.fallback);
    }

    #[test]
    fn single_rule_bank_has_one_live_entry() {
        let rule = FuzzyRule::new(class(Fear, Low), vec![0.0; 12]).unwrap();
        let bank = RuleBank::new(12, vec![rule]).unwrap();
        assert!(bank.require_complete().is_err());
        let cfg = FuzzyConfig::default();

        let cm = fkis_class_memberships(&[0.1; 12], &bank, &cfg).unwrap();
        let live: Vec<_> = cm.mu.iter().filter(|&&m| m > 0.0).collect();
        assert_eq!(live.len(), 1);
        assert_eq!(cm.argmax().0, class(Fear, Low));

        let far = fkis_class_memberships(&[1.0; 12], &bank, &cfg).unwrap();
        assert!(far.fallback);
        assert!(far.mu.iter().all(|&m| m == 1.0 / 18.0));
    }

    #[test]
    fn semantic_vector_examples() {
        let bank = RuleBank::default_bank();
        let hh = class(Happy, High);
        let mut mu = [0.0; 18];
        mu[hh.index()] = 1.0;
        let s = fuzzy_semantic_vector(&ClassMemberships::from_weights(mu, &bank), &bank).unwrap();
        assert_eq!(s, proto(&bank, Happy, High));

        let (p, q) = (class(Sad, High), class(Fear, Low));
        let mut mu = [0.0; 18];
        mu[p.index()] = 0.5;
        mu[q.index()] = 0.5;
        let s = fuzzy_semantic_vector(&ClassMemberships::from_weights(mu, &bank), &bank).unwrap();
        let pp = proto(&bank, Sad, High);
        let qq = proto(&bank, Fear, Low);
        for j in 0..12 {
            assert_eq!(s[j], (pp[j] + qq[j]) / 2.0);
        }

        let zero = ClassMemberships::from_weights([0.0; 18], &bank);
        assert!(matches!(
            fuzzy_semantic_vector(&zero, &bank),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn semantic_vector_of_angry_high_matches_weighted_centroid() {
        let bank = RuleBank::default_bank();
        let cfg = FuzzyConfig::default();
        let o = proto(&bank, Angry, High);
        let cm = fkis_class_memberships(&o, &bank, &cfg).unwrap();
        assert_eq!(cm.mu[class(Angry, High).index()], 1.0);
        for c in 0..18 {
            if c != class(Angry, High).index() {
                assert!(cm.mu[c] < 1.0);
            }
        }
        // oracle: integer L1 distances to each of the 18 single-rule classes
        let hw = 0.45;
        let mut num = vec![0.0; 12];
        let mut den = 0.0;
        for r in bank.rules() {
            let l1: f64 = o.iter().zip(&r.prototype).map(|(a, b)| (a - b).abs()).sum();
            let w = (1.0 - (l1 / 24.0) / hw).max(0.0);
            den += w;
            for j in 0..12 {
                num[j] += w * r.prototype[j];
            }
        }
        let s = fuzzy_semantic_vector(&cm, &bank).unwrap();
        for j in 0..12 {
            assert_close!(s[j], num[j] / den, 1e-12);
        }
    }

    #[test]
    fn annotate_table_rows_and_zero_coding() {
        let bank = RuleBank::default_bank();
        let curves = IntensityCurves::default_curves();
        let cfg = FuzzyConfig::default();
        let dm = [1., 1., 0., 0., 0., 0., 0., 0., 0., -1., 0., 0.];
        let a = annotate(&dm, &bank, &curves, &cfg).unwrap();
        assert_eq!((a.class, a.confidence), (class(Disgust, Medium), 1.0));

        // brute force over all prototypes for the all-zero coding
        let zero = [0.0; 12];
        let dists: Vec<(usize, f64)> = bank
            .rules()
            .iter()
            .map(|r| {
                (
                    r.class.index(),
                    r.prototype.iter().map(|v| v.abs()).sum::<f64>(),
                )
            })
            .collect();
        let min = dists.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let winner = dists
            .iter()
            .filter(|d| d.1 == min)
            .map(|d| d.0)
            .min()
            .unwrap();
        let a = annotate(&zero, &bank, &curves, &cfg).unwrap();
        assert_eq!(a.class.index(), winner);
        assert_close!(a.confidence, 1.0 - (min / 24.0) / 0.45, 1e-12);
    }

    #[test]
    fn nothing_fires_picks_the_nearest_rule() {
        let bank = RuleBank::default_bank();
        let curves = IntensityCurves::default_curves();
        let cfg = FuzzyConfig::default();
        // first +-1 coding that no rule reaches
        let (o, cm) = (0..1u32 << 12)
            .map(|bits| {
                (0..12)
                    .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect::<Vec<f64>>()
            })
            .map(|o| {
                let cm = fkis_class_memberships(&o, &bank, &cfg).unwrap();
                (o, cm)
            })
            .find(|(_, cm)| cm.fallback)
            .unwrap();
        let best = (0..NUM_CLASSES)
            .min_by(|&a, &b| cm.eccentricity[a].partial_cmp(&cm.eccentricity[b]).unwrap())
            .unwrap();
        let a = annotate(&o, &bank, &curves, &cfg).unwrap();
        assert_eq!(a.class.index(), best);
        assert_close!(a.confidence, 1.0 / 18.0, 1e-15);
    }

    #[test]
    fn parse_examples_and_errors() {
        let bank = RuleBank::parse("Angry High 0 0 1 0 0 1 0 -1 -1 -1 -1 -1\n").unwrap();
        assert_eq!(bank.rules()[0].class, class(Angry, High));
        assert_eq!(bank.rules()[0].prototype[7], -1.0);
        assert_eq!(bank.rules()[0].weight, 1.0);

        let text = "# header\n\nSad Low 0 0 0 0 0 0 0 0 0 0 0 0 w=0.5  # trailing\n";
        let bank = RuleBank::parse(text).unwrap();
        assert_eq!(bank.rules()[0].weight, 0.5);

        let bad = "Angry High 0 0 1 0 0 1 0 -1 -1 -1 -1 -1\nHappy Low 0 0 0 0 0 0 0 0 0 0 0\n";
        match RuleBank::parse(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        for bad in [
            "Angry High 0 0 2 0 0 1 0 -1 -1 -1 -1 -1",
            "Bored High 0 0 1 0 0 1 0 -1 -1 -1 -1 -1",
            "Angry Extreme 0 0 1 0 0 1 0 -1 -1 -1 -1 -1",
            "Angry High 0 0 1 0 0 1 0 -1 -1 -1 -1 -1 w=1.5",
        ] {
            assert!(
                matches!(RuleBank::parse(bad), Err(Error::Parse { line: 1, .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn serialize_round_trip() {
        let bank = RuleBank::default_bank();
        assert_eq!(RuleBank::parse(&bank.serialize()).unwrap(), bank);
        let weighted = RuleBank::parse("Fear High 1 1 1 1 1 0 0 1 -1 -1 -1 -1 w=0.3\n").unwrap();
        assert_eq!(RuleBank::parse(&weighted.serialize()).unwrap(), weighted);
    }

    #[test]
    fn emotions_may_have_different_rule_counts() {
        let mut text = RuleBank::default_bank().serialize();
        text.push_str("Angry High 0 0 1 0 0 1 0 -1 -1 -1 -1 0\n");
        let bank = RuleBank::parse(&text).unwrap();
        let counts = bank.rules_per_emotion();
        assert_eq!(counts[Angry.index()], 4);
        assert_eq!(counts[Disgust.index()], 3);
        bank.require_complete().unwrap();
    }
}
