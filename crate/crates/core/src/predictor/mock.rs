//! A deterministic stand-in for a finetuned language model.
//!
//! Classification is multinomial naive Bayes with add-one smoothing over the
//! unigrams of claim + evidence. Each member only "sees" a seeded subset of
//! the vocabulary (`view_fraction`), which is what makes members of a mock
//! committee disagree; larger members see more.
//!
//! Embeddings:
//! * representation: L2-normalized feature-hashed bag of words, `64 * size_units` wide;
//! * gradient: for each label `c` in `Label::ALL` order, `(p_c - [c == argmax p]) * representation`;
//! * surprisal: negative log unigram probability at a seeded 15% of token
//!   positions, zero elsewhere, `SURPRISAL_DIM` wide.

use std::collections::BTreeMap;

use crate::data::{Instance, Label, LabelledExample};
use crate::error::Result;
use crate::predictor::{
    EmbeddingKind, LabelDistribution, PredictionBundle, Predictor, TrainingSpec,
};
use crate::text::{stable_hash, tokenize, unit_interval};

/// Token positions covered by surprisal vectors.
pub const SURPRISAL_DIM: usize = 256;
/// Share of token positions whose surprisal is recorded.
pub const SURPRISAL_SAMPLE_RATE: f64 = 0.15;
/// Hashed dimensions per size unit in the representation vector.
pub const DIMS_PER_SIZE_UNIT: usize = 64;
/// Size of the background vocabulary the unigram language model smooths
/// against, so an untrained member still assigns finite surprisal.
const BACKGROUND_VOCAB: f64 = 10_000.0;

const VIEW_SALT: u64 = 0x5649_4557;
const BUCKET_SALT: u64 = 0x4255_434b;
const SAMPLE_SALT: u64 = 0x5341_4d50;

#[derive(Debug, Clone, PartialEq)]
pub struct MockConfig {
    pub seed: u64,
    pub size_units: u32,
    /// Probability that a vocabulary item is visible to the classifier.
    pub view_fraction: f64,
}

impl MockConfig {
    /// Default profile: `view_fraction = size / (size + 6)`, so a 12-unit
    /// member sees two thirds of the vocabulary and a 24-unit member 80%.
    pub fn for_member(name: &str, size_units: u32, seed: u64) -> Self {
        let size = f64::from(size_units);
        MockConfig {
            seed: stable_hash(seed, name.as_bytes()),
            size_units,
            view_fraction: size / (size + 6.0),
        }
    }

    /// Sees every token; convenient for hand-checkable fixtures.
    pub fn full_view(seed: u64, size_units: u32) -> Self {
        MockConfig {
            seed,
            size_units,
            view_fraction: 1.0,
        }
    }

    pub fn representation_dim(&self) -> usize {
        DIMS_PER_SIZE_UNIT * self.size_units as usize
    }
}

#[derive(Debug, Clone)]
pub struct MockPredictor {
    config: MockConfig,
    /// Per-token class counts over every token, weighted by multiplicity.
    counts: BTreeMap<String, [u64; Label::COUNT]>,
    class_docs: [u64; Label::COUNT],
    /// Per-class token totals restricted to the member's view.
    class_view_tokens: [u64; Label::COUNT],
    view_vocab: u64,
    total_tokens: u64,
}

impl MockPredictor {
    pub fn new(config: MockConfig) -> Self {
        MockPredictor {
            config,
            counts: BTreeMap::new(),
            class_docs: [0; Label::COUNT],
            class_view_tokens: [0; Label::COUNT],
            view_vocab: 0,
            total_tokens: 0,
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.class_docs.iter().any(|&d| d > 0)
    }

    fn in_view(&self, token: &str) -> bool {
        self.config.view_fraction >= 1.0
            || unit_interval(stable_hash(self.config.seed ^ VIEW_SALT, token.as_bytes()))
                < self.config.view_fraction
    }

    fn add_example(&mut self, tokens: &[String], label: Label, weight: u64) {
        self.class_docs[label.index()] += weight;
        for t in tokens {
            let visible = self.in_view(t);
            let entry = self.counts.entry(t.clone()).or_insert([0; Label::COUNT]);
            if entry.iter().all(|&c| c == 0) && visible {
                self.view_vocab += 1;
            }
            entry[label.index()] += weight;
            self.total_tokens += weight;
            if visible {
                self.class_view_tokens[label.index()] += weight;
            }
        }
    }

    /// Naive-Bayes posterior; uniform before any training.
    pub fn distribution(&self, tokens: &[String]) -> LabelDistribution {
        if !self.is_trained() {
            return LabelDistribution::uniform();
        }
        let docs: u64 = self.class_docs.iter().sum();
        let vocab = self.view_vocab as f64;
        let mut logits = [0.0; Label::COUNT];
        for (c, logit) in logits.iter_mut().enumerate() {
            *logit = ((self.class_docs[c] as f64 + 1.0) / (docs as f64 + Label::COUNT as f64)).ln();
        }
        for t in tokens {
            let Some(counts) = self.counts.get(t) else {
                continue;
            };
            if !self.in_view(t) {
                continue;
            }
            for (c, logit) in logits.iter_mut().enumerate() {
                *logit +=
                    ((counts[c] as f64 + 1.0) / (self.class_view_tokens[c] as f64 + vocab)).ln();
            }
        }
        softmax(logits)
    }

    /// Hashed bag of words, L2-normalized (all zeros for a token-free text).
    pub fn representation(&self, tokens: &[String]) -> Vec<f64> {
        let dim = self.config.representation_dim();
        let mut v = vec![0.0; dim];
        for t in tokens {
            let bucket = stable_hash(self.config.seed ^ BUCKET_SALT, t.as_bytes()) % dim as u64;
            v[bucket as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn gradient(&self, proba: &LabelDistribution, representation: &[f64]) -> Vec<f64> {
        let hallucinated = proba.argmax();
        let mut g = Vec::with_capacity(representation.len() * Label::COUNT);
        for label in Label::ALL {
            let coef = proba.get(label) - if label == hallucinated { 1.0 } else { 0.0 };
            g.extend(representation.iter().map(|f| coef * f));
        }
        g
    }

    pub fn surprisal(&self, instance_id: &str, tokens: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; SURPRISAL_DIM];
        let denom = self.total_tokens as f64 + BACKGROUND_VOCAB;
        for (pos, t) in tokens.iter().take(SURPRISAL_DIM).enumerate() {
            let mut key = instance_id.as_bytes().to_vec();
            key.extend_from_slice(&(pos as u64).to_le_bytes());
            if unit_interval(stable_hash(self.config.seed ^ SAMPLE_SALT, &key))
                >= SURPRISAL_SAMPLE_RATE
            {
                continue;
            }
            let count: u64 = self.counts.get(t).map_or(0, |c| c.iter().sum());
            v[pos] = -((count as f64 + 1.0) / denom).ln();
        }
        v
    }
}

fn softmax(logits: [f64; Label::COUNT]) -> LabelDistribution {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.map(|l| (l - max).exp());
    let sum: f64 = exp.iter().sum();
    LabelDistribution(exp.map(|e| e / sum))
}

impl Predictor for MockPredictor {
    fn train(&mut self, data: &[LabelledExample<'_>], _spec: &TrainingSpec) -> Result<()> {
        for ex in data {
            let tokens = tokenize(&ex.instance.text());
            self.add_example(&tokens, ex.label, u64::from(ex.multiplicity));
        }
        Ok(())
    }

    fn predict(
        &mut self,
        instances: &[&Instance],
        needs: &[EmbeddingKind],
    ) -> Result<Vec<PredictionBundle>> {
        let wants = |k| needs.contains(&k);
        Ok(instances
            .iter()
            .map(|inst| {
                let tokens = tokenize(&inst.text());
                let mut bundle = PredictionBundle::new(self.distribution(&tokens));
                if wants(EmbeddingKind::Representation) || wants(EmbeddingKind::Gradient) {
                    let rep = self.representation(&tokens);
                    if wants(EmbeddingKind::Gradient) {
                        bundle.gradient = Some(self.gradient(&bundle.proba, &rep));
                    }
                    if wants(EmbeddingKind::Representation) {
                        bundle.representation = Some(rep);
                    }
                }
                if wants(EmbeddingKind::Surprisal) {
                    bundle.surprisal = Some(self.surprisal(&inst.id, &tokens));
                }
                bundle
            })
            .collect())
    }

    fn reset(&mut self) -> Result<()> {
        *self = MockPredictor::new(self.config.clone());
        Ok(())
    }

    fn dimension(&self, kind: EmbeddingKind) -> Option<usize> {
        Some(match kind {
            EmbeddingKind::Representation => self.config.representation_dim(),
            EmbeddingKind::Gradient => self.config.representation_dim() * Label::COUNT,
            EmbeddingKind::Surprisal => SURPRISAL_DIM,
        })
    }

    fn fingerprint(&self) -> Option<u64> {
        let mut bytes = Vec::new();
        for d in self.class_docs {
            bytes.extend_from_slice(&d.to_le_bytes());
        }
        for (token, counts) in &self.counts {
            bytes.extend_from_slice(token.as_bytes());
            bytes.push(0);
            for c in counts {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        Some(stable_hash(self.config.seed, &bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Vec<Instance> {
        vec![
            Instance::new("s", "vaccines work", "trials confirm", Label::Support),
            Instance::new("n", "oceans cool", "unrelated report", Label::Neutral),
            Instance::new("c", "ice grows", "satellites refute", Label::Contradict),
        ]
    }

    fn examples(insts: &[Instance]) -> Vec<LabelledExample<'_>> {
        insts
            .iter()
            .map(|i| LabelledExample {
                instance: i,
                label: i.gold_label(),
                multiplicity: 1,
            })
            .collect()
    }

    #[test]
    fn untrained_is_uniform() {
        let mut m = MockPredictor::new(MockConfig::full_view(1, 12));
        let insts = fixture();
        let out = m.predict(&[&insts[0]], &[]).unwrap();
        assert_eq!(out[0].proba, LabelDistribution::uniform());
        assert!(out[0].representation.is_none());
    }

    // Hand computation for the 3-instance fixture: every class has one doc
    // with 4 distinct tokens, the vocabulary holds 12 tokens. Querying the
    // Support doc, each of its 4 tokens has likelihood (1+1)/(4+12) under
    // Support and (0+1)/(4+12) elsewhere; priors are equal. So
    // p(Support) = 2^4 / (2^4 + 1 + 1) = 16/18.
    #[test]
    fn naive_bayes_matches_hand_computation() {
        let insts = fixture();
        let mut m = MockPredictor::new(MockConfig::full_view(1, 12));
        m.train(&examples(&insts), &TrainingSpec::default())
            .unwrap();
        let out = m.predict(&insts.iter().collect::<Vec<_>>(), &[]).unwrap();
        for (inst, bundle) in insts.iter().zip(&out) {
            assert_eq!(bundle.proba.argmax(), inst.gold_label());
            let p = bundle.proba.get(inst.gold_label());
            assert!((p - 16.0 / 18.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn duplicates_count_like_copies() {
        let insts = fixture();
        let mut doubled = examples(&insts);
        doubled[0].multiplicity = 2;
        let mut a = MockPredictor::new(MockConfig::full_view(3, 12));
        a.train(&doubled, &TrainingSpec::default()).unwrap();

        let mut copies = examples(&insts);
        copies.push(copies[0]);
        copies.reverse();
        let mut b = MockPredictor::new(MockConfig::full_view(3, 12));
        b.train(&copies, &TrainingSpec::default()).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());

        let mut once = MockPredictor::new(MockConfig::full_view(3, 12));
        once.train(&examples(&insts), &TrainingSpec::default())
            .unwrap();
        assert_ne!(a.fingerprint(), once.fingerprint());
    }

    #[test]
    fn reset_restores_initial_state() {
        let insts = fixture();
        let mut m = MockPredictor::new(MockConfig::for_member("bert-base", 12, 5));
        let pristine = m.fingerprint();
        m.train(&examples(&insts), &TrainingSpec::default())
            .unwrap();
        assert_ne!(m.fingerprint(), pristine);
        m.reset().unwrap();
        assert_eq!(m.fingerprint(), pristine);
    }

    // Independent evaluation of the gradient embedding on a two-token text:
    // build the hashed vector directly and apply the closed form.
    #[test]
    fn gradient_is_hallucinated_label_cross_entropy_gradient() {
        let insts = fixture();
        let cfg = MockConfig::full_view(9, 1);
        let mut m = MockPredictor::new(cfg.clone());
        m.train(&examples(&insts), &TrainingSpec::default())
            .unwrap();
        let probe = Instance::new("p", "vaccines", "refute", Label::Neutral);
        let bundle = &m
            .predict(
                &[&probe],
                &[EmbeddingKind::Gradient, EmbeddingKind::Representation],
            )
            .unwrap()[0];

        let dim = cfg.representation_dim();
        let mut f = vec![0.0; dim];
        for t in ["vaccines", "refute"] {
            f[(stable_hash(cfg.seed ^ BUCKET_SALT, t.as_bytes()) % dim as u64) as usize] += 1.0;
        }
        let norm = f.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        f.iter_mut().for_each(|x| *x /= norm);
        assert_eq!(bundle.representation.as_deref().unwrap(), &f[..]);

        let p = bundle.proba.0;
        let top = (0..3).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        let grad = bundle.gradient.as_ref().unwrap();
        assert_eq!(grad.len(), 3 * dim);
        for c in 0..3 {
            let coef = p[c] - if c == top { 1.0 } else { 0.0 };
            for j in 0..dim {
                assert!((grad[c * dim + j] - coef * f[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn surprisal_samples_roughly_fifteen_percent() {
        let m = MockPredictor::new(MockConfig::full_view(4, 12));
        let tokens: Vec<String> = (0..SURPRISAL_DIM).map(|i| format!("t{i}")).collect();
        let v = m.surprisal("doc", &tokens);
        let sampled = v.iter().filter(|x| **x > 0.0).count();
        assert!((20..=60).contains(&sampled), "{sampled}");
        let expected = BACKGROUND_VOCAB.ln();
        assert!(v.iter().all(|x| *x == 0.0 || (*x - expected).abs() < 1e-12));
    }

    #[test]
    fn view_fraction_hides_tokens() {
        let cfg = MockConfig {
            seed: 11,
            size_units: 12,
            view_fraction: 0.5,
        };
        let m = MockPredictor::new(cfg);
        let seen = (0..1000).filter(|i| m.in_view(&format!("w{i}"))).count();
        assert!((400..600).contains(&seen), "{seen}");
    }
}
