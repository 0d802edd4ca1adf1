//! The contract every committee member satisfies.
//!
//! A [`CommitteeMember`] pairs a name and a size attribute with a boxed
//! [`Predictor`]. Two backends ship: the deterministic [`mock`] predictor and
//! an [`sidecar`] client speaking line-delimited JSON to an external model
//! server.

pub mod mock;
pub mod sidecar;

use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{Instance, Label, LabelledExample};
use crate::error::{Error, Result};

pub use mock::{MockConfig, MockPredictor};
pub use sidecar::{ExternalPredictor, SidecarClient};

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// A probability distribution over the three labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution(pub [f64; Label::COUNT]);

impl LabelDistribution {
    pub fn uniform() -> Self {
        LabelDistribution([1.0 / 3.0; Label::COUNT])
    }

    pub fn get(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    /// Most probable label; ties go to the earlier label in `Label::ALL`.
    pub fn argmax(&self) -> Label {
        let mut best = 0;
        for i in 1..Label::COUNT {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        Label::ALL[best]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!("{:?}", self.0)));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(())
    }
}

impl Serialize for LabelDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(Label::COUNT))?;
        for label in Label::ALL {
            map.serialize_entry(label.as_str(), &self.get(label))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for LabelDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DistVisitor;

        impl<'de> Visitor<'de> for DistVisitor {
            type Value = LabelDistribution;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from the three labels to probabilities")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = [None; Label::COUNT];
                while let Some((key, value)) = map.next_entry::<String, f64>()? {
                    let label: Label = key.parse().map_err(de::Error::custom)?;
                    out[label.index()] = Some(value);
                }
                let mut probs = [0.0; Label::COUNT];
                for label in Label::ALL {
                    probs[label.index()] = out[label.index()]
                        .ok_or_else(|| de::Error::custom(format!("missing label {label}")))?;
                }
                Ok(LabelDistribution(probs))
            }
        }

        deserializer.deserialize_map(DistVisitor)
    }
}

/// Embedding families a strategy can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Classifier input representation (CAL).
    Representation,
    /// Last-layer cross-entropy gradient under the predicted label (BADGE).
    Gradient,
    /// Token-level language-model surprisal (ALPS).
    Surprisal,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 3] = [
        EmbeddingKind::Representation,
        EmbeddingKind::Gradient,
        EmbeddingKind::Surprisal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Representation => "representation",
            EmbeddingKind::Gradient => "gradient",
            EmbeddingKind::Surprisal => "surprisal",
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmbeddingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownEmbedding(s.to_string()))
    }
}

/// One member's output for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBundle {
    pub proba: LabelDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surprisal: Option<Vec<f64>>,
}

impl PredictionBundle {
    pub fn new(proba: LabelDistribution) -> Self {
        PredictionBundle {
            proba,
            representation: None,
            gradient: None,
            surprisal: None,
        }
    }

    pub fn embedding(&self, kind: EmbeddingKind) -> Option<&[f64]> {
        match kind {
            EmbeddingKind::Representation => self.representation.as_deref(),
            EmbeddingKind::Gradient => self.gradient.as_deref(),
            EmbeddingKind::Surprisal => self.surprisal.as_deref(),
        }
    }
}

/// Finetuning hyperparameters. The mock backend only honours
/// `from_initial_checkpoint`; external backends receive the whole struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSpec {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_sequence_length: usize,
    pub from_initial_checkpoint: bool,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            learning_rate: 1e-5,
            batch_size: 16,
            epochs: 3,
            max_sequence_length: 256,
            from_initial_checkpoint: true,
        }
    }
}

impl TrainingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.batch_size == 0
            || self.epochs == 0
            || self.max_sequence_length == 0
        {
            return Err(Error::Config(format!(
                "training spec values must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// A trainable three-way classifier.
pub trait Predictor: Send {
    /// Trains on a labelled multiset, continuing from the current state.
    fn train(&mut self, data: &[LabelledExample<'_>], spec: &TrainingSpec) -> Result<()>;

    /// One bundle per instance, in order, carrying every requested embedding.
    fn predict(
        &mut self,
        instances: &[&Instance],
        needs: &[EmbeddingKind],
    ) -> Result<Vec<PredictionBundle>>;

    /// Restores the pristine (never task-trained) state.
    fn reset(&mut self) -> Result<()>;

    /// Dimension this backend promises for `kind`, if known up front.
    fn dimension(&self, _kind: EmbeddingKind) -> Option<usize> {
        None
    }

    /// Digest of the trained state, for backends that can expose one.
    fn fingerprint(&self) -> Option<u64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Mock,
    External,
}

/// A named predictor with the size attribute used for vote weighting.
pub struct CommitteeMember {
    name: String,
    size_units: u32,
    backend: Backend,
    predictor: Box<dyn Predictor>,
    dims: [Option<usize>; 3],
}

impl fmt::Debug for CommitteeMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CommitteeMember")
            .field("name", &self.name)
            .field("size_units", &self.size_units)
            .field("backend", &self.backend)
            .finish_non_exhaustive()
    }
}

impl CommitteeMember {
    pub fn new(
        name: impl Into<String>,
        size_units: u32,
        backend: Backend,
        predictor: Box<dyn Predictor>,
    ) -> Result<Self> {
        let name = name.into();
        if size_units == 0 {
            return Err(Error::ZeroSize(name));
        }
        let dims = EmbeddingKind::ALL.map(|k| predictor.dimension(k));
        Ok(CommitteeMember {
            name,
            size_units,
            backend,
            predictor,
            dims,
        })
    }

    /// A mock member whose hashing and vocabulary view are keyed by `seed`.
    pub fn mock(name: impl Into<String>, size_units: u32, seed: u64) -> Result<Self> {
        let name = name.into();
        let predictor = MockPredictor::new(MockConfig::for_member(&name, size_units, seed));
        Self::new(name, size_units, Backend::Mock, Box::new(predictor))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size_units(&self) -> u32 {
        self.size_units
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn fingerprint(&self) -> Option<u64> {
        self.predictor.fingerprint()
    }

    /// Trains on `data`. With `from_initial_checkpoint` the member is reset
    /// first, so the result reflects exactly this multiset.
    pub fn train(&mut self, data: &[LabelledExample<'_>], spec: &TrainingSpec) -> Result<()> {
        if data.is_empty() || data.iter().all(|e| e.multiplicity == 0) {
            return Err(Error::EmptyTrainingData);
        }
        if spec.from_initial_checkpoint {
            self.predictor.reset()?;
        }
        self.predictor.train(data, spec)
    }

    pub fn reset(&mut self) -> Result<()> {
        self.predictor.reset()
    }

    /// Predicts and checks the backend's output: one normalized bundle per
    /// instance with every requested embedding at a consistent dimension.
    pub fn predict(
        &mut self,
        instances: &[&Instance],
        needs: &[EmbeddingKind],
    ) -> Result<Vec<PredictionBundle>> {
        let bundles = self.predictor.predict(instances, needs)?;
        if bundles.len() != instances.len() {
            return Err(Error::Protocol(format!(
                "member `{}` returned {} bundles for {} instances",
                self.name,
                bundles.len(),
                instances.len()
            )));
        }
        for bundle in &bundles {
            bundle.proba.validate()?;
            for &kind in needs {
                let vec = bundle.embedding(kind).ok_or_else(|| {
                    Error::Protocol(format!(
                        "member `{}` omitted the {kind} embedding",
                        self.name
                    ))
                })?;
                let slot = &mut self.dims[kind as usize];
                match *slot {
                    Some(expected) if expected != vec.len() => {
                        return Err(Error::DimensionMismatch {
                            kind: kind.to_string(),
                            expected,
                            actual: vec.len(),
                        })
                    }
                    Some(_) => {}
                    None => *slot = Some(vec.len()),
                }
            }
        }
        Ok(bundles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_follow_label_order() {
        assert_eq!(LabelDistribution::uniform().argmax(), Label::Support);
        assert_eq!(LabelDistribution([0.2, 0.4, 0.4]).argmax(), Label::Neutral);
        assert_eq!(
            LabelDistribution([0.1, 0.2, 0.7]).argmax(),
            Label::Contradict
        );
    }

    #[test]
    fn distribution_wire_form() {
        let d = LabelDistribution([0.5, 0.25, 0.25]);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"Support":0.5,"Neutral":0.25,"Contradict":0.25}"#);
        assert_eq!(serde_json::from_str::<LabelDistribution>(&json).unwrap(), d);
        assert!(serde_json::from_str::<LabelDistribution>(r#"{"Support":1.0}"#).is_err());
    }

    #[test]
    fn validate_rejects_unnormalized() {
        assert!(LabelDistribution([0.5, 0.5, 0.1]).validate().is_err());
        assert!(LabelDistribution([1.5, -0.5, 0.0]).validate().is_err());
        assert!(LabelDistribution::uniform().validate().is_ok());
    }

    #[test]
    fn unknown_embedding_kind() {
        assert_eq!(
            "gradient".parse::<EmbeddingKind>().unwrap(),
            EmbeddingKind::Gradient
        );
        assert!(matches!(
            "attention".parse::<EmbeddingKind>(),
            Err(Error::UnknownEmbedding(k)) if k == "attention"
        ));
    }

    #[test]
    fn training_spec_defaults() {
        let spec = TrainingSpec::default();
        assert_eq!(spec.learning_rate, 1e-5);
        assert_eq!(
            (spec.batch_size, spec.epochs, spec.max_sequence_length),
            (16, 3, 256)
        );
        assert!(spec.from_initial_checkpoint);
        assert!(spec.validate().is_ok());
        assert!(TrainingSpec { epochs: 0, ..spec }.validate().is_err());
    }

    #[test]
    fn member_rejects_zero_size_and_empty_data() {
        assert!(matches!(
            CommitteeMember::mock("m", 0, 1),
            Err(Error::ZeroSize(_))
        ));
        let mut m = CommitteeMember::mock("m", 12, 1).unwrap();
        assert!(matches!(
            m.train(&[], &TrainingSpec::default()),
            Err(Error::EmptyTrainingData)
        ));
    }

    struct Short;

    impl Predictor for Short {
        fn train(&mut self, _: &[LabelledExample<'_>], _: &TrainingSpec) -> Result<()> {
            Ok(())
        }
        fn predict(
            &mut self,
            instances: &[&Instance],
            _: &[EmbeddingKind],
        ) -> Result<Vec<PredictionBundle>> {
            Ok(instances
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    let mut b = PredictionBundle::new(LabelDistribution::uniform());
                    b.representation = Some(vec![0.0; 2 + i]);
                    b
                })
                .collect())
        }
        fn reset(&mut self) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn member_detects_dimension_drift() {
        let mut m = CommitteeMember::new("x", 1, Backend::External, Box::new(Short)).unwrap();
        let a = Instance::new("a", "c", "e", Label::Support);
        let b = Instance::new("b", "c", "e", Label::Support);
        assert!(matches!(
            m.predict(&[&a, &b], &[EmbeddingKind::Representation]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3,
                ..
            })
        ));
        assert!(matches!(
            m.predict(&[&a], &[EmbeddingKind::Gradient]),
            Err(Error::Protocol(_))
        ));
    }
}
