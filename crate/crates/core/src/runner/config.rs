use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{Backend, TrainingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Badge,
    Cal,
    Alps,
    ActivePets,
    /// Active PETs followed by committee-priority oversampling.
    ActivePetsO,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Random,
        Strategy::Badge,
        Strategy::Cal,
        Strategy::Alps,
        Strategy::ActivePets,
        Strategy::ActivePetsO,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Badge => "badge",
            Strategy::Cal => "cal",
            Strategy::Alps => "alps",
            Strategy::ActivePets => "active_pets",
            Strategy::ActivePetsO => "active_pets_o",
        }
    }

    pub fn is_committee(self) -> bool {
        matches!(self, Strategy::ActivePets | Strategy::ActivePetsO)
    }

    /// Baselines that query a single model's embeddings.
    pub fn uses_selector(self) -> bool {
        matches!(self, Strategy::Badge | Strategy::Cal | Strategy::Alps)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// A ready-made claim–evidence pair dataset.
    #[default]
    PairDataset,
    /// Corpus + claims; pairs come from BM25 top-k retrieval.
    RetrievalPipeline,
    /// Corpus + claims; only gold claim–abstract pairs.
    OracleEvidence,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Pair dataset (pair_dataset mode).
    pub pool: Option<PathBuf>,
    /// Held-out pairs; when absent the test split is reserved from the pool.
    pub test: Option<PathBuf>,
    /// Abstract corpus (retrieval_pipeline and oracle_evidence modes).
    pub corpus: Option<PathBuf>,
    /// Claims with evidence maps (retrieval_pipeline and oracle_evidence modes).
    pub claims: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub name: String,
    pub size_units: u32,
    #[serde(default = "default_backend")]
    pub backend: Backend,
}

fn default_backend() -> Backend {
    Backend::Mock
}

impl MemberSpec {
    pub fn mock(name: &str, size_units: u32) -> Self {
        MemberSpec {
            name: name.to_string(),
            size_units,
            backend: Backend::Mock,
        }
    }
}

/// Three base (12) and three large (24) members.
pub fn default_committee() -> Vec<MemberSpec> {
    [
        ("bert-base", 12),
        ("roberta-base", 12),
        ("deberta-base", 12),
        ("bert-large", 24),
        ("roberta-large", 24),
        ("deberta-large", 24),
    ]
    .into_iter()
    .map(|(n, s)| MemberSpec::mock(n, s))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: PipelineMode,
    pub data: DataPaths,
    pub strategy: Strategy,
    pub committee: Vec<MemberSpec>,
    /// Members trained and scored each iteration; all members when empty.
    pub evaluation_members: Vec<String>,
    pub budget_max: usize,
    pub step: usize,
    pub seeds: Vec<u64>,
    /// Labelled instances drawn at random before CAL takes over.
    pub cal_warm_start: usize,
    pub cal_knn: usize,
    pub test_per_class: usize,
    pub split_seed: u64,
    pub retrieval_top_k: usize,
    pub training: TrainingSpec,
    /// Member whose representations feed the similarity analysis.
    pub similarity_member: Option<String>,
    /// When false, `wall_time_s` is written as 0 so tables are reproducible.
    pub record_wall_time: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: PipelineMode::PairDataset,
            data: DataPaths::default(),
            strategy: Strategy::ActivePets,
            committee: default_committee(),
            evaluation_members: Vec::new(),
            budget_max: 300,
            step: 10,
            seeds: (123..=132).collect(),
            cal_warm_start: 100,
            cal_knn: crate::baselines::DEFAULT_KNN,
            test_per_class: 150,
            split_seed: 123,
            retrieval_top_k: crate::retrieval::DEFAULT_TOP_K,
            training: TrainingSpec::default(),
            similarity_member: None,
            record_wall_time: true,
            output: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.step == 0 {
            return Err(Error::Config("step must be positive".into()));
        }
        if !self.budget_max.is_multiple_of(self.step) {
            return Err(Error::Config(format!(
                "step {} does not divide budget_max {}",
                self.step, self.budget_max
            )));
        }
        if self.committee.is_empty() {
            return Err(Error::EmptyCommittee);
        }
        let mut names = BTreeSet::new();
        for m in &self.committee {
            if m.size_units == 0 {
                return Err(Error::ZeroSize(m.name.clone()));
            }
            if !names.insert(m.name.as_str()) {
                return Err(Error::DuplicateMember(m.name.clone()));
            }
        }
        for e in self
            .evaluation_members
            .iter()
            .chain(&self.similarity_member)
        {
            if !names.contains(e.as_str()) {
                return Err(Error::Config(format!("`{e}` is not a committee member")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.cal_knn == 0 {
            return Err(Error::Config("cal_knn must be positive".into()));
        }
        self.training.validate()
    }

    /// Evaluation member names in name order.
    pub fn evaluation_names(&self) -> Vec<String> {
        let mut names: Vec<String> = if self.evaluation_members.is_empty() {
            self.committee.iter().map(|m| m.name.clone()).collect()
        } else {
            self.evaluation_members.clone()
        };
        names.sort();
        names.dedup();
        names
    }

    /// The largest member (ties to the smaller name): the single model behind
    /// BADGE, CAL and ALPS.
    pub fn selector_member(&self) -> &MemberSpec {
        self.committee
            .iter()
            .max_by(|a, b| {
                a.size_units
                    .cmp(&b.size_units)
                    .then_with(|| b.name.cmp(&a.name))
            })
            .expect("validated committee is non-empty")
    }
}
