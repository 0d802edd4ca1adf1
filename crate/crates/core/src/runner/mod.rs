//! The budget loop: query, reveal, optionally oversample, retrain from the
//! initial checkpoint, evaluate.

pub mod analysis;
pub mod config;
pub mod results;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::baselines::{alps_query, badge_query, cal_query, random_query, EmbeddingMatrix};
use crate::committee::active_pets_query;
use crate::data::{
    load_pair_dataset, reserve_test_split, GoldOracle, Instance, LabelledEntry, Oracle, Partition,
    Pool,
};
use crate::error::{Error, Result};
use crate::metrics::{macro_f1, DistributionPoint};
use crate::oversample::oversample;
use crate::predictor::{Backend, CommitteeMember, EmbeddingKind, ExternalPredictor, SidecarClient};
use crate::retrieval::{build_pairs, gold_pairs, load_claims, load_corpus, Bm25Index};
use crate::text::stable_hash;

pub use config::{
    default_committee, DataPaths, ExperimentConfig, MemberSpec, PipelineMode, Strategy,
};
pub use results::{
    emit_results, load_labelled, load_results, read_results_csv, write_results_csv, EmittedFiles,
    LabelledRecord, ResultRow, RunManifest, RESULT_HEADER,
};

/// Member state fingerprints around one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointRecord {
    pub budget: usize,
    /// Fingerprints of the members used for selection, taken before querying.
    pub before_query: BTreeMap<String, Option<u64>>,
    /// Fingerprints right after this iteration's retraining.
    pub after_training: BTreeMap<String, Option<u64>>,
}

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Vec<DistributionPoint>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub selections: Vec<Vec<String>>,
    pub final_pool: Pool,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<SeedRun>,
    pub selector_member: Option<String>,
}

impl ExperimentReport {
    pub fn manifest(&self, config: &ExperimentConfig) -> RunManifest {
        RunManifest {
            crate_name: env!("CARGO_PKG_NAME").to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds: self.runs.iter().map(|r| r.seed).collect(),
            selector_member: self.selector_member.clone(),
            rows: self.rows.len(),
            truncated_seeds: self
                .runs
                .iter()
                .filter(|r| r.truncated)
                .map(|r| r.seed)
                .collect(),
        }
    }

    pub fn labelled_records(&self) -> Vec<(u64, Vec<LabelledRecord>)> {
        self.runs
            .iter()
            .map(|r| (r.seed, LabelledRecord::from_pool(&r.final_pool)))
            .collect()
    }

    /// Writes the results table, manifest and final labelled pools.
    pub fn emit(&self, config: &ExperimentConfig) -> Result<EmittedFiles> {
        emit_results(
            &config.output,
            &self.rows,
            &self.manifest(config),
            &self.labelled_records(),
        )
    }
}

/// Loads the unlabelled pool and the test list the config describes.
pub fn load_datasets(config: &ExperimentConfig) -> Result<(Pool, Vec<Instance>)> {
    let require = |p: &Option<std::path::PathBuf>, what: &str| {
        p.clone()
            .ok_or_else(|| Error::Config(format!("{:?} mode needs data.{what}", config.pipeline)))
    };
    let pool = match config.pipeline {
        PipelineMode::PairDataset => load_pair_dataset(require(&config.data.pool, "pool")?)?,
        PipelineMode::RetrievalPipeline | PipelineMode::OracleEvidence => {
            let corpus = load_corpus(require(&config.data.corpus, "corpus")?)?;
            let claims = load_claims(require(&config.data.claims, "claims")?)?;
            let pairs = if config.pipeline == PipelineMode::OracleEvidence {
                gold_pairs(&claims, &corpus)?
            } else {
                let index = Bm25Index::build(&corpus)?;
                build_pairs(&claims, &corpus, &index, config.retrieval_top_k)?
            };
            Pool::new(pairs)?
        }
    };
    match &config.data.test {
        Some(path) => {
            let test = load_pair_dataset(path)?;
            Ok((pool, test.instances().cloned().collect()))
        }
        None => {
            let (test, rest) = reserve_test_split(pool, config.test_per_class, config.split_seed)?;
            Ok((rest, test))
        }
    }
}

/// Runs the configured experiment end to end with gold-label annotation.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (pool, test) = load_datasets(config)?;
    Experiment::new(config.clone())?.run_on(&pool, &test)
}

pub struct Experiment {
    config: ExperimentConfig,
    oracle: Box<dyn Oracle>,
    sidecar: Option<Arc<Mutex<SidecarClient>>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Experiment {
            config,
            oracle: Box::new(GoldOracle),
            sidecar: None,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Replaces gold-label annotation, e.g. with a `TerminalOracle`.
    pub fn with_oracle(mut self, oracle: Box<dyn Oracle>) -> Self {
        self.oracle = oracle;
        self
    }

    /// Serves external members from `client` instead of `ACTIVE_PETS_SIDECAR`.
    pub fn with_sidecar(mut self, client: SidecarClient) -> Self {
        self.sidecar = Some(Arc::new(Mutex::new(client)));
        self
    }

    fn sidecar(&mut self) -> Result<Arc<Mutex<SidecarClient>>> {
        if self.sidecar.is_none() {
            let client = SidecarClient::from_env()?.ok_or_else(|| {
                Error::Config(format!(
                    "external members need a sidecar; set {}",
                    crate::predictor::sidecar::SIDECAR_ENV
                ))
            })?;
            self.sidecar = Some(Arc::new(Mutex::new(client)));
        }
        Ok(self.sidecar.clone().expect("set above"))
    }

    fn build_committee(&mut self, seed: u64) -> Result<Vec<CommitteeMember>> {
        let specs = self.config.committee.clone();
        specs
            .iter()
            .map(|m| match m.backend {
                Backend::Mock => CommitteeMember::mock(&m.name, m.size_units, seed),
                Backend::External => {
                    let client = self.sidecar()?;
                    CommitteeMember::new(
                        &m.name,
                        m.size_units,
                        Backend::External,
                        Box::new(ExternalPredictor::new(&m.name, client)),
                    )
                }
            })
            .collect()
    }

    pub fn run_on(&mut self, pool: &Pool, test: &[Instance]) -> Result<ExperimentReport> {
        if test.is_empty() && self.config.budget_max > 0 {
            return Err(Error::Config("the test split is empty".into()));
        }
        let selector_member = self
            .config
            .strategy
            .uses_selector()
            .then(|| self.config.selector_member().name.clone());
        let mut rows = Vec::new();
        let mut runs = Vec::new();
        for seed in self.config.seeds.clone() {
            let run = self.run_seed(pool, test, seed, &mut rows)?;
            runs.push(run);
        }
        Ok(ExperimentReport {
            rows,
            runs,
            selector_member,
        })
    }

    fn run_seed(
        &mut self,
        base: &Pool,
        test: &[Instance],
        seed: u64,
        rows: &mut Vec<ResultRow>,
    ) -> Result<SeedRun> {
        let strategy = self.config.strategy;
        let step = self.config.step;
        let iterations = self.config.budget_max / step;
        let eval_names = self.config.evaluation_names();
        let selector = self.config.selector_member().name.clone();
        let mut committee = self.build_committee(seed)?;
        let index: HashMap<String, usize> = committee
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name().to_string(), i))
            .collect();
        // Active PETs retrains the whole committee; baselines only what they
        // evaluate plus the model that feeds their queries.
        let mut trained: Vec<usize> = if strategy.is_committee() {
            (0..committee.len()).collect()
        } else {
            let mut v: Vec<usize> = eval_names.iter().map(|n| index[n]).collect();
            if strategy.uses_selector() {
                v.push(index[&selector]);
            }
            v
        };
        trained.sort();
        trained.dedup();
        let query_members: Vec<usize> = if strategy.is_committee() {
            (0..committee.len()).collect()
        } else if strategy.uses_selector() {
            vec![index[&selector]]
        } else {
            Vec::new()
        };

        let test_refs: Vec<&Instance> = test.iter().collect();
        let golds: Vec<_> = test.iter().map(Instance::gold_label).collect();
        let mut pool = base.clone();
        let mut run = SeedRun {
            seed,
            trace: Vec::new(),
            checkpoints: Vec::new(),
            selections: Vec::new(),
            final_pool: Pool::default(),
            truncated: false,
        };

        for iteration in 1..=iterations {
            if pool.unlabelled_len() < step {
                log::warn!(
                    "seed {seed}: unlabelled pool exhausted at budget {}; stopping before {}",
                    pool.labelled().len(),
                    self.config.budget_max
                );
                run.truncated = true;
                break;
            }
            let started = Instant::now();
            let iteration_seed = stable_hash(seed, &(iteration as u64).to_le_bytes());
            let before_query = query_members
                .iter()
                .map(|&i| (committee[i].name().to_string(), committee[i].fingerprint()))
                .collect();

            let (selected, scores) = self.query(
                &mut committee,
                &index,
                &selector,
                &pool,
                step,
                iteration_seed,
            )?;
            pool.annotate(&selected, self.oracle.as_mut(), |id| {
                scores.get(id).copied()
            })?;
            if strategy == Strategy::ActivePetsO {
                let balanced = oversample(pool.labelled(), true)?;
                pool.set_labelled(balanced.entries)?;
            }

            let examples = pool.labelled_examples();
            for &i in &trained {
                committee[i].train(&examples, &self.config.training)?;
            }
            let after_training = query_members
                .iter()
                .map(|&i| (committee[i].name().to_string(), committee[i].fingerprint()))
                .collect();

            let budget = pool.labelled().len();
            let unique = pool.stats(Partition::LabelledUnique);
            let weighted = pool.stats(Partition::LabelledWeighted);
            let mut scored = Vec::with_capacity(eval_names.len());
            for name in &eval_names {
                let member = &mut committee[index[name]];
                let preds: Vec<_> = member
                    .predict(&test_refs, &[])?
                    .iter()
                    .map(|b| b.proba.argmax())
                    .collect();
                scored.push((name, macro_f1(&preds, &golds)?));
            }
            let wall = if self.config.record_wall_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            };
            for (name, f1) in scored {
                rows.push(ResultRow::new(
                    strategy, name, budget, seed, f1, &unique, &weighted, wall,
                ));
            }
            run.trace.push(DistributionPoint {
                budget,
                unique,
                weighted,
            });
            run.checkpoints.push(CheckpointRecord {
                budget,
                before_query,
                after_training,
            });
            run.selections.push(selected);
        }
        run.final_pool = pool;
        Ok(run)
    }

    fn query(
        &self,
        committee: &mut [CommitteeMember],
        index: &HashMap<String, usize>,
        selector: &str,
        pool: &Pool,
        k: usize,
        seed: u64,
    ) -> Result<(Vec<String>, HashMap<String, f64>)> {
        let unlabelled = || pool.unlabelled_instances();
        let selected = match self.config.strategy {
            Strategy::ActivePets | Strategy::ActivePetsO => {
                let q = active_pets_query(committee, pool, k)?;
                let scores = q.scores.into_iter().map(|s| (s.id, s.score)).collect();
                return Ok((q.selected, scores));
            }
            Strategy::Random => random_query(pool, k, seed)?,
            Strategy::Cal if pool.labelled().len() < self.config.cal_warm_start => {
                random_query(pool, k, seed)?
            }
            Strategy::Badge => {
                let insts = unlabelled();
                let bundles =
                    committee[index[selector]].predict(&insts, &[EmbeddingKind::Gradient])?;
                badge_query(
                    &EmbeddingMatrix::from_bundles(EmbeddingKind::Gradient, &insts, &bundles)?,
                    k,
                    seed,
                )?
            }
            Strategy::Alps => {
                let insts = unlabelled();
                let bundles =
                    committee[index[selector]].predict(&insts, &[EmbeddingKind::Surprisal])?;
                alps_query(
                    &EmbeddingMatrix::from_bundles(EmbeddingKind::Surprisal, &insts, &bundles)?,
                    k,
                    seed,
                )?
            }
            Strategy::Cal => {
                let member = &mut committee[index[selector]];
                let rep = [EmbeddingKind::Representation];
                let entries: &[LabelledEntry] = pool.labelled();
                let lab_insts: Vec<&Instance> = entries
                    .iter()
                    .map(|e| pool.instance(&e.id).expect("labelled ids exist"))
                    .collect();
                let labels: Vec<_> = entries.iter().map(|e| e.label).collect();
                let lab = EmbeddingMatrix::from_bundles(
                    EmbeddingKind::Representation,
                    &lab_insts,
                    &member.predict(&lab_insts, &rep)?,
                )?;
                let insts = unlabelled();
                let bundles = member.predict(&insts, &rep)?;
                let probas: Vec<_> = bundles.iter().map(|b| b.proba).collect();
                let unl =
                    EmbeddingMatrix::from_bundles(EmbeddingKind::Representation, &insts, &bundles)?;
                let knn = self.config.cal_knn.min(lab.len());
                cal_query(&lab, &labels, &unl, &probas, k, knn)?
            }
        };
        Ok((selected, HashMap::new()))
    }
}
