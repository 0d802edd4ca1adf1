use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Strategy};
use crate::data::{Instance, Label, LabelledEntry, Pool, PoolStats};
use crate::error::{Error, Result};

pub const RESULT_HEADER: [&str; 12] = [
    "strategy",
    "member",
    "budget",
    "seed",
    "macro_f1",
    "frac_support",
    "frac_neutral",
    "frac_contradict",
    "frac_support_weighted",
    "frac_neutral_weighted",
    "frac_contradict_weighted",
    "wall_time_s",
];

/// One (strategy, member, budget, seed) measurement; field order is the
/// column order of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub strategy: Strategy,
    pub member: String,
    pub budget: usize,
    pub seed: u64,
    pub macro_f1: f64,
    pub frac_support: f64,
    pub frac_neutral: f64,
    pub frac_contradict: f64,
    pub frac_support_weighted: f64,
    pub frac_neutral_weighted: f64,
    pub frac_contradict_weighted: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        strategy: Strategy,
        member: &str,
        budget: usize,
        seed: u64,
        macro_f1: f64,
        unique: &PoolStats,
        weighted: &PoolStats,
        wall_time_s: f64,
    ) -> Self {
        let [fs, fnn, fc] = unique.fractions();
        let [ws, wn, wc] = weighted.fractions();
        ResultRow {
            strategy,
            member: member.to_string(),
            budget,
            seed,
            macro_f1,
            frac_support: fs,
            frac_neutral: fnn,
            frac_contradict: fc,
            frac_support_weighted: ws,
            frac_neutral_weighted: wn,
            frac_contradict_weighted: wc,
            wall_time_s,
        }
    }

    pub fn unique_fractions(&self) -> [f64; Label::COUNT] {
        [self.frac_support, self.frac_neutral, self.frac_contradict]
    }

    pub fn weighted_fractions(&self) -> [f64; Label::COUNT] {
        [
            self.frac_support_weighted,
            self.frac_neutral_weighted,
            self.frac_contradict_weighted,
        ]
    }
}

pub fn write_results_csv(rows: &[ResultRow], writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))
}

pub fn read_results_csv(reader: impl Read) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != RESULT_HEADER {
        return Err(Error::Config(format!(
            "unexpected results header {header:?}"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    read_results_csv(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// A labelled instance as dumped after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledRecord {
    pub id: String,
    pub claim: String,
    pub evidence: String,
    pub label: Label,
    pub multiplicity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl LabelledRecord {
    pub fn from_pool(pool: &Pool) -> Vec<LabelledRecord> {
        pool.labelled()
            .iter()
            .map(|e| Self::from_entry(pool.instance(&e.id).expect("labelled ids exist"), e))
            .collect()
    }

    pub fn from_entry(instance: &Instance, entry: &LabelledEntry) -> Self {
        LabelledRecord {
            id: entry.id.clone(),
            claim: instance.claim.clone(),
            evidence: instance.evidence.clone(),
            label: entry.label,
            multiplicity: entry.multiplicity,
            score: entry.score,
        }
    }
}

pub fn load_labelled(path: impl AsRef<Path>) -> Result<Vec<LabelledRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub crate_name: String,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// The member that fed a single-model baseline, if any.
    pub selector_member: Option<String>,
    pub rows: usize,
    pub truncated_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct EmittedFiles {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub labelled: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Writes `results.csv`, `manifest.json` and one `labelled_seed<N>.jsonl`
/// per final labelled pool into `dir`.
pub fn emit_results(
    dir: impl AsRef<Path>,
    rows: &[ResultRow],
    manifest: &RunManifest,
    labelled: &[(u64, Vec<LabelledRecord>)],
) -> Result<EmittedFiles> {
    if rows.is_empty() {
        return Err(Error::Config("no result rows to write".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results = dir.join("results.csv");
    write_results_csv(rows, create(&results)?)?;

    let manifest_path = dir.join("manifest.json");
    let mut w = create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&manifest_path, e))?;

    let mut files = Vec::new();
    for (seed, records) in labelled {
        let path = dir.join(format!("labelled_seed{seed}.jsonl"));
        let mut w = create(&path)?;
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(EmittedFiles {
        results,
        manifest: manifest_path,
        labelled: files,
    })
}
