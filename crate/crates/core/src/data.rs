//! Domain types for claim–evidence pools: labels, instances, the
//! labelled/unlabelled bookkeeping and line-delimited JSON ingestion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Veracity of a claim given a piece of evidence.
///
/// The declaration order is also the tie-break order used wherever two labels
/// compete (argmax ties, per-member votes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Support,
    Neutral,
    Contradict,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Support, Label::Neutral, Label::Contradict];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Support => "Support",
            Label::Neutral => "Neutral",
            Label::Contradict => "Contradict",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Support" => Ok(Label::Support),
            "Neutral" => Ok(Label::Neutral),
            "Contradict" => Ok(Label::Contradict),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Where a claim–evidence pair came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    #[default]
    ProvidedPair,
    RetrievedPair,
}

impl PairSource {
    fn is_provided(&self) -> bool {
        *self == PairSource::ProvidedPair
    }
}

/// One claim–evidence pair.
///
/// The gold label travels with the instance but has no public getter: query
/// strategies cannot see it, and it only comes out through an [`Oracle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub claim: String,
    pub evidence: String,
    #[serde(rename = "label")]
    gold_label: Label,
    #[serde(default, skip_serializing_if = "PairSource::is_provided")]
    pub source: PairSource,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        claim: impl Into<String>,
        evidence: impl Into<String>,
        gold_label: Label,
    ) -> Self {
        Instance {
            id: id.into(),
            claim: claim.into(),
            evidence: evidence.into(),
            gold_label,
            source: PairSource::ProvidedPair,
        }
    }

    pub fn with_source(mut self, source: PairSource) -> Self {
        self.source = source;
        self
    }

    /// Claim and evidence joined, as fed to text models.
    pub fn text(&self) -> String {
        format!("{} {}", self.claim, self.evidence)
    }

    pub(crate) fn gold_label(&self) -> Label {
        self.gold_label
    }

    fn validate(&self) -> Result<()> {
        if self.claim.trim().is_empty() || self.evidence.trim().is_empty() {
            return Err(Error::EmptyText(self.id.clone()));
        }
        Ok(())
    }
}

/// The annotation step. Strategies pick ids; an oracle turns them into labels.
pub trait Oracle {
    fn reveal(&mut self, instance: &Instance) -> Result<Label>;
}

/// Simulated annotation from the dataset's gold labels.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoldOracle;

impl Oracle for GoldOracle {
    fn reveal(&mut self, instance: &Instance) -> Result<Label> {
        Ok(instance.gold_label)
    }
}

/// Live annotation: shows each pair and reads `s`/`n`/`c` (or a full label
/// name) from the input stream.
pub struct TerminalOracle<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> TerminalOracle<R, W> {
    pub fn new(input: R, output: W) -> Self {
        TerminalOracle { input, output }
    }
}

impl<R: BufRead, W: Write> Oracle for TerminalOracle<R, W> {
    fn reveal(&mut self, instance: &Instance) -> Result<Label> {
        let io = |e| Error::io("<terminal>", e);
        writeln!(
            self.output,
            "\n[{}]\nclaim:    {}\nevidence: {}",
            instance.id, instance.claim, instance.evidence
        )
        .map_err(io)?;
        loop {
            write!(self.output, "label [s]upport / [n]eutral / [c]ontradict: ").map_err(io)?;
            self.output.flush().map_err(io)?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(io)? == 0 {
                return Err(Error::io(
                    "<terminal>",
                    std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "annotation aborted"),
                ));
            }
            let answer = line.trim().to_lowercase();
            let label = match answer.as_str() {
                "s" | "support" => Some(Label::Support),
                "n" | "neutral" => Some(Label::Neutral),
                "c" | "contradict" => Some(Label::Contradict),
                _ => None,
            };
            if let Some(label) = label {
                return Ok(label);
            }
        }
    }
}

/// A revealed instance in the labelled pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledEntry {
    pub id: String,
    pub label: Label,
    /// Committee disagreement at query time, when the strategy produced one.
    pub score: Option<f64>,
    /// Copies used for training; above 1 only after oversampling.
    pub multiplicity: u32,
}

impl LabelledEntry {
    pub fn new(id: impl Into<String>, label: Label, score: Option<f64>) -> Self {
        LabelledEntry {
            id: id.into(),
            label,
            score,
            multiplicity: 1,
        }
    }
}

/// A labelled instance with its training multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct LabelledExample<'a> {
    pub instance: &'a Instance,
    pub label: Label,
    pub multiplicity: u32,
}

/// Which part of a pool to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    /// Gold labels of everything not yet queried.
    Unlabelled,
    /// Each labelled id once.
    LabelledUnique,
    /// Each labelled id weighted by its multiplicity.
    LabelledWeighted,
}

/// Per-label counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub counts: [u64; Label::COUNT],
}

impl PoolStats {
    pub fn from_counts(counts: [u64; Label::COUNT]) -> Self {
        PoolStats { counts }
    }

    pub fn count(&self, label: Label) -> u64 {
        self.counts[label.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fractions per label; all zero for an empty partition.
    pub fn fractions(&self) -> [f64; Label::COUNT] {
        let total = self.total();
        if total == 0 {
            return [0.0; Label::COUNT];
        }
        self.counts.map(|c| c as f64 / total as f64)
    }

    pub fn fraction(&self, label: Label) -> f64 {
        self.fractions()[label.index()]
    }

    fn add(&mut self, label: Label, n: u64) {
        self.counts[label.index()] += n;
    }
}

impl fmt::Display for PoolStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fr = self.fractions();
        for (i, label) in Label::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str("  ")?;
            }
            write!(f, "{label}: {} ({:.2}%)", self.counts[i], fr[i] * 100.0)?;
        }
        Ok(())
    }
}

/// Instances split into the unlabelled pool and the ordered labelled list.
#[derive(Debug, Clone, Default)]
pub struct Pool {
    instances: BTreeMap<String, Instance>,
    unlabelled: BTreeSet<String>,
    labelled: Vec<LabelledEntry>,
}

impl Pool {
    /// Builds a pool with every instance unlabelled.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for inst in instances {
            inst.validate()?;
            if map.contains_key(&inst.id) {
                return Err(Error::DuplicateId(inst.id));
            }
            map.insert(inst.id.clone(), inst);
        }
        let unlabelled = map.keys().cloned().collect();
        Ok(Pool {
            instances: map,
            unlabelled,
            labelled: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.get(id)
    }

    /// All instances in ascending id order.
    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.instances.values()
    }

    /// Unlabelled ids in ascending order.
    pub fn unlabelled_ids(&self) -> impl Iterator<Item = &str> {
        self.unlabelled.iter().map(String::as_str)
    }

    pub fn unlabelled_len(&self) -> usize {
        self.unlabelled.len()
    }

    /// Unlabelled instances in ascending id order.
    pub fn unlabelled_instances(&self) -> Vec<&Instance> {
        self.unlabelled
            .iter()
            .map(|id| &self.instances[id])
            .collect()
    }

    pub fn is_unlabelled(&self, id: &str) -> bool {
        self.unlabelled.contains(id)
    }

    pub fn labelled(&self) -> &[LabelledEntry] {
        &self.labelled
    }

    /// Labelled instances in query order, each with its multiplicity.
    pub fn labelled_examples(&self) -> Vec<LabelledExample<'_>> {
        self.labelled
            .iter()
            .map(|e| LabelledExample {
                instance: &self.instances[&e.id],
                label: e.label,
                multiplicity: e.multiplicity,
            })
            .collect()
    }

    /// Reveals labels for `ids` through `oracle` and moves them to the
    /// labelled list. `score` supplies the disagreement recorded with each id.
    pub fn annotate(
        &mut self,
        ids: &[String],
        oracle: &mut dyn Oracle,
        score: impl Fn(&str) -> Option<f64>,
    ) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in ids {
            if !self.instances.contains_key(id) {
                return Err(Error::UnknownInstance(id.clone()));
            }
            if !self.unlabelled.contains(id) || !seen.insert(id) {
                return Err(Error::AlreadyLabelled(id.clone()));
            }
        }
        for id in ids {
            let label = oracle.reveal(&self.instances[id])?;
            self.unlabelled.remove(id);
            self.labelled
                .push(LabelledEntry::new(id.clone(), label, score(id)));
        }
        Ok(())
    }

    /// Replaces the labelled list, e.g. with an oversampled version. The set
    /// of labelled ids and their labels must not change.
    pub fn set_labelled(&mut self, entries: Vec<LabelledEntry>) -> Result<()> {
        let before: BTreeMap<&str, Label> = self
            .labelled
            .iter()
            .map(|e| (e.id.as_str(), e.label))
            .collect();
        let after: BTreeMap<&str, Label> =
            entries.iter().map(|e| (e.id.as_str(), e.label)).collect();
        if before != after || after.len() != entries.len() {
            return Err(Error::Config(
                "replacement labelled list must keep the same ids and labels".into(),
            ));
        }
        if let Some(e) = entries.iter().find(|e| e.multiplicity == 0) {
            return Err(Error::Config(format!("multiplicity of `{}` is zero", e.id)));
        }
        self.labelled = entries;
        Ok(())
    }

    pub fn stats(&self, partition: Partition) -> PoolStats {
        let mut stats = PoolStats::default();
        match partition {
            Partition::Unlabelled => {
                for id in &self.unlabelled {
                    stats.add(self.instances[id].gold_label, 1);
                }
            }
            Partition::LabelledUnique => {
                for e in &self.labelled {
                    stats.add(e.label, 1);
                }
            }
            Partition::LabelledWeighted => {
                for e in &self.labelled {
                    stats.add(e.label, u64::from(e.multiplicity));
                }
            }
        }
        stats
    }

    /// Gold-label counts over every instance, labelled or not.
    pub fn gold_stats(&self) -> PoolStats {
        let mut stats = PoolStats::default();
        for inst in self.instances.values() {
            stats.add(inst.gold_label, 1);
        }
        stats
    }
}

pub fn pool_stats(pool: &Pool, partition: Partition) -> PoolStats {
    pool.stats(partition)
}

/// Gold-label counts of a list of instances.
pub fn label_stats<'a>(instances: impl IntoIterator<Item = &'a Instance>) -> PoolStats {
    let mut stats = PoolStats::default();
    for inst in instances {
        stats.add(inst.gold_label, 1);
    }
    stats
}

/// Parses line-delimited `{id, claim, evidence, label}` records.
pub fn read_pairs(reader: impl BufRead) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if inst.id.is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: "empty id".into(),
            });
        }
        if inst.claim.trim().is_empty() || inst.evidence.trim().is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: "empty claim or evidence".into(),
            });
        }
        out.push(inst);
    }
    if out.is_empty() {
        return Err(Error::NoInstances);
    }
    Ok(out)
}

/// Writes instances in the canonical line-delimited form.
pub fn write_pairs<'a>(
    mut writer: impl Write,
    instances: impl IntoIterator<Item = &'a Instance>,
) -> Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut writer, inst)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Loads a pair dataset with every instance unlabelled.
pub fn load_pair_dataset(path: impl AsRef<Path>) -> Result<Pool> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let pool = Pool::new(read_pairs(BufReader::new(file))?)?;
    log::info!(
        "loaded {}: {}",
        path.display(),
        pool.stats(Partition::Unlabelled)
    );
    Ok(pool)
}

pub fn save_pair_dataset<'a>(
    path: impl AsRef<Path>,
    instances: impl IntoIterator<Item = &'a Instance>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_pairs(&mut writer, instances)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Draws `per_class` unlabelled instances of every label into a test list.
///
/// Sampling walks each label's ids in ascending order with a ChaCha8 stream
/// seeded by `seed`, so a split depends only on the seed and the pool
/// contents. The returned test list is sorted by id.
pub fn reserve_test_split(
    pool: Pool,
    per_class: usize,
    seed: u64,
) -> Result<(Vec<Instance>, Pool)> {
    let mut by_label: [Vec<&str>; Label::COUNT] = Default::default();
    for id in &pool.unlabelled {
        by_label[pool.instances[id].gold_label.index()].push(id);
    }
    for label in Label::ALL {
        let available = by_label[label.index()].len();
        if available < per_class {
            return Err(Error::InsufficientClass {
                label,
                needed: per_class,
                available,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: BTreeSet<String> = BTreeSet::new();
    for ids in &by_label {
        for i in rand::seq::index::sample(&mut rng, ids.len(), per_class) {
            chosen.insert(ids[i].to_string());
        }
    }
    let Pool {
        mut instances,
        mut unlabelled,
        labelled,
    } = pool;
    let mut test = Vec::with_capacity(chosen.len());
    for id in &chosen {
        unlabelled.remove(id);
        test.push(instances.remove(id).expect("chosen ids come from the pool"));
    }
    Ok((
        test,
        Pool {
            instances,
            unlabelled,
            labelled,
        },
    ))
}
