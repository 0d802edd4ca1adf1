//! Okapi BM25 over abstract collections, and the claim–abstract pairing that
//! turns a retrieval corpus into a three-way pair dataset.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use crate::data::{Instance, Label, PairSource};
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_TOP_K: usize = 3;

/// Corpus ids are strings here, but published corpora often use integers.
fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

fn id_keyed_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Label>, D::Error> {
    // JSON object keys are strings already
    BTreeMap::<String, Label>::deserialize(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abstract {
    #[serde(deserialize_with = "string_or_number")]
    pub doc_id: String,
    pub title: String,
    pub sentences: Vec<String>,
}

impl Abstract {
    /// Title followed by every sentence.
    pub fn text(&self) -> String {
        let mut s = self.title.clone();
        for sent in &self.sentences {
            s.push(' ');
            s.push_str(sent);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub claim: String,
    /// Gold abstracts for the claim and their verdicts.
    #[serde(default, deserialize_with = "id_keyed_map")]
    pub evidence_map: BTreeMap<String, Label>,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Abstract>> {
    read_jsonl(path.as_ref())
}

pub fn load_claims(path: impl AsRef<Path>) -> Result<Vec<ClaimRecord>> {
    read_jsonl(path.as_ref())
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    doc_ids: Vec<String>,
    doc_lengths: Vec<usize>,
    /// term → (document index, term frequency), ascending document index
    postings: HashMap<String, Vec<(usize, u32)>>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn build(corpus: &[Abstract]) -> Result<Self> {
        Self::with_params(corpus, DEFAULT_K1, DEFAULT_B)
    }

    pub fn with_params(corpus: &[Abstract], k1: f64, b: f64) -> Result<Self> {
        let docs: Vec<(String, String)> = corpus
            .iter()
            .map(|a| (a.doc_id.clone(), a.text()))
            .collect();
        Self::from_texts(&docs, k1, b)
    }

    /// Indexes `(doc_id, text)` pairs directly.
    pub fn from_texts(docs: &[(String, String)], k1: f64, b: f64) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (d, (_, text)) in docs.iter().enumerate() {
            let tokens = tokenize(text);
            doc_lengths.push(tokens.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((d, n));
            }
        }
        let avgdl = doc_lengths.iter().sum::<usize>() as f64 / docs.len() as f64;
        Ok(Bm25Index {
            k1,
            b,
            doc_ids: docs.iter().map(|(id, _)| id.clone()).collect(),
            doc_lengths,
            postings,
            avgdl,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of every document for `query`, in index order. Repeated
    /// query terms count once.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        let mut scores = vec![0.0; self.len()];
        for term in &terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for &(d, tf) in postings {
                let tf = f64::from(tf);
                let norm = 1.0 - self.b + self.b * self.doc_lengths[d] as f64 / self.avgdl;
                scores[d] += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * norm);
            }
        }
        scores
    }

    /// The `min(k, N)` best documents, by descending score then ascending id.
    pub fn retrieve_topk(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        let scores = self.scores(query);
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0]))
        });
        ranked
            .into_iter()
            .take(k)
            .map(|(d, s)| (self.doc_ids[d].clone(), s))
            .collect()
    }
}

fn check_evidence_docs<'a>(
    claims: &[ClaimRecord],
    corpus: &'a [Abstract],
) -> Result<HashMap<&'a str, &'a Abstract>> {
    let by_id: HashMap<&str, &Abstract> = corpus.iter().map(|a| (a.doc_id.as_str(), a)).collect();
    for c in claims {
        if let Some(doc) = c
            .evidence_map
            .keys()
            .find(|d| !by_id.contains_key(d.as_str()))
        {
            return Err(Error::UnknownDocument {
                claim: c.id.clone(),
                doc: doc.clone(),
            });
        }
    }
    Ok(by_id)
}

fn pair(claim: &ClaimRecord, doc: &Abstract, label: Label, source: PairSource) -> Instance {
    Instance::new(
        format!("{}:{}", claim.id, doc.doc_id),
        claim.claim.clone(),
        doc.text(),
        label,
    )
    .with_source(source)
}

/// Pairs every claim with its `k` best-ranked abstracts. A pair carries the
/// claim's verdict for gold abstracts and `Neutral` otherwise.
pub fn build_pairs(
    claims: &[ClaimRecord],
    corpus: &[Abstract],
    index: &Bm25Index,
    k: usize,
) -> Result<Vec<Instance>> {
    let by_id = check_evidence_docs(claims, corpus)?;
    let mut out = Vec::with_capacity(claims.len() * k.min(index.len()));
    for c in claims {
        for (doc_id, _) in index.retrieve_topk(&c.claim, k) {
            let doc = by_id
                .get(doc_id.as_str())
                .ok_or_else(|| Error::UnknownDocument {
                    claim: c.id.clone(),
                    doc: doc_id.clone(),
                })?;
            let label = c
                .evidence_map
                .get(&doc_id)
                .copied()
                .unwrap_or(Label::Neutral);
            out.push(pair(c, doc, label, PairSource::RetrievedPair));
        }
    }
    Ok(out)
}

/// Gold claim–abstract pairs only, bypassing retrieval.
pub fn gold_pairs(claims: &[ClaimRecord], corpus: &[Abstract]) -> Result<Vec<Instance>> {
    let by_id = check_evidence_docs(claims, corpus)?;
    Ok(claims
        .iter()
        .flat_map(|c| {
            let by_id = &by_id;
            c.evidence_map.iter().map(move |(doc, &label)| {
                pair(c, by_id[doc.as_str()], label, PairSource::ProvidedPair)
            })
        })
        .collect())
}
