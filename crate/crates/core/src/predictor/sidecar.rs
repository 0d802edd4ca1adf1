//! Line-delimited JSON protocol for external model servers.
//!
//! Each request is one JSON object on one line, tagged by `op`:
//!
//! ```text
//! {"op":"train","request_id":1,"member":"roberta-large","spec":{...},"data":[{"id":..,"claim":..,"evidence":..,"label":"Support","multiplicity":2}]}
//! {"op":"predict","request_id":2,"member":"roberta-large","needs":["gradient"],"instances":[{"id":..,"claim":..,"evidence":..}]}
//! {"op":"reset","request_id":3,"member":"roberta-large"}
//! ```
//!
//! The server answers each request with one line echoing `request_id`, either
//! `{"request_id":2,"ok":true,"bundles":[...]}` or
//! `{"request_id":2,"error":"unknown_member","message":"..."}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::data::{Instance, Label, LabelledExample};
use crate::error::{Error, Result};
use crate::predictor::{EmbeddingKind, PredictionBundle, Predictor, TrainingSpec};

/// Environment variable holding the sidecar address (`host:port`).
pub const SIDECAR_ENV: &str = "ACTIVE_PETS_SIDECAR";

pub mod codes {
    pub const UNKNOWN_MEMBER: &str = "unknown_member";
    pub const MALFORMED_REQUEST: &str = "malformed_request";
    pub const UNKNOWN_EMBEDDING: &str = "unknown_embedding";
    pub const OUT_OF_MEMORY: &str = "out_of_memory";
    pub const TRAINING_FAILED: &str = "training_failed";
    pub const INTERNAL: &str = "internal";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireInstance {
    pub id: String,
    pub claim: String,
    pub evidence: String,
}

impl From<&Instance> for WireInstance {
    fn from(inst: &Instance) -> Self {
        WireInstance {
            id: inst.id.clone(),
            claim: inst.claim.clone(),
            evidence: inst.evidence.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireExample {
    pub id: String,
    pub claim: String,
    pub evidence: String,
    pub label: Label,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Train {
        request_id: u64,
        member: String,
        spec: TrainingSpec,
        data: Vec<WireExample>,
    },
    Predict {
        request_id: u64,
        member: String,
        needs: Vec<EmbeddingKind>,
        instances: Vec<WireInstance>,
    },
    Reset {
        request_id: u64,
        member: String,
    },
}

impl Request {
    pub fn request_id(&self) -> u64 {
        match self {
            Request::Train { request_id, .. }
            | Request::Predict { request_id, .. }
            | Request::Reset { request_id, .. } => *request_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Response {
    pub request_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundles: Option<Vec<PredictionBundle>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Response {
    fn ok(request_id: u64, bundles: Option<Vec<PredictionBundle>>) -> Self {
        Response {
            request_id,
            ok: Some(true),
            bundles,
            ..Default::default()
        }
    }

    fn error(request_id: u64, code: &str, message: impl Into<String>) -> Self {
        Response {
            request_id,
            error: Some(code.to_string()),
            message: Some(message.into()),
            ..Default::default()
        }
    }
}

/// Client end of the protocol over any byte stream.
pub struct SidecarClient {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
    child: Option<Child>,
}

impl SidecarClient {
    pub fn new(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        SidecarClient {
            reader: Box::new(reader),
            writer: Box::new(writer),
            next_id: 1,
            child: None,
        }
    }

    pub fn connect_tcp(addr: &str) -> Result<Self> {
        let stream =
            TcpStream::connect(addr).map_err(|e| Error::Transport(format!("{addr}: {e}")))?;
        let read = stream
            .try_clone()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Self::new(BufReader::new(read), BufWriter::new(stream)))
    }

    /// Connects to the address in `ACTIVE_PETS_SIDECAR`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var(SIDECAR_ENV) {
            Ok(addr) if !addr.trim().is_empty() => Self::connect_tcp(addr.trim()).map(Some),
            _ => Ok(None),
        }
    }

    /// Launches a server process and talks to it over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Transport(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::new(BufReader::new(stdout), BufWriter::new(stdin));
        client.child = Some(child);
        Ok(client)
    }

    fn allocate_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn send_line(&mut self, line: &str) -> Result<String> {
        let transport = |e: std::io::Error| Error::Transport(e.to_string());
        self.writer.write_all(line.as_bytes()).map_err(transport)?;
        self.writer.write_all(b"\n").map_err(transport)?;
        self.writer.flush().map_err(transport)?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply).map_err(transport)? == 0 {
            return Err(Error::Transport("connection closed by sidecar".into()));
        }
        Ok(reply)
    }

    /// Sends a raw line and returns the parsed reply without interpreting it.
    pub fn call_raw(&mut self, line: &str) -> Result<serde_json::Value> {
        let reply = self.send_line(line)?;
        serde_json::from_str(&reply).map_err(|e| Error::Protocol(format!("unparseable reply: {e}")))
    }

    /// Sends a request built around a fresh id and checks the echo.
    pub fn call(&mut self, build: impl FnOnce(u64) -> Request) -> Result<Response> {
        let id = self.allocate_id();
        let request = build(id);
        let line = serde_json::to_string(&request)?;
        let reply = self.send_line(&line)?;
        let response: Response = serde_json::from_str(&reply)
            .map_err(|e| Error::Protocol(format!("unparseable reply: {e}")))?;
        if response.request_id != id {
            return Err(Error::Protocol(format!(
                "expected request_id {id}, got {}",
                response.request_id
            )));
        }
        if let Some(code) = response.error {
            return Err(Error::Backend {
                code,
                message: response.message.unwrap_or_default(),
            });
        }
        if response.ok != Some(true) {
            return Err(Error::Protocol("reply carries neither ok nor error".into()));
        }
        Ok(response)
    }

    pub fn train(
        &mut self,
        member: &str,
        spec: &TrainingSpec,
        data: &[LabelledExample<'_>],
    ) -> Result<()> {
        let data = data
            .iter()
            .map(|e| WireExample {
                id: e.instance.id.clone(),
                claim: e.instance.claim.clone(),
                evidence: e.instance.evidence.clone(),
                label: e.label,
                multiplicity: e.multiplicity,
            })
            .collect();
        self.call(|request_id| Request::Train {
            request_id,
            member: member.to_string(),
            spec: spec.clone(),
            data,
        })
        .map(|_| ())
    }

    pub fn predict(
        &mut self,
        member: &str,
        needs: &[EmbeddingKind],
        instances: &[&Instance],
    ) -> Result<Vec<PredictionBundle>> {
        let wire = instances.iter().map(|i| WireInstance::from(*i)).collect();
        let response = self.call(|request_id| Request::Predict {
            request_id,
            member: member.to_string(),
            needs: needs.to_vec(),
            instances: wire,
        })?;
        response
            .bundles
            .ok_or_else(|| Error::Protocol("predict reply without bundles".into()))
    }

    pub fn reset(&mut self, member: &str) -> Result<()> {
        self.call(|request_id| Request::Reset {
            request_id,
            member: member.to_string(),
        })
        .map(|_| ())
    }
}

impl Drop for SidecarClient {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A committee member served by a sidecar. Several members may share one
/// connection.
pub struct ExternalPredictor {
    member: String,
    client: Arc<Mutex<SidecarClient>>,
}

impl ExternalPredictor {
    pub fn new(member: impl Into<String>, client: Arc<Mutex<SidecarClient>>) -> Self {
        ExternalPredictor {
            member: member.into(),
            client,
        }
    }

    fn client(&self) -> Result<std::sync::MutexGuard<'_, SidecarClient>> {
        self.client
            .lock()
            .map_err(|_| Error::Transport("sidecar client poisoned".into()))
    }
}

impl Predictor for ExternalPredictor {
    fn train(&mut self, data: &[LabelledExample<'_>], spec: &TrainingSpec) -> Result<()> {
        self.client()?.train(&self.member, spec, data)
    }

    fn predict(
        &mut self,
        instances: &[&Instance],
        needs: &[EmbeddingKind],
    ) -> Result<Vec<PredictionBundle>> {
        self.client()?.predict(&self.member, needs, instances)
    }

    fn reset(&mut self) -> Result<()> {
        self.client()?.reset(&self.member)
    }
}

/// Serves the protocol for a registry of local predictors until the input
/// stream closes. A bad request gets an error reply; the loop keeps going.
///
/// This is the reference server used by the conformance suite; a real model
/// server implements the same loop around its own models.
pub fn serve(
    reader: impl BufRead,
    mut writer: impl Write,
    registry: &mut BTreeMap<String, Box<dyn Predictor>>,
) -> Result<()> {
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Transport(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let response = handle_line(&line, registry);
        serde_json::to_writer(&mut writer, &response)?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| Error::Transport(e.to_string()))?;
    }
    Ok(())
}

fn handle_line(line: &str, registry: &mut BTreeMap<String, Box<dyn Predictor>>) -> Response {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Response::error(0, codes::MALFORMED_REQUEST, e.to_string()),
    };
    let request_id = value
        .get("request_id")
        .and_then(|v| v.as_u64())
        .unwrap_or(0);
    // Unknown embedding names are reported by code rather than as a generic
    // parse failure.
    if let Some(needs) = value.get("needs").and_then(|n| n.as_array()) {
        for need in needs {
            let name = need.as_str().unwrap_or_default();
            if name.parse::<EmbeddingKind>().is_err() {
                return Response::error(request_id, codes::UNKNOWN_EMBEDDING, format!("`{name}`"));
            }
        }
    }
    let request: Request = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => return Response::error(request_id, codes::MALFORMED_REQUEST, e.to_string()),
    };
    let member = match &request {
        Request::Train { member, .. }
        | Request::Predict { member, .. }
        | Request::Reset { member, .. } => member.clone(),
    };
    let Some(predictor) = registry.get_mut(&member) else {
        return Response::error(request_id, codes::UNKNOWN_MEMBER, format!("`{member}`"));
    };
    match request {
        Request::Train { spec, data, .. } => {
            let instances: Vec<Instance> = data
                .iter()
                .map(|e| Instance::new(e.id.clone(), e.claim.clone(), e.evidence.clone(), e.label))
                .collect();
            let examples: Vec<LabelledExample<'_>> = instances
                .iter()
                .zip(&data)
                .map(|(instance, e)| LabelledExample {
                    instance,
                    label: e.label,
                    multiplicity: e.multiplicity,
                })
                .collect();
            if spec.from_initial_checkpoint {
                if let Err(e) = predictor.reset() {
                    return Response::error(request_id, codes::TRAINING_FAILED, e.to_string());
                }
            }
            match predictor.train(&examples, &spec) {
                Ok(()) => Response::ok(request_id, None),
                Err(e) => Response::error(request_id, codes::TRAINING_FAILED, e.to_string()),
            }
        }
        Request::Predict {
            needs, instances, ..
        } => {
            // Labels are not on the wire; the placeholder is never read.
            let owned: Vec<Instance> = instances
                .into_iter()
                .map(|w| Instance::new(w.id, w.claim, w.evidence, Label::Neutral))
                .collect();
            let refs: Vec<&Instance> = owned.iter().collect();
            match predictor.predict(&refs, &needs) {
                Ok(bundles) => Response::ok(request_id, Some(bundles)),
                Err(e) => Response::error(request_id, codes::INTERNAL, e.to_string()),
            }
        }
        Request::Reset { .. } => match predictor.reset() {
            Ok(()) => Response::ok(request_id, None),
            Err(e) => Response::error(request_id, codes::INTERNAL, e.to_string()),
        },
    }
}

/// Protocol checks any sidecar must pass.
pub mod conformance {
    use super::*;

    #[derive(Debug, Clone)]
    pub struct Check {
        pub name: &'static str,
        pub passed: bool,
        pub detail: String,
    }

    fn check(name: &'static str, outcome: Result<(), String>) -> Check {
        match outcome {
            Ok(()) => Check {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        }
    }

    fn probe_instances() -> Vec<Instance> {
        vec![
            Instance::new(
                "probe-1",
                "Glaciers are retreating.",
                "Satellite records show glacier loss since 1990.",
                Label::Support,
            ),
            Instance::new(
                "probe-2",
                "CO2 has no warming effect.",
                "Radiative forcing from CO2 is well measured.",
                Label::Contradict,
            ),
            Instance::new(
                "probe-3",
                "Coral reefs are expanding.",
                "The survey covered ocean temperature only.",
                Label::Neutral,
            ),
        ]
    }

    fn error_code(reply: &serde_json::Value) -> Option<&str> {
        reply.get("error").and_then(|e| e.as_str())
    }

    /// Runs every check against `member`, which must exist on the server.
    pub fn run(client: &mut SidecarClient, member: &str) -> Vec<Check> {
        let probes = probe_instances();
        let refs: Vec<&Instance> = probes.iter().collect();
        let mut checks = Vec::new();

        checks.push(check(
            "reset",
            client.reset(member).map_err(|e| e.to_string()),
        ));

        let before = client.predict(member, &EmbeddingKind::ALL, &refs);
        checks.push(check(
            "predict_normalized",
            before
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|bundles| {
                    if bundles.len() != refs.len() {
                        return Err(format!(
                            "{} bundles for {} instances",
                            bundles.len(),
                            refs.len()
                        ));
                    }
                    for b in bundles {
                        b.proba.validate().map_err(|e| e.to_string())?;
                        for kind in EmbeddingKind::ALL {
                            if b.embedding(kind).is_none() {
                                return Err(format!("missing {kind}"));
                            }
                        }
                    }
                    Ok(())
                }),
        ));

        let data: Vec<LabelledExample<'_>> = probes
            .iter()
            .map(|i| LabelledExample {
                instance: i,
                label: i.gold_label(),
                multiplicity: 1,
            })
            .collect();
        checks.push(check(
            "train",
            client
                .train(member, &TrainingSpec::default(), &data)
                .map_err(|e| e.to_string()),
        ));

        let restored = client
            .reset(member)
            .and_then(|_| client.predict(member, &EmbeddingKind::ALL, &refs));
        checks.push(check(
            "reset_restores_predictions",
            match (&before, restored) {
                (Ok(a), Ok(b)) if *a == b => Ok(()),
                (Ok(_), Ok(_)) => Err("predictions differ after reset".into()),
                (_, Err(e)) => Err(e.to_string()),
                (Err(e), _) => Err(e.to_string()),
            },
        ));

        let echo = client.call_raw(&format!(
            "{{\"op\":\"reset\",\"request_id\":987654,\"member\":\"{member}\"}}"
        ));
        checks.push(check(
            "request_id_echo",
            match echo {
                Ok(v) if v.get("request_id").and_then(|x| x.as_u64()) == Some(987_654) => Ok(()),
                Ok(v) => Err(format!("reply {v}")),
                Err(e) => Err(e.to_string()),
            },
        ));

        let expect_code = |reply: Result<serde_json::Value>, code: &str| match reply {
            Ok(v) if error_code(&v) == Some(code) => Ok(()),
            Ok(v) => Err(format!("expected {code}, got {v}")),
            Err(e) => Err(e.to_string()),
        };
        checks.push(check(
            "unknown_member_code",
            expect_code(
                client.call_raw(
                    "{\"op\":\"reset\",\"request_id\":5000,\"member\":\"no-such-member\"}",
                ),
                codes::UNKNOWN_MEMBER,
            ),
        ));
        checks.push(check(
            "malformed_request_code",
            expect_code(
                client.call_raw("{\"op\":\"explode\""),
                codes::MALFORMED_REQUEST,
            ),
        ));
        checks.push(check(
            "unknown_embedding_code",
            expect_code(
                client.call_raw(&format!(
                    "{{\"op\":\"predict\",\"request_id\":5001,\"member\":\"{member}\",\"needs\":[\"attention\"],\"instances\":[]}}"
                )),
                codes::UNKNOWN_EMBEDDING,
            ),
        ));
        checks.push(check(
            "survives_bad_requests",
            client
                .predict(member, &[], &refs)
                .map(|_| ())
                .map_err(|e| e.to_string()),
        ));
        checks
    }
}
