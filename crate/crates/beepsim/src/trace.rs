//! Replayable run traces and their JSONL encoding.
//!
//! A trace records, for every executed slot, the full intent vector, the
//! full feedback vector, and a per-vertex state digest. Together with the
//! run metadata (graph descriptor, model, seed, protocol) this is enough to
//! re-resolve every slot offline and re-check the final output against the
//! graph oracles — which is exactly what `beepsim verify` does.
//!
//! The on-disk format is JSON Lines:
//!
//! ```text
//! {"meta":{"protocol":"colour","graph":"ring:8","model":"bcdl","seed":7,"payload":"colour"}}
//! {"slot":0,"intents":[1,0,...],"feedback":["B0","L1",...],"digests":["9f3a...",...]}
//! ...
//! {"result":{"outcome":"terminated","slots":34,"phases":34,"payload":[3,1,...]}}
//! ```
//!
//! Feedback uses the compact codes from [`SlotFeedback::code`]; digests are
//! fixed-width hex so files are byte-stable across platforms.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::channel::{ModelSpec, SlotFeedback, SlotIntent};
use crate::engine::{Outcome, RunResult};

/// Position of a physical slot within an emulated (virtual) slot, recorded
/// by the emulation adapter so traces show the expansion structure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct VirtualPos {
    /// Index of the virtual slot this physical slot belongs to.
    pub index: u64,
    /// For expanded detection slots: (signature bit, sub-slot 0|1).
    /// `None` for pass-through slots.
    pub window: Option<(u64, u8)>,
}

/// Everything observable about one executed slot.
#[derive(Clone, PartialEq, Debug)]
pub struct SlotRecord {
    pub slot: u64,
    pub intents: Vec<SlotIntent>,
    pub feedback: Vec<SlotFeedback>,
    /// Stable per-vertex state digest after absorbing this slot's feedback.
    pub digests: Vec<u64>,
    pub virtual_pos: Option<VirtualPos>,
}

/// Slot-by-slot record of one run.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Trace {
    pub records: Vec<SlotRecord>,
}

impl Trace {
    pub fn slot_count(&self) -> usize {
        self.records.len()
    }
}

/// The kind of value vertices output, deciding which oracle applies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PayloadKind {
    /// Boolean collision flags (0/1).
    Flag,
    /// Colours checked for properness.
    Colour,
    /// Colours checked for properness at distance two.
    TwoHopColour,
    /// Claimed vertex degrees.
    Degree,
}

impl PayloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayloadKind::Flag => "flag",
            PayloadKind::Colour => "colour",
            PayloadKind::TwoHopColour => "two-hop-colour",
            PayloadKind::Degree => "degree",
        }
    }
}

impl FromStr for PayloadKind {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flag" => Ok(PayloadKind::Flag),
            "colour" => Ok(PayloadKind::Colour),
            "two-hop-colour" => Ok(PayloadKind::TwoHopColour),
            "degree" => Ok(PayloadKind::Degree),
            other => Err(TraceError::Format(format!("unknown payload kind `{other}`"))),
        }
    }
}

/// Run metadata stored in the first line of a trace file.
#[derive(Clone, PartialEq, Debug)]
pub struct TraceMeta {
    pub protocol: String,
    pub graph: String,
    pub model: ModelSpec,
    pub seed: u64,
    pub payload: PayloadKind,
    /// For collision-detection runs: which vertices wished to beep.
    pub wishers: Option<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace format: {0}")]
    Format(String),
    #[error("writing trace: {0}")]
    Io(#[from] std::io::Error),
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn intent_bit(intent: SlotIntent) -> u64 {
    match intent {
        SlotIntent::Beep => 1,
        SlotIntent::Listen => 0,
    }
}

fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Terminated => "terminated",
        Outcome::BudgetExhausted => "budget_exhausted",
    }
}

fn outcome_from_name(name: &str) -> Result<Outcome, TraceError> {
    match name {
        "terminated" => Ok(Outcome::Terminated),
        "budget_exhausted" => Ok(Outcome::BudgetExhausted),
        other => Err(TraceError::Format(format!("unknown outcome `{other}`"))),
    }
}

/// Serialize a complete run as JSONL text.
pub fn to_jsonl(meta: &TraceMeta, trace: &Trace, result: &RunResult) -> String {
    let mut out = String::new();
    let mut meta_obj = Map::new();
    meta_obj.insert("protocol".into(), json!(meta.protocol));
    meta_obj.insert("graph".into(), json!(meta.graph));
    meta_obj.insert("model".into(), json!(meta.model.name()));
    meta_obj.insert("seed".into(), json!(meta.seed));
    meta_obj.insert("payload".into(), json!(meta.payload.name()));
    if let Some(wishers) = &meta.wishers {
        meta_obj.insert("wishers".into(), json!(wishers));
    }
    out.push_str(&Value::Object(Map::from_iter([("meta".to_string(), Value::Object(meta_obj))])).to_string());
    out.push('\n');

    for rec in &trace.records {
        let mut obj = Map::new();
        obj.insert("slot".into(), json!(rec.slot));
        obj.insert(
            "intents".into(),
            json!(rec.intents.iter().map(|&i| intent_bit(i)).collect::<Vec<_>>()),
        );
        obj.insert(
            "feedback".into(),
            json!(rec.feedback.iter().map(|f| f.code()).collect::<Vec<_>>()),
        );
        obj.insert(
            "digests".into(),
            json!(rec.digests.iter().map(|d| format!("{d:016x}")).collect::<Vec<_>>()),
        );
        if let Some(vp) = rec.virtual_pos {
            let mut v = Map::new();
            v.insert("index".into(), json!(vp.index));
            if let Some((bit, sub)) = vp.window {
                v.insert("bit".into(), json!(bit));
                v.insert("sub".into(), json!(sub));
            }
            obj.insert("virtual".into(), Value::Object(v));
        }
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }

    let payload: Vec<Value> = result
        .payload
        .iter()
        .map(|p| p.map_or(Value::Null, |v| json!(v)))
        .collect();
    let result_obj = json!({
        "result": {
            "outcome": outcome_name(result.outcome),
            "slots": result.slots_used,
            "phases": result.phases_used,
            "payload": payload,
        }
    });
    out.push_str(&result_obj.to_string());
    out.push('\n');
    out
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, TraceError> {
    obj.get(key)
        .ok_or_else(|| TraceError::Format(format!("missing field `{key}`")))
}

fn as_u64(value: &Value, what: &str) -> Result<u64, TraceError> {
    value
        .as_u64()
        .ok_or_else(|| TraceError::Format(format!("{what} is not an unsigned integer")))
}

/// Parse JSONL text produced by [`to_jsonl`].
pub fn from_jsonl(text: &str) -> Result<(TraceMeta, Trace, RunResult), TraceError> {
    let mut meta: Option<TraceMeta> = None;
    let mut records = Vec::new();
    let mut result: Option<RunResult> = None;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if result.is_some() {
            return Err(TraceError::Format(format!(
                "line {line_no}: data after the result line"
            )));
        }
        let value: Value = serde_json::from_str(line).map_err(|source| TraceError::Json {
            line: line_no,
            source,
        })?;
        let obj = value
            .as_object()
            .ok_or_else(|| TraceError::Format(format!("line {line_no}: not an object")))?;

        if let Some(m) = obj.get("meta") {
            let m = m
                .as_object()
                .ok_or_else(|| TraceError::Format("meta is not an object".into()))?;
            let model_name = field(m, "model")?
                .as_str()
                .ok_or_else(|| TraceError::Format("model is not a string".into()))?;
            let model = model_name
                .parse::<ModelSpec>()
                .map_err(|e| TraceError::Format(e.to_string()))?;
            let payload = field(m, "payload")?
                .as_str()
                .ok_or_else(|| TraceError::Format("payload kind is not a string".into()))?
                .parse::<PayloadKind>()?;
            let wishers = match m.get("wishers") {
                None => None,
                Some(w) => Some(
                    w.as_array()
                        .ok_or_else(|| TraceError::Format("wishers is not an array".into()))?
                        .iter()
                        .map(|v| as_u64(v, "wisher").map(|x| x as usize))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
            };
            meta = Some(TraceMeta {
                protocol: field(m, "protocol")?
                    .as_str()
                    .ok_or_else(|| TraceError::Format("protocol is not a string".into()))?
                    .to_string(),
                graph: field(m, "graph")?
                    .as_str()
                    .ok_or_else(|| TraceError::Format("graph is not a string".into()))?
                    .to_string(),
                model,
                seed: as_u64(field(m, "seed")?, "seed")?,
                payload,
                wishers,
            });
        } else if let Some(r) = obj.get("result") {
            let r = r
                .as_object()
                .ok_or_else(|| TraceError::Format("result is not an object".into()))?;
            let outcome = outcome_from_name(
                field(r, "outcome")?
                    .as_str()
                    .ok_or_else(|| TraceError::Format("outcome is not a string".into()))?,
            )?;
            let payload = field(r, "payload")?
                .as_array()
                .ok_or_else(|| TraceError::Format("payload is not an array".into()))?
                .iter()
                .map(|v| match v {
                    Value::Null => Ok(None),
                    other => as_u64(other, "payload entry").map(Some),
                })
                .collect::<Result<Vec<_>, _>>()?;
            result = Some(RunResult {
                outcome,
                slots_used: as_u64(field(r, "slots")?, "slots")?,
                phases_used: as_u64(field(r, "phases")?, "phases")?,
                payload,
            });
        } else {
            let slot = as_u64(field(obj, "slot")?, "slot")?;
            let intents = field(obj, "intents")?
                .as_array()
                .ok_or_else(|| TraceError::Format("intents is not an array".into()))?
                .iter()
                .map(|v| {
                    Ok(match as_u64(v, "intent")? {
                        0 => SlotIntent::Listen,
                        1 => SlotIntent::Beep,
                        other => {
                            return Err(TraceError::Format(format!("intent bit {other}")))
                        }
                    })
                })
                .collect::<Result<Vec<_>, TraceError>>()?;
            let feedback = field(obj, "feedback")?
                .as_array()
                .ok_or_else(|| TraceError::Format("feedback is not an array".into()))?
                .iter()
                .map(|v| {
                    let code = v
                        .as_str()
                        .ok_or_else(|| TraceError::Format("feedback code not a string".into()))?;
                    SlotFeedback::from_code(code).ok_or_else(|| {
                        TraceError::Format(format!("unknown feedback code `{code}`"))
                    })
                })
                .collect::<Result<Vec<_>, TraceError>>()?;
            let digests = field(obj, "digests")?
                .as_array()
                .ok_or_else(|| TraceError::Format("digests is not an array".into()))?
                .iter()
                .map(|v| {
                    let s = v
                        .as_str()
                        .ok_or_else(|| TraceError::Format("digest is not a string".into()))?;
                    u64::from_str_radix(s, 16)
                        .map_err(|_| TraceError::Format(format!("bad digest `{s}`")))
                })
                .collect::<Result<Vec<_>, TraceError>>()?;
            let virtual_pos = match obj.get("virtual") {
                None => None,
                Some(v) => {
                    let v = v
                        .as_object()
                        .ok_or_else(|| TraceError::Format("virtual is not an object".into()))?;
                    let index = as_u64(field(v, "index")?, "virtual index")?;
                    let window = match (v.get("bit"), v.get("sub")) {
                        (Some(bit), Some(sub)) => Some((
                            as_u64(bit, "virtual bit")?,
                            as_u64(sub, "virtual sub-slot")? as u8,
                        )),
                        (None, None) => None,
                        _ => {
                            return Err(TraceError::Format(
                                "virtual window needs both bit and sub".into(),
                            ))
                        }
                    };
                    Some(VirtualPos { index, window })
                }
            };
            records.push(SlotRecord {
                slot,
                intents,
                feedback,
                digests,
                virtual_pos,
            });
        }
    }

    let meta = meta.ok_or_else(|| TraceError::Format("missing meta line".into()))?;
    let result = result.ok_or_else(|| TraceError::Format("missing result line".into()))?;
    Ok((meta, Trace { records }, result))
}
