//! Batch experiment runner: configures (graph, protocol, model), executes
//! seeded trial batches in parallel, aggregates the results against the
//! phase envelopes, and emits machine-readable reports.
//!
//! Reproducibility is the organizing principle. Trial `i` always runs with
//! seed `base_seed + i` (wrapping), every trial is fully deterministic
//! from its seed, and the report is a deterministic fold over trials in
//! index order no matter how many worker threads raced to produce them —
//! so re-running a spec yields byte-identical CSV rows.
//!
//! Safety and speed are judged separately. A Las Vegas protocol whose
//! output ever fails its oracle is a *safety violation* and poisons the
//! batch; running past the high-probability phase envelope is merely
//! counted and reported, because the underlying guarantee is
//! probabilistic. Monte Carlo runs (collision detection, the emulated
//! degree protocol) are allowed to miss — those misses feed the empirical
//! error rate instead.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{resolve_slot, ChannelError, ModelSpec};
use crate::digest::payload_digest;
use crate::emulation::EmulationParams;
use crate::engine::{
    default_slot_budget, phase_budget, BudgetKind, Outcome, RunResult,
};
use crate::graph::{Graph, GraphError};
use crate::oracle::{check_degrees, is_proper_colouring, is_two_hop_colouring, OracleError};
use crate::protocols::{
    colour_bcdl, colour_bcdl_bounded, cycle_envelope, default_bounded_budget,
    degree_bcdlcd, degree_bl, detect_collision_bl, two_hop_colour_bcdlcd,
    ProtocolError, Variant,
};
use crate::trace::{PayloadKind, Trace, TraceError, TraceMeta};

/// Which protocol a batch runs, with its concrete parameters.
#[derive(Clone, Debug)]
pub enum ProtocolSpec {
    /// Collision detection among `wishers` (`None` = every vertex wishes)
    /// over `k` two-slot phases.
    Collide { wishers: Option<Vec<usize>>, k: u32 },
    /// Neighbourhood colouring with unbounded palette.
    Colour,
    /// Colouring restricted to `{0..=degree_bound}`.
    ColourBounded { degree_bound: usize, variant: Variant },
    /// Colouring proper at distance two.
    TwoHop,
    /// Degree computation with native collision detection.
    Degree,
    /// Degree computation on plain `B·L` via `k`-bit signatures.
    DegreeBl { k: u32 },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::Collide { .. } => "collide",
            ProtocolSpec::Colour => "colour",
            ProtocolSpec::ColourBounded { .. } => "colour-k",
            ProtocolSpec::TwoHop => "two-hop",
            ProtocolSpec::Degree => "degree",
            ProtocolSpec::DegreeBl { .. } => "degree-bl",
        }
    }

    /// The channel model the protocol is written for; batches on any
    /// other model are rejected up front.
    pub fn required_model(&self) -> ModelSpec {
        match self {
            ProtocolSpec::Collide { .. } | ProtocolSpec::DegreeBl { .. } => ModelSpec::BL,
            ProtocolSpec::Colour | ProtocolSpec::ColourBounded { .. } => ModelSpec::BCD_L,
            ProtocolSpec::TwoHop | ProtocolSpec::Degree => ModelSpec::BCD_LCD,
        }
    }

    pub fn payload_kind(&self) -> PayloadKind {
        match self {
            ProtocolSpec::Collide { .. } => PayloadKind::Flag,
            ProtocolSpec::Colour | ProtocolSpec::ColourBounded { .. } => PayloadKind::Colour,
            ProtocolSpec::TwoHop => PayloadKind::TwoHopColour,
            ProtocolSpec::Degree | ProtocolSpec::DegreeBl { .. } => PayloadKind::Degree,
        }
    }

    /// Las Vegas protocols promise a correct payload in every terminating
    /// run; the rest are Monte Carlo and may miss.
    pub fn las_vegas(&self) -> bool {
        matches!(
            self,
            ProtocolSpec::Colour
                | ProtocolSpec::ColourBounded { .. }
                | ProtocolSpec::TwoHop
                | ProtocolSpec::Degree
        )
    }

    /// The wisher set as an explicit list (`Collide` only).
    fn resolved_wishers(&self, n: usize) -> Option<Vec<usize>> {
        match self {
            ProtocolSpec::Collide { wishers, .. } => {
                Some(wishers.clone().unwrap_or_else(|| (0..n).collect()))
            }
            _ => None,
        }
    }
}

/// A full batch description: everything needed to reproduce the run.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    /// Graph descriptor, e.g. `ring:64` or `gnp:64:0.1:7`.
    pub graph: String,
    pub protocol: ProtocolSpec,
    pub model: ModelSpec,
    pub trials: u64,
    /// Trial `i` runs with seed `base_seed + i` (wrapping).
    pub base_seed: u64,
    /// Slot budget per trial; `None` picks the protocol's default.
    pub slot_budget: Option<u64>,
}

impl ExperimentSpec {
    pub fn seed_for(&self, trial: u64) -> u64 {
        self.base_seed.wrapping_add(trial)
    }

    /// Phase envelope the batch is judged against.
    pub fn envelope_phases(&self, g: &Graph) -> u64 {
        let (n, delta) = (g.vertex_count(), g.max_degree());
        match &self.protocol {
            ProtocolSpec::Collide { k, .. } => *k as u64,
            ProtocolSpec::Colour => phase_budget(BudgetKind::Colouring, n, delta),
            ProtocolSpec::ColourBounded { degree_bound, .. } => {
                cycle_envelope(n, *degree_bound) * (*degree_bound as u64 + 1)
            }
            ProtocolSpec::TwoHop => phase_budget(BudgetKind::TwoHopColouring, n, delta),
            ProtocolSpec::Degree | ProtocolSpec::DegreeBl { .. } => {
                phase_budget(BudgetKind::DegreeComputation, n, delta)
            }
        }
    }

    /// The slot budget actually used: the override, or the default of
    /// twenty envelopes' worth of whole phases.
    pub fn effective_budget(&self, g: &Graph) -> u64 {
        if let Some(b) = self.slot_budget {
            return b;
        }
        let (n, delta) = (g.vertex_count(), g.max_degree());
        match &self.protocol {
            ProtocolSpec::Collide { k, .. } => 2 * *k as u64,
            ProtocolSpec::Colour => default_slot_budget(BudgetKind::Colouring, n, delta, 1),
            ProtocolSpec::ColourBounded { degree_bound, .. } => {
                default_bounded_budget(n, *degree_bound)
            }
            ProtocolSpec::TwoHop => {
                default_slot_budget(BudgetKind::TwoHopColouring, n, delta, 4)
            }
            ProtocolSpec::Degree => {
                default_slot_budget(BudgetKind::DegreeComputation, n, delta, 5)
            }
            ProtocolSpec::DegreeBl { k } => {
                default_slot_budget(BudgetKind::DegreeComputation, n, delta, 2 * *k as u64 + 4)
            }
        }
    }
}

/// One trial's outcome, exactly the row written to the CSV.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub phases: u64,
    pub slots: u64,
    /// `false` only on a safety violation: a Las Vegas payload failing
    /// its oracle, or a collision flag raised with no collision present.
    pub safety_ok: bool,
    pub payload_digest: u64,
}

impl TrialRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:016x}",
            self.trial,
            self.seed,
            outcome_name(self.outcome),
            self.phases,
            self.slots,
            self.safety_ok,
            self.payload_digest
        )
    }
}

pub fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Terminated => "terminated",
        Outcome::BudgetExhausted => "budget_exhausted",
    }
}

/// Aggregated batch results. Every aggregate is an exact function of
/// `rows`; nothing here depends on execution order.
#[derive(Clone, Debug)]
pub struct BatchReport {
    pub spec_name: &'static str,
    pub graph: String,
    pub n: usize,
    pub max_degree: usize,
    pub rows: Vec<TrialRow>,
    /// Fraction of trials that terminated within the budget.
    pub termination_rate: f64,
    /// Las Vegas oracle failures plus unsound collision flags; any value
    /// above zero fails the batch.
    pub safety_violations: u64,
    /// Observed phase counts, nearest-rank quantiles over all trials.
    pub phase_p50: u64,
    pub phase_p95: u64,
    pub phase_max: u64,
    pub slot_p50: u64,
    pub slot_p95: u64,
    pub slot_max: u64,
    /// Terminated trials whose payload failed its oracle (for Monte Carlo
    /// protocols these are the expected misses).
    pub errors: u64,
    /// `errors` over terminated trials, with a 95% confidence interval by
    /// the normal approximation `p̂ ± 1.96·√(p̂(1−p̂)/m)`, clamped to [0,1].
    pub error_rate: f64,
    pub error_ci: (f64, f64),
    /// Phase envelope for this spec and the trials that ran past it.
    pub envelope_phases: u64,
    pub exceed_count: u64,
    /// Some protocols are also quoted with a different per-phase slot
    /// price (the two-hop colouring is sometimes priced at five slots);
    /// when set, summaries show phase quantiles at this price too.
    pub alt_slots_per_phase: Option<u64>,
}

impl BatchReport {
    pub fn exceed_fraction(&self) -> f64 {
        self.exceed_count as f64 / self.rows.len() as f64
    }

    /// The CSV body: header plus one line per trial, in trial order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("trial,seed,outcome,phases,slots,safety_ok,payload_digest\n");
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Human-readable multi-line summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} on {} (n={}, max degree {}): {} trials\n",
            self.spec_name,
            self.graph,
            self.n,
            self.max_degree,
            self.rows.len()
        );
        s.push_str(&format!(
            "  terminated {:.1}%, safety violations {}\n",
            100.0 * self.termination_rate,
            self.safety_violations
        ));
        s.push_str(&format!(
            "  phases p50/p95/max {}/{}/{} vs envelope {} (exceeded by {} trials, {:.2}%)\n",
            self.phase_p50,
            self.phase_p95,
            self.phase_max,
            self.envelope_phases,
            self.exceed_count,
            100.0 * self.exceed_fraction()
        ));
        s.push_str(&format!(
            "  slots p50/p95/max {}/{}/{}\n",
            self.slot_p50, self.slot_p95, self.slot_max
        ));
        if let Some(alt) = self.alt_slots_per_phase {
            s.push_str(&format!(
                "  (at {alt} slots per phase the quantiles price to {}/{}/{})\n",
                self.phase_p50 * alt,
                self.phase_p95 * alt,
                self.phase_max * alt
            ));
        }
        s.push_str(&format!(
            "  payload errors {} ({:.4} of terminated, 95% CI [{:.4}, {:.4}])\n",
            self.errors, self.error_rate, self.error_ci.0, self.error_ci.1
        ));
        s
    }
}

/// Fraction of trials that needed more phases than `envelope`.
pub fn compare_envelope(report: &BatchReport, envelope: u64) -> f64 {
    let over = report.rows.iter().filter(|r| r.phases > envelope).count();
    over as f64 / report.rows.len() as f64
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("building graph: {0}")]
    Graph(#[from] GraphError),
    #[error("running protocol: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("{algo} runs on the {required} model, not {got}")]
    ModelMismatch {
        algo: &'static str,
        required: ModelSpec,
        got: ModelSpec,
    },
    #[error("degree bound {bound} is below the graph's maximum degree {max_degree}")]
    DegreeBoundTooSmall { bound: usize, max_degree: usize },
    #[error("a batch needs at least one trial")]
    ZeroTrials,
    #[error("phase count k must be at least 1")]
    ZeroPhases,
    #[error("wisher {v} is outside a graph of {n} vertices")]
    WisherOutOfRange { v: usize, n: usize },
    #[error("report I/O: {0}")]
    Io(#[from] std::io::Error),
}

fn validate(spec: &ExperimentSpec, g: &Graph) -> Result<(), HarnessError> {
    if spec.trials == 0 {
        return Err(HarnessError::ZeroTrials);
    }
    let required = spec.protocol.required_model();
    if spec.model != required {
        return Err(HarnessError::ModelMismatch {
            algo: spec.protocol.name(),
            required,
            got: spec.model,
        });
    }
    match &spec.protocol {
        ProtocolSpec::Collide { wishers, k } => {
            if *k == 0 {
                return Err(HarnessError::ZeroPhases);
            }
            if let Some(ws) = wishers {
                let n = g.vertex_count();
                if let Some(&v) = ws.iter().find(|&&v| v >= n) {
                    return Err(HarnessError::WisherOutOfRange { v, n });
                }
            }
        }
        ProtocolSpec::ColourBounded { degree_bound, .. } => {
            if *degree_bound < g.max_degree() {
                return Err(HarnessError::DegreeBoundTooSmall {
                    bound: *degree_bound,
                    max_degree: g.max_degree(),
                });
            }
        }
        ProtocolSpec::DegreeBl { k } => {
            if *k == 0 {
                return Err(HarnessError::ZeroPhases);
            }
        }
        _ => {}
    }
    Ok(())
}

/// What each vertex's collision flag *should* say, given who wished:
/// a wisher detects iff some neighbour wished too; a bystander detects
/// iff at least two neighbours wished.
fn expected_collision_flags(g: &Graph, wishers: &[usize]) -> Vec<bool> {
    let n = g.vertex_count();
    let mut wishing = vec![false; n];
    for &v in wishers {
        wishing[v] = true;
    }
    (0..n)
        .map(|v| {
            let around = g.neighbours(v).iter().filter(|&&u| wishing[u]).count();
            if wishing[v] {
                around >= 1
            } else {
                around >= 2
            }
        })
        .collect()
}

struct Trial {
    result: RunResult,
    /// Whether the terminated payload passed its oracle; `None` while the
    /// budget ran out first (no claim was made).
    correct: Option<bool>,
    /// Collision flags only: no flag was invented out of thin air.
    sound: bool,
}

fn run_trial(
    g: &Graph,
    spec: &ExperimentSpec,
    seed: u64,
    budget: u64,
) -> Result<Trial, HarnessError> {
    let trial = match &spec.protocol {
        ProtocolSpec::Collide { k, .. } => {
            let wishers = spec.protocol.resolved_wishers(g.vertex_count()).unwrap();
            let (_, result) = detect_collision_bl(g, &wishers, *k, seed)?;
            let expected = expected_collision_flags(g, &wishers);
            let sound = result
                .payload
                .iter()
                .zip(&expected)
                .all(|(flag, &want)| *flag != Some(1) || want);
            let correct = (result.outcome == Outcome::Terminated).then(|| {
                result
                    .payload
                    .iter()
                    .zip(&expected)
                    .all(|(flag, &want)| *flag == Some(want as u64))
            });
            Trial { result, correct, sound }
        }
        ProtocolSpec::Colour => {
            let (_, result) = colour_bcdl(g, seed, budget)?;
            let correct = (result.outcome == Outcome::Terminated)
                .then(|| is_proper_colouring(g, &result.payload).map(|v| v.ok))
                .transpose()
                .expect("terminated runs carry complete payloads");
            Trial { result, correct, sound: true }
        }
        ProtocolSpec::ColourBounded { degree_bound, variant } => {
            let (_, result) = colour_bcdl_bounded(g, *degree_bound, *variant, seed, budget)?;
            let correct = (result.outcome == Outcome::Terminated)
                .then(|| {
                    let proper = is_proper_colouring(g, &result.payload)
                        .expect("terminated runs carry complete payloads")
                        .ok;
                    let in_palette = result
                        .payload
                        .iter()
                        .all(|c| c.unwrap() <= *degree_bound as u64);
                    proper && in_palette
                });
            Trial { result, correct, sound: true }
        }
        ProtocolSpec::TwoHop => {
            let (_, result) = two_hop_colour_bcdlcd(g, seed, budget)?;
            let correct = (result.outcome == Outcome::Terminated)
                .then(|| is_two_hop_colouring(g, &result.payload).map(|v| v.ok))
                .transpose()
                .expect("terminated runs carry complete payloads");
            Trial { result, correct, sound: true }
        }
        ProtocolSpec::Degree => {
            let (_, result) = degree_bcdlcd(g, seed, budget)?;
            let correct = (result.outcome == Outcome::Terminated)
                .then(|| check_degrees(g, &result.payload).map(|v| v.ok))
                .transpose()
                .expect("terminated runs carry complete payloads");
            Trial { result, correct, sound: true }
        }
        ProtocolSpec::DegreeBl { k } => {
            let (_, result, verdict) =
                degree_bl(g, EmulationParams::fixed(*k), seed, budget)?;
            let correct = verdict.map(|v| v.ok);
            Trial { result, correct, sound: true }
        }
    };
    Ok(trial)
}

fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    let m = sorted.len();
    let rank = (q * m as f64).ceil() as usize;
    sorted[rank.clamp(1, m) - 1]
}

/// Run every trial of `spec` (in parallel) and fold the report. Each
/// trial is deterministic from `base_seed + index`, and rows come back in
/// index order, so the report never depends on scheduling.
pub fn run_batch(spec: &ExperimentSpec) -> Result<BatchReport, HarnessError> {
    let g = Graph::from_descriptor(&spec.graph)?;
    validate(spec, &g)?;
    let budget = spec.effective_budget(&g);
    let las_vegas = spec.protocol.las_vegas();

    let trials: Vec<(u64, Trial)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let trial = run_trial(&g, spec, spec.seed_for(i), budget)?;
            Ok((i, trial))
        })
        .collect::<Result<_, HarnessError>>()?;

    let rows: Vec<TrialRow> = trials
        .iter()
        .map(|(i, t)| TrialRow {
            trial: *i,
            seed: spec.seed_for(*i),
            outcome: t.result.outcome,
            phases: t.result.phases_used,
            slots: t.result.slots_used,
            // A Las Vegas payload failing its oracle breaks the protocol's
            // promise; a Monte Carlo miss does not.
            safety_ok: t.sound && !(las_vegas && t.correct == Some(false)),
            payload_digest: payload_digest(&t.result.payload),
        })
        .collect();

    let terminated = rows
        .iter()
        .filter(|r| r.outcome == Outcome::Terminated)
        .count() as u64;
    let safety_violations = rows.iter().filter(|r| !r.safety_ok).count() as u64;
    let errors = trials
        .iter()
        .filter(|(_, t)| t.correct == Some(false))
        .count() as u64;

    let mut phases: Vec<u64> = rows.iter().map(|r| r.phases).collect();
    let mut slots: Vec<u64> = rows.iter().map(|r| r.slots).collect();
    phases.sort_unstable();
    slots.sort_unstable();

    let (error_rate, error_ci) = if terminated == 0 {
        (0.0, (0.0, 1.0))
    } else {
        let m = terminated as f64;
        let p = errors as f64 / m;
        let half = 1.96 * (p * (1.0 - p) / m).sqrt();
        (p, ((p - half).max(0.0), (p + half).min(1.0)))
    };

    let envelope_phases = spec.envelope_phases(&g);
    let exceed_count = rows.iter().filter(|r| r.phases > envelope_phases).count() as u64;

    Ok(BatchReport {
        spec_name: spec.protocol.name(),
        graph: spec.graph.clone(),
        n: g.vertex_count(),
        max_degree: g.max_degree(),
        termination_rate: terminated as f64 / rows.len() as f64,
        safety_violations,
        phase_p50: nearest_rank(&phases, 0.50),
        phase_p95: nearest_rank(&phases, 0.95),
        phase_max: *phases.last().unwrap(),
        slot_p50: nearest_rank(&slots, 0.50),
        slot_p95: nearest_rank(&slots, 0.95),
        slot_max: *slots.last().unwrap(),
        errors,
        error_rate,
        error_ci,
        envelope_phases,
        exceed_count,
        alt_slots_per_phase: match spec.protocol {
            ProtocolSpec::TwoHop => Some(5),
            _ => None,
        },
        rows,
    })
}

/// Re-run one trial of `spec` with full tracing, returning everything
/// needed to write (and later verify) a trace file.
pub fn trace_for_trial(
    spec: &ExperimentSpec,
    trial: u64,
) -> Result<(TraceMeta, Trace, RunResult), HarnessError> {
    let g = Graph::from_descriptor(&spec.graph)?;
    validate(spec, &g)?;
    let budget = spec.effective_budget(&g);
    let seed = spec.seed_for(trial);
    let (trace, result) = match &spec.protocol {
        ProtocolSpec::Collide { k, .. } => {
            let wishers = spec.protocol.resolved_wishers(g.vertex_count()).unwrap();
            detect_collision_bl(&g, &wishers, *k, seed)?
        }
        ProtocolSpec::Colour => colour_bcdl(&g, seed, budget)?,
        ProtocolSpec::ColourBounded { degree_bound, variant } => {
            colour_bcdl_bounded(&g, *degree_bound, *variant, seed, budget)?
        }
        ProtocolSpec::TwoHop => two_hop_colour_bcdlcd(&g, seed, budget)?,
        ProtocolSpec::Degree => degree_bcdlcd(&g, seed, budget)?,
        ProtocolSpec::DegreeBl { k } => {
            let (trace, result, _) = degree_bl(&g, EmulationParams::fixed(*k), seed, budget)?;
            (trace, result)
        }
    };
    let meta = TraceMeta {
        protocol: spec.protocol.name().to_string(),
        graph: spec.graph.clone(),
        model: spec.model,
        seed,
        payload: spec.protocol.payload_kind(),
        wishers: spec.protocol.resolved_wishers(g.vertex_count()),
    };
    Ok((meta, trace, result))
}

/// Replay verdict for one trace file.
#[derive(Clone, PartialEq, Debug)]
pub struct VerifySummary {
    pub slots_checked: u64,
    /// Oracle verdict on the payload (`None` while the budget ran out
    /// before termination, so no claim was made).
    pub payload_ok: Option<bool>,
    /// A payload failure the protocol's guarantees forbid.
    pub safety_violation: bool,
    /// A payload failure that random signatures permit (emulated runs).
    pub monte_carlo_miss: bool,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("reading trace: {0}")]
    Trace(#[from] TraceError),
    #[error("building graph: {0}")]
    Graph(#[from] GraphError),
    #[error("replaying channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("checking payload: {0}")]
    Oracle(#[from] OracleError),
    #[error("slot {slot}: record numbered {got}, expected {expected}")]
    SlotNumbering { slot: u64, expected: u64, got: u64 },
    #[error("slot {slot} carries {got} intents for a graph of {expected} vertices")]
    IntentWidth { slot: u64, expected: usize, got: usize },
    #[error("trace has {got} slots but the result line claims {expected}")]
    SlotCount { expected: u64, got: u64 },
    #[error("slot {slot}, vertex {vertex}: recorded feedback {got}, replay says {expected}")]
    FeedbackMismatch {
        slot: u64,
        vertex: usize,
        expected: String,
        got: String,
    },
    #[error("flag payloads need the wisher list in the trace metadata")]
    WishersMissing,
}

/// Replay a trace against an independently built channel: every slot's
/// feedback must equal `resolve_slot` of its intents, and a terminated
/// payload must satisfy the oracle for its payload kind. Channel
/// inconsistencies are hard errors; payload failures come back in the
/// summary, split into safety violations and permitted Monte Carlo
/// misses.
pub fn verify_trace(
    g: &Graph,
    meta: &TraceMeta,
    trace: &Trace,
    result: &RunResult,
) -> Result<VerifySummary, VerifyError> {
    let n = g.vertex_count();
    if result.slots_used != trace.records.len() as u64 {
        return Err(VerifyError::SlotCount {
            expected: result.slots_used,
            got: trace.records.len() as u64,
        });
    }
    for (i, record) in trace.records.iter().enumerate() {
        if record.slot != i as u64 {
            return Err(VerifyError::SlotNumbering {
                slot: i as u64,
                expected: i as u64,
                got: record.slot,
            });
        }
        if record.intents.len() != n {
            return Err(VerifyError::IntentWidth {
                slot: record.slot,
                expected: n,
                got: record.intents.len(),
            });
        }
        let replayed = resolve_slot(g, &record.intents, meta.model)?;
        for v in 0..n {
            if replayed[v] != record.feedback[v] {
                return Err(VerifyError::FeedbackMismatch {
                    slot: record.slot,
                    vertex: v,
                    expected: format!("{:?}", replayed[v]),
                    got: format!("{:?}", record.feedback[v]),
                });
            }
        }
    }

    let payload_ok = if result.outcome == Outcome::Terminated {
        Some(match meta.payload {
            PayloadKind::Flag => {
                let wishers =
                    meta.wishers.as_deref().ok_or(VerifyError::WishersMissing)?;
                let expected = expected_collision_flags(g, wishers);
                result
                    .payload
                    .iter()
                    .zip(&expected)
                    .all(|(flag, &want)| *flag != Some(1) || want)
            }
            PayloadKind::Colour => is_proper_colouring(g, &result.payload)?.ok,
            PayloadKind::TwoHopColour => is_two_hop_colouring(g, &result.payload)?.ok,
            PayloadKind::Degree => check_degrees(g, &result.payload)?.ok,
        })
    } else {
        None
    };

    // The emulated degree protocol may legitimately report wrong counts;
    // everything else promises its payload.
    let emulated = meta.protocol == "degree-bl";
    Ok(VerifySummary {
        slots_checked: trace.records.len() as u64,
        payload_ok,
        safety_violation: payload_ok == Some(false) && !emulated,
        monte_carlo_miss: payload_ok == Some(false) && emulated,
    })
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} slots replayed", self.slots_checked)?;
        match self.payload_ok {
            Some(true) => write!(f, ", payload verified"),
            Some(false) if self.monte_carlo_miss => {
                write!(f, ", payload wrong (permitted Monte Carlo miss)")
            }
            Some(false) => write!(f, ", payload VIOLATES the protocol's guarantee"),
            None => write!(f, ", no payload claim (budget exhausted)"),
        }
    }
}
