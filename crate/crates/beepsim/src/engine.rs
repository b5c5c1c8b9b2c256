//! Synchronous execution of anonymous vertex automata.
//!
//! The engine owns the round structure: in every slot it asks each
//! automaton for an intent, resolves the slot through the channel, and
//! hands each automaton its own feedback. Automata see *nothing else* — no
//! identity, no topology, no neighbour states — which the [`Automaton`]
//! trait enforces by construction: the only inputs a vertex ever receives
//! are its own feedback values and a private random stream.
//!
//! Randomness is split per `(seed, vertex, slot)`, so a run is a pure
//! function of the graph, the automaton, the model, the seed, and the slot
//! budget. Budgets are enforced at phase granularity: a phase either runs
//! in full or not at all, keeping `slots_used = phases_used ×
//! slots_per_phase` as a hard invariant of every result.

use thiserror::Error;

use crate::channel::{
    resolve_slot, CapabilityFault, ChannelError, ModelSpec, SlotFeedback, SlotIntent,
};
use crate::graph::Graph;
use crate::rng::{slot_stream, SlotRng};
use crate::trace::{SlotRecord, Trace, VirtualPos};

/// A vertex automaton: anonymous, randomized, synchronous.
///
/// The contract mirrors what a physical device could do: choose to beep or
/// listen, then update internal state from the slot's feedback. Reading
/// feedback the current model does not provide is a [`CapabilityFault`],
/// which the engine escalates into a run-level error.
pub trait Automaton {
    /// Fixed number of slots in one phase of this protocol.
    fn slots_per_phase(&self) -> u64;

    /// Decide this slot's action. `rng` is this vertex's private stream
    /// for this slot; the same stream is passed to [`Automaton::absorb`].
    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent;

    /// Update state from this slot's feedback.
    fn absorb(&mut self, feedback: &SlotFeedback, rng: &mut SlotRng)
        -> Result<(), CapabilityFault>;

    /// Final output once the vertex has terminated locally, else `None`.
    /// The engine stops as soon as every vertex reports a verdict.
    fn verdict(&self) -> Option<u64>;

    /// Stable digest of the current state (for traces and determinism
    /// checks). Must depend only on protocol state.
    fn digest(&self) -> u64;

    /// Where the current physical slot sits inside an emulated virtual
    /// slot, if this automaton is an emulation adapter.
    fn virtual_pos(&self) -> Option<VirtualPos> {
        None
    }
}

/// How a run ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outcome {
    /// Every vertex reported a verdict.
    Terminated,
    /// The next phase would not fit in the slot budget.
    BudgetExhausted,
}

/// Result of one run.
#[derive(Clone, PartialEq, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub slots_used: u64,
    pub phases_used: u64,
    /// Per-vertex verdicts; `None` where a vertex had not terminated.
    pub payload: Vec<Option<u64>>,
}

/// Whether to keep per-slot records (they cost memory on long runs).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceMode {
    Full,
    Off,
}

/// Live view of one executed slot, handed to observers after absorption.
pub struct SlotView<'a, A> {
    pub slot: u64,
    pub phase: u64,
    pub slot_in_phase: u64,
    pub intents: &'a [SlotIntent],
    pub feedback: &'a [SlotFeedback],
    pub nodes: &'a [A],
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("slot budget must be at least 1")]
    ZeroBudget,
    #[error("{got} automatons supplied for a graph on {expected} vertices")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("slot {slot}, vertex {vertex}: {fault}")]
    Capability {
        slot: u64,
        vertex: usize,
        fault: CapabilityFault,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Run one automaton per vertex until global termination or budget
/// exhaustion. Returns the (possibly empty) trace and the run result.
pub fn run<A: Automaton>(
    g: &Graph,
    nodes: Vec<A>,
    model: ModelSpec,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), EngineError> {
    run_with(g, nodes, model, seed, slot_budget, TraceMode::Full, |_| {})
}

/// [`run`] with one identical automaton cloned onto every vertex — the
/// common case for anonymous protocols.
pub fn run_uniform<A: Automaton + Clone>(
    g: &Graph,
    prototype: &A,
    model: ModelSpec,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), EngineError> {
    run(
        g,
        vec![prototype.clone(); g.vertex_count()],
        model,
        seed,
        slot_budget,
    )
}

/// Full-control entry point: choose trace retention and watch each slot.
pub fn run_with<A: Automaton, F: FnMut(&SlotView<A>)>(
    g: &Graph,
    mut nodes: Vec<A>,
    model: ModelSpec,
    seed: u64,
    slot_budget: u64,
    trace_mode: TraceMode,
    mut observer: F,
) -> Result<(Trace, RunResult), EngineError> {
    let n = g.vertex_count();
    if slot_budget == 0 {
        return Err(EngineError::ZeroBudget);
    }
    if nodes.len() != n {
        return Err(EngineError::NodeCountMismatch {
            expected: n,
            got: nodes.len(),
        });
    }
    let spp = nodes[0].slots_per_phase();
    debug_assert!(spp >= 1);
    debug_assert!(nodes.iter().all(|a| a.slots_per_phase() == spp));

    let mut trace = Trace::default();
    let mut intents = vec![SlotIntent::Listen; n];
    let mut rngs: Vec<SlotRng> = Vec::with_capacity(n);
    let mut slot: u64 = 0;

    let outcome = loop {
        if nodes.iter().all(|a| a.verdict().is_some()) {
            break Outcome::Terminated;
        }
        if slot % spp == 0 && slot + spp > slot_budget {
            break Outcome::BudgetExhausted;
        }

        rngs.clear();
        rngs.extend((0..n).map(|v| slot_stream(seed, v as u64, slot)));
        for (v, node) in nodes.iter_mut().enumerate() {
            intents[v] = node.intent(&mut rngs[v]);
        }
        // The adapter sets up its window position during `intent`, so the
        // annotation for this slot is read between intent and absorb.
        let virtual_pos = nodes[0].virtual_pos();
        let feedback = resolve_slot(g, &intents, model)?;
        for (v, node) in nodes.iter_mut().enumerate() {
            node.absorb(&feedback[v], &mut rngs[v])
                .map_err(|fault| EngineError::Capability {
                    slot,
                    vertex: v,
                    fault,
                })?;
        }

        if trace_mode == TraceMode::Full {
            trace.records.push(SlotRecord {
                slot,
                intents: intents.clone(),
                feedback: feedback.clone(),
                digests: nodes.iter().map(|a| a.digest()).collect(),
                virtual_pos,
            });
        }
        observer(&SlotView {
            slot,
            phase: slot / spp,
            slot_in_phase: slot % spp,
            intents: &intents,
            feedback: &feedback,
            nodes: &nodes,
        });
        slot += 1;
    };

    debug_assert_eq!(slot % spp, 0, "runs stop only at phase boundaries");
    Ok((
        trace,
        RunResult {
            outcome,
            slots_used: slot,
            phases_used: slot / spp,
            payload: nodes.iter().map(|a| a.verdict()).collect(),
        },
    ))
}

/// Which phase envelope applies to a protocol.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BudgetKind {
    /// Neighbourhood colouring: `76·log₂n + 112·Δ` phases.
    Colouring,
    /// Two-hop colouring: `76·log₂n + 112·Δ²` phases.
    TwoHopColouring,
    /// Degree computation: same envelope as two-hop colouring.
    DegreeComputation,
}

/// High-probability phase envelope for the adaptive protocols, used both
/// as the statistical yardstick in reports and as the base of default slot
/// budgets. Requires `n >= 1`.
pub fn phase_budget(kind: BudgetKind, n: usize, max_degree: usize) -> u64 {
    assert!(n >= 1, "graphs have at least one vertex");
    let log_n = (n as f64).log2();
    let delta = max_degree as f64;
    let phases = match kind {
        BudgetKind::Colouring => 76.0 * log_n + 112.0 * delta,
        BudgetKind::TwoHopColouring | BudgetKind::DegreeComputation => {
            76.0 * log_n + 112.0 * delta * delta
        }
    };
    phases.ceil() as u64
}

/// Default slot budget: twenty envelopes' worth of phases. The envelope is
/// floored at one phase so degenerate single-vertex graphs (where the
/// formula evaluates to zero) still get a positive budget.
pub fn default_slot_budget(
    kind: BudgetKind,
    n: usize,
    max_degree: usize,
    slots_per_phase: u64,
) -> u64 {
    20 * phase_budget(kind, n, max_degree).max(1) * slots_per_phase
}
