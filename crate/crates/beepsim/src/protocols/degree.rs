//! Degree computation on `B_cd·L_cd`, and the same protocol carried to
//! plain `B·L` behind the virtual-slot adapter.
//!
//! A phase has five slots. The first three mirror the two-hop colouring:
//! candidates beep, peripheral collisions are relayed back, and "I heard a
//! beep" is relayed outward. The win check moves to slot 4: a candidate
//! whose bid was clean *announces* its win with a beep there and becomes
//! passive. Because no two vertices of a closed neighbourhood can win the
//! same phase, every neighbour hears that announcement unambiguously and
//! adds one to its count. Slot 5 is the usual local-termination beep; a
//! passive vertex hearing silence there has counted every neighbour and
//! switches off with its degree as the verdict.
//!
//! The win flag is recomputed from this phase's evidence every time and
//! all per-phase scratch is cleared at the top of the phase, so a stale
//! candidacy can never leak an extra win announcement into a later phase.
//!
//! Only slot 1 needs collision detection; the other four get by on plain
//! beeps. [`degree_bl`] therefore expands just that slot into `2k`
//! physical sub-slots and runs the whole protocol on a `B·L` channel,
//! turning the Las Vegas protocol into a Monte Carlo one: signatures that
//! happen to collide can hide a collision, so the returned assignment is
//! checked and the verdict reported rather than assumed.

use crate::channel::{CapabilityFault, Hearing, ModelSpec, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::emulation::{Emulatable, EmulationParams, Signature, VirtualSlotAdapter};
use crate::engine::{run, run_uniform, Automaton, Outcome, RunResult};
use crate::graph::Graph;
use crate::oracle::{check_degrees, Verdict};
use crate::rng::SlotRng;
use crate::trace::Trace;

use super::{heard_if_listening, BeepProbability, ProtocolError};

/// Lifecycle of one vertex: `Passive` vertices have announced their win
/// and keep counting neighbours; `Off` vertices are done.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum DegreeState {
    Active,
    Passive,
    Off,
}

/// One vertex of the degree-computation protocol.
#[derive(Clone, Debug)]
pub struct DegreeAutomaton {
    state: DegreeState,
    p: BeepProbability,
    deg: u64,
    candidate: bool,
    ic1: bool,
    h1_any: bool,
    pc1: bool,
    heard2: bool,
    heard3: bool,
    winner: bool,
    sub: u8,
}

impl Default for DegreeAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

impl DegreeAutomaton {
    pub fn new() -> Self {
        DegreeAutomaton {
            state: DegreeState::Active,
            p: BeepProbability::new(),
            deg: 0,
            candidate: false,
            ic1: false,
            h1_any: false,
            pc1: false,
            heard2: false,
            heard3: false,
            winner: false,
            sub: 0,
        }
    }

    pub fn state(&self) -> DegreeState {
        self.state
    }

    pub fn p_exponent(&self) -> u32 {
        self.p.exponent()
    }

    pub fn degree_count(&self) -> u64 {
        self.deg
    }
}

impl Automaton for DegreeAutomaton {
    fn slots_per_phase(&self) -> u64 {
        5
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        let beep = match self.sub {
            0 => {
                // Clear every piece of per-phase scratch, the win flag
                // included, so nothing from an old phase can resurface.
                self.candidate = false;
                self.ic1 = false;
                self.h1_any = false;
                self.pc1 = false;
                self.heard2 = false;
                self.heard3 = false;
                self.winner = false;
                if self.state == DegreeState::Active {
                    self.candidate = self.p.draw(rng);
                }
                self.candidate
            }
            1 => self.pc1 && self.state != DegreeState::Off,
            2 => self.h1_any && self.state != DegreeState::Off,
            3 => {
                self.winner = self.state == DegreeState::Active
                    && self.candidate
                    && !self.ic1
                    && !self.heard2;
                self.winner
            }
            _ => self.state == DegreeState::Active,
        };
        if beep {
            SlotIntent::Beep
        } else {
            SlotIntent::Listen
        }
    }

    fn absorb(
        &mut self,
        feedback: &SlotFeedback,
        _rng: &mut SlotRng,
    ) -> Result<(), CapabilityFault> {
        match self.sub {
            0 => {
                if self.state != DegreeState::Off {
                    if self.candidate {
                        self.ic1 = feedback.internal_collision()?;
                    } else {
                        let h = feedback.heard_detail()?;
                        self.h1_any = h != Hearing::Silence;
                        self.pc1 = h == Hearing::TwoOrMore;
                    }
                }
            }
            1 => {
                if self.state != DegreeState::Off {
                    self.heard2 = heard_if_listening(feedback)?;
                }
            }
            2 => {
                self.heard3 = heard_if_listening(feedback)?;
            }
            3 => {
                if self.winner {
                    self.state = DegreeState::Passive;
                }
                // Every vertex still counting hears at most one win
                // announcement per phase (two winners can never share a
                // neighbour), so a heard beep is exactly one new edge.
                if self.state != DegreeState::Off
                    && matches!(feedback, SlotFeedback::Listened(_))
                    && feedback.heard_any()?
                {
                    self.deg += 1;
                }
                // The fresh winner has already left `Active` and keeps
                // its probability as-is.
                if self.state == DegreeState::Active {
                    self.p.adjust(self.candidate, self.h1_any || self.heard3);
                }
            }
            _ => {
                if self.state == DegreeState::Passive && !feedback.heard_any()? {
                    self.state = DegreeState::Off;
                }
            }
        }
        self.sub = (self.sub + 1) % 5;
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        (self.state == DegreeState::Off).then_some(self.deg)
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u8(self.state as u8)
            .write_u64(self.p.exponent() as u64)
            .write_u64(self.deg)
            .write_bool(self.candidate)
            .write_bool(self.ic1)
            .write_bool(self.h1_any)
            .write_bool(self.pc1)
            .write_bool(self.heard2)
            .write_bool(self.heard3)
            .write_bool(self.winner)
            .write_u8(self.sub);
        h.finish()
    }
}

impl Emulatable for DegreeAutomaton {
    fn needs_detection(&self, slot_in_phase: u64) -> bool {
        // Only the candidate slot consults collision detectors; relays,
        // win announcements and the termination beep are plain beeps.
        slot_in_phase == 0
    }
}

/// Compute every vertex's degree on a `B_cd·L_cd` channel. Las Vegas: the
/// counts are exact in every terminating run.
pub fn degree_bcdlcd(
    g: &Graph,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), ProtocolError> {
    Ok(run_uniform(g, &DegreeAutomaton::new(), ModelSpec::BCD_LCD, seed, slot_budget)?)
}

fn checked_degrees(g: &Graph, result: &RunResult) -> Option<Verdict> {
    (result.outcome == Outcome::Terminated).then(|| {
        check_degrees(g, &result.payload).expect("terminated runs carry complete payloads")
    })
}

/// Run the degree protocol on a plain `B·L` channel, emulating collision
/// detection with fresh random signatures of length `params.k`. Monte
/// Carlo: the verdict says whether this run's counts are actually right
/// (`None` while the budget ran out first).
pub fn degree_bl(
    g: &Graph,
    params: EmulationParams,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult, Option<Verdict>), ProtocolError> {
    let nodes: Vec<VirtualSlotAdapter<DegreeAutomaton>> = (0..g.vertex_count())
        .map(|_| VirtualSlotAdapter::new(DegreeAutomaton::new(), params))
        .collect();
    let (trace, result) = run(g, nodes, ModelSpec::BL, seed, slot_budget)?;
    let verdict = checked_degrees(g, &result);
    Ok((trace, result, verdict))
}

/// Like [`degree_bl`] but with one caller-chosen signature per vertex, so
/// the effect of specific signature patterns can be pinned down.
pub fn degree_bl_with_signatures(
    g: &Graph,
    signatures: &[Signature],
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult, Option<Verdict>), ProtocolError> {
    if signatures.len() != g.vertex_count() {
        return Err(ProtocolError::SignatureCountMismatch {
            expected: g.vertex_count(),
            got: signatures.len(),
        });
    }
    if signatures.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(ProtocolError::MixedSignatureLengths);
    }
    let nodes: Vec<VirtualSlotAdapter<DegreeAutomaton>> = signatures
        .iter()
        .map(|s| VirtualSlotAdapter::with_signature(DegreeAutomaton::new(), s.clone()))
        .collect();
    let (trace, result) = run(g, nodes, ModelSpec::BL, seed, slot_budget)?;
    let verdict = checked_degrees(g, &result);
    Ok((trace, result, verdict))
}
