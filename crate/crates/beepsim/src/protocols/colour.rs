//! Neighbourhood colouring on `B_cd·L` with no knowledge of the graph.
//!
//! Every vertex counts phases in its `colour` register while it is still
//! active, and in each phase volunteers as a candidate with probability
//! `p`. Candidates beep; a candidate whose beep collides with nothing
//! keeps the current count as its colour. A neighbour can therefore never
//! take the same value: it either beeped in the same phase (both collided,
//! neither won) or wins in a different phase with a different count.
//!
//! The probability `p` self-tunes: a vertex that neither beeped nor heard
//! a beep doubles it (capped at `1/2`), everyone else halves it — cooling
//! contention down locally until single candidates get through.
//!
//! The protocol is Las Vegas: the colouring is proper in every terminating
//! run, and only the running time is random. An optional second slot per
//! phase lets a coloured vertex detect when its whole neighbourhood has
//! finished (active vertices beep there; hearing silence means nobody is
//! left) at the cost of doubling the slot count; it is off by default.

use crate::channel::{CapabilityFault, ModelSpec, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::engine::{run_uniform, Automaton, RunResult};
use crate::graph::Graph;
use crate::rng::SlotRng;
use crate::trace::Trace;

use super::{BeepProbability, ProtocolError};

/// Lifecycle of one vertex: `Done` is reachable only with the optional
/// termination slot, where a coloured vertex waits for neighbourhood
/// silence.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ColourState {
    Active,
    Coloured,
    Done,
}

/// One vertex of the colouring protocol.
#[derive(Clone, Debug)]
pub struct ColourAutomaton {
    state: ColourState,
    p: BeepProbability,
    colour: u64,
    candidate: bool,
    termination_slot: bool,
    sub: u8,
}

impl Default for ColourAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

impl ColourAutomaton {
    pub fn new() -> Self {
        ColourAutomaton {
            state: ColourState::Active,
            p: BeepProbability::new(),
            colour: 0,
            candidate: false,
            termination_slot: false,
            sub: 0,
        }
    }

    /// Add the local-termination slot: active vertices beep there, and a
    /// coloured vertex hearing silence knows its neighbourhood is done.
    pub fn with_termination_slot() -> Self {
        ColourAutomaton { termination_slot: true, ..Self::new() }
    }

    pub fn state(&self) -> ColourState {
        self.state
    }

    pub fn p_exponent(&self) -> u32 {
        self.p.exponent()
    }

    pub fn colour(&self) -> u64 {
        self.colour
    }
}

impl Automaton for ColourAutomaton {
    fn slots_per_phase(&self) -> u64 {
        1 + self.termination_slot as u64
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        let beep = match self.sub {
            0 => {
                self.candidate = false;
                if self.state == ColourState::Active {
                    self.colour += 1;
                    self.candidate = self.p.draw(rng);
                }
                self.candidate
            }
            _ => self.state == ColourState::Active,
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
                if self.state == ColourState::Active {
                    let heard = if self.candidate {
                        if !feedback.internal_collision()? {
                            self.state = ColourState::Coloured;
                        }
                        false // a beeper hears nothing; `candidate` drives the update
                    } else {
                        feedback.heard_any()?
                    };
                    // The fresh winner keeps its probability as-is.
                    if self.state == ColourState::Active {
                        self.p.adjust(self.candidate, heard);
                    }
                }
            }
            _ => {
                if self.state == ColourState::Coloured && !feedback.heard_any()? {
                    self.state = ColourState::Done;
                }
            }
        }
        self.sub = (self.sub + 1) % self.slots_per_phase() as u8;
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        let finished = if self.termination_slot {
            self.state == ColourState::Done
        } else {
            self.state >= ColourState::Coloured
        };
        finished.then_some(self.colour)
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u8(self.state as u8)
            .write_u64(self.p.exponent() as u64)
            .write_u64(self.colour)
            .write_bool(self.candidate)
            .write_u8(self.sub);
        h.finish()
    }
}

/// Colour `g` on a `B_cd·L` channel. The payload holds each vertex's
/// colour; on termination the assignment is proper on `g`.
pub fn colour_bcdl(
    g: &Graph,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), ProtocolError> {
    Ok(run_uniform(g, &ColourAutomaton::new(), ModelSpec::BCD_L, seed, slot_budget)?)
}
