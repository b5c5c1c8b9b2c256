//! Two-hop colouring on `B_cd·L_cd`: vertices at distance one *or* two
//! always end with different colours.
//!
//! A phase has four slots. Candidates beep in slot 1 exactly as in the
//! one-hop protocol. Slot 2 extends the conflict check to distance two: a
//! vertex that heard two or more distinct beeps in slot 1 relays that
//! fact, so any candidate hearing the relay knows some vertex two hops
//! away bid in the same phase and stands down. Slot 3 relays "I heard a
//! beep" the other way, letting candidates' two-hop neighbours feed the
//! probability update even though the candidates themselves heard
//! nothing. Slot 4 is the local-termination beep: a coloured vertex
//! hearing silence there has no active vertex left nearby and switches
//! off.
//!
//! The relays in slots 2 and 3 are driven purely by what was heard in
//! slot 1 — coloured vertices keep relaying for their still-active
//! neighbourhood until they switch off.

use crate::channel::{CapabilityFault, Hearing, ModelSpec, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::engine::{run_uniform, Automaton, RunResult};
use crate::graph::Graph;
use crate::rng::SlotRng;
use crate::trace::Trace;

use super::{heard_if_listening, BeepProbability, ProtocolError};

/// Lifecycle of one vertex: colour first, then switch `Off` once the
/// two-hop neighbourhood has quietened down.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum TwoHopState {
    Active,
    Coloured,
    Off,
}

/// One vertex of the two-hop colouring protocol.
#[derive(Clone, Debug)]
pub struct TwoHopAutomaton {
    state: TwoHopState,
    p: BeepProbability,
    colour: u64,
    candidate: bool,
    ic1: bool,
    h1_any: bool,
    pc1: bool,
    heard2: bool,
    heard3: bool,
    sub: u8,
}

impl Default for TwoHopAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

impl TwoHopAutomaton {
    pub fn new() -> Self {
        TwoHopAutomaton {
            state: TwoHopState::Active,
            p: BeepProbability::new(),
            colour: 0,
            candidate: false,
            ic1: false,
            h1_any: false,
            pc1: false,
            heard2: false,
            heard3: false,
            sub: 0,
        }
    }

    pub fn state(&self) -> TwoHopState {
        self.state
    }

    pub fn p_exponent(&self) -> u32 {
        self.p.exponent()
    }

    pub fn colour(&self) -> u64 {
        self.colour
    }
}

impl Automaton for TwoHopAutomaton {
    fn slots_per_phase(&self) -> u64 {
        4
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        let beep = match self.sub {
            0 => {
                self.candidate = false;
                self.ic1 = false;
                self.h1_any = false;
                self.pc1 = false;
                self.heard2 = false;
                self.heard3 = false;
                if self.state == TwoHopState::Active {
                    self.colour += 1;
                    self.candidate = self.p.draw(rng);
                }
                self.candidate
            }
            // Relay a peripheral collision to the candidates that caused it.
            1 => self.pc1 && self.state != TwoHopState::Off,
            // Relay "some neighbour bid" back out to two-hop distance.
            2 => self.h1_any && self.state != TwoHopState::Off,
            // Local-termination beep.
            _ => self.state == TwoHopState::Active,
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
                if self.state != TwoHopState::Off {
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
                if self.state != TwoHopState::Off {
                    self.heard2 = heard_if_listening(feedback)?;
                }
                // A candidate survives only a completely clean bid: no
                // neighbour beeped with it and no two-hop vertex did either.
                if self.state == TwoHopState::Active
                    && self.candidate
                    && !self.ic1
                    && !self.heard2
                {
                    self.state = TwoHopState::Coloured;
                }
            }
            2 => {
                self.heard3 = heard_if_listening(feedback)?;
                if self.state == TwoHopState::Active {
                    // Contention is visible either directly (slot 1) or via
                    // the slot-3 relay from two hops away.
                    self.p.adjust(self.candidate, self.h1_any || self.heard3);
                }
            }
            _ => {
                if self.state == TwoHopState::Coloured && !feedback.heard_any()? {
                    self.state = TwoHopState::Off;
                }
            }
        }
        self.sub = (self.sub + 1) % 4;
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        (self.state == TwoHopState::Off).then_some(self.colour)
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u8(self.state as u8)
            .write_u64(self.p.exponent() as u64)
            .write_u64(self.colour)
            .write_bool(self.candidate)
            .write_bool(self.ic1)
            .write_bool(self.h1_any)
            .write_bool(self.pc1)
            .write_bool(self.heard2)
            .write_bool(self.heard3)
            .write_u8(self.sub);
        h.finish()
    }
}

/// Two-hop colour `g` on a `B_cd·L_cd` channel. On termination the
/// payload is a proper colouring of the square of `g`.
pub fn two_hop_colour_bcdlcd(
    g: &Graph,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), ProtocolError> {
    Ok(run_uniform(g, &TwoHopAutomaton::new(), ModelSpec::BCD_LCD, seed, slot_budget)?)
}
