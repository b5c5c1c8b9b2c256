//! Collision detection on the plain `BL` channel.
//!
//! A set of vertices wish to beep in the same round. On a channel with no
//! collision detectors nobody can tell one beeping neighbour from three,
//! so the round is stretched into `k` two-slot phases: each wisher flips a
//! fresh fair bit per phase, beeps in the sub-slot the bit selects, and
//! listens in the other. A wisher that hears anything while listening has
//! proof of a second wisher nearby; a non-wisher needs beeps in *both*
//! sub-slots of a single phase to be sure two distinct neighbours wished.
//! Each colliding pair escapes detection in one phase only by flipping
//! equal bits, so `k` phases miss with probability at most `2⁻ᵏ`.

use crate::channel::{CapabilityFault, ModelSpec, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::engine::{run, Automaton, RunResult};
use crate::graph::Graph;
use crate::rng::{Draw, SlotRng};
use crate::trace::Trace;

use super::ProtocolError;

/// One vertex of the collision-detection protocol. Wishers beep once per
/// phase in a randomly selected sub-slot; everyone accumulates a sticky
/// collision flag and reports it after `k` phases.
#[derive(Clone, Debug)]
pub struct CollisionAutomaton {
    wisher: bool,
    phases: u32,
    phase: u32,
    sub: u8,
    /// The wisher's sub-slot choice for the current phase.
    bit: bool,
    /// Non-wisher: whether sub-slot 0 of the current phase carried a beep.
    heard_first: bool,
    collision: bool,
}

impl CollisionAutomaton {
    pub fn new(wisher: bool, phases: u32) -> Self {
        assert!(phases >= 1, "detection needs at least one phase");
        CollisionAutomaton {
            wisher,
            phases,
            phase: 0,
            sub: 0,
            bit: false,
            heard_first: false,
            collision: false,
        }
    }

    pub fn collision(&self) -> bool {
        self.collision
    }
}

impl Automaton for CollisionAutomaton {
    fn slots_per_phase(&self) -> u64 {
        2
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        if self.sub == 0 && self.wisher {
            self.bit = rng.bit();
        }
        if self.wisher && (self.sub == 1) == self.bit {
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
        if self.wisher {
            // Hearing anything in the listened sub-slot proves another
            // wisher within one hop.
            if matches!(feedback, SlotFeedback::Listened(_)) && feedback.heard_any()? {
                self.collision = true;
            }
        } else {
            let heard = feedback.heard_any()?;
            if self.sub == 0 {
                self.heard_first = heard;
            } else if self.heard_first && heard {
                // Beeps in both sub-slots of one phase: a wisher occupies
                // exactly one, so there must be two distinct wishers.
                self.collision = true;
            }
        }
        if self.sub == 1 {
            self.phase += 1;
        }
        self.sub = (self.sub + 1) % 2;
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        (self.phase >= self.phases).then_some(self.collision as u64)
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_bool(self.wisher)
            .write_u64(self.phase as u64)
            .write_u8(self.sub)
            .write_bool(self.bit)
            .write_bool(self.heard_first)
            .write_bool(self.collision);
        h.finish()
    }
}

/// Run `k` detection phases on `g` with the given beep wishers; returns the
/// trace and the per-vertex collision flags (0/1 payload). The run always
/// takes exactly `2k` slots.
pub fn detect_collision_bl(
    g: &Graph,
    wishers: &[usize],
    k: u32,
    seed: u64,
) -> Result<(Trace, RunResult), ProtocolError> {
    if k == 0 {
        return Err(ProtocolError::ZeroPhases);
    }
    let n = g.vertex_count();
    let mut is_wisher = vec![false; n];
    for &v in wishers {
        if v >= n {
            return Err(ProtocolError::WisherOutOfRange { v, n });
        }
        is_wisher[v] = true;
    }
    let nodes = is_wisher
        .into_iter()
        .map(|w| CollisionAutomaton::new(w, k))
        .collect();
    Ok(run(g, nodes, ModelSpec::BL, seed, 2 * k as u64)?)
}
