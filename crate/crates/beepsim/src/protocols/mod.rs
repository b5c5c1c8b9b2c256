//! The per-vertex beeping protocols.
//!
//! Five protocol families, one per file, all built on the same vocabulary:
//!
//! - [`collision`]: detect nearby simultaneous beep wishes on the plain
//!   `BL` channel by scattering each wish over two slots.
//! - [`colour`]: greedy neighbourhood colouring on `B_cd·L`, no knowledge
//!   of the graph required.
//! - [`colour_bounded`]: colouring with a known degree bound `K`, using a
//!   palette of `K+1` colours and a cyclic colour cursor.
//! - [`two_hop`]: colouring proper at distance two on `B_cd·L_cd`.
//! - [`degree`]: degree counting on `B_cd·L_cd`, plus the plain-`BL`
//!   variant that buys its collision detection from the emulation layer.
//!
//! The adaptive protocols share one control knob: a per-vertex beeping
//! probability `p = 2⁻ᵉ` ([`BeepProbability`]) that cools down (halves)
//! under contention and warms up (doubles, capped at `1/2`) in silence.
//! Every phase moves the exponent by exactly one step, which the test
//! suites check as an invariant.

pub mod collision;
pub mod colour;
pub mod colour_bounded;
pub mod degree;
pub mod two_hop;

pub use collision::{detect_collision_bl, CollisionAutomaton};
pub use colour::{colour_bcdl, ColourAutomaton, ColourState};
pub use colour_bounded::{
    colour_bcdl_bounded, cycle_envelope, default_bounded_budget, BoundedColourAutomaton,
    BoundedState, Variant,
};
pub use degree::{
    degree_bcdlcd, degree_bl, degree_bl_with_signatures, DegreeAutomaton, DegreeState,
};
pub use two_hop::{two_hop_colour_bcdlcd, TwoHopAutomaton, TwoHopState};

use thiserror::Error;

use crate::channel::{CapabilityFault, SlotFeedback};
use crate::emulation::ceil_log2;
use crate::engine::EngineError;
use crate::rng::{Draw, SlotRng};

/// Ways a protocol run request can be malformed or fail mid-run.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("ε must lie strictly between 0 and 1, got {0}")]
    EpsilonOutOfRange(f64),
    #[error("collision detection needs at least one phase")]
    ZeroPhases,
    #[error("wisher {v} out of range for a graph on {n} vertices")]
    WisherOutOfRange { v: usize, n: usize },
    #[error("{got} signatures supplied for a graph on {expected} vertices")]
    SignatureCountMismatch { expected: usize, got: usize },
    #[error("signatures must all share one length")]
    MixedSignatureLengths,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// How to choose the phase count `k` for collision detection, trading slots
/// against the probability of missing a collision.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum KPolicy {
    /// Miss probability at one fixed vertex at most `ε`.
    PerVertex { eps: f64 },
    /// Miss probability at one fixed vertex at most `1/n²` — small enough
    /// to union-bound over a whole n-vertex graph.
    WhpLocal { n: usize },
    /// Miss probability anywhere in an n-vertex graph at most `ε`.
    PerGraph { n: usize, eps: f64 },
}

/// Phase count for [`detect_collision_bl`] under `policy`:
/// `⌈log₂(1/ε)⌉+1`, `⌈2·log₂n⌉+1`, or `⌈log₂(n/ε)⌉+1` respectively.
pub fn k_for(policy: KPolicy) -> Result<u32, ProtocolError> {
    let check = |eps: f64| {
        if eps > 0.0 && eps < 1.0 {
            Ok(eps)
        } else {
            Err(ProtocolError::EpsilonOutOfRange(eps))
        }
    };
    Ok(match policy {
        KPolicy::PerVertex { eps } => ceil_log2(1.0 / check(eps)?) + 1,
        KPolicy::WhpLocal { n } => {
            assert!(n >= 1, "graphs have at least one vertex");
            ceil_log2((n as f64) * (n as f64)) + 1
        }
        KPolicy::PerGraph { n, eps } => {
            assert!(n >= 1, "graphs have at least one vertex");
            ceil_log2(n as f64 / check(eps)?) + 1
        }
    })
}

/// Per-vertex beeping probability `p = 2⁻ᵉ`, kept as the exponent so all
/// draws stay exact. The exponent never drops below 1: `p` is capped at
/// `1/2`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BeepProbability {
    exponent: u32,
}

impl Default for BeepProbability {
    fn default() -> Self {
        Self::new()
    }
}

impl BeepProbability {
    /// Start at `p = 1/2`.
    pub fn new() -> Self {
        BeepProbability { exponent: 1 }
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// One Bernoulli(p) draw.
    pub fn draw(&self, rng: &mut SlotRng) -> bool {
        rng.bernoulli_pow2(self.exponent)
    }

    /// End-of-phase adjustment: a quiet bystander — not a candidate, heard
    /// no beep — doubles `p` (capped at `1/2`); everyone else halves it.
    pub fn adjust(&mut self, candidate: bool, heard_beep: bool) {
        if !candidate && !heard_beep {
            if self.exponent > 1 {
                self.exponent -= 1;
            }
        } else {
            self.exponent += 1;
        }
    }
}

/// Coarse hearing for a vertex that might have beeped this slot: beepers
/// hear nothing, listeners report whether any neighbour beeped.
pub(crate) fn heard_if_listening(feedback: &SlotFeedback) -> Result<bool, CapabilityFault> {
    if matches!(feedback, SlotFeedback::Listened(_)) {
        feedback.heard_any()
    } else {
        Ok(false)
    }
}
