//! Slot resolution: who hears what under which capability model.
//!
//! In one synchronous slot every vertex either beeps or listens. What a
//! vertex learns is decided entirely by its closed neighbourhood and by the
//! capability model in force:
//!
//! - beeper side `B`: a beeper learns nothing;
//! - beeper side `B_cd`: a beeper learns whether at least one *neighbour*
//!   beeped in the same slot (an internal collision);
//! - listener side `L`: a listener learns only beep-or-silence;
//! - listener side `L_cd`: a listener distinguishes silence, exactly one
//!   beeping neighbour, and two or more beeping neighbours.
//!
//! Feedback values are explicit about what the model did *not* provide
//! ([`BeepEcho::Unavailable`], coarse [`Hearing::AtLeastOne`]); the typed
//! accessors on [`SlotFeedback`] turn an out-of-model read into a
//! [`CapabilityFault`] instead of a panic or a silently wrong default.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::Graph;

/// Beeper-side capability: plain, or detecting collisions on its own beep.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BeeperCap {
    B,
    BCd,
}

/// Listener-side capability: coarse hearing, or multiplicity detection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ListenerCap {
    L,
    LCd,
}

/// One of the four beeping models.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModelSpec {
    pub beeper: BeeperCap,
    pub listener: ListenerCap,
}

impl ModelSpec {
    pub const BL: ModelSpec = ModelSpec {
        beeper: BeeperCap::B,
        listener: ListenerCap::L,
    };
    pub const BCD_L: ModelSpec = ModelSpec {
        beeper: BeeperCap::BCd,
        listener: ListenerCap::L,
    };
    pub const B_LCD: ModelSpec = ModelSpec {
        beeper: BeeperCap::B,
        listener: ListenerCap::LCd,
    };
    pub const BCD_LCD: ModelSpec = ModelSpec {
        beeper: BeeperCap::BCd,
        listener: ListenerCap::LCd,
    };

    pub const ALL: [ModelSpec; 4] = [Self::BL, Self::BCD_L, Self::B_LCD, Self::BCD_LCD];

    /// Canonical lowercase name used on the command line and in traces.
    pub fn name(&self) -> &'static str {
        match (self.beeper, self.listener) {
            (BeeperCap::B, ListenerCap::L) => "bl",
            (BeeperCap::BCd, ListenerCap::L) => "bcdl",
            (BeeperCap::B, ListenerCap::LCd) => "blcd",
            (BeeperCap::BCd, ListenerCap::LCd) => "bcdlcd",
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bl" => Ok(Self::BL),
            "bcdl" => Ok(Self::BCD_L),
            "blcd" => Ok(Self::B_LCD),
            "bcdlcd" => Ok(Self::BCD_LCD),
            other => Err(ChannelError::UnknownModel(other.to_string())),
        }
    }
}

/// A vertex's action in one slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SlotIntent {
    Beep,
    Listen,
}

/// What a beeper learns about its own slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BeepEcho {
    /// Model has no beeper-side detector (`B`).
    Unavailable,
    /// Beeped with no beeping neighbour.
    Quiet,
    /// Beeped while at least one neighbour beeped too.
    Collision,
}

/// What a listener learns about its neighbourhood.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Hearing {
    /// No neighbour beeped.
    Silence,
    /// At least one neighbour beeped; coarse `L` cannot say how many.
    AtLeastOne,
    /// Exactly one neighbour beeped (`L_cd` only).
    ExactlyOne,
    /// Two or more neighbours beeped (`L_cd` only).
    TwoOrMore,
}

/// Per-vertex feedback for one slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SlotFeedback {
    Beeped(BeepEcho),
    Listened(Hearing),
}

/// A protocol asked the channel for information its model does not carry.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum CapabilityFault {
    #[error("internal-collision feedback is unavailable under beeper capability B")]
    InternalCollisionUnavailable,
    #[error("hearing multiplicity is unavailable under listener capability L")]
    MultiplicityUnavailable,
    #[error("beeper feedback was read by a vertex that listened this slot")]
    NotABeeper,
    #[error("listener feedback was read by a vertex that beeped this slot")]
    NotAListener,
}

impl SlotFeedback {
    /// Whether this vertex's own beep collided with a neighbour's beep.
    /// Requires that the vertex beeped and the model is `B_cd`-sided.
    pub fn internal_collision(&self) -> Result<bool, CapabilityFault> {
        match self {
            SlotFeedback::Beeped(BeepEcho::Quiet) => Ok(false),
            SlotFeedback::Beeped(BeepEcho::Collision) => Ok(true),
            SlotFeedback::Beeped(BeepEcho::Unavailable) => {
                Err(CapabilityFault::InternalCollisionUnavailable)
            }
            SlotFeedback::Listened(_) => Err(CapabilityFault::NotABeeper),
        }
    }

    /// Whether at least one neighbour beeped. Valid for any listener.
    pub fn heard_any(&self) -> Result<bool, CapabilityFault> {
        match self {
            SlotFeedback::Listened(Hearing::Silence) => Ok(false),
            SlotFeedback::Listened(_) => Ok(true),
            SlotFeedback::Beeped(_) => Err(CapabilityFault::NotAListener),
        }
    }

    /// Detailed hearing (silence / one / two-or-more). Requires `L_cd`.
    pub fn heard_detail(&self) -> Result<Hearing, CapabilityFault> {
        match self {
            SlotFeedback::Listened(Hearing::AtLeastOne) => {
                Err(CapabilityFault::MultiplicityUnavailable)
            }
            SlotFeedback::Listened(h) => Ok(*h),
            SlotFeedback::Beeped(_) => Err(CapabilityFault::NotAListener),
        }
    }

    /// Compact code used in trace files: `B`/`B0`/`B1` for beepers,
    /// `L0`/`L+`/`L1`/`L2` for listeners.
    pub fn code(&self) -> &'static str {
        match self {
            SlotFeedback::Beeped(BeepEcho::Unavailable) => "B",
            SlotFeedback::Beeped(BeepEcho::Quiet) => "B0",
            SlotFeedback::Beeped(BeepEcho::Collision) => "B1",
            SlotFeedback::Listened(Hearing::Silence) => "L0",
            SlotFeedback::Listened(Hearing::AtLeastOne) => "L+",
            SlotFeedback::Listened(Hearing::ExactlyOne) => "L1",
            SlotFeedback::Listened(Hearing::TwoOrMore) => "L2",
        }
    }

    /// Inverse of [`SlotFeedback::code`].
    pub fn from_code(code: &str) -> Option<SlotFeedback> {
        Some(match code {
            "B" => SlotFeedback::Beeped(BeepEcho::Unavailable),
            "B0" => SlotFeedback::Beeped(BeepEcho::Quiet),
            "B1" => SlotFeedback::Beeped(BeepEcho::Collision),
            "L0" => SlotFeedback::Listened(Hearing::Silence),
            "L+" => SlotFeedback::Listened(Hearing::AtLeastOne),
            "L1" => SlotFeedback::Listened(Hearing::ExactlyOne),
            "L2" => SlotFeedback::Listened(Hearing::TwoOrMore),
            _ => return None,
        })
    }
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("intent vector has {got} entries for a graph on {expected} vertices")]
    IntentCountMismatch { expected: usize, got: usize },
    #[error("vertex {v} out of range for a graph on {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("unknown model `{0}`; expected bl, bcdl, blcd, or bcdlcd")]
    UnknownModel(String),
}

/// Resolve one slot: given every vertex's intent, produce every vertex's
/// feedback under `model`. Feedback at `v` depends only on `intents[v]` and
/// the intents of `v`'s neighbours.
pub fn resolve_slot(
    g: &Graph,
    intents: &[SlotIntent],
    model: ModelSpec,
) -> Result<Vec<SlotFeedback>, ChannelError> {
    let n = g.vertex_count();
    if intents.len() != n {
        return Err(ChannelError::IntentCountMismatch {
            expected: n,
            got: intents.len(),
        });
    }
    // Beeping-neighbour counts by scatter over the beepers' adjacency lists.
    let mut heard = vec![0usize; n];
    for (u, &intent) in intents.iter().enumerate() {
        if intent == SlotIntent::Beep {
            for &w in g.neighbours(u) {
                heard[w] += 1;
            }
        }
    }
    Ok(intents
        .iter()
        .zip(&heard)
        .map(|(&intent, &b)| match intent {
            SlotIntent::Beep => SlotFeedback::Beeped(match model.beeper {
                BeeperCap::B => BeepEcho::Unavailable,
                BeeperCap::BCd if b >= 1 => BeepEcho::Collision,
                BeeperCap::BCd => BeepEcho::Quiet,
            }),
            SlotIntent::Listen => SlotFeedback::Listened(match (model.listener, b) {
                (_, 0) => Hearing::Silence,
                (ListenerCap::L, _) => Hearing::AtLeastOne,
                (ListenerCap::LCd, 1) => Hearing::ExactlyOne,
                (ListenerCap::LCd, _) => Hearing::TwoOrMore,
            }),
        })
        .collect())
}

/// Model-independent collision facts at one vertex for one slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CollisionTruth {
    /// `v` beeped and at least one neighbour beeped in the same slot.
    pub internal: bool,
    /// At least two distinct neighbours of `v` beeped in the same slot.
    pub peripheral: bool,
}

impl CollisionTruth {
    pub fn any(&self) -> bool {
        self.internal || self.peripheral
    }
}

/// Ground truth for collision statements at `v`, computed by a direct scan
/// of the normalized edge list — deliberately not sharing the scatter pass
/// used by [`resolve_slot`], so tests can pit one against the other.
pub fn collision_ground_truth(
    g: &Graph,
    intents: &[SlotIntent],
    v: usize,
) -> Result<CollisionTruth, ChannelError> {
    let n = g.vertex_count();
    if intents.len() != n {
        return Err(ChannelError::IntentCountMismatch {
            expected: n,
            got: intents.len(),
        });
    }
    if v >= n {
        return Err(ChannelError::VertexOutOfRange { v, n });
    }
    let mut beeping_neighbours = 0usize;
    for &(a, b) in g.edges() {
        let other = match (a == v, b == v) {
            (true, _) => b,
            (_, true) => a,
            _ => continue,
        };
        if intents[other] == SlotIntent::Beep {
            beeping_neighbours += 1;
        }
    }
    Ok(CollisionTruth {
        internal: intents[v] == SlotIntent::Beep && beeping_neighbours >= 1,
        peripheral: beeping_neighbours >= 2,
    })
}
