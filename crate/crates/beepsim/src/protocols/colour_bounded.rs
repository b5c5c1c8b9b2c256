//! Colouring with at most `K + 1` colours on `B_cd·L`, given a bound
//! `K` on the maximum degree.
//!
//! Every vertex keeps a palette of the colours `0..=K` it could still
//! take and a counter that sweeps through `0..=K`, one colour per phase,
//! so at any instant all vertices agree on the colour under consideration.
//! When the counter sits on a colour still in its palette, an active
//! vertex bids for it with probability `1/(2m)`; a bid that suffers no
//! collision wins, and the winner announces the claim in a second slot so
//! neighbours strike that colour from their palettes. A vertex always has
//! a colour left to bid for: at most `deg(v) ≤ K` colours are ever struck
//! out of its `K + 1`.
//!
//! The two variants differ only in the denominator `m`: `Basic` uses the
//! current palette size, `Modified` freezes the size at the start of each
//! sweep, which keeps the bid probability stable for a whole cycle.

use std::fmt;
use std::str::FromStr;

use crate::channel::{CapabilityFault, ModelSpec, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::engine::{run_uniform, Automaton, RunResult};
use crate::graph::Graph;
use crate::rng::{Draw, SlotRng};
use crate::trace::Trace;

use super::ProtocolError;

/// Choice of bid denominator.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    /// `1/(2m)` with `m` the palette size right now.
    Basic,
    /// `1/(2m)` with `m` the palette size at the start of the sweep.
    Modified,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Basic => "basic",
            Variant::Modified => "modified",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Variant::Basic),
            "modified" => Ok(Variant::Modified),
            other => Err(format!("unknown variant '{other}' (expected basic|modified)")),
        }
    }
}

/// A vertex is `Active` until it wins a colour, then `Inactive` forever.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum BoundedState {
    Active,
    Inactive,
}

/// One vertex of the bounded-palette colouring protocol.
#[derive(Clone, Debug)]
pub struct BoundedColourAutomaton {
    state: BoundedState,
    palette: Vec<bool>,
    palette_len: usize,
    counter: u64,
    colour: Option<u64>,
    variant: Variant,
    m_cycle: usize,
    won: bool,
    beeped1: bool,
    sub: u8,
}

impl BoundedColourAutomaton {
    /// A fresh vertex with palette `{0, ..., degree_bound}`.
    pub fn new(degree_bound: usize, variant: Variant) -> Self {
        let size = degree_bound + 1;
        BoundedColourAutomaton {
            state: BoundedState::Active,
            palette: vec![true; size],
            palette_len: size,
            counter: 0,
            colour: None,
            variant,
            m_cycle: size,
            won: false,
            beeped1: false,
            sub: 0,
        }
    }

    pub fn state(&self) -> BoundedState {
        self.state
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn palette_len(&self) -> usize {
        self.palette_len
    }

    pub fn palette_holds(&self, colour: u64) -> bool {
        self.palette.get(colour as usize).copied().unwrap_or(false)
    }

    pub fn colour(&self) -> Option<u64> {
        self.colour
    }

    fn strike(&mut self, colour: u64) {
        let c = colour as usize;
        if self.palette[c] {
            self.palette[c] = false;
            self.palette_len -= 1;
        }
    }
}

impl Automaton for BoundedColourAutomaton {
    fn slots_per_phase(&self) -> u64 {
        2
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        let beep = match self.sub {
            0 => {
                self.won = false;
                self.beeped1 = false;
                if self.state == BoundedState::Active {
                    if self.counter == 0 {
                        self.m_cycle = self.palette_len;
                    }
                    if self.palette[self.counter as usize] {
                        let m = match self.variant {
                            Variant::Basic => self.palette_len,
                            Variant::Modified => self.m_cycle,
                        };
                        self.beeped1 = rng.below(2 * m as u64) == 0;
                    }
                }
                self.beeped1
            }
            _ => self.won,
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
                if self.beeped1 {
                    self.won = !feedback.internal_collision()?;
                }
            }
            _ => {
                if self.won {
                    self.colour = Some(self.counter);
                    self.state = BoundedState::Inactive;
                } else if self.state == BoundedState::Active && feedback.heard_any()? {
                    // A neighbour claimed this colour.
                    self.strike(self.counter);
                }
                self.counter = (self.counter + 1) % self.palette.len() as u64;
            }
        }
        self.sub = (self.sub + 1) % 2;
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        match self.state {
            BoundedState::Inactive => self.colour,
            BoundedState::Active => None,
        }
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u8(self.state as u8).write_u64(self.counter);
        for &held in &self.palette {
            h.write_bool(held);
        }
        h.write_u64(self.colour.map_or(u64::MAX, |c| c))
            .write_bool(self.won)
            .write_bool(self.beeped1)
            .write_u8(self.sub);
        h.finish()
    }
}

/// Expected number of sweeps through the palette before every vertex has
/// a colour, with generous constants: `⌈10·(ln n + ln(max(K,2))²)⌉`.
pub fn cycle_envelope(n: usize, degree_bound: usize) -> u64 {
    let n = n.max(1) as f64;
    let k = degree_bound.max(2) as f64;
    (10.0 * (n.ln() + k.ln() * k.ln())).ceil().max(1.0) as u64
}

/// Default slot budget: 20 envelopes of `K + 1` two-slot phases each.
pub fn default_bounded_budget(n: usize, degree_bound: usize) -> u64 {
    20 * cycle_envelope(n, degree_bound) * (degree_bound as u64 + 1) * 2
}

/// Colour `g` with at most `degree_bound + 1` colours on a `B_cd·L`
/// channel. `degree_bound` must be at least the maximum degree of `g`;
/// otherwise palettes can run dry and the run never terminates.
pub fn colour_bcdl_bounded(
    g: &Graph,
    degree_bound: usize,
    variant: Variant,
    seed: u64,
    slot_budget: u64,
) -> Result<(Trace, RunResult), ProtocolError> {
    Ok(run_uniform(
        g,
        &BoundedColourAutomaton::new(degree_bound, variant),
        ModelSpec::BCD_L,
        seed,
        slot_budget,
    )?)
}
