//! Simulator for distributed algorithms in beeping networks.
//!
//! A beeping network is an undirected graph of anonymous processors that
//! communicate in synchronous time slots. In every slot each vertex either
//! *beeps* or *listens*; a listener learns only whether some neighbour beeped
//! (and, in stronger model variants, whether it was exactly one or more than
//! one), while a beeper learns nothing unless it has a collision detector of
//! its own. This crate models the four capability combinations, runs
//! randomized vertex automata against them, and checks the outputs against
//! exact graph oracles.
//!
//! The crate is organised in layers:
//!
//! - [`graph`]: immutable undirected graphs, generators, and metrics.
//! - [`channel`]: slot resolution — who hears what under which model.
//! - [`engine`]: the synchronous scheduler, per-vertex deterministic RNG
//!   streams, slot budgets, and replayable traces.
//! - [`protocols`]: the vertex automata (collision detection, colouring,
//!   bounded-palette colouring, two-hop colouring, degree computation).
//! - [`emulation`]: random-signature emulation of collision detectors on
//!   top of the weakest model, and an adapter that runs an automaton written
//!   for the strongest model over the emulated channel.
//! - [`oracle`]: exact correctness checks with explicit violation witnesses.
//! - [`harness`]: batch experiment runner, statistics, CSV/JSONL reports,
//!   and trace verification, shared by the `beepsim` binary.

pub mod channel;
pub mod digest;
pub mod emulation;
pub mod engine;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod protocols;
pub mod rng;
pub mod trace;
