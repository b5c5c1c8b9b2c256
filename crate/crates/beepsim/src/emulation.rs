//! Buying collision detection on the plain `BL` channel with extra slots.
//!
//! A vertex that wants one slot of its protocol collision-checked spreads
//! that *virtual* slot over `k` two-slot phases. A virtual beeper draws a
//! private `k`-bit [`Signature`] once per run; in phase `i` it beeps in the
//! sub-slot selected by bit `i` and listens in the other. Two neighbouring
//! beepers whose signatures differ anywhere land in opposite sub-slots of
//! some phase and hear each other; identical signatures — probability
//! exactly `2⁻ᵏ` for a fixed pair — are the only way a collision slips by.
//! A virtual listener listens through the whole window: hearing beeps in
//! *both* sub-slots of one phase proves two distinct beeping neighbours.
//!
//! [`VirtualSlotAdapter`] packages the construction: it wraps an automaton
//! written against `B_cd`/`L_cd` feedback and presents it to the engine as
//! a plain-`BL` automaton. Virtual slots the inner automaton marks for
//! detection expand into `2k` physical slots (bit `i` occupying physical
//! sub-slots `2i` and `2i+1` of the window); unmarked slots pass through
//! physically unchanged, and the inner automaton must restrict itself to
//! plain-`BL` reads there — a detailed read in a pass-through slot surfaces
//! as a [`CapabilityFault`] through the engine.
//!
//! All vertices move through windows in lockstep: the adapter's slot
//! accounting is a pure function of the wrapped protocol's phase shape, so
//! every vertex — virtual beeper or silent bystander — agrees on where each
//! window starts and ends.

use rand_core::RngCore;
use thiserror::Error;

use crate::channel::{BeepEcho, CapabilityFault, Hearing, SlotFeedback, SlotIntent};
use crate::digest::Fnv1a;
use crate::engine::Automaton;
use crate::rng::{Draw, SlotRng};
use crate::trace::VirtualPos;

/// A private word of `k` uniformly random bits, generated once per run
/// before the first emulated slot. Bit `i` decides which sub-slot the
/// vertex beeps in during phase `i` of a detection window.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Signature {
    bits: Vec<bool>,
}

impl Signature {
    /// Draw `k` fresh uniform bits from `rng`.
    pub fn random(k: u32, rng: &mut (impl RngCore + ?Sized)) -> Signature {
        Signature { bits: (0..k).map(|_| rng.bit()).collect() }
    }

    /// Fixed bits, for diagnostics and worst-case tests.
    pub fn from_bits(bits: Vec<bool>) -> Signature {
        Signature { bits }
    }

    pub fn len(&self) -> u32 {
        self.bits.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: u32) -> bool {
        self.bits[i as usize]
    }
}

/// How many two-slot phases one emulated slot spends.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EmulationParams {
    pub k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EmulationError {
    #[error("ε must lie strictly between 0 and 1, got {0}")]
    EpsilonOutOfRange(f64),
}

/// Smallest `k` with `2^k ≥ x`, computed by exact doubling (no libm, so no
/// platform-dependent rounding at powers of two).
pub(crate) fn ceil_log2(x: f64) -> u32 {
    assert!(x.is_finite() && x > 0.0, "ceil_log2 needs a positive finite input");
    let mut k = 0u32;
    let mut pow = 1.0f64;
    while pow < x {
        pow *= 2.0;
        k += 1;
    }
    k
}

fn check_eps(eps: f64) -> Result<f64, EmulationError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(EmulationError::EpsilonOutOfRange(eps))
    }
}

impl EmulationParams {
    /// Use `k` phases per emulated slot, floored at one (a zero-phase
    /// window could never hear anything).
    pub fn fixed(k: u32) -> Self {
        EmulationParams { k: k.max(1) }
    }

    /// Every detection on an `n`-vertex graph is correct except with
    /// probability `ε`: `k = ⌈log₂(n/ε)⌉`.
    pub fn per_graph(n: usize, eps: f64) -> Result<Self, EmulationError> {
        assert!(n >= 1, "graphs have at least one vertex");
        Ok(Self::fixed(ceil_log2(n as f64 / check_eps(eps)?)))
    }

    /// Detections involving one fixed vertex are correct except with
    /// probability `ε`: `k = ⌈log₂(1/ε)⌉`.
    pub fn per_vertex(eps: f64) -> Result<Self, EmulationError> {
        Ok(Self::fixed(ceil_log2(1.0 / check_eps(eps)?)))
    }

    /// Correct everywhere with high probability: `k = ⌈2·log₂n⌉`.
    pub fn whp(n: usize) -> Self {
        assert!(n >= 1, "graphs have at least one vertex");
        Self::fixed(ceil_log2((n as f64) * (n as f64)))
    }
}

/// Beeper side of one detection window: beep in the sub-slot the signature
/// bit selects, listen in the other, and flag a collision the moment any
/// listened sub-slot carries a beep.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct BeepCdEmulation {
    collision_b: bool,
}

impl BeepCdEmulation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Action in sub-slot `sub` (0 or 1) of a phase whose signature bit is
    /// `bit`: a zero bit beeps first and listens second, a one bit the
    /// reverse.
    pub fn intent(bit: bool, sub: u8) -> SlotIntent {
        if (sub == 1) == bit {
            SlotIntent::Beep
        } else {
            SlotIntent::Listen
        }
    }

    pub fn absorb(&mut self, feedback: &SlotFeedback) -> Result<(), CapabilityFault> {
        if matches!(feedback, SlotFeedback::Listened(_)) && feedback.heard_any()? {
            self.collision_b = true;
        }
        Ok(())
    }

    /// Whether some neighbouring virtual beeper was heard: the emulated
    /// internal-collision bit.
    pub fn collision_b(&self) -> bool {
        self.collision_b
    }
}

/// Listener side of one detection window: listen in both sub-slots of every
/// phase. Beeps in both sub-slots of a single phase prove two distinct
/// beeping neighbours; any beep at all separates silence from activity.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ListenCdEmulation {
    heard_first: bool,
    collision_l: bool,
    heard_any: bool,
}

impl ListenCdEmulation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, sub: u8, feedback: &SlotFeedback) -> Result<(), CapabilityFault> {
        let heard = feedback.heard_any()?;
        self.heard_any |= heard;
        if sub == 0 {
            self.heard_first = heard;
        } else if self.heard_first && heard {
            self.collision_l = true;
        }
        Ok(())
    }

    /// Whether two distinct beeping neighbours were proven: the emulated
    /// peripheral-collision bit.
    pub fn collision_l(&self) -> bool {
        self.collision_l
    }

    /// Whether anything at all was heard during the window, needed to
    /// reconstruct silence versus a single beeper.
    pub fn heard_any(&self) -> bool {
        self.heard_any
    }
}

/// An automaton written for `B_cd`/`L_cd` feedback that can run behind
/// [`VirtualSlotAdapter`]: it declares which slots of its phase need
/// collision detection. All other slots pass through as single physical
/// slots where only plain-`BL` reads are legal.
pub trait Emulatable: Automaton {
    /// Whether virtual slot `slot_in_phase` (0-based) needs its feedback
    /// collision-checked. Must be a fixed function of the position — the
    /// slot accounting depends on it.
    fn needs_detection(&self, slot_in_phase: u64) -> bool;
}

/// Where the adapter's signature bits come from.
#[derive(Clone, Debug)]
pub enum SignatureSource {
    /// Draw fresh bits from the vertex's private stream at the first slot.
    Random,
    /// Use caller-chosen bits (forcing distinct or colliding signatures).
    Fixed(Signature),
}

#[derive(Clone, Debug)]
enum WindowRole {
    Beeper(BeepCdEmulation),
    Listener(ListenCdEmulation),
}

#[derive(Clone, Debug)]
enum Cursor {
    /// The next physical slot starts a new virtual slot.
    NextVirtual,
    /// Mid pass-through: the pending absorb closes the virtual slot.
    PassThrough,
    /// Inside a detection window, about to act at (`bit`, `sub`).
    InWindow { role: WindowRole, bit: u32, sub: u8 },
}

/// Runs a `B_cd`/`L_cd` automaton on a plain `BL` channel by expanding each
/// detection-marked virtual slot into a `2k`-slot window.
#[derive(Clone, Debug)]
pub struct VirtualSlotAdapter<A> {
    inner: A,
    k: u32,
    source: SignatureSource,
    signature: Option<Signature>,
    virtual_index: u64,
    cursor: Cursor,
}

impl<A: Emulatable> VirtualSlotAdapter<A> {
    /// Wrap `inner` with freshly drawn signatures of length `params.k`.
    pub fn new(inner: A, params: EmulationParams) -> Self {
        VirtualSlotAdapter {
            inner,
            k: params.k,
            source: SignatureSource::Random,
            signature: None,
            virtual_index: 0,
            cursor: Cursor::NextVirtual,
        }
    }

    /// Wrap `inner` with a fixed signature; `k` is the signature's length.
    pub fn with_signature(inner: A, signature: Signature) -> Self {
        assert!(!signature.is_empty(), "windows need at least one phase");
        VirtualSlotAdapter {
            inner,
            k: signature.len(),
            source: SignatureSource::Fixed(signature),
            signature: None,
            virtual_index: 0,
            cursor: Cursor::NextVirtual,
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    /// The signature in use, once the run has started.
    pub fn signature(&self) -> Option<&Signature> {
        self.signature.as_ref()
    }
}

/// Wrap `inner` for a plain-`BL` channel with random signatures.
pub fn virtual_slot_adapter<A: Emulatable>(
    inner: A,
    params: EmulationParams,
) -> VirtualSlotAdapter<A> {
    VirtualSlotAdapter::new(inner, params)
}

impl<A: Emulatable> Automaton for VirtualSlotAdapter<A> {
    fn slots_per_phase(&self) -> u64 {
        (0..self.inner.slots_per_phase())
            .map(|sip| if self.inner.needs_detection(sip) { 2 * self.k as u64 } else { 1 })
            .sum()
    }

    fn intent(&mut self, rng: &mut SlotRng) -> SlotIntent {
        // The signature must exist before any emulated slot; drawing it at
        // the very first intent keeps the draw order canonical whether or
        // not slot 0 is a detection slot.
        if self.signature.is_none() {
            self.signature = Some(match &self.source {
                SignatureSource::Random => Signature::random(self.k, rng),
                SignatureSource::Fixed(s) => s.clone(),
            });
        }
        if matches!(self.cursor, Cursor::NextVirtual) {
            let v_intent = self.inner.intent(rng);
            let sip = self.virtual_index % self.inner.slots_per_phase();
            if !self.inner.needs_detection(sip) {
                self.cursor = Cursor::PassThrough;
                return v_intent;
            }
            let role = match v_intent {
                SlotIntent::Beep => WindowRole::Beeper(BeepCdEmulation::new()),
                SlotIntent::Listen => WindowRole::Listener(ListenCdEmulation::new()),
            };
            self.cursor = Cursor::InWindow { role, bit: 0, sub: 0 };
        }
        match &self.cursor {
            Cursor::InWindow { role: WindowRole::Beeper(_), bit, sub } => {
                let sig = self.signature.as_ref().expect("signature drawn above");
                BeepCdEmulation::intent(sig.bit(*bit), *sub)
            }
            Cursor::InWindow { role: WindowRole::Listener(_), .. } => SlotIntent::Listen,
            _ => unreachable!("absorb closes every pass-through slot"),
        }
    }

    fn absorb(
        &mut self,
        feedback: &SlotFeedback,
        rng: &mut SlotRng,
    ) -> Result<(), CapabilityFault> {
        match &mut self.cursor {
            Cursor::PassThrough => {
                self.inner.absorb(feedback, rng)?;
                self.virtual_index += 1;
                self.cursor = Cursor::NextVirtual;
                Ok(())
            }
            Cursor::InWindow { role, bit, sub } => {
                match role {
                    WindowRole::Beeper(b) => b.absorb(feedback)?,
                    WindowRole::Listener(l) => l.absorb(*sub, feedback)?,
                }
                if *sub == 0 {
                    *sub = 1;
                    return Ok(());
                }
                *sub = 0;
                *bit += 1;
                if *bit < self.k {
                    return Ok(());
                }
                // Window complete: hand the inner automaton the virtual
                // feedback its model promised it.
                let virtual_fb = match role {
                    WindowRole::Beeper(b) => SlotFeedback::Beeped(if b.collision_b() {
                        BeepEcho::Collision
                    } else {
                        BeepEcho::Quiet
                    }),
                    WindowRole::Listener(l) => SlotFeedback::Listened(if l.collision_l() {
                        Hearing::TwoOrMore
                    } else if l.heard_any() {
                        Hearing::ExactlyOne
                    } else {
                        Hearing::Silence
                    }),
                };
                self.inner.absorb(&virtual_fb, rng)?;
                self.virtual_index += 1;
                self.cursor = Cursor::NextVirtual;
                Ok(())
            }
            Cursor::NextVirtual => unreachable!("intent precedes absorb"),
        }
    }

    fn verdict(&self) -> Option<u64> {
        self.inner.verdict()
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(self.inner.digest()).write_u64(self.virtual_index);
        match &self.signature {
            None => {
                h.write_bool(false);
            }
            Some(s) => {
                h.write_bool(true);
                for i in 0..s.len() {
                    h.write_bool(s.bit(i));
                }
            }
        }
        match &self.cursor {
            Cursor::NextVirtual => {
                h.write_u8(0);
            }
            Cursor::PassThrough => {
                h.write_u8(1);
            }
            Cursor::InWindow { role, bit, sub } => {
                h.write_u8(2).write_u64(*bit as u64).write_u8(*sub);
                match role {
                    WindowRole::Beeper(b) => {
                        h.write_u8(0).write_bool(b.collision_b());
                    }
                    WindowRole::Listener(l) => {
                        h.write_u8(1).write_bool(l.collision_l()).write_bool(l.heard_any());
                    }
                }
            }
        }
        h.finish()
    }

    fn virtual_pos(&self) -> Option<VirtualPos> {
        let window = match &self.cursor {
            Cursor::InWindow { bit, sub, .. } => Some((*bit as u64, *sub)),
            Cursor::PassThrough | Cursor::NextVirtual => None,
        };
        Some(VirtualPos { index: self.virtual_index, window })
    }
}

/// Diagnostic protocol for measuring raw emulated detection: every vertex
/// beeps in a single detection-marked virtual slot and outputs 1 when the
/// feedback reported a collision on its beep, 0 otherwise. Wrapped in the
/// adapter this measures exactly the per-window detection rate; run
/// natively on a `B_cd` channel it gives the ground truth to compare with.
#[derive(Clone, Debug, Default)]
pub struct CollisionProbe {
    detected: Option<bool>,
}

impl CollisionProbe {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Automaton for CollisionProbe {
    fn slots_per_phase(&self) -> u64 {
        1
    }

    fn intent(&mut self, _rng: &mut SlotRng) -> SlotIntent {
        SlotIntent::Beep
    }

    fn absorb(
        &mut self,
        feedback: &SlotFeedback,
        _rng: &mut SlotRng,
    ) -> Result<(), CapabilityFault> {
        self.detected = Some(feedback.internal_collision()?);
        Ok(())
    }

    fn verdict(&self) -> Option<u64> {
        self.detected.map(u64::from)
    }

    fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        match self.detected {
            None => h.write_u8(0),
            Some(d) => h.write_u8(1).write_bool(d),
        };
        h.finish()
    }
}

impl Emulatable for CollisionProbe {
    fn needs_detection(&self, _slot_in_phase: u64) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ModelSpec;
    use crate::engine::{run, run_with, EngineError, Outcome, TraceMode};
    use crate::graph::Graph;
    use proptest::prelude::*;

    #[test]
    fn param_derivations_match_hand_computed_values() {
        assert_eq!(EmulationParams::fixed(0).k, 1);
        assert_eq!(EmulationParams::fixed(7).k, 7);
        // ⌈log₂(8/0.5)⌉ = ⌈log₂16⌉
        assert_eq!(EmulationParams::per_graph(8, 0.5).unwrap().k, 4);
        assert_eq!(EmulationParams::per_graph(1, 0.5).unwrap().k, 1);
        // ⌈log₂(1/0.05)⌉ = ⌈log₂20⌉
        assert_eq!(EmulationParams::per_vertex(0.05).unwrap().k, 5);
        assert_eq!(EmulationParams::per_vertex(0.5).unwrap().k, 1);
        // ⌈2·log₂n⌉
        assert_eq!(EmulationParams::whp(256).k, 16);
        assert_eq!(EmulationParams::whp(5).k, 5);
        assert_eq!(EmulationParams::whp(1).k, 1); // floored

        for bad in [0.0, 1.0, -0.3, 2.5, f64::NAN] {
            assert!(EmulationParams::per_graph(8, bad).is_err(), "accepted ε={bad}");
            assert!(EmulationParams::per_vertex(bad).is_err(), "accepted ε={bad}");
        }
    }

    #[test]
    fn beeper_slot_choice_follows_the_signature_bit() {
        assert_eq!(BeepCdEmulation::intent(false, 0), SlotIntent::Beep);
        assert_eq!(BeepCdEmulation::intent(false, 1), SlotIntent::Listen);
        assert_eq!(BeepCdEmulation::intent(true, 0), SlotIntent::Listen);
        assert_eq!(BeepCdEmulation::intent(true, 1), SlotIntent::Beep);
    }

    #[test]
    fn beeper_window_flags_only_heard_beeps() {
        let mut w = BeepCdEmulation::new();
        w.absorb(&SlotFeedback::Beeped(BeepEcho::Unavailable)).unwrap();
        w.absorb(&SlotFeedback::Listened(Hearing::Silence)).unwrap();
        assert!(!w.collision_b());
        w.absorb(&SlotFeedback::Listened(Hearing::AtLeastOne)).unwrap();
        assert!(w.collision_b());
        // Sticky once set.
        w.absorb(&SlotFeedback::Listened(Hearing::Silence)).unwrap();
        assert!(w.collision_b());
    }

    #[test]
    fn listener_window_needs_both_subs_of_one_phase() {
        let heard = SlotFeedback::Listened(Hearing::AtLeastOne);
        let silent = SlotFeedback::Listened(Hearing::Silence);

        // Beeps in different phases do not prove two beepers.
        let mut w = ListenCdEmulation::new();
        w.absorb(0, &heard).unwrap();
        w.absorb(1, &silent).unwrap();
        w.absorb(0, &silent).unwrap();
        w.absorb(1, &heard).unwrap();
        assert!(!w.collision_l());
        assert!(w.heard_any());

        // Both sub-slots of one phase do.
        let mut w = ListenCdEmulation::new();
        w.absorb(0, &heard).unwrap();
        w.absorb(1, &heard).unwrap();
        assert!(w.collision_l());

        // Total silence proves nothing at all.
        let mut w = ListenCdEmulation::new();
        w.absorb(0, &silent).unwrap();
        w.absorb(1, &silent).unwrap();
        assert!(!w.collision_l());
        assert!(!w.heard_any());
    }

    /// Test automaton: plays a fixed per-vertex script of virtual intents
    /// and logs what it observes — the full feedback code in detection
    /// slots, coarse heard/silent in pass-through slots.
    #[derive(Clone, Debug)]
    struct ScriptedVirtual {
        script: Vec<SlotIntent>,
        spp: u64,
        detect: Vec<bool>,
        t: usize,
        log: Vec<String>,
        detail_in_pass: bool,
    }

    impl ScriptedVirtual {
        fn new(script: Vec<SlotIntent>, detect: Vec<bool>) -> Self {
            assert_eq!(script.len() % detect.len(), 0);
            ScriptedVirtual {
                script,
                spp: detect.len() as u64,
                detect,
                t: 0,
                log: Vec::new(),
                detail_in_pass: false,
            }
        }
    }

    impl Automaton for ScriptedVirtual {
        fn slots_per_phase(&self) -> u64 {
            self.spp
        }

        fn intent(&mut self, _rng: &mut SlotRng) -> SlotIntent {
            self.script[self.t]
        }

        fn absorb(
            &mut self,
            feedback: &SlotFeedback,
            _rng: &mut SlotRng,
        ) -> Result<(), CapabilityFault> {
            let sip = self.t % self.spp as usize;
            if self.detect[sip] {
                self.log.push(feedback.code().to_string());
            } else if matches!(feedback, SlotFeedback::Listened(_)) {
                if self.detail_in_pass {
                    feedback.heard_detail()?;
                }
                self.log.push(if feedback.heard_any()? { "H" } else { "S" }.to_string());
            } else {
                self.log.push("B".to_string());
            }
            self.t += 1;
            Ok(())
        }

        fn verdict(&self) -> Option<u64> {
            (self.t >= self.script.len()).then_some(self.log.len() as u64)
        }

        fn digest(&self) -> u64 {
            let mut h = Fnv1a::new();
            h.write_u64(self.t as u64);
            h.finish()
        }
    }

    impl Emulatable for ScriptedVirtual {
        fn needs_detection(&self, slot_in_phase: u64) -> bool {
            self.detect[slot_in_phase as usize]
        }
    }

    fn scripts(rows: &[&str], detect: &[bool]) -> Vec<ScriptedVirtual> {
        rows.iter()
            .map(|row| {
                let script = row
                    .chars()
                    .map(|c| if c == 'B' { SlotIntent::Beep } else { SlotIntent::Listen })
                    .collect();
                ScriptedVirtual::new(script, detect.to_vec())
            })
            .collect()
    }

    /// Distinct fixed signatures: vertex v gets the k-bit binary of v+1.
    fn distinct_signatures(n: usize, k: u32) -> Vec<Signature> {
        assert!(n < (1usize << k));
        (0..n)
            .map(|v| Signature::from_bits((0..k).map(|i| (v + 1) >> i & 1 == 1).collect()))
            .collect()
    }

    fn run_native(g: &Graph, nodes: Vec<ScriptedVirtual>, seed: u64) -> (Vec<Vec<String>>, u64) {
        let mut logs = Vec::new();
        let (_, result) = run_with(
            g,
            nodes,
            ModelSpec::BCD_LCD,
            seed,
            1_000_000,
            TraceMode::Off,
            |view| logs = view.nodes.iter().map(|a| a.log.clone()).collect(),
        )
        .unwrap();
        assert_eq!(result.outcome, Outcome::Terminated);
        (logs, result.slots_used)
    }

    fn run_wrapped(
        g: &Graph,
        nodes: Vec<ScriptedVirtual>,
        sigs: &[Signature],
        seed: u64,
    ) -> (Vec<Vec<String>>, u64) {
        let wrapped: Vec<_> = nodes
            .into_iter()
            .zip(sigs)
            .map(|(node, sig)| VirtualSlotAdapter::with_signature(node, sig.clone()))
            .collect();
        let mut logs = Vec::new();
        let (_, result) = run_with(
            g,
            wrapped,
            ModelSpec::BL,
            seed,
            1_000_000,
            TraceMode::Off,
            |view| logs = view.nodes.iter().map(|a| a.inner().log.clone()).collect(),
        )
        .unwrap();
        assert_eq!(result.outcome, Outcome::Terminated);
        (logs, result.slots_used)
    }

    #[test]
    fn adapter_matches_native_feedback_with_distinct_signatures() {
        // Star: slot 0 has three beeping leaves (hub hears two-or-more),
        // slot 1 exactly one, slot 2 an internal hub/leaf collision, slot 3
        // silence.
        let star = Graph::star(5).unwrap();
        let star_rows = ["LLBL", "BLBL", "BLLL", "LLLL", "BBLL"];
        // Complete graph and path sweep the same cases on other shapes.
        let complete = Graph::complete(3).unwrap();
        let complete_rows = ["BBLL", "BLBL", "LLBL"];
        let path = Graph::path(3).unwrap();
        let path_rows = ["BLBL", "LBLL", "BLBL"];

        for (g, rows) in [(star, &star_rows[..]), (complete, &complete_rows[..]), (path, &path_rows[..])] {
            let k = 3;
            let sigs = distinct_signatures(g.vertex_count(), k);
            let (native_logs, native_slots) = run_native(&g, scripts(rows, &[true]), 11);
            let (emul_logs, emul_slots) = run_wrapped(&g, scripts(rows, &[true]), &sigs, 11);
            assert_eq!(native_logs, emul_logs, "graph {g:?}");
            assert_eq!(emul_slots, native_slots * 2 * k as u64);
        }
    }

    #[test]
    fn mixed_pass_through_slots_agree_on_coarse_hearing() {
        // Two-slot virtual phases, detection only in the first: the second
        // passes through and both sides log coarse heard/silent.
        let g = Graph::path(3).unwrap();
        let rows = ["BLBL", "LBLL", "BLLB"];
        let detect = [true, false];
        let sigs = distinct_signatures(3, 2);
        let (native_logs, native_slots) = run_native(&g, scripts(&rows, &detect), 5);
        let (emul_logs, emul_slots) = run_wrapped(&g, scripts(&rows, &detect), &sigs, 5);
        assert_eq!(native_logs, emul_logs);
        // Each virtual phase of 2 slots costs 2k + 1 = 5 physical slots.
        assert_eq!(native_slots, 4);
        assert_eq!(emul_slots, 10);
    }

    #[test]
    fn detail_read_in_pass_through_slot_faults() {
        let g = Graph::path(2).unwrap();
        let mut nodes = scripts(&["LL", "LB"], &[true, false]);
        nodes[0].detail_in_pass = true;
        let k = 2;
        let wrapped: Vec<_> = nodes
            .into_iter()
            .zip(distinct_signatures(2, k))
            .map(|(node, sig)| VirtualSlotAdapter::with_signature(node, sig))
            .collect();
        let err = run(&g, wrapped, ModelSpec::BL, 3, 1_000).unwrap_err();
        match err {
            EngineError::Capability { slot, vertex, fault } => {
                // The pass-through slot sits right after the 2k-slot window.
                assert_eq!(slot, 2 * k as u64);
                assert_eq!(vertex, 0);
                assert_eq!(fault, CapabilityFault::MultiplicityUnavailable);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn isolated_vertex_never_detects() {
        let g = Graph::path(1).unwrap();
        let probe = virtual_slot_adapter(CollisionProbe::new(), EmulationParams::fixed(5));
        let (_, result) = run(&g, vec![probe], ModelSpec::BL, 9, 1_000).unwrap();
        assert_eq!(result.outcome, Outcome::Terminated);
        assert_eq!(result.payload, vec![Some(0)]);
        assert_eq!(result.slots_used, 10);
    }

    #[test]
    fn identical_signatures_miss_and_differing_bits_detect() {
        let g = Graph::complete(2).unwrap();
        let run_pair = |sig_a: &[bool], sig_b: &[bool]| {
            let nodes = vec![
                VirtualSlotAdapter::with_signature(
                    CollisionProbe::new(),
                    Signature::from_bits(sig_a.to_vec()),
                ),
                VirtualSlotAdapter::with_signature(
                    CollisionProbe::new(),
                    Signature::from_bits(sig_b.to_vec()),
                ),
            ];
            let (_, result) = run(&g, nodes, ModelSpec::BL, 1, 1_000).unwrap();
            result.payload
        };
        // Identical signatures: both vertices beep and listen in the same
        // sub-slots, so neither ever hears the other.
        assert_eq!(run_pair(&[true, false, true], &[true, false, true]), vec![Some(0), Some(0)]);
        // One differing bit puts them in opposite sub-slots of that phase.
        assert_eq!(run_pair(&[false, false, true], &[true, false, true]), vec![Some(1), Some(1)]);
        assert_eq!(run_pair(&[false], &[true]), vec![Some(1), Some(1)]);
    }

    #[test]
    fn phase_cost_matches_slot_accounting() {
        // Five virtual slots with detection only in the first: 2k + 4.
        let five_slot = ScriptedVirtual::new(
            vec![SlotIntent::Listen; 5],
            vec![true, false, false, false, false],
        );
        let adapter = virtual_slot_adapter(five_slot, EmulationParams::fixed(4));
        assert_eq!(adapter.slots_per_phase(), 12);

        let all_detect = ScriptedVirtual::new(vec![SlotIntent::Listen], vec![true]);
        let adapter = virtual_slot_adapter(all_detect, EmulationParams::fixed(2));
        assert_eq!(adapter.slots_per_phase(), 4);
    }

    #[test]
    fn expansion_windows_are_annotated_in_traces() {
        let g = Graph::path(2).unwrap();
        let nodes: Vec<_> = scripts(&["BL", "LB"], &[true, false])
            .into_iter()
            .zip(distinct_signatures(2, 2))
            .map(|(node, sig)| VirtualSlotAdapter::with_signature(node, sig))
            .collect();
        let (trace, result) = run(&g, nodes, ModelSpec::BL, 2, 1_000).unwrap();
        assert_eq!(result.outcome, Outcome::Terminated);
        let pos: Vec<_> = trace.records.iter().map(|r| r.virtual_pos.unwrap()).collect();
        assert_eq!(
            pos,
            vec![
                VirtualPos { index: 0, window: Some((0, 0)) },
                VirtualPos { index: 0, window: Some((0, 1)) },
                VirtualPos { index: 0, window: Some((1, 0)) },
                VirtualPos { index: 0, window: Some((1, 1)) },
                VirtualPos { index: 1, window: None },
            ]
        );
    }

    #[test]
    fn random_signatures_are_deterministic_per_seed() {
        let g = Graph::complete(2).unwrap();
        let mk = || {
            vec![
                virtual_slot_adapter(CollisionProbe::new(), EmulationParams::fixed(4));
                2
            ]
        };
        let (t1, r1) = run(&g, mk(), ModelSpec::BL, 77, 1_000).unwrap();
        let (t2, r2) = run(&g, mk(), ModelSpec::BL, 77, 1_000).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn pair_miss_rate_tracks_two_to_the_minus_k() {
        // Two adjacent beepers with k = 3 miss each other exactly when
        // their signatures coincide: probability 1/8. Over 2000 seeded
        // trials the empirical rate stays within ±4σ ≈ ±0.0296.
        let g = Graph::complete(2).unwrap();
        let trials = 2000;
        let mut misses = 0;
        for trial in 0..trials {
            let nodes =
                vec![virtual_slot_adapter(CollisionProbe::new(), EmulationParams::fixed(3)); 2];
            let (_, result) = run(&g, nodes, ModelSpec::BL, 10_000 + trial, 1_000).unwrap();
            // A miss is symmetric: both hear nothing or both hear a beep.
            assert_eq!(result.payload[0], result.payload[1], "trial {trial}");
            if result.payload[0] == Some(0) {
                misses += 1;
            }
        }
        let rate = misses as f64 / trials as f64;
        assert!((0.0954..=0.1546).contains(&rate), "miss rate {rate}");
    }

    proptest! {
        /// Reconstructed virtual feedback matches the closed form: a beeper
        /// detects iff some beeping neighbour's signature differs from its
        /// own; a listener hears two-or-more iff its beeping neighbours do
        /// not all share one signature, exactly-one iff some beep at all.
        #[test]
        fn reconstruction_matches_closed_form(
            n in 2usize..6,
            edge_mask in proptest::collection::vec(proptest::bool::ANY, 15),
            sig_bits in proptest::collection::vec(proptest::collection::vec(proptest::bool::ANY, 3), 6),
            beeps in proptest::collection::vec(proptest::collection::vec(proptest::bool::ANY, 2), 6),
        ) {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .zip(&edge_mask)
                .filter(|(_, &keep)| keep)
                .map(|(&e, _)| e)
                .collect();
            let g = Graph::new(n, edges).unwrap();
            let sigs: Vec<Signature> = (0..n)
                .map(|v| Signature::from_bits(sig_bits[v].clone()))
                .collect();
            let nodes: Vec<ScriptedVirtual> = (0..n)
                .map(|v| {
                    let script = beeps[v]
                        .iter()
                        .map(|&b| if b { SlotIntent::Beep } else { SlotIntent::Listen })
                        .collect();
                    ScriptedVirtual::new(script, vec![true])
                })
                .collect();
            let (logs, _) = run_wrapped(&g, nodes, &sigs, 23);

            for v in 0..n {
                for t in 0..2 {
                    let beeping: Vec<usize> = g
                        .neighbours(v)
                        .iter()
                        .copied()
                        .filter(|&u| beeps[u][t])
                        .collect();
                    let expected = if beeps[v][t] {
                        if beeping.iter().any(|&u| sigs[u] != sigs[v]) { "B1" } else { "B0" }
                    } else if beeping.is_empty() {
                        "L0"
                    } else if beeping.iter().all(|&u| sigs[u] == sigs[beeping[0]]) {
                        "L1"
                    } else {
                        "L2"
                    };
                    prop_assert_eq!(&logs[v][t], expected, "vertex {} slot {}", v, t);
                }
            }
        }
    }
}
