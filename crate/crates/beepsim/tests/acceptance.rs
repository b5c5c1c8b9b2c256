//! Acceptance gate: nine end-to-end criteria, one test each, every test
//! printing a single `criterion N (...): PASS/FAIL` line with the
//! measured numbers. Statistical bounds are pinned to fixed seeds, so
//! each criterion is deterministic: it either passes or fails, every run.

use beepsim::channel::{
    collision_ground_truth, resolve_slot, BeepEcho, BeeperCap, Hearing, ListenerCap,
    ModelSpec, SlotFeedback, SlotIntent,
};
use beepsim::emulation::{CollisionProbe, EmulationParams, Signature, VirtualSlotAdapter};
use beepsim::engine::{run_with, Outcome, TraceMode};
use beepsim::graph::Graph;
use beepsim::harness::{
    compare_envelope, run_batch, trace_for_trial, BatchReport, ExperimentSpec,
    ProtocolSpec,
};
use beepsim::protocols::{
    degree_bcdlcd, degree_bl_with_signatures, k_for, KPolicy, Variant,
};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn criterion(n: u32, name: &str, check: impl FnOnce() -> Result<String, String>) {
    match check() {
        Ok(detail) => println!("criterion {n} ({name}): PASS — {detail}"),
        Err(why) => {
            println!("criterion {n} ({name}): FAIL — {why}");
            panic!("criterion {n} ({name}) failed: {why}");
        }
    }
}

// ---------------------------------------------------------------------
// Shared batch specs. Criterion 9 re-runs every one of these, so the
// constructors are the single source of truth for their parameters.
// ---------------------------------------------------------------------

fn spec(
    graph: &str,
    protocol: ProtocolSpec,
    model: ModelSpec,
    trials: u64,
    base_seed: u64,
) -> ExperimentSpec {
    ExperimentSpec {
        graph: graph.to_string(),
        protocol,
        model,
        trials,
        base_seed,
        slot_budget: None,
    }
}

fn collide_spec() -> ExperimentSpec {
    spec(
        "path:3",
        ProtocolSpec::Collide { wishers: Some(vec![0, 2]), k: 6 },
        ModelSpec::BL,
        10_000,
        20_000,
    )
}

fn colour_specs() -> Vec<ExperimentSpec> {
    ["ring:64", "gnp:64:0.1:7"]
        .iter()
        .enumerate()
        .map(|(i, g)| {
            spec(g, ProtocolSpec::Colour, ModelSpec::BCD_L, 100, 3_000 + i as u64)
        })
        .collect()
}

fn bounded_specs() -> Vec<(ExperimentSpec, usize)> {
    let mut specs = Vec::new();
    let gnp_bound = Graph::from_descriptor("gnp:64:0.1:7").unwrap().max_degree();
    for (graph, bound) in [("complete:8", 7), ("gnp:64:0.1:7", gnp_bound)] {
        for variant in [Variant::Basic, Variant::Modified] {
            specs.push((
                spec(
                    graph,
                    ProtocolSpec::ColourBounded { degree_bound: bound, variant },
                    ModelSpec::BCD_L,
                    100,
                    4_000,
                ),
                bound,
            ));
        }
    }
    specs
}

fn two_hop_specs() -> Vec<ExperimentSpec> {
    ["ring:32", "star:16"]
        .iter()
        .enumerate()
        .map(|(i, g)| {
            spec(g, ProtocolSpec::TwoHop, ModelSpec::BCD_LCD, 100, 5_000 + i as u64)
        })
        .collect()
}

fn degree_specs() -> Vec<ExperimentSpec> {
    ["star:16", "ring:32", "gnp:32:0.15:5"]
        .iter()
        .enumerate()
        .map(|(i, g)| {
            spec(g, ProtocolSpec::Degree, ModelSpec::BCD_LCD, 100, 6_000 + i as u64)
        })
        .collect()
}

fn degree_bl_spec() -> ExperimentSpec {
    spec(
        "path:3",
        ProtocolSpec::DegreeBl { k: 5 },
        ModelSpec::BL,
        50,
        8_000,
    )
}

fn all_batch_specs() -> Vec<ExperimentSpec> {
    let mut specs = vec![collide_spec()];
    specs.extend(colour_specs());
    specs.extend(bounded_specs().into_iter().map(|(s, _)| s));
    specs.extend(two_hop_specs());
    specs.extend(degree_specs());
    specs.push(degree_bl_spec());
    specs
}

// ---------------------------------------------------------------------
// Criterion 1: channel oracle equivalence by brute force.
// ---------------------------------------------------------------------

/// Independent feedback computation: count beeping neighbours by scanning
/// every vertex pair through `has_edge`, then apply the model rules.
fn brute_force_feedback(
    g: &Graph,
    intents: &[SlotIntent],
    model: ModelSpec,
) -> Vec<SlotFeedback> {
    let n = g.vertex_count();
    (0..n)
        .map(|v| {
            let beeps = (0..n)
                .filter(|&u| {
                    u != v && g.has_edge(u, v) && intents[u] == SlotIntent::Beep
                })
                .count();
            match intents[v] {
                SlotIntent::Beep => SlotFeedback::Beeped(match model.beeper {
                    BeeperCap::B => BeepEcho::Unavailable,
                    BeeperCap::BCd if beeps >= 1 => BeepEcho::Collision,
                    BeeperCap::BCd => BeepEcho::Quiet,
                }),
                SlotIntent::Listen => SlotFeedback::Listened(match (model.listener, beeps) {
                    (_, 0) => Hearing::Silence,
                    (ListenerCap::L, _) => Hearing::AtLeastOne,
                    (ListenerCap::LCd, 1) => Hearing::ExactlyOne,
                    (ListenerCap::LCd, _) => Hearing::TwoOrMore,
                }),
            }
        })
        .collect()
}

/// Every labelled simple graph on 1..=4 vertices: all subsets of the
/// possible edge set. Covers all 11 non-isomorphic 4-vertex graphs.
fn all_small_graphs() -> Vec<Graph> {
    let mut graphs = Vec::new();
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..1 << pairs.len() {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e);
            graphs.push(Graph::new(n, edges).unwrap());
        }
    }
    graphs
}

#[test]
fn criterion_1_channel_oracle_equivalence() {
    criterion(1, "channel oracle equivalence", || {
        let mut graphs = all_small_graphs();
        for desc in ["ring:3", "ring:4", "path:4", "star:4", "complete:4", "gnp:4:0.6:1"] {
            graphs.push(Graph::from_descriptor(desc).unwrap());
        }
        let mut checks = 0u64;
        for g in &graphs {
            let n = g.vertex_count();
            for mask in 0u32..1 << n {
                let intents: Vec<SlotIntent> = (0..n)
                    .map(|v| {
                        if mask >> v & 1 == 1 {
                            SlotIntent::Beep
                        } else {
                            SlotIntent::Listen
                        }
                    })
                    .collect();
                for model in ModelSpec::ALL {
                    let got = resolve_slot(g, &intents, model)
                        .map_err(|e| format!("resolve_slot failed: {e}"))?;
                    let want = brute_force_feedback(g, &intents, model);
                    ensure!(
                        got == want,
                        "feedback mismatch on {:?} intents {mask:b} model {model}",
                        g
                    );
                    checks += n as u64;
                }
                // The collision ground-truth scan must agree with what the
                // strongest model reports.
                let strongest = resolve_slot(g, &intents, ModelSpec::BCD_LCD)
                    .map_err(|e| format!("resolve_slot failed: {e}"))?;
                for v in 0..n {
                    let truth = collision_ground_truth(g, &intents, v)
                        .map_err(|e| format!("ground truth failed: {e}"))?;
                    match &strongest[v] {
                        SlotFeedback::Beeped(echo) => ensure!(
                            (*echo == BeepEcho::Collision) == truth.internal,
                            "beeper echo disagrees with ground truth at {v}"
                        ),
                        SlotFeedback::Listened(h) => ensure!(
                            (*h == Hearing::TwoOrMore) == truth.peripheral,
                            "hearing disagrees with ground truth at {v}"
                        ),
                    }
                }
            }
        }
        Ok(format!(
            "{} graphs × all intent vectors × 4 models, {checks} feedback values equal",
            graphs.len()
        ))
    });
}

// ---------------------------------------------------------------------
// Criterion 2: collision detection miss rate at the derived k.
// ---------------------------------------------------------------------

#[test]
fn criterion_2_collision_detection_rates() {
    criterion(2, "collision detection, k from ε=0.05", || {
        let k = k_for(KPolicy::PerVertex { eps: 0.05 }).unwrap();
        ensure!(k == 6, "k_for(per-vertex, 0.05) = {k}, expected 6");
        let report = run_batch(&collide_spec()).map_err(|e| e.to_string())?;
        ensure!(
            report.safety_violations == 0,
            "{} false positives",
            report.safety_violations
        );
        ensure!(report.termination_rate == 1.0, "some trial failed to finish");
        // Expected miss rate 2⁻⁶ ≈ 0.0156; the bound adds 3σ for 10⁴ trials.
        let miss = report.error_rate;
        ensure!(
            miss <= 0.0193,
            "miss rate {miss:.4} above 2^-6 + 3σ = 0.0193"
        );
        Ok(format!(
            "k=6, {} trials, zero false positives, miss rate {miss:.4} ≤ 0.0193",
            report.rows.len()
        ))
    });
}

// ---------------------------------------------------------------------
// Criterion 3: colouring safety and phase envelope.
// ---------------------------------------------------------------------

fn check_las_vegas_batch(report: &BatchReport) -> Result<(), String> {
    ensure!(
        report.safety_violations == 0,
        "{}: {} safety violations",
        report.graph,
        report.safety_violations
    );
    let exhausted = report
        .rows
        .iter()
        .filter(|r| r.outcome != Outcome::Terminated)
        .count();
    ensure!(
        exhausted == 0,
        "{}: {exhausted} trials exhausted the default budget",
        report.graph
    );
    ensure!(
        report.exceed_fraction() <= 0.01,
        "{}: {:.2}% of trials ran past the envelope ({} phases)",
        report.graph,
        100.0 * report.exceed_fraction(),
        report.envelope_phases
    );
    Ok(())
}

#[test]
fn criterion_3_colouring_envelope() {
    criterion(3, "colouring: proper, within envelope", || {
        let mut details = Vec::new();
        for s in colour_specs() {
            let report = run_batch(&s).map_err(|e| e.to_string())?;
            check_las_vegas_batch(&report)?;
            ensure!(
                compare_envelope(&report, report.envelope_phases)
                    == report.exceed_fraction(),
                "envelope comparison disagrees with the report"
            );
            details.push(format!(
                "{}: 100/100 proper, p95 {} ≤ envelope {}",
                report.graph, report.phase_p95, report.envelope_phases
            ));
        }
        Ok(details.join("; "))
    });
}

// ---------------------------------------------------------------------
// Criterion 4: bounded palette, both variants, median cycle comparison.
// ---------------------------------------------------------------------

#[test]
fn criterion_4_bounded_colouring() {
    criterion(4, "bounded colouring: palette kept, variants compared", || {
        let mut medians: Vec<(String, Variant, f64)> = Vec::new();
        for (s, bound) in bounded_specs() {
            let report = run_batch(&s).map_err(|e| e.to_string())?;
            ensure!(
                report.safety_violations == 0,
                "{}: colours escaped the palette or clashed",
                report.graph
            );
            ensure!(
                report.termination_rate == 1.0,
                "{}: some trial exhausted its budget",
                report.graph
            );
            // Cycle count of a trial: phases over the K+1-phase sweep
            // period, kept fractional so a 10% band means something at
            // single-digit counts.
            let period = bound as u64 + 1;
            let mut phases: Vec<u64> = report.rows.iter().map(|r| r.phases).collect();
            phases.sort_unstable();
            let median_cycles = phases[49] as f64 / period as f64;
            let variant = match &s.protocol {
                ProtocolSpec::ColourBounded { variant, .. } => *variant,
                _ => unreachable!(),
            };
            medians.push((s.graph.clone(), variant, median_cycles));
        }
        let mut lines = Vec::new();
        let mut violations = Vec::new();
        for graph in ["complete:8", "gnp:64:0.1:7"] {
            let of = |v: Variant| {
                medians
                    .iter()
                    .find(|(g, var, _)| g == graph && *var == v)
                    .unwrap()
                    .2
            };
            let (basic, modified) = (of(Variant::Basic), of(Variant::Modified));
            lines.push(format!(
                "{graph}: median cycles basic {basic:.2}, modified {modified:.2}"
            ));
            if modified > basic * 1.10 {
                violations.push(graph);
            }
        }
        let summary = lines.join("; ");
        ensure!(
            violations.is_empty(),
            "modified variant runs >10% past basic on {}; {summary}",
            violations.join(" and ")
        );
        Ok(format!("{summary}; both palettes proper, modified within 10% of basic"))
    });
}

// ---------------------------------------------------------------------
// Criterion 5: two-hop colouring safety and envelope.
// ---------------------------------------------------------------------

#[test]
fn criterion_5_two_hop_colouring() {
    criterion(5, "two-hop colouring: proper at distance 2", || {
        let mut details = Vec::new();
        for s in two_hop_specs() {
            let report = run_batch(&s).map_err(|e| e.to_string())?;
            check_las_vegas_batch(&report)?;
            details.push(format!(
                "{}: 100/100 two-hop proper, p95 {} ≤ envelope {}",
                report.graph, report.phase_p95, report.envelope_phases
            ));
        }
        Ok(details.join("; "))
    });
}

// ---------------------------------------------------------------------
// Criterion 6: degrees exact; win announcements unique per neighbourhood.
// ---------------------------------------------------------------------

#[test]
fn criterion_6_degree_computation() {
    criterion(6, "degree computation: exact counts, lone announcers", || {
        let mut details = Vec::new();
        for s in degree_specs() {
            let report = run_batch(&s).map_err(|e| e.to_string())?;
            ensure!(
                report.safety_violations == 0,
                "{}: wrong degree reported",
                report.graph
            );
            ensure!(
                report.termination_rate == 1.0,
                "{}: some trial exhausted its budget",
                report.graph
            );
            // Re-run each trial traced and scan slot 4 of every phase: in
            // any closed neighbourhood at most one vertex may announce.
            let g = Graph::from_descriptor(&s.graph).unwrap();
            let n = g.vertex_count();
            let mut scanned = 0u64;
            for trial in 0..s.trials {
                let (_, trace, _) =
                    trace_for_trial(&s, trial).map_err(|e| e.to_string())?;
                for rec in trace.records.iter().filter(|r| r.slot % 5 == 3) {
                    for v in 0..n {
                        let mut announcers =
                            (rec.intents[v] == SlotIntent::Beep) as usize;
                        announcers += g
                            .neighbours(v)
                            .iter()
                            .filter(|&&u| rec.intents[u] == SlotIntent::Beep)
                            .count();
                        ensure!(
                            announcers <= 1,
                            "{}: {announcers} announcers around vertex {v} in slot {} of trial {trial}",
                            s.graph,
                            rec.slot
                        );
                    }
                    scanned += 1;
                }
            }
            details.push(format!(
                "{}: 100/100 exact, {scanned} announcement slots scanned",
                s.graph
            ));
        }
        Ok(details.join("; "))
    });
}

// ---------------------------------------------------------------------
// Criterion 7: emulation — deterministic with distinct signatures,
// statistical at the analytic miss rate.
// ---------------------------------------------------------------------

#[test]
fn criterion_7_emulation_correctness() {
    criterion(7, "emulation: exact when distinct, 2⁻ᵏ misses otherwise", || {
        // (a) ring:16, signatures pairwise distinct everywhere, k = 8.
        let g = Graph::ring(16).unwrap();
        let truth: Vec<Option<u64>> = (0..16).map(|v| Some(g.degree(v) as u64)).collect();
        let (_, native) = degree_bcdlcd(&g, 70_000, 1_000_000).map_err(|e| e.to_string())?;
        ensure!(
            native.payload == truth,
            "native degree run disagrees with the graph"
        );
        let sigs: Vec<Signature> = (0..16)
            .map(|v| Signature::from_bits((0..8).map(|i| (v + 1) >> i & 1 == 1).collect()))
            .collect();
        for trial in 0..100u64 {
            let (_, result, verdict) =
                degree_bl_with_signatures(&g, &sigs, 71_000 + trial, 2_000_000)
                    .map_err(|e| e.to_string())?;
            ensure!(
                result.outcome == Outcome::Terminated,
                "trial {trial} exhausted its budget"
            );
            ensure!(
                result.payload == truth && verdict.unwrap().ok,
                "trial {trial}: emulated degrees diverged from ground truth"
            );
        }

        // (b) complete:2, both vertices beep one emulated slot with fresh
        // k = 10 signatures; misses happen exactly when the signatures
        // coincide, so the rate sits near 2⁻¹⁰ ≈ 0.000977.
        let pair = Graph::complete(2).unwrap();
        let params = EmulationParams::fixed(10);
        let windows = 100_000u64;
        let mut misses = 0u64;
        for trial in 0..windows {
            let nodes: Vec<VirtualSlotAdapter<CollisionProbe>> = (0..2)
                .map(|_| VirtualSlotAdapter::new(CollisionProbe::new(), params))
                .collect();
            let (_, result) = run_with(
                &pair,
                nodes,
                ModelSpec::BL,
                90_000 + trial,
                1_000,
                TraceMode::Off,
                |_| {},
            )
            .map_err(|e| e.to_string())?;
            ensure!(
                result.outcome == Outcome::Terminated,
                "window {trial} did not resolve"
            );
            match (result.payload[0], result.payload[1]) {
                (Some(1), Some(1)) => {}
                (Some(0), Some(0)) => misses += 1,
                other => {
                    return Err(format!(
                        "window {trial}: asymmetric detection {other:?}"
                    ))
                }
            }
        }
        let rate = misses as f64 / windows as f64;
        // 2⁻¹⁰ + 3σ over 10⁵ windows ≈ 0.000977 + 0.000296.
        ensure!(
            rate <= 0.001273,
            "per-window miss rate {rate:.6} above 2^-10 + 3σ = 0.001273"
        );
        Ok(format!(
            "100/100 exact with distinct signatures; {misses} misses in {windows} windows (rate {rate:.6} ≤ 0.001273)"
        ))
    });
}

// ---------------------------------------------------------------------
// Criterion 8: physical slot accounting of the emulated degree protocol.
// ---------------------------------------------------------------------

#[test]
fn criterion_8_slot_accounting() {
    criterion(8, "emulation spends 2k+4 physical slots per phase", || {
        let s = degree_bl_spec(); // k = 5 → 14 physical slots per phase
        let k = 5u64;
        let per_phase = 2 * k + 4;
        let report = run_batch(&s).map_err(|e| e.to_string())?;
        for row in &report.rows {
            ensure!(
                row.slots == per_phase * row.phases,
                "trial {}: {} slots for {} phases (expected ×{per_phase})",
                row.trial,
                row.slots,
                row.phases
            );
        }
        // Structural check on a real trace: each phase opens with one
        // 2k-slot detection window (bit/sub-slot annotated) and closes
        // with four pass-through slots.
        let (_, trace, result) = trace_for_trial(&s, 0).map_err(|e| e.to_string())?;
        ensure!(
            result.slots_used == per_phase * result.phases_used,
            "traced trial accounting disagrees"
        );
        for (p, phase) in trace.records.chunks(per_phase as usize).enumerate() {
            ensure!(phase.len() == per_phase as usize, "ragged phase {p}");
            for (i, rec) in phase.iter().enumerate() {
                let pos = rec
                    .virtual_pos
                    .as_ref()
                    .ok_or_else(|| format!("slot {} lacks its position", rec.slot))?;
                if i < 2 * k as usize {
                    let want = (i as u64 / 2, (i % 2) as u8);
                    ensure!(
                        pos.window == Some(want),
                        "slot {}: window {:?}, expected {want:?}",
                        rec.slot,
                        pos.window
                    );
                } else {
                    ensure!(
                        pos.window.is_none(),
                        "slot {}: pass-through slot carries a window",
                        rec.slot
                    );
                }
            }
        }
        Ok(format!(
            "50/50 trials at {per_phase} slots/phase (k=5); slot p50 {} = {per_phase}×phase p50 {}",
            report.slot_p50, report.phase_p50
        ))
    });
}

// ---------------------------------------------------------------------
// Criterion 9: byte-identical CSV rows on re-run.
// ---------------------------------------------------------------------

#[test]
fn criterion_9_determinism() {
    criterion(9, "re-runs are byte-identical", || {
        let specs = all_batch_specs();
        let count = specs.len();
        for s in specs {
            let first = run_batch(&s).map_err(|e| e.to_string())?;
            let second = run_batch(&s).map_err(|e| e.to_string())?;
            ensure!(
                first.to_csv_string() == second.to_csv_string(),
                "{} ({}): CSV rows differ between runs",
                s.protocol.name(),
                s.graph
            );
        }
        Ok(format!("{count} batch specs re-run byte-identically"))
    });
}
