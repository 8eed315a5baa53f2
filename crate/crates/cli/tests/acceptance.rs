//! End-to-end acceptance suite: one test (and thus one pass/fail line)
//! per shipping criterion.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;

use wmstack_cli::{checks, findpass, fixtures, gen};
use wmstack_core::compile::compile_imp_component;
use wmstack_core::fsm::{parse_fsm_text, parse_gamma_text, sane_transition_gap, weird_implies_exploit};
use wmstack_core::imp::{parse_component, parse_context};
use wmstack_core::oracle::{
    enumerate_imp_assign_prefix, imp_candidates, imp_lit_domain, toyc_arg_call_contexts,
    toyc_assign_prefix_attack, wm_sample, StageRelation,
};
use wmstack_core::toyc::{behavior_toyc, link_toyc, parse_toyc};
use wmstack_core::trace::{
    ExplorationBounds, OutputValue, Terminal, Trace, TraceProperty, TraceRelation,
    SourceValueRelation,
};

fn bounds() -> ExplorationBounds {
    ExplorationBounds::default_profile()
}

/// All manifest fixtures, run once and shared across criteria.
fn all_fixture_reports() -> &'static Vec<fixtures::FixtureReport> {
    static REPORTS: OnceLock<Vec<fixtures::FixtureReport>> = OnceLock::new();
    REPORTS.get_or_init(|| fixtures::run_all(&bounds()).expect("fixture corpus runs"))
}

fn fixture(id: &str) -> &'static fixtures::FixtureReport {
    all_fixture_reports()
        .iter()
        .find(|r| r.id == id)
        .unwrap_or_else(|| panic!("fixture `{id}` missing from manifest"))
}

fn corpus(name: &str) -> String {
    std::fs::read_to_string(fixtures::corpus_dir().join(name)).expect("corpus file")
}

#[test]
fn criterion_01_dop_attack_trace_and_certificate() {
    let start = Instant::now();
    let report = fixtures::run_fixture("dop-division", &bounds()).expect("fixture runs");
    let elapsed = start.elapsed();
    assert_eq!(report.outcome, "Certified", "details: {:?}", report.details);
    assert_eq!(report.revalidated, Some(true));
    assert!(
        report.details.iter().any(|d| d.contains("3 4 1 2")),
        "main(3,4) must produce exactly 3 4 1 2: {:?}",
        report.details
    );
    assert!(
        report.details.iter().any(|d| d.contains("53 source contexts")),
        "spot-check must cover the full size-4 context enumeration: {:?}",
        report.details
    );
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
}

#[test]
fn criterion_02_wm_sample_of_the_assignment_prefix_class() {
    let start = Instant::now();
    let b = bounds();

    let sample_class = |comp_file: &str, property: TraceProperty| {
        let comp = parse_component(&corpus(comp_file)).unwrap();
        let hole = compile_imp_component(&comp);
        let mut attacks = Vec::new();
        for i in b.int_domain() {
            let attack = toyc_assign_prefix_attack(&comp.vars, &[("x".to_string(), i)]);
            let whole = link_toyc(&attack, &hole).unwrap();
            attacks.push((format!("x := {i}"), behavior_toyc(&whole, &b).unwrap()));
        }
        let lits = imp_lit_domain(&b);
        let ctxs = enumerate_imp_assign_prefix(&comp.vars, &lits, 1);
        let mirror = imp_candidates(&comp, &ctxs, &b);
        wm_sample(&attacks, &mirror, &StageRelation::ImpToyc, &property).unwrap()
    };

    let nonneg = || {
        TraceProperty::new("outputs-nonnegative", "bool and nat outputs map to nonnegative ints", |t| {
            t.outputs.iter().all(|o| !matches!(o, OutputValue::Int(i) if *i < 0))
        })
    };
    let halted_nonempty = || {
        TraceProperty::new("halted-traces-nonempty", "completed source runs always output", |t| {
            t.terminal != Terminal::Halted || !t.outputs.is_empty()
        })
    };

    // Unmitigated echo: the weird machine is exactly the negative outputs.
    let echo = sample_class("output-neg.imp", nonneg());
    let certified: Vec<&str> = echo.certified.iter().map(|(l, _)| l.as_str()).collect();
    let expected: Vec<String> = (-8..0).map(|i| format!("x := {i}")).collect();
    assert_eq!(certified, expected.iter().map(String::as_str).collect::<Vec<_>>());
    for (label, sample) in &echo.certified {
        let i: i64 = label.trim_start_matches("x := ").parse().unwrap();
        assert_eq!(
            sample.traces(),
            vec![&Trace::halted(vec![OutputValue::Int(i)])],
            "weird-machine behavior for {label}"
        );
    }

    // Skip-mitigated echo: the weird machine collapses to the silent trace.
    let skip = sample_class("mitigation-skip.imp", halted_nonempty());
    assert_eq!(skip.certified.len(), 8);
    for (label, sample) in &skip.certified {
        assert_eq!(sample.traces(), vec![&Trace::halted(Vec::new())], "behavior for {label}");
    }

    // Fully mitigated echo: nothing is certified.
    let zero = sample_class("mitigation-zero.imp", halted_nonempty());
    assert!(zero.certified.is_empty(), "certified: {:?}", zero.certified);
    assert_eq!(zero.refuted.len(), 16);

    assert!(start.elapsed() < Duration::from_secs(30), "took {:?}", start.elapsed());
}

#[test]
fn criterion_03_return_chain_attack_loops_and_certifies() {
    let report = fixture("rop-loop");
    assert_eq!(report.outcome, "Certified", "details: {:?}", report.details);
    assert_eq!(report.revalidated, Some(true));
    assert!(
        report.details.iter().any(|d| d.contains("every one 42")),
        "attack must emit only 42s: {:?}",
        report.details
    );
    let count: usize = report
        .details
        .iter()
        .find_map(|d| d.strip_prefix("attack emitted ")?.split(' ').next()?.parse().ok())
        .expect("output count recorded");
    assert!(count >= 100, "only {count} outputs");
    assert!(
        report.details.iter().any(|d| d.contains("benign variant halted with an empty trace")),
        "{:?}",
        report.details
    );
}

#[test]
fn criterion_04_timing_recovery_of_random_passwords() {
    let start = Instant::now();
    let mut rng = gen::rng_from_seed(4);
    for trial in 0..20 {
        let password = [
            rng.gen_range(0..findpass::ALPHABET),
            rng.gen_range(0..findpass::ALPHABET),
            rng.gen_range(0..findpass::ALPHABET),
            rng.gen_range(0..findpass::ALPHABET),
        ];
        let rec = findpass::recover_password(&password, bounds().step_budget).unwrap();
        assert_eq!(rec.recovered, password.to_vec(), "trial {trial}");
        assert!(rec.get_info_calls <= 24, "trial {trial}: {} measurements", rec.get_info_calls);
    }
    assert!(start.elapsed() < Duration::from_secs(30), "took {:?}", start.elapsed());
}

#[test]
fn criterion_05_stage_checks_on_random_programs() {
    let b = bounds();

    // (a) Whole-program correctness fails on the stuck-at-source program.
    assert_eq!(fixture("lemma-a1").outcome, "CorrectnessCounterexample");

    // (b) Trace preservation holds on random samples for the first two stages.
    let s1 = checks::check_stage1_preservation(200, 5, &b);
    assert!(s1.ok(), "stage 1 counterexamples: {:?}", s1.counterexamples);
    let s2 = checks::check_stage2_preservation(200, 5, &b);
    assert!(s2.ok(), "stage 2 counterexamples: {:?}", s2.counterexamples);

    // (c) Whole-program correctness holds for the observer stage.
    let s3 = checks::check_stage3_correctness(200, 5, &b);
    assert!(s3.ok(), "stage 3 counterexamples: {:?}", s3.counterexamples);
}

#[test]
fn criterion_06_source_value_relation_facts() {
    let rel = &SourceValueRelation;
    assert_eq!(rel.forward(&OutputValue::Bool(true)), Some(OutputValue::Int(1)));
    assert_eq!(rel.forward(&OutputValue::Bool(false)), Some(OutputValue::Int(0)));
    for n in [0u64, 1, 2, 7, 42] {
        assert_eq!(rel.forward(&OutputValue::Nat(n)), Some(OutputValue::Int(n as i64)));
    }
    // Non-injective: 1 has two distinct sources.
    let pre1 = rel.preimages(&OutputValue::Int(1)).unwrap();
    assert!(pre1.contains(&OutputValue::Bool(true)) && pre1.contains(&OutputValue::Nat(1)));
    assert_eq!(pre1.len(), 2);
    // Partial: nothing maps to a negative integer.
    assert_eq!(rel.preimages(&OutputValue::Int(-1)), Some(Vec::new()));
}

#[test]
fn criterion_07_composed_stage_fixtures() {
    for id in ["iv9-dop", "iv10-return-alias", "iv11-rop-observer", "iv12-timing"] {
        let r = fixture(id);
        assert_eq!(r.outcome, "Certified", "{id}: {:?}", r.details);
    }
    let bad = fixture("bad-stage-const");
    assert_eq!(bad.outcome, "PreconditionFailed", "details: {:?}", bad.details);
}

#[test]
fn criterion_08_separate_compilation_is_modular() {
    let b = bounds();

    // Corpus pairs, stage 1: each source component against simple contexts.
    // Wide interfaces get a narrow input domain to keep the exhaustive
    // per-valuation comparison affordable (the sample is still compared
    // entry by entry).
    for comp_file in
        ["output-neg.imp", "mitigation-skip.imp", "mitigation-zero.imp", "dop-division.imp", "iv10-component.imp"]
    {
        let comp = parse_component(&corpus(comp_file)).unwrap();
        let pair_bounds = if comp.vars.len() > 2 {
            ExplorationBounds { int_lo: -1, int_hi: 1, nat_max: 1, ..b.clone() }
        } else {
            b.clone()
        };
        let hole = format!("(hole ({}))", comp.vars.join(" "));
        for ctx_src in [hole.clone(), format!("(seq skip {hole})"), format!("(if true {hole} skip)")] {
            let ctx = parse_context(&ctx_src).unwrap();
            assert_eq!(
                checks::modularity_stage1_pair(&ctx, &comp, &pair_bounds),
                None,
                "{comp_file} under {ctx_src}"
            );
        }
    }

    // Corpus pairs, stages 2 and 3: pointer-language contexts against the
    // corpus components.
    let dop_ctx = parse_toyc(&corpus("dop-division.attack.toyc")).unwrap();
    let dop_comp = compile_imp_component(&parse_component(&corpus("dop-division.imp")).unwrap());
    let rop_comp = parse_toyc(&corpus("rop-loop.toyc")).unwrap();
    let rop_ctx = toyc_arg_call_contexts("vulnerable", 2, &[0]).remove(0).1;
    let findpass_comp = parse_toyc(&corpus("timing-findpass.toyc").replace("{p0}", "1").replace("{p1}", "2").replace("{p2}", "3").replace("{p3}", "0")).unwrap();
    let findpass_ctx = toyc_arg_call_contexts("check_pass", 4, &[1]).remove(0).1;
    for (name, ctx, comp) in [
        ("dop", &dop_ctx, &dop_comp),
        ("rop", &rop_ctx, &rop_comp),
        ("findpass", &findpass_ctx, &findpass_comp),
    ] {
        assert_eq!(checks::modularity_stage2_pair(ctx, comp, 3, &b), None, "stage 2, {name}");
        assert_eq!(checks::modularity_stage3_pair(ctx, comp, 3, &b), None, "stage 3, {name}");
    }

    // Random pairs, all stages.
    let m1 = checks::modularity_stage1(100, 8, &b);
    assert!(m1.ok(), "stage 1 mismatches: {:?}", m1.mismatches);
    let m2 = checks::modularity_stage2(100, 8, &b);
    assert!(m2.ok(), "stage 2 mismatches: {:?}", m2.mismatches);
    let m3 = checks::modularity_stage3(100, 8, &b);
    assert!(m3.ok(), "stage 3 mismatches: {:?}", m3.mismatches);
}

#[test]
fn criterion_09_state_machine_partition_and_theorem() {
    let start = Instant::now();
    assert_eq!(fixture("fsm-lock").outcome, "TheoremHolds");
    assert_eq!(fixture("fsm-lock-gap").outcome, "GapEdges");

    let (ifsm, _) = parse_fsm_text(&corpus("fsm-lock.ifsm")).unwrap();
    let (cpu, _) = parse_fsm_text(&corpus("fsm-lock.cpu")).unwrap();
    let gamma = parse_gamma_text(&corpus("fsm-lock.gamma")).unwrap();
    let theorem = weird_implies_exploit(&ifsm, &cpu, &gamma, 6).unwrap();
    assert_eq!(theorem.weird_checked, vec!["w".to_string()]);
    assert!(theorem.violations.is_empty(), "violations: {:?}", theorem.violations);
    assert!(sane_transition_gap(&ifsm, &cpu, &gamma).unwrap().is_empty());

    let (gap_cpu, _) = parse_fsm_text(&corpus("fsm-lock-gap.cpu")).unwrap();
    assert_eq!(
        sane_transition_gap(&ifsm, &gap_cpu, &gamma).unwrap(),
        vec![("c0".to_string(), "b".to_string(), "c2".to_string())]
    );
    assert!(start.elapsed() < Duration::from_secs(5), "took {:?}", start.elapsed());
}

#[test]
fn criterion_10_certified_evidence_revalidates() {
    let mut certified = 0;
    for report in all_fixture_reports() {
        if report.outcome == "Certified" {
            certified += 1;
            assert_eq!(
                report.revalidated,
                Some(true),
                "{}: certified evidence must survive independent re-validation",
                report.id
            );
        }
        assert!(report.passed(), "{}: outcome {} (expected {})", report.id, report.outcome, report.expected);
    }
    assert!(certified >= 9, "only {certified} certified fixtures");
}
