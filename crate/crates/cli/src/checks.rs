//! Differential compiler-stage checks over random program samples:
//! whole-program correctness, trace preservation, and per-stage
//! modularity of separate compilation.

use crate::gen;
use wmstack_core::compile::{
    behavior_toyc_via_toya, compile_imp_component, compile_imp_context, compile_imp_whole,
    compile_toya_context, compile_toya_whole, compile_toyc_component, compile_toyc_context,
    compile_toyc_whole, imp_key_to_int,
};
use wmstack_core::imp::{behavior_imp, link_imp, render_cmd};
use wmstack_core::toya::{behavior_toya, link_toya, run_toya};
use wmstack_core::toyc::{behavior_toyc, link_toyc, render_toyc};
use wmstack_core::toyh::{link_toyh, run_toyh};
use wmstack_core::trace::{
    behavior_related, relate_trace, ExplorationBounds, IntIdentityRelation, ReemitRelation,
    SourceValueRelation, Terminal,
};

#[derive(Debug, Default)]
pub struct StageReport {
    pub programs: usize,
    /// Valuations skipped because the source run did not complete: stuck
    /// (ill-sorted) or erroring source executions carry no preserved trace.
    pub skipped_runs: usize,
    pub counterexamples: Vec<String>,
}

impl StageReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Stage-one trace preservation: every halting source trace relates to the
/// compiled program's trace at the corresponding input.
pub fn check_stage1_preservation(programs: usize, seed: u64, bounds: &ExplorationBounds) -> StageReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = StageReport { programs, ..Default::default() };
    for _ in 0..programs {
        let prog = gen::random_imp_whole(&mut rng);
        let src = behavior_imp(&prog, bounds);
        let store = compile_imp_whole(&prog);
        let tgt = match behavior_toyc(&store, bounds) {
            Ok(b) => b,
            Err(e) => {
                report.counterexamples.push(format!("{}: target behavior error {e:?}", render_cmd(&prog)));
                continue;
            }
        };
        for (key, s) in &src.entries {
            if s.terminal != Terminal::Halted {
                report.skipped_runs += 1;
                continue;
            }
            let t = &tgt.entries[&imp_key_to_int(key)];
            if !relate_trace(&SourceValueRelation, s, t) {
                report.counterexamples.push(format!(
                    "{}: key {key:?}: {s:?} not preserved as {t:?}",
                    render_cmd(&prog)
                ));
            }
        }
    }
    report
}

/// Stage-two trace preservation: every non-erroring pointer-level trace
/// relates to the assembly trace at the same input.
pub fn check_stage2_preservation(programs: usize, seed: u64, bounds: &ExplorationBounds) -> StageReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = StageReport { programs, ..Default::default() };
    for _ in 0..programs {
        let store = gen::random_toyc_whole(&mut rng);
        let src = match behavior_toyc(&store, bounds) {
            Ok(b) => b,
            Err(e) => {
                report.counterexamples.push(format!("{}: source behavior error {e:?}", render_toyc(&store)));
                continue;
            }
        };
        let tgt = match behavior_toyc_via_toya(&store, bounds) {
            Ok(b) => b,
            Err(e) => {
                report.counterexamples.push(format!("{}: target behavior error {e:?}", render_toyc(&store)));
                continue;
            }
        };
        for (key, s) in &src.entries {
            if s.terminal == Terminal::Error || s.terminal == Terminal::Stuck {
                report.skipped_runs += 1;
                continue;
            }
            let t = &tgt.entries[key];
            if !relate_trace(&IntIdentityRelation, s, t) {
                report.counterexamples.push(format!(
                    "{}: key {key:?}: {s:?} not preserved as {t:?}",
                    render_toyc(&store)
                ));
            }
        }
    }
    report
}

/// Stage-three whole-program correctness: the observer-level behavior of a
/// compiled assembly program relates (in both directions) to the assembly
/// behavior.
pub fn check_stage3_correctness(programs: usize, seed: u64, bounds: &ExplorationBounds) -> StageReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = StageReport { programs, ..Default::default() };
    for i in 0..programs {
        let store = gen::random_toyc_whole(&mut rng);
        // Close the program over one argument tuple drawn from the domain.
        let arity = store.lookup("main").map(|m| m.params.len()).unwrap_or(0);
        let domain: Vec<i64> = bounds.int_domain().collect();
        let args: Vec<i64> = (0..arity).map(|k| domain[(i + k) % domain.len()]).collect();
        let Ok((prog, _)) = compile_toyc_whole(&store, &args) else {
            report.counterexamples.push("missing main".to_string());
            continue;
        };
        let src = behavior_toya(&prog, bounds);
        let h = compile_toya_whole(&prog);
        let tgt = wmstack_core::toyh::behavior_toyh(&h, bounds);
        if !behavior_related(&ReemitRelation, &src, &tgt) {
            report.counterexamples.push(format!(
                "args {args:?}: assembly {:?} vs observer {:?}",
                src.traces(),
                tgt.traces()
            ));
        }
    }
    report
}

/// Stage-one whole-program correctness on a single program; returns the
/// mismatch description if the behaviors do not relate.
pub fn stage1_correctness_counterexample(
    prog: &wmstack_core::imp::ImpCmd,
    bounds: &ExplorationBounds,
) -> Option<String> {
    let src = behavior_imp(prog, bounds);
    let store = compile_imp_whole(prog);
    let tgt = behavior_toyc(&store, bounds).ok()?;
    if behavior_related(&SourceValueRelation, &src, &tgt) {
        None
    } else {
        Some(format!(
            "source traces {:?} do not relate to compiled traces {:?}",
            src.traces(),
            tgt.traces()
        ))
    }
}

#[derive(Debug, Default)]
pub struct ModularityReport {
    pub pairs: usize,
    pub mismatches: Vec<String>,
}

impl ModularityReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Stage-one modularity: compiling the linked whole equals linking the
/// separately compiled context and component, behavior entry by entry.
pub fn modularity_stage1(pairs: usize, seed: u64, bounds: &ExplorationBounds) -> ModularityReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = ModularityReport { pairs, ..Default::default() };
    for _ in 0..pairs {
        let (ctx, comp) = gen::random_imp_pair(&mut rng);
        if let Some(m) = modularity_stage1_pair(&ctx, &comp, bounds) {
            report.mismatches.push(m);
        }
    }
    report
}

pub fn modularity_stage1_pair(
    ctx: &wmstack_core::imp::ImpContext,
    comp: &wmstack_core::imp::ImpComponent,
    bounds: &ExplorationBounds,
) -> Option<String> {
    let whole = match link_imp(ctx, comp) {
        Ok(w) => w,
        Err(e) => return Some(format!("source link failure: {e:?}")),
    };
    let together = compile_imp_whole(&whole);
    let separate = match link_toyc(&compile_imp_context(ctx), &compile_imp_component(comp)) {
        Ok(s) => s,
        Err(e) => return Some(format!("target link failure: {e:?}")),
    };
    let b1 = behavior_toyc(&together, bounds).ok()?;
    let b2 = behavior_toyc(&separate, bounds).ok()?;
    (b1.entries != b2.entries).then(|| {
        format!(
            "{}: whole-compiled {:?} vs separately-compiled {:?}",
            wmstack_core::imp::render_context(ctx),
            b1.entries,
            b2.entries
        )
    })
}

/// Stage-two modularity, one closed argument tuple per pair.
pub fn modularity_stage2(pairs: usize, seed: u64, bounds: &ExplorationBounds) -> ModularityReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = ModularityReport { pairs, ..Default::default() };
    for i in 0..pairs {
        let (ctx, comp) = gen::random_toyc_pair(&mut rng);
        if let Some(m) = modularity_stage2_pair(&ctx, &comp, i as i64 % 5 - 2, bounds) {
            report.mismatches.push(m);
        }
    }
    report
}

pub fn modularity_stage2_pair(
    ctx: &wmstack_core::toyc::CStoreDecls,
    comp: &wmstack_core::toyc::CStoreDecls,
    arg_seed: i64,
    bounds: &ExplorationBounds,
) -> Option<String> {
    let whole = match link_toyc(ctx, comp) {
        Ok(w) => w,
        Err(e) => return Some(format!("source link failure: {e:?}")),
    };
    let arity = whole.lookup("main").map(|m| m.params.len()).unwrap_or(0);
    let args: Vec<i64> = (0..arity as i64).map(|k| arg_seed + k).collect();
    let (together, _) = compile_toyc_whole(&whole, &args).ok()?;
    let (actx, _) = compile_toyc_context(ctx, &args).ok()?;
    let (acomp, _) = compile_toyc_component(comp);
    let separate = match link_toya(&actx, &acomp) {
        Ok(s) => s,
        Err(e) => return Some(format!("target link failure: {e:?}")),
    };
    let t1 = run_toya(&together, bounds.step_budget);
    let t2 = run_toya(&separate, bounds.step_budget);
    (t1 != t2).then(|| format!("args {args:?}: whole-compiled {t1:?} vs separately-compiled {t2:?}"))
}

/// Stage-three modularity: wrapping a context as an observer and linking
/// the untouched component equals compiling the linked assembly whole.
pub fn modularity_stage3(pairs: usize, seed: u64, bounds: &ExplorationBounds) -> ModularityReport {
    let mut rng = gen::rng_from_seed(seed);
    let mut report = ModularityReport { pairs, ..Default::default() };
    for i in 0..pairs {
        let (ctx, comp) = gen::random_toyc_pair(&mut rng);
        if let Some(m) = modularity_stage3_pair(&ctx, &comp, i as i64 % 5 - 2, bounds) {
            report.mismatches.push(m);
        }
    }
    report
}

pub fn modularity_stage3_pair(
    ctx: &wmstack_core::toyc::CStoreDecls,
    comp: &wmstack_core::toyc::CStoreDecls,
    arg_seed: i64,
    bounds: &ExplorationBounds,
) -> Option<String> {
    let arity = ctx.lookup("main").map(|m| m.params.len()).unwrap_or(0);
    let args: Vec<i64> = (0..arity as i64).map(|k| arg_seed + k).collect();
    let (actx, _) = compile_toyc_context(ctx, &args).ok()?;
    let (acomp, _) = compile_toyc_component(comp);
    let whole = match link_toya(&actx, &acomp) {
        Ok(w) => w,
        Err(e) => return Some(format!("assembly link failure: {e:?}")),
    };
    let together = compile_toya_whole(&whole);
    let hctx = compile_toya_context(&actx);
    let separate = match link_toyh(&hctx, &acomp) {
        Ok(s) => s,
        Err(e) => return Some(format!("observer link failure: {e:?}")),
    };
    let t1 = run_toyh(&together, bounds.step_budget, bounds.step_budget);
    let t2 = run_toyh(&separate, bounds.step_budget, bounds.step_budget);
    (t1 != t2).then(|| format!("args {args:?}: whole-compiled {t1:?} vs separately-compiled {t2:?}"))
}
