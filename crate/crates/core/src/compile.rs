//! The three-stage compilation chain, with separate entry points for whole
//! programs, components, and contexts, so that compile-then-link and
//! link-then-compile can both be exercised.
//!
//! Stage one (source to pointer language): booleans become 0/1 integers,
//! conjunction becomes a product and disjunction `a + b - a*b` (operands are
//! 0/1 in well-sorted programs). A component becomes a procedure named
//! `hole` taking every interface variable by pointer, so writes made by the
//! compiled component are visible to the compiled context afterwards — that
//! is what makes separate compilation agree with whole-program compilation.
//!
//! Stage two (pointer language to assembly): structured control flow lowers
//! to conditional jumps (`jmpz`, with guard 0 as the unconditional form),
//! every procedure body ends in `return`, and a tiny boot stub `call main;
//! halt` closes the program over a chosen argument tuple. The shared frame
//! discipline means the compiler only has to place code; a `LayoutReport`
//! records every placed instruction and entry point so tests (and attacks)
//! can resolve addresses symbolically instead of hard-coding them.
//!
//! Stage three (assembly to observer): the compiled program runs the inner
//! assembly program through `get-info` and re-emits its outputs one by one.
//! The step count that `get-info` also returns is deliberately ignored by
//! compiled code — but it is sitting right there for any context to read.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::imp::{self, ImpCmd, ImpComponent, ImpContext, ImpExpr, ImpOp, ImpValue};
use crate::toya::{
    AComponent, AContext, AExpr, AInstr, ALValue, AMem, AObject, AProcDecl, AProgram,
};
use crate::toyc::{
    layout_frame, CCmd, CDeclType, CExpr, CLValue, COp, CProc, CStoreDecls, FrameLayout,
    STACK_BASE,
};
use crate::toyh::{HCmd, HContext, HExpr, HInner, HProgram};
use crate::trace::{
    relate_trace, BehaviorSample, ExplorationBounds, InputKey, InputValue, Trace, TraceRelation,
};

/// The procedure name a compiled component publishes.
pub const HOLE_PROC: &str = "hole";

/// Where component code is placed, far from context code and the stack.
pub const COMPONENT_CODE_BASE: i64 = 5000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    MissingMain,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::MissingMain => write!(f, "program has no `main` procedure"),
        }
    }
}

// ---------------------------------------------------------------------------
// Stage one: source language to pointer language.

fn c_lit(v: ImpValue) -> CExpr {
    match v {
        ImpValue::Bool(b) => CExpr::Lit(b as i64),
        ImpValue::Nat(n) => CExpr::Lit(n as i64),
    }
}

fn compile_imp_expr(e: &ImpExpr, ptr_vars: &BTreeSet<String>) -> CExpr {
    match e {
        ImpExpr::Lit(v) => c_lit(*v),
        ImpExpr::Var(x) => {
            if ptr_vars.contains(x) {
                CExpr::Deref(Box::new(CExpr::Var(x.clone())))
            } else {
                CExpr::Var(x.clone())
            }
        }
        ImpExpr::Bin(op, a, b) => {
            let a = compile_imp_expr(a, ptr_vars);
            let b = compile_imp_expr(b, ptr_vars);
            match op {
                ImpOp::Add => CExpr::Bin(COp::Add, Box::new(a), Box::new(b)),
                ImpOp::Mul => CExpr::Bin(COp::Mul, Box::new(a), Box::new(b)),
                ImpOp::Lt => CExpr::Bin(COp::Lt, Box::new(a), Box::new(b)),
                ImpOp::Eq => CExpr::Bin(COp::Eq, Box::new(a), Box::new(b)),
                // Operands are 0/1 in well-sorted programs.
                ImpOp::And => CExpr::Bin(COp::Mul, Box::new(a), Box::new(b)),
                ImpOp::Or => CExpr::Bin(
                    COp::Sub,
                    Box::new(CExpr::Bin(COp::Add, Box::new(a.clone()), Box::new(b.clone()))),
                    Box::new(CExpr::Bin(COp::Mul, Box::new(a), Box::new(b))),
                ),
            }
        }
    }
}

fn compile_imp_cmd(c: &ImpCmd, ptr_vars: &BTreeSet<String>) -> CCmd {
    match c {
        ImpCmd::Skip => CCmd::Skip,
        ImpCmd::Assign(x, e) => {
            let lv = if ptr_vars.contains(x) {
                CLValue::Deref(CExpr::Var(x.clone()))
            } else {
                CLValue::Var(x.clone())
            };
            CCmd::Assign(lv, compile_imp_expr(e, ptr_vars))
        }
        ImpCmd::Output(e) => CCmd::Output(compile_imp_expr(e, ptr_vars)),
        ImpCmd::Seq(a, b) => CCmd::Seq(
            Box::new(compile_imp_cmd(a, ptr_vars)),
            Box::new(compile_imp_cmd(b, ptr_vars)),
        ),
        ImpCmd::If(e, t, f) => CCmd::If(
            compile_imp_expr(e, ptr_vars),
            Box::new(compile_imp_cmd(t, ptr_vars)),
            Box::new(compile_imp_cmd(f, ptr_vars)),
        ),
        ImpCmd::While(e, b) => CCmd::While(
            compile_imp_expr(e, ptr_vars),
            Box::new(compile_imp_cmd(b, ptr_vars)),
        ),
    }
}

/// Compile a component to a one-procedure store: `hole` takes every
/// interface variable by pointer.
pub fn compile_imp_component(comp: &ImpComponent) -> CStoreDecls {
    let ptr_vars: BTreeSet<String> = comp.vars.iter().cloned().collect();
    let proc = CProc {
        name: HOLE_PROC.to_string(),
        params: comp.vars.iter().map(|v| (v.clone(), CDeclType::Ptr)).collect(),
        locals: Vec::new(),
        body: compile_imp_cmd(&comp.body, &ptr_vars),
    };
    CStoreDecls { procs: vec![proc] }
}

/// Compile a whole program: `main` takes the program's free variables (in
/// sorted order, matching the source behavior's valuation keys) as plain
/// integers.
pub fn compile_imp_whole(cmd: &ImpCmd) -> CStoreDecls {
    let vars = imp::free_vars(cmd);
    let proc = CProc {
        name: "main".to_string(),
        params: vars.iter().map(|v| (v.clone(), CDeclType::Int)).collect(),
        locals: Vec::new(),
        body: compile_imp_cmd(cmd, &BTreeSet::new()),
    };
    CStoreDecls { procs: vec![proc] }
}

fn context_vars(ctx: &ImpContext, set: &mut BTreeSet<String>) {
    match ctx {
        ImpContext::Hole(vs) => set.extend(vs.iter().cloned()),
        ImpContext::SeqLeft(c, rest) => {
            context_vars(c, set);
            set.extend(imp::free_vars(rest));
        }
        ImpContext::SeqRight(first, c) => {
            set.extend(imp::free_vars(first));
            context_vars(c, set);
        }
        ImpContext::IfThen(e, c, els) => {
            set.extend(imp::free_vars(&ImpCmd::Output(e.clone())));
            context_vars(c, set);
            set.extend(imp::free_vars(els));
        }
        ImpContext::IfElse(e, then, c) => {
            set.extend(imp::free_vars(&ImpCmd::Output(e.clone())));
            set.extend(imp::free_vars(then));
            context_vars(c, set);
        }
        ImpContext::While(e, c) => {
            set.extend(imp::free_vars(&ImpCmd::Output(e.clone())));
            context_vars(c, set);
        }
    }
}

fn compile_imp_ctx_cmd(ctx: &ImpContext) -> CCmd {
    let none = BTreeSet::new();
    match ctx {
        ImpContext::Hole(vs) => CCmd::Call(
            HOLE_PROC.to_string(),
            vs.iter().map(|v| CExpr::Addr(Box::new(CLValue::Var(v.clone())))).collect(),
        ),
        ImpContext::SeqLeft(c, rest) => CCmd::Seq(
            Box::new(compile_imp_ctx_cmd(c)),
            Box::new(compile_imp_cmd(rest, &none)),
        ),
        ImpContext::SeqRight(first, c) => CCmd::Seq(
            Box::new(compile_imp_cmd(first, &none)),
            Box::new(compile_imp_ctx_cmd(c)),
        ),
        ImpContext::IfThen(e, c, els) => CCmd::If(
            compile_imp_expr(e, &none),
            Box::new(compile_imp_ctx_cmd(c)),
            Box::new(compile_imp_cmd(els, &none)),
        ),
        ImpContext::IfElse(e, then, c) => CCmd::If(
            compile_imp_expr(e, &none),
            Box::new(compile_imp_cmd(then, &none)),
            Box::new(compile_imp_ctx_cmd(c)),
        ),
        ImpContext::While(e, c) => {
            CCmd::While(compile_imp_expr(e, &none), Box::new(compile_imp_ctx_cmd(c)))
        }
    }
}

/// Compile a context to a store whose `main` takes the union of the hole
/// interface and the context's own variables, and calls `hole` passing each
/// interface variable's address.
pub fn compile_imp_context(ctx: &ImpContext) -> CStoreDecls {
    let mut vars = BTreeSet::new();
    context_vars(ctx, &mut vars);
    let proc = CProc {
        name: "main".to_string(),
        params: vars.iter().map(|v| (v.clone(), CDeclType::Int)).collect(),
        locals: Vec::new(),
        body: compile_imp_ctx_cmd(ctx),
    };
    CStoreDecls { procs: vec![proc] }
}

/// Map a source valuation key to the compiled program's integer key.
pub fn imp_key_to_int(key: &InputKey) -> InputKey {
    key.iter()
        .map(|v| match v {
            InputValue::Bool(b) => InputValue::Int(*b as i64),
            InputValue::Nat(n) => InputValue::Int(*n as i64),
            other => other.clone(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Stage two: pointer language to assembly.

/// Where every emitted instruction and procedure landed. Lets callers find
/// addresses symbolically (a necessity for return-address rewriting, which
/// needs the concrete address of a reusable instruction).
#[derive(Debug, Clone)]
pub struct LayoutReport {
    pub base: i64,
    pub entries: Vec<(String, i64)>,
    pub layouts: Vec<(String, FrameLayout)>,
    pub instrs: Vec<(i64, String, AInstr)>,
}

impl LayoutReport {
    pub fn entry(&self, proc: &str) -> Option<i64> {
        self.entries.iter().find(|(n, _)| n == proc).map(|(_, a)| *a)
    }

    pub fn layout(&self, proc: &str) -> Option<&FrameLayout> {
        self.layouts.iter().find(|(n, _)| n == proc).map(|(_, l)| l)
    }

    /// Address of the first instruction in `proc` satisfying the predicate.
    pub fn find_instr(&self, proc: &str, pred: impl Fn(&AInstr) -> bool) -> Option<i64> {
        self.instrs
            .iter()
            .find(|(_, p, i)| p == proc && pred(i))
            .map(|(a, _, _)| *a)
    }

    pub fn render(&self) -> String {
        let mut s = format!("; code base {}\n", self.base);
        for (n, a) in &self.entries {
            s.push_str(&format!("; entry {n} = {a}\n"));
        }
        for (a, p, i) in &self.instrs {
            s.push_str(&format!("{a:6}  [{p}] {}\n", crate::toya::render_ainstr(i)));
        }
        s
    }
}

fn a_expr(e: &CExpr) -> AExpr {
    match e {
        CExpr::Lit(i) => AExpr::Lit(*i),
        CExpr::Var(x) => AExpr::Var(x.clone()),
        CExpr::Null => AExpr::Lit(0),
        CExpr::Bin(op, a, b) => AExpr::Bin(*op, Box::new(a_expr(a)), Box::new(a_expr(b))),
        CExpr::Deref(inner) => AExpr::Deref(Box::new(a_expr(inner))),
        CExpr::Addr(lv) => match lv.as_ref() {
            CLValue::Var(x) => AExpr::AddrOf(x.clone()),
            // The address of `*e` is just `e`.
            CLValue::Deref(e) => a_expr(e),
        },
    }
}

fn a_lvalue(lv: &CLValue) -> ALValue {
    match lv {
        CLValue::Var(x) => ALValue::Var(x.clone()),
        CLValue::Deref(e) => ALValue::Deref(a_expr(e)),
    }
}

/// Instruction with jump targets still local to the procedure body.
enum LocalInstr {
    Plain(AInstr),
    JmpzLocal(AExpr, usize),
}

fn lower_cmd(c: &CCmd, out: &mut Vec<LocalInstr>) {
    match c {
        CCmd::Skip => out.push(LocalInstr::Plain(AInstr::Skip)),
        CCmd::Assign(lv, e) => {
            out.push(LocalInstr::Plain(AInstr::Assign(a_lvalue(lv), a_expr(e))))
        }
        CCmd::Output(e) => out.push(LocalInstr::Plain(AInstr::Output(a_expr(e)))),
        CCmd::Call(name, args) => out.push(LocalInstr::Plain(AInstr::Call(
            name.clone(),
            args.iter().map(a_expr).collect(),
        ))),
        CCmd::Seq(a, b) => {
            lower_cmd(a, out);
            lower_cmd(b, out);
        }
        CCmd::If(e, t, f) => {
            let jmp_to_else = out.len();
            out.push(LocalInstr::JmpzLocal(a_expr(e), 0)); // patched below
            lower_cmd(t, out);
            let jmp_to_end = out.len();
            out.push(LocalInstr::JmpzLocal(AExpr::Lit(0), 0)); // unconditional
            let else_at = out.len();
            lower_cmd(f, out);
            let end_at = out.len();
            out[jmp_to_else] = match &out[jmp_to_else] {
                LocalInstr::JmpzLocal(e, _) => LocalInstr::JmpzLocal(e.clone(), else_at),
                _ => unreachable!(),
            };
            out[jmp_to_end] = LocalInstr::JmpzLocal(AExpr::Lit(0), end_at);
        }
        CCmd::While(e, b) => {
            let top = out.len();
            let jmp_out = out.len();
            out.push(LocalInstr::JmpzLocal(a_expr(e), 0)); // patched below
            lower_cmd(b, out);
            out.push(LocalInstr::JmpzLocal(AExpr::Lit(0), top));
            let end_at = out.len();
            out[jmp_out] = match &out[jmp_out] {
                LocalInstr::JmpzLocal(e, _) => LocalInstr::JmpzLocal(e.clone(), end_at),
                _ => unreachable!(),
            };
        }
    }
}

/// Place every procedure of the store contiguously starting at `base`.
fn compile_store(store: &CStoreDecls, base: i64) -> (Vec<AProcDecl>, AMem, LayoutReport) {
    let mut decls = Vec::new();
    let mut mem = AMem::new();
    let mut report = LayoutReport {
        base,
        entries: Vec::new(),
        layouts: Vec::new(),
        instrs: Vec::new(),
    };
    let mut next = base;
    for proc in &store.procs {
        let layout = layout_frame(proc);
        let entry = next;
        let mut body = Vec::new();
        lower_cmd(&proc.body, &mut body);
        body.push(LocalInstr::Plain(AInstr::Return));
        for (i, li) in body.into_iter().enumerate() {
            let addr = entry + i as i64;
            let instr = match li {
                LocalInstr::Plain(instr) => instr,
                LocalInstr::JmpzLocal(e, local) => AInstr::Jmpz(e, entry + local as i64),
            };
            report.instrs.push((addr, proc.name.clone(), instr.clone()));
            mem.insert(addr, AObject::Instr { proc: proc.name.clone(), instr });
            next = addr + 1;
        }
        report.entries.push((proc.name.clone(), entry));
        report.layouts.push((proc.name.clone(), layout.clone()));
        decls.push(AProcDecl { name: proc.name.clone(), entry, layout });
    }
    (decls, mem, report)
}

fn boot_stub(mem: &mut AMem, report: &mut LayoutReport, at: i64, args: &[i64]) {
    let call = AInstr::Call("main".to_string(), args.iter().map(|a| AExpr::Lit(*a)).collect());
    report.instrs.push((at, "@boot".to_string(), call.clone()));
    report.instrs.push((at + 1, "@boot".to_string(), AInstr::Halt));
    mem.insert(at, AObject::Instr { proc: "@boot".to_string(), instr: call });
    mem.insert(at + 1, AObject::Instr { proc: "@boot".to_string(), instr: AInstr::Halt });
}

/// Compile a whole program closed over one `main` argument tuple: code at
/// base 0, then a boot stub `call main(args); halt`.
pub fn compile_toyc_whole(
    store: &CStoreDecls,
    args: &[i64],
) -> Result<(AProgram, LayoutReport), CompileError> {
    if store.lookup("main").is_none() {
        return Err(CompileError::MissingMain);
    }
    let (procs, mut mem, mut report) = compile_store(store, 0);
    let boot = mem.keys().next_back().map(|a| a + 1).unwrap_or(0);
    boot_stub(&mut mem, &mut report, boot, args);
    Ok((AProgram { procs, mem, pc: boot, sp: STACK_BASE }, report))
}

/// Compile a context store (its `main` and helpers) closed over one
/// argument tuple. Calls into component procedures stay symbolic; the
/// addresses resolve when the compiled component is linked in.
pub fn compile_toyc_context(
    store: &CStoreDecls,
    args: &[i64],
) -> Result<(AContext, LayoutReport), CompileError> {
    if store.lookup("main").is_none() {
        return Err(CompileError::MissingMain);
    }
    let (procs, mut mem, mut report) = compile_store(store, 0);
    let boot = mem.keys().next_back().map(|a| a + 1).unwrap_or(0);
    boot_stub(&mut mem, &mut report, boot, args);
    Ok((AContext { pc: boot, sp: STACK_BASE, procs, mem }, report))
}

/// Compile a component store into its own code region.
pub fn compile_toyc_component(store: &CStoreDecls) -> (AComponent, LayoutReport) {
    compile_toyc_component_at(store, COMPONENT_CODE_BASE)
}

/// Component compilation at an explicit code base address, for scenarios
/// where the surrounding context dictates the memory map.
pub fn compile_toyc_component_at(store: &CStoreDecls, base: i64) -> (AComponent, LayoutReport) {
    let (procs, mem, report) = compile_store(store, base);
    (AComponent { procs, mem }, report)
}

// ---------------------------------------------------------------------------
// Stage three: assembly to observer.

fn reemit_body(inner: HInner) -> HCmd {
    let xs = "xs".to_string();
    let i = "i".to_string();
    HCmd::Seq(
        Box::new(HCmd::GetInfo(xs.clone(), "steps".to_string(), inner)),
        Box::new(HCmd::Seq(
            Box::new(HCmd::Assign(i.clone(), HExpr::Lit(0))),
            Box::new(HCmd::While(
                HExpr::Bin(
                    COp::Lt,
                    Box::new(HExpr::Var(i.clone())),
                    Box::new(HExpr::Len(Box::new(HExpr::Var(xs.clone())))),
                ),
                Box::new(HCmd::Seq(
                    Box::new(HCmd::Output(HExpr::Index(
                        Box::new(HExpr::Var(xs)),
                        Box::new(HExpr::Var(i.clone())),
                    ))),
                    Box::new(HCmd::Assign(
                        i.clone(),
                        HExpr::Bin(COp::Add, Box::new(HExpr::Var(i)), Box::new(HExpr::Lit(1))),
                    )),
                )),
            )),
        )),
    )
}

/// Compile a whole assembly program: run it via `get-info`, re-emit its
/// outputs. The step count is bound but never used by compiled code.
pub fn compile_toya_whole(prog: &AProgram) -> HProgram {
    HProgram { body: reemit_body(HInner::Linked(prog.clone())) }
}

/// Compile an assembly context: same shape, but the inner program is still
/// awaiting the component.
pub fn compile_toya_context(ctx: &AContext) -> HContext {
    HContext { body: reemit_body(HInner::Hole(ctx.clone())) }
}

/// Components pass through this stage unchanged: the observer language
/// embeds assembly programs directly.
pub fn compile_toya_component(comp: &AComponent) -> AComponent {
    comp.clone()
}

// ---------------------------------------------------------------------------
// Whole-pipeline behaviors and sample-based checks.

/// Behavior of a compiled-to-assembly whole program, one closed compile and
/// run per `main` argument tuple (keys match `behavior_toyc`).
pub fn behavior_toyc_via_toya(
    store: &CStoreDecls,
    bounds: &ExplorationBounds,
) -> Result<BehaviorSample, CompileError> {
    behavior_per_args(store, bounds, |args| {
        let (prog, _) = compile_toyc_whole(store, args)?;
        Ok(crate::toya::run_toya(&prog, bounds.step_budget))
    })
}

/// Behavior of the full remaining pipeline: compile to assembly, then to the
/// observer language, one closed run per argument tuple.
pub fn behavior_toyc_via_toyh(
    store: &CStoreDecls,
    bounds: &ExplorationBounds,
) -> Result<BehaviorSample, CompileError> {
    behavior_per_args(store, bounds, |args| {
        let (prog, _) = compile_toyc_whole(store, args)?;
        let h = compile_toya_whole(&prog);
        Ok(crate::toyh::run_toyh(&h, bounds.step_budget, bounds.step_budget))
    })
}

fn behavior_per_args(
    store: &CStoreDecls,
    bounds: &ExplorationBounds,
    mut run: impl FnMut(&[i64]) -> Result<Trace, CompileError>,
) -> Result<BehaviorSample, CompileError> {
    let main = store.lookup("main").ok_or(CompileError::MissingMain)?;
    let arity = main.params.len();
    let domain: Vec<i64> = bounds.int_domain().collect();
    let mut sample = BehaviorSample::new(bounds.clone());
    let mut idx = vec![0usize; arity];
    loop {
        let args: Vec<i64> = idx.iter().map(|&i| domain[i]).collect();
        let key: InputKey = args.iter().map(|&a| InputValue::Int(a)).collect();
        sample.entries.insert(key, run(&args)?);
        if arity == 0 {
            break;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < domain.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == arity {
                break;
            }
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    Ok(sample)
}

/// A compiled-program trace that fails to relate to its source trace.
#[derive(Debug, Clone)]
pub struct CorrectnessFailure {
    pub key: InputKey,
    pub source: Trace,
    pub target: Option<Trace>,
}

/// Check, input by input, that every source trace relates to the compiled
/// trace at the mapped key. This is the bounded whole-program correctness
/// check used for compiler validation on samples.
pub fn check_correct_on_samples(
    source: &BehaviorSample,
    target: &BehaviorSample,
    relation: &dyn TraceRelation,
    key_map: impl Fn(&InputKey) -> InputKey,
) -> Result<(), CorrectnessFailure> {
    for (key, src_trace) in &source.entries {
        let tgt_key = key_map(key);
        match target.entries.get(&tgt_key) {
            Some(tgt_trace) if relate_trace(relation, src_trace, tgt_trace) => {}
            other => {
                return Err(CorrectnessFailure {
                    key: key.clone(),
                    source: src_trace.clone(),
                    target: other.cloned(),
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imp::{behavior_imp, parse_program, run_imp};
    use crate::toya::run_toya;
    use crate::toyc::{behavior_toyc, link_toyc, parse_toyc, run_toyc};
    use crate::toyh::run_toyh;
    use crate::trace::{
        IntIdentityRelation, OutputValue, ReemitRelation, SourceValueRelation, Terminal,
    };

    fn division_whole() -> ImpCmd {
        let comp = crate::imp::parse_component(crate::imp::division_component_src()).unwrap();
        comp.body
    }

    #[test]
    fn stage_one_correct_on_division_reference_input() {
        let whole = division_whole();
        // Params are the sorted free variables: a, b, d, r, x, y.
        let store = compile_imp_whole(&whole);
        let names: Vec<&str> =
            store.procs[0].params.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["a", "b", "d", "r", "x", "y"]);
        let t = run_toyc(&store, &[1, 2, 0, 0, 3, 4], 10_000).unwrap();
        assert_eq!(
            t,
            Trace::halted(vec![
                OutputValue::Int(3),
                OutputValue::Int(4),
                OutputValue::Int(2),
                OutputValue::Int(6),
            ])
        );
    }

    #[test]
    fn stage_one_correct_on_small_program_all_valuations() {
        let prog = parse_program(
            "(seq (if (< x y) (output x) (output y)) (while (< x y) (assign x (+ x 1))))",
        )
        .unwrap();
        let bounds = ExplorationBounds::quick();
        let src = behavior_imp(&prog, &bounds);
        let store = compile_imp_whole(&prog);
        let tgt = behavior_toyc(&store, &bounds).unwrap();
        // Only well-sorted valuations must be preserved: both variables
        // are used at type nat, so skip boolean valuations.
        let rel = SourceValueRelation;
        for (key, src_trace) in &src.entries {
            if key.iter().any(|v| matches!(v, InputValue::Bool(_))) {
                continue;
            }
            let tgt_trace = &tgt.entries[&imp_key_to_int(key)];
            assert!(
                relate_trace(&rel, src_trace, tgt_trace),
                "valuation {key:?}: {src_trace:?} vs {tgt_trace:?}"
            );
        }
    }

    #[test]
    fn stage_one_separate_compilation_agrees_with_whole() {
        // Context: x := 2; [hole]; output x  -- component: x := x + 1.
        let ctx = ImpContext::SeqRight(
            ImpCmd::Assign("x".into(), ImpExpr::Lit(ImpValue::Nat(2))),
            Box::new(ImpContext::SeqLeft(
                Box::new(ImpContext::Hole(vec!["x".into()])),
                ImpCmd::Output(ImpExpr::Var("x".into())),
            )),
        );
        let comp = ImpComponent {
            vars: vec!["x".into()],
            body: ImpCmd::Assign(
                "x".into(),
                ImpExpr::Bin(
                    ImpOp::Add,
                    Box::new(ImpExpr::Var("x".into())),
                    Box::new(ImpExpr::Lit(ImpValue::Nat(1))),
                ),
            ),
        };
        let whole = crate::imp::link_imp(&ctx, &comp).unwrap();
        let separate = link_toyc(&compile_imp_context(&ctx), &compile_imp_component(&comp))
            .unwrap();
        let together = compile_imp_whole(&whole);
        let bounds = ExplorationBounds::quick();
        let b1 = behavior_toyc(&separate, &bounds).unwrap();
        let b2 = behavior_toyc(&together, &bounds).unwrap();
        // Writes made through the pointer parameters propagate back, so the
        // two compilations agree input by input.
        assert_eq!(b1.entries, b2.entries);
        assert_eq!(b1.entries[&vec![InputValue::Int(0)]].outputs, vec![OutputValue::Int(3)]);
    }

    #[test]
    fn stage_two_control_flow_lowering() {
        let store = parse_toyc(
            "(store (proc main ((n int)) () (while (> n 0) (seq (output n) (assign n (- n 1))))))",
        )
        .unwrap();
        for n in -2..=5 {
            let src = run_toyc(&store, &[n], 10_000).unwrap();
            let (prog, _) = compile_toyc_whole(&store, &[n]).unwrap();
            let tgt = run_toya(&prog, 10_000);
            assert!(relate_trace(&IntIdentityRelation, &src, &tgt), "n={n}: {src:?} vs {tgt:?}");
        }
    }

    #[test]
    fn stage_two_not_correct_on_ub_program() {
        // A wild pointer write is an immediate error at the pointer level
        // but a plain allocating write at the assembly level, so the
        // compiled program halts normally: stage two is not correct for
        // whole programs, only trace-preserving.
        let store = parse_toyc(
            "(store (proc main () ((x int)) (assign x 77) (assign (deref x) 1)))",
        )
        .unwrap();
        let src = run_toyc(&store, &[], 10_000).unwrap();
        assert_eq!(src.terminal, Terminal::Error);
        let (prog, _) = compile_toyc_whole(&store, &[]).unwrap();
        let tgt = run_toya(&prog, 10_000);
        assert_eq!(tgt.terminal, Terminal::Halted);
        assert!(!relate_trace(&IntIdentityRelation, &src, &tgt));
    }

    #[test]
    fn stage_two_if_and_calls() {
        let store = parse_toyc(
            "(store
               (proc helper ((p ptr)) () (assign (deref p) (* (deref p) 10)))
               (proc main ((n int)) ((k int))
                 (assign k n)
                 (call helper (addr k))
                 (if (>= k 0) (output k) (output (- 0 k)))))",
        )
        .unwrap();
        for n in -3..=3 {
            let src = run_toyc(&store, &[n], 10_000).unwrap();
            let (prog, _) = compile_toyc_whole(&store, &[n]).unwrap();
            let tgt = run_toya(&prog, 10_000);
            assert!(relate_trace(&IntIdentityRelation, &src, &tgt), "n={n}");
        }
    }

    #[test]
    fn stage_two_separate_compilation_agrees_with_whole() {
        let ctx_store = parse_toyc(
            "(store (proc main ((n int)) () (call hole (addr n)) (output n)))",
        )
        .unwrap();
        let comp_store = parse_toyc(
            "(store (proc hole ((p ptr)) () (assign (deref p) (+ (deref p) 5))))",
        )
        .unwrap();
        let whole = link_toyc(&ctx_store, &comp_store).unwrap();
        for n in -2..=2 {
            let (sep_ctx, _) = compile_toyc_context(&ctx_store, &[n]).unwrap();
            let (sep_comp, _) = compile_toyc_component(&comp_store);
            let sep = crate::toya::link_toya(&sep_ctx, &sep_comp).unwrap();
            let (tog, _) = compile_toyc_whole(&whole, &[n]).unwrap();
            assert_eq!(run_toya(&sep, 10_000), run_toya(&tog, 10_000), "n={n}");
        }
    }

    #[test]
    fn stage_three_reemits_outputs() {
        let store =
            parse_toyc("(store (proc main ((n int)) () (output n) (output (+ n 1))))").unwrap();
        let (prog, _) = compile_toyc_whole(&store, &[7]).unwrap();
        let src = run_toya(&prog, 10_000);
        let h = compile_toya_whole(&prog);
        let tgt = run_toyh(&h, 10_000, 10_000);
        assert!(relate_trace(&ReemitRelation, &src, &tgt));
        assert_eq!(tgt.outputs, vec![OutputValue::Int(7), OutputValue::Int(8)]);
        assert_eq!(tgt.terminal, Terminal::Halted);
    }

    #[test]
    fn full_pipeline_on_division_reference_input() {
        let whole = division_whole();
        let mut store = crate::imp::Store::new();
        for (v, n) in [("a", 1), ("b", 2), ("d", 0), ("r", 0), ("x", 3), ("y", 4)] {
            store.insert(v.to_string(), ImpValue::Nat(n));
        }
        let (src, _) = run_imp(&whole, store, 10_000);
        let c = compile_imp_whole(&whole);
        let (a, _) = compile_toyc_whole(&c, &[1, 2, 0, 0, 3, 4]).unwrap();
        let h = compile_toya_whole(&a);
        let tgt = run_toyh(&h, 10_000, 10_000);
        let stage23 = crate::trace::ComposedRelation::new(&IntIdentityRelation, &ReemitRelation);
        let all = crate::trace::ComposedRelation::new(&SourceValueRelation, &stage23);
        assert!(relate_trace(&all, &src, &tgt), "{src:?} vs {tgt:?}");
        assert_eq!(
            tgt.outputs,
            vec![
                OutputValue::Int(3),
                OutputValue::Int(4),
                OutputValue::Int(2),
                OutputValue::Int(6),
            ]
        );
    }

    #[test]
    fn layout_report_resolves_gadget_addresses() {
        let comp_store = parse_toyc(
            "(store (proc hole ((p ptr)) () (assign (deref p) 42) (output (deref p))))",
        )
        .unwrap();
        let (_, report) = compile_toyc_component(&comp_store);
        let store_addr = report
            .find_instr("hole", |i| matches!(i, AInstr::Assign(ALValue::Deref(_), AExpr::Lit(42))))
            .unwrap();
        let out_addr = report
            .find_instr("hole", |i| matches!(i, AInstr::Output(_)))
            .unwrap();
        assert_eq!(store_addr, COMPONENT_CODE_BASE);
        assert_eq!(out_addr, COMPONENT_CODE_BASE + 1);
        assert_eq!(report.entry("hole"), Some(COMPONENT_CODE_BASE));
    }
}
