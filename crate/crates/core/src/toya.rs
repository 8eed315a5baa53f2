//! The assembly-like target language. Code and data share one flat memory:
//! each cell holds either an integer or an instruction tagged with the
//! procedure it belongs to (the tag is what gives the instruction its frame
//! layout for variable resolution — it carries no protection whatsoever).
//!
//! The machine fetches at `pc`, resolves variables relative to `sp` using
//! the fetched instruction's frame, and trusts memory completely: `return`
//! loads whatever integers sit in the saved-return and saved-stack slots,
//! and writes through pointers may land anywhere, allocating fresh cells or
//! clobbering instructions. Reads of unmapped cells (and fetches of
//! non-instruction cells) are machine errors.
//!
//! Linking merges a context `<pc; sp; mem>` with a component's declared
//! procedures and memory; overlapping addresses refuse to link.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use crate::sexpr::{self, Sexpr, SyntaxError};
use crate::toyc::{COp, FrameLayout, Slot};
use crate::trace::{BehaviorSample, ExplorationBounds, OutputValue, Terminal, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AExpr {
    Lit(i64),
    /// Frame-relative variable of the executing instruction's procedure.
    Var(String),
    /// `sp + offset(x)`: the address of a frame variable.
    AddrOf(String),
    Bin(COp, Box<AExpr>, Box<AExpr>),
    Deref(Box<AExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ALValue {
    Var(String),
    Deref(AExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AInstr {
    Skip,
    Assign(ALValue, AExpr),
    Output(AExpr),
    /// Jump to the absolute address when the guard is zero.
    Jmpz(AExpr, i64),
    Call(String, Vec<AExpr>),
    Return,
    Halt,
}

/// A memory cell: plain value or resident instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AObject {
    Val(i64),
    Instr { proc: String, instr: AInstr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AProcDecl {
    pub name: String,
    pub entry: i64,
    pub layout: FrameLayout,
}

pub type AMem = BTreeMap<i64, AObject>;

/// A component: procedure declarations plus the memory holding their code
/// (and any data).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AComponent {
    pub procs: Vec<AProcDecl>,
    pub mem: AMem,
}

/// A context: initial program counter and stack pointer plus seeded memory.
/// Contexts may declare procedures of their own (compiled contexts do, so
/// their code gets frame-relative variable resolution).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AContext {
    pub pc: i64,
    pub sp: i64,
    pub procs: Vec<AProcDecl>,
    pub mem: AMem,
}

/// A linked whole program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AProgram {
    pub procs: Vec<AProcDecl>,
    pub mem: AMem,
    pub pc: i64,
    pub sp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ALinkError {
    AddressOverlap(i64),
    DuplicateProc(String),
}

impl fmt::Display for ALinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ALinkError::AddressOverlap(a) => write!(f, "address {a} mapped by both sides"),
            ALinkError::DuplicateProc(n) => write!(f, "procedure `{n}` declared by both sides"),
        }
    }
}

/// Merge disjoint memories and procedure tables.
pub fn link_toya(ctx: &AContext, comp: &AComponent) -> Result<AProgram, ALinkError> {
    let mut mem = ctx.mem.clone();
    for (a, obj) in &comp.mem {
        if mem.insert(*a, obj.clone()).is_some() {
            return Err(ALinkError::AddressOverlap(*a));
        }
    }
    let mut procs = ctx.procs.clone();
    for p in &comp.procs {
        if procs.iter().any(|q| q.name == p.name) {
            return Err(ALinkError::DuplicateProc(p.name.clone()));
        }
        procs.push(p.clone());
    }
    Ok(AProgram { procs, mem, pc: ctx.pc, sp: ctx.sp })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AState {
    pub pc: i64,
    pub sp: i64,
    pub mem: AMem,
}

pub enum AStep {
    Stepped(Option<i64>),
    Halted,
    /// Machine error: fetch of a non-instruction, read of an unmapped cell,
    /// unknown variable or procedure.
    Error,
}

struct Err_;

fn frame_of<'p>(procs: &'p [AProcDecl], name: &str) -> Option<&'p FrameLayout> {
    procs.iter().find(|p| p.name == name).map(|p| &p.layout)
}

fn read_val(mem: &AMem, a: i64) -> Result<i64, Err_> {
    match mem.get(&a) {
        Some(AObject::Val(v)) => Ok(*v),
        _ => Err(Err_),
    }
}

fn eval(
    e: &AExpr,
    sp: i64,
    layout: Option<&FrameLayout>,
    mem: &AMem,
) -> Result<i64, Err_> {
    match e {
        AExpr::Lit(i) => Ok(*i),
        AExpr::Var(x) => {
            let slot = layout.and_then(|l| l.slot(x)).ok_or(Err_)?;
            read_val(mem, sp + slot.var_off() as i64)
        }
        AExpr::AddrOf(x) => {
            let slot = layout.and_then(|l| l.slot(x)).ok_or(Err_)?;
            Ok(sp + slot.var_off() as i64)
        }
        AExpr::Bin(op, a, b) => {
            Ok(op.apply(eval(a, sp, layout, mem)?, eval(b, sp, layout, mem)?))
        }
        AExpr::Deref(inner) => read_val(mem, eval(inner, sp, layout, mem)?),
    }
}

/// Execute one instruction.
pub fn step_toya(procs: &[AProcDecl], st: &mut AState) -> AStep {
    let Some(AObject::Instr { proc, instr }) = st.mem.get(&st.pc).cloned() else {
        return AStep::Error;
    };
    let layout = frame_of(procs, &proc);
    match instr {
        AInstr::Skip => {
            st.pc += 1;
            AStep::Stepped(None)
        }
        AInstr::Halt => AStep::Halted,
        AInstr::Output(e) => match eval(&e, st.sp, layout, &st.mem) {
            Ok(v) => {
                st.pc += 1;
                AStep::Stepped(Some(v))
            }
            Err(_) => AStep::Error,
        },
        AInstr::Assign(lv, e) => {
            let v = match eval(&e, st.sp, layout, &st.mem) {
                Ok(v) => v,
                Err(_) => return AStep::Error,
            };
            let addr = match lv {
                ALValue::Var(x) => {
                    let Some(slot) = layout.and_then(|l| l.slot(&x)) else {
                        return AStep::Error;
                    };
                    st.sp + slot.var_off() as i64
                }
                ALValue::Deref(inner) => match eval(&inner, st.sp, layout, &st.mem) {
                    Ok(a) => a,
                    Err(_) => return AStep::Error,
                },
            };
            // Writes allocate, and may clobber instructions.
            st.mem.insert(addr, AObject::Val(v));
            st.pc += 1;
            AStep::Stepped(None)
        }
        AInstr::Jmpz(e, target) => match eval(&e, st.sp, layout, &st.mem) {
            Ok(0) => {
                st.pc = target;
                AStep::Stepped(None)
            }
            Ok(_) => {
                st.pc += 1;
                AStep::Stepped(None)
            }
            Err(_) => AStep::Error,
        },
        AInstr::Call(callee, args) => {
            let Some(decl) = procs.iter().find(|p| p.name == callee) else {
                return AStep::Error;
            };
            let mut vals = Vec::with_capacity(args.len());
            for a in &args {
                match eval(a, st.sp, layout, &st.mem) {
                    Ok(v) => vals.push(v),
                    Err(_) => return AStep::Error,
                }
            }
            // The caller's frame size (zero for untagged context code)
            // determines where the callee's frame starts: the stack grows
            // toward higher addresses.
            let caller_size = layout.map(|l| l.size as i64).unwrap_or(0);
            let new_sp = st.sp + caller_size;
            for (i, v) in vals.iter().enumerate() {
                st.mem.insert(new_sp + i as i64, AObject::Val(*v));
            }
            for (_, slot) in &decl.layout.entries {
                if let Slot::Array { ptr_off, cell_off, .. } = slot {
                    st.mem
                        .insert(new_sp + *ptr_off as i64, AObject::Val(new_sp + *cell_off as i64));
                }
            }
            st.mem.insert(
                new_sp + decl.layout.saved_return_off() as i64,
                AObject::Val(st.pc + 1),
            );
            st.mem
                .insert(new_sp + decl.layout.saved_stack_off() as i64, AObject::Val(st.sp));
            st.pc = decl.entry;
            st.sp = new_sp;
            AStep::Stepped(None)
        }
        AInstr::Return => {
            // No integrity check: whatever integers sit in the saved slots
            // become the new pc and sp.
            let Some(layout) = layout else { return AStep::Error };
            let (Ok(ret), Ok(old_sp)) = (
                read_val(&st.mem, st.sp + layout.saved_return_off() as i64),
                read_val(&st.mem, st.sp + layout.saved_stack_off() as i64),
            ) else {
                return AStep::Error;
            };
            st.pc = ret;
            st.sp = old_sp;
            AStep::Stepped(None)
        }
    }
}

/// Run a linked program under the step budget.
pub fn run_toya(prog: &AProgram, step_budget: u64) -> Trace {
    let mut st = AState { pc: prog.pc, sp: prog.sp, mem: prog.mem.clone() };
    let mut outputs = Vec::new();
    let mut steps = 0u64;
    loop {
        if steps >= step_budget {
            return Trace::new(outputs, Terminal::BudgetExhausted);
        }
        match step_toya(&prog.procs, &mut st) {
            AStep::Halted => return Trace::new(outputs, Terminal::Halted),
            AStep::Error => return Trace::new(outputs, Terminal::Error),
            AStep::Stepped(out) => {
                if let Some(v) = out {
                    outputs.push(OutputValue::Int(v));
                }
                steps += 1;
            }
        }
    }
}

/// Run and also report how many steps were consumed (the observer
/// language's introspection primitive exposes this count).
pub fn run_toya_counted(prog: &AProgram, step_budget: u64) -> (Trace, u64) {
    let mut st = AState { pc: prog.pc, sp: prog.sp, mem: prog.mem.clone() };
    let mut outputs = Vec::new();
    let mut steps = 0u64;
    loop {
        if steps >= step_budget {
            return (Trace::new(outputs, Terminal::BudgetExhausted), steps);
        }
        match step_toya(&prog.procs, &mut st) {
            AStep::Halted => return (Trace::new(outputs, Terminal::Halted), steps),
            AStep::Error => return (Trace::new(outputs, Terminal::Error), steps),
            AStep::Stepped(out) => {
                if let Some(v) = out {
                    outputs.push(OutputValue::Int(v));
                }
                steps += 1;
            }
        }
    }
}

/// A linked whole program is closed: its behavior sample is the single
/// bounded run.
pub fn behavior_toya(prog: &AProgram, bounds: &ExplorationBounds) -> BehaviorSample {
    BehaviorSample::singleton(run_toya(prog, bounds.step_budget), bounds.clone())
}

// ---------------------------------------------------------------------------
// Concrete syntax.

pub fn parse_aexpr(s: &Sexpr) -> Result<AExpr, SyntaxError> {
    match s {
        Sexpr::Int(i, _) => Ok(AExpr::Lit(*i)),
        Sexpr::Sym(x, _) => Ok(AExpr::Var(x.clone())),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "deref" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (deref e)"));
                    };
                    Ok(AExpr::Deref(Box::new(parse_aexpr(e)?)))
                }
                "addrof" => {
                    let [_, x] = items.as_slice() else {
                        return Err(s.err("expected (addrof x)"));
                    };
                    let x = x.as_sym().ok_or_else(|| x.err("expected variable"))?;
                    Ok(AExpr::AddrOf(x.to_string()))
                }
                _ => {
                    let [op, a, b] = items.as_slice() else {
                        return Err(s.err("expected (op e1 e2)"));
                    };
                    let op = op
                        .as_sym()
                        .and_then(COp::from_sym)
                        .ok_or_else(|| op.err("unknown operator"))?;
                    Ok(AExpr::Bin(op, Box::new(parse_aexpr(a)?), Box::new(parse_aexpr(b)?)))
                }
            }
        }
    }
}

pub fn parse_ainstr(s: &Sexpr) -> Result<AInstr, SyntaxError> {
    match s {
        Sexpr::Sym(sym, _) if sym == "skip" => Ok(AInstr::Skip),
        Sexpr::Sym(sym, _) if sym == "return" => Ok(AInstr::Return),
        Sexpr::Sym(sym, _) if sym == "halt" => Ok(AInstr::Halt),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "assign" => {
                    let [_, lv, e] = items.as_slice() else {
                        return Err(s.err("expected (assign lvalue e)"));
                    };
                    let lv = match lv {
                        Sexpr::Sym(x, _) => ALValue::Var(x.clone()),
                        _ => {
                            let inner = lv.as_list().and_then(|l| match l {
                                [h, e] if h.as_sym() == Some("deref") => Some(e),
                                _ => None,
                            });
                            match inner {
                                Some(e) => ALValue::Deref(parse_aexpr(e)?),
                                None => return Err(lv.err("expected l-value")),
                            }
                        }
                    };
                    Ok(AInstr::Assign(lv, parse_aexpr(e)?))
                }
                "output" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (output e)"));
                    };
                    Ok(AInstr::Output(parse_aexpr(e)?))
                }
                "jmpz" => {
                    let [_, e, t] = items.as_slice() else {
                        return Err(s.err("expected (jmpz e target)"));
                    };
                    let t = t.as_int().ok_or_else(|| t.err("expected target address"))?;
                    Ok(AInstr::Jmpz(parse_aexpr(e)?, t))
                }
                "call" => {
                    let [_, name, args @ ..] = items.as_slice() else {
                        return Err(s.err("expected (call p args...)"));
                    };
                    let name = name.as_sym().ok_or_else(|| name.err("expected procedure name"))?;
                    let args = args.iter().map(parse_aexpr).collect::<Result<Vec<_>, _>>()?;
                    Ok(AInstr::Call(name.to_string(), args))
                }
                _ => Err(s.err(format!("unknown instruction `{head}`"))),
            }
        }
        _ => Err(s.err("expected instruction")),
    }
}

fn parse_frame(s: &Sexpr) -> Result<(Vec<(String, Slot)>, u32), SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected (frame entry...)"))?;
    let [head, entries @ ..] = items else {
        return Err(s.err("expected (frame entry...)"));
    };
    if head.as_sym() != Some("frame") {
        return Err(head.err("expected `frame`"));
    }
    let mut out = Vec::new();
    for e in entries {
        let items = e.as_list().ok_or_else(|| e.err("expected frame entry"))?;
        match items {
            [k, n, off] if k.as_sym() == Some("scalar") => {
                let name = n.as_sym().ok_or_else(|| n.err("expected name"))?;
                let off = off.as_int().ok_or_else(|| off.err("expected offset"))? as u32;
                out.push((name.to_string(), Slot::Scalar { off }));
            }
            [k, n, p, c, l] if k.as_sym() == Some("array") => {
                let name = n.as_sym().ok_or_else(|| n.err("expected name"))?;
                let ptr_off = p.as_int().ok_or_else(|| p.err("expected offset"))? as u32;
                let cell_off = c.as_int().ok_or_else(|| c.err("expected offset"))? as u32;
                let len = l.as_int().ok_or_else(|| l.err("expected length"))? as u32;
                out.push((name.to_string(), Slot::Array { ptr_off, cell_off, len }));
            }
            _ => return Err(e.err("expected (scalar name off) or (array name ptr cell len)")),
        }
    }
    Ok((out, 0))
}

fn parse_mem(s: &Sexpr) -> Result<AMem, SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected (mem cell...)"))?;
    let [head, cells @ ..] = items else {
        return Err(s.err("expected (mem cell...)"));
    };
    if head.as_sym() != Some("mem") {
        return Err(head.err("expected `mem`"));
    }
    let mut mem = AMem::new();
    for c in cells {
        let items = c.as_list().ok_or_else(|| c.err("expected (addr object)"))?;
        let [addr, obj] = items else {
            return Err(c.err("expected (addr object)"));
        };
        let addr = addr.as_int().ok_or_else(|| addr.err("expected address"))?;
        let obj = match obj {
            Sexpr::Int(v, _) => AObject::Val(*v),
            Sexpr::List(parts, _) => match parts.as_slice() {
                [h, v] if h.as_sym() == Some("val") => {
                    AObject::Val(v.as_int().ok_or_else(|| v.err("expected value"))?)
                }
                [h, p, i] if h.as_sym() == Some("instr") => {
                    let p = p.as_sym().ok_or_else(|| p.err("expected procedure tag"))?;
                    AObject::Instr { proc: p.to_string(), instr: parse_ainstr(i)? }
                }
                _ => return Err(obj.err("expected (val v) or (instr proc i)")),
            },
            _ => return Err(obj.err("expected memory object")),
        };
        if mem.insert(addr, obj).is_some() {
            return Err(c.err(format!("address {addr} mapped twice")));
        }
    }
    Ok(mem)
}

fn parse_proc_decl(s: &Sexpr) -> Result<AProcDecl, SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected (proc ...)"))?;
    let [head, name, entry, size, nparams, frame] = items else {
        return Err(s.err("expected (proc name entry size nparams (frame...))"));
    };
    if head.as_sym() != Some("proc") {
        return Err(head.err("expected `proc`"));
    }
    let name = name.as_sym().ok_or_else(|| name.err("expected name"))?;
    let entry = entry.as_int().ok_or_else(|| entry.err("expected entry address"))?;
    let size = size.as_int().ok_or_else(|| size.err("expected frame size"))? as u32;
    let nparams = nparams.as_int().ok_or_else(|| nparams.err("expected param count"))? as u32;
    let (entries, _) = parse_frame(frame)?;
    Ok(AProcDecl {
        name: name.to_string(),
        entry,
        layout: FrameLayout { entries, param_count: nparams, size },
    })
}

/// Parse a component: `(component (proc ...)... (mem ...))`.
pub fn parse_toya_component(src: &str) -> Result<AComponent, SyntaxError> {
    let s = sexpr::parse_one(src)?;
    let items = s.as_list().ok_or_else(|| s.err("expected (component ...)"))?;
    let [head, rest @ ..] = items else {
        return Err(s.err("expected (component ...)"));
    };
    if head.as_sym() != Some("component") {
        return Err(head.err("expected `component`"));
    }
    let mut comp = AComponent::default();
    for item in rest {
        let h = item.as_list().and_then(|l| l.first()).and_then(|h| h.as_sym());
        match h {
            Some("proc") => comp.procs.push(parse_proc_decl(item)?),
            Some("mem") => comp.mem = parse_mem(item)?,
            _ => return Err(item.err("expected (proc ...) or (mem ...)")),
        }
    }
    Ok(comp)
}

/// Parse a context: `(context pc sp (mem ...))`.
pub fn parse_toya_context(src: &str) -> Result<AContext, SyntaxError> {
    parse_toya_context_sexpr(&sexpr::parse_one(src)?)
}

/// Parse an already-lexed context form.
pub fn parse_toya_context_sexpr(s: &Sexpr) -> Result<AContext, SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected (context pc sp procs... (mem ...))"))?;
    let [head, pc, sp, rest @ .., mem] = items else {
        return Err(s.err("expected (context pc sp procs... (mem ...))"));
    };
    if head.as_sym() != Some("context") {
        return Err(head.err("expected `context`"));
    }
    let procs = rest.iter().map(parse_proc_decl).collect::<Result<Vec<_>, _>>()?;
    Ok(AContext {
        pc: pc.as_int().ok_or_else(|| pc.err("expected pc"))?,
        sp: sp.as_int().ok_or_else(|| sp.err("expected sp"))?,
        procs,
        mem: parse_mem(mem)?,
    })
}

/// Parse a linked whole program: `(program (proc...)... pc sp (mem ...))`.
pub fn parse_toya_program(src: &str) -> Result<AProgram, SyntaxError> {
    parse_toya_program_sexpr(&sexpr::parse_one(src)?)
}

/// Parse an already-lexed whole-program form.
pub fn parse_toya_program_sexpr(s: &Sexpr) -> Result<AProgram, SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected (program ...)"))?;
    let [head, rest @ .., pc, sp, mem] = items else {
        return Err(s.err("expected (program procs... pc sp (mem ...))"));
    };
    if head.as_sym() != Some("program") {
        return Err(head.err("expected `program`"));
    }
    let procs = rest.iter().map(parse_proc_decl).collect::<Result<Vec<_>, _>>()?;
    Ok(AProgram {
        procs,
        pc: pc.as_int().ok_or_else(|| pc.err("expected pc"))?,
        sp: sp.as_int().ok_or_else(|| sp.err("expected sp"))?,
        mem: parse_mem(mem)?,
    })
}

pub fn render_aexpr(e: &AExpr) -> String {
    match e {
        AExpr::Lit(i) => format!("{i}"),
        AExpr::Var(x) => x.clone(),
        AExpr::AddrOf(x) => format!("(addrof {x})"),
        AExpr::Bin(op, a, b) => format!("({} {} {})", op.sym(), render_aexpr(a), render_aexpr(b)),
        AExpr::Deref(e) => format!("(deref {})", render_aexpr(e)),
    }
}

pub fn render_ainstr(i: &AInstr) -> String {
    match i {
        AInstr::Skip => "skip".to_string(),
        AInstr::Return => "return".to_string(),
        AInstr::Halt => "halt".to_string(),
        AInstr::Assign(ALValue::Var(x), e) => format!("(assign {x} {})", render_aexpr(e)),
        AInstr::Assign(ALValue::Deref(a), e) => {
            format!("(assign (deref {}) {})", render_aexpr(a), render_aexpr(e))
        }
        AInstr::Output(e) => format!("(output {})", render_aexpr(e)),
        AInstr::Jmpz(e, t) => format!("(jmpz {} {t})", render_aexpr(e)),
        AInstr::Call(p, args) => {
            let mut s = format!("(call {p}");
            for a in args {
                s.push(' ');
                s.push_str(&render_aexpr(a));
            }
            s.push(')');
            s
        }
    }
}

fn render_frame(layout: &FrameLayout) -> String {
    let mut s = String::from("(frame");
    for (n, slot) in &layout.entries {
        match slot {
            Slot::Scalar { off } => s.push_str(&format!(" (scalar {n} {off})")),
            Slot::Array { ptr_off, cell_off, len } => {
                s.push_str(&format!(" (array {n} {ptr_off} {cell_off} {len})"))
            }
        }
    }
    s.push(')');
    s
}

fn render_proc_decl(p: &AProcDecl) -> String {
    format!(
        "(proc {} {} {} {} {})",
        p.name,
        p.entry,
        p.layout.size,
        p.layout.param_count,
        render_frame(&p.layout)
    )
}

fn render_mem(mem: &AMem) -> String {
    let mut s = String::from("(mem");
    for (a, obj) in mem {
        match obj {
            AObject::Val(v) => s.push_str(&format!("\n    ({a} (val {v}))")),
            AObject::Instr { proc, instr } => {
                s.push_str(&format!("\n    ({a} (instr {proc} {}))", render_ainstr(instr)))
            }
        }
    }
    s.push(')');
    s
}

pub fn render_toya_component(c: &AComponent) -> String {
    let mut s = String::from("(component");
    for p in &c.procs {
        s.push_str("\n  ");
        s.push_str(&render_proc_decl(p));
    }
    s.push_str("\n  ");
    s.push_str(&render_mem(&c.mem));
    s.push_str(")\n");
    s
}

pub fn render_toya_context(c: &AContext) -> String {
    let mut s = format!("(context {} {}", c.pc, c.sp);
    for p in &c.procs {
        s.push_str("\n  ");
        s.push_str(&render_proc_decl(p));
    }
    s.push_str("\n  ");
    s.push_str(&render_mem(&c.mem));
    s.push_str(")\n");
    s
}

pub fn render_toya_program(p: &AProgram) -> String {
    let mut s = String::from("(program");
    for d in &p.procs {
        s.push_str("\n  ");
        s.push_str(&render_proc_decl(d));
    }
    s.push_str(&format!("\n  {} {} {})\n", p.pc, p.sp, render_mem(&p.mem)));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn instr(proc: &str, i: AInstr) -> AObject {
        AObject::Instr { proc: proc.to_string(), instr: i }
    }

    /// A hand-assembled component: `double(x) { output 2*x; return }`.
    fn double_component(entry: i64) -> AComponent {
        let layout = FrameLayout {
            entries: vec![("x".to_string(), Slot::Scalar { off: 0 })],
            param_count: 1,
            size: 3,
        };
        let mut mem = AMem::new();
        mem.insert(
            entry,
            instr(
                "double",
                AInstr::Output(AExpr::Bin(
                    COp::Mul,
                    Box::new(AExpr::Lit(2)),
                    Box::new(AExpr::Var("x".into())),
                )),
            ),
        );
        mem.insert(entry + 1, instr("double", AInstr::Return));
        AComponent {
            procs: vec![AProcDecl { name: "double".into(), entry, layout }],
            mem,
        }
    }

    #[test]
    fn call_and_return_round_trip() {
        let comp = double_component(100);
        let mut mem = AMem::new();
        mem.insert(0, instr("@driver", AInstr::Call("double".into(), vec![AExpr::Lit(21)])));
        mem.insert(1, instr("@driver", AInstr::Halt));
        let ctx = AContext { pc: 0, sp: 1000, procs: vec![], mem };
        let prog = link_toya(&ctx, &comp).unwrap();
        let t = run_toya(&prog, 100);
        assert_eq!(t, Trace::halted(vec![OutputValue::Int(42)]));
    }

    #[test]
    fn return_trusts_memory_blindly() {
        // Seed the cell that will become the callee's saved-return slot
        // cannot be done pre-call (the call overwrites it); instead, have
        // the callee itself clobber its own saved slots via wild writes,
        // then watch `return` follow them.
        let layout = FrameLayout {
            entries: vec![("x".to_string(), Slot::Scalar { off: 0 })],
            param_count: 1,
            size: 3,
        };
        let mut mem = AMem::new();
        // evil(x) { *(sp+1) = 100; *(sp+2) = 500; return } -- offsets 1,2
        // are the saved slots of its own frame.
        mem.insert(
            10,
            instr(
                "evil",
                AInstr::Assign(
                    ALValue::Deref(AExpr::Bin(
                        COp::Add,
                        Box::new(AExpr::AddrOf("x".into())),
                        Box::new(AExpr::Lit(1)),
                    )),
                    AExpr::Lit(100),
                ),
            ),
        );
        mem.insert(
            11,
            instr(
                "evil",
                AInstr::Assign(
                    ALValue::Deref(AExpr::Bin(
                        COp::Add,
                        Box::new(AExpr::AddrOf("x".into())),
                        Box::new(AExpr::Lit(2)),
                    )),
                    AExpr::Lit(500),
                ),
            ),
        );
        mem.insert(12, instr("evil", AInstr::Return));
        // The hijack target: an output instruction that was never called.
        mem.insert(100, instr("evil", AInstr::Output(AExpr::Lit(99))));
        mem.insert(101, instr("evil", AInstr::Halt));
        let comp = AComponent {
            procs: vec![AProcDecl { name: "evil".into(), entry: 10, layout }],
            mem,
        };
        let mut ctx_mem = AMem::new();
        ctx_mem.insert(0, instr("@driver", AInstr::Call("evil".into(), vec![AExpr::Lit(0)])));
        ctx_mem.insert(1, instr("@driver", AInstr::Halt));
        let prog = link_toya(&AContext { pc: 0, sp: 1000, procs: vec![], mem: ctx_mem }, &comp).unwrap();
        let t = run_toya(&prog, 100);
        // Control never came back to the driver: it flowed to address 100.
        assert_eq!(t, Trace::halted(vec![OutputValue::Int(99)]));
    }

    #[test]
    fn unmapped_reads_error_but_writes_allocate() {
        let mut mem = AMem::new();
        mem.insert(0, instr("@d", AInstr::Assign(ALValue::Deref(AExpr::Lit(777)), AExpr::Lit(5))));
        mem.insert(1, instr("@d", AInstr::Output(AExpr::Deref(Box::new(AExpr::Lit(777))))));
        mem.insert(2, instr("@d", AInstr::Output(AExpr::Deref(Box::new(AExpr::Lit(778))))));
        let prog = AProgram { procs: vec![], mem, pc: 0, sp: 1000 };
        let t = run_toya(&prog, 100);
        assert_eq!(t.outputs, vec![OutputValue::Int(5)]);
        assert_eq!(t.terminal, Terminal::Error);
    }

    #[test]
    fn jmpz_loops() {
        let mut mem = AMem::new();
        mem.insert(0, instr("@d", AInstr::Output(AExpr::Lit(1))));
        mem.insert(1, instr("@d", AInstr::Jmpz(AExpr::Lit(0), 0)));
        let prog = AProgram { procs: vec![], mem, pc: 0, sp: 1000 };
        let t = run_toya(&prog, 50);
        assert_eq!(t.terminal, Terminal::BudgetExhausted);
        assert_eq!(t.outputs.len(), 25);
    }

    #[test]
    fn overlap_refuses_to_link() {
        let comp = double_component(0);
        let mut mem = AMem::new();
        mem.insert(0, AObject::Val(1));
        let ctx = AContext { pc: 0, sp: 1000, procs: vec![], mem };
        assert!(matches!(link_toya(&ctx, &comp), Err(ALinkError::AddressOverlap(0))));
    }

    #[test]
    fn render_round_trip() {
        let comp = double_component(100);
        let back = parse_toya_component(&render_toya_component(&comp)).unwrap();
        assert_eq!(back, comp);
        let ctx = AContext { pc: 7, sp: 2000, procs: vec![], mem: AMem::new() };
        let back = parse_toya_context(&render_toya_context(&ctx)).unwrap();
        assert_eq!(back, ctx);
    }
}
