//! The observer language: a small imperative language whose distinguishing
//! primitive, `get-info`, executes an embedded assembly program and hands
//! back two things — the list of values the inner run produced, and the
//! exact number of machine steps it consumed. Exposing the step count makes
//! execution time observable to contexts, which is precisely what enables
//! timing attacks at this level.
//!
//! Values are integers or captured output lists; lists support `len` and
//! `index`. A context is a command with one or more `get-info` holes, each
//! carrying the assembly-side context that will be linked with the
//! component under test. Linking fills every hole via assembly-level
//! linking; any address overlap refuses to link.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::sexpr::{self, Sexpr, SyntaxError};
use crate::toya::{self, link_toya, AComponent, AContext, ALinkError, AProgram};
use crate::toyc::COp;
use crate::trace::{BehaviorSample, ExplorationBounds, OutputValue, Terminal, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HValue {
    Int(i64),
    List(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HExpr {
    Lit(i64),
    Var(String),
    Bin(COp, Box<HExpr>, Box<HExpr>),
    Len(Box<HExpr>),
    Index(Box<HExpr>, Box<HExpr>),
}

/// The inner program of a `get-info`: already linked in whole programs, or
/// an assembly context awaiting the component in observer-level contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HInner {
    Linked(AProgram),
    Hole(AContext),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HCmd {
    Skip,
    Assign(String, HExpr),
    Output(HExpr),
    /// `(get-info xs steps inner)`: run the inner assembly program, bind
    /// its output list to `xs` and its step count to `steps`.
    GetInfo(String, String, HInner),
    Seq(Box<HCmd>, Box<HCmd>),
    If(HExpr, Box<HCmd>, Box<HCmd>),
    While(HExpr, Box<HCmd>),
}

/// A whole observer-level program (all inners linked).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HProgram {
    pub body: HCmd,
}

/// An observer-level context (at least one inner is a hole).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HContext {
    pub body: HCmd,
}

fn fill_holes(cmd: &HCmd, comp: &AComponent) -> Result<HCmd, ALinkError> {
    Ok(match cmd {
        HCmd::Skip => HCmd::Skip,
        HCmd::Assign(x, e) => HCmd::Assign(x.clone(), e.clone()),
        HCmd::Output(e) => HCmd::Output(e.clone()),
        HCmd::GetInfo(xs, steps, inner) => {
            let prog = match inner {
                HInner::Linked(p) => p.clone(),
                HInner::Hole(actx) => link_toya(actx, comp)?,
            };
            HCmd::GetInfo(xs.clone(), steps.clone(), HInner::Linked(prog))
        }
        HCmd::Seq(a, b) => {
            HCmd::Seq(Box::new(fill_holes(a, comp)?), Box::new(fill_holes(b, comp)?))
        }
        HCmd::If(e, t, f) => HCmd::If(
            e.clone(),
            Box::new(fill_holes(t, comp)?),
            Box::new(fill_holes(f, comp)?),
        ),
        HCmd::While(e, b) => HCmd::While(e.clone(), Box::new(fill_holes(b, comp)?)),
    })
}

/// Link an observer-level context with an assembly component by filling
/// every `get-info` hole.
pub fn link_toyh(ctx: &HContext, comp: &AComponent) -> Result<HProgram, ALinkError> {
    Ok(HProgram { body: fill_holes(&ctx.body, comp)? })
}

type HStore = BTreeMap<String, HValue>;

struct Stuck;

fn eval_h(e: &HExpr, store: &HStore) -> Result<HValue, Stuck> {
    match e {
        HExpr::Lit(i) => Ok(HValue::Int(*i)),
        HExpr::Var(x) => store.get(x).cloned().ok_or(Stuck),
        HExpr::Bin(op, a, b) => match (eval_h(a, store)?, eval_h(b, store)?) {
            (HValue::Int(x), HValue::Int(y)) => Ok(HValue::Int(op.apply(x, y))),
            _ => Err(Stuck),
        },
        HExpr::Len(a) => match eval_h(a, store)? {
            HValue::List(xs) => Ok(HValue::Int(xs.len() as i64)),
            _ => Err(Stuck),
        },
        HExpr::Index(a, i) => match (eval_h(a, store)?, eval_h(i, store)?) {
            (HValue::List(xs), HValue::Int(i)) => {
                usize::try_from(i).ok().and_then(|i| xs.get(i)).map(|v| HValue::Int(*v)).ok_or(Stuck)
            }
            _ => Err(Stuck),
        },
    }
}

/// Run a whole observer-level program. `inner_budget` bounds each embedded
/// assembly run separately from the outer step budget.
pub fn run_toyh(prog: &HProgram, step_budget: u64, inner_budget: u64) -> Trace {
    run_toyh_counted(prog, step_budget, inner_budget).0
}

/// Like `run_toyh`, but also reports how many embedded assembly
/// invocations were actually executed — the measurement count available to
/// a timing adversary.
pub fn run_toyh_counted(prog: &HProgram, step_budget: u64, inner_budget: u64) -> (Trace, u64) {
    let mut konts = vec![prog.body.clone()];
    let mut store: HStore = BTreeMap::new();
    let mut outputs: Vec<OutputValue> = Vec::new();
    let mut steps = 0u64;
    let mut get_info_calls = 0u64;
    while let Some(cmd) = konts.pop() {
        if steps >= step_budget {
            return (Trace::new(outputs, Terminal::BudgetExhausted), get_info_calls);
        }
        steps += 1;
        match cmd {
            HCmd::Skip => {}
            HCmd::Assign(x, e) => match eval_h(&e, &store) {
                Ok(v) => {
                    store.insert(x, v);
                }
                Err(_) => return (Trace::new(outputs, Terminal::Stuck), get_info_calls),
            },
            HCmd::Output(e) => match eval_h(&e, &store) {
                Ok(HValue::Int(v)) => outputs.push(OutputValue::Int(v)),
                _ => return (Trace::new(outputs, Terminal::Stuck), get_info_calls),
            },
            HCmd::GetInfo(xs, steps_var, inner) => {
                let HInner::Linked(p) = inner else {
                    // A hole reached at run time means the context was
                    // never linked; treat as stuck.
                    return (Trace::new(outputs, Terminal::Stuck), get_info_calls);
                };
                get_info_calls += 1;
                let (inner_trace, inner_steps) = toya::run_toya_counted(&p, inner_budget);
                if inner_trace.terminal == Terminal::Error {
                    return (Trace::new(outputs, Terminal::Error), get_info_calls);
                }
                let vals = inner_trace
                    .outputs
                    .iter()
                    .map(|o| match o {
                        OutputValue::Int(v) => *v,
                        OutputValue::Nat(n) => *n as i64,
                        OutputValue::Bool(b) => *b as i64,
                    })
                    .collect();
                store.insert(xs, HValue::List(vals));
                store.insert(steps_var, HValue::Int(inner_steps as i64));
            }
            HCmd::Seq(a, b) => {
                konts.push(*b);
                konts.push(*a);
            }
            HCmd::If(e, t, f) => match eval_h(&e, &store) {
                Ok(HValue::Int(v)) => konts.push(if v != 0 { *t } else { *f }),
                _ => return (Trace::new(outputs, Terminal::Stuck), get_info_calls),
            },
            HCmd::While(e, b) => match eval_h(&e, &store) {
                Ok(HValue::Int(v)) => {
                    if v != 0 {
                        konts.push(HCmd::While(e, b.clone()));
                        konts.push(*b);
                    }
                }
                _ => return (Trace::new(outputs, Terminal::Stuck), get_info_calls),
            },
        }
    }
    (Trace::new(outputs, Terminal::Halted), get_info_calls)
}

/// Whole observer-level programs are closed, so the behavior sample is the
/// single bounded run.
pub fn behavior_toyh(prog: &HProgram, bounds: &ExplorationBounds) -> BehaviorSample {
    BehaviorSample::singleton(
        run_toyh(prog, bounds.step_budget, bounds.step_budget),
        bounds.clone(),
    )
}

// ---------------------------------------------------------------------------
// Concrete syntax.

pub fn parse_hexpr(s: &Sexpr) -> Result<HExpr, SyntaxError> {
    match s {
        Sexpr::Int(i, _) => Ok(HExpr::Lit(*i)),
        Sexpr::Sym(x, _) => Ok(HExpr::Var(x.clone())),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "len" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (len e)"));
                    };
                    Ok(HExpr::Len(Box::new(parse_hexpr(e)?)))
                }
                "index" => {
                    let [_, a, i] = items.as_slice() else {
                        return Err(s.err("expected (index e i)"));
                    };
                    Ok(HExpr::Index(Box::new(parse_hexpr(a)?), Box::new(parse_hexpr(i)?)))
                }
                _ => {
                    let [op, a, b] = items.as_slice() else {
                        return Err(s.err("expected (op e1 e2)"));
                    };
                    let op = op
                        .as_sym()
                        .and_then(COp::from_sym)
                        .ok_or_else(|| op.err("unknown operator"))?;
                    Ok(HExpr::Bin(op, Box::new(parse_hexpr(a)?), Box::new(parse_hexpr(b)?)))
                }
            }
        }
    }
}

fn parse_hcmd(s: &Sexpr) -> Result<HCmd, SyntaxError> {
    match s {
        Sexpr::Sym(sym, _) if sym == "skip" => Ok(HCmd::Skip),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "assign" => {
                    let [_, x, e] = items.as_slice() else {
                        return Err(s.err("expected (assign x e)"));
                    };
                    let x = x.as_sym().ok_or_else(|| x.err("expected variable"))?;
                    Ok(HCmd::Assign(x.to_string(), parse_hexpr(e)?))
                }
                "output" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (output e)"));
                    };
                    Ok(HCmd::Output(parse_hexpr(e)?))
                }
                "get-info" => {
                    let [_, xs, steps, inner] = items.as_slice() else {
                        return Err(s.err("expected (get-info xs steps inner)"));
                    };
                    let xs = xs.as_sym().ok_or_else(|| xs.err("expected variable"))?;
                    let steps = steps.as_sym().ok_or_else(|| steps.err("expected variable"))?;
                    let inner_head =
                        inner.as_list().and_then(|l| l.first()).and_then(|h| h.as_sym());
                    let inner = match inner_head {
                        Some("program") => {
                            HInner::Linked(toya::parse_toya_program_sexpr(inner)?)
                        }
                        Some("context") => HInner::Hole(toya::parse_toya_context_sexpr(inner)?),
                        _ => return Err(inner.err("expected inner (program ...) or (context ...)")),
                    };
                    Ok(HCmd::GetInfo(xs.to_string(), steps.to_string(), inner))
                }
                "seq" => {
                    let [_, rest @ ..] = items.as_slice() else {
                        return Err(s.err("expected (seq cmds...)"));
                    };
                    fold_seq(rest).ok_or_else(|| s.err("expected at least one command"))
                }
                "if" => {
                    let [_, e, t, f] = items.as_slice() else {
                        return Err(s.err("expected (if e then else)"));
                    };
                    Ok(HCmd::If(
                        parse_hexpr(e)?,
                        Box::new(parse_hcmd(t)?),
                        Box::new(parse_hcmd(f)?),
                    ))
                }
                "while" => {
                    let [_, e, b] = items.as_slice() else {
                        return Err(s.err("expected (while e body)"));
                    };
                    Ok(HCmd::While(parse_hexpr(e)?, Box::new(parse_hcmd(b)?)))
                }
                _ => Err(s.err(format!("unknown command `{head}`"))),
            }
        }
        _ => Err(s.err("expected command")),
    }
}

fn fold_seq(cmds: &[Sexpr]) -> Option<HCmd> {
    let mut it = cmds.iter().rev();
    let mut acc = parse_hcmd(it.next()?).ok()?;
    for c in it {
        acc = HCmd::Seq(Box::new(parse_hcmd(c).ok()?), Box::new(acc));
    }
    Some(acc)
}

fn parse_body(items: &[Sexpr], at: &Sexpr) -> Result<HCmd, SyntaxError> {
    let mut parsed = Vec::with_capacity(items.len());
    for c in items {
        parsed.push(parse_hcmd(c)?);
    }
    let mut it = parsed.into_iter().rev();
    let Some(mut acc) = it.next() else {
        return Err(at.err("expected at least one command"));
    };
    for c in it {
        acc = HCmd::Seq(Box::new(c), Box::new(acc));
    }
    Ok(acc)
}

/// Parse `(observer-program cmds...)`.
pub fn parse_toyh_program(src: &str) -> Result<HProgram, SyntaxError> {
    let s = sexpr::parse_one(src)?;
    let items = s.as_list().ok_or_else(|| s.err("expected (observer-program ...)"))?;
    let [head, rest @ ..] = items else {
        return Err(s.err("expected (observer-program ...)"));
    };
    if head.as_sym() != Some("observer-program") {
        return Err(head.err("expected `observer-program`"));
    }
    Ok(HProgram { body: parse_body(rest, &s)? })
}

/// Parse `(observer-context cmds...)`.
pub fn parse_toyh_context(src: &str) -> Result<HContext, SyntaxError> {
    let s = sexpr::parse_one(src)?;
    let items = s.as_list().ok_or_else(|| s.err("expected (observer-context ...)"))?;
    let [head, rest @ ..] = items else {
        return Err(s.err("expected (observer-context ...)"));
    };
    if head.as_sym() != Some("observer-context") {
        return Err(head.err("expected `observer-context`"));
    }
    Ok(HContext { body: parse_body(rest, &s)? })
}

pub fn render_hexpr(e: &HExpr) -> String {
    match e {
        HExpr::Lit(i) => format!("{i}"),
        HExpr::Var(x) => x.clone(),
        HExpr::Bin(op, a, b) => format!("({} {} {})", op.sym(), render_hexpr(a), render_hexpr(b)),
        HExpr::Len(a) => format!("(len {})", render_hexpr(a)),
        HExpr::Index(a, i) => format!("(index {} {})", render_hexpr(a), render_hexpr(i)),
    }
}

pub fn render_hcmd(c: &HCmd) -> String {
    match c {
        HCmd::Skip => "skip".to_string(),
        HCmd::Assign(x, e) => format!("(assign {x} {})", render_hexpr(e)),
        HCmd::Output(e) => format!("(output {})", render_hexpr(e)),
        HCmd::GetInfo(xs, steps, inner) => {
            let inner = match inner {
                HInner::Linked(p) => toya::render_toya_program(p),
                HInner::Hole(c) => toya::render_toya_context(c),
            };
            format!("(get-info {xs} {steps} {})", inner.trim_end())
        }
        HCmd::Seq(a, b) => format!("(seq {} {})", render_hcmd(a), render_hcmd(b)),
        HCmd::If(e, t, f) => {
            format!("(if {} {} {})", render_hexpr(e), render_hcmd(t), render_hcmd(f))
        }
        HCmd::While(e, b) => format!("(while {} {})", render_hexpr(e), render_hcmd(b)),
    }
}

pub fn render_toyh_program(p: &HProgram) -> String {
    format!("(observer-program {})\n", render_hcmd(&p.body))
}

pub fn render_toyh_context(c: &HContext) -> String {
    format!("(observer-context {})\n", render_hcmd(&c.body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toya::{AContext, AInstr, AMem, AObject};

    fn driver(instrs: Vec<AInstr>) -> AContext {
        let mut mem = AMem::new();
        for (i, instr) in instrs.into_iter().enumerate() {
            mem.insert(i as i64, AObject::Instr { proc: "@driver".into(), instr });
        }
        AContext { pc: 0, sp: 1000, procs: vec![], mem }
    }

    #[test]
    fn get_info_exposes_outputs_and_step_count() {
        use crate::toya::AExpr as E;
        // Inner program: output 7; output 8; halt  (2 counted steps).
        let inner = AProgram {
            procs: vec![],
            mem: driver(vec![
                AInstr::Output(E::Lit(7)),
                AInstr::Output(E::Lit(8)),
                AInstr::Halt,
            ])
            .mem,
            pc: 0,
            sp: 1000,
        };
        let body = HCmd::Seq(
            Box::new(HCmd::GetInfo("xs".into(), "n".into(), HInner::Linked(inner))),
            Box::new(HCmd::Seq(
                Box::new(HCmd::Output(HExpr::Len(Box::new(HExpr::Var("xs".into()))))),
                Box::new(HCmd::Seq(
                    Box::new(HCmd::Output(HExpr::Index(
                        Box::new(HExpr::Var("xs".into())),
                        Box::new(HExpr::Lit(1)),
                    ))),
                    Box::new(HCmd::Output(HExpr::Var("n".into()))),
                )),
            )),
        );
        let t = run_toyh(&HProgram { body }, 1000, 1000);
        assert_eq!(
            t,
            Trace::halted(vec![OutputValue::Int(2), OutputValue::Int(8), OutputValue::Int(2)])
        );
    }

    #[test]
    fn hole_links_against_component() {
        use crate::toya::{AComponent, AExpr as E, AProcDecl};
        use crate::toyc::{FrameLayout, Slot};
        // Component: triple(x) { output 3*x; return }
        let layout = FrameLayout {
            entries: vec![("x".to_string(), Slot::Scalar { off: 0 })],
            param_count: 1,
            size: 3,
        };
        let mut mem = AMem::new();
        mem.insert(
            100,
            AObject::Instr {
                proc: "triple".into(),
                instr: AInstr::Output(E::Bin(
                    COp::Mul,
                    Box::new(E::Lit(3)),
                    Box::new(E::Var("x".into())),
                )),
            },
        );
        mem.insert(101, AObject::Instr { proc: "triple".into(), instr: AInstr::Return });
        let comp = AComponent {
            procs: vec![AProcDecl { name: "triple".into(), entry: 100, layout }],
            mem,
        };
        let actx = driver(vec![AInstr::Call("triple".into(), vec![E::Lit(5)]), AInstr::Halt]);
        let hctx = HContext {
            body: HCmd::Seq(
                Box::new(HCmd::GetInfo("xs".into(), "n".into(), HInner::Hole(actx))),
                Box::new(HCmd::Output(HExpr::Index(
                    Box::new(HExpr::Var("xs".into())),
                    Box::new(HExpr::Lit(0)),
                ))),
            ),
        };
        let prog = link_toyh(&hctx, &comp).unwrap();
        let t = run_toyh(&prog, 1000, 1000);
        assert_eq!(t, Trace::halted(vec![OutputValue::Int(15)]));
    }

    #[test]
    fn parse_render_round_trip() {
        let src = "(observer-context\n  (get-info xs n (context 0 1000 (mem (0 (instr @d (output 1))) (1 (instr @d halt)))))\n  (while (> (len xs) 0) (seq (output (index xs 0)) (assign xs xs))))\n";
        let ctx = parse_toyh_context(src).unwrap();
        let back = parse_toyh_context(&render_toyh_context(&ctx)).unwrap();
        assert_eq!(back, ctx);
    }
}
