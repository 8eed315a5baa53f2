//! The C-like intermediate language: procedures over a linear memory,
//! integer values doubling as pointers, l-values, and pointer arithmetic.
//! Anything undefined (wild dereference, unknown procedure, wrong arity,
//! read of an uninitialized cell) surfaces as a run-time `Error` — unlike
//! the source language, which gets stuck, and unlike the assembly target,
//! which happily keeps going.
//!
//! Programs are "stores" of named procedures; linking is store
//! concatenation and fails on duplicate names. A component exports a
//! procedure (conventionally `hole`) that the context's `main` calls.
//!
//! Frame layout is the contract shared with the assembly compiler: the
//! parameters first, then locals in declaration order (an array takes a
//! pointer slot initialized to its first cell, then the cells), then two
//! reserved slots. In this language the reserved slots are simply not
//! dereferenceable; in the compiled form they hold the saved return
//! address and stack pointer — which is exactly what buffer overflows
//! reach for.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::sexpr::{self, Sexpr, SyntaxError};
use crate::trace::{BehaviorSample, ExplorationBounds, InputValue, OutputValue, Terminal, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CDeclType {
    Int,
    Ptr,
    /// Fixed-size integer array. Declaring one allocates a pointer slot
    /// (the variable itself, pre-pointed at the first cell) plus the cells.
    Array(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum COp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl COp {
    pub fn sym(self) -> &'static str {
        match self {
            COp::Add => "+",
            COp::Sub => "-",
            COp::Mul => "*",
            COp::Lt => "<",
            COp::Le => "<=",
            COp::Gt => ">",
            COp::Ge => ">=",
            COp::Eq => "=",
            COp::Ne => "!=",
            COp::And => "and",
            COp::Or => "or",
        }
    }

    pub fn from_sym(s: &str) -> Option<COp> {
        Some(match s {
            "+" => COp::Add,
            "-" => COp::Sub,
            "*" => COp::Mul,
            "<" => COp::Lt,
            "<=" => COp::Le,
            ">" => COp::Gt,
            ">=" => COp::Ge,
            "=" => COp::Eq,
            "!=" => COp::Ne,
            "and" => COp::And,
            "or" => COp::Or,
            _ => return None,
        })
    }

    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            COp::Add => a.wrapping_add(b),
            COp::Sub => a.wrapping_sub(b),
            COp::Mul => a.wrapping_mul(b),
            COp::Lt => (a < b) as i64,
            COp::Le => (a <= b) as i64,
            COp::Gt => (a > b) as i64,
            COp::Ge => (a >= b) as i64,
            COp::Eq => (a == b) as i64,
            COp::Ne => (a != b) as i64,
            COp::And => (a != 0 && b != 0) as i64,
            COp::Or => (a != 0 || b != 0) as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CExpr {
    Lit(i64),
    Var(String),
    Null,
    Bin(COp, Box<CExpr>, Box<CExpr>),
    Deref(Box<CExpr>),
    Addr(Box<CLValue>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CLValue {
    Var(String),
    Deref(CExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CCmd {
    Skip,
    Assign(CLValue, CExpr),
    Output(CExpr),
    Call(String, Vec<CExpr>),
    Seq(Box<CCmd>, Box<CCmd>),
    If(CExpr, Box<CCmd>, Box<CCmd>),
    While(CExpr, Box<CCmd>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CProc {
    pub name: String,
    pub params: Vec<(String, CDeclType)>,
    pub locals: Vec<(String, CDeclType)>,
    pub body: CCmd,
}

/// A collection of named procedures. Both whole programs (with `main`) and
/// components/contexts are plain stores.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CStoreDecls {
    pub procs: Vec<CProc>,
}

impl CStoreDecls {
    pub fn lookup(&self, name: &str) -> Option<&CProc> {
        self.procs.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CLinkError {
    DuplicateName(String),
}

impl fmt::Display for CLinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CLinkError::DuplicateName(n) => write!(f, "duplicate procedure name `{n}`"),
        }
    }
}

/// Store concatenation.
pub fn link_toyc(a: &CStoreDecls, b: &CStoreDecls) -> Result<CStoreDecls, CLinkError> {
    let mut out = a.clone();
    for p in &b.procs {
        if out.lookup(&p.name).is_some() {
            return Err(CLinkError::DuplicateName(p.name.clone()));
        }
        out.procs.push(p.clone());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Frame layout (shared with the assembly compiler).

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Scalar { off: u32 },
    Array { ptr_off: u32, cell_off: u32, len: u32 },
}

impl Slot {
    /// Offset of the slot read or written when the variable is named.
    pub fn var_off(&self) -> u32 {
        match self {
            Slot::Scalar { off } => *off,
            Slot::Array { ptr_off, .. } => *ptr_off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    pub entries: Vec<(String, Slot)>,
    pub param_count: u32,
    /// Total size including the two reserved slots at the top.
    pub size: u32,
}

impl FrameLayout {
    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn saved_return_off(&self) -> u32 {
        self.size - 2
    }

    pub fn saved_stack_off(&self) -> u32 {
        self.size - 1
    }
}

pub fn layout_frame(p: &CProc) -> FrameLayout {
    let mut entries = Vec::new();
    let mut next: u32 = 0;
    for (name, ty) in p.params.iter().chain(&p.locals) {
        match ty {
            CDeclType::Int | CDeclType::Ptr => {
                entries.push((name.clone(), Slot::Scalar { off: next }));
                next += 1;
            }
            CDeclType::Array(len) => {
                entries.push((
                    name.clone(),
                    Slot::Array { ptr_off: next, cell_off: next + 1, len: *len },
                ));
                next += 1 + len;
            }
        }
    }
    FrameLayout { entries, param_count: p.params.len() as u32, size: next + 2 }
}

// ---------------------------------------------------------------------------
// Machine.

/// Bottom of the frame stack. Nonzero so that `null` (0) is never a valid
/// address.
pub const STACK_BASE: i64 = 1000;

#[derive(Debug, Clone)]
struct CFrame {
    base: i64,
    layout: FrameLayout,
}

impl CFrame {
    fn size_i64(&self) -> i64 {
        self.layout.size as i64
    }
}

#[derive(Debug, Clone)]
enum Work {
    Cmd(CCmd),
    PopFrame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CRunError {
    MissingMain,
    ArityMismatch { expected: usize, got: usize },
}

impl fmt::Display for CRunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CRunError::MissingMain => write!(f, "program has no `main`"),
            CRunError::ArityMismatch { expected, got } => {
                write!(f, "main expects {expected} arguments, got {got}")
            }
        }
    }
}

struct Machine<'a> {
    procs: &'a CStoreDecls,
    mem: BTreeMap<i64, i64>,
    frames: Vec<CFrame>,
    work: Vec<Work>,
    outputs: Vec<OutputValue>,
}

/// Undefined behavior, reported as an `Error`-terminated trace.
struct Ub;

impl<'a> Machine<'a> {
    fn top(&self) -> i64 {
        self.frames.last().map(|f| f.base + f.size_i64()).unwrap_or(STACK_BASE)
    }

    fn frame(&self) -> Result<&CFrame, Ub> {
        self.frames.last().ok_or(Ub)
    }

    /// An address is dereferenceable when it falls in a live frame's
    /// non-reserved slots.
    fn valid_addr(&self, a: i64) -> bool {
        self.frames.iter().any(|f| a >= f.base && a < f.base + f.size_i64() - 2)
    }

    fn read(&self, a: i64) -> Result<i64, Ub> {
        self.mem.get(&a).copied().ok_or(Ub)
    }

    fn var_addr(&self, x: &str) -> Result<i64, Ub> {
        let f = self.frame()?;
        let slot = f.layout.slot(x).ok_or(Ub)?;
        Ok(f.base + slot.var_off() as i64)
    }

    fn eval(&self, e: &CExpr) -> Result<i64, Ub> {
        match e {
            CExpr::Lit(i) => Ok(*i),
            CExpr::Null => Ok(0),
            CExpr::Var(x) => self.read(self.var_addr(x)?),
            CExpr::Bin(op, a, b) => Ok(op.apply(self.eval(a)?, self.eval(b)?)),
            CExpr::Deref(inner) => {
                let a = self.eval(inner)?;
                if !self.valid_addr(a) {
                    return Err(Ub);
                }
                self.read(a)
            }
            CExpr::Addr(lv) => self.addr_of(lv),
        }
    }

    fn addr_of(&self, lv: &CLValue) -> Result<i64, Ub> {
        match lv {
            CLValue::Var(x) => self.var_addr(x),
            CLValue::Deref(e) => self.eval(e),
        }
    }

    fn push_frame(&mut self, p: &CProc, args: &[i64]) -> Result<(), Ub> {
        if args.len() != p.params.len() {
            return Err(Ub);
        }
        let layout = layout_frame(p);
        let base = self.top();
        // Parameters occupy offsets 0..n in declaration order.
        for (i, v) in args.iter().enumerate() {
            self.mem.insert(base + i as i64, *v);
        }
        for (_, slot) in &layout.entries {
            if let Slot::Array { ptr_off, cell_off, .. } = slot {
                self.mem.insert(base + *ptr_off as i64, base + *cell_off as i64);
            }
        }
        self.frames.push(CFrame { base, layout });
        self.work.push(Work::PopFrame);
        self.work.push(Work::Cmd(p.body.clone()));
        Ok(())
    }

    fn exec(&mut self, cmd: CCmd) -> Result<(), Ub> {
        match cmd {
            CCmd::Skip => Ok(()),
            CCmd::Assign(lv, e) => {
                let v = self.eval(&e)?;
                let a = self.addr_of(&lv)?;
                // Writing through a pointer checks the address; writing a
                // named variable is always in-frame by construction.
                if matches!(lv, CLValue::Deref(_)) && !self.valid_addr(a) {
                    return Err(Ub);
                }
                self.mem.insert(a, v);
                Ok(())
            }
            CCmd::Output(e) => {
                let v = self.eval(&e)?;
                self.outputs.push(OutputValue::Int(v));
                Ok(())
            }
            CCmd::Call(name, args) => {
                let p = self.procs.lookup(&name).ok_or(Ub)?.clone();
                let mut vals = Vec::with_capacity(args.len());
                for a in &args {
                    vals.push(self.eval(a)?);
                }
                self.push_frame(&p, &vals)
            }
            CCmd::Seq(a, b) => {
                self.work.push(Work::Cmd(*b));
                self.work.push(Work::Cmd(*a));
                Ok(())
            }
            CCmd::If(e, t, f) => {
                let v = self.eval(&e)?;
                self.work.push(Work::Cmd(if v != 0 { *t } else { *f }));
                Ok(())
            }
            CCmd::While(e, body) => {
                let v = self.eval(&e)?;
                if v != 0 {
                    self.work.push(Work::Cmd(CCmd::While(e, body.clone())));
                    self.work.push(Work::Cmd(*body));
                }
                Ok(())
            }
        }
    }
}

/// Run `main` on the given integer arguments under the step budget.
pub fn run_toyc(program: &CStoreDecls, args: &[i64], step_budget: u64) -> Result<Trace, CRunError> {
    let main = program.lookup("main").ok_or(CRunError::MissingMain)?.clone();
    if main.params.len() != args.len() {
        return Err(CRunError::ArityMismatch { expected: main.params.len(), got: args.len() });
    }
    let mut m = Machine {
        procs: program,
        mem: BTreeMap::new(),
        frames: Vec::new(),
        work: Vec::new(),
        outputs: Vec::new(),
    };
    if m.push_frame(&main, args).is_err() {
        return Ok(Trace::new(m.outputs, Terminal::Error));
    }
    let mut steps: u64 = 0;
    loop {
        let Some(w) = m.work.pop() else {
            return Ok(Trace::new(m.outputs, Terminal::Halted));
        };
        if steps >= step_budget {
            return Ok(Trace::new(m.outputs, Terminal::BudgetExhausted));
        }
        steps += 1;
        match w {
            Work::PopFrame => {
                m.frames.pop();
            }
            Work::Cmd(c) => {
                if m.exec(c).is_err() {
                    return Ok(Trace::new(m.outputs, Terminal::Error));
                }
            }
        }
    }
}

/// Behavior of a whole program: one bounded run per `main` argument tuple
/// over the bounded integer domain.
pub fn behavior_toyc(
    program: &CStoreDecls,
    bounds: &ExplorationBounds,
) -> Result<BehaviorSample, CRunError> {
    let main = program.lookup("main").ok_or(CRunError::MissingMain)?;
    let arity = main.params.len();
    let domain: Vec<i64> = bounds.int_domain().collect();
    let mut sample = BehaviorSample::new(bounds.clone());
    let mut idx = vec![0usize; arity];
    loop {
        let args: Vec<i64> = idx.iter().map(|&i| domain[i]).collect();
        let key: Vec<InputValue> = args.iter().map(|&a| InputValue::Int(a)).collect();
        let trace = run_toyc(program, &args, bounds.step_budget)?;
        sample.entries.insert(key, trace);
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
        if k == arity {
            break;
        }
    }
    Ok(sample)
}

// ---------------------------------------------------------------------------
// Concrete syntax.

fn parse_decl_type(s: &Sexpr) -> Result<CDeclType, SyntaxError> {
    match s {
        Sexpr::Sym(t, _) if t == "int" => Ok(CDeclType::Int),
        Sexpr::Sym(t, _) if t == "ptr" => Ok(CDeclType::Ptr),
        Sexpr::List(items, _) => {
            let [head, len] = items.as_slice() else {
                return Err(s.err("expected (array N)"));
            };
            if head.as_sym() != Some("array") {
                return Err(head.err("expected `array`"));
            }
            let n = len.as_int().ok_or_else(|| len.err("expected array length"))?;
            if n < 0 {
                return Err(len.err("array length cannot be negative"));
            }
            Ok(CDeclType::Array(n as u32))
        }
        _ => Err(s.err("expected type: int | ptr | (array N)")),
    }
}

fn parse_decls(s: &Sexpr) -> Result<Vec<(String, CDeclType)>, SyntaxError> {
    let items = s.as_list().ok_or_else(|| s.err("expected declaration list"))?;
    items
        .iter()
        .map(|d| {
            let pair = d.as_list().ok_or_else(|| d.err("expected (name type)"))?;
            let [name, ty] = pair else {
                return Err(d.err("expected (name type)"));
            };
            let name = name.as_sym().ok_or_else(|| name.err("expected name"))?;
            Ok((name.to_string(), parse_decl_type(ty)?))
        })
        .collect()
}

pub fn parse_cexpr(s: &Sexpr) -> Result<CExpr, SyntaxError> {
    match s {
        Sexpr::Int(i, _) => Ok(CExpr::Lit(*i)),
        Sexpr::Sym(sym, _) if sym == "null" => Ok(CExpr::Null),
        Sexpr::Sym(sym, _) => Ok(CExpr::Var(sym.clone())),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "deref" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (deref e)"));
                    };
                    Ok(CExpr::Deref(Box::new(parse_cexpr(e)?)))
                }
                "addr" => {
                    let [_, lv] = items.as_slice() else {
                        return Err(s.err("expected (addr lvalue)"));
                    };
                    Ok(CExpr::Addr(Box::new(parse_clvalue(lv)?)))
                }
                _ => {
                    let [op, a, b] = items.as_slice() else {
                        return Err(s.err("expected (op e1 e2)"));
                    };
                    let op = op
                        .as_sym()
                        .and_then(COp::from_sym)
                        .ok_or_else(|| op.err("unknown operator"))?;
                    Ok(CExpr::Bin(op, Box::new(parse_cexpr(a)?), Box::new(parse_cexpr(b)?)))
                }
            }
        }
    }
}

pub fn parse_clvalue(s: &Sexpr) -> Result<CLValue, SyntaxError> {
    match s {
        Sexpr::Sym(x, _) => Ok(CLValue::Var(x.clone())),
        Sexpr::List(items, _) if items.first().and_then(|h| h.as_sym()) == Some("deref") => {
            let [_, e] = items.as_slice() else {
                return Err(s.err("expected (deref e)"));
            };
            Ok(CLValue::Deref(parse_cexpr(e)?))
        }
        _ => Err(s.err("expected l-value: x | (deref e)")),
    }
}

fn seq_from(items: &[Sexpr], s: &Sexpr) -> Result<CCmd, SyntaxError> {
    match items {
        [] => Err(s.err("empty seq")),
        [only] => parse_ccmd(only),
        [first, rest @ ..] => {
            Ok(CCmd::Seq(Box::new(parse_ccmd(first)?), Box::new(seq_from(rest, s)?)))
        }
    }
}

pub fn parse_ccmd(s: &Sexpr) -> Result<CCmd, SyntaxError> {
    match s {
        Sexpr::Sym(sym, _) if sym == "skip" => Ok(CCmd::Skip),
        Sexpr::List(items, _) => {
            let head = items.first().and_then(|h| h.as_sym()).unwrap_or("");
            match head {
                "assign" => {
                    let [_, lv, e] = items.as_slice() else {
                        return Err(s.err("expected (assign lvalue e)"));
                    };
                    Ok(CCmd::Assign(parse_clvalue(lv)?, parse_cexpr(e)?))
                }
                "output" => {
                    let [_, e] = items.as_slice() else {
                        return Err(s.err("expected (output e)"));
                    };
                    Ok(CCmd::Output(parse_cexpr(e)?))
                }
                "call" => {
                    let [_, name, args @ ..] = items.as_slice() else {
                        return Err(s.err("expected (call p args...)"));
                    };
                    let name = name.as_sym().ok_or_else(|| name.err("expected procedure name"))?;
                    let args =
                        args.iter().map(parse_cexpr).collect::<Result<Vec<_>, _>>()?;
                    Ok(CCmd::Call(name.to_string(), args))
                }
                "seq" => seq_from(&items[1..], s),
                "if" => {
                    let [_, e, t, f] = items.as_slice() else {
                        return Err(s.err("expected (if e then else)"));
                    };
                    Ok(CCmd::If(
                        parse_cexpr(e)?,
                        Box::new(parse_ccmd(t)?),
                        Box::new(parse_ccmd(f)?),
                    ))
                }
                "while" => {
                    let [_, e, b] = items.as_slice() else {
                        return Err(s.err("expected (while e body)"));
                    };
                    Ok(CCmd::While(parse_cexpr(e)?, Box::new(parse_ccmd(b)?)))
                }
                _ => Err(s.err(format!("unknown command `{head}`"))),
            }
        }
        _ => Err(s.err("expected command")),
    }
}

pub fn parse_toyc(src: &str) -> Result<CStoreDecls, SyntaxError> {
    let s = sexpr::parse_one(src)?;
    let items = s.as_list().ok_or_else(|| s.err("expected (store proc...)"))?;
    let [head, procs @ ..] = items else {
        return Err(s.err("expected (store proc...)"));
    };
    if head.as_sym() != Some("store") {
        return Err(head.err("expected `store`"));
    }
    let mut out = CStoreDecls::default();
    for p in procs {
        let items = p.as_list().ok_or_else(|| p.err("expected (proc ...)"))?;
        let [tag, name, params, locals, body @ ..] = items else {
            return Err(p.err("expected (proc name (params) (locals) body...)"));
        };
        if tag.as_sym() != Some("proc") {
            return Err(tag.err("expected `proc`"));
        }
        let name = name.as_sym().ok_or_else(|| name.err("expected procedure name"))?;
        let params = parse_decls(params)?;
        if params.iter().any(|(_, t)| matches!(t, CDeclType::Array(_))) {
            return Err(p.err("array parameters are not supported; pass a pointer"));
        }
        let body = match body {
            [] => CCmd::Skip,
            [one] => parse_ccmd(one)?,
            many => {
                let mut cmd = parse_ccmd(&many[many.len() - 1])?;
                for c in many[..many.len() - 1].iter().rev() {
                    cmd = CCmd::Seq(Box::new(parse_ccmd(c)?), Box::new(cmd));
                }
                cmd
            }
        };
        if out.lookup(name).is_some() {
            return Err(p.err(format!("duplicate procedure `{name}`")));
        }
        out.procs.push(CProc { name: name.to_string(), params, locals: parse_decls(locals)?, body });
    }
    Ok(out)
}

pub fn render_cexpr(e: &CExpr) -> String {
    match e {
        CExpr::Lit(i) => format!("{i}"),
        CExpr::Null => "null".to_string(),
        CExpr::Var(x) => x.clone(),
        CExpr::Bin(op, a, b) => format!("({} {} {})", op.sym(), render_cexpr(a), render_cexpr(b)),
        CExpr::Deref(e) => format!("(deref {})", render_cexpr(e)),
        CExpr::Addr(lv) => format!("(addr {})", render_clvalue(lv)),
    }
}

pub fn render_clvalue(lv: &CLValue) -> String {
    match lv {
        CLValue::Var(x) => x.clone(),
        CLValue::Deref(e) => format!("(deref {})", render_cexpr(e)),
    }
}

pub fn render_ccmd(c: &CCmd) -> String {
    match c {
        CCmd::Skip => "skip".to_string(),
        CCmd::Assign(lv, e) => format!("(assign {} {})", render_clvalue(lv), render_cexpr(e)),
        CCmd::Output(e) => format!("(output {})", render_cexpr(e)),
        CCmd::Call(p, args) => {
            let mut s = format!("(call {p}");
            for a in args {
                s.push(' ');
                s.push_str(&render_cexpr(a));
            }
            s.push(')');
            s
        }
        CCmd::Seq(a, b) => format!("(seq {} {})", render_ccmd(a), render_ccmd(b)),
        CCmd::If(e, a, b) => {
            format!("(if {} {} {})", render_cexpr(e), render_ccmd(a), render_ccmd(b))
        }
        CCmd::While(e, a) => format!("(while {} {})", render_cexpr(e), render_ccmd(a)),
    }
}

fn render_type(t: CDeclType) -> String {
    match t {
        CDeclType::Int => "int".to_string(),
        CDeclType::Ptr => "ptr".to_string(),
        CDeclType::Array(n) => format!("(array {n})"),
    }
}

fn render_decls(decls: &[(String, CDeclType)]) -> String {
    let mut s = String::from("(");
    for (i, (n, t)) in decls.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("({n} {})", render_type(*t)));
    }
    s.push(')');
    s
}

pub fn render_toyc(store: &CStoreDecls) -> String {
    let mut s = String::from("(store");
    for p in &store.procs {
        s.push_str(&format!(
            "\n  (proc {} {} {}\n    {})",
            p.name,
            render_decls(&p.params),
            render_decls(&p.locals),
            render_ccmd(&p.body)
        ));
    }
    s.push_str(")\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The overflowable copy loop: copies `len` cells from `args` through a
    /// one-cell buffer, stepping the buffer pointer each iteration.
    pub(crate) fn vulnerable_src() -> &'static str {
        "(store
           (proc vulnerable ((args ptr) (len int)) ((p (array 1)))
             (while (> len 0)
               (seq (assign (deref p) (deref args))
                    (assign p (+ p 1))
                    (assign args (+ args 1))
                    (assign len (- len 1))))))"
    }

    fn with_driver(len: i64) -> CStoreDecls {
        let comp = parse_toyc(vulnerable_src()).unwrap();
        let driver = parse_toyc(&format!(
            "(store
               (proc main () ((buf (array 2)))
                 (seq (assign (deref buf) 7)
                      (assign (deref (+ buf 1)) 8)
                      (call vulnerable buf {len}))))"
        ))
        .unwrap();
        link_toyc(&driver, &comp).unwrap()
    }

    #[test]
    fn copy_loop_defined_only_for_short_lengths() {
        assert_eq!(run_toyc(&with_driver(0), &[], 10_000).unwrap().terminal, Terminal::Halted);
        assert_eq!(run_toyc(&with_driver(1), &[], 10_000).unwrap().terminal, Terminal::Halted);
        // The second write lands on a reserved slot: undefined behavior.
        assert_eq!(run_toyc(&with_driver(2), &[], 10_000).unwrap().terminal, Terminal::Error);
    }

    #[test]
    fn wild_and_null_pointers_error() {
        let p = parse_toyc("(store (proc main () () (output (deref 123456))))").unwrap();
        assert_eq!(run_toyc(&p, &[], 100).unwrap().terminal, Terminal::Error);
        let p = parse_toyc("(store (proc main () () (assign (deref null) 1)))").unwrap();
        assert_eq!(run_toyc(&p, &[], 100).unwrap().terminal, Terminal::Error);
    }

    #[test]
    fn uninitialized_reads_error() {
        let p = parse_toyc("(store (proc main () ((x int)) (output x)))").unwrap();
        assert_eq!(run_toyc(&p, &[], 100).unwrap().terminal, Terminal::Error);
    }

    #[test]
    fn unknown_proc_and_bad_arity_error() {
        let p = parse_toyc("(store (proc main () () (call nodef 1)))").unwrap();
        assert_eq!(run_toyc(&p, &[], 100).unwrap().terminal, Terminal::Error);
        let p = parse_toyc(
            "(store (proc f ((x int)) () skip) (proc main () () (call f 1 2)))",
        )
        .unwrap();
        assert_eq!(run_toyc(&p, &[], 100).unwrap().terminal, Terminal::Error);
    }

    #[test]
    fn frames_pop_after_calls() {
        // The callee's locals are dead after it returns: a stashed pointer
        // into its frame is no longer dereferenceable.
        let p = parse_toyc(
            "(store
               (proc leak ((out ptr)) ((l int))
                 (seq (assign l 9) (assign (deref out) (addr l))))
               (proc main () ((saved int))
                 (seq (call leak (addr saved))
                      (output (deref saved)))))",
        )
        .unwrap();
        assert_eq!(run_toyc(&p, &[], 1000).unwrap().terminal, Terminal::Error);
    }

    #[test]
    fn pointer_params_share_the_store() {
        let p = parse_toyc(
            "(store
               (proc bump ((cell ptr)) () (assign (deref cell) (+ (deref cell) 1)))
               (proc main ((x int)) ()
                 (seq (call bump (addr x)) (output x))))",
        )
        .unwrap();
        let t = run_toyc(&p, &[41], 1000).unwrap();
        assert_eq!(t, Trace::halted(vec![OutputValue::Int(42)]));
    }

    #[test]
    fn behavior_enumerates_argument_tuples() {
        let p = parse_toyc("(store (proc main ((x int)) () (output (* x x))))").unwrap();
        let mut bounds = ExplorationBounds::quick();
        bounds.int_lo = -2;
        bounds.int_hi = 2;
        let b = behavior_toyc(&p, &bounds).unwrap();
        assert_eq!(b.entries.len(), 5);
        assert_eq!(
            b.entries.get(&vec![InputValue::Int(-2)]).unwrap(),
            &Trace::halted(vec![OutputValue::Int(4)])
        );
    }

    #[test]
    fn duplicate_names_fail_linking() {
        let a = parse_toyc("(store (proc f () () skip))").unwrap();
        assert!(matches!(link_toyc(&a, &a), Err(CLinkError::DuplicateName(_))));
    }

    #[test]
    fn render_round_trip() {
        let p = parse_toyc(vulnerable_src()).unwrap();
        let back = parse_toyc(&render_toyc(&p)).unwrap();
        assert_eq!(back, p);
    }
}
