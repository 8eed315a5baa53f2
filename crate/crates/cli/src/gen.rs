//! Seeded random program generators for differential compiler checks.
//!
//! The generators deliberately restrict themselves to programs whose source
//! runs terminate inside the step budget and avoid undefined behavior:
//! loops are canonical counting loops, pointers only come from address-of
//! on declared variables, and every generated component mentions all of
//! its interface variables (so that separately-compiled and
//! whole-compiled entry points agree on their parameter lists).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmstack_core::imp::{ImpCmd, ImpComponent, ImpContext, ImpExpr, ImpOp, ImpValue};
use wmstack_core::toyc::{CCmd, CDeclType, CExpr, CLValue, CProc, CStoreDecls};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

// ---------------------------------------------------------------------------
// Source-language programs (all variables used as naturals).

fn nat_expr(rng: &mut ChaCha8Rng, vars: &[String], depth: u32) -> ImpExpr {
    if depth == 0 || rng.gen_bool(0.5) {
        if !vars.is_empty() && rng.gen_bool(0.5) {
            ImpExpr::Var(pick(rng, vars).clone())
        } else {
            ImpExpr::Lit(ImpValue::Nat(rng.gen_range(0..4)))
        }
    } else {
        let op = *pick(rng, &[ImpOp::Add, ImpOp::Mul]);
        ImpExpr::Bin(
            op,
            Box::new(nat_expr(rng, vars, depth - 1)),
            Box::new(nat_expr(rng, vars, depth - 1)),
        )
    }
}

fn bool_expr(rng: &mut ChaCha8Rng, vars: &[String], depth: u32) -> ImpExpr {
    if depth == 0 || rng.gen_bool(0.6) {
        let op = *pick(rng, &[ImpOp::Lt, ImpOp::Eq]);
        ImpExpr::Bin(
            op,
            Box::new(nat_expr(rng, vars, 1)),
            Box::new(nat_expr(rng, vars, 1)),
        )
    } else {
        let op = *pick(rng, &[ImpOp::And, ImpOp::Or]);
        ImpExpr::Bin(
            op,
            Box::new(bool_expr(rng, vars, depth - 1)),
            Box::new(bool_expr(rng, vars, depth - 1)),
        )
    }
}

fn imp_cmd(rng: &mut ChaCha8Rng, vars: &[String], depth: u32) -> ImpCmd {
    let choice = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..6) };
    match choice {
        0 => ImpCmd::Skip,
        1 => ImpCmd::Output(nat_expr(rng, vars, 2)),
        2 if !vars.is_empty() => {
            ImpCmd::Assign(pick(rng, vars).clone(), nat_expr(rng, vars, 2))
        }
        2 => ImpCmd::Skip,
        3 => ImpCmd::Seq(
            Box::new(imp_cmd(rng, vars, depth - 1)),
            Box::new(imp_cmd(rng, vars, depth - 1)),
        ),
        4 => ImpCmd::If(
            bool_expr(rng, vars, 1),
            Box::new(imp_cmd(rng, vars, depth - 1)),
            Box::new(imp_cmd(rng, vars, depth - 1)),
        ),
        _ if !vars.is_empty() => {
            // Canonical terminating loop: count a chosen variable up to a
            // small literal; the tail never writes the counter.
            let v = pick(rng, vars).clone();
            let bound = rng.gen_range(1..4u64);
            let tail = if rng.gen_bool(0.5) {
                ImpCmd::Output(nat_expr(rng, vars, 1))
            } else {
                ImpCmd::Skip
            };
            ImpCmd::While(
                ImpExpr::Bin(
                    ImpOp::Lt,
                    Box::new(ImpExpr::Var(v.clone())),
                    Box::new(ImpExpr::Lit(ImpValue::Nat(bound))),
                ),
                Box::new(ImpCmd::Seq(
                    Box::new(ImpCmd::Assign(
                        v.clone(),
                        ImpExpr::Bin(
                            ImpOp::Add,
                            Box::new(ImpExpr::Var(v)),
                            Box::new(ImpExpr::Lit(ImpValue::Nat(1))),
                        ),
                    )),
                    Box::new(tail),
                )),
            )
        }
        _ => ImpCmd::Skip,
    }
}

/// A random terminating whole program over at most three variables.
pub fn random_imp_whole(rng: &mut ChaCha8Rng) -> ImpCmd {
    let n = rng.gen_range(0..=3usize);
    let vars: Vec<String> = VARS[..n].iter().map(|s| s.to_string()).collect();
    imp_cmd(rng, &vars, 3)
}

/// A random (context, component) pair over a shared interface. The
/// component ends by outputting a sum over every interface variable, so
/// the interface is fully exercised.
pub fn random_imp_pair(rng: &mut ChaCha8Rng) -> (ImpContext, ImpComponent) {
    let n = rng.gen_range(1..=2usize);
    let vars: Vec<String> = VARS[..n].iter().map(|s| s.to_string()).collect();
    let sum = vars
        .iter()
        .map(|v| ImpExpr::Var(v.clone()))
        .reduce(|a, b| ImpExpr::Bin(ImpOp::Add, Box::new(a), Box::new(b)))
        .unwrap();
    let comp = ImpComponent {
        vars: vars.clone(),
        body: ImpCmd::Seq(Box::new(imp_cmd(rng, &vars, 2)), Box::new(ImpCmd::Output(sum))),
    };
    let mut ctx = ImpContext::Hole(vars.clone());
    for _ in 0..rng.gen_range(0..=2) {
        ctx = match rng.gen_range(0..4) {
            0 => ImpContext::SeqLeft(Box::new(ctx), imp_cmd(rng, &vars, 1)),
            1 => ImpContext::SeqRight(imp_cmd(rng, &vars, 1), Box::new(ctx)),
            2 => ImpContext::IfThen(bool_expr(rng, &vars, 1), Box::new(ctx), imp_cmd(rng, &vars, 1)),
            _ => ImpContext::IfElse(bool_expr(rng, &vars, 1), imp_cmd(rng, &vars, 1), Box::new(ctx)),
        };
    }
    (ctx, comp)
}

// ---------------------------------------------------------------------------
// Pointer-language programs.

fn c_expr(rng: &mut ChaCha8Rng, scalars: &[String], depth: u32) -> CExpr {
    use wmstack_core::toyc::COp;
    if depth == 0 || rng.gen_bool(0.5) {
        if !scalars.is_empty() && rng.gen_bool(0.6) {
            CExpr::Var(pick(rng, scalars).clone())
        } else {
            CExpr::Lit(rng.gen_range(-3..4))
        }
    } else {
        let op = *pick(rng, &[COp::Add, COp::Sub, COp::Mul]);
        CExpr::Bin(
            op,
            Box::new(c_expr(rng, scalars, depth - 1)),
            Box::new(c_expr(rng, scalars, depth - 1)),
        )
    }
}

fn c_straightline(rng: &mut ChaCha8Rng, scalars: &[String], len: usize) -> Vec<CCmd> {
    let mut cmds = Vec::new();
    for _ in 0..len {
        match rng.gen_range(0..3) {
            0 if !scalars.is_empty() => cmds.push(CCmd::Assign(
                CLValue::Var(pick(rng, scalars).clone()),
                c_expr(rng, scalars, 2),
            )),
            1 => cmds.push(CCmd::Output(c_expr(rng, scalars, 2))),
            _ => cmds.push(CCmd::Skip),
        }
    }
    cmds
}

fn seq_all(cmds: Vec<CCmd>) -> CCmd {
    cmds.into_iter()
        .reduce(|a, b| CCmd::Seq(Box::new(a), Box::new(b)))
        .unwrap_or(CCmd::Skip)
}

/// A random safe whole program: a `main` over a few int parameters with
/// straight-line arithmetic, an optional canonical countdown loop over a
/// parameter-seeded local, and an optional helper procedure reached
/// through an address-of pointer.
pub fn random_toyc_whole(rng: &mut ChaCha8Rng) -> CStoreDecls {
    let nparams = rng.gen_range(0..=2usize);
    let params: Vec<(String, CDeclType)> =
        (0..nparams).map(|i| (format!("p{i}"), CDeclType::Int)).collect();
    let scalars: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let mut names = scalars.clone();
    names.push("k".to_string());
    let n = rng.gen_range(1..4);
    let mut body = c_straightline(rng, &scalars, n);
    // Seed the local before any use.
    body.insert(
        0,
        CCmd::Assign(CLValue::Var("k".to_string()), c_expr(rng, &scalars, 1)),
    );
    let n2 = rng.gen_range(0..3);
        body.extend(c_straightline(rng, &names, n2));
    let mut procs = Vec::new();
    if rng.gen_bool(0.5) {
        // Helper that scales a cell in place through its pointer argument.
        procs.push(CProc {
            name: "helper".to_string(),
            params: vec![("q".to_string(), CDeclType::Ptr)],
            locals: Vec::new(),
            body: seq_all(vec![
                CCmd::Assign(
                    CLValue::Deref(CExpr::Var("q".to_string())),
                    CExpr::Bin(
                        wmstack_core::toyc::COp::Mul,
                        Box::new(CExpr::Deref(Box::new(CExpr::Var("q".to_string())))),
                        Box::new(CExpr::Lit(rng.gen_range(1..4))),
                    ),
                ),
                CCmd::Output(CExpr::Deref(Box::new(CExpr::Var("q".to_string())))),
            ]),
        });
        body.push(CCmd::Call(
            "helper".to_string(),
            vec![CExpr::Addr(Box::new(CLValue::Var("k".to_string())))],
        ));
    }
    if rng.gen_bool(0.4) {
        use wmstack_core::toyc::COp;
        // Canonical countdown loop over the seeded local.
        body.push(CCmd::While(
            CExpr::Bin(COp::Gt, Box::new(CExpr::Var("k".to_string())), Box::new(CExpr::Lit(0))),
            Box::new(seq_all(vec![
                CCmd::Output(CExpr::Var("k".to_string())),
                CCmd::Assign(
                    CLValue::Var("k".to_string()),
                    CExpr::Bin(
                        COp::Sub,
                        Box::new(CExpr::Var("k".to_string())),
                        Box::new(CExpr::Lit(1)),
                    ),
                ),
            ])),
        ));
    }
    procs.push(CProc {
        name: "main".to_string(),
        params,
        locals: vec![("k".to_string(), CDeclType::Int)],
        body: seq_all(body),
    });
    CStoreDecls { procs }
}

/// A random pointer-level (context, component) pair: the component is a
/// procedure `f` that rewrites and reports a caller cell, the context's
/// `main` seeds locals, calls `f` by address, and reports the result.
pub fn random_toyc_pair(rng: &mut ChaCha8Rng) -> (CStoreDecls, CStoreDecls) {
    use wmstack_core::toyc::COp;
    let scale = rng.gen_range(1..4);
    let shift = rng.gen_range(-2..3);
    let comp = CStoreDecls {
        procs: vec![CProc {
            name: "f".to_string(),
            params: vec![("q".to_string(), CDeclType::Ptr)],
            locals: Vec::new(),
            body: seq_all(vec![
                CCmd::Assign(
                    CLValue::Deref(CExpr::Var("q".to_string())),
                    CExpr::Bin(
                        COp::Add,
                        Box::new(CExpr::Bin(
                            COp::Mul,
                            Box::new(CExpr::Deref(Box::new(CExpr::Var("q".to_string())))),
                            Box::new(CExpr::Lit(scale)),
                        )),
                        Box::new(CExpr::Lit(shift)),
                    ),
                ),
                CCmd::Output(CExpr::Deref(Box::new(CExpr::Var("q".to_string())))),
            ]),
        }],
    };
    let nparams = rng.gen_range(0..=2usize);
    let params: Vec<(String, CDeclType)> =
        (0..nparams).map(|i| (format!("p{i}"), CDeclType::Int)).collect();
    let scalars: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let mut body = vec![CCmd::Assign(
        CLValue::Var("k".to_string()),
        c_expr(rng, &scalars, 2),
    )];
    let n = rng.gen_range(0..3);
    body.extend(c_straightline(rng, &scalars, n));
    body.push(CCmd::Call(
        "f".to_string(),
        vec![CExpr::Addr(Box::new(CLValue::Var("k".to_string())))],
    ));
    body.push(CCmd::Output(CExpr::Var("k".to_string())));
    let ctx = CStoreDecls {
        procs: vec![CProc {
            name: "main".to_string(),
            params,
            locals: vec![("k".to_string(), CDeclType::Int)],
            body: seq_all(body),
        }],
    };
    (ctx, comp)
}
