//! Timing-channel password recovery at the observer level.
//!
//! The component under test is an early-exit password checker: each
//! position that matches executes one more comparison, so the step count
//! returned by `get-info` reveals how long the matched prefix is. The
//! attack is a fixed decision tree: for each position it probes all four
//! candidate letters, picks the one with the highest step count, outputs
//! it, and continues under that branch. The tree is fully static (no data
//! flows from measurements into the embedded programs), yet any single
//! run executes only sixteen probes.

use wmstack_core::compile::compile_toyc_component;
use wmstack_core::toya::{AContext, AInstr, AExpr, AMem, AObject};
use wmstack_core::toyc::{parse_toyc, COp, CStoreDecls};
use wmstack_core::toyh::{link_toyh, run_toyh_counted, HCmd, HContext, HExpr, HInner};
use wmstack_core::trace::OutputValue;

pub const ALPHABET: i64 = 4;
pub const PASSWORD_LEN: usize = 4;

const CHECK_PASS_TEMPLATE: &str = r#"
(store
  (proc check_pass ((c0 int) (c1 int) (c2 int) (c3 int)) ()
    (if (= c0 {p0})
        (if (= c1 {p1})
            (if (= c2 {p2})
                (if (= c3 {p3})
                    (output 1)
                    skip)
                skip)
            skip)
        skip)))
"#;

/// Instantiate the early-exit checker for a concrete password.
pub fn check_pass_store(password: &[i64; PASSWORD_LEN]) -> CStoreDecls {
    let mut src = CHECK_PASS_TEMPLATE.to_string();
    for (i, p) in password.iter().enumerate() {
        src = src.replace(&format!("{{p{i}}}"), &p.to_string());
    }
    parse_toyc(&src).expect("checker template parses")
}

/// One probe: `call check_pass(args); halt` with no seeded data.
fn probe_context(args: [i64; PASSWORD_LEN]) -> AContext {
    let mut mem = AMem::new();
    mem.insert(
        0,
        AObject::Instr {
            proc: "@driver".to_string(),
            instr: AInstr::Call(
                "check_pass".to_string(),
                args.iter().map(|&a| AExpr::Lit(a)).collect(),
            ),
        },
    );
    mem.insert(1, AObject::Instr { proc: "@driver".to_string(), instr: AInstr::Halt });
    AContext { pc: 0, sp: 1000, procs: Vec::new(), mem }
}

fn seq(cmds: Vec<HCmd>) -> HCmd {
    cmds.into_iter()
        .rev()
        .reduce(|acc, c| HCmd::Seq(Box::new(c), Box::new(acc)))
        .unwrap_or(HCmd::Skip)
}

fn step_var(cand: i64) -> String {
    format!("s{cand}")
}

/// `s_c >= s_j` for every other candidate `j`.
fn is_max(cand: i64) -> HExpr {
    let mut conds: Vec<HExpr> = (0..ALPHABET)
        .filter(|&j| j != cand)
        .map(|j| {
            HExpr::Bin(
                COp::Ge,
                Box::new(HExpr::Var(step_var(cand))),
                Box::new(HExpr::Var(step_var(j))),
            )
        })
        .collect();
    let mut e = conds.pop().expect("at least two candidates");
    while let Some(c) = conds.pop() {
        e = HExpr::Bin(COp::And, Box::new(c), Box::new(e));
    }
    e
}

/// Decision-tree node for a known prefix: probe the four candidates for the
/// next position, output the argmax (a strict maximum — the matching letter
/// runs one comparison more than any mismatch), and recurse under it.
fn tree_node(prefix: &[i64]) -> HCmd {
    if prefix.len() == PASSWORD_LEN {
        return HCmd::Skip;
    }
    let pos = prefix.len();
    let mut cmds = Vec::new();
    for cand in 0..ALPHABET {
        let mut args = [0i64; PASSWORD_LEN];
        args[..pos].copy_from_slice(prefix);
        args[pos] = cand;
        cmds.push(HCmd::GetInfo(
            format!("xs{cand}"),
            step_var(cand),
            HInner::Hole(probe_context(args)),
        ));
    }
    let branch = |cand: i64| {
        let mut next = prefix.to_vec();
        next.push(cand);
        HCmd::Seq(Box::new(HCmd::Output(HExpr::Lit(cand))), Box::new(tree_node(&next)))
    };
    // Nested argmax: the last candidate is the fallback branch.
    let mut choice = branch(ALPHABET - 1);
    for cand in (0..ALPHABET - 1).rev() {
        choice = HCmd::If(is_max(cand), Box::new(branch(cand)), Box::new(choice));
    }
    cmds.push(choice);
    seq(cmds)
}

/// The complete observer-level attack: a context whose every `get-info`
/// hole awaits the compiled checker.
pub fn build_findpass_attack() -> HContext {
    HContext { body: tree_node(&[]) }
}

#[derive(Debug)]
pub struct RecoveryResult {
    pub recovered: Vec<i64>,
    pub get_info_calls: u64,
}

/// Link the attack against the checker for `password`, run it, and return
/// the recovered letters plus how many measurements the run spent.
pub fn recover_password(
    password: &[i64; PASSWORD_LEN],
    step_budget: u64,
) -> Result<RecoveryResult, String> {
    let store = check_pass_store(password);
    let (comp, _) = compile_toyc_component(&store);
    let attack = build_findpass_attack();
    let prog = link_toyh(&attack, &comp).map_err(|e| format!("link failure: {e}"))?;
    let (trace, calls) = run_toyh_counted(&prog, step_budget, step_budget);
    let recovered = trace
        .outputs
        .iter()
        .map(|v| match v {
            OutputValue::Int(i) => Ok(*i),
            other => Err(format!("non-integer output {other}")),
        })
        .collect::<Result<Vec<i64>, String>>()?;
    Ok(RecoveryResult { recovered, get_info_calls: calls })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_fixed_password_in_sixteen_probes() {
        let password = [2, 0, 3, 1];
        let r = recover_password(&password, 100_000).unwrap();
        assert_eq!(r.recovered, password.to_vec());
        assert_eq!(r.get_info_calls, 16);
    }

    #[test]
    fn recovers_every_single_letter_boundary_password() {
        for &password in &[[0, 0, 0, 0], [3, 3, 3, 3], [0, 3, 0, 3]] {
            let r = recover_password(&password, 100_000).unwrap();
            assert_eq!(r.recovered, password.to_vec(), "password {password:?}");
            assert!(r.get_info_calls <= 24);
        }
    }
}
