//! Finite-state-machine view of weird machines.
//!
//! A specification machine (IFSM) and an implementation machine (CPU) over
//! a shared alphabet are related by a representation map `gamma` from
//! specification states to sets of implementation states. Implementation
//! states are classified as:
//!
//! * `Sane` — in the image of `gamma`;
//! * `Transitory` — a benign intermediate step: it sits on a path between
//!   the images of two specification states joined by a specification
//!   transition, no state on that path is in the image, and every
//!   transition sequence out of it leads to the destination image state;
//! * `Weird` — everything else.
//!
//! The universal "every sequence leads there" condition is checked over
//! paths up to a finite bound; any cycle through non-image states
//! disqualifies transitory status, since a cycle is the only way a finite
//! machine produces unboundedly long sequences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

/// A finite state machine with a (possibly nondeterministic) transition
/// relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fsm {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<String>,
    /// Transition relation: (source, symbol, destination).
    pub delta: BTreeSet<(String, String, String)>,
    pub q0: String,
    pub accepting: BTreeSet<String>,
}

/// Specification state -> set of implementation states.
pub type RepMap = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsmError {
    StateNotInMachine(String),
    MalformedMachine(String),
    PreconditionFailed(String),
    Syntax(String),
}

impl fmt::Display for FsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FsmError::StateNotInMachine(q) => write!(f, "state not in machine: {q}"),
            FsmError::MalformedMachine(m) => write!(f, "malformed machine: {m}"),
            FsmError::PreconditionFailed(m) => write!(f, "precondition failed: {m}"),
            FsmError::Syntax(m) => write!(f, "syntax error: {m}"),
        }
    }
}

impl Fsm {
    /// Check the structural invariants: the initial state and accepting
    /// states belong to the state set, and the transition relation only
    /// mentions known states and symbols.
    pub fn validate(&self) -> Result<(), FsmError> {
        if !self.states.contains(&self.q0) {
            return Err(FsmError::MalformedMachine(format!("q0 `{}` not a state", self.q0)));
        }
        for q in &self.accepting {
            if !self.states.contains(q) {
                return Err(FsmError::MalformedMachine(format!("accepting `{q}` not a state")));
            }
        }
        for (a, s, b) in &self.delta {
            if !self.states.contains(a) || !self.states.contains(b) {
                return Err(FsmError::MalformedMachine(format!("transition {a} {s} {b} leaves the state set")));
            }
            if !self.alphabet.contains(s) {
                return Err(FsmError::MalformedMachine(format!("symbol `{s}` not in alphabet")));
            }
        }
        Ok(())
    }

    fn step_set(&self, from: &BTreeSet<String>, sym: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (a, s, b) in &self.delta {
            if s == sym && from.contains(a) {
                out.insert(b.clone());
            }
        }
        out
    }

    fn successors(&self, q: &str) -> Vec<&String> {
        self.delta.iter().filter(|(a, _, _)| a == q).map(|(_, _, b)| b).collect()
    }
}

/// The image of the representation map: every implementation state some
/// specification state maps to.
pub fn gamma_image(gamma: &RepMap) -> BTreeSet<String> {
    gamma.values().flatten().cloned().collect()
}

// ---------------------------------------------------------------------------
// Bounded state behaviors.

/// The behavior of a state: the strings (length <= L) that drive the
/// initial state to it, and the strings (length <= L) it accepts. Both are
/// exact at the bound.
pub fn fsm_state_behavior(
    m: &Fsm,
    q: &str,
    bound: usize,
) -> Result<(BTreeSet<Vec<String>>, BTreeSet<Vec<String>>), FsmError> {
    if !m.states.contains(q) {
        return Err(FsmError::StateNotInMachine(q.to_string()));
    }
    let mut arriving = BTreeSet::new();
    let mut accepted = BTreeSet::new();
    // Walk every string of length <= bound once, tracking the reachable
    // state set from q0 and from q simultaneously.
    let mut frontier: Vec<(Vec<String>, BTreeSet<String>, BTreeSet<String>)> = vec![(
        Vec::new(),
        BTreeSet::from([m.q0.clone()]),
        BTreeSet::from([q.to_string()]),
    )];
    loop {
        let mut next = Vec::new();
        for (s, from_q0, from_q) in &frontier {
            if from_q0.contains(q) {
                arriving.insert(s.clone());
            }
            if from_q.iter().any(|r| m.accepting.contains(r)) {
                accepted.insert(s.clone());
            }
            if s.len() < bound {
                for sym in &m.alphabet {
                    let mut ext = s.clone();
                    ext.push(sym.clone());
                    next.push((ext, m.step_set(from_q0, sym), m.step_set(from_q, sym)));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok((arriving, accepted))
}

fn behaviors_equal(
    m1: &Fsm,
    q1: &str,
    m2: &Fsm,
    q2: &str,
    bound: usize,
) -> Result<bool, FsmError> {
    Ok(fsm_state_behavior(m1, q1, bound)? == fsm_state_behavior(m2, q2, bound)?)
}

// ---------------------------------------------------------------------------
// State classification.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateClass {
    Sane,
    Transitory {
        /// The specification transition this state implements a step of.
        spec_edge: (String, String, String),
        /// A witness path from an image state through this state to the
        /// destination image state.
        path: Vec<String>,
    },
    Weird,
}

#[derive(Debug, Clone)]
pub struct StateClassification {
    pub classes: BTreeMap<String, StateClass>,
}

impl StateClassification {
    pub fn of_class(&self, want: fn(&StateClass) -> bool) -> Vec<&String> {
        self.classes.iter().filter(|(_, c)| want(c)).map(|(q, _)| q).collect()
    }
    pub fn weird_states(&self) -> Vec<&String> {
        self.of_class(|c| matches!(c, StateClass::Weird))
    }
    pub fn sane_states(&self) -> Vec<&String> {
        self.of_class(|c| matches!(c, StateClass::Sane))
    }
    pub fn transitory_states(&self) -> Vec<&String> {
        self.of_class(|c| matches!(c, StateClass::Transitory { .. }))
    }
}

/// Does every transition sequence from `q` (length <= bound) reach
/// `target` while staying out of the image until it does? Any cycle among
/// non-image states, any dead end, and any other image state disqualify.
fn all_paths_lead(
    cpu: &Fsm,
    q: &str,
    target: &str,
    image: &BTreeSet<String>,
    visited: &mut BTreeSet<String>,
    bound: usize,
) -> bool {
    if q == target {
        return true;
    }
    if image.contains(q) {
        return false;
    }
    if bound == 0 || visited.contains(q) {
        return false;
    }
    let succs = cpu.successors(q);
    if succs.is_empty() {
        return false;
    }
    visited.insert(q.to_string());
    let ok = succs
        .iter()
        .all(|next| all_paths_lead(cpu, next, target, image, visited, bound - 1));
    visited.remove(q);
    ok
}

/// Is there a path `from -> ... -> q` whose intermediate states (everything
/// after `from`) avoid the image? Returns the path if so.
fn non_image_path(
    cpu: &Fsm,
    from: &str,
    q: &str,
    image: &BTreeSet<String>,
    bound: usize,
) -> Option<Vec<String>> {
    let mut queue: Vec<Vec<String>> = vec![vec![from.to_string()]];
    let mut seen = BTreeSet::from([from.to_string()]);
    while let Some(path) = queue.pop() {
        let last = path.last().unwrap().clone();
        if last == q {
            return Some(path);
        }
        if path.len() > bound {
            continue;
        }
        for next in cpu.successors(&last) {
            if (next == q || !image.contains(next)) && seen.insert(next.clone()) {
                let mut p = path.clone();
                p.push(next.clone());
                queue.insert(0, p);
            }
        }
    }
    None
}

/// Partition the implementation's states into Sane / Transitory / Weird.
pub fn classify_states(
    ifsm: &Fsm,
    cpu: &Fsm,
    gamma: &RepMap,
    path_bound: usize,
) -> Result<StateClassification, FsmError> {
    ifsm.validate()?;
    cpu.validate()?;
    for (qs, image) in gamma {
        if !ifsm.states.contains(qs) {
            return Err(FsmError::StateNotInMachine(qs.clone()));
        }
        for qt in image {
            if !cpu.states.contains(qt) {
                return Err(FsmError::StateNotInMachine(qt.clone()));
            }
        }
    }
    let image = gamma_image(gamma);
    let mut classes = BTreeMap::new();
    for q in &cpu.states {
        if image.contains(q) {
            classes.insert(q.clone(), StateClass::Sane);
            continue;
        }
        let mut found = None;
        'edges: for (q1s, sym, q2s) in &ifsm.delta {
            let (Some(im1), Some(im2)) = (gamma.get(q1s), gamma.get(q2s)) else { continue };
            for q1t in im1 {
                for q2t in im2 {
                    let Some(mut path) = non_image_path(cpu, q1t, q, &image, path_bound) else {
                        continue;
                    };
                    let mut visited = BTreeSet::new();
                    if all_paths_lead(cpu, q, q2t, &image, &mut visited, path_bound) {
                        path.push(q2t.clone());
                        found = Some(StateClass::Transitory {
                            spec_edge: (q1s.clone(), sym.clone(), q2s.clone()),
                            path,
                        });
                        break 'edges;
                    }
                }
            }
        }
        classes.insert(q.clone(), found.unwrap_or(StateClass::Weird));
    }
    Ok(StateClassification { classes })
}

// ---------------------------------------------------------------------------
// Respecting behaviors, and the weird -> exploit check.

#[derive(Debug, Clone)]
pub struct RespectReport {
    pub ok: bool,
    /// (implementation state, specification state) pairs with equal
    /// bounded behavior where the implementation state is nevertheless
    /// Weird.
    pub counterexamples: Vec<(String, String)>,
}

/// Does the representation map respect behaviors at bound L? Every
/// implementation state behavior-equal (at L) to some specification state
/// must be Sane or Transitory.
pub fn respects_behaviors(
    ifsm: &Fsm,
    cpu: &Fsm,
    gamma: &RepMap,
    bound: usize,
) -> Result<RespectReport, FsmError> {
    let classes = classify_states(ifsm, cpu, gamma, bound)?;
    let mut counterexamples = Vec::new();
    for qt in &cpu.states {
        if !matches!(classes.classes[qt], StateClass::Weird) {
            continue;
        }
        for qs in &ifsm.states {
            if behaviors_equal(ifsm, qs, cpu, qt, bound)? {
                counterexamples.push((qt.clone(), qs.clone()));
            }
        }
    }
    Ok(RespectReport { ok: counterexamples.is_empty(), counterexamples })
}

#[derive(Debug, Clone)]
pub struct WeirdExploitReport {
    pub bound: usize,
    pub weird_checked: Vec<String>,
    /// Weird states whose bounded behavior equals some specification
    /// state's behavior — each one is either a bound artifact or a defect
    /// in the representation map.
    pub violations: Vec<(String, String)>,
}

/// For every Weird state, check that no specification state has equal
/// bounded behavior — i.e. the weird state's behavior is unattainable in
/// the specification, which makes it an exploit witness. Requires that the
/// representation map respects behaviors at the same bound.
pub fn weird_implies_exploit(
    ifsm: &Fsm,
    cpu: &Fsm,
    gamma: &RepMap,
    bound: usize,
) -> Result<WeirdExploitReport, FsmError> {
    let respect = respects_behaviors(ifsm, cpu, gamma, bound)?;
    if !respect.ok {
        return Err(FsmError::PreconditionFailed(format!(
            "representation map does not respect behaviors at bound {bound}: {:?}",
            respect.counterexamples
        )));
    }
    let classes = classify_states(ifsm, cpu, gamma, bound)?;
    let mut weird_checked = Vec::new();
    let mut violations = Vec::new();
    for qt in &cpu.states {
        if !matches!(classes.classes[qt], StateClass::Weird) {
            continue;
        }
        weird_checked.push(qt.clone());
        for qs in &ifsm.states {
            if behaviors_equal(ifsm, qs, cpu, qt, bound)? {
                violations.push((qt.clone(), qs.clone()));
            }
        }
    }
    Ok(WeirdExploitReport { bound, weird_checked, violations })
}

/// Implementation transitions between two Sane states with no matching
/// specification transition under the representation map. These escape the
/// weird-state definition entirely, yet the implementation moves between
/// intended states in an unintended way.
pub fn sane_transition_gap(
    ifsm: &Fsm,
    cpu: &Fsm,
    gamma: &RepMap,
) -> Result<Vec<(String, String, String)>, FsmError> {
    ifsm.validate()?;
    cpu.validate()?;
    let image = gamma_image(gamma);
    let mut gaps = Vec::new();
    for (q1t, sym, q2t) in &cpu.delta {
        if !image.contains(q1t) || !image.contains(q2t) {
            continue;
        }
        let matched = ifsm.delta.iter().any(|(q1s, s, q2s)| {
            s == sym
                && gamma.get(q1s).is_some_and(|im| im.contains(q1t))
                && gamma.get(q2s).is_some_and(|im| im.contains(q2t))
        });
        if !matched {
            gaps.push((q1t.clone(), sym.clone(), q2t.clone()));
        }
    }
    Ok(gaps)
}

// ---------------------------------------------------------------------------
// Text format.
//
// One line per entry, `#` comments:
//   q0 <state>
//   accepting <state> ...
//   state <state>            (declares an isolated state)
//   gamma <spec-state> <impl-state> ...
//   <state> <symbol> <state> (a transition)

pub fn parse_fsm_text(src: &str) -> Result<(Fsm, RepMap), FsmError> {
    let mut states = BTreeSet::new();
    let mut alphabet = BTreeSet::new();
    let mut delta = BTreeSet::new();
    let mut q0 = None;
    let mut accepting = BTreeSet::new();
    let mut gamma = RepMap::new();
    for (lineno, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "q0" => {
                if toks.len() != 2 {
                    return Err(FsmError::Syntax(format!("line {}: q0 takes one state", lineno + 1)));
                }
                q0 = Some(toks[1].to_string());
                states.insert(toks[1].to_string());
            }
            "accepting" => {
                for t in &toks[1..] {
                    accepting.insert(t.to_string());
                    states.insert(t.to_string());
                }
            }
            "state" => {
                for t in &toks[1..] {
                    states.insert(t.to_string());
                }
            }
            "gamma" => {
                if toks.len() < 2 {
                    return Err(FsmError::Syntax(format!("line {}: gamma needs a state", lineno + 1)));
                }
                gamma
                    .entry(toks[1].to_string())
                    .or_default()
                    .extend(toks[2..].iter().map(|t| t.to_string()));
            }
            _ if toks.len() == 3 => {
                states.insert(toks[0].to_string());
                states.insert(toks[2].to_string());
                alphabet.insert(toks[1].to_string());
                delta.insert((toks[0].to_string(), toks[1].to_string(), toks[2].to_string()));
            }
            _ => {
                return Err(FsmError::Syntax(format!("line {}: unrecognized entry `{line}`", lineno + 1)))
            }
        }
    }
    let q0 = q0.ok_or_else(|| FsmError::Syntax("missing q0 line".to_string()))?;
    let fsm = Fsm { states, alphabet, delta, q0, accepting };
    fsm.validate()?;
    Ok((fsm, gamma))
}

/// Parse a representation map on its own: only `gamma` lines (and
/// comments) are allowed.
pub fn parse_gamma_text(src: &str) -> Result<RepMap, FsmError> {
    let mut gamma = RepMap::new();
    for (lineno, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] != "gamma" || toks.len() < 2 {
            return Err(FsmError::Syntax(format!(
                "line {}: expected `gamma <spec-state> <impl-state>...`",
                lineno + 1
            )));
        }
        gamma
            .entry(toks[1].to_string())
            .or_default()
            .extend(toks[2..].iter().map(|t| t.to_string()));
    }
    Ok(gamma)
}

pub fn render_fsm_text(fsm: &Fsm, gamma: &RepMap) -> String {
    let mut out = String::new();
    out.push_str(&format!("q0 {}\n", fsm.q0));
    if !fsm.accepting.is_empty() {
        out.push_str("accepting");
        for q in &fsm.accepting {
            out.push_str(&format!(" {q}"));
        }
        out.push('\n');
    }
    for q in &fsm.states {
        let mentioned = q == &fsm.q0
            || fsm.accepting.contains(q)
            || fsm.delta.iter().any(|(a, _, b)| a == q || b == q);
        if !mentioned {
            out.push_str(&format!("state {q}\n"));
        }
    }
    for (a, s, b) in &fsm.delta {
        out.push_str(&format!("{a} {s} {b}\n"));
    }
    for (qs, image) in gamma {
        out.push_str(&format!("gamma {qs}"));
        for qt in image {
            out.push_str(&format!(" {qt}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(q0: &str, accepting: &[&str], edges: &[(&str, &str, &str)]) -> Fsm {
        let mut states = BTreeSet::new();
        let mut alphabet = BTreeSet::new();
        let mut delta = BTreeSet::new();
        states.insert(q0.to_string());
        for q in accepting {
            states.insert(q.to_string());
        }
        for (a, s, b) in edges {
            states.insert(a.to_string());
            states.insert(b.to_string());
            alphabet.insert(s.to_string());
            delta.insert((a.to_string(), s.to_string(), b.to_string()));
        }
        Fsm {
            states,
            alphabet,
            delta,
            q0: q0.to_string(),
            accepting: accepting.iter().map(|q| q.to_string()).collect(),
        }
    }

    fn strs(items: &[&str]) -> BTreeSet<Vec<String>> {
        items
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Vec::new()
                } else {
                    s.chars().map(|c| c.to_string()).collect()
                }
            })
            .collect()
    }

    /// Independent oracle: breadth-first enumeration over the transition
    /// relation, tracking exact string/state-set pairs.
    fn bfs_behavior(m: &Fsm, q: &str, bound: usize) -> (BTreeSet<Vec<String>>, BTreeSet<Vec<String>>) {
        let mut x1 = BTreeSet::new();
        let mut x2 = BTreeSet::new();
        let all_strings = {
            let mut acc: Vec<Vec<String>> = vec![Vec::new()];
            let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
            for _ in 0..bound {
                let mut next = Vec::new();
                for s in &frontier {
                    for sym in &m.alphabet {
                        let mut e = s.clone();
                        e.push(sym.clone());
                        next.push(e);
                    }
                }
                acc.extend(next.iter().cloned());
                frontier = next;
            }
            acc
        };
        let run = |start: &str, s: &[String]| -> BTreeSet<String> {
            let mut cur = BTreeSet::from([start.to_string()]);
            for sym in s {
                cur = m.step_set(&cur, sym);
            }
            cur
        };
        for s in &all_strings {
            if run(&m.q0, s).contains(q) {
                x1.insert(s.clone());
            }
            if run(q, s).iter().any(|r| m.accepting.contains(r)) {
                x2.insert(s.clone());
            }
        }
        (x1, x2)
    }

    fn lock_ifsm() -> Fsm {
        machine("L", &["U"], &[("L", "a", "U"), ("L", "b", "L"), ("U", "a", "U"), ("U", "b", "L")])
    }

    fn lock_cpu() -> Fsm {
        machine(
            "c0",
            &["c2"],
            &[
                ("c0", "a", "c1"),
                ("c0", "b", "w"),
                ("c1", "b", "c2"),
                ("c2", "a", "c2"),
                ("c2", "b", "c0"),
                ("w", "a", "c2"),
                ("w", "b", "w"),
            ],
        )
    }

    fn lock_gamma() -> RepMap {
        RepMap::from([
            ("L".to_string(), BTreeSet::from(["c0".to_string()])),
            ("U".to_string(), BTreeSet::from(["c2".to_string()])),
        ])
    }

    #[test]
    fn behavior_at_bound_zero_and_one() {
        let m = machine("a", &["b"], &[("a", "x", "b")]);
        let (x1, x2) = fsm_state_behavior(&m, "a", 0).unwrap();
        assert_eq!(x1, strs(&[""]));
        assert_eq!(x2, BTreeSet::new());
        let (x1, x2) = fsm_state_behavior(&m, "b", 1).unwrap();
        assert_eq!(x1, strs(&["x"]));
        assert_eq!(x2, strs(&[""]));
        assert!(matches!(
            fsm_state_behavior(&m, "zzz", 1),
            Err(FsmError::StateNotInMachine(_))
        ));
    }

    #[test]
    fn behavior_matches_bfs_oracle_and_is_monotone() {
        for m in [lock_ifsm(), lock_cpu()] {
            for q in m.states.clone() {
                let mut prev: Option<(BTreeSet<Vec<String>>, BTreeSet<Vec<String>>)> = None;
                for bound in 0..=5 {
                    let got = fsm_state_behavior(&m, &q, bound).unwrap();
                    assert_eq!(got, bfs_behavior(&m, &q, bound), "state {q} bound {bound}");
                    if let Some((p1, p2)) = prev {
                        assert!(p1.is_subset(&got.0) && p2.is_subset(&got.1));
                    }
                    prev = Some(got);
                }
            }
        }
    }

    #[test]
    fn identity_setup_is_all_sane() {
        let m = lock_ifsm();
        let gamma: RepMap = m
            .states
            .iter()
            .map(|q| (q.clone(), BTreeSet::from([q.clone()])))
            .collect();
        let c = classify_states(&m, &m, &gamma, 6).unwrap();
        assert!(c.classes.values().all(|cl| matches!(cl, StateClass::Sane)));
        assert!(respects_behaviors(&m, &m, &gamma, 4).unwrap().ok);
        assert!(sane_transition_gap(&m, &m, &gamma).unwrap().is_empty());
        let report = weird_implies_exploit(&m, &m, &gamma, 4).unwrap();
        assert!(report.weird_checked.is_empty() && report.violations.is_empty());
    }

    #[test]
    fn unreachable_extra_state_is_weird() {
        let m = lock_ifsm();
        let mut cpu = m.clone();
        cpu.states.insert("ghost".to_string());
        let gamma: RepMap = m
            .states
            .iter()
            .map(|q| (q.clone(), BTreeSet::from([q.clone()])))
            .collect();
        let c = classify_states(&m, &cpu, &gamma, 6).unwrap();
        assert_eq!(c.classes["ghost"], StateClass::Weird);
        assert_eq!(c.weird_states(), ["ghost"]);
    }

    #[test]
    fn lock_fixture_partition_and_theorem() {
        let ifsm = lock_ifsm();
        let cpu = lock_cpu();
        let gamma = lock_gamma();
        let c = classify_states(&ifsm, &cpu, &gamma, 6).unwrap();
        assert_eq!(c.sane_states(), ["c0", "c2"]);
        assert_eq!(c.transitory_states(), ["c1"]);
        assert_eq!(c.weird_states(), ["w"]);
        // Partition: every state in exactly one class.
        assert_eq!(c.classes.len(), cpu.states.len());
        match &c.classes["c1"] {
            StateClass::Transitory { spec_edge, path } => {
                assert_eq!(spec_edge, &("L".to_string(), "a".to_string(), "U".to_string()));
                assert_eq!(path, &["c0", "c1", "c2"]);
            }
            other => panic!("expected transitory, got {other:?}"),
        }
        let respect = respects_behaviors(&ifsm, &cpu, &gamma, 6).unwrap();
        assert!(respect.ok, "{:?}", respect.counterexamples);
        let report = weird_implies_exploit(&ifsm, &cpu, &gamma, 6).unwrap();
        assert_eq!(report.weird_checked, ["w"]);
        assert!(report.violations.is_empty());
        assert!(sane_transition_gap(&ifsm, &cpu, &gamma).unwrap().is_empty());
    }

    #[test]
    fn gap_variant_reports_exactly_the_planted_edge() {
        let ifsm = lock_ifsm();
        let mut cpu = lock_cpu();
        cpu.delta.insert(("c0".to_string(), "b".to_string(), "c2".to_string()));
        let gaps = sane_transition_gap(&ifsm, &cpu, &lock_gamma()).unwrap();
        assert_eq!(gaps, [("c0".to_string(), "b".to_string(), "c2".to_string())]);
    }

    #[test]
    fn disrespectful_gamma_fails_precondition() {
        // Omit a behavior-equivalent state from gamma: the CPU implements
        // the accepting sink twice (reached nondeterministically), and
        // gamma only covers one of the copies.
        let ifsm = machine("s0", &["s1"], &[("s0", "x", "s1"), ("s1", "x", "s1")]);
        let cpu = machine(
            "t0",
            &["t1", "t2"],
            &[("t0", "x", "t1"), ("t0", "x", "t2"), ("t1", "x", "t1"), ("t2", "x", "t2")],
        );
        let gamma = RepMap::from([
            ("s0".to_string(), BTreeSet::from(["t0".to_string()])),
            ("s1".to_string(), BTreeSet::from(["t1".to_string()])),
        ]);
        let respect = respects_behaviors(&ifsm, &cpu, &gamma, 3).unwrap();
        assert!(!respect.ok);
        assert!(respect.counterexamples.iter().any(|(qt, _)| qt == "t2"));
        assert!(matches!(
            weird_implies_exploit(&ifsm, &cpu, &gamma, 3),
            Err(FsmError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn text_format_round_trips() {
        let ifsm = lock_ifsm();
        let gamma = lock_gamma();
        let text = render_fsm_text(&ifsm, &gamma);
        let (parsed, parsed_gamma) = parse_fsm_text(&text).unwrap();
        assert_eq!(parsed, ifsm);
        assert_eq!(parsed_gamma, gamma);
        assert!(parse_fsm_text("L a U\n").is_err()); // missing q0
    }
}
