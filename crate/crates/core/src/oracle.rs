//! The exploit-classification engine.
//!
//! An attack is a target-level context linked against a compiled component.
//! It counts as an exploit when no source-level context's behavior relates
//! to the attack's behavior. That universal claim is undecidable, so every
//! answer here is one of three verdicts:
//!
//! * `RefutedUpToBound` — a simulating source context was found, so the
//!   attack is definitely not an exploit (witnessed, exact).
//! * `Certified` — a universal property of source behaviors (justified by
//!   construction, spot-checked against enumerated contexts) excludes every
//!   possible preimage of an observed target trace. Sound.
//! * `UnknownAtBound` — neither, at the given search bound.
//!
//! Trace-level checks (one witness trace surviving all contexts) are
//! strictly stronger evidence than behavior-level checks; any trace-level
//! certificate is accepted at the behavior level too.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::imp::{self, ImpCmd, ImpComponent, ImpContext, ImpExpr, ImpOp, ImpValue};
use crate::toya::{AContext, AExpr, AInstr, AMem, AObject};
use crate::toyc::{CCmd, CDeclType, CExpr, CLValue, CProc, CStoreDecls};
use crate::trace::{
    behavior_related, in_property_image, relate_trace, BehaviorSample, ExplorationBounds,
    ImageError, IntIdentityRelation, OutputValue, ReemitRelation, SourceValueRelation, Terminal,
    Trace, TraceProperty, TraceRelation,
};

// ---------------------------------------------------------------------------
// Stage relations.

/// The trace relation for each compiler stage and each composition of
/// stages. Compositions are computed by chaining the single-stage
/// relations through explicit intermediates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageRelation {
    ImpToyc,
    ToycToya,
    ToyaToyh,
    ImpToya,
    ToycToyh,
    ImpToyh,
}

impl StageRelation {
    fn parts(&self) -> Vec<&'static dyn TraceRelation> {
        match self {
            StageRelation::ImpToyc => vec![&SourceValueRelation],
            StageRelation::ToycToya => vec![&IntIdentityRelation],
            StageRelation::ToyaToyh => vec![&ReemitRelation],
            StageRelation::ImpToya => vec![&SourceValueRelation, &IntIdentityRelation],
            StageRelation::ToycToyh => vec![&IntIdentityRelation, &ReemitRelation],
            StageRelation::ImpToyh => {
                vec![&SourceValueRelation, &IntIdentityRelation, &ReemitRelation]
            }
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            StageRelation::ImpToyc => "imp-to-toyc",
            StageRelation::ToycToya => "toyc-to-toya",
            StageRelation::ToyaToyh => "toya-to-toyh",
            StageRelation::ImpToya => "imp-to-toya",
            StageRelation::ToycToyh => "toyc-to-toyh",
            StageRelation::ImpToyh => "imp-to-toyh",
        }
    }
}

fn chain_compat(parts: &[&'static dyn TraceRelation], s: Terminal, t: Terminal) -> bool {
    match parts {
        [] => s == t,
        [one] => one.terminals_compatible(s, t),
        [first, rest @ ..] => Terminal::ALL
            .iter()
            .any(|mid| first.terminals_compatible(s, *mid) && chain_compat(rest, *mid, t)),
    }
}

impl TraceRelation for StageRelation {
    fn name(&self) -> &str {
        self.display_name()
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        let mut cur = v.clone();
        for p in self.parts() {
            cur = p.forward(&cur)?;
        }
        Some(cur)
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        let mut cur = vec![v.clone()];
        for p in self.parts().into_iter().rev() {
            let mut next = Vec::new();
            for value in &cur {
                for s in p.preimages(value)? {
                    if !next.contains(&s) {
                        next.push(s);
                    }
                }
            }
            cur = next;
        }
        Some(cur)
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        chain_compat(&self.parts(), source, target)
    }
}

// ---------------------------------------------------------------------------
// Verdicts and evidence.

/// A source context together with its sampled behavior when linked with
/// the component under analysis.
#[derive(Debug, Clone)]
pub struct SourceCandidate {
    pub label: String,
    pub sample: BehaviorSample,
}

#[derive(Debug, Clone)]
pub struct CertEvidence {
    /// The target trace no property-satisfying source trace can map to.
    pub witness: Trace,
    pub property: String,
    pub justification: String,
    /// How many enumerated source contexts the property was checked on.
    pub spot_checked: usize,
    /// "trace" for single-trace certificates, "hyperproperty" for
    /// whole-behavior certificates.
    pub mode: &'static str,
}

#[derive(Debug, Clone)]
pub struct RefutEvidence {
    /// A source context whose behavior simulates the attack.
    pub simulating_context: String,
    pub contexts_searched: usize,
}

#[derive(Debug, Clone)]
pub struct UnknownEvidence {
    /// A target trace no enumerated source context simulated, if any.
    pub surviving_witness: Option<Trace>,
    pub contexts_searched: usize,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Certified(CertEvidence),
    RefutedUpToBound(RefutEvidence),
    UnknownAtBound(UnknownEvidence),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }
    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::RefutedUpToBound(_))
    }
    pub fn summary(&self) -> String {
        match self {
            Verdict::Certified(e) => format!("Certified (property `{}`)", e.property),
            Verdict::RefutedUpToBound(e) => {
                format!("RefutedUpToBound (simulator {})", e.simulating_context)
            }
            Verdict::UnknownAtBound(e) => {
                format!("UnknownAtBound ({} contexts searched)", e.contexts_searched)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum OracleError {
    /// The spot-check found a source context violating the supplied
    /// property: the certificate is invalid.
    PropertyNotUniversal { context: String, trace: Trace },
    Image(ImageError),
    LinkFailure(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::PropertyNotUniversal { context, trace } => {
                write!(f, "property violated by context {context} with trace {trace:?}")
            }
            OracleError::Image(e) => write!(f, "{e}"),
            OracleError::LinkFailure(m) => write!(f, "link failure: {m}"),
        }
    }
}

impl From<ImageError> for OracleError {
    fn from(e: ImageError) -> Self {
        OracleError::Image(e)
    }
}

/// Deterministic witness order: shortest traces first, then lexicographic
/// on the rendered text.
pub fn witness_order(sample: &BehaviorSample) -> Vec<Trace> {
    let mut ts: Vec<Trace> = sample.traces().into_iter().cloned().collect();
    ts.sort_by(|a, b| {
        (a.outputs.len(), a.render_text()).cmp(&(b.outputs.len(), b.render_text()))
    });
    ts.dedup();
    ts
}

// ---------------------------------------------------------------------------
// Classification.

/// Trace-level check: does some target trace survive every enumerated
/// source context? Never certifies on its own.
pub fn texploit_check(
    rel: &dyn TraceRelation,
    candidates: &[SourceCandidate],
    target: &BehaviorSample,
) -> Verdict {
    let witnesses = witness_order(target);
    let mut simulator_of_all: Option<String> = None;
    for t_t in &witnesses {
        let found = candidates.iter().find(|c| {
            c.sample.traces().iter().any(|t_s| relate_trace(rel, t_s, t_t))
        });
        match found {
            Some(c) => {
                if simulator_of_all.is_none() {
                    simulator_of_all = Some(c.label.clone());
                }
            }
            None => {
                return Verdict::UnknownAtBound(UnknownEvidence {
                    surviving_witness: Some(t_t.clone()),
                    contexts_searched: candidates.len(),
                })
            }
        }
    }
    match simulator_of_all {
        Some(label) => Verdict::RefutedUpToBound(RefutEvidence {
            simulating_context: label,
            contexts_searched: candidates.len(),
        }),
        // An attack with no traces at all has no witness either.
        None => Verdict::UnknownAtBound(UnknownEvidence {
            surviving_witness: None,
            contexts_searched: candidates.len(),
        }),
    }
}

/// Check the property against every trace of every enumerated source
/// context. Returns the number of contexts checked.
pub fn spot_check(
    candidates: &[SourceCandidate],
    pi: &TraceProperty,
) -> Result<usize, OracleError> {
    for c in candidates {
        for t in c.sample.traces() {
            if !pi.holds(t) {
                return Err(OracleError::PropertyNotUniversal {
                    context: c.label.clone(),
                    trace: t.clone(),
                });
            }
        }
    }
    Ok(candidates.len())
}

/// Find the first target trace (in witness order) outside the relational
/// image of the property.
pub fn certified_witness(
    rel: &dyn TraceRelation,
    pi: &TraceProperty,
    target: &BehaviorSample,
) -> Result<Option<Trace>, ImageError> {
    for t_t in witness_order(target) {
        if !in_property_image(rel, pi, &t_t)? {
            return Ok(Some(t_t));
        }
    }
    Ok(None)
}

/// Sound certification: spot-check the property universally over the
/// enumerated contexts, then look for a target trace whose every preimage
/// would violate it.
pub fn certify_by_property(
    rel: &dyn TraceRelation,
    candidates: &[SourceCandidate],
    target: &BehaviorSample,
    pi: &TraceProperty,
) -> Result<Verdict, OracleError> {
    let spot_checked = spot_check(candidates, pi)?;
    match certified_witness(rel, pi, target)? {
        Some(witness) => Ok(Verdict::Certified(CertEvidence {
            witness,
            property: pi.name.clone(),
            justification: pi.justification.clone(),
            spot_checked,
            mode: "trace",
        })),
        None => Ok(Verdict::UnknownAtBound(UnknownEvidence {
            surviving_witness: None,
            contexts_searched: spot_checked,
        })),
    }
}

/// Behavior-level check: a source context refutes the attack only if its
/// whole sampled behavior relates to the attack's whole behavior (both
/// directions over the trace sets).
pub fn exploit_check(
    rel: &dyn TraceRelation,
    candidates: &[SourceCandidate],
    target: &BehaviorSample,
) -> Verdict {
    for c in candidates {
        if behavior_related(rel, &c.sample, target) {
            return Verdict::RefutedUpToBound(RefutEvidence {
                simulating_context: c.label.clone(),
                contexts_searched: candidates.len(),
            });
        }
    }
    Verdict::UnknownAtBound(UnknownEvidence {
        surviving_witness: witness_order(target).into_iter().next(),
        contexts_searched: candidates.len(),
    })
}

/// A predicate over whole behavior samples, for properties that are not
/// trace properties (side channels). Certification additionally requires a
/// transport justification: an argument that the predicate is preserved by
/// the stage relation, so that a target behavior violating it cannot be
/// related to any source behavior satisfying it.
pub struct HyperProperty {
    pub name: String,
    pub justification: String,
    pred: alloc::boxed::Box<dyn Fn(&BehaviorSample) -> bool + Send + Sync>,
}

impl HyperProperty {
    pub fn new(
        name: impl Into<String>,
        justification: impl Into<String>,
        pred: impl Fn(&BehaviorSample) -> bool + Send + Sync + 'static,
    ) -> Self {
        HyperProperty {
            name: name.into(),
            justification: justification.into(),
            pred: alloc::boxed::Box::new(pred),
        }
    }

    pub fn holds(&self, sample: &BehaviorSample) -> bool {
        (self.pred)(sample)
    }
}

/// Behavior-level certification by a relation-transported hyperproperty:
/// every enumerated source behavior satisfies it, the attack behavior does
/// not.
pub fn certify_by_hyperproperty(
    candidates: &[SourceCandidate],
    target: &BehaviorSample,
    pi: &HyperProperty,
) -> Result<Verdict, OracleError> {
    for c in candidates {
        if !pi.holds(&c.sample) {
            return Err(OracleError::PropertyNotUniversal {
                context: c.label.clone(),
                trace: c
                    .sample
                    .traces()
                    .first()
                    .map(|t| (*t).clone())
                    .unwrap_or(Trace::empty(Terminal::Halted)),
            });
        }
    }
    if !pi.holds(target) {
        Ok(Verdict::Certified(CertEvidence {
            witness: witness_order(target).into_iter().next().unwrap_or(Trace::empty(Terminal::Halted)),
            property: pi.name.clone(),
            justification: pi.justification.clone(),
            spot_checked: candidates.len(),
            mode: "hyperproperty",
        }))
    } else {
        Ok(Verdict::UnknownAtBound(UnknownEvidence {
            surviving_witness: None,
            contexts_searched: candidates.len(),
        }))
    }
}

// ---------------------------------------------------------------------------
// Full-abstraction check.

#[derive(Debug, Clone)]
pub enum FaOutcome {
    /// The pair is distinguished after compilation but no enumerated source
    /// context distinguishes it.
    FaWitness { differing_traces: (Vec<Trace>, Vec<Trace>) },
    NotWitnessAtBound,
    PairNotEquivalentAtBound { distinguishing_context: String },
}

/// `paired` holds, per enumerated source context, the behaviors of the two
/// components linked into it; `target` holds the attack's behaviors against
/// the two compiled components.
pub fn fa_exploit_check(
    paired: &[(String, BehaviorSample, BehaviorSample)],
    target: (&BehaviorSample, &BehaviorSample),
) -> FaOutcome {
    for (label, b1, b2) in paired {
        let t1 = {
            let mut t = b1.traces().into_iter().cloned().collect::<Vec<_>>();
            t.sort_by_key(|t| t.render_text());
            t.dedup();
            t
        };
        let t2 = {
            let mut t = b2.traces().into_iter().cloned().collect::<Vec<_>>();
            t.sort_by_key(|t| t.render_text());
            t.dedup();
            t
        };
        if t1 != t2 {
            return FaOutcome::PairNotEquivalentAtBound {
                distinguishing_context: label.clone(),
            };
        }
    }
    let w1 = witness_order(target.0);
    let w2 = witness_order(target.1);
    if w1 != w2 {
        FaOutcome::FaWitness { differing_traces: (w1, w2) }
    } else {
        FaOutcome::NotWitnessAtBound
    }
}

// ---------------------------------------------------------------------------
// Weird-machine sampling.

#[derive(Debug)]
pub struct WmReport {
    /// Attacks certified as exploits, with their sampled behaviors.
    pub certified: Vec<(String, BehaviorSample)>,
    pub refuted: Vec<String>,
    pub unknown: Vec<String>,
}

/// Enumerate an attacker class, classify each attack, and collect the
/// behaviors of the certified ones (the sampled weird machine). Unknowns
/// are flagged separately, never silently included.
pub fn wm_sample(
    attacks: &[(String, BehaviorSample)],
    mirror: &[SourceCandidate],
    rel: &dyn TraceRelation,
    certificate: &TraceProperty,
) -> Result<WmReport, OracleError> {
    spot_check(mirror, certificate)?;
    let mut report = WmReport { certified: Vec::new(), refuted: Vec::new(), unknown: Vec::new() };
    for (label, behavior) in attacks {
        if let Verdict::RefutedUpToBound(_) = exploit_check(rel, mirror, behavior) {
            report.refuted.push(label.clone());
            continue;
        }
        match certified_witness(rel, certificate, behavior)? {
            Some(_) => report.certified.push((label.clone(), behavior.clone())),
            None => report.unknown.push(label.clone()),
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Propagation across stages.

#[derive(Debug, Clone)]
pub enum PropagationError {
    PreconditionFailed(String),
}

impl fmt::Display for PropagationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropagationError::PreconditionFailed(p) => write!(f, "precondition failed: {p}"),
        }
    }
}

#[derive(Debug)]
pub struct PropagationReport {
    pub preconditions: Vec<(String, bool)>,
    pub verdict: Verdict,
}

/// Check the named preconditions; only if all hold, run the classification
/// at the composed stage. A failed precondition yields an error and the
/// conclusion is never asserted.
pub fn propagate_with_preconditions(
    preconditions: Vec<(String, bool)>,
    classify: impl FnOnce() -> Result<Verdict, OracleError>,
) -> Result<PropagationReport, PropagationError> {
    if let Some((name, _)) = preconditions.iter().find(|(_, ok)| !ok) {
        return Err(PropagationError::PreconditionFailed(name.clone()));
    }
    let verdict = classify()
        .map_err(|e| PropagationError::PreconditionFailed(format!("classification error: {e}")))?;
    Ok(PropagationReport { preconditions, verdict })
}

/// Do all sample pairs preserve traces under the relation?
pub fn preserves_on_pairs(rel: &dyn TraceRelation, pairs: &[(Trace, Trace)]) -> bool {
    pairs.iter().all(|(s, t)| relate_trace(rel, s, t))
}

// ---------------------------------------------------------------------------
// Source-context enumeration (full grammar, by AST size).

/// Atom configuration for enumeration: expressions of size one are the two
/// booleans, the naturals `0..=nat_lits`, and the interface variables.
#[derive(Debug, Clone)]
pub struct EnumConfig {
    pub max_size: u32,
    pub nat_lits: u64,
}

fn atom_exprs(vars: &[String], cfg: &EnumConfig) -> Vec<ImpExpr> {
    let mut out = vec![
        ImpExpr::Lit(ImpValue::Bool(false)),
        ImpExpr::Lit(ImpValue::Bool(true)),
    ];
    for n in 0..=cfg.nat_lits {
        out.push(ImpExpr::Lit(ImpValue::Nat(n)));
    }
    for v in vars {
        out.push(ImpExpr::Var(v.clone()));
    }
    out
}

const IMP_OPS: [ImpOp; 6] = [ImpOp::Add, ImpOp::Mul, ImpOp::Lt, ImpOp::Eq, ImpOp::And, ImpOp::Or];

/// `exprs[n]` lists all expressions of size exactly `n` (index 0 unused).
fn exprs_by_size(vars: &[String], cfg: &EnumConfig) -> Vec<Vec<ImpExpr>> {
    let n = cfg.max_size as usize;
    let mut table: Vec<Vec<ImpExpr>> = vec![Vec::new(); n + 1];
    if n >= 1 {
        table[1] = atom_exprs(vars, cfg);
    }
    for size in 2..=n {
        let mut level = Vec::new();
        for a_size in 1..size.saturating_sub(1) {
            let b_size = size - 1 - a_size;
            if b_size < 1 {
                continue;
            }
            for op in IMP_OPS {
                for a in &table[a_size] {
                    for b in &table[b_size] {
                        level.push(ImpExpr::Bin(op, alloc::boxed::Box::new(a.clone()), alloc::boxed::Box::new(b.clone())));
                    }
                }
            }
        }
        table[size] = level;
    }
    table
}

fn cmds_by_size(vars: &[String], cfg: &EnumConfig, exprs: &[Vec<ImpExpr>]) -> Vec<Vec<ImpCmd>> {
    let n = cfg.max_size as usize;
    let mut table: Vec<Vec<ImpCmd>> = vec![Vec::new(); n + 1];
    if n >= 1 {
        table[1] = vec![ImpCmd::Skip];
    }
    for size in 2..=n {
        let mut level = Vec::new();
        // output e  (1 + |e|)
        for e in &exprs[size - 1] {
            level.push(ImpCmd::Output(e.clone()));
        }
        // x := e  (2 + |e|)
        if size >= 3 {
            for e in &exprs[size - 2] {
                for x in vars {
                    level.push(ImpCmd::Assign(x.clone(), e.clone()));
                }
            }
        }
        // seq a b  (1 + |a| + |b|)
        for a_size in 1..size - 1 {
            let b_size = size - 1 - a_size;
            for a in &table[a_size] {
                for b in &table[b_size] {
                    level.push(ImpCmd::Seq(alloc::boxed::Box::new(a.clone()), alloc::boxed::Box::new(b.clone())));
                }
            }
        }
        // if e a b  (1 + |e| + |a| + |b|)
        for e_size in 1..size {
            for a_size in 1..size {
                let rest = size as i64 - 1 - e_size as i64 - a_size as i64;
                if rest < 1 {
                    continue;
                }
                let b_size = rest as usize;
                for e in &exprs[e_size] {
                    for a in &table[a_size] {
                        for b in &table[b_size] {
                            level.push(ImpCmd::If(
                                e.clone(),
                                alloc::boxed::Box::new(a.clone()),
                                alloc::boxed::Box::new(b.clone()),
                            ));
                        }
                    }
                }
            }
        }
        // while e a  (1 + |e| + |a|)
        for e_size in 1..size - 1 {
            let a_size = size - 1 - e_size;
            for e in &exprs[e_size] {
                for a in &table[a_size] {
                    level.push(ImpCmd::While(e.clone(), alloc::boxed::Box::new(a.clone())));
                }
            }
        }
        table[size] = level;
    }
    table
}

/// Every source context of AST size at most `cfg.max_size`, deterministic
/// order (by size, then construction order). The hole is annotated with the
/// component interface.
pub fn enumerate_imp_contexts(interface: &[String], cfg: &EnumConfig) -> Vec<ImpContext> {
    let vars: Vec<String> = interface.to_vec();
    let exprs = exprs_by_size(&vars, cfg);
    let cmds = cmds_by_size(&vars, cfg, &exprs);
    let n = cfg.max_size as usize;
    let mut table: Vec<Vec<ImpContext>> = vec![Vec::new(); n + 1];
    if n >= 1 {
        table[1] = vec![ImpContext::Hole(vars.clone())];
    }
    for size in 2..=n {
        let mut level = Vec::new();
        // seq with the hole on either side (1 + |ctx| + |cmd|)
        for c_size in 1..size - 1 {
            let k_size = size - 1 - c_size;
            for c in table[c_size].clone() {
                for k in &cmds[k_size] {
                    level.push(ImpContext::SeqLeft(alloc::boxed::Box::new(c.clone()), k.clone()));
                    level.push(ImpContext::SeqRight(k.clone(), alloc::boxed::Box::new(c.clone())));
                }
            }
        }
        // if with the hole in one branch (1 + |e| + |ctx| + |cmd|)
        for e_size in 1..size {
            for c_size in 1..size {
                let rest = size as i64 - 1 - e_size as i64 - c_size as i64;
                if rest < 1 {
                    continue;
                }
                let k_size = rest as usize;
                for e in &exprs[e_size] {
                    for c in table[c_size].clone() {
                        for k in &cmds[k_size] {
                            level.push(ImpContext::IfThen(
                                e.clone(),
                                alloc::boxed::Box::new(c.clone()),
                                k.clone(),
                            ));
                            level.push(ImpContext::IfElse(
                                e.clone(),
                                k.clone(),
                                alloc::boxed::Box::new(c.clone()),
                            ));
                        }
                    }
                }
            }
        }
        // while with the hole in the body (1 + |e| + |ctx|)
        for e_size in 1..size - 1 {
            let c_size = size - 1 - e_size;
            for e in &exprs[e_size] {
                for c in table[c_size].clone() {
                    level.push(ImpContext::While(e.clone(), alloc::boxed::Box::new(c.clone())));
                }
            }
        }
        table[size] = level;
    }
    table.into_iter().flatten().collect()
}

/// Independent count of the same grammar, by pure arithmetic on the size
/// recurrences — the completeness oracle for the enumerator.
pub fn count_imp_contexts(interface_len: usize, cfg: &EnumConfig) -> u64 {
    let n = cfg.max_size as usize;
    let atoms = 2 + (cfg.nat_lits + 1) + interface_len as u64;
    let vars = interface_len as u64;
    let mut e = vec![0u64; n + 1];
    if n >= 1 {
        e[1] = atoms;
    }
    for size in 2..=n {
        for a in 1..size.saturating_sub(1) {
            let b = size - 1 - a;
            if b >= 1 {
                e[size] += 6 * e[a] * e[b];
            }
        }
    }
    let mut k = vec![0u64; n + 1];
    if n >= 1 {
        k[1] = 1;
    }
    for size in 2..=n {
        k[size] += e[size - 1];
        if size >= 3 {
            k[size] += vars * e[size - 2];
        }
        for a in 1..size - 1 {
            k[size] += k[a] * k[size - 1 - a];
        }
        for es in 1..size {
            for a in 1..size {
                let rest = size as i64 - 1 - es as i64 - a as i64;
                if rest >= 1 {
                    k[size] += e[es] * k[a] * k[rest as usize];
                }
            }
        }
        for es in 1..size - 1 {
            k[size] += e[es] * k[size - 1 - es];
        }
    }
    let mut x = vec![0u64; n + 1];
    if n >= 1 {
        x[1] = 1;
    }
    for size in 2..=n {
        for c in 1..size - 1 {
            x[size] += 2 * x[c] * k[size - 1 - c];
        }
        for es in 1..size {
            for c in 1..size {
                let rest = size as i64 - 1 - es as i64 - c as i64;
                if rest >= 1 {
                    x[size] += 2 * e[es] * x[c] * k[rest as usize];
                }
            }
        }
        for es in 1..size - 1 {
            x[size] += e[es] * x[size - 1 - es];
        }
    }
    x.iter().sum()
}

// ---------------------------------------------------------------------------
// Mirror-grammar enumeration (attacker-class source counterparts).

/// The literal domain used in mirror contexts: both booleans plus the
/// bounded naturals.
pub fn imp_lit_domain(bounds: &ExplorationBounds) -> Vec<ImpValue> {
    imp::value_domain(bounds)
}

/// Source counterparts of the assignment-prefix attacker grammar:
/// `x := lit; …; hole`. Enumerates up to `max_assigns` literal assignments
/// to interface variables, plus the bare hole.
pub fn enumerate_imp_assign_prefix(
    interface: &[String],
    lits: &[ImpValue],
    max_assigns: usize,
) -> Vec<ImpContext> {
    let mut out = vec![ImpContext::Hole(interface.to_vec())];
    let mut frontier: Vec<Vec<(String, ImpValue)>> = vec![Vec::new()];
    for _ in 0..max_assigns {
        let mut next = Vec::new();
        for prefix in &frontier {
            for v in interface {
                for lit in lits {
                    let mut p = prefix.clone();
                    p.push((v.clone(), *lit));
                    next.push(p);
                }
            }
        }
        for p in &next {
            let mut ctx = ImpContext::Hole(interface.to_vec());
            for (v, lit) in p.iter().rev() {
                ctx = ImpContext::SeqRight(
                    ImpCmd::Assign(v.clone(), ImpExpr::Lit(*lit)),
                    alloc::boxed::Box::new(ctx),
                );
            }
            out.push(ctx);
        }
        frontier = next;
    }
    out
}

/// Build behavior candidates for source contexts linked with a component.
/// Contexts that fail to link are skipped.
pub fn imp_candidates(
    comp: &ImpComponent,
    ctxs: &[ImpContext],
    bounds: &ExplorationBounds,
) -> Vec<SourceCandidate> {
    let mut out = Vec::new();
    for ctx in ctxs {
        let Ok(whole) = imp::link_imp(ctx, comp) else { continue };
        out.push(SourceCandidate {
            label: imp::render_context(ctx),
            sample: imp::behavior_imp(&whole, bounds),
        });
    }
    out
}

/// The assignment-prefix attacker class in the pointer language: a `main`
/// that declares one local per interface variable, assigns the given
/// literals, and calls `hole` with each local's address.
pub fn toyc_assign_prefix_attack(interface: &[String], assigns: &[(String, i64)]) -> CStoreDecls {
    let mut body = CCmd::Call(
        crate::compile::HOLE_PROC.to_string(),
        interface
            .iter()
            .map(|v| CExpr::Addr(alloc::boxed::Box::new(CLValue::Var(v.clone()))))
            .collect(),
    );
    for (v, lit) in assigns.iter().rev() {
        body = CCmd::Seq(
            alloc::boxed::Box::new(CCmd::Assign(CLValue::Var(v.clone()), CExpr::Lit(*lit))),
            alloc::boxed::Box::new(body),
        );
    }
    CStoreDecls {
        procs: vec![CProc {
            name: "main".to_string(),
            params: Vec::new(),
            locals: interface.iter().map(|v| (v.clone(), CDeclType::Int)).collect(),
            body,
        }],
    }
}

/// Arg-only contexts: `main() { call proc(lit, …) }` over a literal domain.
pub fn toyc_arg_call_contexts(
    proc_name: &str,
    arity: usize,
    lits: &[i64],
) -> Vec<(String, CStoreDecls)> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        let args: Vec<i64> = idx.iter().map(|&i| lits[i]).collect();
        let store = CStoreDecls {
            procs: vec![CProc {
                name: "main".to_string(),
                params: Vec::new(),
                locals: Vec::new(),
                body: CCmd::Call(
                    proc_name.to_string(),
                    args.iter().map(|&a| CExpr::Lit(a)).collect(),
                ),
            }],
        };
        out.push((format!("main(){{call {proc_name}({args:?})}}"), store));
        if arity == 0 {
            break;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < lits.len() {
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
    out
}

/// Single-call assembly contexts: a two-instruction driver
/// `call proc(lits…); halt` at low addresses.
pub fn toya_single_call_contexts(
    proc_name: &str,
    arity: usize,
    lits: &[i64],
    sp: i64,
) -> Vec<(String, AContext)> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        let args: Vec<i64> = idx.iter().map(|&i| lits[i]).collect();
        let mut mem = AMem::new();
        mem.insert(
            0,
            AObject::Instr {
                proc: "@driver".to_string(),
                instr: AInstr::Call(
                    proc_name.to_string(),
                    args.iter().map(|&a| AExpr::Lit(a)).collect(),
                ),
            },
        );
        mem.insert(1, AObject::Instr { proc: "@driver".to_string(), instr: AInstr::Halt });
        out.push((
            format!("<0;{sp};call {proc_name}({args:?});halt>"),
            AContext { pc: 0, sp, procs: Vec::new(), mem },
        ));
        if arity == 0 {
            break;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < lits.len() {
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
    out
}

// ---------------------------------------------------------------------------
// Re-validation of evidence (soundness audits).

/// Re-validate a trace-mode certificate from scratch: the spot-check log
/// must be clean and the recorded witness must still lie outside the
/// property's image.
pub fn revalidate_certificate(
    rel: &dyn TraceRelation,
    candidates: &[SourceCandidate],
    pi: &TraceProperty,
    cert: &CertEvidence,
) -> bool {
    spot_check(candidates, pi).is_ok()
        && matches!(in_property_image(rel, pi, &cert.witness), Ok(false))
}

/// The trace-level relation implies the behavior-level one: a certified
/// single-trace witness must never be refuted by the behavior-level check.
pub fn texploit_accepted_by_exploit(
    rel: &dyn TraceRelation,
    candidates: &[SourceCandidate],
    target: &BehaviorSample,
) -> bool {
    !exploit_check(rel, candidates, target).is_refuted()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use crate::imp::parse_component;
    use crate::toyc::{behavior_toyc, link_toyc};

    fn output_x_component() -> ImpComponent {
        parse_component("(component (x) (output x))").unwrap()
    }

    fn quick_bounds() -> ExplorationBounds {
        ExplorationBounds::quick()
    }

    /// Behavior of one assignment-prefix attack `x := i; hole(&x)` against
    /// a compiled component.
    fn dop_attack_behavior(comp: &ImpComponent, i: i64, bounds: &ExplorationBounds) -> BehaviorSample {
        let attack = toyc_assign_prefix_attack(&comp.vars, &[("x".to_string(), i)]);
        let hole = crate::compile::compile_imp_component(comp);
        let whole = link_toyc(&attack, &hole).unwrap();
        behavior_toyc(&whole, bounds).unwrap()
    }

    fn nonneg_property() -> TraceProperty {
        TraceProperty::new(
            "outputs-nonnegative",
            "source outputs are booleans or naturals; both map to nonnegative integers",
            |t| {
                t.outputs.iter().all(|o| match o {
                    OutputValue::Int(i) => *i >= 0,
                    _ => true,
                })
            },
        )
    }

    fn mirror_candidates(comp: &ImpComponent, bounds: &ExplorationBounds) -> Vec<SourceCandidate> {
        let lits = imp_lit_domain(bounds);
        let ctxs = enumerate_imp_assign_prefix(&comp.vars, &lits, 1);
        imp_candidates(comp, &ctxs, bounds)
    }

    #[test]
    fn enumerator_matches_counting_oracle() {
        for (iface_len, cfg) in [
            (6, EnumConfig { max_size: 4, nat_lits: 1 }),
            (1, EnumConfig { max_size: 5, nat_lits: 1 }),
            (2, EnumConfig { max_size: 4, nat_lits: 3 }),
        ] {
            let iface: Vec<String> = (0..iface_len).map(|i| format!("v{i}")).collect();
            let ctxs = enumerate_imp_contexts(&iface, &cfg);
            // No duplicates.
            let rendered: BTreeSet<String> =
                ctxs.iter().map(|c| imp::render_context(c)).collect();
            assert_eq!(rendered.len(), ctxs.len());
            assert_eq!(ctxs.len() as u64, count_imp_contexts(iface_len, &cfg));
        }
        // The reference configuration: six interface variables, atoms
        // {false,true,0,1,v1..v6}, sizes up to 4.
        assert_eq!(count_imp_contexts(6, &EnumConfig { max_size: 4, nat_lits: 1 }), 53);
    }

    #[test]
    fn negative_output_attack_is_certified() {
        let comp = output_x_component();
        let bounds = quick_bounds();
        let mirror = mirror_candidates(&comp, &bounds);
        let attack = dop_attack_behavior(&comp, -1, &bounds);
        // Trace-level: the witness [-1] survives the mirror search.
        let v = texploit_check(&StageRelation::ImpToyc, &mirror, &attack);
        assert!(matches!(v, Verdict::UnknownAtBound(UnknownEvidence { surviving_witness: Some(_), .. })));
        // Certification closes the case.
        let v = certify_by_property(&StageRelation::ImpToyc, &mirror, &attack, &nonneg_property())
            .unwrap();
        assert!(v.is_certified());
        // Lemma-style sanity: the certified attack is not behavior-refuted.
        assert!(texploit_accepted_by_exploit(&StageRelation::ImpToyc, &mirror, &attack));
    }

    #[test]
    fn benign_attack_is_refuted() {
        let comp = output_x_component();
        let bounds = quick_bounds();
        let mirror = mirror_candidates(&comp, &bounds);
        let attack = dop_attack_behavior(&comp, 3, &bounds);
        let v = texploit_check(&StageRelation::ImpToyc, &mirror, &attack);
        assert!(v.is_refuted(), "{}", v.summary());
    }

    #[test]
    fn wm_trio_quick() {
        let bounds = quick_bounds();
        let nonneg = nonneg_property();
        let halted_nonempty = TraceProperty::new(
            "halted-traces-nonempty",
            "every halting run of this component under its class outputs at least once",
            |t| t.terminal != Terminal::Halted || !t.outputs.is_empty(),
        );
        let domain: Vec<i64> = bounds.int_domain().collect();

        let run = |src: &str, cert: &TraceProperty| -> WmReport {
            let comp = parse_component(src).unwrap();
            let mirror = mirror_candidates(&comp, &bounds);
            let attacks: Vec<(String, BehaviorSample)> = domain
                .iter()
                .map(|&i| (format!("x:={i};hole(&x)"), dop_attack_behavior(&comp, i, &bounds)))
                .collect();
            wm_sample(&attacks, &mirror, &StageRelation::ImpToyc, cert).unwrap()
        };

        // Plain component: the sampled weird machine is every negative
        // singleton in the domain.
        let report = run("(component (x) (output x))", &nonneg);
        let certified: Vec<&str> =
            report.certified.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(certified, ["x:=-4;hole(&x)", "x:=-3;hole(&x)", "x:=-2;hole(&x)", "x:=-1;hole(&x)"]);
        // 4 is outside the quick nat domain, so it stays unknown rather
        // than being silently classified.
        assert_eq!(report.unknown, ["x:=4;hole(&x)"]);

        // Guarded component: negatives now produce the empty halting
        // trace, which no mirror context can match — the weird machine
        // collapses to {empty}.
        let report = run(
            "(component (x) (if (or (< 0 x) (= 0 x)) (output x) skip))",
            &halted_nonempty,
        );
        assert_eq!(report.certified.len(), 4);
        for (_, b) in &report.certified {
            assert_eq!(witness_order(b), vec![Trace::halted(vec![])]);
        }
        assert_eq!(report.unknown, ["x:=4;hole(&x)"]);

        // Fully mitigated component: outputs 0 on the weird path, which the
        // mirror context x := 0 simulates — nothing is an exploit.
        let report = run(
            "(component (x) (if (or (< 0 x) (= 0 x)) (output x) (output 0)))",
            &nonneg,
        );
        assert!(report.certified.is_empty());
        assert_eq!(report.unknown, ["x:=4;hole(&x)"]);
        assert_eq!(report.refuted.len(), domain.len() - 1);
    }

    #[test]
    fn fa_check_identity_pair_is_not_witness() {
        let b = BehaviorSample::singleton(Trace::halted(vec![]), quick_bounds());
        let paired = vec![("ctx".to_string(), b.clone(), b.clone())];
        assert!(matches!(
            fa_exploit_check(&paired, (&b, &b)),
            FaOutcome::NotWitnessAtBound
        ));
    }

    #[test]
    fn propagation_gates_on_preconditions() {
        let err = propagate_with_preconditions(
            vec![("stage preserves traces".to_string(), false)],
            || {
                Ok(Verdict::UnknownAtBound(UnknownEvidence {
                    surviving_witness: None,
                    contexts_searched: 0,
                }))
            },
        );
        assert!(matches!(err, Err(PropagationError::PreconditionFailed(_))));
    }

    #[test]
    fn composed_relation_agrees_with_explicit_intermediate() {
        use crate::trace::ComposedRelation;
        let explicit = ComposedRelation::new(&SourceValueRelation, &IntIdentityRelation);
        let composed = StageRelation::ImpToya;
        let t_s = Trace::halted(vec![OutputValue::Bool(true), OutputValue::Nat(3)]);
        let t_t = Trace::halted(vec![OutputValue::Int(1), OutputValue::Int(3)]);
        assert_eq!(
            relate_trace(&explicit, &t_s, &t_t),
            relate_trace(&composed, &t_s, &t_t)
        );
        for v in [OutputValue::Int(1), OutputValue::Int(-1), OutputValue::Int(5)] {
            assert_eq!(explicit.preimages(&v), composed.preimages(&v));
        }
    }
}
