//! Traces, behavior samples, and the relations that connect traces across
//! compilation stages.
//!
//! A trace is the output sequence of one bounded run together with how the
//! run ended. A behavior sample is the finite, bounded stand-in for the full
//! behavior of a program: one trace per sampled input valuation. Trace
//! relations say when a source-language trace and a target-language trace
//! count as "the same observation"; they are deliberately partial and
//! non-injective (e.g. both `true` and `1` map to the target `1`, and no
//! source value maps to `-1`).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

/// A single observable output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputValue {
    /// Source-language boolean.
    Bool(bool),
    /// Source-language natural.
    Nat(u64),
    /// Target-language integer.
    Int(i64),
}

impl fmt::Display for OutputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputValue::Bool(b) => write!(f, "{b}"),
            OutputValue::Nat(n) => write!(f, "{n}"),
            OutputValue::Int(i) => write!(f, "{i}"),
        }
    }
}

/// How a bounded run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Terminal {
    /// Ran to completion (residual `skip`, `HALT`, empty continuation).
    Halted,
    /// No step applies (ill-sorted source program).
    Stuck,
    /// Undefined behavior surfaced as a run-time error.
    Error,
    /// The step budget ran out; the outputs are a prefix of the real trace.
    /// A budget-cut trace can witness the violation of a prefix-decidable
    /// property but never its satisfaction.
    BudgetExhausted,
}

impl Terminal {
    pub fn tag(self) -> &'static str {
        match self {
            Terminal::Halted => "halted",
            Terminal::Stuck => "stuck",
            Terminal::Error => "error",
            Terminal::BudgetExhausted => "budget",
        }
    }

    pub const ALL: [Terminal; 4] =
        [Terminal::Halted, Terminal::Stuck, Terminal::Error, Terminal::BudgetExhausted];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Trace {
    pub outputs: Vec<OutputValue>,
    pub terminal: Terminal,
}

impl Trace {
    pub fn new(outputs: Vec<OutputValue>, terminal: Terminal) -> Self {
        Trace { outputs, terminal }
    }

    pub fn halted(outputs: Vec<OutputValue>) -> Self {
        Trace::new(outputs, Terminal::Halted)
    }

    pub fn empty(terminal: Terminal) -> Self {
        Trace::new(Vec::new(), terminal)
    }

    /// Textual form: one value per line, then `# terminal: <tag>`.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for v in &self.outputs {
            s.push_str(&format!("{v}\n"));
        }
        s.push_str(&format!("# terminal: {}\n", self.terminal.tag()));
        s
    }

    /// Inverse of [`Trace::render_text`]. Numeric values parse as `Int`.
    pub fn parse_text(src: &str) -> Result<Trace, String> {
        let mut outputs = Vec::new();
        let mut terminal = None;
        for line in src.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                let tag = rest
                    .strip_prefix("terminal:")
                    .ok_or_else(|| format!("bad directive `{line}`"))?
                    .trim();
                terminal = Some(match tag {
                    "halted" => Terminal::Halted,
                    "stuck" => Terminal::Stuck,
                    "error" => Terminal::Error,
                    "budget" => Terminal::BudgetExhausted,
                    other => return Err(format!("unknown terminal `{other}`")),
                });
            } else if terminal.is_some() {
                return Err("values after terminal line".to_string());
            } else if line == "true" {
                outputs.push(OutputValue::Bool(true));
            } else if line == "false" {
                outputs.push(OutputValue::Bool(false));
            } else {
                let n: i64 = line.parse().map_err(|_| format!("bad value `{line}`"))?;
                outputs.push(OutputValue::Int(n));
            }
        }
        Ok(Trace { outputs, terminal: terminal.ok_or("missing terminal line")? })
    }
}

/// One sampled input valuation. For the imperative source language this is
/// the instantiated store (variables in lexicographic order); for the target
/// languages it is the entry-point argument tuple; `Tag` keys index derived
/// families such as the password configurations of the timing fixture.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum InputValue {
    Bool(bool),
    Nat(u64),
    Int(i64),
    Tag(String),
}

impl fmt::Display for InputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputValue::Bool(b) => write!(f, "{b}"),
            InputValue::Nat(n) => write!(f, "{n}"),
            InputValue::Int(i) => write!(f, "{i}"),
            InputValue::Tag(s) => write!(f, "{s}"),
        }
    }
}

pub type InputKey = Vec<InputValue>;

/// The knobs every bounded exploration respects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationBounds {
    pub step_budget: u64,
    /// Maximum AST size for enumerated contexts.
    pub context_size: u32,
    /// Inclusive integer argument range for the target languages.
    pub int_lo: i64,
    pub int_hi: i64,
    /// Source naturals range over `0..=nat_max`; booleans are always both
    /// sampled.
    pub nat_max: u64,
}

impl ExplorationBounds {
    pub fn default_profile() -> Self {
        ExplorationBounds { step_budget: 10_000, context_size: 5, int_lo: -8, int_hi: 8, nat_max: 7 }
    }

    pub fn quick() -> Self {
        ExplorationBounds { step_budget: 2_000, context_size: 4, int_lo: -4, int_hi: 4, nat_max: 3 }
    }

    pub fn thorough() -> Self {
        ExplorationBounds {
            step_budget: 50_000,
            context_size: 6,
            int_lo: -8,
            int_hi: 8,
            nat_max: 7,
        }
    }

    pub fn from_profile(name: &str) -> Option<Self> {
        match name {
            "quick" => Some(Self::quick()),
            "default" => Some(Self::default_profile()),
            "thorough" => Some(Self::thorough()),
            _ => None,
        }
    }

    pub fn int_domain(&self) -> impl Iterator<Item = i64> + '_ {
        self.int_lo..=self.int_hi
    }
}

/// Bounded stand-in for a program's behavior: one trace per sampled input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSample {
    pub entries: BTreeMap<InputKey, Trace>,
    pub bounds: ExplorationBounds,
}

impl BehaviorSample {
    pub fn new(bounds: ExplorationBounds) -> Self {
        BehaviorSample { entries: BTreeMap::new(), bounds }
    }

    pub fn singleton(trace: Trace, bounds: ExplorationBounds) -> Self {
        let mut s = Self::new(bounds);
        s.entries.insert(Vec::new(), trace);
        s
    }

    /// The distinct traces in the sample.
    pub fn traces(&self) -> Vec<&Trace> {
        let mut out: Vec<&Trace> = Vec::new();
        for t in self.entries.values() {
            if !out.contains(&&*t) {
                out.push(t);
            }
        }
        out
    }
}

/// Relation between traces of adjacent (or composed) stages.
///
/// `forward` is the functional direction used when a source value determines
/// its target image; `preimages` enumerates every source value an observed
/// target value can come from (`None` when the relation cannot enumerate).
/// `Error`-terminated source traces relate to nothing regardless of the
/// compatibility table.
pub trait TraceRelation {
    fn name(&self) -> &str;
    fn forward(&self, v: &OutputValue) -> Option<OutputValue>;
    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>>;
    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool;
}

/// Same-kind terminals relate, `Error` never does. Shared by the two lower
/// stage relations and the identity relation.
fn strict_terminals(source: Terminal, target: Terminal) -> bool {
    source != Terminal::Error && source == target
}

/// Source-to-intermediate relation: `false -> 0`, `true -> 1`, `n -> n`.
pub struct SourceValueRelation;

impl TraceRelation for SourceValueRelation {
    fn name(&self) -> &str {
        "imp-to-toyc"
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        match v {
            OutputValue::Bool(false) => Some(OutputValue::Int(0)),
            OutputValue::Bool(true) => Some(OutputValue::Int(1)),
            OutputValue::Nat(n) => i64::try_from(*n).ok().map(OutputValue::Int),
            // Already-target values have no image under this relation.
            OutputValue::Int(_) => None,
        }
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        let OutputValue::Int(i) = v else { return Some(Vec::new()) };
        Some(match *i {
            0 => vec![OutputValue::Bool(false), OutputValue::Nat(0)],
            1 => vec![OutputValue::Bool(true), OutputValue::Nat(1)],
            i if i > 1 => vec![OutputValue::Nat(i as u64)],
            // Nothing maps to a negative target value.
            _ => Vec::new(),
        })
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        strict_terminals(source, target)
    }
}

/// Intermediate-to-assembly relation: identity on integers.
pub struct IntIdentityRelation;

impl TraceRelation for IntIdentityRelation {
    fn name(&self) -> &str {
        "toyc-to-toya"
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        match v {
            OutputValue::Int(i) => Some(OutputValue::Int(*i)),
            _ => None,
        }
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        Some(match v {
            OutputValue::Int(i) => vec![OutputValue::Int(*i)],
            _ => Vec::new(),
        })
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        strict_terminals(source, target)
    }
}

/// Assembly-to-observer relation: the compiled observer re-emits the inner
/// program's integer outputs and then halts, so an inner trace relates to an
/// outer trace with the same outputs. An inner budget cut still yields a
/// halting outer program (it re-emits the prefix), hence the extra
/// `(BudgetExhausted, Halted)` entry.
pub struct ReemitRelation;

impl TraceRelation for ReemitRelation {
    fn name(&self) -> &str {
        "toya-to-toyh"
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        match v {
            OutputValue::Int(i) => Some(OutputValue::Int(*i)),
            _ => None,
        }
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        Some(match v {
            OutputValue::Int(i) => vec![OutputValue::Int(*i)],
            // Observer-level booleans never come from the inner machine.
            _ => Vec::new(),
        })
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        matches!(
            (source, target),
            (Terminal::Halted, Terminal::Halted)
                | (Terminal::BudgetExhausted, Terminal::Halted)
                | (Terminal::BudgetExhausted, Terminal::BudgetExhausted)
        )
    }
}

/// Identity relation within one language (used for self-stage checks).
pub struct IdentityRelation;

impl TraceRelation for IdentityRelation {
    fn name(&self) -> &str {
        "identity"
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        Some(*v)
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        Some(vec![*v])
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        strict_terminals(source, target)
    }
}

/// Composition of two stage relations through the intermediate language.
pub struct ComposedRelation<'a> {
    pub first: &'a dyn TraceRelation,
    pub second: &'a dyn TraceRelation,
    name: String,
}

impl<'a> ComposedRelation<'a> {
    pub fn new(first: &'a dyn TraceRelation, second: &'a dyn TraceRelation) -> Self {
        let name = format!("{}.{}", first.name(), second.name());
        ComposedRelation { first, second, name }
    }
}

impl TraceRelation for ComposedRelation<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&self, v: &OutputValue) -> Option<OutputValue> {
        self.second.forward(&self.first.forward(v)?)
    }

    fn preimages(&self, v: &OutputValue) -> Option<Vec<OutputValue>> {
        let mids = self.second.preimages(v)?;
        let mut out = Vec::new();
        for m in mids {
            for s in self.first.preimages(&m)? {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        Some(out)
    }

    fn terminals_compatible(&self, source: Terminal, target: Terminal) -> bool {
        Terminal::ALL.iter().any(|mid| {
            self.first.terminals_compatible(source, *mid)
                && self.second.terminals_compatible(*mid, target)
        })
    }
}

/// Does source trace `t_s` relate to target trace `t_t`?
///
/// Requires equal output length, pointwise `forward` agreement, and
/// compatible terminals. An `Error`-terminated source trace relates to
/// nothing.
pub fn relate_trace(rel: &dyn TraceRelation, t_s: &Trace, t_t: &Trace) -> bool {
    if t_s.terminal == Terminal::Error {
        return false;
    }
    if !rel.terminals_compatible(t_s.terminal, t_t.terminal) {
        return false;
    }
    if t_s.outputs.len() != t_t.outputs.len() {
        return false;
    }
    t_s.outputs
        .iter()
        .zip(&t_t.outputs)
        .all(|(s, t)| rel.forward(s).as_ref() == Some(t))
}

/// Behavior-level relatedness over sampled trace sets: every source trace
/// relates to some target trace and every target trace has a related source
/// trace.
pub fn behavior_related(
    rel: &dyn TraceRelation,
    b_s: &BehaviorSample,
    b_t: &BehaviorSample,
) -> bool {
    let ss = b_s.traces();
    let ts = b_t.traces();
    ss.iter().all(|s| ts.iter().any(|t| relate_trace(rel, s, t)))
        && ts.iter().all(|t| ss.iter().any(|s| relate_trace(rel, s, t)))
}

/// A predicate over source traces, with the human-readable reason it is
/// believed universal for the component under classification.
pub struct TraceProperty {
    pub name: String,
    pub justification: String,
    pred: Box<dyn Fn(&Trace) -> bool + Send + Sync>,
}

impl TraceProperty {
    pub fn new(
        name: impl Into<String>,
        justification: impl Into<String>,
        pred: impl Fn(&Trace) -> bool + Send + Sync + 'static,
    ) -> Self {
        TraceProperty { name: name.into(), justification: justification.into(), pred: Box::new(pred) }
    }

    pub fn holds(&self, t: &Trace) -> bool {
        (self.pred)(t)
    }
}

impl fmt::Debug for TraceProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TraceProperty({})", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageError {
    /// The relation cannot enumerate preimages of some observed value, or
    /// the candidate space exceeded the enumeration cap.
    PreimageNotEnumerable(String),
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::PreimageNotEnumerable(m) => write!(f, "preimage not enumerable: {m}"),
        }
    }
}

const IMAGE_CANDIDATE_CAP: u64 = 1_000_000;

/// Is the target trace `t_t` in the image of property `pi` under `rel`,
/// i.e. does some source trace satisfying `pi` relate to it?
///
/// Decided by enumerating the (finite) pointwise preimages and every
/// compatible source terminal.
pub fn in_property_image(
    rel: &dyn TraceRelation,
    pi: &TraceProperty,
    t_t: &Trace,
) -> Result<bool, ImageError> {
    let mut pre: Vec<Vec<OutputValue>> = Vec::with_capacity(t_t.outputs.len());
    let mut total: u64 = 1;
    for v in &t_t.outputs {
        let p = rel
            .preimages(v)
            .ok_or_else(|| ImageError::PreimageNotEnumerable(format!("value {v}")))?;
        if p.is_empty() {
            // Some output has no source counterpart: nothing relates.
            return Ok(false);
        }
        total = total.saturating_mul(p.len() as u64);
        if total > IMAGE_CANDIDATE_CAP {
            return Err(ImageError::PreimageNotEnumerable("candidate space too large".into()));
        }
        pre.push(p);
    }
    let terminals: Vec<Terminal> = Terminal::ALL
        .into_iter()
        .filter(|s| *s != Terminal::Error && rel.terminals_compatible(*s, t_t.terminal))
        .collect();
    if terminals.is_empty() {
        return Ok(false);
    }
    // Depth-first walk of the candidate space with early exit.
    let mut candidate: Vec<OutputValue> = Vec::with_capacity(pre.len());
    fn walk(
        pre: &[Vec<OutputValue>],
        terminals: &[Terminal],
        pi: &TraceProperty,
        candidate: &mut Vec<OutputValue>,
    ) -> bool {
        if candidate.len() == pre.len() {
            return terminals.iter().any(|term| {
                pi.holds(&Trace { outputs: candidate.clone(), terminal: *term })
            });
        }
        let i = candidate.len();
        for v in &pre[i] {
            candidate.push(*v);
            if walk(pre, terminals, pi, candidate) {
                candidate.pop();
                return true;
            }
            candidate.pop();
        }
        false
    }
    Ok(walk(&pre, &terminals, pi, &mut candidate))
}

/// A violation of the invertibility condition for a relation triangle:
/// given `t1 -> t3` under the composed relation, every bounded intermediate
/// trace `t2` must satisfy `t1 -> t2` iff `t2 -> t3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertibilityCounterexample {
    pub t1: Trace,
    pub t2: Trace,
    pub t3: Trace,
    /// True when `t1 -> t2` held but `t2 -> t3` did not; false for the
    /// converse failure.
    pub forward_only: bool,
}

/// Check invertibility of `rel13` through the intermediate stage on the
/// sampled `(t1, t3)` pairs, quantifying `t2` over every trace built from
/// `mid_values` with the same length as `t1` and any terminal.
pub fn check_invertibility(
    rel12: &dyn TraceRelation,
    rel23: &dyn TraceRelation,
    rel13: &dyn TraceRelation,
    samples: &[(Trace, Trace)],
    mid_values: &[OutputValue],
) -> Vec<InvertibilityCounterexample> {
    let mut bad = Vec::new();
    for (t1, t3) in samples {
        if !relate_trace(rel13, t1, t3) {
            continue;
        }
        // Enumerate candidate intermediate traces of matching length.
        let len = t1.outputs.len();
        let mut idx = vec![0usize; len];
        loop {
            let outputs: Vec<OutputValue> = idx.iter().map(|&i| mid_values[i]).collect();
            for term in Terminal::ALL {
                let t2 = Trace { outputs: outputs.clone(), terminal: term };
                let fwd = relate_trace(rel12, t1, &t2);
                let bck = relate_trace(rel23, &t2, t3);
                if fwd != bck {
                    bad.push(InvertibilityCounterexample {
                        t1: t1.clone(),
                        t2,
                        t3: t3.clone(),
                        forward_only: fwd,
                    });
                }
            }
            // Odometer increment; empty traces have exactly one candidate.
            if len == 0 {
                break;
            }
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < mid_values.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == len {
                    break;
                }
            }
            if k == len {
                break;
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halted(vals: &[OutputValue]) -> Trace {
        Trace::halted(vals.to_vec())
    }

    #[test]
    fn value_map_is_the_published_one() {
        let r = SourceValueRelation;
        assert_eq!(r.forward(&OutputValue::Bool(true)), Some(OutputValue::Int(1)));
        assert_eq!(r.forward(&OutputValue::Bool(false)), Some(OutputValue::Int(0)));
        assert_eq!(r.forward(&OutputValue::Nat(5)), Some(OutputValue::Int(5)));
    }

    #[test]
    fn relation_is_not_injective() {
        // Both `true` and `1` land on target `1`.
        let r = SourceValueRelation;
        let t = halted(&[OutputValue::Int(1)]);
        assert!(relate_trace(&r, &halted(&[OutputValue::Bool(true)]), &t));
        assert!(relate_trace(&r, &halted(&[OutputValue::Nat(1)]), &t));
    }

    #[test]
    fn negative_targets_have_no_preimage() {
        let r = SourceValueRelation;
        assert_eq!(r.preimages(&OutputValue::Int(-1)), Some(Vec::new()));
        // And hence nothing relates to a trace containing -1.
        let t = halted(&[OutputValue::Int(-1)]);
        assert!(!relate_trace(&r, &halted(&[OutputValue::Nat(1)]), &t));
    }

    #[test]
    fn error_relates_to_nothing() {
        let r = IntIdentityRelation;
        let e = Trace::empty(Terminal::Error);
        assert!(!relate_trace(&r, &e, &Trace::empty(Terminal::Error)));
        assert!(!relate_trace(&r, &e, &Trace::empty(Terminal::Halted)));
    }

    #[test]
    fn empty_traces_relate_when_terminals_match() {
        let r = SourceValueRelation;
        assert!(relate_trace(&r, &Trace::empty(Terminal::Halted), &Trace::empty(Terminal::Halted)));
        assert!(relate_trace(&r, &Trace::empty(Terminal::Stuck), &Trace::empty(Terminal::Stuck)));
        assert!(!relate_trace(&r, &Trace::empty(Terminal::Stuck), &Trace::empty(Terminal::Halted)));
    }

    #[test]
    fn behavior_relatedness_requires_both_directions() {
        let b = ExplorationBounds::quick();
        let mut b_s = BehaviorSample::new(b.clone());
        b_s.entries.insert(vec![InputValue::Nat(0)], Trace::empty(Terminal::Halted));
        let b_t = BehaviorSample::new(b);
        // Unmatched source trace.
        assert!(!behavior_related(&SourceValueRelation, &b_s, &b_t));
    }

    #[test]
    fn image_membership() {
        let nonneg = TraceProperty::new("nonneg", "test", |t: &Trace| {
            t.outputs.iter().all(|v| !matches!(v, OutputValue::Int(i) if *i < 0))
        });
        let r = SourceValueRelation;
        // 1 has source preimages and they are nonnegative.
        assert_eq!(in_property_image(&r, &nonneg, &halted(&[OutputValue::Int(1)])), Ok(true));
        // -1 has no preimage at all.
        assert_eq!(in_property_image(&r, &nonneg, &halted(&[OutputValue::Int(-1)])), Ok(false));
    }

    #[test]
    fn trace_text_round_trip() {
        let t = Trace::new(
            vec![OutputValue::Int(3), OutputValue::Int(-4), OutputValue::Bool(true)],
            Terminal::BudgetExhausted,
        );
        let s = t.render_text();
        assert_eq!(s, "3\n-4\ntrue\n# terminal: budget\n");
        let back = Trace::parse_text(&s).unwrap();
        assert_eq!(back.terminal, Terminal::BudgetExhausted);
        assert_eq!(back.outputs[2], OutputValue::Bool(true));
    }

    #[test]
    fn invertibility_of_the_stage_triangle() {
        let r12 = SourceValueRelation;
        let r23 = IntIdentityRelation;
        let r13 = ComposedRelation::new(&r12, &r23);
        // Exhaustive over the bounded source domain.
        let mut samples = Vec::new();
        let mut mids = Vec::new();
        for v in [OutputValue::Bool(false), OutputValue::Bool(true)]
            .into_iter()
            .chain((0..=7).map(OutputValue::Nat))
        {
            let img = r13.forward(&v).unwrap();
            samples.push((halted(&[v]), halted(&[img])));
        }
        for i in -8..=8 {
            mids.push(OutputValue::Int(i));
        }
        let bad = check_invertibility(&r12, &r23, &r13, &samples, &mids);
        assert!(bad.is_empty(), "unexpected counterexamples: {bad:?}");
    }
}
