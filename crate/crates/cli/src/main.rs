use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wmstack_cli::{checks, fixtures, profile};
use wmstack_core::compile::{
    compile_imp_component, compile_imp_context, compile_imp_whole, compile_toya_context,
    compile_toya_whole, compile_toyc_component, compile_toyc_context, compile_toyc_whole,
};
use wmstack_core::fsm::{
    classify_states, parse_fsm_text, parse_gamma_text, respects_behaviors, sane_transition_gap,
    weird_implies_exploit,
};
use wmstack_core::imp::{
    behavior_imp, link_imp, parse_component, parse_context, parse_program, render_cmd,
    render_context,
};
use wmstack_core::oracle::{
    certify_by_property, enumerate_imp_assign_prefix, imp_candidates, imp_lit_domain,
    texploit_check, toyc_assign_prefix_attack, wm_sample, SourceCandidate, StageRelation, Verdict,
};
use wmstack_core::toya::{
    link_toya, parse_toya_component, parse_toya_context, parse_toya_program, render_toya_component,
    render_toya_context, render_toya_program, run_toya,
};
use wmstack_core::toyc::{behavior_toyc, link_toyc, parse_toyc, render_toyc, run_toyc};
use wmstack_core::toyh::{
    link_toyh, parse_toyh_context, parse_toyh_program, render_toyh_context, render_toyh_program,
    run_toyh,
};
use wmstack_core::trace::{ExplorationBounds, OutputValue, Terminal, TraceProperty};

#[derive(Parser)]
#[command(name = "wmstack", about = "Interpreter stack and exploit classifier", version)]
struct Cli {
    /// Bound profile: quick, default, or thorough. Overrides WM_BOUND_PROFILE.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Emit results as JSON lines instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParseLang {
    Imp,
    ImpComponent,
    ImpContext,
    Toyc,
    ToyaComponent,
    ToyaContext,
    ToyaProgram,
    ToyhContext,
    ToyhProgram,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunLang {
    Imp,
    Toyc,
    Toya,
    Toyh,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkLang {
    Imp,
    Toyc,
    Toya,
    Toyh,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompileStage {
    /// Source command/component/context to the pointer language.
    ImpToyc,
    /// Pointer-language store to assembly.
    ToycToya,
    /// Assembly program/context to the observer language.
    ToyaToyh,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompileKind {
    Whole,
    Component,
    Context,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifyMode {
    Texploit,
    Exploit,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Source component (imp) the attack targets.
    #[arg(long)]
    component: PathBuf,
    /// Pointer-language attack store with a `main` calling `hole`.
    #[arg(long)]
    attack: PathBuf,
    #[arg(long, value_enum, default_value = "texploit")]
    mode: ClassifyMode,
    /// Certificate property consulted when no simulator is found.
    #[arg(long, default_value = "outputs-nonnegative")]
    property: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a file and print its canonical rendering.
    Parse {
        #[arg(long, value_enum)]
        lang: ParseLang,
        file: PathBuf,
    },
    /// Run a program and print its trace (or its sampled behavior for
    /// open source-language programs).
    Run {
        #[arg(long, value_enum)]
        lang: RunLang,
        file: PathBuf,
        /// Comma-separated integer arguments for a pointer-language `main`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        args: Vec<i64>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Compile one stage and print the result.
    Compile {
        #[arg(long, value_enum)]
        stage: CompileStage,
        #[arg(long, value_enum, default_value = "whole")]
        kind: CompileKind,
        file: PathBuf,
        /// Closing arguments for pointer-language wholes and contexts.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        args: Vec<i64>,
    },
    /// Link a context with a component and print the whole program.
    Link {
        #[arg(long, value_enum)]
        lang: LinkLang,
        context: PathBuf,
        component: PathBuf,
    },
    /// Classify one attack against a component.
    Classify(ClassifyArgs),
    /// Sample the weird machine of an assignment-prefix attacker class.
    WmSample {
        /// Source component (imp).
        #[arg(long)]
        component: PathBuf,
        /// Certificate property: outputs-nonnegative or halted-traces-nonempty.
        #[arg(long, default_value = "outputs-nonnegative")]
        property: String,
    },
    /// Classify implementation states against an intended machine.
    Fsm {
        #[arg(long)]
        ifsm: PathBuf,
        #[arg(long)]
        cpu: PathBuf,
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long, default_value_t = 6)]
        bound: usize,
    },
    /// Run curated corpus fixtures.
    Fixture {
        #[command(subcommand)]
        cmd: FixtureCmd,
    },
    /// Differential checks of one compiler stage on random programs.
    CheckStage {
        /// 1 = source-to-pointer, 2 = pointer-to-assembly, 3 = assembly-to-observer.
        #[arg(long)]
        stage: u32,
        #[arg(long, default_value_t = 50)]
        programs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also check separate compilation against whole-program compilation.
        #[arg(long)]
        modularity: bool,
    },
}

#[derive(Subcommand)]
enum FixtureCmd {
    /// List fixture ids and expected outcomes.
    List,
    /// Run a single fixture.
    Run { id: String },
    /// Run every fixture in the manifest.
    All,
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn property_by_name(name: &str) -> Result<TraceProperty, String> {
    match name {
        "outputs-nonnegative" => Ok(TraceProperty::new(
            "outputs-nonnegative",
            "source outputs are booleans or naturals; both map to nonnegative integers",
            |t| {
                t.outputs.iter().all(|o| match o {
                    OutputValue::Int(i) => *i >= 0,
                    _ => true,
                })
            },
        )),
        "halted-traces-nonempty" => Ok(TraceProperty::new(
            "halted-traces-nonempty",
            "every source run that completes has produced at least one output",
            |t| t.terminal != Terminal::Halted || !t.outputs.is_empty(),
        )),
        other => Err(format!(
            "unknown property `{other}` (try outputs-nonnegative or halted-traces-nonempty)"
        )),
    }
}

fn echo_mirror(
    comp: &wmstack_core::imp::ImpComponent,
    bounds: &ExplorationBounds,
) -> Vec<SourceCandidate> {
    let lits = imp_lit_domain(bounds);
    let ctxs = enumerate_imp_assign_prefix(&comp.vars, &lits, 1);
    imp_candidates(comp, &ctxs, bounds)
}

struct Out {
    json: bool,
}

impl Out {
    fn line(&self, text: &str, payload: serde_json::Value) {
        if self.json {
            println!("{payload}");
        } else {
            println!("{text}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let bounds = match &cli.profile {
        Some(name) => match profile::bounds_by_name(name) {
            Some(b) => b,
            None => {
                eprintln!("unknown profile `{name}` (quick, default, thorough)");
                return ExitCode::from(2);
            }
        },
        None => profile::bounds_from_env(),
    };
    let out = Out { json: cli.json };
    match dispatch(cli.cmd, &bounds, &out) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd, bounds: &ExplorationBounds, out: &Out) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Parse { lang, file } => {
            let src = read(&file)?;
            let rendered = match lang {
                ParseLang::Imp => render_cmd(&parse_program(&src).map_err(|e| e.to_string())?),
                ParseLang::ImpComponent => {
                    let c = parse_component(&src).map_err(|e| e.to_string())?;
                    format!("(component ({}) {})", c.vars.join(" "), render_cmd(&c.body))
                }
                ParseLang::ImpContext => {
                    render_context(&parse_context(&src).map_err(|e| e.to_string())?)
                }
                ParseLang::Toyc => render_toyc(&parse_toyc(&src).map_err(|e| e.to_string())?),
                ParseLang::ToyaComponent => {
                    render_toya_component(&parse_toya_component(&src).map_err(|e| e.to_string())?)
                }
                ParseLang::ToyaContext => {
                    render_toya_context(&parse_toya_context(&src).map_err(|e| e.to_string())?)
                }
                ParseLang::ToyaProgram => {
                    render_toya_program(&parse_toya_program(&src).map_err(|e| e.to_string())?)
                }
                ParseLang::ToyhContext => {
                    render_toyh_context(&parse_toyh_context(&src).map_err(|e| e.to_string())?)
                }
                ParseLang::ToyhProgram => {
                    render_toyh_program(&parse_toyh_program(&src).map_err(|e| e.to_string())?)
                }
            };
            out.line(&rendered, json!({ "parsed": rendered }));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { lang, file, args, budget } => {
            let src = read(&file)?;
            let budget = budget.unwrap_or(bounds.step_budget);
            match lang {
                RunLang::Imp => {
                    let prog = parse_program(&src).map_err(|e| e.to_string())?;
                    let sample =
                        behavior_imp(&prog, &ExplorationBounds { step_budget: budget, ..bounds.clone() });
                    for (key, trace) in &sample.entries {
                        let key_text: Vec<String> = key.iter().map(|v| v.to_string()).collect();
                        out.line(
                            &format!(
                                "[{}] -> {} ({})",
                                key_text.join(" "),
                                trace
                                    .outputs
                                    .iter()
                                    .map(|o| o.to_string())
                                    .collect::<Vec<_>>()
                                    .join(" "),
                                trace.terminal.tag()
                            ),
                            json!({ "key": key_text, "trace": trace.render_text() }),
                        );
                    }
                }
                RunLang::Toyc => {
                    let store = parse_toyc(&src).map_err(|e| e.to_string())?;
                    let trace = run_toyc(&store, &args, budget).map_err(|e| e.to_string())?;
                    out.line(trace.render_text().trim_end(), json!({ "trace": trace.render_text() }));
                }
                RunLang::Toya => {
                    let prog = parse_toya_program(&src).map_err(|e| e.to_string())?;
                    let trace = run_toya(&prog, budget);
                    out.line(trace.render_text().trim_end(), json!({ "trace": trace.render_text() }));
                }
                RunLang::Toyh => {
                    let prog = parse_toyh_program(&src).map_err(|e| e.to_string())?;
                    let trace = run_toyh(&prog, budget, budget);
                    out.line(trace.render_text().trim_end(), json!({ "trace": trace.render_text() }));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Compile { stage, kind, file, args } => {
            let src = read(&file)?;
            let rendered = match (stage, kind) {
                (CompileStage::ImpToyc, CompileKind::Whole) => {
                    render_toyc(&compile_imp_whole(&parse_program(&src).map_err(|e| e.to_string())?))
                }
                (CompileStage::ImpToyc, CompileKind::Component) => render_toyc(
                    &compile_imp_component(&parse_component(&src).map_err(|e| e.to_string())?),
                ),
                (CompileStage::ImpToyc, CompileKind::Context) => render_toyc(
                    &compile_imp_context(&parse_context(&src).map_err(|e| e.to_string())?),
                ),
                (CompileStage::ToycToya, CompileKind::Whole) => {
                    let store = parse_toyc(&src).map_err(|e| e.to_string())?;
                    let (prog, _) = compile_toyc_whole(&store, &args).map_err(|e| format!("{e:?}"))?;
                    render_toya_program(&prog)
                }
                (CompileStage::ToycToya, CompileKind::Component) => {
                    let store = parse_toyc(&src).map_err(|e| e.to_string())?;
                    render_toya_component(&compile_toyc_component(&store).0)
                }
                (CompileStage::ToycToya, CompileKind::Context) => {
                    let store = parse_toyc(&src).map_err(|e| e.to_string())?;
                    let (ctx, _) = compile_toyc_context(&store, &args).map_err(|e| format!("{e:?}"))?;
                    render_toya_context(&ctx)
                }
                (CompileStage::ToyaToyh, CompileKind::Whole) => render_toyh_program(
                    &compile_toya_whole(&parse_toya_program(&src).map_err(|e| e.to_string())?),
                ),
                (CompileStage::ToyaToyh, CompileKind::Context) => render_toyh_context(
                    &compile_toya_context(&parse_toya_context(&src).map_err(|e| e.to_string())?),
                ),
                (CompileStage::ToyaToyh, CompileKind::Component) => render_toya_component(
                    &parse_toya_component(&src).map_err(|e| e.to_string())?,
                ),
            };
            out.line(&rendered, json!({ "compiled": rendered }));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Link { lang, context, component } => {
            let ctx_src = read(&context)?;
            let comp_src = read(&component)?;
            let rendered = match lang {
                LinkLang::Imp => {
                    let ctx = parse_context(&ctx_src).map_err(|e| e.to_string())?;
                    let comp = parse_component(&comp_src).map_err(|e| e.to_string())?;
                    render_cmd(&link_imp(&ctx, &comp).map_err(|e| e.to_string())?)
                }
                LinkLang::Toyc => {
                    let ctx = parse_toyc(&ctx_src).map_err(|e| e.to_string())?;
                    let comp = parse_toyc(&comp_src).map_err(|e| e.to_string())?;
                    render_toyc(&link_toyc(&ctx, &comp).map_err(|e| format!("{e:?}"))?)
                }
                LinkLang::Toya => {
                    let ctx = parse_toya_context(&ctx_src).map_err(|e| e.to_string())?;
                    let comp = parse_toya_component(&comp_src).map_err(|e| e.to_string())?;
                    render_toya_program(&link_toya(&ctx, &comp).map_err(|e| e.to_string())?)
                }
                LinkLang::Toyh => {
                    let ctx = parse_toyh_context(&ctx_src).map_err(|e| e.to_string())?;
                    let comp = parse_toya_component(&comp_src).map_err(|e| e.to_string())?;
                    render_toyh_program(&link_toyh(&ctx, &comp).map_err(|e| e.to_string())?)
                }
            };
            out.line(&rendered, json!({ "linked": rendered }));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Classify(a) => {
            let comp = parse_component(&read(&a.component)?).map_err(|e| e.to_string())?;
            let attack = parse_toyc(&read(&a.attack)?).map_err(|e| e.to_string())?;
            let hole = compile_imp_component(&comp);
            let whole = link_toyc(&attack, &hole).map_err(|e| format!("{e:?}"))?;
            let target = behavior_toyc(&whole, bounds).map_err(|e| e.to_string())?;
            let candidates = echo_mirror(&comp, bounds);
            let rel = StageRelation::ImpToyc;
            let verdict = match a.mode {
                ClassifyMode::Exploit => {
                    wmstack_core::oracle::exploit_check(&rel, &candidates, &target)
                }
                ClassifyMode::Texploit => match texploit_check(&rel, &candidates, &target) {
                    v @ Verdict::RefutedUpToBound(_) => v,
                    _ => {
                        let pi = property_by_name(&a.property)?;
                        certify_by_property(&rel, &candidates, &target, &pi)
                            .map_err(|e| e.to_string())?
                    }
                },
            };
            out.line(
                &verdict.summary(),
                json!({ "verdict": verdict.summary(), "contexts": candidates.len() }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::WmSample { component, property } => {
            let comp = parse_component(&read(&component)?).map_err(|e| e.to_string())?;
            let hole = compile_imp_component(&comp);
            let first_var = comp.vars.first().ok_or("component has no interface variables")?;
            let mut attacks = Vec::new();
            for i in bounds.int_domain() {
                let attack = toyc_assign_prefix_attack(&comp.vars, &[(first_var.clone(), i)]);
                let whole = link_toyc(&attack, &hole).map_err(|e| format!("{e:?}"))?;
                attacks.push((
                    format!("{first_var} := {i}; hole"),
                    behavior_toyc(&whole, bounds).map_err(|e| e.to_string())?,
                ));
            }
            let candidates = echo_mirror(&comp, bounds);
            let pi = property_by_name(&property)?;
            let report = wm_sample(&attacks, &candidates, &StageRelation::ImpToyc, &pi)
                .map_err(|e| e.to_string())?;
            for (label, sample) in &report.certified {
                let traces: Vec<String> =
                    sample.traces().iter().map(|t| t.render_text().replace('\n', " ")).collect();
                out.line(
                    &format!("certified  {label}  -> {traces:?}"),
                    json!({ "class": "certified", "attack": label, "traces": traces }),
                );
            }
            for label in &report.refuted {
                out.line(
                    &format!("refuted    {label}"),
                    json!({ "class": "refuted", "attack": label }),
                );
            }
            for label in &report.unknown {
                out.line(
                    &format!("unknown    {label}"),
                    json!({ "class": "unknown", "attack": label }),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Fsm { ifsm, cpu, gamma, bound } => {
            let (ifsm, _) = parse_fsm_text(&read(&ifsm)?).map_err(|e| e.to_string())?;
            let (cpu, _) = parse_fsm_text(&read(&cpu)?).map_err(|e| e.to_string())?;
            let gamma = parse_gamma_text(&read(&gamma)?).map_err(|e| e.to_string())?;
            let classes = classify_states(&ifsm, &cpu, &gamma, bound).map_err(|e| e.to_string())?;
            let respect =
                respects_behaviors(&ifsm, &cpu, &gamma, bound).map_err(|e| e.to_string())?;
            let gaps = sane_transition_gap(&ifsm, &cpu, &gamma).map_err(|e| e.to_string())?;
            out.line(
                &format!(
                    "sane {:?}\ntransitory {:?}\nweird {:?}\nrespects-behaviors(bound {bound}) {}",
                    classes.sane_states(),
                    classes.transitory_states(),
                    classes.weird_states(),
                    respect.ok
                ),
                json!({
                    "sane": classes.sane_states(),
                    "transitory": classes.transitory_states(),
                    "weird": classes.weird_states(),
                    "respects": respect.ok,
                }),
            );
            if respect.ok {
                let theorem =
                    weird_implies_exploit(&ifsm, &cpu, &gamma, bound).map_err(|e| e.to_string())?;
                out.line(
                    &format!(
                        "weird-implies-exploit: checked {:?}, violations {:?}",
                        theorem.weird_checked, theorem.violations
                    ),
                    json!({ "weird_checked": theorem.weird_checked, "violations": theorem.violations }),
                );
            }
            out.line(&format!("sane-transition gaps {gaps:?}"), json!({ "gaps": gaps }));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Fixture { cmd } => match cmd {
            FixtureCmd::List => {
                for entry in fixtures::load_manifest()? {
                    out.line(
                        &format!("{:<20} expected {}", entry.id, entry.expected),
                        json!({ "id": entry.id, "expected": entry.expected }),
                    );
                }
                Ok(ExitCode::SUCCESS)
            }
            FixtureCmd::Run { id } => {
                let report = fixtures::run_fixture(&id, bounds)?;
                print_fixture(&report, out);
                Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
            }
            FixtureCmd::All => {
                let mut ok = true;
                for report in fixtures::run_all(bounds)? {
                    ok &= report.passed();
                    print_fixture(&report, out);
                }
                Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
            }
        },
        Cmd::CheckStage { stage, programs, seed, modularity } => {
            let (label, skipped, counterexamples) = if modularity {
                let rep = match stage {
                    1 => checks::modularity_stage1(programs, seed, bounds),
                    2 => checks::modularity_stage2(programs, seed, bounds),
                    3 => checks::modularity_stage3(programs, seed, bounds),
                    _ => return Err("stage must be 1, 2 or 3".to_string()),
                };
                (format!("modularity stage {stage}"), 0, rep.mismatches)
            } else {
                let rep = match stage {
                    1 => checks::check_stage1_preservation(programs, seed, bounds),
                    2 => checks::check_stage2_preservation(programs, seed, bounds),
                    3 => checks::check_stage3_correctness(programs, seed, bounds),
                    _ => return Err("stage must be 1, 2 or 3".to_string()),
                };
                (format!("stage {stage}"), rep.skipped_runs, rep.counterexamples)
            };
            out.line(
                &format!(
                    "{label}: {programs} programs, {skipped} non-completing source runs skipped, {} counterexamples",
                    counterexamples.len()
                ),
                json!({
                    "check": label,
                    "programs": programs,
                    "skipped": skipped,
                    "counterexamples": counterexamples,
                }),
            );
            for c in &counterexamples {
                out.line(&format!("  {c}"), json!({ "counterexample": c }));
            }
            Ok(if counterexamples.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn print_fixture(report: &fixtures::FixtureReport, out: &Out) {
    let status = if report.passed() { "ok" } else { "FAIL" };
    out.line(
        &format!(
            "{status:<4} {:<20} outcome {} (expected {}){}",
            report.id,
            report.outcome,
            report.expected,
            match report.revalidated {
                Some(true) => ", evidence re-validated",
                Some(false) => ", EVIDENCE REJECTED on re-validation",
                None => "",
            }
        ),
        json!({
            "id": report.id,
            "outcome": report.outcome,
            "expected": report.expected,
            "revalidated": report.revalidated,
            "details": report.details,
        }),
    );
    if !out.json {
        for d in &report.details {
            println!("       {d}");
        }
    }
}
