mod emit;
mod systems;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tensera_core::calculus_shallow::check_shallow_open;
use tensera_core::path_engine::{build_grammar, cyk_membership, parse_axioms, parse_diamonds, propagation_applicable};
use tensera_core::prover::{prove_dkt_instrumented, prove_extension_instrumented, ProveStats};
use tensera_core::semantics::DEFAULT_BOUND;
use tensera_core::transform::{eliminate_cuts_traced, translate_dkt_to_skt, translate_skt_to_dkt};
use tensera_core::{
    check_deep, check_shallow, find_countermodel, parse, DeepDerivation, DeepSystem, Diamond, Formula, FrameFilter,
    NodeAddress, ProveOutcome, Sequent, ShallowDerivation,
};
use thiserror::Error;

use crate::emit::Emit;

/// sysexits codes.
const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_SOFTWARE: u8 = 70;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("cannot read {path}: {source}")]
    Input { path: String, source: io::Error },
    /// A proof failed its checker.
    #[error("validation failed: {0}")]
    Invalid(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EX_USAGE,
            CliError::Data(_) => EX_DATAERR,
            CliError::Input { .. } => EX_NOINPUT,
            CliError::Invalid(_) => EX_SOFTWARE,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "tensera", version, about = "Nested sequent proof tools for tense logic")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Calc {
    Skt,
    Dkt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dir {
    S2d,
    D2s,
}

#[derive(Subcommand)]
enum Verb {
    /// Search for a proof. Exit 0 proved, 1 refuted, 2 unknown.
    Prove {
        /// kt, kts4, kts5, ktcd, k, ks4, ks5, kcd or path:<axioms>
        #[arg(long, default_value = "kt")]
        logic: String,
        /// Depth bound for logics other than kt.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
        /// Read the input as a nested sequent such as "a, o{~a}".
        #[arg(long)]
        sequent: bool,
        input: String,
    },
    /// Validate a proof file ("-" for stdin).
    Check {
        #[arg(long, value_enum)]
        calc: Calc,
        /// skt: structural rules (T, 4, B, U, slHIJK, path:<axiom>); dkt: a logic name.
        #[arg(long, value_delimiter = ',')]
        system: Vec<String>,
        /// Permit cut (skt only).
        #[arg(long)]
        cut: bool,
        /// Permit open `hyp` leaves (skt only).
        #[arg(long)]
        open: bool,
        file: String,
    },
    /// Translate between the shallow and the deep calculus.
    Translate {
        #[arg(long, value_enum)]
        dir: Dir,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
        file: String,
    },
    /// Eliminate cuts from a shallow proof.
    Cutelim {
        #[arg(long, value_delimiter = ',')]
        system: Vec<String>,
        /// Also output each cut reduction.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
        file: String,
    },
    /// Query the grammar of a path-axiom set.
    Grammar {
        #[arg(long)]
        axioms: String,
        /// Colour of the propagated diamond, w or b.
        #[arg(long, default_value = "w")]
        start: String,
        /// A label string such as "bw".
        #[arg(long, conflicts_with = "applicable")]
        query: Option<String>,
        /// "<sequent>,<from>,<to>,<w|b>" with node addresses like r or 0.1.
        #[arg(long)]
        applicable: Option<String>,
        /// Print the productions.
        #[arg(long)]
        productions: bool,
    },
    /// Search Kripke models for one refuting the formula. Exit 0 found, 1 none.
    Countermodel {
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        #[arg(long, default_value = "none")]
        frames: FrameFilter,
        formula: String,
    },
    /// Prove every formula of a corpus file and print a TSV report.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "kt")]
        logic: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

fn read_input(path: &str) -> Result<String> {
    let mut s = String::new();
    let r = if path == "-" {
        io::stdin().read_to_string(&mut s).map(|_| ())
    } else {
        fs::read_to_string(path).map(|t| s = t)
    };
    r.map_err(|source| CliError::Input {
        path: path.to_string(),
        source,
    })?;
    Ok(s)
}

/// A proof, either bare or under a `"proof"` key.
fn read_json(path: &str) -> Result<Value> {
    let mut v: Value = serde_json::from_str(&read_input(path)?).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(match v.get_mut("proof") {
        Some(p) if p.is_object() => p.take(),
        _ => v,
    })
}

fn formula(text: &str) -> Result<Formula> {
    parse(text).map_err(|e| CliError::Data(format!("{text:?}: {e}")))
}

fn logic(name: &str) -> Result<(DeepSystem, bool)> {
    systems::logic(name).map_err(CliError::Usage)
}

fn shallow(v: &Value) -> Result<ShallowDerivation> {
    ShallowDerivation::from_json(v).map_err(|e| CliError::Data(e.to_string()))
}

fn deep(v: &Value) -> Result<DeepDerivation> {
    DeepDerivation::from_json(v).map_err(|e| CliError::Data(e.to_string()))
}

fn invalid(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{what}: {e}"))
}

fn prove(s: &Sequent, logic_name: &str, depth: usize) -> Result<(ProveOutcome, ProveStats)> {
    let (sys, plain) = logic(logic_name)?;
    let (out, stats) = if plain {
        prove_dkt_instrumented(s)
    } else {
        prove_extension_instrumented(s, &sys, depth)
    };
    if let ProveOutcome::Proved(d) = &out {
        check_deep(d, &sys).map_err(|e| invalid("produced proof", e))?;
    }
    Ok((out, stats))
}

fn run(verb: Verb, out: &mut impl Write) -> Result<u8> {
    let mut say = |text: String| out.write_all(text.as_bytes()).expect("stdout");
    match verb {
        Verb::Prove {
            logic,
            depth,
            emit: how,
            sequent,
            input,
        } => {
            let s = if sequent {
                input
                    .parse::<Sequent>()
                    .map_err(|e| CliError::Data(format!("{input:?}: {e}")))?
            } else {
                Sequent::from_formulas([formula(&input)?])
            };
            let (outcome, _) = prove(&s, &logic, depth)?;
            eprintln!("{}", outcome.label());
            Ok(match outcome {
                ProveOutcome::Proved(d) => {
                    say(emit::proof(&d.to_json(), how));
                    0
                }
                ProveOutcome::Refuted(stuck) => {
                    say(match how {
                        Emit::Json => format!("{}\n", json!({"outcome": "refuted", "stuck": stuck.to_json()})),
                        _ => emit::sequent(&stuck, how),
                    });
                    1
                }
                ProveOutcome::Unknown(r) => {
                    if how == Emit::Json {
                        say(format!(
                            "{}\n",
                            json!({"outcome": "unknown", "reason": format!("{r:?}")})
                        ));
                    } else {
                        say(format!("unknown: {r:?}\n"));
                    }
                    2
                }
            })
        }
        Verb::Check {
            calc,
            system,
            cut,
            open,
            file,
        } => {
            let v = read_json(&file)?;
            let (height, size) = match calc {
                Calc::Skt => {
                    let rules = systems::structural_all(&system).map_err(CliError::Usage)?;
                    let d = shallow(&v)?;
                    let r = if open {
                        check_shallow_open(&d, &rules, cut)
                    } else {
                        check_shallow(&d, &rules, cut)
                    };
                    r.map_err(|e| invalid(&file, e))?;
                    (d.height(), d.size())
                }
                Calc::Dkt => {
                    let name = match system.as_slice() {
                        [] => "kt".to_string(),
                        names => names.join(","),
                    };
                    let (sys, _) = logic(&name)?;
                    let d = deep(&v)?;
                    check_deep(&d, &sys).map_err(|e| invalid(&file, e))?;
                    (d.height(), d.size())
                }
            };
            say(format!("valid: height {height}, {size} inferences\n"));
            Ok(0)
        }
        Verb::Translate { dir, emit: how, file } => {
            let v = read_json(&file)?;
            let produced = match dir {
                Dir::S2d => {
                    let d = shallow(&v)?;
                    check_shallow(&d, &[], false).map_err(|e| invalid("input", e))?;
                    let t = translate_skt_to_dkt(&d).map_err(|e| invalid("translation", e))?;
                    check_deep(&t, &DeepSystem::dkt()).map_err(|e| invalid("produced proof", e))?;
                    t.to_json()
                }
                Dir::D2s => {
                    let d = deep(&v)?;
                    check_deep(&d, &DeepSystem::dkt()).map_err(|e| invalid("input", e))?;
                    let t = translate_dkt_to_skt(&d).map_err(|e| invalid("translation", e))?;
                    check_shallow(&t, &[], false).map_err(|e| invalid("produced proof", e))?;
                    t.to_json()
                }
            };
            say(emit::proof(&produced, how));
            Ok(0)
        }
        Verb::Cutelim {
            system,
            trace,
            emit: how,
            file,
        } => {
            let rules = systems::structural_all(&system).map_err(CliError::Usage)?;
            let d = shallow(&read_json(&file)?)?;
            check_shallow(&d, &rules, true).map_err(|e| invalid("input", e))?;
            let (free, steps) = eliminate_cuts_traced(&d, &rules).map_err(|e| invalid("cut elimination", e))?;
            check_shallow(&free, &rules, false).map_err(|e| invalid("produced proof", e))?;
            if free.conclusion != d.conclusion {
                return Err(invalid("produced proof", "end-sequent changed"));
            }
            eprintln!("{} cuts removed in {} reductions", d.count_rule("cut"), steps.len());
            match (trace, how) {
                (false, _) => say(emit::proof(&free.to_json(), how)),
                (true, Emit::Json) => {
                    let v = json!({
                        "trace": steps.iter().map(ShallowDerivation::to_json).collect::<Vec<_>>(),
                        "proof": free.to_json(),
                    });
                    say(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")));
                }
                (true, _) => {
                    for (i, s) in steps.iter().enumerate() {
                        say(format!("// reduction {}\n", i + 1));
                        say(emit::proof(&s.to_json(), how));
                    }
                    say("// result\n".to_string());
                    say(emit::proof(&free.to_json(), how));
                }
            }
            Ok(0)
        }
        Verb::Grammar {
            axioms,
            start,
            query,
            applicable,
            productions,
        } => {
            let ax = parse_axioms(&axioms).map_err(|e| CliError::Usage(e.to_string()))?;
            let colour = diamond(&start)?;
            if productions {
                for p in build_grammar(&ax, colour).production_strings() {
                    say(format!("{p}\n"));
                }
            }
            if let Some(q) = query {
                let word = parse_diamonds(&q).map_err(|e| CliError::Usage(e.to_string()))?;
                let yes = cyk_membership(&build_grammar(&ax, colour), &word);
                say(format!("{}\n", if yes { "accepted" } else { "rejected" }));
            } else if let Some(a) = applicable {
                let mut parts = a.rsplitn(4, ',');
                let (d, j, i, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some(d), Some(j), Some(i), Some(s)) => (d, j, i, s),
                    _ => return Err(CliError::Usage("--applicable needs <sequent>,<from>,<to>,<w|b>".into())),
                };
                let s: Sequent = s.parse().map_err(|e| CliError::Data(format!("{s:?}: {e}")))?;
                let addr = |t: &str| {
                    t.trim()
                        .parse::<NodeAddress>()
                        .map_err(|e| CliError::Usage(e.to_string()))
                };
                match propagation_applicable(&s, &addr(i)?, &addr(j)?, diamond(d)?, &ax) {
                    Some(w) => {
                        let codes: String = w.iter().map(|d| d.code()).collect();
                        say(format!("applicable via \"{codes}\"\n"));
                    }
                    None => say("not applicable\n".to_string()),
                }
            } else if !productions {
                return Err(CliError::Usage(
                    "grammar needs --query, --applicable or --productions".into(),
                ));
            }
            Ok(0)
        }
        Verb::Countermodel {
            bound,
            frames,
            formula: text,
        } => {
            if bound == 0 {
                return Err(CliError::Usage("--bound must be at least 1".into()));
            }
            let f = formula(&text)?;
            Ok(match find_countermodel(&f, bound, frames) {
                Some((m, w)) => {
                    say(format!("{}\n", m.to_json(w)));
                    0
                }
                None => {
                    say("not found\n".to_string());
                    1
                }
            })
        }
        Verb::Bench {
            corpus,
            logic: name,
            depth,
        } => {
            let path = corpus.display().to_string();
            let text = read_input(&path)?;
            logic(&name)?;
            say("formula\tlogic\toutcome\tsteps\twall_ms\n".to_string());
            for line in text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
            {
                let f = formula(line)?;
                let start = Instant::now();
                let (o, stats) = prove(&Sequent::from_formulas([f.clone()]), &name, depth)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                say(format!("{f}\t{name}\t{}\t{}\t{ms:.3}\n", o.label(), stats.steps));
            }
            Ok(0)
        }
    }
}

fn diamond(s: &str) -> Result<Diamond> {
    match s.trim() {
        "w" => Ok(Diamond::White),
        "b" => Ok(Diamond::Black),
        other => Err(CliError::Usage(format!("diamond must be w or b, not {other:?}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EX_USAGE } else { 0 });
        }
    };
    let stdout = io::stdout();
    match run(cli.verb, &mut stdout.lock()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tensera: {e}");
            ExitCode::from(e.code())
        }
    }
}
