use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use twoway::compose::{compose_hu, compose_hu_codet, compose_relabeling, remove_lookaround, DEFAULT_STATE_CAP};
use twoway::format::{parse_machine, write_machine, Machine};
use twoway::oracle::{check_machine, Property, Sample};
use twoway::stst::{d2vpt_to_stst, evaluate_stst};
use twoway::twovpa::{accepts_2vpa, is_empty_2vpa, two_vpa_to_dvpa, TwoVpa, DEFAULT_ALGEBRA_CAP};
use twoway::twovpt::{evaluate_2vpt_all, evaluate_d2vpt_stats, is_single_use, type_check, EvalMode, SingleUse, TypeCheck};
use twoway::vpa::{evaluate_vpt, is_empty_vpa, Emptiness};
use twoway::{Exec, NestedWord};

#[derive(Parser)]
#[command(name = "twoway", version, about = "Two-way visibly pushdown automata and transducers")]
struct Cli {
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Execution strategy for data-parallel work.
    #[arg(long, global = true, value_enum, default_value_t = ExecArg::Parallel)]
    exec: ExecArg,
    /// Also write the summary as key=value lines to this file.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Streaming,
    Checked,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Auto,
    Hu,
    Codet,
    Relabeling,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a machine and check its invariants.
    Validate { machine: PathBuf },
    /// Run a machine on a word (a literal or a file holding one).
    Eval {
        machine: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Membership of a word in the domain of a machine.
    Accepts {
        machine: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// Translate a 2VPA into an equivalent deterministic one-way VPA.
    #[command(name = "convert-2vpa-dvpa")]
    Convert {
        machine: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALGEBRA_CAP)]
        max_algebra: usize,
    },
    /// Decide emptiness; exits 1 and prints a witness when nonempty.
    Emptiness {
        machine: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALGEBRA_CAP)]
        max_algebra: usize,
    },
    /// Compose a letter-to-letter VPT with a deterministic 2VPT.
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ConstructionArg::Auto)]
        construction: ConstructionArg,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Replace look-around guards by an equivalent plain transducer.
    #[command(name = "remove-la")]
    RemoveLa {
        machine: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
    /// Decide whether no run reads a position twice in a producing state.
    #[command(name = "single-use")]
    SingleUse {
        machine: PathBuf,
        /// Producing states; defaults to those with output.
        #[arg(long, value_delimiter = ',')]
        states: Option<Vec<String>>,
        #[arg(long, default_value_t = DEFAULT_ALGEBRA_CAP)]
        max_algebra: usize,
    },
    /// Translate a deterministic 2VPT into a streaming tree-to-string transducer.
    #[command(name = "to-stst")]
    ToStst {
        machine: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALGEBRA_CAP)]
        max_algebra: usize,
    },
    /// Check that every domain word is mapped into the range language.
    Typecheck {
        machine: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        range: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALGEBRA_CAP)]
        max_algebra: usize,
    },
    /// Run the differential suites against brute-force references.
    #[command(name = "oracle-check")]
    OracleCheck {
        machine: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
        /// Random words on top of the exhaustive ones.
        #[arg(long, default_value_t = 200)]
        random: usize,
        #[arg(long, default_value_t = 24)]
        random_len: usize,
        #[arg(long)]
        property: Option<Property>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        max_states: usize,
    },
}

/// What a command prints and returns.
struct Outcome {
    code: u8,
    lines: Vec<String>,
    summary: Vec<(String, String)>,
}

impl Outcome {
    fn new(ok: bool) -> Outcome {
        Outcome { code: if ok { 0 } else { 1 }, lines: Vec::new(), summary: Vec::new() }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn kv(&mut self, k: &str, v: impl ToString) {
        self.summary.push((k.into(), v.to_string()));
    }
}

struct Loaded {
    machine: Machine,
    hash: String,
}

fn load(path: &Path) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let machine = parse_machine(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Loaded { machine, hash: hex::encode(Sha256::digest(text.as_bytes())) })
}

fn save(path: &Path, m: &Machine) -> anyhow::Result<String> {
    let text = write_machine(m);
    std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

/// A word given literally or as a file; surrounding markers are optional.
fn read_word(input: &str, m: &Machine) -> anyhow::Result<NestedWord> {
    let path = Path::new(input);
    let text = if path.is_file() { std::fs::read_to_string(path)? } else { input.to_string() };
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.first() == Some(&"<L>") && tokens.last() == Some(&"<R>") && tokens.len() >= 2 {
        tokens = tokens[1..tokens.len() - 1].to_vec();
    }
    let sigma = match m {
        Machine::Vpa(a) => a.alphabet(),
        Machine::Vpt(t) => t.vpa.alphabet(),
        Machine::TwoVpa(a) => a.alphabet(),
        Machine::TwoVpt(t) => t.alphabet(),
        Machine::Stst(s) => s.alphabet(),
        Machine::Fsa(_) => bail!("finite automata read flat words; use `accepts`"),
    };
    Ok(NestedWord::parse(&tokens.join(" "), sigma)?)
}

fn two_vpa(m: Machine) -> anyhow::Result<TwoVpa> {
    match m {
        Machine::Vpa(a) => Ok(TwoVpa::from_vpa(&a)),
        m => Ok(m.into_two_vpa()?),
    }
}

fn describe(m: &Machine) -> String {
    match m {
        Machine::Vpa(a) => format!("states={} stack={}", a.num_states(), a.stack().len()),
        Machine::Vpt(t) => format!("states={} stack={} outputs={}", t.vpa.num_states(), t.vpa.stack().len(), t.output_alphabet.len()),
        Machine::TwoVpa(a) => format!("states={} stack={} rules={}", a.num_states(), a.stack().len(), a.rules().len()),
        Machine::TwoVpt(t) => format!(
            "states={} stack={} rules={} lookaround={}",
            t.automaton.num_states(),
            t.automaton.stack().len(),
            t.automaton.rules().len(),
            t.lookaround.is_some()
        ),
        Machine::Stst(s) => format!("states={} stack={} registers={}", s.states().len(), s.stack().len(), s.registers().len()),
        Machine::Fsa(f) => format!("states={}", f.states.len()),
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let exec = match cli.exec {
        ExecArg::Sequential => Exec::Sequential,
        ExecArg::Parallel => Exec::Parallel,
    };
    let mut o;
    match cli.command {
        Command::Validate { machine } => {
            let l = load(&machine)?;
            o = Outcome::new(true);
            o.line(format!("valid {} {}", l.machine.kind(), describe(&l.machine)));
            o.kv("machine", l.hash);
            o.kv("kind", l.machine.kind());
        }
        Command::Eval { machine, input, mode } => {
            let l = load(&machine)?;
            let w = read_word(&input, &l.machine)?;
            let outputs: Vec<String> = match &l.machine {
                Machine::TwoVpt(t) if t.is_deterministic() => {
                    let mode = match mode {
                        Some(ModeArg::Streaming) => EvalMode::Streaming,
                        Some(ModeArg::Checked) => EvalMode::Checked,
                        None if t.lookaround.is_some() => EvalMode::Checked,
                        None => EvalMode::Streaming,
                    };
                    match evaluate_d2vpt_stats(t, &w, mode) {
                        Ok(e) => {
                            o = Outcome::new(true);
                            o.kv("steps", e.steps);
                            o.kv("peak-memory", e.peak_memory);
                            vec![t.render(&e.output)]
                        }
                        Err(e @ (twoway::Error::Rejected { .. } | twoway::Error::Diverged { .. })) => {
                            o = Outcome::new(false);
                            o.line(format!("undefined: {e}"));
                            vec![]
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                Machine::TwoVpt(t) => {
                    let labels = match &t.lookaround {
                        Some(la) => match twoway::twovpa::check_lookaround_run(la, &w) {
                            Ok(run) => twoway::twovpa::marked_labels(&run),
                            Err(_) => Vec::new(),
                        },
                        None => Vec::new(),
                    };
                    let (outs, cyclic) = evaluate_2vpt_all(t, &w, &labels);
                    o = Outcome::new(!outs.is_empty());
                    o.kv("cyclic", cyclic);
                    outs.iter().map(|out| t.render(out)).collect()
                }
                Machine::Vpt(t) => {
                    let outs = evaluate_vpt(t, &w);
                    o = Outcome::new(!outs.is_empty());
                    outs.iter().map(|out| t.render(out)).collect()
                }
                Machine::Stst(s) => match evaluate_stst(s, &w) {
                    Ok(out) => {
                        o = Outcome::new(true);
                        vec![s.render(&out)]
                    }
                    Err(e) => {
                        o = Outcome::new(false);
                        o.line(format!("undefined: {e}"));
                        vec![]
                    }
                },
                m => bail!("`eval` needs a transducer, found a {}", m.kind()),
            };
            o.kv("machine", l.hash);
            o.kv("outputs", outputs.len());
            o.lines.extend(outputs);
        }
        Command::Accepts { machine, input } => {
            let l = load(&machine)?;
            let ok = match &l.machine {
                Machine::Fsa(f) => {
                    let text = if Path::new(&input).is_file() { std::fs::read_to_string(&input)? } else { input.clone() };
                    f.accepts_names(&text.split_whitespace().collect::<Vec<_>>())
                }
                Machine::Vpa(a) => a.accepts(&read_word(&input, &l.machine)?),
                Machine::Vpt(t) => !evaluate_vpt(t, &read_word(&input, &l.machine)?).is_empty(),
                Machine::TwoVpa(a) => accepts_2vpa(a, &read_word(&input, &l.machine)?),
                Machine::TwoVpt(t) => {
                    let w = read_word(&input, &l.machine)?;
                    if t.is_deterministic() {
                        evaluate_d2vpt_stats(t, &w, EvalMode::Checked).is_ok()
                    } else if t.lookaround.is_none() {
                        accepts_2vpa(&t.automaton, &w)
                    } else {
                        bail!("membership for nondeterministic look-around transducers is not supported")
                    }
                }
                Machine::Stst(s) => evaluate_stst(s, &read_word(&input, &l.machine)?).is_ok(),
            };
            o = Outcome::new(ok);
            o.line(if ok { "accepted" } else { "rejected" });
            o.kv("machine", l.hash);
            o.kv("accepted", ok);
        }
        Command::Convert { machine, output, max_algebra } => {
            let l = load(&machine)?;
            let a = two_vpa(l.machine)?;
            let d = two_vpa_to_dvpa(&a, max_algebra, exec)?;
            let states = d.num_states();
            let h = save(&output, &Machine::Vpa(d))?;
            o = Outcome::new(true);
            o.line(format!("wrote dvpa with {states} states to {}", output.display()));
            o.kv("machine", l.hash);
            o.kv("max-algebra", max_algebra);
            o.kv("dvpa-states", states);
            o.kv("output", h);
        }
        Command::Emptiness { machine, max_algebra } => {
            let l = load(&machine)?;
            let verdict = match l.machine {
                Machine::Vpa(a) => is_empty_vpa(&a),
                m => is_empty_2vpa(&two_vpa(m)?, max_algebra, exec)?,
            };
            o = Outcome::new(verdict.is_empty());
            match &verdict {
                Emptiness::Empty => o.line("empty"),
                Emptiness::NonEmpty(w) => {
                    o.line("nonempty");
                    o.line(format!("witness: {w}"));
                    o.kv("witness", w);
                }
            }
            o.kv("machine", l.hash);
            o.kv("max-algebra", max_algebra);
            o.kv("empty", verdict.is_empty());
        }
        Command::Compose { first, second, output, construction, max_states } => {
            let (l1, l2) = (load(&first)?, load(&second)?);
            let a = l1.machine.into_vpt()?;
            let b = l2.machine.into_two_vpt()?;
            let construction = match construction {
                ConstructionArg::Auto if a.vpa.is_deterministic() => ConstructionArg::Hu,
                ConstructionArg::Auto if a.vpa.is_codeterministic() => ConstructionArg::Codet,
                ConstructionArg::Auto => ConstructionArg::Relabeling,
                c => c,
            };
            let (name, c) = match construction {
                ConstructionArg::Hu => ("hu", compose_hu(&a, &b, max_states)?),
                ConstructionArg::Codet => ("codet", compose_hu_codet(&a, &b, max_states)?),
                _ => ("relabeling", compose_relabeling(&b, &a, max_states)?),
            };
            let states = c.automaton.num_states();
            let h = save(&output, &Machine::TwoVpt(c))?;
            o = Outcome::new(true);
            o.line(format!("wrote {name} composition with {states} states to {}", output.display()));
            o.kv("first", l1.hash);
            o.kv("second", l2.hash);
            o.kv("construction", name);
            o.kv("max-states", max_states);
            o.kv("states", states);
            o.kv("output", h);
        }
        Command::RemoveLa { machine, output, max_states } => {
            let l = load(&machine)?;
            let t = l.machine.into_two_vpt()?;
            let c = remove_lookaround(&t, max_states)?;
            let states = c.automaton.num_states();
            let h = save(&output, &Machine::TwoVpt(c))?;
            o = Outcome::new(true);
            o.line(format!("wrote transducer with {states} states to {}", output.display()));
            o.kv("machine", l.hash);
            o.kv("max-states", max_states);
            o.kv("states", states);
            o.kv("output", h);
        }
        Command::SingleUse { machine, states, max_algebra } => {
            let l = load(&machine)?;
            let t = l.machine.into_two_vpt()?;
            let names = t.automaton.states();
            let producing = match states {
                Some(list) => list
                    .iter()
                    .map(|s| names.iter().position(|n| n == s).map(|i| i as u32).ok_or_else(|| anyhow!("unknown state `{s}`")))
                    .collect::<anyhow::Result<Vec<u32>>>()?,
                None => t.producing_states(),
            };
            let verdict = is_single_use(&t, &producing, max_algebra, exec)?;
            o = Outcome::new(verdict.holds());
            match &verdict {
                SingleUse::Yes => o.line("single-use"),
                SingleUse::No(wit) => {
                    let state = &names[wit.state as usize];
                    o.line("not single-use");
                    o.line(format!("witness: {} position {} state {state}", wit.word, wit.position));
                    o.kv("witness", &wit.word);
                    o.kv("position", wit.position);
                    o.kv("state", state);
                }
            }
            o.kv("machine", l.hash);
            o.kv("producing", producing.iter().map(|&q| names[q as usize].as_str()).collect::<Vec<_>>().join(","));
            o.kv("single-use", verdict.holds());
        }
        Command::ToStst { machine, output, max_algebra } => {
            let l = load(&machine)?;
            let t = l.machine.into_two_vpt()?;
            let s = d2vpt_to_stst(&t, max_algebra, exec)?;
            let (states, regs) = (s.states().len(), s.registers().len());
            let h = save(&output, &Machine::Stst(s))?;
            o = Outcome::new(true);
            o.line(format!("wrote stst with {states} states and {regs} registers to {}", output.display()));
            o.kv("machine", l.hash);
            o.kv("max-algebra", max_algebra);
            o.kv("states", states);
            o.kv("registers", regs);
            o.kv("output", h);
        }
        Command::Typecheck { machine, domain, range, max_algebra } => {
            let (lt, ld, lr) = (load(&machine)?, load(&domain)?, load(&range)?);
            let t = lt.machine.into_two_vpt()?;
            let d = ld.machine.into_vpa()?;
            let r = lr.machine.into_fsa()?;
            let verdict = type_check(&t, &d, &r, max_algebra, exec)?;
            o = Outcome::new(verdict.holds());
            match &verdict {
                TypeCheck::Holds => o.line("holds"),
                TypeCheck::Counterexample(w) => {
                    o.line("fails");
                    o.line(format!("counterexample: {w}"));
                    o.kv("counterexample", w);
                }
            }
            o.kv("machine", lt.hash);
            o.kv("domain", ld.hash);
            o.kv("range", lr.hash);
            o.kv("holds", verdict.holds());
        }
        Command::OracleCheck { machine, max_len, max_depth, random, random_len, property, max_states } => {
            let l = load(&machine)?;
            let s = Sample { max_len, random, random_len, max_depth, seed: cli.seed };
            let subject = machine.file_stem().and_then(|s| s.to_str()).unwrap_or("machine").to_string();
            let properties = property.map_or(Property::ALL.to_vec(), |p| vec![p]);
            let mut reports = Vec::new();
            for p in properties {
                let cap = if p == Property::Composition { max_states } else { DEFAULT_ALGEBRA_CAP };
                reports.extend(check_machine(&subject, &l.machine, p, &s, cap, exec)?);
            }
            if reports.is_empty() {
                bail!("no suite applies to a {}", l.machine.kind());
            }
            let passed = reports.iter().all(|r| r.passed());
            o = Outcome::new(passed);
            o.kv("machine", l.hash);
            o.kv("seed", cli.seed);
            o.kv("max-len", max_len);
            o.kv("max-depth", max_depth);
            o.kv("random", random);
            for r in &reports {
                o.line(r.to_string());
                o.kv(&format!("{}.checked", r.property), r.checked);
                o.kv(&format!("{}.mismatches", r.property), r.mismatches.len());
            }
            o.kv("suites", reports.len());
            o.kv("passed", passed);
        }
    }
    Ok(o)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let summary = cli.summary.clone();
    match run(cli) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            if let Some(path) = summary {
                let mut text = String::new();
                for (k, v) in &o.summary {
                    let _ = writeln!(text, "{k}={v}");
                }
                if let Err(e) = std::fs::write(&path, text) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
