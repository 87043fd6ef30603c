//! Line-oriented text format shared by every machine kind.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::alphabet::{is_push, Dir, Letter, StructuredAlphabet};
use crate::error::{Error, Result};
use crate::stst::{Stst, StstPop, StstPush, Sym, Update};
use crate::twovpa::{LookAround, Rule, TwoVpa};
use crate::twovpt::TwoVpt;
use crate::vpa::{Nfa, PopRule, PushRule, Vpa, Vpt};

#[derive(Clone, Debug, PartialEq)]
pub enum Machine {
    Vpa(Vpa),
    Vpt(Vpt),
    TwoVpa(TwoVpa),
    TwoVpt(TwoVpt),
    Stst(Stst),
    Fsa(Nfa),
}

impl Machine {
    pub fn kind(&self) -> &'static str {
        match self {
            Machine::Vpa(a) if a.is_deterministic() => "dvpa",
            Machine::Vpa(_) => "vpa",
            Machine::Vpt(_) => "vpt",
            Machine::TwoVpa(_) => "2vpa",
            Machine::TwoVpt(t) if t.is_deterministic() => "d2vpt",
            Machine::TwoVpt(_) => "2vpt",
            Machine::Stst(_) => "stst",
            Machine::Fsa(_) => "fsa",
        }
    }

    fn wrong(&self, want: &str) -> Error {
        Error::InvalidMachine(format!("expected a {want}, found a {}", self.kind()))
    }

    pub fn into_vpa(self) -> Result<Vpa> {
        match self {
            Machine::Vpa(a) => Ok(a),
            m => Err(m.wrong("vpa")),
        }
    }

    pub fn into_vpt(self) -> Result<Vpt> {
        match self {
            Machine::Vpt(t) => Ok(t),
            m => Err(m.wrong("vpt")),
        }
    }

    pub fn into_two_vpa(self) -> Result<TwoVpa> {
        match self {
            Machine::TwoVpa(a) => Ok(a),
            Machine::TwoVpt(t) if t.lookaround.is_none() => Ok(t.automaton),
            m => Err(m.wrong("2vpa")),
        }
    }

    pub fn into_two_vpt(self) -> Result<TwoVpt> {
        match self {
            Machine::TwoVpt(t) => Ok(t),
            m => Err(m.wrong("2vpt")),
        }
    }

    pub fn into_stst(self) -> Result<Stst> {
        match self {
            Machine::Stst(s) => Ok(s),
            m => Err(m.wrong("stst")),
        }
    }

    pub fn into_fsa(self) -> Result<Nfa> {
        match self {
            Machine::Fsa(f) => Ok(f),
            m => Err(m.wrong("fsa")),
        }
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Drops a `#` comment: the marker must start the line or follow whitespace,
/// so symbol names may contain `#`.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

#[derive(Default)]
struct Header {
    kind: Option<String>,
    fields: HashMap<String, (usize, Vec<String>)>,
    guards: Vec<(usize, Vec<String>)>,
    checker: Option<(usize, String)>,
}

struct RuleLine {
    line: usize,
    keyword: String,
    lhs: Vec<String>,
    rhs: Vec<String>,
    output: Option<Vec<String>>,
    update: Option<String>,
}

const HEADER_KEYS: &[&str] = &[
    "calls",
    "returns",
    "output-alphabet",
    "output-calls",
    "output-returns",
    "states",
    "initial",
    "final",
    "stack",
    "registers",
    "alphabet",
];

fn split_rule(line: usize, text: &str) -> Result<RuleLine> {
    let mut rest = text;
    let mut update = None;
    if let Some(open) = rest.find('{') {
        let close = rest.rfind('}').ok_or_else(|| perr(line, "unclosed `{`"))?;
        update = Some(rest[open + 1..close].to_string());
        rest = &rest[..open];
    }
    let mut output = None;
    if let Some(q) = rest.find('"') {
        let end = rest.rfind('"').filter(|&e| e > q).ok_or_else(|| perr(line, "unterminated output string"))?;
        output = Some(rest[q + 1..end].split_whitespace().map(String::from).collect());
        let before = rest[..q].trim_end();
        rest = before.strip_suffix('/').ok_or_else(|| perr(line, "output must follow `/`"))?;
    }
    let (l, r) = rest.split_once("->").ok_or_else(|| perr(line, "missing `->`"))?;
    let mut lhs: Vec<String> = l.split_whitespace().map(String::from).collect();
    let keyword = if lhs.is_empty() { String::new() } else { lhs.remove(0) };
    Ok(RuleLine { line, keyword, lhs, rhs: r.split_whitespace().map(String::from).collect(), output, update })
}

pub fn parse_machine(text: &str) -> Result<Machine> {
    parse_lines(&text.lines().collect::<Vec<_>>(), 0)
}

fn parse_lines(lines: &[&str], offset: usize) -> Result<Machine> {
    let mut header = Header::default();
    let mut rules = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = offset + i + 1;
        let text = strip_comment(lines[i]).trim();
        i += 1;
        if text.is_empty() {
            continue;
        }
        let first = text.split_whitespace().next().unwrap_or_default();
        if let Some(key) = first.strip_suffix(':') {
            let values: Vec<String> = text[first.len()..].split_whitespace().map(String::from).collect();
            match key {
                "kind" => {
                    let [k] = values.as_slice() else { return Err(perr(line, "kind takes one value")) };
                    header.kind = Some(k.clone());
                }
                "la-checker" => {
                    if values != ["{"] {
                        return Err(perr(line, "expected `la-checker: {`"));
                    }
                    let start = i;
                    while i < lines.len() && strip_comment(lines[i]).trim() != "}" {
                        i += 1;
                    }
                    if i == lines.len() {
                        return Err(perr(line, "unclosed look-around block"));
                    }
                    header.checker = Some((offset + start, lines[start..i].join("\n")));
                    i += 1;
                }
                "la-guard" => header.guards.push((line, values)),
                k if HEADER_KEYS.contains(&k) => {
                    let entry = header.fields.entry(k.to_string()).or_insert((line, Vec::new()));
                    entry.1.extend(values);
                }
                k => return Err(perr(line, format!("unknown field `{k}`"))),
            }
        } else {
            rules.push(split_rule(line, text)?);
        }
    }
    let kind = header.kind.clone().ok_or_else(|| perr(offset + 1, "missing `kind:`"))?;
    match kind.as_str() {
        "vpa" | "dvpa" => {
            let a = build_vpa(&header, &rules, false)?.0;
            if kind == "dvpa" && !a.is_deterministic() {
                return Err(Error::NotDeterministic("dvpa file describes a nondeterministic automaton".into()));
            }
            Ok(Machine::Vpa(a))
        }
        "vpt" => {
            let (vpa, outs) = build_vpa(&header, &rules, true)?;
            let (alphabet, structure) = output_alphabet(&header)?;
            let (push_out, pop_out) = outs.expect("outputs collected");
            let resolve = |w: Vec<(usize, Vec<String>)>| -> Result<Vec<Vec<u32>>> {
                w.into_iter().map(|(l, toks)| resolve_output(l, &alphabet, &toks)).collect()
            };
            let t = Vpt::new(vpa, alphabet.clone(), resolve(push_out)?, resolve(pop_out)?)?;
            Ok(Machine::Vpt(match structure {
                Some(s) => t.with_structure(s)?,
                None => t,
            }))
        }
        "2vpa" | "2vpt" | "d2vpt" => {
            let (a, outs) = build_two_vpa(&header, &rules)?;
            if kind == "2vpa" {
                if rules.iter().any(|r| r.output.is_some()) || header.checker.is_some() {
                    return Err(perr(offset + 1, "2vpa files carry no outputs or look-around"));
                }
                return Ok(Machine::TwoVpa(a));
            }
            let (alphabet, _) = output_alphabet(&header)?;
            let outputs = outs.into_iter().map(|(l, toks)| resolve_output(l, &alphabet, &toks)).collect::<Result<_>>()?;
            let la = match &header.checker {
                None => {
                    if let Some((l, _)) = header.guards.first() {
                        return Err(perr(*l, "la-guard without la-checker"));
                    }
                    None
                }
                Some((start, body)) => {
                    let body_lines: Vec<&str> = body.lines().collect();
                    let has_kind = body_lines.iter().any(|l| strip_comment(l).trim().starts_with("kind:"));
                    let checker = if has_kind {
                        parse_lines(&body_lines, *start)?
                    } else {
                        let mut with_kind = vec!["kind: vpa"];
                        with_kind.extend(body_lines);
                        parse_lines(&with_kind, start.saturating_sub(1))?
                    }
                    .into_vpa()?;
                    let mut guards = vec![None; a.rules().len()];
                    for (l, vals) in &header.guards {
                        let [id, st] = vals.as_slice() else { return Err(perr(*l, "la-guard takes a rule id and a state")) };
                        let k: usize = id.parse().map_err(|_| perr(*l, format!("bad rule id `{id}`")))?;
                        if k == 0 || k > guards.len() {
                            return Err(perr(*l, format!("rule id {k} out of range")));
                        }
                        let q = checker
                            .states()
                            .iter()
                            .position(|s| s == st)
                            .ok_or_else(|| perr(*l, format!("unknown checker state `{st}`")))?;
                        guards[k - 1] = Some(q as u32);
                    }
                    Some(LookAround::new(checker, guards)?)
                }
            };
            let t = TwoVpt::new(a, alphabet, outputs, la)?;
            if kind == "d2vpt" && !t.is_deterministic() {
                let (k1, k2) = t.guard_conflict().expect("conflict");
                return Err(Error::NotDeterministic(format!("rules {} and {} overlap", k1 + 1, k2 + 1)));
            }
            Ok(Machine::TwoVpt(t))
        }
        "stst" => build_stst(&header, &rules).map(Machine::Stst),
        "fsa" => build_fsa(&header, &rules).map(Machine::Fsa),
        k => Err(perr(offset + 1, format!("unknown kind `{k}`"))),
    }
}

fn field<'a>(h: &'a Header, key: &str) -> Option<&'a (usize, Vec<String>)> {
    h.fields.get(key)
}

fn required<'a>(h: &'a Header, key: &str) -> Result<&'a Vec<String>> {
    field(h, key).map(|(_, v)| v).ok_or_else(|| perr(0, format!("missing `{key}:`")))
}

fn names_index(line: usize, names: &[String], what: &str) -> Result<HashMap<String, u32>> {
    let mut m = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if m.insert(n.clone(), i as u32).is_some() {
            return Err(perr(line, format!("duplicate {what} `{n}`")));
        }
    }
    Ok(m)
}

fn lookup(line: usize, idx: &HashMap<String, u32>, name: &str, what: &str) -> Result<u32> {
    idx.get(name).copied().ok_or_else(|| perr(line, format!("unknown {what} `{name}`")))
}

fn alphabet(h: &Header) -> Result<Arc<StructuredAlphabet>> {
    StructuredAlphabet::shared(required(h, "calls")?, required(h, "returns")?)
}

struct Common {
    sigma: Arc<StructuredAlphabet>,
    states: Vec<String>,
    st: HashMap<String, u32>,
    stack: Vec<String>,
    gm: HashMap<String, u32>,
    initial: Vec<u32>,
    finals: Vec<u32>,
}

fn common(h: &Header) -> Result<Common> {
    let sigma = alphabet(h)?;
    let states = required(h, "states")?.clone();
    let sline = field(h, "states").map(|f| f.0).unwrap_or(0);
    let st = names_index(sline, &states, "state")?;
    let stack = field(h, "stack").map(|f| f.1.clone()).unwrap_or_default();
    let gm = names_index(field(h, "stack").map(|f| f.0).unwrap_or(0), &stack, "stack symbol")?;
    let iline = field(h, "initial").map(|f| f.0).unwrap_or(0);
    let initial = required(h, "initial")?.iter().map(|s| lookup(iline, &st, s, "state")).collect::<Result<_>>()?;
    let fline = field(h, "final").map(|f| f.0).unwrap_or(0);
    let finals = field(h, "final")
        .map(|f| f.1.clone())
        .unwrap_or_default()
        .iter()
        .map(|s| lookup(fline, &st, s, "state"))
        .collect::<Result<_>>()?;
    Ok(Common { sigma, states, st, stack, gm, initial, finals })
}

type Outputs = Vec<(usize, Vec<String>)>;

fn build_vpa(h: &Header, rules: &[RuleLine], with_output: bool) -> Result<(Vpa, Option<(Outputs, Outputs)>)> {
    let c = common(h)?;
    let (mut push, mut pop) = (Vec::new(), Vec::new());
    let (mut push_out, mut pop_out) = (Vec::new(), Vec::new());
    for r in rules {
        let l = r.line;
        if r.update.is_some() || (!with_output && r.output.is_some()) {
            return Err(perr(l, "unexpected output or update"));
        }
        let out = (l, r.output.clone().unwrap_or_default());
        match (r.keyword.as_str(), r.lhs.as_slice(), r.rhs.as_slice()) {
            ("push", [q, a], [q2, g]) => {
                let Some(Letter::Call(a)) = c.sigma.letter(a) else { return Err(perr(l, format!("`{a}` is not a call"))) };
                push.push(PushRule {
                    from: lookup(l, &c.st, q, "state")?,
                    call: a,
                    to: lookup(l, &c.st, q2, "state")?,
                    gamma: lookup(l, &c.gm, g, "stack symbol")?,
                });
                push_out.push(out);
            }
            ("pop", [q, a, g], [q2]) => {
                let Some(Letter::Ret(a)) = c.sigma.letter(a) else { return Err(perr(l, format!("`{a}` is not a return"))) };
                pop.push(PopRule {
                    from: lookup(l, &c.st, q, "state")?,
                    ret: a,
                    gamma: lookup(l, &c.gm, g, "stack symbol")?,
                    to: lookup(l, &c.st, q2, "state")?,
                });
                pop_out.push(out);
            }
            _ => return Err(perr(l, "malformed rule")),
        }
    }
    let a = Vpa::new(c.sigma, c.states, c.initial, c.finals, c.stack, push, pop)?;
    Ok((a, with_output.then_some((push_out, pop_out))))
}

fn parse_dir(line: usize, tok: &str) -> Result<Dir> {
    match tok {
        "fw" => Ok(Dir::Fwd),
        "bw" => Ok(Dir::Bwd),
        t => Err(perr(line, format!("expected a direction, found `{t}`"))),
    }
}

fn build_two_vpa(h: &Header, rules: &[RuleLine]) -> Result<(TwoVpa, Outputs)> {
    let c = common(h)?;
    let [initial] = c.initial.as_slice() else { return Err(perr(0, "two-way machines have one initial state")) };
    let mut out_rules = Vec::new();
    let mut outputs = Vec::new();
    for r in rules {
        let l = r.line;
        if r.update.is_some() {
            return Err(perr(l, "unexpected update"));
        }
        let (push, q, d, a, g, q2, d2) = match (r.keyword.as_str(), r.lhs.as_slice(), r.rhs.as_slice()) {
            ("push", [q, d, a], [q2, d2, g]) => (true, q, d, a, g, q2, d2),
            ("pop", [q, d, a, g], [q2, d2]) => (false, q, d, a, g, q2, d2),
            _ => return Err(perr(l, "malformed rule (two-way rules need directions)")),
        };
        let dir = parse_dir(l, d)?;
        let letter = c.sigma.extended_letter(a).ok_or_else(|| perr(l, format!("unknown symbol `{a}`")))?;
        if is_push(dir, letter) != push {
            let want = if push { "pop" } else { "push" };
            return Err(perr(l, format!("reading `{a}` {dir} is a {want}")));
        }
        out_rules.push(Rule {
            from: lookup(l, &c.st, q, "state")?,
            dir,
            letter,
            gamma: lookup(l, &c.gm, g, "stack symbol")?,
            to: lookup(l, &c.st, q2, "state")?,
            to_dir: parse_dir(l, d2)?,
        });
        outputs.push((l, r.output.clone().unwrap_or_default()));
    }
    Ok((TwoVpa::new(c.sigma, c.states, *initial, c.finals, c.stack, out_rules)?, outputs))
}

fn output_alphabet(h: &Header) -> Result<(Vec<String>, Option<Arc<StructuredAlphabet>>)> {
    match (field(h, "output-calls"), field(h, "output-returns")) {
        (Some((_, calls)), Some((_, rets))) => {
            let s = StructuredAlphabet::shared(calls, rets)?;
            let names: Vec<String> = calls.iter().chain(rets).cloned().collect();
            if let Some((l, declared)) = field(h, "output-alphabet") {
                if *declared != names {
                    return Err(perr(*l, "output-alphabet disagrees with output-calls/output-returns"));
                }
            }
            Ok((names, Some(s)))
        }
        (None, None) => Ok((field(h, "output-alphabet").map(|f| f.1.clone()).unwrap_or_default(), None)),
        _ => Err(perr(0, "output-calls and output-returns go together")),
    }
}

fn resolve_output(line: usize, alphabet: &[String], toks: &[String]) -> Result<Vec<u32>> {
    toks.iter()
        .map(|t| {
            alphabet
                .iter()
                .position(|s| s == t)
                .map(|i| i as u32)
                .ok_or_else(|| perr(line, format!("`{t}` is not an output symbol")))
        })
        .collect()
}

fn parse_syms(
    line: usize,
    toks: &[&str],
    out: &HashMap<String, u32>,
    regs: &HashMap<String, u32>,
    primed: bool,
) -> Result<Vec<Sym>> {
    toks.iter()
        .map(|&t| {
            if let Some(&x) = regs.get(t) {
                return Ok(Sym::Reg(x));
            }
            if let Some(x) = t.strip_suffix('\'').and_then(|b| regs.get(b)) {
                return if primed { Ok(Sym::Prev(*x)) } else { Err(perr(line, format!("`{t}` only allowed in pop updates"))) };
            }
            out.get(t).map(|&a| Sym::Out(a)).ok_or_else(|| perr(line, format!("unknown symbol `{t}` in update")))
        })
        .collect()
}

fn parse_update(
    line: usize,
    body: &str,
    out: &HashMap<String, u32>,
    regs: &HashMap<String, u32>,
    primed: bool,
) -> Result<Update> {
    let mut u = Vec::new();
    for part in body.split(';') {
        let toks: Vec<&str> = part.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let [x, "<-", rhs @ ..] = toks.as_slice() else { return Err(perr(line, "expected `X <- ...`")) };
        let x = lookup(line, regs, x, "register")?;
        if u.iter().any(|(y, _)| *y == x) {
            return Err(perr(line, "register assigned twice"));
        }
        u.push((x, parse_syms(line, rhs, out, regs, primed)?));
    }
    Ok(u)
}

fn build_stst(h: &Header, rules: &[RuleLine]) -> Result<Stst> {
    let c = common(h)?;
    let [initial] = c.initial.as_slice() else { return Err(perr(0, "an stst has one initial state")) };
    let out_names = field(h, "output-alphabet").map(|f| f.1.clone()).unwrap_or_default();
    let out = names_index(0, &out_names, "output symbol")?;
    let registers = field(h, "registers").map(|f| f.1.clone()).unwrap_or_default();
    let regs = names_index(0, &registers, "register")?;
    if let Some(r) = registers.iter().find(|r| out.contains_key(*r)) {
        return Err(perr(0, format!("`{r}` is both a register and an output symbol")));
    }
    let mut push = Vec::new();
    let mut pop = Vec::new();
    let mut final_out = vec![None; c.states.len()];
    for r in rules {
        let l = r.line;
        match (r.keyword.as_str(), r.lhs.as_slice(), r.rhs.as_slice(), &r.update) {
            ("upd-push", [q, a], [q2, g], Some(body)) => {
                let Some(Letter::Call(a)) = c.sigma.letter(a) else { return Err(perr(l, format!("`{a}` is not a call"))) };
                push.push(StstPush {
                    from: lookup(l, &c.st, q, "state")?,
                    call: a,
                    to: lookup(l, &c.st, q2, "state")?,
                    gamma: lookup(l, &c.gm, g, "stack symbol")?,
                    update: parse_update(l, body, &out, &regs, false)?,
                });
            }
            ("upd-pop", [q, a, g], [q2], Some(body)) => {
                let Some(Letter::Ret(a)) = c.sigma.letter(a) else { return Err(perr(l, format!("`{a}` is not a return"))) };
                pop.push(StstPop {
                    from: lookup(l, &c.st, q, "state")?,
                    ret: a,
                    gamma: lookup(l, &c.gm, g, "stack symbol")?,
                    to: lookup(l, &c.st, q2, "state")?,
                    update: parse_update(l, body, &out, &regs, true)?,
                });
            }
            ("final-out", [q], rhs, None) => {
                let q = lookup(l, &c.st, q, "state")?;
                let toks: Vec<&str> = rhs.iter().map(String::as_str).collect();
                if final_out[q as usize].replace(parse_syms(l, &toks, &out, &regs, false)?).is_some() {
                    return Err(perr(l, "second final output for a state"));
                }
            }
            _ => return Err(perr(l, "malformed stst rule")),
        }
    }
    Stst::new(c.sigma, out_names, c.states, *initial, c.stack, registers, push, pop, final_out)
}

fn build_fsa(h: &Header, rules: &[RuleLine]) -> Result<Nfa> {
    let alphabet = required(h, "alphabet")?.clone();
    let sym = names_index(0, &alphabet, "symbol")?;
    let states = required(h, "states")?.clone();
    let st = names_index(0, &states, "state")?;
    let names = |key: &str| -> Result<Vec<u32>> {
        field(h, key)
            .map(|f| f.1.clone())
            .unwrap_or_default()
            .iter()
            .map(|s| lookup(0, &st, s, "state"))
            .collect()
    };
    let mut trans = Vec::new();
    for r in rules {
        let l = r.line;
        match (r.keyword.as_str(), r.lhs.as_slice(), r.rhs.as_slice()) {
            ("trans", [p, a], [q]) => {
                trans.push((lookup(l, &st, p, "state")?, lookup(l, &sym, a, "symbol")?, lookup(l, &st, q, "state")?))
            }
            _ => return Err(perr(l, "malformed fsa transition")),
        }
    }
    let f = Nfa { alphabet, states, initial: names("initial")?, finals: names("final")?, trans };
    f.validate()?;
    Ok(f)
}

fn join(xs: &[String]) -> String {
    xs.join(" ")
}

fn header(out: &mut String, kind: &str, sigma: &StructuredAlphabet) {
    let _ = writeln!(out, "kind: {kind}");
    let _ = writeln!(out, "calls: {}", join(sigma.calls()));
    let _ = writeln!(out, "returns: {}", join(sigma.returns()));
}

fn names(all: &[String], ids: impl IntoIterator<Item = u32>) -> String {
    ids.into_iter().map(|i| all[i as usize].as_str()).collect::<Vec<_>>().join(" ")
}

fn quoted(alphabet: &[String], w: &[u32]) -> String {
    format!(" / \"{}\"", names(alphabet, w.iter().copied()))
}

fn write_vpa_body(out: &mut String, a: &Vpa, outputs: Option<(&[String], &[Vec<u32>], &[Vec<u32>])>) {
    let s = a.states();
    let _ = writeln!(out, "states: {}", join(s));
    let _ = writeln!(out, "initial: {}", names(s, a.initial().iter().copied()));
    let _ = writeln!(out, "final: {}", names(s, a.finals()));
    let _ = writeln!(out, "stack: {}", join(a.stack()));
    let sigma = a.alphabet();
    for (k, p) in a.push_rules().iter().enumerate() {
        let o = outputs.map(|(al, po, _)| quoted(al, &po[k])).unwrap_or_default();
        let c = sigma.name(Letter::Call(p.call));
        let _ = writeln!(out, "push {} {c} -> {} {}{o}", s[p.from as usize], s[p.to as usize], a.stack()[p.gamma as usize]);
    }
    for (k, p) in a.pop_rules().iter().enumerate() {
        let o = outputs.map(|(al, _, po)| quoted(al, &po[k])).unwrap_or_default();
        let r = sigma.name(Letter::Ret(p.ret));
        let _ = writeln!(out, "pop {} {r} {} -> {}{o}", s[p.from as usize], a.stack()[p.gamma as usize], s[p.to as usize]);
    }
}

fn write_syms(s: &Stst, rhs: &[Sym]) -> String {
    rhs.iter()
        .map(|x| match *x {
            Sym::Out(a) => s.output_alphabet()[a as usize].clone(),
            Sym::Reg(r) => s.registers()[r as usize].clone(),
            Sym::Prev(r) => format!("{}'", s.registers()[r as usize]),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_update(s: &Stst, u: &Update) -> String {
    let parts: Vec<String> = u
        .iter()
        .map(|(x, rhs)| {
            let r = write_syms(s, rhs);
            let name = &s.registers()[*x as usize];
            if r.is_empty() {
                format!("{name} <-")
            } else {
                format!("{name} <- {r}")
            }
        })
        .collect();
    format!("{{ {} }}", parts.join(" ; "))
}

pub fn write_machine(m: &Machine) -> String {
    let mut out = String::new();
    match m {
        Machine::Vpa(a) => {
            header(&mut out, m.kind(), a.alphabet());
            write_vpa_body(&mut out, a, None);
        }
        Machine::Vpt(t) => {
            header(&mut out, "vpt", t.vpa.alphabet());
            match &t.output_structure {
                Some(s) => {
                    let _ = writeln!(out, "output-calls: {}", join(s.calls()));
                    let _ = writeln!(out, "output-returns: {}", join(s.returns()));
                }
                None => {
                    let _ = writeln!(out, "output-alphabet: {}", join(&t.output_alphabet));
                }
            }
            write_vpa_body(&mut out, &t.vpa, Some((&t.output_alphabet, &t.push_out, &t.pop_out)));
        }
        Machine::TwoVpa(a) => write_two_way(&mut out, "2vpa", a, None),
        Machine::TwoVpt(t) => write_two_way(&mut out, m.kind(), &t.automaton, Some(t)),
        Machine::Stst(s) => {
            header(&mut out, "stst", s.alphabet());
            let st = s.states();
            let _ = writeln!(out, "output-alphabet: {}", join(s.output_alphabet()));
            let _ = writeln!(out, "states: {}", join(st));
            let _ = writeln!(out, "initial: {}", st[s.initial() as usize]);
            let _ = writeln!(out, "stack: {}", join(s.stack()));
            let _ = writeln!(out, "registers: {}", join(s.registers()));
            let sigma = s.alphabet();
            for p in s.push_rules() {
                let c = sigma.name(Letter::Call(p.call));
                let (q, q2, g) = (&st[p.from as usize], &st[p.to as usize], &s.stack()[p.gamma as usize]);
                let _ = writeln!(out, "upd-push {q} {c} -> {q2} {g} {}", write_update(s, &p.update));
            }
            for p in s.pop_rules() {
                let r = sigma.name(Letter::Ret(p.ret));
                let (q, q2, g) = (&st[p.from as usize], &st[p.to as usize], &s.stack()[p.gamma as usize]);
                let _ = writeln!(out, "upd-pop {q} {r} {g} -> {q2} {}", write_update(s, &p.update));
            }
            for q in 0..st.len() as u32 {
                if let Some(rhs) = s.final_output(q) {
                    let _ = writeln!(out, "final-out {} -> {}", st[q as usize], write_syms(s, rhs));
                }
            }
        }
        Machine::Fsa(f) => {
            let _ = writeln!(out, "kind: fsa");
            let _ = writeln!(out, "alphabet: {}", join(&f.alphabet));
            let _ = writeln!(out, "states: {}", join(&f.states));
            let _ = writeln!(out, "initial: {}", names(&f.states, f.initial.iter().copied()));
            let _ = writeln!(out, "final: {}", names(&f.states, f.finals.iter().copied()));
            for &(p, a, q) in &f.trans {
                let _ = writeln!(out, "trans {} {} -> {}", f.states[p as usize], f.alphabet[a as usize], f.states[q as usize]);
            }
        }
    }
    out
}

fn write_two_way(out: &mut String, kind: &str, a: &TwoVpa, t: Option<&TwoVpt>) {
    header(out, kind, a.alphabet());
    if let Some(t) = t {
        let _ = writeln!(out, "output-alphabet: {}", join(&t.output_alphabet));
    }
    let s = a.states();
    let _ = writeln!(out, "states: {}", join(s));
    let _ = writeln!(out, "initial: {}", s[a.initial() as usize]);
    let _ = writeln!(out, "final: {}", names(s, a.finals()));
    let _ = writeln!(out, "stack: {}", join(a.stack()));
    let sigma = a.alphabet();
    for (k, r) in a.rules().iter().enumerate() {
        let o = t.map(|t| quoted(&t.output_alphabet, &t.outputs[k])).unwrap_or_default();
        let (q, q2, g, l) = (&s[r.from as usize], &s[r.to as usize], &a.stack()[r.gamma as usize], sigma.name(r.letter));
        if r.is_push() {
            let _ = writeln!(out, "push {q} {} {l} -> {q2} {} {g}{o}", r.dir, r.to_dir);
        } else {
            let _ = writeln!(out, "pop {q} {} {l} {g} -> {q2} {}{o}", r.dir, r.to_dir);
        }
    }
    if let Some(la) = t.and_then(|t| t.lookaround.as_ref()) {
        let _ = writeln!(out, "la-checker: {{");
        let mut inner = String::new();
        header(&mut inner, "vpa", la.checker.alphabet());
        write_vpa_body(&mut inner, &la.checker, None);
        for l in inner.lines() {
            let _ = writeln!(out, "  {l}");
        }
        let _ = writeln!(out, "}}");
        for (k, g) in la.guards.iter().enumerate() {
            if let Some(g) = g {
                let _ = writeln!(out, "la-guard: {} {}", k + 1, la.checker.states()[*g as usize]);
            }
        }
    }
}
