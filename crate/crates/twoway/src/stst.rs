//! Streaming tree-to-string transducers and the translation from
//! deterministic two-way transducers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::alphabet::{Letter, StructuredAlphabet};
use crate::error::{Error, RejectReason, Result};
use crate::exec::Exec;
use crate::nested::NestedWord;
use crate::rel::{Quad, Rel, RelAlgebra};
use crate::twovpa::{compute_algebra, gamma_rules_by, Traversal};
use crate::twovpt::TwoVpt;

/// A symbol on the right-hand side of an update: an output letter, a current
/// register, or (in pop updates) a register of the stacked valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Out(u32),
    Reg(u32),
    Prev(u32),
}

/// Assignments of listed registers; registers not listed are reset to ε.
pub type Update = Vec<(u32, Vec<Sym>)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StstPush {
    pub from: u32,
    pub call: u32,
    pub to: u32,
    pub gamma: u32,
    pub update: Update,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StstPop {
    pub from: u32,
    pub ret: u32,
    pub gamma: u32,
    pub to: u32,
    pub update: Update,
}

#[derive(Clone, Debug)]
pub struct Stst {
    alphabet: Arc<StructuredAlphabet>,
    output_alphabet: Vec<String>,
    states: Vec<String>,
    initial: u32,
    stack: Vec<String>,
    registers: Vec<String>,
    push: Vec<StstPush>,
    pop: Vec<StstPop>,
    final_out: Vec<Option<Vec<Sym>>>,
    push_index: HashMap<(u32, u32), u32>,
    pop_index: HashMap<(u32, u32, u32), u32>,
}

impl PartialEq for Stst {
    fn eq(&self, o: &Self) -> bool {
        self.alphabet == o.alphabet
            && self.output_alphabet == o.output_alphabet
            && self.states == o.states
            && self.initial == o.initial
            && self.stack == o.stack
            && self.registers == o.registers
            && self.push == o.push
            && self.pop == o.pop
            && self.final_out == o.final_out
    }
}

impl Stst {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: Arc<StructuredAlphabet>,
        output_alphabet: Vec<String>,
        states: Vec<String>,
        initial: u32,
        stack: Vec<String>,
        registers: Vec<String>,
        push: Vec<StstPush>,
        pop: Vec<StstPop>,
        final_out: Vec<Option<Vec<Sym>>>,
    ) -> Result<Stst> {
        let n = states.len() as u32;
        let bad = |m: String| Err(Error::InvalidMachine(m));
        if initial >= n || final_out.len() != n as usize {
            return bad("bad initial state or final output table".into());
        }
        let (k, g, x) = (output_alphabet.len() as u32, stack.len() as u32, registers.len() as u32);
        let sym_ok = |s: &Sym, primed: bool| match *s {
            Sym::Out(a) => a < k,
            Sym::Reg(r) => r < x,
            Sym::Prev(r) => primed && r < x,
        };
        let upd_ok = |u: &Update, primed: bool| {
            let mut seen = HashSet::new();
            u.iter().all(|(r, rhs)| *r < x && seen.insert(*r) && rhs.iter().all(|s| sym_ok(s, primed)))
        };
        let mut push_index = HashMap::new();
        for (i, p) in push.iter().enumerate() {
            if p.from >= n || p.to >= n || p.gamma >= g || p.call as usize >= alphabet.num_calls() || !upd_ok(&p.update, false) {
                return bad(format!("push rule {} out of range", i + 1));
            }
            if push_index.insert((p.from, p.call), i as u32).is_some() {
                return Err(Error::NotDeterministic(format!("push rule {}", i + 1)));
            }
        }
        let mut pop_index = HashMap::new();
        for (i, p) in pop.iter().enumerate() {
            if p.from >= n || p.to >= n || p.gamma >= g || p.ret as usize >= alphabet.num_returns() || !upd_ok(&p.update, true) {
                return bad(format!("pop rule {} out of range", i + 1));
            }
            if pop_index.insert((p.from, p.ret, p.gamma), i as u32).is_some() {
                return Err(Error::NotDeterministic(format!("pop rule {}", i + 1)));
            }
        }
        if final_out.iter().flatten().flatten().any(|s| !sym_ok(s, false)) {
            return bad("final output out of range".into());
        }
        Ok(Stst {
            alphabet,
            output_alphabet,
            states,
            initial,
            stack,
            registers,
            push,
            pop,
            final_out,
            push_index,
            pop_index,
        })
    }

    pub fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }
    pub fn output_alphabet(&self) -> &[String] {
        &self.output_alphabet
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn initial(&self) -> u32 {
        self.initial
    }
    pub fn stack(&self) -> &[String] {
        &self.stack
    }
    pub fn registers(&self) -> &[String] {
        &self.registers
    }
    pub fn push_rules(&self) -> &[StstPush] {
        &self.push
    }
    pub fn pop_rules(&self) -> &[StstPop] {
        &self.pop
    }
    pub fn final_output(&self, q: u32) -> Option<&[Sym]> {
        self.final_out[q as usize].as_deref()
    }

    /// Every register, primed or not, occurs at most once in each update.
    pub fn is_copyless(&self) -> bool {
        let ok = |u: &Update| {
            let mut seen = HashSet::new();
            u.iter().flat_map(|(_, rhs)| rhs).all(|s| matches!(s, Sym::Out(_)) || seen.insert(*s))
        };
        self.push.iter().all(|p| ok(&p.update)) && self.pop.iter().all(|p| ok(&p.update))
    }

    pub fn render(&self, out: &[u32]) -> String {
        out.iter().map(|&s| self.output_alphabet[s as usize].as_str()).collect::<Vec<_>>().join(" ")
    }
}

type Valuation = Vec<Vec<u32>>;

fn apply(update: &Update, cur: &Valuation, prev: Option<&Valuation>, nregs: usize) -> Valuation {
    let mut out = vec![Vec::new(); nregs];
    for (x, rhs) in update {
        out[*x as usize] = substitute(rhs, cur, prev);
    }
    out
}

fn substitute(rhs: &[Sym], cur: &Valuation, prev: Option<&Valuation>) -> Vec<u32> {
    let mut w = Vec::new();
    for s in rhs {
        match *s {
            Sym::Out(a) => w.push(a),
            Sym::Reg(r) => w.extend_from_slice(&cur[r as usize]),
            Sym::Prev(r) => w.extend_from_slice(&prev.expect("primed register outside a pop")[r as usize]),
        }
    }
    w
}

/// Runs the deterministic machine; a call stacks the updated valuation and
/// restarts from empty registers, a return combines both.
pub fn evaluate_stst(s: &Stst, w: &NestedWord) -> Result<Vec<u32>> {
    let nregs = s.registers.len();
    let mut q = s.initial;
    let mut theta: Valuation = vec![Vec::new(); nregs];
    let mut stack: Vec<(u32, Valuation)> = Vec::new();
    for (i, &a) in w.letters().iter().enumerate() {
        let stuck = Error::Rejected { position: i + 1, reason: RejectReason::Stuck };
        match a {
            Letter::Call(c) => {
                let k = *s.push_index.get(&(q, c)).ok_or(stuck)?;
                let rule = &s.push[k as usize];
                stack.push((rule.gamma, apply(&rule.update, &theta, None, nregs)));
                theta = vec![Vec::new(); nregs];
                q = rule.to;
            }
            Letter::Ret(r) => {
                let (g, saved) = stack.pop().expect("well-nested");
                let k = *s.pop_index.get(&(q, r, g)).ok_or(stuck)?;
                let rule = &s.pop[k as usize];
                theta = apply(&rule.update, &theta, Some(&saved), nregs);
                q = rule.to;
            }
            _ => unreachable!("markers never occur in nested words"),
        }
    }
    match &s.final_out[q as usize] {
        Some(rhs) => Ok(substitute(rhs, &theta, None)),
        None => Err(Error::NoFinalOutput(s.states[q as usize].clone())),
    }
}

/// One state, one register: a call stores `a X X`, the return restores it.
/// On `(c r)^n` the output is `a^(2^n - 1)`.
pub fn exponential_stst() -> Stst {
    let sigma = StructuredAlphabet::shared(&["c"], &["r"]).expect("alphabet");
    Stst::new(
        sigma,
        vec!["a".into()],
        vec!["q".into()],
        0,
        vec!["g".into()],
        vec!["X".into()],
        vec![StstPush { from: 0, call: 0, to: 0, gamma: 0, update: vec![(0, vec![Sym::Out(0), Sym::Reg(0), Sym::Reg(0)])] }],
        vec![StstPop { from: 0, ret: 0, gamma: 0, to: 0, update: vec![(0, vec![Sym::Prev(0)])] }],
        vec![Some(vec![Sym::Reg(0)])],
    )
    .expect("well-formed")
}

/// An output-matrix entry. `Bad` stands for several competing words: the
/// entry lies on a cycle, or the machine is not functional there.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Entry {
    Word(Vec<Sym>),
    Bad,
}

fn seq(a: &Entry, b: &Entry) -> Entry {
    match (a, b) {
        (Entry::Word(x), Entry::Word(y)) => Entry::Word(x.iter().chain(y).copied().collect()),
        _ => Entry::Bad,
    }
}

/// A square matrix of optional words; absent entries are the empty set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordRel {
    n: usize,
    cells: Vec<Option<Entry>>,
}

impl WordRel {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Entry> {
        self.cells[i * self.n + j].as_ref()
    }

    /// Adds `e` to entry `(i, j)`; a second word makes it `Bad`.
    pub fn add(&mut self, i: usize, j: usize, e: Entry) {
        let cell = &mut self.cells[i * self.n + j];
        *cell = Some(match cell {
            None => e,
            Some(_) => Entry::Bad,
        });
    }

    pub fn support(&self) -> Rel {
        let n = self.n;
        Rel::from_pairs(n, (0..n * n).filter(|&k| self.cells[k].is_some()).map(|k| (k / n, k % n)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Entry)> + '_ {
        self.cells.iter().enumerate().filter_map(|(k, c)| c.as_ref().map(|e| (k / self.n, k % self.n, e)))
    }
}

impl RelAlgebra for WordRel {
    fn zero(n: usize) -> Self {
        WordRel { n, cells: vec![None; n * n] }
    }
    fn one(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.add(i, i, Entry::Word(Vec::new()));
        }
        m
    }
    fn then(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (i, j, a) in self.entries() {
            for k in 0..n {
                if let Some(b) = other.get(j, k) {
                    out.add(i, k, seq(a, b));
                }
            }
        }
        out
    }
    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, e) in other.entries() {
            out.add(i, j, e.clone());
        }
        out
    }
    /// Least fixpoint of `S = 1 + S M`; an entry reached twice becomes `Bad`.
    fn star(&self) -> Self {
        let mut s = Self::one(self.n);
        loop {
            let next = Self::one(self.n).join(&s.then(self));
            if next == s {
                return s;
            }
            s = next;
        }
    }
}

/// Word-valued traversal: entry `(p, q)` of block `ll` is the output of the
/// run entering from the left in `p` and leaving to the left in `q`.
pub type OutputMatrix = Quad<WordRel>;

pub fn concat_output_matrices(m1: &OutputMatrix, m2: &OutputMatrix) -> OutputMatrix {
    m1.concat(m2)
}

/// Wraps `m` between `c` and `r`; each rule contributes its output word.
pub fn wrap_output_matrix(t: &TwoVpt, c: Letter, m: &OutputMatrix, r: Letter) -> OutputMatrix {
    let a = &t.automaton;
    let rules = gamma_rules_by(a, c, r, |rel: &mut WordRel, k, rule| {
        let w = t.outputs[k].iter().map(|&o| Sym::Out(o)).collect();
        rel.add(rule.from as usize, rule.to as usize, Entry::Word(w));
    });
    Quad::wrap(m, &rules, a.num_states())
}

/// Output matrix of a concrete word.
pub fn output_matrix(t: &TwoVpt, w: &NestedWord) -> OutputMatrix {
    let n = t.automaton.num_states();
    w.fold(|| Quad::unit(n), |u, v| u.concat(&v), |c, m, r| wrap_output_matrix(t, c, &m, r))
}

/// The traversal obtained by forgetting the words.
pub fn erase(m: &OutputMatrix) -> Traversal {
    Quad { ll: m.ll.support(), lr: m.lr.support(), rl: m.rl.support(), rr: m.rr.support() }
}

const BLOCKS: [&str; 4] = ["ll", "lr", "rl", "rr"];

fn blocks<R>(q: &Quad<R>) -> [&R; 4] {
    [&q.ll, &q.lr, &q.rl, &q.rr]
}

/// Registers, one per traversal entry occurring in some class.
struct Registers {
    n: usize,
    index: HashMap<(usize, usize, usize), u32>,
    names: Vec<String>,
}

impl Registers {
    fn new(elements: &[Traversal], n: usize) -> Registers {
        let mut keys: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        for e in elements {
            for (k, b) in blocks(e).into_iter().enumerate() {
                keys.extend(b.pairs().map(|(p, q)| (k, p, q)));
            }
        }
        let names = keys.iter().map(|&(k, p, q)| format!("{}{p}_{q}", BLOCKS[k])).collect();
        let index = keys.into_iter().enumerate().map(|(i, key)| (key, i as u32)).collect();
        Registers { n, index, names }
    }

    /// The class `e` with each entry holding its own register.
    fn symbolic(&self, e: &Traversal, prev: bool) -> OutputMatrix {
        let mut out: [WordRel; 4] = std::array::from_fn(|_| WordRel::zero(self.n));
        for (k, b) in blocks(e).into_iter().enumerate() {
            for (p, q) in b.pairs() {
                let x = self.index[&(k, p, q)];
                out[k].add(p, q, Entry::Word(vec![if prev { Sym::Prev(x) } else { Sym::Reg(x) }]));
            }
        }
        let [ll, lr, rl, rr] = out;
        Quad { ll, lr, rl, rr }
    }

    /// Assignments for every entry of `target`, read from `m`.
    fn update(&self, target: &Traversal, m: &OutputMatrix, what: &str) -> Result<Update> {
        let mut u = Vec::new();
        for (k, (b, mb)) in blocks(target).into_iter().zip(blocks(m)).enumerate() {
            for (p, q) in b.pairs() {
                match mb.get(p, q) {
                    Some(Entry::Word(w)) => u.push((self.index[&(k, p, q)], w.clone())),
                    Some(Entry::Bad) => {
                        return Err(Error::ProducingCycle(format!("{what}: entry {}{p}_{q}", BLOCKS[k])));
                    }
                    None => unreachable!("symbolic support matches the traversal"),
                }
            }
        }
        u.sort();
        Ok(u)
    }
}

/// Which copy of the registers a pop update reads the stacked prefix from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Primed registers hold the stacked valuation.
    #[default]
    StackedPrimed,
    /// Primed registers hold the inner valuation.
    InnerPrimed,
}

/// The streaming transducer reading the class of the current level's prefix
/// and keeping one register per entry of that class. A call stacks the
/// class and the registers; a return combines the stacked prefix with the
/// wrapped inner class.
pub fn d2vpt_to_stst(t: &TwoVpt, cap: usize, exec: Exec) -> Result<Stst> {
    d2vpt_to_stst_oriented(t, cap, exec, Orientation::StackedPrimed)
}

pub fn d2vpt_to_stst_oriented(t: &TwoVpt, cap: usize, exec: Exec, orientation: Orientation) -> Result<Stst> {
    let outer_primed = orientation == Orientation::StackedPrimed;
    if t.lookaround.is_some() {
        return Err(Error::LookaroundUnsupported);
    }
    if !t.is_deterministic() {
        return Err(Error::NotDeterministic("transducer".into()));
    }
    let a = &t.automaton;
    let n = a.num_states();
    let alg = compute_algebra(a, cap, exec)?;
    let sigma = a.alphabet().clone();
    let (nc, nr) = (sigma.num_calls() as u32, sigma.num_returns() as u32);
    let h = alg.len() as u32;
    let regs = Registers::new(alg.elements(), n);
    let gamma = |c: u32, m: u32| c * h + m;

    let mut push = Vec::new();
    for m in 0..h {
        let keep = regs.update(alg.element(m), &regs.symbolic(alg.element(m), false), "push")?;
        for c in 0..nc {
            push.push(StstPush { from: m, call: c, to: alg.unit(), gamma: gamma(c, m), update: keep.clone() });
        }
    }
    let jobs: Vec<(u32, u32, u32, u32)> =
        (0..h).flat_map(|e| (0..nr).flat_map(move |r| (0..nc).flat_map(move |c| (0..h).map(move |m| (e, r, c, m))))).collect();
    let pops = exec.map(&jobs, |&(e, r, c, m)| -> Result<StstPop> {
        let wrapped = alg.wrap(c, e, r);
        let to = alg.concat(m, wrapped);
        let inner =
            wrap_output_matrix(t, Letter::Call(c), &regs.symbolic(alg.element(e), !outer_primed), Letter::Ret(r));
        let whole = regs.symbolic(alg.element(m), outer_primed).concat(&inner);
        let update = regs.update(alg.element(to), &whole, "pop")?;
        Ok(StstPop { from: e, ret: r, gamma: gamma(c, m), to, update })
    });
    let pop = pops.into_iter().collect::<Result<Vec<_>>>()?;

    let initial = a.initial() as usize;
    let mut final_out = Vec::new();
    for m in 0..h {
        let marked = wrap_output_matrix(t, Letter::Left, &regs.symbolic(alg.element(m), false), Letter::Right);
        let mut out = None;
        for f in a.finals() {
            match marked.lr.get(initial, f as usize) {
                None => {}
                Some(Entry::Word(w)) if out.is_none() => out = Some(w.clone()),
                Some(_) => return Err(Error::ProducingCycle(format!("final output of class {m}"))),
            }
        }
        final_out.push(out);
    }
    let stack = (0..nc)
        .flat_map(|c| (0..h).map(move |m| (c, m)))
        .map(|(c, m)| format!("{}.m{m}", sigma.calls()[c as usize]))
        .collect();
    Stst::new(
        sigma,
        t.output_alphabet.clone(),
        (0..h).map(|m| format!("m{m}")).collect(),
        alg.unit(),
        stack,
        regs.names,
        push,
        pop,
        final_out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::enumerate_nested_words;
    use crate::samples::{sorting_transducer, translation_fixtures};
    use crate::twovpa::{read_index, successors, traversal_oracle, Config};
    use crate::twovpt::{evaluate_d2vpt, EvalMode};
    use crate::alphabet::Dir;
    use crate::twovpa::DEFAULT_ALGEBRA_CAP;

    #[test]
    fn exponential_witness() {
        let s = exponential_stst();
        let sigma = s.alphabet().clone();
        for n in 0..=10 {
            let w = NestedWord::parse(&"c r ".repeat(n), &sigma).unwrap();
            assert_eq!(evaluate_stst(&s, &w).unwrap().len(), (1usize << n) - 1);
        }
    }

    #[test]
    fn copy_with_one_register() {
        let text = "kind: stst\ncalls: c\nreturns: r\noutput-alphabet: c r\nstates: q\ninitial: q\nstack: g\nregisters: X\nupd-push q c -> q g { X <- X c }\nupd-pop q r g -> q { X <- X' X r }\nfinal-out q -> X\n";
        let s = crate::format::parse_machine(text).unwrap().into_stst().unwrap();
        assert!(s.is_copyless());
        let w = NestedWord::parse("c c r r", s.alphabet()).unwrap();
        assert_eq!(s.render(&evaluate_stst(&s, &w).unwrap()), "c c r r");
        for w in enumerate_nested_words(s.alphabet(), 8) {
            assert_eq!(s.render(&evaluate_stst(&s, &w).unwrap()), w.to_string());
        }
    }

    /// Output of the run on the bare word from `p` entering on side `from`,
    /// with the exit side and state; `None` if it loops or blocks.
    fn run_on(t: &TwoVpt, w: &NestedWord, p: u32, from: Dir) -> Option<(Dir, u32, Vec<u32>)> {
        let word = w.letters().to_vec();
        let pos = if from == Dir::Fwd { 0 } else { word.len() };
        let mut c = Config { state: p, pos, dir: from, stack: vec![] };
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        loop {
            if read_index(word.len(), c.pos, c.dir).is_none() {
                let side = if c.dir == Dir::Fwd { Dir::Fwd } else { Dir::Bwd };
                return Some((side, c.state, out));
            }
            if !seen.insert(c.clone()) {
                return None;
            }
            let mut next = successors(t, &word, &[], &c);
            assert!(next.len() <= 1);
            let (n, o) = next.pop()?;
            out.extend(o);
            c = n;
        }
    }

    #[test]
    fn matrix_fold_matches_runs() {
        for (name, t) in translation_fixtures() {
            let n = t.automaton.num_states();
            for w in enumerate_nested_words(t.alphabet(), 6) {
                let m = output_matrix(&t, &w);
                assert_eq!(erase(&m), traversal_oracle(&t.automaton, &w), "{name} {w}");
                for p in 0..n {
                    for from in [Dir::Fwd, Dir::Bwd] {
                        let (to_left, to_right) = if from == Dir::Fwd { (&m.ll, &m.lr) } else { (&m.rl, &m.rr) };
                        let expect = run_on(&t, &w, p as u32, from);
                        for q in 0..n {
                            let got = match (to_left.get(p, q), to_right.get(p, q)) {
                                (Some(Entry::Word(x)), None) => Some((Dir::Bwd, x.clone())),
                                (None, Some(Entry::Word(x))) => Some((Dir::Fwd, x.clone())),
                                (None, None) => None,
                                other => panic!("{name} {w}: {other:?}"),
                            };
                            let want = expect.as_ref().filter(|e| e.1 == q as u32).map(|e| {
                                (e.0, e.2.iter().map(|&o| Sym::Out(o)).collect::<Vec<_>>())
                            });
                            assert_eq!(got, want, "{name} {w} p={p} q={q}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unit_is_neutral() {
        let t = sorting_transducer(2);
        let w = NestedWord::parse("1 2 r r 2 r", t.alphabet()).unwrap();
        let m = output_matrix(&t, &w);
        let u = OutputMatrix::unit(t.automaton.num_states());
        assert_eq!(u.concat(&m), m);
        assert_eq!(m.concat(&u), m);
    }

    #[test]
    fn translation_agrees_with_evaluation() {
        for (name, t) in translation_fixtures() {
            let s = d2vpt_to_stst(&t, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
            for w in enumerate_nested_words(t.alphabet(), 8) {
                let want = evaluate_d2vpt(&t, &w, EvalMode::Checked).ok();
                assert_eq!(evaluate_stst(&s, &w).ok(), want, "{name} {w}");
            }
        }
    }

    #[test]
    fn only_one_orientation_is_valid() {
        let t = sorting_transducer(2);
        let s = d2vpt_to_stst_oriented(&t, DEFAULT_ALGEBRA_CAP, Exec::Sequential, Orientation::InnerPrimed).unwrap();
        let w = NestedWord::parse("2 r 1 r", t.alphabet()).unwrap();
        let want = evaluate_d2vpt(&t, &w, EvalMode::Checked).ok();
        assert!(want.is_some());
        assert_ne!(evaluate_stst(&s, &w).ok(), want);
    }
}
