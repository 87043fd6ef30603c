//! One-way visibly pushdown automata and transducers.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::alphabet::{Letter, StructuredAlphabet};
use crate::error::{Error, Result};
use crate::nested::NestedWord;
use crate::rel::{BitSet, Rel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PushRule {
    pub from: u32,
    pub call: u32,
    pub to: u32,
    pub gamma: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PopRule {
    pub from: u32,
    pub ret: u32,
    pub gamma: u32,
    pub to: u32,
}

#[derive(Clone, Debug)]
pub struct Vpa {
    alphabet: Arc<StructuredAlphabet>,
    states: Vec<String>,
    initial: Vec<u32>,
    finals: Vec<bool>,
    stack: Vec<String>,
    push: Vec<PushRule>,
    pop: Vec<PopRule>,
    push_index: HashMap<(u32, u32), Vec<u32>>,
    pop_index: HashMap<(u32, u32, u32), Vec<u32>>,
}

impl PartialEq for Vpa {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.states == other.states
            && self.initial == other.initial
            && self.finals == other.finals
            && self.stack == other.stack
            && self.push == other.push
            && self.pop == other.pop
    }
}

impl Vpa {
    pub fn new(
        alphabet: Arc<StructuredAlphabet>,
        states: Vec<String>,
        initial: Vec<u32>,
        finals: Vec<u32>,
        stack: Vec<String>,
        push: Vec<PushRule>,
        pop: Vec<PopRule>,
    ) -> Result<Vpa> {
        let n = states.len() as u32;
        let g = stack.len() as u32;
        let bad = |m: String| Err(Error::InvalidMachine(m));
        if initial.iter().chain(&finals).any(|&q| q >= n) {
            return bad("initial or final state out of range".into());
        }
        let mut final_flags = vec![false; n as usize];
        for &f in &finals {
            final_flags[f as usize] = true;
        }
        let mut push_index: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (k, r) in push.iter().enumerate() {
            if r.from >= n || r.to >= n || r.gamma >= g || r.call as usize >= alphabet.num_calls() {
                return bad(format!("push rule {} out of range", k + 1));
            }
            push_index.entry((r.from, r.call)).or_default().push(k as u32);
        }
        let mut pop_index: HashMap<(u32, u32, u32), Vec<u32>> = HashMap::new();
        for (k, r) in pop.iter().enumerate() {
            if r.from >= n || r.to >= n || r.gamma >= g || r.ret as usize >= alphabet.num_returns() {
                return bad(format!("pop rule {} out of range", k + 1));
            }
            pop_index.entry((r.from, r.ret, r.gamma)).or_default().push(k as u32);
        }
        let mut initial = initial;
        initial.sort_unstable();
        initial.dedup();
        Ok(Vpa { alphabet, states, initial, finals: final_flags, stack, push, pop, push_index, pop_index })
    }

    pub fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &[u32] {
        &self.initial
    }

    pub fn is_final(&self, q: u32) -> bool {
        self.finals[q as usize]
    }

    pub fn finals(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.states.len() as u32).filter(|&q| self.finals[q as usize])
    }

    pub fn stack(&self) -> &[String] {
        &self.stack
    }

    pub fn push_rules(&self) -> &[PushRule] {
        &self.push
    }

    pub fn pop_rules(&self) -> &[PopRule] {
        &self.pop
    }

    pub fn push_from(&self, q: u32, c: u32) -> impl Iterator<Item = (u32, &PushRule)> + '_ {
        self.push_index.get(&(q, c)).into_iter().flatten().map(|&k| (k, &self.push[k as usize]))
    }

    pub fn pop_from(&self, q: u32, r: u32, g: u32) -> impl Iterator<Item = (u32, &PopRule)> + '_ {
        self.pop_index.get(&(q, r, g)).into_iter().flatten().map(|&k| (k, &self.pop[k as usize]))
    }

    fn initial_set(&self) -> BitSet {
        BitSet::from_iter(self.num_states(), self.initial.iter().map(|&q| q as usize))
    }

    fn final_set(&self) -> BitSet {
        BitSet::from_iter(self.num_states(), self.finals().map(|q| q as usize))
    }

    pub fn is_deterministic(&self) -> bool {
        self.initial.len() <= 1
            && self.push_index.values().all(|v| v.len() <= 1)
            && self.pop_index.values().all(|v| v.len() <= 1)
    }

    /// Reverse maps are injective: a push target and stack symbol determine the
    /// source, a pop target and popped symbol determine the source, and there is
    /// at most one final state.
    pub fn is_codeterministic(&self) -> bool {
        let mut seen = HashSet::new();
        let push_ok = self.push.iter().all(|r| seen.insert((r.to, r.call, r.gamma)));
        let mut seen = HashSet::new();
        let pop_ok = self.pop.iter().all(|r| seen.insert((r.to, r.ret, r.gamma)));
        push_ok && pop_ok && self.finals().count() <= 1
    }

    /// Pairs `(q1, y)` linked by a push on `c`, an inner segment with summary
    /// `inner`, and a pop on `r` of the same stack symbol.
    pub fn update(&self, c: u32, inner: &Rel, r: u32) -> Rel {
        let n = self.num_states();
        let mut out = Rel::empty(n);
        for p in self.push.iter().filter(|p| p.call == c) {
            for q3 in inner.successors(p.to as usize) {
                for (_, pop) in self.pop_from(q3 as u32, r, p.gamma) {
                    out.insert(p.from as usize, pop.to as usize);
                }
            }
        }
        out
    }

    /// States reachable on `w` from an initial state.
    pub fn run(&self, w: &NestedWord) -> BitSet {
        let n = self.num_states();
        let mut frames: Vec<(Rel, u32)> = Vec::new();
        let mut cur = Rel::from_pairs(n, self.initial.iter().map(|&q| (q as usize, q as usize)));
        for &a in w.letters() {
            match a {
                Letter::Call(c) => {
                    let mut inner = Rel::empty(n);
                    for (_, q1) in cur.pairs() {
                        for (_, p) in self.push_from(q1 as u32, c) {
                            inner.insert(p.to as usize, p.to as usize);
                        }
                    }
                    frames.push((std::mem::replace(&mut cur, inner), c));
                }
                Letter::Ret(r) => {
                    let (outer, c) = frames.pop().expect("well-nested");
                    cur = outer.then(&self.update(c, &cur, r));
                }
                _ => unreachable!("markers never occur in nested words"),
            }
        }
        let mut out = BitSet::new(n);
        for (_, q) in cur.pairs() {
            out.insert(q);
        }
        out
    }

    pub fn accepts(&self, w: &NestedWord) -> bool {
        self.run(w).intersects(&self.final_set())
    }
}

pub fn run_vpa(a: &Vpa, w: &NestedWord) -> BitSet {
    a.run(w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    NonEmpty(NestedWord),
}

impl Emptiness {
    pub fn is_empty(&self) -> bool {
        matches!(self, Emptiness::Empty)
    }

    pub fn witness(&self) -> Option<&NestedWord> {
        match self {
            Emptiness::Empty => None,
            Emptiness::NonEmpty(w) => Some(w),
        }
    }
}

#[derive(Clone, Copy)]
enum Deriv {
    Eps,
    Concat(u32),
    Wrap { call: u32, inner: (u32, u32), ret: u32 },
}

/// Summary facts `(p, q)`: some well-nested word leads from `p` to `q` with an
/// unchanged stack. Settled shortest-first, one derivation kept per fact.
struct Summaries {
    best: HashMap<(u32, u32), (usize, Deriv)>,
}

impl Summaries {
    fn compute(a: &Vpa) -> Summaries {
        let n = a.num_states() as u32;
        let mut best: HashMap<(u32, u32), (usize, Deriv)> = HashMap::new();
        let mut settled: HashSet<(u32, u32)> = HashSet::new();
        let mut by_first: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut by_second: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut pushes_into: HashMap<u32, Vec<&PushRule>> = HashMap::new();
        for p in &a.push {
            pushes_into.entry(p.to).or_default().push(p);
        }
        let mut pops_from: HashMap<u32, Vec<&PopRule>> = HashMap::new();
        for p in &a.pop {
            pops_from.entry(p.from).or_default().push(p);
        }
        let offer = |best: &mut HashMap<(u32, u32), (usize, Deriv)>,
                         heap: &mut BinaryHeap<Reverse<(usize, u32, u32)>>,
                         key: (u32, u32),
                         len: usize,
                         d: Deriv| {
            let better = best.get(&key).is_none_or(|&(l, _)| len < l);
            if better {
                best.insert(key, (len, d));
                heap.push(Reverse((len, key.0, key.1)));
            }
        };
        for q in 0..n {
            offer(&mut best, &mut heap, (q, q), 0, Deriv::Eps);
        }
        while let Some(Reverse((len, p, q))) = heap.pop() {
            if best[&(p, q)].0 != len || !settled.insert((p, q)) {
                continue;
            }
            by_first.entry(p).or_default().push(q);
            by_second.entry(q).or_default().push(p);
            for &x in by_first.get(&q).map(|v| v.as_slice()).unwrap_or(&[]) {
                let l2 = best[&(q, x)].0;
                offer(&mut best, &mut heap, (p, x), len + l2, Deriv::Concat(q));
            }
            for &y in by_second.get(&p).map(|v| v.as_slice()).unwrap_or(&[]) {
                let l0 = best[&(y, p)].0;
                offer(&mut best, &mut heap, (y, q), l0 + len, Deriv::Concat(p));
            }
            for push in pushes_into.get(&p).map(|v| v.as_slice()).unwrap_or(&[]) {
                for pop in pops_from.get(&q).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if pop.gamma == push.gamma {
                        let d = Deriv::Wrap { call: push.call, inner: (p, q), ret: pop.ret };
                        offer(&mut best, &mut heap, (push.from, pop.to), len + 2, d);
                    }
                }
            }
        }
        Summaries { best }
    }

    fn word(&self, key: (u32, u32), out: &mut Vec<Letter>) {
        match self.best[&key].1 {
            Deriv::Eps => {}
            Deriv::Concat(mid) => {
                self.word((key.0, mid), out);
                self.word((mid, key.1), out);
            }
            Deriv::Wrap { call, inner, ret } => {
                out.push(Letter::Call(call));
                self.word(inner, out);
                out.push(Letter::Ret(ret));
            }
        }
    }
}

/// Emptiness by the summary fixpoint; the witness is a shortest accepted word.
pub fn is_empty_vpa(a: &Vpa) -> Emptiness {
    let s = Summaries::compute(a);
    let best = a
        .initial
        .iter()
        .flat_map(|&i| a.finals().map(move |f| (i, f)))
        .filter_map(|k| s.best.get(&k).map(|&(l, _)| (l, k)))
        .min();
    match best {
        None => Emptiness::Empty,
        Some((_, key)) => {
            let mut letters = Vec::new();
            s.word(key, &mut letters);
            Emptiness::NonEmpty(NestedWord::from_letters(&a.alphabet, letters).expect("derived word is nested"))
        }
    }
}

/// Summary-set determinization. A state is the relation between the state at
/// the start of the current level and the current state.
pub fn determinize_vpa(a: &Vpa) -> Vpa {
    let n = a.num_states();
    let num_calls = a.alphabet.num_calls() as u32;
    let num_rets = a.alphabet.num_returns() as u32;
    let mut states: Vec<Rel> = Vec::new();
    let mut index: HashMap<Rel, u32> = HashMap::new();
    let mut intern = |r: Rel, states: &mut Vec<Rel>| -> u32 {
        *index.entry(r.clone()).or_insert_with(|| {
            states.push(r);
            states.len() as u32 - 1
        })
    };
    let start = Rel::from_pairs(n, a.initial.iter().map(|&q| (q as usize, q as usize)));
    intern(start, &mut states);
    let mut stack: Vec<(u32, u32)> = Vec::new();
    let mut push = Vec::new();
    let mut pop = Vec::new();
    let mut done_states = 0;
    let mut pop_pairs_done: HashSet<(u32, u32)> = HashSet::new();
    loop {
        let mut progressed = false;
        while done_states < states.len() {
            let s = done_states as u32;
            done_states += 1;
            progressed = true;
            for c in 0..num_calls {
                let mut inner = Rel::empty(n);
                for (_, q1) in states[s as usize].pairs() {
                    for (_, p) in a.push_from(q1 as u32, c) {
                        inner.insert(p.to as usize, p.to as usize);
                    }
                }
                let to = intern(inner, &mut states);
                let gamma = stack.len() as u32;
                stack.push((s, c));
                push.push(PushRule { from: s, call: c, to, gamma });
            }
        }
        for cur in 0..states.len() as u32 {
            for g in 0..stack.len() as u32 {
                if !pop_pairs_done.insert((cur, g)) {
                    continue;
                }
                progressed = true;
                let (prev, c) = stack[g as usize];
                for r in 0..num_rets {
                    let upd = a.update(c, &states[cur as usize], r);
                    let next = states[prev as usize].then(&upd);
                    let to = intern(next, &mut states);
                    pop.push(PopRule { from: cur, ret: r, gamma: g, to });
                }
            }
        }
        if !progressed {
            break;
        }
    }
    let init = a.initial_set();
    let fin = a.final_set();
    let finals = (0..states.len() as u32)
        .filter(|&s| states[s as usize].pairs().any(|(p, q)| init.contains(p) && fin.contains(q)))
        .collect();
    let names = (0..states.len()).map(|i| format!("d{i}")).collect();
    let stack_names = stack.iter().map(|(s, c)| format!("d{s}.{}", a.alphabet.calls()[*c as usize])).collect();
    Vpa::new(a.alphabet.clone(), names, vec![0], finals, stack_names, push, pop).expect("well-formed determinization")
}

/// Self-product whose runs pair two runs of `a`, flagging once they differ in
/// their initial state or in some transition.
pub fn is_unambiguous(a: &Vpa) -> bool {
    let n = a.num_states() as u32;
    let m = a.stack.len() as u32;
    let st = |q1: u32, q2: u32, d: bool| (q1 * n + q2) * 2 + d as u32;
    let mut push = Vec::new();
    for (k1, p1) in a.push.iter().enumerate() {
        for (k2, p2) in a.push.iter().enumerate() {
            if p1.call != p2.call {
                continue;
            }
            for d in [false, true] {
                push.push(PushRule {
                    from: st(p1.from, p2.from, d),
                    call: p1.call,
                    to: st(p1.to, p2.to, d || k1 != k2),
                    gamma: p1.gamma * m + p2.gamma,
                });
            }
        }
    }
    let mut pop = Vec::new();
    for (k1, p1) in a.pop.iter().enumerate() {
        for (k2, p2) in a.pop.iter().enumerate() {
            if p1.ret != p2.ret {
                continue;
            }
            for d in [false, true] {
                pop.push(PopRule {
                    from: st(p1.from, p2.from, d),
                    ret: p1.ret,
                    gamma: p1.gamma * m + p2.gamma,
                    to: st(p1.to, p2.to, d || k1 != k2),
                });
            }
        }
    }
    let mut initial = Vec::new();
    for &i1 in &a.initial {
        for &i2 in &a.initial {
            initial.push(st(i1, i2, i1 != i2));
        }
    }
    let finals = a.finals().flat_map(|f1| a.finals().map(move |f2| st(f1, f2, true))).collect();
    let names = (0..n * n * 2).map(|i| format!("p{i}")).collect();
    let stack = (0..(m * m).max(1)).map(|i| format!("g{i}")).collect();
    let prod = Vpa::new(a.alphabet.clone(), names, initial, finals, stack, push, pop).expect("product");
    is_empty_vpa(&prod).is_empty()
}

/// A nondeterministic finite automaton over plain symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: Vec<u32>,
    pub finals: Vec<u32>,
    pub trans: Vec<(u32, u32, u32)>,
}

impl Nfa {
    pub fn symbol(&self, name: &str) -> Option<u32> {
        self.alphabet.iter().position(|s| s == name).map(|i| i as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states.len() as u32;
        let k = self.alphabet.len() as u32;
        let ok = self.initial.iter().chain(&self.finals).all(|&q| q < n)
            && self.trans.iter().all(|&(p, a, q)| p < n && q < n && a < k);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMachine("fsa reference out of range".into()))
        }
    }

    pub fn step(&self, from: &BitSet, a: u32) -> BitSet {
        let mut out = BitSet::new(self.states.len());
        for &(p, b, q) in &self.trans {
            if b == a && from.contains(p as usize) {
                out.insert(q as usize);
            }
        }
        out
    }

    pub fn accepts_symbols(&self, word: &[u32]) -> bool {
        let mut cur = BitSet::from_iter(self.states.len(), self.initial.iter().map(|&q| q as usize));
        for &a in word {
            cur = self.step(&cur, a);
        }
        self.finals.iter().any(|&f| cur.contains(f as usize))
    }

    pub fn accepts_names<S: AsRef<str>>(&self, word: &[S]) -> bool {
        let mut syms = Vec::with_capacity(word.len());
        for s in word {
            match self.symbol(s.as_ref()) {
                Some(a) => syms.push(a),
                None => return false,
            }
        }
        self.accepts_symbols(&syms)
    }

    /// Subset construction restricted to reachable subsets.
    pub fn determinize(&self) -> Nfa {
        let n = self.states.len();
        let start = BitSet::from_iter(n, self.initial.iter().map(|&q| q as usize));
        let mut sets = vec![start.clone()];
        let mut index = HashMap::from([(start, 0u32)]);
        let mut trans = Vec::new();
        let mut queue = VecDeque::from([0u32]);
        while let Some(s) = queue.pop_front() {
            for a in 0..self.alphabet.len() as u32 {
                let next = self.step(&sets[s as usize], a);
                let id = *index.entry(next.clone()).or_insert_with(|| {
                    sets.push(next);
                    queue.push_back(sets.len() as u32 - 1);
                    sets.len() as u32 - 1
                });
                trans.push((s, a, id));
            }
        }
        let finals = (0..sets.len() as u32)
            .filter(|&s| self.finals.iter().any(|&f| sets[s as usize].contains(f as usize)))
            .collect();
        Nfa {
            alphabet: self.alphabet.clone(),
            states: (0..sets.len()).map(|i| format!("s{i}")).collect(),
            initial: vec![0],
            finals,
            trans,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        let mut seen = HashSet::new();
        self.initial.len() <= 1 && self.trans.iter().all(|&(p, a, _)| seen.insert((p, a)))
    }

    /// The automaton accepting every word over `alphabet`.
    pub fn universal(alphabet: Vec<String>) -> Nfa {
        let trans = (0..alphabet.len() as u32).map(|a| (0, a, 0)).collect();
        Nfa { alphabet, states: vec!["all".into()], initial: vec![0], finals: vec![0], trans }
    }
}

/// Synchronized product reading input symbols; the automaton `m` names its
/// symbols like the alphabet of `a`.
pub fn product_vpa_fsa(a: &Vpa, m: &Nfa) -> Vpa {
    let k = m.states.len() as u32;
    let st = |q: u32, p: u32| q * k + p;
    let sym = |l: Letter| m.symbol(a.alphabet.name(l));
    let mut push = Vec::new();
    for r in &a.push {
        if let Some(s) = sym(Letter::Call(r.call)) {
            for &(p, b, p2) in &m.trans {
                if b == s {
                    push.push(PushRule { from: st(r.from, p), call: r.call, to: st(r.to, p2), gamma: r.gamma });
                }
            }
        }
    }
    let mut pop = Vec::new();
    for r in &a.pop {
        if let Some(s) = sym(Letter::Ret(r.ret)) {
            for &(p, b, p2) in &m.trans {
                if b == s {
                    pop.push(PopRule { from: st(r.from, p), ret: r.ret, gamma: r.gamma, to: st(r.to, p2) });
                }
            }
        }
    }
    let initial = a.initial.iter().flat_map(|&i| m.initial.iter().map(move |&p| st(i, p))).collect();
    let finals = a.finals().flat_map(|f| m.finals.iter().map(move |&p| st(f, p))).collect();
    let names = (0..a.num_states() as u32)
        .flat_map(|q| (0..k).map(move |p| (q, p)))
        .map(|(q, p)| format!("{}.{}", a.states[q as usize], m.states[p as usize]))
        .collect();
    Vpa::new(a.alphabet.clone(), names, initial, finals, a.stack.clone(), push, pop).expect("product")
}

/// The state at every boundary `0..=|w|` of the accepting run of an
/// unambiguous automaton, or `NoAcceptingRun`.
pub fn unique_accepting_run(a: &Vpa, w: &NestedWord) -> Result<Vec<u32>> {
    let n = a.num_states();
    let letters = w.letters();
    // Inner summaries and sibling-suffix summaries per call position.
    let mut inner: Vec<Option<Rel>> = vec![None; letters.len()];
    let mut after: Vec<Option<Rel>> = vec![None; letters.len()];
    let mut children: Vec<Vec<(usize, Rel)>> = vec![Vec::new()];
    for (i, &l) in letters.iter().enumerate() {
        match l {
            Letter::Call(_) => children.push(Vec::new()),
            Letter::Ret(r) => {
                let kids = children.pop().expect("well-nested");
                let summary = close_hedge(n, &kids, &mut after);
                let j = w.partner(i + 1) - 1;
                let Letter::Call(c) = letters[j] else { unreachable!() };
                let u = a.update(c, &summary, r);
                inner[j] = Some(summary);
                children.last_mut().expect("well-nested").push((j, u));
            }
            _ => unreachable!(),
        }
    }
    let top = children.pop().expect("top hedge");
    let whole = close_hedge(n, &top, &mut after);

    let fin = a.final_set();
    let good = whole.preimage(&fin);
    let start = a.initial.iter().copied().find(|&i| good.contains(i as usize)).ok_or(Error::NoAcceptingRun)?;
    let mut labels = Vec::with_capacity(letters.len() + 1);
    labels.push(start);
    let mut q = start;
    let mut target = fin;
    let mut frames: Vec<(u32, BitSet, BitSet)> = Vec::new();
    for (i, &l) in letters.iter().enumerate() {
        match l {
            Letter::Call(c) => {
                let j = w.partner(i + 1) - 1;
                let Letter::Ret(r) = letters[j] else { unreachable!() };
                let suffix_good = after[i].as_ref().expect("computed").preimage(&target);
                let summary = inner[i].as_ref().expect("computed");
                let mut chosen = None;
                for (_, p) in a.push_from(q, c) {
                    let mut t_in = BitSet::new(n);
                    for x in 0..n as u32 {
                        if a.pop_from(x, r, p.gamma).any(|(_, pp)| suffix_good.contains(pp.to as usize)) {
                            t_in.insert(x as usize);
                        }
                    }
                    if summary.row_set(p.to as usize).intersects(&t_in) {
                        chosen = Some((*p, t_in));
                        break;
                    }
                }
                let (p, t_in) = chosen.ok_or(Error::NoAcceptingRun)?;
                frames.push((p.gamma, std::mem::replace(&mut target, t_in), suffix_good));
                q = p.to;
            }
            Letter::Ret(r) => {
                let (gamma, outer, suffix_good) = frames.pop().expect("well-nested");
                let y = a
                    .pop_from(q, r, gamma)
                    .map(|(_, p)| p.to)
                    .find(|&y| suffix_good.contains(y as usize))
                    .ok_or(Error::NoAcceptingRun)?;
                q = y;
                target = outer;
            }
            _ => unreachable!(),
        }
        labels.push(q);
    }
    Ok(labels)
}

/// Multiplies the sibling summaries of a hedge, recording for each child the
/// summary of the siblings to its right.
fn close_hedge(n: usize, kids: &[(usize, Rel)], after: &mut [Option<Rel>]) -> Rel {
    let mut acc = Rel::identity(n);
    for (pos, u) in kids.iter().rev() {
        after[*pos] = Some(acc.clone());
        acc = u.then(&acc);
    }
    acc
}

/// A transducer: a Vpa plus an output word per rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Vpt {
    pub vpa: Vpa,
    pub output_alphabet: Vec<String>,
    /// Present when the output alphabet is itself structured.
    pub output_structure: Option<Arc<StructuredAlphabet>>,
    pub push_out: Vec<Vec<u32>>,
    pub pop_out: Vec<Vec<u32>>,
}

impl Vpt {
    pub fn new(vpa: Vpa, output_alphabet: Vec<String>, push_out: Vec<Vec<u32>>, pop_out: Vec<Vec<u32>>) -> Result<Vpt> {
        if push_out.len() != vpa.push.len() || pop_out.len() != vpa.pop.len() {
            return Err(Error::InvalidMachine("one output per rule required".into()));
        }
        let k = output_alphabet.len() as u32;
        if push_out.iter().chain(&pop_out).flatten().any(|&s| s >= k) {
            return Err(Error::InvalidMachine("output symbol out of range".into()));
        }
        Ok(Vpt { vpa, output_alphabet, output_structure: None, push_out, pop_out })
    }

    /// Declares the output alphabet as structured: names are calls then returns.
    pub fn with_structure(mut self, structure: Arc<StructuredAlphabet>) -> Result<Vpt> {
        let names: Vec<String> = structure.calls().iter().chain(structure.returns()).cloned().collect();
        if names != self.output_alphabet {
            return Err(Error::InvalidMachine("output structure does not match output alphabet".into()));
        }
        self.output_structure = Some(structure);
        Ok(self)
    }

    pub fn is_letter_to_letter(&self) -> bool {
        let Some(s) = &self.output_structure else { return false };
        let nc = s.num_calls() as u32;
        self.push_out.iter().all(|o| o.len() == 1 && o[0] < nc) && self.pop_out.iter().all(|o| o.len() == 1 && o[0] >= nc)
    }

    pub fn render(&self, out: &[u32]) -> String {
        out.iter().map(|&s| self.output_alphabet[s as usize].as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// Outputs of all accepting runs.
pub fn evaluate_vpt(t: &Vpt, w: &NestedWord) -> BTreeSet<Vec<u32>> {
    let a = &t.vpa;
    let mut cur: HashSet<(u32, Vec<u32>, Vec<u32>)> =
        a.initial.iter().map(|&q| (q, Vec::new(), Vec::new())).collect();
    for &l in w.letters() {
        let mut next = HashSet::new();
        for (q, stack, out) in &cur {
            match l {
                Letter::Call(c) => {
                    for (k, p) in a.push_from(*q, c) {
                        let mut s = stack.clone();
                        s.push(p.gamma);
                        let mut o = out.clone();
                        o.extend_from_slice(&t.push_out[k as usize]);
                        next.insert((p.to, s, o));
                    }
                }
                Letter::Ret(r) => {
                    let Some((&g, rest)) = stack.split_last() else { continue };
                    for (k, p) in a.pop_from(*q, r, g) {
                        let mut o = out.clone();
                        o.extend_from_slice(&t.pop_out[k as usize]);
                        next.insert((p.to, rest.to_vec(), o));
                    }
                }
                _ => unreachable!(),
            }
        }
        cur = next;
    }
    cur.into_iter().filter(|(q, _, _)| a.is_final(*q)).map(|(_, _, o)| o).collect()
}

/// Output of the unique accepting run of a functional transducer, if any.
pub fn evaluate_function(t: &Vpt, w: &NestedWord) -> Option<Vec<u32>> {
    evaluate_vpt(t, w).into_iter().next()
}

/// Realizable hedge summaries: the closure of the identity under prefixing a
/// wrapped child, `S = Update(c, S'', r) ; S'`.
pub fn realizable_summaries(a: &Vpa) -> Vec<Rel> {
    let n = a.num_states();
    let mut list = vec![Rel::identity(n)];
    let mut index = HashMap::from([(Rel::identity(n), 0usize)]);
    let mut updates: Vec<Vec<Rel>> = Vec::new();
    let mut i = 0;
    let nc = a.alphabet.num_calls() as u32;
    let nr = a.alphabet.num_returns() as u32;
    // Pairs (inner, suffix) are processed once each: when the later of the
    // two indices is first visited.
    while i < list.len() {
        let ups: Vec<Rel> = (0..nc).flat_map(|c| (0..nr).map(move |r| (c, r))).map(|(c, r)| a.update(c, &list[i], r)).collect();
        updates.push(ups);
        let mut fresh = Vec::new();
        for j in 0..=i {
            for (x, y) in [(i, j), (j, i)] {
                for u in &updates[x] {
                    fresh.push(u.then(&list[y]));
                }
            }
        }
        for s in fresh {
            if !index.contains_key(&s) {
                index.insert(s.clone(), list.len());
                list.push(s);
            }
        }
        i += 1;
    }
    list
}

/// Splits an unambiguous transducer into a co-deterministic letter-to-letter
/// annotator `t2` (run first) and a deterministic transducer `t1` reading the
/// annotations, so that `t1(t2(w)) = t(w)`.
pub fn codeterminize_l2l(t: &Vpt) -> Result<(Vpt, Vpt)> {
    let a = &t.vpa;
    if !is_unambiguous(a) {
        return Err(Error::NotUnambiguous);
    }
    let n = a.num_states();
    let sigma = &a.alphabet;
    let nc = sigma.num_calls() as u32;
    let nr = sigma.num_returns() as u32;
    let summ = realizable_summaries(a);
    let sidx: HashMap<&Rel, u32> = summ.iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
    let h = summ.len() as u32;
    let init = a.initial_set();
    let fin = a.final_set();

    // T2 over sigma, states = summaries (0 = identity), stack = (r, S').
    let mut ann_calls: Vec<String> = Vec::new();
    let mut ann_info: Vec<(u32, u32, u32, u32)> = Vec::new();
    let mut t2_push = Vec::new();
    let mut t2_push_out = Vec::new();
    let g2 = |r: u32, s: u32| r * h + s;
    for c in 0..nc {
        for r in 0..nr {
            for s_in in 0..h {
                let u = a.update(c, &summ[s_in as usize], r);
                for s_after in 0..h {
                    let s = u.then(&summ[s_after as usize]);
                    let from = sidx[&s];
                    let sym = ann_calls.len() as u32;
                    ann_calls.push(format!(
                        "{}|S{s_in}|{}|S{s_after}",
                        sigma.calls()[c as usize],
                        sigma.returns()[r as usize]
                    ));
                    ann_info.push((c, s_in, r, s_after));
                    t2_push.push(PushRule { from, call: c, to: s_in, gamma: g2(r, s_after) });
                    t2_push_out.push(vec![sym]);
                }
            }
        }
    }
    let mut t2_pop = Vec::new();
    let mut t2_pop_out = Vec::new();
    for r in 0..nr {
        for s in 0..h {
            t2_pop.push(PopRule { from: 0, ret: r, gamma: g2(r, s), to: s });
            t2_pop_out.push(vec![ann_calls.len() as u32 + r]);
        }
    }
    let t2_initial: Vec<u32> = (0..h)
        .filter(|&s| summ[s as usize].pairs().any(|(p, q)| init.contains(p) && fin.contains(q)))
        .collect();
    let annotated = Arc::new(StructuredAlphabet::new(&ann_calls, sigma.returns())?);
    let t2_vpa = Vpa::new(
        sigma.clone(),
        (0..h).map(|s| format!("S{s}")).collect(),
        t2_initial,
        vec![0],
        (0..nr).flat_map(|r| (0..h).map(move |s| (r, s))).map(|(r, s)| format!("{}|S{s}", sigma.returns()[r as usize])).collect(),
        t2_push,
        t2_pop,
    )?;
    let out_names: Vec<String> = ann_calls.iter().chain(sigma.returns()).cloned().collect();
    let t2 = Vpt::new(t2_vpa, out_names, t2_push_out, t2_pop_out)?.with_structure(annotated.clone())?;

    // T1 over the annotated alphabet: Start, or Sim(q, target set).
    #[derive(Clone, PartialEq, Eq, Hash)]
    enum S1 {
        Start,
        Sim(u32, BitSet),
    }
    let mut states: Vec<S1> = vec![S1::Start];
    let mut sindex: HashMap<S1, u32> = HashMap::from([(S1::Start, 0)]);
    let mut stack: Vec<(u32, BitSet, u32)> = Vec::new();
    let mut gindex: HashMap<(u32, BitSet, u32), u32> = HashMap::new();
    let mut push = Vec::new();
    let mut push_out = Vec::new();
    let mut pop = Vec::new();
    let mut pop_out = Vec::new();
    let mut done_pairs: HashSet<(u32, u32)> = HashSet::new();
    let mut next_state = 0;
    loop {
        let before = (states.len(), stack.len());
        while next_state < states.len() {
            let sid = next_state as u32;
            next_state += 1;
            let st = states[sid as usize].clone();
            for (sym, &(c, s_in, r, s_after)) in ann_info.iter().enumerate() {
                let (sources, target): (Vec<u32>, BitSet) = match &st {
                    S1::Start => (a.initial.clone(), fin.clone()),
                    S1::Sim(q, tg) => (vec![*q], tg.clone()),
                };
                let good = summ[s_after as usize].preimage(&target);
                let mut chosen = None;
                'search: for q in sources {
                    for (k, p) in a.push_from(q, c) {
                        let mut t_in = BitSet::new(n);
                        for x in 0..n as u32 {
                            if a.pop_from(x, r, p.gamma).any(|(_, pp)| good.contains(pp.to as usize)) {
                                t_in.insert(x as usize);
                            }
                        }
                        if summ[s_in as usize].row_set(p.to as usize).intersects(&t_in) {
                            chosen = Some((k, *p, t_in));
                            break 'search;
                        }
                    }
                }
                let Some((k, p, t_in)) = chosen else { continue };
                let to_state = S1::Sim(p.to, t_in);
                let to = *sindex.entry(to_state.clone()).or_insert_with(|| {
                    states.push(to_state);
                    states.len() as u32 - 1
                });
                let key = (p.gamma, target, s_after);
                let gamma = *gindex.entry(key.clone()).or_insert_with(|| {
                    stack.push(key);
                    stack.len() as u32 - 1
                });
                push.push(PushRule { from: sid, call: sym as u32, to, gamma });
                push_out.push(t.push_out[k as usize].clone());
            }
        }
        for sid in 0..states.len() as u32 {
            let S1::Sim(q, _) = states[sid as usize].clone() else { continue };
            for g in 0..stack.len() as u32 {
                if !done_pairs.insert((sid, g)) {
                    continue;
                }
                let (gamma, outer, s_after) = stack[g as usize].clone();
                let good = summ[s_after as usize].preimage(&outer);
                for r in 0..nr {
                    let Some((k, p)) = a.pop_from(q, r, gamma).find(|(_, p)| good.contains(p.to as usize)) else {
                        continue;
                    };
                    let to_state = S1::Sim(p.to, outer.clone());
                    let to = *sindex.entry(to_state.clone()).or_insert_with(|| {
                        states.push(to_state);
                        states.len() as u32 - 1
                    });
                    pop.push(PopRule { from: sid, ret: r, gamma: g, to });
                    pop_out.push(t.pop_out[k as usize].clone());
                }
            }
        }
        if (states.len(), stack.len()) == before && next_state == states.len() {
            break;
        }
    }
    let finals = (0..states.len() as u32)
        .filter(|&s| match &states[s as usize] {
            S1::Start => a.initial.iter().any(|&i| a.is_final(i)),
            S1::Sim(q, tg) => a.is_final(*q) && *tg == fin,
        })
        .collect();
    let names = (0..states.len()).map(|i| format!("t{i}")).collect();
    let stack_names = (0..stack.len()).map(|i| format!("u{i}")).collect();
    let t1_vpa = Vpa::new(annotated, names, vec![0], finals, stack_names, push, pop)?;
    let mut t1 = Vpt::new(t1_vpa, t.output_alphabet.clone(), push_out, pop_out)?;
    t1.output_structure = t.output_structure.clone();
    Ok((t1, t2))
}

/// Maps an output word of `t2` to a nested word over `t1`'s input alphabet.
pub fn as_input(out: &[u32], t1: &Vpt) -> Result<NestedWord> {
    let sigma = t1.vpa.alphabet();
    let nc = sigma.num_calls() as u32;
    let letters = out.iter().map(|&s| if s < nc { Letter::Call(s) } else { Letter::Ret(s - nc) }).collect();
    NestedWord::from_letters(sigma, letters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_machine;
    use crate::nested::enumerate_nested_words;

    fn vpa(text: &str) -> Vpa {
        parse_machine(text).unwrap().into_vpa().unwrap()
    }

    fn vpt(text: &str) -> Vpt {
        parse_machine(text).unwrap().into_vpt().unwrap()
    }

    // Brute force: explore all (state, stack) configurations.
    fn brute_accepts(a: &Vpa, w: &NestedWord) -> bool {
        brute_runs(a, w) > 0
    }

    fn brute_runs(a: &Vpa, w: &NestedWord) -> usize {
        let mut runs: Vec<(u32, Vec<u32>)> = a.initial().iter().map(|&q| (q, vec![])).collect();
        for &l in w.letters() {
            let mut next = Vec::new();
            for (q, st) in &runs {
                for p in a.push_rules() {
                    if Letter::Call(p.call) == l && p.from == *q {
                        let mut s = st.clone();
                        s.push(p.gamma);
                        next.push((p.to, s));
                    }
                }
                for p in a.pop_rules() {
                    if Letter::Ret(p.ret) == l && p.from == *q && st.last() == Some(&p.gamma) {
                        next.push((p.to, st[..st.len() - 1].to_vec()));
                    }
                }
            }
            runs = next;
        }
        runs.iter().filter(|(q, _)| a.is_final(*q)).count()
    }

    const NESTED_PAIR: &str = "
kind: vpa
calls: c1 c2
returns: r1 r2
states: q0 q1 q2 q3
initial: q0
final: q3
stack: a b
push q0 c1 -> q1 a
push q1 c2 -> q2 b
pop q2 r2 b -> q1
pop q1 r1 a -> q3
";

    // Accepts exactly c1 (c2 r2)^n r1 with n >= 1.
    const AT_LEAST_ONE: &str = "
kind: vpa
calls: c1 c2
returns: r1 r2
states: q0 q1 q2 q4 q3
initial: q0
final: q3
stack: a b
push q0 c1 -> q1 a
push q1 c2 -> q2 b
push q4 c2 -> q2 b
pop q2 r2 b -> q4
pop q4 r1 a -> q3
";

    // Each call guesses its matching return; the stack checks the guess.
    const GUESS_RETURN: &str = "
kind: vpa
calls: c
returns: r s
states: i x y
initial: i
final: i
stack: gx gy
push i c -> x gx
push i c -> y gy
push x c -> x gx
push x c -> y gy
push y c -> x gx
push y c -> y gy
pop i r gx -> i
pop x r gx -> i
pop y r gx -> i
pop i s gy -> i
pop x s gy -> i
pop y s gy -> i
";

    #[test]
    fn run_examples() {
        let univ = vpa(
            "kind: vpa\ncalls: c\nreturns: r\nstates: q0\ninitial: q0\nfinal: q0\nstack: g\npush q0 c -> q0 g\npop q0 r g -> q0\n",
        );
        let a = univ.alphabet().clone();
        assert_eq!(univ.run(&NestedWord::empty(&a)).iter().collect::<Vec<_>>(), vec![0]);
        let w = NestedWord::parse("c c r r c r", &a).unwrap();
        assert_eq!(univ.run(&w).iter().collect::<Vec<_>>(), vec![0]);
        assert!(univ.accepts(&w));
    }

    #[test]
    fn run_agrees_with_brute_force() {
        for text in [NESTED_PAIR, AT_LEAST_ONE, GUESS_RETURN] {
            let a = vpa(text);
            for w in enumerate_nested_words(a.alphabet(), 8) {
                assert_eq!(a.accepts(&w), brute_accepts(&a, &w), "{w}");
            }
        }
    }

    #[test]
    fn emptiness_examples() {
        let mut a = vpa(AT_LEAST_ONE);
        match is_empty_vpa(&a) {
            Emptiness::NonEmpty(w) => {
                let shortest = enumerate_nested_words(a.alphabet(), 4).find(|w| brute_accepts(&a, w)).unwrap();
                assert_eq!(w, shortest);
                assert_eq!(w.to_string(), "c1 c2 r2 r1");
            }
            Emptiness::Empty => panic!("nonempty"),
        }
        a.finals = vec![false; a.num_states()];
        assert!(is_empty_vpa(&a).is_empty());
        let univ = vpa("kind: vpa\ncalls: c\nreturns: r\nstates: q\ninitial: q\nfinal: q\nstack: g\n");
        assert_eq!(is_empty_vpa(&univ).witness().unwrap().len(), 0);
    }

    #[test]
    fn emptiness_matches_bounded_search() {
        let texts = [
            NESTED_PAIR,
            AT_LEAST_ONE,
            "kind: vpa\ncalls: c\nreturns: r\nstates: p q\ninitial: p\nfinal: q\nstack: g\npush p c -> p g\npop p r g -> p\n",
            "kind: vpa\ncalls: c\nreturns: r\nstates: p q\ninitial: p\nfinal: q\nstack: g h\npush p c -> q g\npop q r h -> q\n",
        ];
        for text in texts {
            let a = vpa(text);
            let bound = 2 * a.num_states().pow(2) * a.stack().len() + 2;
            let found = enumerate_nested_words(a.alphabet(), bound.min(10)).any(|w| brute_accepts(&a, &w));
            assert_eq!(!is_empty_vpa(&a).is_empty(), found);
        }
    }

    #[test]
    fn determinize_preserves_language() {
        for text in [NESTED_PAIR, AT_LEAST_ONE, GUESS_RETURN] {
            let a = vpa(text);
            let d = determinize_vpa(&a);
            assert!(d.is_deterministic());
            for w in enumerate_nested_words(a.alphabet(), 8) {
                assert_eq!(a.accepts(&w), d.accepts(&w), "{w}");
            }
        }
        let mut e = vpa(NESTED_PAIR);
        e.finals = vec![false; e.num_states()];
        assert!(is_empty_vpa(&determinize_vpa(&e)).is_empty());
    }

    #[test]
    fn unambiguity_matches_run_counting() {
        let dup = vpa("kind: vpa\ncalls: c\nreturns: r\nstates: p q\ninitial: p q\nfinal: p q\nstack: g\n");
        assert!(!is_unambiguous(&dup));
        let det = vpa(NESTED_PAIR);
        assert!(det.is_deterministic() && is_unambiguous(&det));
        // Guess the return symbol: unambiguous but not deterministic.
        let g = vpa(GUESS_RETURN);
        assert!(!g.is_deterministic());
        let brute = enumerate_nested_words(g.alphabet(), 6).all(|w| brute_runs(&g, &w) <= 1);
        assert_eq!(is_unambiguous(&g), brute);
        assert!(brute);
        // Three states, two ways to accept "c r".
        let amb = vpa(
            "kind: vpa\ncalls: c\nreturns: r\nstates: p q s\ninitial: p\nfinal: s\nstack: g h\npush p c -> q g\npush p c -> q h\npop q r g -> s\npop q r h -> s\n",
        );
        let brute = enumerate_nested_words(amb.alphabet(), 6).all(|w| brute_runs(&amb, &w) <= 1);
        assert!(!brute);
        assert_eq!(is_unambiguous(&amb), brute);
    }

    #[test]
    fn product_with_fsa() {
        let a = vpa(GUESS_RETURN);
        let names: Vec<String> = a.alphabet().letters().map(|l| a.alphabet().name(l).to_string()).collect();
        let all = Nfa::universal(names.clone());
        let p = product_vpa_fsa(&a, &all);
        let empty = Nfa { alphabet: names.clone(), states: vec!["z".into()], initial: vec![0], finals: vec![], trans: vec![] };
        assert!(is_empty_vpa(&product_vpa_fsa(&a, &empty)).is_empty());
        // Even number of `r` symbols.
        let r = all.symbol("r").unwrap();
        let mut trans = Vec::new();
        for s in 0..names.len() as u32 {
            for q in 0..2 {
                trans.push((q, s, if s == r { 1 - q } else { q }));
            }
        }
        let even = Nfa { alphabet: names, states: vec!["e".into(), "o".into()], initial: vec![0], finals: vec![0], trans };
        let pe = product_vpa_fsa(&a, &even);
        for w in enumerate_nested_words(a.alphabet(), 8) {
            assert_eq!(p.accepts(&w), a.accepts(&w));
            let toks: Vec<String> = w.to_string().split_whitespace().map(String::from).collect();
            assert_eq!(pe.accepts(&w), a.accepts(&w) && even.accepts_names(&toks));
        }
    }

    #[test]
    fn unique_run_labels_match_brute_force() {
        let g = vpa(GUESS_RETURN);
        for w in enumerate_nested_words(g.alphabet(), 8) {
            match unique_accepting_run(&g, &w) {
                Ok(labels) => {
                    assert!(g.accepts(&w));
                    // Replay: the labels must form a run.
                    let mut stack = Vec::new();
                    for (i, &l) in w.letters().iter().enumerate() {
                        let (q, q2) = (labels[i], labels[i + 1]);
                        match l {
                            Letter::Call(c) => {
                                let p = g.push_from(q, c).find(|(_, p)| p.to == q2).unwrap().1;
                                stack.push(p.gamma);
                            }
                            Letter::Ret(r) => {
                                let gm = stack.pop().unwrap();
                                assert!(g.pop_from(q, r, gm).any(|(_, p)| p.to == q2));
                            }
                            _ => unreachable!(),
                        }
                    }
                    assert!(g.is_final(*labels.last().unwrap()));
                }
                Err(e) => {
                    assert_eq!(e, Error::NoAcceptingRun);
                    assert!(!g.accepts(&w));
                }
            }
        }
    }

    const GUESS_RELABEL: &str = "
kind: vpt
calls: c
returns: r s
output-calls: R S
output-returns: x y
states: i x y
initial: i
final: i
stack: gx gy
push i c -> x gx / \"R\"
push i c -> y gy / \"S\"
push x c -> x gx / \"R\"
push x c -> y gy / \"S\"
push y c -> x gx / \"R\"
push y c -> y gy / \"S\"
pop i r gx -> i / \"x\"
pop x r gx -> i / \"x\"
pop y r gx -> i / \"x\"
pop i s gy -> i / \"y\"
pop x s gy -> i / \"y\"
pop y s gy -> i / \"y\"
";

    #[test]
    fn decomposition_pipeline() {
        for text in [GUESS_RELABEL] {
            let t = vpt(text);
            let (t1, t2) = codeterminize_l2l(&t).unwrap();
            assert!(t1.vpa.is_deterministic());
            assert!(t2.vpa.is_codeterministic());
            assert!(t2.is_letter_to_letter());
            for w in enumerate_nested_words(t.vpa.alphabet(), 8) {
                let direct = evaluate_vpt(&t, &w);
                let mid = evaluate_vpt(&t2, &w);
                assert!(mid.len() <= 1);
                let piped: BTreeSet<Vec<u32>> = mid
                    .iter()
                    .flat_map(|m| evaluate_vpt(&t1, &as_input(m, &t1).unwrap()))
                    .collect();
                assert_eq!(direct, piped, "{w}");
            }
        }
    }

    #[test]
    fn decomposition_of_deterministic_and_empty_input() {
        let t = vpt(
            "kind: vpt\ncalls: c\nreturns: r\noutput-alphabet: a b\nstates: q\ninitial: q\nfinal: q\nstack: g\npush q c -> q g / \"a\"\npop q r g -> q / \"b\"\n",
        );
        let (t1, t2) = codeterminize_l2l(&t).unwrap();
        let eps = NestedWord::empty(t.vpa.alphabet());
        assert_eq!(evaluate_vpt(&t2, &eps), BTreeSet::from([vec![]]));
        assert_eq!(evaluate_vpt(&t1, &NestedWord::empty(t1.vpa.alphabet())), BTreeSet::from([vec![]]));
        for w in enumerate_nested_words(t.vpa.alphabet(), 8) {
            let mid = evaluate_function(&t2, &w).unwrap();
            assert_eq!(evaluate_function(&t1, &as_input(&mid, &t1).unwrap()), evaluate_function(&t, &w));
        }
        let amb = vpt(
            "kind: vpt\ncalls: c\nreturns: r\noutput-alphabet: a\nstates: p q\ninitial: p q\nfinal: p q\nstack: g\n",
        );
        assert_eq!(codeterminize_l2l(&amb).unwrap_err(), Error::NotUnambiguous);
    }

    #[test]
    fn vpt_evaluation_examples() {
        let copy = vpt(
            "kind: vpt\ncalls: c\nreturns: r\noutput-alphabet: c r\nstates: q\ninitial: q\nfinal: q\nstack: g\npush q c -> q g / \"c\"\npop q r g -> q / \"r\"\n",
        );
        let w = NestedWord::parse("c c r r", copy.vpa.alphabet()).unwrap();
        let out = evaluate_vpt(&copy, &w);
        assert_eq!(out.len(), 1);
        assert_eq!(copy.render(out.iter().next().unwrap()), "c c r r");
        let erase = vpt(
            "kind: vpt\ncalls: c\nreturns: r\noutput-alphabet: c\nstates: q\ninitial: q\nfinal: q\nstack: g\npush q c -> q g / \"\"\npop q r g -> q / \"\"\n",
        );
        assert_eq!(evaluate_vpt(&erase, &w), BTreeSet::from([vec![]]));
    }
}
