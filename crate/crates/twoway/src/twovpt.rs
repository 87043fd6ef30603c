//! Two-way visibly pushdown transducers.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::hash::Hash;
use std::sync::Arc;

use crate::alphabet::{Dir, Letter, StructuredAlphabet};
use crate::error::{Error, RejectReason, Result};
use crate::exec::Exec;
use crate::nested::NestedWord;
use crate::twovpa::{
    check_lookaround_run, compute_algebra, exit_side, is_empty_2vpa, marked_labels, read_index, successors, Config,
    LookAround, Rule, TwoVpa, TwoWay,
};
use crate::vpa::{Emptiness, Nfa, Vpa};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoVpt {
    pub automaton: TwoVpa,
    pub output_alphabet: Vec<String>,
    /// Output word of each rule.
    pub outputs: Vec<Vec<u32>>,
    pub lookaround: Option<LookAround>,
}

impl TwoVpt {
    pub fn new(
        automaton: TwoVpa,
        output_alphabet: Vec<String>,
        outputs: Vec<Vec<u32>>,
        lookaround: Option<LookAround>,
    ) -> Result<TwoVpt> {
        if outputs.len() != automaton.rules().len() {
            return Err(Error::InvalidMachine("one output per rule required".into()));
        }
        if outputs.iter().flatten().any(|&s| s as usize >= output_alphabet.len()) {
            return Err(Error::InvalidMachine("output symbol out of range".into()));
        }
        if let Some(la) = &lookaround {
            if la.guards.len() != outputs.len() {
                return Err(Error::InvalidMachine("one guard slot per rule required".into()));
            }
            if **la.checker.alphabet() != **automaton.alphabet() {
                return Err(Error::AlphabetMismatch);
            }
            let rules = automaton.rules();
            if let Some(k) = (0..rules.len()).find(|&k| la.guards[k].is_some() && rules[k].letter.is_marker()) {
                return Err(Error::InvalidMachine(format!("rule {} guards a marker", k + 1)));
            }
        }
        Ok(TwoVpt { automaton, output_alphabet, outputs, lookaround })
    }

    pub fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        self.automaton.alphabet()
    }

    /// Rules sharing a left-hand side must be told apart by the stack symbol
    /// (pops) or, with look-around, by distinct guards.
    pub fn is_deterministic(&self) -> bool {
        self.guard_conflict().is_none()
    }

    /// Two rules that can fire on the same configuration, if any.
    pub fn guard_conflict(&self) -> Option<(usize, usize)> {
        let rules = self.automaton.rules();
        let mut groups: HashMap<(u32, Dir, Letter, Option<u32>), Vec<usize>> = HashMap::new();
        for (k, r) in rules.iter().enumerate() {
            let g = if r.is_push() { None } else { Some(r.gamma) };
            groups.entry((r.from, r.dir, r.letter, g)).or_default().push(k);
        }
        for ks in groups.values() {
            for (i, &k1) in ks.iter().enumerate() {
                for &k2 in &ks[i + 1..] {
                    let distinct = match &self.lookaround {
                        None => false,
                        Some(la) => matches!((la.guards[k1], la.guards[k2]), (Some(a), Some(b)) if a != b),
                    };
                    if !distinct {
                        return Some((k1, k2));
                    }
                }
            }
        }
        None
    }

    /// States with some rule producing output.
    pub fn producing_states(&self) -> Vec<u32> {
        let set: BTreeSet<u32> =
            self.automaton.rules().iter().zip(&self.outputs).filter(|(_, o)| !o.is_empty()).map(|(r, _)| r.from).collect();
        set.into_iter().collect()
    }

    pub fn render(&self, out: &[u32]) -> String {
        out.iter().map(|&s| self.output_alphabet[s as usize].as_str()).collect::<Vec<_>>().join(" ")
    }

    fn fires(&self, k: u32, label: Option<u32>) -> bool {
        match &self.lookaround {
            None => true,
            Some(la) => match la.guards[k as usize] {
                None => true,
                Some(g) => label == Some(g),
            },
        }
    }

    fn moves(&self, q: u32, d: Dir, a: Letter) -> impl Iterator<Item = (u32, &Rule)> + '_ {
        self.automaton.rules_from(q, d, a)
    }
}

impl TwoWay for TwoVpt {
    type State = u32;
    type Gamma = u32;

    fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        self.automaton.alphabet()
    }
    fn output_alphabet(&self) -> &[String] {
        &self.output_alphabet
    }
    fn initial(&self) -> u32 {
        self.automaton.initial()
    }
    fn is_final(&self, q: &u32) -> bool {
        self.automaton.is_final(*q)
    }
    fn push_moves(&self, q: &u32, d: Dir, a: Letter, label: Option<u32>) -> Vec<(u32, Dir, u32, Vec<u32>)> {
        self.moves(*q, d, a)
            .filter(|(k, r)| r.is_push() && self.fires(*k, label))
            .map(|(k, r)| (r.to, r.to_dir, r.gamma, self.outputs[k as usize].clone()))
            .collect()
    }
    fn pop_moves(&self, q: &u32, d: Dir, a: Letter, g: &u32, label: Option<u32>) -> Vec<(u32, Dir, Vec<u32>)> {
        self.moves(*q, d, a)
            .filter(|(k, r)| !r.is_push() && r.gamma == *g && self.fires(*k, label))
            .map(|(k, r)| (r.to, r.to_dir, self.outputs[k as usize].clone()))
            .collect()
    }
    fn lookaround(&self) -> Option<&LookAround> {
        self.lookaround.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Streaming,
    Checked,
}

/// Output of a deterministic run with its cost counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub output: Vec<u32>,
    pub steps: u64,
    /// Peak number of words of auxiliary memory: the stack plus state,
    /// position and direction.
    pub peak_memory: usize,
}

const CONFIG_WORDS: usize = 3;

/// `|Q| * 2 * (|w| + 2) * max(1, |Γ|)^depth`, saturating.
pub fn step_limit(t: &TwoVpt, w: &NestedWord) -> u64 {
    let a = &t.automaton;
    let depth = w.max_depth() as u32 + 1;
    let gamma = a.stack().len().max(1) as u64;
    (a.num_states() as u64)
        .saturating_mul(2)
        .saturating_mul(w.len() as u64 + 2)
        .saturating_mul(gamma.saturating_pow(depth))
}

/// Follows the unique run of `m` on the marked word of `w`.
pub fn run_deterministic<M: TwoWay>(
    m: &M,
    w: &NestedWord,
    labels: &[Option<u32>],
    mode: EvalMode,
    limit: Option<u64>,
) -> Result<Evaluation> {
    let word = w.marked();
    let mut c: Config<M::State, M::Gamma> = Config { state: m.initial(), pos: 0, dir: Dir::Fwd, stack: Vec::new() };
    let mut output = Vec::new();
    let mut steps = 0u64;
    let mut peak = CONFIG_WORDS;
    let mut seen = HashSet::new();
    loop {
        if exit_side(word.len(), &c).is_some() {
            if c.dir == Dir::Fwd && m.is_final(&c.state) {
                return Ok(Evaluation { output, steps, peak_memory: peak });
            }
            return Err(Error::Rejected { position: c.pos, reason: RejectReason::NonFinalEnd });
        }
        if mode == EvalMode::Checked && !seen.insert(c.clone()) {
            return Err(Error::Diverged { position: c.pos });
        }
        if let Some(l) = limit {
            if steps >= l {
                return Err(Error::StepLimitExceeded { steps });
            }
        }
        let mut next = successors(m, &word, labels, &c);
        match next.len() {
            0 => return Err(Error::Rejected { position: c.pos, reason: RejectReason::Stuck }),
            1 => {}
            _ => return Err(Error::NotDeterministic(format!("several moves at position {}", c.pos))),
        }
        let (n, out) = next.pop().expect("one successor");
        output.extend(out);
        c = n;
        steps += 1;
        peak = peak.max(c.stack.len() + CONFIG_WORDS);
    }
}

fn lookaround_labels(t: &TwoVpt, w: &NestedWord) -> Vec<Option<u32>> {
    match &t.lookaround {
        None => Vec::new(),
        Some(la) => match check_lookaround_run(la, w) {
            Ok(run) => marked_labels(&run),
            Err(_) => Vec::new(),
        },
    }
}

/// Evaluates a deterministic transducer with counters.
pub fn evaluate_d2vpt_stats(t: &TwoVpt, w: &NestedWord, mode: EvalMode) -> Result<Evaluation> {
    if **w.alphabet() != **t.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    if !t.is_deterministic() {
        return Err(Error::NotDeterministic("transducer".into()));
    }
    match mode {
        EvalMode::Streaming => {
            if t.lookaround.is_some() {
                return Err(Error::LookaroundUnsupported);
            }
            run_deterministic(t, w, &[], mode, Some(step_limit(t, w)))
        }
        EvalMode::Checked => run_deterministic(t, w, &lookaround_labels(t, w), mode, None),
    }
}

pub fn evaluate_d2vpt(t: &TwoVpt, w: &NestedWord, mode: EvalMode) -> Result<Vec<u32>> {
    evaluate_d2vpt_stats(t, w, mode).map(|e| e.output)
}

/// The finite configuration graph of `m` on the marked word of `w`.
pub struct ConfigGraph<S, G> {
    pub word: Vec<Letter>,
    pub nodes: Vec<Config<S, G>>,
    pub edges: Vec<Vec<(usize, Vec<u32>)>>,
    /// Nodes that exit to the right in a final state.
    pub accepting: Vec<bool>,
}

impl<S: Clone + Eq + Hash, G: Clone + Eq + Hash> ConfigGraph<S, G> {
    pub fn build<M: TwoWay<State = S, Gamma = G>>(m: &M, w: &NestedWord, labels: &[Option<u32>]) -> Self {
        let word = w.marked();
        let start = Config { state: m.initial(), pos: 0, dir: Dir::Fwd, stack: Vec::new() };
        let mut index: HashMap<Config<S, G>, usize> = HashMap::from([(start.clone(), 0)]);
        let mut nodes = vec![start];
        let mut edges = Vec::new();
        let mut i = 0;
        while i < nodes.len() {
            let mut out = Vec::new();
            for (next, o) in successors(m, &word, labels, &nodes[i]) {
                let id = *index.entry(next.clone()).or_insert_with(|| {
                    nodes.push(next);
                    nodes.len() - 1
                });
                out.push((id, o));
            }
            edges.push(out);
            i += 1;
        }
        let accepting = nodes.iter().map(|c| exit_side(word.len(), c) == Some(Dir::Fwd) && m.is_final(&c.state)).collect();
        ConfigGraph { word, nodes, edges, accepting }
    }

    /// Nodes from which an accepting node is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (u, es) in self.edges.iter().enumerate() {
            for (v, _) in es {
                rev[*v].push(u);
            }
        }
        let mut mark = self.accepting.clone();
        let mut stack: Vec<usize> = (0..mark.len()).filter(|&i| mark[i]).collect();
        while let Some(v) = stack.pop() {
            for &u in &rev[v] {
                if !mark[u] {
                    mark[u] = true;
                    stack.push(u);
                }
            }
        }
        mark
    }

    /// Nodes reachable from `u` in one or more steps.
    pub fn reachable_from(&self, u: usize) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = self.edges[u].iter().map(|(v, _)| *v).collect();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.edges[v].iter().map(|(x, _)| *x));
            }
        }
        mark
    }

    /// Index of the marked-word letter read by node `u`.
    pub fn read_at(&self, u: usize) -> Option<usize> {
        read_index(self.word.len(), self.nodes[u].pos, self.nodes[u].dir)
    }
}

/// Bound on the number of simple accepting runs enumerated per word.
pub const RUN_ENUMERATION_CAP: usize = 100_000;

/// Outputs of all accepting runs without repeated configurations, and whether
/// some accepting run can pass through a producing cycle.
pub fn evaluate_2vpt_all<M: TwoWay>(m: &M, w: &NestedWord, labels: &[Option<u32>]) -> (BTreeSet<Vec<u32>>, bool) {
    let g = ConfigGraph::build(m, w, labels);
    let live = g.coreachable();
    let mut outputs = BTreeSet::new();
    let mut cyclic = false;
    if !live[0] {
        return (outputs, false);
    }
    for u in 0..g.nodes.len() {
        if !live[u] {
            continue;
        }
        for (v, o) in &g.edges[u] {
            if !o.is_empty() && live[*v] && (*v == u || g.reachable_from(*v)[u]) {
                cyclic = true;
            }
        }
    }
    // Depth-first enumeration of simple paths, with explicit frames.
    let mut on_path = vec![false; g.nodes.len()];
    let mut out: Vec<u32> = Vec::new();
    let mut frames: Vec<(usize, usize, usize)> = vec![(0, 0, 0)];
    on_path[0] = true;
    let mut runs = 0usize;
    while let Some(&mut (u, ref mut k, mark)) = frames.last_mut() {
        if *k == 0 && g.accepting[u] {
            outputs.insert(out.clone());
            runs += 1;
        }
        if runs >= RUN_ENUMERATION_CAP || *k >= g.edges[u].len() {
            frames.pop();
            on_path[u] = false;
            out.truncate(mark);
            if runs >= RUN_ENUMERATION_CAP {
                break;
            }
            continue;
        }
        let (v, ref o) = g.edges[u][*k];
        *k += 1;
        if live[v] && !on_path[v] {
            let before = out.len();
            out.extend_from_slice(o);
            on_path[v] = true;
            frames.push((v, 0, before));
        }
    }
    (outputs, cyclic)
}

/// The 2VPA accepting the words whose output lies in `m`: it runs `t` and
/// the determinized `m` on the produced letters.
pub fn inverse_image(t: &TwoVpt, m: &Nfa) -> Result<TwoVpa> {
    if t.lookaround.is_some() {
        return Err(Error::LookaroundUnsupported);
    }
    if !t.is_deterministic() {
        return Err(Error::NotDeterministic("transducer".into()));
    }
    m.validate()?;
    let dfa = m.determinize();
    let k = dfa.states.len() as u32;
    let mut delta: HashMap<(u32, u32), u32> = HashMap::new();
    for &(p, a, q) in &dfa.trans {
        delta.insert((p, a), q);
    }
    let sym: Vec<Option<u32>> = t.output_alphabet.iter().map(|s| dfa.symbol(s)).collect();
    let run = |p: u32, out: &[u32]| -> Option<u32> {
        out.iter().try_fold(p, |p, &o| sym[o as usize].and_then(|a| delta.get(&(p, a)).copied()))
    };
    let a = &t.automaton;
    let st = |q: u32, p: u32| q * k + p;
    let mut rules = Vec::new();
    for (rule, out) in a.rules().iter().zip(&t.outputs) {
        for p in 0..k {
            if let Some(p2) = run(p, out) {
                rules.push(Rule { from: st(rule.from, p), to: st(rule.to, p2), ..*rule });
            }
        }
    }
    let names = a
        .states()
        .iter()
        .flat_map(|q| dfa.states.iter().map(move |p| format!("{q}.{p}")))
        .collect();
    let finals = a.finals().flat_map(|f| dfa.finals.iter().map(move |&p| st(f, p))).collect();
    TwoVpa::new(a.alphabet().clone(), names, st(a.initial(), dfa.initial[0]), finals, a.stack().to_vec(), rules)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeCheck {
    Holds,
    /// A shortest input of the domain automaton whose image is outside the range.
    Counterexample(NestedWord),
}

impl TypeCheck {
    pub fn holds(&self) -> bool {
        matches!(self, TypeCheck::Holds)
    }
}

#[derive(Clone, Copy)]
enum Fact {
    Base,
    Append { left: usize, inner: usize, c: u32, r: u32 },
}

/// Decides `t(L(a1)) ⊆ L(a2)`. The inverse image of `a2` is turned into its
/// transition algebra, and summaries of `a1` are paired on the fly with
/// algebra classes; a pair from an initial to a final state of `a1` with a
/// non-accepting class is a counterexample.
pub fn type_check(t: &TwoVpt, a1: &Vpa, a2: &Nfa, cap: usize, exec: Exec) -> Result<TypeCheck> {
    if **a1.alphabet() != **t.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let inv = inverse_image(t, a2)?;
    let alg = compute_algebra(&inv, cap, exec)?;
    let n = a1.num_states() as u32;
    let mut facts: Vec<(u32, u32, u32, usize, Fact)> = Vec::new();
    let mut best: HashMap<(u32, u32, u32), usize> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    // Settled facts by their end state (as left factors) and settled atoms by start state.
    let mut left_by_end: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut atoms_by_start: HashMap<u32, Vec<(u32, u32, usize, u32, u32)>> = HashMap::new();
    let mut offer = |facts: &mut Vec<(u32, u32, u32, usize, Fact)>,
                     heap: &mut BinaryHeap<Reverse<(usize, usize)>>,
                     key: (u32, u32, u32),
                     len: usize,
                     f: Fact| {
        if best.get(&key).is_none_or(|&l| len < l) {
            best.insert(key, len);
            facts.push((key.0, key.1, key.2, len, f));
            heap.push(Reverse((len, facts.len() - 1)));
        }
    };
    for q in 0..n {
        offer(&mut facts, &mut heap, (q, q, alg.unit()), 0, Fact::Base);
    }
    let mut done: HashSet<(u32, u32, u32)> = HashSet::new();
    let finals: HashSet<u32> = a1.finals().collect();
    let initials: HashSet<u32> = a1.initial().iter().copied().collect();
    while let Some(Reverse((len, id))) = heap.pop() {
        let (p, q, e, _, _) = facts[id];
        if !done.insert((p, q, e)) {
            continue;
        }
        if initials.contains(&p) && finals.contains(&q) && !alg.is_accepting(e) {
            return Ok(TypeCheck::Counterexample(type_witness(&facts, id, a1)?));
        }
        // As a left factor followed by settled atoms.
        let mut new_facts = Vec::new();
        for &(to, atom, inner, c, r) in atoms_by_start.get(&q).map(|v| v.as_slice()).unwrap_or(&[]) {
            let l = len + facts[inner].3 + 2;
            new_facts.push(((p, to, alg.concat(e, atom)), l, Fact::Append { left: id, inner, c, r }));
        }
        left_by_end.entry(q).or_default().push(id);
        // As the inside of a call/return pair.
        let mut new_atoms = Vec::new();
        for push in a1.push_rules().iter().filter(|r| r.to == p) {
            for (_, pop) in a1.pop_rules().iter().enumerate().filter(|(_, r)| r.from == q && r.gamma == push.gamma) {
                let atom = alg.wrap(push.call, e, pop.ret);
                new_atoms.push((push.from, (pop.to, atom, id, push.call, pop.ret)));
            }
        }
        for (from, atom) in new_atoms {
            let (to, el, inner, c, r) = atom;
            for &left in left_by_end.get(&from).map(|v| v.as_slice()).unwrap_or(&[]) {
                let (lp, _, le, ll, _) = facts[left];
                new_facts.push(((lp, to, alg.concat(le, el)), ll + len + 2, Fact::Append { left, inner, c, r }));
            }
            atoms_by_start.entry(from).or_default().push(atom);
        }
        for (key, l, f) in new_facts {
            offer(&mut facts, &mut heap, key, l, f);
        }
    }
    Ok(TypeCheck::Holds)
}

fn type_witness(facts: &[(u32, u32, u32, usize, Fact)], id: usize, a1: &Vpa) -> Result<NestedWord> {
    let mut out = Vec::new();
    let mut tasks: Vec<std::result::Result<usize, Letter>> = vec![Ok(id)];
    while let Some(t) = tasks.pop() {
        match t {
            Err(l) => out.push(l),
            Ok(f) => {
                if let Fact::Append { left, inner, c, r } = facts[f].4 {
                    tasks.push(Err(Letter::Ret(r)));
                    tasks.push(Ok(inner));
                    tasks.push(Err(Letter::Call(c)));
                    tasks.push(Ok(left));
                }
            }
        }
    }
    NestedWord::from_letters(a1.alphabet(), out)
}

/// Evidence that a run reads `position` (1-based in the input) twice in `state`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleUseWitness {
    pub word: NestedWord,
    pub position: usize,
    pub state: u32,
}

fn check_producing(t: &TwoVpt, producing: &[u32]) -> Result<()> {
    let p: HashSet<u32> = producing.iter().copied().collect();
    if let Some(&q) = producing.iter().find(|&&q| q as usize >= t.automaton.num_states()) {
        return Err(Error::SingleUseIllFormed(format!("state {q} out of range")));
    }
    for (k, (r, o)) in t.automaton.rules().iter().zip(&t.outputs).enumerate() {
        if !o.is_empty() && !p.contains(&r.from) {
            return Err(Error::SingleUseIllFormed(format!(
                "rule {} produces output from non-producing state {}",
                k + 1,
                t.automaton.states()[r.from as usize]
            )));
        }
    }
    Ok(())
}

/// Accepting runs of `t` on `w` reading input letter `position` twice in a
/// state of `producing`: returns such a state. Cycles count as repeated visits.
pub fn double_visit(t: &TwoVpt, w: &NestedWord, position: usize, producing: &[u32]) -> Option<u32> {
    let labels = lookaround_labels(t, w);
    let g = ConfigGraph::build(t, w, &labels);
    let live = g.coreachable();
    let p: HashSet<u32> = producing.iter().copied().collect();
    for u in 0..g.nodes.len() {
        if !live[u] || g.read_at(u) != Some(position) || !p.contains(&g.nodes[u].state) {
            continue;
        }
        let reach = g.reachable_from(u);
        let hit = (0..g.nodes.len()).any(|v| {
            reach[v] && live[v] && g.read_at(v) == Some(position) && g.nodes[v].state == g.nodes[u].state
        });
        if hit {
            return Some(g.nodes[u].state);
        }
    }
    None
}

/// Brute-force single-use check on one word: the first offending position
/// and state, if any.
pub fn single_use_violation(t: &TwoVpt, w: &NestedWord, producing: &[u32]) -> Option<(usize, u32)> {
    (1..=w.len()).find_map(|k| double_visit(t, w, k, producing).map(|q| (k, q)))
}

/// The 2VPA over the marked alphabet `Σ × {0, 1}` accepting the words with
/// exactly one marked letter that some accepting run of `t` reads twice in
/// the same producing state.
pub fn single_use_checker(t: &TwoVpt, producing: &[u32]) -> Result<TwoVpa> {
    if t.lookaround.is_some() {
        return Err(Error::LookaroundUnsupported);
    }
    check_producing(t, producing)?;
    let a = &t.automaton;
    let sigma = a.alphabet();
    let mark = |names: &[String]| -> Vec<String> {
        names.iter().flat_map(|s| [format!("{s}#0"), format!("{s}#1")]).collect()
    };
    let marked = StructuredAlphabet::shared(&mark(sigma.calls()), &mark(sigma.returns()))?;
    let variants = |l: Letter| -> Vec<(Letter, bool)> {
        match l {
            Letter::Call(c) => vec![(Letter::Call(2 * c), false), (Letter::Call(2 * c + 1), true)],
            Letter::Ret(r) => vec![(Letter::Ret(2 * r), false), (Letter::Ret(2 * r + 1), true)],
            m => vec![(m, false)],
        }
    };
    let n = a.num_states() as u32;
    let np = producing.len() as u32;
    // Simulation states: mode 0 = nothing recorded, 1 + i = first visit in
    // producing[i], np + 1 = second visit seen.
    let modes = np + 2;
    let sim = |q: u32, mode: u32| q * modes + mode;
    let base = n * modes;
    let (scan0, scan1, rewind) = (base, base + 1, base + 2);
    let dummy = a.stack().len() as u32;
    let mut stack = a.stack().to_vec();
    stack.push("#".into());
    let mut rules = Vec::new();
    let (fw, bw) = (Dir::Fwd, Dir::Bwd);
    let walk = |rules: &mut Vec<Rule>, from: u32, to: u32, d: Dir, l: Letter| {
        rules.push(Rule { from, dir: d, letter: l, gamma: dummy, to, to_dir: d });
    };
    for l in marked.extended_letters() {
        let is_marked = matches!(l, Letter::Call(i) | Letter::Ret(i) if i % 2 == 1);
        match l {
            Letter::Right => {
                rules.push(Rule { from: scan1, dir: fw, letter: l, gamma: dummy, to: rewind, to_dir: bw });
                walk(&mut rules, rewind, rewind, bw, l);
            }
            Letter::Left => {
                walk(&mut rules, scan0, scan0, fw, l);
                rules.push(Rule { from: rewind, dir: bw, letter: l, gamma: dummy, to: sim(a.initial(), 0), to_dir: fw });
            }
            _ if is_marked => walk(&mut rules, scan0, scan1, fw, l),
            _ => {
                walk(&mut rules, scan0, scan0, fw, l);
                walk(&mut rules, scan1, scan1, fw, l);
                walk(&mut rules, rewind, rewind, bw, l);
            }
        }
        if is_marked {
            walk(&mut rules, rewind, rewind, bw, l);
        }
    }
    let pidx: HashMap<u32, u32> = producing.iter().enumerate().map(|(i, &q)| (q, i as u32)).collect();
    for r in a.rules() {
        for (l, is_marked) in variants(r.letter) {
            for mode in 0..modes {
                let mut targets = vec![mode];
                if is_marked {
                    if let Some(&i) = pidx.get(&r.from) {
                        if mode == 0 {
                            targets.push(1 + i);
                        } else if mode == 1 + i {
                            targets = vec![np + 1];
                        }
                    }
                }
                for m2 in targets {
                    rules.push(Rule { from: sim(r.from, mode), letter: l, to: sim(r.to, m2), ..*r });
                }
            }
        }
    }
    let mut names: Vec<String> = Vec::new();
    for q in a.states() {
        names.push(format!("{q}.none"));
        for &p in producing {
            names.push(format!("{q}.once.{}", a.states()[p as usize]));
        }
        names.push(format!("{q}.twice"));
    }
    names.extend(["scan0".into(), "scan1".into(), "rewind".into()]);
    let finals = a.finals().map(|f| sim(f, np + 1)).collect();
    TwoVpa::new(marked, names, scan0, finals, stack, rules)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SingleUse {
    Yes,
    No(SingleUseWitness),
}

impl SingleUse {
    pub fn holds(&self) -> bool {
        matches!(self, SingleUse::Yes)
    }
}

/// Decides whether no accepting run reads a position twice in the same
/// producing state, by emptiness of [`single_use_checker`].
pub fn is_single_use(t: &TwoVpt, producing: &[u32], cap: usize, exec: Exec) -> Result<SingleUse> {
    let b = single_use_checker(t, producing)?;
    match is_empty_2vpa(&b, cap, exec)? {
        Emptiness::Empty => Ok(SingleUse::Yes),
        Emptiness::NonEmpty(mw) => {
            let mut position = 0;
            let letters = mw
                .letters()
                .iter()
                .enumerate()
                .map(|(i, &l)| match l {
                    Letter::Call(c) => {
                        if c % 2 == 1 {
                            position = i + 1;
                        }
                        Letter::Call(c / 2)
                    }
                    Letter::Ret(r) => {
                        if r % 2 == 1 {
                            position = i + 1;
                        }
                        Letter::Ret(r / 2)
                    }
                    m => m,
                })
                .collect();
            let word = NestedWord::from_letters(t.alphabet(), letters)?;
            let state = double_visit(t, &word, position, producing)
                .expect("emptiness witness replays on the configuration graph");
            Ok(SingleUse::No(SingleUseWitness { word, position, state }))
        }
    }
}

/// Single use with respect to the states that can produce output.
pub fn is_single_use_auto(t: &TwoVpt, cap: usize, exec: Exec) -> Result<SingleUse> {
    is_single_use(t, &t.producing_states(), cap, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::{enumerate_nested_words, random_nested_word};
    use crate::samples::{lookaround_fixtures, single_use_fixtures, sorting_transducer, type_check_fixtures};
    use crate::twovpa::{accepts_2vpa, DEFAULT_ALGEBRA_CAP};
    use rand::SeedableRng;

    #[test]
    fn streaming_and_checked_agree() {
        let t = sorting_transducer(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = random_nested_word(&mut rng, t.alphabet(), 20, 3);
            let a = evaluate_d2vpt_stats(&t, &w, EvalMode::Streaming).unwrap();
            let b = evaluate_d2vpt_stats(&t, &w, EvalMode::Checked).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn all_runs_of_a_deterministic_machine() {
        let t = sorting_transducer(2);
        for w in enumerate_nested_words(t.alphabet(), 6) {
            let (outs, cyclic) = evaluate_2vpt_all(&t, &w, &[]);
            assert!(!cyclic);
            let one: BTreeSet<Vec<u32>> = evaluate_d2vpt(&t, &w, EvalMode::Checked).into_iter().collect();
            assert_eq!(outs, one, "{w}");
        }
    }

    #[test]
    fn lookaround_needs_checked_mode() {
        let (_, t) = lookaround_fixtures().remove(1);
        let w = NestedWord::parse("c c r r", t.alphabet()).unwrap();
        assert_eq!(evaluate_d2vpt(&t, &w, EvalMode::Streaming), Err(Error::LookaroundUnsupported));
        assert_eq!(t.render(&evaluate_d2vpt(&t, &w, EvalMode::Checked).unwrap()), "n e r r E N");
    }

    #[test]
    fn streaming_memory_tracks_depth() {
        let t = sorting_transducer(1);
        let flat = |n: usize| NestedWord::parse(&"1 r ".repeat(n), t.alphabet()).unwrap();
        let deep = |d: usize| NestedWord::parse(&format!("{}{}", "1 ".repeat(d), "r ".repeat(d)), t.alphabet()).unwrap();
        let mem = |w: &NestedWord| evaluate_d2vpt_stats(&t, w, EvalMode::Streaming).unwrap().peak_memory;
        assert_eq!(mem(&flat(10)), mem(&flat(500)));
        assert_eq!(mem(&deep(50)) - mem(&deep(10)), 40);
    }

    fn output_word(t: &TwoVpt, out: &[u32]) -> Vec<String> {
        out.iter().map(|&o| t.output_alphabet[o as usize].clone()).collect()
    }

    #[test]
    fn inverse_image_membership() {
        for (name, t, _, range) in type_check_fixtures() {
            let inv = inverse_image(&t, &range).unwrap();
            for w in enumerate_nested_words(t.alphabet(), 6) {
                let want = match evaluate_d2vpt(&t, &w, EvalMode::Checked) {
                    Ok(out) => range.accepts_names(&output_word(&t, &out)),
                    Err(_) => false,
                };
                assert_eq!(accepts_2vpa(&inv, &w), want, "{name} {w}");
            }
        }
    }

    #[test]
    fn type_check_matches_enumeration() {
        for (name, t, domain, range) in type_check_fixtures() {
            let bad = enumerate_nested_words(t.alphabet(), 8).find(|w| {
                domain.accepts(w)
                    && evaluate_d2vpt(&t, w, EvalMode::Checked)
                        .is_ok_and(|out| !range.accepts_names(&output_word(&t, &out)))
            });
            let verdict = type_check(&t, &domain, &range, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
            assert_eq!(verdict.holds(), bad.is_none(), "{name}");
            if let TypeCheck::Counterexample(w) = verdict {
                assert!(domain.accepts(&w));
                let out = evaluate_d2vpt(&t, &w, EvalMode::Checked).unwrap();
                assert!(!range.accepts_names(&output_word(&t, &out)), "{name} {w}");
                assert_eq!(w.len(), bad.unwrap().len(), "{name}: shortest counterexample");
            }
        }
    }

    #[test]
    fn single_use_matches_enumeration() {
        let mut verdicts = Vec::new();
        for (name, t, producing) in single_use_fixtures() {
            let brute = enumerate_nested_words(t.alphabet(), 6).find(|w| single_use_violation(&t, w, &producing).is_some());
            let verdict = is_single_use(&t, &producing, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
            assert_eq!(verdict.holds(), brute.is_none(), "{name}");
            if let SingleUse::No(wit) = &verdict {
                assert_eq!(double_visit(&t, &wit.word, wit.position, &producing), Some(wit.state), "{name}");
            }
            verdicts.push(verdict.holds());
        }
        assert!(verdicts.contains(&true) && verdicts.contains(&false));
    }

    #[test]
    fn producing_states_are_checked() {
        let (_, t, _) = single_use_fixtures().remove(1);
        assert!(matches!(is_single_use(&t, &[], 16, Exec::Sequential), Err(Error::SingleUseIllFormed(_))));
    }
}
