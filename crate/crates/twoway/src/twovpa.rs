//! Two-way visibly pushdown automata, their traversals and the transition
//! algebra built from them.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use crate::alphabet::{is_push, Dir, Letter, StructuredAlphabet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nested::NestedWord;
use crate::rel::{GammaRules, Quad, Rel, RelAlgebra, BWD, FWD};
use crate::vpa::{is_unambiguous, unique_accepting_run, Emptiness, PopRule, PushRule, Vpa};

/// One transition. It pushes `gamma` when reading `letter` in direction `dir`
/// is a push (a call forward, a return backward) and pops `gamma` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub from: u32,
    pub dir: Dir,
    pub letter: Letter,
    pub gamma: u32,
    pub to: u32,
    pub to_dir: Dir,
}

impl Rule {
    pub fn is_push(&self) -> bool {
        is_push(self.dir, self.letter)
    }
}

pub type Traversal = Quad<Rel>;

#[derive(Clone, Debug)]
pub struct TwoVpa {
    alphabet: Arc<StructuredAlphabet>,
    states: Vec<String>,
    initial: u32,
    finals: Vec<bool>,
    stack: Vec<String>,
    rules: Vec<Rule>,
    index: HashMap<(u32, Dir, Letter), Vec<u32>>,
}

impl PartialEq for TwoVpa {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.states == other.states
            && self.initial == other.initial
            && self.finals == other.finals
            && self.stack == other.stack
            && self.rules == other.rules
    }
}

fn dir_index(d: Dir) -> usize {
    match d {
        Dir::Fwd => FWD,
        Dir::Bwd => BWD,
    }
}

impl TwoVpa {
    pub fn new(
        alphabet: Arc<StructuredAlphabet>,
        states: Vec<String>,
        initial: u32,
        finals: Vec<u32>,
        stack: Vec<String>,
        rules: Vec<Rule>,
    ) -> Result<TwoVpa> {
        let n = states.len() as u32;
        let bad = |m: String| Err(Error::InvalidMachine(m));
        if initial >= n || finals.iter().any(|&f| f >= n) {
            return bad("initial or final state out of range".into());
        }
        let mut flags = vec![false; n as usize];
        for &f in &finals {
            flags[f as usize] = true;
        }
        let mut index: HashMap<(u32, Dir, Letter), Vec<u32>> = HashMap::new();
        for (k, r) in rules.iter().enumerate() {
            if r.from >= n || r.to >= n || r.gamma as usize >= stack.len() || !alphabet.contains(r.letter) {
                return bad(format!("rule {} out of range", k + 1));
            }
            if r.letter == Letter::Left && r.dir == Dir::Bwd && r.to_dir != Dir::Fwd {
                return bad(format!("rule {} moves left of the left marker", k + 1));
            }
            index.entry((r.from, r.dir, r.letter)).or_default().push(k as u32);
        }
        Ok(TwoVpa { alphabet, states, initial, finals: flags, stack, rules, index })
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

    pub fn initial(&self) -> u32 {
        self.initial
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

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Rules applicable in state `q` reading `a` in direction `d`, with ids.
    pub fn rules_from(&self, q: u32, d: Dir, a: Letter) -> impl Iterator<Item = (u32, &Rule)> + '_ {
        self.index.get(&(q, d, a)).into_iter().flatten().map(|&k| (k, &self.rules[k as usize]))
    }

    pub fn is_deterministic(&self) -> bool {
        self.index.values().all(|ks| {
            let mut gammas = HashSet::new();
            let first = &self.rules[ks[0] as usize];
            if first.is_push() {
                ks.len() == 1
            } else {
                ks.iter().all(|&k| gammas.insert(self.rules[k as usize].gamma))
            }
        })
    }

    pub fn set_finals(&mut self, finals: &[u32]) {
        self.finals = vec![false; self.states.len()];
        for &f in finals {
            self.finals[f as usize] = true;
        }
    }

    /// Embeds a one-way automaton: a fresh initial state enters through the
    /// left marker and final states leave through the right marker.
    pub fn from_vpa(a: &Vpa) -> TwoVpa {
        let n = a.num_states() as u32;
        let (start, accept) = (n, n + 1);
        let bottom = a.stack().len() as u32;
        let mut states = a.states().to_vec();
        states.push("start".into());
        states.push("accept".into());
        let mut stack = a.stack().to_vec();
        stack.push("bottom".into());
        let fw = Dir::Fwd;
        let mut rules: Vec<Rule> = a
            .initial()
            .iter()
            .map(|&i| Rule { from: start, dir: fw, letter: Letter::Left, gamma: bottom, to: i, to_dir: fw })
            .collect();
        rules.extend(a.push_rules().iter().map(|p| Rule {
            from: p.from,
            dir: fw,
            letter: Letter::Call(p.call),
            gamma: p.gamma,
            to: p.to,
            to_dir: fw,
        }));
        rules.extend(a.pop_rules().iter().map(|p| Rule {
            from: p.from,
            dir: fw,
            letter: Letter::Ret(p.ret),
            gamma: p.gamma,
            to: p.to,
            to_dir: fw,
        }));
        rules.extend(
            a.finals().map(|f| Rule { from: f, dir: fw, letter: Letter::Right, gamma: bottom, to: accept, to_dir: fw }),
        );
        TwoVpa::new(a.alphabet().clone(), states, start, vec![accept], stack, rules).expect("embedding is well-formed")
    }
}

/// Unambiguous checker plus an optional guard state per host rule.
#[derive(Clone, Debug, PartialEq)]
pub struct LookAround {
    pub checker: Vpa,
    pub guards: Vec<Option<u32>>,
}

impl LookAround {
    pub fn new(checker: Vpa, guards: Vec<Option<u32>>) -> Result<LookAround> {
        if guards.iter().flatten().any(|&g| g as usize >= checker.num_states()) {
            return Err(Error::InvalidMachine("guard state out of range".into()));
        }
        if !is_unambiguous(&checker) {
            return Err(Error::NotUnambiguous);
        }
        Ok(LookAround { checker, guards })
    }
}

/// Labels of the unique accepting run of the checker: entry `p` is its state
/// after reading the `p`-th symbol, entry 0 the initial state.
pub fn check_lookaround_run(la: &LookAround, w: &NestedWord) -> Result<Vec<u32>> {
    unique_accepting_run(&la.checker, w)
}

/// A two-way machine given by its moves. Outputs are indices into
/// `output_alphabet`; `label` is the look-around state at the read position,
/// ignored by machines without look-around.
pub trait TwoWay {
    type State: Clone + Eq + Hash + Debug;
    type Gamma: Clone + Eq + Hash + Debug;

    fn alphabet(&self) -> &Arc<StructuredAlphabet>;
    fn output_alphabet(&self) -> &[String] {
        &[]
    }
    fn initial(&self) -> Self::State;
    fn is_final(&self, q: &Self::State) -> bool;
    fn push_moves(
        &self,
        q: &Self::State,
        d: Dir,
        a: Letter,
        label: Option<u32>,
    ) -> Vec<(Self::State, Dir, Self::Gamma, Vec<u32>)>;
    fn pop_moves(
        &self,
        q: &Self::State,
        d: Dir,
        a: Letter,
        g: &Self::Gamma,
        label: Option<u32>,
    ) -> Vec<(Self::State, Dir, Vec<u32>)>;
    fn lookaround(&self) -> Option<&LookAround> {
        None
    }
}

impl TwoWay for TwoVpa {
    type State = u32;
    type Gamma = u32;

    fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }
    fn initial(&self) -> u32 {
        self.initial
    }
    fn is_final(&self, q: &u32) -> bool {
        self.finals[*q as usize]
    }
    fn push_moves(&self, q: &u32, d: Dir, a: Letter, _: Option<u32>) -> Vec<(u32, Dir, u32, Vec<u32>)> {
        self.rules_from(*q, d, a).filter(|(_, r)| r.is_push()).map(|(_, r)| (r.to, r.to_dir, r.gamma, vec![])).collect()
    }
    fn pop_moves(&self, q: &u32, d: Dir, a: Letter, g: &u32, _: Option<u32>) -> Vec<(u32, Dir, Vec<u32>)> {
        self.rules_from(*q, d, a)
            .filter(|(_, r)| !r.is_push() && r.gamma == *g)
            .map(|(_, r)| (r.to, r.to_dir, vec![]))
            .collect()
    }
}

/// A configuration on a letter sequence: the head sits on boundary `pos`
/// (between `word[pos - 1]` and `word[pos]`) and moves next in direction `dir`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config<S, G> {
    pub state: S,
    pub pos: usize,
    pub dir: Dir,
    pub stack: Vec<G>,
}

pub type Configuration = Config<u32, u32>;

/// Index of the letter read from boundary `pos` in direction `d`.
pub fn read_index(len: usize, pos: usize, d: Dir) -> Option<usize> {
    match d {
        Dir::Fwd if pos < len => Some(pos),
        Dir::Bwd if pos > 0 => Some(pos - 1),
        _ => None,
    }
}

/// Successor configurations with the output of each move. `labels[i]` is the
/// look-around label of `word[i]`, when there is one.
pub fn successors<M: TwoWay>(
    m: &M,
    word: &[Letter],
    labels: &[Option<u32>],
    c: &Config<M::State, M::Gamma>,
) -> Vec<(Config<M::State, M::Gamma>, Vec<u32>)> {
    let Some(i) = read_index(word.len(), c.pos, c.dir) else { return vec![] };
    let a = word[i];
    let label = labels.get(i).copied().flatten();
    let pos = match c.dir {
        Dir::Fwd => c.pos + 1,
        Dir::Bwd => c.pos - 1,
    };
    if is_push(c.dir, a) {
        m.push_moves(&c.state, c.dir, a, label)
            .into_iter()
            .map(|(q, d, g, out)| {
                let mut stack = c.stack.clone();
                stack.push(g);
                (Config { state: q, pos, dir: d, stack }, out)
            })
            .collect()
    } else {
        let Some((g, rest)) = c.stack.split_last() else { return vec![] };
        m.pop_moves(&c.state, c.dir, a, g, label)
            .into_iter()
            .map(|(q, d, out)| (Config { state: q, pos, dir: d, stack: rest.to_vec() }, out))
            .collect()
    }
}

/// All successors of `c` on the marked word of `w`.
pub fn step(a: &TwoVpa, w: &NestedWord, c: &Configuration) -> Vec<Configuration> {
    successors(a, &w.marked(), &[], c).into_iter().map(|(c, _)| c).collect()
}

/// Number of open calls before every boundary of `word`.
pub fn boundary_heights(word: &[Letter]) -> Vec<usize> {
    let mut h = Vec::with_capacity(word.len() + 1);
    let mut d = 0usize;
    h.push(0);
    for &a in word {
        if a.is_call() {
            d += 1;
        } else {
            d = d.saturating_sub(1);
        }
        h.push(d);
    }
    h
}

/// Whether the configuration has left `word` (and on which side).
pub fn exit_side<S, G>(len: usize, c: &Config<S, G>) -> Option<Dir> {
    match c.dir {
        Dir::Fwd if c.pos == len => Some(Dir::Fwd),
        Dir::Bwd if c.pos == 0 => Some(Dir::Bwd),
        _ => None,
    }
}

/// Exhaustive exploration of configurations reachable from `start` until the
/// run leaves the word. Returns the exits and the number of configurations.
fn explore<M: TwoWay>(
    m: &M,
    word: &[Letter],
    labels: &[Option<u32>],
    start: Config<M::State, M::Gamma>,
    heights: &[usize],
) -> (Vec<Config<M::State, M::Gamma>>, usize) {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    let mut exits = Vec::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(c) = queue.pop_front() {
        assert_eq!(c.stack.len(), heights[c.pos], "stack height differs from nesting depth");
        if exit_side(word.len(), &c).is_some() {
            exits.push(c);
            continue;
        }
        for (next, _) in successors(m, word, labels, &c) {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    (exits, seen.len())
}

/// The traversal of the unmarked word `w`, by reachability in the
/// configuration graph.
pub fn traversal_oracle(a: &TwoVpa, w: &NestedWord) -> Traversal {
    let n = a.num_states();
    let word = w.letters();
    let heights = boundary_heights(word);
    let len = word.len();
    let mut t = Quad { ll: Rel::empty(n), lr: Rel::empty(n), rl: Rel::empty(n), rr: Rel::empty(n) };
    for p in 0..n as u32 {
        for (from_left, pos, dir) in [(true, 0, Dir::Fwd), (false, len, Dir::Bwd)] {
            let start = Config { state: p, pos, dir, stack: vec![] };
            let (exits, _) = explore(a, word, &[], start, &heights);
            for e in exits {
                let to_right = exit_side(len, &e) == Some(Dir::Fwd);
                let rel = match (from_left, to_right) {
                    (true, false) => &mut t.ll,
                    (true, true) => &mut t.lr,
                    (false, false) => &mut t.rl,
                    (false, true) => &mut t.rr,
                };
                rel.insert(p as usize, e.state as usize);
            }
        }
    }
    t
}

/// Membership by reachability on the marked word: some run from the initial
/// state leaves `▷ w ◁` to the right in a final state.
pub fn accepts_oracle<M: TwoWay>(m: &M, w: &NestedWord, labels: &[Option<u32>]) -> bool {
    let word = w.marked();
    let heights = boundary_heights(&word);
    let start = Config { state: m.initial(), pos: 0, dir: Dir::Fwd, stack: vec![] };
    let (exits, _) = explore(m, &word, labels, start, &heights);
    exits.iter().any(|c| c.dir == Dir::Fwd && m.is_final(&c.state))
}

/// Look-around labels aligned with the marked word: markers carry none.
pub fn marked_labels(labels: &[u32]) -> Vec<Option<u32>> {
    let mut out = vec![None];
    out.extend(labels.iter().skip(1).map(|&l| Some(l)));
    out.push(None);
    out
}

/// Rule relations of the pair `(c, r)`, one block per stack symbol, built by
/// `add` from each matching rule.
pub fn gamma_rules_by<R: RelAlgebra>(
    a: &TwoVpa,
    c: Letter,
    r: Letter,
    mut add: impl FnMut(&mut R, usize, &Rule),
) -> Vec<GammaRules<R>> {
    let n = a.num_states();
    let mut out: Vec<GammaRules<R>> = (0..a.stack.len()).map(|_| GammaRules::empty(n)).collect();
    for (k, rule) in a.rules.iter().enumerate() {
        let g = &mut out[rule.gamma as usize];
        let d = dir_index(rule.to_dir);
        let slot = match (rule.letter == c, rule.letter == r, rule.dir) {
            (true, _, Dir::Fwd) => &mut g.call_push[d],
            (true, _, Dir::Bwd) => &mut g.call_pop[d],
            (_, true, Dir::Fwd) => &mut g.ret_pop[d],
            (_, true, Dir::Bwd) => &mut g.ret_push[d],
            _ => continue,
        };
        add(slot, k, rule);
    }
    out
}

/// Rule relations for every call/return pair, markers included.
#[derive(Clone, Debug)]
pub struct WrapRules {
    n: usize,
    table: HashMap<(Letter, Letter), Vec<GammaRules<Rel>>>,
}

impl WrapRules {
    pub fn new(a: &TwoVpa) -> WrapRules {
        let sigma = a.alphabet();
        let calls: Vec<Letter> = sigma.call_letters().chain([Letter::Left]).collect();
        let rets: Vec<Letter> = sigma.return_letters().chain([Letter::Right]).collect();
        let mut table = HashMap::new();
        for &c in &calls {
            for &r in &rets {
                let rules = gamma_rules_by(a, c, r, |rel: &mut Rel, _, rule| rel.insert(rule.from as usize, rule.to as usize));
                table.insert((c, r), rules);
            }
        }
        WrapRules { n: a.num_states(), table }
    }

    pub fn wrap(&self, c: Letter, t: &Traversal, r: Letter) -> Traversal {
        Quad::wrap(t, &self.table[&(c, r)], self.n)
    }

    pub fn unit(&self) -> Traversal {
        Quad::unit(self.n)
    }

    /// The traversal of `w` computed from unit, concatenation and wrapping.
    pub fn fold(&self, w: &NestedWord) -> Traversal {
        w.fold(|| self.unit(), |u, v| u.concat(&v), |c, t, r| self.wrap(c, &t, r))
    }

    pub fn marked(&self, t: &Traversal) -> Traversal {
        self.wrap(Letter::Left, t, Letter::Right)
    }
}

pub fn concat_traversal(t1: &Traversal, t2: &Traversal) -> Traversal {
    t1.concat(t2)
}

pub fn wrap_traversal(a: &TwoVpa, c: Letter, t: &Traversal, r: Letter) -> Traversal {
    let rules = gamma_rules_by(a, c, r, |rel: &mut Rel, _, rule| rel.insert(rule.from as usize, rule.to as usize));
    Quad::wrap(t, &rules, a.num_states())
}

fn accepting_traversal(a: &TwoVpa, marked: &Traversal) -> bool {
    a.finals().any(|f| marked.lr.contains(a.initial() as usize, f as usize))
}

/// Membership through the algebraic fold.
pub fn accepts_2vpa(a: &TwoVpa, w: &NestedWord) -> bool {
    let rules = WrapRules::new(a);
    accepting_traversal(a, &rules.marked(&rules.fold(w)))
}

#[derive(Clone, Copy, Debug)]
enum Deriv {
    Unit,
    /// `x` followed by the wrapped element `c e r`.
    Append { x: u32, c: u32, e: u32, r: u32 },
}

pub const DEFAULT_ALGEBRA_CAP: usize = 1 << 20;

/// The traversals of all nested words, closed under concatenation and
/// wrapping. Concatenations of arbitrary pairs are resolved on demand.
#[derive(Clone, Debug)]
pub struct TransitionAlgebra {
    alphabet: Arc<StructuredAlphabet>,
    elements: Vec<Traversal>,
    index: HashMap<Traversal, u32>,
    wrap_table: Vec<u32>,
    accepting: Vec<bool>,
    deriv: Vec<Deriv>,
    lengths: Vec<usize>,
    nc: usize,
    nr: usize,
}

impl TransitionAlgebra {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn unit(&self) -> u32 {
        0
    }

    pub fn element(&self, e: u32) -> &Traversal {
        &self.elements[e as usize]
    }

    pub fn elements(&self) -> &[Traversal] {
        &self.elements
    }

    pub fn id_of(&self, t: &Traversal) -> Option<u32> {
        self.index.get(t).copied()
    }

    pub fn is_accepting(&self, e: u32) -> bool {
        self.accepting[e as usize]
    }

    pub fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }

    /// `f_{c,r}(e)` for user letters `Call(c)` and `Ret(r)`.
    pub fn wrap(&self, c: u32, e: u32, r: u32) -> u32 {
        self.wrap_table[(e as usize * self.nc + c as usize) * self.nr + r as usize]
    }

    pub fn concat(&self, x: u32, y: u32) -> u32 {
        let t = self.elements[x as usize].concat(&self.elements[y as usize]);
        self.index[&t]
    }

    /// The class of `w`.
    pub fn eval(&self, w: &NestedWord) -> u32 {
        w.fold(
            || 0,
            |x, y| self.concat(x, y),
            |c, e, r| match (c, r) {
                (Letter::Call(c), Letter::Ret(r)) => self.wrap(c, e, r),
                _ => unreachable!("markers never occur in nested words"),
            },
        )
    }

    /// Length of the recorded representative of `e`.
    pub fn witness_len(&self, e: u32) -> usize {
        self.lengths[e as usize]
    }

    /// A word whose class is `e`.
    pub fn witness(&self, e: u32) -> NestedWord {
        let mut out = Vec::with_capacity(self.lengths[e as usize]);
        // Explicit stack of pending tasks: either expand an element or emit a letter.
        let mut tasks: Vec<std::result::Result<u32, Letter>> = vec![Ok(e)];
        while let Some(t) = tasks.pop() {
            match t {
                Err(l) => out.push(l),
                Ok(e) => match self.deriv[e as usize] {
                    Deriv::Unit => {}
                    Deriv::Append { x, c, e, r } => {
                        tasks.push(Err(Letter::Ret(r)));
                        tasks.push(Ok(e));
                        tasks.push(Err(Letter::Call(c)));
                        tasks.push(Ok(x));
                    }
                },
            }
        }
        NestedWord::from_letters(&self.alphabet, out).expect("derived word is nested")
    }
}

/// Closure of the unit under appending wrapped elements. New elements are
/// processed in frontier batches; products are computed with `exec` and
/// inserted in a fixed order, so the numbering does not depend on `exec`.
pub fn compute_algebra(a: &TwoVpa, cap: usize, exec: Exec) -> Result<TransitionAlgebra> {
    let rules = WrapRules::new(a);
    let sigma = a.alphabet().clone();
    let nc = sigma.num_calls();
    let nr = sigma.num_returns();
    let pairs: Vec<(u32, u32)> = (0..nc as u32).flat_map(|c| (0..nr as u32).map(move |r| (c, r))).collect();
    let mut alg = TransitionAlgebra {
        alphabet: sigma,
        elements: Vec::new(),
        index: HashMap::new(),
        wrap_table: Vec::new(),
        accepting: Vec::new(),
        deriv: Vec::new(),
        lengths: Vec::new(),
        nc,
        nr,
    };
    let intern = |alg: &mut TransitionAlgebra, t: Traversal, d: Deriv, len: usize| -> Result<u32> {
        if let Some(&id) = alg.index.get(&t) {
            return Ok(id);
        }
        if alg.elements.len() >= cap {
            return Err(Error::ResourceLimit { what: "algebra elements", limit: cap });
        }
        let id = alg.elements.len() as u32;
        alg.index.insert(t.clone(), id);
        alg.elements.push(t);
        alg.deriv.push(d);
        alg.lengths.push(len);
        Ok(id)
    };
    intern(&mut alg, rules.unit(), Deriv::Unit, 0)?;
    // Atoms: distinct wrapped elements, with one derivation each.
    let mut atoms: Vec<(u32, u32, u32, u32)> = Vec::new();
    let mut atom_seen: HashSet<u32> = HashSet::new();
    let mut wrapped = 0usize;
    let (mut done_e, mut done_a) = (0usize, 0usize);
    loop {
        // Wrap every element not wrapped yet.
        let fresh: Vec<u32> = (wrapped as u32..alg.elements.len() as u32).collect();
        let jobs: Vec<(u32, u32, u32)> = fresh.iter().flat_map(|&e| pairs.iter().map(move |&(c, r)| (e, c, r))).collect();
        let results = exec.map(&jobs, |&(e, c, r)| {
            rules.wrap(Letter::Call(c), &alg.elements[e as usize], Letter::Ret(r))
        });
        for (&(e, c, r), t) in jobs.iter().zip(results) {
            let len = alg.lengths[e as usize] + 2;
            // Wrapped elements get a derivation as `unit . c e r`.
            let id = intern(&mut alg, t, Deriv::Append { x: 0, c, e, r }, len)?;
            alg.wrap_table.push(id);
            if atom_seen.insert(id) {
                atoms.push((id, c, e, r));
            }
        }
        wrapped = alg.elements.len().min(wrapped + fresh.len());
        // Products x . atom not computed yet.
        let (e_now, a_now) = (alg.elements.len(), atoms.len());
        let mut jobs: Vec<(u32, usize)> = Vec::new();
        for x in 0..e_now as u32 {
            let from = if (x as usize) < done_e { done_a } else { 0 };
            jobs.extend((from..a_now).map(|k| (x, k)));
        }
        let results = exec.map(&jobs, |&(x, k)| alg.elements[x as usize].concat(&alg.elements[atoms[k].0 as usize]));
        for (&(x, k), t) in jobs.iter().zip(results) {
            let (_, c, e, r) = atoms[k];
            let len = alg.lengths[x as usize] + alg.lengths[e as usize] + 2;
            intern(&mut alg, t, Deriv::Append { x, c, e, r }, len)?;
        }
        done_e = e_now;
        done_a = a_now;
        if wrapped == alg.elements.len() && done_e == alg.elements.len() && done_a == atoms.len() {
            break;
        }
    }
    alg.accepting = alg.elements.iter().map(|t| accepting_traversal(a, &rules.marked(t))).collect();
    Ok(alg)
}

/// The deterministic one-way automaton reading the algebra: the state is the
/// class of the current level's prefix, and a call stacks it.
pub fn algebra_to_dvpa(alg: &TransitionAlgebra) -> Vpa {
    let m = alg.len() as u32;
    let nc = alg.nc as u32;
    let nr = alg.nr as u32;
    let stack_id = |c: u32, e: u32| c * m + e;
    let mut push = Vec::new();
    let mut pop = Vec::new();
    for e in 0..m {
        for c in 0..nc {
            push.push(PushRule { from: e, call: c, to: alg.unit(), gamma: stack_id(c, e) });
        }
    }
    for inner in 0..m {
        for c in 0..nc {
            for r in 0..nr {
                let w = alg.wrap(c, inner, r);
                for outer in 0..m {
                    pop.push(PopRule { from: inner, ret: r, gamma: stack_id(c, outer), to: alg.concat(outer, w) });
                }
            }
        }
    }
    let names = (0..m).map(|e| format!("m{e}")).collect();
    let stack = (0..nc)
        .flat_map(|c| (0..m).map(move |e| (c, e)))
        .map(|(c, e)| format!("{}.m{e}", alg.alphabet.calls()[c as usize]))
        .collect();
    let finals = (0..m).filter(|&e| alg.is_accepting(e)).collect();
    Vpa::new(alg.alphabet.clone(), names, vec![alg.unit()], finals, stack, push, pop).expect("algebra automaton")
}

pub fn two_vpa_to_dvpa(a: &TwoVpa, cap: usize, exec: Exec) -> Result<Vpa> {
    Ok(algebra_to_dvpa(&compute_algebra(a, cap, exec)?))
}

/// Emptiness through the algebra: the language is nonempty iff some class is
/// accepting; the witness is the shortest recorded representative.
pub fn is_empty_2vpa(a: &TwoVpa, cap: usize, exec: Exec) -> Result<Emptiness> {
    let alg = compute_algebra(a, cap, exec)?;
    let best = (0..alg.len() as u32).filter(|&e| alg.is_accepting(e)).min_by_key(|&e| (alg.witness_len(e), e));
    Ok(match best {
        None => Emptiness::Empty,
        Some(e) => Emptiness::NonEmpty(alg.witness(e)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_machine;
    use crate::nested::enumerate_nested_words;
    use crate::vpa::is_empty_vpa;

    fn two(text: &str) -> TwoVpa {
        parse_machine(text).unwrap().into_two_vpa().unwrap()
    }

    // Bounces once over every call/return pair before moving on.
    const BOUNCE: &str = "
kind: 2vpa
calls: c
returns: r
states: p q f
initial: p
final: f
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g
pop p fw r g -> q bw
push q bw r -> p fw g
pop p fw <R> z -> f fw
";

    #[test]
    fn step_examples() {
        let a = two(BOUNCE);
        let w = NestedWord::parse("c r", a.alphabet()).unwrap();
        // At boundary 0 moving forward the head reads the left marker.
        let c0 = Configuration { state: 0, pos: 0, dir: Dir::Fwd, stack: vec![] };
        assert_eq!(step(&a, &w, &c0), vec![Configuration { state: 0, pos: 1, dir: Dir::Fwd, stack: vec![1] }]);
        let c2 = Configuration { state: 0, pos: 2, dir: Dir::Fwd, stack: vec![1, 0] };
        assert_eq!(step(&a, &w, &c2), vec![Configuration { state: 1, pos: 3, dir: Dir::Bwd, stack: vec![1] }]);
        let c3 = Configuration { state: 1, pos: 3, dir: Dir::Bwd, stack: vec![1] };
        assert_eq!(step(&a, &w, &c3), vec![Configuration { state: 0, pos: 2, dir: Dir::Fwd, stack: vec![1, 0] }]);
        // Popping an empty stack has no successor.
        let bad = Configuration { state: 0, pos: 2, dir: Dir::Fwd, stack: vec![] };
        assert!(step(&a, &w, &bad).is_empty());
    }

    #[test]
    fn epsilon_traversal_is_the_unit() {
        let a = two(BOUNCE);
        let e = NestedWord::empty(a.alphabet());
        assert_eq!(traversal_oracle(&a, &e), Quad::unit(a.num_states()));
    }

    #[test]
    fn bounce_machine_loops() {
        let a = two(BOUNCE);
        for w in enumerate_nested_words(a.alphabet(), 6) {
            // p re-reads every return forever: only the empty word is accepted.
            assert_eq!(accepts_oracle(&a, &w, &[]), w.is_empty());
            assert_eq!(accepts_2vpa(&a, &w), w.is_empty());
        }
    }

    #[test]
    fn fold_matches_oracle() {
        let a = two(BOUNCE);
        let rules = WrapRules::new(&a);
        for w in enumerate_nested_words(a.alphabet(), 8) {
            assert_eq!(rules.fold(&w), traversal_oracle(&a, &w), "{w}");
        }
    }

    #[test]
    fn one_way_embedding_keeps_language() {
        let v = parse_machine(
            "kind: vpa\ncalls: c d\nreturns: r\nstates: p q\ninitial: p\nfinal: p\nstack: g h\npush p c -> p g\npush p d -> q h\npop q r h -> p\npop p r g -> p\npush q c -> p g\n",
        )
        .unwrap()
        .into_vpa()
        .unwrap();
        let a = TwoVpa::from_vpa(&v);
        let rules = WrapRules::new(&a);
        let d = two_vpa_to_dvpa(&a, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
        assert!(d.is_deterministic());
        for w in enumerate_nested_words(v.alphabet(), 8) {
            let t = rules.fold(&w);
            assert!(t.ll.is_empty());
            assert!(w.is_empty() || t.rl.is_empty());
            assert_eq!(accepts_oracle(&a, &w, &[]), v.accepts(&w), "{w}");
            assert_eq!(d.accepts(&w), v.accepts(&w), "{w}");
        }
    }

    #[test]
    fn algebra_is_closed_and_neutral() {
        let a = two(BOUNCE);
        let alg = compute_algebra(&a, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
        for x in 0..alg.len() as u32 {
            assert_eq!(alg.concat(alg.unit(), x), x);
            assert_eq!(alg.concat(x, alg.unit()), x);
            assert_eq!(traversal_oracle(&a, &alg.witness(x)), *alg.element(x));
        }
        let par = compute_algebra(&a, DEFAULT_ALGEBRA_CAP, Exec::Parallel).unwrap();
        assert_eq!(par.elements(), alg.elements());
    }

    #[test]
    fn empty_by_finals() {
        let mut a = two(BOUNCE);
        a.set_finals(&[]);
        assert!(is_empty_2vpa(&a, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap().is_empty());
        let d = two_vpa_to_dvpa(&a, DEFAULT_ALGEBRA_CAP, Exec::Sequential).unwrap();
        assert!(is_empty_vpa(&d).is_empty());
    }

    #[test]
    fn algebra_cap_is_enforced() {
        let a = two(BOUNCE);
        let err = compute_algebra(&a, 1, Exec::Sequential).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }
}
