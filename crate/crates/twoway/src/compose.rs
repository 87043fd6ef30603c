//! Composition of letter-to-letter one-way transducers with two-way
//! transducers, right-to-left mirroring, and look-around removal.

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use crate::alphabet::{is_push, Dir, Letter, StructuredAlphabet};
use crate::error::{Error, Result};
use crate::rel::Rel;
use crate::twovpa::{Rule, TwoVpa, TwoWay};
use crate::twovpt::TwoVpt;
use crate::vpa::{codeterminize_l2l, determinize_vpa, is_unambiguous, PopRule, PushRule, Vpa, Vpt};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// A deterministic letter-to-letter transducer extended to the markers: the
/// left marker pushes `bottom` from the initial state, the right marker pops it.
#[derive(Clone, Debug)]
struct L2l {
    sigma: Arc<StructuredAlphabet>,
    out: Arc<StructuredAlphabet>,
    n: u32,
    bottom: u32,
    push: HashMap<(u32, u32), (u32, u32, Letter)>,
    pop: HashMap<(u32, u32, u32), (u32, Letter)>,
    initial: u32,
    finals: Vec<bool>,
}

fn out_letter(s: &StructuredAlphabet, sym: u32) -> Letter {
    let nc = s.num_calls() as u32;
    if sym < nc {
        Letter::Call(sym)
    } else {
        Letter::Ret(sym - nc)
    }
}

impl L2l {
    fn structure(t: &Vpt) -> Result<Arc<StructuredAlphabet>> {
        match &t.output_structure {
            Some(s) if t.is_letter_to_letter() => Ok(s.clone()),
            _ => Err(Error::NotLetterToLetter("first stage".into())),
        }
    }

    /// The transducer as given; it must be deterministic.
    fn forward(t: &Vpt) -> Result<L2l> {
        let out = Self::structure(t)?;
        let a = &t.vpa;
        let not_det = || Error::NotDeterministic("first stage".into());
        let [initial] = a.initial() else { return Err(not_det()) };
        let mut push = HashMap::new();
        for (k, p) in a.push_rules().iter().enumerate() {
            let o = out_letter(&out, t.push_out[k][0]);
            if push.insert((p.from, p.call), (p.to, p.gamma, o)).is_some() {
                return Err(not_det());
            }
        }
        let mut pop = HashMap::new();
        for (k, p) in a.pop_rules().iter().enumerate() {
            let o = out_letter(&out, t.pop_out[k][0]);
            if pop.insert((p.from, p.ret, p.gamma), (p.to, o)).is_some() {
                return Err(not_det());
            }
        }
        let n = a.num_states() as u32;
        Ok(L2l {
            sigma: a.alphabet().clone(),
            out,
            n,
            bottom: a.stack().len() as u32,
            push,
            pop,
            initial: *initial,
            finals: (0..n).map(|q| a.is_final(q)).collect(),
        })
    }

    /// The transducer read right to left over mirrored alphabets; it must be
    /// co-deterministic with a single final state.
    fn backward(t: &Vpt) -> Result<L2l> {
        let out = Self::structure(t)?;
        let a = &t.vpa;
        let not_codet = || Error::NotCoDeterministic("first stage".into());
        let finals: Vec<u32> = a.finals().collect();
        let [initial] = finals[..] else { return Err(not_codet()) };
        let mut push = HashMap::new();
        for (k, p) in a.pop_rules().iter().enumerate() {
            let o = out_letter(&out, t.pop_out[k][0]).mirror();
            if push.insert((p.to, p.ret), (p.from, p.gamma, o)).is_some() {
                return Err(not_codet());
            }
        }
        let mut pop = HashMap::new();
        for (k, p) in a.push_rules().iter().enumerate() {
            let o = out_letter(&out, t.push_out[k][0]).mirror();
            if pop.insert((p.to, p.call, p.gamma), (p.from, o)).is_some() {
                return Err(not_codet());
            }
        }
        let n = a.num_states() as u32;
        let mut fin = vec![false; n as usize];
        for &i in a.initial() {
            fin[i as usize] = true;
        }
        Ok(L2l {
            sigma: Arc::new(a.alphabet().mirror()),
            out: Arc::new(out.mirror()),
            n,
            bottom: a.stack().len() as u32,
            push,
            pop,
            initial,
            finals: fin,
        })
    }

    fn push(&self, q: u32, a: Letter) -> Option<(u32, u32, Letter)> {
        match a {
            Letter::Call(c) => self.push.get(&(q, c)).copied(),
            Letter::Left if q == self.initial => Some((q, self.bottom, Letter::Left)),
            _ => None,
        }
    }

    fn pop(&self, q: u32, a: Letter, g: u32) -> Option<(u32, Letter)> {
        match a {
            Letter::Ret(r) => self.pop.get(&(q, r, g)).copied(),
            Letter::Right if g == self.bottom => Some((q, Letter::Right)),
            _ => None,
        }
    }

    /// State pairs across `c u r` given the pairs `s` across `u`.
    fn update(&self, c: Letter, s: &Rel, r: Letter) -> Rel {
        let mut u = Rel::empty(self.n as usize);
        for x in 0..self.n {
            let Some((x1, g, _)) = self.push(x, c) else { continue };
            for x2 in s.successors(x1 as usize) {
                if let Some((y, _)) = self.pop(x2 as u32, r, g) {
                    u.insert(x as usize, y as usize);
                }
            }
        }
        u
    }
}

const NONE: u32 = u32::MAX;

/// Partial map from states at the current boundary to the candidate they reach.
type Candidates = Vec<u32>;

fn image(r: &Candidates) -> Vec<u32> {
    let mut v: Vec<u32> = r.iter().copied().filter(|&x| x != NONE).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Two states of the candidate map leading to `q0` and elsewhere.
fn split(r: &Candidates, q0: u32) -> Option<(u32, u32)> {
    let q = r.iter().position(|&x| x == q0)? as u32;
    let q2 = r.iter().position(|&x| x != NONE && x != q0)? as u32;
    Some((q, q2))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HuState<P, T> {
    /// Both machines run in lockstep.
    Main(P, u32),
    /// Summing the hedge to the left into a relation.
    Sum(Rel),
    /// Several candidate states remain; walking left through siblings.
    Back(P, Candidates),
    /// The state before the call is known; walk the subhedge forward.
    End(P, u32),
    Go(P, u32, u32),
    Read,
    /// Re-reads the call of the enclosing frame, whose content it carries.
    Restart(P, u32, T, u32),
    /// Two runs of the first stage until they meet.
    Pair(P, u32, u32),
    Deep2(u32, u32),
    Deep1(u32),
    /// About to re-read the return backwards with the recovered states.
    Fin(P, u32, u32, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HuGamma<P, T> {
    Main(u32, u32, T),
    SumStart(P, u32, Letter),
    BackSum(P, Candidates, Letter),
    Sum(Rel, Letter),
    Level1(P, u32, u32),
    Deep1(u32),
    ReadLevel(P, u32, u32),
    ReadDeep,
    Level2(P, u32, u32, u32),
    Deep2(u32, u32),
}

/// `b` run on the output of a deterministic letter-to-letter `a`, without
/// materializing the intermediate word. The first-stage state before a
/// return read backwards is recovered by summarizing the subhedge.
#[derive(Clone, Debug)]
pub struct Hu<B> {
    a: L2l,
    b: B,
}

impl<B: TwoWay> Hu<B> {
    pub fn new(a: &Vpt, b: B) -> Result<Hu<B>> {
        Self::with(L2l::forward(a)?, b)
    }

    /// The first stage is read right to left; used to compose with a
    /// co-deterministic transducer.
    fn mirrored(a: &Vpt, b: B) -> Result<Hu<B>> {
        Self::with(L2l::backward(a)?, b)
    }

    fn with(a: L2l, b: B) -> Result<Hu<B>> {
        if b.lookaround().is_some() {
            return Err(Error::LookaroundUnsupported);
        }
        if *a.out != **b.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        Ok(Hu { a, b })
    }

    fn candidates(&self, u: &Rel, q: u32) -> Vec<u32> {
        (0..self.a.n).filter(|&x| u.contains(x as usize, q as usize)).collect()
    }
}

type HuMoves<P, T> = Vec<(HuState<P, T>, Dir, HuGamma<P, T>, Vec<u32>)>;

impl<B: TwoWay> TwoWay for Hu<B> {
    type State = HuState<B::State, B::Gamma>;
    type Gamma = HuGamma<B::State, B::Gamma>;

    fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.a.sigma
    }
    fn output_alphabet(&self) -> &[String] {
        self.b.output_alphabet()
    }
    fn initial(&self) -> Self::State {
        HuState::Main(self.b.initial(), self.a.initial)
    }
    fn is_final(&self, q: &Self::State) -> bool {
        matches!(q, HuState::Main(p, x) if self.b.is_final(p) && self.a.finals[*x as usize])
    }

    fn push_moves(&self, q: &Self::State, d: Dir, c: Letter, _: Option<u32>) -> HuMoves<B::State, B::Gamma> {
        use Dir::*;
        use HuGamma as G;
        use HuState as S;
        let a = &self.a;
        let n = a.n as usize;
        match (q, d) {
            (S::Main(p, x), Fwd) => {
                let Some((y, g, o)) = a.push(*x, c) else { return vec![] };
                self.b
                    .push_moves(p, Fwd, o, None)
                    .into_iter()
                    .map(|(p2, d2, th, out)| (S::Main(p2, y), d2, G::Main(*x, g, th), out))
                    .collect()
            }
            (S::Main(p, x), Bwd) => vec![(S::Sum(Rel::identity(n)), Bwd, G::SumStart(p.clone(), *x, c), vec![])],
            (S::Sum(s), Bwd) => vec![(S::Sum(Rel::identity(n)), Bwd, G::Sum(s.clone(), c), vec![])],
            (S::Back(p, r), Bwd) => {
                vec![(S::Sum(Rel::identity(n)), Bwd, G::BackSum(p.clone(), r.clone(), c), vec![])]
            }
            (S::End(p, x), Fwd) => {
                let Some((y, g, _)) = a.push(*x, c) else { return vec![] };
                vec![(S::Deep1(y), Fwd, G::Level1(p.clone(), *x, g), vec![])]
            }
            (S::Deep1(x), Fwd) => {
                let Some((y, g, _)) = a.push(*x, c) else { return vec![] };
                vec![(S::Deep1(y), Fwd, G::Deep1(g), vec![])]
            }
            (S::Go(p, x1, x2), Fwd) => vec![(S::Read, Fwd, G::ReadLevel(p.clone(), *x1, *x2), vec![])],
            (S::Read, Fwd) => vec![(S::Read, Fwd, G::ReadDeep, vec![])],
            (S::Restart(p, x0, th, y2), Fwd) => {
                let Some((s0, g, _)) = a.push(*x0, c) else { return vec![] };
                vec![(S::Pair(p.clone(), s0, *y2), Fwd, G::Main(*x0, g, th.clone()), vec![])]
            }
            (S::Pair(p, x1, x2), Fwd) => {
                let (Some((y1, g1, _)), Some((y2, g2, _))) = (a.push(*x1, c), a.push(*x2, c)) else { return vec![] };
                vec![(S::Deep2(y1, y2), Fwd, G::Level2(p.clone(), *x1, g1, g2), vec![])]
            }
            (S::Deep2(x1, x2), Fwd) => {
                let (Some((y1, g1, _)), Some((y2, g2, _))) = (a.push(*x1, c), a.push(*x2, c)) else { return vec![] };
                vec![(S::Deep2(y1, y2), Fwd, G::Deep2(g1, g2), vec![])]
            }
            (S::Fin(p, x0, y, g), Bwd) => {
                let Some((_, o)) = a.pop(*y, c, *g) else { return vec![] };
                self.b
                    .push_moves(p, Bwd, o, None)
                    .into_iter()
                    .map(|(p2, d2, th, out)| (S::Main(p2, *y), d2, G::Main(*x0, *g, th), out))
                    .collect()
            }
            _ => vec![],
        }
    }

    fn pop_moves(
        &self,
        q: &Self::State,
        d: Dir,
        l: Letter,
        top: &Self::Gamma,
        _: Option<u32>,
    ) -> Vec<(Self::State, Dir, Vec<u32>)> {
        use Dir::*;
        use HuGamma as G;
        use HuState as S;
        let a = &self.a;
        match (q, d, top) {
            (S::Main(p, x), Fwd, G::Main(_, g, th)) => {
                let Some((y, o)) = a.pop(*x, l, *g) else { return vec![] };
                self.b.pop_moves(p, Fwd, o, th, None).into_iter().map(|(p2, d2, out)| (S::Main(p2, y), d2, out)).collect()
            }
            (S::Main(p, x), Bwd, G::Main(x0, g, th)) => {
                let Some((y, g1, o)) = a.push(*x0, l) else { return vec![] };
                if (y, g1) != (*x, *g) {
                    return vec![];
                }
                self.b.pop_moves(p, Bwd, o, th, None).into_iter().map(|(p2, d2, out)| (S::Main(p2, *x0), d2, out)).collect()
            }
            (S::Sum(s), Bwd, G::Sum(s_right, r)) => {
                vec![(S::Sum(a.update(l, s, *r).then(s_right)), Bwd, vec![])]
            }
            (S::Sum(s), Bwd, G::SumStart(p, x, r)) => {
                let cand = self.candidates(&a.update(l, s, *r), *x);
                match cand[..] {
                    [] => vec![],
                    [x0] => vec![(S::End(p.clone(), x0), Fwd, vec![])],
                    _ => {
                        let mut m = vec![NONE; a.n as usize];
                        for &y in &cand {
                            m[y as usize] = y;
                        }
                        vec![(S::Back(p.clone(), m), Bwd, vec![])]
                    }
                }
            }
            (S::Sum(s), Bwd, G::BackSum(p, m, r)) => {
                let u = a.update(l, s, *r);
                let mut m2 = vec![NONE; a.n as usize];
                for (x, y) in u.pairs() {
                    if m[y] != NONE {
                        m2[x] = m[y];
                    }
                }
                match image(&m2)[..] {
                    [] => vec![],
                    [x0] => {
                        let Some((y1, y2)) = split(m, x0) else { return vec![] };
                        vec![(S::Go(p.clone(), y1, y2), Fwd, vec![])]
                    }
                    _ => vec![(S::Back(p.clone(), m2), Bwd, vec![])],
                }
            }
            (S::Back(p, m), Bwd, G::Main(x0, _, th)) => {
                let Some((s0, _, _)) = a.push(*x0, l) else { return vec![] };
                let target = m[s0 as usize];
                if target == NONE {
                    return vec![];
                }
                let Some((_, y2)) = split(m, target) else { return vec![] };
                vec![(S::Restart(p.clone(), *x0, th.clone(), y2), Fwd, vec![])]
            }
            (S::Deep1(y), Fwd, G::Deep1(g)) => match a.pop(*y, l, *g) {
                Some((z, _)) => vec![(S::Deep1(z), Fwd, vec![])],
                None => vec![],
            },
            (S::Deep1(y), Fwd, G::Level1(p, x0, g)) => match a.pop(*y, l, *g) {
                Some(_) => vec![(S::Fin(p.clone(), *x0, *y, *g), Bwd, vec![])],
                None => vec![],
            },
            (S::Read, Fwd, G::ReadDeep) => vec![(S::Read, Fwd, vec![])],
            (S::Read, Fwd, G::ReadLevel(p, x1, x2)) => vec![(S::Pair(p.clone(), *x1, *x2), Fwd, vec![])],
            (S::Deep2(y1, y2), Fwd, G::Deep2(g1, g2)) => match (a.pop(*y1, l, *g1), a.pop(*y2, l, *g2)) {
                (Some((z1, _)), Some((z2, _))) => vec![(S::Deep2(z1, z2), Fwd, vec![])],
                _ => vec![],
            },
            (S::Deep2(y1, y2), Fwd, G::Level2(p, x1, g1, g2)) => {
                match (a.pop(*y1, l, *g1), a.pop(*y2, l, *g2)) {
                    (Some((z1, _)), Some((z2, _))) if z1 == z2 => vec![(S::Fin(p.clone(), *x1, *y1, *g1), Bwd, vec![])],
                    (Some((z1, _)), Some((z2, _))) => vec![(S::Pair(p.clone(), z1, z2), Fwd, vec![])],
                    _ => vec![],
                }
            }
            _ => vec![],
        }
    }
}


#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MirrorState<S> {
    /// Walks to the right marker before starting the mirrored run.
    Seek,
    Run(S),
    /// The mirrored run accepted; walks to the right end.
    Done,
    Accept,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MirrorGamma<G> {
    Pad,
    Run(G),
}

/// Runs `m` on the reverse of the input: reads over the mirrored alphabet
/// and computes `m(mirror(w))`.
#[derive(Clone, Debug)]
pub struct Mirror<M> {
    inner: M,
    alphabet: Arc<StructuredAlphabet>,
}

impl<M: TwoWay> Mirror<M> {
    pub fn new(inner: M) -> Result<Mirror<M>> {
        if inner.lookaround().is_some() {
            return Err(Error::LookaroundUnsupported);
        }
        let alphabet = Arc::new(inner.alphabet().mirror());
        Ok(Mirror { inner, alphabet })
    }
}

impl<M: TwoWay> TwoWay for Mirror<M> {
    type State = MirrorState<M::State>;
    type Gamma = MirrorGamma<M::Gamma>;

    fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }
    fn output_alphabet(&self) -> &[String] {
        self.inner.output_alphabet()
    }
    fn initial(&self) -> Self::State {
        MirrorState::Seek
    }
    fn is_final(&self, q: &Self::State) -> bool {
        *q == MirrorState::Accept
    }

    fn push_moves(
        &self,
        q: &Self::State,
        d: Dir,
        a: Letter,
        _: Option<u32>,
    ) -> Vec<(Self::State, Dir, Self::Gamma, Vec<u32>)> {
        match (q, d) {
            (MirrorState::Seek | MirrorState::Done, Dir::Fwd) => vec![(q.clone(), Dir::Fwd, MirrorGamma::Pad, vec![])],
            (MirrorState::Run(s), _) => self
                .inner
                .push_moves(s, d.flip(), a.mirror(), None)
                .into_iter()
                .map(|(s2, d2, g, out)| (MirrorState::Run(s2), d2.flip(), MirrorGamma::Run(g), out))
                .collect(),
            _ => vec![],
        }
    }

    fn pop_moves(
        &self,
        q: &Self::State,
        d: Dir,
        a: Letter,
        g: &Self::Gamma,
        _: Option<u32>,
    ) -> Vec<(Self::State, Dir, Vec<u32>)> {
        match (q, d, g) {
            (MirrorState::Seek, Dir::Fwd, MirrorGamma::Pad) if a == Letter::Right => {
                vec![(MirrorState::Run(self.inner.initial()), Dir::Bwd, vec![])]
            }
            (MirrorState::Done, Dir::Fwd, MirrorGamma::Pad) if a == Letter::Right => {
                vec![(MirrorState::Accept, Dir::Fwd, vec![])]
            }
            (MirrorState::Seek | MirrorState::Done, Dir::Fwd, MirrorGamma::Pad) => vec![(q.clone(), Dir::Fwd, vec![])],
            (MirrorState::Run(s), _, MirrorGamma::Run(g)) => {
                let mut v = Vec::new();
                for (s2, d2, out) in self.inner.pop_moves(s, d.flip(), a.mirror(), g, None) {
                    if a == Letter::Left && d2 == Dir::Fwd {
                        if self.inner.is_final(&s2) {
                            v.push((MirrorState::Done, Dir::Fwd, out));
                        }
                    } else {
                        v.push((MirrorState::Run(s2), d2.flip(), out));
                    }
                }
                v
            }
            _ => vec![],
        }
    }
}

/// Explicit transition table of a lazily defined machine, restricted to the
/// states reachable with a consistent stack. Fails past `cap` states.
pub fn materialize<M: TwoWay>(m: &M, cap: usize) -> Result<TwoVpt> {
    type Node<S, G> = (S, Dir, Option<G>);
    let sigma = m.alphabet().clone();
    let letters: Vec<Letter> = sigma.extended_letters().collect();
    let mut states: Vec<M::State> = Vec::new();
    let mut sid: HashMap<M::State, u32> = HashMap::new();
    let mut gammas: Vec<M::Gamma> = Vec::new();
    let mut gid: HashMap<M::Gamma, u32> = HashMap::new();
    let mut seen: HashSet<Node<M::State, M::Gamma>> = HashSet::new();
    let mut work: Vec<Node<M::State, M::Gamma>> = Vec::new();
    let mut below: HashMap<M::Gamma, HashSet<Option<M::Gamma>>> = HashMap::new();
    let mut after_pop: HashMap<M::Gamma, Vec<(M::State, Dir)>> = HashMap::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut outputs: Vec<Vec<u32>> = Vec::new();
    let mut rule_seen: HashSet<Rule> = HashSet::new();

    let mut intern = |s: &M::State, states: &mut Vec<M::State>| -> Result<u32> {
        if let Some(&i) = sid.get(s) {
            return Ok(i);
        }
        if states.len() >= cap {
            return Err(Error::ResourceLimit { what: "composed states", limit: cap });
        }
        states.push(s.clone());
        sid.insert(s.clone(), states.len() as u32 - 1);
        Ok(states.len() as u32 - 1)
    };
    let mut gamma_id = |g: &M::Gamma| -> u32 {
        *gid.entry(g.clone()).or_insert_with(|| {
            gammas.push(g.clone());
            gammas.len() as u32 - 1
        })
    };
    let visit = |n: Node<M::State, M::Gamma>, seen: &mut HashSet<_>, work: &mut Vec<_>| {
        if seen.insert(n.clone()) {
            work.push(n);
        }
    };

    intern(&m.initial(), &mut states)?;
    visit((m.initial(), Dir::Fwd, None), &mut seen, &mut work);
    while let Some((s, d, top)) = work.pop() {
        let from = intern(&s, &mut states)?;
        for &a in &letters {
            if is_push(d, a) {
                for (s2, d2, g, out) in m.push_moves(&s, d, a, None) {
                    let to = intern(&s2, &mut states)?;
                    let rule = Rule { from, dir: d, letter: a, gamma: gamma_id(&g), to, to_dir: d2 };
                    if rule_seen.insert(rule) {
                        rules.push(rule);
                        outputs.push(out);
                    }
                    visit((s2, d2, Some(g.clone())), &mut seen, &mut work);
                    if below.entry(g.clone()).or_default().insert(top.clone()) {
                        for (s3, d3) in after_pop.get(&g).cloned().unwrap_or_default() {
                            visit((s3, d3, top.clone()), &mut seen, &mut work);
                        }
                    }
                }
            } else if let Some(g) = &top {
                for (s2, d2, out) in m.pop_moves(&s, d, a, g, None) {
                    if a == Letter::Left && d2 == Dir::Bwd {
                        // Leaves on the left: rejecting, like having no move.
                        continue;
                    }
                    let to = intern(&s2, &mut states)?;
                    let rule = Rule { from, dir: d, letter: a, gamma: gamma_id(g), to, to_dir: d2 };
                    if rule_seen.insert(rule) {
                        rules.push(rule);
                        outputs.push(out);
                    }
                    after_pop.entry(g.clone()).or_default().push((s2.clone(), d2));
                    for t in below.get(g).cloned().unwrap_or_default() {
                        visit((s2.clone(), d2, t), &mut seen, &mut work);
                    }
                }
            }
        }
    }
    let finals: Vec<u32> = (0..states.len() as u32).filter(|&i| m.is_final(&states[i as usize])).collect();
    let names = (0..states.len()).map(|i| format!("s{i}")).collect();
    let stack = (0..gammas.len()).map(|i| format!("g{i}")).collect();
    let a = TwoVpa::new(sigma, names, 0, finals, stack, rules)?;
    TwoVpt::new(a, m.output_alphabet().to_vec(), outputs, None)
}

/// `b` after the deterministic letter-to-letter `a`.
pub fn compose_hu(a: &Vpt, b: &TwoVpt, cap: usize) -> Result<TwoVpt> {
    materialize(&Hu::new(a, b.clone())?, cap)
}

type Codet<B> = Mirror<Hu<Mirror<B>>>;

/// `b` after a co-deterministic letter-to-letter `a`, as a lazy machine.
pub fn compose_hu_codet_lazy<B: TwoWay>(a: &Vpt, b: B) -> Result<Codet<B>> {
    Mirror::new(Hu::mirrored(a, Mirror::new(b)?)?)
}

pub fn compose_hu_codet(a: &Vpt, b: &TwoVpt, cap: usize) -> Result<TwoVpt> {
    materialize(&compose_hu_codet_lazy(a, b.clone())?, cap)
}

pub type Relabeled = Codet<Hu<TwoVpt>>;

/// `b` after an unambiguous letter-to-letter `relab`, as a lazy machine.
pub fn compose_relabeling_lazy(b: &TwoVpt, relab: &Vpt) -> Result<Relabeled> {
    if relab.output_structure.is_none() || !relab.is_letter_to_letter() {
        return Err(Error::NotLetterToLetter("relabeling".into()));
    }
    let (t1, t2) = codeterminize_l2l(relab)?;
    compose_hu_codet_lazy(&t2, Hu::new(&t1, b.clone())?)
}

pub fn compose_relabeling(b: &TwoVpt, relab: &Vpt, cap: usize) -> Result<TwoVpt> {
    materialize(&compose_relabeling_lazy(b, relab)?, cap)
}

/// Annotates each letter with the checker state after reading it, or with
/// `none` everywhere when the checker rejects.
pub fn lookaround_annotator(checker: &Vpa) -> Result<Vpt> {
    if !is_unambiguous(checker) {
        return Err(Error::NotUnambiguous);
    }
    let sigma = checker.alphabet().clone();
    let k = checker.num_states() as u32;
    let tag = |q: u32| if q == k { "none".to_string() } else { checker.states()[q as usize].clone() };
    let calls: Vec<String> =
        sigma.calls().iter().flat_map(|c| (0..=k).map(move |q| (c, q))).map(|(c, q)| format!("{c}@{}", tag(q))).collect();
    let rets: Vec<String> =
        sigma.returns().iter().flat_map(|r| (0..=k).map(move |q| (r, q))).map(|(r, q)| format!("{r}@{}", tag(q))).collect();
    let structure = Arc::new(StructuredAlphabet::new(&calls, &rets)?);
    let nc = calls.len() as u32;
    let sym_call = |c: u32, q: u32| c * (k + 1) + q;
    let sym_ret = |r: u32, q: u32| nc + r * (k + 1) + q;

    // The checker itself, then the complement of its determinization.
    let d = determinize_vpa(checker);
    let (n1, g1) = (checker.num_states() as u32, checker.stack().len() as u32);
    let mut states: Vec<String> = checker.states().iter().map(|s| format!("a.{s}")).collect();
    states.extend(d.states().iter().map(|s| format!("r.{s}")));
    let mut stack: Vec<String> = checker.stack().iter().map(|s| format!("a.{s}")).collect();
    stack.extend(d.stack().iter().map(|s| format!("r.{s}")));
    let mut push = Vec::new();
    let mut push_out = Vec::new();
    let mut pop = Vec::new();
    let mut pop_out = Vec::new();
    for p in checker.push_rules() {
        push.push(*p);
        push_out.push(vec![sym_call(p.call, p.to)]);
    }
    for p in checker.pop_rules() {
        pop.push(*p);
        pop_out.push(vec![sym_ret(p.ret, p.to)]);
    }
    for p in d.push_rules() {
        push.push(PushRule { from: p.from + n1, call: p.call, to: p.to + n1, gamma: p.gamma + g1 });
        push_out.push(vec![sym_call(p.call, k)]);
    }
    for p in d.pop_rules() {
        pop.push(PopRule { from: p.from + n1, ret: p.ret, gamma: p.gamma + g1, to: p.to + n1 });
        pop_out.push(vec![sym_ret(p.ret, k)]);
    }
    let mut initial = checker.initial().to_vec();
    initial.extend(d.initial().iter().map(|q| q + n1));
    let mut finals: Vec<u32> = checker.finals().collect();
    finals.extend((0..d.num_states() as u32).filter(|&q| !d.is_final(q)).map(|q| q + n1));
    let vpa = Vpa::new(sigma, states, initial, finals, stack, push, pop)?;
    let names = calls.iter().chain(&rets).cloned().collect();
    Vpt::new(vpa, names, push_out, pop_out)?.with_structure(structure)
}

/// Replaces guard tests by reading annotations; a guarded rule fires on its
/// guard state only, an unguarded rule on every annotation.
fn read_annotations(t: &TwoVpt, structure: &Arc<StructuredAlphabet>, k: u32) -> Result<TwoVpt> {
    let la = t.lookaround.as_ref().expect("look-around present");
    let a = &t.automaton;
    let mut rules = Vec::new();
    let mut outputs = Vec::new();
    for (i, r) in a.rules().iter().enumerate() {
        let tags: Vec<u32> = match la.guards[i] {
            Some(g) => vec![g],
            None => (0..=k).collect(),
        };
        let letters: Vec<Letter> = match r.letter {
            Letter::Call(c) => tags.iter().map(|&q| Letter::Call(c * (k + 1) + q)).collect(),
            Letter::Ret(x) => tags.iter().map(|&q| Letter::Ret(x * (k + 1) + q)).collect(),
            m => vec![m],
        };
        for l in letters {
            rules.push(Rule { letter: l, ..*r });
            outputs.push(t.outputs[i].clone());
        }
    }
    let finals: Vec<u32> = a.finals().collect();
    let b = TwoVpa::new(structure.clone(), a.states().to_vec(), a.initial(), finals, a.stack().to_vec(), rules)?;
    TwoVpt::new(b, t.output_alphabet.clone(), outputs, None)
}

/// The look-around-free machine as a lazy composition.
pub fn remove_lookaround_lazy(t: &TwoVpt) -> Result<Relabeled> {
    let Some(la) = &t.lookaround else {
        return Err(Error::InvalidMachine("no look-around to remove".into()));
    };
    if let Some((k1, k2)) = t.guard_conflict() {
        return Err(Error::GuardsNotDisjoint(format!("rules {} and {}", k1 + 1, k2 + 1)));
    }
    let ann = lookaround_annotator(&la.checker)?;
    let structure = ann.output_structure.clone().expect("structured annotations");
    let t2 = read_annotations(t, &structure, la.checker.num_states() as u32)?;
    compose_relabeling_lazy(&t2, &ann)
}

pub fn remove_lookaround(t: &TwoVpt, cap: usize) -> Result<TwoVpt> {
    materialize(&remove_lookaround_lazy(t)?, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::{enumerate_nested_words, NestedWord};
    use crate::samples::{codet_fixtures, hu_fixtures, lookaround_fixtures, relabeling_fixtures, CompositionPair};
    use crate::twovpt::{evaluate_d2vpt, run_deterministic, EvalMode};
    use crate::vpa::evaluate_vpt;

    fn pipeline(p: &CompositionPair, w: &NestedWord) -> Option<Vec<u32>> {
        let mids = evaluate_vpt(&p.first, w);
        assert!(mids.len() <= 1);
        let mid = mids.into_iter().next()?;
        let sigma = p.first.output_structure.clone().unwrap();
        let nc = sigma.num_calls() as u32;
        let letters = mid.iter().map(|&s| if s < nc { Letter::Call(s) } else { Letter::Ret(s - nc) }).collect();
        let v = NestedWord::from_letters(&sigma, letters).unwrap();
        evaluate_d2vpt(&p.second, &v, EvalMode::Checked).ok()
    }

    fn lazy<M: TwoWay>(m: &M, w: &NestedWord) -> Option<Vec<u32>> {
        match run_deterministic(m, w, &[], EvalMode::Checked, None) {
            Ok(e) => Some(e.output),
            Err(Error::NotDeterministic(s)) => panic!("{s} on {w}"),
            Err(_) => None,
        }
    }

    fn check<M: TwoWay>(name: &str, m: &M, p: &CompositionPair, len: usize) {
        for w in enumerate_nested_words(p.first.vpa.alphabet(), len) {
            assert_eq!(lazy(m, &w), pipeline(p, &w), "{name} on {w}");
        }
    }

    #[test]
    fn hu_matches_pipeline() {
        for p in hu_fixtures() {
            let m = Hu::new(&p.first, p.second.clone()).unwrap();
            check(p.name, &m, &p, 8);
        }
    }

    #[test]
    fn codet_matches_pipeline() {
        for p in codet_fixtures() {
            let m = compose_hu_codet_lazy(&p.first, p.second.clone()).unwrap();
            check(p.name, &m, &p, 8);
        }
    }

    #[test]
    fn relabeling_matches_pipeline() {
        for p in relabeling_fixtures() {
            let m = compose_relabeling_lazy(&p.second, &p.first).unwrap();
            check(p.name, &m, &p, 8);
        }
    }

    #[test]
    fn mirror_reverses() {
        let p = &hu_fixtures()[2];
        let m = Mirror::new(p.second.clone()).unwrap();
        for w in enumerate_nested_words(p.second.alphabet(), 6) {
            let direct = evaluate_d2vpt(&p.second, &w, EvalMode::Checked).ok();
            let mw = NestedWord::from_letters(m.alphabet(), w.mirror().letters().to_vec()).unwrap();
            assert_eq!(lazy(&m, &mw), direct, "{w}");
        }
    }

    #[test]
    fn lookaround_removal_matches_checked_mode() {
        for (name, t) in lookaround_fixtures() {
            let m = remove_lookaround_lazy(&t).unwrap();
            for w in enumerate_nested_words(t.alphabet(), 8) {
                assert_eq!(lazy(&m, &w), evaluate_d2vpt(&t, &w, EvalMode::Checked).ok(), "{name} on {w}");
            }
        }
    }

    #[test]
    fn materialized_is_deterministic_and_agrees() {
        let p = &hu_fixtures()[0];
        let c = compose_hu(&p.first, &p.second, DEFAULT_STATE_CAP).unwrap();
        assert!(c.is_deterministic());
        for w in enumerate_nested_words(c.alphabet(), 8) {
            assert_eq!(evaluate_d2vpt(&c, &w, EvalMode::Checked).ok(), pipeline(p, &w), "{w}");
        }
    }

    #[test]
    fn errors() {
        let p = &hu_fixtures()[0];
        let e = codet_fixtures().remove(0);
        assert!(matches!(Hu::new(&e.first, e.second.clone()), Err(Error::NotDeterministic(_))));
        assert!(matches!(Hu::new(&p.first, e.second.clone()), Err(Error::AlphabetMismatch)));
        let r = relabeling_fixtures().remove(2);
        assert!(matches!(compose_hu_codet_lazy(&r.first, r.second.clone()), Err(Error::NotCoDeterministic(_))));
    }
}
