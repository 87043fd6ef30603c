//! Binary relations over a finite set of states and the four-block algebra
//! shared by traversals and output matrices.

use std::fmt;

/// A boolean `n x n` matrix stored as packed rows.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rel {
    n: u32,
    words: u32,
    bits: Box<[u64]>,
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl Rel {
    pub fn empty(n: usize) -> Rel {
        let words = n.div_ceil(64).max(1);
        Rel { n: n as u32, words: words as u32, bits: vec![0; n * words].into_boxed_slice() }
    }

    pub fn identity(n: usize) -> Rel {
        let mut r = Rel::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Rel {
        let mut r = Rel::empty(n);
        for (i, j) in pairs {
            r.insert(i, j);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n as usize
    }

    fn row(&self, i: usize) -> &[u64] {
        let w = self.words as usize;
        &self.bits[i * w..(i + 1) * w]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        let w = self.words as usize;
        &mut self.bits[i * w..(i + 1) * w]
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.row_mut(i)[j / 64] |= 1 << (j % 64);
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(i))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size()).flat_map(move |i| self.successors(i).map(move |j| (i, j)))
    }

    /// Diagrammatic composition: `(a, c)` iff `(a, b)` in `self` and `(b, c)` in `other`.
    pub fn then(&self, other: &Rel) -> Rel {
        let mut out = Rel::empty(self.size());
        let w = self.words as usize;
        for i in 0..self.size() {
            let mut acc = vec![0u64; w];
            for j in self.successors(i) {
                for (a, b) in acc.iter_mut().zip(other.row(j)) {
                    *a |= b;
                }
            }
            out.row_mut(i).copy_from_slice(&acc);
        }
        out
    }

    pub fn union(&self, other: &Rel) -> Rel {
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(other.bits.iter()) {
            *a |= b;
        }
        out
    }

    pub fn intersects(&self, other: &Rel) -> bool {
        self.bits.iter().zip(other.bits.iter()).any(|(a, b)| a & b != 0)
    }

    /// Reflexive-transitive closure (Warshall).
    pub fn star(&self) -> Rel {
        let mut r = self.clone();
        for k in 0..self.size() {
            let row_k: Vec<u64> = r.row(k).to_vec();
            for i in 0..self.size() {
                if r.contains(i, k) {
                    for (a, b) in r.row_mut(i).iter_mut().zip(&row_k) {
                        *a |= b;
                    }
                }
            }
        }
        r.union(&Rel::identity(self.size()))
    }

    /// Image of a set of states.
    pub fn image(&self, set: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.size());
        for i in set.iter() {
            for (a, b) in out.bits.iter_mut().zip(self.row(i)) {
                *a |= b;
            }
        }
        out
    }

    /// States that reach `set` in one step.
    pub fn preimage(&self, set: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.size());
        for i in 0..self.size() {
            if self.row(i).iter().zip(&set.bits).any(|(a, b)| a & b != 0) {
                out.insert(i);
            }
        }
        out
    }

    pub fn row_set(&self, i: usize) -> BitSet {
        BitSet { n: self.n, bits: self.row(i).to_vec().into_boxed_slice() }
    }
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(k, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + t)
            }
        })
    })
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    n: u32,
    bits: Box<[u64]>,
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl BitSet {
    pub fn new(n: usize) -> BitSet {
        BitSet { n: n as u32, bits: vec![0; n.div_ceil(64).max(1)].into_boxed_slice() }
    }

    pub fn from_iter(n: usize, items: impl IntoIterator<Item = usize>) -> BitSet {
        let mut s = BitSet::new(n);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        iter_bits(&self.bits)
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.bits.iter().zip(other.bits.iter()).any(|(a, b)| a & b != 0)
    }
}

/// The operations the traversal formulas need. Boolean relations and
/// word-valued matrices both implement it.
pub trait RelAlgebra: Clone {
    fn zero(n: usize) -> Self;
    fn one(n: usize) -> Self;
    fn then(&self, other: &Self) -> Self;
    fn join(&self, other: &Self) -> Self;
    fn star(&self) -> Self;
}

impl RelAlgebra for Rel {
    fn zero(n: usize) -> Self {
        Rel::empty(n)
    }
    fn one(n: usize) -> Self {
        Rel::identity(n)
    }
    fn then(&self, other: &Self) -> Self {
        Rel::then(self, other)
    }
    fn join(&self, other: &Self) -> Self {
        self.union(other)
    }
    fn star(&self) -> Self {
        Rel::star(self)
    }
}

/// Four relations indexed by entry side and exit side: `ll` enters from the
/// left and leaves to the left, `lr` enters left and leaves right, and so on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad<R> {
    pub ll: R,
    pub lr: R,
    pub rl: R,
    pub rr: R,
}

impl<R: RelAlgebra> Quad<R> {
    /// The class of the empty word.
    pub fn unit(n: usize) -> Self {
        Quad { ll: R::zero(n), lr: R::one(n), rl: R::one(n), rr: R::zero(n) }
    }

    pub fn concat(&self, v: &Quad<R>) -> Quad<R> {
        let u = self;
        let right_loop = v.ll.then(&u.rr).star();
        let left_loop = u.rr.then(&v.ll).star();
        Quad {
            ll: u.ll.join(&u.lr.then(&right_loop).then(&v.ll).then(&u.rl)),
            lr: u.lr.then(&right_loop).then(&v.lr),
            rl: v.rl.then(&left_loop).then(&u.rl),
            rr: v.rr.join(&v.rl.then(&left_loop).then(&u.rr).then(&v.lr)),
        }
    }

    /// Wraps `w` between a call and a return whose pushes and pops are
    /// described per stack symbol by `rules`.
    pub fn wrap(w: &Quad<R>, rules: &[GammaRules<R>], n: usize) -> Quad<R> {
        let mut ll = [R::zero(n), R::zero(n)];
        let mut lr = [R::zero(n), R::zero(n)];
        let mut rl = [R::zero(n), R::zero(n)];
        let mut rr = [R::zero(n), R::zero(n)];
        for g in rules {
            let a_then_w_ll = g.call_push[FWD].then(&w.ll);
            let a_then_w_lr = g.call_push[FWD].then(&w.lr);
            let d_then_w_rl = g.ret_push[BWD].then(&w.rl);
            let d_then_w_rr = g.ret_push[BWD].then(&w.rr);
            for d in [FWD, BWD] {
                ll[d] = ll[d]
                    .join(&a_then_w_ll.then(&g.call_pop[d]))
                    .join(&g.call_push[BWD].then(&g.call_pop[d]));
                lr[d] = lr[d].join(&a_then_w_lr.then(&g.ret_pop[d]));
                rl[d] = rl[d].join(&d_then_w_rl.then(&g.call_pop[d]));
                rr[d] = rr[d]
                    .join(&d_then_w_rr.then(&g.ret_pop[d]))
                    .join(&g.ret_push[FWD].then(&g.ret_pop[d]));
            }
        }
        // Junction system: re-entering from the left (via ll/rl with d = fw)
        // or from the right (via lr/rr with d = bw).
        let [ll_f, ll_b] = ll;
        let [lr_f, lr_b] = lr;
        let [rl_f, rl_b] = rl;
        let [rr_f, rr_b] = rr;
        let ll_f_star = ll_f.star();
        let rr_b_star = rr_b.star();
        let m_ll = ll_f.join(&lr_b.then(&rr_b_star).then(&rl_f)).star();
        let m_lr = m_ll.then(&lr_b).then(&rr_b_star);
        let m_rr = rr_b.join(&rl_f.then(&ll_f_star).then(&lr_b)).star();
        let m_rl = m_rr.then(&rl_f).then(&ll_f_star);
        Quad {
            ll: m_ll.then(&ll_b).join(&m_lr.then(&rl_b)),
            lr: m_ll.then(&lr_f).join(&m_lr.then(&rr_f)),
            rl: m_rl.then(&ll_b).join(&m_rr.then(&rl_b)),
            rr: m_rl.then(&lr_f).join(&m_rr.then(&rr_f)),
        }
    }
}

pub const FWD: usize = 0;
pub const BWD: usize = 1;

/// Rule relations for one stack symbol of a call/return pair, indexed by the
/// direction after the move (`FWD` or `BWD`).
#[derive(Clone, Debug)]
pub struct GammaRules<R> {
    /// Push while reading the call forward.
    pub call_push: [R; 2],
    /// Pop while reading the call backward.
    pub call_pop: [R; 2],
    /// Pop while reading the return forward.
    pub ret_pop: [R; 2],
    /// Push while reading the return backward.
    pub ret_push: [R; 2],
}

impl<R: RelAlgebra> GammaRules<R> {
    pub fn empty(n: usize) -> Self {
        let z = || [R::zero(n), R::zero(n)];
        GammaRules { call_push: z(), call_pop: z(), ret_pop: z(), ret_push: z() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_then(a: &Rel, b: &Rel) -> Rel {
        let n = a.size();
        let mut out = Rel::empty(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if a.contains(i, j) && b.contains(j, k) {
                        out.insert(i, k);
                    }
                }
            }
        }
        out
    }

    fn naive_star(a: &Rel) -> Rel {
        let mut cur = Rel::identity(a.size());
        loop {
            let next = cur.union(&naive_then(&cur, a));
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    #[test]
    fn composition_is_diagrammatic() {
        let a = Rel::from_pairs(3, [(0, 1)]);
        let b = Rel::from_pairs(3, [(1, 2)]);
        assert_eq!(a.then(&b), Rel::from_pairs(3, [(0, 2)]));
        assert!(b.then(&a).is_empty());
    }

    #[test]
    fn random_relations_against_naive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in [1, 3, 7, 70] {
            for _ in 0..20 {
                let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let mut r = Rel::empty(n);
                    for i in 0..n {
                        for j in 0..n {
                            if rng.gen_bool(2.0 / (n as f64 + 1.0)) {
                                r.insert(i, j);
                            }
                        }
                    }
                    r
                };
                let a = mk(&mut rng);
                let b = mk(&mut rng);
                assert_eq!(a.then(&b), naive_then(&a, &b));
                assert_eq!(a.star(), naive_star(&a));
            }
        }
    }

    #[test]
    fn unit_is_neutral() {
        let q = Quad {
            ll: Rel::from_pairs(2, [(0, 1)]),
            lr: Rel::from_pairs(2, [(1, 1)]),
            rl: Rel::from_pairs(2, [(0, 0), (1, 0)]),
            rr: Rel::from_pairs(2, [(1, 0)]),
        };
        let e = Quad::<Rel>::unit(2);
        assert_eq!(e.concat(&q), q);
        assert_eq!(q.concat(&e), q);
    }

    #[test]
    fn bitset_image() {
        let r = Rel::from_pairs(4, [(0, 1), (1, 2), (3, 3)]);
        let s = BitSet::from_iter(4, [0, 3]);
        assert_eq!(r.image(&s).iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(r.preimage(&BitSet::from_iter(4, [2])).iter().collect::<Vec<_>>(), vec![1]);
    }
}
