use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::alphabet::{Letter, StructuredAlphabet};
use crate::error::{Error, Result};

/// A well-nested word over a structured alphabet together with its matching.
#[derive(Clone)]
pub struct NestedWord {
    alphabet: Arc<StructuredAlphabet>,
    letters: Vec<Letter>,
    partner: Vec<u32>,
    max_depth: usize,
}

impl PartialEq for NestedWord {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters && *self.alphabet == *other.alphabet
    }
}

impl Eq for NestedWord {}

impl std::hash::Hash for NestedWord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.letters.hash(state);
    }
}

impl fmt::Debug for NestedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NestedWord({:?})", self.to_string())
    }
}

impl fmt::Display for NestedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &a) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(self.alphabet.name(a))?;
        }
        Ok(())
    }
}

impl NestedWord {
    pub fn empty(alphabet: &Arc<StructuredAlphabet>) -> Self {
        NestedWord { alphabet: alphabet.clone(), letters: Vec::new(), partner: Vec::new(), max_depth: 0 }
    }

    pub fn parse(text: &str, alphabet: &Arc<StructuredAlphabet>) -> Result<Self> {
        let letters = text
            .split_whitespace()
            .map(|tok| alphabet.letter(tok).ok_or_else(|| Error::UnknownSymbol(tok.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_letters(alphabet, letters)
    }

    /// Builds the matching with one stack pass. Positions in errors are 1-based;
    /// unmatched calls at the end report the position of the innermost one.
    pub fn from_letters(alphabet: &Arc<StructuredAlphabet>, letters: Vec<Letter>) -> Result<Self> {
        let mut partner = vec![0u32; letters.len()];
        let mut open: Vec<usize> = Vec::new();
        let mut max_depth = 0;
        for (i, &a) in letters.iter().enumerate() {
            if a.is_marker() || !alphabet.contains(a) {
                return Err(Error::UnknownSymbol(format!("{a:?}")));
            }
            if a.is_call() {
                open.push(i);
                max_depth = max_depth.max(open.len());
            } else {
                let j = open.pop().ok_or(Error::NotWellNested { position: i + 1 })?;
                partner[i] = j as u32;
                partner[j] = i as u32;
            }
        }
        if let Some(&i) = open.last() {
            return Err(Error::NotWellNested { position: i + 1 });
        }
        Ok(NestedWord { alphabet: alphabet.clone(), letters, partner, max_depth })
    }

    pub fn alphabet(&self) -> &Arc<StructuredAlphabet> {
        &self.alphabet
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The symbol at 1-based position `i`.
    pub fn at(&self, i: usize) -> Letter {
        self.letters[i - 1]
    }

    /// Matching pairs `(call, return)` with 1-based positions, sorted by call.
    pub fn matching(&self) -> Vec<(usize, usize)> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_call())
            .map(|(i, _)| (i + 1, self.partner[i] as usize + 1))
            .collect()
    }

    /// The 1-based partner of the 1-based position `i`.
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i - 1] as usize + 1
    }

    /// Number of matched pairs strictly enclosing 1-based position `i`.
    pub fn depth_at(&self, i: usize) -> usize {
        let mut d: isize = 0;
        for &a in &self.letters[..i - 1] {
            d += if a.is_call() { 1 } else { -1 };
        }
        if !self.letters[i - 1].is_call() {
            d -= 1;
        }
        d as usize
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn concat(&self, other: &NestedWord) -> Result<NestedWord> {
        if *self.alphabet != *other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let shift = self.letters.len() as u32;
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        let mut partner = self.partner.clone();
        partner.extend(other.partner.iter().map(|p| p + shift));
        Ok(NestedWord {
            alphabet: self.alphabet.clone(),
            letters,
            partner,
            max_depth: self.max_depth.max(other.max_depth),
        })
    }

    pub fn wrap(c: Letter, w: &NestedWord, r: Letter) -> Result<NestedWord> {
        if !matches!(c, Letter::Call(_)) || !w.alphabet.contains(c) {
            return Err(Error::UnknownSymbol(format!("{c:?}")));
        }
        if !matches!(r, Letter::Ret(_)) || !w.alphabet.contains(r) {
            return Err(Error::UnknownSymbol(format!("{r:?}")));
        }
        let n = w.letters.len() as u32;
        let mut letters = Vec::with_capacity(w.len() + 2);
        letters.push(c);
        letters.extend_from_slice(&w.letters);
        letters.push(r);
        let mut partner = Vec::with_capacity(w.len() + 2);
        partner.push(n + 1);
        partner.extend(w.partner.iter().map(|p| p + 1));
        partner.push(0);
        Ok(NestedWord { alphabet: w.alphabet.clone(), letters, partner, max_depth: w.max_depth + 1 })
    }

    /// Substring strictly between the 1-based positions `i` and `j`.
    pub fn infix(&self, i: usize, j: usize) -> Result<NestedWord> {
        Self::from_letters(&self.alphabet, self.letters[i..j - 1].to_vec())
    }

    /// The word read right-to-left over the mirrored alphabet.
    pub fn mirror(&self) -> NestedWord {
        let alphabet = Arc::new(self.alphabet.mirror());
        let letters = self.letters.iter().rev().map(|a| a.mirror()).collect();
        Self::from_letters(&alphabet, letters).expect("mirror of a nested word is nested")
    }

    /// `▷ w ◁` as a letter sequence; index `i` holds the `i`-th letter of `w`.
    pub fn marked(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(self.letters.len() + 2);
        out.push(Letter::Left);
        out.extend_from_slice(&self.letters);
        out.push(Letter::Right);
        out
    }

    /// Folds the word through its hedge structure: concatenation of siblings and
    /// wrapping of matched pairs. Iterative, so deep words do not recurse.
    pub fn fold<T>(
        &self,
        unit: impl Fn() -> T,
        mut concat: impl FnMut(T, T) -> T,
        mut wrap: impl FnMut(Letter, T, Letter) -> T,
    ) -> T {
        let mut frames: Vec<(Letter, T)> = Vec::new();
        let mut acc = unit();
        for &a in &self.letters {
            if a.is_call() {
                let outer = std::mem::replace(&mut acc, unit());
                frames.push((a, outer));
            } else {
                let (c, outer) = frames.pop().expect("well-nested");
                let inner = std::mem::replace(&mut acc, unit());
                let wrapped = wrap(c, inner, a);
                acc = concat(outer, wrapped);
            }
        }
        acc
    }
}

/// Every well-nested word of length at most `max_length`, by length and then
/// lexicographically (calls before returns, declaration order within a class).
pub fn enumerate_nested_words(
    alphabet: &Arc<StructuredAlphabet>,
    max_length: usize,
) -> impl Iterator<Item = NestedWord> + '_ {
    (0..=max_length / 2).flat_map(move |n| words_of_length(alphabet, 2 * n))
}

pub fn words_of_length(alphabet: &Arc<StructuredAlphabet>, len: usize) -> Vec<NestedWord> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    extend(alphabet, len, 0, &mut cur, &mut out);
    out
}

fn extend(
    alphabet: &Arc<StructuredAlphabet>,
    len: usize,
    depth: usize,
    cur: &mut Vec<Letter>,
    out: &mut Vec<NestedWord>,
) {
    let remaining = len - cur.len();
    if remaining == 0 {
        out.push(NestedWord::from_letters(alphabet, cur.clone()).expect("generated nested"));
        return;
    }
    if remaining > depth {
        for c in alphabet.call_letters() {
            cur.push(c);
            extend(alphabet, len, depth + 1, cur, out);
            cur.pop();
        }
    }
    if depth > 0 {
        for r in alphabet.return_letters() {
            cur.push(r);
            extend(alphabet, len, depth - 1, cur, out);
            cur.pop();
        }
    }
}

/// A random well-nested word of even length at most `max_length` whose depth
/// never exceeds `max_depth`.
pub fn random_nested_word<R: Rng>(
    rng: &mut R,
    alphabet: &Arc<StructuredAlphabet>,
    max_length: usize,
    max_depth: usize,
) -> NestedWord {
    let len = if max_depth == 0 { 0 } else { 2 * rng.gen_range(0..=max_length / 2) };
    let mut letters = Vec::with_capacity(len);
    let mut depth = 0;
    while letters.len() < len {
        let remaining = len - letters.len();
        let can_call = depth < max_depth && remaining > depth + 1;
        let can_ret = depth > 0;
        let call = can_call && (!can_ret || rng.gen_bool(0.5));
        if call {
            letters.push(Letter::Call(rng.gen_range(0..alphabet.num_calls()) as u32));
            depth += 1;
        } else {
            letters.push(Letter::Ret(rng.gen_range(0..alphabet.num_returns()) as u32));
            depth -= 1;
        }
    }
    NestedWord::from_letters(alphabet, letters).expect("generated nested")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cr() -> Arc<StructuredAlphabet> {
        StructuredAlphabet::shared(&["c"], &["r"]).unwrap()
    }

    // Independent matcher: repeatedly cancel an adjacent call/return pair.
    fn matching_by_cancellation(w: &[Letter]) -> Vec<(usize, usize)> {
        let mut alive: Vec<usize> = (0..w.len()).collect();
        let mut pairs = Vec::new();
        loop {
            let k = alive.windows(2).position(|p| w[p[0]].is_call() && !w[p[1]].is_call());
            match k {
                Some(k) => {
                    pairs.push((alive[k] + 1, alive[k + 1] + 1));
                    alive.drain(k..k + 2);
                }
                None => break,
            }
        }
        pairs.sort();
        pairs
    }

    #[test]
    fn parse_examples() {
        let a = cr();
        assert!(NestedWord::parse("", &a).unwrap().matching().is_empty());
        assert_eq!(NestedWord::parse("c r c r", &a).unwrap().matching(), vec![(1, 2), (3, 4)]);
        let w = NestedWord::parse("c c r r c r", &a).unwrap();
        assert_eq!(w.matching(), matching_by_cancellation(w.letters()));
        assert_eq!(w.matching(), vec![(1, 4), (2, 3), (5, 6)]);
    }

    #[test]
    fn parse_errors() {
        let a = cr();
        assert_eq!(NestedWord::parse("c x", &a), Err(Error::UnknownSymbol("x".into())));
        assert_eq!(NestedWord::parse("c r r", &a), Err(Error::NotWellNested { position: 3 }));
        assert_eq!(NestedWord::parse("c c r", &a), Err(Error::NotWellNested { position: 1 }));
        assert!(NestedWord::parse("<L>", &a).is_err());
    }

    #[test]
    fn concat_and_wrap() {
        let a = cr();
        let eps = NestedWord::empty(&a);
        let w = NestedWord::parse("c c r r", &a).unwrap();
        assert_eq!(eps.concat(&w).unwrap(), w);
        let crcr = NestedWord::parse("c r", &a).unwrap().concat(&NestedWord::parse("c r", &a).unwrap()).unwrap();
        assert_eq!(crcr.matching(), vec![(1, 2), (3, 4)]);
        let u = w.concat(&NestedWord::parse("c r", &a).unwrap()).unwrap();
        let reparsed = NestedWord::parse(&u.to_string(), &a).unwrap();
        assert_eq!(u.matching(), reparsed.matching());
        assert_eq!(u.matching(), vec![(1, 4), (2, 3), (5, 6)]);

        let c = a.letter("c").unwrap();
        let r = a.letter("r").unwrap();
        assert_eq!(NestedWord::wrap(c, &eps, r).unwrap().to_string(), "c r");
        let ccrr = NestedWord::wrap(c, &NestedWord::parse("c r", &a).unwrap(), r).unwrap();
        assert_eq!(ccrr.matching(), vec![(1, 4), (2, 3)]);
        let twice = NestedWord::wrap(c, &NestedWord::wrap(c, &eps, r).unwrap(), r).unwrap();
        let depth_oracle = (1..=twice.len()).map(|i| twice.depth_at(i) + 1).max().unwrap();
        assert_eq!(twice.max_depth(), depth_oracle);
        assert_eq!(twice.max_depth(), 2);

        let other = StructuredAlphabet::shared(&["d"], &["r"]).unwrap();
        assert_eq!(eps.concat(&NestedWord::empty(&other)), Err(Error::AlphabetMismatch));
    }

    #[test]
    fn enumeration_counts() {
        let a = cr();
        let all: Vec<_> = enumerate_nested_words(&a, 0).collect();
        assert_eq!(all, vec![NestedWord::empty(&a)]);
        let two: Vec<String> = enumerate_nested_words(&a, 2).map(|w| w.to_string()).collect();
        assert_eq!(two, vec!["", "c r"]);
        assert_eq!(enumerate_nested_words(&a, 6).count(), 9);
        // Catalan numbers by the recurrence C(n+1) = sum C(i) C(n-i).
        let mut catalan = vec![1usize];
        for n in 0..6 {
            catalan.push((0..=n).map(|i| catalan[i] * catalan[n - i]).sum());
        }
        for n in 0..=6 {
            assert_eq!(words_of_length(&a, 2 * n).len(), catalan[n]);
        }
    }

    #[test]
    fn enumeration_is_ordered_and_distinct() {
        let a = StructuredAlphabet::shared(&["a", "b"], &["x", "y"]).unwrap();
        let words: Vec<_> = enumerate_nested_words(&a, 6).collect();
        for pair in words.windows(2) {
            let (u, v) = (&pair[0], &pair[1]);
            assert!((u.len(), u.letters()) < (v.len(), v.letters()));
        }
    }

    #[test]
    fn round_trip_and_infixes() {
        let a = StructuredAlphabet::shared(&["a", "b"], &["x"]).unwrap();
        for w in enumerate_nested_words(&a, 10) {
            assert_eq!(NestedWord::parse(&w.to_string(), &a).unwrap(), w);
            assert_eq!(w.matching(), matching_by_cancellation(w.letters()));
            for (i, j) in w.matching() {
                assert!(w.infix(i, j).is_ok());
                assert!(w.depth_at(i) < w.depth_at(i + 1) || j == i + 1);
            }
            assert_eq!(w.mirror().mirror(), w);
        }
    }

    #[test]
    fn concat_neutral_and_associative() {
        let a = cr();
        let words: Vec<_> = enumerate_nested_words(&a, 4).collect();
        let eps = NestedWord::empty(&a);
        for u in &words {
            assert_eq!(u.concat(&eps).unwrap(), *u);
            assert_eq!(eps.concat(u).unwrap(), *u);
            for v in &words {
                for w in &words {
                    let l = u.concat(v).unwrap().concat(w).unwrap();
                    let r = u.concat(&v.concat(w).unwrap()).unwrap();
                    assert_eq!(l, r);
                    assert_eq!(l.matching(), r.matching());
                }
            }
        }
    }

    #[test]
    fn fold_rebuilds_word() {
        let a = StructuredAlphabet::shared(&["a", "b"], &["x", "y"]).unwrap();
        for w in enumerate_nested_words(&a, 8) {
            let rebuilt = w.fold(
                || NestedWord::empty(&a),
                |u, v| u.concat(&v).unwrap(),
                |c, inner, r| NestedWord::wrap(c, &inner, r).unwrap(),
            );
            assert_eq!(rebuilt, w);
        }
    }

    #[test]
    fn random_words_respect_bounds() {
        use rand::SeedableRng;
        let a = cr();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w = random_nested_word(&mut rng, &a, 12, 3);
            assert!(w.len() <= 12);
            assert!(w.max_depth() <= 3);
        }
    }
}
