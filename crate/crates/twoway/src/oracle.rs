//! Differential suites. Each one runs a construction against a brute-force
//! reference (configuration-graph search, run simulation or a composed
//! pipeline) on every short word and on random deep words.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Dir, Letter, StructuredAlphabet};
use crate::compose::{compose_hu, compose_hu_codet, compose_relabeling, remove_lookaround};
use crate::error::Result;
use crate::exec::Exec;
use crate::format::Machine;
use crate::nested::{enumerate_nested_words, random_nested_word, NestedWord};
use crate::samples::identity_relabeling;
use crate::stst::{d2vpt_to_stst, evaluate_stst};
use crate::twovpa::{
    accepts_2vpa, accepts_oracle, compute_algebra, exit_side, successors, traversal_oracle, two_vpa_to_dvpa,
    Config, TwoVpa, TwoWay, WrapRules,
};
use crate::twovpt::{evaluate_d2vpt, is_single_use, type_check, EvalMode, SingleUse, TwoVpt, TypeCheck};
use crate::vpa::{evaluate_vpt, Emptiness, Nfa, Vpa, Vpt};

/// Which words a suite runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    /// Every well-nested word up to this length.
    pub max_len: usize,
    /// Number of additional random words.
    pub random: usize,
    pub random_len: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for Sample {
    fn default() -> Self {
        Sample { max_len: 8, random: 200, random_len: 24, max_depth: 6, seed: 0 }
    }
}

impl Sample {
    pub fn exhaustive(max_len: usize) -> Sample {
        Sample { max_len, random: 0, ..Sample::default() }
    }

    pub fn words(&self, sigma: &Arc<StructuredAlphabet>) -> Vec<NestedWord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out: Vec<NestedWord> = enumerate_nested_words(sigma, self.max_len).collect();
        out.extend((0..self.random).map(|_| random_nested_word(&mut rng, sigma, self.random_len, self.max_depth)));
        out
    }
}

/// Outcome of one suite on one subject.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub property: String,
    pub subject: String,
    pub checked: usize,
    pub mismatches: Vec<String>,
    /// Extra `key=value` facts such as sizes and verdicts.
    pub facts: Vec<(String, String)>,
}

impl Report {
    fn new(property: &str, subject: &str) -> Report {
        Report { property: property.into(), subject: subject.into(), ..Report::default() }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn fact(&mut self, k: &str, v: impl ToString) {
        self.facts.push((k.into(), v.to_string()));
    }

    fn record(&mut self, results: Vec<Option<String>>) {
        self.checked += results.len();
        self.mismatches.extend(results.into_iter().flatten());
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{:<12} {:<24} {verdict} checked={} mismatches={}",
            self.property,
            self.subject,
            self.checked,
            self.mismatches.len()
        )?;
        for (k, v) in &self.facts {
            write!(f, " {k}={v}")?;
        }
        for m in self.mismatches.iter().take(3) {
            write!(f, "\n    {m}")?;
        }
        Ok(())
    }
}

/// The algebraic fold and the computed algebra against configuration-graph
/// traversals.
pub fn morphism_suite(subject: &str, a: &TwoVpa, s: &Sample, cap: usize, exec: Exec) -> Result<Report> {
    let alg = compute_algebra(a, cap, exec)?;
    let rules = WrapRules::new(a);
    let mut r = Report::new("morphism", subject);
    r.fact("algebra", alg.len());
    r.record(exec.map(&s.words(a.alphabet()), |w| {
        let want = traversal_oracle(a, w);
        if rules.fold(w) != want {
            Some(format!("fold differs on {w}"))
        } else if *alg.element(alg.eval(w)) != want {
            Some(format!("algebra class differs on {w}"))
        } else {
            None
        }
    }));
    Ok(r)
}

/// Membership of the one-way deterministic translation against
/// configuration-graph search.
pub fn determinization_suite(subject: &str, a: &TwoVpa, s: &Sample, cap: usize, exec: Exec) -> Result<Report> {
    let d = two_vpa_to_dvpa(a, cap, exec)?;
    let mut r = Report::new("determinize", subject);
    r.fact("dvpa-states", d.num_states());
    if !d.is_deterministic() {
        r.mismatches.push("result is not deterministic".into());
    }
    if d.num_states() > cap {
        r.mismatches.push(format!("{} states exceed the cap {cap}", d.num_states()));
    }
    r.record(exec.map(&s.words(a.alphabet()), |w| {
        let (got, want) = (d.accepts(w), accepts_oracle(a, w, &[]));
        (got != want).then(|| format!("{w}: dvpa {got}, search {want}"))
    }));
    Ok(r)
}

/// The emptiness verdict against exhaustive search, with the witness replayed.
pub fn emptiness_suite(subject: &str, a: &TwoVpa, max_len: usize, cap: usize, exec: Exec) -> Result<Report> {
    let verdict = crate::twovpa::is_empty_2vpa(a, cap, exec)?;
    let words: Vec<NestedWord> = enumerate_nested_words(a.alphabet(), max_len).collect();
    let accepted = exec.map(&words, |w| accepts_oracle(a, w, &[]));
    let first = words.iter().zip(&accepted).find(|(_, &ok)| ok).map(|(w, _)| w);
    let mut r = Report::new("emptiness", subject);
    r.checked = words.len();
    match (&verdict, first) {
        (Emptiness::Empty, Some(w)) => r.mismatches.push(format!("declared empty but accepts {w}")),
        (Emptiness::Empty, None) => r.fact("verdict", "empty"),
        (Emptiness::NonEmpty(w), found) => {
            r.fact("verdict", "nonempty");
            r.fact("witness", format!("\"{w}\""));
            if !accepts_2vpa(a, w) || !accepts_oracle(a, w, &[]) {
                r.mismatches.push(format!("witness {w} is rejected"));
            }
            if found.is_none() && w.len() <= max_len {
                r.mismatches.push(format!("search finds no word but the witness {w} is short"));
            }
        }
    }
    Ok(r)
}

/// Output of `second` on the output of `first`.
pub fn pipeline(first: &Vpt, second: &TwoVpt, w: &NestedWord) -> Option<Vec<u32>> {
    let mid = evaluate_vpt(first, w).into_iter().next()?;
    let sigma = first.output_structure.as_ref()?;
    let nc = sigma.num_calls() as u32;
    let letters = mid.iter().map(|&s| if s < nc { Letter::Call(s) } else { Letter::Ret(s - nc) }).collect();
    let v = NestedWord::from_letters(sigma, letters).ok()?;
    evaluate_d2vpt(second, &v, EvalMode::Checked).ok()
}

fn agreement<F>(property: &str, subject: &str, result: &TwoVpt, reference: F, words: &[NestedWord], exec: Exec) -> Report
where
    F: Fn(&NestedWord) -> Option<Vec<u32>> + Sync + Send,
{
    let mut r = Report::new(property, subject);
    r.fact("states", result.automaton.num_states());
    if !result.is_deterministic() {
        r.mismatches.push("result is not deterministic".into());
    }
    r.record(exec.map(words, |w| {
        let got = evaluate_d2vpt(result, w, EvalMode::Checked).ok();
        let want = reference(w);
        (got != want).then(|| {
            let show = |o: &Option<Vec<u32>>| o.as_ref().map_or("undefined".into(), |o| format!("\"{}\"", result.render(o)));
            format!("{w}: got {}, want {}", show(&got), show(&want))
        })
    }));
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Deterministic letter-to-letter first stage.
    Hu,
    /// Co-deterministic letter-to-letter first stage.
    Codet,
    /// Unambiguous letter-to-letter first stage.
    Relabeling,
}

impl Construction {
    pub const ALL: [Construction; 3] = [Construction::Hu, Construction::Codet, Construction::Relabeling];

    pub fn name(self) -> &'static str {
        match self {
            Construction::Hu => "compose-hu",
            Construction::Codet => "compose-codet",
            Construction::Relabeling => "compose-relab",
        }
    }

    pub fn build(self, first: &Vpt, second: &TwoVpt, cap: usize) -> Result<TwoVpt> {
        match self {
            Construction::Hu => compose_hu(first, second, cap),
            Construction::Codet => compose_hu_codet(first, second, cap),
            Construction::Relabeling => compose_relabeling(second, first, cap),
        }
    }
}

/// A materialized composition against the two-stage pipeline.
pub fn composition_suite(
    kind: Construction,
    subject: &str,
    first: &Vpt,
    second: &TwoVpt,
    s: &Sample,
    cap: usize,
    exec: Exec,
) -> Result<Report> {
    let c = kind.build(first, second, cap)?;
    let words = s.words(first.vpa.alphabet());
    Ok(agreement(kind.name(), subject, &c, |w| pipeline(first, second, w), &words, exec))
}

/// Look-around removal against checked evaluation of the original.
pub fn lookaround_suite(subject: &str, t: &TwoVpt, s: &Sample, cap: usize, exec: Exec) -> Result<Report> {
    let c = remove_lookaround(t, cap)?;
    let words = s.words(t.alphabet());
    let mut r = agreement("remove-la", subject, &c, |w| evaluate_d2vpt(t, w, EvalMode::Checked).ok(), &words, exec);
    if c.lookaround.is_some() {
        r.mismatches.push("result still has look-around".into());
    }
    Ok(r)
}

/// The register machine against direct evaluation.
pub fn translation_suite(subject: &str, t: &TwoVpt, s: &Sample, cap: usize, exec: Exec) -> Result<Report> {
    let st = d2vpt_to_stst(t, cap, exec)?;
    let mut r = Report::new("translation", subject);
    r.fact("stst-states", st.states().len());
    r.fact("registers", st.registers().len());
    r.fact("copyless", st.is_copyless());
    r.record(exec.map(&s.words(t.alphabet()), |w| {
        let got = evaluate_stst(&st, w).ok();
        let want = evaluate_d2vpt(t, w, EvalMode::Checked).ok();
        (got != want).then(|| format!("{w}: stst {got:?}, direct {want:?}"))
    }));
    Ok(r)
}

/// Bound on the number of runs enumerated per word.
pub const RUN_CAP: usize = 100_000;

/// Enumerates the accepting runs of `t` on `w` that never repeat a
/// configuration and collects the (position, producing state) pairs visited
/// at least twice by one of them. Positions count letters of `w` from 1.
pub fn repeated_visits(t: &TwoVpt, w: &NestedWord, producing: &[u32]) -> BTreeSet<(usize, u32)> {
    struct Search<'a> {
        t: &'a TwoVpt,
        word: Vec<Letter>,
        n: usize,
        producing: HashSet<u32>,
        on_path: HashSet<Config<u32, u32>>,
        visits: Vec<(usize, u32)>,
        found: BTreeSet<(usize, u32)>,
        runs: usize,
    }
    impl Search<'_> {
        fn go(&mut self, c: Config<u32, u32>) {
            if self.runs >= RUN_CAP {
                return;
            }
            if exit_side(self.word.len(), &c).is_some() {
                self.runs += 1;
                if c.dir == Dir::Fwd && self.t.is_final(&c.state) {
                    let mut sorted = self.visits.clone();
                    sorted.sort_unstable();
                    self.found.extend(sorted.windows(2).filter(|p| p[0] == p[1]).map(|p| p[0]));
                }
                return;
            }
            if !self.on_path.insert(c.clone()) {
                return;
            }
            let i = crate::twovpa::read_index(self.word.len(), c.pos, c.dir).expect("inside");
            let counted = (1..=self.n).contains(&i) && self.producing.contains(&c.state);
            if counted {
                self.visits.push((i, c.state));
            }
            for (next, _) in successors(self.t, &self.word, &[], &c) {
                self.go(next);
            }
            if counted {
                self.visits.pop();
            }
            self.on_path.remove(&c);
        }
    }
    let mut s = Search {
        t,
        word: w.marked(),
        n: w.len(),
        producing: producing.iter().copied().collect(),
        on_path: HashSet::new(),
        visits: Vec::new(),
        found: BTreeSet::new(),
        runs: 0,
    };
    s.go(Config { state: t.initial(), pos: 0, dir: Dir::Fwd, stack: Vec::new() });
    s.found
}

/// The single-use decision against run enumeration on all words up to
/// `max_len`.
pub fn single_use_suite(
    subject: &str,
    t: &TwoVpt,
    producing: &[u32],
    max_len: usize,
    cap: usize,
    exec: Exec,
) -> Result<Report> {
    let verdict = is_single_use(t, producing, cap, exec)?;
    let words: Vec<NestedWord> = enumerate_nested_words(t.alphabet(), max_len).collect();
    let repeats = exec.map(&words, |w| !repeated_visits(t, w, producing).is_empty());
    let brute = words.iter().zip(&repeats).find(|(_, &b)| b).map(|(w, _)| w);
    let mut r = Report::new("single-use", subject);
    r.checked = words.len();
    r.fact("verdict", verdict.holds());
    match (&verdict, brute) {
        (SingleUse::Yes, Some(w)) => r.mismatches.push(format!("declared single-use but {w} revisits")),
        (SingleUse::Yes, None) => {}
        (SingleUse::No(wit), found) => {
            r.fact("witness", format!("\"{}\"@{}:{}", wit.word, wit.position, t.automaton.states()[wit.state as usize]));
            if !repeated_visits(t, &wit.word, producing).contains(&(wit.position, wit.state)) {
                r.mismatches.push("witness does not replay".into());
            }
            if found.is_none() && wit.word.len() <= max_len {
                r.mismatches.push("enumeration finds no revisit but the witness is short".into());
            }
        }
    }
    Ok(r)
}

/// Type checking against exhaustive evaluation, with the counterexample
/// replayed through evaluation and the range automaton.
pub fn type_check_suite(
    subject: &str,
    t: &TwoVpt,
    domain: &Vpa,
    range: &Nfa,
    max_len: usize,
    cap: usize,
    exec: Exec,
) -> Result<Report> {
    let escapes = |w: &NestedWord| {
        domain.accepts(w)
            && evaluate_d2vpt(t, w, EvalMode::Checked).is_ok_and(|out| {
                let names: Vec<&str> = out.iter().map(|&o| t.output_alphabet[o as usize].as_str()).collect();
                !range.accepts_names(&names)
            })
    };
    let verdict = type_check(t, domain, range, cap, exec)?;
    let words: Vec<NestedWord> = enumerate_nested_words(t.alphabet(), max_len).collect();
    let bad = exec.map(&words, |w| escapes(w));
    let brute = words.iter().zip(&bad).find(|(_, &b)| b).map(|(w, _)| w);
    let mut r = Report::new("typecheck", subject);
    r.checked = words.len();
    r.fact("verdict", verdict.holds());
    match (&verdict, brute) {
        (TypeCheck::Holds, Some(w)) => r.mismatches.push(format!("declared safe but {w} escapes")),
        (TypeCheck::Holds, None) => {}
        (TypeCheck::Counterexample(w), found) => {
            r.fact("counterexample", format!("\"{w}\""));
            if !escapes(w) {
                r.mismatches.push(format!("counterexample {w} does not replay"));
            }
            if found.is_none() && w.len() <= max_len {
                r.mismatches.push("enumeration finds no counterexample but the verdict's is short".into());
            }
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Morphism,
    Membership,
    Composition,
    Translation,
}

impl Property {
    pub const ALL: [Property; 4] = [Property::Morphism, Property::Membership, Property::Composition, Property::Translation];
}

impl std::str::FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "morphism" => Ok(Property::Morphism),
            "membership" => Ok(Property::Membership),
            "composition" => Ok(Property::Composition),
            "translation" => Ok(Property::Translation),
            _ => Err(format!("unknown property `{s}`")),
        }
    }
}

/// The suites of `property` that apply to `m`. Transducer-only properties
/// yield nothing on automata; a one-way machine is checked as a two-way one.
pub fn check_machine(
    subject: &str,
    m: &Machine,
    property: Property,
    s: &Sample,
    cap: usize,
    exec: Exec,
) -> Result<Vec<Report>> {
    let (automaton, transducer) = match m {
        Machine::Vpa(a) => (Some(TwoVpa::from_vpa(a)), None),
        Machine::TwoVpa(a) => (Some(a.clone()), None),
        Machine::TwoVpt(t) if t.lookaround.is_none() => (Some(t.automaton.clone()), Some(t)),
        Machine::TwoVpt(t) => (None, Some(t)),
        _ => (None, None),
    };
    let mut out = Vec::new();
    match property {
        Property::Morphism => {
            if let Some(a) = &automaton {
                out.push(morphism_suite(subject, a, s, cap, exec)?);
            }
        }
        Property::Membership => {
            if let Some(a) = &automaton {
                out.push(determinization_suite(subject, a, s, cap, exec)?);
                out.push(emptiness_suite(subject, a, s.max_len, cap, exec)?);
            }
        }
        Property::Composition => match transducer {
            Some(t) if t.lookaround.is_some() => out.push(lookaround_suite(subject, t, s, cap, exec)?),
            Some(t) => {
                let id = identity_relabeling(t.alphabet());
                for kind in Construction::ALL {
                    out.push(composition_suite(kind, subject, &id, t, s, cap, exec)?);
                }
            }
            None => {}
        },
        Property::Translation => {
            if let Some(t) = transducer.filter(|t| t.lookaround.is_none()) {
                out.push(translation_suite(subject, t, s, cap, exec)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{copy_transducer, single_use_fixtures, sorting_transducer};
    use crate::twovpa::DEFAULT_ALGEBRA_CAP;

    #[test]
    fn repeated_visits_on_a_rereading_run() {
        let (_, t, p) = single_use_fixtures().into_iter().find(|f| f.0 == "twice").unwrap();
        let w = NestedWord::parse("c r", t.alphabet()).unwrap();
        let f = t.automaton.states().iter().position(|s| s == "f").unwrap() as u32;
        assert_eq!(repeated_visits(&t, &w, &p), BTreeSet::from([(1, f), (2, f)]));
        let copy = copy_transducer(t.alphabet());
        assert!(repeated_visits(&copy, &w, &copy.producing_states()).is_empty());
    }

    #[test]
    fn sample_is_reproducible() {
        let sigma = sorting_transducer(2).alphabet().clone();
        let s = Sample { random: 20, ..Sample::exhaustive(4) };
        assert_eq!(s.words(&sigma), s.words(&sigma));
        assert_ne!(s.words(&sigma), Sample { seed: 1, ..s }.words(&sigma));
    }

    #[test]
    fn machine_check_covers_transducers() {
        let m = Machine::TwoVpt(sorting_transducer(2));
        let s = Sample { random: 10, ..Sample::exhaustive(4) };
        let mut n = 0;
        for p in Property::ALL {
            for r in check_machine("sorting2", &m, p, &s, DEFAULT_ALGEBRA_CAP, Exec::default()).unwrap() {
                assert!(r.passed(), "{r}");
                n += 1;
            }
        }
        assert_eq!(n, 7);
    }
}
