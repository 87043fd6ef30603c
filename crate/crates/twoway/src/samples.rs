//! Ready-made machines: the sorting transducer and small fixtures used by
//! the differential suites.

use std::collections::HashMap;
use std::sync::Arc;

use crate::alphabet::{Dir, Letter, StructuredAlphabet, LEFT_MARKER, RIGHT_MARKER};
use crate::format::parse_machine;
use crate::twovpa::{Rule, TwoVpa};
use crate::twovpt::TwoVpt;
use crate::vpa::{Nfa, PopRule, PushRule, Vpa, Vpt};

/// Incremental builder for two-way transducers with named states and stack
/// symbols.
pub struct Builder {
    alphabet: Arc<StructuredAlphabet>,
    outputs: Vec<String>,
    states: Vec<String>,
    state_ids: HashMap<String, u32>,
    stack: Vec<String>,
    stack_ids: HashMap<String, u32>,
    rules: Vec<Rule>,
    rule_out: Vec<Vec<u32>>,
}

impl Builder {
    pub fn new(alphabet: Arc<StructuredAlphabet>, outputs: &[&str]) -> Builder {
        Builder {
            alphabet,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            states: Vec::new(),
            state_ids: HashMap::new(),
            stack: Vec::new(),
            stack_ids: HashMap::new(),
            rules: Vec::new(),
            rule_out: Vec::new(),
        }
    }

    pub fn state(&mut self, name: &str) -> u32 {
        if let Some(&q) = self.state_ids.get(name) {
            return q;
        }
        self.states.push(name.to_string());
        self.state_ids.insert(name.to_string(), self.states.len() as u32 - 1);
        self.states.len() as u32 - 1
    }

    pub fn gamma(&mut self, name: &str) -> u32 {
        if let Some(&g) = self.stack_ids.get(name) {
            return g;
        }
        self.stack.push(name.to_string());
        self.stack_ids.insert(name.to_string(), self.stack.len() as u32 - 1);
        self.stack.len() as u32 - 1
    }

    pub fn letter(&self, name: &str) -> Letter {
        self.alphabet.extended_letter(name).unwrap_or_else(|| panic!("unknown letter {name}"))
    }

    /// Adds `from, dir --letter | out, ±gamma--> to, to_dir`.
    #[allow(clippy::too_many_arguments)]
    pub fn rule(&mut self, from: &str, dir: Dir, letter: &str, gamma: &str, to: &str, to_dir: Dir, out: &[&str]) {
        let rule = Rule {
            from: self.state(from),
            dir,
            letter: self.letter(letter),
            gamma: self.gamma(gamma),
            to: self.state(to),
            to_dir,
        };
        let out = out
            .iter()
            .map(|s| self.outputs.iter().position(|o| o == s).unwrap_or_else(|| panic!("unknown output {s}")) as u32)
            .collect();
        self.rules.push(rule);
        self.rule_out.push(out);
    }

    pub fn build(self, initial: &str, finals: &[&str]) -> TwoVpt {
        let initial = self.state_ids[initial];
        let finals = finals.iter().map(|f| self.state_ids[*f]).collect();
        let a = TwoVpa::new(self.alphabet, self.states, initial, finals, self.stack, self.rules).expect("fixture automaton");
        TwoVpt::new(a, self.outputs, self.rule_out, None).expect("fixture transducer")
    }
}

/// Input alphabet of the sorting transducer: calls `1..=n`, return `r`.
pub fn sorting_alphabet(n: usize) -> Arc<StructuredAlphabet> {
    let calls: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    StructuredAlphabet::shared(&calls, &["r".to_string()]).expect("sorting alphabet")
}

/// The deterministic transducer sorting every level of a nested word by call
/// label, stable for equal labels. Pass `i` over a hedge copies the siblings
/// labelled `i` (sorting them recursively) and skips the others; after the
/// last sibling the head rewinds to the enclosing call and starts pass `i+1`.
pub fn sorting_transducer(n: usize) -> TwoVpt {
    assert!(n >= 1);
    let (fw, bw) = (Dir::Fwd, Dir::Bwd);
    let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let mut outs: Vec<&str> = vec![LEFT_MARKER];
    outs.extend(labels.iter().map(|s| s.as_str()));
    outs.extend(["r", RIGHT_MARKER]);
    let mut b = Builder::new(sorting_alphabet(n), &outs);
    let q = |i: usize| format!("q{i}");
    // j = 0 stands for the left marker.
    let qij = |i: usize, j: usize| if j == 0 { format!("q{i},<L>") } else { format!("q{i},{j}") };
    let call = |j: usize| if j == 0 { LEFT_MARKER.to_string() } else { j.to_string() };
    let label = |j: usize| if j == 0 { "bot".to_string() } else { format!("g{j}") };
    let ret = |j: usize| if j == 0 { RIGHT_MARKER } else { "r" };
    b.state(&q(1));
    b.rule(&q(1), fw, LEFT_MARKER, "bot", &q(1), fw, &[LEFT_MARKER]);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                b.rule(&q(i), fw, &call(j), &label(j), &q(1), fw, &[&labels[j - 1]]);
            } else {
                b.rule(&q(i), fw, &call(j), &format!("skip{i}"), "skip", fw, &[]);
            }
        }
        b.rule("skip", fw, "r", &format!("skip{i}"), &q(i), fw, &[]);
    }
    for j in 1..=n {
        b.rule("skip", fw, &call(j), "skip", "skip", fw, &[]);
    }
    b.rule("skip", fw, "r", "skip", "skip", fw, &[]);
    for j in 0..=n {
        for i in 1..n {
            // End of pass i: rewind to the enclosing call.
            b.rule(&q(i), fw, ret(j), &label(j), &qij(i, j), bw, &[]);
            b.rule(&qij(i, j), bw, ret(j), &format!("back{i},{j}"), "back", bw, &[]);
            b.rule("back", bw, &call(j), &format!("back{i},{j}"), &qij(i, j), fw, &[]);
            if j == 0 {
                b.rule(&qij(i, j), fw, LEFT_MARKER, "bot", &q(i + 1), fw, &[]);
            } else {
                for k in 1..=n {
                    b.rule(&qij(i, j), fw, &call(k), &label(j), &q(i + 1), fw, &[]);
                }
            }
        }
    }
    b.rule("back", bw, "r", "back", "back", bw, &[]);
    for k in 1..=n {
        b.rule("back", bw, &call(k), "back", "back", bw, &[]);
    }
    // End of the last pass: close the enclosing call.
    for j in 1..=n {
        b.rule(&q(n), fw, "r", &label(j), &q(j), fw, &["r"]);
    }
    b.rule(&q(n), fw, RIGHT_MARKER, "bot", "qf", fw, &[RIGHT_MARKER]);
    b.build(&q(1), &["qf"])
}

/// Copies its input in one forward pass.
pub fn copy_transducer(sigma: &Arc<StructuredAlphabet>) -> TwoVpt {
    let names: Vec<&str> = sigma.calls().iter().chain(sigma.returns()).map(|s| s.as_str()).collect();
    let mut b = Builder::new(sigma.clone(), &names);
    let fw = Dir::Fwd;
    b.rule("p", fw, LEFT_MARKER, "z", "p", fw, &[]);
    for c in sigma.calls() {
        b.rule("p", fw, c, "g", "p", fw, &[c]);
    }
    for r in sigma.returns() {
        b.rule("p", fw, r, "g", "p", fw, &[r]);
    }
    b.rule("p", fw, RIGHT_MARKER, "z", "acc", fw, &[]);
    b.build("p", &["acc"])
}

/// Outputs its input, then its input read backwards, then walks to the end.
pub fn echo_transducer(sigma: &Arc<StructuredAlphabet>) -> TwoVpt {
    let names: Vec<&str> = sigma.calls().iter().chain(sigma.returns()).map(|s| s.as_str()).collect();
    let mut b = Builder::new(sigma.clone(), &names);
    let (fw, bw) = (Dir::Fwd, Dir::Bwd);
    b.rule("f", fw, LEFT_MARKER, "z", "f", fw, &[]);
    b.rule("f", fw, RIGHT_MARKER, "z", "b", bw, &[]);
    b.rule("b", bw, RIGHT_MARKER, "z", "b", bw, &[]);
    b.rule("b", bw, LEFT_MARKER, "z", "w", fw, &[]);
    b.rule("w", fw, LEFT_MARKER, "z", "w", fw, &[]);
    b.rule("w", fw, RIGHT_MARKER, "z", "acc", fw, &[]);
    for c in sigma.calls() {
        b.rule("f", fw, c, "g", "f", fw, &[c]);
        b.rule("b", bw, c, "g", "b", bw, &[c]);
        b.rule("w", fw, c, "g", "w", fw, &[]);
    }
    for r in sigma.returns() {
        b.rule("f", fw, r, "g", "f", fw, &[r]);
        b.rule("b", bw, r, "g", "b", bw, &[r]);
        b.rule("w", fw, r, "g", "w", fw, &[]);
    }
    b.build("f", &["acc"])
}

fn two_vpa(text: &str) -> TwoVpa {
    parse_machine(text).and_then(|m| m.into_two_vpa()).expect("fixture 2vpa")
}

fn two_vpt(text: &str) -> TwoVpt {
    parse_machine(text).and_then(|m| m.into_two_vpt()).expect("fixture 2vpt")
}

fn vpt(text: &str) -> Vpt {
    parse_machine(text).and_then(|m| m.into_vpt()).expect("fixture vpt")
}

fn vpa(text: &str) -> Vpa {
    parse_machine(text).and_then(|m| m.into_vpa()).expect("fixture vpa")
}

fn fsa(text: &str) -> Nfa {
    parse_machine(text).and_then(|m| m.into_fsa()).expect("fixture fsa")
}

/// Loops on every nonempty word: accepts only the empty word.
pub const BOUNCE: &str = "
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

/// Forward, backward, forward again.
pub const SWEEP: &str = "
kind: 2vpa
calls: c
returns: r
states: f b w a
initial: f
final: a
stack: g z
push f fw <L> -> f fw z
push f fw c -> f fw g
pop f fw r g -> f fw
pop f fw <R> z -> b bw
push b bw <R> -> b bw z
push b bw r -> b bw g
pop b bw c g -> b bw
pop b bw <L> z -> w fw
push w fw <L> -> w fw z
push w fw c -> w fw g
pop w fw r g -> w fw
pop w fw <R> z -> a fw
";

/// Nondeterministic: may turn back at a call and resume from the left.
pub const GUESS: &str = "
kind: 2vpa
calls: c
returns: r
states: p q f
initial: p
final: f
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g
push p fw c -> q bw g
pop p fw r g -> p fw
pop p fw r g -> q fw
push q fw c -> p fw g
pop q fw r g -> p fw
pop q bw c g -> q bw
push q bw r -> q bw g
pop q bw <L> z -> p fw
pop p fw <R> z -> f fw
";

/// Accepts the words of depth at least two.
pub const DEEP2: &str = "
kind: 2vpa
calls: c
returns: r
states: a0 a1 f acc
initial: a0
final: acc
stack: g z
push a0 fw <L> -> a0 fw z
push a0 fw c -> a1 fw g
push a1 fw c -> f fw g
pop a1 fw r g -> a0 fw
push f fw c -> f fw g
pop f fw r g -> f fw
pop f fw <R> z -> acc fw
";

/// No final state at all.
pub const NO_FINALS: &str = "
kind: 2vpa
calls: c
returns: r
states: p acc
initial: p
final:
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g
pop p fw r g -> p fw
pop p fw <R> z -> acc fw
";

/// Never reads the right marker.
pub const STUCK: &str = "
kind: 2vpa
calls: c
returns: r
states: p acc
initial: p
final: acc
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g
pop p fw r g -> p fw
";

/// Turns back at the first call forever; the right marker leads nowhere final.
pub const LOOPER: &str = "
kind: 2vpa
calls: c
returns: r
states: p q d
initial: p
final: q
stack: g z
push p fw <L> -> p fw z
push p fw c -> q bw g
pop q bw c g -> p fw
pop p fw <R> z -> d fw
";

/// The final state is only entered from a state that is never reached.
pub const UNREACHABLE_FINAL: &str = "
kind: 2vpa
calls: c
returns: r
states: p u acc
initial: p
final: acc
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g
pop p fw r g -> p fw
pop u fw <R> z -> acc fw
";

/// Checks from the right that the word is nonempty, then walks back.
pub const BACK_CHECK: &str = "
kind: 2vpa
calls: c
returns: r
states: f b b2 w acc
initial: f
final: acc
stack: g z
push f fw <L> -> f fw z
push f fw c -> f fw g
pop f fw r g -> f fw
pop f fw <R> z -> b bw
push b bw <R> -> b bw z
push b bw r -> b2 bw g
push b2 bw r -> b2 bw g
pop b2 bw c g -> b2 bw
pop b2 bw <L> z -> w fw
push w fw <L> -> w fw z
push w fw c -> w fw g
pop w fw r g -> w fw
pop w fw <R> z -> acc fw
";

/// An even number of calls, one-way.
pub const EVEN_CALLS: &str = "
kind: 2vpa
calls: c
returns: r
states: e o acc
initial: e
final: acc
stack: g z
push e fw <L> -> e fw z
push e fw c -> o fw g
push o fw c -> e fw g
pop e fw r g -> e fw
pop o fw r g -> o fw
pop e fw <R> z -> acc fw
";

/// Small automata (at most four states and two stack symbols) for the
/// traversal-algebra suites.
pub fn morphism_fixtures() -> Vec<(&'static str, TwoVpa)> {
    vec![("bounce", two_vpa(BOUNCE)), ("sweep", two_vpa(SWEEP)), ("guess", two_vpa(GUESS)), ("deep2", two_vpa(DEEP2))]
}

pub fn emptiness_fixtures() -> Vec<(&'static str, TwoVpa)> {
    vec![
        ("bounce", two_vpa(BOUNCE)),
        ("sweep", two_vpa(SWEEP)),
        ("guess", two_vpa(GUESS)),
        ("deep2", two_vpa(DEEP2)),
        ("no-finals", two_vpa(NO_FINALS)),
        ("stuck", two_vpa(STUCK)),
        ("looper", two_vpa(LOOPER)),
        ("unreachable-final", two_vpa(UNREACHABLE_FINAL)),
        ("back-check", two_vpa(BACK_CHECK)),
        ("even-calls", two_vpa(EVEN_CALLS)),
    ]
}

/// Sweeps the word twice in the same state, told apart by the bottom symbol.
pub const TWICE: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: c r
states: f b f2 acc
initial: f
final: acc
stack: g z z2
push f fw <L> -> f fw z
push f fw c -> f fw g / \"c\"
pop f fw r g -> f fw / \"r\"
pop f fw <R> z -> b bw
push b bw <R> -> b bw z
push b bw r -> b bw g
pop b bw c g -> b bw
pop b bw <L> z -> f2 fw
push f2 fw <L> -> f fw z2
pop f fw <R> z2 -> acc fw
";

/// After each return, rereads the subhedge in the producing state.
pub const RESCAN: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: c r
states: p back0 back p2 acc
initial: p
final: acc
stack: z g h h2 k
push p fw <L> -> p fw z
push p fw c -> p fw g / \"c\"
pop p fw r g -> back0 bw
push back0 bw r -> back bw h
push back bw r -> back bw k
pop back bw c k -> back bw
pop back bw c h -> p2 fw
push p2 fw c -> p fw h2
pop p fw r h2 -> p fw / \"r\"
pop p fw <R> z -> acc fw
";

/// Like the rescan machine, but the second reading is silent.
pub const RESCAN_QUIET: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: c r
states: p back0 back p2 q acc
initial: p
final: acc
stack: z g h h2 k
push p fw <L> -> p fw z
push p fw c -> p fw g / \"c\"
pop p fw r g -> back0 bw
push back0 bw r -> back bw h
push back bw r -> back bw k
pop back bw c k -> back bw
pop back bw c h -> p2 fw
push p2 fw c -> q fw h2
push q fw c -> q fw k
pop q fw r k -> q fw
pop q fw r h2 -> p fw / \"r\"
pop p fw <R> z -> acc fw
";

fn cr() -> Arc<StructuredAlphabet> {
    StructuredAlphabet::shared(&["c"], &["r"]).expect("alphabet")
}

/// Transducers with their producing states, for the single-use suites.
pub fn single_use_fixtures() -> Vec<(&'static str, TwoVpt, Vec<u32>)> {
    let with_auto = |name, t: TwoVpt| {
        let p = t.producing_states();
        (name, t, p)
    };
    let echo = echo_transducer(&cr());
    let echo_all: Vec<u32> = (0..echo.automaton.num_states() as u32).collect();
    vec![
        with_auto("copy", copy_transducer(&cr())),
        with_auto("echo", echo.clone()),
        ("echo-all-states", echo, echo_all),
        with_auto("twice", two_vpt(TWICE)),
        with_auto("rescan", two_vpt(RESCAN)),
        with_auto("rescan-quiet", two_vpt(RESCAN_QUIET)),
        with_auto("sorting2", sorting_transducer(2)),
    ]
}

pub const ALL_WORDS: &str = "
kind: vpa
calls: c
returns: r
states: q
initial: q
final: q
stack: g
push q c -> q g
pop q r g -> q
";

pub const NONEMPTY: &str = "
kind: vpa
calls: c
returns: r
states: e n
initial: e
final: n
stack: g
push e c -> n g
push n c -> n g
pop n r g -> n
";

pub const EVEN_LENGTH: &str = "
kind: fsa
alphabet: c r
states: e o
initial: e
final: e
trans e c -> o
trans e r -> o
trans o c -> e
trans o r -> e
";

pub const NO_RR: &str = "
kind: fsa
alphabet: c r
states: s1 s2
initial: s1
final: s1 s2
trans s1 c -> s1
trans s1 r -> s2
trans s2 c -> s1
";

pub const STARTS_WITH_C: &str = "
kind: fsa
alphabet: c r
states: s t
initial: s
final: t
trans s c -> t
trans t c -> t
trans t r -> t
";

pub const SORTED_ENDS: &str = "
kind: fsa
alphabet: <L> 1 2 r <R>
states: s m t
initial: s
final: t
trans s <L> -> m
trans m 1 -> m
trans m 2 -> m
trans m r -> m
trans m <R> -> t
";

pub const NO_TWO_BEFORE_ONE: &str = "
kind: fsa
alphabet: <L> 1 2 r <R>
states: a b
initial: a
final: a b
trans a <L> -> a
trans a 1 -> a
trans a r -> a
trans a <R> -> a
trans a 2 -> b
trans b 2 -> b
trans b r -> b
trans b <R> -> b
";

pub fn sorting_all_words(n: usize) -> Vpa {
    let sigma = sorting_alphabet(n);
    let push = (0..n as u32).map(|c| PushRule { from: 0, call: c, to: 0, gamma: 0 }).collect();
    let pop = vec![PopRule { from: 0, ret: 0, gamma: 0, to: 0 }];
    Vpa::new(sigma, vec!["q".into()], vec![0], vec![0], vec!["g".into()], push, pop).expect("universal vpa")
}

/// Triples `(t, domain, range)` for the type-checking suites.
pub fn type_check_fixtures() -> Vec<(&'static str, TwoVpt, Vpa, Nfa)> {
    vec![
        ("copy-even", copy_transducer(&cr()), vpa(ALL_WORDS), fsa(EVEN_LENGTH)),
        ("copy-no-rr", copy_transducer(&cr()), vpa(ALL_WORDS), fsa(NO_RR)),
        ("echo-starts-c", echo_transducer(&cr()), vpa(NONEMPTY), fsa(STARTS_WITH_C)),
        ("sorting-ends", sorting_transducer(2), sorting_all_words(2), fsa(SORTED_ENDS)),
        ("sorting-order", sorting_transducer(2), sorting_all_words(2), fsa(NO_TWO_BEFORE_ONE)),
    ]
}

pub const IDENTITY2: &str = "
kind: vpt
calls: 1 2
returns: r
output-calls: 1 2
output-returns: r
states: q
initial: q
final: q
stack: g
push q 1 -> q g / \"1\"
push q 2 -> q g / \"2\"
pop q r g -> q / \"r\"
";

pub const SWAP3: &str = "
kind: vpt
calls: 1 2 3
returns: r
output-calls: 1 2 3
output-returns: r
states: q
initial: q
final: q
stack: g
push q 1 -> q g / \"2\"
push q 2 -> q g / \"1\"
push q 3 -> q g / \"3\"
pop q r g -> q / \"r\"
";

pub const IDENTITY1: &str = "
kind: vpt
calls: c
returns: r
output-calls: c
output-returns: r
states: q
initial: q
final: q
stack: g
push q c -> q g / \"c\"
pop q r g -> q / \"r\"
";

/// Marks each call with the parity of its depth.
pub const DEPTH_PARITY: &str = "
kind: vpt
calls: c
returns: r
output-calls: ce co
output-returns: r
states: e o
initial: e
final: e
stack: ge go
push e c -> o ge / \"co\"
push o c -> e go / \"ce\"
pop o r ge -> e / \"r\"
pop e r go -> o / \"r\"
";

/// Marks each call with whether its subhedge is empty; the state says whether
/// the rest of the current hedge is empty.
pub const EMPTY_SUB: &str = "
kind: vpt
calls: c
returns: r
output-calls: cE cN
output-returns: r
states: E N
initial: E N
final: E
stack: gE gN
push N c -> E gE / \"cE\"
push N c -> E gN / \"cE\"
push N c -> N gE / \"cN\"
push N c -> N gN / \"cN\"
pop E r gE -> E / \"r\"
pop E r gN -> N / \"r\"
";

/// Relabels each call by its matching return, guessed and checked by the stack.
pub const GUESS_RELABEL: &str = "
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

fn second_for(first: &Vpt, make: fn(&Arc<StructuredAlphabet>) -> TwoVpt) -> TwoVpt {
    make(first.output_structure.as_ref().expect("structured output"))
}

/// A first stage and a second stage reading its output.
pub struct CompositionPair {
    pub name: &'static str,
    pub first: Vpt,
    pub second: TwoVpt,
}

fn pair(name: &'static str, text: &str, make: fn(&Arc<StructuredAlphabet>) -> TwoVpt) -> CompositionPair {
    let first = vpt(text);
    let second = second_for(&first, make);
    CompositionPair { name, first, second }
}

fn sorting_for(s: &Arc<StructuredAlphabet>) -> TwoVpt {
    sorting_transducer(s.num_calls())
}

/// Deterministic letter-to-letter first stages.
pub fn hu_fixtures() -> Vec<CompositionPair> {
    vec![
        pair("identity-sorting2", IDENTITY2, sorting_for),
        pair("swap-sorting3", SWAP3, sorting_for),
        pair("parity-echo", DEPTH_PARITY, echo_transducer),
        pair("parity-copy", DEPTH_PARITY, copy_transducer),
    ]
}

/// Co-deterministic letter-to-letter first stages.
pub fn codet_fixtures() -> Vec<CompositionPair> {
    vec![
        pair("empty-sub-echo", EMPTY_SUB, echo_transducer),
        pair("identity-sorting2", IDENTITY2, sorting_for),
        pair("single-letter-echo", IDENTITY1, echo_transducer),
        pair("parity-echo", DEPTH_PARITY, echo_transducer),
    ]
}

/// Unambiguous letter-to-letter first stages.
pub fn relabeling_fixtures() -> Vec<CompositionPair> {
    vec![
        pair("identity-sorting2", IDENTITY2, sorting_for),
        pair("empty-sub-copy", EMPTY_SUB, copy_transducer),
        pair("guess-echo", GUESS_RELABEL, echo_transducer),
        pair("parity-echo", DEPTH_PARITY, echo_transducer),
    ]
}

/// Copy with every letter guarded by the single state of a universal checker.
pub const LA_TRIVIAL: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: c r
states: p acc
initial: p
final: acc
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g / \"c\"
pop p fw r g -> p fw / \"r\"
pop p fw <R> z -> acc fw
la-checker: {
  calls: c
  returns: r
  states: s
  initial: s
  final: s
  stack: g
  push s c -> s g
  pop s r g -> s
}
la-guard: 2 s
la-guard: 3 s
";

/// Echo whose calls are told apart by the emptiness of their subhedge, in
/// both directions.
pub const LA_EMPTY_SUB: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: e n E N r
states: f b w acc
initial: f
final: acc
stack: g z
push f fw <L> -> f fw z
push f fw c -> f fw g / \"e\"
push f fw c -> f fw g / \"n\"
pop f fw r g -> f fw / \"r\"
pop f fw <R> z -> b bw
push b bw <R> -> b bw z
push b bw r -> b bw g
pop b bw c g -> b bw / \"E\"
pop b bw c g -> b bw / \"N\"
pop b bw <L> z -> w fw
push w fw <L> -> w fw z
push w fw c -> w fw g
pop w fw r g -> w fw
pop w fw <R> z -> acc fw
la-checker: {
  calls: c
  returns: r
  states: E N
  initial: E N
  final: E
  stack: gE gN
  push N c -> E gE
  push N c -> E gN
  push N c -> N gE
  push N c -> N gN
  pop E r gE -> E
  pop E r gN -> N
}
la-guard: 2 E
la-guard: 3 N
la-guard: 8 E
la-guard: 9 N
";

/// Copies calls as their depth parity and drops returns at odd depth.
pub const LA_PARITY: &str = "
kind: d2vpt
calls: c
returns: r
output-alphabet: even odd r
states: p acc
initial: p
final: acc
stack: g z
push p fw <L> -> p fw z
push p fw c -> p fw g / \"odd\"
push p fw c -> p fw g / \"even\"
pop p fw r g -> p fw / \"r\"
pop p fw r g -> p fw
pop p fw <R> z -> acc fw
la-checker: {
  calls: c
  returns: r
  states: e o
  initial: e
  final: e
  stack: ge go
  push e c -> o ge
  push o c -> e go
  pop o r ge -> e
  pop e r go -> o
}
la-guard: 2 o
la-guard: 3 e
la-guard: 4 e
la-guard: 5 o
";

pub fn lookaround_fixtures() -> Vec<(&'static str, TwoVpt)> {
    vec![("trivial", two_vpt(LA_TRIVIAL)), ("empty-sub", two_vpt(LA_EMPTY_SUB)), ("parity", two_vpt(LA_PARITY))]
}

/// Copies with empty output: the identity domain.
pub fn silent_transducer(sigma: &Arc<StructuredAlphabet>) -> TwoVpt {
    let mut t = copy_transducer(sigma);
    for o in &mut t.outputs {
        o.clear();
    }
    t
}

/// The identity as a letter-to-letter transducer on `sigma`.
pub fn identity_relabeling(sigma: &Arc<StructuredAlphabet>) -> Vpt {
    let nc = sigma.num_calls() as u32;
    let push: Vec<PushRule> = (0..nc).map(|c| PushRule { from: 0, call: c, to: 0, gamma: 0 }).collect();
    let pop: Vec<PopRule> = (0..sigma.num_returns() as u32).map(|r| PopRule { from: 0, ret: r, gamma: 0, to: 0 }).collect();
    let push_out = (0..nc).map(|c| vec![c]).collect();
    let pop_out = (0..pop.len() as u32).map(|r| vec![nc + r]).collect();
    let vpa = Vpa::new(sigma.clone(), vec!["q".into()], vec![0], vec![0], vec!["g".into()], push, pop).expect("identity");
    let names = sigma.calls().iter().chain(sigma.returns()).cloned().collect();
    Vpt::new(vpa, names, push_out, pop_out).and_then(|t| t.with_structure(sigma.clone())).expect("identity")
}

/// Deterministic transducers for the translation suites.
pub fn translation_fixtures() -> Vec<(&'static str, TwoVpt)> {
    vec![
        ("silent", silent_transducer(&cr())),
        ("copy", copy_transducer(&cr())),
        ("echo", echo_transducer(&cr())),
        ("rescan", two_vpt(RESCAN)),
        ("sorting2", sorting_transducer(2)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::NestedWord;
    use crate::twovpt::{evaluate_d2vpt, EvalMode};

    fn sort(n: usize, input: &str) -> String {
        let t = sorting_transducer(n);
        let w = NestedWord::parse(input, t.alphabet()).unwrap();
        t.render(&evaluate_d2vpt(&t, &w, EvalMode::Streaming).unwrap())
    }

    #[test]
    fn golden_sorting() {
        assert_eq!(sort(3, "2 2 r 1 r r 1 r 3 r"), "<L> 1 r 2 1 r 2 r r 3 r <R>");
        assert_eq!(sort(3, "2 3 r 1 r 2 r r 2 r 3 r 1 r"), "<L> 1 r 2 1 r 2 r 3 r r 2 r 3 r <R>");
    }

    #[test]
    fn shape() {
        for n in 1..=4 {
            let t = sorting_transducer(n);
            assert!(t.is_deterministic());
            // q_i, q_{i,j} for i < n and j in {<L>, 1..n}, skip, back, qf.
            assert_eq!(t.automaton.num_states(), n + (n - 1) * (n + 1) + 3);
        }
    }
}
