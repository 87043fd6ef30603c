use std::path::{Path, PathBuf};
use std::process::Command;

use twoway::format::{parse_machine, Machine};
use twoway::nested::enumerate_nested_words;
use twoway::samples::{sorting_transducer, type_check_fixtures};
use twoway::twovpt::{evaluate_d2vpt, EvalMode};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn twoway(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_twoway")).args(args).output().expect("spawn");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn machine(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("machines").join(name).to_str().unwrap().to_string()
}

fn load(path: &str) -> Machine {
    parse_machine(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn words(m: &str, max_len: usize) -> Vec<String> {
    let sigma = match load(m) {
        Machine::TwoVpt(t) => t.alphabet().clone(),
        Machine::TwoVpa(a) => a.alphabet().clone(),
        Machine::Vpt(t) => t.vpa.alphabet().clone(),
        Machine::Vpa(a) => a.alphabet().clone(),
        _ => unreachable!(),
    };
    enumerate_nested_words(&sigma, max_len).map(|w| w.to_string()).collect()
}

#[test]
fn golden_sorting() {
    let m = machine("sorting3.d2vpt");
    let r = twoway(&["eval", &m, "--input", "<L> 2 2 r 1 r r 1 r 3 r <R>"]);
    assert_eq!((r.code, r.stdout.trim()), (0, "<L> 1 r 2 1 r 2 r r 3 r <R>"));
    let r = twoway(&["eval", &m, "--input", "2 3 r 1 r 2 r r 2 r 3 r 1 r"]);
    assert_eq!((r.code, r.stdout.trim()), (0, "<L> 1 r 2 1 r 2 r 3 r r 2 r 3 r <R>"));
}

#[test]
fn input_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = tmp(&dir, "word.txt");
    std::fs::write(&input, "2 1 r r\n").unwrap();
    let r = twoway(&["eval", &machine("sorting2.d2vpt"), "--input", &input, "--mode", "checked"]);
    assert_eq!((r.code, r.stdout.trim()), (0, "<L> 2 1 r r <R>"));
}

#[test]
fn fixture_files_match_samples() {
    assert_eq!(load(&machine("sorting3.d2vpt")), Machine::TwoVpt(sorting_transducer(3)));
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("machines")).unwrap() {
        let path: PathBuf = entry.unwrap().path();
        let r = twoway(&["validate", path.to_str().unwrap()]);
        assert_eq!(r.code, 0, "{}: {}", path.display(), r.stderr);
        let ext = path.extension().unwrap().to_str().unwrap();
        assert!(r.stdout.starts_with(&format!("valid {ext}")), "{}", r.stdout);
    }
}

#[test]
fn invalid_machines_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = tmp(&dir, "bad.2vpa");
    std::fs::write(&bad, "kind: 2vpa\ncalls: c\nreturns: r\nstates: q\ninitial: q\nfinal: q\nstack: g\npush q c -> q g\n").unwrap();
    let r = twoway(&["validate", &bad]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 8"), "{}", r.stderr);
    assert_eq!(twoway(&["validate", &tmp(&dir, "missing")]).code, 2);
    let r = twoway(&["eval", &machine("sorting2.d2vpt"), "--input", "1 x r"]);
    assert_eq!(r.code, 2);
}

#[test]
fn lookaround_needs_checked_mode() {
    let m = machine("la-parity.d2vpt");
    assert_eq!(twoway(&["eval", &m, "--input", "c r", "--mode", "streaming"]).code, 2);
    let r = twoway(&["eval", &m, "--input", "c c r r"]);
    assert_eq!((r.code, r.stdout.trim()), (0, "odd even r"));
}

#[test]
fn emptiness_and_witness() {
    let r = twoway(&["emptiness", &machine("no-finals.2vpa")]);
    assert_eq!((r.code, r.stdout.trim()), (0, "empty"));
    let m = machine("bounce.2vpa");
    let r = twoway(&["emptiness", &m]);
    assert_eq!(r.code, 1);
    let witness = r.stdout.lines().find_map(|l| l.strip_prefix("witness: ")).unwrap();
    assert_eq!(twoway(&["accepts", &m, "--input", witness]).code, 0);
}

#[test]
fn conversion_preserves_membership() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "guess.dvpa");
    let m = machine("guess.2vpa");
    assert_eq!(twoway(&["convert-2vpa-dvpa", &m, "-o", &out]).code, 0);
    assert_eq!(load(&out).kind(), "dvpa");
    for w in words(&m, 6) {
        assert_eq!(twoway(&["accepts", &m, "--input", &w]).code, twoway(&["accepts", &out, "--input", &w]).code, "{w}");
    }
}

fn pipeline(first: &str, second: &str, w: &str) -> Option<String> {
    let r = twoway(&["eval", first, "--input", w]);
    if r.code != 0 {
        return None;
    }
    let r = twoway(&["eval", second, "--input", r.stdout.trim()]);
    (r.code == 0).then(|| r.stdout.trim().to_string())
}

#[test]
fn composition_matches_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    for (first, second, construction) in
        [("swap3.vpt", "sorting3.d2vpt", "hu"), ("empty-sub.vpt", "echo.d2vpt", "codet"), ("guess.vpt", "echo-guess.d2vpt", "relabeling")]
    {
        let (first, second) = (machine(first), machine(second));
        let out = tmp(&dir, "c.d2vpt");
        let summary = tmp(&dir, "summary.txt");
        let r = twoway(&["compose", &first, &second, "-o", &out, "--summary", &summary]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let s = std::fs::read_to_string(&summary).unwrap();
        assert!(s.contains(&format!("construction={construction}\n")), "{s}");
        for w in words(&first, 4) {
            let r = twoway(&["eval", &out, "--input", &w]);
            let got = (r.code == 0).then(|| r.stdout.trim().to_string());
            assert_eq!(got, pipeline(&first, &second, &w), "{construction} on {w}");
        }
    }
}

#[test]
fn lookaround_removal() {
    let dir = tempfile::tempdir().unwrap();
    let m = machine("la-parity.d2vpt");
    let out = tmp(&dir, "plain.d2vpt");
    assert_eq!(twoway(&["remove-la", &m, "-o", &out]).code, 0);
    assert!(!std::fs::read_to_string(&out).unwrap().contains("la-guard"));
    for w in words(&m, 8) {
        let a = twoway(&["eval", &m, "--input", &w]);
        let b = twoway(&["eval", &out, "--input", &w, "--mode", "streaming"]);
        assert_eq!((a.code, a.stdout), (b.code, b.stdout), "{w}");
    }
}

#[test]
fn single_use_verdicts() {
    let m = machine("twice.d2vpt");
    let r = twoway(&["single-use", &m]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("witness:"), "{}", r.stdout);
    assert_eq!(twoway(&["single-use", &machine("copy.d2vpt")]).code, 0);
    assert_eq!(twoway(&["single-use", &m, "--states", "f,b"]).code, 1);
    assert_eq!(twoway(&["single-use", &m, "--states", "acc"]).code, 2);
    assert_eq!(twoway(&["single-use", &m, "--states", "nowhere"]).code, 2);
}

#[test]
fn stst_translation_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let m = machine("sorting2.d2vpt");
    let out = tmp(&dir, "sorting2.stst");
    assert_eq!(twoway(&["to-stst", &m, "-o", &out]).code, 0);
    assert_eq!(load(&out).kind(), "stst");
    for w in words(&m, 6) {
        let a = twoway(&["eval", &m, "--input", &w]);
        let b = twoway(&["eval", &out, "--input", &w]);
        assert_eq!((a.code, a.stdout), (b.code, b.stdout), "{w}");
    }
    assert_eq!(twoway(&["to-stst", &machine("la-parity.d2vpt"), "-o", &out]).code, 2);
}

#[test]
fn typecheck_verdicts() {
    let fixtures = type_check_fixtures();
    for (range, fixture) in [("sorted-ends.fsa", "sorting-ends"), ("no-two-before-one.fsa", "sorting-order")] {
        let (_, t, domain, nfa) = fixtures.iter().find(|f| f.0 == fixture).unwrap();
        let escapes = enumerate_nested_words(t.alphabet(), 8).any(|w| {
            domain.accepts(&w)
                && evaluate_d2vpt(t, &w, EvalMode::Checked).is_ok_and(|o| {
                    !nfa.accepts_names(&o.iter().map(|&s| t.output_alphabet[s as usize].as_str()).collect::<Vec<_>>())
                })
        });
        let r = twoway(&[
            "typecheck",
            &machine("sorting2.d2vpt"),
            "--domain",
            &machine("sorting2-words.dvpa"),
            "--range",
            &machine(range),
        ]);
        assert_eq!(r.code, if escapes { 1 } else { 0 }, "{range}: {}", r.stdout);
        if let Some(w) = r.stdout.lines().find_map(|l| l.strip_prefix("counterexample: ")) {
            let out = twoway(&["eval", &machine("sorting2.d2vpt"), "--input", w]);
            assert_eq!(out.code, 0);
            assert_eq!(twoway(&["accepts", &machine(range), "--input", out.stdout.trim()]).code, 1);
        }
    }
}

#[test]
fn oracle_check_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let summary = tmp(&dir, "s.txt");
    let m = machine("sorting2.d2vpt");
    let args = ["oracle-check", &m, "--max-len", "4", "--max-depth", "3", "--random", "20", "--seed", "7"];
    let r = twoway(&[&args[..], &["--summary", &summary]].concat());
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert_eq!(r.stdout.lines().count(), 7);
    assert!(r.stdout.lines().all(|l| l.contains(" PASS ")), "{}", r.stdout);
    let s = std::fs::read_to_string(&summary).unwrap();
    for kv in ["seed=7\n", "passed=true\n", "suites=7\n", "machine="] {
        assert!(s.contains(kv), "{s}");
    }
    assert_eq!(twoway(&args).stdout, r.stdout);
    let one = twoway(&["oracle-check", &machine("bounce.2vpa"), "--property", "morphism", "--max-len", "6"]);
    assert_eq!((one.code, one.stdout.lines().count()), (0, 1));
    assert_eq!(twoway(&["oracle-check", &machine("bounce.2vpa"), "--property", "translation"]).code, 2);
}
