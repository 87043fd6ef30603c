//! The ten acceptance criteria, one PASS/FAIL line each.

use std::time::{Duration, Instant};

use twoway::compose::DEFAULT_STATE_CAP;
use twoway::oracle::{
    composition_suite, determinization_suite, emptiness_suite, lookaround_suite, morphism_suite, single_use_suite,
    translation_suite, type_check_suite, Construction, Report, Sample,
};
use twoway::samples::{
    codet_fixtures, emptiness_fixtures, hu_fixtures, lookaround_fixtures, morphism_fixtures, relabeling_fixtures,
    single_use_fixtures, sorting_transducer, translation_fixtures, type_check_fixtures,
};
use twoway::stst::{evaluate_stst, exponential_stst};
use twoway::twovpa::DEFAULT_ALGEBRA_CAP;
use twoway::twovpt::{evaluate_d2vpt, evaluate_d2vpt_stats, EvalMode};
use twoway::{Exec, NestedWord, Result};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn from_reports(reports: &[Report]) -> Outcome {
        let failed: Vec<&Report> = reports.iter().filter(|r| !r.passed()).collect();
        let checked: usize = reports.iter().map(|r| r.checked).sum();
        let mut detail = format!("{} suites, {checked} checks", reports.len());
        for r in failed.iter().take(3) {
            detail.push_str(&format!("; {r}"));
        }
        Outcome { passed: failed.is_empty(), detail }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let start = Instant::now();
    let mut o = f().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
    let took = start.elapsed();
    o.detail.push_str(&format!(" ({took:.2?})"));
    if let Some(l) = limit {
        if took >= l {
            o.passed = false;
            o.detail.push_str(&format!(" over the {l:?} budget"));
        }
    }
    o
}

fn strip_markers(s: &str) -> &str {
    s.trim().strip_prefix("<L>").and_then(|s| s.strip_suffix("<R>")).expect("marked word").trim()
}

fn golden() -> Result<Outcome> {
    let t = sorting_transducer(3);
    let cases = [
        ("<L> 2 2 r 1 r r 1 r 3 r <R>", "<L> 1 r 2 1 r 2 r r 3 r <R>"),
        ("<L> 2 3 r 1 r 2 r r 2 r 3 r 1 r <R>", "<L> 1 r 2 1 r 2 r 3 r r 2 r 3 r <R>"),
    ];
    let mut mismatches = Vec::new();
    for (input, want) in cases {
        let w = NestedWord::parse(strip_markers(input), t.alphabet())?;
        let got = t.render(&evaluate_d2vpt(&t, &w, EvalMode::Streaming)?);
        if got != want {
            mismatches.push(format!("{input} gave {got}"));
        }
    }
    Ok(Outcome { passed: mismatches.is_empty(), detail: format!("2 inputs {}", mismatches.join("; ")) })
}

fn morphism() -> Result<Outcome> {
    let fixtures = morphism_fixtures();
    let mut reports = Vec::new();
    let mut small = fixtures.len() >= 3;
    for (name, a) in &fixtures {
        small &= a.num_states() <= 4 && a.stack().len() <= 2;
        let single = a.alphabet().num_calls() == 1 && a.alphabet().num_returns() == 1;
        let s = Sample::exhaustive(if single { 16 } else { 8 });
        reports.push(morphism_suite(name, a, &s, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let mut o = Outcome::from_reports(&reports);
    o.passed &= small && reports.iter().all(|r| r.checked >= 1430);
    Ok(o)
}

fn determinization() -> Result<Outcome> {
    let s = Sample { max_len: 8, random: 500, random_len: 12, max_depth: 4, seed: 0 };
    let mut reports = Vec::new();
    for (name, a) in emptiness_fixtures() {
        reports.push(determinization_suite(name, &a, &s, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let mut o = Outcome::from_reports(&reports);
    let sizes: Vec<String> =
        reports.iter().map(|r| format!("{}={}", r.subject, r.facts.iter().find(|f| f.0 == "dvpa-states").unwrap().1)).collect();
    o.detail.push_str(&format!(", dvpa states {}", sizes.join(" ")));
    Ok(o)
}

fn emptiness() -> Result<Outcome> {
    let mut reports = Vec::new();
    for (name, a) in emptiness_fixtures() {
        reports.push(emptiness_suite(name, &a, 8, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let verdict = |name: &str| {
        let r = reports.iter().find(|r| r.subject == name).expect("fixture");
        r.facts.iter().find(|f| f.0 == "verdict").map(|f| f.1.clone())
    };
    let mut o = Outcome::from_reports(&reports);
    let empties = reports.iter().filter(|r| r.facts.iter().any(|f| f.1 == "empty")).count();
    o.passed &= reports.len() >= 10
        && verdict("no-finals").as_deref() == Some("empty")
        && verdict("stuck").as_deref() == Some("empty")
        && empties < reports.len();
    o.detail.push_str(&format!(", {empties} empty"));
    Ok(o)
}

fn composition() -> Result<Outcome> {
    let s = Sample::default();
    let exec = Exec::default();
    let mut reports = Vec::new();
    for (kind, pairs) in [
        (Construction::Hu, hu_fixtures()),
        (Construction::Codet, codet_fixtures()),
        (Construction::Relabeling, relabeling_fixtures()),
    ] {
        for p in pairs {
            reports.push(composition_suite(kind, p.name, &p.first, &p.second, &s, DEFAULT_STATE_CAP, exec)?);
        }
    }
    for (name, t) in lookaround_fixtures() {
        reports.push(lookaround_suite(name, &t, &s, DEFAULT_STATE_CAP, exec)?);
    }
    Ok(Outcome::from_reports(&reports))
}

fn exponential() -> Result<Outcome> {
    let s = exponential_stst();
    let mut bad = Vec::new();
    let mut last = Duration::ZERO;
    for n in 0..=16u32 {
        let w = NestedWord::parse(&"c r ".repeat(n as usize), s.alphabet())?;
        let start = Instant::now();
        let len = evaluate_stst(&s, &w)?.len();
        last = start.elapsed();
        if len != (1usize << n) - 1 {
            bad.push(format!("n={n}: {len}"));
        }
    }
    let fast = last < Duration::from_secs(1);
    Ok(Outcome { passed: bad.is_empty() && fast, detail: format!("n=0..16, n=16 in {last:.2?} {}", bad.join(" ")) })
}

fn translation() -> Result<Outcome> {
    let s = Sample::default();
    let mut reports = Vec::new();
    for (name, t) in translation_fixtures() {
        reports.push(translation_suite(name, &t, &s, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let mut o = Outcome::from_reports(&reports);
    o.passed &= reports.iter().any(|r| r.subject == "sorting2");
    Ok(o)
}

fn single_use() -> Result<Outcome> {
    let mut reports = Vec::new();
    for (name, t, producing) in single_use_fixtures() {
        reports.push(single_use_suite(name, &t, &producing, 6, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let verdicts: Vec<&str> =
        reports.iter().map(|r| r.facts.iter().find(|f| f.0 == "verdict").map_or("?", |f| f.1.as_str())).collect();
    let mut o = Outcome::from_reports(&reports);
    o.passed &= reports.len() >= 6 && verdicts.contains(&"true") && verdicts.contains(&"false");
    o.detail.push_str(&format!(", verdicts {}", verdicts.join(" ")));
    Ok(o)
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn memory() -> Result<Outcome> {
    let t = sorting_transducer(2);
    let peak = |text: String| -> Result<usize> {
        let w = NestedWord::parse(&text, t.alphabet())?;
        Ok(evaluate_d2vpt_stats(&t, &w, EvalMode::Streaming)?.peak_memory)
    };
    let flat: Vec<usize> = [100, 1000, 10_000].iter().map(|&n| peak("1 r ".repeat(n))).collect::<Result<_>>()?;
    let depths = [10usize, 100, 1000];
    let deep: Vec<usize> =
        depths.iter().map(|&d| peak(format!("{}{}", "1 ".repeat(d), "r ".repeat(d)))).collect::<Result<_>>()?;
    let spread = *flat.iter().max().unwrap() as f64 / *flat.iter().min().unwrap() as f64;
    let xs: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let ys: Vec<f64> = deep.iter().map(|&m| m as f64).collect();
    let r2 = r_squared(&xs, &ys);
    Ok(Outcome {
        passed: spread < 2.0 && r2 > 0.99 && deep[2] > deep[0],
        detail: format!("flat peaks {flat:?} (ratio {spread:.2}), deep peaks {deep:?} (R2 {r2:.6})"),
    })
}

fn type_checking() -> Result<Outcome> {
    let mut reports = Vec::new();
    for (name, t, domain, range) in type_check_fixtures() {
        reports.push(type_check_suite(name, &t, &domain, &range, 8, DEFAULT_ALGEBRA_CAP, Exec::default())?);
    }
    let mut o = Outcome::from_reports(&reports);
    o.passed &= reports.len() >= 5;
    Ok(o)
}

type Criterion = (&'static str, Option<Duration>, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden transduction", Some(Duration::from_secs(1)), golden),
        ("morphism", Some(Duration::from_secs(60)), morphism),
        ("determinization", None, determinization),
        ("emptiness", None, emptiness),
        ("composition", None, composition),
        ("stst exponential witness", None, exponential),
        ("translation", None, translation),
        ("single-use", None, single_use),
        ("streaming memory", None, memory),
        ("type checking", None, type_checking),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let o = timed(limit, run);
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {name:<26} {verdict} {}", i + 1, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
