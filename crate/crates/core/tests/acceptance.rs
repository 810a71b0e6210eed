//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report stays readable; exits non-zero if any line fails.

mod common;

use std::collections::BTreeMap;
use std::process::{exit, Command};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_normalization::UnicodeNormalization;

use common::{fixture, sample, toy, toy_counts};
use useg::arabic::{from_buckwalter, normalize, to_buckwalter, TransliterationTable};
use useg::corpus::{
    all_turns, corpus_stats, spans_from_tags, split_corpus, tags_from_spans, Dialogue, Genre,
    Medium, SegTag, Speaker, Token, Turn, DEFAULT_RATIOS,
};
use useg::features::{build_alphabet, FeatureTemplate, Sequence};
use useg::metrics::{f1_score, EvalOptions};
use useg::pos::{LexiconPosProvider, PosInfo};
use useg::segmenter::{decode, tag_corpus, token_sequence, train_segmenter, PosSource};
use useg::svm::{solve_binary, BinaryProblem, LinearModel, SolverParams, TrainConfig};
use useg::ArabicString;

/// Largest allowed gap between a recomputed and a published F1, in points.
const F1_TOLERANCE_PP: f64 = 0.01;
const FUZZ_TRANSLIT: usize = 1_000;
const FUZZ_NORMALIZE: usize = 10_000;
const SVM_DATASETS: usize = 200;
const SVM_DUAL_TOLERANCE: f64 = 1e-4;
/// Decision values this close to zero count as ties when comparing signs.
const SVM_TIE: f64 = 1e-6;
const OVERFIT_F1: f64 = 0.95;
const FUZZ_DECODE: usize = 10_000;
const SPLIT_TOLERANCE: f64 = 1.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_secs: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:.2?}, limit {limit_secs}s"))
    }
}

fn f1_consistency() -> Outcome {
    let start = Instant::now();
    // (P, R, F1) from the published results table
    let rows = [
        ("overall", 96.84, 85.36, 90.74),
        ("banks", 97.47, 83.70, 90.06),
        ("flights", 96.38, 80.50, 87.72),
        ("mno", 96.57, 82.72, 89.11),
    ];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (name, p, r, f) in rows {
        let got = 100.0 * f1_score(p / 100.0, r / 100.0);
        let diff = (got - f).abs();
        worst = worst.max(diff);
        if diff > F1_TOLERANCE_PP {
            bad.push(format!("{name}: {got:.4} vs {f}"));
        }
    }
    within(start.elapsed(), 1.0, "F1 check")?;
    check(
        bad.is_empty(),
        format!(
            "4 rows, max |dF1| = {worst:.4} pp (tolerance {F1_TOLERANCE_PP}){}",
            bad.iter().map(|b| format!("; {b}")).collect::<String>()
        ),
    )
}

fn translit_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pool = TransliterationTable::get().arabic_chars();
    pool.extend([' ', ' ', ' ']);
    for case in 0..FUZZ_TRANSLIT {
        let len = rng.gen_range(0..30);
        let raw: String = (0..len).map(|_| *pool.choose(&mut rng).unwrap()).collect();
        let s = normalize(&raw);
        let back =
            from_buckwalter(&to_buckwalter(s.as_str())).map_err(|e| format!("case {case}: {e}"))?;
        if back != s {
            return Err(format!(
                "case {case}: {:?} -> {:?}",
                s.as_str(),
                back.as_str()
            ));
        }
    }
    for (ar, bw) in [("مساء الخير", "msA' Alxyr"), ("شكرا", "$krA")] {
        if to_buckwalter(ar) != bw
            || from_buckwalter(bw)
                .map(ArabicString::into_string)
                .ok()
                .as_deref()
                != Some(ar)
        {
            return Err(format!("sample phrase {ar} <-> {bw} differs"));
        }
    }
    within(start.elapsed(), 1.0, "transliteration")?;
    Ok(format!(
        "{FUZZ_TRANSLIT} fuzzed strings and 2 sample phrases, {:.2?}",
        start.elapsed()
    ))
}

const ALEF_VARIANTS: [char; 3] = ['\u{0622}', '\u{0623}', '\u{0625}'];
const TEH_MARBUTA: char = '\u{0629}';
const ALEF_MAKSURA: char = '\u{0649}';

fn expected_normal_form(s: &str) -> String {
    let mapped: String = s
        .chars()
        .map(|c| match c {
            c if ALEF_VARIANTS.contains(&c) => '\u{0627}',
            TEH_MARBUTA => '\u{0647}',
            ALEF_MAKSURA => '\u{064A}',
            c => c,
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalization_rules() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // precomposed letters only: the output is fully predictable
    let letters: Vec<char> = "ابتثجحخدذرزسشصضطظعغفقكلمنهويءؤئ"
        .chars()
        .chain(ALEF_VARIANTS)
        .chain([TEH_MARBUTA, ALEF_MAKSURA])
        .chain([' ', '\t', '\n', ' '])
        .collect();
    // anything in the Arabic block plus combining hamza/madda and Latin
    let mut wild: Vec<char> = ('\u{0600}'..='\u{06FF}').collect();
    wild.extend([
        '\u{0653}', '\u{0654}', '\u{0655}', 'a', 'Z', ' ', '\t', '\u{00A0}',
    ]);
    let forbidden = [
        ALEF_VARIANTS[0],
        ALEF_VARIANTS[1],
        ALEF_VARIANTS[2],
        TEH_MARBUTA,
        ALEF_MAKSURA,
    ];
    for case in 0..FUZZ_NORMALIZE {
        let (pool, exact) = if case % 2 == 0 {
            (&letters, true)
        } else {
            (&wild, false)
        };
        let len = rng.gen_range(0..25);
        let raw: String = (0..len).map(|_| *pool.choose(&mut rng).unwrap()).collect();
        let once = normalize(&raw);
        let s = once.as_str();
        if normalize(s).as_str() != s {
            return Err(format!("case {case}: not idempotent on {raw:?}"));
        }
        if s.chars().any(|c| forbidden.contains(&c)) {
            return Err(format!("case {case}: {s:?} keeps a rewritten letter"));
        }
        if s.nfc().collect::<String>() != s {
            return Err(format!("case {case}: {s:?} is not NFC"));
        }
        if s.starts_with(' ')
            || s.ends_with(' ')
            || s.contains("  ")
            || s.chars().any(|c| c.is_whitespace() && c != ' ')
        {
            return Err(format!("case {case}: whitespace not collapsed in {s:?}"));
        }
        if exact && s != expected_normal_form(&raw) {
            return Err(format!("case {case}: {raw:?} -> {s:?}"));
        }
    }
    within(start.elapsed(), 1.0, "normalization")?;
    Ok(format!(
        "{FUZZ_NORMALIZE} fuzzed inputs, {:.2?}",
        start.elapsed()
    ))
}

/// Exact minimizer of the box-constrained dual by enumerating which
/// coordinates sit at 0, at their bound, or strictly inside.
fn brute_force_dual(q: &[Vec<f64>], c: f64) -> (f64, Vec<f64>) {
    let n = q.len();
    let objective = |a: &[f64]| {
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += 0.5 * a[i] * q[i][j] * a[j];
            }
            v -= a[i];
        }
        v
    };
    let mut best = (0.0, vec![0.0; n]);
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut x = code;
        for s in state.iter_mut() {
            *s = (x % 3) as u8;
            x /= 3;
        }
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            // Q_FF a_F = 1 - Q_FB a_B
            let m = free.len();
            let mut a: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| {
                    let mut row: Vec<f64> = free.iter().map(|&j| q[i][j]).collect();
                    let rhs = 1.0
                        - (0..n)
                            .filter(|j| state[*j] == 1)
                            .map(|j| q[i][j] * c)
                            .sum::<f64>();
                    row.push(rhs);
                    row
                })
                .collect();
            let mut singular = false;
            for col in 0..m {
                let pivot = (col..m)
                    .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                    .unwrap();
                if a[pivot][col].abs() < 1e-12 {
                    singular = true;
                    break;
                }
                a.swap(col, pivot);
                let pivot_row = a[col].clone();
                for (r, row) in a.iter_mut().enumerate() {
                    if r != col {
                        let f = row[col] / pivot_row[col];
                        for (v, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                            *v -= f * p;
                        }
                    }
                }
            }
            if singular {
                continue;
            }
            for (k, &i) in free.iter().enumerate() {
                alpha[i] = a[k][m] / a[k][k];
            }
            if alpha.iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
        }
        let v = objective(&alpha);
        if code == 0 || v < best.0 {
            best = (v, alpha);
        }
    }
    best
}

fn svm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut ties = 0;
    for case in 0..SVM_DATASETS {
        let n = rng.gen_range(1..=8);
        let dim = rng.gen_range(1..=3);
        let c = [0.1, 1.0, 10.0][case % 3];
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| (0..dim).map(|k| (k, rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let positive: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let y = |i: usize| if positive[i] { 1.0 } else { -1.0 };
        let dot = |a: &[(usize, f64)], b: &[(usize, f64)]| {
            a.iter().zip(b).map(|(p, q)| p.1 * q.1).sum::<f64>()
        };
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| y(i) * y(j) * (dot(&rows[i], &rows[j]) + 1.0))
                    .collect()
            })
            .collect();
        let (oracle_dual, oracle_alpha) = brute_force_dual(&q, c);

        let upper = vec![c; n];
        let problem = BinaryProblem {
            rows: &rows,
            positive: &positive,
            upper: &upper,
            n_features: dim,
        };
        let s = solve_binary(
            &problem,
            &SolverParams {
                tol: 1e-10,
                max_iters: 1_000_000,
                seed: case as u64,
            },
        );
        let gap = (s.dual_objective - oracle_dual).abs();
        worst = worst.max(gap);
        if gap > SVM_DUAL_TOLERANCE {
            return Err(format!(
                "dataset {case}: dual {} vs oracle {oracle_dual}",
                s.dual_objective
            ));
        }
        for i in 0..n {
            let oracle_f: f64 = (0..n)
                .map(|j| oracle_alpha[j] * y(j) * (dot(&rows[j], &rows[i]) + 1.0))
                .sum();
            let f = s.decision_value(&rows[i]);
            if (f > 0.0) != (oracle_f > 0.0) {
                if f.abs().max(oracle_f.abs()) < SVM_TIE {
                    ties += 1;
                } else {
                    return Err(format!(
                        "dataset {case} point {i}: {f} vs oracle {oracle_f}"
                    ));
                }
            }
        }
    }
    within(start.elapsed(), 30.0, "SVM oracle")?;
    Ok(format!(
        "{SVM_DATASETS} datasets, max |dual - oracle| = {worst:.2e} (tolerance {SVM_DUAL_TOLERANCE:e}), {ties} zero-margin ties, {:.2?}",
        start.elapsed()
    ))
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let d = toy();
    let pos = LexiconPosProvider::builtin();
    let source = PosSource::Provider(&pos);
    let template = FeatureTemplate::new(2, 2, 3).map_err(|e| e.to_string())?;
    let (model, _) = train_segmenter(all_turns(&d), source, template, &TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let pred = tag_corpus(&model, &d, source).map_err(|e| e.to_string())?;
    let m = useg::metrics::evaluate(all_turns(&d), all_turns(&pred), EvalOptions::default())
        .map_err(|e| e.to_string())?;
    within(start.elapsed(), 60.0, "overfit")?;
    check(
        m.f1 >= OVERFIT_F1,
        format!(
            "F1 = {:.4} on {} training turns (bar {OVERFIT_F1}), {:.2?}",
            m.f1,
            toy_counts::TURNS,
            start.elapsed()
        ),
    )
}

fn decode_invariants() -> Outcome {
    let start = Instant::now();
    let d = toy();
    let pos = LexiconPosProvider::builtin();
    let turns: Vec<&Turn> = all_turns(&d).collect();
    let labeled: Vec<_> = turns
        .iter()
        .map(|t| {
            (
                token_sequence(&t.tokens, PosSource::Provider(&pos)),
                t.tags.as_deref().unwrap(),
            )
        })
        .collect();
    let vocab: Vec<&str> = turns
        .iter()
        .flat_map(|t| t.tokens.iter().map(|k| k.buckwalter.as_str()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let models = 50;
    let mut runs = 0;
    for m in 0..models {
        let template = FeatureTemplate::new(
            rng.gen_range(1..=5),
            rng.gen_range(1..=5),
            rng.gen_range(0..=5),
        )
        .map_err(|e| e.to_string())?
        .with_bigrams(rng.gen_bool(0.3));
        let alphabet = build_alphabet(&labeled, &template).map_err(|e| e.to_string())?;
        let dim = alphabet.len();
        let mut weight = || {
            (0..dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        };
        let weights = vec![weight(), weight()];
        let bias = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let model = LinearModel::from_parts(
            vec!["B-Seg".into(), "I-Seg".into()],
            weights,
            bias,
            alphabet,
            template,
        )
        .map_err(|e| e.to_string())?;
        let size_before = model.alphabet().len();
        for r in 0..FUZZ_DECODE / models {
            let len = rng.gen_range(1..=20);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.9) {
                        *vocab.choose(&mut rng).unwrap()
                    } else {
                        "xyz"
                    }
                })
                .collect();
            let infos = (0..len)
                .map(|_| PosInfo {
                    is_conjunction: rng.gen_bool(0.2),
                    is_noun: rng.gen_bool(0.2),
                    is_proper_noun: rng.gen_bool(0.1),
                    ..PosInfo::unknown()
                })
                .collect();
            let seq = Sequence { words, pos: infos };
            let tags = decode(&model, &seq).map_err(|e| format!("model {m} run {r}: {e}"))?;
            let spans = spans_from_tags(&tags);
            let covered = spans.first().map(|s| s.start) == Some(0)
                && spans.last().map(|s| s.end) == Some(len)
                && spans
                    .windows(2)
                    .all(|w| w[0].end == w[1].start && w[0].start < w[0].end);
            if tags.len() != len
                || tags[0] != SegTag::BSeg
                || !covered
                || tags_from_spans(&spans) != tags
            {
                return Err(format!("model {m} run {r}: tags {tags:?}"));
            }
            runs += 1;
        }
        if model.alphabet().len() != size_before {
            return Err(format!("model {m}: alphabet grew during decoding"));
        }
    }
    Ok(format!(
        "{runs} decodes over {models} random models, {:.2?}",
        start.elapsed()
    ))
}

fn synthetic_domain(genre: Genre, n: usize, id: usize) -> Dialogue {
    let turns = (0..n)
        .map(|i| Turn {
            dialogue_id: format!("S{id}"),
            turn_id: format!("S{id}-{i}"),
            speaker: if i % 2 == 0 {
                Speaker::Operator
            } else {
                Speaker::Customer
            },
            tokens: vec![Token::new(ArabicString::new("نعم"), 0)],
            tags: Some(vec![SegTag::BSeg]),
            da_labels: None,
        })
        .collect();
    Dialogue {
        id: format!("S{id}"),
        genre,
        medium: Medium::Spoken,
        turns,
    }
}

fn split_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sizes: Vec<[usize; 3]> = vec![
        [50, 50, 50],
        [5000, 5000, 5000],
        [1123, 1001, 877],
        [51, 99, 4999],
    ];
    sizes.extend((0..16).map(|_| [(); 3].map(|_| rng.gen_range(50..=5000))));
    let genres = [Genre::Banks, Genre::Flights, Genre::Mno];
    for n in &sizes {
        let corpus: Vec<Dialogue> = (0..3)
            .map(|k| synthetic_domain(genres[k], n[k], k))
            .collect();
        for seed in [None, Some(9)] {
            let split = split_corpus(&corpus, DEFAULT_RATIOS, seed).map_err(|e| e.to_string())?;
            if split != split_corpus(&corpus, DEFAULT_RATIOS, seed).map_err(|e| e.to_string())? {
                return Err(format!("{n:?}: split not deterministic"));
            }
            let mut counts: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
            let mut seen = vec![vec![false; 0]; 3];
            for (k, d) in corpus.iter().enumerate() {
                seen[k] = vec![false; d.turns.len()];
            }
            for (bucket, refs) in [&split.train, &split.dev, &split.test]
                .into_iter()
                .enumerate()
            {
                for r in refs {
                    counts.entry(r.dialogue).or_default()[bucket] += 1;
                    if std::mem::replace(&mut seen[r.dialogue][r.turn], true) {
                        return Err(format!("{n:?}: turn assigned twice"));
                    }
                }
            }
            if seen.iter().flatten().any(|s| !s) {
                return Err(format!("{n:?}: turn left out"));
            }
            for (k, &total) in n.iter().enumerate() {
                let got = counts[&k];
                for b in 0..3 {
                    if (got[b] as f64 - DEFAULT_RATIOS[b] * total as f64).abs() > SPLIT_TOLERANCE {
                        return Err(format!("domain of {total}: buckets {got:?}"));
                    }
                }
            }
        }
    }
    within(start.elapsed(), 30.0, "splitting")?;
    Ok(format!(
        "{} corpora of 50..5000 turns per domain, with and without shuffle, {:.2?}",
        sizes.len(),
        start.elapsed()
    ))
}

fn sweep_protocol() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_useg");
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let toy = fixture("toy.useg");
    let split = Command::new(bin)
        .args(["split", toy.to_str().unwrap(), "--out-dir", &path("")])
        .output()
        .map_err(|e| e.to_string())?;
    if !split.status.success() {
        return Err("split failed".into());
    }
    let sweep = || -> Result<String, String> {
        let out = Command::new(bin)
            .args([
                "sweep",
                "--train",
                &path("train.useg"),
                "--dev",
                &path("dev.useg"),
                "--seed",
                "5",
                "--quiet",
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        String::from_utf8(out.stdout).map_err(|e| e.to_string())
    };
    let first = sweep()?;
    let second = sweep()?;
    if first != second {
        return Err("sweep output differs between runs".into());
    }
    let rows: Vec<Vec<&str>> = first
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    let mut windows: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    windows.sort();
    let grid = ["-1/+1", "-2/+2", "-3/+3", "-4/+4", "-5/+5"];
    let flagged = rows.iter().filter(|r| r.get(8) == Some(&"*")).count();
    check(
        windows == grid && flagged == 1 && rows[0].get(8) == Some(&"*"),
        format!(
            "windows {windows:?}, best {}, identical across runs, {:.2?}",
            rows[0][1],
            start.elapsed()
        ),
    )
}

fn fixture_stats() -> Outcome {
    let s = corpus_stats(&toy());
    let got = [
        s.n_dialogues,
        s.n_turns,
        s.n_segmented_turns,
        s.n_utterances_in_segmented_turns,
        s.n_utterances,
        s.n_words,
    ];
    let want = [
        toy_counts::DIALOGUES,
        toy_counts::TURNS,
        toy_counts::SEGMENTED_TURNS,
        toy_counts::UTTERANCES_IN_SEGMENTED,
        toy_counts::UTTERANCES,
        toy_counts::WORDS,
    ];
    let t = corpus_stats(&sample());
    let sample = [
        t.n_dialogues,
        t.n_turns,
        t.n_segmented_turns,
        t.n_utterances_in_segmented_turns,
        t.n_utterances,
        t.n_words,
    ];
    check(
        got == want && sample == [1, 7, 3, 8, 12, 37],
        format!("toy {got:?}, sample {sample:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "F1 formula reproduces the published F1 column",
            f1_consistency,
        ),
        ("transliteration round trip", translit_round_trip),
        ("normalization rules and idempotence", normalization_rules),
        ("SVM dual matches brute-force oracle", svm_oracle),
        ("overfit on the fixture corpus", overfit),
        ("decoder structural invariants", decode_invariants),
        ("per-domain 70/20/10 split", split_correctness),
        ("window sweep grid and determinism", sweep_protocol),
        ("fixture statistics match hand counts", fixture_stats),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        exit(1);
    }
}
