//! Acceptance gate: one PASS/FAIL line per criterion, each under its time
//! budget. Exits non-zero when any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use styleforge::align::{build_signal_pair, min_edit_script};
use styleforge::backends::mock::train_mock_mask_predictor;
use styleforge::backends::{BackendConfig, BackendSet};
use styleforge::datasets::builtin;
use styleforge::harness::{cmd_sweep_alpha, run_transfer, ExperimentConfig};
use styleforge::masking::{mask_scores, predict_mask, MaskingConfig};
use styleforge::metrics::{compose_mean, corpus_bleu, evaluate_run, mask_f1, EvalOptions};
use styleforge::strategies::prompts::{icl, refine, rewrite};
use styleforge::strategies::{llm_transfer, synthesize_signal_dataset, Demonstration, IclWording, Method, StrategyConfig};
use styleforge::text::{tokenize, StyleLabel, TokenSeq, TransferDirection};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn toyvolt_backends() -> BackendSet {
    BackendSet::from_config(&BackendConfig::toyvolt(), Path::new(".")).expect("toyvolt backends")
}

fn neg_to_pos() -> TransferDirection {
    "negative:positive".parse().expect("valid direction")
}

fn experiment(method: Method, out_dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        dataset: builtin("toyvolt", None).expect("toyvolt spec"),
        direction: neg_to_pos(),
        strategy: StrategyConfig::new(method),
        backends: toyvolt_backends(),
        parallelism: 4,
        seed: 17,
        out_dir: out_dir.to_path_buf(),
    }
}

fn mean_reproduction() -> Outcome {
    let text = include_str!("fixtures/mean_rows.csv");
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("{line}: {e}"));
        let (acc, s_sbleu, ppl, published) = (num(3)?, num(5)?, num(6)?, num(7)?);
        let mean = compose_mean(acc, s_sbleu, ppl).map_err(|e| e.to_string())?;
        let diff = (mean - published).abs();
        ensure(diff <= 0.15, || format!("{} / {}: {mean:.3} vs {published}", f[1], f[2]))?;
        worst = worst.max(diff);
        rows += 1;
    }
    ensure(rows == 67, || format!("expected 67 fixture rows, found {rows}"))?;
    Ok(format!("{rows} rows, max |Δ| = {worst:.3}"))
}

fn alpha_endpoint() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = experiment(Method::PromptThenAm, dir.path());
    let grid: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let rows = cmd_sweep_alpha(&cfg, &grid, true, &EvalOptions::default()).map_err(|e| e.to_string())?;
    ensure(rows.len() == grid.len(), || format!("{} rows", rows.len()))?;

    let llm = run_transfer(&experiment(Method::Llm, dir.path())).map_err(|e| e.to_string())?;
    let baseline = evaluate_run(
        &llm.outputs,
        &llm.sources.sentences,
        llm.refs.as_ref().map(|r| r.sentences.as_slice()),
        &cfg.direction,
        &cfg.backends,
        &EvalOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(rows[0].report == baseline, || {
        format!("α=0 {:?} differs from llm {:?}", rows[0].report, baseline)
    })?;
    let counts: Vec<usize> = rows.iter().map(|r| r.masked_tokens).collect();
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || format!("masked counts {counts:?}"))?;
    Ok(format!("α=0 row equals llm baseline; masked tokens {counts:?}"))
}

fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn alignment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let alphabet = ["a", "b", "c", "d", "e"];
    let seq = |rng: &mut ChaCha8Rng| {
        let len = rng.random_range(0..=8);
        TokenSeq::from_tokens((0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]))
    };
    for case in 0..10_000 {
        let src = seq(&mut rng);
        let tgt = seq(&mut rng);
        let script = min_edit_script(&src, &tgt);
        let expected = levenshtein(src.tokens(), tgt.tokens());
        ensure(script.cost() == expected, || {
            format!("case {case}: cost {} vs oracle {expected} for {src} -> {tgt}", script.cost())
        })?;
        let replayed = script.replay(&src, &tgt).map_err(|e| e.to_string())?;
        ensure(replayed.tokens() == tgt.tokens(), || format!("case {case}: replay gave {replayed}"))?;
    }
    Ok("10000 pairs match the oracle and replay exactly".into())
}

fn running_example() -> Outcome {
    let (d1, d2) = build_signal_pair(&tokenize("it is awful"), &tokenize("it is wonderful"), &neg_to_pos());
    ensure(d1.labels.to_bits() == [0, 0, 1], || format!("labels {:?}", d1.labels.to_bits()))?;
    ensure(d2.masked.rendered() == "it is [SLOT]", || format!("masked {:?}", d2.masked.rendered()))?;
    ensure(d2.target.to_string() == "it is wonderful", || format!("target {}", d2.target))?;
    let d1_line = d1.to_json_line();
    let d2_line = d2.to_json_line();
    ensure(
        d1_line == r#"{"source":"it is awful","labels":[0,0,1],"direction":"negative->positive"}"#,
        || d1_line.clone(),
    )?;
    ensure(
        d2_line == r#"{"masked":"it is [SLOT]","target":"it is wonderful","target_style":"positive"}"#,
        || d2_line.clone(),
    )?;
    Ok(format!("{d1_line} / {d2_line}"))
}

fn distillation() -> Outcome {
    let backends = toyvolt_backends();
    let dir = neg_to_pos();
    let spec = builtin("toyvolt", None).map_err(|e| e.to_string())?;
    let train = spec.load_train(dir.source()).map_err(|e| e.to_string())?;
    let dev = spec.load_dev(dir.source()).map_err(|e| e.to_string())?;
    ensure(dev.len() == 200, || format!("dev split has {} sentences", dev.len()))?;
    let gen = Default::default();
    let (d1, _) = synthesize_signal_dataset(&train, &dir, 500, &backends, &gen, 7).map_err(|e| e.to_string())?;
    let predictor = train_mock_mask_predictor(&d1).map_err(|e| e.to_string())?;
    let with_predictor = backends.with_classifier(std::sync::Arc::new(predictor), "mask-predictor");
    let threshold = MaskingConfig::default();
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    for sentence in &dev.sentences {
        let scores = mask_scores(sentence, &dir, &with_predictor).map_err(|e| e.to_string())?;
        predicted.push(predict_mask(sentence, &scores, &threshold).map_err(|e| e.to_string())?);
        let rewrite = llm_transfer(sentence, &dir, &backends, &gen).map_err(|e| e.to_string())?;
        gold.push(build_signal_pair(sentence, &rewrite, &dir).0.labels);
    }
    let f1 = mask_f1(&predicted, &gold).map_err(|e| e.to_string())?;
    ensure(f1 >= 0.95, || format!("F1 {f1:.4} < 0.95"))?;
    Ok(format!("F1 {f1:.4} on {} held-out sentences", dev.len()))
}

fn prompt_goldens() -> Outcome {
    let pos = StyleLabel::new("positive").map_err(|e| e.to_string())?;
    let cases = [
        (
            rewrite("It is awful.", &pos),
            "Rewrite the following text in a positive manner: It is awful.",
        ),
        (rewrite("", &pos), "Rewrite the following text in a positive manner: "),
        (
            refine("It is good."),
            "Refine the following text without changing its semantic: It is good.",
        ),
        (refine(""), "Refine the following text without changing its semantic: "),
    ];
    for (got, want) in &cases {
        ensure(got == want, || format!("{got:?} != {want:?}"))?;
    }
    let demos = [Demonstration {
        source_text: "it is awful".into(),
        transferred_text: "it is wonderful".into(),
        similarity: 1.0,
    }];
    let got = icl(&demos, "no smiles", &neg_to_pos(), IclWording::Sentiment).map_err(|e| e.to_string())?;
    let want = "\"negative Text\": it is awful. \"positive Text\": it is wonderful. Please rewrite the following text into a positive sentiment. \"negative Text\": no smiles. \"positive Text\":";
    ensure(got == want, || format!("{got:?}"))?;
    Ok("rewrite, refine and in-context templates byte-exact".into())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = experiment(Method::PromptThenAm, dir.path());
    let first = run_transfer(&cfg).map_err(|e| e.to_string())?;
    let second = run_transfer(&cfg).map_err(|e| e.to_string())?;
    ensure(first.outputs.len() == 250, || format!("{} outputs", first.outputs.len()))?;
    ensure(first == second, || "two runs differ".into())?;
    let report = evaluate_run(
        &first.outputs,
        &first.sources.sentences,
        first.refs.as_ref().map(|r| r.sentences.as_slice()),
        &cfg.direction,
        &cfg.backends,
        &EvalOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(report.acc == 100.0, || format!("ACC {}", report.acc))?;
    ensure(report.s_sbleu >= 60.0, || format!("s-sBLEU {:.2}", report.s_sbleu))?;
    Ok(format!("ACC {}, s-sBLEU {:.1}, deterministic", report.acc, report.s_sbleu))
}

fn bleu_fixtures() -> Outcome {
    let corpus = |lines: &[&str]| lines.iter().map(|l| tokenize(l)).collect::<Vec<_>>();
    let a = corpus(&["the cat sat on the mat", "we had a very nice time"]);
    let disjoint = corpus(&["one two three four five six", "seven eight nine ten eleven twelve"]);
    let mixed_hyp = corpus(&["the cat sat on the mat", "we had a very nice time"]);
    let mixed_ref = corpus(&["the cat is on the mat", "we had a very nice time"]);
    let cases = [
        ("identity", corpus_bleu(&a, &a), 100.0),
        ("disjoint", corpus_bleu(&a, &disjoint), 0.0),
        // p = (11/12, 8/10, 5/8, 3/6), BP = 1
        ("mixed", corpus_bleu(&mixed_hyp, &mixed_ref), 69.1891),
    ];
    let mut shown = Vec::new();
    for (name, got, want) in cases {
        let got = got.map_err(|e| e.to_string())?;
        ensure(format!("{got:.4}") == format!("{want:.4}"), || format!("{name}: {got:.6} vs {want}"))?;
        shown.push(format!("{name} {got:.4}"));
    }
    Ok(shown.join(", "))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("mean metric reproduction", Duration::from_secs(1), mean_reproduction),
        ("alpha endpoint equivalence", Duration::from_secs(10), alpha_endpoint),
        ("alignment oracle equivalence", Duration::from_secs(30), alignment_oracle),
        ("running example signal pair", Duration::from_secs(1), running_example),
        ("distillation loop closure", Duration::from_secs(20), distillation),
        ("prompt golden strings", Duration::from_secs(1), prompt_goldens),
        ("end-to-end mock pipeline", Duration::from_secs(15), end_to_end),
        ("BLEU fixtures", Duration::from_secs(1), bleu_fixtures),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
