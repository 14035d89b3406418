//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sillon::domain::ParentRef;
use sillon::ingest::{sync_all, SyncLocks};
use sillon::jsonl;
use sillon::models::{self, TrainRequest};
use sillon::pipeline::{build_index, effective_labels};
use sillon::store::Store;
use sillon_core::classify::{split, train, ClassWeighting, LabeledExample, Problem, SplitConfig, TrainConfig};
use sillon_core::evaluate::{evaluate, report, ConfusionMatrix, EvalReport};
use sillon_core::index::{query_terms, ParentKind, SearchFilters};
use sillon_core::synth::{generate, SynthConfig};
use sillon_core::taxonomy::Task;
use sillon_core::text::{reconstructs, tokenize, SentenceSpan};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

// (id, video, ordinal, kind, text, [channel, labels...])
type Doc = (String, String, u32, ParentKind, String, Vec<String>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("metric oracle", metric_oracle),
        ("hand-worked report", hand_worked_report),
        ("gradient check", gradient_check),
        ("synthetic-corpus classification", synthetic_classification),
        ("class-weighting property", class_weighting),
        ("search oracle", search_oracle),
        ("pipeline invariants", pipeline_invariants),
        ("end-to-end CLI", end_to_end),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

// Metrics counted straight from the label vectors.
struct Brute {
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    support: Vec<usize>,
    accuracy: f64,
}

fn brute(preds: &[usize], golds: &[usize], k: usize) -> Brute {
    let n = preds.len();
    let (mut tp, mut predicted, mut support) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (&p, &g) in preds.iter().zip(golds) {
        predicted[p] += 1;
        support[g] += 1;
        if p == g {
            tp[g] += 1;
        }
    }
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = (0..k).map(|c| div(tp[c], predicted[c])).collect();
    let recall = (0..k).map(|c| div(tp[c], support[c])).collect();
    let f1 = (0..k).map(|c| div(2 * tp[c], predicted[c] + support[c])).collect();
    Brute { precision, recall, f1, support, accuracy: div(tp.iter().sum(), n) }
}

fn tally(preds: &[usize], golds: &[usize], k: usize) -> ConfusionMatrix {
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &g) in preds.iter().zip(golds) {
        counts[g][p] += 1;
    }
    ConfusionMatrix::from_counts((0..k).map(|c| format!("c{c}")).collect(), counts)
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let k = rng.random_range(1..=10);
        let n = if i % 10 == 0 { 100_000 } else { rng.random_range(1..=20_000) };
        let skew = rng.random_range(0.0..1.0);
        let golds: Vec<usize> = (0..n).map(|_| if rng.random_bool(skew) { 0 } else { rng.random_range(0..k) }).collect();
        let preds: Vec<usize> =
            golds.iter().map(|&g| if rng.random_bool(0.6) { g } else { rng.random_range(0..k) }).collect();
        let rep = report(&tally(&preds, &golds, k)).map_err(|e| e.to_string())?;
        let b = brute(&preds, &golds, k);
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / k as f64;
        let weighted = |xs: &[f64]| xs.iter().zip(&b.support).map(|(x, &s)| x * s as f64).sum::<f64>() / n as f64;
        let mut pairs = vec![
            (rep.macro_avg.precision, mean(&b.precision)),
            (rep.macro_avg.recall, mean(&b.recall)),
            (rep.macro_avg.f1, mean(&b.f1)),
            (rep.weighted_avg.precision, weighted(&b.precision)),
            (rep.weighted_avg.recall, weighted(&b.recall)),
            (rep.weighted_avg.f1, weighted(&b.f1)),
            (rep.accuracy, b.accuracy),
        ];
        for (c, m) in rep.per_class.iter().enumerate() {
            ensure!(m.support as usize == b.support[c], "instance {i}: support of class {c}");
            pairs.extend([(m.precision, b.precision[c]), (m.recall, b.recall[c]), (m.f1, b.f1[c])]);
        }
        for (got, want) in pairs {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-12, "instance {i} (K={k}, N={n}): {got} vs {want}");
        }
        ensure!(rep.weighted_avg.recall == rep.accuracy, "instance {i}: weighted recall {} != accuracy {}", rep.weighted_avg.recall, rep.accuracy);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("1000 instances, max abs error {worst:.1e}, weighted recall == accuracy on all"))
}

fn hand_worked_report() -> Outcome {
    let m = ConfusionMatrix::from_counts(vec!["A".into(), "B".into()], vec![vec![8, 2], vec![1, 9]]);
    let rep = report(&m).map_err(|e| e.to_string())?;
    // A: tp 8, fp 1, fn 2. B: tp 9, fp 2, fn 1.
    let f1_a = 2.0 * 8.0 / (2.0 * 8.0 + 1.0 + 2.0);
    let f1_b = 2.0 * 9.0 / (2.0 * 9.0 + 2.0 + 1.0);
    let derived = (f1_a + f1_b) / 2.0;
    ensure!((rep.macro_avg.f1 - derived).abs() < 1e-12, "macro-F1 {} vs derived {derived}", rep.macro_avg.f1);
    ensure!((rep.macro_avg.f1 - 0.8496).abs() <= 5e-5, "macro-F1 {} not within 5e-5 of 0.8496", rep.macro_avg.f1);
    ensure!(rep.accuracy == 0.85, "accuracy {}", rep.accuracy);
    Ok(format!("macro-F1 {:.6}, accuracy {}", rep.macro_avg.f1, rep.accuracy))
}

fn dense_loss(p: &Problem, w: &[f64]) -> f64 {
    let k = p.num_classes;
    let mut total = 0.0;
    for ((x, &y), &s) in p.features.iter().zip(&p.labels).zip(&p.sample_weights) {
        let x = x.to_dense(p.dim);
        let z: Vec<f64> = (0..k).map(|c| (0..p.dim).map(|j| x[j] * w[j * k + c]).sum()).collect();
        let log_norm = z.iter().map(|v| v.exp()).sum::<f64>().ln();
        total += s * (log_norm - z[y]);
    }
    total / p.features.len() as f64 + p.l2_penalty * w.iter().map(|v| v * v).sum::<f64>()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (n, d, k) = (rng.random_range(2..10), rng.random_range(1..6), rng.random_range(2..6));
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r: Vec<f64> = (0..d).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
                r.push(1.0);
                r
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        let problem = Problem::from_dense(&rows, labels, weights, k, rng.random_range(0.0..0.05));
        let w: Vec<f64> = (0..problem.num_weights()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (loss, grad) = problem.loss_and_gradient(&w);
        ensure!((loss - dense_loss(&problem, &w)).abs() < 1e-10, "instance {i}: loss {loss} vs dense {}", dense_loss(&problem, &w));
        let h = 1e-5;
        let numeric: Vec<f64> = (0..w.len())
            .map(|j| {
                let (mut plus, mut minus) = (w.clone(), w.clone());
                plus[j] += h;
                minus[j] -= h;
                (dense_loss(&problem, &plus) - dense_loss(&problem, &minus)) / (2.0 * h)
            })
            .collect();
        let diff = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|b| b * b).sum::<f64>().sqrt());
        let rel = if scale == 0.0 { 0.0 } else { diff / scale };
        worst = worst.max(rel);
        ensure!(rel < 1e-5, "instance {i}: relative error {rel:.2e}");
    }
    Ok(format!("20 instances, max relative error {worst:.2e}"))
}

fn examples(seed: u64, task: Task) -> Vec<LabeledExample> {
    generate(seed, &SynthConfig::default()).iter().map(|c| c.example(task)).collect()
}

fn split_80_20(data: &[LabeledExample], seed: u64) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    split(data, &SplitConfig { train_fraction: 0.8, seed, stratified: true }).expect("split")
}

fn fit_and_score(task: Task, train_set: &[LabeledExample], test: &[LabeledExample], weighting: ClassWeighting, seed: u64) -> EvalReport {
    let config = TrainConfig { class_weighting: weighting, seed, ..TrainConfig::default() };
    let model = train(task, train_set, &config).expect("train");
    evaluate(&model, test).expect("evaluate")
}

fn majority_baseline(task: Task, train_set: &[LabeledExample], test: &[LabeledExample]) -> EvalReport {
    let classes = task.classes();
    let mut counts = vec![0usize; classes.len()];
    for e in train_set {
        counts[classes.iter().position(|c| *c == e.label).unwrap()] += 1;
    }
    let majority = (0..classes.len()).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
    let golds: Vec<usize> = test.iter().map(|e| classes.iter().position(|c| *c == e.label).unwrap()).collect();
    let mut matrix = vec![vec![0u64; classes.len()]; classes.len()];
    for g in golds {
        matrix[g][majority] += 1;
    }
    report(&ConfusionMatrix::from_counts(classes.iter().map(|c| c.to_string()).collect(), matrix)).unwrap()
}

const SYNTH_SEED: u64 = 42;

fn synthetic_classification() -> Outcome {
    let start = Instant::now();
    let corpus = generate(SYNTH_SEED, &SynthConfig::default());
    ensure!(corpus.len() == 1400, "{} comments", corpus.len());
    let negatives = corpus.iter().filter(|c| c.example(Task::InfoType).label == Task::InfoType.negative_class()).count();
    ensure!((0.85..=0.95).contains(&(negatives as f64 / 1400.0)), "{negatives} non-pertinent comments");

    let run = |seed: u64| {
        let info = examples(seed, Task::InfoType);
        let (tr, te) = split_80_20(&info, seed);
        let info_rep = fit_and_score(Task::InfoType, &tr, &te, ClassWeighting::InverseFrequency, seed);
        let base = majority_baseline(Task::InfoType, &tr, &te);
        let contro = examples(seed, Task::Controversy);
        let (tr, te) = split_80_20(&contro, seed);
        let contro_rep = fit_and_score(Task::Controversy, &tr, &te, ClassWeighting::InverseFrequency, seed);
        (info_rep.macro_avg.f1, base.macro_avg.f1, contro_rep.macro_avg.f1, te.len())
    };
    let (info_f1, base_f1, contro_f1, test_size) = run(SYNTH_SEED);
    ensure!(test_size == 280, "test split of {test_size}");
    let elapsed = start.elapsed();
    ensure!(info_f1 >= 0.60, "6-class macro-F1 {info_f1:.4} < 0.60");
    ensure!(info_f1 > base_f1, "6-class macro-F1 {info_f1:.4} does not beat the majority baseline {base_f1:.4}");
    ensure!(contro_f1 >= 0.75, "controversy macro-F1 {contro_f1:.4} < 0.75");
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");

    let mut passing = 0;
    for seed in 0..10 {
        let (i, b, c, _) = run(seed);
        if i >= 0.60 && i > b && c >= 0.75 {
            passing += 1;
        }
    }
    Ok(format!(
        "seed {SYNTH_SEED}: 6-class macro-F1 {info_f1:.4} (majority baseline {base_f1:.4}), controversy macro-F1 {contro_f1:.4}; \
         thresholds met on {passing}/10 other seeds"
    ))
}

// Mean recall over every class except the task's negative one.
fn minority_recall(task: Task, rep: &EvalReport) -> f64 {
    let minority: Vec<f64> = rep.per_class.iter().filter(|m| m.class != task.negative_class()).map(|m| m.recall).collect();
    minority.iter().sum::<f64>() / minority.len() as f64
}

fn class_weighting() -> Outcome {
    let mut summary = Vec::new();
    for task in Task::ALL {
        let mut wins = 0;
        for seed in 0..10 {
            let data = examples(seed, task);
            let (tr, te) = split_80_20(&data, seed);
            let plain = fit_and_score(task, &tr, &te, ClassWeighting::None, seed);
            let weighted = fit_and_score(task, &tr, &te, ClassWeighting::InverseFrequency, seed);
            if minority_recall(task, &weighted) >= minority_recall(task, &plain) {
                wins += 1;
            }
        }
        summary.push(format!("{task}: {wins}/10 seeds"));
        ensure!(wins > 5, "{task}: weighted minority recall >= unweighted on only {wins}/10 seeds");
    }
    Ok(summary.join(", "))
}

// Scans every sentence of the store: tokenizes, filters, scores and sorts.
fn naive_search(docs: &[Doc], terms: &[String], f: &SearchFilters) -> Vec<(String, f64)> {
    let bags: Vec<BTreeMap<String, usize>> = docs
        .iter()
        .map(|d| {
            let mut bag = BTreeMap::new();
            for t in tokenize(&d.4).into_iter().filter(|t| t.is_content()) {
                *bag.entry(t.text).or_insert(0) += 1;
            }
            bag
        })
        .collect();
    let n = docs.len() as f64;
    let mut hits: Vec<(&str, &str, u32, f64)> = Vec::new();
    for ((id, video, ordinal, kind, _, labels), bag) in docs.iter().zip(&bags) {
        let channel = &labels[0];
        if !terms.iter().all(|t| bag.contains_key(t))
            || f.channel.as_ref().is_some_and(|c| c != channel)
            || f.kind.is_some_and(|k| k != *kind)
            || f.class.as_ref().is_some_and(|c| !labels[1..].contains(c))
        {
            continue;
        }
        let score: f64 = terms
            .iter()
            .map(|t| {
                let df = bags.iter().filter(|b| b.contains_key(t)).count() as f64;
                bag[t] as f64 * (1.0 + n / df).ln()
            })
            .sum();
        hits.push((id, video, *ordinal, score));
    }
    hits.sort_by(|a, b| b.3.total_cmp(&a.3).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.cmp(&b.2)).then_with(|| a.0.cmp(b.0)));
    hits.into_iter().map(|h| (h.0.to_string(), h.3)).collect()
}

fn search_oracle() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = common::loaded_store(dir.path());
    let s = store.read().unwrap();
    let labels = effective_labels(&s, &BTreeMap::new());
    let docs: Vec<Doc> = s
        .data()
        .sentences
        .values()
        .map(|x| {
            let video = match x.parent.kind {
                ParentKind::Transcript => x.parent.id.clone(),
                ParentKind::Comment => s.comment(&x.parent.id).unwrap().video_id.clone(),
            };
            let mut tags = vec![s.video(&video).unwrap().channel_id.clone()];
            tags.extend(labels[&x.sentence_id].iter().cloned());
            (x.sentence_id.clone(), video, x.ordinal, x.parent.kind, x.text.clone(), tags)
        })
        .collect();
    ensure!(docs.len() >= 1000, "only {} sentences in the fixture corpus", docs.len());
    let index = build_index(&s, &BTreeMap::new());
    ensure!(index.doc_count() == docs.len(), "index holds {} of {} sentences", index.doc_count(), docs.len());

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let classes: Vec<&str> = Task::ALL.iter().flat_map(|t| t.classes().iter().copied()).collect();
    let (mut nonempty, mut total_hits) = (0, 0);
    for q in 0..100 {
        let source = &docs.choose(&mut rng).unwrap().4;
        let words: Vec<String> = tokenize(source).into_iter().filter(|t| t.is_content()).map(|t| t.text).collect();
        let k = rng.random_range(1..=3.min(words.len().max(1)));
        let mut query: Vec<String> = (0..k).filter_map(|_| words.choose(&mut rng).cloned()).collect();
        if rng.random_bool(0.05) {
            query.push("introuvable".into());
        }
        let filters = SearchFilters {
            channel: rng.random_bool(0.3).then(|| common::CHANNELS.choose(&mut rng).unwrap().to_string()),
            kind: rng.random_bool(0.3).then(|| if rng.random_bool(0.5) { ParentKind::Transcript } else { ParentKind::Comment }),
            class: rng.random_bool(0.3).then(|| classes.choose(&mut rng).unwrap().to_string()),
        };
        let terms = query_terms(&query.join(" "));
        if terms.is_empty() {
            continue;
        }
        let got: Vec<(String, f64)> =
            index.search(&terms, &filters).map_err(|e| e.to_string())?.into_iter().map(|h| (h.sentence_id, h.score)).collect();
        let want = naive_search(&docs, &terms, &filters);
        ensure!(got.len() == want.len(), "query {q} {terms:?}: {} hits vs {} from the scan", got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            ensure!(g.0 == w.0, "query {q} {terms:?}: order differs at {} vs {}", g.0, w.0);
            ensure!((g.1 - w.1).abs() <= 1e-9 * w.1.max(1.0), "query {q}: score {} vs {}", g.1, w.1);
        }
        nonempty += usize::from(!got.is_empty());
        total_hits += got.len();
    }
    ensure!(nonempty >= 50, "only {nonempty} queries matched anything");
    Ok(format!("{} sentences, 100 queries, {nonempty} with hits, {total_hits} hits compared", docs.len()))
}

fn pipeline_invariants() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = common::loaded_store(dir.path());

    let (mut transcripts, mut comments) = (0, 0);
    {
        let s = store.read().unwrap();
        let rebuilds = |kind: ParentKind, id: &str, text: &str| {
            let spans: Vec<SentenceSpan> = s
                .sentences_of(&ParentRef { kind, id: id.to_string() })
                .iter()
                .map(|x| SentenceSpan { start: x.span.0, end: x.span.1 })
                .collect();
            reconstructs(text, &spans)
        };
        for t in s.data().transcripts.values() {
            ensure!(rebuilds(ParentKind::Transcript, &t.video_id, &t.restored_text), "transcript {} does not rebuild", t.video_id);
            transcripts += 1;
        }
        for c in s.data().comments.values() {
            ensure!(rebuilds(ParentKind::Comment, &c.comment_id, &c.normalized_text), "comment {} does not rebuild", c.comment_id);
            comments += 1;
        }
    }

    let provider = common::provider();
    let second = sync_all(&store, &provider, &SyncLocks::default(), &common::options());
    ensure!(
        second.iter().all(|r| r.new_videos + r.new_comments + r.transcripts_fetched + r.transcripts_unavailable + r.errors.len() == 0),
        "second sync not all-zero: {second:?}"
    );

    let s = store.read().unwrap();
    let config = common::fixture_config();
    let (split_cfg, train_cfg) = config.training.configs(Some(7), None);
    let request = TrainRequest { task: Task::Controversy, split: split_cfg, train: train_cfg, dataset: models::DatasetSource::Annotations };
    let a = models::train(dir.path(), &s, &request).map_err(|e| e.to_string())?;
    let first = std::fs::read(&a.model_path).map_err(|e| e.to_string())?;
    let other = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = models::train(other.path(), &s, &request).map_err(|e| e.to_string())?;
    ensure!(std::fs::read(&b.model_path).map_err(|e| e.to_string())? == first, "retrained model file differs");
    ensure!(a.meta == b.meta, "model metadata differs");

    let export = dir.path().join("export");
    jsonl::export_dir(&s, &export).map_err(|e| e.to_string())?;
    let mut copy = Store::in_memory();
    jsonl::import_dir(&mut copy, &export).map_err(|e| e.to_string())?;
    ensure!(copy.stats() == s.stats(), "stats after JSONL round trip differ");
    Ok(format!(
        "{transcripts} transcripts and {comments} comments rebuild, second sync all-zero, model {} byte-identical, JSONL round trip equal",
        a.meta.model_id
    ))
}

// Checks one rendered summary row: name, three `xx.xx (yy.yy)` pairs, accuracy.
fn check_table_row(row: &str, rep: &EvalReport) -> Result<(), String> {
    let cells: Vec<&str> = row.split('|').map(str::trim).filter(|c| !c.is_empty()).collect();
    ensure!(cells.len() == 5, "row {row:?} has {} cells", cells.len());
    let pct = |s: &str| -> Result<f64, String> {
        let (int, frac) = s.split_once('.').ok_or(format!("`{s}` lacks decimals"))?;
        ensure!(frac.len() == 2 && !int.is_empty(), "`{s}` is not a two-decimal percentage");
        s.parse::<f64>().map_err(|e| e.to_string())
    };
    let expected = [
        (rep.macro_avg.precision, rep.weighted_avg.precision),
        (rep.macro_avg.recall, rep.weighted_avg.recall),
        (rep.macro_avg.f1, rep.weighted_avg.f1),
    ];
    for (cell, (m, w)) in cells[1..4].iter().zip(expected) {
        let (a, b) = cell.strip_suffix(')').and_then(|c| c.split_once(" (")).ok_or(format!("cell {cell:?}"))?;
        ensure!((pct(a)? - 100.0 * m).abs() <= 0.005 + 1e-9, "macro {a} vs {m}");
        ensure!((pct(b)? - 100.0 * w).abs() <= 0.005 + 1e-9, "weighted {b} vs {w}");
    }
    ensure!((pct(cells[4])? - 100.0 * rep.accuracy).abs() <= 0.005 + 1e-9, "accuracy {} vs {}", cells[4], rep.accuracy);
    Ok(())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    common::cli_pipeline(d);
    let stats: serde_json::Value = serde_json::from_str(&common::ok(d, &["stats"])).map_err(|e| e.to_string())?;
    let (channels, videos, comments) = (stats["channels"].as_u64(), stats["videos"].as_u64(), stats["comments"].as_u64());
    ensure!(channels >= Some(3) && videos >= Some(10) && comments >= Some(200), "corpus too small: {stats}");
    common::ok(d, &["index"]);

    let mut rows = Vec::new();
    for task in ["controversy", "info"] {
        let trained = common::ok(d, &["train", "--task", task, "--seed", "7"]);
        let model = trained.lines().next().and_then(|l| l.strip_prefix("model ")).ok_or("no model id printed")?.to_string();
        let text = common::ok(d, &["eval", "--model", &model]);
        let json = common::ok(d, &["eval", "--model", &model, "--json"]);
        let rep: EvalReport = serde_json::from_str(&json).map_err(|e| format!("eval --json: {e}"))?;
        ensure!(rep.task.map(Task::as_str) == Some(task), "report task {:?}", rep.task);
        ensure!(rep.total > 0 && rep.per_class.len() == rep.confusion.classes.len(), "malformed report");
        ensure!(rep.weighted_avg.recall == rep.accuracy, "weighted recall differs from accuracy");
        let all = [rep.macro_avg.precision, rep.macro_avg.recall, rep.macro_avg.f1, rep.weighted_avg.precision, rep.weighted_avg.f1, rep.accuracy];
        ensure!(all.iter().all(|x| (0.0..=1.0).contains(x)), "metric outside [0, 1]");

        let lines: Vec<&str> = text.lines().collect();
        ensure!(lines.iter().any(|l| ["Precision", "Recall", "F1", "Accuracy"].iter().all(|h| l.contains(h))), "no header row");
        ensure!(lines.iter().any(|l| l.contains("macro (weighted)")), "no macro (weighted) header");
        let row = lines.iter().find(|l| l.starts_with('|') && l.contains(&format!(" {task} "))).ok_or("no summary row")?;
        check_table_row(row, &rep)?;
        rows.push(row.to_string());
    }
    Ok(format!("init, channel add, sync, import, process, index, train, eval all exit 0; rows {}", rows.join(" ")))
}
