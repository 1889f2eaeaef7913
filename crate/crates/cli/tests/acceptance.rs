//! Acceptance gate: one line per criterion, then a single verdict.
//!
//! Run with `cargo test -p structeval-cli --test acceptance -- --nocapture`
//! to see the report.

mod oracles;

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structeval::corpusio::{generate_fixtures, read_corpus_file, CorruptionKind, FixtureSpec};
use structeval::docmetrics::{
    node_chrf, optimal_node_chrf, strucauc, strucauc_from_inputs, xml_match, AucInput, CorpusEvaluation, Metric,
};
use structeval::grposim::{objective, objective_gradient, run_training, CandidatePool, TrainConfig};
use structeval::nodealign::{hungarian, optimal_alignment};
use structeval::rewards::{group_advantages, score_reward, RewardSpec};
use structeval::stats::{paired_bootstrap, paired_bootstrap_means, BootstrapConfig};
use structeval::textmetrics::{chrf, corpus_bleu, BleuConfig, ChrfConfig};
use structeval::treedist::{tree_edit_distance, tree_sim, EditCostScheme};
use structeval::xmltree::{parse_document, DocTree};
use structeval::EvalConfig;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tree(text: &str) -> DocTree {
    parse_document(text).into_tree().unwrap_or_else(|| panic!("fixture must parse: {text}"))
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn edit_distance_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let alphabet = ["a", "b", "c"];
    let mut mismatches = 0;
    for _ in 0..500 {
        let na = rng.random_range(0..=6);
        let nb = rng.random_range(0..=6);
        let a = tree(&oracles::random_tree_text(&mut rng, na, &alphabet));
        let b = tree(&oracles::random_tree_text(&mut rng, nb, &alphabet));
        if tree_edit_distance(&a, &b, &EditCostScheme::default()) != oracles::brute_force_ted(&a, &b) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("500 pairs, {mismatches} mismatches, {}", secs(elapsed)),
    )
}

fn assignment_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..500 {
        let rows = rng.random_range(1..=6);
        let cols = rng.random_range(1..=6);
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| f64::from(rng.random_range(0..50u32))).collect())
            .collect();
        let got = hungarian(&cost).expect("finite matrix");
        let pairs_cost: f64 = got.pairs.iter().map(|&(r, c)| cost[r][c]).sum();
        if got.total_cost != oracles::brute_force_assignment(&cost)
            || pairs_cost != got.total_cost
            || got.pairs.len() != rows.min(cols)
        {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!("500 integer matrices up to 6x6, {mismatches} mismatches, {}", secs(elapsed)),
    )
}

fn treesim_contract() -> Outcome {
    let doc = "<topic><title>T</title><body><p>x</p></body></topic>";
    let identical = tree_sim(doc, doc).unwrap();
    let broken = tree_sim("<topic><title>T</topic>", doc).unwrap();
    let relabel = tree_sim("<a><c/></a>", "<a><b/></a>").unwrap();
    outcome(
        identical == 1.0 && broken == -0.1 && (relabel - 0.5).abs() <= 1e-12,
        format!("identical {identical}, unparseable {broken}, one relabel of two {relabel}"),
    )
}

struct AucCheck {
    hand_value: f64,
    hand_oracle: f64,
    monotone_violations: usize,
    all_invalid: f64,
}

/// Trapezoid over the listed curve points, written out independently.
fn hand_trapezoid(points: &[(f64, f64)], k: f64) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) / k * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

fn strucauc_checks() -> AucCheck {
    let (hand_value, _) = strucauc_from_inputs(
        &[AucInput::Scored {
            unaligned: 40.0,
            optimal: 80.0,
            edits: 2.0,
        }],
        5.0,
    )
    .unwrap();
    let points: Vec<(f64, f64)> = (0..=10)
        .map(|i| {
            let k = i as f64 * 0.5;
            (k, if k >= 2.0 { 80.0 } else { 40.0 })
        })
        .collect();
    let hand_oracle = hand_trapezoid(&points, 5.0);

    let spec = FixtureSpec {
        doc_count: 12,
        ..FixtureSpec::default()
    }
    .with_corruption(CorruptionKind::DropNode, 0.5, 2)
    .with_corruption(CorruptionKind::RelabelTag, 0.5, 3)
    .with_corruption(CorruptionKind::SwapSiblings, 0.3, 1)
    .with_corruption(CorruptionKind::PerturbText, 0.5, 2)
    .with_corruption(CorruptionKind::BreakWellformedness, 0.1, 1);
    let mut monotone_violations = 0;
    for seed in 0..100 {
        let corpus: Vec<(String, String)> = generate_fixtures(&spec, seed)
            .unwrap()
            .into_iter()
            .map(|f| (f.record.hypothesis, f.record.reference))
            .collect();
        let mut eval = CorpusEvaluation::new(&corpus, &[Metric::StrucAuc], &EvalConfig::default()).unwrap();
        let all: Vec<usize> = (0..eval.len()).collect();
        let mut prev = f64::NEG_INFINITY;
        for step in 1..=20 {
            eval.config.strucauc_k = step as f64 * 0.5;
            let v = eval.aggregate(&all).unwrap().get(Metric::StrucAuc).unwrap();
            if v < prev - 1e-9 {
                monotone_violations += 1;
            }
            prev = v;
        }
    }

    let invalid = vec![("<p>open".to_string(), "<p>x</p>".to_string()), ("a &nope; b".into(), "<q/>".into())];
    let (all_invalid, _) = strucauc(&invalid, 5.0).unwrap();
    AucCheck {
        hand_value,
        hand_oracle,
        monotone_violations,
        all_invalid,
    }
}

fn strucauc_curve(c: &AucCheck) -> Outcome {
    let literal = (c.hand_value - 63.0).abs() <= 1e-9;
    outcome(
        literal && c.monotone_violations == 0 && c.all_invalid == 0.0,
        format!(
            "hand case {:.9} (required 63 +- 1e-9; trapezoid over the 11 listed curve points is {:.9}), \
             {} monotonicity violations over 100 corpora x 20 K values, all-invalid corpus {}",
            c.hand_value, c.hand_oracle, c.monotone_violations, c.all_invalid
        ),
    )
}

fn optimality_dominance() -> Outcome {
    let spec = FixtureSpec {
        doc_count: 400,
        ..FixtureSpec::default()
    }
    .with_corruption(CorruptionKind::SwapSiblings, 1.0, 1);
    let mut checked = 0;
    let mut failures = 0;
    for f in generate_fixtures(&spec, 5).unwrap() {
        if f.count(CorruptionKind::SwapSiblings) == 0 {
            continue;
        }
        let h = tree(&f.record.hypothesis);
        let r = tree(&f.record.reference);
        let unaligned = node_chrf(&h, &r);
        let optimal = optimal_node_chrf(&optimal_alignment(&h, &r), &h, &r);
        let moved_content = h.text_segments() != r.text_segments();
        let ok = optimal >= unaligned && (!moved_content || optimal > unaligned);
        if !ok {
            failures += 1;
        }
        checked += 1;
        if checked == 200 {
            break;
        }
    }
    outcome(
        checked == 200 && failures == 0,
        format!("{checked} sibling-swap fixtures, {failures} violations"),
    )
}

fn text_metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let cfg = ChrfConfig::default();
    for _ in 0..100 {
        let h = oracles::random_sentence(&mut rng, 8);
        let r = oracles::random_sentence(&mut rng, 8);
        worst = worst.max((chrf(&h, &r, &cfg) - oracles::oracle_chrf(&h, &r)).abs());

        let n = rng.random_range(1..=4);
        let corpus: Vec<(String, String)> = (0..n)
            .map(|_| (oracles::random_sentence(&mut rng, 8), oracles::random_sentence(&mut rng, 8)))
            .collect();
        let got = corpus_bleu(&corpus, &BleuConfig::default()).unwrap();
        worst = worst.max((got - oracles::oracle_corpus_bleu(&corpus)).abs());
    }
    outcome(worst <= 1e-9, format!("100 chrF + 100 corpus BLEU fixtures, max deviation {worst:.2e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let reference: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let k = rng.random_range(2..=8);
        let samples: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let rewards: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..10.0)).collect();
        let adv = group_advantages(&rewards).unwrap();
        let beta = rng.random_range(0.0..2.0);
        let analytic = objective_gradient(&logits, &reference, &samples, &adv, beta);
        let numeric: Vec<f64> = (0..n)
            .map(|j| {
                let mut up = logits.clone();
                let mut down = logits.clone();
                up[j] += h;
                down[j] -= h;
                (objective(&up, &reference, &samples, &adv, beta) - objective(&down, &reference, &samples, &adv, beta))
                    / (2.0 * h)
            })
            .collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
        worst = worst.max(diff / scale);
    }
    outcome(worst <= 1e-6, format!("50 fixtures, worst relative error {worst:.2e}"))
}

fn grpo_learning() -> Outcome {
    let start = Instant::now();
    let pool = CandidatePool::from_rewards(vec![0.0, 10.0]).unwrap();
    let mut p_best = 0.0;
    let mut worst_kl: f64 = 0.0;
    for seed in 0..20 {
        let cfg = TrainConfig {
            beta: 0.0,
            learning_rate: 0.1,
            steps: 200,
            seed,
            ..TrainConfig::default()
        };
        p_best += run_training(&pool, &cfg).unwrap().final_policy.probabilities()[1] / 20.0;
        let anchored = TrainConfig { beta: 10.0, ..cfg };
        worst_kl = worst_kl.max(run_training(&pool, &anchored).unwrap().final_policy.kl());
    }
    let elapsed = start.elapsed();
    outcome(
        p_best > 0.9 && worst_kl < 0.05 && elapsed < Duration::from_secs(10),
        format!(
            "mean P(best) {p_best:.4} at beta 0, max final KL {worst_kl:.2e} at beta 10, {}",
            secs(elapsed)
        ),
    )
}

fn advantage_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=16);
        let rewards: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..10.0)).collect();
        let adv = group_advantages(&rewards).unwrap();
        let sum: f64 = adv.iter().sum();
        let sd = (adv.iter().map(|a| a * a).sum::<f64>() / k as f64).sqrt();
        let a = rng.random_range(0.01..100.0);
        let b = rng.random_range(-50.0..50.0);
        let moved: Vec<f64> = rewards.iter().map(|r| a * r + b).collect();
        let adv2 = group_advantages(&moved).unwrap();
        let affine = adv.iter().zip(&adv2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(sum.abs()).max((sd - 1.0).abs()).max(affine);
    }
    outcome(worst <= 1e-9, format!("1000 groups, worst deviation {worst:.2e}"))
}

fn bootstrap_contract() -> Outcome {
    let cfg = BootstrapConfig::default();
    let base: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
    let better: Vec<f64> = base.iter().map(|x| x + 0.25).collect();
    let dominant = paired_bootstrap_means(&base, &better, &cfg).unwrap();
    let identical = paired_bootstrap_means(&base, &base, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let noisy: Vec<f64> = base.iter().map(|x| x + rng.random_range(-1.0..1.2)).collect();
    let run = || paired_bootstrap(30, |idx| idx.iter().map(|&i| base[i]).sum(), |idx| idx.iter().map(|&i| noisy[i]).sum(), &cfg).unwrap();
    let (first, second) = (run(), run());
    outcome(
        dominant == 1.0 / 1001.0 && identical >= 0.5 && first == second,
        format!("dominant p {dominant}, identical p {identical}, reruns {first} / {second}"),
    )
}

fn fixture_ground_truth() -> Outcome {
    let mut problems = Vec::new();
    let base = FixtureSpec {
        doc_count: 60,
        ..FixtureSpec::default()
    };
    for k in 1..=4 {
        let spec = base.clone().with_corruption(CorruptionKind::RelabelTag, 1.0, k);
        for f in generate_fixtures(&spec, 100 + k as u64).unwrap() {
            let h = tree(&f.record.hypothesis);
            let r = tree(&f.record.reference);
            let expected = 0.5 * f.count(CorruptionKind::RelabelTag) as f64;
            let got = optimal_alignment(&h, &r).edit_count;
            if got != expected {
                problems.push(format!("{} relabels={} edit_count={got}", f.record.id, expected * 2.0));
            }
        }
    }

    let structural = [
        (CorruptionKind::DropNode, 3),
        (CorruptionKind::RelabelTag, 3),
        (CorruptionKind::SwapSiblings, 1),
        (CorruptionKind::BreakWellformedness, 1),
    ];
    let mut specs: Vec<FixtureSpec> = structural
        .iter()
        .map(|&(kind, count)| base.clone().with_corruption(kind, 0.7, count))
        .collect();
    specs.push(
        base.clone()
            .with_corruption(CorruptionKind::DropNode, 0.5, 2)
            .with_corruption(CorruptionKind::RelabelTag, 0.5, 2)
            .with_corruption(CorruptionKind::SwapSiblings, 0.5, 1)
            .with_corruption(CorruptionKind::BreakWellformedness, 0.2, 1),
    );
    let (mut clean, mut corrupted) = (0, 0);
    for (i, spec) in specs.iter().enumerate() {
        for f in generate_fixtures(spec, 200 + i as u64).unwrap() {
            let r = tree(&f.record.reference);
            let m = xml_match(&parse_document(&f.record.hypothesis), &r, true);
            let expected = u8::from(f.corruptions.is_empty());
            if f.corruptions.is_empty() {
                clean += 1;
            } else {
                corrupted += 1;
            }
            if m != expected {
                problems.push(format!("{} corruptions={:?} xml_match={m}", f.record.id, f.corruptions));
            }
        }
    }
    let first = problems.first().cloned().unwrap_or_default();
    outcome(
        problems.is_empty(),
        format!(
            "relabel k=1..4 over 240 docs; xml_match over {clean} clean and {corrupted} corrupted docs; {} problems {first}",
            problems.len()
        ),
    )
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_structeval"))
}

fn end_to_end() -> Outcome {
    let golden = std::fs::read(format!("{FIXTURES}/golden_report.json")).expect("golden report present");
    let out = binary()
        .args(["eval", "--corpus", &format!("{FIXTURES}/golden_corpus.jsonl"), "--format", "json"])
        .output()
        .expect("binary runs");
    let eval_ok = out.status.success() && out.stdout == golden;

    let records = read_corpus_file(format!("{FIXTURES}/golden_corpus.jsonl")).unwrap();
    let specs = ["treesim", "treesim+node_chrf", "xml_validity,xml_match,content_bleu", "optimal_node_chrf+xml_bleu"];
    let mut requests = Vec::new();
    let mut expected = Vec::new();
    for i in 0..1000 {
        let rec = &records[i % records.len()];
        let spec = specs[i % specs.len()];
        let names: Vec<&str> = spec.split(['+', ',']).collect();
        requests.push(
            serde_json::json!({"id": i, "hypothesis": rec.hypothesis, "reference": rec.reference, "rewards": names})
                .to_string(),
        );
        let parsed: RewardSpec = spec.parse().unwrap();
        expected.push(score_reward(&rec.hypothesis, &rec.reference, &parsed).ok().map(|s| s.total));
    }
    let mut child = binary()
        .arg("serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("serve starts");
    let mut stdin = child.stdin.take().unwrap();
    let writer = std::thread::spawn(move || {
        for r in &requests {
            writeln!(stdin, "{r}").unwrap();
        }
    });
    let reader = BufReader::new(child.stdout.take().unwrap());
    let mut wrong = 0;
    let mut count = 0;
    for (i, line) in reader.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(&line.unwrap()).unwrap();
        let ok = v["id"] == i
            && match expected[i] {
                Some(t) => v["total"].as_f64().is_some_and(|got| (got - t).abs() <= 1e-9),
                None => v.get("error").is_some(),
            };
        if !ok {
            wrong += 1;
        }
        count += 1;
    }
    writer.join().unwrap();
    let status = child.wait().unwrap();
    outcome(
        eval_ok && count == 1000 && wrong == 0 && status.success(),
        format!(
            "golden report {}, serve answered {count}/1000 with {wrong} wrong or out of order",
            if eval_ok { "identical" } else { "differs" }
        ),
    )
}

#[test]
fn acceptance() {
    let auc = strucauc_checks();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "edit-distance oracle", Box::new(edit_distance_oracle)),
        (2, "assignment oracle", Box::new(assignment_oracle)),
        (3, "treesim contract", Box::new(treesim_contract)),
        (4, "strucauc curve", Box::new(|| strucauc_curve(&auc))),
        (5, "optimality dominance", Box::new(optimality_dominance)),
        (6, "chrF/BLEU oracles", Box::new(text_metric_oracles)),
        (7, "GRPO gradient check", Box::new(gradient_check)),
        (8, "GRPO learning", Box::new(grpo_learning)),
        (9, "advantage contract", Box::new(advantage_contract)),
        (10, "bootstrap", Box::new(bootstrap_contract)),
        (11, "fixture ground truth", Box::new(fixture_ground_truth)),
        (12, "end-to-end determinism", Box::new(end_to_end)),
    ];
    let mut results = Vec::new();
    for (n, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        println!(
            "{} criterion {n:>2} {name}: {} [{}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(start.elapsed())
        );
        results.push((n, o));
    }

    // Criterion 4 asks for 63 on the single-document case, but the
    // trapezoid over its own listed curve is 66. It stays red; the value is
    // pinned to the independent trapezoid and the other parts must hold.
    assert!((auc.hand_value - auc.hand_oracle).abs() <= 1e-9, "hand case {}", auc.hand_value);
    assert!((auc.hand_oracle - 66.0).abs() <= 1e-9);
    assert_eq!(auc.monotone_violations, 0);
    assert_eq!(auc.all_invalid, 0.0);

    let unexpected: Vec<usize> = results.iter().filter(|(n, o)| !o.pass && *n != 4).map(|(n, _)| *n).collect();
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}

