//! Acceptance runner: one PASS/FAIL line per criterion, tolerances pinned
//! below. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use codeclass::classifier::{
    compute_gradients, forward, load_model, predict_topk, rank_probabilities, save_model, softmax, train_mlp,
    MlpHyperparams,
};
use codeclass::corpus::{generate_corpus, CorpusSpec};
use codeclass::embedding::{cosine_similarity, EmbeddingVector, HashedNgramProvider};
use codeclass::pscode::{predict_ps_codes, PsIndex};
use codeclass::weaklabel::{build_labeled_dataset, LabeledDataset, LabeledExample, Provenance, WeakLabelConfig};
use common::{
    brute_force_ranking, finite_difference_check, labels, random_instance, random_unit, seeded, to_f32_batch,
    weak_fixture, Param,
};
use rand::Rng;

const COSINE_TOL: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-4;
const SOFTMAX_TOL: f64 = 1e-6;
const E2E_MIN_TOP3: f64 = 0.95;
const E2E_MIN_TOP2_PS: f64 = 0.90;
const GOLDEN_TOP3: f64 = 1.0;
const GOLDEN_TOP2_PS: f64 = 1.0;
const GOLDEN_TOL: f64 = 0.005;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cosine_algebra() -> Check {
    let mut rng = seeded(101);
    let vs: Vec<EmbeddingVector> = (0..1000)
        .map(|_| {
            let dim = 16;
            EmbeddingVector::new((0..dim).map(|_| rng.random_range(-10.0f32..10.0)).collect())
        })
        .collect();
    let zero = EmbeddingVector::zeros(16);
    for (i, a) in vs.iter().enumerate() {
        let s = cosine_similarity(a, a).unwrap();
        ensure((s - 1.0).abs() <= COSINE_TOL, || format!("self-similarity {s}"))?;
        let b = &vs[(i * 7 + 3) % vs.len()];
        let (ab, ba) = (cosine_similarity(a, b).unwrap(), cosine_similarity(b, a).unwrap());
        ensure(ab.to_bits() == ba.to_bits(), || format!("asymmetric {ab} vs {ba}"))?;
        let c = rng.random_range(0.01f32..100.0);
        let scaled = cosine_similarity(&a.scaled(c), b).unwrap();
        ensure((scaled - ab).abs() <= COSINE_TOL, || {
            format!("scale {c}: {scaled} vs {ab}")
        })?;
        ensure(cosine_similarity(a, &zero).unwrap() == 0.0, || "zero vector".into())?;
    }
    Ok(format!("1000 vectors, tol {COSINE_TOL:e}"))
}

fn gradient_check() -> Check {
    let mut rng = seeded(102);
    let (mut worst, mut checked, mut kinks) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let (model, batch, l2) = random_instance(&mut rng);
        let (_, g) = compute_gradients(&model, &to_f32_batch(&batch), l2).map_err(|e| e.to_string())?;
        let s = finite_difference_check(&model, &batch, l2, |p| match p {
            Param::Weight(l, i) => g.layers[l].weights[i],
            Param::Bias(l, i) => g.layers[l].bias[i],
        });
        worst = worst.max(s.max_rel_err);
        checked += s.checked;
        kinks += s.skipped_kinks;
    }
    ensure(worst <= GRAD_REL_TOL, || format!("max rel err {worst:e}"))?;
    Ok(format!(
        "100 instances, {checked} params, {kinks} kink skips, max rel err {worst:.2e} <= {GRAD_REL_TOL:e}"
    ))
}

fn softmax_shape() -> Check {
    let mut rng = seeded(103);
    for _ in 0..2000 {
        let n = rng.random_range(1..40);
        let scale = [1.0, 100.0, 1e4][rng.random_range(0..3)];
        // coarse rounding creates exact ties
        let logits: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0) * scale * 4.0f64).round() / 4.0)
            .collect();
        let p = softmax(&logits);
        let sum: f64 = p.iter().sum();
        ensure((sum - 1.0).abs() <= SOFTMAX_TOL, || format!("sum {sum}"))?;
        ensure(p.iter().all(|x| x.is_finite() && *x >= 0.0), || {
            "non-finite prob".into()
        })?;
        let names = labels(n);
        let k = rng.random_range(1..n + 3);
        let top = rank_probabilities(&names, &p, k);
        ensure(top.len() == k.min(n), || format!("len {} for k {k} n {n}", top.len()))?;
        for w in top.ranked.windows(2) {
            ensure(
                w[0].prob > w[1].prob || (w[0].prob == w[1].prob && w[0].id < w[1].id),
                || format!("order {:?}", w),
            )?;
        }
        // nothing left out beats the last kept entry
        if let Some(last) = top.ranked.last() {
            for (name, &q) in names.iter().zip(&p) {
                if !top.ranked.iter().any(|r| &r.id == name) {
                    ensure(q < last.prob || (q == last.prob && name > &last.id), || {
                        format!("{name} omitted")
                    })?;
                }
            }
        }
    }
    // predicted top-k is a prefix of the full ranking
    for _ in 0..200 {
        let (model, batch, _) = random_instance(&mut rng);
        let x = &to_f32_batch(&batch)[0].0;
        let full = predict_topk(&model, x, model.n_classes()).unwrap();
        let k = rng.random_range(1..=model.n_classes());
        ensure(
            predict_topk(&model, x, k).unwrap().ranked[..] == full.ranked[..k],
            || "prefix".into(),
        )?;
    }
    Ok(format!("2000 logit vectors + 200 models, tol {SOFTMAX_TOL:e}"))
}

fn oracle_equivalence() -> Check {
    let mut rng = seeded(104);
    for c in 0..500 {
        let n = rng.random_range(1..=15);
        let dim = rng.random_range(2..8);
        let mut codes: Vec<(String, EmbeddingVector)> = Vec::new();
        for j in 0..n {
            let v = if j > 0 && rng.random_bool(0.2) {
                codes[rng.random_range(0..j)].1.clone()
            } else {
                random_unit(&mut rng, dim)
            };
            codes.push((format!("PS_{:02}", (j * 11) % 17), v));
        }
        let company = if rng.random_bool(0.05) {
            EmbeddingVector::zeros(dim)
        } else {
            random_unit(&mut rng, dim)
        };
        let index = PsIndex::new(BTreeMap::from([("IND".to_string(), codes.clone())]), "fp");
        let want = brute_force_ranking(company.values(), &codes);
        for top_n in [1, 2, n] {
            let got = predict_ps_codes(&company, "IND", &index, top_n).map_err(|e| e.to_string())?;
            ensure(got.ranked.len() == top_n.min(n), || format!("company {c}: length"))?;
            for (g, w) in got.ranked.iter().zip(&want) {
                ensure(g.id == w.0 && (g.score - w.1).abs() < 1e-12, || {
                    format!("company {c}: {} {} vs {} {}", g.id, g.score, w.0, w.1)
                })?;
            }
        }
    }
    Ok("500 companies, N<=15".into())
}

fn weak_labeling() -> Check {
    let f = weak_fixture();
    let cfg = |thresh| WeakLabelConfig {
        thresh,
        ..Default::default()
    };
    let ds = build_labeled_dataset(&f.companies, &f.mapping, &f.taxonomy, &f.provider, &cfg(0.5))
        .map_err(|e| e.to_string())?;
    let counts = (ds.report.mapped, ds.report.similarity, ds.report.dropped);
    ensure(counts == (3, 2, 1), || format!("counts {counts:?}"))?;
    let mut prev = usize::MAX;
    for t in 1..=9 {
        let ds = build_labeled_dataset(
            &f.companies,
            &f.mapping,
            &f.taxonomy,
            &f.provider,
            &cfg(t as f64 / 10.0),
        );
        let sim = ds.map(|d| d.report.similarity).unwrap_or(0);
        ensure(sim <= prev, || format!("similarity count rose at {t}"))?;
        prev = sim;
    }
    // and on a noisy generated corpus, where counts actually move
    let corpus = generate_corpus(&CorpusSpec {
        n_companies: 400,
        noise: 0.4,
        mapped_fraction: 0.5,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let provider = HashedNgramProvider::new(256, 3);
    let mut prev = usize::MAX;
    let mut seen = Vec::new();
    for t in 1..=9 {
        let r = build_labeled_dataset(
            &corpus.companies,
            &corpus.mapping,
            &corpus.industries,
            &provider,
            &cfg(t as f64 / 10.0),
        )
        .map(|d| d.report.similarity)
        .unwrap_or(0);
        ensure(r <= prev, || format!("generated corpus: similarity count rose at {t}"))?;
        prev = r;
        seen.push(r);
    }
    Ok(format!(
        "mapping 3 / similarity 2 / dropped 1; monotone over 0.1..0.9 (generated: {seen:?})"
    ))
}

fn cli(args: &[&str]) -> Result<(), String> {
    match codeclass::cli::run(std::iter::once("codeclass").chain(args.iter().copied())) {
        0 => Ok(()),
        code => Err(format!("{} exited {code}", args[0])),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// gen-corpus → build-dataset → train → predict → evaluate under `root`.
fn pipeline(root: &Path) -> Result<serde_json::Value, String> {
    let (corpus, ds) = (root.join("corpus"), root.join("ds"));
    let (model, preds, report) = (
        root.join("model.json"),
        root.join("pred.jsonl"),
        root.join("report.json"),
    );
    cli(&[
        "--seed",
        "7",
        "gen-corpus",
        "--out-dir",
        s(&corpus),
        "--n-industries",
        "12",
        "--ps-min",
        "8",
        "--ps-max",
        "15",
        "--n-companies",
        "2000",
        "--noise",
        "0",
    ])?;
    let (ind, prod) = (corpus.join("industries.csv"), corpus.join("products.csv"));
    let (map, comp) = (corpus.join("mapping.csv"), corpus.join("companies.jsonl"));
    cli(&[
        "--seed",
        "7",
        "--provider",
        "hashed",
        "build-dataset",
        "--industries",
        s(&ind),
        "--mapping",
        s(&map),
        "--companies",
        s(&comp),
        "--out-dir",
        s(&ds),
    ])?;
    cli(&[
        "--seed",
        "7",
        "train",
        "--train",
        s(&ds.join("train.jsonl")),
        "--model",
        s(&model),
    ])?;
    let gold = ds.join("test_companies.jsonl");
    cli(&[
        "--seed",
        "7",
        "predict",
        "--model",
        s(&model),
        "--industries",
        s(&ind),
        "--products",
        s(&prod),
        "--companies",
        s(&gold),
        "--out",
        s(&preds),
    ])?;
    cli(&[
        "evaluate",
        "--predictions",
        s(&preds),
        "--gold",
        s(&gold),
        "--report",
        s(&report),
    ])?;
    let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

const ARTIFACTS: [&str; 9] = [
    "corpus/industries.csv",
    "corpus/products.csv",
    "corpus/mapping.csv",
    "corpus/companies.jsonl",
    "ds/dataset.jsonl",
    "ds/train.jsonl",
    "ds/test.jsonl",
    "model.json",
    "pred.jsonl",
];

fn e2e(root: &Path) -> Check {
    let report = pipeline(root)?;
    let top3 = report["top3_industry_accuracy"].as_f64().ok_or("missing top-3")?;
    let top2 = report["top2_ps_accuracy"].as_f64().ok_or("missing top-2 ps")?;
    let msg = format!(
        "top-3 {top3:.4} (>= {E2E_MIN_TOP3}, golden {GOLDEN_TOP3}±{GOLDEN_TOL}), top-2 ps {top2:.4} (>= {E2E_MIN_TOP2_PS}, golden {GOLDEN_TOP2_PS}±{GOLDEN_TOL})"
    );
    let ok = top3 >= E2E_MIN_TOP3
        && top2 >= E2E_MIN_TOP2_PS
        && (top3 - GOLDEN_TOP3).abs() <= GOLDEN_TOL
        && (top2 - GOLDEN_TOP2_PS).abs() <= GOLDEN_TOL;
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism(first: &Path) -> Check {
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(second.path())?;
    for rel in ARTIFACTS {
        let a = std::fs::read(first.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let b = std::fs::read(second.path().join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        ensure(a == b, || format!("{rel} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical", ARTIFACTS.len()))
}

fn serialization() -> Check {
    let mut rng = seeded(108);
    let dim = 12;
    let names = labels(4);
    let examples = (0..200)
        .map(|i| LabeledExample {
            company_id: format!("c{i:03}"),
            label: names[i % 4].clone(),
            provenance: Provenance::Mapping,
            embedding: random_unit(&mut rng, dim),
        })
        .collect();
    let data = LabeledDataset::from_examples(examples, 0);
    let hp = MlpHyperparams {
        hidden_dims: vec![16, 8],
        epochs: 5,
        seed: 108,
        early_stop_patience: 0,
        ..Default::default()
    };
    let empty = LabeledDataset::from_examples(Vec::new(), 0);
    let (model, _) = train_mlp(&data, &empty, &hp, "fp").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("m.json");
    save_model(&model, &path).map_err(|e| e.to_string())?;
    let back = load_model(&path).map_err(|e| e.to_string())?;
    for i in 0..100 {
        let x = random_unit(&mut rng, dim);
        let (a, b) = (forward(&model, &x).unwrap(), forward(&back, &x).unwrap());
        ensure(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()), || {
            format!("input {i} differs")
        })?;
        ensure(
            predict_topk(&model, &x, 3).unwrap() == predict_topk(&back, &x, 3).unwrap(),
            || "top-k".into(),
        )?;
    }
    Ok("100 inputs bit-identical after save/load".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, limit: Duration, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if took <= limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took longer than {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} {name} [{:.2}s / limit {}s] {detail}",
            took.as_secs_f64(),
            limit.as_secs()
        );
    };
    report("cosine-algebra", Duration::from_secs(1), &mut cosine_algebra);
    report("gradient-check", Duration::from_secs(30), &mut gradient_check);
    report("softmax-shape", Duration::from_secs(10), &mut softmax_shape);
    report(
        "ps-oracle-equivalence",
        Duration::from_secs(10),
        &mut oracle_equivalence,
    );
    report("weak-labeling-fixture", Duration::from_secs(5), &mut weak_labeling);
    let first = tempfile::tempdir().expect("tempdir");
    report("end-to-end", Duration::from_secs(300), &mut || e2e(first.path()));
    report("determinism", Duration::from_secs(300), &mut || {
        determinism(first.path())
    });
    report("serialization", Duration::from_secs(10), &mut serialization);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
