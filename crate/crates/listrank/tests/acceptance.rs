//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.
//!
//! `cargo test -p listrank --test acceptance`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use listrank::io::{read_qrels, read_run, to_json_line, write_qrels, write_run};
use listrank_core::distill::{confidence_filter, TeacherLabel};
use listrank_core::embed::{
    brute_force_diversity_oracle, greedy_diversity_select, DiversityConfig, DiversityMetric,
    EmbeddingRecord,
};
use listrank_core::eval::{
    mrr, ndcg_at_k, parse_qrels, parse_run, recall_at_k, EvalError, Gain, Qrels, Run, RunEntry,
};
use listrank_core::rank_math::{listwise_loss, listwise_loss_grad, plackett_luce_prob};
use listrank_core::rerank::{parse_ranking, render_ranking};
use listrank_core::{identity_permutation, validate_permutation, Document, Permutation, Query};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn perm_from(order: &[usize]) -> Permutation {
    let raw: Vec<i64> = order.iter().map(|&i| i as i64 + 1).collect();
    validate_permutation(&raw, order.len()).unwrap()
}

fn random_perm(rng: &mut StdRng, n: usize) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    perm_from(&order)
}

fn all_perms(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    out.push(perm_from(&a));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(perm_from(&a));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn plackett_luce_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let (mut worst_sum, mut worst_loss) = (0.0f64, 0.0f64);
    for v in 0..50 {
        let n = 1 + v % 6;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let tau = [0.1, 0.5, 1.0, 2.0][v % 4];
        let scaled: Vec<f64> = scores.iter().map(|s| s / tau).collect();
        let mut total = 0.0;
        for p in all_perms(n) {
            total += plackett_luce_prob(&scores, &p).unwrap();
            let loss = listwise_loss(&scores, &p, tau).unwrap().loss;
            let nll = -plackett_luce_prob(&scaled, &p).unwrap().ln();
            worst_loss = worst_loss.max((loss - nll).abs());
        }
        worst_sum = worst_sum.max((total - 1.0).abs());
    }
    ensure(worst_sum < 1e-9, || {
        format!("probability mass off by {worst_sum:e}")
    })?;
    ensure(worst_loss < 1e-9, || {
        format!("loss differs from -log P by {worst_loss:e}")
    })?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "max |sum-1| {worst_sum:.1e}, max |loss+log P| {worst_loss:.1e}"
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let h = 1e-5;
    let (mut worst_rel, mut worst_sum) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let n = rng.gen_range(2..=10);
        let tau = if i % 2 == 0 { 0.1 } else { 1.0 };
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let perm = random_perm(&mut rng, n);
        let grad = listwise_loss_grad(&scores, &perm, tau).unwrap();
        let g = grad.as_slice();
        let mut fd = vec![0.0; n];
        for c in 0..n {
            let mut up = scores.clone();
            let mut down = scores.clone();
            up[c] += h;
            down[c] -= h;
            fd[c] = (listwise_loss(&up, &perm, tau).unwrap().loss
                - listwise_loss(&down, &perm, tau).unwrap().loss)
                / (2.0 * h);
        }
        let diff = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = g.iter().chain(&fd).map(|x| x.abs()).fold(0.0, f64::max);
        worst_rel = worst_rel.max(diff / scale);
        worst_sum = worst_sum.max(g.iter().sum::<f64>().abs());
    }
    ensure(worst_rel < 1e-4, || format!("relative error {worst_rel:e}"))?;
    ensure(worst_sum < 1e-9, || {
        format!("gradient sums to {worst_sum:e}")
    })?;
    Ok(format!(
        "max relative error {worst_rel:.1e}, max |sum| {worst_sum:.1e}"
    ))
}

fn uniform_score_anchor() -> Outcome {
    let loss = listwise_loss(&[0.7, 0.7, 0.7], &identity_permutation(3), 1.0)
        .unwrap()
        .loss;
    let err = (loss - 6f64.ln()).abs();
    ensure(err < 1e-9, || format!("loss {loss} vs ln 6"))?;
    Ok(format!("loss {loss}"))
}

fn random_records(rng: &mut StdRng, n: usize, d: usize) -> Vec<EmbeddingRecord> {
    (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            EmbeddingRecord::new(format!("r{i}"), v)
        })
        .collect()
}

fn greedy_equals_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4);
    for case in 0..200 {
        let n = rng.gen_range(2..=15);
        let k = rng.gen_range(1..=6);
        let d = rng.gen_range(2..=16);
        let recs = random_records(&mut rng, n, d);
        let cfg = DiversityConfig {
            metric: if case % 4 == 3 {
                DiversityMetric::Euclidean
            } else {
                DiversityMetric::Cosine
            },
            seed_index: rng.gen_range(0..n),
            trace: false,
        };
        let fast = greedy_diversity_select(&recs, k, &cfg).unwrap();
        let slow = brute_force_diversity_oracle(&recs, k, &cfg).unwrap();
        ensure(fast.selected_ids == slow.selected_ids, || {
            format!(
                "case {case}: {:?} vs {:?}",
                fast.selected_ids, slow.selected_ids
            )
        })?;
        if cfg.metric == DiversityMetric::Cosine {
            let c = rng.gen_range(0.1..10.0);
            let scaled: Vec<EmbeddingRecord> = recs
                .iter()
                .map(|r| {
                    EmbeddingRecord::new(r.id.clone(), r.vector.iter().map(|x| x * c).collect())
                })
                .collect();
            let again = greedy_diversity_select(&scaled, k, &cfg).unwrap();
            ensure(again.selected_ids == fast.selected_ids, || {
                format!("case {case}: scaling by {c} changed the selection")
            })?;
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok("200 instances identical, scaling invariant".into())
}

fn selection_at_scale() -> Outcome {
    let (n, d, k) = (50_000, 512, 2_100);
    let mut rng = StdRng::seed_from_u64(5);
    let recs = random_records(&mut rng, n, d);
    let cfg = DiversityConfig::default();
    let start = Instant::now();
    let sel = greedy_diversity_select(&recs, k, &cfg).unwrap();
    let elapsed = start.elapsed();
    ensure(sel.len() == k, || format!("selected {}", sel.len()))?;
    let mut ids = sel.selected_ids.clone();
    ids.sort();
    ids.dedup();
    ensure(ids.len() == k, || "duplicate ids in selection".into())?;
    within(elapsed, Duration::from_secs(600))?;
    let prefix = &recs[..15];
    for k in [1, 5, 10, 15] {
        let fast = greedy_diversity_select(prefix, k, &cfg).unwrap();
        let slow = brute_force_diversity_oracle(prefix, k, &cfg).unwrap();
        ensure(fast.selected_ids == slow.selected_ids, || {
            format!("prefix mismatch at k={k}")
        })?;
    }
    Ok(format!(
        "N={n} d={d} k={k} in {elapsed:.1?}; 15-record prefix matches"
    ))
}

struct MetricFixture {
    judgments: Vec<(String, String, u32)>,
    ranked: BTreeMap<String, Vec<String>>,
    groups: BTreeMap<String, String>,
}

fn metric_fixture(rng: &mut StdRng) -> MetricFixture {
    let mut f = MetricFixture {
        judgments: Vec::new(),
        ranked: BTreeMap::new(),
        groups: BTreeMap::new(),
    };
    for q in 0..rng.gen_range(1..10) {
        let qid = format!("q{q}");
        let pool = rng.gen_range(1..30);
        for d in 0..pool {
            if rng.gen_bool(0.7) {
                f.judgments
                    .push((qid.clone(), format!("d{d}"), rng.gen_range(0..4)));
            }
        }
        let mut docs: Vec<String> = (0..pool + 5).map(|d| format!("d{d}")).collect();
        docs.shuffle(rng);
        docs.truncate(rng.gen_range(0..=docs.len()));
        if rng.gen_bool(0.9) {
            f.ranked.insert(qid.clone(), docs);
        }
        if rng.gen_bool(0.6) {
            f.groups.insert(qid, format!("g{}", rng.gen_range(0..3)));
        }
    }
    if f.judgments.is_empty() {
        f.judgments.push(("q0".into(), "d0".into(), 1));
    }
    f
}

/// Plain re-derivation of every reported metric from the raw tuples.
fn brute_metrics(f: &MetricFixture) -> BTreeMap<String, f64> {
    let grade = |q: &str, d: &str| {
        f.judgments
            .iter()
            .rev()
            .find(|(jq, jd, _)| jq == q && jd == d)
            .map_or(0, |j| j.2)
    };
    let mut qids: Vec<&String> = f.judgments.iter().map(|j| &j.0).collect();
    qids.sort();
    qids.dedup();
    let empty = Vec::new();
    let mut out = BTreeMap::new();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    for k in [10, 50] {
        let mut vals = Vec::new();
        for q in &qids {
            let ranked = f.ranked.get(*q).unwrap_or(&empty);
            let mut dcg = 0.0;
            for (r, d) in ranked.iter().take(k).enumerate() {
                dcg += grade(q, d) as f64 / ((r + 2) as f64).log2();
            }
            let mut docs: Vec<&String> = f
                .judgments
                .iter()
                .filter(|j| &j.0 == *q)
                .map(|j| &j.1)
                .collect();
            docs.sort();
            docs.dedup();
            let mut ideal: Vec<u32> = docs.iter().map(|d| grade(q, d)).collect();
            ideal.sort_by(|a, b| b.cmp(a));
            let mut idcg = 0.0;
            for (r, g) in ideal.iter().take(k).enumerate() {
                idcg += *g as f64 / ((r + 2) as f64).log2();
            }
            vals.push(if idcg > 0.0 { dcg / idcg } else { 0.0 });
        }
        out.insert(format!("ndcg@{k}"), mean(&vals));
    }
    let mut rr = Vec::new();
    for q in &qids {
        let ranked = f.ranked.get(*q).unwrap_or(&empty);
        let first = ranked.iter().position(|d| grade(q, d) >= 1);
        rr.push(first.map_or(0.0, |p| 1.0 / (p + 1) as f64));
    }
    out.insert("mrr".into(), mean(&rr));
    for k in [1, 3, 5] {
        let mut per_query = Vec::new();
        for q in &qids {
            let ranked = f.ranked.get(*q).unwrap_or(&empty);
            let mut docs: Vec<&String> = f
                .judgments
                .iter()
                .filter(|j| &j.0 == *q)
                .map(|j| &j.1)
                .collect();
            docs.sort();
            docs.dedup();
            let relevant: Vec<&&String> = docs.iter().filter(|d| grade(q, d) >= 1).collect();
            if relevant.is_empty() {
                continue;
            }
            let hits = ranked
                .iter()
                .take(k)
                .filter(|d| relevant.iter().any(|r| **r == *d))
                .count();
            per_query.push(((*q).clone(), hits as f64 / relevant.len() as f64));
        }
        let micro = mean(&per_query.iter().map(|p| p.1).collect::<Vec<_>>());
        let macro_ = if f.groups.is_empty() {
            micro
        } else {
            let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for (q, v) in &per_query {
                let g = f.groups.get(q).cloned().unwrap_or_else(|| q.clone());
                buckets.entry(g).or_default().push(*v);
            }
            mean(&buckets.values().map(|b| mean(b)).collect::<Vec<_>>())
        };
        out.insert(format!("recall@{k}.micro"), micro);
        out.insert(format!("recall@{k}.macro"), macro_);
    }
    out
}

fn library_metrics(f: &MetricFixture) -> BTreeMap<String, f64> {
    let mut qrels = Qrels::default();
    for (q, d, g) in &f.judgments {
        qrels.insert(q, d, *g);
    }
    for (q, g) in &f.groups {
        if qrels.query(q).is_some() {
            qrels.set_group(q, g);
        }
    }
    let mut run = Run::default();
    for (q, docs) in &f.ranked {
        run.insert(q, docs.clone());
    }
    let mut out = BTreeMap::new();
    for k in [10, 50] {
        out.insert(
            format!("ndcg@{k}"),
            ndcg_at_k(&qrels, &run, k, Gain::Linear).mean,
        );
    }
    out.insert("mrr".into(), mrr(&qrels, &run, 1).mean);
    for k in [1, 3, 5] {
        let r = recall_at_k(&qrels, &run, k, 1);
        out.insert(format!("recall@{k}.micro"), r.micro);
        out.insert(format!("recall@{k}.macro"), r.macro_);
    }
    out
}

fn metric_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let mut f = metric_fixture(&mut rng);
        // Groups for queries without judgments never reach the metrics.
        let judged: Vec<String> = f.judgments.iter().map(|j| j.0.clone()).collect();
        f.groups.retain(|q, _| judged.contains(q));
        let want = brute_metrics(&f);
        let got = library_metrics(&f);
        for (name, w) in &want {
            let err = (got[name] - w).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || {
                format!("case {case} {name}: {} vs {w}", got[name])
            })?;
        }
    }
    let mut qrels = Qrels::default();
    qrels.insert("q", "d1", 3);
    qrels.insert("q", "d2", 1);
    let mut run = Run::default();
    run.insert("q", vec!["d2".into(), "d1".into()]);
    let got = ndcg_at_k(&qrels, &run, 10, Gain::Linear).mean;
    let l = 3f64.log2();
    let want = (1.0 + 3.0 / l) / (3.0 + 1.0 / l);
    ensure((got - want).abs() < 1e-9, || {
        format!("hand fixture {got} vs {want}")
    })?;
    Ok(format!(
        "100 fixtures, max deviation {worst:.1e}; hand fixture {got:.12}"
    ))
}

fn fuzz_string(rng: &mut StdRng) -> String {
    const PIECES: &[&str] = &[
        "[",
        "]",
        ">",
        " > ",
        " ",
        "\n",
        "-",
        "0",
        "1",
        "2",
        "3",
        "7",
        "9",
        "12",
        "99",
        "18446744073709551616",
        "ranking",
        "passage",
        "é",
        "【",
        "】",
        "[[",
        "]]",
        ",",
    ];
    let len = rng.gen_range(0..40);
    let mut s = String::new();
    for _ in 0..len {
        match rng.gen_range(0..10) {
            0..=5 => s.push_str(PIECES.choose(rng).unwrap()),
            6..=8 => {
                let _ = write!(s, "[{}]", rng.gen_range(0..40));
            }
            _ => s.push(char::from_u32(rng.gen_range(0..0x3000)).unwrap_or('?')),
        }
    }
    s
}

fn parser_totality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let (mut parsed, mut rejected) = (0, 0);
    for i in 0..10_000 {
        let raw = fuzz_string(&mut rng);
        let n = rng.gen_range(1..=30);
        match parse_ranking(&raw, n) {
            Ok((perm, _)) => {
                let order: Vec<i64> = perm.order().iter().map(|&x| x as i64).collect();
                ensure(
                    perm.len() == n && validate_permutation(&order, n).is_ok(),
                    || format!("string {i} {raw:?} gave {perm}"),
                )?;
                parsed += 1;
            }
            Err(_) => rejected += 1,
        }
    }
    for n in 1..=40 {
        for _ in 0..25 {
            let p = random_perm(&mut rng, n);
            let (back, log) = parse_ranking(&render_ranking(&p), n)
                .map_err(|e| format!("round trip of {p} failed: {e:?}"))?;
            ensure(back == p && log.is_empty(), || {
                format!("round trip changed {p}")
            })?;
        }
    }
    Ok(format!(
        "{parsed} repaired or clean, {rejected} unparseable; 1000 round trips"
    ))
}

fn cli() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_listrank"));
    cmd.env("RUST_LOG", "error");
    cmd
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = cli().args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "listrank {} exited {:?}: {}",
            args.first().unwrap_or(&""),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn end_to_end_rerank() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let mut rng = StdRng::seed_from_u64(8);
    let mut qrels = Qrels::default();
    let mut entries = Vec::new();
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    for q in 0..50 {
        let qid = format!("q{q:02}");
        queries.push(to_json_line(&Query::new(qid.clone(), format!("topic {q}"))));
        let mut grades: Vec<u32> = (0..100).collect();
        grades.shuffle(&mut rng);
        for (c, g) in grades.iter().enumerate() {
            let doc = format!("{qid}-d{c:03}");
            qrels.insert(&qid, &doc, *g);
            docs.push(to_json_line(&Document::text(
                doc.clone(),
                format!("passage {c} for {qid}"),
            )));
            entries.push(RunEntry {
                query_id: qid.clone(),
                doc_id: doc,
                rank: c + 1,
                score: (100 - c) as f64,
                tag: "first".into(),
            });
        }
    }
    write_lines(&p("queries.jsonl"), queries);
    write_lines(&p("corpus.jsonl"), docs);
    write_qrels(&qrels, &p("qrels.txt")).map_err(|e| e.to_string())?;
    write_run(&entries, &p("first.run")).map_err(|e| e.to_string())?;
    let s = |name: &str| p(name).to_string_lossy().into_owned();

    let common = [
        "--run",
        &s("first.run"),
        "--queries",
        &s("queries.jsonl"),
        "--corpus",
        &s("corpus.jsonl"),
    ];
    let mut args = vec!["rerank", "--listwise", "--backend", "mock:oracle"];
    let qrels_path = s("qrels.txt");
    let oracle_out = s("oracle.run");
    args.extend(["--oracle-qrels", &qrels_path, "--out", &oracle_out]);
    args.extend(common);
    run_cli(&args)?;
    let report_path = s("report.json");
    run_cli(&[
        "eval",
        "--qrels",
        &qrels_path,
        "--run",
        &oracle_out,
        "--out",
        &report_path,
    ])?;
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let ndcg10 = report["ndcg"]["@10"]["mean"]
        .as_f64()
        .ok_or("report lacks nDCG@10")?;
    ensure(ndcg10 == 1.0, || format!("nDCG@10 = {ndcg10}"))?;

    let identity_out = s("identity.run");
    let mut args = vec![
        "rerank",
        "--listwise",
        "--backend",
        "mock:identity",
        "--out",
        &identity_out,
    ];
    args.extend(common);
    run_cli(&args)?;
    let before: Vec<(String, String)> = entries
        .iter()
        .map(|e| (e.query_id.clone(), e.doc_id.clone()))
        .collect();
    let after: Vec<(String, String)> = read_run(&p("identity.run"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|e| (e.query_id, e.doc_id))
        .collect();
    ensure(before == after, || "identity mock changed the order".into())?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "nDCG@10 = {ndcg10}; identity preserves order ({:.1?})",
        start.elapsed()
    ))
}

fn distill_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut rng = StdRng::seed_from_u64(9);
    let mut corpus = Vec::new();
    let mut corpus_emb = Vec::new();
    for i in 0..60 {
        let id = format!("img{i:03}");
        corpus.push(to_json_line(&Document::hybrid(
            id.clone(),
            format!("caption {i}"),
            format!("https://img.example/{i}.png"),
        )));
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        corpus_emb.push(to_json_line(&EmbeddingRecord::new(id, v)));
    }
    let mut queries = Vec::new();
    let mut query_emb = Vec::new();
    let mut qrels = Qrels::default();
    for q in 0..25 {
        let id = format!("q{q:02}");
        queries.push(to_json_line(&Query::new(id.clone(), format!("find {q}"))));
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        query_emb.push(to_json_line(&EmbeddingRecord::new(id.clone(), v)));
        for i in 0..60 {
            qrels.insert(&id, &format!("img{i:03}"), rng.gen_range(0..4));
        }
    }
    write_lines(Path::new(&p("corpus.jsonl")), corpus);
    write_lines(Path::new(&p("corpus_emb.jsonl")), corpus_emb);
    write_lines(Path::new(&p("queries.jsonl")), queries);
    write_lines(Path::new(&p("query_emb.jsonl")), query_emb);
    write_qrels(&qrels, Path::new(&p("qrels.txt"))).map_err(|e| e.to_string())?;
    fs::write(p("config.json"), r#"{"top_k": 20, "budget": 10, "mode": "multimodal", "window": {"window_size": 8, "stride": 4}}"#)
        .map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    for (run, par) in [("a", "1"), ("b", "3")] {
        let out = p(&format!("labels_{run}.jsonl"));
        let sel = p(&format!("selected_{run}.jsonl"));
        run_cli(&[
            "distill",
            "--config",
            &p("config.json"),
            "--seed",
            "17",
            "--parallelism",
            par,
            "--queries",
            &p("queries.jsonl"),
            "--query-emb",
            &p("query_emb.jsonl"),
            "--corpus",
            &p("corpus.jsonl"),
            "--corpus-emb",
            &p("corpus_emb.jsonl"),
            "--backend",
            "mock:oracle",
            "--oracle-qrels",
            &p("qrels.txt"),
            "--out",
            &out,
            "--selected",
            &sel,
        ])?;
        outputs.push((
            fs::read(&out).map_err(|e| e.to_string())?,
            fs::read(&sel).map_err(|e| e.to_string())?,
        ));
    }
    ensure(outputs[0] == outputs[1], || {
        "label files differ between runs".into()
    })?;
    let lines = outputs[0]
        .0
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .count();
    ensure(lines == 26, || {
        format!("expected manifest + 25 labels, got {lines} lines")
    })?;

    let mut rng = StdRng::seed_from_u64(90);
    for _ in 0..200 {
        let count = rng.gen_range(0..40);
        let labels: Vec<TeacherLabel> = (0..count)
            .map(|i| TeacherLabel {
                query_id: format!("q{}", rng.gen_range(0..1000)),
                candidate_ids: vec!["a".into(), "b".into()],
                teacher_perm: identity_permutation(2),
                confidence: (rng.gen_range(-4..=4) as f64) / 4.0,
                repair_count: i % 3,
                backend_tag: "mock".into(),
            })
            .collect();
        let budget = rng.gen_range(1..50);
        let kept = confidence_filter(labels, budget);
        ensure(kept.len() == budget.min(count), || {
            format!("kept {} of {count} at budget {budget}", kept.len())
        })?;
        ensure(
            kept.windows(2).all(|w| w[0].confidence >= w[1].confidence),
            || "confidence increases".into(),
        )?;
    }
    Ok(format!(
        "{} label bytes identical across runs; filter sizes exact",
        outputs[0].0.len()
    ))
}

const CANON_QRELS: &str = "q1 0 d1 2\nq1 0 d3 0\nq10 0 a 1\nq2 0 x-9 3\n";
const CANON_RUN: &str = "\
q1 Q0 d3 1 4.75 bm25
q1 Q0 d1 2 4.75 bm25
q1 Q0 d8 3 -0.00000015 bm25
q2 Q0 x-9 1 100 run_b
";

fn line_of(err: &EvalError) -> Option<usize> {
    match err {
        EvalError::MalformedLine { line, .. } | EvalError::InvariantViolation { line, .. } => {
            Some(*line)
        }
        _ => None,
    }
}

fn trec_io() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (qp, rp) = (dir.path().join("in.qrels"), dir.path().join("in.run"));
    let (qo, ro) = (dir.path().join("out.qrels"), dir.path().join("out.run"));
    fs::write(&qp, CANON_QRELS).map_err(|e| e.to_string())?;
    fs::write(&rp, CANON_RUN).map_err(|e| e.to_string())?;
    write_qrels(&read_qrels(&qp, true).map_err(|e| e.to_string())?, &qo)
        .map_err(|e| e.to_string())?;
    write_run(&read_run(&rp).map_err(|e| e.to_string())?, &ro).map_err(|e| e.to_string())?;
    ensure(fs::read(&qo).unwrap() == CANON_QRELS.as_bytes(), || {
        "qrels not byte-identical".into()
    })?;
    ensure(fs::read(&ro).unwrap() == CANON_RUN.as_bytes(), || {
        "run not byte-identical".into()
    })?;

    let exp = parse_run("q Q0 d 1 -1.5e-7 t\n").map_err(|e| e.to_string())?;
    ensure(exp[0].score == -0.00000015, || {
        "exponent score misread".into()
    })?;

    let bad_qrels = [
        ("q 0 d 1\nq 0 d\n", 2),
        ("q 0 d x\n", 1),
        ("\n\nq 0 d 1 extra\n", 3),
    ];
    for (text, line) in bad_qrels {
        let err = parse_qrels(text, true)
            .err()
            .ok_or_else(|| format!("accepted {text:?}"))?;
        ensure(line_of(&err) == Some(line), || format!("{text:?}: {err}"))?;
    }
    let bad_runs = [
        ("q Q0 a 1 2 t\nq Q0 b 3 1 t\n", 2),
        ("q Q0 a 1 2 t\nq Q0 b 2 3 t\n", 2),
        ("q Q0 a one 2 t\n", 1),
        ("q Q0 a 1 2 t\n\nq Q0 a 2 1 t\n", 3),
    ];
    for (text, line) in bad_runs {
        let err = parse_run(text)
            .err()
            .ok_or_else(|| format!("accepted {text:?}"))?;
        ensure(line_of(&err) == Some(line), || format!("{text:?}: {err}"))?;
    }
    Ok("round trips byte-exact; 7 malformed inputs located".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "Plackett-Luce mass and loss consistency",
            plackett_luce_consistency,
        ),
        ("loss gradient vs central differences", gradient_check),
        ("uniform-score loss equals ln 6", uniform_score_anchor),
        (
            "greedy selection matches exhaustive replay",
            greedy_equals_oracle,
        ),
        ("selection at 50k x 512, k = 2100", selection_at_scale),
        ("metrics vs brute force", metric_oracle),
        ("ranking parser totality", parser_totality),
        ("end-to-end CLI rerank and eval", end_to_end_rerank),
        ("distillation determinism", distill_determinism),
        ("TREC round trip and error lines", trec_io),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
